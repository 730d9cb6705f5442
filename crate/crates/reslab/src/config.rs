//! Run configurations: JSON schemas (unknown keys rejected) and the
//! `kind:args` shorthand used on the command line.

use crate::error::{Error, Result};
use crate::potential::{ChannelPotential, Potential};
use serde::{Deserialize, Serialize};

fn default_rate() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    1.0
}
fn default_tol_classify() -> f64 {
    1e-6
}
fn default_tol_gs() -> f64 {
    1e-10
}
fn default_c1() -> f64 {
    1.0
}
fn default_tol_picard() -> f64 {
    1e-10
}
fn default_m_min() -> u32 {
    4
}
fn default_m_max() -> u32 {
    40
}
fn default_quad_order() -> usize {
    128
}
fn default_cfl() -> f64 {
    0.9
}
fn default_snapshot_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDecl {
    Exponential {
        amplitude: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    SquareWell {
        v0: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mollify_width: Option<f64>,
    },
    Bargmann {},
    Tabulated {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps0: Option<f64>,
    },
    LinearizedNls {
        p: f64,
        #[serde(default = "default_omega")]
        omega: f64,
        /// "minus" for chi^p, "plus" for p chi^p
        which: String,
    },
    CentrifugalComposite {
        base: Box<PotentialDecl>,
        alpha: f64,
    },
}

impl PotentialDecl {
    pub fn build(&self) -> Result<ChannelPotential> {
        Ok(match self {
            PotentialDecl::CentrifugalComposite { base, alpha } => {
                let inner = base.build()?;
                if inner.alpha != 0.0 {
                    return Err(Error::Config("nested centrifugal composites".into()));
                }
                ChannelPotential::new(inner.base, *alpha)
            }
            other => ChannelPotential::s_wave(other.build_base()?),
        })
    }

    fn build_base(&self) -> Result<Potential> {
        Ok(match self {
            PotentialDecl::Exponential { amplitude, rate } => {
                if *amplitude <= 0.0 || *rate <= 0.0 {
                    return Err(Error::Config("exponential needs amplitude, rate > 0".into()));
                }
                Potential::exponential(*amplitude, *rate)
            }
            PotentialDecl::SquareWell {
                v0,
                a,
                mollify_width,
            } => match mollify_width {
                Some(w) => Potential::mollified_square_well(*v0, *a, *w),
                None => Potential::square_well(*v0, *a),
            },
            PotentialDecl::Bargmann {} => Potential::bargmann_pair().0,
            PotentialDecl::Tabulated { path, eps0 } => {
                Potential::from_table_file(std::path::Path::new(path), *eps0)?
            }
            PotentialDecl::LinearizedNls { p, omega, which } => {
                let gs = crate::ground_state::solve_at(*p, *omega, 1e-10)?;
                let (minus, plus) = crate::potential::make_linearized_potentials(&gs)?;
                match which.as_str() {
                    "minus" => minus,
                    "plus" => plus,
                    other => {
                        return Err(Error::Config(format!(
                            "linearized_nls 'which' must be minus or plus, got {other}"
                        )))
                    }
                }
            }
            PotentialDecl::CentrifugalComposite { .. } => unreachable!(),
        })
    }

    /// Parse the `kind:arg1,arg2[@alpha=x]` shorthand, e.g.
    /// `exponential:1.0`, `square_well:2.4674,1.0`, `bargmann`.
    pub fn parse_shorthand(s: &str) -> Result<PotentialDecl> {
        let (body, alpha) = match s.split_once("@alpha=") {
            Some((b, a)) => (
                b,
                Some(a.parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad alpha in potential shorthand '{s}'"))
                })?),
            ),
            None => (s, None),
        };
        let (kind, args) = body.split_once(':').unwrap_or((body, ""));
        let nums: Vec<&str> = if args.is_empty() {
            vec![]
        } else {
            args.split(',').collect()
        };
        let f = |i: usize| -> Result<f64> {
            nums.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("missing numeric arg {i} in '{s}'")))
        };
        let decl = match kind {
            "exponential" => PotentialDecl::Exponential {
                amplitude: f(0)?,
                rate: f(1).unwrap_or(1.0),
            },
            "square_well" => PotentialDecl::SquareWell {
                v0: f(0)?,
                a: f(1)?,
                mollify_width: f(2).ok(),
            },
            "bargmann" => PotentialDecl::Bargmann {},
            "tabulated" => PotentialDecl::Tabulated {
                path: nums
                    .first()
                    .map(|s| s.trim().to_string())
                    .ok_or_else(|| Error::Config("tabulated needs a path".into()))?,
                eps0: None,
            },
            "linearized_nls" => PotentialDecl::LinearizedNls {
                p: f(0)?,
                omega: f(1).unwrap_or(1.0),
                which: nums
                    .get(2)
                    .map(|s| s.trim().to_string())
                    .unwrap_or_else(|| "minus".into()),
            },
            other => {
                return Err(Error::Config(format!("unknown potential kind '{other}'")))
            }
        };
        Ok(match alpha {
            Some(a) => PotentialDecl::CentrifugalComposite {
                base: Box::new(decl),
                alpha: a,
            },
            None => decl,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub potential: PotentialDecl,
    #[serde(default = "default_tol_classify")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub potential: PotentialDecl,
    #[serde(default = "default_m_min")]
    pub m_min: u32,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeakresConfig {
    pub potential: PotentialDecl,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_tol_picard")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroundstateConfig {
    pub p: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_tol_gs")]
    pub tol: f64,
    /// when present, also fit the mass-law exponent over these omegas
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_curve_omegas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub potential: PotentialDecl,
    pub delta: f64,
    pub rect: RectConfig,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    /// "displacement" or "velocity"
    pub field: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub r_max: f64,
    pub dr: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// "causal" or "sponge"
    pub boundary: String,
    pub data: Vec<BumpConfig>,
    #[serde(default)]
    pub project_ac: bool,
    pub window_t0: f64,
    pub window_t1: f64,
    #[serde(default = "default_snapshot_dt")]
    pub snapshot_dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_examples() {
        let d = PotentialDecl::parse_shorthand("exponential:1.0").unwrap();
        assert_eq!(
            d,
            PotentialDecl::Exponential {
                amplitude: 1.0,
                rate: 1.0
            }
        );
        let d = PotentialDecl::parse_shorthand("square_well:2.4674,1.0").unwrap();
        assert!(matches!(d, PotentialDecl::SquareWell { .. }));
        let d = PotentialDecl::parse_shorthand("exponential:2.0@alpha=1").unwrap();
        assert!(matches!(d, PotentialDecl::CentrifugalComposite { alpha, .. } if alpha == 1.0));
        assert!(PotentialDecl::parse_shorthand("nonsense:1").is_err());
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let cfg = ClassifyConfig {
            potential: PotentialDecl::Exponential {
                amplitude: 1.0,
                rate: 1.0,
            },
            tol: 1e-6,
            seed: Some(7),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ClassifyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let with_unknown = r#"{"potential":{"kind":"bargmann"},"tol":1e-6,"bogus":3}"#;
        assert!(serde_json::from_str::<ClassifyConfig>(with_unknown).is_err());
        let nested_unknown =
            r#"{"potential":{"kind":"exponential","amplitude":1.0,"spurious":2}}"#;
        assert!(serde_json::from_str::<ClassifyConfig>(nested_unknown).is_err());
    }

    #[test]
    fn declarations_build() {
        let decl = PotentialDecl::SquareWell {
            v0: 2.4674,
            a: 1.0,
            mollify_width: None,
        };
        let cp = decl.build().unwrap();
        assert_eq!(cp.alpha, 0.0);
        assert!(cp.base.w(0.5) > 2.0);
        let comp = PotentialDecl::CentrifugalComposite {
            base: Box::new(PotentialDecl::Exponential {
                amplitude: 1.0,
                rate: 1.0,
            }),
            alpha: 2.0,
        };
        let cp = comp.build().unwrap();
        assert_eq!(cp.alpha, 2.0);
    }
}
