//! Radial potentials: evaluators, derivative evaluators, exponential-decay
//! metadata, and the constructors used throughout (exponential, square well,
//! the Bargmann closed-form pair, tabulated files, linearized-NLS pairs,
//! centrifugal composites).

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::interp::CubicHermite;
use std::fmt;
use std::sync::Arc;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exponential-decay metadata: |W(r)| + |W'(r)| <= c_star * exp(-eps0 * r)
/// for r >= r0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayMeta {
    pub eps0: f64,
    pub c_star: f64,
    pub r0: f64,
}

/// Immutable radial potential. Safe to share across threads.
#[derive(Clone)]
pub struct Potential {
    eval: Eval,
    deriv: Eval,
    pub decay: DecayMeta,
    pub bounded_at_origin: bool,
    /// true when W is C^1 on (0, inf)
    pub smooth: bool,
    pub positive: bool,
    pub decreasing: bool,
    pub description: String,
    /// radii where W or W' has a kink or jump; quadrature splits panels here
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("description", &self.description)
            .field("decay", &self.decay)
            .field("bounded_at_origin", &self.bounded_at_origin)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl Potential {
    pub fn w(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn dw(&self, r: f64) -> f64 {
        (self.deriv)(r)
    }

    /// Same potential with the declared decay envelope replaced.
    pub fn with_decay_meta(mut self, decay: DecayMeta) -> Self {
        self.decay = decay;
        self
    }

    /// c * W with metadata scaled accordingly.
    pub fn scaled(&self, c: f64) -> Potential {
        assert!(c > 0.0);
        let e = self.eval.clone();
        let d = self.deriv.clone();
        Potential {
            eval: Arc::new(move |r| c * e(r)),
            deriv: Arc::new(move |r| c * d(r)),
            decay: DecayMeta {
                c_star: c * self.decay.c_star,
                ..self.decay
            },
            description: format!("{} x {}", c, self.description),
            breakpoints: self.breakpoints.clone(),
            ..self.clone()
        }
    }

    /// W(r) = amplitude * exp(-rate * r).
    pub fn exponential(amplitude: f64, rate: f64) -> Potential {
        assert!(amplitude > 0.0 && rate > 0.0);
        Potential {
            eval: Arc::new(move |r| amplitude * (-rate * r).exp()),
            deriv: Arc::new(move |r| -rate * amplitude * (-rate * r).exp()),
            decay: DecayMeta {
                eps0: rate,
                c_star: amplitude * (1.0 + rate),
                r0: 0.0,
            },
            bounded_at_origin: true,
            smooth: true,
            positive: true,
            decreasing: true,
            description: format!("{amplitude}*exp(-{rate}*r)"),
            breakpoints: vec![],
        }
    }

    /// W = V0 on [0, a), 0 beyond. Not C^1: the jump at r = a is recorded as a
    /// breakpoint and the derivative evaluator returns 0 away from it.
    pub fn square_well(v0: f64, a: f64) -> Potential {
        assert!(v0 > 0.0 && a > 0.0);
        Potential {
            eval: Arc::new(move |r| if r < a { v0 } else { 0.0 }),
            deriv: Arc::new(move |_| 0.0),
            decay: DecayMeta {
                eps0: 1.0,
                c_star: v0 + 1.0,
                r0: a,
            },
            bounded_at_origin: true,
            smooth: false,
            positive: false,
            decreasing: true,
            description: format!("square well V0={v0}, a={a}"),
            breakpoints: vec![a],
        }
    }

    /// C^1 smoothing of the square well: the edge is replaced by a smoothstep
    /// transition of the given width centred at r = a.
    pub fn mollified_square_well(v0: f64, a: f64, width: f64) -> Potential {
        assert!(v0 > 0.0 && a > width && width > 0.0);
        let lo = a - 0.5 * width;
        let hi = a + 0.5 * width;
        Potential {
            eval: Arc::new(move |r| {
                if r <= lo {
                    v0
                } else if r >= hi {
                    0.0
                } else {
                    let t = (r - lo) / width;
                    v0 * (1.0 - t * t * (3.0 - 2.0 * t))
                }
            }),
            deriv: Arc::new(move |r| {
                if r <= lo || r >= hi {
                    0.0
                } else {
                    let t = (r - lo) / width;
                    -v0 * 6.0 * t * (1.0 - t) / width
                }
            }),
            decay: DecayMeta {
                eps0: 1.0,
                c_star: v0 + 1.0,
                r0: hi,
            },
            bounded_at_origin: true,
            smooth: true,
            positive: false,
            decreasing: true,
            description: format!("mollified square well V0={v0}, a={a}, width={width}"),
            breakpoints: vec![lo, hi],
        }
    }

    /// The closed-form fixture W(r) = e^{-r}/(1 - e^{-r}) = 1/(e^r - 1),
    /// together with its exact bounded zero-energy solution u = 1 - e^{-r}.
    /// W is unbounded at the origin.
    pub fn bargmann_pair() -> (Potential, BargmannReference) {
        let p = Potential {
            eval: Arc::new(|r| (-r).exp() / (-f64::exp_m1(-r))),
            deriv: Arc::new(|r| {
                let d = f64::exp_m1(-r);
                -(-r).exp() / (d * d)
            }),
            decay: DecayMeta {
                eps0: 1.0,
                c_star: 4.2,
                r0: 1.0,
            },
            bounded_at_origin: false,
            smooth: true,
            positive: true,
            decreasing: true,
            description: "exp(-r)/(1-exp(-r))".into(),
            breakpoints: vec![],
        };
        (p, BargmannReference)
    }

    /// Tabulated potential: strictly increasing radii, monotone-cubic
    /// interpolation inside the table, exponential tail beyond the last
    /// sample, constant extension below the first.
    pub fn from_table(rs: Vec<f64>, ws: Vec<f64>, eps0: Option<f64>) -> Result<Potential> {
        if rs.len() < 4 || rs.len() != ws.len() {
            return Err(Error::Config(
                "tabulated potential needs at least 4 (r, W) rows".into(),
            ));
        }
        if !rs.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config("tabulated radii must be strictly increasing".into()));
        }
        if ws.iter().any(|w| !w.is_finite()) {
            return Err(Error::Evaluation {
                r: f64::NAN,
                what: "non-finite tabulated value".into(),
            });
        }
        let r_end = *rs.last().unwrap();
        let w_end = *ws.last().unwrap();
        let eps0 = match eps0 {
            Some(e) => e,
            None => fit_tail_rate(&rs, &ws)?,
        };
        let positive = ws.iter().all(|&w| w > 0.0) && w_end > 0.0;
        let decreasing = ws.windows(2).all(|w| w[1] <= w[0]);
        let interp = Arc::new(CubicHermite::pchip(rs.clone(), ws.clone()));
        let i2 = interp.clone();
        let r_first = rs[0];
        let w_first = ws[0];
        let eval: Eval = Arc::new(move |r| {
            if r <= r_first {
                w_first
            } else if r <= r_end {
                interp.value(r)
            } else {
                w_end * (-eps0 * (r - r_end)).exp()
            }
        });
        let deriv: Eval = Arc::new(move |r| {
            if r <= r_first {
                0.0
            } else if r <= r_end {
                i2.eval(r).1
            } else {
                -eps0 * w_end * (-eps0 * (r - r_end)).exp()
            }
        });
        // conservative declared envelope from dense sampling
        let mut c_star: f64 = 0.0;
        let grid = crate::grid::logspace(r_first.max(1e-3), r_end + 30.0 / eps0, 600);
        for &r in &grid {
            c_star = c_star.max((eval(r).abs() + deriv(r).abs()) * (eps0 * r).exp());
        }
        Ok(Potential {
            eval,
            deriv,
            decay: DecayMeta {
                eps0,
                c_star: 1.05 * c_star,
                r0: r_first,
            },
            bounded_at_origin: true,
            smooth: true,
            positive,
            decreasing,
            description: format!("tabulated ({} rows)", rs.len()),
            breakpoints: vec![r_first, r_end],
        })
    }

    /// Read a `r,W` CSV (header required) into a tabulated potential.
    pub fn from_table_file(path: &std::path::Path, eps0: Option<f64>) -> Result<Potential> {
        let text = std::fs::read_to_string(path)?;
        let mut rs = Vec::new();
        let mut ws = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 {
                if line.replace(' ', "") != "r,W" {
                    return Err(Error::Config(format!(
                        "expected header 'r,W' in {}, got '{line}'",
                        path.display()
                    )));
                }
                continue;
            }
            let mut parts = line.split(',');
            let r: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad row {i} in {}", path.display())))?;
            let w: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad row {i} in {}", path.display())))?;
            rs.push(r);
            ws.push(w);
        }
        Potential::from_table(rs, ws, eps0)
    }

    /// Sampled check of the declared envelope. `holds` is true when
    /// |W| + |W'| <= c_star * e^{-eps0 r} at every grid point;
    /// `max_violation` is the largest ratio of the left side to the bound.
    pub fn verify_decay_bounds(&self, grid: &[f64]) -> Result<DecayReport> {
        if !grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Precondition("grid must be strictly increasing".into()));
        }
        if grid.first().is_some_and(|&r| r < self.decay.r0) {
            return Err(Error::Precondition(format!(
                "grid must start at or beyond r0 = {}",
                self.decay.r0
            )));
        }
        let mut max_ratio: f64 = 0.0;
        let mut argmax = f64::NAN;
        for &r in grid {
            let lhs = self.w(r).abs() + self.dw(r).abs();
            if !lhs.is_finite() {
                return Err(Error::Evaluation {
                    r,
                    what: "potential or derivative non-finite".into(),
                });
            }
            let bound = self.decay.c_star * (-self.decay.eps0 * r).exp();
            let ratio = if lhs == 0.0 { 0.0 } else { lhs / bound };
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = r;
            }
        }
        Ok(DecayReport {
            max_violation: max_ratio,
            holds: max_ratio <= 1.0 + 1e-12,
            argmax_r: argmax,
        })
    }

    /// Sampled monotonicity check for potentials declared decreasing.
    pub fn is_nonincreasing_on(&self, grid: &[f64]) -> bool {
        grid.windows(2)
            .all(|w| self.w(w[1]) <= self.w(w[0]) + 1e-14 * (1.0 + self.w(w[0]).abs()))
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayReport {
    pub max_violation: f64,
    pub holds: bool,
    pub argmax_r: f64,
}

/// The exact solution paired with the Bargmann potential: u = 1 - e^{-r},
/// which solves u'' + W u = 0 with u(0) = 0 and u -> 1.
#[derive(Debug, Clone, Copy)]
pub struct BargmannReference;

impl BargmannReference {
    pub fn u(&self, r: f64) -> f64 {
        -f64::exp_m1(-r)
    }

    pub fn du(&self, r: f64) -> f64 {
        (-r).exp()
    }

    /// |u'' + W u| at r, in exact arithmetic zero.
    pub fn residual(&self, p: &Potential, r: f64) -> f64 {
        let upp = -(-r).exp();
        (upp + p.w(r) * self.u(r)).abs()
    }
}

/// Perturbations of -Delta + omega entering the linearized operators around
/// the ground state: W_minus = chi^p and W_plus = p * chi^p.
pub fn make_linearized_potentials(gs: &GroundState) -> Result<(Potential, Potential)> {
    if !gs.converged {
        return Err(Error::StaleInput(
            "ground state profile not converged to tolerance".into(),
        ));
    }
    Ok((linearized(gs, 1.0, "minus"), linearized(gs, gs.p, "plus")))
}

fn linearized(gs: &GroundState, mult: f64, tag: &str) -> Potential {
    let p = gs.p;
    let g1 = gs.interpolant();
    let g2 = gs.interpolant();
    let eval: Eval = Arc::new(move |r| {
        let chi = g1.chi(r);
        mult * chi.powf(p)
    });
    let deriv: Eval = Arc::new(move |r| {
        let (chi, dchi) = g2.chi_dchi(r);
        mult * p * chi.powf(p - 1.0) * dchi
    });
    // decay rate p*sqrt(omega) with a small slack; envelope from sampling
    let eps0 = 0.98 * p * gs.omega.sqrt();
    let r0 = 1.0;
    let mut c_star: f64 = 0.0;
    for &r in crate::grid::logspace(r0, gs.r_end() + 10.0, 400).iter() {
        c_star = c_star.max((eval(r).abs() + deriv(r).abs()) * (eps0 * r).exp());
    }
    Potential {
        eval,
        deriv,
        decay: DecayMeta {
            eps0,
            c_star: 1.05 * c_star,
            r0,
        },
        bounded_at_origin: true,
        smooth: true,
        positive: true,
        decreasing: true,
        description: format!("L_{tag} perturbation: {} * chi^{p} (p={p}, omega={})", mult, gs.omega),
        breakpoints: vec![],
    }
}

fn fit_tail_rate(rs: &[f64], ws: &[f64]) -> Result<f64> {
    // log-linear fit over the last decade of positive samples
    let r_end = *rs.last().unwrap();
    let lo = r_end / 10.0;
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .zip(ws)
        .filter(|(&r, &w)| r >= lo && w > 0.0)
        .map(|(&r, &w)| (r, w.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DecayAssumption(
            "cannot fit a tail rate: too few positive samples in the last decade".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if slope >= -1e-8 {
        return Err(Error::DecayAssumption(format!(
            "tabulated tail is not decaying (fitted log-slope {slope:.3e})"
        )));
    }
    Ok(-slope)
}

/// A potential in a fixed angular channel: the half-line equation sees
/// W2(r) - alpha*(alpha+1)/r^2.
#[derive(Debug, Clone)]
pub struct ChannelPotential {
    pub base: Potential,
    pub alpha: f64,
}

impl ChannelPotential {
    pub fn new(base: Potential, alpha: f64) -> Self {
        assert!(alpha >= 0.0, "alpha must be non-negative");
        ChannelPotential { base, alpha }
    }

    pub fn s_wave(base: Potential) -> Self {
        ChannelPotential { base, alpha: 0.0 }
    }

    /// Total half-line potential W2(r) - alpha(alpha+1)/r^2.
    pub fn w_total(&self, r: f64) -> f64 {
        if self.alpha == 0.0 {
            self.base.w(r)
        } else {
            self.base.w(r) - self.alpha * (self.alpha + 1.0) / (r * r)
        }
    }

    pub fn dw_total(&self, r: f64) -> f64 {
        if self.alpha == 0.0 {
            self.base.dw(r)
        } else {
            self.base.dw(r) + 2.0 * self.alpha * (self.alpha + 1.0) / (r * r * r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_05_to_20() -> Vec<f64> {
        (0..40).map(|i| 0.5 + 0.5 * i as f64).collect()
    }

    #[test]
    fn decay_bound_exact_equality_holds() {
        let p = Potential::exponential(1.0, 1.0); // C* = 2 exactly
        let rep = p.verify_decay_bounds(&grid_05_to_20()).unwrap();
        assert!(rep.holds, "ratio {}", rep.max_violation);
        assert_relative_eq!(rep.max_violation, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn decay_bound_understated_c_star_fails_with_ratio_two() {
        let p = Potential::exponential(1.0, 1.0).with_decay_meta(DecayMeta {
            eps0: 1.0,
            c_star: 1.0,
            r0: 0.0,
        });
        let rep = p.verify_decay_bounds(&grid_05_to_20()).unwrap();
        assert!(!rep.holds);
        assert_relative_eq!(rep.max_violation, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn polynomial_tail_beats_declared_exponential() {
        // W = (1+r)^{-2} declared with eps0 = 0.5 fails for large r
        let p = Potential {
            eval: Arc::new(|r| (1.0 + r).powi(-2)),
            deriv: Arc::new(|r| -2.0 * (1.0 + r).powi(-3)),
            decay: DecayMeta {
                eps0: 0.5,
                c_star: 100.0,
                r0: 0.0,
            },
            bounded_at_origin: true,
            smooth: true,
            positive: true,
            decreasing: true,
            description: "inverse square".into(),
            breakpoints: vec![],
        };
        let rep = p.verify_decay_bounds(&grid_05_to_20()).unwrap();
        assert!(!rep.holds);
    }

    #[test]
    fn square_well_values_and_zero_tail() {
        let v0 = (std::f64::consts::FRAC_PI_2).powi(2);
        let p = Potential::square_well(v0, 1.0);
        assert_relative_eq!(p.w(0.5), 2.4674011002723395, max_relative = 1e-12);
        assert_eq!(Potential::square_well(1.0, 1.0).w(2.0), 0.0);
        let p = Potential::square_well(1.0, 1.0).with_decay_meta(DecayMeta {
            eps0: 1.0,
            c_star: 2.0,
            r0: 1.5,
        });
        let grid: Vec<f64> = (0..20).map(|i| 1.5 + i as f64).collect();
        assert!(p.verify_decay_bounds(&grid).unwrap().holds);
    }

    #[test]
    fn bargmann_identities() {
        let (p, u) = Potential::bargmann_pair();
        assert!(!p.bounded_at_origin);
        assert_relative_eq!(p.w(1.0), 0.5819767068693265, max_relative = 1e-12);
        for r in [0.1, 1.0, 5.0] {
            assert!(u.residual(&p, r) < 1e-15, "residual at {r}");
        }
        assert!((u.u(40.0) - 1.0).abs() < 1e-15);
        assert!(u.du(40.0) < 1e-15);
        // residual over the wide range required of the fixture
        let grid = crate::grid::logspace(1e-3, 30.0, 300);
        let max_res = grid.iter().map(|&r| u.residual(&p, r)).fold(0.0, f64::max);
        assert!(max_res < 1e-12, "max residual {max_res}");
    }

    #[test]
    fn constructed_potentials_satisfy_their_own_envelope() {
        let grid = crate::grid::log_grid_per_decade(1e-2, 40.0, 60, 200);
        for p in [
            Potential::exponential(1.0, 1.0),
            Potential::exponential(0.01, 1.0),
            Potential::exponential(3.0, 0.5),
            Potential::mollified_square_well(2.4674, 1.0, 1e-3),
        ] {
            let tail: Vec<f64> = grid.iter().copied().filter(|&r| r >= p.decay.r0).collect();
            let rep = p.verify_decay_bounds(&tail).unwrap();
            assert!(rep.holds, "{}: ratio {}", p.description, rep.max_violation);
        }
    }

    #[test]
    fn channel_total_matches_direct_arithmetic() {
        let cp = ChannelPotential::new(Potential::exponential(1.0, 1.0), 2.0);
        for r in [0.3, 1.0, 7.5] {
            let direct = (-r as f64).exp() - 2.0 * 3.0 / (r * r);
            assert_eq!(cp.w_total(r), direct);
        }
        assert_eq!(
            ChannelPotential::s_wave(Potential::exponential(1.0, 1.0)).w_total(2.0),
            (-2.0f64).exp()
        );
    }

    #[test]
    fn tabulated_round_trip_and_tail() {
        let rs = crate::grid::linspace(0.05, 12.0, 120);
        let ws: Vec<f64> = rs.iter().map(|&r| 2.0 * (-0.7 * r).exp()).collect();
        let p = Potential::from_table(rs, ws, None).unwrap();
        assert_relative_eq!(p.w(3.3), 2.0 * (-0.7f64 * 3.3).exp(), max_relative = 1e-6);
        // fitted tail rate close to 0.7 and decaying extension beyond the table
        assert_relative_eq!(p.decay.eps0, 0.7, max_relative = 1e-3);
        assert!(p.w(20.0) < p.w(12.0));
        assert!(p.is_nonincreasing_on(&crate::grid::linspace(0.05, 25.0, 300)));
    }
}
