//! Positivity-certificate machinery: the piecewise test functions
//! (g'' = r^M below r0 = M^2, exponential beyond), the weighted functional
//! Phi = Phi_1 + 2 g W2 + G W2' + g''/2, region checks on both sides of
//! r0, and the certificate search over integer M.

use crate::error::{Error, MarginTraceEntry, Result};
use crate::grid::log_grid_per_decade;
use crate::potential::ChannelPotential;
use crate::quad::Rule;
use crate::radial_ode::{asymptotic_fit, classify_zero_energy, integrate_radial, RadialSolution, ZeroEnergyKind};
use num_complex::Complex64;

/// Piecewise test functions with closed forms on both sides of r0 = M^2.
/// Below r0: g'' = r^M, g = r^{M+2}/((M+2)(M+1)),
/// G = r^{M+3}/((M+3)(M+2)(M+1)). Beyond r0: g'' = e^{-delta r} with g', g,
/// G continued by the integration constants (g(0) = g'(0) = 0 throughout).
#[derive(Debug, Clone, Copy)]
pub struct TestFunctions {
    pub m: u32,
    pub delta: f64,
    pub r0: f64,
    g_r0: f64,
    gp_r0: f64,
    gg_r0: f64,
    e0: f64,
}

impl TestFunctions {
    pub fn new(m: u32, delta: f64) -> Self {
        assert!(m >= 1 && delta > 0.0);
        let mf = m as f64;
        let r0 = mf * mf;
        let g_r0 = r0.powf(mf + 2.0) / ((mf + 2.0) * (mf + 1.0));
        let gp_r0 = r0.powf(mf + 1.0) / (mf + 1.0);
        let gg_r0 = r0.powf(mf + 3.0) / ((mf + 3.0) * (mf + 2.0) * (mf + 1.0));
        TestFunctions {
            m,
            delta,
            r0,
            g_r0,
            gp_r0,
            gg_r0,
            e0: (-delta * r0).exp(),
        }
    }

    /// Default delta = eps0 / 2 for the potential at hand.
    pub fn for_potential(m: u32, cp: &ChannelPotential) -> Self {
        TestFunctions::new(m, 0.5 * cp.base.decay.eps0)
    }

    pub fn g_pp(&self, r: f64) -> f64 {
        if r < self.r0 {
            r.powi(self.m as i32)
        } else {
            (-self.delta * r).exp()
        }
    }

    pub fn g_p(&self, r: f64) -> f64 {
        let mf = self.m as f64;
        if r < self.r0 {
            r.powf(mf + 1.0) / (mf + 1.0)
        } else {
            self.gp_r0 + (self.e0 - (-self.delta * r).exp()) / self.delta
        }
    }

    pub fn g(&self, r: f64) -> f64 {
        let mf = self.m as f64;
        if r < self.r0 {
            r.powf(mf + 2.0) / ((mf + 2.0) * (mf + 1.0))
        } else {
            let x = r - self.r0;
            let d = self.delta;
            self.g_r0 + self.gp_r0 * x + x * self.e0 / d + ((-d * r).exp() - self.e0) / (d * d)
        }
    }

    /// G(r) = int_0^r g.
    pub fn g_big(&self, r: f64) -> f64 {
        let mf = self.m as f64;
        if r < self.r0 {
            r.powf(mf + 3.0) / ((mf + 3.0) * (mf + 2.0) * (mf + 1.0))
        } else {
            let x = r - self.r0;
            let d = self.delta;
            self.gg_r0
                + self.g_r0 * x
                + (self.gp_r0 + self.e0 / d) * 0.5 * x * x
                + (self.e0 - (-d * r).exp()) / (d * d * d)
                - self.e0 * x / (d * d)
        }
    }

    /// Limit of g'(r) as r -> infinity (nonzero for this family).
    pub fn g_p_at_infinity(&self) -> f64 {
        self.gp_r0 + self.e0 / self.delta
    }
}

/// Phi(r) = Phi_1(r) + 2 g(r) W2(r) + G(r) W2'(r) + g''(r)/2 with
/// Phi_1 = -alpha(alpha+1) (2g/r^2 - 2G/r^3); Phi_1 vanishes at alpha = 0.
pub fn phi(r: f64, cp: &ChannelPotential, tf: &TestFunctions) -> f64 {
    let g = tf.g(r);
    let gg = tf.g_big(r);
    let mut phi = 2.0 * g * cp.base.w(r) + gg * cp.base.dw(r) + 0.5 * tf.g_pp(r);
    if cp.alpha > 0.0 {
        let a = cp.alpha * (cp.alpha + 1.0);
        phi -= a * (2.0 * g / (r * r) - 2.0 * gg / (r * r * r));
    }
    phi
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RegionReport {
    /// min over the grid of the absolute margin
    pub margin: f64,
    /// min of the margin normalised by the dominant scale
    pub rel_margin: f64,
    pub argmin_r: f64,
    /// min of the proof-side envelope (attribution aid, may be negative
    /// when the direct margin is fine)
    pub proof_envelope_margin: f64,
}

/// Middle region (0, M^2): margin of Phi - 2 g W2 over the grid, plus the
/// proof bound 1 - 2 C* r^3 e^{-eps0 r}/((M+3)(M+2)(M+1)).
pub fn check_middle_region(cp: &ChannelPotential, tf: &TestFunctions, grid: &[f64]) -> RegionReport {
    let mf = tf.m as f64;
    let denom = (mf + 3.0) * (mf + 2.0) * (mf + 1.0);
    let c_star = cp.base.decay.c_star;
    let eps0 = cp.base.decay.eps0;
    let mut margin = f64::INFINITY;
    let mut rel = f64::INFINITY;
    let mut argmin = f64::NAN;
    let mut envelope = f64::INFINITY;
    for &r in grid {
        if r >= tf.r0 {
            continue;
        }
        let m = phi(r, cp, tf) - 2.0 * tf.g(r) * cp.base.w(r);
        if m < margin {
            margin = m;
            argmin = r;
        }
        rel = rel.min(m / (0.5 * tf.g_pp(r)).max(f64::MIN_POSITIVE));
        envelope = envelope.min(1.0 - 2.0 * c_star * r.powi(3) * (-eps0 * r).exp() / denom);
    }
    RegionReport {
        margin,
        rel_margin: rel,
        argmin_r: argmin,
        proof_envelope_margin: envelope,
    }
}

/// Large region (M^2, R_out): margin of 2 e^{-eps0 r/2} - |Phi| and the
/// proof envelope 4 C* e^{-eps0 r} r^2 r^{sqrt r}/delta + e^{-delta r}.
pub fn check_large_region(cp: &ChannelPotential, tf: &TestFunctions, grid: &[f64]) -> RegionReport {
    let eps0 = cp.base.decay.eps0;
    let c_star = cp.base.decay.c_star;
    let mut margin = f64::INFINITY;
    let mut rel = f64::INFINITY;
    let mut argmin = f64::NAN;
    let mut envelope = f64::INFINITY;
    for &r in grid {
        if r <= tf.r0 {
            continue;
        }
        let bound = 2.0 * (-0.5 * eps0 * r).exp();
        let p = phi(r, cp, tf).abs();
        let m = bound - p;
        if m < margin {
            margin = m;
            argmin = r;
        }
        if bound > 1e-290 {
            rel = rel.min(1.0 - p / bound);
        }
        // log-space proof envelope to survive huge exponents
        let log_env = (4.0 * c_star / tf.delta).ln() - eps0 * r + 2.0 * r.ln() + r.sqrt() * r.ln();
        let env = log_env.exp() + (-tf.delta * r).exp();
        envelope = envelope.min(bound - env);
    }
    RegionReport {
        margin,
        rel_margin: rel,
        argmin_r: argmin,
        proof_envelope_margin: envelope,
    }
}

fn middle_grid(tf: &TestFunctions) -> Vec<f64> {
    log_grid_per_decade(1e-4, tf.r0 * (1.0 - 1e-12), 64, 400)
}

fn large_grid(cp: &ChannelPotential, tf: &TestFunctions) -> Vec<f64> {
    let r_out = tf.r0 + 60.0 / cp.base.decay.eps0;
    log_grid_per_decade(tf.r0 * (1.0 + 1e-12), r_out, 64, 400)
}

/// |int_0^inf Phi u^2| / int_0^inf |Phi| u^2 for a bounded zero-energy
/// solution, by composite quadrature with `max_panel` panel width.
///
/// For solutions with a nonzero limit C0 the numerator converges to the
/// boundary contribution g'(inf) C0^2 / 2 of the underlying integration by
/// parts, so the ratio saturates near 1 rather than vanishing; the returned
/// value reports exactly what the displayed identity gives.
pub fn verify_phi_identity(
    sol: &RadialSolution,
    cp: &ChannelPotential,
    tf: &TestFunctions,
    max_panel: f64,
) -> Result<f64> {
    let sup = sol.sup_abs();
    if sup == 0.0 {
        return Ok(0.0);
    }
    let fit = asymptotic_fit(sol, cp)?;
    if cp.alpha == 0.0 && fit.c1.abs() > 0.01 * fit.c0.abs().max(1e-300) {
        return Err(Error::Precondition(format!(
            "solution grows (C1 = {:.3e} vs C0 = {:.3e}); the identity needs a bounded solution",
            fit.c1, fit.c0
        )));
    }
    let interp = sol.real_interpolant();
    let r_max = sol.r_max();
    let u_at = |r: f64| -> f64 {
        if r <= r_max {
            interp.value(r)
        } else {
            fit.c0
        }
    };
    let r_out = tf.r0 + 60.0 / cp.base.decay.eps0;
    let mut breaks = vec![tf.r0];
    breaks.extend_from_slice(&cp.base.breakpoints);
    breaks.push(r_max);
    let rule = Rule::composite(1e-9, r_out, &breaks, 12, max_panel);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let u2 = u_at(x).powi(2);
        let p = phi(x, cp, tf);
        num += w * p * u2;
        den += w * p.abs() * u2;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num.abs() / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    Certified,
    Failed,
    Inapplicable,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PhiCertificate {
    pub m_star: Option<u32>,
    pub delta: f64,
    pub middle_margin: f64,
    pub large_margin: f64,
    pub middle_rel_margin: f64,
    pub large_rel_margin: f64,
    /// W2(1) u(1)^2 - 2 S^2 e^{-eps0 M^2/2}/eps0 for the integrated candidate
    pub contradiction_gap: f64,
    pub sup_u: f64,
    pub verdict: CertificateVerdict,
    pub inapplicable_reason: Option<String>,
    pub classification: Option<ZeroEnergyKind>,
    pub margins_trace: Vec<MarginTraceEntry>,
}

/// Search integer M in `m_range` until both region margins are non-negative,
/// then evaluate the contradiction gap with the integrated zero-energy
/// candidate. A strong-resonance classification forces `Failed`.
pub fn certify_no_strong_resonance(
    cp: &ChannelPotential,
    m_range: std::ops::RangeInclusive<u32>,
) -> Result<PhiCertificate> {
    let base = &cp.base;
    let mut why = None;
    if !base.bounded_at_origin {
        why = Some("potential unbounded at the origin".to_string());
    } else if !base.smooth {
        why = Some("potential is not C^1".to_string());
    } else if !base.positive {
        why = Some("potential not declared positive".to_string());
    } else if !base.decreasing {
        why = Some("potential not declared decreasing".to_string());
    }
    if let Some(reason) = why {
        return Ok(PhiCertificate {
            m_star: None,
            delta: 0.5 * base.decay.eps0,
            middle_margin: f64::NAN,
            large_margin: f64::NAN,
            middle_rel_margin: f64::NAN,
            large_rel_margin: f64::NAN,
            contradiction_gap: f64::NAN,
            sup_u: f64::NAN,
            verdict: CertificateVerdict::Inapplicable,
            inapplicable_reason: Some(reason),
            classification: None,
            margins_trace: vec![],
        });
    }

    let verdict_cls = classify_zero_energy(cp, 1e-6)?;
    let eps0 = base.decay.eps0;
    let mut trace = Vec::new();
    let mut found: Option<(u32, RegionReport, RegionReport)> = None;
    for m in m_range.clone() {
        let tf = TestFunctions::for_potential(m, cp);
        let mid = check_middle_region(cp, &tf, &middle_grid(&tf));
        let large = check_large_region(cp, &tf, &large_grid(cp, &tf));
        trace.push(MarginTraceEntry {
            m,
            middle_margin: mid.margin,
            large_margin: large.margin,
        });
        if mid.margin >= 0.0 && large.margin >= 0.0 {
            found = Some((m, mid, large));
            break;
        }
    }
    let Some((m_star, mid, large)) = found else {
        return Err(Error::Inconclusive {
            m_min: *m_range.start(),
            m_max: *m_range.end(),
            trace,
        });
    };

    let r_max = 30f64.max(20.0 / eps0);
    let sol = integrate_radial(cp, Complex64::ZERO, r_max, 1e-10)?;
    let sup = sol.sup_abs();
    let interp = sol.real_interpolant();
    let u1 = interp.value(1.0);
    let m2 = (m_star as f64) * (m_star as f64);
    let gap = base.w(1.0) * u1 * u1 - 2.0 * sup * sup * (-0.5 * eps0 * m2).exp() / eps0;

    let verdict = if verdict_cls.kind == ZeroEnergyKind::StrongResonance {
        CertificateVerdict::Failed
    } else if gap > 0.0 {
        CertificateVerdict::Certified
    } else {
        CertificateVerdict::Failed
    };
    Ok(PhiCertificate {
        m_star: Some(m_star),
        delta: 0.5 * eps0,
        middle_margin: mid.margin,
        large_margin: large.margin,
        middle_rel_margin: mid.rel_margin,
        large_rel_margin: large.rel_margin,
        contradiction_gap: gap,
        sup_u: sup,
        verdict,
        inapplicable_reason: None,
        classification: Some(verdict_cls.kind),
        margins_trace: trace,
    })
}

/// (r, Phi, 2gW, large-region bound) rows for plotting.
pub fn phi_profile_csv(
    cp: &ChannelPotential,
    tf: &TestFunctions,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "r,phi,two_g_w,bound")?;
    let eps0 = cp.base.decay.eps0;
    let grid = log_grid_per_decade(1e-4, tf.r0 + 60.0 / eps0, 64, 600);
    for &r in &grid {
        writeln!(
            f,
            "{},{},{},{}",
            r,
            phi(r, cp, tf),
            2.0 * tf.g(r) * cp.base.w(r),
            2.0 * (-0.5 * eps0 * r).exp()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use approx::assert_relative_eq;

    fn near_zero_potential() -> ChannelPotential {
        ChannelPotential::s_wave(Potential::exponential(1e-300, 1.0))
    }

    #[test]
    fn closed_forms_match_their_defining_integrals() {
        // g(r) = int_0^r (r-t) g''(t) dt, G(r) = int_0^r (r-t)^2/2 g''(t) dt
        // at radii spanning both pieces (deterministically seeded)
        let tf = TestFunctions::new(3, 0.5);
        let mut x = 0.37f64;
        for _ in 0..20 {
            x = (x * 9301.0 + 0.49297).fract();
            let r = 0.3 + x * 25.0; // spans r0 = 9
            let g_quad = crate::quad::integrate(|t| (r - t) * tf.g_pp(t), 0.0, r, &[tf.r0]);
            let gg_quad =
                crate::quad::integrate(|t| 0.5 * (r - t) * (r - t) * tf.g_pp(t), 0.0, r, &[tf.r0]);
            assert_relative_eq!(tf.g(r), g_quad, max_relative = 1e-10);
            assert_relative_eq!(tf.g_big(r), gg_quad, max_relative = 1e-10);
        }
        // continuity at the switch point
        let e = 1e-9;
        assert_relative_eq!(tf.g(tf.r0 - e), tf.g(tf.r0 + e), max_relative = 1e-8);
        assert_relative_eq!(tf.g_p(tf.r0 - e), tf.g_p(tf.r0 + e), max_relative = 1e-8);
        assert_relative_eq!(tf.g_big(tf.r0 - e), tf.g_big(tf.r0 + e), max_relative = 1e-8);
        assert_eq!(tf.g_p(0.0), 0.0);
    }

    #[test]
    fn phi_reduces_to_g_pp_over_two_for_zero_potential() {
        let cp = near_zero_potential();
        let tf = TestFunctions::new(7, 0.5);
        for r in [0.3, 2.0, 30.0] {
            assert_relative_eq!(phi(r, &cp, &tf), 0.5 * tf.g_pp(r), max_relative = 1e-250);
        }
    }

    #[test]
    fn phi_centrifugal_part_matches_displayed_constant_below_r0() {
        // at alpha = 1, M = 10, r = 1: Phi_1 = -2 alpha(alpha+1)/((M+3)(M+1))
        // = -4/143 = -0.0279720280
        let cp = ChannelPotential::new(Potential::exponential(1e-300, 1.0), 1.0);
        let tf = TestFunctions::new(10, 0.5);
        let phi1 = phi(1.0, &cp, &tf) - 0.5 * tf.g_pp(1.0);
        assert_relative_eq!(phi1, -4.0 / 143.0, max_relative = 1e-12);
    }

    #[test]
    fn phi_value_for_unit_exponential_m10() {
        // frozen: 2 g(1) e^{-1} - G(1) e^{-1} + 1/2 with g(1)=1/132, G(1)=1/1716
        let cp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let tf = TestFunctions::new(10, 0.5);
        assert_relative_eq!(phi(1.0, &cp, &tf), 0.5053595490, epsilon = 1e-9);
    }

    #[test]
    fn middle_region_margins() {
        let free = near_zero_potential();
        let tf = TestFunctions::new(4, 0.5);
        let rep = check_middle_region(&free, &tf, &middle_grid(&tf));
        assert!(rep.margin > 0.0);

        let exp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let tf = TestFunctions::for_potential(12, &exp);
        let rep = check_middle_region(&exp, &tf, &middle_grid(&tf));
        assert!(rep.margin >= 0.0);
        assert!(rep.proof_envelope_margin >= 0.0);

        // an amplified potential shows the M-threshold: margin < 0 at M = 1
        let strong = ChannelPotential::s_wave(Potential::exponential(50.0, 1.0));
        let tf = TestFunctions::for_potential(1, &strong);
        let rep = check_middle_region(&strong, &tf, &middle_grid(&tf));
        assert!(rep.margin < 0.0, "margin {}", rep.margin);
    }

    #[test]
    fn large_region_margins() {
        let free = near_zero_potential();
        let tf = TestFunctions::new(4, 0.5);
        let rep = check_large_region(&free, &tf, &large_grid(&free, &tf));
        assert!(rep.margin > 0.0);

        let exp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let tf = TestFunctions::for_potential(12, &exp);
        let rep = check_large_region(&exp, &tf, &large_grid(&exp, &tf));
        assert!(rep.margin >= 0.0, "margin {}", rep.margin);

        let tf2 = TestFunctions::for_potential(2, &exp);
        let rep2 = check_large_region(&exp, &tf2, &large_grid(&exp, &tf2));
        assert!(rep2.margin < 0.0, "margin {}", rep2.margin);
    }

    #[test]
    fn identity_degenerate_and_precondition_paths() {
        let cp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let tf = TestFunctions::for_potential(6, &cp);
        // u = 0 returns 0 by convention
        let grid = crate::grid::linspace(1e-6, 40.0, 500);
        let zero = RadialSolution {
            u: vec![num_complex::Complex64::ZERO; grid.len()],
            du: vec![num_complex::Complex64::ZERO; grid.len()],
            log_scale: vec![0.0; grid.len()],
            grid,
            mu: num_complex::Complex64::ZERO,
            channel_alpha: 0.0,
            integrator_tolerance: 1e-10,
        };
        assert_eq!(verify_phi_identity(&zero, &cp, &tf, 0.25).unwrap(), 0.0);
        // a growing solution is rejected
        let sol = integrate_radial(&cp, num_complex::Complex64::ZERO, 45.0, 1e-10).unwrap();
        match verify_phi_identity(&sol, &cp, &tf, 0.25) {
            Err(Error::Precondition(_)) => {}
            other => panic!("expected Precondition, got {other:?}"),
        }
    }

    #[test]
    fn identity_saturates_at_the_boundary_term_for_bargmann() {
        // the ratio converges to ~1: the numerator equals g'(inf) C0^2/2
        let (p, _) = Potential::bargmann_pair();
        let cp = ChannelPotential::s_wave(p);
        let tf = TestFunctions::new(6, 0.5);
        let sol = integrate_radial(&cp, num_complex::Complex64::ZERO, 120.0, 1e-11).unwrap();
        let coarse = verify_phi_identity(&sol, &cp, &tf, 0.5).unwrap();
        let fine = verify_phi_identity(&sol, &cp, &tf, 0.25).unwrap();
        assert!(coarse > 0.99 && coarse < 1.0 + 1e-9, "coarse {coarse}");
        assert!((fine - coarse).abs() < 1e-6, "quadrature converged to the truth");
    }

    #[test]
    fn certificate_for_unit_exponential() {
        let cp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let cert = certify_no_strong_resonance(&cp, 4..=16).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Certified);
        let m = cert.m_star.unwrap();
        assert!(m <= 16, "M* = {m}");
        assert!(cert.middle_margin >= 0.0 && cert.large_margin >= 0.0);
        assert!(cert.contradiction_gap > 0.0);
        assert_eq!(cert.classification, Some(ZeroEnergyKind::Regular));
    }

    #[test]
    fn certificate_small_coupling() {
        let cp = ChannelPotential::s_wave(Potential::exponential(0.01, 1.0));
        let cert = certify_no_strong_resonance(&cp, 4..=16).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Certified);
    }

    #[test]
    fn certificate_gates() {
        let (bargmann, _) = Potential::bargmann_pair();
        let cert =
            certify_no_strong_resonance(&ChannelPotential::s_wave(bargmann), 4..=16).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Inapplicable);
        assert!(cert.inapplicable_reason.unwrap().contains("origin"));

        let well = Potential::square_well(1.0, 1.0);
        let cert = certify_no_strong_resonance(&ChannelPotential::s_wave(well), 4..=16).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Inapplicable);
    }

    #[test]
    fn certificate_fails_on_the_threshold_coupling() {
        // the Bessel-threshold potential satisfies every gate but carries a
        // strong resonance; the certificate must report the conflict
        let cp = ChannelPotential::s_wave(Potential::exponential(1.4457964907, 1.0));
        let cert = certify_no_strong_resonance(&cp, 4..=16).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Failed);
        assert_eq!(cert.classification, Some(ZeroEnergyKind::StrongResonance));
    }

    #[test]
    fn relative_margins_monotone_in_m() {
        let cp = ChannelPotential::s_wave(Potential::exponential(1.0, 1.0));
        let cert = certify_no_strong_resonance(&cp, 4..=16).unwrap();
        let m_star = cert.m_star.unwrap();
        let mut prev_mid = f64::NEG_INFINITY;
        let mut prev_large = f64::NEG_INFINITY;
        for m in [m_star, m_star + 2, m_star + 4] {
            let tf = TestFunctions::for_potential(m, &cp);
            let mid = check_middle_region(&cp, &tf, &middle_grid(&tf));
            let large = check_large_region(&cp, &tf, &large_grid(&cp, &tf));
            assert!(mid.margin >= 0.0 && large.margin >= 0.0);
            assert!(mid.rel_margin >= prev_mid - 1e-12);
            assert!(large.rel_margin >= prev_large - 1e-12);
            prev_mid = mid.rel_margin;
            prev_large = large.rel_margin;
        }
    }
}
