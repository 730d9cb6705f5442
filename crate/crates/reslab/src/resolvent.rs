//! Half-line free resolvent with Dirichlet condition, the weighted
//! perturbed operator A(mu) = phi R0(mu^2) W phi^{-1} discretised by
//! Nystrom quadrature, Fredholm-determinant scans over a strip in the
//! mu-plane, and zero location by winding numbers plus secant polish.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::Rule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// phi(r) = e^{-delta r}.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WeightFunction {
    pub delta: f64,
}

impl WeightFunction {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0);
        WeightFunction { delta }
    }

    pub fn phi(&self, r: f64) -> f64 {
        (-self.delta * r).exp()
    }

    /// The strip hypothesis 0 < delta < eps0/2 for the given potential.
    pub fn check_against(&self, p: &Potential) -> Result<()> {
        if self.delta >= 0.5 * p.decay.eps0 {
            return Err(Error::Precondition(format!(
                "delta = {} must be below eps0/2 = {}",
                self.delta,
                0.5 * p.decay.eps0
            )));
        }
        Ok(())
    }
}

fn sinc_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Free-resolvent kernel G_mu(r, s) = e^{i mu max(r,s)} sin(mu min(r,s))/mu,
/// continuous through mu = 0 where it becomes min(r, s).
pub fn free_kernel(mu: Complex64, r: f64, s: f64) -> Complex64 {
    let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
    (Complex64::i() * mu * hi).exp() * lo * sinc_c(mu * lo)
}

/// Apply the free resolvent to sampled data f (piecewise-linear on its
/// grid, compactly supported there), evaluated on `out_grid`.
pub fn free_resolvent_apply(
    mu: Complex64,
    f_grid: &[f64],
    f_values: &[f64],
    out_grid: &[f64],
) -> Vec<Complex64> {
    assert_eq!(f_grid.len(), f_values.len());
    let support = (f_grid[0], *f_grid.last().unwrap());
    let f_at = |s: f64| -> f64 {
        if s < support.0 || s > support.1 {
            return 0.0;
        }
        let i = f_grid.partition_point(|&x| x < s).clamp(1, f_grid.len() - 1);
        let t = (s - f_grid[i - 1]) / (f_grid[i] - f_grid[i - 1]);
        f_values[i - 1] * (1.0 - t) + f_values[i] * t
    };
    out_grid
        .iter()
        .map(|&r| {
            let rule = Rule::composite(
                support.0.min(r.min(support.1)),
                support.1,
                &[r],
                16,
                0.25,
            );
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| free_kernel(mu, r, s) * (w * f_at(s)))
                .fold(Complex64::ZERO, |a, b| a + b)
        })
        .collect()
}

/// Quadrature for the Nystrom discretisation on [0, R_q], denser near the
/// origin, split at the potential's breakpoints.
pub fn nystrom_rule(p: &Potential, order: usize, r_q: f64) -> Rule {
    Rule::geometric(0.0, r_q, order, &p.breakpoints)
}

/// Truncation radius so the kernel column envelope is below `tol_env` for
/// the most negative Im mu in play.
pub fn choose_r_q(p: &Potential, w: &WeightFunction, im_min: f64, tol_env: f64) -> Result<f64> {
    let gamma = p.decay.eps0 - w.delta - (-im_min).max(0.0);
    if gamma <= 0.0 {
        return Err(Error::Truncation {
            r_q: f64::INFINITY,
            envelope: f64::INFINITY,
            threshold: tol_env,
        });
    }
    let r_q = ((p.decay.c_star / tol_env).ln() / gamma).max(60.0);
    let envelope = p.decay.c_star * (-gamma * r_q).exp();
    if envelope > tol_env * 10.0 {
        return Err(Error::Truncation {
            r_q,
            envelope,
            threshold: tol_env,
        });
    }
    Ok(r_q)
}

/// Dense Nystrom matrix of A(mu) with the quadrature weights folded in:
/// A_ij = phi(x_i) G_mu(x_i, x_j) W(x_j) / phi(x_j) * w_j.
pub fn assemble_a(mu: Complex64, p: &Potential, w: &WeightFunction, rule: &Rule) -> DMatrix<Complex64> {
    let n = rule.len();
    let xs = &rule.nodes;
    let col_factor: Vec<f64> = xs
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &wt)| p.w(x) / w.phi(x) * wt)
        .collect();
    let row_factor: Vec<f64> = xs.iter().map(|&x| w.phi(x)).collect();
    DMatrix::from_fn(n, n, |i, j| {
        free_kernel(mu, xs[i], xs[j]) * (row_factor[i] * col_factor[j])
    })
}

/// L^2-normalised operator norm estimate (largest singular value of
/// D^{1/2} K D^{-1/2} by power iteration on the Gram matrix).
pub fn operator_norm(mu: Complex64, p: &Potential, w: &WeightFunction, rule: &Rule) -> f64 {
    let n = rule.len();
    let xs = &rule.nodes;
    let sqw: Vec<f64> = rule.weights.iter().map(|&x| x.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| {
        free_kernel(mu, xs[i], xs[j])
            * (w.phi(xs[i]) * sqw[i] * p.w(xs[j]) / w.phi(xs[j]) * sqw[j])
    });
    let mut v = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
    v /= Complex64::new((n as f64).sqrt(), 0.0);
    let mut sigma = 0.0;
    for _ in 0..60 {
        let u = &b * &v;
        let z = b.adjoint() * u;
        let nz = z.norm();
        if nz == 0.0 {
            return 0.0;
        }
        sigma = nz.sqrt();
        v = z / Complex64::new(nz, 0.0);
    }
    sigma
}

pub fn det_i_minus_a(mu: Complex64, p: &Potential, w: &WeightFunction, rule: &Rule) -> Complex64 {
    let mut m = assemble_a(mu, p, w, rule);
    m.neg_mut();
    for i in 0..m.nrows() {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    m.lu().determinant()
}

/// Smallest singular value of I - A(mu).
pub fn sigma_min_i_minus_a(mu: Complex64, p: &Potential, w: &WeightFunction, rule: &Rule) -> f64 {
    let mut m = assemble_a(mu, p, w, rule);
    m.neg_mut();
    for i in 0..m.nrows() {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let svd = m.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ScanRect {
    pub re_min: f64,
    pub re_max: f64,
    /// exclusive lower edge (the strip boundary)
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LocatedZero {
    pub mu_re: f64,
    pub mu_im: f64,
    pub abs_det: f64,
    pub sigma_min: f64,
    pub winding: i32,
    /// imaginary-axis zeros with Im mu > 0 are resolvent poles at
    /// eigenvalues; everything else is reported as a resonance
    pub kind: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ResonanceScan {
    pub rect: ScanRect,
    pub nx: usize,
    pub ny: usize,
    pub quadrature_order: usize,
    pub r_q: f64,
    #[serde(skip)]
    pub mu_grid: Vec<Complex64>,
    #[serde(skip)]
    pub det_values: Vec<Complex64>,
    pub zeros: Vec<LocatedZero>,
}

impl ResonanceScan {
    pub fn export_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "re_mu,im_mu,re_det,im_det,abs_det")?;
        for (mu, det) in self.mu_grid.iter().zip(&self.det_values) {
            writeln!(
                f,
                "{},{},{},{},{}",
                mu.re,
                mu.im,
                det.re,
                det.im,
                det.norm()
            )?;
        }
        Ok(())
    }
}

/// Evaluate det(I - A(mu)) on an nx-by-ny grid over `rect` (lower edge
/// exclusive), locate zeros by cell winding numbers, and polish each by
/// complex secant iteration.
pub fn determinant_scan(
    p: &Potential,
    w: &WeightFunction,
    rect: ScanRect,
    nx: usize,
    ny: usize,
    order: usize,
) -> Result<ResonanceScan> {
    w.check_against(p)?;
    if !(nx >= 4 && ny >= 4) {
        return Err(Error::Resolution("grid must be at least 4x4".into()));
    }
    let r_q = choose_r_q(p, w, rect.im_min, 1e-12)?;
    let rule = nystrom_rule(p, order, r_q);

    let res: Vec<f64> = (0..nx)
        .map(|i| rect.re_min + (rect.re_max - rect.re_min) * i as f64 / (nx - 1) as f64)
        .collect();
    let ims: Vec<f64> = (1..=ny)
        .map(|j| rect.im_min + (rect.im_max - rect.im_min) * j as f64 / ny as f64)
        .collect();
    let mu_grid: Vec<Complex64> = ims
        .iter()
        .flat_map(|&im| res.iter().map(move |&re| Complex64::new(re, im)))
        .collect();
    let det_values: Vec<Complex64> = mu_grid
        .par_iter()
        .map(|&mu| det_i_minus_a(mu, p, w, &rule))
        .collect();

    // winding number per cell from the four corner phases
    let at = |i: usize, j: usize| det_values[j * nx + i];
    let mut candidates = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut total = 0.0;
            let mut ok = true;
            for k in 0..4 {
                let a = corners[k];
                let b = corners[(k + 1) % 4];
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    ok = false;
                    break;
                }
                let d = (b / a).arg();
                if d.abs() > 0.95 * std::f64::consts::PI {
                    ok = false;
                    break;
                }
                total += d;
            }
            let winding = (total / (2.0 * std::f64::consts::PI)).round();
            if !ok {
                return Err(Error::Resolution(format!(
                    "phase step too large near cell ({i}, {j}); refine the mu grid"
                )));
            }
            if winding != 0.0 {
                let center = Complex64::new(
                    0.5 * (res[i] + res[i + 1]),
                    0.5 * (ims[j] + ims[j + 1]),
                );
                candidates.push((center, winding as i32));
            }
        }
    }

    let h = Complex64::new(
        0.25 * (res[1] - res[0]),
        0.25 * (ims[1] - ims[0]),
    );
    let mut zeros: Vec<LocatedZero> = Vec::new();
    for (center, winding) in candidates {
        if let Some(mu0) = secant_zero(center, h, |m| det_i_minus_a(m, p, w, &rule)) {
            if zeros
                .iter()
                .any(|z| Complex64::new(z.mu_re - mu0.re, z.mu_im - mu0.im).norm() < 1e-6)
            {
                continue;
            }
            let sv = sigma_min_i_minus_a(mu0, p, w, &rule);
            let kind = if mu0.im > 1e-8 && mu0.re.abs() < 1e-6 {
                "eigenvalue_pole"
            } else {
                "resonance"
            };
            zeros.push(LocatedZero {
                mu_re: mu0.re,
                mu_im: mu0.im,
                abs_det: det_i_minus_a(mu0, p, w, &rule).norm(),
                sigma_min: sv,
                winding,
                kind: kind.into(),
            });
        }
    }

    Ok(ResonanceScan {
        rect,
        nx,
        ny,
        quadrature_order: order,
        r_q,
        mu_grid,
        det_values,
        zeros,
    })
}

fn secant_zero(
    start: Complex64,
    step: Complex64,
    mut f: impl FnMut(Complex64) -> Complex64,
) -> Option<Complex64> {
    let mut z0 = start;
    let mut z1 = start + step;
    let mut f0 = f(z0);
    let mut f1 = f(z1);
    for _ in 0..30 {
        if f1.norm() < 1e-10 {
            return Some(z1);
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            return None;
        }
        let z2 = z1 - f1 * (z1 - z0) / denom;
        if !z2.re.is_finite() || !z2.im.is_finite() {
            return None;
        }
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f(z1);
    }
    if f1.norm() < 1e-8 {
        Some(z1)
    } else {
        None
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PoleCrosscheck {
    pub eigenvalue: f64,
    pub mu_expected_im: f64,
    pub mu_found_re: f64,
    pub mu_found_im: f64,
    pub distance: f64,
}

/// For each negative eigenvalue, verify the determinant vanishes at
/// mu = i sqrt(-E) on the physical branch.
pub fn bound_state_poles_crosscheck(
    p: &Potential,
    w: &WeightFunction,
    eigenvalues: &[f64],
    order: usize,
) -> Result<Vec<PoleCrosscheck>> {
    w.check_against(p)?;
    let r_q = choose_r_q(p, w, 0.0, 1e-12)?;
    let rule = nystrom_rule(p, order, r_q);
    let mut out = Vec::new();
    for &e in eigenvalues {
        let kappa = (-e).sqrt();
        let mu_exp = Complex64::new(0.0, kappa);
        let found = secant_zero(mu_exp, Complex64::new(1e-3, 1e-3), |m| {
            det_i_minus_a(m, p, w, &rule)
        })
        .ok_or_else(|| {
            Error::Consistency(format!(
                "no determinant zero found near mu = {kappa} i for eigenvalue {e}"
            ))
        })?;
        let distance = (found - mu_exp).norm();
        if distance > 1e-4 {
            return Err(Error::Consistency(format!(
                "determinant zero at {found} is {distance:.2e} away from i*sqrt(-E) = {kappa} i"
            )));
        }
        out.push(PoleCrosscheck {
            eigenvalue: e,
            mu_expected_im: kappa,
            mu_found_re: found.re,
            mu_found_im: found.im,
            distance,
        });
    }
    Ok(out)
}
