//! Gauss-Legendre quadrature, composite rules with breakpoints, and
//! cumulative integration on sampled grids.

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// A quadrature rule as explicit nodes and weights on some interval union.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss-Legendre on [a, b], split at `breakpoints` (those inside
    /// (a,b) only), each segment cut into panels of width at most `max_panel`.
    pub fn composite(a: f64, b: f64, breakpoints: &[f64], order: usize, max_panel: f64) -> Rule {
        assert!(b > a);
        let mut cuts = vec![a];
        let mut brk: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        brk.sort_by(|x, y| x.partial_cmp(y).unwrap());
        brk.dedup();
        cuts.extend(brk);
        cuts.push(b);

        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let n_panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
            let h = (hi - lo) / n_panels as f64;
            for p in 0..n_panels {
                let pa = lo + h * p as f64;
                let c = pa + 0.5 * h;
                let s = 0.5 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(c + s * x);
                    weights.push(s * w);
                }
            }
        }
        Rule { nodes, weights }
    }

    /// Composite rule on [a, b] with panels growing geometrically away from `a`
    /// (denser near the left end). `n_target` is the approximate node total.
    pub fn geometric(a: f64, b: f64, n_target: usize, breakpoints: &[f64]) -> Rule {
        assert!(b > a && a >= 0.0);
        let order = 8usize;
        let n_panels = (n_target / order).max(4);
        // panel edges: a + (b-a) * (q^k - 1)/(q^n - 1) with ratio q
        let q: f64 = 1.35;
        let denom = q.powi(n_panels as i32) - 1.0;
        let mut cuts: Vec<f64> = (0..=n_panels)
            .map(|k| a + (b - a) * (q.powi(k as i32) - 1.0) / denom)
            .collect();
        for &bp in breakpoints {
            if bp > a && bp < b {
                cuts.push(bp);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + y.abs()));

        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let c = 0.5 * (seg[0] + seg[1]);
            let s = 0.5 * (seg[1] - seg[0]);
            if s <= 0.0 {
                continue;
            }
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(c + s * x);
                weights.push(s * w);
            }
        }
        Rule { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Integrate f over [a, b] with composite Gauss-Legendre (order 16 panels).
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, breakpoints: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let max_panel = ((b - a) / 16.0).min(2.0);
    Rule::composite(a, b, breakpoints, 16, max_panel).integrate(f)
}

/// Cumulative integral of sampled values: out[i] = int_{x[0]}^{x[i]} f.
///
/// Each interval uses the average of the two local quadratic interpolants
/// through (i-1,i,i+1) and (i,i+1,i+2); fourth order on smooth grids.
pub fn cumulative(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, fs.len());
    assert!(n >= 2);
    let mut out = vec![0.0; n];
    let seg = |i0: usize, i1: usize, i2: usize, a: f64, b: f64| -> f64 {
        // integral over [a,b] of the quadratic through the three samples,
        // done with 3-point Gauss (exact for quadratics)
        let (x0, x1, x2) = (xs[i0], xs[i1], xs[i2]);
        let (f0, f1, f2) = (fs[i0], fs[i1], fs[i2]);
        let p0 = |t: f64| (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2));
        let p1 = |t: f64| (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2));
        let p2 = |t: f64| (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1));
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        let g = (3.0f64 / 5.0).sqrt();
        let (w0, w1) = (5.0 / 9.0, 8.0 / 9.0);
        let quad = |p: &dyn Fn(f64) -> f64| s * (w0 * p(c - s * g) + w1 * p(c) + w0 * p(c + s * g));
        f0 * quad(&p0) + f1 * quad(&p1) + f2 * quad(&p2)
    };
    for i in 0..n - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let left = if i == 0 {
            seg(0, 1, 2, a, b)
        } else {
            seg(i - 1, i, i + 1, a, b)
        };
        let right = if i + 2 < n {
            seg(i, i + 1, i + 2, a, b)
        } else {
            left
        };
        out[i + 1] = out[i] + 0.5 * (left + right);
    }
    out
}

/// Reverse cumulative integral: out[i] = int_{x[i]}^{x[n-1]} f.
pub fn cumulative_from_right(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let c = cumulative(xs, fs);
    let total = *c.last().unwrap();
    c.into_iter().map(|v| total - v).collect()
}

/// int_a^inf e^{-k(t-a)} (c0 + c1 t) dt for k > 0.
pub fn exp_linear_tail(a: f64, k: f64, c0: f64, c1: f64) -> f64 {
    (c0 + c1 * a) / k + c1 / (k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [2usize, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            // degree 2n-1 monomial over [-1,1]
            let d = 2 * n - 1;
            let num: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(d as i32 - 1)).sum();
            let exact = if (d - 1) % 2 == 0 { 2.0 / d as f64 } else { 0.0 };
            assert_relative_eq!(num, exact, max_relative = 1e-12, epsilon = 1e-13);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn composite_known_integral() {
        let v = integrate(|x| x.exp(), 0.0, 3.0, &[1.0]);
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let xs = crate::grid::logspace(1e-4, 40.0, 4000);
        let fs: Vec<f64> = xs.iter().map(|&s| s * s * (-s).exp()).collect();
        let c = cumulative(&xs, &fs);
        // int_0^M s^2 e^{-s} = 2 - e^{-M}(M^2+2M+2); grid starts at 1e-4
        let head = 2.0 - (-xs[0] as f64).exp() * (xs[0] * xs[0] + 2.0 * xs[0] + 2.0);
        for (i, &m) in xs.iter().enumerate().step_by(500) {
            let exact = 2.0 - (-m).exp() * (m * m + 2.0 * m + 2.0) - head;
            assert_relative_eq!(c[i], exact, epsilon = 1e-10, max_relative = 1e-9);
        }
    }

    #[test]
    fn tail_closure() {
        let v = exp_linear_tail(3.0, 2.0, 1.0, 0.5);
        // int_3^inf e^{-2(t-3)} (1 + 0.5 t) dt = (1+1.5)/2 + 0.5/4
        assert_relative_eq!(v, 2.5 / 2.0 + 0.125, max_relative = 1e-14);
    }
}
