//! Embedded Dormand-Prince 5(4) integrator over fixed-size real state
//! vectors, with dense output onto caller grids via cubic Hermite.

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: f64,
    /// If the state max-norm exceeds this, the state is rescaled and the
    /// accumulated log of the scale factor is reported per step.
    pub rescale_threshold: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: 1e-4,
            rescale_threshold: 1e140,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            // cap the step so cubic-Hermite dense output stays within tol
            h_max: (384.0 * tol).powf(0.25).max(2e-3),
            ..Default::default()
        }
    }
}

/// One accepted step: (x, y, f(x,y), cumulative log-scale).
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub f: [f64; N],
    pub log_scale: f64,
}

/// Outcome of `integrate`: accepted steps from `a` to the stop point.
#[derive(Debug, Clone)]
pub struct OdePath<const N: usize> {
    pub steps: Vec<Step<N>>,
    pub n_eval: usize,
}

impl<const N: usize> OdePath<N> {
    pub fn end(&self) -> &Step<N> {
        self.steps.last().unwrap()
    }

    /// Dense evaluation at x via cubic Hermite within the bracketing step.
    /// Returns (y, log_scale at x's left node).
    pub fn sample(&self, x: f64) -> ([f64; N], f64) {
        let steps = &self.steps;
        let idx = match steps.binary_search_by(|s| s.x.partial_cmp(&x).unwrap()) {
            Ok(i) => return (steps[i].y, steps[i].log_scale),
            Err(i) => i.clamp(1, steps.len() - 1) - 1,
        };
        let (s0, s1) = (&steps[idx], &steps[idx + 1]);
        let h = s1.x - s0.x;
        let t = ((x - s0.x) / h).clamp(0.0, 1.0);
        // account for a rescale between the two nodes
        let relog = s1.log_scale - s0.log_scale;
        let scale0 = (-relog).exp();
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let mut y = [0.0; N];
        for k in 0..N {
            let y0 = s0.y[k] * scale0;
            let d0 = s0.f[k] * scale0;
            y[k] = h00 * y0 + h * h10 * d0 + h01 * s1.y[k] + h * h11 * s1.f[k];
        }
        (y, s1.log_scale)
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate y' = f(x, y) from a to b (a < b). `halt` may stop the run early
/// after any accepted step; the partial path is returned.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    a: f64,
    b: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    mut halt: impl FnMut(&Step<N>) -> bool,
) -> OdePath<N> {
    let mut x = a;
    let mut y = y0;
    let mut fy = f(x, &y);
    let mut n_eval = 1usize;
    let mut log_scale = 0.0f64;
    let mut steps = vec![Step {
        x,
        y,
        f: fy,
        log_scale,
    }];
    let mut h = opts.h_init.min(opts.h_max).min(b - a);
    let mut k = [[0.0; N]; 7];

    while x < b {
        if x + h > b {
            h = b - x;
        }
        k[0] = fy;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let aij = A[stage][j];
                if aij != 0.0 {
                    for n in 0..N {
                        ys[n] += h * aij * kj[n];
                    }
                }
            }
            k[stage + 1] = f(x + C[stage] * h, &ys);
            n_eval += 1;
        }
        // 5th-order solution is the stage-6 state; k[6] = f at (x+h, y1) (FSAL)
        let mut y1 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let bj = A[5][j];
            if bj != 0.0 {
                for n in 0..N {
                    y1[n] += h * bj * kj[n];
                }
            }
        }
        // error estimate
        let mut err: f64 = 0.0;
        for n in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[n];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[n].abs().max(y1[n].abs());
            err = err.max((e / sc).abs());
        }

        if err <= 1.0 {
            x += h;
            y = y1;
            fy = k[6];
            // rescale to avoid overflow in exponentially growing regimes
            let amp = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if amp > opts.rescale_threshold {
                for v in y.iter_mut() {
                    *v /= amp;
                }
                for v in fy.iter_mut() {
                    *v /= amp;
                }
                log_scale += amp.ln();
            }
            let step = Step {
                x,
                y,
                f: fy,
                log_scale,
            };
            let stop = halt(&step);
            steps.push(step);
            if stop {
                break;
            }
        }
        let fac = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * fac).min(opts.h_max);
        if h < 1e-14 * (1.0 + x.abs()) {
            // step collapse: bail out with what we have
            break;
        }
    }
    OdePath { steps, n_eval }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_oscillator() {
        let opts = OdeOptions::with_tol(1e-10);
        let path = integrate(
            |_x, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            10.0,
            [0.0, 1.0],
            &opts,
            |_| false,
        );
        let end = path.end();
        assert_relative_eq!(end.y[0], 10f64.sin(), epsilon = 1e-8);
        assert_relative_eq!(end.y[1], 10f64.cos(), epsilon = 1e-8);
        // dense output mid-way
        let (y, _) = path.sample(3.7);
        assert_relative_eq!(y[0], 3.7f64.sin(), epsilon = 1e-8);
    }

    #[test]
    fn rescale_keeps_growing_mode_finite() {
        let opts = OdeOptions {
            rescale_threshold: 1e10,
            ..OdeOptions::with_tol(1e-9)
        };
        // y'' = y, growing like e^x over [0, 80]
        let path = integrate(
            |_x, y: &[f64; 2]| [y[1], y[0]],
            0.0,
            80.0,
            [1.0, 1.0],
            &opts,
            |_| false,
        );
        let end = path.end();
        assert!(end.y[0].is_finite());
        // true value: log y = 80
        let log_val = end.y[0].ln() + end.log_scale;
        assert_relative_eq!(log_val, 80.0, epsilon = 1e-6);
    }
}
