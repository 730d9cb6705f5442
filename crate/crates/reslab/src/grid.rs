//! Grid builders shared across modules.

/// `n` equally spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + h * i as f64 })
        .collect()
}

/// `n` log-spaced points on `[a, b]`, `a > 0`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a, "logspace needs 0 < a < b");
    let la = a.ln();
    let lb = b.ln();
    linspace(la, lb, n).into_iter().map(f64::exp).collect()
}

/// Log grid on `[a, b]` with at least `per_decade` points per decade
/// (and at least `n_min` points overall).
pub fn log_grid_per_decade(a: f64, b: f64, per_decade: usize, n_min: usize) -> Vec<f64> {
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize + 1).max(n_min);
    logspace(a, b, n)
}
