//! Gauss–Legendre quadrature primitives shared by the contour, scattering and
//! verification modules.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre polynomial; results are cached
/// per n. Deterministic across runs.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

/// Append the n-point rule mapped to [a, b] onto `nodes`/`weights`.
pub fn push_panel(nodes: &mut Vec<f64>, weights: &mut Vec<f64>, a: f64, b: f64, n: usize) {
    let (xs, ws) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    for i in 0..n {
        nodes.push(c + h * xs[i]);
        weights.push(h * ws[i]);
    }
}

/// ∫ₐᵇ f with an n-point rule.
pub fn integrate_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..n {
        acc += h * ws[i] * f(c + h * xs[i]);
    }
    acc
}

/// ∫ₐᵇ f over geometric panels (width grows by `ratio` from `w0`).
pub fn integrate_geometric<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    w0: f64,
    ratio: f64,
    n_per_panel: usize,
) -> f64 {
    let mut acc = 0.0;
    let mut lo = a;
    let mut w = w0;
    while lo < b {
        let hi = (lo + w).min(b);
        acc += integrate_panel(f, lo, hi, n_per_panel);
        lo = hi;
        w *= ratio;
    }
    acc
}

/// Estimate of the semi-infinite tail ∫_from^∞ f(y) dy for an eventually
/// decaying, non-negative envelope: sum over doubling panels [c, 2c] until the
/// panel contribution is negligible, then extrapolate the remaining geometric
/// tail from the last two panel ratios.
pub fn tail_integral<F: Fn(f64) -> f64>(f: &F, from: f64, n_per_panel: usize) -> f64 {
    let mut acc = 0.0;
    let mut c = from.max(1e-12);
    let mut prev = f64::INFINITY;
    for _ in 0..600 {
        let p = integrate_panel(f, c, 2.0 * c, n_per_panel);
        acc += p;
        if p <= 0.0 {
            return acc;
        }
        if p < 1e-9 * acc || p < 1e-280 {
            // Geometric extrapolation of the remainder.
            let r = (p / prev).min(0.97);
            if r > 0.0 {
                acc += p * r / (1.0 - r);
            }
            return acc;
        }
        prev = p;
        c *= 2.0;
    }
    // Did not visibly converge; report a conservative overestimate.
    acc * 2.0
}
