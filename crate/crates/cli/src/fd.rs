//! Finite-difference comparison columns, from sample positions only.

use densgrad::smallmat::{dot, norm};

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cumulative polyline length of `points`.
pub fn arclength(points: &[Vec<f64>]) -> Vec<f64> {
    let mut s = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc += norm(&diff(p, &points[i - 1]));
        }
        s.push(acc);
    }
    s
}

/// `g` along a sampled curve with parameter spacing `h`:
/// `ρ ≈ 2h/Δs` over neighbours, then `g ≈ Δ log ρ / Δs`.
/// The first and last two entries are `NaN`.
pub fn curve_g(points: &[Vec<f64>], h: f64) -> Vec<f64> {
    let n = points.len();
    let s = arclength(points);
    let mut log_rho = vec![f64::NAN; n];
    for i in 1..n.saturating_sub(1) {
        log_rho[i] = (2.0 * h / (s[i + 1] - s[i - 1])).ln();
    }
    let mut g = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        g[i] = (log_rho[i + 1] - log_rho[i - 1]) / (s[i + 1] - s[i - 1]);
    }
    g
}

/// `(g_c, g_t)` at `(ic, it)` on a surface grid of positions `x[ic][it]`
/// with spacings `hc`, `ht`. Needs two nodes of margin in each direction.
pub fn surface_g(x: &[Vec<Vec<f64>>], ic: usize, it: usize, hc: f64, ht: f64) -> (f64, f64) {
    let log_rho = |ic: usize, it: usize| {
        let ec: Vec<f64> = diff(&x[ic + 1][it], &x[ic - 1][it]).iter().map(|v| v / (2.0 * hc)).collect();
        let et: Vec<f64> = diff(&x[ic][it + 1], &x[ic][it - 1]).iter().map(|v| v / (2.0 * ht)).collect();
        -0.5 * (dot(&ec, &ec) * dot(&et, &et) - dot(&ec, &et).powi(2)).ln()
    };
    let gc = (log_rho(ic + 1, it) - log_rho(ic - 1, it)) / norm(&diff(&x[ic + 1][it], &x[ic - 1][it]));
    let gt = (log_rho(ic, it + 1) - log_rho(ic, it - 1)) / norm(&diff(&x[ic][it + 1], &x[ic][it - 1]));
    (gc, gt)
}
