//! One-dimensional adaptive quadrature, used as ground truth for
//! normalization checks.

/// Integrates `f` over `[a, b]` by adaptive Simpson subdivision.
///
/// `rel_tol` bounds the error relative to the magnitude of the integral; the
/// tolerance is spread over subintervals with the usual 15-fold Richardson
/// estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    assert!(a < b, "integration bounds must be ordered");
    assert!(rel_tol > 0.0);
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let eps = whole.abs().max(1e-12) * rel_tol;
    recurse(&f, a, b, fa, fm, fb, whole, eps, 48)
}

/// Integrates over consecutive panels given by `edges`, summing the panel
/// integrals. Useful when the integrand spans many orders of magnitude and
/// the panel boundaries are chosen to follow it (log-spaced, say).
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, edges: &[f64], rel_tol: f64) -> f64 {
    assert!(edges.len() >= 2, "need at least one panel");
    edges
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], rel_tol))
        .sum()
}

/// Edges spaced uniformly in log10 between `a` and `b`, `per_decade` panels
/// per factor of ten.
pub fn log_spaced_edges(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && per_decade > 0);
    let la = a.log10();
    let lb = b.log10();
    let panels = ((lb - la) * per_decade as f64).ceil() as usize;
    let mut edges: Vec<f64> = (0..=panels)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / panels as f64))
        .collect();
    edges[0] = a;
    let last = edges.len() - 1;
    edges[last] = b;
    edges
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}
