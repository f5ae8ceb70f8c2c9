//! Adaptive Simpson quadrature for the moment-recursion cross-checks.

/// Error floor below which intervals are never split, in units of the
/// integral's magnitude (the integrand is normalized by a coarse estimate
/// first, so tiny integrals still get relative accuracy).
pub const ABS_FLOOR: f64 = 1e-15;

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to relative accuracy `rel_tol` (floored at [`ABS_FLOOR`]).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // A 16-panel pass sets the scale; integrate f / scale so the error floor is
    // relative to the integral's size.
    let scale = composite(&f, a, b, 16).abs();
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let g = |x: f64| f(x) / scale;
    let fa = g(a);
    let fb = g(b);
    let fm = g(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    let eps = rel_tol.max(ABS_FLOOR);
    scale * recurse(&g, a, b, fa, fm, fb, whole, eps, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            simpson(lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi))
        })
        .sum()
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
    let half = (0.5 * eps).max(ABS_FLOOR);
    recurse(f, a, m, fa, flm, fm, left, half, depth - 1) + recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
}
