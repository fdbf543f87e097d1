//! Independent reference routines for unit tests.

/// `E f(mean + std Z)` by adaptive Simpson integration against the normal
/// density on `[-40, 40]` standard deviations.
pub fn adaptive_gaussian<F: Fn(f64) -> f64>(f: F, mean: f64, std: f64, tol: f64) -> f64 {
    let g = |z: f64| f(mean + std * z) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // split at 0 and a few points so the recursion starts on short panels
    let cuts = [-40.0, -10.0, -4.0, -1.0, 0.0, 1.0, 4.0, 10.0, 40.0];
    cuts.windows(2)
        .map(|w| adaptive_simpson(&g, w[0], w[1], tol / 8.0))
        .sum()
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
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
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Plain bisection on a sign change, written independently of the library.
pub fn scalar_bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let slo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// CW magnetization with a constant zero field: positive root of `m = tanh(beta m)`.
pub fn cw_root(beta: f64) -> f64 {
    scalar_bisect(|m| (beta * m).tanh() - m, 1e-9, 1.0)
}

#[test]
fn oracle_sanity() {
    let v = adaptive_gaussian(|x| x * x, 0.0, 1.0, 1e-13);
    assert!((v - 1.0).abs() < 1e-12);
    let r = cw_root(2.0);
    assert!(((2.0 * r).tanh() - r).abs() < 1e-14);
}
