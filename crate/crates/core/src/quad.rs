//! Adaptive composite Simpson quadrature.

/// Result of an adaptive integration: value and accumulated error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first split into `initial` equal panels, each refined
/// recursively with the Richardson-corrected Simpson rule.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, initial: usize) -> Quadrature {
    let panels = initial.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Quadrature { value: 0.0, error: 0.0, evaluations: 0 };
    let panel_tol = tol / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (fl, fm, fh) = (f(lo), f(mid), f(hi));
        out.evaluations += 3;
        let whole = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh);
        let (v, e) = refine(&mut f, lo, hi, fl, fm, fh, whole, panel_tol, MAX_DEPTH, &mut out.evaluations);
        out.value += v;
        out.error += e;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return (left + right + delta / 15.0, (delta / 15.0).abs());
    }
    let (lv, le) = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals);
    let (rv, re) = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals);
    (lv + rv, le + re)
}

/// Composite Simpson on `n` (even) uniform panels; used as a refinement oracle.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let q = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 4);
        assert!((q.value - 2.0).abs() < 1e-11);
        let q = adaptive_simpson(|x| (-x).exp() / x, 1.0, 30.0, 1e-12, 8);
        // E1(1) - E1(30)
        assert!((q.value - (0.219_383_934_395_520_3 - 3.000_199_4e-15)).abs() < 1e-11);
    }

    #[test]
    fn composite_converges_at_fourth_order() {
        let f = |x: f64| x.exp();
        let exact = 1f64.exp() - 1.0;
        let e1 = (composite_simpson(f, 0.0, 1.0, 8) - exact).abs();
        let e2 = (composite_simpson(f, 0.0, 1.0, 16) - exact).abs();
        assert!((e1 / e2).log2() > 3.8);
    }
}
