//! Self-contained 1-D numerical primitives: bracketed root finding, scalar
//! minimization, adaptive quadrature, and sup-norm estimation.
//!
//! Everything here is deterministic. Root finding is plain bisection
//! (midpoint rule) because the systems we analyze are only guaranteed C²
//! and golden test values must be reproducible bit-for-bit.

use crate::error::{Error, Result};

/// A root bracket `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Shared tolerances for the numerical primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance for bracket widths, step sizes, and quadrature error.
    pub abs_tol: f64,
    /// Grid resolution for scans (points per unit interval).
    pub grid_n: usize,
    /// Iteration budget for bracketing loops.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            grid_n: 4096,
            max_iter: 200,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.grid_n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid_n must be at least 2, got {}",
                self.grid_n
            )));
        }
        Ok(())
    }
}

/// Bisection root finding on a sign-changing bracket.
///
/// Returns `x` with final bracket width <= `abs_tol`. An endpoint that is an
/// exact zero is returned immediately.
pub fn bisect<F: Fn(f64) -> f64>(h: F, bracket: Bracket, tol: &Tolerances) -> Result<f64> {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let flo = h(lo);
    let fhi = h(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    let lo_positive = flo > 0.0;
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = h(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol.abs_tol {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::MaxIterExceeded {
        best: 0.5 * (lo + hi),
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8; // (sqrt(5) - 1) / 2

fn golden_section_min<F: Fn(f64) -> f64>(h: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = h(c);
    let mut fd = h(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = h(d);
        }
    }
    let m = 0.5 * (a + b);
    let fm = h(m);
    if fc < fm && fc <= fd {
        (c, fc)
    } else if fd < fm {
        (d, fd)
    } else {
        (m, fm)
    }
}

/// Global scalar minimization: coarse grid scan with `grid_n` cells, then
/// golden-section refinement around the best cell down to width `abs_tol`.
///
/// Finds the global minimum up to grid resolution; multi-modal functions
/// need a `grid_n` fine enough to separate the basins. Non-finite samples
/// are treated as +inf so partially defined objectives can be scanned.
pub fn minimize_scalar<F: Fn(f64) -> f64>(
    h: F,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    if lo > hi {
        return Err(Error::EmptyInterval { lo, hi });
    }
    if lo == hi {
        return Ok((lo, h(lo)));
    }
    let n = tol.grid_n;
    let step = (hi - lo) / n as f64;
    let mut best_k = 0usize;
    let mut best_v = f64::INFINITY;
    for k in 0..=n {
        let x = if k == n { hi } else { lo + k as f64 * step };
        let v = h(x);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    let a = if best_k == 0 { lo } else { lo + (best_k - 1) as f64 * step };
    let b = if best_k >= n { hi } else { lo + (best_k + 1) as f64 * step };
    let (xr, vr) = golden_section_min(&h, a, b, tol.abs_tol);
    let best_x = if best_k == n { hi } else { lo + best_k as f64 * step };
    if best_v < vr {
        Ok((best_x, best_v))
    } else {
        Ok((xr, vr))
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(
    h: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = h(lm);
    let frm = h(rm);
    for (x, v) in [(lm, flm), (rm, frm)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x, value: v });
        }
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        // Richardson extrapolation of the two estimates
        return Ok(left + right + err / 15.0);
    }
    let l = adaptive_simpson(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature of `h` over `[lo, hi]` with absolute error
/// target `abs_tol`. Reversed bounds integrate with a sign flip.
pub fn integrate<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate(h, hi, lo, tol).map(|v| -v);
    }
    let m = 0.5 * (lo + hi);
    let fa = h(lo);
    let fm = h(m);
    let fb = h(hi);
    for (x, v) in [(lo, fa), (m, fm), (hi, fb)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x, value: v });
        }
    }
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&h, lo, hi, fa, fm, fb, whole, tol.abs_tol, 48)
}

/// Estimate of `sup |h|` over `[lo, hi]`: grid scan at `grid_n + 1`
/// equispaced points, then golden-section refinement around the best point.
///
/// The estimate is lower-biased. Callers holding a closed-form sup should
/// use it directly instead (see `ScalarSystem` derivative sups).
pub fn sup_abs<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64> {
    if lo > hi {
        return Err(Error::EmptyInterval { lo, hi });
    }
    let n = tol.grid_n;
    let step = (hi - lo) / n as f64;
    let mut best_k = 0usize;
    let mut best_v = -1.0f64;
    for k in 0..=n {
        let x = if k == n { hi } else { lo + k as f64 * step };
        let v = h(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x, value: v });
        }
        let v = v.abs();
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    if lo == hi {
        return Ok(best_v);
    }
    let a = if best_k == 0 { lo } else { lo + (best_k - 1) as f64 * step };
    let b = if best_k >= n { hi } else { lo + (best_k + 1) as f64 * step };
    let (_, neg) = golden_section_min(&|x: f64| -h(x).abs(), a, b, tol.abs_tol);
    Ok(best_v.max(-neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn bisect_linear_root() {
        let r = bisect(|x| x - 0.5, Bracket::new(0.0, 1.0).unwrap(), &tol()).unwrap();
        assert!((r - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn bisect_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, Bracket::new(1.0, 2.0).unwrap(), &tol()).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn bisect_ldpc_fixed_point_matches_iteration_oracle() {
        // x - f(g(x); 0.45) for the (3,6) system on a bracket around the
        // stable fixed point; oracle iterates the recursion from x = 1.
        let g = |x: f64| 1.0 - (1.0 - x).powi(5);
        let h = |x: f64| x - 0.45 * g(x).powi(2);
        let r = bisect(h, Bracket::new(0.25, 1.0).unwrap(), &tol()).unwrap();
        let mut x: f64 = 1.0;
        loop {
            let next = 0.45 * g(x).powi(2);
            if (next - x).abs() <= 1e-15 {
                break;
            }
            x = next;
        }
        assert!((r - x).abs() <= 1e-10, "bisect {r} vs iterate {x}");
        assert!((r - 0.355443307748).abs() <= 1e-9);
    }

    #[test]
    fn bisect_rejects_no_sign_change() {
        let err = bisect(|x| x * x + 1.0, Bracket::new(0.0, 1.0).unwrap(), &tol());
        assert!(matches!(err, Err(Error::NoBracket { .. })));
    }

    #[test]
    fn bisect_reports_best_on_iteration_cap() {
        let t = Tolerances {
            abs_tol: 1e-12,
            max_iter: 5,
            ..tol()
        };
        match bisect(|x| x - 0.123456, Bracket::new(0.0, 1.0).unwrap(), &t) {
            Err(Error::MaxIterExceeded { best }) => assert!((best - 0.123456).abs() < 0.1),
            other => panic!("expected iteration cap, got {other:?}"),
        }
    }

    #[test]
    fn minimize_quadratic() {
        let (x, v) = minimize_scalar(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, &tol()).unwrap();
        assert!((x - 0.3).abs() <= 1e-10);
        assert!(v.abs() <= 1e-10);
    }

    #[test]
    fn minimize_boundary() {
        let (x, v) = minimize_scalar(|x| x, 0.2, 1.0, &tol()).unwrap();
        assert!((x - 0.2).abs() <= 1e-9);
        assert!((v - 0.2).abs() <= 1e-9);
    }

    #[test]
    fn minimize_ldpc_epsilon_curve() {
        // eps(x) = x / lambda(1 - rho(1-x)) for (3,6); min is eps_s* ~ 0.4294
        let h = |x: f64| {
            let g = 1.0 - (1.0 - x).powi(5);
            x / (g * g)
        };
        let (_, v) = minimize_scalar(h, 1e-9, 1.0, &tol()).unwrap();
        assert!((v - 0.4294).abs() <= 5e-4, "got {v}");
        assert!((v - 0.429439814419).abs() <= 1e-9);
    }

    #[test]
    fn minimize_rejects_reversed_interval() {
        assert!(matches!(
            minimize_scalar(|x| x, 1.0, 0.0, &tol()),
            Err(Error::EmptyInterval { .. })
        ));
    }

    #[test]
    fn integrate_polynomial() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 1.0, &tol()).unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn integrate_empty() {
        assert_eq!(integrate(|x| x, 0.0, 0.0, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn integrate_ldpc_check_profile() {
        let v = integrate(|x| 1.0 - (1.0 - x).powi(5), 0.0, 1.0, &tol()).unwrap();
        assert!((v - 5.0 / 6.0).abs() <= 1e-12);
    }

    #[test]
    fn integrate_reports_non_finite() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, &tol());
        assert!(matches!(err, Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn sup_abs_monotone_derivative() {
        let v = sup_abs(|x| 5.0 * (1.0 - x).powi(4), 0.0, 1.0, &tol()).unwrap();
        assert!((v - 5.0).abs() <= 1e-10);
    }

    #[test]
    fn sup_abs_zero() {
        assert_eq!(sup_abs(|_| 0.0, 0.0, 1.0, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn sup_abs_parabola_vertex() {
        let v = sup_abs(|x| x * (1.0 - x), 0.0, 1.0, &tol()).unwrap();
        assert!((v - 0.25).abs() <= 1e-10);
    }

    #[test]
    fn sup_abs_never_exceeds_known_extrema() {
        // |x(1-x)| peaks at 1/4, |1 - 2x| at 1, |x^3| at 1
        let cases: [(fn(f64) -> f64, f64); 3] =
            [(|x| x * (1.0 - x), 0.25), (|x| 1.0 - 2.0 * x, 1.0), (|x| x * x * x, 1.0)];
        for (h, exact) in cases {
            let v = sup_abs(h, 0.0, 1.0, &tol()).unwrap();
            assert!(v <= exact + 1e-12);
            assert!(v >= exact - 1e-9);
        }
    }

    proptest! {
        #[test]
        fn bisect_result_beats_bracket_endpoints(root in 0.05f64..0.95) {
            let h = move |x: f64| (x - root) * (1.0 + x);
            let r = bisect(h, Bracket::new(0.0, 1.0).unwrap(), &tol()).unwrap();
            prop_assert!(h(r).abs() <= h(0.0).abs());
            prop_assert!(h(r).abs() <= h(1.0).abs());
            prop_assert!((r - root).abs() <= 1e-11);
        }

        #[test]
        fn minimize_dominates_random_points(c in 0.0f64..1.0, seed in 0u64..1000) {
            // unimodal objective with a random vertex
            let h = move |x: f64| (x - c) * (x - c) + 0.1 * x;
            let (_, v) = minimize_scalar(h, 0.0, 1.0, &tol()).unwrap();
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            for _ in 0..1000 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                prop_assert!(v <= h(u) + 1e-9);
            }
        }

        #[test]
        fn integrate_is_additive(a in 0.0f64..0.3, b in 0.35f64..0.6, c in 0.65f64..1.0) {
            let h = |x: f64| (3.1 * x).sin() + x * x;
            let t = tol();
            let whole = integrate(h, a, c, &t).unwrap();
            let left = integrate(h, a, b, &t).unwrap();
            let right = integrate(h, b, c, &t).unwrap();
            prop_assert!((whole - (left + right)).abs() <= 2.0 * t.abs_tol + 1e-13);
        }
    }
}
