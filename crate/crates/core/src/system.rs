//! The scalar admissible system contract: a pair (f, g) with derivatives and
//! antiderivatives driving the recursion x <- f(g(x); eps), plus a numerical
//! admissibility auditor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::Tolerances;

pub type Map1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Map2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A scalar admissible system.
///
/// `f(x; eps)` maps `[0,1]^2 -> [0,1]` and is strictly increasing in both
/// arguments on (0,1]; `g` maps `[0,1] -> [0,1]` with `g' > 0` on (0,1);
/// both vanish appropriately at zero: f(0;eps) = f(x;0) = g(0) = 0.
///
/// `f_int` is F(x;eps) = ∫₀ˣ f(z;eps) dz and `g_int` is G(x) = ∫₀ˣ g(z) dz.
/// Models supply closed forms so potential values are exact; the derivative
/// sups, when known in closed form, make the Hessian bound K_{f,g} exact.
#[derive(Clone)]
pub struct ScalarSystem {
    name: String,
    f: Map2,
    df_dx: Map2,
    f_int: Map2,
    g: Map1,
    dg: Map1,
    d2g: Map1,
    g_int: Map1,
    sup_df: Option<f64>,
    sup_dg: Option<f64>,
    sup_d2g: Option<f64>,
    eps_root: Option<Map1>,
}

impl std::fmt::Debug for ScalarSystem {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ScalarSystem").field("name", &self.name).finish()
    }
}

impl ScalarSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        df_dx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f_int: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_int: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df_dx: Arc::new(df_dx),
            f_int: Arc::new(f_int),
            g: Arc::new(g),
            dg: Arc::new(dg),
            d2g: Arc::new(d2g),
            g_int: Arc::new(g_int),
            sup_df: None,
            sup_dg: None,
            sup_d2g: None,
            eps_root: None,
        }
    }

    /// Attach closed-form derivative sups: ‖∂f/∂x‖∞ over [0,1]² and
    /// ‖g'‖∞, ‖g''‖∞ over [0,1].
    pub fn with_derivative_sups(mut self, sup_df: f64, sup_dg: f64, sup_d2g: f64) -> Self {
        self.sup_df = Some(sup_df);
        self.sup_dg = Some(sup_dg);
        self.sup_d2g = Some(sup_d2g);
        self
    }

    /// Attach only the closed-form ‖∂f/∂x‖∞, leaving the g sups estimated.
    pub fn with_sup_df(mut self, sup_df: f64) -> Self {
        self.sup_df = Some(sup_df);
        self
    }

    /// Attach a closed-form epsilon-root x ↦ eps(x) (may exceed 1 where no
    /// root exists in [0,1]).
    pub fn with_eps_root(mut self, eps_root: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.eps_root = Some(Arc::new(eps_root));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f(&self, x: f64, eps: f64) -> f64 {
        (self.f)(x, eps)
    }

    pub fn df_dx(&self, x: f64, eps: f64) -> f64 {
        (self.df_dx)(x, eps)
    }

    /// F(x; eps) = ∫₀ˣ f(z; eps) dz
    pub fn f_int(&self, x: f64, eps: f64) -> f64 {
        (self.f_int)(x, eps)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn dg(&self, x: f64) -> f64 {
        (self.dg)(x)
    }

    pub fn d2g(&self, x: f64) -> f64 {
        (self.d2g)(x)
    }

    /// G(x) = ∫₀ˣ g(z) dz
    pub fn g_int(&self, x: f64) -> f64 {
        (self.g_int)(x)
    }

    pub fn sup_df(&self) -> Option<f64> {
        self.sup_df
    }

    pub fn sup_dg(&self) -> Option<f64> {
        self.sup_dg
    }

    pub fn sup_d2g(&self) -> Option<f64> {
        self.sup_d2g
    }

    /// Closed-form eps(x) if the model supplies one.
    pub fn eps_root_closed(&self, x: f64) -> Option<f64> {
        self.eps_root.as_ref().map(|r| r(x))
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::Domain { name, value: v });
    }
    Ok(())
}

/// One step of the recursion: f(g(x); eps).
pub fn recursion_step(sys: &ScalarSystem, x: f64, eps: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("eps", eps)?;
    Ok(sys.f(sys.g(x), eps))
}

/// Iterate the recursion from `x0` until the step size drops below
/// `abs_tol` or the iteration cap (`max_iter * 1000`) is reached.
///
/// Returns the final value and the number of steps taken. From x0 = 1 the
/// sequence is monotone non-increasing.
pub fn iterate_to_fixed_point(
    sys: &ScalarSystem,
    x0: f64,
    eps: f64,
    tol: &Tolerances,
) -> Result<(f64, u64)> {
    check_unit("x0", x0)?;
    check_unit("eps", eps)?;
    let cap = tol.max_iter as u64 * 1000;
    let mut x = x0;
    let mut iterations = 0;
    while iterations < cap {
        let next = sys.f(sys.g(x), eps);
        iterations += 1;
        let done = (next - x).abs() <= tol.abs_tol;
        x = next;
        if done {
            break;
        }
    }
    Ok((x, iterations))
}

/// A single admissibility violation: which property failed, at which sample
/// point, and the offending value.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub property: String,
    pub x: f64,
    pub eps: Option<f64>,
    pub observed: f64,
}

/// Outcome of the admissibility audit. `passed` iff `violations` is empty.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { passed: violations.is_empty(), violations }
    }

    /// Short summary of the first few violations for error messages.
    pub fn summary(&self) -> String {
        if self.passed {
            return "admissible".to_string();
        }
        let head: Vec<String> = self
            .violations
            .iter()
            .take(4)
            .map(|v| match v.eps {
                Some(e) => format!("{} at (x={:.6}, eps={:.6}): {:.3e}", v.property, v.x, e, v.observed),
                None => format!("{} at x={:.6}: {:.3e}", v.property, v.x, v.observed),
            })
            .collect();
        format!("{} violation(s): {}", self.violations.len(), head.join("; "))
    }
}

// Strictness is tested as an increase of at least 1e-12 per grid step of
// 1/4096; true strictness is not decidable by sampling.
const STRICT_PER_4096: f64 = 1e-12;
// Relative tolerance for central-difference consistency of the supplied
// derivatives/antiderivatives.
const FD_REL_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

fn fd_consistent(closed: f64, fd: f64) -> bool {
    (closed - fd).abs() <= FD_REL_TOL * closed.abs().max(fd.abs()).max(1.0)
}

/// Numerical audit of the admissibility conditions on a grid_n × grid_n
/// lattice: boundary values, strict monotonicity of f in both arguments,
/// g' > 0 on the open interval, and finite-difference consistency of all
/// supplied derivatives and antiderivatives.
///
/// Failures are reported, not thrown.
pub fn check_admissible(sys: &ScalarSystem, tol: &Tolerances) -> AdmissibilityReport {
    let n = tol.grid_n;
    let step = 1.0 / n as f64;
    let strict_min = STRICT_PER_4096 * (step * 4096.0);
    let grid = |k: usize| if k == n { 1.0 } else { k as f64 * step };

    // g-side checks are one-dimensional
    let mut violations: Vec<Violation> = Vec::new();
    let g0 = sys.g(0.0);
    if g0 != 0.0 {
        violations.push(Violation { property: "g(0)=0".into(), x: 0.0, eps: None, observed: g0 });
    }
    for k in 0..=n {
        let x = grid(k);
        let gx = sys.g(x);
        if !(0.0..=1.0).contains(&gx) {
            violations.push(Violation { property: "g range".into(), x, eps: None, observed: gx });
        }
        if x > 0.0 && x < 1.0 {
            let d = sys.dg(x);
            if !(d > 0.0) {
                violations.push(Violation { property: "g'>0".into(), x, eps: None, observed: d });
            }
        }
    }

    // f-side lattice checks, row per eps value, fanned out in parallel
    let row_violations = exec::map_range(n + 1, |ke| {
        let eps = grid(ke);
        let mut local: Vec<Violation> = Vec::new();
        let f0 = sys.f(0.0, eps);
        if f0 != 0.0 {
            local.push(Violation { property: "f(0;eps)=0".into(), x: 0.0, eps: Some(eps), observed: f0 });
        }
        let mut prev = f0;
        for kx in 0..=n {
            let x = grid(kx);
            let fx = sys.f(x, eps);
            if !(0.0..=1.0).contains(&fx) {
                local.push(Violation { property: "f range".into(), x, eps: Some(eps), observed: fx });
            }
            if eps == 0.0 && fx != 0.0 {
                local.push(Violation { property: "f(x;0)=0".into(), x, eps: Some(eps), observed: fx });
            }
            if kx > 0 && eps > 0.0 {
                let inc = fx - prev;
                if inc < strict_min {
                    local.push(Violation {
                        property: "f strictly increasing in x".into(),
                        x,
                        eps: Some(eps),
                        observed: inc,
                    });
                }
            }
            prev = fx;
        }
        local
    });
    for mut v in row_violations {
        violations.append(&mut v);
    }

    // monotonicity in eps along each x > 0 column (coarser: reuse lattice rows
    // would be O(n^2) memory; walk columns directly instead)
    let col_violations = exec::map_range(n, |kx0| {
        let x = grid(kx0 + 1);
        let mut local: Vec<Violation> = Vec::new();
        let mut prev = sys.f(x, 0.0);
        for ke in 1..=n {
            let eps = grid(ke);
            let fx = sys.f(x, eps);
            let inc = fx - prev;
            if inc < strict_min {
                local.push(Violation {
                    property: "f strictly increasing in eps".into(),
                    x,
                    eps: Some(eps),
                    observed: inc,
                });
            }
            prev = fx;
        }
        local
    });
    for mut v in col_violations {
        violations.append(&mut v);
    }

    // derivative / antiderivative consistency on a coarse sub-lattice
    let sub = 64.min(n);
    for kx in 0..=sub {
        let x = (kx as f64 / sub as f64).clamp(FD_STEP, 1.0 - FD_STEP);
        let dg_fd = (sys.g(x + FD_STEP) - sys.g(x - FD_STEP)) / (2.0 * FD_STEP);
        if !fd_consistent(sys.dg(x), dg_fd) {
            violations.push(Violation { property: "dg vs FD(g)".into(), x, eps: None, observed: sys.dg(x) - dg_fd });
        }
        let d2g_fd = (sys.dg(x + FD_STEP) - sys.dg(x - FD_STEP)) / (2.0 * FD_STEP);
        if !fd_consistent(sys.d2g(x), d2g_fd) {
            violations.push(Violation { property: "d2g vs FD(dg)".into(), x, eps: None, observed: sys.d2g(x) - d2g_fd });
        }
        let g_fd = (sys.g_int(x + FD_STEP) - sys.g_int(x - FD_STEP)) / (2.0 * FD_STEP);
        if !fd_consistent(sys.g(x), g_fd) {
            violations.push(Violation { property: "G' vs g".into(), x, eps: None, observed: sys.g(x) - g_fd });
        }
        for ke in 0..=sub {
            let eps = ke as f64 / sub as f64;
            let df_fd = (sys.f(x + FD_STEP, eps) - sys.f(x - FD_STEP, eps)) / (2.0 * FD_STEP);
            if !fd_consistent(sys.df_dx(x, eps), df_fd) {
                violations.push(Violation {
                    property: "df_dx vs FD(f)".into(),
                    x,
                    eps: Some(eps),
                    observed: sys.df_dx(x, eps) - df_fd,
                });
            }
            let f_fd = (sys.f_int(x + FD_STEP, eps) - sys.f_int(x - FD_STEP, eps)) / (2.0 * FD_STEP);
            if !fd_consistent(sys.f(x, eps), f_fd) {
                violations.push(Violation {
                    property: "F' vs f".into(),
                    x,
                    eps: Some(eps),
                    observed: sys.f(x, eps) - f_fd,
                });
            }
        }
    }

    // antiderivative base points
    let f_int0 = sys.f_int(0.0, 0.5);
    if f_int0 != 0.0 {
        violations.push(Violation { property: "F(0;eps)=0".into(), x: 0.0, eps: Some(0.5), observed: f_int0 });
    }
    let g_int0 = sys.g_int(0.0);
    if g_int0 != 0.0 {
        violations.push(Violation { property: "G(0)=0".into(), x: 0.0, eps: None, observed: g_int0 });
    }

    AdmissibilityReport::from_violations(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ldpc_bec, DegreeDistribution};

    fn sys36() -> ScalarSystem {
        ldpc_bec(&DegreeDistribution::regular(3, 6).unwrap()).unwrap()
    }

    fn small_tol() -> Tolerances {
        Tolerances { grid_n: 256, ..Tolerances::default() }
    }

    #[test]
    fn step_at_zero_is_zero() {
        let sys = sys36();
        assert_eq!(recursion_step(&sys, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn step_at_one_full_noise() {
        let sys = sys36();
        assert_eq!(recursion_step(&sys, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn step_midpoint_closed_form() {
        let sys = sys36();
        let v = recursion_step(&sys, 0.5, 0.5).unwrap();
        assert!((v - 0.46923828125).abs() <= 1e-15);
    }

    #[test]
    fn step_rejects_out_of_range() {
        let sys = sys36();
        assert!(matches!(recursion_step(&sys, 1.5, 0.5), Err(Error::Domain { .. })));
        assert!(matches!(recursion_step(&sys, 0.5, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn iterate_below_threshold_dies() {
        let sys = sys36();
        let (x, _) = iterate_to_fixed_point(&sys, 1.0, 0.40, &Tolerances::default()).unwrap();
        assert!(x.abs() <= 1e-10, "got {x}");
    }

    #[test]
    fn iterate_above_threshold_finds_nonzero_fp() {
        let sys = sys36();
        let (x, _) = iterate_to_fixed_point(&sys, 1.0, 0.45, &Tolerances::default()).unwrap();
        assert!((x - 0.355443307748).abs() <= 1e-9, "got {x}");
        // the result is itself a fixed point
        let residual = (x - sys.f(sys.g(x), 0.45)).abs();
        assert!(residual <= 1e-11);
    }

    #[test]
    fn iterate_from_zero_stays() {
        let sys = sys36();
        let (x, iters) = iterate_to_fixed_point(&sys, 0.0, 0.7, &Tolerances::default()).unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(iters, 1);
    }

    #[test]
    fn iterate_from_one_is_monotone() {
        let sys = sys36();
        let mut x: f64 = 1.0;
        for _ in 0..200 {
            let next = sys.f(sys.g(x), 0.45);
            assert!(next <= x + 1e-15);
            x = next;
        }
    }

    #[test]
    fn ldpc_system_is_admissible() {
        let report = check_admissible(&sys36(), &small_tol());
        assert!(report.passed, "{}", report.summary());
    }

    #[test]
    fn constant_g_fails_audit() {
        let sys = ScalarSystem::new(
            "broken",
            |x, e| e * x,
            |_, e| e,
            |x, e| e * x * x / 2.0,
            |_| 1.0,
            |_| 0.0,
            |_| 0.0,
            |x| x,
        );
        let report = check_admissible(&sys, &small_tol());
        assert!(!report.passed);
        let props: Vec<&str> = report.violations.iter().map(|v| v.property.as_str()).collect();
        assert!(props.iter().any(|p| p.contains("g(0)=0")));
        assert!(props.iter().any(|p| p.contains("g'>0")));
    }

    #[test]
    fn monotone_step_in_both_arguments() {
        let sys = sys36();
        let n = 31;
        for i in 0..n {
            for j in 0..n {
                let x = (i + 1) as f64 / (n + 1) as f64;
                let e = (j + 1) as f64 / (n + 1) as f64;
                let v = recursion_step(&sys, x, e).unwrap();
                assert!(recursion_step(&sys, x + 0.02, e).unwrap() >= v);
                assert!(recursion_step(&sys, x, e + 0.02).unwrap() >= v);
            }
        }
    }
}
