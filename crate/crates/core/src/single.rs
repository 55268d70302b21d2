//! Potential theory for the uncoupled system: U(x; eps), stationary points,
//! epsilon-roots, the single-system and potential thresholds, the energy
//! gap, the Hessian bound K_{f,g}, and the minimum coupling width.

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::{bisect, minimize_scalar, sup_abs, Bracket, Tolerances};
use crate::system::ScalarSystem;

/// Tolerance (in eps) for the potential-threshold bisection.
const EPS_BISECT_TOL: f64 = 1e-6;

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::Domain { name, value: v });
    }
    Ok(())
}

/// The single-system potential, evaluated by the closed form
/// U(x; eps) = x g(x) - G(x) - F(g(x); eps) (never by quadrature, so golden
/// values reproduce to machine precision).
pub fn potential(sys: &ScalarSystem, x: f64, eps: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("eps", eps)?;
    Ok(potential_unchecked(sys, x, eps))
}

pub(crate) fn potential_unchecked(sys: &ScalarSystem, x: f64, eps: f64) -> f64 {
    let gx = sys.g(x);
    x * gx - sys.g_int(x) - sys.f_int(gx, eps)
}

/// U'(x; eps) = (x - f(g(x); eps)) g'(x).
pub fn potential_derivative(sys: &ScalarSystem, x: f64, eps: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("eps", eps)?;
    Ok((x - sys.f(sys.g(x), eps)) * sys.dg(x))
}

/// Fixed-point classification. A fixed point is `Unstable` where the update
/// crosses from below to above the diagonal (h = x - f(g(x);eps) goes + to -)
/// and `Stable` on the opposite crossing; x = 0 is reported as `Zero`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryKind {
    Zero,
    Unstable,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub x: f64,
    pub potential: f64,
    pub kind: StationaryKind,
    /// Tangency (double root where h touches zero without crossing);
    /// happens exactly at eps = eps_s* where the pair merges.
    pub degenerate: bool,
}

/// All fixed points of the recursion at one eps, sorted ascending in x.
/// By the stationarity lemma these are exactly the stationary points of
/// the potential.
#[derive(Debug, Clone)]
pub struct StationaryPointSet {
    pub eps: f64,
    pub points: Vec<StationaryPoint>,
}

/// Scan h(x) = x - f(g(x); eps) on the grid, bracket every sign change, and
/// bisect each root. x = 0 is always present with kind `Zero`.
pub fn fixed_points(sys: &ScalarSystem, eps: f64, tol: &Tolerances) -> Result<StationaryPointSet> {
    check_unit("eps", eps)?;
    let h = |x: f64| x - sys.f(sys.g(x), eps);
    let n = tol.grid_n;
    let grid = |k: usize| if k == n { 1.0 } else { k as f64 / n as f64 };

    let mut points = vec![StationaryPoint {
        x: 0.0,
        potential: 0.0,
        kind: StationaryKind::Zero,
        degenerate: false,
    }];

    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        values.push(h(grid(k)));
    }

    let mut push_root = |x: f64, kind: StationaryKind, degenerate: bool| {
        let u = potential_unchecked(sys, x, eps);
        points.push(StationaryPoint { x, potential: u, kind, degenerate });
    };

    for k in 1..n {
        let (a, b) = (grid(k), grid(k + 1));
        let (ha, hb) = (values[k], values[k + 1]);
        if ha == 0.0 {
            // exact zero on an interior grid point; classify by neighbors
            let before = values[k - 1];
            let (kind, degenerate) = if before > 0.0 && hb < 0.0 {
                (StationaryKind::Unstable, false)
            } else if before < 0.0 && hb > 0.0 {
                (StationaryKind::Stable, false)
            } else {
                (StationaryKind::Unstable, true)
            };
            push_root(a, kind, degenerate);
        } else if hb != 0.0 && ha.signum() != hb.signum() {
            let r = bisect(h, Bracket::new(a, b)?, tol)?;
            let kind = if ha > 0.0 { StationaryKind::Unstable } else { StationaryKind::Stable };
            push_root(r, kind, false);
        }
    }
    if values[n] == 0.0 && values[n - 1] != 0.0 {
        let kind = if values[n - 1] > 0.0 { StationaryKind::Unstable } else { StationaryKind::Stable };
        // h(1) = 0 means x = 1 is a genuine fixed point (eps at the channel
        // boundary); a touch without crossing is degenerate as elsewhere
        push_root(1.0, kind, values[n - 1] > 0.0);
    }

    Ok(StationaryPointSet { eps, points })
}

/// The unique eps with x = f(g(x); eps), found by bisection in eps (the map
/// is strictly increasing in eps). Models with a closed form (LDPC, GLDPC)
/// supply it on the system and skip the search.
pub fn epsilon_root(sys: &ScalarSystem, x: f64) -> Result<f64> {
    check_unit("x", x)?;
    if x == 0.0 {
        return Err(Error::NoEpsilonRoot { x, fg1: 0.0 });
    }
    if let Some(e) = sys.eps_root_closed(x) {
        if e > 1.0 {
            return Err(Error::NoEpsilonRoot { x, fg1: sys.f(sys.g(x), 1.0) });
        }
        return Ok(e);
    }
    let gx = sys.g(x);
    let fg1 = sys.f(gx, 1.0);
    if fg1 < x {
        return Err(Error::NoEpsilonRoot { x, fg1 });
    }
    let tol = Tolerances::default();
    bisect(|e| x - sys.f(gx, e), Bracket::new(0.0, 1.0)?, &tol)
}

fn eps_root_value(sys: &ScalarSystem, x: f64) -> f64 {
    if let Some(e) = sys.eps_root_closed(x) {
        return e;
    }
    epsilon_root(sys, x).unwrap_or(f64::INFINITY)
}

/// The single-system threshold eps_s*: the infimum over x in (0,1] of the
/// eps-root eps(x) (equivalently the largest eps with U' > 0 on (0,1]).
pub fn single_threshold(sys: &ScalarSystem, tol: &Tolerances) -> f64 {
    let lo = 1.0 / tol.grid_n as f64;
    let (_, v) = minimize_scalar(|x| eps_root_value(sys, x), lo, 1.0, tol)
        .expect("non-empty interval");
    v.min(1.0)
}

/// The minimum unstable fixed point u(eps): the smallest x > 0 where
/// x - f(g(x); eps) first touches or crosses zero; 1 when the recursion
/// strictly contracts on all of (0,1).
pub fn min_unstable_fp(sys: &ScalarSystem, eps: f64, tol: &Tolerances) -> f64 {
    assert!((0.0..=1.0).contains(&eps), "eps={eps} outside [0,1]");
    let h = |x: f64| x - sys.f(sys.g(x), eps);
    let n = tol.grid_n;
    let mut prev = 1.0 / n as f64;
    let mut hp = h(prev);
    if hp <= 0.0 {
        return prev;
    }
    for k in 2..n {
        let x = k as f64 / n as f64;
        let hx = h(x);
        if hx <= 0.0 {
            if hx == 0.0 {
                return x;
            }
            return bisect(h, Bracket::new(prev, x).expect("ordered"), tol).unwrap_or(x);
        }
        prev = x;
        hp = hx;
    }
    let _ = hp;
    1.0
}

/// The energy gap Delta E(eps) = min over [u(eps), 1] of U(x; eps).
///
/// For eps <= eps_s* there is no unstable fixed point, u(eps) = 1, and the
/// value degenerates to U(1; eps).
pub fn energy_gap(sys: &ScalarSystem, eps: f64, tol: &Tolerances) -> f64 {
    let u = min_unstable_fp(sys, eps, tol);
    if u >= 1.0 {
        return potential_unchecked(sys, 1.0, eps);
    }
    let (_, v) = minimize_scalar(|x| potential_unchecked(sys, x, eps), u, 1.0, tol)
        .expect("non-empty interval");
    v
}

/// A threshold value that may have been capped at the channel boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// True when the defining predicate still holds at eps = 1, i.e. there
    /// is no transition below the boundary.
    pub capped_at_one: bool,
}

/// The potential threshold eps*: the largest eps with a non-negative energy
/// gap. Bisection on the predicate Delta E(eps) >= 0 over [eps_s*, 1]; the
/// predicate is monotone because the potential is strictly decreasing in eps.
pub fn potential_threshold(sys: &ScalarSystem, tol: &Tolerances) -> Threshold {
    let mut lo = single_threshold(sys, tol).min(1.0);
    if energy_gap(sys, lo, tol) < 0.0 {
        // eps_s* resolved slightly high; nudge into the feasible region
        lo = (lo - 10.0 * EPS_BISECT_TOL).max(0.0);
    }
    let mut hi = 1.0;
    if energy_gap(sys, hi, tol) >= 0.0 {
        return Threshold { value: 1.0, capped_at_one: true };
    }
    while hi - lo > EPS_BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if energy_gap(sys, mid, tol) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Threshold { value: 0.5 * (lo + hi), capped_at_one: false }
}

/// The coupling-independent Hessian bound
/// K_{f,g} = ‖g'‖∞ + ‖g'‖∞² ‖f'‖∞ + ‖g''‖∞.
///
/// Closed-form sups on the system are used when present (making K exact for
/// polynomial models); the rest are estimated by grid scan plus refinement.
/// ‖f'‖∞ is the sup of |∂f/∂x| over both arguments (x, eps) in [0,1]².
pub fn hessian_bound(sys: &ScalarSystem, tol: &Tolerances) -> f64 {
    let sup_dg = sys
        .sup_dg()
        .unwrap_or_else(|| sup_abs(|x| sys.dg(x), 0.0, 1.0, tol).unwrap_or(f64::NAN));
    let sup_d2g = sys
        .sup_d2g()
        .unwrap_or_else(|| sup_abs(|x| sys.d2g(x), 0.0, 1.0, tol).unwrap_or(f64::NAN));
    let sup_df = sys.sup_df().unwrap_or_else(|| {
        // 2-D sup: refine over x at each eps of a coarse grid
        let m = 128.min(tol.grid_n);
        let mut best = f64::NEG_INFINITY;
        for j in 0..=m {
            let e = j as f64 / m as f64;
            let v = sup_abs(|x| sys.df_dx(x, e), 0.0, 1.0, tol).unwrap_or(f64::NAN);
            if v > best {
                best = v;
            }
        }
        best
    });
    sup_dg + sup_dg * sup_dg * sup_df + sup_d2g
}

/// The smallest coupling width strictly exceeding K_{f,g} / Delta E(eps):
/// floor(K / Delta E) + 1. Requires a positive gap (eps < eps*).
pub fn min_width(sys: &ScalarSystem, eps: f64, tol: &Tolerances) -> Result<u64> {
    let gap = energy_gap(sys, eps, tol);
    if gap <= 0.0 {
        return Err(Error::NoPositiveGap { eps, gap });
    }
    let k = hessian_bound(sys, tol);
    Ok((k / gap).floor() as u64 + 1)
}

/// Tabulated potential curves for a list of eps values (one x-grid shared by
/// all columns), with the stationary points of each curve marked.
#[derive(Debug, Clone)]
pub struct PotentialCurve {
    pub xs: Vec<f64>,
    pub eps: Vec<f64>,
    /// values[j][k] = U(xs[k]; eps[j])
    pub values: Vec<Vec<f64>>,
    pub stationary: Vec<StationaryPointSet>,
}

pub fn potential_curve(
    sys: &ScalarSystem,
    eps_list: &[f64],
    x_grid_n: usize,
    tol: &Tolerances,
) -> Result<PotentialCurve> {
    for &e in eps_list {
        check_unit("eps", e)?;
    }
    let xs: Vec<f64> = (0..=x_grid_n)
        .map(|k| if k == x_grid_n { 1.0 } else { k as f64 / x_grid_n as f64 })
        .collect();
    let columns = exec::map_range(eps_list.len(), |j| {
        let e = eps_list[j];
        let values: Vec<f64> = xs.iter().map(|&x| potential_unchecked(sys, x, e)).collect();
        let stationary = fixed_points(sys, e, tol).expect("eps validated");
        (values, stationary)
    });
    let mut values = Vec::with_capacity(eps_list.len());
    let mut stationary = Vec::with_capacity(eps_list.len());
    for (v, s) in columns {
        values.push(v);
        stationary.push(s);
    }
    Ok(PotentialCurve { xs, eps: eps_list.to_vec(), values, stationary })
}

impl PotentialCurve {
    /// CSV body: header `x,U_eps1,U_eps2,...`, one row per grid point,
    /// 17 significant digits.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("x");
        for j in 1..=self.eps.len() {
            out.push_str(&format!(",U_eps{j}"));
        }
        out.push('\n');
        for (k, &x) in self.xs.iter().enumerate() {
            out.push_str(&format_float(x));
            for col in &self.values {
                out.push(',');
                out.push_str(&format_float(col[k]));
            }
            out.push('\n');
        }
        out
    }

    /// Companion CSV of stationary points: `eps,x,U,kind`.
    pub fn stationary_csv(&self) -> String {
        let mut out = String::from("eps,x,U,kind\n");
        for set in &self.stationary {
            for p in &set.points {
                if p.kind == StationaryKind::Zero {
                    continue;
                }
                let kind = match (p.kind, p.degenerate) {
                    (StationaryKind::Unstable, true) => "degenerate",
                    (StationaryKind::Unstable, false) => "unstable",
                    (StationaryKind::Stable, _) => "stable",
                    (StationaryKind::Zero, _) => unreachable!(),
                };
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    format_float(set.eps),
                    format_float(p.x),
                    format_float(p.potential),
                    kind
                ));
            }
        }
        out
    }
}

/// 17 significant digits: round-trip exact for f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row of the threshold table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub eps: f64,
    pub min_unstable: f64,
    pub energy_gap: f64,
    /// None when the gap is not positive (eps >= eps*).
    pub min_width: Option<u64>,
}

/// Threshold summary for one system: eps_s*, eps*, K_{f,g}, and per-eps
/// rows of u(eps), Delta E(eps), and the Theorem-style width bound.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub system: String,
    pub eps_single: f64,
    pub eps_potential: f64,
    pub potential_capped: bool,
    pub hessian_bound: f64,
    pub rows: Vec<GapRow>,
}

pub fn threshold_report(sys: &ScalarSystem, eps_list: &[f64], tol: &Tolerances) -> Result<ThresholdReport> {
    for &e in eps_list {
        check_unit("eps", e)?;
    }
    let eps_single = single_threshold(sys, tol);
    let pt = potential_threshold(sys, tol);
    let k = hessian_bound(sys, tol);
    let rows = exec::map_range(eps_list.len(), |j| {
        let eps = eps_list[j];
        let u = min_unstable_fp(sys, eps, tol);
        let gap = energy_gap(sys, eps, tol);
        let min_width = (gap > 0.0).then(|| (k / gap).floor() as u64 + 1);
        GapRow { eps, min_unstable: u, energy_gap: gap, min_width }
    });
    Ok(ThresholdReport {
        system: sys.name().to_string(),
        eps_single,
        eps_potential: pt.value,
        potential_capped: pt.capped_at_one,
        hessian_bound: k,
        rows,
    })
}

impl ThresholdReport {
    /// CSV body: summary comment row plus `eps,u,energy_gap,w_min` rows.
    pub fn csv(&self) -> String {
        let mut out = format!(
            "eps_s_star,eps_star,K\n{},{},{}\neps,u,energy_gap,w_min\n",
            format_float(self.eps_single),
            format_float(self.eps_potential),
            format_float(self.hessian_bound),
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(r.eps),
                format_float(r.min_unstable),
                format_float(r.energy_gap),
                r.min_width.map_or_else(|| "-".to_string(), |w| w.to_string())
            ));
        }
        out
    }
}
