//! Numerical verification suite: every module invariant and the main
//! theorem, runnable at desk scale. The CLI `verify` command and the
//! acceptance tests both drive these checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupled::{
    coupled_hessian_norm, empirical_sc_threshold, random_structured_state, sc_run_basic,
    sc_run_one_sided, sc_step_basic, sc_step_basic_scalar, shift_energy_check, CoupledState,
    CouplingKind, CouplingMatrix,
};
use crate::exec;
use crate::models::{
    gldpc, gldpc_threshold, gldpc_trial_entropy, isi_erasure, ldpc_bec, maxwell_threshold,
    DegreeDistribution, GldpcParams, IsiChannel,
};
use crate::numerics::Tolerances;
use crate::single::{
    energy_gap, fixed_points, hessian_bound, min_width, potential_derivative, potential_threshold,
    potential_unchecked, single_threshold,
};
use crate::system::{check_admissible, iterate_to_fixed_point, ScalarSystem};

/// Outcome of one property check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed violation of the property (0 when clean).
    pub max_violation: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, max_violation: f64, detail: String) -> Self {
        Self { name, passed, max_violation, detail }
    }
}

/// Knobs for the verification suite.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub tol: Tolerances,
    /// Test hook: scale the coupling band value in the shift-energy check
    /// (row sums leave 1). Used as a negative control.
    pub corrupt_band: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 0, tol: Tolerances::default(), corrupt_band: None }
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "admissible",
    "lemma1-monotone",
    "lemma1-fp-sp",
    "lemma2-monotone",
    "lemma3-shift-norm",
    "shift-energy",
    "lemma5-hessian",
    "lemma6-maxwell",
    "gldpc-root",
    "isi-reduction",
    "w1-degenerate",
    "dual-form",
    "theorem1",
];

fn sys36() -> ScalarSystem {
    ldpc_bec(&DegreeDistribution::regular(3, 6).unwrap()).unwrap()
}

fn sys_gldpc() -> ScalarSystem {
    gldpc(GldpcParams::new(15, 3).unwrap()).unwrap()
}

/// Run every registered check (or the ones whose name contains `filter`).
pub fn run_checks(cfg: &VerifyConfig, filter: Option<&str>) -> Vec<CheckResult> {
    let selected: Vec<&str> = CHECK_NAMES
        .iter()
        .copied()
        .filter(|n| filter.map_or(true, |f| n.contains(f)))
        .collect();
    selected
        .into_iter()
        .map(|name| match name {
            "admissible" => check_admissibility(cfg),
            "lemma1-monotone" => check_lemma1_monotone(cfg),
            "lemma1-fp-sp" => check_lemma1_fp_sp(cfg),
            "lemma2-monotone" => check_lemma2(cfg),
            "lemma3-shift-norm" => check_lemma3(cfg),
            "shift-energy" => check_shift_energy(cfg),
            "lemma5-hessian" => check_hessian(cfg),
            "lemma6-maxwell" => check_maxwell(cfg),
            "gldpc-root" => check_gldpc_root(cfg),
            "isi-reduction" => check_isi_reduction(cfg),
            "w1-degenerate" => check_w1_degenerate(cfg),
            "dual-form" => check_dual_form(cfg),
            "theorem1" => check_theorem1(cfg),
            _ => unreachable!(),
        })
        .collect()
}

/// All shipped systems pass the admissibility audit.
pub fn check_admissibility(cfg: &VerifyConfig) -> CheckResult {
    let audit_tol = Tolerances { grid_n: cfg.tol.grid_n.min(512), ..cfg.tol };
    let dd36 = DegreeDistribution::regular(3, 6).unwrap();
    let systems: Vec<ScalarSystem> = vec![
        sys36(),
        ldpc_bec(&DegreeDistribution::regular(3, 5).unwrap()).unwrap(),
        ldpc_bec(&DegreeDistribution::regular(4, 8).unwrap()).unwrap(),
        sys_gldpc(),
        gldpc(GldpcParams::new(31, 4).unwrap()).unwrap(),
        isi_erasure(&dd36, &IsiChannel::memoryless()).unwrap(),
        isi_erasure(&dd36, &IsiChannel::linear()).unwrap(),
    ];
    let mut failed = Vec::new();
    for sys in &systems {
        let report = check_admissible(sys, &audit_tol);
        if !report.passed {
            failed.push(format!("{}: {}", sys.name(), report.summary()));
        }
    }
    CheckResult::new(
        "admissible",
        failed.is_empty(),
        failed.len() as f64,
        if failed.is_empty() {
            format!("{} systems pass the audit", systems.len())
        } else {
            failed.join(" | ")
        },
    )
}

/// Lemma: U(x; eps) is strictly decreasing in eps for x > 0.
pub fn check_lemma1_monotone(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let n = 512usize;
    let worst = exec::map_range(n, |kx| {
        let x = (kx + 1) as f64 / n as f64;
        let mut worst = f64::NEG_INFINITY;
        let mut prev = potential_unchecked(&sys, x, 1.0 / n as f64);
        for ke in 2..=n {
            let eps = ke as f64 / n as f64;
            let v = potential_unchecked(&sys, x, eps);
            worst = worst.max(v - prev); // must be negative
            prev = v;
        }
        worst
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    CheckResult::new(
        "lemma1-monotone",
        worst <= 1e-8 && worst < 0.0,
        worst.max(0.0),
        format!("max U(x;eps+) - U(x;eps) over 512x512 grid = {worst:.3e} (must stay < 0)"),
    )
}

/// Lemma: fixed points of the recursion are exactly the stationary points
/// of the potential. Both directions checked on scan-found roots.
pub fn check_lemma1_fp_sp(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let n = 512usize;
    let tol = cfg.tol;
    let worst = exec::map_range(n, |ke| {
        let eps = (ke + 1) as f64 / n as f64;
        let mut worst = 0.0f64;
        // direction 1: every fixed point is a stationary point
        let set = fixed_points(&sys, eps, &tol).expect("eps in range");
        for p in &set.points {
            let du = potential_derivative(&sys, p.x, eps).expect("in range");
            worst = worst.max(du.abs());
        }
        // direction 2: every interior root of U' solves the fixed-point
        // equation (endpoints excluded: g' vanishes at x = 1 for smooth
        // check profiles, a stationary point with no fixed-point meaning)
        let grid = 512;
        let mut prev_x = 1.0 / grid as f64;
        let mut prev_v = potential_derivative(&sys, prev_x, eps).unwrap();
        for k in 2..grid {
            let x = k as f64 / grid as f64;
            let v = potential_derivative(&sys, x, eps).unwrap();
            if prev_v != 0.0 && v != 0.0 && prev_v.signum() != v.signum() {
                let r = crate::numerics::bisect(
                    |z| potential_derivative(&sys, z, eps).unwrap(),
                    crate::numerics::Bracket::new(prev_x, x).unwrap(),
                    &tol,
                )
                .unwrap_or(0.5 * (prev_x + x));
                let h = r - sys.f(sys.g(r), eps);
                worst = worst.max(h.abs());
            }
            prev_x = x;
            prev_v = v;
        }
        worst
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    CheckResult::new(
        "lemma1-fp-sp",
        worst <= 1e-8,
        worst,
        format!("max cross-residual over 512 eps values = {worst:.3e}"),
    )
}

fn lemma2_cases() -> Vec<(u32, u32, f64)> {
    let mut cases = Vec::new();
    for &(l, w) in &[(16u32, 2u32), (16, 3), (8, 5)] {
        for &eps in &[0.40, 0.47, 0.55] {
            cases.push((l, w, eps));
        }
    }
    cases
}

/// Lemma: both recursions decrease component-wise per step, the one-sided
/// fixed point dominates the basic one on the shared range, and the
/// one-sided fixed point is non-decreasing in position.
pub fn check_lemma2(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let tol = cfg.tol;
    let cases = lemma2_cases();
    let results = exec::map_range(cases.len(), |k| {
        let (l, w, eps) = cases[k];
        let basic = sc_run_basic(&sys, l, w, eps, &tol).expect("valid run");
        let one_sided = sc_run_one_sided(&sys, l, w, eps, &tol).expect("valid run");
        let mut worst = basic
            .step_monotonicity_violation
            .max(one_sided.step_monotonicity_violation);
        for p in -(l as i64)..=(l as i64 + w as i64 - 1) {
            let gap = basic.fixed_point.value_at(p) - one_sided.fixed_point.value_at(p);
            worst = worst.max(gap); // must be <= 0
        }
        for pair in one_sided.fixed_point.values.windows(2) {
            worst = worst.max(pair[0] - pair[1]);
        }
        worst
    });
    let worst = results.into_iter().fold(f64::NEG_INFINITY, f64::max);
    CheckResult::new(
        "lemma2-monotone",
        worst <= 1e-9,
        worst.max(0.0),
        format!("max violation over {} runs = {worst:.3e}", 2 * lemma2_cases().len()),
    )
}

/// Lemma: for non-decreasing window averages, the shift moves no entry by
/// more than 1/w and the 1-norm of the shift difference telescopes to x_n.
pub fn check_lemma3(cfg: &VerifyConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let trials = cfg.trials.max(1);
    for _ in 0..trials {
        let w = *[2usize, 3, 5, 8].get(rng.gen_range(0..4)).unwrap();
        let n = rng.gen_range(w + 1..=256);
        let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // window average with zero left padding keeps x non-decreasing
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..w {
                    if i >= j {
                        acc += z[i - j];
                    }
                }
                acc / w as f64
            })
            .collect();
        let mut sx = vec![0.0; n];
        sx[1..].copy_from_slice(&x[..n - 1]);
        let inf: f64 = x.iter().zip(&sx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let one: f64 = x.iter().zip(&sx).map(|(a, b)| (a - b).abs()).sum();
        worst = worst.max(inf - 1.0 / w as f64);
        worst = worst.max((one - x[n - 1]).abs() - 1e-12);
    }
    CheckResult::new(
        "lemma3-shift-norm",
        worst <= 1e-12,
        worst.max(0.0),
        format!("max norm-bound violation over {trials} vectors = {worst:.3e}"),
    )
}

fn shift_energy_combos() -> Vec<(u32, u32)> {
    vec![(8, 2), (8, 3), (8, 5), (16, 2), (16, 3), (16, 5)]
}

/// Lemma: shifting a structurally valid one-sided state changes the coupled
/// potential by exactly minus the single-system potential at x_{i0}.
pub fn check_shift_energy(cfg: &VerifyConfig) -> CheckResult {
    let systems = [sys36(), sys_gldpc()];
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for (si, sys) in systems.iter().enumerate() {
        for (l, w) in shift_energy_combos() {
            let mut m = CouplingMatrix::one_sided(l, w).expect("valid dims");
            if let Some(scale) = cfg.corrupt_band {
                m = m.with_band_value(scale / w as f64);
            }
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed ^ (si as u64) << 32 ^ ((l as u64) << 8) ^ w as u64);
            for _ in 0..cfg.trials {
                let state = random_structured_state(&m, &mut rng);
                let eps = rng.gen_range(0.0..1.0);
                let (du, ms) = shift_energy_check(sys, &state, eps, &m).expect("structured state");
                worst = worst.max((du - ms).abs());
                count += 1;
            }
        }
    }
    CheckResult::new(
        "shift-energy",
        worst <= 1e-9,
        worst,
        format!("max |dU + U(x_i0;eps)| over {count} states = {worst:.3e}"),
    )
}

/// Lemma: the coupled Hessian infinity norm never exceeds K_{f,g},
/// independent of L and w; K is exactly 75 for the (3,6) ensemble.
pub fn check_hessian(cfg: &VerifyConfig) -> CheckResult {
    let systems = [sys36(), sys_gldpc()];
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let mut passed = true;
    for (si, sys) in systems.iter().enumerate() {
        let k = hessian_bound(sys, &cfg.tol);
        if si == 0 && k != 75.0 {
            passed = false;
            detail.push_str(&format!("K(3,6) = {k}, expected exactly 75; "));
        }
        let mut sys_worst = 0.0f64;
        for (l, w) in shift_energy_combos() {
            let m = CouplingMatrix::one_sided(l, w).expect("valid dims");
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xabcd ^ (si as u64) << 32 ^ ((l as u64) << 8) ^ w as u64);
            for _ in 0..cfg.trials {
                let state = random_structured_state(&m, &mut rng);
                let eps = rng.gen_range(0.0..1.0);
                let norm = coupled_hessian_norm(sys, &state, eps, &m).expect("valid dims");
                sys_worst = sys_worst.max(norm - k);
            }
        }
        detail.push_str(&format!("{}: max(norm - K) = {sys_worst:.3e}; ", sys.name()));
        worst = worst.max(sys_worst);
    }
    CheckResult::new("lemma5-hessian", passed && worst <= 1e-9, worst.max(0.0), detail)
}

/// Lemma: the potential threshold equals the Maxwell threshold for LDPC
/// ensembles on the BEC.
pub fn check_maxwell(cfg: &VerifyConfig) -> CheckResult {
    let cases = [(3u32, 5u32), (3, 6), (4, 8)];
    let results = exec::map_range(cases.len(), |k| {
        let (l, r) = cases[k];
        let dd = DegreeDistribution::regular(l, r).unwrap();
        let sys = ldpc_bec(&dd).unwrap();
        let mx = maxwell_threshold(&dd, &cfg.tol).unwrap();
        let pt = potential_threshold(&sys, &cfg.tol);
        ((l, r), (mx.value - pt.value).abs())
    });
    let worst = results.iter().map(|&(_, d)| d).fold(0.0f64, f64::max);
    let detail = results
        .iter()
        .map(|((l, r), d)| format!("({l},{r}): |eps*-eps_Max| = {d:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    CheckResult::new("lemma6-maxwell", worst <= 1e-5, worst, detail)
}

/// GLDPC lemma: the trial entropy changes sign exactly once on (1e-6, 1]
/// and eps(x̄) equals the potential threshold.
pub fn check_gldpc_root(cfg: &VerifyConfig) -> CheckResult {
    let pairs = [(7u32, 2u32), (7, 3), (15, 2), (15, 3), (15, 7), (31, 4)];
    let mut worst = 0.0f64;
    let mut passed = true;
    let mut notes = Vec::new();
    for (n, t) in pairs {
        let p = GldpcParams::new(n, t).unwrap();
        let mut sign_changes = 0usize;
        let scan = 10_000usize;
        let mut prev = gldpc_trial_entropy(p, 1e-6);
        for k in 1..=scan {
            let x = 1e-6 + (1.0 - 1e-6) * k as f64 / scan as f64;
            let v = gldpc_trial_entropy(p, x);
            if prev.signum() != v.signum() && prev != 0.0 && v != 0.0 {
                sign_changes += 1;
            }
            prev = v;
        }
        if sign_changes != 1 {
            passed = false;
            notes.push(format!("({n},{t}): {sign_changes} sign changes"));
            continue;
        }
        if matches!((n, t), (7, 2) | (15, 3) | (31, 4)) {
            let eps_bar = gldpc_threshold(p, &cfg.tol).unwrap();
            let pt = potential_threshold(&gldpc(p).unwrap(), &cfg.tol);
            let d = (eps_bar - pt.value).abs();
            worst = worst.max(d);
            notes.push(format!("({n},{t}): |eps_bar - eps*| = {d:.2e}"));
        }
    }
    CheckResult::new("gldpc-root", passed && worst <= 1e-5, worst, notes.join(", "))
}

/// With the memoryless detector, the ISI system is the plain LDPC system:
/// potentials, thresholds, and coupled runs agree.
pub fn check_isi_reduction(cfg: &VerifyConfig) -> CheckResult {
    let dd = DegreeDistribution::regular(3, 6).unwrap();
    let isi = isi_erasure(&dd, &IsiChannel::memoryless()).unwrap();
    let ldpc = ldpc_bec(&dd).unwrap();
    let tol = cfg.tol;
    let mut worst = 0.0f64;
    for kx in 0..=40 {
        for ke in 0..=40 {
            let (x, e) = (kx as f64 / 40.0, ke as f64 / 40.0);
            worst = worst.max(
                (potential_unchecked(&isi, x, e) - potential_unchecked(&ldpc, x, e)).abs(),
            );
        }
    }
    worst = worst.max((single_threshold(&isi, &tol) - single_threshold(&ldpc, &tol)).abs());
    worst = worst
        .max((potential_threshold(&isi, &tol).value - potential_threshold(&ldpc, &tol).value).abs());
    worst = worst.max((energy_gap(&isi, 0.45, &tol) - energy_gap(&ldpc, 0.45, &tol)).abs());
    let run_isi = sc_run_basic(&isi, 8, 3, 0.47, &tol).unwrap();
    let run_ldpc = sc_run_basic(&ldpc, 8, 3, 0.47, &tol).unwrap();
    for (a, b) in run_isi.fixed_point.values.iter().zip(&run_ldpc.fixed_point.values) {
        worst = worst.max((a - b).abs());
    }
    CheckResult::new(
        "isi-reduction",
        worst <= 1e-8,
        worst,
        format!("max discrepancy vs plain LDPC = {worst:.3e}"),
    )
}

/// The w = 1 coupled system is 2L+1 independent copies of the uncoupled
/// recursion.
pub fn check_w1_degenerate(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let tol = cfg.tol;
    let mut worst = 0.0f64;
    for eps in [0.40, 0.45, 0.55] {
        let run = sc_run_basic(&sys, 8, 1, eps, &tol).unwrap();
        let (single, _) = iterate_to_fixed_point(&sys, 1.0, eps, &tol).unwrap();
        for &v in &run.fixed_point.values {
            worst = worst.max((v - single).abs());
        }
    }
    CheckResult::new(
        "w1-degenerate",
        worst <= 1e-10,
        worst,
        format!("max |coupled(w=1) - uncoupled| = {worst:.3e}"),
    )
}

/// The matrix form of the basic step agrees with the literal scalar double
/// sum to transcription precision.
pub fn check_dual_form(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd0a1);
    let mut worst = 0.0f64;
    let trials = cfg.trials.clamp(1, 200);
    for _ in 0..trials {
        let l = rng.gen_range(2u32..=12);
        let w = rng.gen_range(1u32..=6);
        let m = CouplingMatrix::basic(l, w).unwrap();
        let state = CoupledState {
            values: (0..m.cols).map(|_| rng.gen_range(0.0..1.0)).collect(),
            first_index: -(l as i64),
            kind: CouplingKind::Basic,
        };
        let eps = rng.gen_range(0.0..1.0);
        let a = sc_step_basic(&sys, &state, eps, &m).unwrap();
        let b = sc_step_basic_scalar(&sys, &state, eps, l, w).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
    }
    CheckResult::new(
        "dual-form",
        worst <= 1e-12,
        worst,
        format!("max |matrix - double-sum| over {trials} random states = {worst:.3e}"),
    )
}

/// Theorem, end to end: at eps = 0.45 < eps* with w just above
/// K_{f,g}/DeltaE(eps) and L = 2w, both coupled recursions collapse to zero.
pub fn check_theorem1(cfg: &VerifyConfig) -> CheckResult {
    let sys = sys36();
    let tol = cfg.tol;
    let eps = 0.45;
    let w = match min_width(&sys, eps, &tol) {
        Ok(w) => w as u32,
        Err(e) => return CheckResult::new("theorem1", false, f64::NAN, e.to_string()),
    };
    let l = 2 * w;
    let basic = sc_run_basic(&sys, l, w, eps, &tol).expect("valid dims");
    let one_sided = sc_run_one_sided(&sys, l, w, eps, &tol).expect("valid dims");
    let worst = basic.fixed_point.max_entry().max(one_sided.fixed_point.max_entry());
    let passed = basic.converged_to_zero && one_sided.converged_to_zero;
    CheckResult::new(
        "theorem1",
        passed,
        worst,
        format!(
            "w_min = {w}, L = {l}: basic |x| = {:.2e} ({} iters), one-sided |x| = {:.2e} ({} iters)",
            basic.fixed_point.max_entry(),
            basic.iterations,
            one_sided.fixed_point.max_entry(),
            one_sided.iterations
        ),
    )
}

/// Empirical saturation sweep used by the acceptance suite: thresholds of
/// the basic recursion at fixed L for a list of widths.
pub fn saturation_sweep(sys: &ScalarSystem, l: u32, widths: &[u32], tol: &Tolerances) -> Vec<f64> {
    widths.iter().map(|&w| empirical_sc_threshold(sys, l, w, tol)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> VerifyConfig {
        VerifyConfig { trials: 10, ..VerifyConfig::default() }
    }

    #[test]
    fn lemma3_clean() {
        let r = check_lemma3(&quick_cfg());
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn dual_form_clean() {
        let r = check_dual_form(&quick_cfg());
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn w1_degenerate_clean() {
        let r = check_w1_degenerate(&quick_cfg());
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn corrupted_band_fails_shift_energy() {
        let cfg = VerifyConfig { trials: 3, corrupt_band: Some(1.05), ..VerifyConfig::default() };
        let r = check_shift_energy(&cfg);
        assert!(!r.passed, "negative control must fail: {}", r.detail);
    }

    #[test]
    fn filter_selects_checks() {
        let names: Vec<&str> = CHECK_NAMES.iter().copied().filter(|n| n.contains("lemma1")).collect();
        assert_eq!(names.len(), 2);
    }
}
