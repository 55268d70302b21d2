//! Spatially-coupled machinery: coupling matrices, the basic and one-sided
//! vector recursions, the coupled potential, shift-operator identities, the
//! coupled Hessian norm, and the empirical coupled threshold.

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::Tolerances;
use crate::single::format_float;
use crate::system::ScalarSystem;

/// Iteration cap for coupled runs.
pub const SC_ITERATION_CAP: u64 = 1_000_000;
/// A converged state counts as zero when its sup norm is below this.
pub const SC_ZERO_THRESHOLD: f64 = 1e-8;
/// Tolerance (in eps) of the empirical threshold search.
pub const SC_EPS_SEARCH_TOL: f64 = 1e-4;

// Above this row*band size, matrix products switch from direct window sums
// to prefix sums (O(n) per product instead of O(n*w)).
const PREFIX_SUM_CUTOFF: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Basic,
    OneSided,
}

/// Banded averaging matrix with entries `band_value` (normally 1/w) on a
/// width-w band. Stored as a band descriptor, never dense.
///
/// * basic: (2L+1) x (2L+w); row i covers columns i..i+w-1.
/// * one-sided: square of side L+3w+i0+1 with i0 = floor((w-1)/2); row i
///   covers columns i..min(i+w-1, side-1), so the trailing w-1 rows are
///   progressively truncated and the final row is a single 1/w entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub kind: CouplingKind,
    pub l: u32,
    pub w: u32,
    pub rows: usize,
    pub cols: usize,
    band_value: f64,
}

impl CouplingMatrix {
    /// The basic averaging matrix of the two-sided coupled chain.
    /// w = 1 degenerates to uncoupled copies and is allowed but flagged
    /// through [`CouplingMatrix::degenerate`].
    pub fn basic(l: u32, w: u32) -> Result<Self> {
        Self::validate(l, w)?;
        Ok(Self {
            kind: CouplingKind::Basic,
            l,
            w,
            rows: 2 * l as usize + 1,
            cols: 2 * l as usize + w as usize,
            band_value: 1.0 / w as f64,
        })
    }

    /// The square one-sided matrix with truncated trailing rows.
    pub fn one_sided(l: u32, w: u32) -> Result<Self> {
        Self::validate(l, w)?;
        let side = l as usize + 3 * w as usize + Self::i0_of(w) + 1;
        Ok(Self {
            kind: CouplingKind::OneSided,
            l,
            w,
            rows: side,
            cols: side,
            band_value: 1.0 / w as f64,
        })
    }

    fn validate(l: u32, w: u32) -> Result<()> {
        if l < 1 {
            return Err(Error::InvalidParameter(format!("coupling needs L >= 1, got {l}")));
        }
        if w < 1 {
            return Err(Error::InvalidParameter("coupling width w must be >= 1".into()));
        }
        Ok(())
    }

    fn i0_of(w: u32) -> usize {
        ((w - 1) / 2) as usize
    }

    /// Position of the maximum element of the one-sided state vector.
    pub fn i0(&self) -> i64 {
        Self::i0_of(self.w) as i64
    }

    /// w = 1 is the uncoupled system.
    pub fn degenerate(&self) -> bool {
        self.w == 1
    }

    /// Test hook: replace the band value (breaking the row-sum structure) to
    /// drive negative controls in the verification suite.
    #[doc(hidden)]
    pub fn with_band_value(mut self, v: f64) -> Self {
        self.band_value = v;
        self
    }

    fn row_span(&self, i: usize) -> (usize, usize) {
        let w = self.w as usize;
        match self.kind {
            CouplingKind::Basic => (i, i + w),
            CouplingKind::OneSided => (i, (i + w).min(self.cols)),
        }
    }

    /// A v (length `rows` from length `cols`).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { state: v.len(), expected: self.cols });
        }
        let w = self.w as usize;
        if self.rows * w <= PREFIX_SUM_CUTOFF {
            Ok((0..self.rows)
                .map(|i| {
                    let (a, b) = self.row_span(i);
                    self.band_value * v[a..b].iter().sum::<f64>()
                })
                .collect())
        } else {
            let prefix = prefix_sums(v);
            Ok((0..self.rows)
                .map(|i| {
                    let (a, b) = self.row_span(i);
                    self.band_value * (prefix[b] - prefix[a])
                })
                .collect())
        }
    }

    /// Aᵀ v (length `cols` from length `rows`). Column j is covered by rows
    /// max(0, j-w+1)..=min(j, rows-1); right-edge truncation removes no
    /// in-range columns, so the transpose band is clean on both kinds.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { state: v.len(), expected: self.rows });
        }
        let w = self.w as usize;
        let span = |j: usize| {
            let a = j.saturating_sub(w - 1);
            let b = j.min(self.rows - 1) + 1;
            (a, b)
        };
        if self.cols * w <= PREFIX_SUM_CUTOFF {
            Ok((0..self.cols)
                .map(|j| {
                    let (a, b) = span(j);
                    self.band_value * v[a..b].iter().sum::<f64>()
                })
                .collect())
        } else {
            let prefix = prefix_sums(v);
            Ok((0..self.cols)
                .map(|j| {
                    let (a, b) = span(j);
                    self.band_value * (prefix[b] - prefix[a])
                })
                .collect())
        }
    }

    /// Row sums (band length times the band value).
    pub fn row_sum(&self, i: usize) -> f64 {
        let (a, b) = self.row_span(i);
        (b - a) as f64 * self.band_value
    }
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// A length-indexed state vector with a position offset: entry k sits at
/// position `first_index + k`. Basic states cover -L..=L+w-1; one-sided
/// states cover -L-w..=2w+i0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub values: Vec<f64>,
    pub first_index: i64,
    pub kind: CouplingKind,
}

impl CoupledState {
    /// All-ones start of the basic recursion (ones on the whole stored
    /// range; positions outside are implicitly zero).
    pub fn basic_ones(m: &CouplingMatrix) -> Self {
        Self {
            values: vec![1.0; m.cols],
            first_index: -(m.l as i64),
            kind: CouplingKind::Basic,
        }
    }

    /// All-ones start of the one-sided recursion: ones from position -L up,
    /// zeros below (the pinned left boundary).
    pub fn one_sided_ones(m: &CouplingMatrix) -> Self {
        let first_index = -(m.l as i64) - m.w as i64;
        let values = (0..m.cols)
            .map(|k| if first_index + k as i64 >= -(m.l as i64) { 1.0 } else { 0.0 })
            .collect();
        Self { values, first_index, kind: CouplingKind::OneSided }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a position, extended by the boundary convention of the
    /// recursion: zero outside for basic states, zero below / flat constant
    /// above for one-sided states.
    pub fn value_at(&self, position: i64) -> f64 {
        let idx = position - self.first_index;
        if idx < 0 {
            return 0.0;
        }
        if idx >= self.values.len() as i64 {
            return match self.kind {
                CouplingKind::Basic => 0.0,
                CouplingKind::OneSided => *self.values.last().unwrap_or(&0.0),
            };
        }
        self.values[idx as usize]
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

fn eps_at(position: i64, l: u32, eps: f64) -> f64 {
    if position >= -(l as i64) && position <= l as i64 {
        eps
    } else {
        0.0
    }
}

/// One step of the basic recursion in matrix form: A₂ᵀ f(A₂ g(x); eps).
/// All rows of A₂ are active positions, so eps applies uniformly; the
/// eps-masking of the scalar form is realized by the matrix being
/// rectangular.
pub fn sc_step_basic(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<CoupledState> {
    if state.len() != m.cols {
        return Err(Error::DimensionMismatch { state: state.len(), expected: m.cols });
    }
    let gx: Vec<f64> = state.values.iter().map(|&x| sys.g(x)).collect();
    let ag = m.apply(&gx)?;
    let fy: Vec<f64> = ag.iter().map(|&v| sys.f(v, eps)).collect();
    let values = m.apply_transpose(&fy)?;
    Ok(CoupledState { values, first_index: state.first_index, kind: CouplingKind::Basic })
}

/// One step of the basic recursion written as the literal scalar double sum
///   x_i <- (1/w) sum_k f( (1/w) sum_j g(x_{i+j-k}); eps_{i-k} )
/// with out-of-range positions pinned to zero and eps masked outside
/// [-L, L]. Kept deliberately naive as an independent transcription of the
/// update for the dual-form agreement check.
pub fn sc_step_basic_scalar(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    l: u32,
    w: u32,
) -> Result<CoupledState> {
    let expected = 2 * l as usize + w as usize;
    if state.len() != expected {
        return Err(Error::DimensionMismatch { state: state.len(), expected });
    }
    let wf = w as f64;
    let value_at = |p: i64| state.value_at(p);
    let values = (0..expected)
        .map(|idx| {
            let i = state.first_index + idx as i64;
            let mut outer = 0.0;
            for k in 0..w as i64 {
                let e_i = eps_at(i - k, l, eps);
                let mut inner = 0.0;
                for j in 0..w as i64 {
                    inner += sys.g(value_at(i + j - k));
                }
                // positions outside the f-range of the matrix form carry
                // eps = 0 and f(.; 0) = 0, so both forms agree
                outer += sys.f(inner / wf, e_i);
            }
            outer / wf
        })
        .collect();
    Ok(CoupledState { values, first_index: state.first_index, kind: CouplingKind::Basic })
}

/// One step of the one-sided recursion: Aᵀ f(A g(x); eps) with the eps mask
/// applied per row position, followed by the boundary enforcement
/// x_i <- x_{i0} for i >= i0 and x_i <- 0 for i < -L.
pub fn sc_step_one_sided(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<CoupledState> {
    if state.len() != m.cols {
        return Err(Error::DimensionMismatch { state: state.len(), expected: m.cols });
    }
    let gx: Vec<f64> = state.values.iter().map(|&x| sys.g(x)).collect();
    let ag = m.apply(&gx)?;
    let fy: Vec<f64> = ag
        .iter()
        .enumerate()
        .map(|(i, &v)| sys.f(v, eps_at(state.first_index + i as i64, m.l, eps)))
        .collect();
    let mut values = m.apply_transpose(&fy)?;
    enforce_one_sided(&mut values, state.first_index, m);
    Ok(CoupledState { values, first_index: state.first_index, kind: CouplingKind::OneSided })
}

fn enforce_one_sided(values: &mut [f64], first_index: i64, m: &CouplingMatrix) {
    let i0 = m.i0();
    let idx_i0 = (i0 - first_index) as usize;
    let pinned = values[idx_i0];
    for (k, v) in values.iter_mut().enumerate() {
        let pos = first_index + k as i64;
        if pos >= i0 {
            *v = pinned;
        } else if pos < -(m.l as i64) {
            *v = 0.0;
        }
    }
}

/// Outcome of a coupled run.
#[derive(Debug, Clone)]
pub struct SCRunResult {
    pub fixed_point: CoupledState,
    pub iterations: u64,
    pub converged_to_zero: bool,
    /// Sup norm of the state per iteration, starting with the initial state.
    pub max_entry_trace: Vec<f64>,
    pub hit_cap: bool,
    /// Largest observed per-step increase max_i(x_new_i - x_old_i); the
    /// monotone-convergence lemma makes this non-positive up to rounding.
    pub step_monotonicity_violation: f64,
}

impl SCRunResult {
    /// CSV body `iteration,max_entry`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,max_entry\n");
        for (i, &v) in self.max_entry_trace.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", format_float(v)));
        }
        out
    }

    /// CSV body `position,value` of the final state.
    pub fn final_state_csv(&self) -> String {
        let mut out = String::from("position,value\n");
        for (k, &v) in self.fixed_point.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{}\n",
                self.fixed_point.first_index + k as i64,
                format_float(v)
            ));
        }
        out
    }
}

fn run_loop(
    sys: &ScalarSystem,
    mut state: CoupledState,
    eps: f64,
    m: &CouplingMatrix,
    tol: &Tolerances,
    step: impl Fn(&ScalarSystem, &CoupledState, f64, &CouplingMatrix) -> Result<CoupledState>,
) -> Result<SCRunResult> {
    let mut trace = vec![state.max_entry()];
    let mut iterations = 0u64;
    let mut monotone_violation = f64::NEG_INFINITY;
    let mut hit_cap = true;
    while iterations < SC_ITERATION_CAP {
        let next = step(sys, &state, eps, m)?;
        iterations += 1;
        let mut delta = 0.0f64;
        let mut worst_increase = f64::NEG_INFINITY;
        for (new, old) in next.values.iter().zip(&state.values) {
            delta = delta.max((new - old).abs());
            worst_increase = worst_increase.max(new - old);
        }
        monotone_violation = monotone_violation.max(worst_increase);
        trace.push(next.max_entry());
        state = next;
        if delta <= tol.abs_tol {
            hit_cap = false;
            break;
        }
    }
    let converged_to_zero = state.max_entry() <= SC_ZERO_THRESHOLD;
    Ok(SCRunResult {
        fixed_point: state,
        iterations,
        converged_to_zero,
        max_entry_trace: trace,
        hit_cap,
        step_monotonicity_violation: monotone_violation,
    })
}

/// Run the basic coupled recursion from the all-ones start until the sup
/// norm of the step drops below `abs_tol` or the iteration cap is reached.
pub fn sc_run_basic(sys: &ScalarSystem, l: u32, w: u32, eps: f64, tol: &Tolerances) -> Result<SCRunResult> {
    let m = CouplingMatrix::basic(l, w)?;
    let state = CoupledState::basic_ones(&m);
    run_loop(sys, state, eps, &m, tol, sc_step_basic)
}

/// Run the one-sided recursion from the admissible all-ones start. The
/// fixed point is non-decreasing in position and dominates the basic one.
pub fn sc_run_one_sided(sys: &ScalarSystem, l: u32, w: u32, eps: f64, tol: &Tolerances) -> Result<SCRunResult> {
    let m = CouplingMatrix::one_sided(l, w)?;
    let state = CoupledState::one_sided_ones(&m);
    run_loop(sys, state, eps, &m, tol, sc_step_one_sided)
}

/// The coupled potential U(x; eps) = g(x)ᵀx - G(x) - F(A g(x); eps) of the
/// one-sided system (uniform eps; the mask belongs to the recursion, not
/// the potential).
pub fn coupled_potential(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<f64> {
    if m.kind != CouplingKind::OneSided || state.kind != CouplingKind::OneSided {
        return Err(Error::InvalidParameter(
            "coupled potential is defined for the one-sided system".into(),
        ));
    }
    if state.len() != m.cols {
        return Err(Error::DimensionMismatch { state: state.len(), expected: m.cols });
    }
    let gx: Vec<f64> = state.values.iter().map(|&x| sys.g(x)).collect();
    let ag = m.apply(&gx)?;
    let mut total = 0.0;
    for (&x, &gv) in state.values.iter().zip(&gx) {
        total += gv * x - sys.g_int(x);
    }
    for &v in &ag {
        total -= sys.f_int(v, eps);
    }
    Ok(total)
}

/// Right shift with zero fill: [Sx]_0 = 0, [Sx]_k = x_{k-1}.
pub fn shift(state: &CoupledState) -> CoupledState {
    let mut values = Vec::with_capacity(state.len());
    values.push(0.0);
    values.extend_from_slice(&state.values[..state.len().saturating_sub(1)]);
    CoupledState { values, first_index: state.first_index, kind: state.kind }
}

/// Shift-energy identity check: returns (U(Sx;eps) - U(x;eps), -U(x_{i0};eps)).
///
/// Requires the structure under which the identity telescopes: the first w
/// entries are zero and the last 2w+1 entries equal x_{i0}.
pub fn shift_energy_check(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<(f64, f64)> {
    if state.len() != m.cols || m.kind != CouplingKind::OneSided {
        return Err(Error::DimensionMismatch { state: state.len(), expected: m.cols });
    }
    let w = m.w as usize;
    for (k, &v) in state.values.iter().take(w).enumerate() {
        if v.abs() > 1e-14 {
            return Err(Error::ShiftPrecondition(format!(
                "entry {k} (position {}) is {v}, expected 0",
                state.first_index + k as i64
            )));
        }
    }
    let n = state.len();
    let xi0 = state.value_at(m.i0());
    for k in (n - (2 * w + 1))..n {
        let v = state.values[k];
        if (v - xi0).abs() > 1e-14 {
            return Err(Error::ShiftPrecondition(format!(
                "entry {k} (position {}) is {v}, expected x_i0 = {xi0}",
                state.first_index + k as i64
            )));
        }
    }
    let shifted = shift(state);
    let delta_u = coupled_potential(sys, &shifted, eps, m)? - coupled_potential(sys, state, eps, m)?;
    let minus_single = -crate::single::potential_unchecked(sys, xi0, eps);
    Ok((delta_u, minus_single))
}

/// Assemble the coupled Hessian
///   U'' = diag(g'(x)) - (A G')ᵀ diag(f'(A g(x); eps)) (A G')
///         + diag(g''(x)) diag(x - Aᵀ f(A g(x); eps))
/// (G' = diag(g'(x))) and return its induced infinity norm. Dense assembly
/// through banded outer products; desk scale only.
pub fn coupled_hessian_norm(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<f64> {
    if state.len() != m.cols {
        return Err(Error::DimensionMismatch { state: state.len(), expected: m.cols });
    }
    let n = state.len();
    let dgv: Vec<f64> = state.values.iter().map(|&x| sys.dg(x)).collect();
    let d2gv: Vec<f64> = state.values.iter().map(|&x| sys.d2g(x)).collect();
    let gx: Vec<f64> = state.values.iter().map(|&x| sys.g(x)).collect();
    let ag = m.apply(&gx)?;
    let fpv: Vec<f64> = ag.iter().map(|&v| sys.df_dx(v, eps)).collect();
    let fv: Vec<f64> = ag.iter().map(|&v| sys.f(v, eps)).collect();
    let atf = m.apply_transpose(&fv)?;

    let mut h = vec![0.0f64; n * n];
    for j in 0..n {
        h[j * n + j] = dgv[j] + d2gv[j] * (state.values[j] - atf[j]);
    }
    // middle term: rows of B = A diag(g'(x)) are banded; accumulate
    // -f'_i * b_i b_iᵀ over the band of each row
    let bv = m.band_value;
    for i in 0..m.rows {
        let (a, b) = m.row_span(i);
        let scale = fpv[i];
        if scale == 0.0 {
            continue;
        }
        for p in a..b {
            let bp = bv * dgv[p];
            if bp == 0.0 {
                continue;
            }
            for q in a..b {
                h[p * n + q] -= scale * bp * bv * dgv[q];
            }
        }
    }
    let mut norm = 0.0f64;
    for i in 0..n {
        let row_sum: f64 = h[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum();
        norm = norm.max(row_sum);
    }
    Ok(norm)
}

/// Maximum absolute asymmetry of the assembled Hessian (diagnostic; the
/// exact Hessian is symmetric by construction).
pub fn coupled_hessian_asymmetry(
    sys: &ScalarSystem,
    state: &CoupledState,
    eps: f64,
    m: &CouplingMatrix,
) -> Result<f64> {
    let n = state.len();
    let dgv: Vec<f64> = state.values.iter().map(|&x| sys.dg(x)).collect();
    let gx: Vec<f64> = state.values.iter().map(|&x| sys.g(x)).collect();
    let ag = m.apply(&gx)?;
    let fpv: Vec<f64> = ag.iter().map(|&v| sys.df_dx(v, eps)).collect();
    let mut mid = vec![0.0f64; n * n];
    let bv = m.band_value;
    for i in 0..m.rows {
        let (a, b) = m.row_span(i);
        for p in a..b {
            for q in a..b {
                mid[p * n + q] += fpv[i] * bv * dgv[p] * bv * dgv[q];
            }
        }
    }
    let mut worst = 0.0f64;
    for p in 0..n {
        for q in 0..p {
            worst = worst.max((mid[p * n + q] - mid[q * n + p]).abs());
        }
    }
    Ok(worst)
}

/// Empirical coupled threshold at fixed (L, w): the largest eps at which the
/// basic recursion still converges to zero, located by deterministic
/// multisection (four probes per round, independent of thread count) to
/// within [`SC_EPS_SEARCH_TOL`]. Capped nonzero runs count as not converged.
pub fn empirical_sc_threshold(sys: &ScalarSystem, l: u32, w: u32, tol: &Tolerances) -> f64 {
    let converges = |eps: f64| -> bool {
        sc_run_basic(sys, l, w, eps, tol).map(|r| r.converged_to_zero).unwrap_or(false)
    };
    if converges(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    const PROBES: usize = 4;
    while hi - lo > SC_EPS_SEARCH_TOL {
        let step = (hi - lo) / (PROBES + 1) as f64;
        let points: Vec<f64> = (1..=PROBES).map(|k| lo + k as f64 * step).collect();
        let outcomes = exec::map_range(points.len(), |k| converges(points[k]));
        let mut new_lo = lo;
        let mut new_hi = hi;
        for (k, &p) in points.iter().enumerate() {
            if outcomes[k] {
                new_lo = p;
            } else {
                new_hi = p;
                break;
            }
        }
        lo = new_lo;
        hi = new_hi;
    }
    0.5 * (lo + hi)
}

/// Random one-sided state satisfying the shift-identity structure: zeros on
/// the first w entries, a sorted ramp over the free region, and the flat
/// x_{i0} tail. Used by the verification suite.
pub fn random_structured_state(m: &CouplingMatrix, rng: &mut impl rand::Rng) -> CoupledState {
    assert_eq!(m.kind, CouplingKind::OneSided);
    let first_index = -(m.l as i64) - m.w as i64;
    let i0 = m.i0();
    let mut free: Vec<f64> = (0..(i0 + m.l as i64)).map(|_| rng.gen_range(0.0..1.0)).collect();
    free.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let top = rng.gen_range(*free.last().unwrap_or(&0.0)..=1.0);
    let values = (0..m.cols)
        .map(|k| {
            let pos = first_index + k as i64;
            if pos < -(m.l as i64) {
                0.0
            } else if pos >= i0 {
                top
            } else {
                free[(pos + m.l as i64) as usize]
            }
        })
        .collect();
    CoupledState { values, first_index, kind: CouplingKind::OneSided }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ldpc_bec, DegreeDistribution};
    use crate::numerics::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sys36() -> ScalarSystem {
        ldpc_bec(&DegreeDistribution::regular(3, 6).unwrap()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn basic_matrix_shape() {
        let m = CouplingMatrix::basic(1, 2).unwrap();
        assert_eq!((m.rows, m.cols), (3, 4));
        // rows [1/2 1/2 0 0; 0 1/2 1/2 0; 0 0 1/2 1/2]
        let out = m.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out, vec![1.5, 2.5, 3.5]);
        for i in 0..m.rows {
            assert_eq!(m.row_sum(i), 1.0);
        }
    }

    #[test]
    fn degenerate_width_one() {
        let m = CouplingMatrix::basic(1, 1).unwrap();
        assert!(m.degenerate());
        assert_eq!((m.rows, m.cols), (3, 3));
        let out = m.apply(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(out, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn one_sided_matrix_shape() {
        // (L=2, w=2): i0 = 0, side = 2 + 6 + 0 + 1 = 9
        let m = CouplingMatrix::one_sided(2, 2).unwrap();
        assert_eq!((m.rows, m.cols), (9, 9));
        // (L=2, w=3): i0 = 1, side = 2 + 9 + 1 + 1 = 13
        let m3 = CouplingMatrix::one_sided(2, 3).unwrap();
        assert_eq!((m3.rows, m3.cols), (13, 13));
        assert_eq!(m3.row_sum(0), 1.0);
        let last = m3.rows - 1;
        assert!((m3.row_sum(last) - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn transpose_is_adjoint() {
        let m = CouplingMatrix::one_sided(3, 3).unwrap();
        let n = m.cols;
        let u: Vec<f64> = (0..n).map(|k| (k as f64 * 0.37).sin().abs()).collect();
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * 0.71).cos().abs()).collect();
        let au = m.apply(&u).unwrap();
        let atv = m.apply_transpose(&v).unwrap();
        let lhs: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(&atv).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-14);
    }

    #[test]
    fn prefix_and_direct_paths_agree() {
        let m = CouplingMatrix::basic(40, 3).unwrap();
        let v: Vec<f64> = (0..m.cols).map(|k| ((k * 7919) % 97) as f64 / 97.0).collect();
        let direct = m.apply(&v).unwrap();
        let forced = CouplingMatrix { band_value: m.band_value, ..m.clone() };
        // recompute with prefix sums by building the big-path expression
        let prefix = prefix_sums(&v);
        let via_prefix: Vec<f64> = (0..forced.rows)
            .map(|i| {
                let (a, b) = forced.row_span(i);
                forced.band_value * (prefix[b] - prefix[a])
            })
            .collect();
        for (d, p) in direct.iter().zip(&via_prefix) {
            assert!((d - p).abs() <= 1e-13);
        }
    }

    #[test]
    fn zero_state_is_fixed() {
        let sys = sys36();
        let m = CouplingMatrix::basic(4, 2).unwrap();
        let state = CoupledState { values: vec![0.0; m.cols], first_index: -4, kind: CouplingKind::Basic };
        let next = sc_step_basic(&sys, &state, 0.7, &m).unwrap();
        assert!(next.values.iter().all(|&v| v == 0.0));

        let mo = CouplingMatrix::one_sided(4, 2).unwrap();
        let so = CoupledState { values: vec![0.0; mo.cols], first_index: -6, kind: CouplingKind::OneSided };
        let no = sc_step_one_sided(&sys, &so, 0.7, &mo).unwrap();
        assert!(no.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn width_one_step_is_uncoupled() {
        let sys = sys36();
        let m = CouplingMatrix::basic(1, 1).unwrap();
        let state = CoupledState { values: vec![1.0; 3], first_index: -1, kind: CouplingKind::Basic };
        let next = sc_step_basic(&sys, &state, 0.6, &m).unwrap();
        let expect = sys.f(sys.g(1.0), 0.6);
        for &v in &next.values {
            assert!((v - expect).abs() <= 1e-15);
        }
    }

    #[test]
    fn boundary_entries_shrink_first() {
        let sys = sys36();
        let m = CouplingMatrix::basic(4, 2).unwrap();
        let state = CoupledState::basic_ones(&m);
        let next = sc_step_basic(&sys, &state, 0.45, &m).unwrap();
        let uncoupled = sys.f(sys.g(1.0), 0.45);
        let mid = next.values[m.cols / 2];
        assert!((mid - uncoupled).abs() <= 1e-15);
        assert!(next.values[0] < mid);
        assert!(*next.values.last().unwrap() < mid);
    }

    #[test]
    fn dual_form_agreement_random_states() {
        let sys = sys36();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(l, w) in &[(4u32, 2u32), (6, 3), (5, 5), (3, 1)] {
            let m = CouplingMatrix::basic(l, w).unwrap();
            for _ in 0..25 {
                let state = CoupledState {
                    values: (0..m.cols).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    first_index: -(l as i64),
                    kind: CouplingKind::Basic,
                };
                let eps = rng.gen_range(0.0..1.0);
                let a = sc_step_basic(&sys, &state, eps, &m).unwrap();
                let b = sc_step_basic_scalar(&sys, &state, eps, l, w).unwrap();
                for (x, y) in a.values.iter().zip(&b.values) {
                    assert!((x - y).abs() <= 1e-12, "matrix {x} vs scalar {y}");
                }
            }
        }
    }

    #[test]
    fn runs_match_oracle_outcomes() {
        let sys = sys36();
        let t = tol();
        let below = sc_run_basic(&sys, 16, 3, 0.40, &t).unwrap();
        assert!(below.converged_to_zero);
        let saturated = sc_run_basic(&sys, 16, 3, 0.47, &t).unwrap();
        assert!(saturated.converged_to_zero, "0.47 < eps* should die under coupling");
        let above = sc_run_basic(&sys, 16, 3, 0.55, &t).unwrap();
        assert!(!above.converged_to_zero);
        assert!((above.fixed_point.max_entry() - 0.5232380).abs() <= 1e-6);
    }

    #[test]
    fn one_sided_runs_match_oracle() {
        let sys = sys36();
        let t = tol();
        assert!(sc_run_one_sided(&sys, 16, 3, 0.40, &t).unwrap().converged_to_zero);
        assert!(sc_run_one_sided(&sys, 16, 3, 0.47, &t).unwrap().converged_to_zero);
        let fp = sc_run_one_sided(&sys, 16, 3, 0.55, &t).unwrap();
        assert!(!fp.converged_to_zero);
        // non-decreasing fixed point
        for pair in fp.fixed_point.values.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
    }

    #[test]
    fn traces_are_non_increasing() {
        let sys = sys36();
        let t = tol();
        for r in [
            sc_run_basic(&sys, 8, 2, 0.45, &t).unwrap(),
            sc_run_one_sided(&sys, 8, 2, 0.45, &t).unwrap(),
        ] {
            assert!(r.step_monotonicity_violation <= 1e-9);
            for pair in r.max_entry_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9);
            }
        }
    }

    #[test]
    fn one_sided_dominates_basic() {
        let sys = sys36();
        let t = tol();
        let basic = sc_run_basic(&sys, 16, 3, 0.55, &t).unwrap();
        let one_sided = sc_run_one_sided(&sys, 16, 3, 0.55, &t).unwrap();
        for p in -16i64..=(16 + 3 - 1) {
            let vb = basic.fixed_point.value_at(p);
            let vo = one_sided.fixed_point.value_at(p);
            assert!(vo >= vb - 1e-9, "position {p}: one-sided {vo} < basic {vb}");
        }
    }

    #[test]
    fn one_sided_upper_bounds_basic_after_one_step() {
        let sys = sys36();
        let mb = CouplingMatrix::basic(8, 3).unwrap();
        let mo = CouplingMatrix::one_sided(8, 3).unwrap();
        let b1 = sc_step_basic(&sys, &CoupledState::basic_ones(&mb), 0.5, &mb).unwrap();
        let o1 = sc_step_one_sided(&sys, &CoupledState::one_sided_ones(&mo), 0.5, &mo).unwrap();
        for p in -8i64..=(8 + 2) {
            assert!(o1.value_at(p) >= b1.value_at(p) - 1e-12, "position {p}");
        }
    }

    #[test]
    fn shift_definition() {
        let s = CoupledState { values: vec![0.0, 0.3, 0.7], first_index: -1, kind: CouplingKind::OneSided };
        let sh = shift(&s);
        assert_eq!(sh.values, vec![0.0, 0.0, 0.3]);
    }

    #[test]
    fn coupled_potential_zero_state() {
        let sys = sys36();
        let m = CouplingMatrix::one_sided(4, 2).unwrap();
        let s = CoupledState { values: vec![0.0; m.cols], first_index: -6, kind: CouplingKind::OneSided };
        assert_eq!(coupled_potential(&sys, &s, 0.5, &m).unwrap(), 0.0);
    }

    #[test]
    fn coupled_potential_matches_line_integral() {
        // quadrature oracle: integrate g'(tx) dot (tx - A^T f(A g(tx); eps)) . x dt
        let sys = sys36();
        let m = CouplingMatrix::one_sided(6, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let state = random_structured_state(&m, &mut rng);
        let eps = 0.45;
        let closed = coupled_potential(&sys, &state, eps, &m).unwrap();
        let integrand = |t: f64| {
            let z: Vec<f64> = state.values.iter().map(|&v| t * v).collect();
            let gz: Vec<f64> = z.iter().map(|&v| sys.g(v)).collect();
            let ag = m.apply(&gz).unwrap();
            let fv: Vec<f64> = ag.iter().map(|&v| sys.f(v, eps)).collect();
            let atf = m.apply_transpose(&fv).unwrap();
            z.iter()
                .zip(&atf)
                .zip(&state.values)
                .map(|((&zi, &ai), &xi)| sys.dg(zi) * (zi - ai) * xi)
                .sum::<f64>()
        };
        let quad = integrate(integrand, 0.0, 1.0, &Tolerances { abs_tol: 1e-10, ..tol() }).unwrap();
        assert!((closed - quad).abs() <= 1e-6, "closed {closed} vs line integral {quad}");
    }

    #[test]
    fn shift_energy_identity_on_structured_states() {
        let sys = sys36();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(l, w) in &[(8u32, 2u32), (8, 3), (16, 5)] {
            let m = CouplingMatrix::one_sided(l, w).unwrap();
            for _ in 0..20 {
                let state = random_structured_state(&m, &mut rng);
                let eps = rng.gen_range(0.0..1.0);
                let (du, ms) = shift_energy_check(&sys, &state, eps, &m).unwrap();
                assert!((du - ms).abs() <= 1e-9, "identity broke: {du} vs {ms}");
            }
        }
    }

    #[test]
    fn shift_energy_identity_at_fixed_point() {
        let sys = sys36();
        let t = tol();
        let m = CouplingMatrix::one_sided(16, 3).unwrap();
        let run = sc_run_one_sided(&sys, 16, 3, 0.55, &t).unwrap();
        let (du, ms) = shift_energy_check(&sys, &run.fixed_point, 0.55, &m).unwrap();
        assert!((du - ms).abs() <= 1e-9);
        assert!(du.abs() > 1e-4, "identity should be nontrivial at a nonzero fp");
    }

    #[test]
    fn shift_energy_rejects_unstructured_state() {
        let sys = sys36();
        let m = CouplingMatrix::one_sided(8, 3).unwrap();
        let state = CoupledState {
            values: (0..m.cols).map(|k| k as f64 / m.cols as f64).collect(),
            first_index: -11,
            kind: CouplingKind::OneSided,
        };
        assert!(matches!(
            shift_energy_check(&sys, &state, 0.5, &m),
            Err(Error::ShiftPrecondition(_))
        ));
    }

    #[test]
    fn corrupted_matrix_breaks_shift_identity() {
        let sys = sys36();
        let m = CouplingMatrix::one_sided(8, 3).unwrap().with_band_value(1.02 / 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = random_structured_state(&m, &mut rng);
        let (du, ms) = shift_energy_check(&sys, &state, 0.5, &m).unwrap();
        assert!((du - ms).abs() > 1e-6, "corruption must surface: {du} vs {ms}");
    }

    #[test]
    fn hessian_norm_bounded_and_symmetric() {
        let sys = sys36();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(l, w) in &[(8u32, 2u32), (8, 5), (16, 3)] {
            let m = CouplingMatrix::one_sided(l, w).unwrap();
            for _ in 0..20 {
                let state = random_structured_state(&m, &mut rng);
                let eps = rng.gen_range(0.0..1.0);
                let norm = coupled_hessian_norm(&sys, &state, eps, &m).unwrap();
                assert!(norm <= 75.0 + 1e-9, "norm {norm} above K at (L={l}, w={w})");
                let asym = coupled_hessian_asymmetry(&sys, &state, eps, &m).unwrap();
                assert!(asym <= 1e-12);
            }
        }
    }

    #[test]
    fn hessian_at_zero_state() {
        let sys = sys36();
        let m = CouplingMatrix::one_sided(4, 2).unwrap();
        let state = CoupledState { values: vec![0.0; m.cols], first_index: -6, kind: CouplingKind::OneSided };
        let norm = coupled_hessian_norm(&sys, &state, 0.0, &m).unwrap();
        assert!((norm - 5.0).abs() <= 1e-12, "expected g'(0), got {norm}");
    }

    #[test]
    fn empirical_threshold_uncoupled() {
        let sys = sys36();
        let th = empirical_sc_threshold(&sys, 16, 1, &tol());
        assert!((th - 0.4294398).abs() <= 5e-4, "w=1 should match eps_s*, got {th}");
    }
}
