//! Generalized LDPC codes with degree-2 bits and BCH component decoders:
//! f(x; eps) = eps * x, g(x) = binomial tail sum_{e=t}^{n-1} C(n-1,e) x^e (1-x)^(n-1-e).

use crate::error::{Error, Result};
use crate::numerics::{bisect, Bracket, Tolerances};
use crate::system::ScalarSystem;

/// Component-code parameters: block length n, correction radius t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GldpcParams {
    pub n: u32,
    pub t: u32,
}

impl GldpcParams {
    pub fn new(n: u32, t: u32) -> Result<Self> {
        if n < 5 || t < 2 || t > (n - 1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "GLDPC needs 2 <= t <= floor((n-1)/2), got (n={n}, t={t})"
            )));
        }
        Ok(Self { n, t })
    }
}

/// Exact binomial coefficients up to m = 63 (C(63,31) fits in u64).
fn choose_exact(m: u32, k: u32) -> f64 {
    if k > m {
        return 0.0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (m as u128 - i) / (i + 1);
    }
    acc as f64
}

fn ln_choose(m: u32, k: u32) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    let k = k.min(m - k);
    let mut acc = 0.0;
    for i in 0..k {
        acc += ((m - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// C(m,e) x^e (1-x)^(m-e). Exact-integer path for m <= 63; log-space beyond
/// (desk scale tops out near n = 1023, where precision degrades to ~1e-13).
fn binom_term(m: u32, e: u32, x: f64, one_minus_x: f64) -> f64 {
    if m <= 63 {
        choose_exact(m, e) * x.powi(e as i32) * one_minus_x.powi((m - e) as i32)
    } else {
        if x == 0.0 || one_minus_x == 0.0 {
            return if (x == 0.0 && e == 0) || (one_minus_x == 0.0 && e == m) { 1.0 } else { 0.0 };
        }
        (ln_choose(m, e) + e as f64 * x.ln() + (m - e) as f64 * one_minus_x.ln()).exp()
    }
}

/// Weighted binomial tail sum_{e=lo}^{m} weight(e) * C(m,e) x^e (1-x)^(m-e),
/// summed from the largest term outward via the term recurrence
/// T(e+1)/T(e) = (m-e)/(e+1) * x/(1-x).
fn weighted_tail(m: u32, lo: u32, x: f64, weight: impl Fn(u32) -> f64) -> f64 {
    if x <= 0.0 {
        return if lo == 0 { weight(0) } else { 0.0 };
    }
    if x >= 1.0 {
        return weight(m);
    }
    let q = 1.0 - x;
    let mode = (((m + 1) as f64 * x).floor() as u32).clamp(lo, m);
    let t_mode = binom_term(m, mode, x, q);
    let ratio_up = x / q;
    let mut sum = weight(mode) * t_mode;
    let mut t = t_mode;
    let mut e = mode;
    while e < m {
        t *= (m - e) as f64 / (e + 1) as f64 * ratio_up;
        e += 1;
        sum += weight(e) * t;
        if t < sum * 1e-22 {
            break;
        }
    }
    t = t_mode;
    e = mode;
    while e > lo {
        t *= e as f64 / (m - e + 1) as f64 / ratio_up;
        e -= 1;
        sum += weight(e) * t;
        if t < sum * 1e-22 {
            break;
        }
    }
    sum
}

fn tail(m: u32, lo: u32, x: f64) -> f64 {
    weighted_tail(m, lo, x, |_| 1.0)
}

/// g(x): probability that at least t of n-1 i.i.d. Bernoulli(x) trials hit.
pub fn gldpc_g(p: GldpcParams, x: f64) -> f64 {
    tail(p.n - 1, p.t, x)
}

/// g'(x) = m C(m-1, t-1) x^(t-1) (1-x)^(m-t), the telescoped term-wise
/// derivative of the tail (a beta density).
pub fn gldpc_dg(p: GldpcParams, x: f64) -> f64 {
    let m = p.n - 1;
    m as f64 * binom_term(m - 1, p.t - 1, x, 1.0 - x)
}

/// g''(x) = m C(m-1,t-1) x^(t-2) (1-x)^(m-t-1) [(t-1)(1-x) - (m-t)x].
pub fn gldpc_d2g(p: GldpcParams, x: f64) -> f64 {
    let m = (p.n - 1) as f64;
    let t = p.t as f64;
    let c = if p.n - 2 <= 63 {
        choose_exact(p.n - 2, p.t - 1)
    } else {
        ln_choose(p.n - 2, p.t - 1).exp()
    };
    let shape = x.powi(p.t as i32 - 2) * (1.0 - x).powi((p.n - 1 - p.t) as i32 - 1);
    m * c * shape * ((t - 1.0) * (1.0 - x) - (m - t) * x)
}

/// G(x) = ∫₀ˣ g: each tail term integrates to a weighted tail of order m+1,
/// G(x) = 1/(m+1) sum_{j=t+1}^{m+1} (j-t) C(m+1,j) x^j (1-x)^(m+1-j).
pub fn gldpc_g_int(p: GldpcParams, x: f64) -> f64 {
    let m = p.n - 1;
    let t = p.t;
    weighted_tail(m + 1, t + 1, x, |j| (j - t) as f64) / (m + 1) as f64
}

/// Build the GLDPC scalar admissible system. f is linear in x, so
/// ‖∂f/∂x‖∞ = 1 exactly; the g-derivative sups are left for estimation.
pub fn gldpc(p: GldpcParams) -> Result<ScalarSystem> {
    GldpcParams::new(p.n, p.t)?;
    let sys = ScalarSystem::new(
        format!("gldpc({},{})", p.n, p.t),
        |x, e| e * x,
        |_, e| e,
        |x, e| e * x * x / 2.0,
        move |x| gldpc_g(p, x),
        move |x| gldpc_dg(p, x),
        move |x| gldpc_d2g(p, x),
        move |x| gldpc_g_int(p, x),
    );
    // f' = eps has exact sup 1 over [0,1]^2; the g-derivative sups are left
    // None so hessian_bound estimates them. Division in eps(x) is guarded
    // near 0 by reporting the limit (+inf for t >= 2).
    Ok(sys
        .with_sup_df(1.0)
        .with_eps_root(move |x| {
            if x < 1e-12 {
                return f64::INFINITY;
            }
            x / gldpc_g(p, x)
        }))
}

/// Trial entropy P(x) = -x g(x) + 2 ∫₀ˣ g(z) dz.
pub fn gldpc_trial_entropy(p: GldpcParams, x: f64) -> f64 {
    -x * gldpc_g(p, x) + 2.0 * gldpc_g_int(p, x)
}

/// The GLDPC potential threshold: eps(x̄) at the unique positive root x̄ of
/// the trial entropy. Scans (1e-6, 1] then bisects the sign change.
pub fn gldpc_threshold(p: GldpcParams, tol: &Tolerances) -> Result<f64> {
    let x_bar = gldpc_entropy_root(p, tol)?;
    Ok(x_bar / gldpc_g(p, x_bar))
}

/// The unique positive root of the trial entropy.
pub fn gldpc_entropy_root(p: GldpcParams, tol: &Tolerances) -> Result<f64> {
    let n = tol.grid_n;
    let lo = 1e-6;
    let mut prev_x = lo;
    let mut prev_p = gldpc_trial_entropy(p, prev_x);
    for k in 1..=n {
        let x = lo + (1.0 - lo) * k as f64 / n as f64;
        let px = gldpc_trial_entropy(p, x);
        if prev_p.signum() != px.signum() {
            return bisect(|z| gldpc_trial_entropy(p, z), Bracket::new(prev_x, x)?, tol);
        }
        prev_x = x;
        prev_p = px;
    }
    Err(Error::NoTrialEntropyRoot)
}
