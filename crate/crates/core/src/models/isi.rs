//! Intersymbol-interference channels with erasure noise:
//! f(x; eps) = psi(L(x); eps) * lambda(x), g(x) = 1 - rho(1 - x),
//! where psi maps the a-priori erasure rate and the channel erasure rate to
//! the extrinsic erasure rate of detector-to-bit messages.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{poly, DegreeDistribution};
use crate::numerics::{integrate, Tolerances};
use crate::system::{check_admissible, Map2, ScalarSystem};

/// An erasure-channel detector transfer function psi(t; eps) with optional
/// closed forms for ∂psi/∂t and the antiderivative Psi(t; eps) = ∫₀ᵗ psi.
///
/// When `psi_int` is present, F comes out in closed form through the
/// substitution u = L(z): F(y; eps) = Λ(1) · Psi(L(y); eps). Otherwise F
/// falls back to adaptive quadrature.
#[derive(Clone)]
pub struct IsiChannel {
    name: String,
    psi: Map2,
    dpsi_dt: Option<Map2>,
    psi_int: Option<Map2>,
}

impl IsiChannel {
    pub fn new(name: impl Into<String>, psi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), psi: Arc::new(psi), dpsi_dt: None, psi_int: None }
    }

    pub fn with_dpsi_dt(mut self, d: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dpsi_dt = Some(Arc::new(d));
        self
    }

    pub fn with_integral(mut self, p: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.psi_int = Some(Arc::new(p));
        self
    }

    /// psi(t; eps) = eps: a memoryless channel. The ISI system then reduces
    /// exactly to the plain LDPC/BEC system.
    pub fn memoryless() -> Self {
        Self::new("memoryless", |_, e| e)
            .with_dpsi_dt(|_, _| 0.0)
            .with_integral(|t, e| e * t)
    }

    /// psi(t; eps) = eps * t: a synthetic admissible channel with memory.
    pub fn linear() -> Self {
        Self::new("linear", |t, e| e * t)
            .with_dpsi_dt(|_, e| e)
            .with_integral(|t, e| e * t * t / 2.0)
    }

    /// Built-in channel by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "memoryless" => Ok(Self::memoryless()),
            "linear" => Ok(Self::linear()),
            other => Err(Error::InvalidParameter(format!(
                "unknown ISI channel {other:?} (built-ins: memoryless, linear)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn psi(&self, t: f64, eps: f64) -> f64 {
        (self.psi)(t, eps)
    }

    fn dpsi_dt(&self, t: f64, eps: f64) -> f64 {
        match &self.dpsi_dt {
            Some(d) => d(t, eps),
            None => {
                let h = 1e-6;
                let lo = (t - h).max(0.0);
                let hi = (t + h).min(1.0);
                ((self.psi)(hi, eps) - (self.psi)(lo, eps)) / (hi - lo)
            }
        }
    }

    /// Sampled sanity checks on psi: range, monotonicity in both arguments,
    /// psi(t; 0) = 0.
    fn audit(&self) -> Result<()> {
        let n = 64;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let at_zero = self.psi(t, 0.0);
            if at_zero != 0.0 {
                return Err(Error::NotAdmissible(format!("psi({t};0) = {at_zero}, expected 0")));
            }
            for j in 0..=n {
                let e = j as f64 / n as f64;
                let v = self.psi(t, e);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::NotAdmissible(format!("psi({t};{e}) = {v} outside [0,1]")));
                }
                if i > 0 && self.psi(t - 1.0 / n as f64, e) > v + 1e-12 {
                    return Err(Error::NotAdmissible(format!("psi decreasing in t near ({t},{e})")));
                }
                if j > 0 && self.psi(t, e - 1.0 / n as f64) > v + 1e-12 {
                    return Err(Error::NotAdmissible(format!("psi decreasing in eps near ({t},{e})")));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for IsiChannel {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("IsiChannel").field("name", &self.name).finish()
    }
}

/// Build the joint LDPC/ISI-channel system. The constructor audits psi and
/// the assembled system (coarse grid) and fails on any violation; the
/// derivative sups are left for estimation.
pub fn isi_erasure(dd: &DegreeDistribution, ch: &IsiChannel) -> Result<ScalarSystem> {
    ch.audit()?;

    let lambda = dd.lambda_coeffs().to_vec();
    let dlambda = poly::derivative(&lambda);
    let lambda_int = poly::antiderivative(&lambda);
    let lambda_int_one = poly::eval(&lambda_int, 1.0);
    let rho = dd.rho_coeffs().to_vec();
    let drho = poly::derivative(&rho);
    let d2rho = poly::derivative(&drho);
    let rho_int = poly::antiderivative(&rho);
    let rho_int_one = poly::eval(&rho_int, 1.0);

    let big_l = {
        let lambda_int = lambda_int.clone();
        move |x: f64| poly::eval(&lambda_int, x) / lambda_int_one
    };

    let ch_f = ch.clone();
    let lam_f = lambda.clone();
    let bl_f = big_l.clone();
    let f = move |x: f64, e: f64| ch_f.psi(bl_f(x), e) * poly::eval(&lam_f, x);

    // chain rule: d/dx [psi(L(x);e) lambda(x)]
    //   = psi_t(L(x);e) L'(x) lambda(x) + psi(L(x);e) lambda'(x)
    let ch_d = ch.clone();
    let lam_d = lambda.clone();
    let bl_d = big_l.clone();
    let df_dx = move |x: f64, e: f64| {
        let lx = bl_d(x);
        let lam = poly::eval(&lam_d, x);
        let dl = lam / lambda_int_one;
        ch_d.dpsi_dt(lx, e) * dl * lam + ch_d.psi(lx, e) * poly::eval(&dlambda, x)
    };

    // F(y;eps): closed form via Psi when available, else adaptive quadrature
    let ch_i = ch.clone();
    let lam_i = lambda.clone();
    let bl_i = big_l.clone();
    let f_int = move |y: f64, e: f64| match &ch_i.psi_int {
        Some(psi_int) => lambda_int_one * psi_int(bl_i(y), e),
        None => {
            let quad_tol = Tolerances { abs_tol: 1e-12, ..Tolerances::default() };
            let ch_q = ch_i.clone();
            let bl_q = bl_i.clone();
            let lam_q = lam_i.clone();
            integrate(move |z| ch_q.psi(bl_q(z), e) * poly::eval(&lam_q, z), 0.0, y, &quad_tol)
                .unwrap_or(f64::NAN)
        }
    };

    let rho_g = rho.clone();
    let sys = ScalarSystem::new(
        format!("isi({},{})", ch.name, dd_label(dd)),
        f,
        df_dx,
        f_int,
        move |x| 1.0 - poly::eval(&rho_g, 1.0 - x),
        move |x| poly::eval(&drho, 1.0 - x),
        move |x| -poly::eval(&d2rho, 1.0 - x),
        move |x| x - (rho_int_one - poly::eval(&rho_int, 1.0 - x)),
    );

    let audit_tol = Tolerances { grid_n: 128, ..Tolerances::default() };
    let report = check_admissible(&sys, &audit_tol);
    if !report.passed {
        return Err(Error::NotAdmissible(report.summary()));
    }
    Ok(sys)
}

fn dd_label(dd: &DegreeDistribution) -> String {
    let single = |c: &[f64]| -> Option<usize> {
        let nz: Vec<usize> = c.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, _)| k).collect();
        (nz.len() == 1).then(|| nz[0] + 1)
    };
    match (single(dd.lambda_coeffs()), single(dd.rho_coeffs())) {
        (Some(l), Some(r)) => format!("{l},{r}"),
        _ => "irregular".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ldpc_bec;

    #[test]
    fn memoryless_reduces_to_ldpc() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let isi = isi_erasure(&dd, &IsiChannel::memoryless()).unwrap();
        let ldpc = ldpc_bec(&dd).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = i as f64 / 20.0;
                let e = j as f64 / 20.0;
                assert!((isi.f(x, e) - ldpc.f(x, e)).abs() <= 1e-15);
                assert!((isi.f_int(x, e) - ldpc.f_int(x, e)).abs() <= 1e-15);
            }
            let x = i as f64 / 20.0;
            assert!((isi.g(x) - ldpc.g(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn linear_channel_is_admissible() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let sys = isi_erasure(&dd, &IsiChannel::linear()).unwrap();
        // f(x;eps) = eps L(x) lambda(x) = eps x^5 for (3,6)
        assert!((sys.f(0.5, 0.8) - 0.8 * 0.5f64.powi(5)).abs() <= 1e-15);
    }

    #[test]
    fn non_monotone_psi_rejected() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let bad = IsiChannel::new("bad", |t, e| e * (1.0 - t));
        assert!(matches!(isi_erasure(&dd, &bad), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn quadrature_fallback_matches_closed_form() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        // same psi, one with the closed-form integral and one without
        let with = isi_erasure(&dd, &IsiChannel::linear()).unwrap();
        let without = isi_erasure(
            &dd,
            &IsiChannel::new("linear-quad", |t, e| e * t).with_dpsi_dt(|_, e| e),
        )
        .unwrap();
        for k in 0..=10 {
            let y = k as f64 / 10.0;
            assert!((with.f_int(y, 0.7) - without.f_int(y, 0.7)).abs() <= 1e-10);
        }
    }

    #[test]
    fn unknown_builtin_rejected() {
        assert!(IsiChannel::by_name("dicode").is_err());
        assert!(IsiChannel::by_name("memoryless").is_ok());
    }
}
