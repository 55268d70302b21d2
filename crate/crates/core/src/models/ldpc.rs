//! Irregular LDPC ensembles on the binary erasure channel:
//! f(x; eps) = eps * lambda(x), g(x) = 1 - rho(1 - x).

use crate::error::{Error, Result};
use crate::models::poly;
use crate::single::{self, Threshold};
use crate::system::ScalarSystem;
use crate::numerics::Tolerances;

/// Edge-perspective degree distribution pair (lambda, rho), stored as dense
/// coefficient vectors where coefficient k multiplies x^k.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    lambda: Vec<f64>,
    rho: Vec<f64>,
}

impl DegreeDistribution {
    pub fn new(lambda: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        for (name, coeffs) in [("lambda", &lambda), ("rho", &rho)] {
            if coeffs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} coefficients must be non-negative and finite"
                )));
            }
            let at_one = poly::eval(coeffs, 1.0);
            if (at_one - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "{name}(1) = {at_one}, expected 1"
                )));
            }
        }
        if lambda.first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::NotAdmissible("lambda(0) != 0".into()));
        }
        Ok(Self { lambda, rho })
    }

    /// The (l, r)-regular ensemble: lambda = x^(l-1), rho = x^(r-1).
    pub fn regular(l: u32, r: u32) -> Result<Self> {
        if l < 2 || r < 2 {
            return Err(Error::InvalidParameter(format!(
                "regular ensemble needs l, r >= 2, got ({l}, {r})"
            )));
        }
        let mut lambda = vec![0.0; l as usize];
        lambda[l as usize - 1] = 1.0;
        let mut rho = vec![0.0; r as usize];
        rho[r as usize - 1] = 1.0;
        Ok(Self { lambda, rho })
    }

    pub fn lambda_coeffs(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho_coeffs(&self) -> &[f64] {
        &self.rho
    }

    pub fn lambda(&self, x: f64) -> f64 {
        poly::eval(&self.lambda, x)
    }

    pub fn rho(&self, x: f64) -> f64 {
        poly::eval(&self.rho, x)
    }

    /// ∫₀ˣ lambda(y) dy (unnormalized).
    pub fn lambda_int(&self, x: f64) -> f64 {
        poly::eval(&poly::antiderivative(&self.lambda), x)
    }

    /// Node-perspective L(x) = ∫₀ˣ lambda / ∫₀¹ lambda.
    pub fn big_l(&self, x: f64) -> f64 {
        self.lambda_int(x) / self.lambda_int(1.0)
    }

    /// L'(1) = 1 / ∫₀¹ lambda(y) dy.
    pub fn l_prime_one(&self) -> f64 {
        1.0 / self.lambda_int(1.0)
    }

    fn display_name(&self) -> String {
        let single = |c: &[f64]| -> Option<usize> {
            let nz: Vec<usize> = c.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, _)| k).collect();
            (nz.len() == 1).then(|| nz[0] + 1)
        };
        match (single(&self.lambda), single(&self.rho)) {
            (Some(l), Some(r)) => format!("ldpc({l},{r})"),
            _ => "ldpc(irregular)".to_string(),
        }
    }
}

/// Build the LDPC/BEC scalar admissible system with all closed forms:
/// F(x;eps) = eps ∫ lambda, G(x) = x - (R(1) - R(1-x)), and exact
/// derivative sups (polynomials with non-negative coefficients have
/// monotone derivatives, so the sups sit at the endpoints).
pub fn ldpc_bec(dd: &DegreeDistribution) -> Result<ScalarSystem> {
    if dd.lambda.first().copied().unwrap_or(0.0) != 0.0 {
        return Err(Error::NotAdmissible("lambda(0) != 0".into()));
    }
    let lambda = dd.lambda.clone();
    let dlambda = poly::derivative(&lambda);
    let lambda_int = poly::antiderivative(&lambda);
    let rho = dd.rho.clone();
    let drho = poly::derivative(&rho);
    let d2rho = poly::derivative(&drho);
    let rho_int = poly::antiderivative(&rho);
    let rho_int_one = poly::eval(&rho_int, 1.0);

    let sup_df = poly::eval(&dlambda, 1.0);
    let sup_dg = poly::eval(&drho, 1.0);
    let sup_d2g = poly::eval(&d2rho, 1.0);

    let lam = lambda.clone();
    let lam2 = lambda.clone();
    let rho_g = rho.clone();

    let sys = ScalarSystem::new(
        dd.display_name(),
        move |x, e| e * poly::eval(&lam, x),
        move |x, e| e * poly::eval(&dlambda, x),
        move |x, e| e * poly::eval(&lambda_int, x),
        move |x| 1.0 - poly::eval(&rho_g, 1.0 - x),
        move |x| poly::eval(&drho, 1.0 - x),
        move |x| -poly::eval(&d2rho, 1.0 - x),
        move |x| x - (rho_int_one - poly::eval(&rho_int, 1.0 - x)),
    )
    .with_derivative_sups(sup_df, sup_dg, sup_d2g);

    let rho_e = dd.rho.clone();
    Ok(sys.with_eps_root(move |x| {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        x / poly::eval(&lam2, 1.0 - poly::eval(&rho_e, 1.0 - x))
    }))
}

/// Trial entropy P(x) of the LDPC ensemble, computed through the potential
/// identity P(x) = -L'(1) U(x; eps(x)): at eps = eps(x) the channel term of
/// the single-system potential vanishes, leaving the eps-free trial entropy.
pub fn ldpc_trial_entropy(dd: &DegreeDistribution, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::Domain { name: "x", value: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let g = 1.0 - dd.rho(1.0 - x);
    let lam_g = dd.lambda(g);
    if lam_g <= 0.0 || !lam_g.is_finite() {
        return Err(Error::NoEpsilonRoot { x, fg1: lam_g });
    }
    let eps_x = x / lam_g;
    // U(x; eps) extended linearly in eps beyond [0,1]; F(y;eps) = eps ∫ lambda
    let big_g = x - (dd.rho_int_one() - dd.rho_int(1.0 - x));
    let u = x * g - big_g - eps_x * dd.lambda_int(g);
    Ok(-dd.l_prime_one() * u)
}

impl DegreeDistribution {
    fn rho_int(&self, x: f64) -> f64 {
        poly::eval(&poly::antiderivative(&self.rho), x)
    }

    fn rho_int_one(&self) -> f64 {
        self.rho_int(1.0)
    }
}

/// Maxwell threshold: the minimum of eps(x) over the positive roots of the
/// trial entropy. Returns 1 with `capped_at_one` when P has no isolated
/// positive root (e.g. the linear system where P vanishes identically).
pub fn maxwell_threshold(dd: &DegreeDistribution, tol: &Tolerances) -> Result<Threshold> {
    let n = tol.grid_n;
    let lo = 1e-6;
    let grid = |k: usize| lo + (1.0 - lo) * k as f64 / n as f64;
    let p = |x: f64| ldpc_trial_entropy(dd, x);

    let mut roots: Vec<f64> = Vec::new();
    let mut prev_x = grid(0);
    let mut prev_p = p(prev_x)?;
    for k in 1..=n {
        let x = grid(k);
        let px = p(x)?;
        if prev_p != 0.0 && px != 0.0 && prev_p.signum() != px.signum() {
            let r = crate::numerics::bisect(
                |z| ldpc_trial_entropy(dd, z).unwrap_or(f64::NAN),
                crate::numerics::Bracket::new(prev_x, x)?,
                tol,
            )?;
            roots.push(r);
        } else if px == 0.0 && prev_p != 0.0 {
            // isolated exact zero on the grid
            roots.push(x);
        }
        prev_x = x;
        prev_p = px;
    }

    if roots.is_empty() {
        return Ok(Threshold { value: 1.0, capped_at_one: true });
    }
    let sys = ldpc_bec(dd)?;
    let eps = roots
        .iter()
        .map(|&r| sys.eps_root_closed(r).unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    Ok(Threshold { value: eps.min(1.0), capped_at_one: false })
}

/// Convenience: Maxwell threshold and the potential threshold computed by
/// the generic machinery, for equality checks.
pub fn maxwell_vs_potential(dd: &DegreeDistribution, tol: &Tolerances) -> Result<(f64, f64)> {
    let sys = ldpc_bec(dd)?;
    let mx = maxwell_threshold(dd, tol)?;
    let pt = single::potential_threshold(&sys, tol);
    Ok((mx.value, pt.value))
}
