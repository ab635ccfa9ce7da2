//! Rate functions and scalar constants of the small-gap expansion.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{mode_count, GapGeometry};

fn check_eps(n: usize, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps={eps} must lie in (0, 1)")));
    }
    if n == 3 && eps >= (-1.0f64).exp() {
        return Err(Error::Domain(format!("eps={eps} must be below 1/e for n=3")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("n={n} must be at least 2")));
    }
    Ok(())
}

fn check_alpha(alpha: usize, n: usize) -> Result<()> {
    if alpha == 0 || alpha > mode_count(n) {
        return Err(Error::Domain(format!("mode {alpha} outside 1..={} for n={n}", mode_count(n))));
    }
    Ok(())
}

/// Growth rate of the singular diagonal entries.
pub fn rho(n: usize, eps: f64) -> Result<f64> {
    check_eps(n, eps)?;
    Ok(match n {
        2 => eps.powf(-0.5),
        3 => eps.ln().abs(),
        _ => 1.0,
    })
}

/// Convergence rate of the blow-up factors towards their touching limits.
pub fn r_eps(n: usize, eps: f64) -> Result<f64> {
    check_eps(n, eps)?;
    Ok(match n {
        2 => eps.powf(1.0 / 24.0),
        3 => 1.0 / eps.ln().abs(),
        _ => eps.powf((1.0f64 / 12.0).min((n as f64 - 3.0) / 24.0)),
    })
}

/// Per-mode remainder size of the diagonal expansion (`alpha ≤ n`).
pub fn varrho(alpha: usize, n: usize, eps: f64) -> Result<f64> {
    check_eps(n, eps)?;
    if alpha == 0 || alpha > n {
        return Err(Error::Domain(format!("varrho defined for alpha in 1..={n}, got {alpha}")));
    }
    let nf = n as f64;
    Ok(if alpha < n {
        eps.powf((nf - 1.0) / 24.0)
    } else if n == 2 {
        eps.ln().abs()
    } else {
        eps.powf((nf - 2.0) / 24.0)
    })
}

/// Viscous weight of mode `alpha`: `μ` for tangential translations, `2μ` otherwise.
pub fn l_alpha(alpha: usize, n: usize, mu: f64) -> Result<f64> {
    check_alpha(alpha, n)?;
    Ok(if alpha < n { mu } else { 2.0 * mu })
}

pub fn omega(n: usize, eps: f64) -> Result<f64> {
    check_eps(n, eps)?;
    match n {
        2 => Ok(eps.ln().abs()),
        3 => Ok(1.0),
        _ => Err(Error::Domain(format!("omega is defined for n=2,3 only, got n={n}"))),
    }
}

/// Exact leading coefficient of `∫_{|x'|<R₀} dx'/(ε+2κ|x'|²)` in front of `ρ_n(ε)`:
/// `π/(2κ)^{(n−1)/2}` for `n = 2, 3`.
pub fn leading_prefactor(n: usize, kappa: f64) -> f64 {
    PI / (2.0 * kappa).powf((n as f64 - 1.0) / 2.0)
}

/// Constant term `K_n` of the gap-integral expansion.
pub fn k_constant(n: usize, kappa: f64, r0: f64) -> Result<f64> {
    match n {
        2 => Ok(-1.0 / (kappa * r0)),
        3 => Ok(PI * ((2.0 * kappa).sqrt().ln() + r0.ln()) / kappa),
        _ => Err(Error::Domain(format!("K_n is defined for n=2,3 only, got n={n}"))),
    }
}

/// Two-term expansion `P·ρ_n(ε) + K_n` of the gap integral.
pub fn asymptotic_gap_integral(n: usize, eps: f64, kappa: f64, r0: f64) -> Result<f64> {
    Ok(leading_prefactor(n, kappa) * rho(n, eps)? + k_constant(n, kappa, r0)?)
}

/// Asymptotic diagonal entry `L_α·P·ρ_n(ε) + G*`.
pub fn leading_a11_diag(g: &GapGeometry, alpha: usize, g_star: f64) -> Result<f64> {
    if !(g.n == 2 || g.n == 3) || alpha == 0 || alpha > g.n {
        return Err(Error::Domain(format!("leading diagonal defined for n=2,3 and alpha<=n, got n={} alpha={alpha}", g.n)));
    }
    Ok(l_alpha(alpha, g.n, g.mu)? * leading_prefactor(g.n, g.kappa) * rho(g.n, g.eps)? + g_star)
}

/// Exponential tail `C/R₀·exp(−1/(2C R₀))` of the truncated blow-up factor.
pub fn truncated_tail_bound(r0: f64, c: f64) -> Result<f64> {
    if !(r0 > 0.0 && c > 0.0) {
        return Err(Error::Domain("r0 and C must be positive".into()));
    }
    Ok(c / r0 * (-1.0 / (2.0 * c * r0)).exp())
}
