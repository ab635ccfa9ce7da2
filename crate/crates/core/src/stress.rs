//! Leading-order Cauchy stress in the gap from determinant ratios, the
//! two-sided bounds on the gap axis, and sweep fits for exponents and
//! geometry constants.

use crate::error::{Error, Result};
use crate::fields::{Particle, SingularFields};
use crate::geometry::{mode_count, GapGeometry, RigidMode};
use crate::rates::{k_constant, l_alpha, leading_prefactor, r_eps, rho};
use crate::stiffness::{extrapolate_scalar, Extrapolated};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `n = 2, 3`: translations normal to the gap carry the singular weights.
    Resonant,
    /// `n > 3`: every mode enters through a plain ratio.
    Regular,
}

impl Branch {
    pub fn of(n: usize) -> Result<Self> {
        match n {
            2 | 3 => Ok(Self::Resonant),
            n if n > 3 => Ok(Self::Regular),
            _ => Err(Error::Invalid(format!("dimension n={n} must be at least 2"))),
        }
    }
}

/// Inputs of the asymptotic stress formula. Ratios are never defaulted:
/// a `None` entry is reported as missing when it is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticStressModel {
    pub n: usize,
    pub branch: Branch,
    /// One ratio per rigid mode, in basis order.
    pub ratios: Vec<Option<f64>>,
    /// Unnormalized geometry constants `G*^α` for `α ≤ n` (resonant branch only).
    pub geometry_constants: Vec<f64>,
}

impl AsymptoticStressModel {
    pub fn new(n: usize, ratios: Vec<Option<f64>>, geometry_constants: Vec<f64>) -> Result<Self> {
        let branch = Branch::of(n)?;
        let m = mode_count(n);
        if ratios.len() != m {
            return Err(Error::Invalid(format!("expected {m} ratios, got {}", ratios.len())));
        }
        if ratios.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Invalid("ratios must be finite".into()));
        }
        let want = if branch == Branch::Resonant { n } else { 0 };
        if geometry_constants.len() != want {
            return Err(Error::Invalid(format!("expected {want} geometry constants, got {}", geometry_constants.len())));
        }
        if geometry_constants.iter().any(|g| !g.is_finite()) {
            return Err(Error::Invalid("geometry constants must be finite".into()));
        }
        Ok(Self { n, branch, ratios, geometry_constants })
    }

    /// Fully specified model.
    pub fn supplied(n: usize, ratios: &[f64], geometry_constants: Vec<f64>) -> Result<Self> {
        Self::new(n, ratios.iter().map(|r| Some(*r)).collect(), geometry_constants)
    }

    fn ratio(&self, alpha: usize) -> Result<f64> {
        self.ratios[alpha - 1].ok_or_else(|| Error::MissingRatio(format!("mode {alpha}")))
    }

    /// Normalized constant `G*^α/(L_α P)`.
    pub fn normalized_constant(&self, g: &GapGeometry, alpha: usize) -> Result<f64> {
        Ok(self.geometry_constants[alpha - 1] / (l_alpha(alpha, g.n, g.mu)? * leading_prefactor(g.n, g.kappa)))
    }

    /// Weight multiplying `σ[ū₁^α, p̄₁^α]` in the leading sum.
    pub fn weight(&self, g: &GapGeometry, alpha: usize) -> Result<f64> {
        let r = self.ratio(alpha)?;
        if self.branch == Branch::Regular || alpha > self.n {
            return Ok(r);
        }
        let inv = 1.0 / rho(g.n, g.eps)?;
        let scale = inv / (l_alpha(alpha, g.n, g.mu)? * leading_prefactor(g.n, g.kappa));
        Ok(r * scale / (1.0 + self.normalized_constant(g, alpha)? * inv))
    }

    fn check(&self, g: &GapGeometry) -> Result<()> {
        if g.n != self.n {
            return Err(Error::Invalid(format!("model for n={} used with n={}", self.n, g.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressPrediction {
    /// Leading-term tensor with the `O(r_ε)` factors set to zero.
    pub leading: Vec<Vec<f64>>,
    /// Size of the additive remainder, up to an unknown constant.
    pub remainder_bound: f64,
    /// Relative size of the dropped multiplicative corrections.
    pub relative_uncertainty: f64,
}

impl StressPrediction {
    /// Frobenius norm of the leading tensor.
    pub fn norm(&self) -> f64 {
        self.leading.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn predict_stress(model: &AsymptoticStressModel, g: &GapGeometry, x: &[f64]) -> Result<StressPrediction> {
    model.check(g)?;
    if !g.in_region(g.r0, x) {
        return Err(Error::Domain(format!("{x:?} lies outside the gap region of radius {}", g.r0)));
    }
    let n = g.n;
    let fields = SingularFields::new(*g)?;
    let mut leading = vec![vec![0.0; n]; n];
    for alpha in 1..=mode_count(n) {
        let w = model.weight(g, alpha)?;
        if w == 0.0 {
            continue;
        }
        let s = fields.stress_at(Particle::One, &RigidMode::decode(n, alpha)?, x)?;
        for (row, srow) in leading.iter_mut().zip(&s) {
            for (v, sv) in row.iter_mut().zip(srow) {
                *v += w * sv;
            }
        }
    }
    let delta = g.delta(&x[..n - 1])?;
    let remainder_bound = match model.branch {
        Branch::Resonant => delta.powf(-0.5) / rho(n, g.eps)?,
        Branch::Regular => delta.powf(-0.5),
    };
    Ok(StressPrediction { leading, remainder_bound, relative_uncertainty: r_eps(n, g.eps)? })
}

/// Midpoint nodes per direction for slice averages of the predicted pressure.
const SLICE_NODES: usize = 64;

/// Prediction at `x` with the pressure gauged by its own average over the
/// slice `|y' − x'| < δ(x')` of the gap (n = 2), matching how oracle stresses are compared.
pub fn predict_stress_gauged(model: &AsymptoticStressModel, g: &GapGeometry, x: &[f64]) -> Result<StressPrediction> {
    if g.n != 2 {
        return Err(Error::Invalid("gauged predictions are two-dimensional".into()));
    }
    let mut out = predict_stress(model, g, x)?;
    let fields = SingularFields::new(*g)?;
    let weights: Vec<(f64, RigidMode)> =
        (1..=3).map(|a| Ok((model.weight(g, a)?, RigidMode::decode(2, a)?))).collect::<Result<_>>()?;
    let half = g.delta(&x[..1])?;
    if (x[0].abs() + half) > 2.0 * g.r0 {
        return Err(Error::Domain("averaging slice leaves the gap region".into()));
    }
    let (mut num, mut vol) = (0.0, 0.0);
    let hx = 2.0 * half / SLICE_NODES as f64;
    for i in 0..SLICE_NODES {
        let xs = x[0] - half + (i as f64 + 0.5) * hx;
        let top = g.wall_height(&[xs]);
        let hy = 2.0 * top / SLICE_NODES as f64;
        for j in 0..SLICE_NODES {
            let y = [xs, -top + (j as f64 + 0.5) * hy];
            let p: f64 = weights.iter().map(|(w, m)| w * fields.p_bar_unchecked(Particle::One, m, &y)).sum();
            num += p * hx * hy;
            vol += hx * hy;
        }
    }
    let avg = num / vol;
    for k in 0..2 {
        out.leading[k][k] += avg;
    }
    Ok(out)
}

/// Lower and upper stress magnitudes on the gap axis, up to constants.
pub fn stress_bounds(model: &AsymptoticStressModel, g: &GapGeometry) -> Result<(f64, f64)> {
    model.check(g)?;
    let n = g.n;
    let normal = model.ratio(n)?.abs();
    if normal == 0.0 {
        return Err(Error::Hypothesis("the ratio of the normal translation vanishes".into()));
    }
    let mut largest = normal;
    for alpha in 1..n {
        largest = largest.max(model.ratio(alpha)?.abs());
    }
    let scale = match model.branch {
        Branch::Resonant => g.kappa.powf((n as f64 - 1.0) / 2.0) / (g.mu * g.eps * g.eps * rho(n, g.eps)?),
        Branch::Regular => 1.0 / (g.eps * g.eps),
    };
    Ok((normal * scale, largest * scale))
}

/// Least-squares slope of `log value` against `log eps`, with its standard error.
pub fn fit_exponent(sweep: &[(f64, f64)]) -> Result<(f64, f64)> {
    if sweep.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 sweep points, got {}", sweep.len())));
    }
    if let Some((e, v)) = sweep.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0)) {
        return Err(Error::NonPositive(format!("eps={e}, value={v}")));
    }
    let k = sweep.len() as f64;
    let xs: Vec<f64> = sweep.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = sweep.iter().map(|s| s.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("sweep eps values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok((slope, (ssr / (k - 2.0) / sxx).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConstantFit {
    /// Extrapolated `a₁₁^{αα}(ε) − L_α P ρ_n(ε)`.
    pub constant: Extrapolated,
    /// `L_α K_n`, the part explained by the gap integral alone.
    pub integral_part: f64,
    /// `constant − integral_part`: the residual attributable to the outer region.
    pub outer_part: f64,
}

/// Constant term of a diagonal stiffness sweep `(ε, a₁₁^{αα}(ε))`, ε geometrically decreasing.
pub fn fit_geometry_constant(
    sweep: &[(f64, f64)],
    n: usize,
    alpha: usize,
    kappa: f64,
    mu: f64,
    r0: f64,
) -> Result<GeometryConstantFit> {
    if !(n == 2 || n == 3) || alpha == 0 || alpha > n {
        return Err(Error::Domain(format!("geometry constants need n=2,3 and alpha<=n, got n={n} alpha={alpha}")));
    }
    let lead = l_alpha(alpha, n, mu)? * leading_prefactor(n, kappa);
    let eps: Vec<f64> = sweep.iter().map(|s| s.0).collect();
    let rem: Vec<f64> = sweep.iter().map(|(e, a)| Ok(a - lead * rho(n, *e)?)).collect::<Result<_>>()?;
    let constant = extrapolate_scalar(&eps, &rem)?;
    let integral_part = l_alpha(alpha, n, mu)? * k_constant(n, kappa, r0)?;
    Ok(GeometryConstantFit { constant, integral_part, outer_part: constant.value - integral_part })
}
