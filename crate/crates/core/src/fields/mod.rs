//! Explicit singular velocity/pressure pairs that capture the gap behaviour of
//! each rigid mode, with hand-derived gradients and momentum residuals.

pub mod coefficients;

pub use coefficients::{AuxCoefficients, CoefficientValues, Relation};

use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, ModeKind, RigidMode};

/// Excluded ball around the touching point when `eps = 0`.
pub const TOUCHING_EXCLUSION: f64 = 1e-8;

/// Which particle the field belongs to: 1 carries the rigid datum on the upper wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(Error::Invalid(format!("particle index {i} must be 1 or 2"))),
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Two => -1.0,
        }
    }
}

/// Everything known about one field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pressure: f64,
    /// `grad[c][j] = ∂_j u^(c)`.
    pub grad: Vec<Vec<f64>>,
    pub strain: Vec<Vec<f64>>,
    pub stress: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn divergence(&self) -> f64 {
        (0..self.x.len()).map(|k| self.grad[k][k]).sum()
    }
}

/// Scalars shared by every formula at a point.
struct Local<'a> {
    x: &'a [f64],
    n: usize,
    kappa: f64,
    d: f64,
    g: f64,
    lam: f64,
    /// `∂_j δ`
    dd: Vec<f64>,
    /// `∂_j 𝔊`
    dg: Vec<f64>,
    /// `∂_j λ`, `λ = x'·∇'δ/δ`
    dlam: Vec<f64>,
}

impl<'a> Local<'a> {
    fn new(geo: &GapGeometry, x: &'a [f64]) -> Self {
        let n = geo.n;
        let k = geo.kappa;
        let s: f64 = x[..n - 1].iter().map(|v| v * v).sum();
        let d = geo.delta_sq(s);
        let g = x[n - 1] / d;
        let lam = 4.0 * k * s / d;
        let mut dd = vec![0.0; n];
        let mut dg = vec![0.0; n];
        let mut dlam = vec![0.0; n];
        for j in 0..n - 1 {
            dd[j] = 4.0 * k * x[j];
            dg[j] = -g * dd[j] / d;
            dlam[j] = (8.0 * k * x[j] - lam * dd[j]) / d;
        }
        dg[n - 1] = 1.0 / d;
        Self { x, n, kappa: k, d, g, lam, dd, dg, dlam }
    }

    fn xn(&self) -> f64 {
        self.x[self.n - 1]
    }
}

/// Evaluator bound to a geometry and a coefficient set.
#[derive(Debug, Clone, Copy)]
pub struct SingularFields {
    pub geo: GapGeometry,
    pub coeffs: AuxCoefficients,
    c: CoefficientValues,
}

impl SingularFields {
    pub fn new(geo: GapGeometry) -> Result<Self> {
        let coeffs = AuxCoefficients::from_f64(geo.n, geo.kappa)?;
        Ok(Self { geo, coeffs, c: CoefficientValues::for_curvature(geo.n, geo.kappa)? })
    }

    pub fn with_coefficients(geo: GapGeometry, coeffs: AuxCoefficients) -> Self {
        Self { geo, coeffs, c: coeffs.values() }
    }

    fn check(&self, m: &RigidMode, x: &[f64]) -> Result<()> {
        if m.n != self.geo.n {
            return Err(Error::Invalid(format!("mode for n={} used with n={}", m.n, self.geo.n)));
        }
        if self.geo.eps == 0.0 && x.iter().map(|v| v * v).sum::<f64>().sqrt() < TOUCHING_EXCLUSION {
            return Err(Error::Singular("fields are singular at the touching point".into()));
        }
        self.geo.frak_g(x).map(|_| ())
    }

    fn correction_local(&self, m: &RigidMode, l: &Local) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = l.n;
        let c = &self.c;
        let mut f = vec![0.0; n];
        let mut df = vec![vec![0.0; n]; n];
        let (g, d, xn) = (l.g, l.d, l.xn());
        match m.kind {
            ModeKind::Translation { axis } if axis < n => {
                let a = axis - 1;
                f[n - 1] = 2.0 * l.kappa * l.x[a];
                df[n - 1][a] = 2.0 * l.kappa;
            }
            ModeKind::Translation { .. } => {
                for i in 0..n - 1 {
                    f[i] = c.a1 * l.x[i] / d;
                    for j in 0..n {
                        let kron = if i == j { 1.0 } else { 0.0 };
                        df[i][j] = c.a1 * (kron - l.x[i] * l.dd[j] / d) / d;
                    }
                }
                let w = c.a1 * l.lam + c.a2;
                f[n - 1] = g * w;
                for j in 0..n {
                    df[n - 1][j] = l.dg[j] * w + g * c.a1 * l.dlam[j];
                }
            }
            ModeKind::Rotation { i: ai, j: aj } if aj == n => {
                let a = ai - 1;
                let xa = l.x[a];
                for i in 0..n - 1 {
                    f[i] = c.b1 * l.x[i] * xa / d;
                    for j in 0..n {
                        let dprod = (if j == i { xa } else { 0.0 }) + (if j == a { l.x[i] } else { 0.0 });
                        df[i][j] = c.b1 * (dprod / d - l.x[i] * xa * l.dd[j] / (d * d));
                    }
                }
                f[a] += c.b2 + c.b3 * xn * g;
                for j in 0..n {
                    let dxn = if j == n - 1 { 1.0 } else { 0.0 };
                    df[a][j] += c.b3 * (dxn * g + xn * l.dg[j]);
                }
                let w = c.b1 * l.lam + c.b4;
                f[n - 1] = xa * g * w + c.b5 * xa * xn * g * g;
                for j in 0..n {
                    let dxa = if j == a { 1.0 } else { 0.0 };
                    let dxn = if j == n - 1 { 1.0 } else { 0.0 };
                    df[n - 1][j] = dxa * g * w
                        + xa * l.dg[j] * w
                        + xa * g * c.b1 * l.dlam[j]
                        + c.b5 * (dxa * xn * g * g + xa * dxn * g * g + 2.0 * xa * xn * g * l.dg[j]);
                }
            }
            ModeKind::Rotation { .. } => {}
        }
        (f, df)
    }

    /// The correction profile multiplying `(𝔊² − 1/4)`.
    pub fn correction_field(&self, m: &RigidMode, x: &[f64]) -> Result<Vec<f64>> {
        self.check(m, x)?;
        let l = Local::new(&self.geo, x);
        Ok(self.correction_local(m, &l).0)
    }

    /// Velocity without domain checks; the formula is evaluated wherever `δ > 0`.
    pub fn u_bar_unchecked(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Vec<f64> {
        let l = Local::new(&self.geo, x);
        let s = i.sign();
        let (f, _) = self.correction_local(m, &l);
        let psi = m.psi(x);
        let a = 0.5 + s * l.g;
        let b = s * (l.g * l.g - 0.25);
        (0..l.n).map(|c| psi[c] * a + b * f[c]).collect()
    }

    pub fn u_bar(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Result<Vec<f64>> {
        self.check(m, x)?;
        Ok(self.u_bar_unchecked(i, m, x))
    }

    pub fn grad_u_bar_unchecked(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Vec<Vec<f64>> {
        let l = Local::new(&self.geo, x);
        let n = l.n;
        let s = i.sign();
        let (f, df) = self.correction_local(m, &l);
        let psi = m.psi(x);
        let dpsi = m.grad_psi();
        let a = 0.5 + s * l.g;
        let b = s * (l.g * l.g - 0.25);
        let mut out = vec![vec![0.0; n]; n];
        for c in 0..n {
            for j in 0..n {
                out[c][j] = dpsi[c][j] * a + psi[c] * s * l.dg[j] + s * 2.0 * l.g * l.dg[j] * f[c] + b * df[c][j];
            }
        }
        out
    }

    /// `grad[c][j] = ∂_j ū^(c)`.
    pub fn grad_u_bar(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(m, x)?;
        Ok(self.grad_u_bar_unchecked(i, m, x))
    }

    pub fn p_bar_unchecked(&self, i: Particle, m: &RigidMode, x: &[f64]) -> f64 {
        let l = Local::new(&self.geo, x);
        let n = l.n;
        let mu = self.geo.mu;
        let c = &self.c;
        let (d, xn) = (l.d, l.xn());
        let p = match m.kind {
            ModeKind::Translation { axis } if axis < n => mu * xn * l.dd[axis - 1] / (d * d),
            ModeKind::Translation { .. } => {
                -mu * c.a1 / (4.0 * l.kappa * d * d) + 3.0 * mu * xn * xn / (d * d * d) * (c.a1 * l.lam + c.a2)
            }
            ModeKind::Rotation { i: ai, j } if j == n => {
                let xa = l.x[ai - 1];
                mu * xa / (d * d) * (3.0 * xn * xn / d * (c.b1 * l.lam + c.b4) + c.b6)
            }
            ModeKind::Rotation { .. } => 0.0,
        };
        i.sign() * p
    }

    pub fn p_bar(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Result<f64> {
        self.check(m, x)?;
        Ok(self.p_bar_unchecked(i, m, x))
    }

    /// Closed form of `μ ∂_nn ū^(j) − ∂_j p̄` (component `j` is 1-based).
    pub fn momentum_residual_unchecked(&self, i: Particle, m: &RigidMode, j: usize, x: &[f64]) -> f64 {
        let l = Local::new(&self.geo, x);
        let n = l.n;
        let jj = j - 1;
        let mu = self.geo.mu;
        let c = &self.c;
        let (d, g, xn) = (l.d, l.g, l.xn());
        let (d2, d3, d4) = (d * d, d * d * d, d * d * d * d);
        let r = match m.kind {
            ModeKind::Translation { axis } if axis < n => {
                if jj == n - 1 {
                    0.0
                } else {
                    let a = axis - 1;
                    let k = l.kappa;
                    let kron = if jj == a { 1.0 } else { 0.0 };
                    -mu * xn * (4.0 * k * kron / d2 - 32.0 * k * k * l.x[a] * l.x[jj] / d3)
                }
            }
            ModeKind::Translation { .. } => {
                if jj == n - 1 {
                    0.0
                } else {
                    let w = c.a1 * l.lam + c.a2;
                    -3.0 * mu * xn * xn * (-3.0 * l.dd[jj] * w / d4 + c.a1 * l.dlam[jj] / d3)
                }
            }
            ModeKind::Rotation { i: ai, j: aj } if aj == n => {
                let a = ai - 1;
                let xa = l.x[a];
                if jj == n - 1 {
                    4.0 * mu * c.b5 * xa * g * (5.0 * g * g - 0.375) / d
                } else {
                    let w = c.b1 * l.lam + c.b4;
                    let kron = if jj == a { 1.0 } else { 0.0 };
                    let dterm = kron * w / d3 + xa * (-3.0 * l.dd[jj] * w / d4 + c.b1 * l.dlam[jj] / d3);
                    kron * mu * (c.b3 * (24.0 * g * g - 1.0) + 4.0) / (2.0 * d) - 3.0 * mu * xn * xn * dterm
                }
            }
            ModeKind::Rotation { .. } => 0.0,
        };
        i.sign() * r
    }

    pub fn momentum_residual(&self, i: Particle, m: &RigidMode, j: usize, x: &[f64]) -> Result<f64> {
        if j == 0 || j > self.geo.n {
            return Err(Error::Invalid(format!("component {j} outside 1..={}", self.geo.n)));
        }
        self.check(m, x)?;
        Ok(self.momentum_residual_unchecked(i, m, j, x))
    }

    pub fn sample(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Result<FieldSample> {
        self.check(m, x)?;
        let n = self.geo.n;
        let velocity = self.u_bar_unchecked(i, m, x);
        let pressure = self.p_bar_unchecked(i, m, x);
        let grad = self.grad_u_bar_unchecked(i, m, x);
        let strain: Vec<Vec<f64>> =
            (0..n).map(|a| (0..n).map(|b| 0.5 * (grad[a][b] + grad[b][a])).collect()).collect();
        let stress = stress_from(&strain, pressure, self.geo.mu);
        Ok(FieldSample { x: x.to_vec(), velocity, pressure, grad, strain, stress })
    }

    /// `σ = 2μ e(ū) − p̄ I`.
    pub fn stress_at(&self, i: Particle, m: &RigidMode, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.sample(i, m, x)?.stress)
    }
}

pub fn stress_from(strain: &[Vec<f64>], pressure: f64, mu: f64) -> Vec<Vec<f64>> {
    let n = strain.len();
    (0..n)
        .map(|a| (0..n).map(|b| 2.0 * mu * strain[a][b] - if a == b { pressure } else { 0.0 }).collect())
        .collect()
}
