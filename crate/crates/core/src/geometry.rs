//! Gap geometry between two nearly touching particles and the rigid-motion basis.

use crate::error::{Error, Result};

/// Absolute tolerance used to classify points as lying on a gap wall.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Narrow region between the particles: the walls are `x_n = ±(ε/2 + κ|x'|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapGeometry {
    pub n: usize,
    pub eps: f64,
    pub kappa: f64,
    pub r0: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Upper,
    Lower,
}

impl GapGeometry {
    pub fn new(n: usize, eps: f64, kappa: f64, r0: f64, mu: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension n={n} must be at least 2")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Invalid(format!("eps={eps} must be finite and non-negative")));
        }
        for (name, v) in [("kappa", kappa), ("r0", r0), ("mu", mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name}={v} must be positive")));
            }
        }
        if eps >= 2.0 * kappa * r0 * r0 {
            return Err(Error::Invalid(format!(
                "eps={eps} is not narrow: need eps < 2*kappa*r0^2 = {}",
                2.0 * kappa * r0 * r0
            )));
        }
        Ok(Self { n, eps, kappa, r0, mu })
    }

    /// Same geometry at a different gap.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.n, eps, self.kappa, self.r0, self.mu)
    }

    pub fn mode_count(&self) -> usize {
        mode_count(self.n)
    }

    fn check_dim(&self, len: usize, want: usize) -> Result<()> {
        if len != want {
            return Err(Error::Invalid(format!("expected a {want}-vector, got length {len}")));
        }
        Ok(())
    }

    /// `ε + 2κ|x'|²`, the film thickness above `x'`.
    pub fn delta(&self, xp: &[f64]) -> Result<f64> {
        self.check_dim(xp.len(), self.n - 1)?;
        let s = norm_sq(xp);
        if s.sqrt() > 2.0 * self.r0 {
            return Err(Error::Domain(format!(
                "|x'|={} exceeds 2*r0={}",
                s.sqrt(),
                2.0 * self.r0
            )));
        }
        Ok(self.delta_sq(s))
    }

    /// Thickness from `|x'|²`, without range checks.
    #[inline]
    pub fn delta_sq(&self, s: f64) -> f64 {
        self.eps + 2.0 * (self.kappa * s)
    }

    /// Height of the upper wall `ε/2 + κ|x'|²`, without range checks.
    #[inline]
    pub fn wall_height_sq(&self, s: f64) -> f64 {
        0.5 * self.eps + self.kappa * s
    }

    pub fn wall_height(&self, xp: &[f64]) -> f64 {
        self.wall_height_sq(norm_sq(xp))
    }

    /// Normalized height `x_n/δ(x')`, in `[-1/2, 1/2]` on the closed gap.
    pub fn frak_g(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len(), self.n)?;
        let n = self.n;
        let s = norm_sq(&x[..n - 1]);
        if s.sqrt() > 2.0 * self.r0 {
            return Err(Error::Domain(format!("|x'|={} exceeds 2*r0", s.sqrt())));
        }
        let d = self.delta_sq(s);
        if d == 0.0 {
            return Err(Error::Singular("touching point x=0 with eps=0".into()));
        }
        let xn = x[n - 1];
        if xn.abs() > 0.5 * d * (1.0 + 1e-12) + BOUNDARY_TOL {
            return Err(Error::Domain(format!("x_n={xn} lies outside the gap of height {}", d)));
        }
        Ok(xn / d)
    }

    /// Strict membership in `Ω_t = {|x_n| < ε/2 + κ|x'|², |x'| < t}`.
    pub fn in_region(&self, t: f64, x: &[f64]) -> bool {
        if x.len() != self.n {
            return false;
        }
        let n = self.n;
        let s = norm_sq(&x[..n - 1]);
        s.sqrt() < t && x[n - 1].abs() < self.wall_height_sq(s)
    }

    /// Which wall (if any) `x` lies on, to [`BOUNDARY_TOL`].
    pub fn on_wall(&self, x: &[f64]) -> Option<Wall> {
        if x.len() != self.n {
            return None;
        }
        let n = self.n;
        let h = self.wall_height(&x[..n - 1]);
        if (x[n - 1] - h).abs() <= BOUNDARY_TOL {
            Some(Wall::Upper)
        } else if (x[n - 1] + h).abs() <= BOUNDARY_TOL {
            Some(Wall::Lower)
        } else {
            None
        }
    }
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub fn mode_count(n: usize) -> usize {
    n * (n + 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    /// Constant field `e_axis` (1-based axis).
    Translation { axis: usize },
    /// `x_j e_i − x_i e_j` with `1 ≤ i < j ≤ n` (1-based).
    Rotation { i: usize, j: usize },
}

/// A rigid displacement indexed by `alpha ∈ 1..=n(n+1)/2`.
///
/// Ordering: translations first, then the rotations mixing in `x_n`
/// (`alpha = n+1..2n-1`), then in-plane rotations `(i, j)`, `i < j < n`,
/// in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RigidMode {
    pub n: usize,
    pub alpha: usize,
    pub kind: ModeKind,
}

impl RigidMode {
    pub fn decode(n: usize, alpha: usize) -> Result<Self> {
        let m = mode_count(n);
        if n < 2 || alpha == 0 || alpha > m {
            return Err(Error::Invalid(format!("mode index {alpha} outside 1..={m} for n={n}")));
        }
        let kind = if alpha <= n {
            ModeKind::Translation { axis: alpha }
        } else if alpha < 2 * n {
            ModeKind::Rotation { i: alpha - n, j: n }
        } else {
            let mut k = 2 * n;
            let mut found = None;
            'outer: for i in 1..n {
                for j in (i + 1)..n {
                    if k == alpha {
                        found = Some(ModeKind::Rotation { i, j });
                        break 'outer;
                    }
                    k += 1;
                }
            }
            found.expect("index range checked above")
        };
        Ok(Self { n, alpha, kind })
    }

    pub fn encode(n: usize, kind: ModeKind) -> Result<usize> {
        match kind {
            ModeKind::Translation { axis } if (1..=n).contains(&axis) => Ok(axis),
            ModeKind::Rotation { i, j } if i >= 1 && i < j && j <= n => {
                if j == n {
                    return Ok(n + i);
                }
                let mut k = 2 * n;
                for a in 1..n {
                    for b in (a + 1)..n {
                        if (a, b) == (i, j) {
                            return Ok(k);
                        }
                        k += 1;
                    }
                }
                unreachable!("pair validated above")
            }
            _ => Err(Error::Invalid(format!("{kind:?} is not a mode for n={n}"))),
        }
    }

    pub fn all(n: usize) -> Vec<Self> {
        (1..=mode_count(n)).map(|a| Self::decode(n, a).expect("valid index")).collect()
    }

    pub fn is_translation(&self) -> bool {
        matches!(self.kind, ModeKind::Translation { .. })
    }

    pub fn describe(&self) -> String {
        match self.kind {
            ModeKind::Translation { axis } => format!("translation e{axis}"),
            ModeKind::Rotation { i, j } => format!("rotation x{j} e{i} - x{i} e{j}"),
        }
    }

    pub fn psi(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        match self.kind {
            ModeKind::Translation { axis } => out[axis - 1] = 1.0,
            ModeKind::Rotation { i, j } => {
                out[i - 1] = x[j - 1];
                out[j - 1] = -x[i - 1];
            }
        }
        out
    }

    /// `∂_col ψ^(row)`, constant in `x`.
    pub fn grad_psi(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.n]; self.n];
        if let ModeKind::Rotation { i, j } = self.kind {
            g[i - 1][j - 1] = 1.0;
            g[j - 1][i - 1] = -1.0;
        }
        g
    }
}
