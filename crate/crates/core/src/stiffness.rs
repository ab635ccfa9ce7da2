//! Block system for the free rigid-motion constants, Cramer-rule solutions
//! through column-replaced matrices, and extrapolation of sweep limits.
//!
//! Convention: block matrices are stored as system matrices, row = test mode
//! `β`, column = unknown mode `α`, so `A[(β, α)] = a₁₁^{αβ}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::mode_count;

/// Condition estimates above this are reported as warnings.
pub const COND_WARN: f64 = 1e12;
/// Relative residual accepted from the block solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Invalid(format!("matrix is {}x{}, not square", n, m.ncols())));
        }
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].abs());
            for i in k + 1..n {
                if lu[(i, k)].abs() > best {
                    best = lu[(i, k)].abs();
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                singular = true;
                continue;
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm, sign, singular })
    }

    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        self.sign * (0..self.lu.nrows()).map(|i| self.lu[(i, i)]).product::<f64>()
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if self.singular {
            return Err(Error::SingularMatrix { cond: f64::INFINITY });
        }
        let n = self.lu.nrows();
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// `‖M‖₁ ‖M⁻¹‖₁` with the inverse formed column by column.
    pub fn condition_1(&self, m: &DMatrix<f64>) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        let n = m.nrows();
        let mut inv_norm = 0.0f64;
        for j in 0..n {
            let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
            let col = self.solve(&e).expect("non-singular");
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
        }
        one_norm(m) * inv_norm
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn determinant(m: &DMatrix<f64>) -> Result<f64> {
    Ok(Lu::factor(m)?.det())
}

fn replace_column(m: &DMatrix<f64>, col: usize, v: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    out.set_column(col, v);
    out
}

/// Supplies the pairwise energies `a_ij^{αβ}` and loads `b_j^β` (indices 1-based).
pub trait EnergyOracle {
    fn n(&self) -> usize;
    fn energy(&self, i: usize, alpha: usize, j: usize, beta: usize) -> f64;
    fn load(&self, j: usize, beta: usize) -> f64;
}

/// Largest asymmetry found while assembling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `max |a_ij^{αβ} − a_ji^{βα}|` relative to `max |a|`.
    pub pair_defect: f64,
    /// `max |C − Bᵀ|` (absolute).
    pub c_minus_bt: f64,
    /// `max |A − Aᵀ|` relative to `max |A|`.
    pub a_asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSystem {
    pub n: usize,
    pub m: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub b2: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    /// `C₁^α − C₂^α`
    pub x1: DVector<f64>,
    /// `C₂^α`
    pub x2: DVector<f64>,
    pub relative_residual: f64,
    pub condition: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    Truncated,
    ExtrapolatedLimit,
    Supplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFactors {
    pub values: DVector<f64>,
    pub provenance: Provenance,
}

impl BlowupFactors {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("blow-up factors must be finite".into()));
        }
        Ok(Self { values: DVector::from_vec(values), provenance })
    }
}

/// Plain Cramer values next to the leading-order normalization used for `n = 2, 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialDifferences {
    /// `det A₃^α / det A`, exact at finite ε.
    pub exact: DVector<f64>,
    /// `det A₁^α/(a^{αα} det A₀)` for `α ≤ n`, `det A₂^α/det A₀` otherwise (n = 2, 3);
    /// equal to `exact` for `n > 3`.
    pub leading: DVector<f64>,
}

impl StiffnessSystem {
    pub fn new(
        n: usize,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        b1: DVector<f64>,
        b2: DVector<f64>,
    ) -> Result<Self> {
        let m = mode_count(n);
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::Invalid(format!("block {name} must be {m}x{m}")));
            }
        }
        if b1.len() != m || b2.len() != m {
            return Err(Error::Invalid(format!("load vectors must have length {m}")));
        }
        Ok(Self { n, m, a, b, c, d, b1, b2 })
    }

    /// Assemble the blocks from pairwise energies.
    pub fn assemble(oracle: &dyn EnergyOracle) -> Result<(Self, SymmetryReport)> {
        let n = oracle.n();
        let m = mode_count(n);
        let mut e = vec![vec![DMatrix::<f64>::zeros(m, m); 2]; 2];
        let mut scale = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..m {
                    for be in 0..m {
                        let v = oracle.energy(i + 1, al + 1, j + 1, be + 1);
                        if !v.is_finite() {
                            return Err(Error::Solver(format!("non-finite energy a_{}{}^{{{}{}}}", i + 1, j + 1, al + 1, be + 1)));
                        }
                        e[i][j][(al, be)] = v;
                        scale = scale.max(v.abs());
                    }
                }
            }
        }
        let mut pair_defect = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..m {
                    for be in 0..m {
                        pair_defect = pair_defect.max((e[i][j][(al, be)] - e[j][i][(be, al)]).abs());
                    }
                }
            }
        }
        // e[i][j][(α, β)] = a_ij^{αβ}; system entry (β, α).
        let a = DMatrix::from_fn(m, m, |be, al| e[0][0][(al, be)]);
        let b = DMatrix::from_fn(m, m, |be, al| e[0][0][(al, be)] + e[1][0][(al, be)]);
        let c = DMatrix::from_fn(m, m, |be, al| e[0][0][(al, be)] + e[0][1][(al, be)]);
        let d = DMatrix::from_fn(m, m, |be, al| {
            e[0][0][(al, be)] + e[0][1][(al, be)] + e[1][0][(al, be)] + e[1][1][(al, be)]
        });
        let b1 = DVector::from_fn(m, |be, _| oracle.load(1, be + 1));
        let b2 = DVector::from_fn(m, |be, _| oracle.load(2, be + 1));
        let amax = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
        let report = SymmetryReport {
            pair_defect: pair_defect / scale.max(f64::MIN_POSITIVE),
            c_minus_bt: (&c - b.transpose()).iter().fold(0.0f64, |s, v| s.max(v.abs())),
            a_asymmetry: (&a - a.transpose()).iter().fold(0.0f64, |s, v| s.max(v.abs())) / amax,
        };
        Ok((Self::new(n, a, b, c, d, b1, b2)?, report))
    }

    pub fn block_matrix(&self) -> DMatrix<f64> {
        let m = self.m;
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.a);
        out.view_mut((0, m), (m, m)).copy_from(&self.b);
        out.view_mut((m, 0), (m, m)).copy_from(&self.c);
        out.view_mut((m, m), (m, m)).copy_from(&self.d);
        out
    }

    /// `(Y₁, Y₂) = (b₁, b₁ + b₂)`.
    pub fn rhs(&self) -> DVector<f64> {
        let m = self.m;
        DVector::from_fn(2 * m, |k, _| if k < m { self.b1[k] } else { self.b1[k - m] + self.b2[k - m] })
    }

    fn rot(&self) -> std::ops::Range<usize> {
        self.n..self.m
    }

    fn check_mode(&self, alpha: usize) -> Result<usize> {
        if alpha == 0 || alpha > self.m {
            return Err(Error::Invalid(format!("mode {alpha} outside 1..={}", self.m)));
        }
        Ok(alpha - 1)
    }

    /// Full block matrix (used for `n > 3`).
    pub fn f1(&self) -> DMatrix<f64> {
        self.block_matrix()
    }

    /// `F₁^α`: column `m+α` of the block matrix replaced by `(Y₁, Y₂)`.
    pub fn f1_alpha(&self, alpha: usize) -> Result<DMatrix<f64>> {
        let k = self.check_mode(alpha)?;
        Ok(replace_column(&self.f1(), self.m + k, &self.rhs()))
    }

    /// `[[A₀, B₀], [C₀, D]]` with the tangential/normal translation rows and
    /// columns of the first block removed.
    pub fn f0(&self) -> DMatrix<f64> {
        let m = self.m;
        let r = self.rot();
        let q = r.len();
        let mut out = DMatrix::zeros(q + m, q + m);
        for (ii, bi) in r.clone().enumerate() {
            for (jj, aj) in r.clone().enumerate() {
                out[(ii, jj)] = self.a[(bi, aj)];
            }
            for aj in 0..m {
                out[(ii, q + aj)] = self.b[(bi, aj)];
            }
        }
        for bi in 0..m {
            for (jj, aj) in r.clone().enumerate() {
                out[(q + bi, jj)] = self.c[(bi, aj)];
            }
            for aj in 0..m {
                out[(q + bi, q + aj)] = self.d[(bi, aj)];
            }
        }
        out
    }

    /// `F₀^α`: the `α`-th column of `(B₀; D)` replaced by `(b₁ restricted to rotations; b₁ + b₂)`.
    pub fn f0_alpha(&self, alpha: usize) -> Result<DMatrix<f64>> {
        let k = self.check_mode(alpha)?;
        let q = self.m - self.n;
        let y = self.rhs();
        let col = DVector::from_fn(q + self.m, |i, _| if i < q { y[self.n + i] } else { y[self.m + i - q] });
        Ok(replace_column(&self.f0(), q + k, &col))
    }

    pub fn a0(&self) -> DMatrix<f64> {
        let r = self.rot();
        let q = r.len();
        DMatrix::from_fn(q, q, |i, j| self.a[(self.n + i, self.n + j)])
    }

    /// `A₁^α` (`α ≤ n`): first column `(B_α, B_{n+1..m})`, then the rotation columns of rows `α, n+1..m`.
    pub fn a1_alpha(&self, alpha: usize, factors: &DVector<f64>) -> Result<DMatrix<f64>> {
        let k = self.check_mode(alpha)?;
        if k >= self.n {
            return Err(Error::Invalid(format!("A1 is defined for alpha <= n, got {alpha}")));
        }
        let q = self.m - self.n;
        let rows: Vec<usize> = std::iter::once(k).chain(self.rot()).collect();
        Ok(DMatrix::from_fn(q + 1, q + 1, |i, j| {
            if j == 0 {
                factors[rows[i]]
            } else {
                self.a[(rows[i], self.n + j - 1)]
            }
        }))
    }

    /// `A₂^α` (`α > n`): column `α − n` of `A₀` replaced by `B_{n+1..m}`.
    pub fn a2_alpha(&self, alpha: usize, factors: &DVector<f64>) -> Result<DMatrix<f64>> {
        let k = self.check_mode(alpha)?;
        if k < self.n {
            return Err(Error::Invalid(format!("A2 is defined for alpha > n, got {alpha}")));
        }
        let col = DVector::from_fn(self.m - self.n, |i, _| factors[self.n + i]);
        Ok(replace_column(&self.a0(), k - self.n, &col))
    }

    /// `A₃^α`: column `α` of `A` replaced by the factor vector.
    pub fn a3_alpha(&self, alpha: usize, factors: &DVector<f64>) -> Result<DMatrix<f64>> {
        let k = self.check_mode(alpha)?;
        Ok(replace_column(&self.a, k, factors))
    }

    fn check_factors(&self, factors: &BlowupFactors) -> Result<()> {
        if factors.values.len() != self.m {
            return Err(Error::Invalid(format!("expected {} blow-up factors", self.m)));
        }
        Ok(())
    }

    /// Solve the block system by LU with partial pivoting.
    pub fn solve(&self) -> Result<BlockSolution> {
        let mat = self.block_matrix();
        let y = self.rhs();
        let lu = Lu::factor(&mat)?;
        let cond = lu.condition_1(&mat);
        if lu.is_singular() {
            return Err(Error::SingularMatrix { cond });
        }
        let x = lu.solve(&y)?;
        let res = (&mat * &x - &y).norm();
        let ynorm = y.norm();
        let rel = if ynorm > 0.0 { res / ynorm } else { res };
        if !rel.is_finite() || rel > RESIDUAL_TOL {
            return Err(Error::SingularMatrix { cond });
        }
        let mut warnings = Vec::new();
        if cond > COND_WARN {
            warnings.push(format!("block matrix condition estimate {cond:.3e} exceeds {COND_WARN:.0e}"));
        }
        let m = self.m;
        Ok(BlockSolution {
            x1: x.rows(0, m).into_owned(),
            x2: x.rows(m, m).into_owned(),
            relative_residual: rel,
            condition: cond,
            warnings,
        })
    }

    /// `C₂^α = det F₁^α / det F₁` (exact at finite ε).
    pub fn cramer_c2_full(&self) -> Result<DVector<f64>> {
        let den = determinant(&self.f1())?;
        if den == 0.0 {
            return Err(Error::ZeroDeterminant("F1".into()));
        }
        let mut out = DVector::zeros(self.m);
        for a in 1..=self.m {
            out[a - 1] = determinant(&self.f1_alpha(a)?)? / den;
        }
        Ok(out)
    }

    /// `C₂^α = det F₀^α / det F₀`: the reduced system in which the divergent
    /// translation unknowns of the first block are dropped.
    pub fn cramer_c2_reduced(&self) -> Result<DVector<f64>> {
        let den = determinant(&self.f0())?;
        if den == 0.0 {
            return Err(Error::ZeroDeterminant("F0".into()));
        }
        let mut out = DVector::zeros(self.m);
        for a in 1..=self.m {
            out[a - 1] = determinant(&self.f0_alpha(a)?)? / den;
        }
        Ok(out)
    }

    /// Reduced path for `n = 2, 3`, full path otherwise.
    pub fn cramer_c2(&self) -> Result<DVector<f64>> {
        if self.n <= 3 {
            self.cramer_c2_reduced()
        } else {
            self.cramer_c2_full()
        }
    }

    /// `C₁^α − C₂^α` from `Σ_α X_α a₁₁^{αβ} = B_β`.
    pub fn cramer_c1_minus_c2(&self, factors: &BlowupFactors) -> Result<PotentialDifferences> {
        self.check_factors(factors)?;
        let bv = &factors.values;
        let det_a = determinant(&self.a)?;
        if det_a == 0.0 {
            return Err(Error::ZeroDeterminant("A".into()));
        }
        let mut exact = DVector::zeros(self.m);
        for a in 1..=self.m {
            exact[a - 1] = determinant(&self.a3_alpha(a, bv)?)? / det_a;
        }
        if self.n > 3 {
            return Ok(PotentialDifferences { leading: exact.clone(), exact });
        }
        let det_a0 = determinant(&self.a0())?;
        if det_a0 == 0.0 {
            return Err(Error::ZeroDeterminant("A0".into()));
        }
        let mut leading = DVector::zeros(self.m);
        for a in 1..=self.m {
            leading[a - 1] = if a <= self.n {
                determinant(&self.a1_alpha(a, bv)?)? / (self.a[(a - 1, a - 1)] * det_a0)
            } else {
                determinant(&self.a2_alpha(a, bv)?)? / det_a0
            };
        }
        Ok(PotentialDifferences { exact, leading })
    }

    /// Ratios `det A₁^α/det A₀` (`α ≤ n`) and `det A₂^α/det A₀` (`α > n`) for `n = 2, 3`,
    /// or `det A₃^α/det A` for `n > 3`: the inputs of the asymptotic stress model.
    pub fn determinant_ratios(&self, factors: &BlowupFactors) -> Result<DVector<f64>> {
        self.check_factors(factors)?;
        let bv = &factors.values;
        let mut out = DVector::zeros(self.m);
        if self.n > 3 {
            let det_a = determinant(&self.a)?;
            if det_a == 0.0 {
                return Err(Error::ZeroDeterminant("A".into()));
            }
            for a in 1..=self.m {
                out[a - 1] = determinant(&self.a3_alpha(a, bv)?)? / det_a;
            }
            return Ok(out);
        }
        let det_a0 = determinant(&self.a0())?;
        if det_a0 == 0.0 {
            return Err(Error::ZeroDeterminant("A0".into()));
        }
        for a in 1..=self.m {
            let num = if a <= self.n { self.a1_alpha(a, bv)? } else { self.a2_alpha(a, bv)? };
            out[a - 1] = determinant(&num)? / det_a0;
        }
        Ok(out)
    }
}

/// Aitken Δ² extrapolation of the last three entries with a geometric tail error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
}

pub fn extrapolate_scalar(eps: &[f64], values: &[f64]) -> Result<Extrapolated> {
    check_sweep(eps)?;
    if values.len() != eps.len() {
        return Err(Error::Invalid("sweep values and eps differ in length".into()));
    }
    let k = values.len();
    let (s1, s2, s3) = (values[k - 3], values[k - 2], values[k - 1]);
    let (d1, d2) = (s2 - s1, s3 - s2);
    if d2 == 0.0 && d1 == 0.0 {
        return Ok(Extrapolated { value: s3, error: 0.0 });
    }
    if d2.abs() >= d1.abs() {
        return Err(Error::NonConvergentSweep(format!("differences grow: |{d1:.3e}| -> |{d2:.3e}|")));
    }
    let denom = d2 - d1;
    let value = s3 - d2 * d2 / denom;
    Ok(Extrapolated { value, error: (value - s3).abs() })
}

fn check_sweep(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 sweep points, got {}", eps.len())));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("eps must be positive and strictly decreasing".into()));
    }
    let ratios: Vec<f64> = eps.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|r| ((r - ratios[0]) / ratios[0]).abs() > 1e-6) {
        return Err(Error::Invalid("eps must decrease geometrically".into()));
    }
    Ok(())
}

/// Componentwise limit `C*^α` of a sweep of `C₂(ε)` vectors.
pub fn limit_constants(sweep: &[(f64, Vec<f64>)]) -> Result<Vec<Extrapolated>> {
    let eps: Vec<f64> = sweep.iter().map(|s| s.0).collect();
    check_sweep(&eps)?;
    let m = sweep[0].1.len();
    if sweep.iter().any(|s| s.1.len() != m) {
        return Err(Error::Invalid("sweep vectors differ in length".into()));
    }
    (0..m)
        .map(|a| {
            let vals: Vec<f64> = sweep.iter().map(|s| s.1[a]).collect();
            extrapolate_scalar(&eps, &vals)
                .map_err(|e| Error::NonConvergentSweep(format!("mode {}: {e}", a + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(m: usize) -> DMatrix<f64> {
        DMatrix::identity(m, m)
    }

    #[test]
    fn identity_blocks_example() {
        let s = StiffnessSystem::new(
            2,
            eye(3),
            eye(3),
            eye(3),
            eye(3),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        // Both block rows read X1 + X2 = const, so the matrix is singular.
        let mat = s.block_matrix();
        assert!(Lu::factor(&mat).unwrap().is_singular());
        assert!(matches!(s.solve(), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn block_example_with_doubled_d() {
        // X1 + X2 = b1 and X1 + 2X2 = b1 + b2 = (2,4,6): X2 = (1,2,3), X1 = 0.
        let s = StiffnessSystem::new(
            2,
            eye(3),
            eye(3),
            eye(3),
            eye(3) * 2.0,
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        let sol = s.solve().unwrap();
        assert!(sol.x1.norm() < 1e-14);
        assert!((&sol.x2 - DVector::from_vec(vec![1.0, 2.0, 3.0])).norm() < 1e-14);
        assert!(sol.relative_residual < 1e-15);
        let c2 = s.cramer_c2_full().unwrap();
        assert!((c2 - &sol.x2).norm() < 1e-14);
    }

    #[test]
    fn no_potential_difference_when_loads_match() {
        let s = StiffnessSystem::new(
            2,
            eye(3) * 3.0,
            eye(3),
            eye(3),
            eye(3) * 2.0,
            DVector::from_vec(vec![0.5, -1.0, 2.0]),
            DVector::from_vec(vec![0.5, -1.0, 2.0]),
        )
        .unwrap();
        let sol = s.solve().unwrap();
        // 3X1 + X2 = b and X1 + 2X2 = 2b have the unique solution X1 = 0, X2 = b.
        assert!(sol.x1.norm() < 1e-14);
    }

    #[test]
    fn scalar_cramer() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![5.0, 10.0]);
        let d = determinant(&m).unwrap();
        let x1 = determinant(&replace_column(&m, 0, &y)).unwrap() / d;
        let x2 = determinant(&replace_column(&m, 1, &y)).unwrap() / d;
        assert!((x1 - 1.0).abs() < 1e-15 && (x2 - 3.0).abs() < 1e-15);
    }

    #[test]
    fn c1_minus_c2_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 5.0, 7.0]));
        let s = StiffnessSystem::new(2, a.clone(), eye(3), eye(3), eye(3), DVector::zeros(3), DVector::zeros(3)).unwrap();
        let zero = BlowupFactors::new(vec![0.0; 3], Provenance::Supplied).unwrap();
        let r = s.cramer_c1_minus_c2(&zero).unwrap();
        assert_eq!(r.exact.norm(), 0.0);
        let c = 1.7;
        let f = BlowupFactors::new(vec![2.0 * c, 5.0 * c, 7.0 * c], Provenance::Supplied).unwrap();
        let r = s.cramer_c1_minus_c2(&f).unwrap();
        for v in r.exact.iter().chain(r.leading.iter()) {
            assert!((v - c).abs() < 1e-14);
        }
    }

    #[test]
    fn det_of_singular_is_zero() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(determinant(&m).unwrap(), 0.0);
    }

    #[test]
    fn extrapolation_examples() {
        let eps = [1e-2, 1e-3, 1e-4];
        let c = extrapolate_scalar(&eps, &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((c.value, c.error), (4.0, 0.0));
        let vals: Vec<f64> = eps.iter().map(|e: &f64| 2.5 + e.powf(1.0 / 12.0)).collect();
        let r = extrapolate_scalar(&eps, &vals).unwrap();
        assert!((r.value - 2.5).abs() < 2.0 * 1e-4f64.powf(1.0 / 12.0));
        assert!((r.value - 2.5).abs() < 1e-10);
        assert!(matches!(
            extrapolate_scalar(&eps, &[1.0, 1.1, 1.3]),
            Err(Error::NonConvergentSweep(_))
        ));
        assert!(extrapolate_scalar(&[1e-2, 1e-3], &[1.0, 1.0]).is_err());
        assert!(extrapolate_scalar(&[1e-2, 1e-3, 5e-5], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn limit_constants_componentwise() {
        let sweep: Vec<(f64, Vec<f64>)> = [4e-3, 1e-3, 2.5e-4]
            .iter()
            .map(|&e: &f64| (e, vec![1.0 + e.powf(1.0 / 12.0), -3.0, 0.5 - 2.0 * e.sqrt()]))
            .collect();
        let lim = limit_constants(&sweep).unwrap();
        assert!((lim[0].value - 1.0).abs() < 1e-9);
        assert_eq!(lim[1].value, -3.0);
        assert!((lim[2].value - 0.5).abs() < 1e-12);
    }
}
