//! Post-processing of a solved box bundle: the stiffness system from discrete
//! energies, blow-up factors through smooth cutoffs, and gap blow-up metrics.

use nalgebra::DVector;

use super::scene::{BoxBundle, BoxScene};
use super::solution::{energy_cached, strain, DiscreteStokesSolution, StrainCache};
use crate::error::{Error, Result};
use crate::fields::{Particle, SingularFields};
use crate::geometry::{GapGeometry, RigidMode};
use crate::stiffness::{BlockSolution, EnergyOracle, StiffnessSystem, SymmetryReport};

/// Half-width of the gap region used for the singular-field comparison.
pub const GAP_REGION_HALF_WIDTH: f64 = 0.25;

/// Quintic smoothstep: 0 below 0, 1 above 1, with vanishing first and second
/// derivatives at both ends. Returns `(value, slope)`.
pub fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (t2 * t * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - t) * (1.0 - t))
    }
}

/// Cutoff equal to 1 near particle 1 and 0 near particle 2 and the box: the
/// product of a blend in the distances to both disks and a radial bump about
/// the first center that decays between `r_in` and `r_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub r_in: f64,
    pub r_out: f64,
}

impl Cutoff {
    /// Two admissible choices for a disk of radius `r`.
    pub fn defaults(r: f64) -> [Cutoff; 2] {
        [Cutoff { r_in: r + 0.1, r_out: r + 0.4 }, Cutoff { r_in: r + 0.2, r_out: r + 0.6 }]
    }

    pub fn check(&self, s: &BoxScene) -> Result<()> {
        let (_, cy) = s.center(1);
        if !(self.r_in > s.radius && self.r_out > self.r_in && cy + self.r_out < s.half_width && self.r_out < s.half_width) {
            return Err(Error::Invalid(format!(
                "cutoff radii ({}, {}) must satisfy r < r_in < r_out inside the box",
                self.r_in, self.r_out
            )));
        }
        Ok(())
    }

    /// `(χ, ∇χ)` at `(x, y)` in the fluid.
    pub fn eval(&self, s: &BoxScene, x: f64, y: f64) -> (f64, [f64; 2]) {
        let dist = |p: usize| {
            let (cx, cy) = s.center(p);
            let (dx, dy) = (x - cx, y - cy);
            let l = (dx * dx + dy * dy).sqrt();
            (l, [dx / l, dy / l])
        };
        let (l1, n1) = dist(1);
        let (l2, n2) = dist(2);
        let (r1, r2) = ((l1 - s.radius).max(0.0), (l2 - s.radius).max(0.0));
        let sum = r1 + r2;
        let t = r2 / sum;
        let dt = [(r1 * n2[0] - r2 * n1[0]) / (sum * sum), (r1 * n2[1] - r2 * n1[1]) / (sum * sum)];
        let (sv, sd) = smoothstep(t);
        let w = self.r_out - self.r_in;
        let (bv, bd) = smoothstep((l1 - self.r_in) / w);
        let (phi, dphi) = (1.0 - bv, -bd / w);
        (sv * phi, [sd * dt[0] * phi + sv * dphi * n1[0], sd * dt[1] * phi + sv * dphi * n1[1]])
    }
}

/// `Θ = θ(|x|/R₀)·θ(|y|/r)` with `θ` falling from 1 to 0 on `[1, 3/2]`: equal
/// to 1 on the gap-facing part of the first boundary. Returns `(Θ, ∇Θ)`.
pub fn gap_mask(x: f64, y: f64, r0: f64, r: f64) -> (f64, [f64; 2]) {
    let theta = |t: f64| {
        let (v, d) = smoothstep((t - 1.0) / 0.5);
        (1.0 - v, -d / 0.5)
    };
    let (a, da) = theta(x.abs() / r0);
    let (b, db) = theta(y.abs() / r);
    (a * b, [da * x.signum() / r0 * b, a * db * y.signum() / r])
}

/// Strain caches of every solution in a bundle.
pub struct BundleEnergies<'a> {
    bundle: &'a BoxBundle,
    u0: StrainCache,
    modes: [Vec<StrainCache>; 2],
}

impl<'a> BundleEnergies<'a> {
    pub fn new(bundle: &'a BoxBundle) -> Self {
        let caches = |p: usize| bundle.modes[p].iter().map(StrainCache::new).collect();
        Self { bundle, u0: StrainCache::new(&bundle.u0), modes: [caches(0), caches(1)] }
    }
}

impl EnergyOracle for BundleEnergies<'_> {
    fn n(&self) -> usize {
        2
    }

    fn energy(&self, i: usize, alpha: usize, j: usize, beta: usize) -> f64 {
        energy_cached(&self.bundle.u0, &self.modes[i - 1][alpha - 1], &self.modes[j - 1][beta - 1])
    }

    fn load(&self, j: usize, beta: usize) -> f64 {
        -energy_cached(&self.bundle.u0, &self.u0, &self.modes[j - 1][beta - 1])
    }
}

/// `−Σ_fluid V (2μ e(u):e(v) − p div v)` for `v = η ψ_β` with a scalar weight `η`.
fn weighted_traction(sol: &DiscreteStokesSolution, beta: usize, weight: impl Fn(f64, f64) -> (f64, [f64; 2])) -> Result<f64> {
    let mode = RigidMode::decode(2, beta)?;
    let g = &sol.grid;
    let mut sum = 0.0;
    for (i, j) in sol.fluid_cells() {
        let (x, y) = g.cell_pos(i, j);
        let (_, dw) = weight(x, y);
        if dw[0] == 0.0 && dw[1] == 0.0 {
            continue;
        }
        let psi = mode.psi(&[x, y]);
        let gr = sol.gradient(i, j);
        // e(ηψ) = sym(ψ ⊗ ∇η), div(ηψ) = ψ·∇η (ψ is rigid).
        let ev = [[psi[0] * dw[0], 0.5 * (psi[0] * dw[1] + psi[1] * dw[0])], [0.0, psi[1] * dw[1]]];
        let eu01 = 0.5 * (gr[0][1] + gr[1][0]);
        let contraction = gr[0][0] * ev[0][0] + 2.0 * eu01 * ev[0][1] + gr[1][1] * ev[1][1];
        let div_v = psi[0] * dw[0] + psi[1] * dw[1];
        sum += g.cell_volume(i, j) * (2.0 * sol.mu * contraction - sol.pressure(i, j) * div_v);
    }
    Ok(-sum)
}

/// `u_b = Σ_α C₂^α (u₁^α + u₂^α) + u₀`.
pub fn background_solution(bundle: &BoxBundle, c2: &DVector<f64>) -> Result<DiscreteStokesSolution> {
    let mut terms: Vec<(f64, &DiscreteStokesSolution)> = vec![(1.0, &bundle.u0)];
    for a in 0..3 {
        terms.push((c2[a], &bundle.modes[0][a]));
        terms.push((c2[a], &bundle.modes[1][a]));
    }
    DiscreteStokesSolution::combine(&terms)
}

/// Force functional of mode `β` on the first particle through a cutoff.
pub fn blowup_factor(bundle: &BoxBundle, c2: &DVector<f64>, beta: usize, cutoff: &Cutoff) -> Result<f64> {
    cutoff.check(&bundle.scene)?;
    let ub = background_solution(bundle, c2)?;
    weighted_traction(&ub, beta, |x, y| cutoff.eval(&bundle.scene, x, y))
}

/// As [`blowup_factor`] with the part of the first boundary facing the gap
/// (`|x| < R₀`, lower half) excluded.
pub fn blowup_factor_truncated(bundle: &BoxBundle, c2: &DVector<f64>, beta: usize, cutoff: &Cutoff, r0: f64) -> Result<f64> {
    cutoff.check(&bundle.scene)?;
    if !(r0 > 0.0) {
        return Err(Error::Invalid("truncation radius must be positive".into()));
    }
    let ub = background_solution(bundle, c2)?;
    let r = bundle.scene.radius;
    let (_, cy) = bundle.scene.center(1);
    weighted_traction(&ub, beta, |x, y| {
        let (c, dc) = cutoff.eval(&bundle.scene, x, y);
        let (m, dm) = gap_mask(x, y - cy, r0, r);
        (c * (1.0 - m), [dc[0] * (1.0 - m) - c * dm[0], dc[1] * (1.0 - m) - c * dm[1]])
    })
}

/// Everything derived from one bundle.
#[derive(Debug, Clone)]
pub struct BundleAnalysis {
    pub eps: f64,
    pub system: StiffnessSystem,
    pub symmetry: SymmetryReport,
    pub solution: BlockSolution,
    pub min_eigenvalue_a: f64,
    pub det_f0: f64,
    /// `B_β` for each cutoff, `[cutoff][β−1]`.
    pub factors: Vec<Vec<f64>>,
    /// `Σ_α X₁^α a₁₁^{αβ}`, which equals `B_β` in the continuum.
    pub factors_from_system: Vec<f64>,
}

impl BundleAnalysis {
    /// Largest relative discrepancy between the cutoffs.
    pub fn cutoff_discrepancy(&self) -> f64 {
        let mut worst = 0.0f64;
        let first = &self.factors[0];
        let scale = first.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
        for other in &self.factors[1..] {
            for (a, b) in first.iter().zip(other) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }
}

pub fn analyze(bundle: &BoxBundle, cutoffs: &[Cutoff]) -> Result<BundleAnalysis> {
    if cutoffs.is_empty() {
        return Err(Error::Invalid("at least one cutoff is required".into()));
    }
    let energies = BundleEnergies::new(bundle);
    let (system, symmetry) = StiffnessSystem::assemble(&energies)?;
    let solution = system.solve()?;
    let sym_a = 0.5 * (&system.a + system.a.transpose());
    let min_eigenvalue_a = sym_a.symmetric_eigenvalues().min();
    let det_f0 = crate::stiffness::determinant(&system.f0())?;
    let factors = cutoffs
        .iter()
        .map(|c| (1..=3).map(|b| blowup_factor(bundle, &solution.x2, b, c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    // System row β holds a₁₁^{αβ} in column α.
    let factors_from_system = (&system.a * &solution.x1).iter().copied().collect();
    Ok(BundleAnalysis {
        eps: bundle.scene.eps,
        system,
        symmetry,
        solution,
        min_eigenvalue_a,
        det_f0,
        factors,
        factors_from_system,
    })
}

/// Gap blow-up measurements of the free-particle solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBlowup {
    /// `max |p − (q)_δ|` over the central gap cells, `q = Σ X₁^α (p₁^α − p̄₁^α)`.
    pub pressure_deviation: f64,
    /// `max |∇u|` over the same cells.
    pub max_gradient: f64,
    /// `max |p₁ⁿ − gap average of p₁ⁿ|` for the vertical mode alone.
    pub unit_mode_pressure_deviation: f64,
    /// `max |p₁ⁿ|` over the central gap cells.
    pub unit_mode_pressure: f64,
}

fn central_gap_cells(bundle: &BoxBundle) -> Vec<(usize, usize)> {
    let s = &bundle.scene;
    let g = &bundle.u0.grid;
    let i0 = g.x.locate(0.0);
    let cols: Vec<usize> = if i0 > 0 && g.x.nodes[i0] == 0.0 { vec![i0 - 1, i0] } else { vec![i0] };
    let mut out = Vec::new();
    for &i in &cols {
        for j in 0..g.ny() {
            let (x, y) = g.cell_pos(i, j);
            if bundle.u0.is_fluid(i, j) && y.abs() < 0.5 * s.eps + s.kappa() * x * x {
                out.push((i, j));
            }
        }
    }
    out
}

fn frobenius(g: &[[f64; 2]; 2]) -> f64 {
    (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]).sqrt()
}

/// The gap geometry matching a box scene.
pub fn scene_gap_geometry(bundle: &BoxBundle) -> Result<GapGeometry> {
    let s = &bundle.scene;
    GapGeometry::new(2, s.eps, s.kappa(), GAP_REGION_HALF_WIDTH, s.mu)
}

/// `u = u₀ + Σ_α (X₁^α + X₂^α) u₁^α + X₂^α u₂^α`.
pub fn free_particle_solution(bundle: &BoxBundle, sol: &BlockSolution) -> Result<DiscreteStokesSolution> {
    let mut terms: Vec<(f64, &DiscreteStokesSolution)> = vec![(1.0, &bundle.u0)];
    for a in 0..3 {
        terms.push((sol.x1[a] + sol.x2[a], &bundle.modes[0][a]));
        terms.push((sol.x2[a], &bundle.modes[1][a]));
    }
    DiscreteStokesSolution::combine(&terms)
}

/// Stress at the gap center, averaged over the four cells around the origin,
/// with the pressure gauged by its average over the gap slice at `x' = 0`.
pub fn center_stress(bundle: &BoxBundle, sol: &BlockSolution) -> Result<[[f64; 2]; 2]> {
    let geo = scene_gap_geometry(bundle)?;
    let full = free_particle_solution(bundle, sol)?;
    let g = &full.grid;
    let avg = super::gap::gap_pressure_average(&full, &full.field.p, &geo, 0.0)?;
    let (i0, j0) = (g.x.locate(0.0), g.y.locate(0.0));
    if i0 == 0 || j0 == 0 || g.x.nodes[i0] != 0.0 || g.y.nodes[j0] != 0.0 {
        return Err(Error::GridMismatch("the grid has no node at the gap center".into()));
    }
    let mut out = [[0.0; 2]; 2];
    for (i, j) in [(i0 - 1, j0 - 1), (i0, j0 - 1), (i0 - 1, j0), (i0, j0)] {
        let e = strain(&full.gradient(i, j));
        let p = full.pressure(i, j) - avg;
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v += 0.25 * (2.0 * full.mu * e[r][c] - if r == c { p } else { 0.0 });
            }
        }
    }
    Ok(out)
}

pub fn gap_blowup(bundle: &BoxBundle, sol: &BlockSolution) -> Result<GapBlowup> {
    let geo = scene_gap_geometry(bundle)?;
    let fields = SingularFields::new(geo)?;
    let g = bundle.u0.grid.clone();
    let full = free_particle_solution(bundle, sol)?;
    let mut q = vec![0.0; g.cell_len()];
    for a in 0..3 {
        let mode = RigidMode::decode(2, a + 1)?;
        let p1 = &bundle.modes[0][a].field.p;
        for (i, j) in bundle.u0.fluid_cells() {
            let (x, y) = g.cell_pos(i, j);
            if geo.in_region(GAP_REGION_HALF_WIDTH, &[x, y]) {
                let k = g.cell_at(i, j);
                q[k] += sol.x1[a] * (p1[k] - fields.p_bar_unchecked(Particle::One, &mode, &[x, y]));
            }
        }
    }
    let q_avg = super::gap::gap_pressure_average(&full, &q, &geo, 0.0)?;
    let p_unit = &bundle.modes[0][1].field.p;
    let unit_avg = super::gap::gap_pressure_average(&full, p_unit, &geo, 0.0)?;
    let cells = central_gap_cells(bundle);
    if cells.is_empty() {
        return Err(Error::Domain("no fluid cells in the central gap columns".into()));
    }
    let mut out = GapBlowup { pressure_deviation: 0.0, max_gradient: 0.0, unit_mode_pressure_deviation: 0.0, unit_mode_pressure: 0.0 };
    for (i, j) in cells {
        let k = g.cell_at(i, j);
        out.pressure_deviation = out.pressure_deviation.max((full.field.p[k] - q_avg).abs());
        out.max_gradient = out.max_gradient.max(frobenius(&full.gradient(i, j)));
        out.unit_mode_pressure_deviation = out.unit_mode_pressure_deviation.max((p_unit[k] - unit_avg).abs());
        out.unit_mode_pressure = out.unit_mode_pressure.max(p_unit[k].abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_ends() {
        assert_eq!(smoothstep(-0.5), (0.0, 0.0));
        assert_eq!(smoothstep(1.5), (1.0, 0.0));
        let (v, d) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15 && (d - 1.875).abs() < 1e-15);
        let h = 1e-6;
        let fd = (smoothstep(0.3 + h).0 - smoothstep(0.3 - h).0) / (2.0 * h);
        assert!((fd - smoothstep(0.3).1).abs() < 1e-8);
    }

    #[test]
    fn mask_gradient_matches_differences() {
        let h = 1e-6;
        for (x, y) in [(0.3, 0.6), (-0.31, -0.55), (0.28, 0.1)] {
            let (_, d) = gap_mask(x, y, 0.25, 0.5);
            let fx = (gap_mask(x + h, y, 0.25, 0.5).0 - gap_mask(x - h, y, 0.25, 0.5).0) / (2.0 * h);
            let fy = (gap_mask(x, y + h, 0.25, 0.5).0 - gap_mask(x, y - h, 0.25, 0.5).0) / (2.0 * h);
            assert!((fx - d[0]).abs() < 1e-6 && (fy - d[1]).abs() < 1e-6);
        }
        assert_eq!(gap_mask(0.1, 0.2, 0.25, 0.5).0, 1.0);
        assert_eq!(gap_mask(0.5, 0.2, 0.25, 0.5).0, 0.0);
    }

    #[test]
    fn cutoff_values_and_gradient() {
        let s = BoxScene::standard(1e-2).unwrap();
        let c = Cutoff::defaults(s.radius)[0];
        c.check(&s).unwrap();
        let (_, cy) = s.center(1);
        assert!((c.eval(&s, 0.0, cy + s.radius).0 - 1.0).abs() < 1e-12);
        assert!(c.eval(&s, 0.0, cy + 0.55).0 > 0.9);
        assert_eq!(c.eval(&s, 0.0, cy + 1.0).0, 0.0);
        assert!(c.eval(&s, 0.0, -0.3 - s.radius).0 < 1e-12);
        let h = 1e-7;
        for (x, y) in [(0.3, 0.2), (-0.6, 0.9), (0.7, -0.1), (0.05, 0.0)] {
            let (_, d) = c.eval(&s, x, y);
            let fx = (c.eval(&s, x + h, y).0 - c.eval(&s, x - h, y).0) / (2.0 * h);
            let fy = (c.eval(&s, x, y + h).0 - c.eval(&s, x, y - h).0) / (2.0 * h);
            assert!((fx - d[0]).abs() < 1e-5 * (1.0 + d[0].abs()) && (fy - d[1]).abs() < 1e-5 * (1.0 + d[1].abs()), "{x} {y}");
        }
        assert!(Cutoff { r_in: 0.4, r_out: 0.9 }.check(&s).is_err());
    }
}
