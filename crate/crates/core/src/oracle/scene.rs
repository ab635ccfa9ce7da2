//! Two disks in a square box: penalized solves of the decomposed problems.

use std::sync::Arc;

use rayon::prelude::*;

use super::grid::Grading;
use super::mac::{BoundaryValues, MacGrid, StokesData, StokesOperator};
use super::solution::{DiscreteStokesSolution, FLUID};
use crate::error::{Error, Result};
use crate::geometry::RigidMode;

/// Minimum number of cells across the gap at its thinnest point.
pub const MIN_GAP_CELLS: usize = 6;

/// Solenoidal linear boundary flow `(a x + b y + c, d x − a y + e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFlow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl Default for LinearFlow {
    /// A generic choice that excites every rigid mode.
    fn default() -> Self {
        Self { a: 0.6, b: 1.0, c: 0.3, d: -0.4, e: 0.2 }
    }
}

impl LinearFlow {
    pub fn zero() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e: 0.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: s * self.a, b: s * self.b, c: s * self.c, d: s * self.d, e: s * self.e }
    }

    pub fn at(&self, x: f64, y: f64) -> [f64; 2] {
        [self.a * x + self.b * y + self.c, self.d * x - self.a * y + self.e]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxScene {
    pub half_width: f64,
    pub radius: f64,
    pub eps: f64,
    pub mu: f64,
    pub grading: Grading,
}

impl BoxScene {
    pub fn new(half_width: f64, radius: f64, eps: f64, mu: f64, grading: Grading) -> Result<Self> {
        if !(radius > 0.0 && eps > 0.0 && mu > 0.0) {
            return Err(Error::Invalid("radius, eps and mu must be positive".into()));
        }
        if !(2.0 * radius + 0.5 * eps < half_width && radius < half_width) {
            return Err(Error::Invalid("disks must lie strictly inside the box".into()));
        }
        if grading.gap_cells < MIN_GAP_CELLS {
            return Err(Error::UnderResolved { cells: grading.gap_cells, required: MIN_GAP_CELLS });
        }
        Ok(Self { half_width, radius, eps, mu, grading })
    }

    /// Unit disks' reference layout: radius 1/2 in a box of half-width 2.
    pub fn standard(eps: f64) -> Result<Self> {
        Self::new(2.0, 0.5, eps, 1.0, Grading::default())
    }

    pub fn kappa(&self) -> f64 {
        0.5 / self.radius
    }

    /// Disk center of particle 1 (upper) or 2 (lower).
    pub fn center(&self, particle: usize) -> (f64, f64) {
        let c = self.radius + 0.5 * self.eps;
        if particle == 1 {
            (0.0, c)
        } else {
            (0.0, -c)
        }
    }

    /// 0 for fluid, otherwise the particle index.
    pub fn label(&self, x: f64, y: f64) -> u8 {
        for p in [1usize, 2] {
            let (cx, cy) = self.center(p);
            if (x - cx).powi(2) + (y - cy).powi(2) < self.radius * self.radius {
                return p as u8;
            }
        }
        FLUID
    }

    pub fn grid(&self) -> Result<MacGrid> {
        Ok(MacGrid::new(
            self.grading.tangential_axis(self.eps, self.half_width)?,
            self.grading.normal_axis(self.eps, self.half_width)?,
        ))
    }
}

/// One decomposed problem: boundary flow on the box and a rigid mode (or rest) per particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxProblem {
    pub boundary: LinearFlow,
    pub rigid: [Option<usize>; 2],
}

impl BoxProblem {
    pub fn boundary_only(phi: LinearFlow) -> Self {
        Self { boundary: phi, rigid: [None, None] }
    }

    pub fn rigid(particle: usize, alpha: usize) -> Self {
        let mut rigid = [None, None];
        rigid[particle - 1] = Some(alpha);
        Self { boundary: LinearFlow::zero(), rigid }
    }
}

/// Factored operator for a box scene.
#[derive(Debug)]
pub struct BoxSolver {
    pub scene: BoxScene,
    pub grid: Arc<MacGrid>,
    pub region: Arc<Vec<u8>>,
    op: StokesOperator,
    u_label: Vec<u8>,
    v_label: Vec<u8>,
}

impl BoxSolver {
    pub fn new(scene: BoxScene) -> Result<Self> {
        let grid = scene.grid()?;
        let mut u_label = vec![FLUID; grid.u_len()];
        let mut v_label = vec![FLUID; grid.v_len()];
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() {
                let (x, y) = grid.u_pos(i, j);
                u_label[grid.u_at(i, j)] = scene.label(x, y);
            }
        }
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.v_pos(i, j);
                v_label[grid.v_at(i, j)] = scene.label(x, y);
            }
        }
        let mut region = vec![FLUID; grid.cell_len()];
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.cell_pos(i, j);
                region[grid.cell_at(i, j)] = scene.label(x, y);
            }
        }
        let u_solid = u_label.iter().map(|l| *l != FLUID).collect();
        let v_solid = v_label.iter().map(|l| *l != FLUID).collect();
        let op = StokesOperator::new(grid.clone(), scene.mu, u_solid, v_solid)?;
        Ok(Self { scene, grid: Arc::new(grid), region: Arc::new(region), op, u_label, v_label })
    }

    fn data(&self, pb: &BoxProblem) -> Result<(StokesData, f64)> {
        let g = &*self.grid;
        let mut d = StokesData::zero(g);
        let phi = pb.boundary;
        d.boundary = BoundaryValues::from_fn(g, |x, y| phi.at(x, y));
        let corr = d.boundary.project_compatible(g);
        let mut modes = [None, None];
        for (k, a) in pb.rigid.iter().enumerate() {
            if let Some(alpha) = a {
                modes[k] = Some(RigidMode::decode(2, *alpha)?);
            }
        }
        let target = |label: u8, x: f64, y: f64| -> [f64; 2] {
            if label == FLUID {
                return [0.0, 0.0];
            }
            match &modes[label as usize - 1] {
                Some(m) => {
                    let p = m.psi(&[x, y]);
                    [p[0], p[1]]
                }
                None => [0.0, 0.0],
            }
        };
        for j in 0..g.ny() {
            for i in 0..=g.nx() {
                let k = g.u_at(i, j);
                let (x, y) = g.u_pos(i, j);
                d.u_target[k] = target(self.u_label[k], x, y)[0];
            }
        }
        for j in 0..=g.ny() {
            for i in 0..g.nx() {
                let k = g.v_at(i, j);
                let (x, y) = g.v_pos(i, j);
                d.v_target[k] = target(self.v_label[k], x, y)[1];
            }
        }
        Ok((d, corr))
    }

    pub fn solve(&self, problems: &[BoxProblem]) -> Result<Vec<DiscreteStokesSolution>> {
        let prepared: Vec<(StokesData, f64)> = problems.iter().map(|p| self.data(p)).collect::<Result<_>>()?;
        let data: Vec<StokesData> = prepared.iter().map(|(d, _)| d.clone()).collect();
        let fields = self.op.solve(&data)?;
        let h = self.grid.min_spacing();
        fields
            .into_iter()
            .zip(prepared)
            .map(|(mut field, (d, corr))| {
                field.shift_pressure(-fluid_mean(&self.grid, &self.region, &field.p));
                let res = self.op.continuity_residual(&field, &d.div);
                let scale = field.u.iter().chain(&field.v).fold(0.0f64, |s, v| s.max(v.abs()));
                Ok(DiscreteStokesSolution {
                    grid: self.grid.clone(),
                    field,
                    region: self.region.clone(),
                    mu: self.scene.mu,
                    divergence_residual: if scale > 0.0 { res * h / scale } else { res },
                    compatibility_correction: corr,
                })
            })
            .collect()
    }
}

/// Volume-weighted mean of a cell field over fluid cells.
pub fn fluid_mean(grid: &MacGrid, region: &[u8], values: &[f64]) -> f64 {
    let (mut num, mut vol) = (0.0, 0.0);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.cell_at(i, j);
            if region[k] == FLUID {
                let v = grid.cell_volume(i, j);
                num += v * values[k];
                vol += v;
            }
        }
    }
    if vol > 0.0 {
        num / vol
    } else {
        0.0
    }
}

pub fn solve_box(scene: BoxScene, problem: BoxProblem) -> Result<DiscreteStokesSolution> {
    Ok(BoxSolver::new(scene)?.solve(&[problem])?.remove(0))
}

/// All decomposed solutions of one scene: `u₀` and `u_i^α` for both particles.
#[derive(Debug, Clone)]
pub struct BoxBundle {
    pub scene: BoxScene,
    pub phi: LinearFlow,
    pub u0: DiscreteStokesSolution,
    /// `[particle-1 modes, particle-2 modes]`, each of length 3.
    pub modes: [Vec<DiscreteStokesSolution>; 2],
}

impl BoxBundle {
    pub fn solve(scene: BoxScene, phi: LinearFlow) -> Result<Self> {
        let solver = BoxSolver::new(scene)?;
        let mut problems = vec![BoxProblem::boundary_only(phi)];
        for p in [1, 2] {
            for a in 1..=3 {
                problems.push(BoxProblem::rigid(p, a));
            }
        }
        let mut sols = solver.solve(&problems)?;
        let second = sols.split_off(4);
        let first = sols.split_off(1);
        Ok(Self { scene, phi, u0: sols.remove(0), modes: [first, second] })
    }

    /// Independent scenes solved in parallel.
    pub fn solve_many(scenes: &[BoxScene], phi: LinearFlow) -> Vec<Result<Self>> {
        scenes.par_iter().map(|s| Self::solve(*s, phi)).collect()
    }

    pub fn mode(&self, particle: usize, alpha: usize) -> &DiscreteStokesSolution {
        &self.modes[particle - 1][alpha - 1]
    }

    pub fn all(&self) -> impl Iterator<Item = &DiscreteStokesSolution> {
        std::iter::once(&self.u0).chain(self.modes[0].iter()).chain(self.modes[1].iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_guards() {
        assert!(BoxScene::new(1.0, 0.5, 0.1, 1.0, Grading::default()).is_err());
        let g = Grading { gap_cells: 4, ..Grading::default() };
        assert!(matches!(BoxScene::new(2.0, 0.5, 1e-2, 1.0, g), Err(Error::UnderResolved { .. })));
        let s = BoxScene::standard(1e-2).unwrap();
        assert_eq!(s.label(0.0, 0.5), 1);
        assert_eq!(s.label(0.0, -0.5), 2);
        assert_eq!(s.label(0.0, 0.0), FLUID);
        assert_eq!(s.kappa(), 1.0);
    }

    #[test]
    fn linear_flow_is_solenoidal() {
        let f = LinearFlow::default();
        let h = 1e-6;
        let div = (f.at(0.3 + h, 0.2)[0] - f.at(0.3 - h, 0.2)[0] + f.at(0.3, 0.2 + h)[1] - f.at(0.3, 0.2 - h)[1]) / (2.0 * h);
        assert!(div.abs() < 1e-9);
    }
}
