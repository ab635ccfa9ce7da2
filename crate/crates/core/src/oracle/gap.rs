//! Localized solves in the narrow region `|x| < R₀` between the two walls
//! `y = ±(ε/2 + κx²)`, for comparison with the singular fields.
//!
//! Two routes are offered. `Direct` imposes the rigid datum on the upper solid,
//! rest on the lower one and the singular-field traces on the sides. `Correction`
//! solves for the difference `w = u − ū` with the analytic forcing `μΔū − ∇p̄`,
//! `div w = 0` (`ū` is exactly solenoidal) and zero data on every wall; `ū` is
//! continued smoothly into the solids. The discretization then acts on `w` alone,
//! whose gradient is bounded, rather than on the singular full field.

use std::sync::Arc;

use super::grid::Grading;
use super::mac::{BoundaryValues, FlowField, MacGrid, StokesData, StokesOperator};
use super::scene::fluid_mean;
use super::solution::{DiscreteStokesSolution, FLUID};
use crate::error::{Error, Result};
use crate::fields::{Particle, SingularFields};
use crate::geometry::{GapGeometry, RigidMode};

/// Minimum number of cells across the gap at `x = 0` for the local solve.
pub const MIN_GAP_SOLVE_CELLS: usize = 8;

/// Relative step of the finite difference that supplies `∂ₓₓū`.
const SECOND_DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapFormulation {
    Correction,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapScene {
    pub geo: GapGeometry,
    pub grading: Grading,
}

impl GapScene {
    pub fn new(geo: GapGeometry, grading: Grading) -> Result<Self> {
        if geo.n != 2 {
            return Err(Error::Invalid(format!("gap solves are two-dimensional, got n={}", geo.n)));
        }
        if geo.eps <= 0.0 {
            return Err(Error::Invalid("gap solves need eps > 0".into()));
        }
        if grading.gap_cells < MIN_GAP_SOLVE_CELLS {
            return Err(Error::UnderResolved { cells: grading.gap_cells, required: MIN_GAP_SOLVE_CELLS });
        }
        Ok(Self { geo, grading })
    }

    /// Unit curvature, `R₀ = 1/4`, unit viscosity, with a grading sized for the local box.
    pub fn standard(eps: f64) -> Result<Self> {
        Self::new(GapGeometry::new(2, eps, 1.0, 0.25, 1.0)?, Self::default_grading())
    }

    pub fn default_grading() -> Grading {
        Grading {
            gap_cells: 8,
            tangential_fraction: 1.0 / 16.0,
            tangential_core: 1.5,
            growth: 1.15,
            h_out: 0.01,
            anchor_x: 0.2,
            anchor_y: 0.2,
        }
    }

    /// Wall height at the lateral sides, i.e. the half-height of the box.
    pub fn half_height(&self) -> f64 {
        self.geo.wall_height_sq(self.geo.r0 * self.geo.r0)
    }

    pub fn grid(&self) -> Result<MacGrid> {
        Ok(MacGrid::new(
            self.grading.tangential_axis(self.geo.eps, self.geo.r0)?,
            self.grading.normal_axis(self.geo.eps, self.half_height())?,
        ))
    }

    /// 0 inside the gap, 1 above the upper wall, 2 below the lower one.
    pub fn label(&self, x: f64, y: f64) -> u8 {
        let h = self.geo.wall_height_sq(x * x);
        if y >= h {
            1
        } else if y <= -h {
            2
        } else {
            FLUID
        }
    }
}

/// A local solve and its difference from the sampled singular field.
#[derive(Debug, Clone)]
pub struct GapSolution {
    pub alpha: usize,
    pub formulation: GapFormulation,
    pub full: DiscreteStokesSolution,
    /// `u − ū` and `p − p̄`, both sampled on the same staggered layout.
    pub difference: DiscreteStokesSolution,
}

/// `ū`, `p̄` of particle 1 sampled on every face, wall point and cell center.
pub fn sampled_singular_field(grid: &MacGrid, fields: &SingularFields, mode: &RigidMode) -> FlowField {
    let u = |x: f64, y: f64| fields.u_bar_unchecked(Particle::One, mode, &[x, y]);
    let mut f = FlowField::zeros(grid);
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let (x, y) = grid.u_pos(i, j);
            f.u[grid.u_at(i, j)] = u(x, y)[0];
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.v_pos(i, j);
            f.v[grid.v_at(i, j)] = u(x, y)[1];
        }
    }
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.cell_pos(i, j);
            f.p[grid.cell_at(i, j)] = fields.p_bar_unchecked(Particle::One, mode, &[x, y]);
        }
    }
    let b = BoundaryValues::from_fn(grid, |x, y| {
        let v = u(x, y);
        [v[0], v[1]]
    });
    f.u_bottom = b.u_bottom;
    f.u_top = b.u_top;
    f.v_left = b.v_left;
    f.v_right = b.v_right;
    f
}

/// `μ∂ₓₓū_c + (μ∂ᵧᵧū_c − ∂_c p̄)` at a point.
fn singular_forcing(fields: &SingularFields, mode: &RigidMode, x: f64, y: f64, c: usize) -> f64 {
    let d = fields.geo.delta_sq(x * x);
    let h = SECOND_DERIVATIVE_STEP * d.sqrt();
    let gp = fields.grad_u_bar_unchecked(Particle::One, mode, &[x + h, y]);
    let gm = fields.grad_u_bar_unchecked(Particle::One, mode, &[x - h, y]);
    let uxx = (gp[c][0] - gm[c][0]) / (2.0 * h);
    fields.geo.mu * uxx + fields.momentum_residual_unchecked(Particle::One, mode, c + 1, &[x, y])
}

struct Labels {
    u: Vec<u8>,
    v: Vec<u8>,
    cells: Vec<u8>,
}

fn labels(scene: &GapScene, grid: &MacGrid) -> Labels {
    let mut u = vec![FLUID; grid.u_len()];
    let mut v = vec![FLUID; grid.v_len()];
    let mut cells = vec![FLUID; grid.cell_len()];
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let (x, y) = grid.u_pos(i, j);
            u[grid.u_at(i, j)] = scene.label(x, y);
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.v_pos(i, j);
            v[grid.v_at(i, j)] = scene.label(x, y);
        }
    }
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.cell_pos(i, j);
            cells[grid.cell_at(i, j)] = scene.label(x, y);
        }
    }
    Labels { u, v, cells }
}

fn correction_data(grid: &MacGrid, lab: &Labels, fields: &SingularFields, mode: &RigidMode) -> StokesData {
    let mut d = StokesData::zero(grid);
    for j in 0..grid.ny() {
        for i in 1..grid.nx() {
            let k = grid.u_at(i, j);
            if lab.u[k] == FLUID {
                let (x, y) = grid.u_pos(i, j);
                d.fx[k] = singular_forcing(fields, mode, x, y, 0);
            }
        }
    }
    for j in 1..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.v_at(i, j);
            if lab.v[k] == FLUID {
                let (x, y) = grid.v_pos(i, j);
                d.fy[k] = singular_forcing(fields, mode, x, y, 1);
            }
        }
    }
    d
}

fn direct_data(scene: &GapScene, grid: &MacGrid, lab: &Labels, fields: &SingularFields, mode: &RigidMode) -> (StokesData, f64) {
    let value = |x: f64, y: f64| -> [f64; 2] {
        match scene.label(x, y) {
            1 => {
                let p = mode.psi(&[x, y]);
                [p[0], p[1]]
            }
            2 => [0.0, 0.0],
            _ => {
                let u = fields.u_bar_unchecked(Particle::One, mode, &[x, y]);
                [u[0], u[1]]
            }
        }
    };
    let mut d = StokesData::zero(grid);
    d.boundary = BoundaryValues::from_fn(grid, value);
    let corr = d.boundary.project_compatible_on(grid, |x, y| scene.label(x, y) == FLUID);
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let k = grid.u_at(i, j);
            if lab.u[k] == 1 {
                let (x, y) = grid.u_pos(i, j);
                d.u_target[k] = mode.psi(&[x, y])[0];
            }
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.v_at(i, j);
            if lab.v[k] == 1 {
                let (x, y) = grid.v_pos(i, j);
                d.v_target[k] = mode.psi(&[x, y])[1];
            }
        }
    }
    (d, corr)
}

/// Local solves for several modes of particle 1, sharing one factorization.
pub fn solve_gap_modes(scene: &GapScene, alphas: &[usize], formulation: GapFormulation) -> Result<Vec<GapSolution>> {
    let grid = scene.grid()?;
    let lab = labels(scene, &grid);
    let fields = SingularFields::new(scene.geo)?;
    let modes: Vec<RigidMode> = alphas.iter().map(|&a| RigidMode::decode(2, a)).collect::<Result<_>>()?;
    let bars: Vec<FlowField> = modes.iter().map(|m| sampled_singular_field(&grid, &fields, m)).collect();
    let mut data = Vec::with_capacity(modes.len());
    let mut corrections = Vec::with_capacity(modes.len());
    for m in &modes {
        let (d, c) = match formulation {
            GapFormulation::Correction => (correction_data(&grid, &lab, &fields, m), 0.0),
            GapFormulation::Direct => direct_data(scene, &grid, &lab, &fields, m),
        };
        data.push(d);
        corrections.push(c);
    }
    let u_solid = lab.u.iter().map(|l| *l != FLUID).collect();
    let v_solid = lab.v.iter().map(|l| *l != FLUID).collect();
    let op = StokesOperator::new(grid.clone(), scene.geo.mu, u_solid, v_solid)?;
    let solved = op.solve(&data)?;
    let grid = Arc::new(grid);
    let region = Arc::new(lab.cells);
    let h = grid.min_spacing();
    let mut out = Vec::with_capacity(solved.len());
    for ((((field, d), bar), corr), &alpha) in solved.into_iter().zip(&data).zip(&bars).zip(corrections).zip(alphas) {
        let res = op.continuity_residual(&field, &d.div);
        let (full_field, mut diff_field) = match formulation {
            GapFormulation::Correction => {
                let mut full = bar.clone();
                full.add_scaled(1.0, &field);
                (full, field)
            }
            GapFormulation::Direct => {
                let mut diff = field.clone();
                diff.add_scaled(-1.0, bar);
                (field, diff)
            }
        };
        let mut full_field = full_field;
        full_field.shift_pressure(-fluid_mean(&grid, &region, &full_field.p));
        diff_field.shift_pressure(-fluid_mean(&grid, &region, &diff_field.p));
        let wrap = |f: FlowField| {
            let scale = f.u.iter().chain(&f.v).fold(0.0f64, |s, v| s.max(v.abs()));
            DiscreteStokesSolution {
                grid: grid.clone(),
                field: f,
                region: region.clone(),
                mu: scene.geo.mu,
                divergence_residual: if scale > 0.0 { res * h / scale } else { res },
                compatibility_correction: corr,
            }
        };
        out.push(GapSolution { alpha, formulation, full: wrap(full_field), difference: wrap(diff_field) });
    }
    Ok(out)
}

pub fn solve_gap(scene: &GapScene, alpha: usize, formulation: GapFormulation) -> Result<GapSolution> {
    Ok(solve_gap_modes(scene, &[alpha], formulation)?.remove(0))
}

fn frobenius(g: &[[f64; 2]; 2]) -> f64 {
    (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]).sqrt()
}

/// Sup-norms of `∇(u − ū)` over fluid cells with `|x| < radius`: plain and weighted by `√δ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceNorms {
    pub sup: f64,
    pub scaled_sup: f64,
    pub cells: usize,
}

pub fn difference_gradient_norms(sol: &GapSolution, geo: &GapGeometry, radius: f64) -> Result<DifferenceNorms> {
    let s = &sol.difference;
    let (mut sup, mut scaled_sup, mut cells) = (0.0f64, 0.0f64, 0usize);
    for (i, j) in s.fluid_cells() {
        let (x, _) = s.grid.cell_pos(i, j);
        if x.abs() < radius {
            let g = frobenius(&s.gradient(i, j));
            sup = sup.max(g);
            scaled_sup = scaled_sup.max(g * geo.delta_sq(x * x).sqrt());
            cells += 1;
        }
    }
    if cells == 0 {
        return Err(Error::Domain(format!("no fluid cells within |x| < {radius}")));
    }
    Ok(DifferenceNorms { sup, scaled_sup, cells })
}

/// Mean of a cell field over the gap slice `|x − xp| < δ(xp)` between the walls,
/// weighting each fluid cell by its overlap with the slice.
pub fn gap_pressure_average(s: &DiscreteStokesSolution, values: &[f64], geo: &GapGeometry, xp: f64) -> Result<f64> {
    let g = &s.grid;
    if values.len() != g.cell_len() {
        return Err(Error::GridMismatch("cell field does not match the grid".into()));
    }
    let half = geo.delta_sq(xp * xp);
    let (lo, hi) = (xp - half, xp + half);
    if lo < g.x.lo() || hi > g.x.hi() {
        return Err(Error::Domain(format!("slice around x'={xp} leaves the grid")));
    }
    let (mut num, mut vol) = (0.0, 0.0);
    for (i, j) in s.fluid_cells() {
        let (xc, yc) = g.cell_pos(i, j);
        if yc.abs() >= geo.wall_height_sq(xc * xc) {
            continue;
        }
        let overlap = (g.x.nodes[i + 1].min(hi) - g.x.nodes[i].max(lo)).max(0.0);
        if overlap > 0.0 {
            let w = overlap * g.y.width(j);
            num += w * values[g.cell_at(i, j)];
            vol += w;
        }
    }
    if vol == 0.0 {
        return Err(Error::Domain(format!("no fluid cells in the slice around x'={xp}")));
    }
    Ok(num / vol)
}
