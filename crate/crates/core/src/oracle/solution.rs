//! Solved fields with their cell classification, plus the discrete bilinear
//! forms and averages evaluated on them.

use std::sync::Arc;

use super::mac::{FlowField, MacGrid};
use crate::error::{Error, Result};

/// Cell label: fluid, or the solid it belongs to.
pub const FLUID: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStokesSolution {
    pub grid: Arc<MacGrid>,
    pub field: FlowField,
    /// Per-cell label, [`FLUID`] or a solid id.
    pub region: Arc<Vec<u8>>,
    pub mu: f64,
    /// `max |div_h u − g + λ|` scaled by `h/‖u‖∞`.
    pub divergence_residual: f64,
    /// Uniform normal velocity removed from the boundary data.
    pub compatibility_correction: f64,
}

impl DiscreteStokesSolution {
    pub fn spacing(&self) -> f64 {
        self.grid.min_spacing()
    }

    pub fn is_fluid(&self, i: usize, j: usize) -> bool {
        self.region[self.grid.cell_at(i, j)] == FLUID
    }

    pub fn fluid_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.grid.nx();
        (0..self.grid.cell_len()).filter(|&k| self.region[k] == FLUID).map(move |k| (k % nx, k / nx))
    }

    pub fn gradient(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        self.field.cell_gradient(&self.grid, i, j)
    }

    pub fn pressure(&self, i: usize, j: usize) -> f64 {
        self.field.p[self.grid.cell_at(i, j)]
    }

    /// Largest face velocity magnitude.
    pub fn velocity_scale(&self) -> f64 {
        self.field.u.iter().chain(&self.field.v).fold(0.0f64, |s, v| s.max(v.abs()))
    }

    /// Same grid and labels, combined fields.
    pub fn combine(terms: &[(f64, &DiscreteStokesSolution)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Invalid("empty combination".into()))?.1;
        for (_, s) in terms {
            same_grid(first, s)?;
        }
        let fields: Vec<(f64, &FlowField)> = terms.iter().map(|(c, s)| (*c, &s.field)).collect();
        Ok(Self {
            grid: first.grid.clone(),
            field: FlowField::combination(&first.grid, &fields),
            region: first.region.clone(),
            mu: first.mu,
            divergence_residual: terms.iter().map(|(c, s)| c.abs() * s.divergence_residual).sum(),
            compatibility_correction: terms.iter().map(|(c, s)| c * s.compatibility_correction).sum(),
        })
    }
}

fn same_grid(a: &DiscreteStokesSolution, b: &DiscreteStokesSolution) -> Result<()> {
    if Arc::ptr_eq(&a.grid, &b.grid) || (a.grid == b.grid && a.region == b.region) {
        Ok(())
    } else {
        Err(Error::GridMismatch("solutions live on different grids".into()))
    }
}

/// Symmetric strain `e = (∇u + ∇uᵀ)/2` from a gradient `g[a][b] = ∂_b u_a`.
pub fn strain(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

fn contract(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Cell-center strains of every cell (fluid or not), cached for repeated energies.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainCache {
    pub strains: Vec<[[f64; 2]; 2]>,
}

impl StrainCache {
    pub fn new(s: &DiscreteStokesSolution) -> Self {
        let g = &s.grid;
        let mut strains = vec![[[0.0; 2]; 2]; g.cell_len()];
        for (i, j) in s.fluid_cells() {
            strains[g.cell_at(i, j)] = strain(&s.gradient(i, j));
        }
        Self { strains }
    }
}

/// `Σ_fluid V·2μ e(a):e(b)`.
pub fn energy(a: &DiscreteStokesSolution, b: &DiscreteStokesSolution) -> Result<f64> {
    same_grid(a, b)?;
    Ok(energy_cached(a, &StrainCache::new(a), &StrainCache::new(b)))
}

/// Energy from precomputed strains; `layout` supplies the grid and labels.
pub fn energy_cached(layout: &DiscreteStokesSolution, a: &StrainCache, b: &StrainCache) -> f64 {
    let g = &layout.grid;
    let mut sum = 0.0;
    for (i, j) in layout.fluid_cells() {
        let k = g.cell_at(i, j);
        sum += g.cell_volume(i, j) * contract(&a.strains[k], &b.strains[k]);
    }
    2.0 * layout.mu * sum
}

/// Volume-weighted mean of a cell field over the fluid cells selected by `select(x, y)`.
pub fn cell_average(
    s: &DiscreteStokesSolution,
    values: &[f64],
    select: impl Fn(f64, f64) -> bool,
) -> Result<f64> {
    let g = &s.grid;
    if values.len() != g.cell_len() {
        return Err(Error::GridMismatch("cell field does not match the grid".into()));
    }
    let (mut num, mut vol) = (0.0, 0.0);
    for (i, j) in s.fluid_cells() {
        let (x, y) = g.cell_pos(i, j);
        if select(x, y) {
            let v = g.cell_volume(i, j);
            num += v * values[g.cell_at(i, j)];
            vol += v;
        }
    }
    if vol == 0.0 {
        return Err(Error::Domain("averaging region contains no fluid cells".into()));
    }
    Ok(num / vol)
}
