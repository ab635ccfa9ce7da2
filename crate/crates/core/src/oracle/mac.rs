//! Staggered (MAC) Stokes discretization on a nonuniform tensor grid with
//! Brinkman penalization of solid faces, solved monolithically by sparse LU.
//!
//! Unknowns: interior x-faces `u`, interior y-faces `v` and cell pressures `p`.
//! The continuity row of the first cell is replaced by `p = 0` there, which fixes
//! the pressure constant; for compatible data that row holds automatically. Momentum
//! rows use the 3-point nonuniform second-difference formula, which is exact
//! for quadratics; tangential wall values sit half a cell from the adjacent face.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::grid::Axis;
use crate::error::{Error, Result};

/// Penalty strength relative to the local viscous scale: `η = PENALTY·h²/μ`.
pub const PENALTY: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MacGrid {
    pub x: Axis,
    pub y: Axis,
}

impl MacGrid {
    pub fn new(x: Axis, y: Axis) -> Self {
        Self { x, y }
    }

    pub fn nx(&self) -> usize {
        self.x.cells()
    }

    pub fn ny(&self) -> usize {
        self.y.cells()
    }

    pub fn u_len(&self) -> usize {
        (self.nx() + 1) * self.ny()
    }

    pub fn v_len(&self) -> usize {
        self.nx() * (self.ny() + 1)
    }

    pub fn cell_len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn u_at(&self, i: usize, j: usize) -> usize {
        j * (self.nx() + 1) + i
    }

    pub fn v_at(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn cell_at(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn u_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.nodes[i], self.y.center(j))
    }

    pub fn v_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.center(i), self.y.nodes[j])
    }

    pub fn cell_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.center(i), self.y.center(j))
    }

    pub fn cell_volume(&self, i: usize, j: usize) -> f64 {
        self.x.width(i) * self.y.width(j)
    }

    pub fn min_spacing(&self) -> f64 {
        self.x.min_width().min(self.y.min_width())
    }

    fn unknowns(&self) -> (usize, usize, usize) {
        let nu = (self.nx() - 1) * self.ny();
        let nv = self.nx() * (self.ny() - 1);
        (nu, nv, self.cell_len())
    }

    fn u_unknown(&self, i: usize, j: usize) -> usize {
        j * (self.nx() - 1) + (i - 1)
    }

    fn v_unknown(&self, i: usize, j: usize) -> usize {
        let (nu, _, _) = self.unknowns();
        nu + (j - 1) * self.nx() + i
    }

    fn p_unknown(&self, i: usize, j: usize) -> usize {
        let (nu, nv, _) = self.unknowns();
        nu + nv + self.cell_at(i, j)
    }

    pub fn system_size(&self) -> usize {
        let (nu, nv, np) = self.unknowns();
        nu + nv + np
    }
}

/// Dirichlet values on the outer rectangle. Normal components live on the
/// boundary faces; tangential ones at the wall points `(x_i, y_lo/hi)` and
/// `(x_lo/hi, y_j)` for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
    pub v_bottom: Vec<f64>,
    pub v_top: Vec<f64>,
    pub u_bottom: Vec<f64>,
    pub u_top: Vec<f64>,
    pub v_left: Vec<f64>,
    pub v_right: Vec<f64>,
}

impl BoundaryValues {
    pub fn zero(grid: &MacGrid) -> Self {
        Self::from_fn(grid, |_, _| [0.0, 0.0])
    }

    pub fn from_fn(grid: &MacGrid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (xl, xh, yl, yh) = (grid.x.lo(), grid.x.hi(), grid.y.lo(), grid.y.hi());
        Self {
            u_left: (0..ny).map(|j| f(xl, grid.y.center(j))[0]).collect(),
            u_right: (0..ny).map(|j| f(xh, grid.y.center(j))[0]).collect(),
            v_bottom: (0..nx).map(|i| f(grid.x.center(i), yl)[1]).collect(),
            v_top: (0..nx).map(|i| f(grid.x.center(i), yh)[1]).collect(),
            u_bottom: (0..=nx).map(|i| f(grid.x.nodes[i], yl)[0]).collect(),
            u_top: (0..=nx).map(|i| f(grid.x.nodes[i], yh)[0]).collect(),
            v_left: (0..=ny).map(|j| f(xl, grid.y.nodes[j])[1]).collect(),
            v_right: (0..=ny).map(|j| f(xh, grid.y.nodes[j])[1]).collect(),
        }
    }

    /// Net outward flux through the rectangle.
    pub fn net_flux(&self, grid: &MacGrid) -> f64 {
        let mut s = 0.0;
        for j in 0..grid.ny() {
            s += (self.u_right[j] - self.u_left[j]) * grid.y.width(j);
        }
        for i in 0..grid.nx() {
            s += (self.v_top[i] - self.v_bottom[i]) * grid.x.width(i);
        }
        s
    }

    /// Removes the mean normal flux; returns the uniform normal correction applied.
    pub fn project_compatible(&mut self, grid: &MacGrid) -> f64 {
        self.project_compatible_on(grid, |_, _| true)
    }

    /// As [`Self::project_compatible`], spreading the correction only over the
    /// boundary faces whose midpoint satisfies `open(x, y)`.
    pub fn project_compatible_on(&mut self, grid: &MacGrid, open: impl Fn(f64, f64) -> bool) -> f64 {
        let (xl, xh, yl, yh) = (grid.x.lo(), grid.x.hi(), grid.y.lo(), grid.y.hi());
        let mut length = 0.0;
        for j in 0..grid.ny() {
            let y = grid.y.center(j);
            length += grid.y.width(j) * (open(xl, y) as u8 + open(xh, y) as u8) as f64;
        }
        for i in 0..grid.nx() {
            let x = grid.x.center(i);
            length += grid.x.width(i) * (open(x, yl) as u8 + open(x, yh) as u8) as f64;
        }
        if length == 0.0 {
            return 0.0;
        }
        let c = self.net_flux(grid) / length;
        for j in 0..grid.ny() {
            let y = grid.y.center(j);
            if open(xh, y) {
                self.u_right[j] -= c;
            }
            if open(xl, y) {
                self.u_left[j] += c;
            }
        }
        for i in 0..grid.nx() {
            let x = grid.x.center(i);
            if open(x, yh) {
                self.v_top[i] -= c;
            }
            if open(x, yl) {
                self.v_bottom[i] += c;
            }
        }
        c
    }
}

/// Data of one right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesData {
    pub boundary: BoundaryValues,
    /// Velocity imposed on penalized faces (ignored on fluid faces).
    pub u_target: Vec<f64>,
    pub v_target: Vec<f64>,
    /// Body force on fluid faces.
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    /// Prescribed cell divergence.
    pub div: Vec<f64>,
}

impl StokesData {
    pub fn zero(grid: &MacGrid) -> Self {
        Self {
            boundary: BoundaryValues::zero(grid),
            u_target: vec![0.0; grid.u_len()],
            v_target: vec![0.0; grid.v_len()],
            fx: vec![0.0; grid.u_len()],
            fy: vec![0.0; grid.v_len()],
            div: vec![0.0; grid.cell_len()],
        }
    }
}

/// Velocity and pressure on the full staggered layout, including boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub u_bottom: Vec<f64>,
    pub u_top: Vec<f64>,
    pub v_left: Vec<f64>,
    pub v_right: Vec<f64>,
    /// Divergence defect left in the pinned cell (zero for compatible data).
    pub pinned_defect: f64,
}

impl FlowField {
    pub fn zeros(grid: &MacGrid) -> Self {
        Self {
            u: vec![0.0; grid.u_len()],
            v: vec![0.0; grid.v_len()],
            p: vec![0.0; grid.cell_len()],
            u_bottom: vec![0.0; grid.nx() + 1],
            u_top: vec![0.0; grid.nx() + 1],
            v_left: vec![0.0; grid.ny() + 1],
            v_right: vec![0.0; grid.ny() + 1],
            pinned_defect: 0.0,
        }
    }

    /// `self += c·other`
    pub fn add_scaled(&mut self, c: f64, other: &FlowField) {
        let axpy = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        axpy(&mut self.u, &other.u);
        axpy(&mut self.v, &other.v);
        axpy(&mut self.p, &other.p);
        axpy(&mut self.u_bottom, &other.u_bottom);
        axpy(&mut self.u_top, &other.u_top);
        axpy(&mut self.v_left, &other.v_left);
        axpy(&mut self.v_right, &other.v_right);
        self.pinned_defect += c * other.pinned_defect;
    }

    pub fn shift_pressure(&mut self, c: f64) {
        self.p.iter_mut().for_each(|p| *p += c);
    }

    pub fn combination(grid: &MacGrid, terms: &[(f64, &FlowField)]) -> Self {
        let mut out = Self::zeros(grid);
        for (c, f) in terms {
            out.add_scaled(*c, f);
        }
        out
    }

    /// `∂_b u_a` at a cell center (`g[a][b]`), with second-order one-sided
    /// neighbours at the outer walls.
    pub fn cell_gradient(&self, grid: &MacGrid, i: usize, j: usize) -> [[f64; 2]; 2] {
        let (nx, ny) = (grid.nx(), grid.ny());
        let dx = grid.x.width(i);
        let dy = grid.y.width(j);
        let uxx = (self.u[grid.u_at(i + 1, j)] - self.u[grid.u_at(i, j)]) / dx;
        let vyy = (self.v[grid.v_at(i, j + 1)] - self.v[grid.v_at(i, j)]) / dy;
        let uc = |jj: usize| 0.5 * (self.u[grid.u_at(i, jj)] + self.u[grid.u_at(i + 1, jj)]);
        let vc = |ii: usize| 0.5 * (self.v[grid.v_at(ii, j)] + self.v[grid.v_at(ii, j + 1)]);
        let yc = grid.y.center(j);
        let (ys, fs) = if j > 0 {
            (grid.y.center(j - 1), uc(j - 1))
        } else {
            (grid.y.lo(), 0.5 * (self.u_bottom[i] + self.u_bottom[i + 1]))
        };
        let (yn, fnn) = if j + 1 < ny {
            (grid.y.center(j + 1), uc(j + 1))
        } else {
            (grid.y.hi(), 0.5 * (self.u_top[i] + self.u_top[i + 1]))
        };
        let uy = three_point_slope(ys, fs, yc, uc(j), yn, fnn);
        let xc = grid.x.center(i);
        let (xw, fw) = if i > 0 {
            (grid.x.center(i - 1), vc(i - 1))
        } else {
            (grid.x.lo(), 0.5 * (self.v_left[j] + self.v_left[j + 1]))
        };
        let (xe, fe) = if i + 1 < nx {
            (grid.x.center(i + 1), vc(i + 1))
        } else {
            (grid.x.hi(), 0.5 * (self.v_right[j] + self.v_right[j + 1]))
        };
        let vx = three_point_slope(xw, fw, xc, vc(i), xe, fe);
        [[uxx, uy], [vx, vyy]]
    }

    pub fn cell_velocity(&self, grid: &MacGrid, i: usize, j: usize) -> [f64; 2] {
        [
            0.5 * (self.u[grid.u_at(i, j)] + self.u[grid.u_at(i + 1, j)]),
            0.5 * (self.v[grid.v_at(i, j)] + self.v[grid.v_at(i, j + 1)]),
        ]
    }

    pub fn cell_divergence(&self, grid: &MacGrid, i: usize, j: usize) -> f64 {
        (self.u[grid.u_at(i + 1, j)] - self.u[grid.u_at(i, j)]) / grid.x.width(i)
            + (self.v[grid.v_at(i, j + 1)] - self.v[grid.v_at(i, j)]) / grid.y.width(j)
    }
}

/// Derivative at `x1` of the parabola through three points.
pub fn three_point_slope(x0: f64, f0: f64, x1: f64, f1: f64, x2: f64, f2: f64) -> f64 {
    let (hs, hn) = (x1 - x0, x2 - x1);
    hs / (hn * (hs + hn)) * (f2 - f1) + hn / (hs * (hs + hn)) * (f1 - f0)
}

/// Grid, viscosity and solid layout: everything the matrix depends on.
#[derive(Debug, Clone)]
pub struct Layout {
    pub grid: MacGrid,
    pub mu: f64,
    pub u_solid: Vec<bool>,
    pub v_solid: Vec<bool>,
    u_penalty: Vec<f64>,
    v_penalty: Vec<f64>,
}

/// Assembled and factored operator.
pub struct StokesOperator {
    pub layout: Layout,
    matrix: SparseColMat<usize, f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

/// Iterative-refinement sweeps after the direct solve.
const REFINEMENT_STEPS: usize = 3;

impl std::fmt::Debug for StokesOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesOperator").field("layout", &self.layout).finish()
    }
}

/// Collects one matrix row: unknown coefficients plus a constant moved to the right side.
struct Row {
    entries: Vec<(usize, f64)>,
    known: f64,
    /// Factor applied to the whole equation (penalized rows are brought back to
    /// the viscous scale so pivoting sees balanced magnitudes).
    scale: f64,
}

impl Row {
    fn rescale(mut self, s: f64) -> Self {
        self.entries.iter_mut().for_each(|(_, v)| *v *= s);
        self.known *= s;
        self.scale = s;
        self
    }
}

impl Layout {
    pub fn new(grid: MacGrid, mu: f64, u_solid: Vec<bool>, v_solid: Vec<bool>) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Invalid("viscosity must be positive".into()));
        }
        if grid.nx() < 2 || grid.ny() < 2 {
            return Err(Error::Invalid("grid needs at least 2x2 cells".into()));
        }
        if u_solid.len() != grid.u_len() || v_solid.len() != grid.v_len() {
            return Err(Error::GridMismatch("solid masks do not match the grid".into()));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut u_penalty = vec![0.0; grid.u_len()];
        let mut v_penalty = vec![0.0; grid.v_len()];
        for j in 0..ny {
            for i in 1..nx {
                let k = grid.u_at(i, j);
                if u_solid[k] {
                    let h = grid.x.width(i - 1).min(grid.x.width(i)).min(grid.y.width(j));
                    u_penalty[k] = mu / (PENALTY * h * h);
                }
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let k = grid.v_at(i, j);
                if v_solid[k] {
                    let h = grid.y.width(j - 1).min(grid.y.width(j)).min(grid.x.width(i));
                    v_penalty[k] = mu / (PENALTY * h * h);
                }
            }
        }
        Ok(Self { grid, mu, u_solid, v_solid, u_penalty, v_penalty })
    }

    fn x_momentum(&self, i: usize, j: usize, b: &BoundaryValues, u_known: impl Fn(usize, usize) -> f64) -> Row {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mu = self.mu;
        let mut row = Row { entries: Vec::with_capacity(7), known: 0.0, scale: 1.0 };
        let me = g.u_unknown(i, j);
        let (hw, he) = (g.x.width(i - 1), g.x.width(i));
        let cx = 2.0 / (hw + he);
        let mut diag = mu * cx * (1.0 / hw + 1.0 / he);
        for (ii, h) in [(i - 1, hw), (i + 1, he)] {
            let c = -mu * cx / h;
            if ii == 0 || ii == nx {
                row.known += c * u_known(ii, j);
            } else {
                row.entries.push((g.u_unknown(ii, j), c));
            }
        }
        let yc = g.y.center(j);
        let (hs, south) = if j > 0 { (yc - g.y.center(j - 1), Some(j - 1)) } else { (yc - g.y.lo(), None) };
        let (hn, north) = if j + 1 < ny { (g.y.center(j + 1) - yc, Some(j + 1)) } else { (g.y.hi() - yc, None) };
        let cy = 2.0 / (hs + hn);
        diag += mu * cy * (1.0 / hs + 1.0 / hn);
        for (nb, h, wall) in [(south, hs, b.u_bottom[i]), (north, hn, b.u_top[i])] {
            let c = -mu * cy / h;
            match nb {
                Some(jj) => row.entries.push((g.u_unknown(i, jj), c)),
                None => row.known += c * wall,
            }
        }
        let k = g.u_at(i, j);
        let pen = self.u_penalty[k];
        let scale = diag / (diag + pen);
        row.entries.push((me, diag + pen));
        let dxp = g.x.center(i) - g.x.center(i - 1);
        row.entries.push((g.p_unknown(i, j), 1.0 / dxp));
        row.entries.push((g.p_unknown(i - 1, j), -1.0 / dxp));
        row.rescale(scale)
    }

    fn y_momentum(&self, i: usize, j: usize, b: &BoundaryValues, v_known: impl Fn(usize, usize) -> f64) -> Row {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mu = self.mu;
        let mut row = Row { entries: Vec::with_capacity(7), known: 0.0, scale: 1.0 };
        let me = g.v_unknown(i, j);
        let (hs, hn) = (g.y.width(j - 1), g.y.width(j));
        let cy = 2.0 / (hs + hn);
        let mut diag = mu * cy * (1.0 / hs + 1.0 / hn);
        for (jj, h) in [(j - 1, hs), (j + 1, hn)] {
            let c = -mu * cy / h;
            if jj == 0 || jj == ny {
                row.known += c * v_known(i, jj);
            } else {
                row.entries.push((g.v_unknown(i, jj), c));
            }
        }
        let xc = g.x.center(i);
        let (hw, west) = if i > 0 { (xc - g.x.center(i - 1), Some(i - 1)) } else { (xc - g.x.lo(), None) };
        let (he, east) = if i + 1 < nx { (g.x.center(i + 1) - xc, Some(i + 1)) } else { (g.x.hi() - xc, None) };
        let cx = 2.0 / (hw + he);
        diag += mu * cx * (1.0 / hw + 1.0 / he);
        for (nb, h, wall) in [(west, hw, b.v_left[j]), (east, he, b.v_right[j])] {
            let c = -mu * cx / h;
            match nb {
                Some(ii) => row.entries.push((g.v_unknown(ii, j), c)),
                None => row.known += c * wall,
            }
        }
        let k = g.v_at(i, j);
        let pen = self.v_penalty[k];
        let scale = diag / (diag + pen);
        row.entries.push((me, diag + pen));
        let dyp = g.y.center(j) - g.y.center(j - 1);
        row.entries.push((g.p_unknown(i, j), 1.0 / dyp));
        row.entries.push((g.p_unknown(i, j - 1), -1.0 / dyp));
        row.rescale(scale)
    }

    fn continuity(&self, i: usize, j: usize, b: &BoundaryValues) -> Row {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (dx, dy) = (g.x.width(i), g.y.width(j));
        let mut row = Row { entries: Vec::with_capacity(5), known: 0.0, scale: 1.0 };
        for (ii, s) in [(i, -1.0), (i + 1, 1.0)] {
            let c = s * dy;
            if ii == 0 {
                row.known += c * b.u_left[j];
            } else if ii == nx {
                row.known += c * b.u_right[j];
            } else {
                row.entries.push((g.u_unknown(ii, j), c));
            }
        }
        for (jj, s) in [(j, -1.0), (j + 1, 1.0)] {
            let c = s * dx;
            if jj == 0 {
                row.known += c * b.v_bottom[i];
            } else if jj == ny {
                row.known += c * b.v_top[i];
            } else {
                row.entries.push((g.v_unknown(i, jj), c));
            }
        }
        // Brought to the viscous scale `μ/h²` of the momentum rows.
        row.rescale(self.mu / (dx * dy * dx.min(dy)))
    }

    fn assemble(&self) -> Result<SparseColMat<usize, f64>> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let n = g.system_size();
        let zero = BoundaryValues::zero(g);
        let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(12 * n);
        let mut r = 0usize;
        let mut push = |row: Row, r: &mut usize| {
            for (c, v) in row.entries {
                trips.push(Triplet::new(*r, c, v));
            }
            *r += 1;
        };
        for j in 0..ny {
            for i in 1..nx {
                push(self.x_momentum(i, j, &zero, |_, _| 0.0), &mut r);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                push(self.y_momentum(i, j, &zero, |_, _| 0.0), &mut r);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 && j == 0 {
                    push(Row { entries: vec![(g.p_unknown(0, 0), 1.0)], known: 0.0, scale: 1.0 }, &mut r);
                } else {
                    push(self.continuity(i, j, &zero), &mut r);
                }
            }
        }
        SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))
    }

    fn rhs_column(&self, data: &StokesData, out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let b = &data.boundary;
        let u_known = |i: usize, j: usize| if i == 0 { b.u_left[j] } else { b.u_right[j] };
        let mut r = 0usize;
        for j in 0..ny {
            for i in 1..nx {
                let k = g.u_at(i, j);
                let row = self.x_momentum(i, j, b, u_known);
                let f = if self.u_solid[k] { self.u_penalty[k] * data.u_target[k] } else { data.fx[k] };
                out[r] = row.scale * f - row.known;
                r += 1;
            }
        }
        let v_known = |i: usize, j: usize| if j == 0 { b.v_bottom[i] } else { b.v_top[i] };
        for j in 1..ny {
            for i in 0..nx {
                let k = g.v_at(i, j);
                let row = self.y_momentum(i, j, b, v_known);
                let f = if self.v_solid[k] { self.v_penalty[k] * data.v_target[k] } else { data.fy[k] };
                out[r] = row.scale * f - row.known;
                r += 1;
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                out[r] = if i == 0 && j == 0 {
                    0.0
                } else {
                    {
                    let row = self.continuity(i, j, b);
                    row.scale * g.cell_volume(i, j) * data.div[g.cell_at(i, j)] - row.known
                }
                };
                r += 1;
            }
        }
    }
}

impl StokesOperator {
    pub fn new(grid: MacGrid, mu: f64, u_solid: Vec<bool>, v_solid: Vec<bool>) -> Result<Self> {
        let layout = Layout::new(grid, mu, u_solid, v_solid)?;
        let matrix = layout.assemble()?;
        let lu = matrix.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { layout, matrix, lu })
    }

    pub fn grid(&self) -> &MacGrid {
        &self.layout.grid
    }

    fn check(&self, data: &StokesData) -> Result<()> {
        let g = &self.layout.grid;
        let ok = data.u_target.len() == g.u_len()
            && data.v_target.len() == g.v_len()
            && data.fx.len() == g.u_len()
            && data.fy.len() == g.v_len()
            && data.div.len() == g.cell_len()
            && data.boundary.u_left.len() == g.ny()
            && data.boundary.v_bottom.len() == g.nx()
            && data.boundary.u_top.len() == g.nx() + 1
            && data.boundary.v_right.len() == g.ny() + 1;
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch("right-hand side does not match the grid".into()))
        }
    }

    /// Solves for several right-hand sides with the one factorization.
    pub fn solve(&self, data: &[StokesData]) -> Result<Vec<FlowField>> {
        let g = &self.layout.grid;
        let n = g.system_size();
        for d in data {
            self.check(d)?;
        }
        let mut rhs = Mat::<f64>::zeros(n, data.len());
        let mut col = vec![0.0; n];
        for (c, d) in data.iter().enumerate() {
            self.layout.rhs_column(d, &mut col);
            for (r, v) in col.iter().enumerate() {
                rhs[(r, c)] = *v;
            }
        }
        let mut sol = self.lu.solve(&rhs);
        let mut last = f64::INFINITY;
        for _ in 0..REFINEMENT_STEPS {
            let res = &rhs - &self.matrix * &sol;
            let norm = res.norm_max();
            if !(norm < 0.5 * last) {
                break;
            }
            last = norm;
            sol += self.lu.solve(&res);
        }
        let (nx, ny) = (g.nx(), g.ny());
        let mut out = Vec::with_capacity(data.len());
        for (c, d) in data.iter().enumerate() {
            let b = &d.boundary;
            let mut f = FlowField::zeros(g);
            for j in 0..ny {
                f.u[g.u_at(0, j)] = b.u_left[j];
                f.u[g.u_at(nx, j)] = b.u_right[j];
                for i in 1..nx {
                    f.u[g.u_at(i, j)] = sol[(g.u_unknown(i, j), c)];
                }
            }
            for i in 0..nx {
                f.v[g.v_at(i, 0)] = b.v_bottom[i];
                f.v[g.v_at(i, ny)] = b.v_top[i];
                for j in 1..ny {
                    f.v[g.v_at(i, j)] = sol[(g.v_unknown(i, j), c)];
                }
            }
            for j in 0..ny {
                for i in 0..nx {
                    f.p[g.cell_at(i, j)] = sol[(g.p_unknown(i, j), c)];
                }
            }
            f.u_bottom.clone_from(&b.u_bottom);
            f.u_top.clone_from(&b.u_top);
            f.v_left.clone_from(&b.v_left);
            f.v_right.clone_from(&b.v_right);
            f.pinned_defect = f.cell_divergence(g, 0, 0) - d.div[0];
            if f.u.iter().chain(&f.v).chain(&f.p).any(|v| !v.is_finite()) {
                return Err(Error::Solver("non-finite values in the solution".into()));
            }
            out.push(f);
        }
        Ok(out)
    }

    /// `max |div_h u − g|` over all cells.
    pub fn continuity_residual(&self, f: &FlowField, div: &[f64]) -> f64 {
        let g = &self.layout.grid;
        let mut worst = 0.0f64;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                worst = worst.max((f.cell_divergence(g, i, j) - div[g.cell_at(i, j)]).abs());
            }
        }
        worst
    }
}
