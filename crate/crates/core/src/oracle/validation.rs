//! Reference problems for the discretization: plane Poiseuille flow and a
//! single translating disk under grid refinement.

use super::grid::Axis;
use super::mac::{BoundaryValues, MacGrid, StokesData, StokesOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoiseuilleReport {
    /// `max |u − u_exact| / U`
    pub velocity_error: f64,
    /// `max |v| / U`
    pub cross_velocity: f64,
    /// Relative error of every discrete `∂p/∂x` against `−8μU/H²`.
    pub gradient_error: f64,
}

/// Channel spanning the two axes with the parabolic profile of peak
/// `U` imposed at inflow and outflow, and no-slip walls.
pub fn poiseuille(x: Axis, y: Axis, mu: f64, peak: f64) -> Result<PoiseuilleReport> {
    let (h, y0) = (y.hi() - y.lo(), y.lo());
    let profile = move |yy: f64| 4.0 * peak * (yy - y0) * (h - (yy - y0)) / (h * h);
    let grid = MacGrid::new(x, y);
    let op = StokesOperator::new(grid.clone(), mu, vec![false; grid.u_len()], vec![false; grid.v_len()])?;
    let mut d = StokesData::zero(&grid);
    d.boundary = BoundaryValues::from_fn(&grid, |_, yy| [profile(yy), 0.0]);
    let f = op.solve(&[d])?.remove(0);
    let (mut ue, mut ve, mut ge) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let (_, yy) = grid.u_pos(i, j);
            ue = ue.max((f.u[grid.u_at(i, j)] - profile(yy)).abs() / peak);
        }
    }
    for v in &f.v {
        ve = ve.max(v.abs() / peak);
    }
    let dpdx = -8.0 * mu * peak / (h * h);
    for j in 0..grid.ny() {
        for i in 1..grid.nx() {
            let slope = (f.p[grid.cell_at(i, j)] - f.p[grid.cell_at(i - 1, j)]) / (grid.x.center(i) - grid.x.center(i - 1));
            ge = ge.max(((slope - dpdx) / dpdx).abs());
        }
    }
    Ok(PoiseuilleReport { velocity_error: ue, cross_velocity: ve, gradient_error: ge })
}

/// Disk of radius 1/2 at `(0.1, 0.05)` translating with unit horizontal speed in
/// `[-1, 1]²`; returns the face velocities on an `n × n` grid.
fn disk_faces(n: usize) -> Result<(MacGrid, Vec<f64>, Vec<f64>)> {
    let ax = Axis::uniform(-1.0, 1.0, n)?;
    let grid = MacGrid::new(ax.clone(), ax);
    let inside = |x: f64, y: f64| (x - 0.1).powi(2) + (y - 0.05).powi(2) < 0.25;
    let mut u_solid = vec![false; grid.u_len()];
    let mut v_solid = vec![false; grid.v_len()];
    let mut d = StokesData::zero(&grid);
    for j in 0..grid.ny() {
        for i in 0..=grid.nx() {
            let (x, y) = grid.u_pos(i, j);
            let k = grid.u_at(i, j);
            u_solid[k] = inside(x, y);
            d.u_target[k] = if u_solid[k] { 1.0 } else { 0.0 };
        }
    }
    for j in 0..=grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.v_pos(i, j);
            v_solid[grid.v_at(i, j)] = inside(x, y);
        }
    }
    let op = StokesOperator::new(grid.clone(), 1.0, u_solid, v_solid)?;
    let f = op.solve(&[d])?.remove(0);
    Ok((grid, f.u, f.v))
}

/// Face-averaged restriction of a `2n` solution to the `n` grid (x- and y-faces).
fn restrict(fine: &MacGrid, fu: &[f64], fv: &[f64], coarse: &MacGrid) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; coarse.u_len()];
    let mut v = vec![0.0; coarse.v_len()];
    for j in 0..coarse.ny() {
        for i in 0..=coarse.nx() {
            u[coarse.u_at(i, j)] = 0.5 * (fu[fine.u_at(2 * i, 2 * j)] + fu[fine.u_at(2 * i, 2 * j + 1)]);
        }
    }
    for j in 0..=coarse.ny() {
        for i in 0..coarse.nx() {
            v[coarse.v_at(i, j)] = 0.5 * (fv[fine.v_at(2 * i, 2 * j)] + fv[fine.v_at(2 * i + 1, 2 * j)]);
        }
    }
    (u, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub resolutions: Vec<usize>,
    /// RMS face differences between consecutive resolutions.
    pub differences: Vec<f64>,
    /// `log₂` of consecutive difference ratios.
    pub orders: Vec<f64>,
}

/// Observed convergence order of the disk-in-box regression over doubling grids.
pub fn disk_refinement(base: usize, levels: usize) -> Result<RefinementReport> {
    if levels < 3 {
        return Err(Error::Invalid("need at least three resolutions".into()));
    }
    let resolutions: Vec<usize> = (0..levels).map(|k| base << k).collect();
    let sols: Vec<_> = resolutions.iter().map(|&n| disk_faces(n)).collect::<Result<_>>()?;
    let mut differences = Vec::new();
    for w in sols.windows(2) {
        let (cg, cu, cv) = &w[0];
        let (fg, fu, fv) = &w[1];
        let (ru, rv) = restrict(fg, fu, fv, cg);
        let sq: f64 = cu.iter().zip(&ru).chain(cv.iter().zip(&rv)).map(|(a, b)| (a - b).powi(2)).sum();
        differences.push((sq / (cu.len() + cv.len()) as f64).sqrt());
    }
    let orders = differences.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(RefinementReport { resolutions, differences, orders })
}
