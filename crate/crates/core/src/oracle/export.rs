//! Solution dumps: long-format CSV and a compact little-endian binary.
//!
//! Binary layout: magic `SGAP`, version `u32`, `nx` and `ny` as `u32`, the
//! smallest spacing as `f64`, then the x and y node arrays, the u-face,
//! v-face and cell-pressure arrays (row-major, `j` outer), the cell labels
//! as `f64`, the tangential wall values (bottom, top, left, right) and the
//! pinned-cell defect. Node arrays stand in for a single spacing because grids are graded.

use std::io::{Read, Write};
use std::sync::Arc;

use super::grid::Axis;
use super::mac::{FlowField, MacGrid};
use super::solution::DiscreteStokesSolution;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGAP";
pub const VERSION: u32 = 1;

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io(e: std::io::Error) -> Error {
    Error::Invalid(format!("i/o: {e}"))
}

/// One row per face or cell: `kind,i,j,x,y,value`.
pub fn write_csv(s: &DiscreteStokesSolution, mut w: impl Write) -> Result<()> {
    let g = &*s.grid;
    let f = &s.field;
    writeln!(w, "kind,i,j,x,y,value").map_err(io)?;
    let mut row = |kind: &str, i: usize, j: usize, (x, y): (f64, f64), v: f64| {
        writeln!(w, "{kind},{i},{j},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v)).map_err(io)
    };
    for j in 0..g.ny() {
        for i in 0..=g.nx() {
            row("u", i, j, g.u_pos(i, j), f.u[g.u_at(i, j)])?;
        }
    }
    for j in 0..=g.ny() {
        for i in 0..g.nx() {
            row("v", i, j, g.v_pos(i, j), f.v[g.v_at(i, j)])?;
        }
    }
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            row("p", i, j, g.cell_pos(i, j), f.p[g.cell_at(i, j)])?;
        }
    }
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            row("label", i, j, g.cell_pos(i, j), s.region[g.cell_at(i, j)] as f64)?;
        }
    }
    Ok(())
}

pub fn write_binary(s: &DiscreteStokesSolution, mut w: impl Write) -> Result<()> {
    let g = &*s.grid;
    let dims = |n: usize| u32::try_from(n).map_err(|_| Error::Invalid("grid too large for the binary format".into()));
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&dims(g.nx())?.to_le_bytes()).map_err(io)?;
    w.write_all(&dims(g.ny())?.to_le_bytes()).map_err(io)?;
    let labels: Vec<f64> = s.region.iter().map(|l| *l as f64).collect();
    let f = &s.field;
    let defect = [f.pinned_defect];
    let arrays: [&[f64]; 11] =
        [&g.x.nodes, &g.y.nodes, &f.u, &f.v, &f.p, &labels, &f.u_bottom, &f.u_top, &f.v_left, &f.v_right, &defect];
    w.write_all(&g.min_spacing().to_le_bytes()).map_err(io)?;
    for a in arrays {
        for v in a {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Grid, field and labels read back from a binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub grid: MacGrid,
    pub field: FlowField,
    pub labels: Vec<u8>,
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf).map_err(io)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_binary(mut r: impl Read) -> Result<Dump> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a solution dump".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Invalid(format!("unsupported dump version {version}")));
    }
    let (nx, ny) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
    read_f64s(&mut r, 1)?;
    let grid = MacGrid::new(Axis::new(read_f64s(&mut r, nx + 1)?)?, Axis::new(read_f64s(&mut r, ny + 1)?)?);
    let mut field = FlowField::zeros(&grid);
    field.u = read_f64s(&mut r, grid.u_len())?;
    field.v = read_f64s(&mut r, grid.v_len())?;
    field.p = read_f64s(&mut r, grid.cell_len())?;
    let labels = read_f64s(&mut r, grid.cell_len())?.into_iter().map(|v| v as u8).collect();
    field.u_bottom = read_f64s(&mut r, grid.nx() + 1)?;
    field.u_top = read_f64s(&mut r, grid.nx() + 1)?;
    field.v_left = read_f64s(&mut r, grid.ny() + 1)?;
    field.v_right = read_f64s(&mut r, grid.ny() + 1)?;
    field.pinned_defect = read_f64s(&mut r, 1)?[0];
    Ok(Dump { grid, field, labels })
}

impl Dump {
    pub fn into_solution(self, mu: f64) -> DiscreteStokesSolution {
        DiscreteStokesSolution {
            grid: Arc::new(self.grid),
            field: self.field,
            region: Arc::new(self.labels),
            mu,
            divergence_residual: f64::NAN,
            compatibility_correction: 0.0,
        }
    }
}
