//! Nonuniform tensor-product grids for the staggered discretization.

use crate::error::{Error, Result};

/// Nodes of one axis, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub nodes: Vec<f64>,
}

impl Axis {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("axis nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(hi > lo) {
            return Err(Error::Invalid("uniform axis needs hi > lo and at least one cell".into()));
        }
        let h = (hi - lo) / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|k| lo + h * k as f64).collect();
        nodes[cells] = hi;
        Self::new(nodes)
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.nodes[i] + self.nodes[i + 1])
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn min_width(&self) -> f64 {
        (0..self.cells()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }

    /// Index of the cell containing `t` (clamped to the axis).
    pub fn locate(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(k) => k.min(self.cells() - 1),
            Err(k) => k.saturating_sub(1).min(self.cells() - 1),
        }
    }
}

/// Offsets `0 = s₀ < s₁ < … = end` with a uniform core of spacing `h0` on `[0, core]`,
/// geometric growth by `growth` up to `h_out`, and a uniform outer run of spacing `h_out`
/// from `anchor` on. Nodes beyond `anchor` do not depend on `h0` or `core`.
pub fn graded_offsets(h0: f64, core: f64, growth: f64, h_out: f64, anchor: f64, end: f64) -> Result<Vec<f64>> {
    if !(h0 > 0.0 && core >= 0.0 && growth > 1.0 && h_out >= h0 && anchor > core && end > anchor) {
        return Err(Error::Invalid(format!(
            "graded axis needs 0 < h0 <= h_out, growth > 1, core < anchor < end (h0={h0}, core={core}, anchor={anchor}, end={end})"
        )));
    }
    let mut s = vec![0.0];
    let nc = (core / h0).ceil() as usize;
    for k in 1..=nc {
        s.push(core * k as f64 / nc as f64);
    }
    let mut h = if nc > 0 { core / nc as f64 } else { h0 };
    let mut pos = *s.last().unwrap();
    loop {
        let next = (h * growth).min(h_out);
        if pos + next > anchor - 0.5 * next {
            break;
        }
        h = next;
        pos += h;
        s.push(pos);
    }
    let gap = anchor - pos;
    let fill = (gap / h.max(h0)).round().max(1.0) as usize;
    for k in 1..=fill {
        s.push(pos + gap * k as f64 / fill as f64);
    }
    *s.last_mut().unwrap() = anchor;
    let mut t = anchor;
    loop {
        let next = t + h_out;
        if next >= end - 0.5 * h_out {
            s.push(end);
            break;
        }
        s.push(next);
        t = next;
    }
    Ok(s)
}

/// Parameters of the graded mesh around a narrow gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    /// Cells across the gap at its thinnest point.
    pub gap_cells: usize,
    /// Tangential core spacing as a fraction of `√ε`.
    pub tangential_fraction: f64,
    /// Tangential core half-width in units of `√ε`.
    pub tangential_core: f64,
    pub growth: f64,
    /// Spacing away from the gap.
    pub h_out: f64,
    /// Offsets beyond which the mesh is independent of `ε` (tangential, normal).
    pub anchor_x: f64,
    pub anchor_y: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self {
            gap_cells: 12,
            tangential_fraction: 1.0 / 24.0,
            tangential_core: 2.0,
            growth: 1.1,
            h_out: 0.03,
            anchor_x: 0.32,
            anchor_y: 0.28,
        }
    }
}

/// Symmetric axis about 0 from `half`-axis offsets.
pub fn mirrored(offsets: &[f64], shift: f64) -> Vec<f64> {
    let mut v: Vec<f64> = offsets.iter().rev().map(|s| -(s + shift)).collect();
    if shift == 0.0 {
        v.pop();
    }
    v.extend(offsets.iter().map(|s| s + shift));
    v
}

impl Grading {
    /// Tangential axis on `[-half, half]`, refined near 0.
    pub fn tangential_axis(&self, eps: f64, half: f64) -> Result<Axis> {
        let se = eps.sqrt();
        let off = graded_offsets(
            self.tangential_fraction * se,
            self.tangential_core * se,
            self.growth,
            self.h_out,
            self.anchor_x.min(0.5 * half),
            half,
        )?;
        Axis::new(mirrored(&off, 0.0))
    }

    /// Normal axis on `[-half, half]`: a uniform block of `gap_cells` on `[-ε/2, ε/2]`
    /// and graded offsets measured from each gap wall.
    pub fn normal_axis(&self, eps: f64, half: f64) -> Result<Axis> {
        if self.gap_cells < 2 {
            return Err(Error::Invalid("at least two cells across the gap".into()));
        }
        let h0 = eps / self.gap_cells as f64;
        let off = graded_offsets(h0, eps, self.growth, self.h_out, self.anchor_y.min(0.5 * half), half - 0.5 * eps)?;
        let mut nodes: Vec<f64> = off.iter().rev().map(|s| -(s + 0.5 * eps)).collect();
        for k in 1..self.gap_cells {
            nodes.push(-0.5 * eps + h0 * k as f64);
        }
        nodes.extend(off.iter().map(|s| s + 0.5 * eps));
        Axis::new(nodes)
    }
}
