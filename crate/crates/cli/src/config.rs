//! Flat INI-style run configuration: `[section]` headers, `key = value` lines,
//! `#`/`;` comments, comma-separated lists. Every value remembers its line so
//! validation errors can point at it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use gapstress::geometry::{mode_count, GapGeometry};
use gapstress::oracle::grid::Grading;
use gapstress::oracle::scene::{BoxScene, MIN_GAP_CELLS};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

const KNOWN: &[(&str, &[&str])] = &[
    ("geometry", &["n", "eps", "kappa", "r0", "mu"]),
    ("oracle", &["half_width", "radius", "gap_cells", "tangential_fraction", "growth", "h_out", "formulation"]),
    ("sweep", &["eps"]),
    ("modes", &["alpha", "beta"]),
    ("fields", &["samples"]),
    ("verify", &["quadrature_tolerance", "inject_b3"]),
    ("predict", &["ratios", "geometry_constants", "point"]),
    ("run", &["seed", "out", "jobs"]),
];

/// Raw `section.key → (value, line)` table.
#[derive(Debug, Clone, Default)]
struct Table(BTreeMap<(String, String), (String, usize)>);

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::default();
    let mut section: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.split(['#', ';']).next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else { return err(Some(line), "unterminated section header") };
            let name = name.trim();
            if !KNOWN.iter().any(|(sec, _)| *sec == name) {
                return err(Some(line), format!("unknown section [{name}]"));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = s.split_once('=') else { return err(Some(line), format!("expected `key = value`, got `{s}`")) };
        let Some(sec) = &section else { return err(Some(line), "key outside of any section") };
        let key = key.trim();
        let keys = KNOWN.iter().find(|(name, _)| name == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !keys.contains(&key) {
            return err(Some(line), format!("unknown key `{key}` in [{sec}]"));
        }
        if let Some((_, first)) = table.0.insert((sec.clone(), key.to_string()), (value.trim().to_string(), line)) {
            return err(Some(line), format!("`{key}` already set on line {first}"));
        }
    }
    Ok(table)
}

impl Table {
    fn get(&self, sec: &str, key: &str) -> Option<&(String, usize)> {
        self.0.get(&(sec.to_string(), key.to_string()))
    }

    fn scalar<T: std::str::FromStr>(&self, sec: &str, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(sec, key) {
            None => Ok(default),
            Some((v, line)) => v.parse().or_else(|_| err(Some(*line), format!("cannot parse `{v}` as the value of {sec}.{key}"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, sec: &str, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError> {
        match self.get(sec, key) {
            None => Ok(default),
            Some((v, line)) => v
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().or_else(|_| err(Some(*line), format!("cannot parse `{t}` in {sec}.{key}"))))
                .collect(),
        }
    }

    fn line(&self, sec: &str, key: &str) -> Option<usize> {
        self.get(sec, key).map(|(_, l)| *l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Correction,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: GapGeometry,
    pub half_width: f64,
    pub radius: f64,
    pub grading: Grading,
    pub formulation: Formulation,
    pub sweep: Vec<f64>,
    pub alphas: Vec<usize>,
    pub betas: Vec<usize>,
    pub samples: usize,
    pub quadrature_tolerance: f64,
    /// Test hook: overrides the exact `b3` coefficient in the coefficient check.
    pub inject_b3: Option<i64>,
    pub ratios: Vec<f64>,
    pub geometry_constants: Vec<f64>,
    pub point: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = parse_table(text)?;
        let n: usize = t.scalar("geometry", "n", 2)?;
        let eps = t.scalar("geometry", "eps", 1e-3)?;
        let geometry = GapGeometry::new(n, eps, t.scalar("geometry", "kappa", 1.0)?, t.scalar("geometry", "r0", 0.25)?, t.scalar("geometry", "mu", 1.0)?)
            .or_else(|e| err(t.line("geometry", "n").or(t.line("geometry", "eps")), e.to_string()))?;
        let base = Grading::default();
        let grading = Grading {
            gap_cells: t.scalar("oracle", "gap_cells", base.gap_cells)?,
            tangential_fraction: t.scalar("oracle", "tangential_fraction", base.tangential_fraction)?,
            growth: t.scalar("oracle", "growth", base.growth)?,
            h_out: t.scalar("oracle", "h_out", base.h_out)?,
            ..base
        };
        if grading.gap_cells < MIN_GAP_CELLS {
            return err(t.line("oracle", "gap_cells"), format!("gap_cells={} does not resolve the gap (need at least {MIN_GAP_CELLS})", grading.gap_cells));
        }
        let formulation = match t.scalar("oracle", "formulation", "correction".to_string())?.as_str() {
            "correction" => Formulation::Correction,
            "direct" => Formulation::Direct,
            other => return err(t.line("oracle", "formulation"), format!("formulation must be `correction` or `direct`, got `{other}`")),
        };
        let sweep: Vec<f64> = t.list("sweep", "eps", vec![4e-3, 1e-3, 2.5e-4])?;
        let sweep_line = t.line("sweep", "eps");
        if sweep.is_empty() {
            return err(sweep_line, "the eps sweep is empty");
        }
        if sweep.iter().any(|e| !(*e > 0.0)) {
            return err(sweep_line, "sweep values must be positive");
        }
        if sweep.windows(2).any(|w| !(w[1] < w[0])) {
            return err(sweep_line, "the eps sweep must be strictly decreasing");
        }
        let m = mode_count(n);
        let all: Vec<usize> = (1..=m).collect();
        let alphas: Vec<usize> = t.list("modes", "alpha", all.clone())?;
        let betas: Vec<usize> = t.list("modes", "beta", all)?;
        for (key, list) in [("alpha", &alphas), ("beta", &betas)] {
            if let Some(bad) = list.iter().find(|a| **a == 0 || **a > m) {
                return err(t.line("modes", key), format!("mode {bad} outside 1..={m} for n={n}"));
            }
        }
        let cfg = Self {
            geometry,
            half_width: t.scalar("oracle", "half_width", 2.0)?,
            radius: t.scalar("oracle", "radius", 0.5)?,
            grading,
            formulation,
            sweep,
            alphas,
            betas,
            samples: t.scalar("fields", "samples", 32)?,
            quadrature_tolerance: t.scalar("verify", "quadrature_tolerance", 1e-9)?,
            inject_b3: t.get("verify", "inject_b3").map(|_| t.scalar("verify", "inject_b3", 0i64)).transpose()?,
            ratios: t.list("predict", "ratios", vec![1.0; m])?,
            geometry_constants: t.list("predict", "geometry_constants", if n <= 3 { vec![0.0; n] } else { vec![] })?,
            point: t.list("predict", "point", vec![0.0; n])?,
            seed: t.scalar("run", "seed", 1)?,
            out: PathBuf::from(t.scalar("run", "out", "gapstress-out".to_string())?),
            jobs: t.scalar("run", "jobs", 0)?,
        };
        if !(cfg.quadrature_tolerance > 0.0) {
            return err(t.line("verify", "quadrature_tolerance"), "quadrature_tolerance must be positive");
        }
        if cfg.point.len() != n {
            return err(t.line("predict", "point"), format!("point needs {n} coordinates"));
        }
        if !(cfg.radius > 0.0 && cfg.half_width > 2.0 * cfg.radius) {
            return err(t.line("oracle", "radius").or(t.line("oracle", "half_width")), "the disks must fit inside the box");
        }
        // Grids must resolve the smallest gap of the sweep.
        cfg.box_scene(*cfg.sweep.last().unwrap())
            .and_then(|s| s.grid().map_err(|e| e.to_string()))
            .or_else(|e| err(t.line("oracle", "gap_cells").or(sweep_line), e))?;
        Ok(cfg)
    }

    pub fn box_scene(&self, eps: f64) -> Result<BoxScene, String> {
        BoxScene::new(self.half_width, self.radius, eps, self.geometry.mu, self.grading).map_err(|e| e.to_string())
    }

    /// Stable rendering of every resolved setting, the input to the provenance hash.
    pub fn canonical(&self) -> String {
        let g = &self.geometry;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let ints = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let gr = &self.grading;
        [
            format!("geometry.n={}", g.n),
            format!("geometry.eps={:e}", g.eps),
            format!("geometry.kappa={:e}", g.kappa),
            format!("geometry.r0={:e}", g.r0),
            format!("geometry.mu={:e}", g.mu),
            format!("oracle.half_width={:e}", self.half_width),
            format!("oracle.radius={:e}", self.radius),
            format!("oracle.gap_cells={}", gr.gap_cells),
            format!("oracle.tangential_fraction={:e}", gr.tangential_fraction),
            format!("oracle.growth={:e}", gr.growth),
            format!("oracle.h_out={:e}", gr.h_out),
            format!("oracle.formulation={:?}", self.formulation),
            format!("sweep.eps={}", list(&self.sweep)),
            format!("modes.alpha={}", ints(&self.alphas)),
            format!("modes.beta={}", ints(&self.betas)),
            format!("fields.samples={}", self.samples),
            format!("verify.quadrature_tolerance={:e}", self.quadrature_tolerance),
            format!("verify.inject_b3={:?}", self.inject_b3),
            format!("predict.ratios={}", list(&self.ratios)),
            format!("predict.geometry_constants={}", list(&self.geometry_constants)),
            format!("predict.point={}", list(&self.point)),
            format!("run.seed={}", self.seed),
        ]
        .join("\n")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
