//! Commands that run the finite-difference Stokes oracle.

use gapstress::geometry::GapGeometry;
use gapstress::oracle::analysis::{analyze, gap_blowup, scene_gap_geometry, BundleAnalysis, Cutoff, GapBlowup};
use gapstress::oracle::export::{write_binary, write_csv};
use gapstress::oracle::gap::{difference_gradient_norms, solve_gap_modes, GapFormulation, GapScene};
use gapstress::oracle::scene::{BoxBundle, LinearFlow};
use gapstress::oracle::solution::DiscreteStokesSolution;
use gapstress::stiffness::{limit_constants, BlowupFactors, Provenance};
use gapstress::stress::{fit_exponent, stress_bounds, AsymptoticStressModel};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Formulation, RunConfig};
use crate::output::{jmat, jnum, jvec, num, Artifacts};
use crate::{solver, CliError};

fn dump(art: &Artifacts, stem: &str, s: &DiscreteStokesSolution) -> Result<(), CliError> {
    let mut text = Vec::new();
    write_csv(s, &mut text).map_err(solver)?;
    art.bytes(&format!("{stem}.csv"), &text)?;
    let mut bin = Vec::new();
    write_binary(s, &mut bin).map_err(solver)?;
    art.bytes(&format!("{stem}.bin"), &bin)?;
    Ok(())
}

fn bundle(cfg: &RunConfig, eps: f64) -> Result<BoxBundle, CliError> {
    let scene = cfg.box_scene(eps).map_err(CliError::Config)?;
    BoxBundle::solve(scene, LinearFlow::default()).map_err(solver)
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Value {
    jmat(&m.row_iter().map(|r| r.iter().copied().collect()).collect::<Vec<Vec<f64>>>())
}

pub fn solve_box(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let eps = cfg.geometry.eps;
    let b = bundle(cfg, eps)?;
    dump(art, "box_u0", &b.u0)?;
    let mut solves = vec![json!({ "name": "u0", "divergence_residual": jnum(b.u0.divergence_residual), "compatibility_correction": jnum(b.u0.compatibility_correction) })];
    for p in [1, 2] {
        for &a in &cfg.alphas {
            let s = b.mode(p, a);
            let stem = format!("box_particle{p}_mode{a}");
            dump(art, &stem, s)?;
            solves.push(json!({ "name": stem, "divergence_residual": jnum(s.divergence_residual) }));
        }
    }
    let g = &b.u0.grid;
    let path = art.json(
        "box.json",
        json!({
            "eps": eps,
            "grid": { "nx": g.nx(), "ny": g.ny(), "min_spacing": g.min_spacing() },
            "solves": solves,
        }),
    )?;
    println!("box solves at eps={eps:e} on {}x{} -> {}", g.nx(), g.ny(), path.display());
    Ok(())
}

pub fn solve_gap(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let g = cfg.geometry;
    if g.n != 2 {
        return Err(CliError::Config(format!("gap solves are two-dimensional, geometry.n={}", g.n)));
    }
    let grading = gapstress::oracle::grid::Grading { gap_cells: cfg.grading.gap_cells, ..GapScene::default_grading() };
    let scene = GapScene::new(g, grading).map_err(|e| CliError::Config(e.to_string()))?;
    let formulation = match cfg.formulation {
        Formulation::Correction => GapFormulation::Correction,
        Formulation::Direct => GapFormulation::Direct,
    };
    let sols = solve_gap_modes(&scene, &cfg.alphas, formulation).map_err(solver)?;
    let radius = g.eps.sqrt();
    let mut modes = Vec::new();
    for s in &sols {
        dump(art, &format!("gap_mode{}_full", s.alpha), &s.full)?;
        dump(art, &format!("gap_mode{}_difference", s.alpha), &s.difference)?;
        let d = difference_gradient_norms(s, &g, radius).map_err(solver)?;
        modes.push(json!({
            "alpha": s.alpha,
            "divergence_residual": jnum(s.full.divergence_residual),
            "difference_gradient_sup": jnum(d.sup),
            "difference_gradient_sup_scaled": jnum(d.scaled_sup),
            "cells": d.cells,
        }));
    }
    let path = art.json("gap.json", json!({ "eps": g.eps, "radius": radius, "formulation": format!("{:?}", cfg.formulation), "modes": modes }))?;
    println!("{} gap solves -> {}", sols.len(), path.display());
    Ok(())
}

fn ratios_model(a: &BundleAnalysis) -> Result<(AsymptoticStressModel, Vec<f64>), CliError> {
    let factors = BlowupFactors::new(a.factors[0].clone(), Provenance::Oracle).map_err(solver)?;
    let ratios: Vec<f64> = a.system.determinant_ratios(&factors).map_err(solver)?.iter().copied().collect();
    let model = AsymptoticStressModel::supplied(2, &ratios, vec![0.0, 0.0]).map_err(solver)?;
    Ok((model, ratios))
}

pub fn factors(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let eps = cfg.geometry.eps;
    let b = bundle(cfg, eps)?;
    let a = analyze(&b, &Cutoff::defaults(cfg.radius)).map_err(solver)?;
    let factors = BlowupFactors::new(a.factors[0].clone(), Provenance::Oracle).map_err(solver)?;
    let diff = a.system.cramer_c1_minus_c2(&factors).map_err(solver)?;
    let (_, ratios) = ratios_model(&a)?;
    let path = art.json(
        "factors.json",
        json!({
            "eps": eps,
            "blowup_factors_per_cutoff": a.factors.iter().map(|f| jvec(f)).collect::<Vec<_>>(),
            "blowup_factors_from_system": jvec(&a.factors_from_system),
            "cutoff_discrepancy": jnum(a.cutoff_discrepancy()),
            "c2": jvec(a.solution.x2.as_slice()),
            "c1_minus_c2": jvec(a.solution.x1.as_slice()),
            "c1_minus_c2_cramer": jvec(diff.exact.as_slice()),
            "c1_minus_c2_leading": jvec(diff.leading.as_slice()),
            "determinant_ratios": jvec(&ratios),
            "stiffness_a": matrix_rows(&a.system.a),
            "symmetry": {
                "a_asymmetry": jnum(a.symmetry.a_asymmetry),
                "pair_defect": jnum(a.symmetry.pair_defect),
                "c_minus_bt": jnum(a.symmetry.c_minus_bt),
            },
            "min_eigenvalue_a": jnum(a.min_eigenvalue_a),
            "det_f0": jnum(a.det_f0),
            "condition": jnum(a.solution.condition),
            "warnings": a.solution.warnings,
        }),
    )?;
    println!("factors at eps={eps:e} -> {}", path.display());
    Ok(())
}

struct SweepRow {
    eps: f64,
    blowup: GapBlowup,
    bounds: Option<(f64, f64)>,
    factors: Vec<f64>,
    c2: Vec<f64>,
    diff: Vec<f64>,
}

fn sweep_point(cfg: &RunConfig, eps: f64) -> Result<SweepRow, CliError> {
    let b = bundle(cfg, eps)?;
    let a = analyze(&b, &Cutoff::defaults(cfg.radius)).map_err(solver)?;
    let blowup = gap_blowup(&b, &a.solution).map_err(solver)?;
    let geo: GapGeometry = scene_gap_geometry(&b).map_err(solver)?;
    let (model, _) = ratios_model(&a)?;
    Ok(SweepRow {
        eps,
        blowup,
        bounds: stress_bounds(&model, &geo).ok(),
        factors: a.factors[0].clone(),
        c2: a.solution.x2.iter().copied().collect(),
        diff: a.solution.x1.iter().copied().collect(),
    })
}

fn slope(points: &[(f64, f64)]) -> Value {
    match fit_exponent(points) {
        Ok((s, e)) => json!({ "slope": s, "stderr": e }),
        Err(e) => json!({ "slope": "not available", "reason": e.to_string() }),
    }
}

fn limits(sweep: &[(f64, Vec<f64>)]) -> Value {
    match limit_constants(sweep) {
        Ok(v) => Value::Array(v.iter().map(|x| json!({ "value": jnum(x.value), "error": jnum(x.error) })).collect()),
        Err(e) => json!({ "value": "not available", "reason": e.to_string() }),
    }
}

pub fn sweep(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let results: Vec<Result<SweepRow, CliError>> = cfg.sweep.par_iter().map(|&e| sweep_point(cfg, e)).collect();
    if results.iter().all(Result::is_err) {
        let reasons: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().map(ToString::to_string)).collect();
        return Err(CliError::Solver(format!("every sweep point failed: {}", reasons.join("; "))));
    }
    let na = || "".to_string();
    let mut rows = Vec::new();
    for (eps, r) in cfg.sweep.iter().zip(&results) {
        let mut row = vec![num(*eps)];
        match r {
            Ok(s) => {
                row.push("ok".into());
                row.extend([s.blowup.max_gradient, s.blowup.pressure_deviation, s.blowup.unit_mode_pressure].map(num));
                match s.bounds {
                    Some((lo, hi)) => row.extend([num(lo), num(hi)]),
                    None => row.extend([na(), na()]),
                }
                row.extend(s.factors.iter().chain(&s.c2).chain(&s.diff).map(|v| num(*v)));
            }
            Err(e) => {
                row.push(format!("error: {e}"));
                row.extend((0..14).map(|_| na()));
            }
        }
        rows.push(row);
    }
    let columns = [
        "eps", "status", "max_grad", "max_pressure_dev", "unit_mode_pressure", "predicted_lower", "predicted_upper", "B1", "B2", "B3", "C2_1",
        "C2_2", "C2_3", "C1_minus_C2_1", "C1_minus_C2_2", "C1_minus_C2_3",
    ];
    let csv = art.csv(
        "sweep.csv",
        &columns,
        "one row per eps; gap blow-up maxima of the free-particle flow, stress bounds at the gap center, blow-up factors B, \
         background constants C2 and potential differences C1-C2; empty cells where a value is unavailable",
        &rows,
    )?;
    let ok: Vec<&SweepRow> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let series = |f: &dyn Fn(&SweepRow) -> f64| ok.iter().map(|s| (s.eps, f(s))).collect::<Vec<_>>();
    let cauchy: Vec<Value> = (0..3)
        .map(|b| {
            let d: Vec<f64> = ok.windows(2).map(|w| (w[0].factors[b] - w[1].factors[b]).abs()).collect();
            json!({ "beta": b + 1, "differences": jvec(&d), "monotone_decreasing": d.windows(2).all(|w| w[1] < w[0]) })
        })
        .collect();
    let json_path = art.json(
        "sweep.json",
        json!({
            "eps": jvec(&cfg.sweep),
            "points_ok": ok.len(),
            "failures": results.iter().zip(&cfg.sweep).filter_map(|(r, e)| r.as_ref().err().map(|x| json!({ "eps": e, "error": x.to_string() }))).collect::<Vec<_>>(),
            "slopes": {
                "pressure_deviation": slope(&series(&|s| s.blowup.pressure_deviation)),
                "max_gradient": slope(&series(&|s| s.blowup.max_gradient)),
                "unit_mode_pressure": slope(&series(&|s| s.blowup.unit_mode_pressure)),
            },
            "limits": {
                "c2": limits(&ok.iter().map(|s| (s.eps, s.c2.clone())).collect::<Vec<_>>()),
                "blowup_factors": limits(&ok.iter().map(|s| (s.eps, s.factors.clone())).collect::<Vec<_>>()),
            },
            "blowup_factor_cauchy": cauchy,
        }),
    )?;
    println!("{} of {} sweep points solved -> {}, {}", ok.len(), cfg.sweep.len(), csv.display(), json_path.display());
    Ok(())
}
