//! Commands that only evaluate closed forms: field sampling, gap integrals, stress prediction.

use gapstress::fields::{Particle, SingularFields};
use gapstress::geometry::{GapGeometry, RigidMode};
use gapstress::integrals::{gap_integral_closed, gap_integral_quadrature, Weight, DEFAULT_RTOL};
use gapstress::rates::asymptotic_gap_integral;
use gapstress::stress::{predict_stress, stress_bounds, AsymptoticStressModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{jmat, jnum, jvec, num, Artifacts};
use crate::{solver, CliError};

/// Uniform point of `Ω_{r}`: `x'` in the ball of radius `r`, `x_n` between the walls.
pub fn gap_point(rng: &mut ChaCha8Rng, g: &GapGeometry, r: f64) -> Vec<f64> {
    let m = g.n - 1;
    let xp: Vec<f64> = loop {
        let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-r..r)).collect();
        if c.iter().map(|v| v * v).sum::<f64>() < r * r {
            break c;
        }
    };
    let h = g.wall_height(&xp);
    let mut x = xp;
    x.push(rng.gen_range(-h..h));
    x
}

fn wall_point(g: &GapGeometry, xp: Vec<f64>) -> Vec<f64> {
    let h = g.wall_height(&xp);
    let mut x = xp;
    x.push(h);
    x
}

pub fn fields_eval(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let g = cfg.geometry;
    let n = g.n;
    let f = SingularFields::new(g).map_err(|e| CliError::Config(e.to_string()))?;
    let mut columns = vec!["alpha".to_string()];
    columns.extend((1..=n).map(|k| format!("x{k}")));
    columns.extend((1..=n).map(|k| format!("u{k}")));
    columns.push("p".into());
    for a in 1..=n {
        columns.extend((1..=n).map(|b| format!("sigma{a}{b}")));
    }
    columns.extend((1..=n).map(|k| format!("residual{k}")));
    let doc = "alpha = rigid mode; x = sample point; u, p = particle-1 singular velocity and pressure; \
               sigma = stress row-major; residual = reduced momentum residual per component. \
               The first points lie on the upper wall, the rest are seeded uniform gap samples";
    let mut points = Vec::new();
    if g.eps > 0.0 {
        points.push(wall_point(&g, vec![0.0; n - 1]));
    }
    let mut side = vec![0.0; n - 1];
    side[0] = 0.5 * g.r0;
    points.push(wall_point(&g, side));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    points.extend((0..cfg.samples).map(|_| gap_point(&mut rng, &g, g.r0)));
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let m = RigidMode::decode(n, alpha).map_err(|e| CliError::Config(e.to_string()))?;
        for x in &points {
            let s = f.sample(Particle::One, &m, x).map_err(solver)?;
            let mut row = vec![alpha.to_string()];
            row.extend(x.iter().map(|v| num(*v)));
            row.extend(s.velocity.iter().map(|v| num(*v)));
            row.push(num(s.pressure));
            row.extend(s.stress.iter().flatten().map(|v| num(*v)));
            for j in 1..=n {
                row.push(num(f.momentum_residual(Particle::One, &m, j, x).map_err(solver)?));
            }
            rows.push(row);
        }
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let path = art.csv("fields.csv", &cols, doc, &rows)?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}

pub fn integrals_compare(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let g = cfg.geometry;
    let mut rows = Vec::new();
    for &eps in &cfg.sweep {
        let closed = gap_integral_closed(g.n, eps, g.kappa, g.r0).map_err(|e| CliError::Config(e.to_string()))?;
        let quad = gap_integral_quadrature(g.n, eps, g.kappa, g.r0, Weight::None, DEFAULT_RTOL).map_err(solver)?;
        let asym = asymptotic_gap_integral(g.n, eps, g.kappa, g.r0).map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(vec![num(eps), num(closed), num(quad), num(asym), num((quad - closed).abs() / closed.abs()), num(closed - asym)]);
    }
    let path = art.csv(
        "integrals.csv",
        &["eps", "closed", "quadrature", "asymptotic", "quadrature_rel_diff", "closed_minus_asymptotic"],
        "gap integral of 1/delta over |x'| < r0 by closed form, adaptive quadrature and the leading-plus-constant expansion",
        &rows,
    )?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}

pub fn predict(cfg: &RunConfig, art: &Artifacts) -> Result<(), CliError> {
    let g = cfg.geometry;
    let model = AsymptoticStressModel::supplied(g.n, &cfg.ratios, cfg.geometry_constants.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let p = predict_stress(&model, &g, &cfg.point).map_err(|e| CliError::Config(e.to_string()))?;
    let bounds = match stress_bounds(&model, &g) {
        Ok((lo, hi)) => json!({ "lower": jnum(lo), "upper": jnum(hi) }),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let weights: Vec<f64> = (1..=cfg.ratios.len()).map(|a| model.weight(&g, a)).collect::<Result<_, _>>().map_err(solver)?;
    let path = art.json(
        "predict.json",
        json!({
            "n": g.n,
            "eps": g.eps,
            "point": jvec(&cfg.point),
            "leading": jmat(&p.leading),
            "remainder_bound": jnum(p.remainder_bound),
            "relative_uncertainty": jnum(p.relative_uncertainty),
            "mode_weights": jvec(&weights),
            "bounds_at_center": bounds,
        }),
    )?;
    println!("prediction -> {}", path.display());
    Ok(())
}
