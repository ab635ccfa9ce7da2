//! Acceptance runner: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use gapstress::fields::{AuxCoefficients, Particle, SingularFields};
use gapstress::geometry::{mode_count, GapGeometry, RigidMode};
use gapstress::integrals::{gap_integral_closed, gap_integral_quadrature, Weight, DEFAULT_RTOL};
use gapstress::oracle::analysis::{analyze, gap_blowup, BundleAnalysis, Cutoff, GapBlowup};
use gapstress::oracle::gap::{difference_gradient_norms, solve_gap_modes, GapFormulation, GapScene};
use gapstress::oracle::grid::Axis;
use gapstress::oracle::scene::{BoxBundle, BoxScene, LinearFlow};
use gapstress::oracle::validation::{disk_refinement, poiseuille};
use gapstress::rates::asymptotic_gap_integral;
use gapstress::stiffness::{BlowupFactors, Lu, Provenance, StiffnessSystem};
use gapstress::stress::fit_exponent;
use gapstress_validation::{summarize, Outcome};
use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWEEP: [f64; 3] = [4e-3, 1e-3, 2.5e-4];
const SEED: u64 = 20_240_611;

struct Check {
    passed: bool,
    detail: String,
}

fn run(id: usize, name: &'static str, budget: Duration, f: impl FnOnce() -> Check) -> Outcome {
    let t = Instant::now();
    let c = f();
    let elapsed = t.elapsed();
    let in_time = elapsed <= budget;
    let detail = if in_time { c.detail } else { format!("{}; over the {budget:?} budget", c.detail) };
    let o = Outcome { id, name, passed: c.passed && in_time, detail, elapsed };
    println!("{o}");
    o
}

fn coefficient_identities() -> Check {
    let kappas = [Rational64::new(1, 4), Rational64::new(1, 2), Rational64::new(1, 1), Rational64::new(2, 1)];
    let (mut checked, mut bad) = (0usize, Vec::new());
    for n in 2..=8 {
        for k in kappas {
            match AuxCoefficients::exact(n, k) {
                Ok(c) => {
                    checked += c.relations().len();
                    bad.extend(c.violations().into_iter().map(|r| format!("n={n} kappa={k} {}", r.name)));
                }
                Err(e) => bad.push(format!("n={n} kappa={k}: {e}")),
            }
        }
    }
    Check { passed: bad.is_empty(), detail: format!("{checked} exact relations, violations {bad:?}") }
}

/// Uniform point in the gap region `|x'| < radius`.
fn gap_point(rng: &mut ChaCha8Rng, geo: &GapGeometry, radius: f64) -> Vec<f64> {
    let n = geo.n;
    loop {
        let xp: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-radius..radius)).collect();
        if xp.iter().map(|v| v * v).sum::<f64>().sqrt() < radius {
            let h = geo.wall_height(&xp);
            let mut x = xp;
            x.push(rng.gen_range(-h..h));
            return x;
        }
    }
}

fn divergence_free() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for n in 2..=4 {
        let geo = GapGeometry::new(n, 1e-2, 1.0, 0.5, 1.0).expect("geometry");
        let f = SingularFields::new(geo).expect("fields");
        let modes = RigidMode::all(n);
        for _ in 0..1000 {
            let x = gap_point(&mut rng, &geo, 2.0 * geo.r0);
            for m in &modes {
                let g = f.grad_u_bar(Particle::One, m, &x).expect("gradient");
                worst = worst.max((0..n).map(|k| g[k][k]).sum::<f64>().abs());
            }
        }
    }
    Check { passed: worst <= 1e-10, detail: format!("max |div| = {worst:.3e} (limit 1e-10)") }
}

/// Central-difference residual `μ ∂_nn u^(j) − ∂_j p` with step `h`, and the
/// magnitude of the differenced values divided by the step powers (the rounding reference).
fn residual_fd(f: &SingularFields, m: &RigidMode, j: usize, x: &[f64], h: f64) -> (f64, f64) {
    let n = x.len();
    let shift = |k: usize, s: f64| {
        let mut y = x.to_vec();
        y[k] += s;
        y
    };
    let u = |y: &[f64]| f.u_bar_unchecked(Particle::One, m, y)[j - 1];
    let p = |y: &[f64]| f.p_bar_unchecked(Particle::One, m, y);
    let (up, u0, um) = (u(&shift(n - 1, h)), u(x), u(&shift(n - 1, -h)));
    let (pp, pm) = (p(&shift(j - 1, h)), p(&shift(j - 1, -h)));
    let mu = f.geo.mu;
    let value = mu * (up - 2.0 * u0 + um) / (h * h) - (pp - pm) / (2.0 * h);
    let magnitude = mu * (up.abs() + 2.0 * u0.abs() + um.abs()) / (h * h) + (pp.abs() + pm.abs()) / (2.0 * h);
    (value, magnitude)
}

/// Relative error, against the rounding reference, below which a stencil counts as exact.
const ROUNDING_FLOOR: f64 = 1e-12;

fn residual_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut measured, mut exact, mut worst_order, mut failures) = (0usize, 0usize, f64::INFINITY, Vec::new());
    for n in 2..=3 {
        let geo = GapGeometry::new(n, 1e-3, 1.0, 0.5, 1.0).expect("geometry");
        let f = SingularFields::new(geo).expect("fields");
        let points: Vec<Vec<f64>> = (0..200).map(|_| gap_point(&mut rng, &geo, geo.r0)).collect();
        for m in RigidMode::all(n) {
            for j in 1..=n {
                let (mut e1, mut e2, mut rounding) = (0.0f64, 0.0f64, 0.0f64);
                for x in &points {
                    let d = geo.delta(&x[..n - 1]).expect("delta");
                    let h = 0.02 * (d / (2.0 * geo.kappa)).sqrt();
                    let r = f.momentum_residual_unchecked(Particle::One, &m, j, x);
                    let (a, mag) = residual_fd(&f, &m, j, x, h);
                    let (b, mag_half) = residual_fd(&f, &m, j, x, 0.5 * h);
                    // Same weight at both steps so the ratio isolates the step dependence.
                    let w = 1.0 / mag.max(f64::MIN_POSITIVE);
                    e1 += (w * (a - r)).powi(2);
                    e2 += (w * (b - r)).powi(2);
                    rounding = rounding.max((b - r).abs() / mag_half.max(f64::MIN_POSITIVE));
                }
                if rounding <= ROUNDING_FLOOR {
                    // Polynomial in the differenced direction: the stencil is exact up to rounding.
                    exact += 1;
                    continue;
                }
                measured += 1;
                let order = (e1 / e2).sqrt().log2();
                worst_order = worst_order.min(order);
                if !(order >= 1.9) {
                    failures.push(format!("n={n} mode {} j={j} order={order:.3}", m.describe()));
                }
            }
        }
    }
    Check {
        passed: failures.is_empty(),
        detail: format!("{measured} measured (min order {worst_order:.3}), {exact} exact to rounding; failures {failures:?}"),
    }
}

fn gap_integrals() -> Check {
    let (kappa, r0) = (1.0, 0.5);
    let eps = [1e-2, 1e-4, 1e-6, 1e-8];
    let (mut worst_quad, mut notes, mut ok) = (0.0f64, Vec::new(), true);
    for n in 2..=3 {
        let mut last = f64::INFINITY;
        for &e in &eps {
            let closed = gap_integral_closed(n, e, kappa, r0).expect("closed form");
            let quad = gap_integral_quadrature(n, e, kappa, r0, Weight::None, DEFAULT_RTOL).expect("quadrature");
            worst_quad = worst_quad.max(((quad - closed) / closed).abs());
            let diff = (asymptotic_gap_integral(n, e, kappa, r0).expect("asymptotic") - closed).abs();
            if !(diff < last) {
                ok = false;
                notes.push(format!("n={n}: asymptotic gap grows at eps={e:e}"));
            }
            last = diff;
            if e == 1e-8 {
                let rel = diff / closed.abs();
                notes.push(format!("n={n} rel gap at 1e-8 {rel:.2e}"));
                ok &= rel <= 0.01;
            }
        }
    }
    ok &= worst_quad <= 1e-9;
    Check { passed: ok, detail: format!("quadrature vs closed {worst_quad:.2e} (limit 1e-9); {}", notes.join(", ")) }
}

fn random_system(rng: &mut ChaCha8Rng, n: usize) -> StiffnessSystem {
    let m = mode_count(n);
    let mut mat = || DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let (a, b, c, d) = (mat(), mat(), mat(), mat());
    let b1 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let b2 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    StiffnessSystem::new(n, a, b, c, d, b1, b2).expect("system")
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn linear_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut count, mut worst_cramer, mut worst_res, mut worst_cond) = (0usize, 0.0f64, 0.0f64, 0.0f64);
    for n in 2..=5 {
        let mut made = 0;
        while made < 25 {
            let s = random_system(&mut rng, n);
            let blocks = s.block_matrix();
            let cond = Lu::factor(&blocks).expect("lu").condition_1(&blocks).max(Lu::factor(&s.a).expect("lu").condition_1(&s.a));
            if !(cond <= 1e6) {
                continue;
            }
            made += 1;
            count += 1;
            worst_cond = worst_cond.max(cond);
            let sol = s.solve().expect("block solve");
            worst_res = worst_res.max(sol.relative_residual);
            let c2 = s.cramer_c2_full().expect("cramer");
            worst_cramer = worst_cramer.max(rel(&c2, &sol.x2));
            let factors = BlowupFactors::new((&s.a * &sol.x1).iter().copied().collect(), Provenance::Supplied).expect("factors");
            let diff = s.cramer_c1_minus_c2(&factors).expect("cramer");
            worst_cramer = worst_cramer.max(rel(&diff.exact, &sol.x1));
        }
    }
    Check {
        passed: worst_cramer <= 1e-12 && worst_res <= 1e-10,
        detail: format!(
            "{count} systems, m<=15, max condition {worst_cond:.1e}: Cramer vs LU {worst_cramer:.2e} (limit 1e-12), block residual {worst_res:.2e} (limit 1e-10)"
        ),
    }
}

fn oracle_validation() -> Check {
    let mut worst = 0.0f64;
    let grids = [
        (Axis::uniform(0.0, 2.0, 32).expect("axis"), Axis::uniform(0.0, 1.0, 24).expect("axis")),
        (
            Axis::new(vec![0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0]).expect("axis"),
            Axis::new(vec![0.0, 0.05, 0.15, 0.3, 0.5, 0.72, 0.88, 0.96, 1.0]).expect("axis"),
        ),
    ];
    for (x, y) in grids {
        let r = poiseuille(x, y, 1.3, 0.7).expect("poiseuille");
        worst = worst.max(r.velocity_error).max(r.cross_velocity).max(r.gradient_error);
    }
    let refinement = disk_refinement(64, 3).expect("refinement");
    let order = refinement.orders[0];
    Check {
        passed: worst <= 1e-10 && order >= 1.0,
        detail: format!(
            "Poiseuille relative error {worst:.2e} (limit 1e-10); disk refinement {:?} differences {:.3?}, order {order:.2} (min 1)",
            refinement.resolutions, refinement.differences
        ),
    }
}

struct Sweep {
    analyses: Vec<BundleAnalysis>,
    blowups: Vec<GapBlowup>,
    elapsed: Duration,
}

fn box_sweep() -> Result<Sweep, String> {
    let t = Instant::now();
    let scenes: Vec<BoxScene> = SWEEP.iter().map(|&e| BoxScene::standard(e)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut analyses = Vec::new();
    let mut blowups = Vec::new();
    for bundle in BoxBundle::solve_many(&scenes, LinearFlow::default()) {
        let bundle = bundle.map_err(|e| e.to_string())?;
        let a = analyze(&bundle, &Cutoff::defaults(bundle.scene.radius)).map_err(|e| e.to_string())?;
        blowups.push(gap_blowup(&bundle, &a.solution).map_err(|e| e.to_string())?);
        analyses.push(a);
    }
    Ok(Sweep { analyses, blowups, elapsed: t.elapsed() })
}

fn slope(values: impl Iterator<Item = f64>) -> Result<(f64, f64), String> {
    let pts: Vec<(f64, f64)> = SWEEP.iter().copied().zip(values).collect();
    fit_exponent(&pts).map_err(|e| e.to_string())
}

fn blowup_exponents(sweep: &Result<Sweep, String>) -> Check {
    let s = match sweep {
        Ok(s) => s,
        Err(e) => return Check { passed: false, detail: format!("sweep failed: {e}") },
    };
    let fits = (
        slope(s.blowups.iter().map(|b| b.pressure_deviation)),
        slope(s.blowups.iter().map(|b| b.max_gradient)),
        slope(s.blowups.iter().map(|b| b.unit_mode_pressure)),
        slope(s.analyses.iter().map(|a| a.solution.x1[1].abs())),
    );
    match fits {
        (Ok((sp, ep)), Ok((sg, eg)), Ok((su, _)), Ok((sx, _))) => Check {
            passed: (sp + 1.5).abs() <= 0.2 && (sg + 0.5).abs() <= 0.2,
            detail: format!(
                "pressure slope {sp:.3}±{ep:.3} (want -1.5±0.2), gradient slope {sg:.3}±{eg:.3} (want -0.5±0.2); \
                 diagnostics: unit normal-mode max pressure slope {su:.3} plus normal potential-difference slope {sx:.3}; sweep {:.1?}",
                s.elapsed
            ),
        },
        other => Check { passed: false, detail: format!("fit failed: {other:?}") },
    }
}

fn gap_boundedness() -> Check {
    let mut sup = Vec::new();
    let mut scaled = Vec::new();
    for &e in &SWEEP {
        let scene = match GapScene::standard(e) {
            Ok(s) => s,
            Err(err) => return Check { passed: false, detail: format!("scene: {err}") },
        };
        let sols = match solve_gap_modes(&scene, &[1, 2], GapFormulation::Correction) {
            Ok(s) => s,
            Err(err) => return Check { passed: false, detail: format!("solve: {err}") },
        };
        let r = e.sqrt();
        match (difference_gradient_norms(&sols[0], &scene.geo, r), difference_gradient_norms(&sols[1], &scene.geo, r)) {
            (Ok(a), Ok(b)) => {
                sup.push(a.sup);
                scaled.push(b.scaled_sup);
            }
            (a, b) => return Check { passed: false, detail: format!("norms: {a:?} {b:?}") },
        }
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (f1, f2) = (spread(&sup), spread(&scaled));
    Check {
        passed: f1 <= 3.0 && f2 <= 3.0,
        detail: format!("tangential sup {sup:.3?} spread {f1:.3}; normal scaled sup {scaled:.3?} spread {f2:.3} (limit 3)"),
    }
}

fn factor_trend(sweep: &Result<Sweep, String>) -> Check {
    let s = match sweep {
        Ok(s) => s,
        Err(e) => return Check { passed: false, detail: format!("sweep failed: {e}") },
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for beta in 0..3 {
        let b: Vec<f64> = s.analyses.iter().map(|a| a.factors[0][beta]).collect();
        let (d1, d2) = ((b[0] - b[1]).abs(), (b[1] - b[2]).abs());
        ok &= d2 < d1;
        notes.push(format!("B{} {:.4?} diffs {d1:.3e}>{d2:.3e}", beta + 1, b));
    }
    let worst = s.analyses.iter().map(|a| a.cutoff_discrepancy()).fold(0.0f64, f64::max);
    ok &= worst <= 0.01;
    Check { passed: ok, detail: format!("{}; cutoff discrepancy {worst:.2e} (limit 1e-2)", notes.join("; ")) }
}

fn symmetry_positivity(sweep: &Result<Sweep, String>) -> Check {
    let s = match sweep {
        Ok(s) => s,
        Err(e) => return Check { passed: false, detail: format!("sweep failed: {e}") },
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for a in &s.analyses {
        let sym = &a.symmetry;
        ok &= sym.a_asymmetry <= 1e-12 && sym.pair_defect <= 1e-12 && sym.c_minus_bt == 0.0;
        ok &= a.min_eigenvalue_a > 0.0 && a.det_f0 > 0.0;
        notes.push(format!(
            "eps {:e}: asym {:.1e} pair {:.1e} C-B^T {:.1e} min eig {:.3e} det F0 {:.3e}",
            a.eps, sym.a_asymmetry, sym.pair_defect, sym.c_minus_bt, a.min_eigenvalue_a, a.det_f0
        ));
    }
    Check { passed: ok, detail: notes.join("; ") }
}

fn main() {
    let secs = Duration::from_secs;
    let mut out = vec![
        run(1, "coefficient identities", secs(1), coefficient_identities),
        run(2, "divergence-free singular fields", secs(5), divergence_free),
        run(3, "momentum residual identities", secs(10), residual_identities),
        run(4, "gap integrals", secs(2), gap_integrals),
        run(5, "Cramer and block solves", secs(2), linear_algebra),
        run(6, "oracle validation", secs(60), oracle_validation),
    ];
    let t = Instant::now();
    let sweep = box_sweep();
    let budget = secs(20 * 60);
    out.push(run(7, "blow-up exponents", budget, || blowup_exponents(&sweep)));
    out.push(run(8, "gap difference boundedness", budget, gap_boundedness));
    out.push(run(9, "blow-up factor trend", budget, || factor_trend(&sweep)));
    out.push(run(10, "symmetry and positivity", budget, || symmetry_positivity(&sweep)));
    let total = t.elapsed();
    let (tally, ok) = summarize(&out);
    println!("sweep criteria total {total:.1?} (budget 20 min)\n{tally}");
    if !ok || total > budget {
        std::process::exit(1);
    }
}
