use gapstress::fields::{Particle, SingularFields};
use gapstress::geometry::{mode_count, GapGeometry, ModeKind, RigidMode};
use gapstress::integrals::{gap_integral_closed, gap_integral_quadrature, Weight, DEFAULT_RTOL};
use gapstress::rates::{k_constant, r_eps, rho, varrho};
use gapstress::stiffness::{extrapolate_scalar, BlowupFactors, Lu, Provenance, StiffnessSystem};
use gapstress::stress::{fit_exponent, predict_stress, stress_bounds, AsymptoticStressModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = GapGeometry> {
    (2usize..=5, -6.0f64..-1.5, 0.25f64..2.0, 0.3f64..1.0, 0.5f64..2.0)
        .prop_map(|(n, le, kappa, r0, mu)| GapGeometry::new(n, 10f64.powf(le), kappa, r0, mu).unwrap())
}

/// Point of `Ω_{2R₀}` from unit-box coordinates.
fn point(g: &GapGeometry, unit: &[f64]) -> Vec<f64> {
    let n = g.n;
    let mut xp: Vec<f64> = unit[..n - 1].iter().map(|t| 2.0 * g.r0 * (2.0 * t - 1.0)).collect();
    let norm = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let limit = 2.0 * g.r0 * 0.999;
    if norm > limit {
        xp.iter_mut().for_each(|v| *v *= limit / norm);
    }
    let h = g.wall_height(&xp);
    xp.push(h * (2.0 * unit[n - 1] - 1.0) * 0.999);
    xp
}

fn unit_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalized_height_stays_inside(g in geometry(), u in unit_vec()) {
        let x = point(&g, &u);
        let t = g.frak_g(&x).unwrap();
        prop_assert!(t > -0.5 && t < 0.5);
        let xp = &x[..g.n - 1];
        let h = g.wall_height(xp);
        let mut top = xp.to_vec();
        top.push(h);
        let mut bottom = xp.to_vec();
        bottom.push(-h);
        prop_assert_eq!(g.frak_g(&top).unwrap(), 0.5);
        prop_assert_eq!(g.frak_g(&bottom).unwrap(), -0.5);
    }

    #[test]
    fn rotations_have_skew_gradients(n in 2usize..=6, u in prop::collection::vec(-1.0f64..1.0, 6)) {
        for m in RigidMode::all(n) {
            let g = m.grad_psi();
            let x = &u[..n];
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(g[a][b] + g[b][a], 0.0);
                    let h = 1e-5;
                    let mut xp = x.to_vec();
                    xp[b] += h;
                    let mut xm = x.to_vec();
                    xm[b] -= h;
                    let fd = (m.psi(&xp)[a] - m.psi(&xm)[a]) / (2.0 * h);
                    prop_assert!((fd - g[a][b]).abs() < 1e-10);
                }
            }
            prop_assert_eq!(RigidMode::encode(n, m.kind).unwrap(), m.alpha);
        }
    }

    #[test]
    fn boundary_values_are_exact(g in geometry(), u in unit_vec()) {
        let f = SingularFields::new(g).unwrap();
        let x = point(&g, &u);
        let xp = &x[..g.n - 1];
        let h = g.wall_height(xp);
        for m in RigidMode::all(g.n) {
            let mut top = xp.to_vec();
            top.push(h);
            let mut bottom = xp.to_vec();
            bottom.push(-h);
            let psi = m.psi(&top);
            let ut = f.u_bar(Particle::One, &m, &top).unwrap();
            let ub = f.u_bar(Particle::One, &m, &bottom).unwrap();
            for c in 0..g.n {
                prop_assert!((ut[c] - psi[c]).abs() <= 1e-13);
                prop_assert!(ub[c].abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn fields_are_solenoidal(g in geometry(), u in unit_vec()) {
        let f = SingularFields::new(g).unwrap();
        let x = point(&g, &u);
        for m in RigidMode::all(g.n) {
            let gr = f.grad_u_bar(Particle::One, &m, &x).unwrap();
            let div: f64 = (0..g.n).map(|k| gr[k][k]).sum();
            let scale: f64 = gr.iter().flatten().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(div.abs() <= 1e-10 * scale, "div {} scale {}", div, scale);
        }
    }

    #[test]
    fn second_particle_mirrors_the_first(g in geometry(), u in unit_vec()) {
        let f = SingularFields::new(g).unwrap();
        let x = point(&g, &u);
        for m in RigidMode::all(g.n) {
            let psi = m.psi(&x);
            let u1 = f.u_bar(Particle::One, &m, &x).unwrap();
            let u2 = f.u_bar(Particle::Two, &m, &x).unwrap();
            for c in 0..g.n {
                prop_assert!((u2[c] - (psi[c] - u1[c])).abs() <= 1e-13 * (1.0 + psi[c].abs() + u1[c].abs()));
            }
            let (p1, p2) = (f.p_bar(Particle::One, &m, &x).unwrap(), f.p_bar(Particle::Two, &m, &x).unwrap());
            prop_assert_eq!(p1, -p2);
        }
    }

    #[test]
    fn stress_is_symmetric(g in geometry(), u in unit_vec()) {
        let f = SingularFields::new(g).unwrap();
        let x = point(&g, &u);
        for m in RigidMode::all(g.n) {
            let s = f.stress_at(Particle::One, &m, &x).unwrap();
            for a in 0..g.n {
                for b in 0..g.n {
                    prop_assert_eq!(s[a][b], s[b][a]);
                }
            }
        }
    }

    #[test]
    fn rates_are_monotone(n in 2usize..=6, a in -7.0f64..-1.5, gap in 0.01f64..1.0) {
        let (e1, e2) = (10f64.powf(a), 10f64.powf(a + gap));
        prop_assert!(rho(n, e1).unwrap() >= rho(n, e2).unwrap());
        prop_assert!(r_eps(n, e1).unwrap() <= r_eps(n, e2).unwrap());
        for alpha in 1..=n {
            let (v1, v2) = (varrho(alpha, n, e1).unwrap(), varrho(alpha, n, e2).unwrap());
            if alpha == n && n == 2 {
                prop_assert!(v1 >= v2);
            } else {
                prop_assert!(v1 <= v2);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature(n in 2usize..=3, le in -8.0f64..-2.0, kappa in 0.25f64..2.0, r0 in 0.2f64..1.0) {
        let eps = 10f64.powf(le);
        prop_assume!(eps < 2.0 * kappa * r0 * r0);
        let c = gap_integral_closed(n, eps, kappa, r0).unwrap();
        let q = gap_integral_quadrature(n, eps, kappa, r0, Weight::None, DEFAULT_RTOL).unwrap();
        prop_assert!(((c - q) / c).abs() <= 1e-9);
    }

    #[test]
    fn cramer_matches_lu(n in 2usize..=5, entries in prop::collection::vec(-1.0f64..1.0, 4 * 225 + 30)) {
        let m = mode_count(n);
        let mut it = entries.into_iter();
        let mut mat = || DMatrix::from_fn(m, m, |_, _| it.next().unwrap());
        let (a, b, c, d) = (mat(), mat(), mat(), mat());
        let b1 = DVector::from_fn(m, |i, _| (i as f64 + 1.0).sin());
        let b2 = DVector::from_fn(m, |i, _| (i as f64 + 2.0).cos());
        let s = StiffnessSystem::new(n, a, b, c, d, b1, b2).unwrap();
        let blocks = s.block_matrix();
        let cond = Lu::factor(&blocks).unwrap().condition_1(&blocks);
        prop_assume!(cond <= 1e6);
        let sol = s.solve().unwrap();
        let c2 = s.cramer_c2_full().unwrap();
        prop_assert!((&c2 - &sol.x2).norm() <= 1e-12 * sol.x2.norm().max(1.0) * (cond / 1e3).max(1.0));
    }

    #[test]
    fn potential_differences_scale_with_the_data(n in 2usize..=4, lambda in -3.0f64..3.0, seed in 0u64..1000) {
        let m = mode_count(n);
        let v = |k: usize| ((k as f64 + 1.0) * (seed as f64 + 0.5)).sin();
        let a = DMatrix::from_fn(m, m, |i, j| v(i * m + j) + if i == j { 2.0 * m as f64 } else { 0.0 });
        let a = &a + a.transpose();
        let id = DMatrix::<f64>::identity(m, m);
        let s = StiffnessSystem::new(n, a.clone(), id.clone(), id.clone(), &id * 3.0, DVector::zeros(m), DVector::zeros(m)).unwrap();
        let bv: Vec<f64> = (0..m).map(|k| v(100 + k)).collect();
        let f1 = BlowupFactors::new(bv.clone(), Provenance::Supplied).unwrap();
        let f2 = BlowupFactors::new(bv.iter().map(|b| lambda * b).collect(), Provenance::Supplied).unwrap();
        let (d1, d2) = (s.cramer_c1_minus_c2(&f1).unwrap(), s.cramer_c1_minus_c2(&f2).unwrap());
        prop_assert!((&d1.exact * lambda - &d2.exact).norm() <= 1e-12 * (1.0 + d1.exact.norm() * lambda.abs()));
        prop_assert!((&d1.leading * lambda - &d2.leading).norm() <= 1e-12 * (1.0 + d1.leading.norm() * lambda.abs()));
    }

    #[test]
    fn geometric_tails_extrapolate_exactly(limit in -5.0f64..5.0, amp in 0.1f64..3.0, q in 0.1f64..0.8) {
        let eps = [1e-2, 1e-3, 1e-4];
        let vals: Vec<f64> = (0..3).map(|k| limit + amp * q.powi(k)).collect();
        let e = extrapolate_scalar(&eps, &vals).unwrap();
        prop_assert!((e.value - limit).abs() <= 1e-9 * (1.0 + limit.abs() + amp));
    }

    #[test]
    fn prediction_is_linear_in_ratios(
        r1 in prop::collection::vec(-2.0f64..2.0, 3),
        r2 in prop::collection::vec(-2.0f64..2.0, 3),
        lambda in -2.0f64..2.0,
        u in unit_vec(),
    ) {
        let g = GapGeometry::new(2, 1e-3, 1.0, 0.5, 1.0).unwrap();
        let x0 = 0.99 * g.r0 * (2.0 * u[0] - 1.0);
        let x = [x0, 0.99 * g.wall_height(&[x0]) * (2.0 * u[1] - 1.0)];
        let gc = vec![0.4, -0.3];
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + lambda * b).collect();
        let p = |r: &[f64]| predict_stress(&AsymptoticStressModel::supplied(2, r, gc.clone()).unwrap(), &g, &x).unwrap().leading;
        let (a, b, c) = (p(&r1), p(&r2), p(&combo));
        for i in 0..2 {
            for j in 0..2 {
                let want = a[i][j] + lambda * b[i][j];
                prop_assert!((c[i][j] - want).abs() <= 1e-10 * (1.0 + a[i][j].abs() + (lambda * b[i][j]).abs()));
            }
        }
    }

    #[test]
    fn bounds_are_ordered(r in prop::collection::vec(-3.0f64..3.0, 3), le in -6.0f64..-2.0) {
        prop_assume!(r[1].abs() > 1e-6);
        let g = GapGeometry::new(2, 10f64.powf(le), 1.0, 0.5, 1.0).unwrap();
        let (lo, hi) = stress_bounds(&AsymptoticStressModel::supplied(2, &r, vec![0.0, 0.0]).unwrap(), &g).unwrap();
        prop_assert!(0.0 < lo && lo <= hi);
    }

    #[test]
    fn exponent_fit_recovers_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let s: Vec<(f64, f64)> = [1e-2, 3e-3, 1e-3, 2e-4].iter().map(|&e: &f64| (e, c * e.powf(p))).collect();
        let (slope, err) = fit_exponent(&s).unwrap();
        prop_assert!((slope - p).abs() < 1e-10 && err < 1e-8);
    }
}

#[test]
fn evaluation_matrix_has_full_rank() {
    for n in 2..=5 {
        // Origin plus scaled unit vectors: n affinely independent points.
        let pts: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|c| if k > 0 && c == k - 1 { 1.3 } else { 0.0 }).collect()).collect();
        let pts: Vec<Vec<f64>> = pts.into_iter().chain(std::iter::once(vec![0.7; n])).take(n).collect();
        let modes = RigidMode::all(n);
        let rows = modes.len();
        let mat = DMatrix::from_fn(rows, n * n, |a, col| modes[a].psi(&pts[col / n])[col % n]);
        let rank = mat.rank(1e-10);
        assert_eq!(rank, rows.min(n * n), "n={n}");
    }
}

#[test]
fn constant_terms_agree_across_radii() {
    for n in 2..=3 {
        let (kappa, r1, r2) = (1.0, 0.4, 0.8);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let a = gap_integral_closed(n, eps, kappa, r1).unwrap() - k_constant(n, kappa, r1).unwrap();
            let b = gap_integral_closed(n, eps, kappa, r2).unwrap() - k_constant(n, kappa, r2).unwrap();
            let d = (a - b).abs();
            assert!(d < last, "n={n} eps={eps}");
            last = d;
        }
        assert!(last < 1e-3);
    }
}

#[test]
fn divergence_of_stress_is_no_worse_than_expected() {
    // |∇·σ| along the mid-plane as δ varies: slope in δ no steeper than −3/2 (normal) or −1 (tangential).
    let g = GapGeometry::new(2, 1e-4, 1.0, 0.5, 1.0).unwrap();
    let f = SingularFields::new(g).unwrap();
    for (alpha, bound) in [(1usize, -1.0), (2, -1.5)] {
        let m = RigidMode::decode(2, alpha).unwrap();
        let mut pts = Vec::new();
        for t in [0.02, 0.04, 0.08, 0.16] {
            let x = [t, 0.3 * g.wall_height(&[t])];
            let h = 1e-3 * t;
            let lap = |c: usize| {
                let u = |y: &[f64]| f.u_bar_unchecked(Particle::One, &m, y)[c];
                (u(&[x[0] + h, x[1]]) - 2.0 * u(&x) + u(&[x[0] - h, x[1]])) / (h * h)
            };
            let div: f64 = (0..2)
                .map(|c| (g.mu * lap(c) + f.momentum_residual_unchecked(Particle::One, &m, c + 1, &x)).powi(2))
                .sum::<f64>()
                .sqrt();
            pts.push((g.delta(&[t]).unwrap(), div));
        }
        let (slope, _) = fit_exponent(&pts).unwrap();
        assert!(slope >= bound - 0.1, "alpha={alpha} slope={slope}");
    }
    assert!(matches!(RigidMode::decode(2, 2).unwrap().kind, ModeKind::Translation { axis: 2 }));
}
