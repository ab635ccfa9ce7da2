//! Narrow-gap integrals `∫_{|x'|<R₀} w(x')/(ε+2κ|x'|²) dx'`: closed forms for
//! `n = 2, 3` and an adaptive Gauss–Kronrod evaluator for any `n`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const MAX_LEVELS: u32 = 60;
const MAX_PIECES: usize = 20_000;

/// Numerator weight of the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    None,
    /// `x_k²` for a fixed in-plane coordinate `k`.
    CoordinateSq,
    /// `|x'|²`
    RadiusSq,
}

pub fn gap_integral_closed(n: usize, eps: f64, kappa: f64, r0: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("closed form needs eps > 0, got {eps}")));
    }
    match n {
        2 => {
            let s = (2.0 * kappa * eps).sqrt();
            Ok(2.0 / s * (r0 * (2.0 * kappa / eps).sqrt()).atan())
        }
        3 => Ok(PI / (2.0 * kappa) * (2.0 * kappa * r0 * r0 / eps).ln_1p()),
        _ => Err(Error::Domain(format!("closed form exists for n=2,3 only, got n={n}"))),
    }
}

/// `|S^{k}|`, the area of the unit `k`-sphere in `R^{k+1}`.
fn sphere_area(k: usize) -> f64 {
    // 2 π^{(k+1)/2} / Γ((k+1)/2), with Γ at integers and half-integers by recursion.
    let twice = k + 1;
    let mut gamma = if twice % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut arg2 = if twice % 2 == 0 { 2 } else { 1 };
    while arg2 < twice {
        gamma *= arg2 as f64 / 2.0;
        arg2 += 2;
    }
    2.0 * PI.powf(twice as f64 / 2.0) / gamma
}

/// Error-free sum accumulator (`hi + lo` carries about 32 significant digits).
#[derive(Debug, Default, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (v - bp);
        self.hi = s;
        self.lo += err;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    level: u32,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive bisection over the given breakpoints until the summed
/// error estimate is below `rtol·|I|`.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, breaks: &[f64], rtol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (val, err) = gk15(f, w[0], w[1]);
        heap.push(Piece { a: w[0], b: w[1], val, err, level: 0 });
    }
    loop {
        let mut total = DoubleDouble::default();
        let mut err = 0.0;
        for p in heap.iter() {
            total.add(p.val);
            err += p.err;
        }
        let value = total.value();
        if err <= rtol * value.abs() || err == 0.0 {
            return Ok(value);
        }
        let worst = heap.pop().expect("non-empty partition");
        if worst.level >= MAX_LEVELS || heap.len() >= MAX_PIECES {
            return Err(Error::NonConvergence(format!(
                "error {err:.3e} above tolerance {:.3e} (refinement budget exhausted)",
                rtol * value.abs()
            )));
        }
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (val, e) = gk15(f, a, b);
            heap.push(Piece { a, b, val, err: e, level: worst.level + 1 });
        }
    }
}

/// Adaptive quadrature of the gap integral in radial form.
pub fn gap_integral_quadrature(n: usize, eps: f64, kappa: f64, r0: f64, weight: Weight, rtol: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("n={n} must be at least 2")));
    }
    if !(eps >= 0.0) || !(kappa > 0.0) || !(r0 > 0.0) {
        return Err(Error::Domain("need eps >= 0, kappa > 0, r0 > 0".into()));
    }
    if eps == 0.0 && weight == Weight::None && n <= 3 {
        return Err(Error::Domain(format!("integrand is not integrable at eps=0 for n={n}")));
    }
    if !(rtol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let k = n - 1;
    let area = sphere_area(k - 1);
    let wfac = match weight {
        Weight::None => 0.0,
        Weight::CoordinateSq => 1.0 / k as f64,
        Weight::RadiusSq => 1.0,
    };
    let f = move |r: f64| {
        let w = if weight == Weight::None { 1.0 } else { wfac * r * r };
        area * r.powi(k as i32 - 1) * w / (eps + 2.0 * kappa * r * r)
    };
    let floor = if eps > 0.0 { (eps / 100.0).min(r0) } else { r0 * 2f64.powi(-20) };
    let mut breaks = vec![r0];
    let mut b = r0;
    while b > floor {
        b *= 0.5;
        breaks.push(b);
    }
    breaks.push(0.0);
    breaks.reverse();
    adaptive_integrate(&f, &breaks, rtol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(0), 2.0);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn closed_examples() {
        let v2 = gap_integral_closed(2, 1e-4, 1.0, 0.5).unwrap();
        assert!((v2 - 220.144).abs() < 1e-3, "{v2}");
        let v3 = gap_integral_closed(3, 1e-4, 1.0, 0.5).unwrap();
        assert!((v3 - PI / 2.0 * 5001f64.ln()).abs() < 1e-12);
        assert!((v3 - 13.379).abs() < 1e-3);
        assert!(gap_integral_closed(2, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn quadrature_matches_closed() {
        for n in [2, 3] {
            for eps in [1e-2, 1e-4, 1e-6] {
                let c = gap_integral_closed(n, eps, 1.0, 0.5).unwrap();
                let q = gap_integral_quadrature(n, eps, 1.0, 0.5, Weight::None, DEFAULT_RTOL).unwrap();
                assert!(((c - q) / c).abs() < 1e-9, "n={n} eps={eps}: {c} vs {q}");
            }
        }
    }

    #[test]
    fn touching_weighted() {
        let q = gap_integral_quadrature(2, 0.0, 1.0, 0.5, Weight::CoordinateSq, DEFAULT_RTOL).unwrap();
        // ∫_{-1/2}^{1/2} x²/(2x²) dx = 1/2
        assert!((q - 0.5).abs() < 1e-12);
        assert!(gap_integral_quadrature(2, 0.0, 1.0, 0.5, Weight::None, DEFAULT_RTOL).is_err());
        assert!(gap_integral_quadrature(4, 0.0, 1.0, 0.5, Weight::None, DEFAULT_RTOL).is_ok());
    }

    #[test]
    fn radius_weight_n3_against_antiderivative() {
        let (eps, k, r): (f64, f64, f64) = (1e-4, 1.0, 0.5);
        let exact: f64 = 2.0 * PI * (r * r / (4.0 * k) - eps / (8.0 * k * k) * f64::ln_1p(2.0 * k * r * r / eps));
        let q = gap_integral_quadrature(3, eps, k, r, Weight::RadiusSq, DEFAULT_RTOL).unwrap();
        assert!(((q - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn impossible_tolerance_reports_nonconvergence() {
        let r = gap_integral_quadrature(2, 1e-6, 1.0, 0.5, Weight::None, 1e-30);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }
}
