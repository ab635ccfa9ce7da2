//! Exact rational coefficients of the auxiliary correction fields.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Coefficients as exact rationals for a given dimension and (rational) curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxCoefficients {
    pub n: usize,
    pub kappa: Rational64,
    pub a1: Rational64,
    pub a2: Rational64,
    pub b1: Rational64,
    pub b2: Rational64,
    pub b3: Rational64,
    pub b4: Rational64,
    pub b5: Rational64,
    pub b6: Rational64,
}

/// Float view used by the field evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
}

impl CoefficientValues {
    /// Same closed forms evaluated directly in floating point.
    pub fn for_curvature(n: usize, kappa: f64) -> Result<Self> {
        if n < 2 || !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Invalid(format!("need n >= 2 and kappa > 0, got n={n} kappa={kappa}")));
        }
        let nf = n as f64;
        let q = 2.0 * nf - 1.0;
        Ok(Self {
            a1: 6.0 / (nf - 1.0),
            a2: -2.0,
            b1: -12.0 / q,
            b2: 3.0 / (2.0 * q) / kappa,
            b3: -5.0,
            b4: 4.0 * (nf + 1.0) / q,
            b5: -12.0 * kappa,
            b6: 3.0 / q / kappa,
        })
    }
}

/// One exact identity `lhs == rhs`, named by the coefficients it pins down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: &'static str,
    pub involves: &'static [&'static str],
    pub lhs: Rational64,
    pub rhs: Rational64,
}

impl Relation {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).to_f64().unwrap_or(f64::INFINITY).abs()
    }
}

const MAX_DENOM: i64 = 1 << 20;

/// Last continued-fraction convergent of `x` whose denominator stays within `max_den`.
fn bounded_rational(x: f64, max_den: i64) -> Option<Rational64> {
    if !x.is_finite() || x.abs() >= (1u64 << 40) as f64 {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as i64;
        let (h2, k2) = (ai.checked_mul(h1)?.checked_add(h0)?, ai.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac.abs() < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    (k1 > 0).then(|| Rational64::new(h1, k1))
}

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

impl AuxCoefficients {
    pub fn exact(n: usize, kappa: Rational64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("n={n} must be at least 2")));
        }
        if kappa <= Rational64::zero() {
            return Err(Error::Invalid("kappa must be positive".into()));
        }
        let ni = n as i64;
        let q = 2 * ni - 1;
        Ok(Self {
            n,
            kappa,
            a1: r(6, ni - 1),
            a2: r(-2, 1),
            b1: r(-12, q),
            b2: r(3, 2 * q) / kappa,
            b3: r(-5, 1),
            b4: r(4 * (ni + 1), q),
            b5: r(-12, 1) * kappa,
            b6: r(3, q) / kappa,
        })
    }

    /// Rational stand-in for a float curvature, denominator at most `MAX_DENOM`
    /// so the relation checks cannot overflow. Evaluators use
    /// [`CoefficientValues::for_curvature`], not these rationals.
    pub fn from_f64(n: usize, kappa: f64) -> Result<Self> {
        let k = bounded_rational(kappa, MAX_DENOM)
            .ok_or_else(|| Error::Invalid(format!("kappa={kappa} has no rational approximation")))?;
        Self::exact(n, k)
    }

    pub fn values(&self) -> CoefficientValues {
        let f = |v: Rational64| v.to_f64().expect("finite rational");
        CoefficientValues {
            a1: f(self.a1),
            a2: f(self.a2),
            b1: f(self.b1),
            b2: f(self.b2),
            b3: f(self.b3),
            b4: f(self.b4),
            b5: f(self.b5),
            b6: f(self.b6),
        }
    }

    /// Derivation relations plus the divergence-free conditions, all exact.
    pub fn relations(&self) -> Vec<Relation> {
        let n = r(self.n as i64, 1);
        let k = self.kappa;
        let one = r(1, 1);
        let zero = Rational64::zero();
        let c = |v: i64| r(v, 1);
        vec![
            Relation {
                name: "b1 = -(6 + 4 kappa b2)/n",
                involves: &["b1", "b2"],
                lhs: self.b1,
                rhs: -(c(6) + c(4) * k * self.b2) / n,
            },
            Relation {
                name: "b4 = 2 + 4 kappa b2",
                involves: &["b4", "b2"],
                lhs: self.b4,
                rhs: c(2) + c(4) * k * self.b2,
            },
            Relation { name: "b5 = -12 kappa", involves: &["b5"], lhs: self.b5, rhs: c(-12) * k },
            Relation { name: "b3 = -5", involves: &["b3"], lhs: self.b3, rhs: c(-5) },
            Relation {
                name: "5 b5 = 12 kappa b3",
                involves: &["b5", "b3"],
                lhs: c(5) * self.b5,
                rhs: c(12) * k * self.b3,
            },
            Relation {
                name: "b1 = -4 kappa b6",
                involves: &["b1", "b6"],
                lhs: self.b1,
                rhs: c(-4) * k * self.b6,
            },
            Relation { name: "b2 = b6/2", involves: &["b2", "b6"], lhs: self.b2, rhs: self.b6 / c(2) },
            Relation {
                name: "1 + (n b1 + b4)/4 = 0",
                involves: &["b1", "b4"],
                lhs: one + (n * self.b1 + self.b4) / c(4),
                rhs: zero,
            },
            Relation {
                name: "n b1 + 3 b4 - 8 kappa b2 = 0",
                involves: &["b1", "b4", "b2"],
                lhs: n * self.b1 + c(3) * self.b4 - c(8) * k * self.b2,
                rhs: zero,
            },
            Relation {
                name: "4 kappa + (3 b5 - 4 kappa b3)/4 = 0",
                involves: &["b5", "b3"],
                lhs: c(4) * k + (c(3) * self.b5 - c(4) * k * self.b3) / c(4),
                rhs: zero,
            },
            Relation {
                name: "(n-1) a1 + a2 = 4",
                involves: &["a1", "a2"],
                lhs: (n - one) * self.a1 + self.a2,
                rhs: c(4),
            },
            Relation {
                name: "(n-1) a1 + 3 a2 = 0",
                involves: &["a1", "a2"],
                lhs: (n - one) * self.a1 + c(3) * self.a2,
                rhs: zero,
            },
        ]
    }

    /// Relations that fail, if any.
    pub fn violations(&self) -> Vec<Relation> {
        self.relations().into_iter().filter(|rel| !rel.holds()).collect()
    }
}
