use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::spectrum::SpectralDifferenceSet;
use crate::error::{Error, Result};

/// The closest fraction to `x` with denominator at most `max_den`, found
/// from the continued fraction expansion of `x` including semiconvergents.
pub fn best_rational(x: &BigRational, max_den: u64) -> BigRational {
    let max_den = BigInt::from(max_den.max(1));
    if x.denom() <= &max_den {
        return x.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let r = &n - &a * &d;
        (n, d) = (d, r);
        if d.is_zero() {
            break;
        }
    }
    let k = (&max_den - &q0).div_floor(&q1);
    let semi = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let conv = BigRational::new(p1, q1);
    if (&semi - x).abs() <= (&conv - x).abs() {
        semi
    } else {
        conv
    }
}

/// Rational approximation of a float ratio, `None` when no fraction with
/// denominator at most `max_den` lies within `tol`.
pub fn rational_ratio(ratio: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    let exact = BigRational::from_float(ratio)?;
    let r = best_rational(&exact, max_den);
    ((r.to_f64()? - ratio).abs() <= tol).then_some(r)
}

/// How ratios were decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithmeticMode {
    Float,
    ExactRational,
}

/// A difference whose ratio to the reference has no acceptable fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub difference: f64,
    pub ratio: f64,
}

/// Outcome of [`rationality_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct RationalityReport {
    pub mode: ArithmeticMode,
    /// The smallest positive difference `x_1`.
    pub reference: f64,
    pub reference_exact: Option<BigRational>,
    /// Positive differences `x_i`, ascending, starting with `x_1`.
    pub differences: Vec<f64>,
    pub differences_exact: Option<Vec<BigRational>>,
    /// `x_i / x_1 = q_i / p_i` for every accepted difference.
    pub ratios: Vec<BigRational>,
    pub witness: Option<Witness>,
    pub max_denominator: u64,
    pub tolerance: f64,
}

impl RationalityReport {
    pub fn accepted(&self) -> bool {
        self.witness.is_none()
    }
}

/// Decides whether all positive differences are rational multiples of the
/// smallest one.
///
/// Exact spectra are decided exactly. Otherwise each ratio `x_i / x_1` is
/// approximated by a fraction with denominator at most `max_den` and
/// accepted within `tol`; the first rejected ratio is the witness.
pub fn rationality_check(set: &SpectralDifferenceSet, max_den: u64, tol: f64) -> Result<RationalityReport> {
    let unit = set.spectrum.unit;
    if let Some(exact) = set.positive_exact() {
        let reference = exact
            .first()
            .cloned()
            .ok_or_else(|| Error::Params("no nonzero differences".into()))?;
        let ratios = exact.iter().map(|x| x / &reference).collect();
        return Ok(RationalityReport {
            mode: ArithmeticMode::ExactRational,
            reference: reference.to_f64().unwrap_or(f64::NAN) * unit,
            reference_exact: Some(reference),
            differences: exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) * unit).collect(),
            differences_exact: Some(exact),
            ratios,
            witness: None,
            max_denominator: max_den,
            tolerance: 0.0,
        });
    }
    let positive = set.positive();
    let reference = *positive
        .first()
        .ok_or_else(|| Error::Params("no nonzero differences".into()))?;
    let mut ratios = Vec::with_capacity(positive.len());
    let mut witness = None;
    for &x in &positive {
        let ratio = x / reference;
        match rational_ratio(ratio, max_den, tol) {
            Some(r) => ratios.push(r),
            None => {
                witness = Some(Witness { difference: x, ratio });
                break;
            }
        }
    }
    Ok(RationalityReport {
        mode: ArithmeticMode::Float,
        reference,
        reference_exact: None,
        differences: positive,
        differences_exact: None,
        ratios,
        witness,
        max_denominator: max_den,
        tolerance: tol,
    })
}

/// `x_1` either as a float or as an exact multiple of a log unit.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Float(f64),
    Exact { value: BigRational, unit: f64 },
}

impl Reference {
    fn to_f64(&self) -> f64 {
        match self {
            Reference::Float(x) => *x,
            Reference::Exact { value, unit } => value.to_f64().unwrap_or(f64::NAN) * unit,
        }
    }

    fn sign(&self) -> i32 {
        match self {
            Reference::Float(x) => x.signum() as i32,
            Reference::Exact { value, .. } => {
                if value.is_negative() {
                    -1
                } else {
                    1
                }
            }
        }
    }
}

/// `α` and the best `α` for a list `x_1, …, x_n` with `x_i = x_1 q_i / p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaReport {
    /// `α = exp(-|x_1| / Π p_i)`.
    pub alpha: f64,
    pub log_alpha: f64,
    /// `ln α` in units of the log base, when the reference is exact.
    pub log_alpha_exact: Option<BigRational>,
    /// Integers `m_i` with `x_i = m_i ln α`.
    pub coefficients: Vec<BigInt>,
    /// The largest `α < 1` with every `x_i ∈ ℤ ln α`.
    pub best_alpha: f64,
    pub log_best_alpha: f64,
    pub log_best_alpha_exact: Option<BigRational>,
    pub best_coefficients: Vec<BigInt>,
    /// Largest `|x_i - m_i ln α|` over both lattices; zero in exact mode.
    pub membership_residual: f64,
}

/// `α` from a reference difference and the rational ratios `x_i / x_1`.
///
/// With `x_i / x_1 = q_i / p_i` in lowest terms, `α = exp(-|x_1| / Π p_j)`
/// and `x_i = m_i ln α` for `m_i = -sign(x_1) q_i Π_{j≠i} p_j`. The best
/// `α` uses `|x_1| gcd(q) / lcm(p)` instead, the coarsest lattice
/// containing every `x_i`.
pub fn alpha_from_rationals(reference: &Reference, ratios: &[BigRational]) -> Result<AlphaReport> {
    if ratios.is_empty() {
        return Err(Error::Params("no differences".into()));
    }
    let x1 = reference.to_f64();
    if x1 == 0.0 {
        return Err(Error::Params("the reference difference is zero".into()));
    }
    let sign = BigInt::from(-reference.sign());
    let prod: BigInt = ratios.iter().map(|r| r.denom().clone()).product();
    let coefficients: Vec<BigInt> = ratios
        .iter()
        .map(|r| &sign * r.numer() * (&prod / r.denom()))
        .collect();
    let gcd_num = ratios.iter().fold(BigInt::zero(), |g, r| g.gcd(r.numer()));
    let lcm_den = ratios.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
    if gcd_num.is_zero() {
        return Err(Error::Params("all differences are zero".into()));
    }
    let best_coefficients: Vec<BigInt> = ratios
        .iter()
        .map(|r| &sign * (r * BigRational::from_integer(lcm_den.clone()) / BigRational::from_integer(gcd_num.clone())).to_integer())
        .collect();
    let scale = BigRational::new(BigInt::one(), prod.clone());
    let best_scale = BigRational::new(gcd_num, lcm_den);
    let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);

    let (log_alpha_exact, log_best_alpha_exact) = match reference {
        Reference::Exact { value, .. } => (
            Some(-value.abs() * &scale),
            Some(-value.abs() * &best_scale),
        ),
        Reference::Float(_) => (None, None),
    };
    let log_alpha = -x1.abs() * to_f(&scale);
    let log_best_alpha = -x1.abs() * to_f(&best_scale);
    let membership_residual = if log_alpha_exact.is_some() {
        0.0
    } else {
        ratios
            .iter()
            .zip(coefficients.iter().zip(&best_coefficients))
            .map(|(r, (m, b))| {
                let x = x1 * to_f(r);
                let a = (x - m.to_f64().unwrap_or(f64::NAN) * log_alpha).abs();
                let c = (x - b.to_f64().unwrap_or(f64::NAN) * log_best_alpha).abs();
                a.max(c)
            })
            .fold(0.0, f64::max)
    };
    Ok(AlphaReport {
        alpha: log_alpha.exp(),
        log_alpha,
        log_alpha_exact,
        coefficients,
        best_alpha: log_best_alpha.exp(),
        log_best_alpha,
        log_best_alpha_exact,
        best_coefficients,
        membership_residual,
    })
}

/// Generator of the subgroup of `ℝ` spanned by exact rationals: the gcd
/// of the numerators over the lcm of the denominators.
pub fn rational_gcd<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigRational {
    let (g, l) = values.into_iter().fold((BigInt::zero(), BigInt::one()), |(g, l), r| {
        (g.gcd(r.numer()), l.lcm(r.denom()))
    });
    BigRational::new(g, l)
}
