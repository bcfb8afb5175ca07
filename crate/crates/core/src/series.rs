//! Evaluation of `Z(y) = 1/√(1−4y²)`, its derivatives, and Euler-operator
//! forms `(y d/dy)ⁿ (y Z⁽ˡ⁾(y))` in extended precision.
//!
//! Two independent routes are provided. The primary one differentiates the
//! defining ODE `(1−4y²) Z′ = 4y Z`, giving the three-term recurrence
//!
//! ```text
//! Z⁽ʲ⁺¹⁾ = Z² · [4y(2j+1) Z⁽ʲ⁾ + 4j² Z⁽ʲ⁻¹⁾]
//! ```
//!
//! whose terms are all non-negative. The second sums the Taylor expansion
//! `Z(y) = Σ C(2n,n) y²ⁿ` termwise with a certified geometric tail bound.

use dashu_int::UBig;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precision::{self, binomial, falling_factorial, PrecisionPolicy, Real};

/// A series-module result: the value, its log-magnitude, and how it was truncated.
#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub value: Real,
    /// `ln |value|`, finite even when `value` is outside the double range.
    pub log_value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

impl SeriesValue {
    fn exact(value: Real, terms_used: usize) -> Self {
        Self {
            log_value: precision::ln_abs(&value),
            value,
            tail_bound: 0.0,
            terms_used,
        }
    }

    pub fn to_f64(&self) -> f64 {
        precision::to_f64(&self.value)
    }

    pub fn summary(&self) -> SeriesSummary {
        SeriesSummary {
            value: self.to_f64(),
            log_value: self.log_value,
            tail_bound: self.tail_bound,
            terms_used: self.terms_used,
        }
    }
}

/// Double-precision view of a [`SeriesValue`] for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub value: f64,
    pub log_value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

pub(crate) fn check_y1(y1: f64) -> Result<()> {
    if !y1.is_finite() {
        return Err(Error::NotFinite { what: "y1" });
    }
    if !(0.0..0.5).contains(&y1) {
        return Err(Error::OutOfRange {
            what: "y1",
            value: y1,
            range: "0 <= y1 < 0.5",
        });
    }
    Ok(())
}

/// `Z(y1)` from the closed form.
pub fn z_value(y1: f64, policy: &PrecisionPolicy) -> Result<SeriesValue> {
    check_y1(y1)?;
    policy.validate()?;
    Ok(SeriesValue::exact(z_closed(&policy.real(y1), policy), 1))
}

pub(crate) fn z_closed(y1: &Real, policy: &PrecisionPolicy) -> Real {
    let one = policy.one();
    let disc = &one - y1 * y1 * 4u8;
    one / precision::sqrt(&disc)
}

/// `Z⁽⁰⁾ … Z⁽ʲᵐᵃˣ⁾` at `y1` by the ODE recurrence.
pub fn z_derivative_table(j_max: u32, y1: f64, policy: &PrecisionPolicy) -> Result<Vec<Real>> {
    check_y1(y1)?;
    policy.validate()?;
    Ok(derivative_table(j_max, &policy.real(y1), policy))
}

pub(crate) fn derivative_table(j_max: u32, y1: &Real, policy: &PrecisionPolicy) -> Vec<Real> {
    let z = z_closed(y1, policy);
    let z2 = &z * &z;
    let four_y = y1 * 4u8;
    let mut table = Vec::with_capacity(j_max as usize + 1);
    table.push(z);
    for j in 0..j_max as u64 {
        let prev = &table[j as usize];
        let mut next = &four_y * prev * (2 * j + 1);
        if j > 0 {
            next += &table[j as usize - 1] * (4 * j * j);
        }
        table.push(next * &z2);
    }
    table
}

/// `Z⁽ʲ⁾(y1)` by the ODE recurrence.
pub fn z_derivative(j: u32, y1: f64, policy: &PrecisionPolicy) -> Result<SeriesValue> {
    let mut table = z_derivative_table(j, y1, policy)?;
    let value = table.pop().expect("table has j+1 entries");
    Ok(SeriesValue::exact(value, j as usize + 1))
}

/// Sums `Σ_{N≥N0} a_N` of positive terms given `a_{N0}` and the ratio
/// `a_{N+1}/a_N`, plus a bound `ρ_N ≥ sup_{M≥N} a_{M+1}/a_M`.
///
/// Stops once `a_N·ρ_N/(1−ρ_N) ≤ tail_epsilon`.
fn sum_positive_series(
    first: Real,
    policy: &PrecisionPolicy,
    mut ratio: impl FnMut(usize) -> Real,
    mut ratio_sup: impl FnMut(usize) -> f64,
) -> Result<SeriesValue> {
    let mut term = first;
    let mut sum = term.clone();
    for i in 0..policy.max_terms {
        let rho = ratio_sup(i);
        if rho < 1.0 {
            let bound = precision::to_f64(&term) * rho / (1.0 - rho);
            if bound <= policy.tail_epsilon {
                return Ok(SeriesValue {
                    log_value: precision::ln_abs(&sum),
                    value: sum,
                    tail_bound: bound,
                    terms_used: i + 1,
                });
            }
        }
        term = term * ratio(i);
        sum += &term;
    }
    Err(Error::TruncationFailure {
        tail_epsilon: policy.tail_epsilon,
        max_terms: policy.max_terms,
    })
}

/// Upper bound of `(2M+1)²/((2M+2−l)(2M+1−l))` over `M ≥ n`.
fn coefficient_ratio_sup(n: u64, l: u64) -> f64 {
    let a = (2 * n + 1) as f64;
    let g = a * a / (((2 * n + 2 - l) as f64) * ((2 * n + 1 - l) as f64));
    g.max(1.0)
}

/// `Z⁽ʲ⁾(y1)` by termwise summation of `Σ_{2n≥j} C(2n,n)·(2n)!/(2n−j)!·y1^{2n−j}`.
pub fn z_derivative_series(j: u32, y1: f64, policy: &PrecisionPolicy) -> Result<SeriesValue> {
    euler_series(0, j, y1, policy, false)
}

/// `(y1 d/dy1)ⁿ (y1 Z⁽ˡ⁾(y1))` by termwise action on the Taylor series.
pub fn euler_apply(n: u32, l: u32, y1: f64, policy: &PrecisionPolicy) -> Result<SeriesValue> {
    euler_series(n, l, y1, policy, true)
}

// With `shifted`, sums Σ C(2N,N)(2N)!/(2N−l)!·pⁿ·y^p with p = 2N−l+1;
// otherwise the plain derivative series with exponent 2N−l and n ignored.
fn euler_series(
    n: u32,
    l: u32,
    y1: f64,
    policy: &PrecisionPolicy,
    shifted: bool,
) -> Result<SeriesValue> {
    check_y1(y1)?;
    policy.validate()?;
    let l = l as u64;
    let n0 = l.div_ceil(2);
    let lowest_power = 2 * n0 - l + u64::from(shifted);
    let coefficient = binomial(2 * n0, n0) * falling_factorial(2 * n0, l);

    if y1 == 0.0 {
        let value = if lowest_power == 0 {
            policy.ubig(coefficient)
        } else {
            policy.zero()
        };
        return Ok(SeriesValue::exact(value, 1));
    }

    let y = policy.real(y1);
    let y2 = &y * &y;
    let power_weight = |p: u64| -> UBig { UBig::from(p).pow(n as usize) };
    let mut first = policy.ubig(coefficient) * y.powi(lowest_power.into());
    if shifted {
        first *= policy.ubig(power_weight(lowest_power));
    }

    let y2_f = y1 * y1;
    let ratio = |i: usize| {
        let big_n = n0 + i as u64;
        let a = 2 * big_n + 1;
        let num = UBig::from(4u8) * UBig::from(a) * UBig::from(a);
        let den = UBig::from(2 * big_n + 2 - l) * UBig::from(2 * big_n + 1 - l);
        let mut r = &y2 * policy.ubig(num) / policy.ubig(den);
        if shifted && n > 0 {
            let p = 2 * big_n - l + 1;
            r = r * policy.ubig(power_weight(p + 2)) / policy.ubig(power_weight(p));
        }
        r
    };
    let ratio_sup = |i: usize| {
        let big_n = n0 + i as u64;
        let mut rho = 4.0 * y2_f * coefficient_ratio_sup(big_n, l);
        if shifted && n > 0 {
            let p = (2 * big_n - l + 1) as f64;
            rho *= ((p + 2.0) / p).powi(n as i32);
        }
        // one part in 10⁹ above the exact supremum absorbs double rounding
        rho * (1.0 + 1e-9)
    };
    sum_positive_series(first, policy, ratio, ratio_sup)
}

/// Row `S(n, 0..=n)` of Stirling numbers of the second kind.
pub(crate) fn stirling2_row(n: u32) -> Vec<UBig> {
    let mut row = vec![UBig::ONE];
    for m in 1..=n as usize {
        let mut next = vec![UBig::ZERO; m + 1];
        for (i, slot) in next.iter_mut().enumerate().skip(1) {
            let carry = row.get(i - 1).cloned().unwrap_or(UBig::ZERO);
            let stay = row
                .get(i)
                .map(|s| s * UBig::from(i))
                .unwrap_or(UBig::ZERO);
            *slot = carry + stay;
        }
        row = next;
    }
    row
}

/// `(y d/dy)ⁿ (y Z⁽ˡ⁾)` from a derivative table holding at least `Z⁽ˡ⁺ⁿ⁾`.
///
/// Uses `(y D)ⁿ = Σᵢ S(n,i) yⁱ Dⁱ` and `Dⁱ(y f) = y f⁽ⁱ⁾ + i f⁽ⁱ⁻¹⁾`.
pub(crate) fn euler_from_table(
    n: u32,
    l: u32,
    y1: &Real,
    table: &[Real],
    policy: &PrecisionPolicy,
) -> Real {
    let l = l as usize;
    let mut acc = policy.zero();
    let mut y_pow = policy.one();
    for (i, s) in stirling2_row(n).into_iter().enumerate() {
        if s != UBig::ZERO {
            let mut inner = y1 * &table[l + i];
            if i > 0 {
                inner += &table[l + i - 1] * (i as u64);
            }
            acc += policy.ubig(s) * &y_pow * inner;
        }
        y_pow = y_pow * y1;
    }
    acc
}

/// Same quantity as [`euler_apply`], via the derivative recurrence and a
/// Stirling-number expansion of the Euler operator.
pub fn euler_apply_closed(n: u32, l: u32, y1: f64, policy: &PrecisionPolicy) -> Result<SeriesValue> {
    check_y1(y1)?;
    policy.validate()?;
    let y = policy.real(y1);
    let table = derivative_table(l + n, &y, policy);
    Ok(SeriesValue::exact(
        euler_from_table(n, l, &y, &table, policy),
        (l + n) as usize + 1,
    ))
}
