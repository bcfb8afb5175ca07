//! Weight functions `f`, normalization functions `G` and hybrid-state
//! amplitudes `C` for `k ∈ {0, 1, 2}` photons entering the second port.
//!
//! Outcome probabilities factor as `P_l = f_l · G_l`: `f` is elementary and
//! known in advance, while `G` is the polynomial differential function that
//! measurement statistics give access to.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ReducedScheme;
use crate::precision::{self, factorial, PrecisionPolicy, Real};
use crate::series::{derivative_table, euler_from_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    WeightF,
    NormG,
    AmplitudeC,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint {
    pub rs: ReducedScheme,
    pub l: u32,
    pub policy: PrecisionPolicy,
}

impl FamilyPoint {
    pub fn new(rs: ReducedScheme, l: u32, policy: PrecisionPolicy) -> Self {
        Self { rs, l, policy }
    }
}

/// Magnitude plus sign; `sign` is `±1`, or `0` when the value vanishes.
#[derive(Debug, Clone)]
pub struct FamilyValue {
    pub value: Real,
    pub log_value: f64,
    pub kind: FamilyKind,
    pub sign: i8,
}

impl FamilyValue {
    fn new(value: Real, kind: FamilyKind, sign: i8) -> Self {
        let sign = if precision::is_zero(&value) { 0 } else { sign };
        Self {
            log_value: precision::ln_abs(&value),
            value,
            kind,
            sign,
        }
    }

    /// Signed value as a double.
    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign.signum()) * precision::to_f64(&self.value)
    }
}

pub fn weight_f(p: &FamilyPoint) -> Result<FamilyValue> {
    let ev = FamilyEvaluator::new(p.rs, p.policy, p.l)?;
    Ok(FamilyValue::new(ev.weight_f(p.l)?, FamilyKind::WeightF, 1))
}

pub fn norm_g(p: &FamilyPoint) -> Result<FamilyValue> {
    let mut ev = FamilyEvaluator::new(p.rs, p.policy, p.l)?;
    Ok(FamilyValue::new(ev.norm_g(p.l)?, FamilyKind::NormG, 1))
}

pub fn amplitude_c(p: &FamilyPoint) -> Result<FamilyValue> {
    let mut ev = FamilyEvaluator::new(p.rs, p.policy, p.l)?;
    let (value, sign) = ev.amplitude_c(p.l)?;
    Ok(FamilyValue::new(value, FamilyKind::AmplitudeC, sign))
}

/// Shared state for evaluating many outcomes at one `(y1, B, k)` point:
/// the derivative table is built once and reused.
#[derive(Debug, Clone)]
pub struct FamilyEvaluator {
    rs: ReducedScheme,
    policy: PrecisionPolicy,
    y1: Real,
    b: Real,
    /// `1/cosh s = √(1 − 4y1²(1+B)²)`
    w: Real,
    table: Vec<Real>,
}

impl FamilyEvaluator {
    /// Prepares evaluation of every outcome `l ≤ l_max`.
    pub fn new(rs: ReducedScheme, policy: PrecisionPolicy, l_max: u32) -> Result<Self> {
        policy.validate()?;
        if rs.k() > 2 {
            return Err(Error::UnsupportedK(rs.k()));
        }
        let y1 = policy.real(rs.y1());
        let b = policy.real(rs.b());
        let y = &y1 * (policy.one() + &b);
        let w = precision::sqrt(&(policy.one() - &y * &y * 4u8));
        let table = derivative_table(l_max.max(1) + 2, &y1, &policy);
        Ok(Self {
            rs,
            policy,
            y1,
            b,
            w,
            table,
        })
    }

    pub fn scheme(&self) -> &ReducedScheme {
        &self.rs
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.policy
    }

    /// Largest outcome the prepared table supports.
    pub fn l_max(&self) -> u32 {
        self.table.len() as u32 - 3
    }

    fn ensure(&mut self, l: u32) {
        if l > self.l_max() {
            self.table = derivative_table(l + 2, &self.y1, &self.policy);
        }
    }

    fn z(&self, j: u32) -> &Real {
        &self.table[j as usize]
    }

    fn e(&self, n: u32, l: u32) -> Real {
        euler_from_table(n, l, &self.y1, &self.table, &self.policy)
    }

    fn one(&self) -> Real {
        self.policy.one()
    }

    fn pow(&self, x: &Real, e: u32) -> Real {
        if e == 0 {
            self.one()
        } else {
            x.powi(e.into())
        }
    }

    fn fact(&self, n: u32) -> Real {
        self.policy.ubig(factorial(n.into()))
    }

    fn y1b(&self) -> Real {
        &self.y1 * &self.b
    }

    fn singular(&self, l: u32) -> Result<()> {
        if self.rs.k() == 2 && l <= 1 && self.rs.y1() == 0.0 {
            return Err(Error::SingularPoint { k: 2, l });
        }
        Ok(())
    }

    /// `1/cosh s` at this point.
    pub fn inverse_cosh(&self) -> &Real {
        &self.w
    }

    pub fn weight_f(&self, l: u32) -> Result<Real> {
        self.singular(l)?;
        let w = &self.w;
        let b = &self.b;
        let opb = self.one() + b;
        let x = self.y1b();
        let m = l / 2;
        let lf = u64::from(l);
        Ok(match (self.rs.k(), l) {
            (0, _) => w * self.pow(&x, l) / self.fact(l),
            (1, 0) => w * b / opb,
            (1, _) => {
                // l² (y1B)^{l−1} / l!
                w / opb * self.pow(&x, l - 1) / self.fact(l) * (lf * lf)
            }
            (2, 0) => {
                let ratio = b / (&self.y1 * 2u8 * &opb);
                w * &ratio * &ratio / 2u8
            }
            (2, 1) => w * b * 2u8 / (&self.y1 * &opb * &opb),
            (2, _) if l % 2 == 0 => {
                let a = 2 * u64::from(m) - 1;
                w / (&opb * &opb * 2u8) * self.pow(&x, l - 2) / self.fact(l)
                    * (a * a)
                    * (lf * lf)
            }
            (2, _) => {
                let a = 2 * u64::from(m);
                w / (&opb * &opb * 2u8) * self.pow(&x, l - 2) / self.fact(l)
                    * (a * a)
                    * (lf * lf)
            }
            (k, _) => return Err(Error::UnsupportedK(k)),
        })
    }

    pub fn norm_g(&mut self, l: u32) -> Result<Real> {
        self.ensure(l);
        let b = self.b.clone();
        let b2 = &b * &b;
        let b3 = &b2 * &b;
        let b4 = &b2 * &b2;
        let one = self.one();
        Ok(match (self.rs.k(), l) {
            (0, _) => self.z(l).clone(),
            (1, 0) => {
                let z = self.z(0);
                z * z * z
            }
            (1, _) if l % 2 == 0 => {
                let m = u64::from(l / 2);
                let c = &b / (2 * m);
                self.z(l - 1) - &b / m * self.e(0, l) + &c * &c * self.e(1, l)
            }
            (1, _) => {
                let c = &b / u64::from(l);
                self.z(l - 1) - &c * 2u8 * self.e(0, l) + &c * &c * self.e(1, l)
            }
            (2, 0) => self.e(1, 1),
            (2, 1) => {
                let half = &b / 2u8;
                (&one + &b + &half * &half) * self.e(1, 0) - &b * (&one + &half) * self.e(2, 0)
                    + &half * &half * self.e(3, 0)
            }
            (2, _) if l % 2 == 0 => {
                let m = u64::from(l / 2);
                let a = 2 * m - 1;
                let j = l - 1;
                let s = &one + &b / (4 * m);
                let mid = &one + &b2 / (16 * m * m) + self.policy.int(a) / (4 * m) + &b / (2 * m);
                self.z(l - 2) - &b * 4u8 / a * &s * self.e(0, j)
                    + &b2 * 4u8 / (a * a) * mid * self.e(1, j)
                    - &b3 * 2u8 / (m * a * a) * &s * self.e(2, j)
                    + &b4 / (4 * m * m * a * a) * self.e(3, j)
            }
            (2, _) => {
                let m = u64::from(l / 2);
                let c = 2 * m + 1;
                let j = l - 1;
                let s = &one + &b / (2 * c);
                let mid = &one + &b2 / (4 * c * c) + self.policy.int(m) / c + &b / c;
                self.z(l - 2) - &b * 2u8 / m * &s * self.e(0, j)
                    + &b2 / (m * m) * mid * self.e(1, j)
                    - &b3 / (m * m * c) * &s * self.e(2, j)
                    + &b4 / (4 * m * m * c * c) * self.e(3, j)
            }
            (k, _) => return Err(Error::UnsupportedK(k)),
        })
    }

    /// `|C_l|` and its sign.
    pub fn amplitude_c(&mut self, l: u32) -> Result<(Real, i8)> {
        self.singular(l)?;
        let g = self.norm_g(l)?;
        let sg = precision::sqrt(&g);
        let b = &self.b;
        let opb = self.one() + b;
        let x = self.y1b();
        let sx = precision::sqrt(&x);
        let lf = u64::from(l);
        let sfact = precision::sqrt(&self.fact(l));
        let m = l / 2;
        Ok(match (self.rs.k(), l) {
            (0, _) => {
                let sign = if l % 2 == 0 { 1 } else { -1 };
                let half = if l % 2 == 0 { self.one() } else { sx.clone() };
                (self.pow(&x, l / 2) * half / sfact * sg, sign)
            }
            (1, 0) => (precision::sqrt(&(b / &opb)) * sg, 1),
            (1, _) if l % 2 == 0 => (
                self.pow(&x, m - 1) * &sx / sfact * lf / precision::sqrt(&opb) * sg,
                -1,
            ),
            (1, _) => (self.pow(&x, m) / sfact * lf / precision::sqrt(&opb) * sg, 1),
            (2, 0) => (b / (&self.y1 * 2u8 * &opb) * sg, 1),
            (2, 1) => (precision::sqrt(&(b / &self.y1)) * 2u8 / &opb * sg, 1),
            (2, _) if l % 2 == 0 => (
                self.pow(&x, m - 1) / sfact * ((lf - 1) * lf) / &opb * sg,
                1,
            ),
            (2, _) => (
                self.pow(&x, m - 1) * &sx / sfact * ((lf - 1) * lf) / &opb * sg,
                -1,
            ),
            (k, _) => return Err(Error::UnsupportedK(k)),
        })
    }

    /// `P_l = f_l · G_l`, with the finite limits substituted where `f` is
    /// singular (two photons in, vacuum squeezing).
    pub fn probability(&mut self, l: u32) -> Result<Real> {
        if self.rs.k() == 2 && l <= 1 && self.rs.y1() == 0.0 {
            let opb = self.one() + &self.b;
            let den = &opb * &opb;
            return Ok(if l == 0 {
                &self.b * &self.b / den
            } else {
                &self.b * 2u8 / den
            });
        }
        let g = self.norm_g(l)?;
        Ok(self.weight_f(l)? * g)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn point(y1: f64, b: f64, k: u32, l: u32) -> FamilyPoint {
        FamilyPoint::new(ReducedScheme::new(y1, b, k).unwrap(), l, PrecisionPolicy::default())
    }

    #[test]
    fn weight_examples() {
        let w = 0.75f64.sqrt();
        assert_relative_eq!(weight_f(&point(0.2, 0.25, 0, 0)).unwrap().to_f64(), w, max_relative = 1e-15);
        assert_relative_eq!(weight_f(&point(0.25, 0.0, 0, 0)).unwrap().to_f64(), w, max_relative = 1e-15);
        assert_relative_eq!(
            weight_f(&point(0.2, 0.25, 0, 2)).unwrap().to_f64(),
            w * 0.05 * 0.05 / 2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(weight_f(&point(0.2, 0.25, 0, 2)).unwrap().to_f64(), 0.00108253, max_relative = 1e-5);
        assert_relative_eq!(weight_f(&point(0.2, 0.25, 1, 0)).unwrap().to_f64(), 0.1732051, max_relative = 1e-6);
        for k in 0..3 {
            assert_eq!(weight_f(&point(0.2, 0.0, k, 3)).unwrap().to_f64(), 0.0);
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm_g(&point(0.0, 0.5, 1, 1)).unwrap().to_f64(), 1.0);
        assert_relative_eq!(norm_g(&point(0.2, 0.25, 0, 2)).unwrap().to_f64(), 8.16462, max_relative = 1e-5);
        assert_relative_eq!(norm_g(&point(0.1, 0.25, 2, 0)).unwrap().to_f64(), 0.0903675, max_relative = 1e-6);
    }

    #[test]
    fn amplitude_examples() {
        let c = amplitude_c(&point(0.2, 0.25, 0, 0)).unwrap();
        assert_relative_eq!(c.to_f64(), 1.0445523, max_relative = 1e-7);
        let c = amplitude_c(&point(0.2, 0.25, 1, 0)).unwrap();
        assert_relative_eq!(c.to_f64(), 0.509689319744779, max_relative = 1e-14);
        assert_eq!(amplitude_c(&point(0.2, 0.25, 0, 3)).unwrap().sign, -1);
        assert_eq!(amplitude_c(&point(0.2, 0.25, 0, 4)).unwrap().sign, 1);
    }

    #[test]
    fn errors() {
        assert_eq!(
            weight_f(&point(0.0, 1.0, 2, 0)).unwrap_err(),
            Error::SingularPoint { k: 2, l: 0 }
        );
        assert!(matches!(amplitude_c(&point(0.0, 1.0, 2, 1)), Err(Error::SingularPoint { .. })));
        assert_eq!(weight_f(&point(0.1, 1.0, 3, 0)).unwrap_err(), Error::UnsupportedK(3));
    }

    #[test]
    fn anchor_probabilities() {
        let rs = ReducedScheme::new(0.2, 0.25, 0).unwrap();
        let mut ev = FamilyEvaluator::new(rs, PrecisionPolicy::default(), 4).unwrap();
        let expected = [
            0.944911182523068,
            0.0449957705963366,
            0.00883845493856611,
            0.00105857396811109,
        ];
        for (l, e) in expected.into_iter().enumerate() {
            let p = precision::to_f64(&ev.probability(l as u32).unwrap());
            assert_relative_eq!(p, e, max_relative = 1e-13);
        }
        let mut ev = FamilyEvaluator::new(rs.with_k(1), PrecisionPolicy::default(), 2).unwrap();
        assert_relative_eq!(precision::to_f64(&ev.probability(0).unwrap()), 0.224978852981683, max_relative = 1e-13);
        assert_relative_eq!(precision::to_f64(&ev.probability(1).unwrap()), 0.707076395085289, max_relative = 1e-13);
        let mut ev = FamilyEvaluator::new(rs.with_k(2), PrecisionPolicy::default(), 2).unwrap();
        for (l, e) in [0.0578517050524327, 0.318031330949617, 0.557485864097638].into_iter().enumerate() {
            assert_relative_eq!(precision::to_f64(&ev.probability(l as u32).unwrap()), e, max_relative = 1e-13);
        }
    }

    #[test]
    fn factorization_identity() {
        for (y1, b) in [(0.05, 4.0), (0.1, 1.0), (0.2, 0.25)] {
            for k in 0..3u32 {
                let rs = ReducedScheme::new(y1, b, k).unwrap();
                let mut ev = FamilyEvaluator::new(rs, PrecisionPolicy::default(), 20).unwrap();
                for l in 0..=20 {
                    let (c, _) = ev.amplitude_c(l).unwrap();
                    let kfact = [1u8, 1, 2][k as usize];
                    let lhs = &c * &c * ev.inverse_cosh() / kfact;
                    let rhs = ev.weight_f(l).unwrap() * ev.norm_g(l).unwrap();
                    let err = precision::relative_difference(&lhs, &rhs);
                    assert!(err < 1e-20, "k={k} l={l} y1={y1} B={b}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn vanishing_splitter_limits() {
        for y1 in [0.05, 0.2, 0.3] {
            assert_relative_eq!(
                norm_g(&point(y1, 0.0, 1, 1)).unwrap().to_f64(),
                1.0 / (1.0 - 4.0 * y1 * y1).sqrt(),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                norm_g(&point(y1, 0.0, 2, 2)).unwrap().to_f64(),
                1.0 / (1.0 - 4.0 * y1 * y1).sqrt(),
                max_relative = 1e-14
            );
        }
    }
}
