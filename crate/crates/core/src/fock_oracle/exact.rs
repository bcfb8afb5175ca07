//! Rational arithmetic variant of the oracle for small truncations.
//!
//! With rational `y` and `t²`, the quantity `cosh(s)·P_l` over the truncated
//! input is rational: the input weight `cosh(s)|a_n|² = C(2n,n) y^{2n}` is,
//! and squaring the splitter sum leaves only even powers of `t` and `r`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::error::{Error, Result};

pub const EXACT_N_MAX: u32 = 20;

fn big_binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn big_factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `cosh(s)·P_l` for `l = 0..=n_max` with input `SMSV(y) ⊗ |k⟩` truncated at
/// `n_max` photons and a splitter of transmittance `t2`.
pub fn weighted_marginal(y: &BigRational, t2: &BigRational, k: u32, n_max: u32) -> Result<Vec<BigRational>> {
    if n_max > EXACT_N_MAX {
        return Err(Error::OutOfRange {
            what: "n_max",
            value: f64::from(n_max),
            range: "n_max <= 20 in exact mode",
        });
    }
    let r2 = BigRational::one() - t2;
    let y2 = y * y;
    let mut out = vec![BigRational::zero(); n_max as usize + 1];
    let mut n = 0u32;
    while 2 * n + k <= n_max {
        let n1 = 2 * n;
        let weight = BigRational::from_integer(big_binomial(n1, n)) * Pow::pow(&y2, n);
        for q in 0..=(n1 + k) {
            let p = n1 + k - q;
            // (i, j): i photons of mode 1 and j of mode 2 end up in mode 2
            let terms: Vec<(BigInt, u32, u32)> = (0..=k.min(q))
                .filter(|&j| q - j <= n1)
                .map(|j| {
                    let i = q - j;
                    let sign = if i % 2 == 1 { -1 } else { 1 };
                    let c = BigInt::from(sign) * big_binomial(n1, i) * big_binomial(k, j);
                    (c, n1 - i + j, i + k - j)
                })
                .collect();
            let mut square = BigRational::zero();
            for (ca, ta, ra) in &terms {
                for (cb, tb, rb) in &terms {
                    square += BigRational::from_integer(ca * cb)
                        * Pow::pow(t2, (ta + tb) / 2)
                        * Pow::pow(&r2, (ra + rb) / 2);
                }
            }
            let norm = BigRational::new(
                big_factorial(p) * big_factorial(q),
                big_factorial(n1) * big_factorial(k),
            );
            out[q as usize] += &weight * norm * square;
        }
        n += 1;
    }
    Ok(out)
}

/// `cosh(s)` times the kept input norm, `Σ_{2n+k ≤ n_max} C(2n,n) y^{2n}`.
pub fn weighted_input_norm(y: &BigRational, k: u32, n_max: u32) -> BigRational {
    let y2 = y * y;
    (0..)
        .take_while(|n| 2 * n + k <= n_max)
        .map(|n| BigRational::from_integer(big_binomial(2 * n, n)) * Pow::pow(&y2, n))
        .sum()
}
