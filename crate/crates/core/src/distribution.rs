//! Full outcome distributions `P_l^(k)` of the photon count in the measured
//! mode, with a certified bound on the mass beyond the last listed outcome.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::FamilyEvaluator;
use crate::output::Table;
use crate::params::ReducedScheme;
use crate::precision::{self, PrecisionPolicy, Real};

/// Adaptive searches stop here whatever the tail says.
pub const L_MAX_CAP: u32 = 4096;
const L_START: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Oracle,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeProbability {
    pub l: u32,
    pub probability: f64,
    pub log_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub k: u32,
    /// Known for analytic distributions and for oracle states built from one.
    pub rs: Option<ReducedScheme>,
    pub probs: Vec<OutcomeProbability>,
    /// Upper bound on the probability of any outcome beyond `probs`.
    pub tail_mass: f64,
    pub policy: PrecisionPolicy,
    pub source: Source,
}

impl OutcomeDistribution {
    pub fn l_max(&self) -> u32 {
        self.probs.last().map_or(0, |p| p.l)
    }

    pub fn probability(&self, l: u32) -> f64 {
        self.probs.get(l as usize).map_or(0.0, |p| p.probability)
    }

    /// Sum of listed probabilities, excluding the tail.
    pub fn listed_mass(&self) -> f64 {
        // ascending l keeps the small terms from being absorbed first
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p.probability).collect();
        probs.sort_by(f64::total_cmp);
        probs.into_iter().sum()
    }

    /// `listed_mass + tail_mass` lies within `10·tail_epsilon` of one.
    pub fn is_normalized(&self) -> bool {
        let tol = 10.0 * self.policy.tail_epsilon;
        let total = self.listed_mass();
        total <= 1.0 + tol.max(4.0 * f64::EPSILON) && total + self.tail_mass >= 1.0 - tol.max(4.0 * f64::EPSILON)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec!["l", "probability", "log_probability"]);
        t.metadata.push("k", self.k);
        if let Some(rs) = &self.rs {
            t.metadata.push("y1", crate::output::fmt17(rs.y1()));
            t.metadata.push("B", crate::output::fmt17(rs.b()));
        }
        t.metadata.push("source", self.source.as_str());
        t.metadata.push("tail_mass", crate::output::fmt17(self.tail_mass));
        for p in &self.probs {
            t.push(vec![p.l.into(), p.probability.into(), p.log_probability.into()]);
        }
        t
    }
}

pub(crate) fn entry(l: u32, p: &Real) -> OutcomeProbability {
    OutcomeProbability {
        l,
        probability: precision::to_f64(p),
        log_probability: precision::ln_abs(p),
    }
}

/// `P_l^(k)` at `rs` as a double.
pub fn outcome_probability(k: u32, l: u32, rs: &ReducedScheme, policy: &PrecisionPolicy) -> Result<f64> {
    let mut ev = FamilyEvaluator::new(rs.with_k(k), *policy, l)?;
    Ok(precision::to_f64(&ev.probability(l)?))
}

/// Extended-precision `P_l^(k)`.
pub fn outcome_probability_ext(
    k: u32,
    l: u32,
    rs: &ReducedScheme,
    policy: &PrecisionPolicy,
) -> Result<Real> {
    let mut ev = FamilyEvaluator::new(rs.with_k(k), *policy, l)?;
    ev.probability(l)
}

fn ln_d(k: u32, u: f64) -> f64 {
    let z = 1.0 / (1.0 - 4.0 * u * u).sqrt();
    let z1 = 4.0 * u * z.powi(3);
    let d = match k {
        0 => z,
        1 => z + u * z1,
        _ => {
            let z2 = 4.0 * z.powi(3) + 48.0 * u * u * z.powi(5);
            2.0 * z + 4.0 * u * z1 + u * u * z2
        }
    };
    d.ln()
}

/// Certified upper bound on `Σ_{l > l_last} P_l^(k)`.
///
/// For any `z > 1`, `Pr[q > L] ≤ z^{−(L+1)} E[z^q]`, and per input sector
/// `|2n, k⟩` one has `E[z^q] ≤ C(2n+k, k)(R + Tz)^k (T + Rz)^{2n}`. Summing
/// over the squeezed input gives `(w/k!)(R+Tz)^k D_k(y1(1+Bz)) z^{−(L+1)}`
/// with `D_k(u) = (d/du)^k (u^k Z(u))`; the bound is minimized over a grid of `z`.
pub fn tail_bound(k: u32, l_last: u32, rs: &ReducedScheme) -> f64 {
    let (y1, b) = (rs.y1(), rs.b());
    if l_last >= k && (y1 == 0.0 || b == 0.0) {
        return 0.0;
    }
    let y = rs.y();
    let w = (1.0 - 4.0 * y * y).sqrt();
    let (t, r) = (1.0 / (1.0 + b), b / (1.0 + b));
    let ln_prefactor = w.ln() - [0.0, 0.0, 2f64.ln()][k.min(2) as usize];
    let z_max = if y1 == 0.0 || b == 0.0 {
        1e6
    } else {
        ((0.5 / y1 - 1.0) / b).min(1e6)
    };
    if z_max <= 1.0 {
        return 1.0;
    }
    const GRID: usize = 512;
    let ln_zmax = z_max.ln();
    let mut best = 0.0f64;
    for i in 1..GRID {
        let z = (ln_zmax * i as f64 / GRID as f64).exp();
        let u = y1 * (1.0 + b * z);
        if u >= 0.5 {
            continue;
        }
        let ln_bound = ln_prefactor + f64::from(k) * (r + t * z).ln() + ln_d(k, u)
            - f64::from(l_last + 1) * z.ln();
        best = best.min(ln_bound);
    }
    // covers double rounding inside the bound evaluation
    (best.exp() * (1.0 + 1e-9)).min(1.0)
}

/// Probabilities for `l = 0..=L`. With `l_cap`, `L = l_cap` and the tail is
/// whatever the certificate gives; otherwise `L` doubles from 8 until the
/// certified tail is at most `tail_epsilon`.
pub fn analytic_distribution(
    k: u32,
    rs: &ReducedScheme,
    policy: &PrecisionPolicy,
    l_cap: Option<u32>,
) -> Result<OutcomeDistribution> {
    policy.validate()?;
    if k > 2 {
        return Err(Error::UnsupportedK(k));
    }
    let rs = rs.with_k(k);
    let (l_last, tail) = match l_cap {
        Some(cap) => (cap, tail_bound(k, cap, &rs)),
        None => {
            let mut l = L_START;
            loop {
                let tail = tail_bound(k, l, &rs);
                if tail <= policy.tail_epsilon {
                    break (l, tail);
                }
                if l >= L_MAX_CAP {
                    return Err(Error::TruncationFailure {
                        tail_epsilon: policy.tail_epsilon,
                        max_terms: L_MAX_CAP as usize,
                    });
                }
                l = (2 * l).min(L_MAX_CAP);
            }
        }
    };
    let mut ev = FamilyEvaluator::new(rs, *policy, l_last)?;
    let probs = (0..=l_last)
        .map(|l| ev.probability(l).map(|p| entry(l, &p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeDistribution {
        k,
        rs: Some(rs),
        probs,
        tail_mass: tail,
        policy: *policy,
        source: Source::Analytic,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn rs(y1: f64, b: f64) -> ReducedScheme {
        ReducedScheme::new(y1, b, 0).unwrap()
    }

    #[test]
    fn transparent_splitter() {
        let d = analytic_distribution(0, &rs(0.3, 0.0), &PrecisionPolicy::default(), None).unwrap();
        assert_eq!(d.probability(0), 1.0);
        assert!(d.probs[1..].iter().all(|p| p.probability == 0.0));
        assert_eq!(d.tail_mass, 0.0);
    }

    #[test]
    fn few_photon_splitting() {
        let p = PrecisionPolicy::default();
        let d = analytic_distribution(2, &rs(0.0, 1.0), &p, None).unwrap();
        assert_eq!(&[d.probability(0), d.probability(1), d.probability(2)], &[0.25, 0.5, 0.25]);
        for b in [0.25, 4.0] {
            let d = analytic_distribution(1, &rs(0.0, b), &p, None).unwrap();
            assert_relative_eq!(d.probability(0), b / (1.0 + b), max_relative = 1e-15);
            assert_relative_eq!(d.probability(1), 1.0 / (1.0 + b), max_relative = 1e-15);
            assert_eq!(d.probability(2), 0.0);
        }
    }

    #[test]
    fn capped_distribution_mass() {
        let d = analytic_distribution(0, &rs(0.2, 0.25), &PrecisionPolicy::default(), Some(10)).unwrap();
        assert_eq!(d.probs.len(), 11);
        assert!((d.listed_mass() - 1.0).abs() < 1e-9);
        assert!(d.listed_mass() + d.tail_mass >= 1.0);
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let p = PrecisionPolicy::default();
        for k in 0..3 {
            for (y1, b) in [(0.05, 4.0), (0.2, 0.25), (0.1, 1.0), (0.3, 0.25)] {
                let full = analytic_distribution(k, &rs(y1, b), &p, None).unwrap();
                for l_last in [0u32, 1, 3, 6, 10] {
                    let actual: f64 = full.probs[l_last as usize + 1..].iter().map(|p| p.probability).sum();
                    let bound = tail_bound(k, l_last, &rs(y1, b));
                    assert!(bound >= actual, "k={k} y1={y1} B={b} L={l_last}: {bound:e} < {actual:e}");
                }
            }
        }
    }

    #[test]
    fn unsupported_k() {
        assert_eq!(
            analytic_distribution(3, &rs(0.1, 1.0), &PrecisionPolicy::default(), None).unwrap_err(),
            Error::UnsupportedK(3)
        );
    }

    #[test]
    fn csv_columns() {
        let d = analytic_distribution(0, &rs(0.2, 0.25), &PrecisionPolicy::default(), Some(2)).unwrap();
        let csv = d.to_table().to_csv();
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "l,probability,log_probability");
        assert!(body[1].starts_with("0,9.44911182523068"));
    }
}
