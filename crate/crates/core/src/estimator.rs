//! Emulated measurement: sample photon counts from an outcome distribution
//! and turn frequencies into estimates of `G_l = P_l / f_l`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{analytic_distribution, OutcomeDistribution, Source};
use crate::error::{Error, Result};
use crate::functions::FamilyEvaluator;
use crate::output::{fmt17, Table};
use crate::params::ReducedScheme;
use crate::precision::{self, PrecisionPolicy, Real};

/// Shots per independently seeded partition.
pub const CHUNK_SHOTS: u64 = 1 << 16;
pub const GENERATOR_ID: &str = "chacha8 (rand_chacha 0.3), seed_from_u64(seed), stream = partition index, 65536 shots per partition";
/// Observed counts below this leave the normal approximation untrustworthy.
pub const MIN_RELIABLE_COUNT: u64 = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalCounts {
    pub k: u32,
    /// `counts[l]` for every outcome listed in the sampled distribution.
    pub counts: Vec<u64>,
    /// Draws that landed in the unlisted tail.
    pub overflow: u64,
    pub shots: u64,
    pub seed: u64,
    pub source: Source,
}

impl EmpiricalCounts {
    pub fn count(&self, l: u32) -> u64 {
        self.counts.get(l as usize).copied().unwrap_or(0)
    }
}

/// Inverse-CDF sampling. Shots are cut into fixed partitions, each with its
/// own generator stream, so the counts never depend on the thread count.
pub fn sample_outcomes(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<EmpiricalCounts> {
    if shots == 0 {
        return Err(Error::OutOfRange {
            what: "shots",
            value: 0.0,
            range: "shots >= 1",
        });
    }
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p.probability;
        cdf.push(acc);
    }
    let buckets = cdf.len() + 1;
    let chunks = shots.div_ceil(CHUNK_SHOTS);
    let totals = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_SHOTS.min(shots - c * CHUNK_SHOTS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut counts = vec![0u64; buckets];
            for _ in 0..n {
                let u: f64 = rng.gen();
                counts[cdf.partition_point(|&x| x <= u)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; buckets],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let overflow = totals[buckets - 1];
    Ok(EmpiricalCounts {
        k: dist.k,
        counts: totals[..buckets - 1].to_vec(),
        overflow,
        shots,
        seed,
        source: dist.source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionEstimate {
    pub k: u32,
    pub l: u32,
    pub target_name: String,
    pub estimate: f64,
    /// `ln estimate`, finite where `estimate` itself overflows.
    pub log_estimate: f64,
    pub std_error: f64,
    pub exact: Option<f64>,
    pub reliable: bool,
    pub count: Option<u64>,
}

pub fn target_name(k: u32, l: u32) -> String {
    if k == 0 {
        format!("Z^({l})")
    } else {
        format!("G_{l}^({k})")
    }
}

fn estimate_one(
    ev: &mut FamilyEvaluator,
    l: u32,
    frequency: Option<(u64, u64)>,
    with_exact: bool,
) -> Result<FunctionEstimate> {
    let k = ev.scheme().k();
    let f = ev.weight_f(l)?;
    let exact = if with_exact {
        Some(precision::to_f64(&ev.norm_g(l)?))
    } else {
        None
    };
    let policy = *ev.policy();
    let f_usable = !precision::is_zero(&f) && precision::to_f64(&f).is_normal();
    let (freq, count, shots) = match frequency {
        Some((count, shots)) => (policy.int(count) / policy.int(shots), Some(count), shots as f64),
        None => (ev.probability(l)?, None, f64::INFINITY),
    };
    let (estimate, std_error) = if precision::is_zero(&f) {
        (policy.zero(), f64::INFINITY)
    } else {
        let p = precision::to_f64(&freq);
        let se = (p * (1.0 - p) / shots).sqrt();
        let est: Real = freq / &f;
        let se = if se == 0.0 { 0.0 } else { se / precision::to_f64(&f) };
        (est, se)
    };
    let reliable = f_usable
        && match count {
            Some(c) => c >= MIN_RELIABLE_COUNT,
            None => true,
        };
    Ok(FunctionEstimate {
        k,
        l,
        target_name: target_name(k, l),
        estimate: precision::to_f64(&estimate),
        log_estimate: precision::ln_abs(&estimate),
        std_error,
        exact,
        reliable,
        count,
    })
}

/// One estimate per listed outcome: `(count/shots) / f_l`, with the binomial
/// standard error divided by the same weight.
pub fn estimate_functions(
    emp: &EmpiricalCounts,
    rs: &ReducedScheme,
    policy: &PrecisionPolicy,
    with_exact: bool,
) -> Result<Vec<FunctionEstimate>> {
    let ls: Vec<u32> = (0..emp.counts.len() as u32).collect();
    estimate_selected(emp, rs, &ls, policy, with_exact)
}

pub fn estimate_selected(
    emp: &EmpiricalCounts,
    rs: &ReducedScheme,
    ls: &[u32],
    policy: &PrecisionPolicy,
    with_exact: bool,
) -> Result<Vec<FunctionEstimate>> {
    let top = ls.iter().copied().max().unwrap_or(0);
    let mut ev = FamilyEvaluator::new(rs.with_k(emp.k), *policy, top)?;
    ls.iter()
        .map(|&l| estimate_one(&mut ev, l, Some((emp.count(l), emp.shots)), with_exact))
        .collect()
}

/// Infinite-shot limit: frequencies replaced by the exact probabilities.
pub fn estimate_exact(
    rs: &ReducedScheme,
    ls: &[u32],
    policy: &PrecisionPolicy,
) -> Result<Vec<FunctionEstimate>> {
    let top = ls.iter().copied().max().unwrap_or(0);
    let mut ev = FamilyEvaluator::new(*rs, *policy, top)?;
    ls.iter()
        .map(|&l| estimate_one(&mut ev, l, None, true))
        .collect()
}

pub fn estimates_table(estimates: &[FunctionEstimate], rs: &ReducedScheme, emp: Option<&EmpiricalCounts>) -> Table {
    let mut t = Table::new(vec![
        "k", "l", "target", "y1", "B", "estimate", "log_estimate", "std_error", "exact", "reliable", "count",
        "shots", "seed",
    ]);
    if let Some(e) = emp {
        t.metadata.push("source", e.source.as_str());
        t.metadata.push("overflow", e.overflow);
        t.metadata.push("generator", GENERATOR_ID);
    } else {
        t.metadata.push("mode", "exact");
    }
    for est in estimates {
        t.push(vec![
            est.k.into(),
            est.l.into(),
            est.target_name.as_str().into(),
            rs.y1().into(),
            rs.b().into(),
            est.estimate.into(),
            est.log_estimate.into(),
            est.std_error.into(),
            est.exact.into(),
            est.reliable.into(),
            est.count.map_or(crate::output::Cell::Null, Into::into),
            emp.map_or(crate::output::Cell::Null, |e| e.shots.into()),
            emp.map_or(crate::output::Cell::Null, |e| e.seed.into()),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub y1: f64,
    pub l: u32,
    pub value: f64,
    pub std_error: f64,
    pub log_value: f64,
    pub reliable: bool,
}

/// `start, start+step, …` up to `stop` inclusive (within a hundredth of a step).
pub fn make_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    for (what, v) in [("grid start", start), ("grid stop", stop), ("grid step", step)] {
        if !v.is_finite() {
            return Err(Error::NotFinite { what });
        }
    }
    if step <= 0.0 || stop < start {
        return Err(Error::OutOfRange {
            what: "grid step",
            value: step,
            range: "step > 0 and stop >= start",
        });
    }
    let n = ((stop - start) / step + 0.01).floor() as u64;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Target functions across a `y1` grid at fixed `B`.
///
/// Exact mode reports `G_l` itself, which stays defined where `f_l` vanishes
/// (for instance at `y1 = 0`).
pub fn sweep(
    k: u32,
    b: f64,
    y1_grid: &[f64],
    ls: &[u32],
    mode: SweepMode,
    policy: &PrecisionPolicy,
) -> Result<Vec<SweepRow>> {
    let points = y1_grid
        .iter()
        .map(|&y1| ReducedScheme::new(y1, b, k))
        .collect::<Result<Vec<_>>>()?;
    let top = ls.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::with_capacity(points.len() * ls.len());
    for rs in &points {
        match mode {
            SweepMode::Exact => {
                let mut ev = FamilyEvaluator::new(*rs, *policy, top)?;
                for &l in ls {
                    let g = ev.norm_g(l)?;
                    rows.push(SweepRow {
                        y1: rs.y1(),
                        l,
                        value: precision::to_f64(&g),
                        std_error: 0.0,
                        log_value: precision::ln_abs(&g),
                        reliable: true,
                    });
                }
            }
            SweepMode::Sampled { shots, seed } => {
                let mut dist = analytic_distribution(k, rs, policy, None)?;
                if top > dist.l_max() {
                    dist = analytic_distribution(k, rs, policy, Some(top))?;
                }
                let emp = sample_outcomes(&dist, shots, seed)?;
                for est in estimate_selected(&emp, rs, ls, policy, false)? {
                    rows.push(SweepRow {
                        y1: rs.y1(),
                        l: est.l,
                        value: est.estimate,
                        std_error: est.std_error,
                        log_value: est.log_estimate,
                        reliable: est.reliable,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow], k: u32, b: f64) -> Table {
    let mut t = Table::new(vec!["y1", "l", "value", "std_error", "log_value", "reliable"]);
    t.metadata.push("k", k);
    t.metadata.push("B", fmt17(b));
    for r in rows {
        t.push(vec![
            r.y1.into(),
            r.l.into(),
            r.value.into(),
            r.std_error.into(),
            r.log_value.into(),
            r.reliable.into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn anchor() -> ReducedScheme {
        ReducedScheme::new(0.2, 0.25, 0).unwrap()
    }

    #[test]
    fn certain_outcome() {
        let rs = ReducedScheme::new(0.3, 0.0, 0).unwrap();
        let d = analytic_distribution(0, &rs, &PrecisionPolicy::default(), Some(0)).unwrap();
        let e = sample_outcomes(&d, 1000, 7).unwrap();
        assert_eq!(e.counts, vec![1000]);
        assert_eq!(e.overflow, 0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = analytic_distribution(0, &anchor(), &PrecisionPolicy::default(), None).unwrap();
        let a = sample_outcomes(&d, 200_000, 42).unwrap();
        let b = sample_outcomes(&d, 200_000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_outcomes(&d, 200_000, 43).unwrap());
        assert_eq!(a.counts.iter().sum::<u64>() + a.overflow, 200_000);
    }

    #[test]
    fn frequency_near_anchor() {
        let d = analytic_distribution(0, &anchor(), &PrecisionPolicy::default(), None).unwrap();
        let e = sample_outcomes(&d, 1_000_000, 2024).unwrap();
        let p = 0.0449957705963366;
        let se = (p * (1.0 - p) / 1e6f64).sqrt();
        assert!((e.count(1) as f64 / 1e6 - p).abs() < 5.0 * se);
    }

    #[test]
    fn exact_inversion() {
        let est = estimate_exact(&anchor(), &[2], &PrecisionPolicy::default()).unwrap();
        assert_relative_eq!(est[0].estimate, 8.16462, max_relative = 1e-5);
        assert_relative_eq!(est[0].estimate, est[0].exact.unwrap(), max_relative = 1e-15);
        let vac = ReducedScheme::new(0.0, 3.0, 1).unwrap();
        let est = estimate_exact(&vac, &[0], &PrecisionPolicy::default()).unwrap();
        assert_relative_eq!(est[0].estimate, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn empty_bucket_is_unreliable() {
        let emp = EmpiricalCounts {
            k: 0,
            counts: vec![10, 0],
            overflow: 0,
            shots: 10,
            seed: 0,
            source: Source::Analytic,
        };
        let est = estimate_functions(&emp, &anchor(), &PrecisionPolicy::default(), false).unwrap();
        assert_eq!(est[1].estimate, 0.0);
        assert!(!est[1].reliable);
        assert!(!est[0].reliable, "10 counts is below the reliability floor");
    }

    #[test]
    fn grid_construction() {
        let g = make_grid(0.0, 0.2, 0.01).unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[20] - 0.2).abs() < 1e-15);
        assert!(make_grid(0.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn sweep_shapes() {
        let p = PrecisionPolicy::default();
        let grid = make_grid(0.0, 0.2, 0.01).unwrap();
        let rows = sweep(0, 0.25, &grid, &[94], SweepMode::Exact, &p).unwrap();
        assert_eq!(rows.len(), 21);
        assert!(rows.windows(2).all(|w| w[1].log_value > w[0].log_value));
        assert!(rows.iter().all(|r| r.log_value.is_finite()));
        let odd = sweep(0, 0.25, &[0.0], &[3], SweepMode::Exact, &p).unwrap();
        assert_eq!(odd[0].value, 0.0);
        assert!(matches!(
            sweep(0, 0.25, &[0.45], &[1], SweepMode::Exact, &p),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn single_point_sweep_matches_estimator() {
        let p = PrecisionPolicy::default();
        let mode = SweepMode::Sampled { shots: 100_000, seed: 9 };
        let rows = sweep(0, 0.25, &[0.2], &[1, 2], mode, &p).unwrap();
        let d = analytic_distribution(0, &anchor(), &p, None).unwrap();
        let emp = sample_outcomes(&d, 100_000, 9).unwrap();
        let est = estimate_selected(&emp, &anchor(), &[1, 2], &p, false).unwrap();
        for (r, e) in rows.iter().zip(&est) {
            assert_eq!(r.value, e.estimate);
            assert_eq!(r.std_error, e.std_error);
        }
    }
}
