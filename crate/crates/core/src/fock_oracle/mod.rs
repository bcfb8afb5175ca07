//! Brute-force reference: the squeezed vacuum times `|k⟩` in a truncated
//! two-mode Fock basis, pushed through the splitter amplitude by amplitude.
//!
//! The splitter maps creation operators as `a1† → t a1† − r a2†` and
//! `a2† → r a1† + t a2†`, so it acts within each total-photon sector and the
//! state is stored sector by sector.

pub mod exact;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{entry, OutcomeDistribution, Source};
use crate::error::{Error, Result};
use crate::functions::FamilyEvaluator;
use crate::output::{fmt17, Table};
use crate::params::{reduce_scheme, ReducedScheme, SplitterSpec, SqueezeSpec};
use crate::precision::{self, binomial, factorial, PrecisionPolicy, Real};

/// Input norm that may be discarded by truncation before construction fails.
pub const DROPPED_MASS_LIMIT: f64 = 1e-10;
pub const DEFAULT_N_MAX: u32 = 60;

#[derive(Debug, Clone)]
pub struct TwoModeState {
    n_max: u32,
    /// `sectors[N][n2]` is the amplitude of `|N − n2, n2⟩`.
    sectors: Vec<Vec<Real>>,
    dropped_mass: Real,
    policy: PrecisionPolicy,
    k: u32,
    squeeze: Option<SqueezeSpec>,
    splitter: Option<SplitterSpec>,
}

impl TwoModeState {
    fn empty(n_max: u32, policy: PrecisionPolicy) -> Self {
        let sectors = (0..=n_max)
            .map(|n| vec![policy.zero(); n as usize + 1])
            .collect();
        Self {
            n_max,
            sectors,
            dropped_mass: policy.zero(),
            policy,
            k: 0,
            squeeze: None,
            splitter: None,
        }
    }

    /// Arbitrary state from `(n1, n2, amplitude)` triples; not normalized.
    pub fn from_amplitudes(n_max: u32, entries: &[(u32, u32, f64)], policy: PrecisionPolicy) -> Result<Self> {
        policy.validate()?;
        let mut st = Self::empty(n_max, policy);
        for &(n1, n2, a) in entries {
            if n1 + n2 > n_max {
                return Err(Error::OutOfRange {
                    what: "n1 + n2",
                    value: f64::from(n1 + n2),
                    range: "n1 + n2 <= n_max",
                });
            }
            st.sectors[(n1 + n2) as usize][n2 as usize] = policy.real(a);
        }
        Ok(st)
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.policy
    }

    pub fn amplitude(&self, n1: u32, n2: u32) -> Option<&Real> {
        self.sectors
            .get((n1 + n2) as usize)
            .map(|s| &s[n2 as usize])
    }

    pub fn amplitude_f64(&self, n1: u32, n2: u32) -> f64 {
        self.amplitude(n1, n2).map_or(0.0, precision::to_f64)
    }

    pub fn dropped_mass(&self) -> f64 {
        precision::to_f64(&self.dropped_mass)
    }

    pub fn norm_squared(&self) -> Real {
        let mut acc = self.policy.zero();
        for sector in &self.sectors {
            for a in sector {
                acc += a * a;
            }
        }
        acc
    }

    /// Reduced scheme, once both squeezing and splitter are known.
    pub fn scheme(&self) -> Option<ReducedScheme> {
        match (&self.squeeze, &self.splitter) {
            (Some(sq), Some(bs)) => reduce_scheme(sq, bs, self.k).ok(),
            _ => None,
        }
    }

    /// Nonzero amplitudes as `(n1, n2, amplitude)` rows.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec!["n1", "n2", "amplitude"]);
        t.metadata.push("n_max", self.n_max);
        t.metadata.push("dropped_mass", fmt17(self.dropped_mass()));
        for (n, sector) in self.sectors.iter().enumerate() {
            for (n2, a) in sector.iter().enumerate() {
                if !precision::is_zero(a) {
                    let n1 = (n - n2) as u32;
                    t.push(vec![n1.into(), (n2 as u32).into(), precision::to_f64(a).into()]);
                }
            }
        }
        t
    }
}

/// `|SMSV⟩ ⊗ |k⟩` truncated to total photon number `n_max`.
pub fn build_two_mode_input(
    sq: &SqueezeSpec,
    k: u32,
    n_max: u32,
    policy: &PrecisionPolicy,
) -> Result<TwoModeState> {
    policy.validate()?;
    if k > n_max {
        return Err(Error::OutOfRange {
            what: "k",
            value: f64::from(k),
            range: "k <= n_max",
        });
    }
    let mut st = TwoModeState::empty(n_max, *policy);
    st.k = k;
    st.squeeze = Some(*sq);
    let y = policy.real(sq.series_parameter());
    let w = precision::sqrt(&(policy.one() - &y * &y * 4u8));
    let mut kept = policy.zero();
    let mut y_pow = policy.one();
    for n in 0..=u64::from((n_max - k) / 2) {
        // |a_n|² = w · C(2n, n) · y^{2n}
        let p = &w * policy.ubig(binomial(2 * n, n)) * &y_pow * &y_pow;
        kept += &p;
        st.sectors[(2 * n + u64::from(k)) as usize][k as usize] = precision::sqrt(&p);
        y_pow = y_pow * &y;
    }
    st.dropped_mass = policy.one() - kept;
    let dropped = st.dropped_mass();
    if dropped > DROPPED_MASS_LIMIT {
        return Err(Error::TruncationTooSmall {
            n_max,
            dropped_mass: dropped,
            limit: DROPPED_MASS_LIMIT,
        });
    }
    Ok(st)
}

/// Smallest `n_max` whose dropped squeezed-vacuum mass is below `epsilon`.
///
/// Terms `w·C(2n,n)·y^{2n}` shrink by less than `4y²` per step, so the tail
/// from `n0` on is at most `term(n0)/(1 − 4y²)`.
pub fn adaptive_n_max(y: f64, k: u32, epsilon: f64) -> u32 {
    if y == 0.0 {
        return k;
    }
    let ln_w = 0.5 * (1.0 - 4.0 * y * y).ln();
    let ln_den = (1.0 - 4.0 * y * y).ln();
    let mut ln_term = ln_w; // n = 0
    let mut n0: u64 = 0;
    while ln_term - ln_den > epsilon.ln() {
        ln_term += (2.0 * (2.0 * n0 as f64 + 1.0) / (n0 as f64 + 1.0)).ln() + 2.0 * y.ln();
        n0 += 1;
    }
    // keep n = 0..n0-1, i.e. 2(n0-1) + k photons
    (2 * n0.saturating_sub(1)) as u32 + k
}

struct SplitterTables {
    sqrt_fact: Vec<Real>,
    t_pow: Vec<Real>,
    r_pow: Vec<Real>,
    binom: Vec<Vec<Real>>,
}

impl SplitterTables {
    fn new(n_max: u32, bs: &SplitterSpec, policy: &PrecisionPolicy) -> Self {
        let t2 = policy.real(bs.transmittance());
        let t = precision::sqrt(&t2);
        let r = precision::sqrt(&(policy.one() - &t2));
        let n = n_max as usize;
        let powers = |x: &Real| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(policy.one());
            for i in 0..n {
                v.push(&v[i] * x);
            }
            v
        };
        Self {
            sqrt_fact: (0..=n_max as u64)
                .map(|i| precision::sqrt(&policy.ubig(factorial(i))))
                .collect(),
            t_pow: powers(&t),
            r_pow: powers(&r),
            binom: (0..=n_max as u64)
                .map(|a| (0..=a).map(|b| policy.ubig(binomial(a, b))).collect())
                .collect(),
        }
    }

    fn transform_sector(&self, total: usize, input: &[Real], zero: &Real) -> Vec<Real> {
        let mut out = vec![zero.clone(); total + 1];
        for (n2, amp) in input.iter().enumerate() {
            if precision::is_zero(amp) {
                continue;
            }
            let n1 = total - n2;
            let scale = amp / (&self.sqrt_fact[n1] * &self.sqrt_fact[n2]);
            for i in 0..=n1 {
                let first = &self.binom[n1][i] * &self.t_pow[n1 - i] * &self.r_pow[i];
                let first = if i % 2 == 1 { -first } else { first };
                let first = &scale * first;
                for j in 0..=n2 {
                    let q = i + j;
                    let p = total - q;
                    let term = &first
                        * &self.binom[n2][j]
                        * &self.r_pow[n2 - j]
                        * &self.t_pow[j]
                        * &self.sqrt_fact[p]
                        * &self.sqrt_fact[q];
                    out[q] += term;
                }
            }
        }
        out
    }
}

/// Exact splitter action, sector by sector (sectors run in parallel and are
/// merged in sector order).
pub fn apply_beam_splitter(st: &TwoModeState, bs: &SplitterSpec) -> TwoModeState {
    let tables = SplitterTables::new(st.n_max, bs, &st.policy);
    let zero = st.policy.zero();
    let sectors = st
        .sectors
        .par_iter()
        .enumerate()
        .map(|(total, input)| tables.transform_sector(total, input, &zero))
        .collect();
    TwoModeState {
        sectors,
        splitter: Some(*bs),
        ..st.clone()
    }
}

/// Photon-count distribution in mode 2.
pub fn mode2_marginal(st: &TwoModeState) -> OutcomeDistribution {
    let policy = st.policy;
    let mut probs = Vec::with_capacity(st.n_max as usize + 1);
    let mut listed = policy.zero();
    for l in 0..=st.n_max as usize {
        let mut p = policy.zero();
        for sector in &st.sectors[l..] {
            p += &sector[l] * &sector[l];
        }
        listed += &p;
        probs.push(entry(l as u32, &p));
    }
    let residue = precision::to_f64(&(policy.one() - &st.dropped_mass - listed)).max(0.0);
    OutcomeDistribution {
        k: st.k,
        rs: st.scheme(),
        probs,
        tail_mass: st.dropped_mass() + residue,
        policy,
        source: Source::Oracle,
    }
}

/// The squeezed-vacuum input split at the reduced point `rs`, through the splitter.
pub fn oracle_output(rs: &ReducedScheme, n_max: u32, policy: &PrecisionPolicy) -> Result<TwoModeState> {
    let (sq, bs) = crate::params::invert_scheme(rs)?;
    let input = build_two_mode_input(&sq, rs.k(), n_max, policy)?;
    Ok(apply_beam_splitter(&input, &bs))
}

/// Relative tolerance per outcome when comparing against the oracle.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;
/// Below this probability the comparison switches to an absolute tolerance.
pub const SMALL_PROBABILITY: f64 = 1e-15;
pub const ABSOLUTE_TOLERANCE: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mismatch {
    pub l: u32,
    pub analytic: f64,
    pub oracle: f64,
}

/// Outcomes listed in `analytic` whose oracle probability is out of tolerance.
pub fn compare_marginals(analytic: &OutcomeDistribution, oracle: &OutcomeDistribution) -> Vec<Mismatch> {
    analytic
        .probs
        .iter()
        .filter_map(|p| {
            let (a, o) = (p.probability, oracle.probability(p.l));
            let ok = if a >= SMALL_PROBABILITY {
                (a - o).abs() <= RELATIVE_TOLERANCE * a
            } else {
                (a - o).abs() <= ABSOLUTE_TOLERANCE
            };
            (!ok).then_some(Mismatch { l: p.l, analytic: a, oracle: o })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        }
    }

    fn of_support(amps: &[Real]) -> Self {
        let has = |r: usize| amps.iter().skip(r).step_by(2).any(|a| !precision::is_zero(a));
        match (has(0), has(1)) {
            (true, false) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::Mixed,
        }
    }
}

/// Mode-1 state conditioned on `l` photons in mode 2; `amps[n1]` for
/// `n1 ≤ n_max − l`.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    pub l: u32,
    pub amps: Vec<Real>,
    pub parity: Parity,
    pub source: Source,
}

impl HeraldedState {
    fn new(l: u32, mut amps: Vec<Real>, source: Source) -> Self {
        fix_phase(&mut amps);
        Self {
            l,
            parity: Parity::of_support(&amps),
            amps,
            source,
        }
    }

    pub fn norm_squared(&self) -> Real {
        let mut acc = self.amps.first().map(|a| a * 0u8).unwrap_or_else(|| Real::ZERO);
        for a in &self.amps {
            acc += a * a;
        }
        acc
    }

    pub fn amplitudes_f64(&self) -> Vec<f64> {
        self.amps.iter().map(precision::to_f64).collect()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec!["n1", "amplitude"]);
        t.metadata.push("l", self.l);
        t.metadata.push("parity", self.parity.as_str());
        t.metadata.push("source", self.source.as_str());
        for (n1, a) in self.amps.iter().enumerate() {
            if !precision::is_zero(a) {
                t.push(vec![(n1 as u32).into(), precision::to_f64(a).into()]);
            }
        }
        t
    }
}

/// Makes the lowest significant amplitude positive.
fn fix_phase(amps: &mut [Real]) {
    let largest = amps
        .iter()
        .map(|a| precision::ln_abs(a))
        .fold(f64::NEG_INFINITY, f64::max);
    let lead = amps
        .iter()
        .find(|a| precision::ln_abs(a) > largest - 69.0)
        .map(precision::is_negative);
    if lead == Some(true) {
        for a in amps.iter_mut() {
            *a = -a.clone();
        }
    }
}

pub fn heralded_state(st: &TwoModeState, l: u32) -> Result<HeraldedState> {
    if l > st.n_max {
        return Err(Error::ZeroProbabilityOutcome(l));
    }
    let raw: Vec<Real> = (l..=st.n_max)
        .map(|total| st.sectors[total as usize][l as usize].clone())
        .collect();
    let mut norm = st.policy.zero();
    for a in &raw {
        norm += a * a;
    }
    if precision::is_zero(&norm) {
        return Err(Error::ZeroProbabilityOutcome(l));
    }
    let scale = precision::sqrt(&norm);
    Ok(HeraldedState::new(
        l,
        raw.into_iter().map(|a| a / &scale).collect(),
        Source::Oracle,
    ))
}

/// Closed-form heralded state, truncated to `n1 ≤ n_max − l` and normalized
/// with the corresponding `G`.
pub fn analytic_heralded_state(
    k: u32,
    l: u32,
    rs: &ReducedScheme,
    n_max: u32,
    policy: &PrecisionPolicy,
) -> Result<HeraldedState> {
    if k > 2 {
        return Err(Error::UnsupportedK(k));
    }
    if l > n_max {
        return Err(Error::ZeroProbabilityOutcome(l));
    }
    let rs = rs.with_k(k);
    let y = policy.real(rs.y1());
    let b = policy.real(rs.b());
    let size = (n_max - l) as usize + 1;
    let mut amps = vec![policy.zero(); size];
    let odd_fock = (k + l) % 2 == 1;
    let m = u64::from(l / 2);
    let mut y_pow = policy.one();
    for n in 0u64.. {
        let fock = (2 * n + u64::from(odd_fock)) as usize;
        if fock >= size {
            break;
        }
        let sqrt_fact = precision::sqrt(&policy.ubig(factorial(fock as u64)));
        // (2a)!/a! as an exact integer
        let central = |a: u64| policy.ubig(factorial(2 * a) / factorial(a));
        let nn = policy.int(n);
        let one = policy.one();
        let shape = match (k, l) {
            (0, _) => central(n + m + u64::from(l % 2)),
            (1, 0) => policy.ubig(factorial(2 * n + 1) / factorial(n)),
            (1, _) if l % 2 == 0 => central(n + m) * (&one - &b * (2 * n + 1) / (2 * m)),
            (1, _) => central(n + m) * (&one - &b * (2 * n) / (2 * m + 1)),
            (2, 0) => central(n) * &nn,
            (2, 1) => central(n) * (2 * n + 1) * (&one - &b * &nn),
            (2, _) if l % 2 == 0 => {
                central(n + m - 1)
                    * (&one - &b * (4 * n) / (2 * m - 1)
                        + &b * &b * (n * (2 * n).saturating_sub(1)) / (m * (2 * m - 1)))
            }
            _ => {
                central(n + m)
                    * (&one - &b * (2 * (2 * n + 1)) / (2 * m)
                        + &b * &b * (n * (2 * n + 1)) / (m * (2 * m + 1)))
            }
        };
        amps[fock] = &y_pow * shape / sqrt_fact;
        if rs.y1() == 0.0 && !precision::is_zero(&amps[fock]) {
            // vanishing squeezing: the limit state is the lowest surviving term
            break;
        }
        if rs.y1() > 0.0 {
            y_pow = y_pow * &y;
        }
    }
    // squared norm of the untruncated series, in units of G
    let mut ev = FamilyEvaluator::new(rs, *policy, l)?;
    let g = ev.norm_g(l)?;
    let norm = match (k, l) {
        _ if rs.y1() == 0.0 => None,
        (2, 0) => Some(g / 4u8),
        (1, 0) => Some(g),
        _ if odd_fock => Some(g / &y),
        _ => Some(g),
    };
    let norm = match norm {
        Some(n) => n,
        // y1 = 0: a single Fock term, normalized directly
        None => {
            let mut acc = policy.zero();
            for a in &amps {
                acc += a * a;
            }
            acc
        }
    };
    if precision::is_zero(&norm) {
        return Err(Error::ZeroProbabilityOutcome(l));
    }
    let scale = precision::sqrt(&norm);
    Ok(HeraldedState::new(
        l,
        amps.into_iter().map(|a| a / &scale).collect(),
        Source::Analytic,
    ))
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &HeraldedState, b: &HeraldedState) -> Result<f64> {
    if a.amps.len() != b.amps.len() {
        return Err(Error::IncompatibleTruncation(
            a.amps.len() as u32 - 1 + a.l,
            b.amps.len() as u32 - 1 + b.l,
        ));
    }
    let (na, nb) = (a.norm_squared(), b.norm_squared());
    if precision::is_zero(&na) || precision::is_zero(&nb) {
        return Ok(0.0);
    }
    let mut overlap = na.clone() * 0u8;
    for (x, y) in a.amps.iter().zip(&b.amps) {
        overlap += x * y;
    }
    Ok(precision::to_f64(&(&overlap * &overlap / (na * nb))).clamp(0.0, 1.0))
}
