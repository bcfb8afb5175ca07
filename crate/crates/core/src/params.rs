//! Squeezing, beam-splitter and reduced-point parameterizations.
//!
//! The squeezed vacuum is described equivalently by its amplitude `s`, the
//! series parameter `y = tanh(s)/2`, the squeezing in decibels and the mean
//! photon number `sinh²(s)`. The splitter by its real amplitudes `t`, `r`,
//! the intensity transmittance `T = t²` or the ratio `B = r²/t²`. All closed
//! forms consume the reduced point `(y1, B)` with `y1 = T·y`.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NotFinite { what })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeKind {
    Amplitude,
    SeriesParameter,
    Decibels,
    MeanPhotons,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    s: f64,
    y: f64,
    s_db: f64,
    mean_n: f64,
}

impl SqueezeSpec {
    pub fn new(kind: SqueezeKind, value: f64) -> Result<Self> {
        match kind {
            SqueezeKind::Amplitude => Self::from_amplitude(value),
            SqueezeKind::SeriesParameter => Self::from_series_parameter(value),
            SqueezeKind::Decibels => Self::from_decibels(value),
            SqueezeKind::MeanPhotons => Self::from_mean_photons(value),
        }
    }

    pub fn from_amplitude(s: f64) -> Result<Self> {
        let s = finite("s", s)?;
        if s < 0.0 {
            return Err(Error::OutOfRange {
                what: "s",
                value: s,
                range: "s >= 0",
            });
        }
        let y = s.tanh() / 2.0;
        if y >= 0.5 {
            // tanh(s) rounds to 1 for s beyond ~19
            return Err(Error::OutOfRange {
                what: "s",
                value: s,
                range: "tanh(s)/2 < 0.5 at double precision",
            });
        }
        Ok(Self {
            s,
            y,
            s_db: 20.0 * s / LN_10,
            mean_n: s.sinh().powi(2),
        })
    }

    pub fn from_series_parameter(y: f64) -> Result<Self> {
        let y = finite("y", y)?;
        if !(0.0..0.5).contains(&y) {
            return Err(Error::OutOfRange {
                what: "y",
                value: y,
                range: "0 <= y < 0.5",
            });
        }
        let s = (2.0 * y).atanh();
        Ok(Self {
            s,
            y,
            s_db: 20.0 * s / LN_10,
            mean_n: s.sinh().powi(2),
        })
    }

    pub fn from_decibels(s_db: f64) -> Result<Self> {
        let s_db = finite("S_dB", s_db)?;
        if s_db < 0.0 {
            return Err(Error::OutOfRange {
                what: "S_dB",
                value: s_db,
                range: "S_dB >= 0",
            });
        }
        let mut spec = Self::from_amplitude(s_db * LN_10 / 20.0)?;
        spec.s_db = s_db;
        Ok(spec)
    }

    pub fn from_mean_photons(mean_n: f64) -> Result<Self> {
        let mean_n = finite("mean_n", mean_n)?;
        if mean_n < 0.0 {
            return Err(Error::OutOfRange {
                what: "mean_n",
                value: mean_n,
                range: "mean_n >= 0",
            });
        }
        let mut spec = Self::from_amplitude(mean_n.sqrt().asinh())?;
        spec.mean_n = mean_n;
        Ok(spec)
    }

    pub fn amplitude(&self) -> f64 {
        self.s
    }

    pub fn series_parameter(&self) -> f64 {
        self.y
    }

    pub fn decibels(&self) -> f64 {
        self.s_db
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_n
    }

    /// `cosh(s) = 1/√(1−4y²)`.
    pub fn cosh_s(&self) -> f64 {
        1.0 / (1.0 - 4.0 * self.y * self.y).sqrt()
    }

    pub fn get(&self, kind: SqueezeKind) -> f64 {
        match kind {
            SqueezeKind::Amplitude => self.s,
            SqueezeKind::SeriesParameter => self.y,
            SqueezeKind::Decibels => self.s_db,
            SqueezeKind::MeanPhotons => self.mean_n,
        }
    }
}

pub fn make_squeeze(kind: SqueezeKind, value: f64) -> Result<SqueezeSpec> {
    SqueezeSpec::new(kind, value)
}

/// Lossless splitter with real, non-negative amplitudes `t` and `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    t: f64,
    r: f64,
    transmittance: f64,
    b: f64,
}

impl SplitterSpec {
    pub fn from_transmittance(transmittance: f64) -> Result<Self> {
        let transmittance = finite("T", transmittance)?;
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::OutOfRange {
                what: "T",
                value: transmittance,
                range: "0 < T <= 1",
            });
        }
        Ok(Self {
            t: transmittance.sqrt(),
            r: (1.0 - transmittance).sqrt(),
            transmittance,
            b: (1.0 - transmittance) / transmittance,
        })
    }

    /// Amplitude transmittance; negative values would carry a phase and are rejected.
    pub fn from_amplitude(t: f64) -> Result<Self> {
        let t = finite("t", t)?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                range: "0 < t <= 1",
            });
        }
        let mut spec = Self::from_transmittance(t * t)?;
        spec.t = t;
        Ok(spec)
    }

    pub fn from_b(b: f64) -> Result<Self> {
        let b = finite("B", b)?;
        if b < 0.0 {
            return Err(Error::OutOfRange {
                what: "B",
                value: b,
                range: "B >= 0",
            });
        }
        let mut spec = Self::from_transmittance(1.0 / (1.0 + b))?;
        spec.b = b;
        Ok(spec)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn reflectance(&self) -> f64 {
        1.0 - self.transmittance
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// The point `(y1, B)` at which every closed form is evaluated, together with
/// the photon number `k` injected into the second splitter port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedScheme {
    y1: f64,
    b: f64,
    k: u32,
}

impl ReducedScheme {
    pub fn new(y1: f64, b: f64, k: u32) -> Result<Self> {
        let y1 = finite("y1", y1)?;
        let b = finite("B", b)?;
        if b < 0.0 {
            return Err(Error::OutOfRange {
                what: "B",
                value: b,
                range: "B >= 0",
            });
        }
        if y1 < 0.0 || y1 * (1.0 + b) >= 0.5 {
            return Err(Error::OutOfRange {
                what: "y1",
                value: y1,
                range: "0 <= y1 < 0.5/(1+B)",
            });
        }
        Ok(Self { y1, b, k })
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn with_k(&self, k: u32) -> Self {
        Self { k, ..*self }
    }

    /// Squeezing series parameter of the source, `(1+B)·y1`.
    pub fn y(&self) -> f64 {
        (1.0 + self.b) * self.y1
    }
}

pub fn reduce_scheme(sq: &SqueezeSpec, bs: &SplitterSpec, k: u32) -> Result<ReducedScheme> {
    ReducedScheme::new(bs.transmittance() * sq.series_parameter(), bs.b(), k)
}

pub fn invert_scheme(rs: &ReducedScheme) -> Result<(SqueezeSpec, SplitterSpec)> {
    let y = rs.y();
    if y >= 0.5 {
        return Err(Error::OutOfRange {
            what: "(1+B)*y1",
            value: y,
            range: "< 0.5",
        });
    }
    Ok((
        SqueezeSpec::from_series_parameter(y)?,
        SplitterSpec::from_b(rs.b())?,
    ))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn vacuum_limit() {
        let sq = make_squeeze(SqueezeKind::Amplitude, 0.0).unwrap();
        assert_eq!(
            (sq.amplitude(), sq.series_parameter(), sq.decibels(), sq.mean_photons()),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn fifteen_decibels() {
        let sq = make_squeeze(SqueezeKind::Decibels, 15.0).unwrap();
        assert_relative_eq!(sq.amplitude(), 1.726938, max_relative = 1e-6);
        assert_relative_eq!(sq.series_parameter(), 0.469346569968284, max_relative = 1e-12);
        assert_relative_eq!(sq.mean_photons(), 7.4136, max_relative = 1e-4);
    }

    #[test]
    fn quarter_series_parameter() {
        let sq = make_squeeze(SqueezeKind::SeriesParameter, 0.25).unwrap();
        assert_relative_eq!(sq.amplitude(), 0.5_f64.atanh(), max_relative = 1e-15);
        assert_relative_eq!(sq.amplitude(), 0.549306, max_relative = 1e-6);
        assert_relative_eq!(sq.cosh_s(), 1.154701, max_relative = 1e-6);
        assert_relative_eq!(sq.amplitude().cosh(), sq.cosh_s(), max_relative = 1e-14);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(
            make_squeeze(SqueezeKind::SeriesParameter, 0.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            make_squeeze(SqueezeKind::Amplitude, -0.1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            make_squeeze(SqueezeKind::Decibels, f64::NAN),
            Err(Error::NotFinite { .. })
        ));
        assert!(SplitterSpec::from_amplitude(-0.5).is_err());
        assert!(SplitterSpec::from_transmittance(0.0).is_err());
        assert!(SplitterSpec::from_b(-1.0).is_err());
    }

    #[test]
    fn reduce_examples() {
        let sq = make_squeeze(SqueezeKind::SeriesParameter, 0.25).unwrap();
        let rs = reduce_scheme(&sq, &SplitterSpec::from_amplitude(1.0).unwrap(), 0).unwrap();
        assert_eq!((rs.y1(), rs.b(), rs.k()), (0.25, 0.0, 0));

        let rs = reduce_scheme(&sq, &SplitterSpec::from_transmittance(0.8).unwrap(), 0).unwrap();
        assert_relative_eq!(rs.y1(), 0.2, max_relative = 1e-15);
        assert_relative_eq!(rs.b(), 0.25, max_relative = 1e-15);

        let sq = make_squeeze(SqueezeKind::SeriesParameter, 0.4).unwrap();
        let rs = reduce_scheme(&sq, &SplitterSpec::from_transmittance(0.5).unwrap(), 2).unwrap();
        assert_eq!((rs.y1(), rs.b(), rs.k()), (0.2, 1.0, 2));
    }

    #[test]
    fn invert_examples() {
        let (sq, bs) = invert_scheme(&ReducedScheme::new(0.2, 0.25, 0).unwrap()).unwrap();
        assert_relative_eq!(sq.series_parameter(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(bs.transmittance(), 0.8, max_relative = 1e-15);

        let (sq, bs) = invert_scheme(&ReducedScheme::new(0.2, 0.0, 0).unwrap()).unwrap();
        assert_eq!(sq.series_parameter(), 0.2);
        assert_eq!(bs.t(), 1.0);

        // (1+B)·y1 = 0.6 cannot even be constructed
        assert!(matches!(
            ReducedScheme::new(0.4, 0.5, 0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn splitter_invariants() {
        for t2 in [1.0, 0.8, 0.5, 0.01] {
            let bs = SplitterSpec::from_transmittance(t2).unwrap();
            assert_relative_eq!(bs.t().powi(2) + bs.r().powi(2), 1.0, max_relative = 1e-15);
            assert_relative_eq!(bs.b(), bs.r().powi(2) / bs.t().powi(2), max_relative = 1e-12);
        }
        assert_eq!(SplitterSpec::from_transmittance(1.0).unwrap().b(), 0.0);
    }

    proptest! {
        #[test]
        fn reduce_invert_round_trip(y in 0.0..0.499f64, t2 in 0.01..=1.0f64, k in 0u32..3) {
            let sq = make_squeeze(SqueezeKind::SeriesParameter, y).unwrap();
            let bs = SplitterSpec::from_transmittance(t2).unwrap();
            if let Ok(rs) = reduce_scheme(&sq, &bs, k) {
                let (sq2, bs2) = invert_scheme(&rs).unwrap();
                prop_assert!((sq2.series_parameter() - y).abs() <= 1e-12 * y.max(f64::MIN_POSITIVE));
                prop_assert!((bs2.transmittance() - t2).abs() <= 1e-12 * t2);
            }
        }

        #[test]
        fn kind_consistency(s in 0.0..5.0f64) {
            let base = make_squeeze(SqueezeKind::Amplitude, s).unwrap();
            for kind in [SqueezeKind::SeriesParameter, SqueezeKind::Decibels, SqueezeKind::MeanPhotons] {
                let rebuilt = make_squeeze(kind, base.get(kind)).unwrap();
                for read in [SqueezeKind::Amplitude, SqueezeKind::SeriesParameter, SqueezeKind::Decibels, SqueezeKind::MeanPhotons] {
                    let (a, b) = (base.get(read), rebuilt.get(read));
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{:?}->{:?}: {} vs {}", kind, read, a, b);
                }
            }
        }

        #[test]
        fn monotone_in_amplitude(s in 0.0..5.0f64, ds in 1e-6..1.0f64) {
            let a = make_squeeze(SqueezeKind::Amplitude, s).unwrap();
            let b = make_squeeze(SqueezeKind::Amplitude, s + ds).unwrap();
            prop_assert!(b.series_parameter() > a.series_parameter());
            prop_assert!(b.mean_photons() > a.mean_photons());
        }
    }
}
