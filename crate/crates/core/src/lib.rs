//! Photon-number statistics of a squeezed vacuum mixed with a 0, 1 or 2
//! photon Fock state on a beam splitter, the analytic functions those
//! statistics encode, and a brute-force Fock-space reference to check them.

pub mod distribution;
pub mod error;
pub mod estimator;
pub mod fock_oracle;
pub mod functions;
pub mod output;
pub mod params;
pub mod precision;
pub mod series;

pub use distribution::{
    analytic_distribution, outcome_probability, OutcomeDistribution, OutcomeProbability, Source,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_exact, estimate_functions, sample_outcomes, sweep, EmpiricalCounts, FunctionEstimate,
    SweepMode, SweepRow,
};
pub use fock_oracle::{
    analytic_heralded_state, apply_beam_splitter, build_two_mode_input, fidelity, heralded_state,
    mode2_marginal, HeraldedState, Parity, TwoModeState,
};
pub use functions::{amplitude_c, norm_g, weight_f, FamilyEvaluator, FamilyKind, FamilyPoint, FamilyValue};
pub use output::{Metadata, Table};
pub use params::{
    invert_scheme, make_squeeze, reduce_scheme, ReducedScheme, SplitterSpec, SqueezeKind, SqueezeSpec,
};
pub use precision::{PrecisionPolicy, Real};
pub use series::{euler_apply, z_derivative, z_derivative_series, z_value, SeriesValue};
