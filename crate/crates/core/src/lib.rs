//! Mean-field magnetization dynamics and their scaling limits.
//!
//! The engine has three legs:
//!
//! * exact finite-`n` objects: the lumped stationary law of the
//!   magnetization of `n` mean-field spins, Metropolis-Hastings ("MH")
//!   transition probabilities on the magnetization lattice, and the lifted
//!   non-reversible variant ("LMH") that carries a direction replica;
//! * the limiting one-dimensional zig-zag process, simulated exactly by
//!   event-time inversion (closed forms for linear and cubic switching
//!   rates, thinning against a declared dominating bound otherwise);
//! * quantitative bridges between the two: window suprema for the
//!   drift/variance/switching-rate limit statistics, autocorrelation
//!   scaling studies, and Kolmogorov-Smirnov / Wasserstein comparisons of
//!   exact lattice laws against their Gaussian and quartic limits.
//!
//! Everything downstream of a seed is deterministic: random streams are
//! derived per (master seed, replica, purpose) and parallel reductions
//! merge in replica order, so results are independent of thread count.

// Frozen reference constants keep every digit of the independent
// high-precision computations that produced them.
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod chains;
pub mod math;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod zigzag;

pub use analysis::{
    integrated_autocorrelation, ks_distance, limit_check, scaling_study, AnalysisError,
    AutocorrEstimate, EmpiricalSummary, LimitRow, ScalingReport, ScalingRow, StudyConfig,
    WindowRule,
};
pub use chains::{
    lemma_supremum, lmh_probs, lmh_step, mh_probs, mh_step, run_trajectory, rw_proposal,
    standard_lemma_suite, taylor_probs, taylor_supremum, ChainError, ChainKind, InitState,
    LatticeState, LemmaStatistic, LemmaTable, LiftedProbs, LiftedState, Trajectory,
    TrajectoryOptions, TransitionProbs,
};
pub use model::{
    solve_m0, DerivedConstants, LimitingLaw, MagnetizationLaw, ModelError, ModelParams, Regime,
};
pub use oracle::{
    build_lmh_matrix, build_mh_matrix, lifted_index, nonreversibility_witness,
    row_sum_identity_residual, skew_balance_residual, spin_enumeration_law, DenseChain,
    OracleError,
};
pub use rng::derive_stream;
pub use zigzag::{
    ergodicity_decay, first_event_time, lyapunov_drift_check, stationary_profile, DecayReport,
    DecayStart, GeneralRate, LyapunovReport, OccupationCdf, PotentialProfile, RateSpec,
    ZigZagError, ZigZagEventLog, ZigZagSpec,
};
