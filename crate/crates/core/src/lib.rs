//! Exact and Monte Carlo verification of three generalization guarantees:
//! robust generalization, differential privacy and perfect generalization.
//!
//! Everything is built on [`FinitePmf`], an exact distribution over a finite
//! outcome set, and on mechanisms that can report their exact output law for
//! each input sample.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

pub mod composition;
pub mod compression;
mod enumerate;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod mechanisms;
pub mod prob;
pub mod verification;

pub use composition::{advanced_bound, compose_basic, ComposedMechanism, ComposedPgParams, ProductSimulator};
pub use compression::{CompressionScheme, Selection};
pub use error::{Error, Result};
pub use harness::ExperimentReport;
pub use hypothesis::{empirical_error, empirical_value, true_error, true_value, Hypothesis, HypothesisClass};
pub use mechanisms::{Mechanism, MechanismRef, OutputRange, Query, Simulator, SimulatorRef, StatKey};
pub use prob::{
    delta_at_eps, draw_sample, ClosenessParams, Example, FinitePmf, Outcome, PopulationDistribution, RandomSeed,
    Sample,
};
pub use verification::{
    verify_dp_exact, verify_pg_exact, verify_rg_mc, DpVerdict, EnumOptions, PgVerdict, RgVerdict,
};
