//! Certification of differential privacy (DP), perfect generalization (PG) and
//! robust generalization (RG).
//!
//! DP and PG are certified exactly by enumerating every sample of a small
//! discrete domain. RG quantifies over adversaries, so it is tested by Monte
//! Carlo against concrete ones and reported with a Wilson interval.

mod dp;
mod pg;
mod reductions;
mod rg;
mod space;

pub use dp::{verify_dp_exact, DpVerdict};
pub use pg::{
    min_eps_pg, min_eps_profile, pg_beta_hat, twin_check, verify_pg_exact, verify_pg_profile, FailingSample, PgVerdict,
    TwinCheck, MAX_EPS,
};
pub use reductions::{
    dp_to_pg_bound, dp_to_pg_simulator, group_privacy_pg, log_likelihood_simulator, pg_to_rg_alpha, PgTriple,
};
pub use rg::{rg_gaps, verify_rg_mc, wilson_interval, Adversary, RgVerdict};
pub use space::{EnumOptions, ProfileGroup, SampleProfile, DEFAULT_CAP};
