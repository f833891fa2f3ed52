//! Exact finite distributions, the closeness calculus, Laplace math and sampling.

mod closeness;
mod data;
mod laplace;
mod pmf;

pub use closeness::{
    are_close, chain_closeness, delta_at_eps, hoeffding_tail, intermediate_pmf, kl_divergence, ClosenessParams,
};
pub use data::{draw_sample, Example, Point, PopulationDistribution, RandomSeed, Sample};
pub use laplace::{laplace_cdf, laplace_sample, laplace_sf};
pub(crate) use laplace::{cdf_unchecked as laplace_cdf_unchecked, pdf_unchecked as laplace_pdf_unchecked};
pub(crate) use laplace::sample_unchecked as laplace_sample_unchecked;
pub use pmf::{product_many, product_pmf, pushforward, FinitePmf, Outcome, COMPARISON_TOL, NORMALIZATION_TOL};
