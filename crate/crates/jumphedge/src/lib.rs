#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Hedging-error analysis for exponential Lévy models: simulation of jump
//! skeletons, mean-variance hedging strategies, Riemann and jump-corrected
//! discretisations, and weighted BMO / SM norm estimators.

pub mod levy;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod nets;
pub mod norms;
pub mod path;
pub mod approx;
pub mod experiment;
pub mod hedging;
pub mod payoff;
pub mod semigroup;
