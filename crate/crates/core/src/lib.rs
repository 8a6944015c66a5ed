//! Scaling-law laboratory for sequence models trained on Markov random walks.
//!
//! The crate covers the data side and the analysis side of scaling-law
//! experiments:
//!
//! * [`graph`]: Erdős–Rényi and Barabási–Albert ensembles, power-law edge
//!   weights, bigram graphs, and their row-stochastic transition models.
//! * [`walk`]: walk datasets sampled from a transition model, the exact
//!   ranked unigram/bigram distributions, and chain diagnostics.
//! * [`baseline`]: expected loss of the counting estimator (MSE and
//!   cross-entropy) with Monte-Carlo oracles.
//! * [`powerfit`]: robust `E + B x^-β` fits, exponential baselines, wild
//!   bootstrap BCa intervals.
//! * [`surface`]: loss tables and two-dimensional fits `L(N, D)`
//!   (parametric, kernel ridge, MLP) with cross-validated comparison.
//! * [`frontier`]: compute-optimal `L_opt(C)`, `N_opt(C)`, `D_opt(C)`.
//! * [`pipeline`]: configuration, ingestion, and report emission used by the
//!   `scalinglab` binary.
//!
//! All losses and entropies are in nats.

pub mod baseline;
pub mod error;
pub mod frontier;
pub mod graph;
pub mod optim;
pub mod pipeline;
pub mod powerfit;
pub mod rng;
pub mod stats;
pub mod surface;
pub mod walk;

pub use error::{Error, Result};
