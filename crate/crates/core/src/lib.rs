//! Variance-reduced agent evaluation for extensive-form games.
//!
//! The crate covers the AIVAT family of estimators (raw Monte Carlo, control
//! variates, advantage sum / MIVAT and AIVAT with imaginary observations),
//! expressed through an affine decomposition `v̂(z) = b(z) + ⟨c(z), v'⟩` over
//! heuristic outputs. On top of that decomposition it provides
//!
//! * heuristic value functions ([`heuristics`]): tabular, linear with a
//!   closed-form variance-minimising fit, and a Bayesian linear model with
//!   predictive covariance;
//! * the gradient attacks on a fixed evaluation sample ([`pathology`]) that show
//!   why a heuristic must be committed before the data is seen;
//! * uncertainty propagation, inverse-variance weighting, weighted standard
//!   errors, IVW bias estimation and one-sided t-tests ([`stats`]).
//!
//! Kuhn and Leduc poker ship in [`game`] as exactly enumerable test beds.

pub mod error;
pub mod estimator;
pub mod game;
pub mod heuristics;
pub mod pathology;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{AffineEstimate, CorrectionGroup, EstimatorConfig, HistoryId};
pub use game::{Game, History, Node, Strategy, StrategyProfile};
