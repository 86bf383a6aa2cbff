//! Aggregation-of-leaders regression.
//!
//! The estimator splits a sample of size `3n` into consecutive blocks
//! `S, S', S''`, builds a proper epsilon-net of the class under the empirical
//! metric of `S`, fits a least-squares leader inside every Voronoi cell on
//! `S'`, and combines the leaders with a sharp model-selection aggregate on
//! `S''`. Baselines (global ERM, skeleton aggregation, sparse convex
//! aggregation), hard data-generating distributions with exact risk oracles,
//! closed-form rate bounds and a replicated experiment harness live alongside.
//!
//! ```
//! use aol::domain::{FiniteList, FunctionSpec};
//! use aol::estimators::{aol_fit, AolConfig, EpsilonRegime};
//! use aol::worlds::{sample_world, World};
//! use rand::SeedableRng;
//!
//! let spec = FunctionSpec::FiniteList(FiniteList {
//!     members: vec![vec![0.2, 0.4], vec![0.5, 0.5], vec![0.9, 0.1]],
//! });
//! // the regression function is a member, so no aggregate can beat the class
//! let world = World::new(vec![0.5, 0.5], vec![0.5, 0.5], spec.clone()).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let data = sample_world(&world, 300, &mut rng).unwrap();
//! let cfg = AolConfig::new(EpsilonRegime::Explicit { value: 0.05 });
//! let fit = aol_fit(&spec, &data, &cfg).unwrap();
//! assert!(world.excess_risk(&fit.predictor).unwrap() >= -1e-12);
//! ```

pub mod aggregate;
pub mod bounds;
pub mod domain;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod netpart;
pub mod solvers;
pub mod worlds;

pub use error::{Error, Result};
