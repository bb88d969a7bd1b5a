//! Simulation and explicit approximation bounds for the infinite-alleles
//! Wright-Fisher model, the Ewens sampling formula and the Poisson-Dirichlet /
//! Dirichlet-process limit.

pub mod config;
pub mod error;
pub mod esf;
pub mod experiments;
pub mod fv_dual;
pub mod genealogy;
pub mod measures;
pub mod numeric;
pub mod rng;
pub mod stein_bounds;
pub mod wright_fisher;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use esf::EwensParams;
pub use experiments::{ExperimentManifest, TVEstimate};
pub use fv_dual::{DeathProcessPath, TransitionSample};
pub use genealogy::{AncestralTrace, IntervalStats};
pub use measures::{
    AtomicMeasure, BlockProfile, MassVector, PartitionDistribution, SetPartition, TypeLabel,
};
pub use stein_bounds::{BoundReport, TestFunctionClass, WFBoundInputs};
pub use wright_fisher::{MutationModel, WFPopulation};
