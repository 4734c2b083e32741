//! Metrization machinery for finite distance spaces.

pub mod audit;
pub mod chain;
pub mod cli;
pub mod discretize;
pub mod families;
pub mod fixed_point;
pub mod gallery;
pub mod io;
pub mod scalar;
pub mod space;
pub mod threshold;

pub use scalar::{Exponent, Mode, Scalar};
pub use space::{ClaimedClass, DistanceSpace, PointSet, SpaceOptions};
