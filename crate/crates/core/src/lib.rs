//! Dyadic multi-parameter harmonic analysis on finite grids.
//!
//! The crate models functions on products of dyadic grids, their Haar
//! expansions, product and little BMO norms, Muckenhoupt weights, dyadic
//! model operators (shifts and paraproducts) and iterated commutators, plus
//! the experiment harness that measures weighted norm ratios over random
//! ensembles.

pub mod bmo;
pub mod commutator;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod haar;
pub mod io;
pub(crate) mod kernels;
pub mod ops;
pub mod rng;
pub mod weights;

pub use bmo::{Partition, TestFamily};
pub use commutator::CommutatorSpec;
pub use error::{Error, Result};
pub use grid::{DyadicInterval, DyadicRectangle, GridFunction, MultiGrid};
pub use haar::{HaarCoeffs, ParamSubset};
pub use ops::{OperatorFile, OperatorSpec};
pub use weights::Weight;
