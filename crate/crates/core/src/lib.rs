//! Relaxed energies of structured deformations on discrete SBV fields.
//!
//! * [`density`]: bulk and surface densities, hypothesis validation, the
//!   expression language.
//! * [`sbv`]: piecewise-affine fields with facet jumps on cube grids.
//! * [`cell`]: cell problems, Dirichlet functionals and blow-up ladders.
//! * [`approx`]: determining sequences and their convergence checks.
//! * [`multilevel`]: direct and iterated estimates of the three-level energy.
//! * [`cli`]: the batch driver behind the `sdrelax` binary.

pub mod approx;
pub mod cell;
pub mod cli;
pub mod density;
pub mod linalg;
pub mod multilevel;
pub mod sbv;

pub use density::{BulkDensity, DensityError, SurfaceDensity};
pub use linalg::Mat;
pub use sbv::{CubeGrid, DiscreteSBVField, SbvError};

