//! Multivariate gamma distributions `Γₙ(α, R)` and numerical checks of the
//! Gaussian correlation inequality extended to them.
//!
//! - [`matrix`]: correlation matrices, eigen splits, canonical correlations
//! - [`special`]: central and non-central gamma functions
//! - [`wishart`]: Wishart and pseudo-Wishart sampling
//! - [`dist`]: Laplace transform and Monte Carlo cdf/pdf/mixed partials
//! - [`oracle`]: independent estimates from sums of squared Gaussians
//! - [`gci`]: the interpolation path, subset coefficients and the gap
//! - [`cli`]: the `mvgamma` command line

pub mod cli;
pub mod dist;
pub mod error;
pub mod gci;
pub mod matrix;
pub mod mc;
pub mod oracle;
pub mod rng;
pub mod special;
pub mod wishart;

pub use dist::{
    cdf_mc, laplace_transform, mixed_partial_cdf_mc, pdf_mc, validate_admissibility, MvGammaParams,
};
pub use error::{Error, Result};
pub use gci::{gci_gap, BlockPartition, GciReport};
pub use matrix::{CorrelationMatrix, SpectralSplit, SubsetSplit};
pub use mc::McEstimate;
pub use rng::RngStream;
pub use special::{SeriesControl, ShapeParameter};
