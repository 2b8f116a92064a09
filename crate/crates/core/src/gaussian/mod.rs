//! Gaussian-space numerics: normalized Hermite polynomials and multi-indices,
//! Gauss-Hermite quadrature, subspace projection, principal angles, and
//! standard normal sampling.

mod hermite;
mod multi_index;
mod normal;
mod quadrature;
mod subspace;

pub use hermite::HermiteTable;
pub use multi_index::{binomial_checked, enumerate_multi_indices, MultiIndex};
pub use normal::{normal_cdf, normal_pdf, normal_quantile, sample_standard_normal};
pub use quadrature::QuadratureRule;
pub use subspace::{principal_angles, Subspace};
