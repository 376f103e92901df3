pub mod besov;
pub mod field;
pub mod grid;
pub mod ops;

pub use besov::{besov_norm_2nd_diff, besov_parts, BesovParts};
pub use field::{Direction, Domain, Field};
pub use grid::Grid;
pub use ops::{
    convolve, convolve_compact, dealias, divergence, fractional_derivative, gradient, laplacian,
    linfty_embedding_check, sobolev_norm, Dealias,
};
