//! Geometric RSK: row insertion, array insertion and time evolution, the
//! non-intersecting path and minor-determinant constructions, ratio
//! variables and the (max,+) image.
//!
//! Every insertion routine is written once over a [`Semifield`] and then
//! instantiated for ordinary positive reals, log-domain reals, exact
//! rationals and the (max,+) semifield. Insertion only ever adds,
//! multiplies and divides, so the same code serves all four.

mod array;
mod matrix;
mod minors;
mod paths;
mod ratio;
mod semiring;
mod tropical;
mod word;

pub use array::{
    evolve_from_empty, evolve_from_empty_log, insert_pattern, Pattern, TriangularArray,
};
pub use matrix::WeightMatrix;
pub use minors::{h_matrix_product, minor_log_det, p_tableau, q_tableau, tau_by_minors};
pub use paths::{for_each_tuple, tau_by_paths, tau_in, PATH_GUARD};
pub use ratio::{ratio_insert, RatioArray};
pub use semiring::{log_add_exp, LogWeight, MaxPlus, Semifield};
pub use tropical::{soft_max, tropical_brute_force, tropical_evolve, TropicalArray};
pub use word::{insert_word, prefix_products, row_insert, row_insert_empty, Word};
