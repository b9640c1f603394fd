//! Small dense linear algebra, a reproducible random stream, and weight
//! initializers.

mod linalg;
mod rng;

pub use linalg::{lu_solve, lu_solve_transpose, skew_symmetrize, Matrix, Vector, PIVOT_RTOL};
pub use rng::{glorot_limit, glorot_uniform, Rng};

pub(crate) use linalg::{lu_solve_in_place, norm_inf};
