//! Dense linear algebra and combinatorial building blocks.

mod eigen;
mod hungarian;
mod kmeans;
mod linsolve;
mod matrix;
mod prox;

pub use eigen::{sym_eig, EigenPair};
pub use hungarian::{hungarian, Assignment};
pub use kmeans::{kmeans, kmeans_with, within_cluster_ss, KMeansFit, KMeansOptions};
pub use linsolve::{cholesky, solve_general, solve_spd};
pub use matrix::DenseMatrix;
pub(crate) use matrix::{dot, squared_distance};
pub use prox::{soft_threshold, soft_threshold_matrix};
