//! Core data types: sparse matrices, partitions, QP instances and the
//! partition-matrix algebra used by every other module.

pub mod io;
pub mod ops;
mod partition;
mod qp;
mod sparse;

pub use ops::{
    average_over_partition, check_psd, left_multiply_partition_matrix, right_multiply_partition_matrix,
    PartitionMatrixView, PSD_CHECK_LIMIT, PSD_TOL,
};
pub use partition::Partition;
pub use qp::QpInstance;
pub(crate) use qp::dot;
pub use sparse::SparseMatrix;

/// Gram rows of the four-variable running example: `b1, b2, −b1, −b2`.
pub const RUNNING_EXAMPLE_FACTOR: [[f64; 2]; 4] = [[1.0, 0.0], [1.0, 2.0], [-1.0, 0.0], [-1.0, -2.0]];

/// Four-variable example: `min xᵀQx  s.t.  x ≥ 1` with `Q = BBᵀ` for the rows
/// in [`RUNNING_EXAMPLE_FACTOR`].
///
/// `Q` has zero row sums, so the one-class partition is equitable, while the
/// orbit partition is `{x0, x2}, {x1, x3}` (`Q_00 ≠ Q_11` rules out any
/// automorphism exchanging `x0` and `x1`). Constraints are `−x_i ≤ −1`.
pub fn running_example() -> QpInstance {
    let b = RUNNING_EXAMPLE_FACTOR;
    let q: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| b[i][0] * b[j][0] + b[i][1] * b[j][1]).collect())
        .collect();
    QpInstance::new(
        SparseMatrix::from_rows(&q).expect("finite"),
        vec![0.0; 4],
        SparseMatrix::identity(4).scale(-1.0),
        vec![-1.0; 4],
    )
    .expect("running example is well-formed")
    .with_names(
        Some((1..=4).map(|i| format!("x{i}")).collect()),
        Some((1..=4).map(|i| format!("y{i}")).collect()),
    )
    .expect("names match dimensions")
}
