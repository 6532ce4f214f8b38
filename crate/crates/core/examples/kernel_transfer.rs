//! Kernels that depend only on (xᵢ·xᵢ, xⱼ·xⱼ, xᵢ·xⱼ) keep every counting
//! partition of the Gram matrix. Sum-mode partitions are not so lucky.

use liftqp::kernels::{check_counting_transfer, gram_matrix, kernel_from_gram, KernelSpec};
use liftqp::refine::{is_equitable, refine_qp, RefineMode, COLOR_TOL};
use liftqp::{Partition, QpInstance, SparseMatrix};
use nalgebra::DMatrix;

fn main() -> liftqp::Result<()> {
    // the vertices of a regular hexagon, plus the origin
    let mut rows: Vec<[f64; 2]> = (0..6).map(|k| {
        let t = k as f64 * std::f64::consts::PI / 3.0;
        [t.cos(), t.sin()]
    }).collect();
    rows.push([0.0, 0.0]);
    let data = DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]);
    let n = data.nrows();

    let gram = gram_matrix(&data)?;
    let trivial = QpInstance::new(gram.clone(), vec![0.0; n], SparseMatrix::zeros(0, n), vec![])?;
    let p = refine_qp(&trivial, RefineMode::Counting, COLOR_TOL).var_partition;
    println!("counting partition of the Gram matrix: {:?}", p.classes());

    for spec in [KernelSpec::Poly { degree: 3 }, KernelSpec::Rbf { gamma: 0.7 }] {
        let r = check_counting_transfer(&data, &spec, &p, 1e-9)?;
        println!("{spec:?}: Gram counting={} kernel counting={} holds={}", r.q_counting, r.k_counting, r.holds());
    }

    // (1,0), (1,2), (1,-2): every row of Q sums to 3, but (Q+1)² has row sums 12, 44, 44
    let pts = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 2.0, 1.0, -2.0]);
    let q = gram_matrix(&pts)?;
    let sum_p = Partition::single(3);
    let k = kernel_from_gram(&q, |_, _, qij| (qij + 1.0).powi(2))?;
    println!("sum-equitable for Q: {}, for (Q+1)²: {}", is_equitable(&q, &sum_p, 1e-9)?, is_equitable(&k, &sum_p, 1e-9)?);
    Ok(())
}
