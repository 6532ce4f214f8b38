use liftqp::approxep::{approx_orbits, exact_orbits, make_blobs, whiten, AnchorStrategy, ApproxConfig, DIST_TOL};
use nalgebra::DMatrix;

fn main() -> liftqp::Result<()> {
    // a stretched square: two orbits until whitening makes it round
    let square = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 3.0, 0.0, -3.0]);
    println!("raw orbits:      {:?}", exact_orbits(&square, DIST_TOL)?.classes());
    println!("whitened orbits: {:?}", exact_orbits(&whiten(&square).points, 1e-8)?.classes());

    let (blobs, truth) = make_blobs(60, 20.0, 11);
    let cfg = ApproxConfig { n_anchors: 8, anchors: AnchorStrategy::Spread, seed: 11, ..Default::default() };
    let found = approx_orbits(&blobs, &cfg)?;
    let agree = (0..truth.len())
        .filter(|&i| (found.partition.class_of(i) == found.partition.class_of(0)) == (truth[i] == truth[0]))
        .count();
    println!(
        "blobs: {} clusters from {} anchors after {} iterations, {agree}/{} points agree with the generator",
        found.partition.num_classes(),
        found.anchors.len(),
        found.iterations,
        truth.len()
    );
    Ok(())
}
