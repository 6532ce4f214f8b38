use liftqp::geometry::{compute_r, gram_factor, verify_bchar};
use liftqp::qpcore::running_example;
use liftqp::Partition;

fn main() -> liftqp::Result<()> {
    let qp = running_example();
    let b = gram_factor(qp.q(), None)?;
    println!("rank {} factor, reconstruction error {:.1e}", b.rank(), b.reconstruction_error);
    println!("B =\n{}", b.b);

    let good = Partition::single(4);
    let bad = Partition::from_labels(&[0, 0, 1, 1]);
    for (name, p) in [("one class", &good), ("{x1,x2},{x3,x4}", &bad)] {
        let report = verify_bchar(qp.q(), &b, p, 1e-7)?;
        println!(
            "{name}: commutes={} R symmetric={} XB=BR={} (consistent: {})",
            report.commutes,
            report.r_symmetric,
            report.xb_equals_br,
            report.consistent()
        );
    }
    let r = compute_r(&b, &good)?;
    println!("largest entry of R for the single class: {:.1e}", r.amax());
    Ok(())
}
