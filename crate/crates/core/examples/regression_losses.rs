//! DIoU, GIoU and L1 losses with their analytic gradients, then a few steps of
//! gradient descent on the predicted box to show DIoU pulling a distant
//! box onto its target.
//!
//! `cargo run --example regression_losses`

use detkit::geometry::{self, BBox};
use detkit::losses::{diou_loss, giou_loss, l1_box_loss};

pub fn run() -> String {
    let gt = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let pred = BBox::new(12.0, 3.0, 20.0, 11.0).unwrap();
    let mut out = String::new();
    for (name, r) in [
        ("diou", diou_loss(&pred, &gt).unwrap()),
        ("giou", giou_loss(&pred, &gt).unwrap()),
        ("l1", l1_box_loss(&pred, &gt).unwrap()),
    ] {
        let g = r.grad_pred;
        out.push_str(&format!(
            "{name:<5} loss={:.6} grad=[{:+.4}, {:+.4}, {:+.4}, {:+.4}]\n",
            r.value, g[0], g[1], g[2], g[3]
        ));
    }

    // gradient descent with step halving whenever a step would increase the loss
    let mut b = pred;
    let mut lr = 20.0;
    let mut r = diou_loss(&b, &gt).unwrap();
    for step in 0..=40 {
        if step % 10 == 0 {
            out.push_str(&format!(
                "step {step:>3}: diou={:.5} iou={:.4}\n",
                r.value,
                geometry::iou(&b, &gt)
            ));
        }
        loop {
            let c = b.to_array();
            let g = r.grad_pred;
            let next = BBox::from_corners(c[0] - lr * g[0], c[1] - lr * g[1], c[2] - lr * g[2], c[3] - lr * g[3]);
            let rn = diou_loss(&next, &gt).unwrap();
            if rn.value <= r.value || lr < 1e-6 {
                b = next;
                r = rn;
                break;
            }
            lr *= 0.5;
        }
    }
    out
}

fn main() {
    print!("{}", run());
}
