//! Generalized focal loss on a soft quality target: the loss and its logit
//! gradient as the predicted distribution moves toward the target.
//!
//! `cargo run --example quality_focal`

use detkit::losses::{gfl_loss, GflSample, DEFAULT_GFL_BETA};

pub fn run() -> String {
    // target quality 0.6 bracketed by bins at 0.5 and 1.0
    let (y, y_l, y_r) = (0.6, 0.5, 1.0);
    let mut out = format!("target y={y} in [{y_l}, {y_r}], beta={DEFAULT_GFL_BETA}\n");
    for zr in [-3.0, -2.0, -1.0, -0.5, 0.0, 1.0] {
        let s = GflSample::new(y, y_l, y_r, [0.0, zr]);
        let r = gfl_loss(&s).unwrap();
        out.push_str(&format!(
            "logits=[0, {zr:+.1}] y_hat={:.4} loss={:.6} d/dz_r={:+.6}\n",
            s.prediction(),
            r.value,
            r.grad_logits[1]
        ));
    }
    let exact = GflSample::new(y, y_l, y_r, GflSample::logits_for_target(y, y_l, y_r));
    let r = gfl_loss(&exact).unwrap();
    out.push_str(&format!(
        "at the target: y_hat={:.4} loss={:.6} (focal weight vanishes)\n",
        exact.prediction(),
        r.value
    ));
    out
}

fn main() {
    print!("{}", run());
}
