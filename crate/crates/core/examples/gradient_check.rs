//! Finite-difference verification of every loss gradient, plus the harness
//! self-test: a deliberately wrong gradient must be caught.
//!
//! `cargo run --release --example gradient_check`

use detkit::gradcheck::{self, GradCheckConfig, LossKind};

pub fn run() -> String {
    let mut out = String::new();
    for kind in [LossKind::Diou, LossKind::Giou, LossKind::L1, LossKind::Gfl] {
        let cfg = GradCheckConfig::for_loss(kind);
        let r = gradcheck::run(kind, &cfg).unwrap();
        out.push_str(&format!(
            "{:<5} trials={} skipped={} max_rel_err={:.2e} tol={:.0e} {}\n",
            kind.name(),
            r.checked,
            r.skipped,
            r.max_rel_err,
            r.tolerance,
            if r.passed { "ok" } else { "FAILED" }
        ));
    }
    let broken = GradCheckConfig {
        trials: 50,
        gradient_offset: 1e-3,
        ..GradCheckConfig::for_loss(LossKind::Diou)
    };
    let r = gradcheck::run(LossKind::Diou, &broken).unwrap();
    out.push_str(&format!("perturbed diou caught: {}\n", !r.passed));
    out
}

fn main() {
    print!("{}", run());
}
