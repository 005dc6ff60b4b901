//! Warmup + cosine learning-rate curve, and the same curve for a batch four
//! times larger.
//!
//! `cargo run --example lr_schedule`

use detkit::schedule::{format_sig, lr_at, schedule_dump, ScheduleConfig};

pub fn run() -> String {
    let cfg = ScheduleConfig::default();
    let big = ScheduleConfig {
        actual_batch: cfg.base_batch * 4,
        ..cfg.clone()
    };
    let mut out = format!("{:>6} {:>12} {:>12}\n", "iter", "lr", "lr (4x batch)");
    for (iter, lr) in schedule_dump(&cfg, 4000).unwrap() {
        let scaled = lr_at(&big, iter).unwrap();
        out.push_str(&format!(
            "{iter:>6} {:>12} {:>12}\n",
            format_sig(lr, 4),
            format_sig(scaled, 4)
        ));
    }
    out
}

fn main() {
    print!("{}", run());
}
