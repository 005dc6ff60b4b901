//! Linear-warmup + cosine-decay learning rate with linear batch-size scaling.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid schedule config: {0}")]
    InvalidConfig(String),
    #[error("iteration {iter} outside [0, {total}]")]
    OutOfRange { iter: u64, total: u64 },
    #[error("stride must be >= 1")]
    ZeroStride,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub warmup_iters: u64,
    pub total_iters: u64,
    pub min_lr: f64,
    /// Batch size `base_lr` was tuned for.
    pub base_batch: u32,
    pub actual_batch: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            base_lr: 0.001,
            warmup_iters: 3000,
            total_iters: 36000,
            min_lr: 0.0,
            base_batch: 16,
            actual_batch: 16,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let err = |m: String| Err(ScheduleError::InvalidConfig(m));
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return err(format!("base_lr must be positive, got {}", self.base_lr));
        }
        if !(self.min_lr >= 0.0 && self.min_lr < self.base_lr) {
            return err(format!(
                "min_lr must satisfy 0 <= min_lr < base_lr, got {}",
                self.min_lr
            ));
        }
        if self.warmup_iters >= self.total_iters {
            return err(format!(
                "warmup_iters ({}) must be below total_iters ({})",
                self.warmup_iters, self.total_iters
            ));
        }
        if self.base_batch == 0 || self.actual_batch == 0 {
            return err("batch sizes must be positive".into());
        }
        Ok(())
    }

    /// `base_lr · actual_batch / base_batch`.
    pub fn scaled_base_lr(&self) -> f64 {
        self.base_lr * self.actual_batch as f64 / self.base_batch as f64
    }
}

/// Learning rate at `iter`: linear ramp from 0 over the warmup, then cosine
/// decay from the scaled base down to `min_lr` at `total_iters`.
pub fn lr_at(cfg: &ScheduleConfig, iter: u64) -> Result<f64, ScheduleError> {
    cfg.validate()?;
    if iter > cfg.total_iters {
        return Err(ScheduleError::OutOfRange {
            iter,
            total: cfg.total_iters,
        });
    }
    let base = cfg.scaled_base_lr();
    if iter < cfg.warmup_iters {
        return Ok(base * iter as f64 / cfg.warmup_iters as f64);
    }
    let progress = (iter - cfg.warmup_iters) as f64 / (cfg.total_iters - cfg.warmup_iters) as f64;
    Ok(cfg.min_lr + (base - cfg.min_lr) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
}

/// `(iter, lr)` rows at `0, stride, 2·stride, …`, always ending at `total_iters`.
pub fn schedule_dump(cfg: &ScheduleConfig, stride: u64) -> Result<Vec<(u64, f64)>, ScheduleError> {
    if stride == 0 {
        return Err(ScheduleError::ZeroStride);
    }
    cfg.validate()?;
    let mut iters: Vec<u64> = (0..=cfg.total_iters).step_by(stride as usize).collect();
    if iters.last() != Some(&cfg.total_iters) {
        iters.push(cfg.total_iters);
    }
    iters.into_iter().map(|i| Ok((i, lr_at(cfg, i)?))).collect()
}

/// Formats like C's `%.{digits}g`: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let precision = digits.max(1) - 1;
    let sci = format!("{value:.precision$e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (precision as i32 - exp).max(0) as usize;
        trim(&format!("{value:.decimals$}"))
    }
}

/// CSV with header `iter,lr` and learning rates at 9 significant digits.
pub fn to_csv(rows: &[(u64, f64)]) -> String {
    let mut out = String::from("iter,lr\n");
    for (i, lr) in rows {
        let _ = writeln!(out, "{i},{}", format_sig(*lr, 9));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ScheduleConfig {
        ScheduleConfig {
            base_lr: 0.001,
            warmup_iters: 3000,
            total_iters: 30000,
            ..Default::default()
        }
    }

    #[test]
    fn lr_examples() {
        let c = cfg();
        assert_eq!(lr_at(&c, 0).unwrap(), 0.0);
        assert_eq!(lr_at(&c, 3000).unwrap(), 0.001);
        let mid = 3000 + (30000 - 3000) / 2;
        assert!((lr_at(&c, mid).unwrap() - 0.0005).abs() < 1e-18);
        assert!((lr_at(&c, 30000).unwrap() - c.min_lr).abs() < 1e-18);
        assert!(matches!(lr_at(&c, 30001), Err(ScheduleError::OutOfRange { .. })));
    }

    #[test]
    fn continuity_at_warmup_boundary() {
        let c = cfg();
        let base = c.scaled_base_lr();
        // left branch evaluated at the boundary, right branch is lr_at(warmup)
        let left = base * c.warmup_iters as f64 / c.warmup_iters as f64;
        let right = lr_at(&c, c.warmup_iters).unwrap();
        assert!((left - base).abs() <= 1e-12 && (right - base).abs() <= 1e-12);
        assert!((lr_at(&c, 2999).unwrap() - base).abs() < base / 2000.0);
    }

    #[test]
    fn dump_rows_and_scaling() {
        let c = cfg();
        let rows = schedule_dump(&c, c.total_iters).unwrap();
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 30000]);
        let rows = schedule_dump(&c, 7000).unwrap();
        assert_eq!(rows.last().unwrap().0, 30000);
        let doubled = ScheduleConfig {
            actual_batch: 32,
            ..c.clone()
        };
        for ((_, a), (_, b)) in rows.iter().zip(schedule_dump(&doubled, 7000).unwrap()) {
            assert_eq!(2.0 * a, b);
        }
        assert_eq!(schedule_dump(&c, 0), Err(ScheduleError::ZeroStride));
    }

    #[test]
    fn config_validation() {
        assert!(ScheduleConfig {
            warmup_iters: 10,
            total_iters: 10,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(ScheduleConfig { min_lr: 0.001, ..cfg() }.validate().is_err());
        assert!(ScheduleConfig { base_batch: 0, ..cfg() }.validate().is_err());
        assert!(ScheduleConfig { base_lr: -1.0, ..cfg() }.validate().is_err());
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(0.001, 9), "0.001");
        assert_eq!(format_sig(0.0005, 9), "0.0005");
        assert_eq!(format_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_sig(2.0 / 3.0 * 1e-5, 9), "6.66666667e-06");
        assert_eq!(format_sig(123456789012.0, 9), "1.23456789e+11");
        assert_eq!(format_sig(1234.5, 9), "1234.5");
        let csv = to_csv(&[(0, 0.0), (3000, 0.001)]);
        assert_eq!(csv, "iter,lr\n0,0\n3000,0.001\n");
    }

    proptest! {
        #[test]
        fn piecewise_monotone(warm in 1u64..500, extra in 1u64..5000, min_frac in 0.0..0.9f64, stride in 1u64..300) {
            let c = ScheduleConfig { base_lr: 0.01, warmup_iters: warm, total_iters: warm + extra, min_lr: 0.01 * min_frac, ..Default::default() };
            let rows = schedule_dump(&c, stride).unwrap();
            for w in rows.windows(2) {
                if w[1].0 <= warm {
                    prop_assert!(w[1].1 >= w[0].1);
                } else if w[0].0 >= warm {
                    prop_assert!(w[1].1 <= w[0].1);
                }
            }
            prop_assert!((lr_at(&c, c.total_iters).unwrap() - c.min_lr).abs() < 1e-15);
        }

        #[test]
        fn batch_scaling_homogeneous(k in 1u32..8, iter_frac in 0.0..=1.0f64) {
            let c = cfg();
            let scaled = ScheduleConfig { actual_batch: c.base_batch * k, ..c.clone() };
            let it = (iter_frac * c.total_iters as f64) as u64;
            let a = lr_at(&c, it).unwrap();
            let b = lr_at(&scaled, it).unwrap();
            prop_assert!((b - k as f64 * a).abs() <= 1e-14 * b.abs());
            if k.is_power_of_two() {
                prop_assert_eq!(b, k as f64 * a);
            }
        }
    }
}
