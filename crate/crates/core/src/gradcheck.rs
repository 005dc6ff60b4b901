//! Finite-difference verification of the analytic loss gradients.
//!
//! Only the loss *values* are differentiated numerically, so the check stays
//! independent of the gradient code it verifies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::BBox;
use crate::losses::{self, BoxLossResult, GflSample, LossError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Diou,
    Giou,
    L1,
    Gfl,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Diou => "diou",
            LossKind::Giou => "giou",
            LossKind::L1 => "l1",
            LossKind::Gfl => "gfl",
        }
    }

    /// Tolerance on the relative error used when none is given.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            LossKind::Gfl => 1e-6,
            _ => 1e-4,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "diou" => Ok(LossKind::Diou),
            "giou" => Ok(LossKind::Giou),
            "l1" => Ok(LossKind::L1),
            "gfl" => Ok(LossKind::Gfl),
            other => Err(format!("unknown loss '{other}' (expected diou, giou, l1 or gfl)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckConfig {
    /// Number of accepted (non-kink) samples to check.
    pub trials: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Samples closer than this to a branch switch are skipped.
    pub kink_margin: f64,
    /// β values cycled through for GFL samples.
    pub betas: Vec<f64>,
    /// Added to every analytic gradient component; a non-zero value makes the
    /// check fail on purpose.
    pub gradient_offset: f64,
}

impl GradCheckConfig {
    pub fn for_loss(kind: LossKind) -> Self {
        GradCheckConfig {
            trials: 1000,
            seed: 0,
            step: 1e-5,
            tolerance: kind.default_tolerance(),
            kink_margin: 1e-3,
            betas: vec![0.5, 1.0, 2.0],
            gradient_offset: 0.0,
        }
    }
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig::for_loss(LossKind::Diou)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub loss: LossKind,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Denominator floor for [`relative_error`]. Gradient components below this
/// magnitude are compared in absolute terms, where central-difference roundoff
/// (about `1e-11` for unit-scale losses) would otherwise dominate.
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, REL_ERR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Central difference of `f` along coordinate `i`.
pub fn central_difference<const N: usize>(f: impl Fn(&[f64; N]) -> f64, x: &[f64; N], i: usize, h: f64) -> f64 {
    let mut plus = *x;
    let mut minus = *x;
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// True when the pair is within `margin` of a min/max switch in the
/// intersection, enclosing box or L1 sign.
pub fn near_box_kink(p: &BBox, g: &BBox, margin: f64) -> bool {
    let near = |a: f64, b: f64| (a - b).abs() < margin;
    near(p.x1, g.x1)
        || near(p.y1, g.y1)
        || near(p.x2, g.x2)
        || near(p.y2, g.y2)
        // intersection width/height crossing zero
        || near(p.x2.min(g.x2), p.x1.max(g.x1))
        || near(p.y2.min(g.y2), p.y1.max(g.y1))
}

pub fn random_box_pair(rng: &mut impl Rng) -> (BBox, BBox) {
    let mut draw = || {
        let x = rng.gen_range(0.0..48.0);
        let y = rng.gen_range(0.0..48.0);
        let w = rng.gen_range(1.0..32.0);
        let h = rng.gen_range(1.0..32.0);
        BBox::from_array([x, y, x + w, y + h])
    };
    (draw(), draw())
}

pub fn random_gfl_sample(rng: &mut impl Rng, beta: f64) -> GflSample {
    let y_l = rng.gen_range(0.0..0.9);
    let y_r = y_l + rng.gen_range(0.05..1.0);
    let y = rng.gen_range(y_l..=y_r);
    let logits = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
    GflSample::new(y, y_l, y_r, logits).with_beta(beta)
}

fn box_loss_fn(kind: LossKind) -> fn(&BBox, &BBox) -> Result<BoxLossResult, LossError> {
    match kind {
        LossKind::Diou => losses::diou_loss,
        LossKind::Giou => losses::giou_loss,
        LossKind::L1 => losses::l1_box_loss,
        LossKind::Gfl => unreachable!("gfl is not a box loss"),
    }
}

/// Runs the seeded finite-difference comparison for one loss.
pub fn run(kind: LossKind, cfg: &GradCheckConfig) -> Result<GradCheckReport, LossError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_err: f64 = 0.0;
    let max_attempts = cfg.trials.saturating_mul(100).max(100);

    while checked < cfg.trials && checked + skipped < max_attempts {
        let errs: Option<Vec<(f64, f64)>> = match kind {
            LossKind::Gfl => {
                let beta = cfg.betas[checked % cfg.betas.len().max(1)];
                let s = random_gfl_sample(&mut rng, beta);
                if (s.prediction() - s.y).abs() < cfg.kink_margin {
                    None
                } else {
                    let an = losses::gfl_loss(&s)?.grad_logits;
                    let value =
                        |z: &[f64; 2]| losses::gfl_loss(&GflSample { logits: *z, ..s }).map_or(f64::NAN, |r| r.value);
                    Some(
                        (0..2)
                            .map(|i| (an[i], central_difference(value, &s.logits, i, cfg.step)))
                            .collect(),
                    )
                }
            }
            _ => {
                let (p, g) = random_box_pair(&mut rng);
                if near_box_kink(&p, &g, cfg.kink_margin) {
                    None
                } else {
                    let f = box_loss_fn(kind);
                    let an = f(&p, &g)?.grad_pred;
                    let value = |x: &[f64; 4]| f(&BBox::from_array(*x), &g).map_or(f64::NAN, |r| r.value);
                    let x = p.to_array();
                    Some(
                        (0..4)
                            .map(|i| (an[i], central_difference(value, &x, i, cfg.step)))
                            .collect(),
                    )
                }
            }
        };
        match errs {
            None => skipped += 1,
            Some(pairs) => {
                checked += 1;
                for (a, n) in pairs {
                    let e = relative_error(a + cfg.gradient_offset, n);
                    // NaN must fail the check, so fold it in explicitly
                    max_err = if e.is_nan() { f64::INFINITY } else { max_err.max(e) };
                }
            }
        }
    }

    Ok(GradCheckReport {
        loss: kind,
        checked,
        skipped,
        max_rel_err: max_err,
        tolerance: cfg.tolerance,
        passed: checked == cfg.trials && max_err <= cfg.tolerance,
    })
}
