//! Box regression losses (DIoU, GIoU, L1) and the two-node Generalized Focal
//! Loss, each returning its value together with the exact analytic gradient.
//!
//! Gradients of the box losses are taken with respect to the predicted box
//! corners `(x1, y1, x2, y2)`. The IoU-family losses are piecewise smooth: the
//! active branch of every `min`/`max` in the intersection and enclosing box is
//! selected explicitly. On a tie the predicted coordinate is treated as the
//! active one, which yields a one-sided derivative. When `pred == gt` the loss
//! sits at its global minimum and the zero subgradient is returned.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, BBox};

/// β used by [`GflSample::new`].
pub const DEFAULT_GFL_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("degenerate enclosing box: {0} of the enclosure is zero")]
    DegenerateEnclosure(&'static str),
    #[error("invalid box {0:?}")]
    InvalidBox(BBox),
    #[error("invalid GFL bracket: need y_l < y_r and y_l <= y <= y_r, got y={y}, y_l={y_l}, y_r={y_r}")]
    InvalidBracket { y: f64, y_l: f64, y_r: f64 },
    #[error("invalid GFL beta {0}: must be finite and >= 0")]
    InvalidBeta(f64),
    #[error("non-finite GFL logits {0:?}")]
    NonFiniteLogits([f64; 2]),
}

/// Loss value and gradient with respect to the predicted box corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxLossResult {
    pub value: f64,
    pub grad_pred: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

/// Reduces per-pair results; gradients stay per pair but are scaled the same
/// way the value is. Returns `None` for an empty batch.
pub fn reduce(results: &[BoxLossResult], reduction: Reduction) -> Option<(f64, Vec<[f64; 4]>)> {
    if results.is_empty() {
        return None;
    }
    let scale = match reduction {
        Reduction::Mean => 1.0 / results.len() as f64,
        Reduction::Sum => 1.0,
    };
    let total: f64 = results.iter().map(|r| r.value).sum();
    let grads = results.iter().map(|r| r.grad_pred.map(|g| g * scale)).collect();
    Some((total * scale, grads))
}

fn check_box(b: &BBox) -> Result<(), LossError> {
    if b.is_valid() {
        Ok(())
    } else {
        Err(LossError::InvalidBox(*b))
    }
}

/// Intersection-over-union of `pred` against `gt` with its gradient.
struct IouTerms {
    inter: f64,
    union: f64,
    iou: f64,
    grad_iou: [f64; 4],
    grad_union: [f64; 4],
}

fn iou_terms(p: &BBox, g: &BBox) -> IouTerms {
    let pw = p.width();
    let ph = p.height();
    let grad_area_p = [-ph, -pw, ph, pw];

    let iw = p.x2.min(g.x2) - p.x1.max(g.x1);
    let ih = p.y2.min(g.y2) - p.y1.max(g.y1);
    let (inter, grad_inter) = if iw > 0.0 && ih > 0.0 {
        let gx1 = if p.x1 >= g.x1 { -ih } else { 0.0 };
        let gy1 = if p.y1 >= g.y1 { -iw } else { 0.0 };
        let gx2 = if p.x2 <= g.x2 { ih } else { 0.0 };
        let gy2 = if p.y2 <= g.y2 { iw } else { 0.0 };
        (iw * ih, [gx1, gy1, gx2, gy2])
    } else {
        (0.0, [0.0; 4])
    };

    let union = geometry::area(p) + geometry::area(g) - inter;
    let mut grad_union = [0.0; 4];
    for k in 0..4 {
        grad_union[k] = grad_area_p[k] - grad_inter[k];
    }
    if union <= 0.0 {
        return IouTerms {
            inter,
            union,
            iou: 0.0,
            grad_iou: [0.0; 4],
            grad_union,
        };
    }
    let iou = inter / union;
    let mut grad_iou = [0.0; 4];
    for k in 0..4 {
        grad_iou[k] = (grad_inter[k] * union - inter * grad_union[k]) / (union * union);
    }
    IouTerms {
        inter,
        union,
        iou,
        grad_iou,
        grad_union,
    }
}

/// Enclosing-box extents and their derivatives with respect to the pred corners.
struct Enclosure {
    w: f64,
    h: f64,
    // d(w)/d(pred) and d(h)/d(pred)
    grad_w: [f64; 4],
    grad_h: [f64; 4],
}

fn enclosure(p: &BBox, g: &BBox) -> Enclosure {
    let c = geometry::enclosing_box(p, g);
    let gx1 = if p.x1 <= g.x1 { -1.0 } else { 0.0 };
    let gx2 = if p.x2 >= g.x2 { 1.0 } else { 0.0 };
    let gy1 = if p.y1 <= g.y1 { -1.0 } else { 0.0 };
    let gy2 = if p.y2 >= g.y2 { 1.0 } else { 0.0 };
    Enclosure {
        w: c.width(),
        h: c.height(),
        grad_w: [gx1, 0.0, gx2, 0.0],
        grad_h: [0.0, gy1, 0.0, gy2],
    }
}

/// `1 - IoU + ρ²(centers) / c²`, with `c` the enclosing-box diagonal.
pub fn diou_loss(pred: &BBox, gt: &BBox) -> Result<BoxLossResult, LossError> {
    check_box(pred)?;
    check_box(gt)?;
    let enc = enclosure(pred, gt);
    let c2 = enc.w * enc.w + enc.h * enc.h;
    if c2 <= 0.0 {
        return Err(LossError::DegenerateEnclosure("diagonal"));
    }
    if pred == gt {
        let value = 1.0 - geometry::iou(pred, gt);
        return Ok(BoxLossResult {
            value,
            grad_pred: [0.0; 4],
        });
    }

    let t = iou_terms(pred, gt);
    let (pcx, pcy) = pred.center();
    let (gcx, gcy) = gt.center();
    let (dx, dy) = (pcx - gcx, pcy - gcy);
    let rho2 = dx * dx + dy * dy;
    // d(rho²)/d corner: each corner moves its center by half
    let grad_rho2 = [dx, dy, dx, dy];
    let grad_c2: [f64; 4] = std::array::from_fn(|k| 2.0 * enc.w * enc.grad_w[k] + 2.0 * enc.h * enc.grad_h[k]);

    let penalty = rho2 / c2;
    let mut grad = [0.0; 4];
    for k in 0..4 {
        let grad_penalty = (grad_rho2[k] * c2 - rho2 * grad_c2[k]) / (c2 * c2);
        grad[k] = -t.grad_iou[k] + grad_penalty;
    }
    Ok(BoxLossResult {
        value: 1.0 - t.iou + penalty,
        grad_pred: grad,
    })
}

/// `1 - IoU + |C \ (A ∪ B)| / |C|`, with `C` the enclosing box.
pub fn giou_loss(pred: &BBox, gt: &BBox) -> Result<BoxLossResult, LossError> {
    check_box(pred)?;
    check_box(gt)?;
    let enc = enclosure(pred, gt);
    let hull = enc.w * enc.h;
    if hull <= 0.0 {
        return Err(LossError::DegenerateEnclosure("area"));
    }
    if pred == gt {
        let value = 1.0 - geometry::iou(pred, gt);
        return Ok(BoxLossResult {
            value,
            grad_pred: [0.0; 4],
        });
    }

    let t = iou_terms(pred, gt);
    debug_assert!(t.inter <= t.union || t.union <= 0.0);
    let grad_hull: [f64; 4] = std::array::from_fn(|k| enc.grad_w[k] * enc.h + enc.w * enc.grad_h[k]);
    let slack = (hull - t.union) / hull;
    let mut grad = [0.0; 4];
    for k in 0..4 {
        // slack = 1 - U/C
        let grad_slack = -(t.grad_union[k] * hull - t.union * grad_hull[k]) / (hull * hull);
        grad[k] = -t.grad_iou[k] + grad_slack;
    }
    Ok(BoxLossResult {
        value: 1.0 - t.iou + slack,
        grad_pred: grad,
    })
}

/// Sum of absolute corner differences. Ties get a zero subgradient.
pub fn l1_box_loss(pred: &BBox, gt: &BBox) -> Result<BoxLossResult, LossError> {
    check_box(pred)?;
    check_box(gt)?;
    let p = pred.to_array();
    let g = gt.to_array();
    let mut value = 0.0;
    let mut grad = [0.0; 4];
    for k in 0..4 {
        let d = p[k] - g[k];
        value += d.abs();
        grad[k] = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
    Ok(BoxLossResult { value, grad_pred: grad })
}

/// One Generalized Focal Loss sample: a continuous target `y` bracketed by
/// the discretization nodes `y_l < y_r`, with one logit per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GflSample {
    pub y: f64,
    pub y_l: f64,
    pub y_r: f64,
    pub logits: [f64; 2],
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GflResult {
    pub value: f64,
    pub grad_logits: [f64; 2],
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl GflSample {
    pub fn new(y: f64, y_l: f64, y_r: f64, logits: [f64; 2]) -> Self {
        GflSample {
            y,
            y_l,
            y_r,
            logits,
            beta: DEFAULT_GFL_BETA,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// Logits whose two-way softmax puts the prediction exactly on `y`.
    pub fn logits_for_target(y: f64, y_l: f64, y_r: f64) -> [f64; 2] {
        let pr = (y - y_l) / (y_r - y_l);
        [(1.0 - pr).ln(), pr.ln()]
    }

    pub fn validate(&self) -> Result<(), LossError> {
        let ok = self.y_l.is_finite()
            && self.y_r.is_finite()
            && self.y.is_finite()
            && self.y_l < self.y_r
            && self.y >= self.y_l
            && self.y <= self.y_r;
        if !ok {
            return Err(LossError::InvalidBracket {
                y: self.y,
                y_l: self.y_l,
                y_r: self.y_r,
            });
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(LossError::InvalidBeta(self.beta));
        }
        if !self.logits.iter().all(|z| z.is_finite()) {
            return Err(LossError::NonFiniteLogits(self.logits));
        }
        Ok(())
    }

    /// `(p_l, p_r)`, summing to one.
    pub fn probabilities(&self) -> (f64, f64) {
        let pr = sigmoid(self.logits[1] - self.logits[0]);
        (1.0 - pr, pr)
    }

    /// The expected value `y_l·p_l + y_r·p_r`.
    pub fn prediction(&self) -> f64 {
        let (pl, pr) = self.probabilities();
        self.y_l * pl + self.y_r * pr
    }
}

/// `-|y - ŷ|^β · ((y_r - y)·log p_l + (y - y_l)·log p_r)`.
///
/// Log-probabilities are computed as `-softplus(±(z_r - z_l))`, never as the
/// log of a stored probability. A zero weight multiplying a log term drops
/// the term (`0·log 0 = 0`). With β = 0 the focal weight is 1 everywhere.
pub fn gfl_loss(s: &GflSample) -> Result<GflResult, LossError> {
    s.validate()?;
    let d = s.logits[1] - s.logits[0];
    let log_pl = -softplus(d);
    let log_pr = -softplus(-d);
    let pr = sigmoid(d);
    let pl = sigmoid(-d);

    let wl = s.y_r - s.y;
    let wr = s.y - s.y_l;
    let mut ce = 0.0;
    if wl != 0.0 {
        ce -= wl * log_pl;
    }
    if wr != 0.0 {
        ce -= wr * log_pr;
    }
    let dce = wl * pr - wr * pl;

    let y_hat = s.y_l * pl + s.y_r * pr;
    let err = y_hat - s.y;
    let dyhat = (s.y_r - s.y_l) * pl * pr;
    let weight = err.abs().powf(s.beta);
    let dweight = if s.beta == 0.0 || err == 0.0 {
        0.0
    } else {
        s.beta * err.abs().powf(s.beta - 1.0) * err.signum() * dyhat
    };

    let g = dweight * ce + weight * dce;
    Ok(GflResult {
        value: weight * ce,
        grad_logits: [-g, g],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    /// Straight-line evaluation of the closed forms, independent of the
    /// gradient-carrying code path.
    fn diou_scalar(p: &BBox, g: &BBox) -> f64 {
        let inter = (p.x2.min(g.x2) - p.x1.max(g.x1)).max(0.0) * (p.y2.min(g.y2) - p.y1.max(g.y1)).max(0.0);
        let union = (p.x2 - p.x1) * (p.y2 - p.y1) + (g.x2 - g.x1) * (g.y2 - g.y1) - inter;
        let cw = p.x2.max(g.x2) - p.x1.min(g.x1);
        let ch = p.y2.max(g.y2) - p.y1.min(g.y1);
        let rho2 = ((p.x1 + p.x2 - g.x1 - g.x2) / 2.0).powi(2) + ((p.y1 + p.y2 - g.y1 - g.y2) / 2.0).powi(2);
        1.0 - inter / union + rho2 / (cw * cw + ch * ch)
    }

    fn fd(f: impl Fn(&[f64; 4]) -> f64, x: [f64; 4], h: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for k in 0..4 {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            out[k] = (f(&a) - f(&b)) / (2.0 * h);
        }
        out
    }

    #[test]
    fn diou_example_value() {
        let r = diou_loss(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 3.0, 3.0)).unwrap();
        let expected = 1.0 - 1.0 / 7.0 + 2.0 / 18.0;
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.value - 0.968254).abs() < 1e-6);
    }

    #[test]
    fn diou_identical_is_zero_with_zero_subgradient() {
        let b = bb(1.0, 2.0, 5.0, 7.0);
        let r = diou_loss(&b, &b).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.grad_pred, [0.0; 4]);
    }

    #[test]
    fn diou_concentric_inclusion_has_no_penalty() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let pred = bb(3.0, 3.0, 7.0, 7.0);
        let r = diou_loss(&pred, &gt).unwrap();
        assert!((r.value - (1.0 - 16.0 / 100.0)).abs() < 1e-15);
    }

    #[test]
    fn diou_degenerate_enclosure_errors() {
        let p = bb(2.0, 2.0, 2.0, 2.0);
        assert_eq!(diou_loss(&p, &p), Err(LossError::DegenerateEnclosure("diagonal")));
        assert!(giou_loss(&p, &p).is_err());
    }

    #[test]
    fn giou_examples() {
        let r = giou_loss(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 3.0, 3.0)).unwrap();
        let expected = 1.0 - 1.0 / 7.0 + 2.0 / 9.0;
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.value - 1.079365).abs() < 1e-6);
        let b = bb(0.0, 0.0, 4.0, 4.0);
        assert_eq!(giou_loss(&b, &b).unwrap().value, 0.0);
    }

    #[test]
    fn giou_tends_to_two_when_far_apart() {
        let gt = bb(0.0, 0.0, 1.0, 1.0);
        let mut last = 0.0;
        for sep in [2.0, 10.0, 100.0, 1e4] {
            let v = giou_loss(&gt.translate(sep, sep), &gt).unwrap().value;
            assert!(v > last && v < 2.0);
            last = v;
        }
        assert!(last > 1.9999);
    }

    #[test]
    fn l1_examples() {
        let r = l1_box_loss(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 3.0, 3.0)).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.grad_pred, [-1.0; 4]);
        let b = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(l1_box_loss(&b, &b).unwrap().value, 0.0);
        let moved = l1_box_loss(
            &bb(0.0, 0.0, 2.0, 2.0).translate(7.5, -3.0),
            &bb(1.0, 1.0, 3.0, 3.0).translate(7.5, -3.0),
        )
        .unwrap();
        assert_eq!(moved.value, 4.0);
    }

    #[test]
    fn gfl_hand_evaluated_example() {
        let s = GflSample::new(0.7, 0.0, 1.0, [0.0, 0.0]);
        let r = gfl_loss(&s).unwrap();
        // |0.7 - 0.5|^2 * -(0.3 ln 0.5 + 0.7 ln 0.5)
        let expected = 0.2f64.powi(2) * -(0.3 * 0.5f64.ln() + 0.7 * 0.5f64.ln());
        assert!((r.value - expected).abs() < 1e-15);
        assert!((r.value - 0.027726).abs() < 1e-6);
    }

    #[test]
    fn gfl_zero_at_exact_prediction() {
        let (y, yl, yr) = (0.37, 0.2, 0.6);
        let s = GflSample::new(y, yl, yr, GflSample::logits_for_target(y, yl, yr));
        assert!((s.prediction() - y).abs() < 1e-15);
        let r = gfl_loss(&s).unwrap();
        assert!(r.value.abs() < 1e-25);
    }

    #[test]
    fn gfl_beta_zero_is_cross_entropy() {
        let s = GflSample::new(0.7, 0.0, 1.0, [0.3, -1.2]).with_beta(0.0);
        let (pl, pr) = s.probabilities();
        let ce = -(0.3 * pl.ln() + 0.7 * pr.ln());
        assert!((gfl_loss(&s).unwrap().value - ce).abs() < 1e-14);
        // weight stays 1 at the optimum
        let t = GflSample::new(0.7, 0.0, 1.0, GflSample::logits_for_target(0.7, 0.0, 1.0)).with_beta(0.0);
        let (pl, pr) = t.probabilities();
        let ce = -(0.3 * pl.ln() + 0.7 * pr.ln());
        assert!((gfl_loss(&t).unwrap().value - ce).abs() < 1e-14);
    }

    #[test]
    fn gfl_saturated_endpoint_uses_zero_log_zero() {
        // y = y_r and p_l underflows to zero: the (y_r - y)·log p_l term is dropped.
        let s = GflSample::new(1.0, 0.0, 1.0, [-800.0, 800.0]);
        let r = gfl_loss(&s).unwrap();
        assert!(r.value.is_finite());
        assert!(r.value >= 0.0);
        let s = GflSample::new(0.0, 0.0, 1.0, [800.0, -800.0]);
        assert!(gfl_loss(&s).unwrap().value.is_finite());
    }

    #[test]
    fn gfl_rejects_bad_brackets() {
        assert!(matches!(
            gfl_loss(&GflSample::new(1.2, 0.0, 1.0, [0.0, 0.0])),
            Err(LossError::InvalidBracket { .. })
        ));
        assert!(matches!(
            gfl_loss(&GflSample::new(0.5, 0.5, 0.5, [0.0, 0.0])),
            Err(LossError::InvalidBracket { .. })
        ));
        assert!(matches!(
            gfl_loss(&GflSample::new(0.5, 0.0, 1.0, [0.0, 0.0]).with_beta(-1.0)),
            Err(LossError::InvalidBeta(_))
        ));
    }

    #[test]
    fn reduction_mean_and_sum() {
        let rs = [
            BoxLossResult {
                value: 1.0,
                grad_pred: [1.0; 4],
            },
            BoxLossResult {
                value: 3.0,
                grad_pred: [2.0; 4],
            },
        ];
        let (m, g) = reduce(&rs, Reduction::Mean).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(g[1], [1.0; 4]);
        assert_eq!(reduce(&rs, Reduction::Sum).unwrap().0, 4.0);
        assert!(reduce(&[], Reduction::Mean).is_none());
    }

    #[test]
    fn diou_gradient_spot_check() {
        let p = [0.3, 0.7, 2.1, 2.9];
        let g = bb(1.0, 1.1, 3.3, 3.4);
        let an = diou_loss(&BBox::from_array(p), &g).unwrap().grad_pred;
        let num = fd(|x| diou_scalar(&BBox::from_array(*x), &g), p, 1e-6);
        for k in 0..4 {
            assert!((an[k] - num[k]).abs() < 1e-7, "{k}: {} vs {}", an[k], num[k]);
        }
    }

    fn pair() -> impl Strategy<Value = (BBox, BBox)> {
        (
            (0.0..40.0f64, 0.0..40.0f64, 0.5..24.0f64, 0.5..24.0f64),
            (0.0..40.0f64, 0.0..40.0f64, 0.5..24.0f64, 0.5..24.0f64),
        )
            .prop_map(|(a, b)| {
                (
                    BBox::from_xywh(a.0, a.1, a.2, a.3).unwrap(),
                    BBox::from_xywh(b.0, b.1, b.2, b.3).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn box_loss_ranges((p, g) in pair()) {
            let d = diou_loss(&p, &g).unwrap().value;
            let gi = giou_loss(&p, &g).unwrap().value;
            prop_assert!((0.0..2.0).contains(&d));
            prop_assert!((0.0..2.0).contains(&gi));
            prop_assert!((d - diou_scalar(&p, &g)).abs() < 1e-12);
            if p != g {
                prop_assert!(d > 0.0 && gi > 0.0);
                prop_assert!(l1_box_loss(&p, &g).unwrap().value > 0.0);
            }
        }

        #[test]
        fn translation_and_scale_invariance((p, g) in pair(), dx in -30.0..30.0f64, dy in -30.0..30.0f64, s in 0.25..4.0f64) {
            let tp = p.translate(dx, dy);
            let tg = g.translate(dx, dy);
            let d0 = diou_loss(&p, &g).unwrap().value;
            let g0 = giou_loss(&p, &g).unwrap().value;
            prop_assert!((d0 - diou_loss(&tp, &tg).unwrap().value).abs() < 1e-9);
            prop_assert!((g0 - giou_loss(&tp, &tg).unwrap().value).abs() < 1e-9);
            prop_assert!((l1_box_loss(&p, &g).unwrap().value - l1_box_loss(&tp, &tg).unwrap().value).abs() < 1e-9);
            let scale = |b: &BBox| BBox::from_array(b.to_array().map(|v| (v - dx) * s + dx));
            prop_assert!((d0 - diou_loss(&scale(&p), &scale(&g)).unwrap().value).abs() < 1e-9);
            prop_assert!((g0 - giou_loss(&scale(&p), &scale(&g)).unwrap().value).abs() < 1e-9);
        }

        #[test]
        fn diou_grows_with_offset_inside_gt(w in 1.0..6.0f64, h in 1.0..6.0f64, dir in 0.0..std::f64::consts::TAU) {
            let gt = bb(0.0, 0.0, 20.0, 20.0);
            let (ux, uy) = (dir.cos(), dir.sin());
            let max_off = (10.0 - w / 2.0).min(10.0 - h / 2.0) * 0.99;
            let mut last = -1.0;
            for i in 0..=10 {
                let t = max_off * i as f64 / 10.0;
                let (cx, cy) = (10.0 + t * ux, 10.0 + t * uy);
                let pred = bb(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
                let v = diou_loss(&pred, &gt).unwrap().value;
                prop_assert!(v > last || i == 0);
                last = v;
            }
        }

        #[test]
        fn gfl_nonnegative(y_l in 0.0..0.8f64, span in 0.05..1.0f64, frac in 0.0..=1.0f64,
                           zl in -6.0..6.0f64, zr in -6.0..6.0f64, beta in 0.0..3.0f64) {
            let y_r = y_l + span;
            let y = (y_l + frac * span).min(y_r);
            let r = gfl_loss(&GflSample::new(y, y_l, y_r, [zl, zr]).with_beta(beta)).unwrap();
            prop_assert!(r.value >= 0.0);
            prop_assert!(r.grad_logits[0] == -r.grad_logits[1]);
        }
    }
}
