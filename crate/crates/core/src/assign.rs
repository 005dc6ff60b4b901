//! Greedy non-maximum suppression and cascade-stage proposal labeling.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::GroundTruth;
use crate::geometry::{self, BBox};

/// Stage thresholds used by [`CascadeConfig::default`].
pub const DEFAULT_STAGE_THRESHOLDS: [f64; 3] = [0.5, 0.6, 0.7];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignError {
    #[error("IoU threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("cascade thresholds must be non-empty and strictly increasing, got {0:?}")]
    InvalidCascade(Vec<f64>),
}

fn check_threshold(t: f64) -> Result<(), AssignError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(AssignError::InvalidThreshold(t))
    }
}

/// A scored, classified box on one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub class_id: u64,
    pub image_id: u64,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, class_id: u64, image_id: u64) -> Self {
        Detection {
            bbox,
            score,
            class_id,
            image_id,
        }
    }
}

/// Ranking used by NMS: score descending, then lower image id, lower class
/// id, then lexicographic box coordinates.
pub fn rank_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.image_id.cmp(&b.image_id))
        .then(a.class_id.cmp(&b.class_id))
        .then_with(|| {
            a.bbox
                .to_array()
                .iter()
                .zip(b.bbox.to_array().iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Greedy NMS returning indices into `dets`, in rank order.
///
/// A detection is suppressed when a kept, higher-ranked detection on the same
/// image (and the same class, if `class_aware`) overlaps it with IoU strictly
/// above `iou_threshold`.
pub fn nms_indices(dets: &[Detection], iou_threshold: f64, class_aware: bool) -> Result<Vec<usize>, AssignError> {
    check_threshold(iou_threshold)?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| rank_order(&dets[i], &dets[j]));

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let d = &dets[i];
        let suppressed = kept.iter().any(|&k| {
            let other = &dets[k];
            other.image_id == d.image_id
                && (!class_aware || other.class_id == d.class_id)
                && geometry::iou(&other.bbox, &d.bbox) > iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Greedy NMS; survivors come back sorted by [`rank_order`].
pub fn nms(dets: &[Detection], iou_threshold: f64, class_aware: bool) -> Result<Vec<Detection>, AssignError> {
    Ok(nms_indices(dets, iou_threshold, class_aware)?
        .into_iter()
        .map(|i| dets[i])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    stage_thresholds: Vec<f64>,
}

impl CascadeConfig {
    pub fn new(stage_thresholds: Vec<f64>) -> Result<Self, AssignError> {
        let increasing = stage_thresholds.windows(2).all(|w| w[0] < w[1]);
        if stage_thresholds.is_empty() || !increasing {
            return Err(AssignError::InvalidCascade(stage_thresholds));
        }
        for &t in &stage_thresholds {
            check_threshold(t)?;
        }
        Ok(CascadeConfig { stage_thresholds })
    }

    pub fn stage_thresholds(&self) -> &[f64] {
        &self.stage_thresholds
    }
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            stage_thresholds: DEFAULT_STAGE_THRESHOLDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// Matched to the ground truth at this index.
    Positive(usize),
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAssignment {
    pub threshold: f64,
    pub labels: Vec<Label>,
    pub matched_iou: Vec<f64>,
}

impl StageAssignment {
    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|l| matches!(l, Label::Positive(_))).count()
    }
}

/// Labels each proposal against its max-IoU ground truth (ties go to the
/// lower index). No low-quality-match rescue is applied.
///
/// All boxes are assumed to belong to one image.
pub fn assign_stage(proposals: &[BBox], gts: &[GroundTruth], threshold: f64) -> Result<StageAssignment, AssignError> {
    check_threshold(threshold)?;
    let mut labels = Vec::with_capacity(proposals.len());
    let mut matched_iou = Vec::with_capacity(proposals.len());
    for p in proposals {
        let best = gts
            .iter()
            .enumerate()
            .map(|(j, g)| (j, geometry::iou(p, &g.bbox)))
            .fold(None, |acc: Option<(usize, f64)>, (j, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((j, v)),
            });
        match best {
            Some((j, v)) if v >= threshold => {
                labels.push(Label::Positive(j));
                matched_iou.push(v);
            }
            Some((_, v)) => {
                labels.push(Label::Negative);
                matched_iou.push(v);
            }
            None => {
                labels.push(Label::Negative);
                matched_iou.push(0.0);
            }
        }
    }
    Ok(StageAssignment {
        threshold,
        labels,
        matched_iou,
    })
}

/// One [`assign_stage`] pass per configured threshold, in order.
pub fn cascade_assign(
    proposals: &[BBox],
    gts: &[GroundTruth],
    cfg: &CascadeConfig,
) -> Result<Vec<StageAssignment>, AssignError> {
    cfg.stage_thresholds
        .iter()
        .map(|&t| assign_stage(proposals, gts, t))
        .collect()
}
