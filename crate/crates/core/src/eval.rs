//! COCO-protocol bounding-box evaluation.
//!
//! AP is 101-point interpolated precision averaged over IoU thresholds
//! 0.50:0.05:0.95, over classes that have at least one ground truth in the
//! stratum, and reported together with AP50, AP75, area-stratified AP and
//! recall. The matching rules and accumulation order follow the public COCO
//! evaluator so the numbers agree with it to floating-point precision:
//!
//! * detections are evaluated per (image, class), sorted by score with a
//!   stable sort and truncated to `max_detections`;
//! * a detection takes the best-IoU unmatched ground truth at or above the
//!   threshold, preferring in-range ground truths over out-of-range ones;
//! * detections matched to an out-of-range ground truth, and unmatched
//!   detections whose own area is out of range, are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::Detection;
use crate::dataio::{AnnotationSet, ResultRecord};
use crate::geometry::{self, BBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("id-space mismatch: {0}")]
    IdSpaceMismatch(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("annotation {0} has iscrowd set; crowd regions are not supported")]
    CrowdAnnotation(u64),
}

/// An annotated box. `area` comes from the annotation and drives the
/// small/medium/large split; it falls back to the box area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bbox: BBox,
    pub class_id: u64,
    pub image_id: u64,
    pub area: f64,
}

impl GroundTruth {
    pub fn new(bbox: BBox, class_id: u64, image_id: u64) -> Self {
        GroundTruth {
            bbox,
            class_id,
            image_id,
            area: geometry::area(&bbox),
        }
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = area;
        self
    }
}

/// `n` evenly spaced values from `start` to `stop`, computed the way
/// `numpy.linspace` does (`i * step + start`, last value pinned to `stop`).
fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * step + start).collect();
    v[n - 1] = stop;
    v
}

fn recall_thresholds() -> Vec<f64> {
    linspace(0.0, 1.0, 101)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    /// Upper bound (exclusive) of the small range; default 32².
    pub small_area_max: f64,
    /// Lower bound (inclusive) of the large range; default 96².
    pub large_area_min: f64,
    pub max_detections: usize,
    pub recall_max_detections: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: linspace(0.5, 0.95, 10),
            small_area_max: 32.0 * 32.0,
            large_area_min: 96.0 * 96.0,
            max_detections: 100,
            recall_max_detections: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
}

impl AreaRange {
    /// Half-open membership `[min, max)`.
    pub fn contains(&self, area: f64) -> bool {
        area >= self.min && area < self.max
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let t = &self.iou_thresholds;
        if t.is_empty() || !t.windows(2).all(|w| w[0] < w[1]) || !t.iter().all(|&v| v > 0.0 && v < 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "iou_thresholds must be non-empty, strictly increasing and inside (0, 1): {t:?}"
            )));
        }
        let ok =
            self.small_area_max >= 0.0 && self.large_area_min >= self.small_area_max && self.large_area_min.is_finite();
        if !ok {
            return Err(EvalError::InvalidConfig(format!(
                "area bounds must satisfy 0 <= small_area_max <= large_area_min < inf, got {} and {}",
                self.small_area_max, self.large_area_min
            )));
        }
        if self.max_detections == 0 || self.recall_max_detections == 0 {
            return Err(EvalError::InvalidConfig("detection limits must be positive".into()));
        }
        Ok(())
    }

    /// `all`, then the three disjoint strata covering `[0, ∞)`.
    pub fn area_ranges(&self) -> [AreaRange; 4] {
        [
            AreaRange {
                name: "all",
                min: 0.0,
                max: f64::INFINITY,
            },
            AreaRange {
                name: "small",
                min: 0.0,
                max: self.small_area_max,
            },
            AreaRange {
                name: "medium",
                min: self.small_area_max,
                max: self.large_area_min,
            },
            AreaRange {
                name: "large",
                min: self.large_area_min,
                max: f64::INFINITY,
            },
        ]
    }

    fn threshold_index(&self, t: f64) -> Option<usize> {
        self.iou_thresholds.iter().position(|&v| (v - t).abs() < 1e-9)
    }
}

/// Metric columns; `None` marks a stratum without ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap_all: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_s: Option<f64>,
    pub ap_m: Option<f64>,
    pub ap_l: Option<f64>,
    pub recall_s: Option<f64>,
    pub recall_m: Option<f64>,
    pub recall_l: Option<f64>,
    pub recall_all: Option<f64>,
}

impl EvalReport {
    pub const COLUMNS: [&'static str; 10] = [
        "AP_all",
        "AP_50",
        "AP_75",
        "AP_s",
        "AP_m",
        "AP_l",
        "Recall_s",
        "Recall_m",
        "Recall_l",
        "Recall_all",
    ];

    pub fn values(&self) -> [Option<f64>; 10] {
        [
            self.ap_all,
            self.ap50,
            self.ap75,
            self.ap_s,
            self.ap_m,
            self.ap_l,
            self.recall_s,
            self.recall_m,
            self.recall_l,
            self.recall_all,
        ]
    }

    /// Fixed-width table with one header row and one value row.
    pub fn to_table(&self) -> String {
        let width = Self::COLUMNS.iter().map(|c| c.len()).max().unwrap_or(0) + 2;
        let mut out = String::new();
        for c in Self::COLUMNS {
            let _ = write!(out, "{c:>width$}");
        }
        out.push('\n');
        for v in self.values() {
            match v {
                Some(x) => {
                    let _ = write!(out, "{x:>width$.3}");
                }
                None => {
                    let _ = write!(out, "{:>width$}", "-");
                }
            }
        }
        out.push('\n');
        out
    }
}

/// Greedy matching on one image and one class without area filtering.
///
/// Returns, aligned with `dets`, the index of the matched ground truth
/// (true positive) or `None` (false positive).
pub fn match_image(dets: &[Detection], gts: &[GroundTruth], iou_t: f64) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let ious: Vec<Vec<f64>> = order
        .iter()
        .map(|&d| gts.iter().map(|g| geometry::iou(&dets[d].bbox, &g.bbox)).collect())
        .collect();
    let ignore = vec![false; gts.len()];
    let gt_order: Vec<usize> = (0..gts.len()).collect();
    let matched = greedy_match(&ious, &gt_order, &ignore, iou_t);
    let mut out = vec![None; dets.len()];
    for (rank, m) in matched.into_iter().enumerate() {
        out[order[rank]] = m;
    }
    out
}

/// Core matching loop over score-sorted detections. `gt_order` lists gts with
/// in-range ones first; returns the matched gt per detection rank.
fn greedy_match(ious: &[Vec<f64>], gt_order: &[usize], gt_ignore: &[bool], iou_t: f64) -> Vec<Option<usize>> {
    let mut gt_taken = vec![false; gt_ignore.len()];
    let mut out = Vec::with_capacity(ious.len());
    for row in ious {
        let mut best = iou_t.min(1.0 - 1e-10);
        let mut m: Option<usize> = None;
        for &g in gt_order {
            if gt_taken[g] {
                continue;
            }
            if let Some(cur) = m {
                if !gt_ignore[cur] && gt_ignore[g] {
                    break;
                }
            }
            if row[g] < best {
                continue;
            }
            best = row[g];
            m = Some(g);
        }
        if let Some(g) = m {
            gt_taken[g] = true;
        }
        out.push(m);
    }
    out
}

/// 101-point interpolated AP and final recall from true-positive flags that
/// are already in descending score order. `None` when `n_gt == 0`.
fn precision_recall(tp_sorted: &[bool], n_gt: usize) -> Option<(f64, f64)> {
    if n_gt == 0 {
        return None;
    }
    let nd = tp_sorted.len();
    let mut rc = Vec::with_capacity(nd);
    let mut pr = Vec::with_capacity(nd);
    let (mut tp, mut fp) = (0.0f64, 0.0f64);
    for &is_tp in tp_sorted {
        if is_tp {
            tp += 1.0;
        } else {
            fp += 1.0;
        }
        rc.push(tp / n_gt as f64);
        pr.push(tp / (tp + fp));
    }
    let recall = rc.last().copied().unwrap_or(0.0);
    for i in (1..nd).rev() {
        if pr[i] > pr[i - 1] {
            pr[i - 1] = pr[i];
        }
    }
    let thresholds = recall_thresholds();
    let sum: f64 = thresholds
        .iter()
        .map(|&r| {
            let idx = rc.partition_point(|&x| x < r);
            if idx < nd {
                pr[idx]
            } else {
                0.0
            }
        })
        .sum();
    Some((sum / thresholds.len() as f64, recall))
}

/// 101-point interpolated average precision from `(score, is_true_positive)`
/// pairs; ties keep input order. `None` when `n_gt == 0`.
pub fn average_precision(samples: &[(f64, bool)], n_gt: usize) -> Option<f64> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].0.total_cmp(&samples[a].0));
    let flags: Vec<bool> = order.iter().map(|&i| samples[i].1).collect();
    precision_recall(&flags, n_gt).map(|(ap, _)| ap)
}

/// Detections and ground truths of one (class, image) cell, in input order.
#[derive(Default)]
struct Cell<'a> {
    dets: Vec<&'a Detection>,
    gts: Vec<&'a GroundTruth>,
}

/// Per-cell result for one area range and one detection limit: for every
/// IoU threshold, the kept (non-ignored) detections as (score, is_tp).
struct CellEval {
    n_gt: usize,
    per_threshold: Vec<Vec<(f64, bool)>>,
}

fn evaluate_cell(cell: &Cell<'_>, range: &AreaRange, max_det: usize, thresholds: &[f64]) -> CellEval {
    let mut dets: Vec<&Detection> = cell.dets.clone();
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    dets.truncate(max_det);

    let gt_ignore: Vec<bool> = cell.gts.iter().map(|g| !range.contains(g.area)).collect();
    let mut gt_order: Vec<usize> = (0..cell.gts.len()).collect();
    gt_order.sort_by_key(|&g| gt_ignore[g]);
    let ious: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| cell.gts.iter().map(|g| geometry::iou(&d.bbox, &g.bbox)).collect())
        .collect();
    let n_gt = gt_ignore.iter().filter(|&&ig| !ig).count();

    let per_threshold = thresholds
        .iter()
        .map(|&t| {
            let matched = greedy_match(&ious, &gt_order, &gt_ignore, t);
            dets.iter()
                .zip(matched)
                .filter_map(|(d, m)| {
                    let ignored = match m {
                        Some(g) => gt_ignore[g],
                        None => !range.contains(geometry::area(&d.bbox)),
                    };
                    (!ignored).then_some((d.score, m.is_some()))
                })
                .collect()
        })
        .collect();
    CellEval { n_gt, per_threshold }
}

fn validate_inputs(dets: &[Detection], gts: &[GroundTruth]) -> Result<(), EvalError> {
    for (i, d) in dets.iter().enumerate() {
        if !d.bbox.is_valid() {
            return Err(EvalError::MalformedInput(format!(
                "detection {i} has invalid box {:?}",
                d.bbox
            )));
        }
        if !(d.score.is_finite() && (0.0..=1.0).contains(&d.score)) {
            return Err(EvalError::MalformedInput(format!(
                "detection {i} has score {} outside [0, 1]",
                d.score
            )));
        }
    }
    for (i, g) in gts.iter().enumerate() {
        if !g.bbox.is_valid() {
            return Err(EvalError::MalformedInput(format!(
                "ground truth {i} has invalid box {:?}",
                g.bbox
            )));
        }
        if !(g.area.is_finite() && g.area >= 0.0) {
            return Err(EvalError::MalformedInput(format!(
                "ground truth {i} has area {}",
                g.area
            )));
        }
    }
    Ok(())
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per (area range, threshold, class) AP and recall; `None` where the class
/// has no in-range ground truth.
struct Accumulated {
    // [area][threshold][class]
    ap: Vec<Vec<Vec<Option<f64>>>>,
    recall: Vec<Vec<Vec<Option<f64>>>>,
}

fn accumulate(cells: &[(u64, Vec<Cell<'_>>)], cfg: &EvalConfig, max_det: usize) -> Accumulated {
    let ranges = cfg.area_ranges();
    let nt = cfg.iou_thresholds.len();
    let mut ap = vec![vec![Vec::with_capacity(cells.len()); nt]; ranges.len()];
    let mut recall = ap.clone();

    // evaluate every (class, image, range) cell; images are already in id order
    let evaluated: Vec<Vec<Vec<CellEval>>> = cells
        .par_iter()
        .map(|(_, per_image)| {
            per_image
                .par_iter()
                .map(|cell| {
                    ranges
                        .iter()
                        .map(|r| evaluate_cell(cell, r, max_det, &cfg.iou_thresholds))
                        .collect()
                })
                .collect()
        })
        .collect();

    for per_image in &evaluated {
        for (a, _) in ranges.iter().enumerate() {
            let n_gt: usize = per_image.iter().map(|c| c[a].n_gt).sum();
            for t in 0..nt {
                let mut samples: Vec<(f64, bool)> = Vec::new();
                for c in per_image {
                    samples.extend_from_slice(&c[a].per_threshold[t]);
                }
                // stable: ties keep image order, then per-image rank
                samples.sort_by(|x, y| y.0.total_cmp(&x.0));
                let flags: Vec<bool> = samples.iter().map(|s| s.1).collect();
                let pr = precision_recall(&flags, n_gt);
                ap[a][t].push(pr.map(|p| p.0));
                recall[a][t].push(pr.map(|p| p.1));
            }
        }
    }
    Accumulated { ap, recall }
}

fn mean_defined<'a>(rows: impl IntoIterator<Item = &'a Vec<Option<f64>>>) -> Option<f64> {
    mean(rows.into_iter().flat_map(|r| r.iter().flatten().copied()))
}

/// Evaluates detections against ground truths.
///
/// Only classes with at least one ground truth are scored; detections of
/// other classes are ignored. Detections on images without ground truth
/// count as false positives for their class.
pub fn evaluate(dets: &[Detection], gts: &[GroundTruth], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    validate_inputs(dets, gts)?;

    let classes: BTreeSet<u64> = gts.iter().map(|g| g.class_id).collect();
    let images: BTreeSet<u64> = gts
        .iter()
        .map(|g| g.image_id)
        .chain(
            dets.iter()
                .filter(|d| classes.contains(&d.class_id))
                .map(|d| d.image_id),
        )
        .collect();
    let image_index: BTreeMap<u64, usize> = images.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let class_index: BTreeMap<u64, usize> = classes.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut cells: Vec<(u64, Vec<Cell<'_>>)> = classes
        .iter()
        .map(|&c| (c, (0..images.len()).map(|_| Cell::default()).collect()))
        .collect();
    for g in gts {
        cells[class_index[&g.class_id]].1[image_index[&g.image_id]].gts.push(g);
    }
    for d in dets {
        if let Some(&k) = class_index.get(&d.class_id) {
            cells[k].1[image_index[&d.image_id]].dets.push(d);
        }
    }

    let main = accumulate(&cells, cfg, cfg.max_detections);
    let rec = if cfg.recall_max_detections == cfg.max_detections {
        None
    } else {
        Some(accumulate(&cells, cfg, cfg.recall_max_detections))
    };
    let rec = rec.as_ref().unwrap_or(&main);

    let at = |t: f64| {
        cfg.threshold_index(t)
            .and_then(|i| mean(main.ap[0][i].iter().flatten().copied()))
    };
    Ok(EvalReport {
        ap_all: mean_defined(&main.ap[0]),
        ap50: at(0.5),
        ap75: at(0.75),
        ap_s: mean_defined(&main.ap[1]),
        ap_m: mean_defined(&main.ap[2]),
        ap_l: mean_defined(&main.ap[3]),
        recall_s: mean_defined(&rec.recall[1]),
        recall_m: mean_defined(&rec.recall[2]),
        recall_l: mean_defined(&rec.recall[3]),
        recall_all: mean_defined(&rec.recall[0]),
    })
}

/// Converts a COCO annotation set to ground truths, rejecting crowd regions.
pub fn ground_truths(ann: &AnnotationSet) -> Result<Vec<GroundTruth>, EvalError> {
    ann.annotations
        .iter()
        .map(|a| {
            if a.iscrowd.unwrap_or(0) != 0 {
                return Err(EvalError::CrowdAnnotation(a.id));
            }
            let [x, y, w, h] = a.bbox;
            let bbox = BBox::from_xywh(x, y, w, h)
                .map_err(|e| EvalError::MalformedInput(format!("annotation {}: {e}", a.id)))?;
            let gt = GroundTruth::new(bbox, a.category_id, a.image_id);
            Ok(match a.area {
                Some(area) => gt.with_area(area),
                None => gt,
            })
        })
        .collect()
}

/// Evaluates COCO result records against an annotation set, checking that
/// every result refers to a known image and category.
pub fn evaluate_coco(ann: &AnnotationSet, results: &[ResultRecord], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let images: BTreeSet<u64> = ann.images.iter().map(|i| i.id).collect();
    let categories: BTreeSet<u64> = ann.categories.iter().map(|c| c.id).collect();
    for a in &ann.annotations {
        if !images.contains(&a.image_id) || !categories.contains(&a.category_id) {
            return Err(EvalError::IdSpaceMismatch(format!(
                "annotation {} refers to image {} / category {} not declared in the file",
                a.id, a.image_id, a.category_id
            )));
        }
    }
    let mut dets = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        if !images.contains(&r.image_id) {
            return Err(EvalError::IdSpaceMismatch(format!(
                "result {i} refers to unknown image {}",
                r.image_id
            )));
        }
        if !categories.contains(&r.category_id) {
            return Err(EvalError::IdSpaceMismatch(format!(
                "result {i} refers to unknown category {}",
                r.category_id
            )));
        }
        let [x, y, w, h] = r.bbox;
        let bbox = BBox::from_xywh(x, y, w, h).map_err(|e| EvalError::MalformedInput(format!("result {i}: {e}")))?;
        dets.push(Detection::new(bbox, r.score, r.category_id, r.image_id));
    }
    evaluate(&dets, &ground_truths(ann)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn default_thresholds() {
        let cfg = EvalConfig::default();
        assert_eq!(cfg.iou_thresholds.len(), 10);
        assert_eq!(cfg.iou_thresholds[0], 0.5);
        assert_eq!(cfg.iou_thresholds[9], 0.95);
        assert!(cfg.threshold_index(0.75).is_some());
        let r = recall_thresholds();
        assert_eq!(r.len(), 101);
        assert_eq!(r[100], 1.0);
    }

    #[test]
    fn match_image_examples() {
        let g = GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0);
        let exact = Detection::new(g.bbox, 0.9, 1, 0);
        assert_eq!(match_image(&[exact], &[g], 0.5), vec![Some(0)]);

        let near = Detection::new(bb(0.0, 0.0, 10.0, 9.0), 0.95, 1, 0);
        assert_eq!(match_image(&[exact, near], &[g], 0.5), vec![None, Some(0)]);

        let g2 = GroundTruth::new(bb(1.0, 1.0, 3.0, 3.0), 1, 0);
        let weak = Detection::new(bb(0.0, 0.0, 2.0, 2.0), 0.9, 1, 0);
        assert_eq!(match_image(&[weak], &[g2], 0.5), vec![None]);
    }

    #[test]
    fn average_precision_examples() {
        assert_eq!(average_precision(&[(0.9, true), (0.8, true)], 2), Some(1.0));
        assert_eq!(average_precision(&[(0.9, false), (0.5, true)], 1), Some(0.5));
        assert_eq!(average_precision(&[], 3), Some(0.0));
        assert_eq!(average_precision(&[(0.9, false)], 0), None);
    }

    #[test]
    fn perfect_and_empty() {
        let gts = vec![
            GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0),
            GroundTruth::new(bb(0.0, 0.0, 50.0, 50.0), 2, 0),
            GroundTruth::new(bb(5.0, 5.0, 200.0, 150.0), 1, 1),
        ];
        let dets: Vec<Detection> = gts
            .iter()
            .enumerate()
            .map(|(i, g)| Detection::new(g.bbox, 0.3 + 0.1 * i as f64, g.class_id, g.image_id))
            .collect();
        let cfg = EvalConfig::default();
        let r = evaluate(&dets, &gts, &cfg).unwrap();
        for v in r.values() {
            assert_eq!(v, Some(1.0));
        }
        let r = evaluate(&[], &gts, &cfg).unwrap();
        for v in r.values() {
            assert_eq!(v, Some(0.0));
        }
    }

    #[test]
    fn empty_stratum_is_undefined() {
        let gts = vec![GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0)];
        let dets = vec![Detection::new(gts[0].bbox, 0.5, 1, 0)];
        let r = evaluate(&dets, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.ap_s, Some(1.0));
        assert_eq!(r.ap_m, None);
        assert_eq!(r.ap_l, None);
        assert_eq!(r.recall_l, None);
        assert!(r.to_table().contains('-'));
    }

    #[test]
    fn out_of_range_detections_are_not_penalized() {
        // one small gt, one unmatched large detection: small AP stays 1
        let gts = vec![GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0)];
        let dets = vec![
            Detection::new(bb(100.0, 100.0, 300.0, 300.0), 0.99, 1, 0),
            Detection::new(gts[0].bbox, 0.5, 1, 0),
        ];
        let r = evaluate(&dets, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.ap_s, Some(1.0));
        assert_eq!(r.ap_all, Some(0.5));
    }

    #[test]
    fn rejects_malformed() {
        let gts = vec![GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0)];
        let bad = vec![Detection::new(gts[0].bbox, 1.5, 1, 0)];
        assert!(matches!(
            evaluate(&bad, &gts, &EvalConfig::default()),
            Err(EvalError::MalformedInput(_))
        ));
        let cfg = EvalConfig {
            iou_thresholds: vec![0.7, 0.5],
            ..Default::default()
        };
        assert!(matches!(evaluate(&[], &gts, &cfg), Err(EvalError::InvalidConfig(_))));
    }

    #[test]
    fn max_detections_truncates_per_cell() {
        let gts = vec![GroundTruth::new(bb(0.0, 0.0, 10.0, 10.0), 1, 0)];
        let dets = vec![
            Detection::new(bb(50.0, 50.0, 60.0, 60.0), 0.9, 1, 0),
            Detection::new(gts[0].bbox, 0.5, 1, 0),
        ];
        let cfg = EvalConfig {
            max_detections: 1,
            recall_max_detections: 2,
            ..Default::default()
        };
        let r = evaluate(&dets, &gts, &cfg).unwrap();
        assert_eq!(r.ap_all, Some(0.0));
        assert_eq!(r.recall_all, Some(1.0));
    }

    fn dataset() -> impl Strategy<Value = (Vec<Detection>, Vec<GroundTruth>)> {
        let boxes = (0.0..150.0f64, 0.0..150.0f64, 2.0..120.0f64, 2.0..120.0f64)
            .prop_map(|(x, y, w, h)| BBox::from_array([x, y, x + w, y + h]));
        let gt = (boxes.clone(), 0u64..3, 0u64..4).prop_map(|(b, c, i)| GroundTruth::new(b, c, i));
        let det = (boxes, 0.01..1.0f64, 0u64..3, 0u64..4).prop_map(|(b, s, c, i)| Detection::new(b, s, c, i));
        (prop::collection::vec(det, 0..20), prop::collection::vec(gt, 1..15))
    }

    fn jitter_towards(d: &Detection, g: &GroundTruth) -> Detection {
        Detection {
            bbox: g.bbox,
            class_id: g.class_id,
            image_id: g.image_id,
            ..*d
        }
    }

    proptest! {
        #[test]
        fn invariances((dets, gts) in dataset()) {
            let cfg = EvalConfig::default();
            let base = evaluate(&dets, &gts, &cfg).unwrap();
            for v in base.values().into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }

            // strictly monotone score transform
            let squashed: Vec<Detection> = dets.iter().map(|d| Detection { score: d.score.powi(3) * 0.5, ..*d }).collect();
            prop_assert_eq!(evaluate(&squashed, &gts, &cfg).unwrap(), base);

            // image relabeling that reverses image order
            let flip = |i: u64| 1000 - i;
            let rd: Vec<Detection> = dets.iter().rev().map(|d| Detection { image_id: flip(d.image_id), ..*d }).collect();
            let rg: Vec<GroundTruth> = gts.iter().map(|g| GroundTruth { image_id: flip(g.image_id), ..*g }).collect();
            let permuted = evaluate(&rd, &rg, &cfg).unwrap();
            for (a, b) in base.values().iter().zip(permuted.values()) {
                match (a, b) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                    _ => prop_assert_eq!(a, &b),
                }
            }
        }

        #[test]
        fn more_is_no_worse((dets, gts) in dataset(), pick in 0usize..100) {
            let cfg = EvalConfig::default();
            let base = evaluate(&dets, &gts, &cfg).unwrap();
            let g = gts[pick % gts.len()];
            // a fresh TP on an untouched gt; taking an already-matched gt may demote its old match
            prop_assume!(dets.iter().all(|d| d.class_id != g.class_id || d.image_id != g.image_id
                || geometry::iou(&d.bbox, &g.bbox) == 0.0));

            let mut with_tp = dets.clone();
            with_tp.push(jitter_towards(&Detection::new(g.bbox, 1.0, 0, 0), &g));
            let better = evaluate(&with_tp, &gts, &cfg).unwrap();
            let mut with_fp = dets.clone();
            with_fp.push(Detection::new(bb(400.0, 400.0, 420.0, 420.0), 0.0, g.class_id, g.image_id));
            let worse = evaluate(&with_fp, &gts, &cfg).unwrap();
            let aps = |r: &EvalReport| [r.ap_all, r.ap50, r.ap75, r.ap_s, r.ap_m, r.ap_l];
            for (b, n) in aps(&base).iter().zip(aps(&better)) {
                if let (Some(b), Some(n)) = (b, n) { prop_assert!(n >= b - 1e-12); }
            }
            for (b, n) in aps(&base).iter().zip(aps(&worse)) {
                if let (Some(b), Some(n)) = (b, n) { prop_assert!(n <= b + 1e-12); }
            }
        }
    }
}
