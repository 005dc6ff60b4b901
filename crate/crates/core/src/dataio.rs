//! COCO annotation and result files, annotation validation and cleaning, and
//! box-space augmentation (flip, scale, jitter).
//!
//! Loading only checks JSON structure. Referential and geometric defects are
//! left in place for [`validate`] to report and [`clean`] to remove.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::BBox;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path} at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation report does not belong to this annotation set (fingerprint {report} != {actual})")]
    StaleReport { report: String, actual: String },
    #[error("scale factor must be finite and > 0, got {0}")]
    InvalidFactor(f64),
    #[error("jitter magnitude must be finite and >= 0, got {0}")]
    InvalidMagnitude(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    #[serde(default)]
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iscrowd: Option<u8>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl AnnotationRecord {
    pub fn bbox_area(&self) -> f64 {
        self.bbox[2] * self.bbox[3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub id: u64,
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// A COCO object-detection annotation file. Top-level keys other than the
/// three arrays (`info`, `licenses`, ...) are carried through untouched.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationSet {
    #[serde(default)]
    pub images: Vec<ImageRecord>,
    #[serde(default)]
    pub annotations: Vec<AnnotationRecord>,
    #[serde(default)]
    pub categories: Vec<CategoryRecord>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl AnnotationSet {
    /// SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("annotation set serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// One entry of a COCO detection-result file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub score: f64,
}

fn read_text(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, DataError> {
    serde_json::from_str(text).map_err(|e| DataError::Json {
        path: path.to_path_buf(),
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_annotations(text: &str) -> Result<AnnotationSet, DataError> {
    parse_json(text, Path::new("<memory>"))
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet, DataError> {
    let path = path.as_ref();
    parse_json(&read_text(path)?, path)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), DataError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_annotations(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<(), DataError> {
    write_json(set, path.as_ref())
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>, DataError> {
    let path = path.as_ref();
    parse_json(&read_text(path)?, path)
}

pub fn save_results(results: &[ResultRecord], path: impl AsRef<Path>) -> Result<(), DataError> {
    write_json(&results, path.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defect {
    OrphanAnnotation,
    DuplicateImageId,
    OutOfBounds,
    DegenerateBox,
    UnknownCategory,
    FailedImageCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Image,
    Annotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Offender {
    pub defect: Defect,
    pub record: RecordKind,
    pub id: u64,
}

/// Defect counts plus the offending records, sorted by defect then id.
/// A record with several defects is listed once per defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fingerprint: String,
    pub orphan_annotations: usize,
    pub duplicate_image_ids: usize,
    pub out_of_bounds_boxes: usize,
    pub degenerate_boxes: usize,
    pub unknown_categories: usize,
    pub failed_image_check: usize,
    pub offenders: Vec<Offender>,
}

impl ValidationReport {
    pub fn total_flagged(&self) -> usize {
        self.orphan_annotations
            + self.duplicate_image_ids
            + self.out_of_bounds_boxes
            + self.degenerate_boxes
            + self.unknown_categories
            + self.failed_image_check
    }

    pub fn is_clean(&self) -> bool {
        self.total_flagged() == 0
    }

    pub fn flagged_images(&self) -> BTreeSet<u64> {
        self.ids_of(RecordKind::Image)
    }

    pub fn flagged_annotations(&self) -> BTreeSet<u64> {
        self.ids_of(RecordKind::Annotation)
    }

    fn ids_of(&self, kind: RecordKind) -> BTreeSet<u64> {
        self.offenders
            .iter()
            .filter(|o| o.record == kind)
            .map(|o| o.id)
            .collect()
    }
}

/// Caller-supplied check that an image record matches the image it names
/// (file exists, recorded size is right, ...). Returns `true` when it does.
pub type ImageCheck<'a> = &'a dyn Fn(&ImageRecord) -> bool;

pub fn validate(set: &AnnotationSet, image_check: Option<ImageCheck<'_>>) -> ValidationReport {
    let mut offenders = Vec::new();

    let mut id_count: HashMap<u64, usize> = HashMap::new();
    for img in &set.images {
        *id_count.entry(img.id).or_default() += 1;
    }
    let mut images: HashMap<u64, &ImageRecord> = HashMap::new();
    for img in &set.images {
        images.entry(img.id).or_insert(img);
        if id_count[&img.id] > 1 {
            offenders.push(Offender {
                defect: Defect::DuplicateImageId,
                record: RecordKind::Image,
                id: img.id,
            });
        }
        if let Some(check) = image_check {
            if !check(img) {
                offenders.push(Offender {
                    defect: Defect::FailedImageCheck,
                    record: RecordKind::Image,
                    id: img.id,
                });
            }
        }
    }

    let categories: BTreeSet<u64> = set.categories.iter().map(|c| c.id).collect();
    for ann in &set.annotations {
        let mut flag = |defect| {
            offenders.push(Offender {
                defect,
                record: RecordKind::Annotation,
                id: ann.id,
            })
        };
        let [x, y, w, h] = ann.bbox;
        let finite = ann.bbox.iter().all(|v| v.is_finite());
        if !finite || w <= 0.0 || h <= 0.0 {
            flag(Defect::DegenerateBox);
        }
        match images.get(&ann.image_id) {
            None => flag(Defect::OrphanAnnotation),
            Some(img) => {
                let out = x < 0.0 || y < 0.0 || x + w > img.width as f64 || y + h > img.height as f64;
                if finite && out {
                    flag(Defect::OutOfBounds);
                }
            }
        }
        if !categories.contains(&ann.category_id) {
            flag(Defect::UnknownCategory);
        }
    }

    offenders.sort();
    let count = |d: Defect| offenders.iter().filter(|o| o.defect == d).count();
    ValidationReport {
        fingerprint: set.fingerprint(),
        orphan_annotations: count(Defect::OrphanAnnotation),
        duplicate_image_ids: count(Defect::DuplicateImageId),
        out_of_bounds_boxes: count(Defect::OutOfBounds),
        degenerate_boxes: count(Defect::DegenerateBox),
        unknown_categories: count(Defect::UnknownCategory),
        failed_image_check: count(Defect::FailedImageCheck),
        offenders,
    }
}

/// Removes every flagged record. Removing an image also removes all of its
/// annotations. Categories are never removed.
pub fn clean(set: &AnnotationSet, report: &ValidationReport) -> Result<AnnotationSet, DataError> {
    let actual = set.fingerprint();
    if actual != report.fingerprint {
        return Err(DataError::StaleReport {
            report: report.fingerprint.clone(),
            actual,
        });
    }
    let bad_images = report.flagged_images();
    let bad_anns = report.flagged_annotations();
    Ok(AnnotationSet {
        images: set
            .images
            .iter()
            .filter(|i| !bad_images.contains(&i.id))
            .cloned()
            .collect(),
        annotations: set
            .annotations
            .iter()
            .filter(|a| !bad_anns.contains(&a.id) && !bad_images.contains(&a.image_id))
            .cloned()
            .collect(),
        categories: set.categories.clone(),
        extra: set.extra.clone(),
    })
}

/// Mirrors boxes about the vertical center line of an image `image_width` wide.
pub fn hflip_boxes(boxes: &[BBox], image_width: f64) -> Vec<BBox> {
    boxes
        .iter()
        .map(|b| BBox {
            x1: image_width - b.x2,
            y1: b.y1,
            x2: image_width - b.x1,
            y2: b.y2,
        })
        .collect()
}

pub fn scale_boxes(boxes: &[BBox], factor: f64) -> Result<Vec<BBox>, DataError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(DataError::InvalidFactor(factor));
    }
    Ok(boxes
        .iter()
        .map(|b| BBox::from_array(b.to_array().map(|v| v * factor)))
        .collect())
}

/// Adds seeded uniform noise in `[-magnitude, magnitude]` to every corner,
/// clips to `[0, width] × [0, height]` and re-orders the corners.
pub fn jitter_boxes(
    boxes: &[BBox],
    seed: u64,
    magnitude: f64,
    width: f64,
    height: f64,
) -> Result<Vec<BBox>, DataError> {
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(DataError::InvalidMagnitude(magnitude));
    }
    if magnitude == 0.0 {
        return Ok(boxes.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(boxes
        .iter()
        .map(|b| {
            let mut c = b.to_array();
            for (k, v) in c.iter_mut().enumerate() {
                let bound = if k % 2 == 0 { width } else { height };
                *v = (*v + rng.gen_range(-magnitude..=magnitude)).clamp(0.0, bound);
            }
            BBox::from_corners(c[0], c[1], c[2], c[3])
        })
        .collect())
}
