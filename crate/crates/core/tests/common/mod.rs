#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use detkit::dataio::{AnnotationRecord, AnnotationSet, CategoryRecord, ImageRecord, ResultRecord};

pub fn detkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// `n` 640×480 images with two valid boxes each, one category.
pub fn synthetic_set(n: u64) -> AnnotationSet {
    let mut set = AnnotationSet {
        categories: vec![CategoryRecord {
            id: 1,
            name: "thing".into(),
            extra: BTreeMap::new(),
        }],
        ..Default::default()
    };
    for i in 0..n {
        set.images.push(ImageRecord {
            id: i,
            file_name: format!("{i:05}.jpg"),
            width: 640,
            height: 480,
            extra: BTreeMap::new(),
        });
        for k in 0..2 {
            set.annotations.push(AnnotationRecord {
                id: i * 10 + k,
                image_id: i,
                category_id: 1,
                bbox: [
                    15.0 + 40.0 * k as f64 + i as f64,
                    20.0,
                    30.0 + k as f64 * 70.0,
                    25.0 + i as f64,
                ],
                area: None,
                iscrowd: Some(0),
                extra: BTreeMap::new(),
            });
        }
    }
    set
}

/// Ids of the 30 images treated as corrupted in the 120-image scenario.
pub fn corrupt_ids() -> Vec<u64> {
    (0..120).filter(|i| i % 4 == 1).collect()
}

/// Writes one small file per image under `root`, leaving the corrupted ones
/// empty (a truncated download) or missing.
pub fn write_image_files(set: &AnnotationSet, root: &Path, corrupt: &[u64]) {
    std::fs::create_dir_all(root).unwrap();
    for img in &set.images {
        let path = root.join(&img.file_name);
        match corrupt.iter().position(|c| *c == img.id) {
            Some(k) if k % 2 == 0 => std::fs::write(path, b"").unwrap(),
            Some(_) => {}
            None => std::fs::write(path, b"\xff\xd8jpeg").unwrap(),
        }
    }
}

/// Every ground-truth box returned as a score-1 detection.
pub fn perfect_results(set: &AnnotationSet) -> Vec<ResultRecord> {
    set.annotations
        .iter()
        .map(|a| ResultRecord {
            image_id: a.image_id,
            category_id: a.category_id,
            bbox: a.bbox,
            score: 1.0,
        })
        .collect()
}

/// A micro-dataset with mixed quality detections across three images.
pub fn micro_dataset() -> (AnnotationSet, Vec<ResultRecord>) {
    let mut set = synthetic_set(3);
    set.categories.push(CategoryRecord {
        id: 2,
        name: "other".into(),
        extra: BTreeMap::new(),
    });
    set.annotations[1].category_id = 2;
    let mut dets = perfect_results(&set);
    for (k, d) in dets.iter_mut().enumerate() {
        d.score = 0.3 + 0.1 * k as f64;
        d.bbox[0] += k as f64 * 1.7;
    }
    dets.push(ResultRecord {
        image_id: 2,
        category_id: 1,
        bbox: [300.0, 300.0, 50.0, 50.0],
        score: 0.95,
    });
    (set, dets)
}
