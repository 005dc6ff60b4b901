//! Builds a small COCO-format ground truth and detection set in memory and
//! scores it with the evaluator, printing the metric table.
//!
//! `cargo run --example coco_eval`

use detkit::dataio::{parse_annotations, ResultRecord};
use detkit::eval::{evaluate_coco, EvalConfig};

const GT: &str = r#"{
  "images": [
    {"id": 1, "file_name": "a.jpg", "width": 200, "height": 200},
    {"id": 2, "file_name": "b.jpg", "width": 200, "height": 200}
  ],
  "annotations": [
    {"id": 1, "image_id": 1, "category_id": 1, "bbox": [10, 10, 20, 20], "area": 400, "iscrowd": 0},
    {"id": 2, "image_id": 1, "category_id": 1, "bbox": [60, 60, 60, 50], "area": 3000, "iscrowd": 0},
    {"id": 3, "image_id": 2, "category_id": 2, "bbox": [0, 0, 150, 120], "area": 18000, "iscrowd": 0},
    {"id": 4, "image_id": 2, "category_id": 1, "bbox": [160, 20, 30, 40], "area": 1200, "iscrowd": 0}
  ],
  "categories": [{"id": 1, "name": "person"}, {"id": 2, "name": "car"}]
}"#;

fn det(image_id: u64, category_id: u64, bbox: [f64; 4], score: f64) -> ResultRecord {
    ResultRecord {
        image_id,
        category_id,
        bbox,
        score,
    }
}

pub fn run() -> String {
    let gt = parse_annotations(GT).unwrap();
    let dets = vec![
        det(1, 1, [11.0, 10.0, 20.0, 21.0], 0.9),
        det(1, 1, [62.0, 58.0, 58.0, 52.0], 0.8),
        det(1, 1, [100.0, 150.0, 30.0, 30.0], 0.7),
        det(2, 2, [5.0, 0.0, 140.0, 118.0], 0.95),
        det(2, 1, [150.0, 30.0, 30.0, 40.0], 0.4),
    ];
    let report = evaluate_coco(&gt, &dets, &EvalConfig::default()).unwrap();
    let perfect: Vec<ResultRecord> = gt
        .annotations
        .iter()
        .map(|a| det(a.image_id, a.category_id, a.bbox, 1.0))
        .collect();
    let ideal = evaluate_coco(&gt, &perfect, &EvalConfig::default()).unwrap();
    format!(
        "detections\n{}ground truth as detections\n{}",
        report.to_table(),
        ideal.to_table()
    )
}

fn main() {
    print!("{}", run());
}
