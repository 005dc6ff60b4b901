//! Greedy NMS over a cluster of overlapping detections, then cascade
//! labeling of proposals at increasing IoU thresholds.
//!
//! `cargo run --example nms_and_cascade`

use detkit::assign::{cascade_assign, nms, CascadeConfig, Detection, Label};
use detkit::eval::GroundTruth;
use detkit::geometry::BBox;

fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
    BBox::new(x1, y1, x2, y2).unwrap()
}

pub fn run() -> String {
    let dets = vec![
        Detection::new(bb(10.0, 10.0, 60.0, 60.0), 0.95, 1, 0),
        Detection::new(bb(12.0, 12.0, 62.0, 58.0), 0.90, 1, 0),
        Detection::new(bb(30.0, 30.0, 80.0, 80.0), 0.80, 1, 0),
        Detection::new(bb(11.0, 9.0, 61.0, 61.0), 0.70, 2, 0),
        Detection::new(bb(100.0, 100.0, 140.0, 150.0), 0.60, 1, 0),
    ];
    let mut out = String::new();
    for (t, aware) in [(0.5, true), (0.5, false), (0.3, true)] {
        let kept = nms(&dets, t, aware).unwrap();
        let scores: Vec<String> = kept.iter().map(|d| format!("{:.2}", d.score)).collect();
        out.push_str(&format!(
            "nms t={t} class_aware={aware}: kept scores [{}]\n",
            scores.join(", ")
        ));
    }

    let gts = [GroundTruth::new(bb(0.0, 0.0, 20.0, 20.0), 1, 0)];
    let proposals = [
        bb(0.0, 0.0, 20.0, 18.0),
        bb(0.0, 0.0, 20.0, 13.0),
        bb(2.0, 2.0, 22.0, 22.0),
        bb(8.0, 8.0, 28.0, 28.0),
    ];
    for stage in cascade_assign(&proposals, &gts, &CascadeConfig::default()).unwrap() {
        let labels: Vec<&str> = stage
            .labels
            .iter()
            .map(|l| match l {
                Label::Positive(_) => "pos",
                Label::Negative => "neg",
            })
            .collect();
        out.push_str(&format!(
            "stage t={:.1}: {} positives [{}]\n",
            stage.threshold,
            stage.num_positive(),
            labels.join(" ")
        ));
    }
    out
}

fn main() {
    print!("{}", run());
}
