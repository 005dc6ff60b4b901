//! IoU, enclosing box and center distance for a few box pairs.
//!
//! `cargo run --example box_geometry`

use detkit::geometry::{self, BBox};

pub fn run() -> String {
    let gt = BBox::new(10.0, 10.0, 50.0, 40.0).unwrap();
    let cases = [
        ("shifted", gt.translate(8.0, 4.0)),
        ("nested", BBox::new(20.0, 15.0, 40.0, 35.0).unwrap()),
        ("disjoint", BBox::new(70.0, 60.0, 90.0, 80.0).unwrap()),
        ("identical", gt),
    ];
    let mut out = format!("{:<10} {:>8} {:>10} {:>10}\n", "pair", "iou", "rho^2", "c^2");
    for (name, pred) in cases {
        let hull = geometry::enclosing_box(&pred, &gt);
        out.push_str(&format!(
            "{:<10} {:>8.4} {:>10.2} {:>10.2}\n",
            name,
            geometry::iou(&pred, &gt),
            geometry::center_distance_sq(&pred, &gt),
            geometry::diagonal_sq(&hull),
        ));
    }
    out
}

fn main() {
    print!("{}", run());
}
