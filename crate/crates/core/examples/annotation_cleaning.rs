//! Validates a synthetic annotation set containing several kinds of defects
//! and images that fail an external check, cleans it, and shows the result
//! revalidates clean. Also applies the box-space augmentations.
//!
//! `cargo run --example annotation_cleaning`

use std::collections::BTreeMap;

use detkit::dataio::{
    clean, hflip_boxes, jitter_boxes, scale_boxes, validate, AnnotationRecord, AnnotationSet, CategoryRecord,
    ImageRecord,
};
use detkit::geometry::BBox;

fn synthetic() -> AnnotationSet {
    let mut set = AnnotationSet {
        categories: vec![CategoryRecord {
            id: 1,
            name: "object".into(),
            extra: BTreeMap::new(),
        }],
        ..Default::default()
    };
    for i in 0..40u64 {
        set.images.push(ImageRecord {
            id: i,
            file_name: format!("{i:04}.jpg"),
            width: 320,
            height: 240,
            extra: BTreeMap::new(),
        });
        set.annotations.push(AnnotationRecord {
            id: i,
            image_id: i,
            category_id: 1,
            bbox: [20.0 + i as f64, 30.0, 60.0, 40.0],
            area: None,
            iscrowd: None,
            extra: BTreeMap::new(),
        });
    }
    set.annotations[3].bbox = [300.0, 30.0, 60.0, 40.0];
    set.annotations[5].bbox[3] = 0.0;
    set.annotations[7].category_id = 9;
    set.annotations[9].image_id = 999;
    set
}

pub fn run() -> String {
    let set = synthetic();
    // stand-in for "the image file decodes and matches its declared size"
    let check = |img: &ImageRecord| img.id % 10 != 1;
    let report = validate(&set, Some(&check));
    let mut out = format!(
        "orphans={} duplicates={} out_of_bounds={} degenerate={} unknown_category={} failed_check={}\n",
        report.orphan_annotations,
        report.duplicate_image_ids,
        report.out_of_bounds_boxes,
        report.degenerate_boxes,
        report.unknown_categories,
        report.failed_image_check
    );
    let cleaned = clean(&set, &report).unwrap();
    out.push_str(&format!(
        "cleaned: {} -> {} images, {} -> {} annotations, clean now: {}\n",
        set.images.len(),
        cleaned.images.len(),
        set.annotations.len(),
        cleaned.annotations.len(),
        validate(&cleaned, Some(&check)).is_clean()
    ));

    let boxes = [BBox::new(10.0, 20.0, 50.0, 60.0).unwrap()];
    let flipped = hflip_boxes(&boxes, 320.0);
    let scaled = scale_boxes(&boxes, 1.5).unwrap();
    let jittered = jitter_boxes(&boxes, 42, 2.0, 320.0, 240.0).unwrap();
    out.push_str(&format!(
        "hflip {:?}\nscale {:?}\njitter {:?}\n",
        flipped[0].to_array(),
        scaled[0].to_array(),
        jittered[0].to_array()
    ));
    out
}

fn main() {
    print!("{}", run());
}
