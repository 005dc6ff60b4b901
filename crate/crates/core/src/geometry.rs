//! Axis-aligned bounding-box algebra.
//!
//! Boxes are stored in corner form `(x1, y1, x2, y2)` with continuous pixel
//! coordinates (no `+1` pixel-grid convention). COCO `[x, y, w, h]` boxes are
//! converted with [`BBox::from_xywh`] / [`BBox::to_xywh`] at I/O boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid box ({x1}, {y1}, {x2}, {y2}): expected finite corners with x1 <= x2 and y1 <= y2")]
    InvalidCorners { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("invalid box size w={w}, h={h}: width and height must be finite and non-negative")]
    InvalidSize { w: f64, h: f64 },
}

/// Axis-aligned box in corner form.
///
/// Fields are public so callers can build boxes in bulk; [`BBox::new`] and
/// [`BBox::is_valid`] enforce `x1 <= x2`, `y1 <= y2`. Zero-area boxes are valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        let b = BBox { x1, y1, x2, y2 };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(GeometryError::InvalidCorners { x1, y1, x2, y2 })
        }
    }

    /// Builds a box from two arbitrary corner points, ordering each axis.
    pub fn from_corners(xa: f64, ya: f64, xb: f64, yb: f64) -> Self {
        BBox {
            x1: xa.min(xb),
            y1: ya.min(yb),
            x2: xa.max(xb),
            y2: ya.max(yb),
        }
    }

    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(w >= 0.0 && h >= 0.0 && w.is_finite() && h.is_finite()) {
            return Err(GeometryError::InvalidSize { w, h });
        }
        BBox::new(x, y, x + w, y + h)
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x1, self.y1, self.width(), self.height()]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        BBox {
            x1: c[0],
            y1: c[1],
            x2: c[2],
            y2: c[3],
        }
    }

    pub fn is_valid(&self) -> bool {
        let finite = self.to_array().iter().all(|v| v.is_finite());
        finite && self.x1 <= self.x2 && self.y1 <= self.y2
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        BBox {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// True when `other` lies inside `self` (boundaries included).
    pub fn contains(&self, other: &BBox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }
}

#[inline]
pub fn area(b: &BBox) -> f64 {
    b.width() * b.height()
}

/// Area of the overlap of `a` and `b`, zero when they do not overlap.
#[inline]
pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    w * h
}

/// Intersection over union. Defined as 0 when the union has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Smallest box covering both inputs.
pub fn enclosing_box(a: &BBox, b: &BBox) -> BBox {
    BBox {
        x1: a.x1.min(b.x1),
        y1: a.y1.min(b.y1),
        x2: a.x2.max(b.x2),
        y2: a.y2.max(b.y2),
    }
}

/// Squared Euclidean distance between box centers.
pub fn center_distance_sq(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).powi(2) + (ay - by).powi(2)
}

/// Squared diagonal length of `b`.
pub fn diagonal_sq(b: &BBox) -> f64 {
    b.width().powi(2) + b.height().powi(2)
}
