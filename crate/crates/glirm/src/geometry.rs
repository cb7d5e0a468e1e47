//! Axis-aligned bounding boxes in pixel coordinates, origin top-left.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Axis-aligned rectangle with `x0 <= x1` and `y0 <= y1`.
///
/// Serialized on the wire as a four-element array `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    /// Builds a box, returning `None` when the corners are inverted or any
    /// coordinate is not finite.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Option<Self> {
        let all_finite =
            x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite();
        if all_finite && x0 <= x1 && y0 <= y1 {
            Some(BBox { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Vertical center of the box.
    pub fn center_y(&self) -> f64 {
        (self.y0 + self.y1) / 2.0
    }

    /// Intersection rectangle, or `None` when the boxes do not overlap.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 <= x1 && y0 <= y1 {
            Some(BBox { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    /// Smallest box covering both operands.
    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    /// Intersection-over-union. Zero when the union has zero area.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = match self.intersection(other) {
            Some(b) => b.area(),
            None => return 0.0,
        };
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            // Two degenerate (zero-area) boxes: identical boxes count as a
            // full match, anything else as a miss.
            return if self == other { 1.0 } else { 0.0 };
        }
        inter / union
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.x0, self.y0, self.x1, self.y1].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coords = <[f64; 4]>::deserialize(deserializer)?;
        BBox::new(coords[0], coords[1], coords[2], coords[3]).ok_or_else(|| {
            D::Error::custom(format!(
                "invalid bbox [{}, {}, {}, {}]: corners inverted or not finite",
                coords[0], coords[1], coords[2], coords[3]
            ))
        })
    }
}
