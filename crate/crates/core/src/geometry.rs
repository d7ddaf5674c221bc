//! Axis-aligned boxes and the vector primitives used by association and evaluation.
//!
//! All coordinates are image pixels with a top-left origin and `y` growing downward.

use serde::{Deserialize, Serialize};

/// Magnitude below which a displacement vector counts as stationary (pixels).
pub const STATIONARY_EPS: f64 = 1e-6;

/// Axis-aligned rectangle in LTWH form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Shift by `(dx, dy)`; size is unchanged.
    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Overlap area with `other`, 0 when disjoint or touching.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Intersection with the rectangle `[0, width] x [0, height]`, or `None`
    /// when nothing of the box lies inside it.
    pub fn clip_to(&self, width: f64, height: f64) -> Option<BBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        if x1 <= x0 || y1 <= y0 {
            None
        } else {
            Some(BBox::new(x0, y0, x1 - x0, y1 - y0))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

/// Area of `b` in square pixels.
pub fn area(b: &BBox) -> f64 {
    b.area()
}

/// Intersection over union. Two degenerate boxes (union 0) give 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    // areas from the same edge arithmetic as the intersection, so iou(a, a) is exactly 1
    let extent = |r: &BBox| (r.right() - r.x) * (r.bottom() - r.y);
    let union = extent(a) + extent(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).min(1.0)
    }
}

/// Pixel displacement between two positions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub dx: f64,
    pub dy: f64,
}

impl Vec2 {
    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn dot(&self, other: &Vec2) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    /// Top-left corner movement from `first` to `last`.
    pub fn between(first: &BBox, last: &BBox) -> Self {
        Self::new(last.x - first.x, last.y - first.y)
    }
}

/// `1 - cos(angle(u, v))`, in `[0, 2]`.
///
/// Two stationary vectors are at distance 0 so that a static object seen from
/// a hovering camera still matches its label; exactly one stationary vector
/// gives the maximal distance 2.
pub fn cosine_distance(u: &Vec2, v: &Vec2) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    match (nu < STATIONARY_EPS, nv < STATIONARY_EPS) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 2.0,
        (false, false) => {
            let sq = |a: &Vec2| a.dx * a.dx + a.dy * a.dy;
            // one square root keeps identical vectors at exactly zero distance
            let cos = (u.dot(v) / (sq(u) * sq(v)).sqrt()).clamp(-1.0, 1.0);
            1.0 - cos
        }
    }
}
