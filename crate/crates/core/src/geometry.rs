use serde::{Deserialize, Serialize};

/// A time-frequency rectangle in physical units.
///
/// Frequencies are baseband-relative Hz, times are seconds since the start of
/// the stream. The rectangle is closed: `[f0, f1] x [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub f0: f64,
    pub f1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl BoundingBox {
    pub fn new(f0: f64, f1: f64, t0: f64, t1: f64) -> Self {
        Self { f0, f1, t0, t1 }
    }

    pub fn bandwidth(&self) -> f64 {
        (self.f1 - self.f0).max(0.0)
    }

    pub fn duration(&self) -> f64 {
        (self.t1 - self.t0).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.bandwidth() * self.duration()
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let f0 = self.f0.max(other.f0);
        let f1 = self.f1.min(other.f1);
        let t0 = self.t0.max(other.t0);
        let t1 = self.t1.min(other.t1);
        (f0 < f1 && t0 < t1).then_some(BoundingBox { f0, f1, t0, t1 })
    }

    /// Restricts the box to the time window `[t0, t1]`, if they overlap.
    pub fn clip_time(&self, t0: f64, t1: f64) -> Option<BoundingBox> {
        let lo = self.t0.max(t0);
        let hi = self.t1.min(t1);
        (lo < hi).then_some(BoundingBox {
            t0: lo,
            t1: hi,
            ..*self
        })
    }
}

/// A rectangle in plot bin indices, half-open on both axes: rows
/// `t0..t1`, columns `f0..f1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinBox {
    pub t0: usize,
    pub t1: usize,
    pub f0: usize,
    pub f1: usize,
}

impl BinBox {
    pub fn area(&self) -> usize {
        (self.t1 - self.t0) * (self.f1 - self.f0)
    }

    pub fn overlaps(&self, other: &BinBox) -> bool {
        self.t0 < other.t1 && other.t0 < self.t1 && self.f0 < other.f1 && other.f0 < self.f1
    }

    pub fn union(&self, other: &BinBox) -> BinBox {
        BinBox {
            t0: self.t0.min(other.t0),
            t1: self.t1.max(other.t1),
            f0: self.f0.min(other.f0),
            f1: self.f1.max(other.f1),
        }
    }

    /// IoU on bin cells, for debugging against the physical-unit metric.
    pub fn iou(&self, other: &BinBox) -> f64 {
        let t = self.t1.min(other.t1).saturating_sub(self.t0.max(other.t0));
        let f = self.f1.min(other.f1).saturating_sub(self.f0.max(other.f0));
        let inter = (t * f) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if self.area() == 0 || other.area() == 0 || union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}
