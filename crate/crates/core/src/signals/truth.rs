//! Ground-truth annotation documents.
//!
//! Layout (JSON):
//!
//! ```json
//! { "boxes": [ { "label": "ofdm-like",
//!                "t_start_s": 0.001, "t_end_s": 0.002,
//!                "f_start_hz": -1e6, "f_end_hz": 1e6 } ] }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SignalKind;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// One box per synthesized signal, with `labels[i]` naming the kind of `boxes[i]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub boxes: Vec<BoundingBox>,
    pub labels: Vec<SignalKind>,
}

impl GroundTruth {
    pub fn push(&mut self, b: BoundingBox, label: SignalKind) {
        self.boxes.push(b);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Boxes restricted to `[t0, t1]`; boxes outside the window are dropped.
    pub fn clip_time(&self, t0: f64, t1: f64) -> GroundTruth {
        let mut out = GroundTruth::default();
        for (b, &l) in self.boxes.iter().zip(&self.labels) {
            if let Some(c) = b.clip_time(t0, t1) {
                out.push(c, l);
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    boxes: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    label: SignalKind,
    t_start_s: f64,
    t_end_s: f64,
    f_start_hz: f64,
    f_end_hz: f64,
}

pub fn write_gt_string(gt: &GroundTruth) -> String {
    let doc = Document {
        boxes: gt
            .boxes
            .iter()
            .zip(&gt.labels)
            .map(|(b, &label)| Record {
                label,
                t_start_s: b.t0,
                t_end_s: b.t1,
                f_start_hz: b.f0,
                f_end_hz: b.f1,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("ground truth serializes")
}

pub fn read_gt_str(text: &str) -> Result<GroundTruth> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut gt = GroundTruth::default();
    for r in doc.boxes {
        gt.push(
            BoundingBox::new(r.f_start_hz, r.f_end_hz, r.t_start_s, r.t_end_s),
            r.label,
        );
    }
    Ok(gt)
}

pub fn write_gt(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    fs::write(path, write_gt_string(gt))?;
    Ok(())
}

pub fn read_gt(path: impl AsRef<Path>) -> Result<GroundTruth> {
    read_gt_str(&fs::read_to_string(path)?)
}
