//! Binary erosion/dilation with rectangular all-one structuring elements.
//! Pixels outside the image count as background. Rectangles are applied as a
//! horizontal pass followed by a vertical pass.

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// All-one rectangle anchored at its center; `height` spans time, `width` frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    height: usize,
    width: usize,
}

impl StructuringElement {
    pub const SQUARE_3: Self = StructuringElement {
        height: 3,
        width: 3,
    };
    /// Three pixels along frequency.
    pub const ROW_3: Self = StructuringElement {
        height: 1,
        width: 3,
    };
    /// Three pixels along time.
    pub const COLUMN_3: Self = StructuringElement {
        height: 3,
        width: 1,
    };

    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::invalid(
                "structuring_element",
                "dimensions must be odd",
            ));
        }
        Ok(StructuringElement { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

/// Axis of the final one-dimensional opening in [`consolidate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpeningAxis {
    #[default]
    Frequency,
    Time,
}

impl OpeningAxis {
    pub fn element(self) -> StructuringElement {
        match self {
            OpeningAxis::Frequency => StructuringElement::ROW_3,
            OpeningAxis::Time => StructuringElement::COLUMN_3,
        }
    }
}

pub fn morphology(mask: &BinaryMask, op: MorphOp, se: StructuringElement) -> BinaryMask {
    let mut m = mask.clone();
    match op {
        MorphOp::Erode => erode_in_place(&mut m, se),
        MorphOp::Dilate => dilate_in_place(&mut m, se),
        MorphOp::Open => {
            erode_in_place(&mut m, se);
            dilate_in_place(&mut m, se);
        }
        MorphOp::Close => {
            dilate_in_place(&mut m, se);
            erode_in_place(&mut m, se);
        }
    }
    m
}

/// Close 3x3, open 3x3, then open with three pixels along `axis`.
pub fn consolidate(mask: &BinaryMask, axis: OpeningAxis) -> BinaryMask {
    let mut m = mask.clone();
    consolidate_in_place(&mut m, axis);
    m
}

pub fn consolidate_in_place(m: &mut BinaryMask, axis: OpeningAxis) {
    let sq = StructuringElement::SQUARE_3;
    dilate_in_place(m, sq);
    erode_in_place(m, sq);
    erode_in_place(m, sq);
    dilate_in_place(m, sq);
    erode_in_place(m, axis.element());
    dilate_in_place(m, axis.element());
}

/// How far (in pixels) a change can propagate through [`consolidate`] along frequency.
pub fn consolidate_reach(axis: OpeningAxis) -> usize {
    match axis {
        OpeningAxis::Frequency => 6,
        OpeningAxis::Time => 4,
    }
}

pub fn erode_in_place(m: &mut BinaryMask, se: StructuringElement) {
    for _ in 0..se.width / 2 {
        horizontal(m, true);
    }
    for _ in 0..se.height / 2 {
        vertical(m, true);
    }
}

pub fn dilate_in_place(m: &mut BinaryMask, se: StructuringElement) {
    for _ in 0..se.width / 2 {
        horizontal(m, false);
    }
    for _ in 0..se.height / 2 {
        vertical(m, false);
    }
}

/// One radius-1 pass along each row: AND (erode) or OR (dilate) of a pixel and its two neighbors.
fn horizontal(m: &mut BinaryMask, erode: bool) {
    let words = m.words_per_row();
    if words == 0 {
        return;
    }
    let tail = m.tail_mask();
    for row in m.bits_mut().chunks_exact_mut(words) {
        let mut prev = 0u64;
        for j in 0..words {
            let cur = row[j];
            let next = if j + 1 < words { row[j + 1] } else { 0 };
            // Column c-1 seen at c, and column c+1 seen at c.
            let left = (cur << 1) | (prev >> 63);
            let right = (cur >> 1) | (next << 63);
            row[j] = if erode {
                cur & left & right
            } else {
                cur | left | right
            };
            prev = cur;
        }
        row[words - 1] &= tail;
    }
}

/// One radius-1 pass along each column.
fn vertical(m: &mut BinaryMask, erode: bool) {
    let (h, words) = (m.height(), m.words_per_row());
    if h == 0 || words == 0 {
        return;
    }
    let bits = m.bits_mut();
    let mut above = vec![0u64; words];
    let mut cur = vec![0u64; words];
    for t in 0..h {
        cur.copy_from_slice(&bits[t * words..(t + 1) * words]);
        for j in 0..words {
            let below = if t + 1 < h {
                bits[(t + 1) * words + j]
            } else {
                0
            };
            bits[t * words + j] = if erode {
                above[j] & cur[j] & below
            } else {
                above[j] | cur[j] | below
            };
        }
        std::mem::swap(&mut above, &mut cur);
    }
}
