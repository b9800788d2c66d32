//! Detection CSV: one row per box, `plot_index,t0_s,t1_s,f0_hz,f1_hz`.

use std::io::{Read, Write};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use specsense::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub plot_index: u64,
    pub t0_s: f64,
    pub t1_s: f64,
    pub f0_hz: f64,
    pub f1_hz: f64,
}

impl DetectionRow {
    pub fn new(plot_index: u64, b: &BoundingBox) -> Self {
        DetectionRow {
            plot_index,
            t0_s: b.t0,
            t1_s: b.t1,
            f0_hz: b.f0,
            f1_hz: b.f1,
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::new(self.f0_hz, self.f1_hz, self.t0_s, self.t1_s)
    }
}

pub const HEADER: [&str; 5] = ["plot_index", "t0_s", "t1_s", "f0_hz", "f1_hz"];

/// Streams rows; the header is written even if no row follows.
pub struct DetectionWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DetectionWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record(HEADER)?;
        Ok(DetectionWriter { inner })
    }

    pub fn write(&mut self, row: &DetectionRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_detections(r: impl Read) -> Result<Vec<DetectionRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    anyhow::ensure!(
        headers.iter().eq(HEADER),
        "detection CSV header is `{}`, expected `{}`",
        headers.iter().collect::<Vec<_>>().join(","),
        HEADER.join(",")
    );
    rd.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("detection CSV row {}", i + 2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_has_a_header() {
        let mut buf = Vec::new();
        DetectionWriter::new(&mut buf).unwrap().finish().unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "plot_index,t0_s,t1_s,f0_hz,f1_hz\n");
        assert!(read_detections(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn rows_round_trip() {
        let rows = [
            DetectionRow::new(0, &BoundingBox::new(-1.5e6, 2.0e6, 0.0, 1e-3)),
            DetectionRow::new(3, &BoundingBox::new(10.0, 20.0, 0.5, 0.75)),
        ];
        let mut buf = Vec::new();
        let mut w = DetectionWriter::new(&mut buf).unwrap();
        rows.iter().for_each(|r| w.write(r).unwrap());
        w.finish().unwrap();
        assert_eq!(read_detections(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_detections("a,b\n1,2\n".as_bytes()).is_err());
    }
}
