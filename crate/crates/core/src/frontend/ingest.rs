use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufReader, ErrorKind, Read};
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex32;

use super::IqChunk;
use crate::error::{Error, Result};
use crate::signals::{decode_samples, encode_samples, SampleFormat};

/// Bytes of little-endian sequence number in front of every datagram payload.
pub const HEADER_BYTES: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IngestStats {
    pub chunks: u64,
    /// Payload bytes consumed, excluding datagram headers.
    pub bytes: u64,
    pub lost_chunks: u64,
    /// Datagrams that arrived with an already-consumed sequence number.
    pub late_datagrams: u64,
    /// Whole samples at the end of the input that did not fill a chunk.
    pub tail_samples: u64,
    pub elapsed: Duration,
}

impl IngestStats {
    /// Achieved ingest rate in bits per second.
    pub fn rate_bps(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.bytes as f64 * 8.0 / s
        } else {
            0.0
        }
    }
}

/// Splits an in-memory sample buffer into chunks; a short tail is dropped.
pub fn chunk_samples(samples: &[Complex32], n_fft: usize) -> impl Iterator<Item = IqChunk> + '_ {
    samples
        .chunks_exact(n_fft)
        .enumerate()
        .map(|(i, c)| IqChunk {
            seq: i as u64,
            samples: c.to_vec(),
        })
}

/// Replays an interleaved I/Q byte stream as chunks, optionally paced to the sample rate.
pub struct FileSource<R> {
    reader: R,
    format: SampleFormat,
    n_fft: usize,
    pace_fs: Option<f64>,
    buf: Vec<u8>,
    next_seq: u64,
    started: Option<Instant>,
    stats: IngestStats,
    done: bool,
}

impl FileSource<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, format: SampleFormat, n_fft: usize) -> Result<Self> {
        Ok(Self::new(BufReader::new(File::open(path)?), format, n_fft))
    }
}

impl<R: Read> FileSource<R> {
    pub fn new(reader: R, format: SampleFormat, n_fft: usize) -> Self {
        FileSource {
            reader,
            format,
            n_fft,
            pace_fs: None,
            buf: vec![0; n_fft * format.bytes_per_sample()],
            next_seq: 0,
            started: None,
            stats: IngestStats::default(),
            done: false,
        }
    }

    /// Releases each chunk no earlier than its last sample would arrive at `fs`.
    pub fn paced(mut self, fs: f64) -> Self {
        self.pace_fs = Some(fs);
        self
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn fill(&mut self) -> io::Result<usize> {
        let mut got = 0;
        while got < self.buf.len() {
            match self.reader.read(&mut self.buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(got)
    }
}

impl<R: Read> Iterator for FileSource<R> {
    type Item = Result<IqChunk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let started = *self.started.get_or_insert_with(Instant::now);
        let got = match self.fill() {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        let bps = self.format.bytes_per_sample();
        if got < self.buf.len() {
            self.done = true;
            self.stats.elapsed = started.elapsed();
            if got % bps != 0 {
                return Some(Err(Error::Format(format!(
                    "input ends with a partial sample ({} stray bytes)",
                    got % bps
                ))));
            }
            self.stats.tail_samples = (got / bps) as u64;
            return None;
        }
        if let Some(fs) = self.pace_fs {
            let due = Duration::from_secs_f64((self.next_seq + 1) as f64 * self.n_fft as f64 / fs);
            if let Some(wait) = due.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        let samples = match decode_samples(&self.buf, self.format) {
            Ok(s) => s,
            Err(e) => return Some(Err(e)),
        };
        let chunk = IqChunk {
            seq: self.next_seq,
            samples,
        };
        self.next_seq += 1;
        self.stats.chunks += 1;
        self.stats.bytes += got as u64;
        self.stats.elapsed = started.elapsed();
        Some(Ok(chunk))
    }
}

/// Datagram layout: an 8-byte little-endian datagram sequence number followed by
/// `samples_per_datagram` interleaved samples. A header with no payload ends the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatagramConfig {
    pub format: SampleFormat,
    pub samples_per_datagram: usize,
}

impl DatagramConfig {
    /// One chunk per datagram.
    pub fn per_chunk(n_fft: usize, format: SampleFormat) -> Self {
        DatagramConfig {
            format,
            samples_per_datagram: n_fft,
        }
    }

    pub fn payload_bytes(&self) -> usize {
        self.samples_per_datagram * self.format.bytes_per_sample()
    }

    fn check(&self, n_fft: usize) -> Result<()> {
        let s = self.samples_per_datagram;
        if s == 0 || !n_fft.is_multiple_of(s) {
            return Err(Error::invalid(
                "samples_per_datagram",
                format!("must divide the FFT size {n_fft}"),
            ));
        }
        if HEADER_BYTES + self.payload_bytes() > 65_507 {
            return Err(Error::invalid(
                "samples_per_datagram",
                "datagram exceeds UDP maximum",
            ));
        }
        Ok(())
    }
}

/// Receives sequenced datagrams and regroups them into gap-free chunks.
///
/// A sequence jump yields one `Err(Overrun)` with the number of chunks that can no
/// longer be completed, then chunking resumes at the next chunk boundary.
pub struct UdpSource {
    socket: UdpSocket,
    cfg: DatagramConfig,
    n_fft: usize,
    recv: Vec<u8>,
    /// Sample index of `partial[0]`.
    chunk_start: u64,
    partial: Vec<Complex32>,
    ready: VecDeque<Result<IqChunk>>,
    started: Option<Instant>,
    stats: IngestStats,
    done: bool,
}

impl UdpSource {
    /// Binds a listener. The stream ends on an end marker or after `idle` without traffic.
    pub fn bind(
        addr: impl ToSocketAddrs,
        n_fft: usize,
        cfg: DatagramConfig,
        idle: Option<Duration>,
    ) -> Result<Self> {
        cfg.check(n_fft)?;
        let socket = UdpSocket::bind(addr)?;
        socket.set_read_timeout(idle)?;
        Ok(UdpSource {
            socket,
            cfg,
            n_fft,
            recv: vec![0; HEADER_BYTES + cfg.payload_bytes() + 1],
            chunk_start: 0,
            partial: Vec::with_capacity(n_fft),
            ready: VecDeque::new(),
            started: None,
            stats: IngestStats::default(),
            done: false,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn accept(&mut self, len: usize) {
        let bps = self.cfg.format.bytes_per_sample();
        let spd = self.cfg.samples_per_datagram as u64;
        let n = self.n_fft as u64;
        if len < HEADER_BYTES {
            self.ready.push_back(Err(Error::Framing(format!(
                "datagram of {len} bytes has no sequence header"
            ))));
            return;
        }
        let seq = u64::from_le_bytes(self.recv[..HEADER_BYTES].try_into().expect("8 bytes"));
        let payload = &self.recv[HEADER_BYTES..len];
        if payload.is_empty() {
            self.done = true;
            return;
        }
        if payload.len() != self.cfg.payload_bytes() {
            self.ready.push_back(Err(Error::Framing(format!(
                "datagram {seq} carries {} payload bytes, expected {}",
                payload.len(),
                self.cfg.payload_bytes()
            ))));
            return;
        }
        let first = seq * spd;
        let expected = self.chunk_start + self.partial.len() as u64;
        if first + spd <= expected {
            self.stats.late_datagrams += 1;
            return;
        }
        let mut skip = 0usize;
        if first > expected {
            let resume = first.div_ceil(n) * n;
            let lost = resume / n - self.chunk_start / n;
            self.partial.clear();
            self.chunk_start = resume;
            skip = (resume - first) as usize;
            self.stats.lost_chunks += lost;
            self.ready
                .push_back(Err(Error::Overrun { lost_chunks: lost }));
            if skip >= spd as usize {
                return;
            }
        }
        self.stats.bytes += payload.len() as u64;
        let samples = match decode_samples(&payload[skip * bps..], self.cfg.format) {
            Ok(s) => s,
            Err(e) => {
                self.ready.push_back(Err(e));
                return;
            }
        };
        for s in samples {
            self.partial.push(s);
            if self.partial.len() == self.n_fft {
                let chunk = IqChunk {
                    seq: self.chunk_start / n,
                    samples: std::mem::replace(&mut self.partial, Vec::with_capacity(self.n_fft)),
                };
                self.chunk_start += n;
                self.stats.chunks += 1;
                self.ready.push_back(Ok(chunk));
            }
        }
    }
}

impl Iterator for UdpSource {
    type Item = Result<IqChunk>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(item) = self.ready.pop_front() {
                return Some(item);
            }
            if self.done {
                return None;
            }
            let r = self.socket.recv(&mut self.recv);
            let started = *self.started.get_or_insert_with(Instant::now);
            match r {
                Ok(len) => {
                    self.accept(len);
                    self.stats.elapsed = started.elapsed();
                }
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    self.done = true;
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
    }
}

/// Sends `samples` as sequenced datagrams followed by an end marker. An incomplete
/// final datagram is not sent. With `pace_fs` each datagram leaves no earlier than
/// its last sample would at that rate. Returns the number of data datagrams sent.
pub fn send_datagrams(
    socket: &UdpSocket,
    dest: impl ToSocketAddrs + Copy,
    samples: &[Complex32],
    cfg: DatagramConfig,
    pace_fs: Option<f64>,
) -> Result<u64> {
    let spd = cfg.samples_per_datagram;
    if spd == 0 {
        return Err(Error::invalid("samples_per_datagram", "must be positive"));
    }
    let start = Instant::now();
    let mut packet = Vec::with_capacity(HEADER_BYTES + cfg.payload_bytes());
    let mut sent = 0u64;
    for block in samples.chunks_exact(spd) {
        if let Some(fs) = pace_fs {
            let due = Duration::from_secs_f64((sent + 1) as f64 * spd as f64 / fs);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        packet.clear();
        packet.extend_from_slice(&sent.to_le_bytes());
        packet.extend_from_slice(&encode_samples(block, cfg.format));
        socket.send_to(&packet, dest)?;
        sent += 1;
    }
    // The end marker is repeated in case one copy is lost.
    for _ in 0..3 {
        socket.send_to(&sent.to_le_bytes(), dest)?;
    }
    Ok(sent)
}
