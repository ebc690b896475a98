use alloc::vec;
use alloc::vec::Vec;

use super::{Event, EventStream};

/// Signed polarity accumulation over one time window, spatially binned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventFrame {
    pub width: usize,
    pub height: usize,
    /// 1-based window index; the window covers `[(k-1)·dt, k·dt)`.
    pub k: u64,
    /// Window length in microseconds.
    pub dt: u64,
    pub bin: u32,
    pub data: Vec<i32>,
}

impl EventFrame {
    pub fn zeros(width: usize, height: usize, k: u64, dt: u64, bin: u32) -> Self {
        Self {
            width,
            height,
            k,
            dt,
            bin,
            data: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.data[y * self.width + x]
    }

    /// Σ |I(px)| over the frame.
    pub fn abs_sum(&self) -> u64 {
        self.data.iter().map(|v| v.unsigned_abs() as u64).sum()
    }

    /// Window bounds `[start, end)` in microseconds.
    pub fn window(&self) -> (u64, u64) {
        ((self.k - 1) * self.dt, self.k * self.dt)
    }
}

/// Binned frame dimensions for a sensor; partial bins at the right/bottom
/// edge are kept.
pub fn binned_dims(width: u32, height: u32, bin: u32) -> (usize, usize) {
    let bin = bin.max(1);
    (width.div_ceil(bin) as usize, height.div_ceil(bin) as usize)
}

/// Lazily produces consecutive frames `k = 1, 2, ...` until the window
/// containing the last event. Windows with no events are still emitted.
pub struct FrameIter<'a> {
    events: &'a [Event],
    cursor: usize,
    width: usize,
    height: usize,
    dt: u64,
    bin: u32,
    next_k: u64,
    last_k: u64,
}

impl<'a> FrameIter<'a> {
    pub fn new(stream: &'a EventStream, dt: u64, bin: u32) -> Self {
        assert!(dt > 0, "frame period must be positive");
        assert!(bin >= 1, "binning factor must be at least 1");
        let (width, height) = binned_dims(stream.width, stream.height, bin);
        let last_k = stream.events.last().map_or(0, |e| e.t / dt + 1);
        Self {
            events: &stream.events,
            cursor: 0,
            width,
            height,
            dt,
            bin,
            next_k: 1,
            last_k,
        }
    }

    /// Number of frames the iterator will yield in total.
    pub fn frame_count(&self) -> u64 {
        self.last_k
    }
}

impl Iterator for FrameIter<'_> {
    type Item = EventFrame;

    fn next(&mut self) -> Option<EventFrame> {
        if self.next_k > self.last_k {
            return None;
        }
        let k = self.next_k;
        self.next_k += 1;
        let end = k * self.dt;
        let mut frame = EventFrame::zeros(self.width, self.height, k, self.dt, self.bin);
        let bin = self.bin as usize;
        while let Some(e) = self.events.get(self.cursor) {
            if e.t >= end {
                break;
            }
            let x = e.x as usize / bin;
            let y = e.y as usize / bin;
            frame.data[y * self.width + x] += i32::from(e.p);
            self.cursor += 1;
        }
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.last_k + 1 - self.next_k) as usize;
        (n, Some(n))
    }
}

/// Bin a time-ordered stream into frames of period `dt` µs. Events with
/// `t = k·dt` fall into frame `k + 1`. An empty stream yields no frames.
pub fn bin_and_frame(stream: &EventStream, dt: u64, bin: u32) -> Vec<EventFrame> {
    FrameIter::new(stream, dt, bin).collect()
}
