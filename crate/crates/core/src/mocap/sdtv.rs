use alloc::vec;
use alloc::vec::Vec;

use crate::event::Event;

/// Default stack depth.
pub const DEFAULT_DEPTH: usize = 32;

/// Largest storable delta magnitude in microseconds.
pub const MAX_DELTA: u64 = i16::MAX as u64;

/// Signed delta-time volume: per pixel, a cyclic stack of the time since the
/// previous event at that pixel, with the sign carrying the polarity.
#[derive(Clone, Debug, PartialEq)]
pub struct Sdtv {
    width: usize,
    height: usize,
    depth: usize,
    volume: Vec<i16>,
    /// Next write slot per pixel.
    cursor: Vec<u16>,
    /// Number of valid entries per pixel, at most `depth`.
    fill: Vec<u16>,
    last_t: Vec<u64>,
}

impl Sdtv {
    /// Empty volume. Every pixel's reference time starts at `t0`.
    pub fn new(width: usize, height: usize, depth: usize, t0: u64) -> Self {
        assert!(depth > 0 && depth <= u16::MAX as usize, "invalid stack depth");
        let n = width * height;
        Self {
            width,
            height,
            depth,
            volume: vec![0; n * depth],
            cursor: vec![0; n],
            fill: vec![0; n],
            last_t: vec![t0; n],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Push one event. A gap longer than [`MAX_DELTA`] clears the pixel's
    /// stack and only moves its reference time. A zero gap is stored with
    /// magnitude 1 so the polarity survives.
    #[inline]
    pub fn push(&mut self, e: &Event) {
        let i = self.index(e.x as usize, e.y as usize);
        let dt = e.t.saturating_sub(self.last_t[i]);
        self.last_t[i] = e.t;
        if dt > MAX_DELTA {
            self.fill[i] = 0;
            self.cursor[i] = 0;
            return;
        }
        let mag = dt.max(1) as i16;
        let c = self.cursor[i] as usize;
        self.volume[i * self.depth + c] = if e.p > 0 { mag } else { -mag };
        self.cursor[i] = if c + 1 == self.depth { 0 } else { (c + 1) as u16 };
        if (self.fill[i] as usize) < self.depth {
            self.fill[i] += 1;
        }
    }

    /// Apply a time-ordered batch.
    pub fn update(&mut self, events: &[Event]) {
        for e in events {
            self.push(e);
        }
    }

    pub fn len_at(&self, x: usize, y: usize) -> usize {
        self.fill[self.index(x, y)] as usize
    }

    pub fn is_full(&self, x: usize, y: usize) -> bool {
        self.len_at(x, y) == self.depth
    }

    pub fn last_t(&self, x: usize, y: usize) -> u64 {
        self.last_t[self.index(x, y)]
    }

    /// Stored deltas of one pixel, oldest first.
    pub fn stack(&self, x: usize, y: usize) -> Vec<i16> {
        let mut out = Vec::with_capacity(self.depth);
        self.stack_into(x, y, &mut out);
        out
    }

    /// Like [`Sdtv::stack`] but reuses `out`.
    pub fn stack_into(&self, x: usize, y: usize, out: &mut Vec<i16>) {
        out.clear();
        let i = self.index(x, y);
        let n = self.fill[i] as usize;
        let c = self.cursor[i] as usize;
        let base = &self.volume[i * self.depth..(i + 1) * self.depth];
        let start = (c + self.depth - n) % self.depth;
        for k in 0..n {
            out.push(base[(start + k) % self.depth]);
        }
    }

    /// Event times and polarities encoded in a pixel's stack, oldest first.
    /// Exact for the stored events provided no zero gap was clamped.
    pub fn reconstruct(&self, x: usize, y: usize) -> Vec<(u64, i8)> {
        let stack = self.stack(x, y);
        let mut t = self.last_t(x, y);
        let mut out = vec![(0u64, 0i8); stack.len()];
        for (slot, &d) in out.iter_mut().zip(stack.iter()).rev() {
            *slot = (t, if d > 0 { 1 } else { -1 });
            t -= u64::from(d.unsigned_abs());
        }
        out
    }
}
