//! Event data model, binary record codec, validation and framing.

mod codec;
mod frame;

use alloc::vec::Vec;

pub use codec::{decode, encode, encoded_len, DecodeError, HEADER_LEN, MAGIC, RECORD_LEN};
pub use frame::{bin_and_frame, binned_dims, EventFrame, FrameIter};

/// A single polarity event.
///
/// `p` is kept as the raw signed byte so that invalid polarities survive a
/// round trip into [`validate_stream`]; well-formed events carry ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Timestamp in microseconds.
    pub t: u64,
    pub p: i8,
}

impl Event {
    pub const fn new(x: u16, y: u16, t: u64, p: i8) -> Self {
        Self { x, y, t, p }
    }

    #[inline]
    pub fn is_positive(&self) -> bool {
        self.p > 0
    }
}

/// Sensor geometry carried in the stream header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamHeader {
    pub width: u32,
    pub height: u32,
    pub event_count: u64,
}

/// An ordered event sequence for one sensor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventStream {
    pub width: u32,
    pub height: u32,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(width: u32, height: u32, events: Vec<Event>) -> Self {
        Self {
            width,
            height,
            events,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, Vec::new())
    }

    pub fn header(&self) -> StreamHeader {
        StreamHeader {
            width: self.width,
            height: self.height,
            event_count: self.events.len() as u64,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp span `[first, last]`, if any events exist.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ViolationKind {
    OutOfBounds,
    NonMonotonic,
    InvalidPolarity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// Outcome of [`validate_stream`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub out_of_bounds: usize,
    pub non_monotonic: usize,
    pub invalid_polarity: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn total(&self) -> usize {
        self.violations.len()
    }
}

/// Check every event against the sensor bounds, the polarity domain and the
/// non-decreasing timestamp rule. Never fails; an event may contribute
/// several violations.
pub fn validate_stream(stream: &EventStream) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut last_t: Option<u64> = None;
    for (index, e) in stream.events.iter().enumerate() {
        if u32::from(e.x) >= stream.width || u32::from(e.y) >= stream.height {
            report.out_of_bounds += 1;
            report.violations.push(Violation {
                index,
                kind: ViolationKind::OutOfBounds,
            });
        }
        if e.p != 1 && e.p != -1 {
            report.invalid_polarity += 1;
            report.violations.push(Violation {
                index,
                kind: ViolationKind::InvalidPolarity,
            });
        }
        if let Some(prev) = last_t {
            if e.t < prev {
                report.non_monotonic += 1;
                report.violations.push(Violation {
                    index,
                    kind: ViolationKind::NonMonotonic,
                });
            }
        }
        last_t = Some(e.t);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stream(events: Vec<Event>) -> EventStream {
        EventStream::new(16, 8, events)
    }

    #[test]
    fn valid_stream_has_no_violations() {
        let s = stream(vec![
            Event::new(0, 0, 0, 1),
            Event::new(15, 7, 0, -1),
            Event::new(3, 3, 10, 1),
        ]);
        let r = validate_stream(&s);
        assert!(r.is_valid());
        assert_eq!(r.total(), 0);
    }

    #[test]
    fn decreasing_timestamp_flagged_once_at_its_index() {
        let s = stream(vec![
            Event::new(0, 0, 10, 1),
            Event::new(1, 0, 5, 1),
            Event::new(2, 0, 20, 1),
        ]);
        let r = validate_stream(&s);
        assert_eq!(r.non_monotonic, 1);
        assert_eq!(
            r.violations,
            vec![Violation {
                index: 1,
                kind: ViolationKind::NonMonotonic
            }]
        );
    }

    #[test]
    fn x_equal_to_width_is_out_of_bounds() {
        let s = stream(vec![Event::new(16, 0, 0, 1)]);
        let r = validate_stream(&s);
        assert_eq!(r.out_of_bounds, 1);
        assert_eq!(r.total(), 1);
    }

    #[test]
    fn zero_polarity_is_invalid() {
        let s = stream(vec![Event::new(1, 1, 0, 0), Event::new(1, 1, 0, 2)]);
        assert_eq!(validate_stream(&s).invalid_polarity, 2);
    }
}
