//! Event files and atomic output.
//!
//! Binary files use the fixed `EVS1` record layout of
//! [`evpipe_core::event::encode`]. CSV files carry a `# evs1 width=W
//! height=H` comment line followed by the header `x,y,t,p`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use evpipe_core::event::{decode, encode, DecodeError};
use evpipe_core::{Event, EventStream};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum EventFormat {
    Binary,
    Csv,
}

impl EventFormat {
    /// `.csv` means CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => EventFormat::Csv,
            _ => EventFormat::Binary,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
    #[error("{}: line {line}: {msg}", path.display())]
    Csv { path: PathBuf, line: u64, msg: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn csv(path: &Path, line: u64, msg: impl Into<String>) -> Self {
        IoError::Csv {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    /// True for malformed content, false for filesystem failures.
    pub fn is_parse(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

pub fn read_events(path: &Path, format: EventFormat) -> Result<EventStream, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    match format {
        EventFormat::Binary => decode(&bytes).map_err(|source| IoError::Decode {
            path: path.to_path_buf(),
            source,
        }),
        EventFormat::Csv => parse_csv(path, &bytes),
    }
}

pub fn write_events(stream: &EventStream, path: &Path, format: EventFormat) -> Result<(), IoError> {
    let bytes = match format {
        EventFormat::Binary => encode(stream),
        EventFormat::Csv => events_csv(stream),
    };
    write_atomic(path, &bytes)
}

pub fn events_csv(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 24 * stream.events.len());
    writeln!(out, "# evs1 width={} height={}", stream.width, stream.height).unwrap();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "t", "p"]).unwrap();
    for e in &stream.events {
        w.write_record(&[e.x.to_string(), e.y.to_string(), e.t.to_string(), e.p.to_string()])
            .unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

fn parse_dims(line: &str) -> Option<(u32, u32)> {
    let rest = line.strip_prefix("# evs1")?;
    let (mut w, mut h) = (None, None);
    for kv in rest.split_whitespace() {
        match kv.split_once('=')? {
            ("width", v) => w = v.parse().ok(),
            ("height", v) => h = v.parse().ok(),
            _ => {}
        }
    }
    Some((w?, h?))
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<EventStream, IoError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IoError::csv(path, 1, e.to_string()))?;
    let first = text.lines().next().unwrap_or("");
    let dims = if first.starts_with('#') {
        Some(parse_dims(first).ok_or_else(|| IoError::csv(path, 1, "expected `# evs1 width=W height=H`"))?)
    } else {
        None
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = rdr.headers().map_err(|e| IoError::csv(path, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "t", "p"] {
        let line = if dims.is_some() { 2 } else { 1 };
        return Err(IoError::csv(path, line, "header must be `x,y,t,p`"));
    }
    let mut events = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut rec).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::csv(path, line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| IoError::csv(path, line, format!("invalid {what} `{}`", rec.iter().collect::<Vec<_>>().join(",")));
        let x: u16 = field(0).parse().map_err(|_| bad("x"))?;
        let y: u16 = field(1).parse().map_err(|_| bad("y"))?;
        let t: u64 = field(2).parse().map_err(|_| bad("t"))?;
        let p: i8 = field(3).parse().map_err(|_| bad("p"))?;
        if p != 1 && p != -1 {
            return Err(bad("polarity"));
        }
        if let Some(prev) = events.last().map(|e: &Event| e.t) {
            if t < prev {
                return Err(IoError::csv(path, line, format!("timestamp {t} precedes {prev}")));
            }
        }
        if let Some((w, h)) = dims {
            if u32::from(x) >= w || u32::from(y) >= h {
                return Err(IoError::csv(path, line, format!("event ({x}, {y}) outside the {w}x{h} sensor")));
            }
        }
        events.push(Event::new(x, y, t, p));
    }
    // Without a dimension line the sensor is the bounding box of the events.
    let (w, h) = dims.unwrap_or_else(|| {
        let w = events.iter().map(|e| u32::from(e.x) + 1).max().unwrap_or(1);
        let h = events.iter().map(|e| u32::from(e.y) + 1).max().unwrap_or(1);
        (w, h)
    });
    if w == 0 || h == 0 {
        return Err(IoError::csv(path, 1, "zero sensor dimension"));
    }
    Ok(EventStream::new(w, h, events))
}

/// Write to a temporary file beside `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Formats a float with at least nine significant digits and without loss.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let short = format!("{x:e}");
    let (mantissa, exp) = short.split_once('e').expect("exponent form");
    let digits = mantissa.chars().filter(char::is_ascii_digit).count();
    let exp: i32 = exp.parse().expect("integer exponent");
    let sig = digits.max(9);
    if x == 0.0 || (-5..15).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = sig - 1)
    }
}

/// CSV body from a header and rows of preformatted cells.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_keeps_nine_digits() {
        assert_eq!(fmt_f64(0.3125), "0.312500000");
        assert_eq!(fmt_f64(5.0), "5.00000000");
        assert_eq!(fmt_f64(-12.5), "-12.5000000");
        assert_eq!(fmt_f64(0.0), "0.00000000");
        assert_eq!(fmt_f64(1e-9), "1.00000000e-9");
        for x in [0.1, 1.0 / 3.0, 2.5e-7, 123456.789012345, -9.87654321e20, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let sig = s.split('e').next().unwrap().trim_start_matches(['-', '0', '.']).chars().filter(char::is_ascii_digit).count();
            assert!(sig >= 9, "{s}");
        }
    }

    #[test]
    fn csv_dims_line_parsed() {
        assert_eq!(parse_dims("# evs1 width=640 height=480"), Some((640, 480)));
        assert_eq!(parse_dims("# evs1 width=640"), None);
        assert_eq!(parse_dims("# other"), None);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(EventFormat::from_path(Path::new("a/b.CSV")), EventFormat::Csv);
        assert_eq!(EventFormat::from_path(Path::new("a/b.evs")), EventFormat::Binary);
        assert_eq!(EventFormat::from_path(Path::new("b")), EventFormat::Binary);
    }
}
