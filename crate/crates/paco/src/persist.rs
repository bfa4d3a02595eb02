//! Text persistence for point stores.
//!
//! ```text
//! paco-store v1
//! id,lon,lat,t
//! ...
//! ```
//!
//! Records are sorted by id. Coordinates are written with at least seven
//! fractional digits and enough digits to round-trip exactly.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use paco_core::{ContextPoint, StoreBackend, StoreError};
use thiserror::Error;

pub const HEADER: &str = "paco-store v1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Store { line: usize, source: StoreError },
}

/// Shortest round-trip decimal, padded to at least seven fractional digits.
pub fn format_degrees(v: f64) -> String {
    let mut s = format!("{v}");
    let frac = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in frac..7 {
        s.push('0');
    }
    s
}

pub fn write_store<S: StoreBackend + ?Sized, W: Write>(store: &S, w: W) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{HEADER}")?;
    for p in store.points() {
        writeln!(w, "{},{},{},{}", p.id, format_degrees(p.x), format_degrees(p.y), p.t)?;
    }
    w.flush()
}

/// Serialized form of `store`; its length is the reported structure size.
pub fn encode<S: StoreBackend + ?Sized>(store: &S) -> Vec<u8> {
    let mut buf = Vec::new();
    write_store(store, &mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn save<S: StoreBackend + ?Sized>(store: &S, path: &Path) -> io::Result<()> {
    write_store(store, fs::File::create(path)?)
}

fn parse_record(line: &str, lineno: usize) -> Result<ContextPoint, PersistError> {
    let err = |msg: String| PersistError::Parse { line: lineno, msg };
    let fields: Vec<&str> = line.split(',').collect();
    let label = fields.first().copied().unwrap_or("");
    if fields.len() != 4 {
        return Err(err(format!(
            "record {label:?}: expected 4 fields (id,lon,lat,t), found {}",
            fields.len()
        )));
    }
    let id = fields[0]
        .trim()
        .parse::<u64>()
        .map_err(|e| err(format!("record {label:?}: bad id: {e}")))?;
    let lon = fields[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| err(format!("record {id}: bad longitude: {e}")))?;
    let lat = fields[2]
        .trim()
        .parse::<f64>()
        .map_err(|e| err(format!("record {id}: bad latitude: {e}")))?;
    let t = fields[3]
        .trim()
        .parse::<i64>()
        .map_err(|e| err(format!("record {id}: bad timestamp: {e}")))?;
    ContextPoint::new(lon, lat, t, id).map_err(|source| PersistError::Store { line: lineno, source })
}

pub fn read_store<B: StoreBackend + Default, R: BufRead>(r: R) -> Result<B, PersistError> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == HEADER => {}
        Some(Ok(h)) => {
            return Err(PersistError::Parse {
                line: 1,
                msg: format!("expected header {HEADER:?}, found {h:?}"),
            })
        }
        Some(Err(e)) => return Err(e.into()),
        None => {
            return Err(PersistError::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    let mut store = B::default();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_record(line.trim_end(), lineno)?;
        store
            .insert(p)
            .map_err(|source| PersistError::Store { line: lineno, source })?;
    }
    Ok(store)
}

pub fn load<B: StoreBackend + Default>(path: &Path) -> Result<B, PersistError> {
    read_store(BufReader::new(fs::File::open(path)?))
}
