//! Trace file parsers and the CSV exporter.
//!
//! Cab traces are whitespace-separated `lat lon occupancy unix_time` lines,
//! one file per vehicle (`new_<name>.txt`), newest first. CSV traces have
//! the header `lat,lon,t`. Both parsers return records sorted by time.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use paco_core::geo::GeoCoord;
use paco_core::trace::sort_by_time;
use paco_core::{GeoError, TraceRecord};
use thiserror::Error;

pub const CSV_HEADER: &str = "lat,lon,t";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{source_name}: line {line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },
    #[error("{source_name}: line {line}: {source}")]
    Coord {
        source_name: String,
        line: usize,
        source: GeoError,
    },
    #[error("{0}: longitudes span more than 180 degrees; traces crossing the antimeridian are not supported")]
    Antimeridian(String),
    #[error("no trace files in {dir}; expected new_*.txt (cab) or *.csv files")]
    NoData { dir: PathBuf },
}

fn check_coord(lat: f64, lon: f64, source_name: &str, line: usize) -> Result<(), IngestError> {
    GeoCoord::new(lon, lat).map(|_| ()).map_err(|source| IngestError::Coord {
        source_name: source_name.to_string(),
        line,
        source,
    })
}

fn check_span(records: &[TraceRecord], source_name: &str) -> Result<(), IngestError> {
    let (lo, hi) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.lon), hi.max(r.lon)));
    if hi - lo > 180.0 {
        return Err(IngestError::Antimeridian(source_name.to_string()));
    }
    Ok(())
}

/// Parses one cab trace. Occupancy is dropped; `tag` becomes every record's
/// source tag.
pub fn parse_cab_trace(input: &str, tag: &str) -> Result<Vec<TraceRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: String| IngestError::Parse {
            source_name: tag.to_string(),
            line: lineno,
            msg,
        };
        if fields.len() != 4 {
            return Err(err(format!(
                "expected 4 fields `lat lon occupancy unix_time`, found {}",
                fields.len()
            )));
        }
        let lat: f64 = fields[0].parse().map_err(|e| err(format!("bad latitude {:?}: {e}", fields[0])))?;
        let lon: f64 = fields[1].parse().map_err(|e| err(format!("bad longitude {:?}: {e}", fields[1])))?;
        fields[2]
            .parse::<u8>()
            .map_err(|e| err(format!("bad occupancy {:?}: {e}", fields[2])))?;
        let t: i64 = fields[3].parse().map_err(|e| err(format!("bad timestamp {:?}: {e}", fields[3])))?;
        if t < 0 {
            return Err(err(format!("negative timestamp {t}")));
        }
        check_coord(lat, lon, tag, lineno)?;
        out.push(TraceRecord {
            lat,
            lon,
            t,
            source_tag: tag.to_string(),
        });
    }
    check_span(&out, tag)?;
    sort_by_time(&mut out);
    Ok(out)
}

/// Parses a `lat,lon,t` CSV trace. Rows with equal timestamps keep their
/// input order.
pub fn parse_csv_trace<R: Read>(input: R, tag: &str) -> Result<Vec<TraceRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    let mut seen_header = false;
    for row in rdr.records() {
        let row = row.map_err(|e| IngestError::Parse {
            source_name: tag.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let lineno = row.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| IngestError::Parse {
            source_name: tag.to_string(),
            line: lineno,
            msg,
        };
        if !seen_header {
            if row.iter().collect::<Vec<_>>() != ["lat", "lon", "t"] {
                return Err(err(format!("expected header {CSV_HEADER:?}")));
            }
            seen_header = true;
            continue;
        }
        if row.len() != 3 {
            return Err(err(format!("expected 3 fields `lat,lon,t`, found {}", row.len())));
        }
        let lat: f64 = row[0].parse().map_err(|e| err(format!("bad latitude {:?}: {e}", &row[0])))?;
        let lon: f64 = row[1].parse().map_err(|e| err(format!("bad longitude {:?}: {e}", &row[1])))?;
        let t: i64 = row[2].parse().map_err(|e| err(format!("bad timestamp {:?}: {e}", &row[2])))?;
        if t < 0 {
            return Err(err(format!("negative timestamp {t}")));
        }
        check_coord(lat, lon, tag, lineno)?;
        out.push(TraceRecord {
            lat,
            lon,
            t,
            source_tag: tag.to_string(),
        });
    }
    check_span(&out, tag)?;
    sort_by_time(&mut out);
    Ok(out)
}

/// Writes records as CSV with seven decimals, sorted by time.
pub fn export_csv<W: Write>(records: &[TraceRecord], w: W) -> io::Result<()> {
    let mut sorted = records.to_vec();
    sort_by_time(&mut sorted);
    let mut w = io::BufWriter::new(w);
    writeln!(w, "{CSV_HEADER}")?;
    for r in &sorted {
        writeln!(w, "{:.7},{:.7},{}", r.lat, r.lon, r.t)?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Cab,
    Csv,
}

/// Parses one file; the tag is the file stem with any `new_` prefix removed.
pub fn load_trace_file(path: &Path, format: TraceFormat) -> Result<Vec<TraceRecord>, IngestError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let tag = stem.strip_prefix("new_").unwrap_or(stem);
    match format {
        TraceFormat::Cab => parse_cab_trace(&fs::read_to_string(path)?, tag),
        TraceFormat::Csv => parse_csv_trace(fs::File::open(path)?, tag),
    }
}

/// Loads every trace file in `dir`: cab files (`new_*.txt`) if any exist,
/// otherwise `*.csv`. Files are read in name order and merged by time.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<TraceRecord>, IngestError> {
    load_trace_dir_prefix(dir, usize::MAX)
}

/// The first `n` records of the directory in file order (files by name,
/// each file in time order), merged by time. Whole vehicles come first, so
/// a prefix keeps each included trace's temporal structure.
pub fn load_trace_dir_prefix(dir: &Path, n: usize) -> Result<Vec<TraceRecord>, IngestError> {
    let mut cab = Vec::new();
    let mut csv = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if name.starts_with("new_") && name.ends_with(".txt") {
            cab.push(path);
        } else if name.ends_with(".csv") {
            csv.push(path);
        }
    }
    let (mut files, format) = if !cab.is_empty() {
        (cab, TraceFormat::Cab)
    } else if !csv.is_empty() {
        (csv, TraceFormat::Csv)
    } else {
        return Err(IngestError::NoData { dir: dir.to_path_buf() });
    };
    files.sort();
    let mut out = Vec::new();
    for f in &files {
        if out.len() >= n {
            break;
        }
        out.extend(load_trace_file(f, format)?);
    }
    out.truncate(n);
    check_span(&out, &dir.display().to_string())?;
    sort_by_time(&mut out);
    Ok(out)
}
