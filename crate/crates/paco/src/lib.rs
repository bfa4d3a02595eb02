//! File formats, trace ingestion, benchmarks and heat maps for the paco
//! context store. The `paco` binary is a thin front end over this crate.

pub mod bench;
pub mod heatmap;
pub mod ingest;
pub mod persist;
pub mod profile_file;

pub use bench::{BenchRow, Dataset};
pub use heatmap::Heatmap;
pub use ingest::{IngestError, TraceFormat};
pub use persist::PersistError;
