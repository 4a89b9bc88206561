//! Benchmark CSV ingestion, chronological splits, train-only standardization
//! and sliding windows.

mod catalog;
mod csv_io;
mod scaler;
mod split;
mod window;

pub use catalog::{default_horizons, default_lookback, known, Catalog, KnownDataset, Manifest, ManifestEntry, KNOWN};
pub use csv_io::{load_csv, RawDataset};
pub use scaler::Scaler;
pub use split::{standard_split, Part, SplitSpec};
pub use window::{Prepared, SeriesWindow, WindowSampler};
