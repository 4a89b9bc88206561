use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};
use crate::numeric::DenseArray;

/// A loaded benchmark table: timestamps plus an `(rows, channels)` matrix.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub name: String,
    pub path: PathBuf,
    pub timestamps: Vec<NaiveDateTime>,
    pub columns: Vec<String>,
    pub values: DenseArray,
}

impl RawDataset {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y/%m/%d %H:%M:%S",
    "%Y/%m/%d %H:%M",
    "%m/%d/%Y %H:%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    DATETIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

/// Reads a CSV whose first column is `date` and whose other columns are numeric.
/// Row numbers in errors are 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let malformed = |message: String| Error::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;

    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(malformed("empty file".into()));
    }
    if !headers[0].eq_ignore_ascii_case("date") {
        return Err(malformed(format!(
            "first column must be `date`, found `{}`",
            &headers[0]
        )));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if columns.is_empty() {
        return Err(malformed("no value columns".into()));
    }

    let c = columns.len();
    let mut timestamps = Vec::new();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != c + 1 {
            return Err(malformed(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                c + 1
            )));
        }
        let ts = parse_timestamp(&record[0]).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: "date".into(),
            value: record[0].to_string(),
        })?;
        if timestamps.last().is_some_and(|prev| *prev >= ts) {
            return Err(Error::Timestamp {
                path: path.to_path_buf(),
                row,
            });
        }
        timestamps.push(ts);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: columns[j].clone(),
                    value: cell.to_string(),
                })?;
            data.push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(malformed("no data rows".into()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawDataset {
        name,
        path: path.to_path_buf(),
        values: DenseArray::new(vec![timestamps.len(), c], data)?,
        timestamps,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_toy_file_verbatim() {
        let f = write(
            "date,a,b\n2016-07-01 00:00:00,1.5,2\n2016-07-01 01:00:00,-3,4.25\n2016-07-01 02:00:00,5,6\n",
        );
        let d = load_csv(f.path()).unwrap();
        assert_eq!((d.rows(), d.channels()), (3, 2));
        assert_eq!(d.values.data(), &[1.5, 2.0, -3.0, 4.25, 5.0, 6.0]);
        assert_eq!(d.columns, vec!["a", "b"]);
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let f = write("date,a,b\n2016-07-01 00:00:00,1,2\n2016-07-01 01:00:00,x,4\n");
        let err = load_csv(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{msg}");
        assert!(msg.contains("row 2") && msg.contains("`a`"), "{msg}");
    }

    #[test]
    fn empty_and_headless_files_are_rejected() {
        assert!(load_csv(write("").path()).is_err());
        assert!(load_csv(write("date,a\n").path()).is_err());
        assert!(load_csv(write("time,a\n2016-07-01,1\n").path()).is_err());
    }

    #[test]
    fn duplicate_timestamp_is_rejected() {
        let f = write("date,a\n2016-07-01 00:00:00,1\n2016-07-01 00:00:00,2\n");
        assert!(matches!(load_csv(f.path()), Err(Error::Timestamp { row: 2, .. })));
    }

    #[test]
    fn missing_cell_is_rejected() {
        let f = write("date,a,b\n2016-07-01 00:00:00,1,\n");
        assert!(matches!(load_csv(f.path()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_csv("/nonexistent/ETTh1.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/ETTh1.csv"), "{err}");
    }
}
