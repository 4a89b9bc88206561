#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes a `date,<names...>` CSV of `rows` seasonal series sampled every
/// `step_minutes`, with the last column named `OT`.
pub fn write_synthetic_csv(path: &Path, rows: usize, channels: usize, step_minutes: i64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BufWriter::with_capacity(1 << 20, File::create(path).expect("create csv"));
    write!(out, "date").unwrap();
    for c in 0..channels - 1 {
        write!(out, ",{c}").unwrap();
    }
    writeln!(out, ",OT").unwrap();
    let phases: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let scales: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.5..3.0)).collect();
    let per_day = (24 * 60 / step_minutes).max(1) as f64;
    let start = NaiveDate::from_ymd_opt(2016, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut line = String::with_capacity(channels * 8 + 32);
    for r in 0..rows {
        line.clear();
        let ts = start + Duration::minutes(step_minutes * r as i64);
        let _ = write!(line, "{}", ts.format("%Y-%m-%d %H:%M:%S"));
        let day = r as f64 / per_day * std::f64::consts::TAU;
        for c in 0..channels {
            let v = scales[c] * ((day + phases[c]).sin() + 0.4 * (day / 7.0 + phases[c]).sin())
                + 0.001 * r as f64 / per_day
                + rng.gen_range(-0.2..0.2);
            let _ = write!(line, ",{v:.3}");
        }
        line.push('\n');
        out.write_all(line.as_bytes()).unwrap();
    }
    out.flush().unwrap();
}
