//! Shared fixtures for the criterion benches.

use pyramidcast_core::DenseArray;

/// Deterministic `(batch, len, channels)` block of smooth pseudo-data.
pub fn block(batch: usize, len: usize, channels: usize) -> DenseArray {
    let data = (0..batch * len * channels)
        .map(|i| ((i as f64) * 0.013).sin() + 0.1 * ((i % 17) as f64))
        .collect();
    DenseArray::new(vec![batch, len, channels], data).expect("shape matches data")
}
