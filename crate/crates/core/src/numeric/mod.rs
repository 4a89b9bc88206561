//! Dense-array math used by every model: linear maps, 1-D average pooling,
//! their exact gradients, losses and the Adam optimizer.

mod adam;
mod array;
mod linear;
mod loss;
pub(crate) mod pool;

pub use adam::{AdamConfig, AdamState};
pub use array::DenseArray;
pub use linear::{LinearGrads, LinearLayer};
pub use loss::{mae, mse};
pub use pool::{avg_pool_1d, avg_pool_1d_backward, pooled_len, PoolConfig};

/// Tally of arithmetic performed during a forward pass.
///
/// `macs` counts weight multiplies inside linear layers. `adds` counts every
/// other addition: bias adds, pooling and moving-average window sums, and
/// elementwise residual arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub macs: u64,
    pub adds: u64,
}
