//! Model zoo: Linear, NLinear, DLinear, FPNLinear, FPNMLinear and FPN-fusion.
//!
//! Every variant maps a `(batch, lookback, channels)` block to a
//! `(batch, horizon, channels)` forecast and has a hand-written backward pass.
//! Channels never mix. With `channel_individual` each channel owns its own
//! layer group; otherwise a single group is shared by all channels.

mod checkpoint;
mod decompose;
mod forward;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use decompose::moving_average;
pub use forward::{backward, forward, forward_counted, ForwardCache};

use crate::error::{Error, Result};
use crate::numeric::{DenseArray, LinearGrads, LinearLayer};
use crate::pyramid::{level_lengths, PyramidConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Linear,
    NLinear,
    DLinear,
    FpnLinear,
    FpnMLinear,
    FpnFusion,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Linear,
        Variant::NLinear,
        Variant::DLinear,
        Variant::FpnLinear,
        Variant::FpnMLinear,
        Variant::FpnFusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::NLinear => "nlinear",
            Variant::DLinear => "dlinear",
            Variant::FpnLinear => "fpn-linear",
            Variant::FpnMLinear => "fpnm-linear",
            Variant::FpnFusion => "fpn-fusion",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Linear => "Linear",
            Variant::NLinear => "NLinear",
            Variant::DLinear => "DLinear",
            Variant::FpnLinear => "FPNLinear",
            Variant::FpnMLinear => "FPNMLinear",
            Variant::FpnFusion => "FPN-fusion",
        }
    }

    pub fn uses_pyramid(self) -> bool {
        matches!(self, Variant::FpnLinear | Variant::FpnMLinear | Variant::FpnFusion)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name().replace('-', "") == key)
            .ok_or_else(|| {
                let valid: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown model `{s}`; valid models: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Architecture description. Weight shapes are fully determined by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub lookback: usize,
    pub horizon: usize,
    pub channels: usize,
    pub pyramid: PyramidConfig,
    pub ma_kernel: usize,
    pub channel_individual: bool,
}

impl ModelSpec {
    pub fn new(variant: Variant, lookback: usize, horizon: usize, channels: usize) -> Self {
        Self {
            variant,
            lookback,
            horizon,
            channels,
            pyramid: PyramidConfig::default(),
            ma_kernel: 25,
            channel_individual: true,
        }
    }

    pub fn with_stages(mut self, stages: usize) -> Self {
        self.pyramid.stages = stages;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 || self.channels == 0 {
            return Err(Error::InvalidConfig(format!(
                "lookback, horizon and channels must be >= 1 (got {}, {}, {})",
                self.lookback, self.horizon, self.channels
            )));
        }
        match self.variant {
            Variant::DLinear => {
                if self.ma_kernel == 0 || self.ma_kernel > 2 * self.lookback {
                    return Err(Error::InvalidConfig(format!(
                        "moving-average window {} does not fit lookback {}",
                        self.ma_kernel, self.lookback
                    )));
                }
            }
            Variant::FpnFusion => {
                level_lengths(self.lookback, &self.pyramid)?;
                level_lengths(self.horizon, &self.pyramid)?;
            }
            Variant::FpnLinear | Variant::FpnMLinear => {
                level_lengths(self.lookback, &self.pyramid)?;
            }
            Variant::Linear | Variant::NLinear => {}
        }
        Ok(())
    }

    /// Number of independent layer groups.
    pub fn groups(&self) -> usize {
        if self.channel_individual {
            self.channels
        } else {
            1
        }
    }

    /// Channels covered by group `g`.
    pub(crate) fn group_channels(&self, g: usize) -> std::ops::Range<usize> {
        if self.channel_individual {
            g..g + 1
        } else {
            0..self.channels
        }
    }

    /// `(name, in_len, out_len)` of each layer in one group, in canonical order.
    pub fn layer_layout(&self) -> Result<Vec<(String, usize, usize)>> {
        self.validate()?;
        let (l, t) = (self.lookback, self.horizon);
        let layout = match self.variant {
            Variant::Linear | Variant::NLinear => vec![("linear".to_string(), l, t)],
            Variant::DLinear => vec![("trend".to_string(), l, t), ("seasonal".to_string(), l, t)],
            Variant::FpnLinear => {
                let total = level_lengths(l, &self.pyramid)?.iter().sum();
                vec![("linear".to_string(), total, t)]
            }
            Variant::FpnMLinear => level_lengths(l, &self.pyramid)?
                .into_iter()
                .enumerate()
                .map(|(i, len)| (format!("head{}", i + 1), len, t))
                .collect(),
            Variant::FpnFusion => {
                let ls = level_lengths(l, &self.pyramid)?;
                let ts = level_lengths(t, &self.pyramid)?;
                let mut out: Vec<_> = ls
                    .iter()
                    .zip(&ts)
                    .enumerate()
                    .map(|(i, (a, b))| (format!("head{}", i + 1), *a, *b))
                    .collect();
                for i in 0..ts.len() - 1 {
                    out.push((format!("fuse{}", i + 1), ts[i] + ts[i + 1], ts[i]));
                }
                out
            }
        };
        Ok(layout)
    }

    fn group_name(&self, g: usize) -> String {
        if self.channel_individual {
            format!("ch{g}")
        } else {
            "shared".to_string()
        }
    }
}

/// Learnable weights of a model: `groups[g][k]` is layer `k` of the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub spec: ModelSpec,
    groups: Vec<Vec<LinearLayer>>,
}

/// Cotangents for every layer plus the input cotangent `(batch, lookback, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub groups: Vec<Vec<LinearGrads>>,
    pub input: DenseArray,
}

impl Gradients {
    pub fn arrays(&self) -> Vec<&DenseArray> {
        self.groups
            .iter()
            .flatten()
            .flat_map(|g| [&g.weight, &g.bias])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.groups.iter().flatten().all(LinearGrads::is_finite)
    }
}

/// Fan-in uniform weights and zero biases drawn from a ChaCha stream seeded by `seed`.
pub fn init_model(spec: &ModelSpec, seed: u64) -> Result<ModelState> {
    let layout = spec.layer_layout()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..spec.groups())
        .map(|_| {
            layout
                .iter()
                .map(|(_, i, o)| LinearLayer::init_uniform(*i, *o, &mut rng))
                .collect()
        })
        .collect();
    Ok(ModelState { spec: *spec, groups })
}

impl ModelState {
    /// All weights and biases zero.
    pub fn zeroed(spec: &ModelSpec) -> Result<Self> {
        let layout = spec.layer_layout()?;
        let groups = (0..spec.groups())
            .map(|_| layout.iter().map(|(_, i, o)| LinearLayer::zeros(*i, *o)).collect())
            .collect();
        Ok(Self { spec: *spec, groups })
    }

    pub(crate) fn from_groups(spec: ModelSpec, groups: Vec<Vec<LinearLayer>>) -> Result<Self> {
        let layout = spec.layer_layout()?;
        if groups.len() != spec.groups() {
            return Err(Error::LengthMismatch {
                what: "layer groups",
                expected: spec.groups(),
                actual: groups.len(),
            });
        }
        for group in &groups {
            if group.len() != layout.len() {
                return Err(Error::LengthMismatch {
                    what: "layers per group",
                    expected: layout.len(),
                    actual: group.len(),
                });
            }
            for (layer, (_, i, o)) in group.iter().zip(&layout) {
                layer
                    .weight()
                    .ensure_shape("layer weight", &[*o, *i])?;
            }
        }
        Ok(Self { spec, groups })
    }

    pub fn groups(&self) -> &[Vec<LinearLayer>] {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut [Vec<LinearLayer>] {
        &mut self.groups
    }

    /// Layers with fully qualified names such as `ch3.fuse1`.
    pub fn named_layers(&self) -> Vec<(String, &LinearLayer)> {
        let layout = self.spec.layer_layout().expect("state spec was validated");
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, group)| {
                let prefix = self.spec.group_name(g);
                group
                    .iter()
                    .zip(layout.iter())
                    .map(move |(layer, (name, _, _))| (format!("{prefix}.{name}"), layer))
            })
            .collect()
    }

    /// Runtime count over the actual weight and bias arrays.
    pub fn parameter_count(&self) -> usize {
        self.groups
            .iter()
            .flatten()
            .map(LinearLayer::parameter_count)
            .sum()
    }

    pub fn param_shapes(&self) -> Vec<&[usize]> {
        self.groups
            .iter()
            .flatten()
            .flat_map(|l| [l.weight().shape(), l.bias().shape()])
            .collect()
    }

    /// Mutable weight/bias arrays in the same order as [`Gradients::arrays`].
    pub fn params_mut(&mut self) -> Vec<&mut DenseArray> {
        let mut out = Vec::new();
        for layer in self.groups.iter_mut().flatten() {
            let (w, b) = layer.parts_mut();
            out.push(w);
            out.push(b);
        }
        out
    }

    pub fn zero_gradients(&self, batch: usize) -> Gradients {
        Gradients {
            groups: self
                .groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|l| LinearGrads::zeros(l.in_len(), l.out_len()))
                        .collect()
                })
                .collect(),
            input: DenseArray::zeros(&[batch, self.spec.lookback, self.spec.channels]),
        }
    }
}
