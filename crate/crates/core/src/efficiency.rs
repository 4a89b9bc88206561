//! Parameter and multiply-accumulate accounting, in closed form and by
//! instrumenting a real forward pass.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{forward_counted, ModelSpec, ModelState, Variant};
use crate::numeric::{DenseArray, OpCounter};
use crate::pyramid::PyramidConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub model: String,
    pub lookback: usize,
    pub horizon: usize,
    pub channels: usize,
    pub batch: usize,
    pub params: u64,
    /// Weight multiplies of one batch forward.
    pub macs: u64,
    /// Bias, pooling, moving-average and residual additions of one batch forward.
    pub add_ops: u64,
    pub notes: String,
}

/// Level lengths by direct recurrence of `floor((n + 2p - k) / s) + 1`.
fn lengths(base: usize, cfg: &PyramidConfig) -> Result<Vec<u64>> {
    let (k, s, p) = (cfg.pool.kernel as i64, cfg.pool.stride as i64, cfg.pool.padding as i64);
    let mut out = vec![base as u64];
    let mut n = base as i64;
    for level in 1..cfg.stages {
        let num = n + 2 * p - k;
        if num < 0 {
            return Err(Error::InvalidPyramid { base, level });
        }
        n = num / s + 1;
        out.push(n as u64);
    }
    Ok(out)
}

/// `(params, macs, adds)` of one layer group for one input row.
fn per_group(spec: &ModelSpec) -> Result<(u64, u64, u64)> {
    spec.validate()?;
    let (l, t) = (spec.lookback as u64, spec.horizon as u64);
    let pool_adds = |ls: &[u64]| ls[1..].iter().sum::<u64>() * (spec.pyramid.pool.kernel as u64 - 1);
    Ok(match spec.variant {
        Variant::Linear => (l * t + t, l * t, t),
        // Subtract the last value from L inputs, add it back to T outputs.
        Variant::NLinear => (l * t + t, l * t, l + 2 * t),
        Variant::DLinear => {
            let k = spec.ma_kernel as u64;
            (2 * (l * t + t), 2 * l * t, l * (k - 1) + l + 2 * t + t)
        }
        Variant::FpnLinear => {
            let ls = lengths(spec.lookback, &spec.pyramid)?;
            let total: u64 = ls.iter().sum();
            (total * t + t, total * t, pool_adds(&ls) + t)
        }
        Variant::FpnMLinear => {
            let ls = lengths(spec.lookback, &spec.pyramid)?;
            let total: u64 = ls.iter().sum();
            let s = ls.len() as u64;
            (total * t + s * t, total * t, pool_adds(&ls) + s * t + (s - 1) * t)
        }
        Variant::FpnFusion => {
            let ls = lengths(spec.lookback, &spec.pyramid)?;
            let ts = lengths(spec.horizon, &spec.pyramid)?;
            let head_macs: u64 = ls.iter().zip(&ts).map(|(a, b)| a * b).sum();
            let fuse_macs: u64 = ts.windows(2).map(|w| (w[0] + w[1]) * w[0]).sum();
            let head_bias: u64 = ts.iter().sum();
            let fuse_bias: u64 = ts[..ts.len() - 1].iter().sum();
            (
                head_macs + fuse_macs + head_bias + fuse_bias,
                head_macs + fuse_macs,
                pool_adds(&ls) + head_bias + fuse_bias,
            )
        }
    })
}

/// Weights plus biases over all layer groups.
pub fn count_params(spec: &ModelSpec) -> Result<u64> {
    Ok(per_group(spec)?.0 * spec.groups() as u64)
}

/// Linear-layer weight multiplies for one forward of `batch` samples.
pub fn count_macs(spec: &ModelSpec, batch: usize) -> Result<u64> {
    Ok(per_group(spec)?.1 * (batch * spec.channels) as u64)
}

/// All non-MAC additions for one forward of `batch` samples.
pub fn count_add_ops(spec: &ModelSpec, batch: usize) -> Result<u64> {
    Ok(per_group(spec)?.2 * (batch * spec.channels) as u64)
}

/// Closed-form record for `spec` without building a model.
pub fn closed_form_record(spec: &ModelSpec, batch: usize) -> Result<EfficiencyRecord> {
    Ok(EfficiencyRecord {
        model: spec.variant.label().to_string(),
        lookback: spec.lookback,
        horizon: spec.horizon,
        channels: spec.channels,
        batch,
        params: count_params(spec)?,
        macs: count_macs(spec, batch)?,
        add_ops: count_add_ops(spec, batch)?,
        notes: "closed form".to_string(),
    })
}

/// Runs one counted forward on a zero batch and checks every counter against
/// the closed forms.
pub fn instrument_forward(state: &ModelState, batch: usize) -> Result<EfficiencyRecord> {
    let spec = state.spec;
    let mut counter = OpCounter::default();
    let input = DenseArray::zeros(&[batch, spec.lookback, spec.channels]);
    forward_counted(state, &input, &mut counter)?;
    let expected = closed_form_record(&spec, batch)?;
    let params = state.parameter_count() as u64;
    let mismatch = |what: &str, got: u64, want: u64| {
        Error::Consistency(format!(
            "{} {what}: instrumented {got} != closed form {want}",
            spec.variant.label()
        ))
    };
    if params != expected.params {
        return Err(mismatch("params", params, expected.params));
    }
    if counter.macs != expected.macs {
        return Err(mismatch("MACs", counter.macs, expected.macs));
    }
    if counter.adds != expected.add_ops {
        return Err(mismatch("add-ops", counter.adds, expected.add_ops));
    }
    Ok(EfficiencyRecord {
        notes: "instrumented forward".to_string(),
        ..expected
    })
}

pub const EFFICIENCY_CSV_HEADER: &str = "model,lookback,horizon,channels,batch,macs,params,add_ops,notes";

pub fn efficiency_csv(records: &[EfficiencyRecord]) -> String {
    let mut out = format!("{EFFICIENCY_CSV_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.model, r.lookback, r.horizon, r.channels, r.batch, r.macs, r.params, r.add_ops, r.notes
        );
    }
    out
}

/// Human-readable table with millions next to exact counts.
pub fn efficiency_table(records: &[EfficiencyRecord]) -> String {
    let mut out = String::from("| Model | L | T | C | Batch | MACs | Parameters | Add-ops |\n|---|---|---|---|---|---|---|---|\n");
    for r in records {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} ({:.2}M) | {} ({:.2}M) | {} |",
            r.model,
            r.lookback,
            r.horizon,
            r.channels,
            r.batch,
            r.macs,
            r.macs as f64 / 1e6,
            r.params,
            r.params as f64 / 1e6,
            r.add_ops
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::models::init_model;

    #[test]
    fn linear_single_channel_params() {
        let spec = ModelSpec::new(Variant::Linear, 336, 96, 1);
        assert_eq!(count_params(&spec).unwrap(), 336 * 96 + 96);
        assert_eq!(count_params(&spec).unwrap(), 32_352);
    }

    #[test]
    fn dlinear_reference_config() {
        let spec = ModelSpec::new(Variant::DLinear, 336, 96, 7);
        assert_eq!(count_params(&spec).unwrap(), 7 * 2 * (336 * 96 + 96));
        assert_eq!(count_params(&spec).unwrap(), 452_928);
        assert_eq!(count_macs(&spec, 32).unwrap(), 32 * 7 * 2 * 336 * 96);
        assert_eq!(count_macs(&spec, 32).unwrap(), 14_450_688);
    }

    #[test]
    fn fpn_fusion_reference_config() {
        // Levels: L 336/167/83/41, T 96/47/23/11.
        let heads = 336 * 96 + 167 * 47 + 83 * 23 + 41 * 11;
        let fuse = (96 + 47) * 96 + (47 + 23) * 47 + (23 + 11) * 23;
        assert_eq!(heads, 42_465);
        assert_eq!(fuse, 17_800);
        let biases = (96 + 47 + 23 + 11) + (96 + 47 + 23);
        let spec = ModelSpec::new(Variant::FpnFusion, 336, 96, 7);
        assert_eq!(count_params(&spec).unwrap(), 7 * (heads + fuse + biases) as u64);
        assert_eq!(count_params(&spec).unwrap(), 424_256);
        assert_eq!(count_macs(&spec, 32).unwrap(), 13_499_360);
    }

    #[test]
    fn batch_zero_has_no_macs() {
        for v in Variant::ALL {
            let spec = ModelSpec::new(v, 48, 24, 3);
            assert_eq!(count_macs(&spec, 0).unwrap(), 0);
            assert_eq!(count_add_ops(&spec, 0).unwrap(), 0);
            let state = init_model(&spec, 0).unwrap();
            assert_eq!(instrument_forward(&state, 0).unwrap().macs, 0);
        }
    }

    #[test]
    fn closed_form_matches_runtime_params_at_reference_config() {
        for v in Variant::ALL {
            let spec = ModelSpec::new(v, 336, 96, 7);
            let state = ModelState::zeroed(&spec).unwrap();
            assert_eq!(state.parameter_count() as u64, count_params(&spec).unwrap(), "{v:?}");
        }
    }

    #[test]
    fn toy_specs_instrument_cleanly() {
        let lin = init_model(&ModelSpec::new(Variant::Linear, 10, 4, 2), 1).unwrap();
        let r = instrument_forward(&lin, 3).unwrap();
        assert_eq!(r.macs, 3 * 2 * 40);
        let fpn = init_model(&ModelSpec::new(Variant::FpnFusion, 20, 8, 1).with_stages(2), 1).unwrap();
        let a = instrument_forward(&fpn, 5).unwrap();
        let b = instrument_forward(&fpn, 5).unwrap();
        assert_eq!(a, b);
        // L levels 20/9, T levels 8/3, fuse (8+3)->8.
        assert_eq!(a.macs, 5 * (20 * 8 + 9 * 3 + 11 * 8));
    }

    #[test]
    fn randomized_specs_agree_with_instrumented_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            for v in Variant::ALL {
                let stages = rng.gen_range(1..=4);
                let mut spec = ModelSpec::new(v, rng.gen_range(24..=96), rng.gen_range(16..=40), rng.gen_range(1..=3))
                    .with_stages(stages);
                spec.ma_kernel = rng.gen_range(1..=25);
                spec.channel_individual = rng.gen_bool(0.5);
                let state = init_model(&spec, 3).unwrap();
                let batch = rng.gen_range(1..=4);
                instrument_forward(&state, batch).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
            }
        }
    }

    #[test]
    fn shared_mode_divides_params_by_channels() {
        let mut spec = ModelSpec::new(Variant::FpnFusion, 336, 96, 7);
        spec.channel_individual = false;
        assert_eq!(count_params(&spec).unwrap(), 424_256 / 7);
        assert_eq!(count_macs(&spec, 32).unwrap(), 13_499_360);
    }

    #[test]
    fn csv_lists_one_row_per_record() {
        let spec = ModelSpec::new(Variant::DLinear, 336, 96, 7);
        let csv = efficiency_csv(&[closed_form_record(&spec, 32).unwrap()]);
        assert_eq!(csv.lines().nth(1).unwrap().split(',').take(7).collect::<Vec<_>>(),
            vec!["DLinear", "336", "96", "7", "32", "14450688", "452928"]);
    }
}
