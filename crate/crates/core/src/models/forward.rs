use super::decompose::{moving_average_backward_into, moving_average_into};
use super::{Gradients, ModelState, Variant};
use crate::error::{Error, Result};
use crate::numeric::{DenseArray, LinearGrads, LinearLayer, OpCounter};
use crate::pyramid;

/// Intermediates of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    variant: Variant,
    batch: usize,
    lookback: usize,
    groups: Vec<GroupCache>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone)]
enum GroupCache {
    Linear {
        x: DenseArray,
    },
    NLinear {
        shifted: DenseArray,
    },
    DLinear {
        trend: DenseArray,
        seasonal: DenseArray,
    },
    FpnLinear {
        concat: DenseArray,
        widths: Vec<usize>,
    },
    FpnMLinear {
        levels: Vec<DenseArray>,
    },
    FpnFusion {
        levels: Vec<DenseArray>,
        fuse_inputs: Vec<DenseArray>,
    },
}

/// Runs the model on `batch` of shape `(B, lookback, channels)`.
pub fn forward(state: &ModelState, batch: &DenseArray) -> Result<(DenseArray, ForwardCache)> {
    forward_counted(state, batch, &mut OpCounter::default())
}

/// [`forward`] that also tallies the arithmetic it performs.
pub fn forward_counted(
    state: &ModelState,
    batch: &DenseArray,
    counter: &mut OpCounter,
) -> Result<(DenseArray, ForwardCache)> {
    let spec = &state.spec;
    let b = check_batch(batch, spec.lookback, spec.channels)?;
    let mut pred = DenseArray::zeros(&[b, spec.horizon, spec.channels]);
    let mut caches = Vec::with_capacity(state.groups().len());
    for (g, layers) in state.groups().iter().enumerate() {
        let channels = spec.group_channels(g);
        let x = gather(batch, b, spec.lookback, spec.channels, channels.clone());
        let (y, cache) = group_forward(state, layers, x, counter)?;
        scatter(&y, &mut pred, b, spec.horizon, spec.channels, channels);
        caches.push(cache);
    }
    Ok((
        pred,
        ForwardCache {
            variant: spec.variant,
            batch: b,
            lookback: spec.lookback,
            groups: caches,
        },
    ))
}

/// Exact gradients of `<pred_grad, forward(batch)>` for every layer and the input.
pub fn backward(state: &ModelState, cache: &ForwardCache, pred_grad: &DenseArray) -> Result<Gradients> {
    let spec = &state.spec;
    if cache.variant != spec.variant
        || cache.lookback != spec.lookback
        || cache.groups.len() != state.groups().len()
    {
        return Err(Error::InvalidConfig(
            "forward cache does not belong to this model".into(),
        ));
    }
    let b = cache.batch;
    pred_grad.ensure_shape("prediction gradient", &[b, spec.horizon, spec.channels])?;
    let mut grads = state.zero_gradients(b);
    for (g, (layers, gc)) in state.groups().iter().zip(&cache.groups).enumerate() {
        let channels = spec.group_channels(g);
        let dy = gather(pred_grad, b, spec.horizon, spec.channels, channels.clone());
        let dx = group_backward(state, layers, gc, &dy, &mut grads.groups[g])?;
        scatter(&dx, &mut grads.input, b, spec.lookback, spec.channels, channels);
    }
    Ok(grads)
}

fn check_batch(batch: &DenseArray, lookback: usize, channels: usize) -> Result<usize> {
    let shape = batch.shape();
    if shape.len() != 3 || shape[1] != lookback || shape[2] != channels {
        return Err(Error::ShapeMismatch {
            what: "model input batch",
            expected: vec![shape.first().copied().unwrap_or(0), lookback, channels],
            actual: shape.to_vec(),
        });
    }
    Ok(shape[0])
}

/// Rows `(ci * B + b)` holding the series of channel `channels.start + ci` in sample `b`.
fn gather(
    src: &DenseArray,
    batch: usize,
    len: usize,
    width: usize,
    channels: std::ops::Range<usize>,
) -> DenseArray {
    let mut rows = DenseArray::zeros(&[batch * channels.len(), len]);
    let data = src.data();
    for (ci, c) in channels.enumerate() {
        for b in 0..batch {
            let row = rows.row_mut(ci * batch + b);
            for (t, v) in row.iter_mut().enumerate() {
                *v = data[(b * len + t) * width + c];
            }
        }
    }
    rows
}

fn scatter(
    rows: &DenseArray,
    dst: &mut DenseArray,
    batch: usize,
    len: usize,
    width: usize,
    channels: std::ops::Range<usize>,
) {
    let data = dst.data_mut();
    for (ci, c) in channels.enumerate() {
        for b in 0..batch {
            for (t, v) in rows.row(ci * batch + b).iter().enumerate() {
                data[(b * len + t) * width + c] = *v;
            }
        }
    }
}

fn apply(layer: &LinearLayer, x: &DenseArray, counter: &mut OpCounter) -> Result<DenseArray> {
    let mut y = DenseArray::zeros(&[x.rows(), layer.out_len()]);
    layer.forward_rows(x.data(), x.rows(), y.data_mut(), counter)?;
    Ok(y)
}

/// Accumulates parameter grads and returns the input cotangent.
fn pull(layer: &LinearLayer, x: &DenseArray, dy: &DenseArray, grads: &mut LinearGrads) -> Result<DenseArray> {
    let mut dx = DenseArray::zeros(&[x.rows(), layer.in_len()]);
    layer.backward_rows(x.data(), x.rows(), dy.data(), grads, Some(dx.data_mut()))?;
    Ok(dx)
}

fn concat_cols(parts: &[&DenseArray]) -> DenseArray {
    let rows = parts[0].rows();
    let width: usize = parts.iter().map(|p| p.cols()).sum();
    let mut out = DenseArray::zeros(&[rows, width]);
    for r in 0..rows {
        let dst = out.row_mut(r);
        let mut off = 0;
        for p in parts {
            dst[off..off + p.cols()].copy_from_slice(p.row(r));
            off += p.cols();
        }
    }
    out
}

fn split_cols(a: &DenseArray, widths: &[usize]) -> Vec<DenseArray> {
    let rows = a.rows();
    let mut off = 0;
    widths
        .iter()
        .map(|&w| {
            let mut part = DenseArray::zeros(&[rows, w]);
            for r in 0..rows {
                part.row_mut(r).copy_from_slice(&a.row(r)[off..off + w]);
            }
            off += w;
            part
        })
        .collect()
}

fn group_forward(
    state: &ModelState,
    layers: &[LinearLayer],
    x: DenseArray,
    counter: &mut OpCounter,
) -> Result<(DenseArray, GroupCache)> {
    let spec = &state.spec;
    let rows = x.rows();
    let horizon = spec.horizon;
    match spec.variant {
        Variant::Linear => {
            let y = apply(&layers[0], &x, counter)?;
            Ok((y, GroupCache::Linear { x }))
        }
        Variant::NLinear => {
            let mut shifted = x;
            let mut lasts = Vec::with_capacity(rows);
            for r in 0..rows {
                let row = shifted.row_mut(r);
                let last = *row.last().unwrap();
                row.iter_mut().for_each(|v| *v -= last);
                lasts.push(last);
            }
            counter.adds += (rows * spec.lookback) as u64;
            let mut y = apply(&layers[0], &shifted, counter)?;
            for (r, last) in lasts.into_iter().enumerate() {
                y.row_mut(r).iter_mut().for_each(|v| *v += last);
            }
            counter.adds += (rows * horizon) as u64;
            Ok((y, GroupCache::NLinear { shifted }))
        }
        Variant::DLinear => {
            let mut trend = DenseArray::zeros(&[rows, spec.lookback]);
            for r in 0..rows {
                moving_average_into(x.row(r), spec.ma_kernel, trend.row_mut(r), counter);
            }
            let mut seasonal = x;
            for (s, t) in seasonal.data_mut().iter_mut().zip(trend.data()) {
                *s -= t;
            }
            counter.adds += seasonal.len() as u64;
            let mut y = apply(&layers[0], &trend, counter)?;
            y.add_assign(&apply(&layers[1], &seasonal, counter)?)?;
            counter.adds += y.len() as u64;
            Ok((y, GroupCache::DLinear { trend, seasonal }))
        }
        Variant::FpnLinear => {
            let levels = pyramid::build_rows(&x, &spec.pyramid, counter)?;
            let widths = levels.iter().map(|l| l.cols()).collect();
            let concat = concat_cols(&levels.iter().collect::<Vec<_>>());
            let y = apply(&layers[0], &concat, counter)?;
            Ok((y, GroupCache::FpnLinear { concat, widths }))
        }
        Variant::FpnMLinear => {
            let levels = pyramid::build_rows(&x, &spec.pyramid, counter)?;
            let mut y = DenseArray::zeros(&[rows, horizon]);
            for (i, (layer, level)) in layers.iter().zip(&levels).enumerate() {
                let yi = apply(layer, level, counter)?;
                if i == 0 {
                    y = yi;
                } else {
                    y.add_assign(&yi)?;
                    counter.adds += yi.len() as u64;
                }
            }
            Ok((y, GroupCache::FpnMLinear { levels }))
        }
        Variant::FpnFusion => {
            let stages = spec.pyramid.stages;
            let levels = pyramid::build_rows(&x, &spec.pyramid, counter)?;
            let heads = layers[..stages]
                .iter()
                .zip(&levels)
                .map(|(layer, level)| apply(layer, level, counter))
                .collect::<Result<Vec<_>>>()?;
            // Deep-to-shallow: fused_S = head_S, fused_i = fuse_i([head_i, fused_{i+1}]).
            let fuse = &layers[stages..];
            let mut fused = heads[stages - 1].clone();
            let mut fuse_inputs = vec![DenseArray::zeros(&[0, 0]); stages - 1];
            for i in (0..stages - 1).rev() {
                let input = concat_cols(&[&heads[i], &fused]);
                fused = apply(&fuse[i], &input, counter)?;
                fuse_inputs[i] = input;
            }
            Ok((fused, GroupCache::FpnFusion { levels, fuse_inputs }))
        }
    }
}

fn group_backward(
    state: &ModelState,
    layers: &[LinearLayer],
    cache: &GroupCache,
    dy: &DenseArray,
    grads: &mut [LinearGrads],
) -> Result<DenseArray> {
    let spec = &state.spec;
    match cache {
        GroupCache::Linear { x } => pull(&layers[0], x, dy, &mut grads[0]),
        GroupCache::NLinear { shifted } => {
            let mut dx = pull(&layers[0], shifted, dy, &mut grads[0])?;
            // x' = x - x_L and y = f(x') + x_L, so x_L collects sum(dy) - sum(dx').
            for r in 0..dx.rows() {
                let add_back: f64 = dy.row(r).iter().sum();
                let row = dx.row_mut(r);
                let sub: f64 = row.iter().sum();
                *row.last_mut().unwrap() += add_back - sub;
            }
            Ok(dx)
        }
        GroupCache::DLinear { trend, seasonal } => {
            let (gt, gs) = grads.split_at_mut(1);
            let d_trend = pull(&layers[0], trend, dy, &mut gt[0])?;
            let d_seasonal = pull(&layers[1], seasonal, dy, &mut gs[0])?;
            // seasonal = x - trend(x): dx = d_seasonal + MA^T(d_trend - d_seasonal).
            let mut dx = d_seasonal.clone();
            for r in 0..dx.rows() {
                let through_trend: Vec<f64> = d_trend
                    .row(r)
                    .iter()
                    .zip(d_seasonal.row(r))
                    .map(|(a, b)| a - b)
                    .collect();
                moving_average_backward_into(spec.ma_kernel, &through_trend, dx.row_mut(r));
            }
            Ok(dx)
        }
        GroupCache::FpnLinear { concat, widths } => {
            let d_concat = pull(&layers[0], concat, dy, &mut grads[0])?;
            pyramid::backward_rows(&spec.pyramid, &split_cols(&d_concat, widths))
        }
        GroupCache::FpnMLinear { levels } => {
            let d_levels = layers
                .iter()
                .zip(levels)
                .zip(grads.iter_mut())
                .map(|((layer, level), g)| pull(layer, level, dy, g))
                .collect::<Result<Vec<_>>>()?;
            pyramid::backward_rows(&spec.pyramid, &d_levels)
        }
        GroupCache::FpnFusion { levels, fuse_inputs } => {
            let stages = spec.pyramid.stages;
            let (head_layers, fuse_layers) = layers.split_at(stages);
            let (head_grads, fuse_grads) = grads.split_at_mut(stages);
            let mut d_heads: Vec<Option<DenseArray>> = vec![None; stages];
            let mut d_fused = dy.clone();
            for i in 0..stages - 1 {
                let d_in = pull(&fuse_layers[i], &fuse_inputs[i], &d_fused, &mut fuse_grads[i])?;
                let deeper_w = fuse_inputs[i].cols() - fuse_layers[i].out_len();
                let widths = [fuse_layers[i].out_len(), deeper_w];
                let mut parts = split_cols(&d_in, &widths).into_iter();
                d_heads[i] = parts.next();
                d_fused = parts.next().unwrap();
            }
            d_heads[stages - 1] = Some(d_fused);
            let d_levels = head_layers
                .iter()
                .zip(levels)
                .zip(head_grads.iter_mut())
                .zip(d_heads)
                .map(|(((layer, level), g), dh)| pull(layer, level, &dh.unwrap(), g))
                .collect::<Result<Vec<_>>>()?;
            pyramid::backward_rows(&spec.pyramid, &d_levels)
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::models::{init_model, moving_average, ModelSpec};

    fn random(shape: &[usize], seed: u64) -> DenseArray {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product();
        DenseArray::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn tiny(variant: Variant, channel_individual: bool) -> ModelSpec {
        let mut spec = ModelSpec::new(variant, 20, 8, 2).with_stages(2);
        spec.ma_kernel = 5;
        spec.channel_individual = channel_individual;
        spec
    }

    /// Batch MSE against `target`; the oracle for gradient checks.
    fn mse_loss(state: &ModelState, x: &DenseArray, target: &DenseArray) -> f64 {
        let (pred, _) = forward(state, x).unwrap();
        crate::numeric::mse(&pred, target).unwrap()
    }

    fn mse_grads(state: &ModelState, x: &DenseArray, target: &DenseArray) -> Gradients {
        let (pred, cache) = forward(state, x).unwrap();
        let n = pred.len() as f64;
        let g: Vec<f64> = pred.data().iter().zip(target.data()).map(|(p, t)| 2.0 * (p - t) / n).collect();
        backward(state, &cache, &DenseArray::new(pred.shape().to_vec(), g).unwrap()).unwrap()
    }

    fn check_gradients(spec: ModelSpec) {
        let state = init_model(&spec, 11).unwrap();
        let x = random(&[3, spec.lookback, spec.channels], 1);
        let y = random(&[3, spec.horizon, spec.channels], 2);
        let grads = mse_grads(&state, &x, &y);
        let analytic: Vec<f64> = grads.arrays().iter().flat_map(|a| a.data().to_vec()).collect();
        let h = 1e-6;
        let mut flat = 0;
        let mut worst: f64 = 0.0;
        for p in 0..state.param_shapes().len() {
            let len = state.param_shapes()[p].iter().product::<usize>();
            for j in (0..len).step_by(3) {
                let mut plus = state.clone();
                plus.params_mut()[p].data_mut()[j] += h;
                let mut minus = state.clone();
                minus.params_mut()[p].data_mut()[j] -= h;
                let numeric = (mse_loss(&plus, &x, &y) - mse_loss(&minus, &x, &y)) / (2.0 * h);
                let a = analytic[flat + j];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
                worst = worst.max(rel);
            }
            flat += len;
        }
        assert!(worst < 1e-5, "{:?}: worst relative error {worst}", spec.variant);

        // Input cotangent of the raw (unused) input as well.
        for j in (0..x.len()).step_by(5) {
            let mut xp = x.clone();
            xp.data_mut()[j] += h;
            let mut xm = x.clone();
            xm.data_mut()[j] -= h;
            let numeric = (mse_loss(&state, &xp, &y) - mse_loss(&state, &xm, &y)) / (2.0 * h);
            let a = grads.input.data()[j];
            assert!((a - numeric).abs() <= 1e-5 * a.abs().max(numeric.abs()).max(1e-4), "{:?} input {j}", spec.variant);
        }
    }

    #[test]
    fn gradients_match_finite_differences_for_every_variant() {
        for v in Variant::ALL {
            check_gradients(tiny(v, true));
            check_gradients(tiny(v, false));
        }
    }

    #[test]
    fn fusion_gradients_on_single_channel_instance() {
        check_gradients(ModelSpec::new(Variant::FpnFusion, 20, 8, 1).with_stages(2));
        check_gradients(ModelSpec::new(Variant::FpnFusion, 40, 16, 1).with_stages(3));
    }

    #[test]
    fn every_variant_maps_to_horizon_shape() {
        for v in Variant::ALL {
            let state = init_model(&tiny(v, true), 0).unwrap();
            let (pred, _) = forward(&state, &random(&[4, 20, 2], 3)).unwrap();
            assert_eq!(pred.shape(), &[4, 8, 2]);
        }
    }

    #[test]
    fn zero_pred_grad_gives_zero_gradients() {
        for v in Variant::ALL {
            let state = init_model(&tiny(v, true), 0).unwrap();
            let (_, cache) = forward(&state, &random(&[2, 20, 2], 3)).unwrap();
            let g = backward(&state, &cache, &DenseArray::zeros(&[2, 8, 2])).unwrap();
            assert!(g.arrays().iter().all(|a| a.data().iter().all(|v| *v == 0.0)));
            assert!(g.input.data().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn linear_weight_grad_is_outer_product() {
        let spec = ModelSpec::new(Variant::Linear, 5, 3, 1);
        let state = init_model(&spec, 2).unwrap();
        let x = random(&[1, 5, 1], 4);
        let dy = random(&[1, 3, 1], 5);
        let (_, cache) = forward(&state, &x).unwrap();
        let g = backward(&state, &cache, &dy).unwrap();
        let w = &g.groups[0][0].weight;
        for o in 0..3 {
            for i in 0..5 {
                assert_eq!(w.data()[o * 5 + i], dy.data()[o] * x.data()[i]);
            }
        }
        assert_eq!(g.groups[0][0].bias.data(), dy.data());
    }

    #[test]
    fn nlinear_is_shift_equivariant() {
        let state = init_model(&ModelSpec::new(Variant::NLinear, 24, 12, 3), 6).unwrap();
        let x = random(&[4, 24, 3], 7);
        let (base, _) = forward(&state, &x).unwrap();
        for c in [-7.5, 0.25, 1e3] {
            let mut shifted = x.clone();
            shifted.data_mut().iter_mut().for_each(|v| *v += c);
            let (pred, _) = forward(&state, &shifted).unwrap();
            for (p, b) in pred.data().iter().zip(base.data()) {
                assert!((p - (b + c)).abs() < 1e-9, "shift {c}");
            }
        }
    }

    #[test]
    fn dlinear_decomposition_reconstructs_input() {
        let x = random(&[1, 30, 1], 8).into_data();
        for k in [1, 5, 25, 30] {
            let trend = moving_average(&x, k).unwrap();
            for (t, v) in trend.iter().zip(&x) {
                let seasonal = v - t;
                assert!((t + seasonal - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dlinear_constant_input_with_zero_weights_predicts_zero() {
        let state = ModelState::zeroed(&ModelSpec::new(Variant::DLinear, 30, 6, 2)).unwrap();
        let (pred, _) = forward(&state, &DenseArray::full(&[2, 30, 2], 4.0)).unwrap();
        assert!(pred.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_fusion_model_predicts_zero() {
        let state = ModelState::zeroed(&ModelSpec::new(Variant::FpnFusion, 336, 96, 2)).unwrap();
        let (pred, _) = forward(&state, &random(&[2, 336, 2], 9)).unwrap();
        assert!(pred.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn channels_are_independent() {
        for v in Variant::ALL {
            for individual in [true, false] {
                let state = init_model(&tiny(v, individual), 1).unwrap();
                let x = random(&[2, 20, 2], 10);
                let (base, _) = forward(&state, &x).unwrap();
                let mut bumped = x.clone();
                for t in 0..20 {
                    bumped.data_mut()[(20 + t) * 2 + 1] += 0.5;
                }
                let (pred, _) = forward(&state, &bumped).unwrap();
                for b in 0..2 {
                    for t in 0..8 {
                        let i = (b * 8 + t) * 2;
                        assert_eq!(pred.data()[i], base.data()[i], "{v:?} channel 0 changed");
                        if b == 0 {
                            assert_eq!(pred.data()[i + 1], base.data()[i + 1], "{v:?} other sample changed");
                        }
                    }
                }
                assert_ne!(pred.data()[8 * 2 + 1], base.data()[8 * 2 + 1]);
            }
        }
    }

    #[test]
    fn shape_errors_and_stale_caches_are_rejected() {
        let state = init_model(&tiny(Variant::Linear, true), 0).unwrap();
        assert!(matches!(
            forward(&state, &DenseArray::zeros(&[1, 19, 2])),
            Err(Error::ShapeMismatch { .. })
        ));
        let (_, cache) = forward(&state, &DenseArray::zeros(&[1, 20, 2])).unwrap();
        let other = init_model(&tiny(Variant::NLinear, true), 0).unwrap();
        assert!(backward(&other, &cache, &DenseArray::zeros(&[1, 8, 2])).is_err());
        assert!(backward(&state, &cache, &DenseArray::zeros(&[2, 8, 2])).is_err());
    }
}
