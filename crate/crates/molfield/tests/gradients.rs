//! Central finite-difference checks for every analytic gradient path:
//! the modulated network, the convolutional encoder, and the full MSE
//! training loss through both. All at 64-bit with step 1e-4.

use ndarray::{Array1, Array2};

use molfield::net::{
    init_network, ConvEncoder, EncoderConfig, ModulatedField, NetConfig,
};

const FD_STEP: f64 = 1e-4;
const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-9;

fn assert_close(analytic: f64, numeric: f64, what: &str) {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    assert!(
        diff <= REL_TOL * scale || diff <= ABS_FLOOR,
        "{what}: analytic {analytic} vs finite-difference {numeric} (diff {diff})"
    );
}

fn tiny_net_config() -> NetConfig {
    NetConfig {
        in_dim: 3,
        out_dim: 2,
        hidden_width: 8,
        num_hidden_layers: 2,
        omega0: 30.0,
        latent_dim: 4,
    }
}

fn test_points(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, 3), |(i, j)| ((i * 5 + j * 2 + 1) as f64 * 0.173).sin() * 0.8)
}

fn test_latent(dim: usize) -> Array1<f64> {
    Array1::from_shape_fn(dim, |i| ((i + 1) as f64 * 0.31).cos() * 0.5)
}

fn test_upstream(n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |(i, j)| ((i * 2 + j * 7 + 3) as f64 * 0.211).sin())
}

/// J(theta) = sum_ij upstream_ij * forward(theta)_ij
fn forward_contraction(net: &ModulatedField<f64>, latent: &Array1<f64>, points: &Array2<f64>, upstream: &Array2<f64>) -> f64 {
    let out = net.forward(latent, points.view()).unwrap();
    out.iter().zip(upstream.iter()).map(|(a, b)| a * b).sum()
}

#[test]
fn network_parameter_gradients_match_finite_differences() {
    let config = tiny_net_config();
    let mut net: ModulatedField<f64> = init_network(&config, 42).unwrap();
    // nonzero biases so no gradient path is trivially zero
    for b in net.synth_b.iter_mut().chain(net.mod_b.iter_mut()) {
        for (i, v) in b.iter_mut().enumerate() {
            *v = ((i + 1) as f64 * 0.17).sin() * 0.3;
        }
    }
    for (i, v) in net.out_b.iter_mut().enumerate() {
        *v = (i as f64 + 0.5) * 0.1;
    }

    let latent = test_latent(config.latent_dim);
    let points = test_points(5);
    let upstream = test_upstream(5, config.out_dim);

    let (_, cache) = net.forward_cached(&latent, points.view()).unwrap();
    let (grads, latent_grad) = net.backward(&cache, upstream.view()).unwrap();
    let analytic: Vec<Vec<f64>> = grads.grad_slices().iter().map(|s| s.to_vec()).collect();

    let n_tensors = analytic.len();
    for t in 0..n_tensors {
        let len = analytic[t].len();
        for i in 0..len {
            let original = net.param_slices()[t][i];
            net.param_slices_mut()[t][i] = original + FD_STEP;
            let plus = forward_contraction(&net, &latent, &points, &upstream);
            net.param_slices_mut()[t][i] = original - FD_STEP;
            let minus = forward_contraction(&net, &latent, &points, &upstream);
            net.param_slices_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            assert_close(analytic[t][i], numeric, &format!("tensor {t} element {i}"));
        }
    }

    // latent gradient through the modulator chain
    let mut latent_var = latent.clone();
    for i in 0..latent_var.len() {
        let original = latent_var[i];
        latent_var[i] = original + FD_STEP;
        let plus = forward_contraction(&net, &latent_var, &points, &upstream);
        latent_var[i] = original - FD_STEP;
        let minus = forward_contraction(&net, &latent_var, &points, &upstream);
        latent_var[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        assert_close(latent_grad[i], numeric, &format!("latent element {i}"));
    }
}

fn tiny_encoder_config() -> EncoderConfig {
    EncoderConfig {
        in_channels: 2,
        input_dims: [4, 4, 4],
        conv_widths: vec![2, 3],
        kernel: 3,
        stride: 2,
        padding: 1,
        latent_dim: 4,
    }
}

fn encoder_contraction(enc: &ConvEncoder<f64>, input: &Array2<f64>, upstream: &Array1<f64>) -> f64 {
    let (latent, _) = enc.encode_cached(input).unwrap();
    latent.iter().zip(upstream.iter()).map(|(a, b)| a * b).sum()
}

#[test]
fn encoder_parameter_gradients_match_finite_differences() {
    let config = tiny_encoder_config();
    let mut enc: ConvEncoder<f64> = ConvEncoder::init(&config, 7).unwrap();
    for b in enc.conv_b.iter_mut() {
        for (i, v) in b.iter_mut().enumerate() {
            *v = ((i + 2) as f64 * 0.23).sin() * 0.2;
        }
    }
    let input = Array2::from_shape_fn((64, 2), |(i, j)| {
        ((i * 3 + j + 1) as f64 * 0.117).sin().abs() + 0.05
    });
    let upstream = Array1::from_shape_fn(4, |i| ((i + 1) as f64 * 0.41).cos());

    let (_, cache) = enc.encode_cached(&input).unwrap();
    let grads = enc.backward(&cache, &upstream);
    let analytic: Vec<Vec<f64>> = grads.grad_slices().iter().map(|s| s.to_vec()).collect();

    for t in 0..analytic.len() {
        for i in 0..analytic[t].len() {
            let original = enc.param_slices()[t][i];
            enc.param_slices_mut()[t][i] = original + FD_STEP;
            let plus = encoder_contraction(&enc, &input, &upstream);
            enc.param_slices_mut()[t][i] = original - FD_STEP;
            let minus = encoder_contraction(&enc, &input, &upstream);
            enc.param_slices_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            assert_close(analytic[t][i], numeric, &format!("encoder tensor {t} element {i}"));
        }
    }
}

/// MSE loss over a point batch, the exact quantity the trainer minimizes.
fn mse_loss(net: &ModulatedField<f64>, latent: &Array1<f64>, points: &Array2<f64>, targets: &Array2<f64>) -> f64 {
    let out = net.forward(latent, points.view()).unwrap();
    let n = (out.nrows() * out.ncols()) as f64;
    out.iter()
        .zip(targets.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

#[test]
fn training_loss_gradients_match_finite_differences() {
    let config = tiny_net_config();
    let mut net: ModulatedField<f64> = init_network(&config, 3).unwrap();
    for b in net.mod_b.iter_mut() {
        for (i, v) in b.iter_mut().enumerate() {
            *v = ((i + 1) as f64 * 0.29).sin() * 0.25;
        }
    }
    let latent = test_latent(config.latent_dim);
    let points = test_points(6);
    let targets = Array2::from_shape_fn((6, 2), |(i, j)| ((i + j) as f64 * 0.37).sin() * 2.0);

    // analytic: upstream = 2 (f - t) / (N d)
    let (out, cache) = net.forward_cached(&latent, points.view()).unwrap();
    let n = (out.nrows() * out.ncols()) as f64;
    let upstream = (&out - &targets) * (2.0 / n);
    let (grads, latent_grad) = net.backward(&cache, upstream.view()).unwrap();
    let analytic: Vec<Vec<f64>> = grads.grad_slices().iter().map(|s| s.to_vec()).collect();

    for t in 0..analytic.len() {
        for i in 0..analytic[t].len() {
            let original = net.param_slices()[t][i];
            net.param_slices_mut()[t][i] = original + FD_STEP;
            let plus = mse_loss(&net, &latent, &points, &targets);
            net.param_slices_mut()[t][i] = original - FD_STEP;
            let minus = mse_loss(&net, &latent, &points, &targets);
            net.param_slices_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            assert_close(analytic[t][i], numeric, &format!("loss tensor {t} element {i}"));
        }
    }

    let mut latent_var = latent.clone();
    for i in 0..latent_var.len() {
        let original = latent_var[i];
        latent_var[i] = original + FD_STEP;
        let plus = mse_loss(&net, &latent_var, &points, &targets);
        latent_var[i] = original - FD_STEP;
        let minus = mse_loss(&net, &latent_var, &points, &targets);
        latent_var[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        assert_close(latent_grad[i], numeric, &format!("loss latent element {i}"));
    }
}

/// Auto-encoder composition: loss(decoder(encode(volume)), targets),
/// differentiated to encoder parameters through the latent.
#[test]
fn encoder_through_decoder_loss_gradients_match_finite_differences() {
    let net_config = NetConfig {
        in_dim: 3,
        out_dim: 1,
        hidden_width: 8,
        num_hidden_layers: 2,
        omega0: 30.0,
        latent_dim: 4,
    };
    let enc_config = EncoderConfig {
        in_channels: 1,
        input_dims: [4, 4, 4],
        conv_widths: vec![2, 3],
        kernel: 3,
        stride: 2,
        padding: 1,
        latent_dim: 4,
    };
    let net: ModulatedField<f64> = init_network(&net_config, 12).unwrap();
    let mut enc: ConvEncoder<f64> = ConvEncoder::init(&enc_config, 13).unwrap();
    for b in enc.conv_b.iter_mut() {
        for (i, v) in b.iter_mut().enumerate() {
            *v = ((i + 1) as f64 * 0.19).cos() * 0.2;
        }
    }
    let input = Array2::from_shape_fn((64, 1), |(i, _)| ((i + 1) as f64 * 0.113).sin().abs() + 0.1);
    let points = test_points(5);
    let targets = Array2::from_shape_fn((5, 1), |(i, _)| (i as f64 * 0.61).cos());

    let composite_loss = |enc: &ConvEncoder<f64>| -> f64 {
        let (latent, _) = enc.encode_cached(&input).unwrap();
        mse_loss(&net, &latent, &points, &targets)
    };

    // analytic chain: decoder backward gives d loss / d latent, encoder
    // backward pulls it to parameters
    let (latent, enc_cache) = enc.encode_cached(&input).unwrap();
    let (out, cache) = net.forward_cached(&latent, points.view()).unwrap();
    let n = (out.nrows() * out.ncols()) as f64;
    let upstream = (&out - &targets) * (2.0 / n);
    let (_, latent_grad) = net.backward(&cache, upstream.view()).unwrap();
    let enc_grads = enc.backward(&enc_cache, &latent_grad);
    let analytic: Vec<Vec<f64>> = enc_grads.grad_slices().iter().map(|s| s.to_vec()).collect();

    for t in 0..analytic.len() {
        for i in 0..analytic[t].len() {
            let original = enc.param_slices()[t][i];
            enc.param_slices_mut()[t][i] = original + FD_STEP;
            let plus = composite_loss(&enc);
            enc.param_slices_mut()[t][i] = original - FD_STEP;
            let minus = composite_loss(&enc);
            enc.param_slices_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            assert_close(
                analytic[t][i],
                numeric,
                &format!("composite tensor {t} element {i}"),
            );
        }
    }
}
