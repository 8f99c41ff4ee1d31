//! Finite-difference verification of the full model backward pass, the
//! decode Jacobian-vector product in the style vector, and the empirical
//! Lipschitz bound that justifies the refinement step size.

mod common;

use cfkit::glyph::GlyphImage;
use cfkit::gradcheck::{check_gradient, GradCheckReport};
use cfkit::model::{ContentFeature, ModelDims, StyleVector, ToyModelGrads, ToyModelParams};
use cfkit::pcl::{reconstruction_loss, PclConfig, PclVariant};
use cfkit::projection::ProjectionPlan;
use common::random_image;

const GROUP_NAMES: [&str; 10] = [
    "content_w",
    "content_b",
    "style_w",
    "style_b",
    "gamma_w",
    "gamma_b",
    "beta_w",
    "beta_b",
    "decoder_w",
    "decoder_b",
];

/// Stage-1 style forward pass: encode both inputs, decode, score.
fn forward_loss(
    params: &ToyModelParams,
    content_img: &GlyphImage,
    style_img: &GlyphImage,
    target: &GlyphImage,
    cfg: &PclConfig<'_>,
    lambda: f64,
) -> f64 {
    let c = params.encode_content(content_img).unwrap();
    let s = params.encode_style(style_img).unwrap();
    let out = params.decode(&c, &s).unwrap();
    reconstruction_loss(&out, target, lambda, cfg, false)
        .unwrap()
        .value
}

/// Analytic gradient of the same loss for every parameter array.
fn analytic_grads(
    params: &ToyModelParams,
    content_img: &GlyphImage,
    style_img: &GlyphImage,
    target: &GlyphImage,
    cfg: &PclConfig<'_>,
    lambda: f64,
) -> ToyModelGrads {
    let mut grads = ToyModelGrads::zeros(&params.dims);
    let c = params.encode_content(content_img).unwrap();
    let s = params.encode_style(style_img).unwrap();
    let trace = params.decode_with_trace(&c, &s).unwrap();
    let loss = reconstruction_loss(&trace.output, target, lambda, cfg, true).unwrap();
    let d_out = loss.gradient.unwrap();
    let (dc, ds) = params.decode_backward(&c.values, &s.values, &trace, &d_out, Some(&mut grads));
    params.content_encoder_backward(content_img, &c.values, &dc, &mut grads);
    params.style_encoder_backward(style_img, &s.values, &ds, &mut grads);
    grads
}

#[test]
fn backward_matches_finite_differences_on_every_parameter_group() {
    let dims = ModelDims::new(16, 16, 10, 5).unwrap();
    let plan = ProjectionPlan::new(16, 16, 6).unwrap();

    // Group boundaries in the flattened parameter vector.
    let probe = ToyModelParams::zeros(dims);
    let group_sizes: Vec<usize> = probe.arrays().iter().map(|a| a.len()).collect();

    let mut per_group_worst = vec![1.0f64; 10];
    for case in 0..20u64 {
        let params = ToyModelParams::init(dims, 10_000 + case);
        let content_img = random_image(16, 16, 3 * case, 0.05, 0.95);
        let style_img = random_image(16, 16, 3 * case + 1, 0.05, 0.95);
        let target = random_image(16, 16, 3 * case + 2, 0.1, 0.9);
        let variant = if case % 2 == 0 {
            PclVariant::Wdl
        } else {
            PclVariant::Kl
        };
        let cfg = PclConfig::new(variant, &plan);
        let lambda = variant.default_lambda();

        let grads = analytic_grads(&params, &content_img, &style_img, &target, &cfg, lambda);
        let flat_grads: Vec<f64> = grads.arrays().concat();
        let flat_params = params.flatten();

        // Every coordinate of the small groups; a strided sample of the
        // image-sized matrices keeps each case under a second.
        let mut offset = 0;
        let mut reports: Vec<GradCheckReport> = Vec::new();
        let mut scratch = params.clone();
        for (g, &len) in group_sizes.iter().enumerate() {
            let indices: Vec<usize> = if len > 600 {
                (0..len).step_by(len / 150).map(|i| offset + i).collect()
            } else {
                (0..len).map(|i| offset + i).collect()
            };
            let report = check_gradient(
                |flat: &[f64]| -> f64 {
                    scratch.set_from_flat(flat);
                    forward_loss(&scratch, &content_img, &style_img, &target, &cfg, lambda)
                },
                &flat_params,
                &flat_grads,
                1e-4,
                1e-4,
                Some(&indices),
            );
            per_group_worst[g] = per_group_worst[g].min(report.fraction_ok());
            reports.push(report);
            offset += len;
        }

        for (g, report) in reports.iter().enumerate() {
            assert!(
                report.fraction_ok() >= 0.99,
                "case {case}, group {}: {}/{} ok, max rel err {}",
                GROUP_NAMES[g],
                report.within_tol,
                report.checked,
                report.max_rel_err
            );
        }
    }
    for (g, worst) in per_group_worst.iter().enumerate() {
        println!("group {:>10}: worst fraction ok {worst}", GROUP_NAMES[g]);
    }
}

#[test]
fn decode_jacobian_vector_product_in_style_matches_finite_differences() {
    // Hand-rolled forward-mode pass through the decoder, compared against a
    // central difference along a random direction.
    use rand::Rng;
    use rand::SeedableRng;
    let dims = ModelDims::new(12, 12, 8, 4).unwrap();
    let params = ToyModelParams::init(dims, 42);
    let c = params
        .encode_content(&random_image(12, 12, 7, 0.1, 0.9))
        .unwrap();
    let s = params
        .encode_style(&random_image(12, 12, 8, 0.1, 0.9))
        .unwrap();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

    // Forward-mode: d_gamma = G_w dir, d_beta = B_w dir,
    // d_m = c * d_gamma + d_beta, d_z = W_d d_m, d_out = out(1-out) d_z.
    let trace = params.decode_with_trace(&c, &s).unwrap();
    let d_gamma = params.gamma_w.matvec(&dir);
    let d_beta = params.beta_w.matvec(&dir);
    let d_m: Vec<f64> = c
        .values
        .iter()
        .zip(&d_gamma)
        .zip(&d_beta)
        .map(|((cv, dg), db)| cv * dg + db)
        .collect();
    let d_z = params.decoder_w.matvec(&d_m);
    let jvp: Vec<f64> = trace
        .output
        .pixels()
        .iter()
        .zip(&d_z)
        .map(|(&o, dz)| o * (1.0 - o) * dz)
        .collect();

    let eps = 1e-5;
    let shift = |sign: f64| -> Vec<f64> {
        let s2 = StyleVector::new(
            s.values
                .iter()
                .zip(&dir)
                .map(|(v, d)| v + sign * eps * d)
                .collect(),
        );
        params.decode(&c, &s2).unwrap().pixels().to_vec()
    };
    let plus = shift(1.0);
    let minus = shift(-1.0);
    for i in 0..jvp.len() {
        let numeric = (plus[i] - minus[i]) / (2.0 * eps);
        let denom = jvp[i].abs().max(numeric.abs()).max(1e-8);
        assert!(
            (jvp[i] - numeric).abs() / denom < 1e-4,
            "pixel {i}: jvp {} vs fd {numeric}",
            jvp[i]
        );
    }
}

#[test]
fn identical_output_and_target_zero_the_l1_gradient_component() {
    // With lambda = 0 the reconstruction gradient is exactly the L1
    // subgradient, which is 0 everywhere when the images match.
    let plan = ProjectionPlan::new(12, 12, 4).unwrap();
    let cfg = PclConfig::new(PclVariant::Wdl, &plan);
    let img = random_image(12, 12, 3, 0.2, 0.8);
    let loss = reconstruction_loss(&img, &img, 0.0, &cfg, true).unwrap();
    assert_eq!(loss.value, 0.0);
    assert!(loss.gradient.unwrap().iter().all(|&g| g == 0.0));
}

#[test]
fn decode_is_lipschitz_in_style_across_seeds() {
    // Estimate L on one seed, then check that perturbation responses under
    // other seeds stay within a modest factor of it.
    use rand::Rng;
    use rand::SeedableRng;
    let dims = ModelDims::new(12, 12, 8, 4).unwrap();
    let estimate = |model_seed: u64| -> f64 {
        let params = ToyModelParams::init(dims, model_seed);
        let c = params
            .encode_content(&random_image(12, 12, model_seed + 1, 0.1, 0.9))
            .unwrap();
        let s = params
            .encode_style(&random_image(12, 12, model_seed + 2, 0.1, 0.9))
            .unwrap();
        let base = params.decode(&c, &s).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(model_seed + 3);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let delta = 1e-3;
            let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            let s2 = StyleVector::new(
                s.values
                    .iter()
                    .zip(&dir)
                    .map(|(v, d)| v + delta * d / norm)
                    .collect(),
            );
            let out = params.decode(&c, &s2).unwrap();
            let change: f64 = out
                .pixels()
                .iter()
                .zip(base.pixels())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(change / delta);
        }
        worst
    };
    let reference = estimate(100);
    assert!(reference.is_finite() && reference > 0.0);
    for seed in [200, 300, 400] {
        let l = estimate(seed);
        assert!(
            l < reference * 3.0 + 1.0,
            "seed {seed}: L {l} vs reference {reference}"
        );
    }
}

#[test]
fn decode_trace_matches_direct_composition() {
    // decode() and decode_with_trace() agree, and the modulated vector obeys
    // m = c * gamma + beta.
    let dims = ModelDims::new(12, 12, 8, 4).unwrap();
    let params = ToyModelParams::init(dims, 77);
    let c = ContentFeature::new(vec![0.3, -0.2, 0.9, 0.0, 0.5, -0.8, 0.1, 0.7]);
    let s = StyleVector::new(vec![0.2, -0.4, 0.6, -0.1]);
    let trace = params.decode_with_trace(&c, &s).unwrap();
    let direct = params.decode(&c, &s).unwrap();
    assert_eq!(trace.output, direct);
    for i in 0..8 {
        let expected = c.values[i] * trace.gamma[i] + trace.beta[i];
        assert!((trace.modulated[i] - expected).abs() < 1e-15);
    }
}
