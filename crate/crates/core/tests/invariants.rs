//! Property tests for the transform stack and renderer: perfect
//! reconstruction, linearity, oracle equivalence, energy conservation,
//! adaptive-weight semantics, compositing bounds, and thread-count
//! determinism.

use ndarray::Array2;
use proptest::prelude::*;

use wavemod_core::image::Image;
use wavemod_core::learnable::{adaptive_weight, apply_update, FilterMode, LearnableHighPass, WaveletOptimState, haar_reference};
use wavemod_core::splat::{render, render_backward, Gaussian2D, GaussianCloud, RenderSettings};
use wavemod_core::wavelet::{
    build_haar_bank, forward_dwt, inverse_dwt, Filter1D, StridedFilterMatrix, HAAR_HIGH, HAAR_LOW,
};

fn arb_image(max_half: usize, channels: usize) -> impl Strategy<Value = Image> {
    (1..=max_half, 1..=max_half).prop_flat_map(move |(hh, hw)| {
        let (h, w) = (2 * hh, 2 * hw);
        proptest::collection::vec(-2.0..2.0f64, h * w * channels).prop_map(move |data| {
            let chans = (0..channels)
                .map(|c| {
                    Array2::from_shape_vec(
                        (h, w),
                        data[c * h * w..(c + 1) * h * w].to_vec(),
                    )
                    .unwrap()
                })
                .collect();
            Image::new(chans).unwrap()
        })
    })
}

fn image_max_diff(a: &Image, b: &Image) -> f64 {
    let mut worst = 0.0f64;
    for (ca, cb) in a.channels().iter().zip(b.channels()) {
        for (va, vb) in ca.iter().zip(cb.iter()) {
            worst = worst.max((va - vb).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn haar_round_trip_is_perfect(img in prop_oneof![arb_image(32, 1), arb_image(32, 3)]) {
        let bank = build_haar_bank();
        let back = inverse_dwt(&forward_dwt(&img, &bank).unwrap(), &bank).unwrap();
        prop_assert!(image_max_diff(&img, &back) < 1e-6);
    }

    #[test]
    fn forward_dwt_is_linear(
        img_a in arb_image(12, 3),
        scale_a in -3.0..3.0f64,
        scale_b in -3.0..3.0f64,
    ) {
        // Same dims for both operands: derive the second from the first.
        let img_b = Image::new(
            img_a.channels().iter().map(|c| c.mapv(|v| (v * 1.7).sin())).collect(),
        ).unwrap();
        let combined = Image::new(
            img_a.channels().iter().zip(img_b.channels())
                .map(|(a, b)| scale_a * a + scale_b * b)
                .collect(),
        ).unwrap();
        let bank = build_haar_bank();
        let sb_a = forward_dwt(&img_a, &bank).unwrap();
        let sb_b = forward_dwt(&img_b, &bank).unwrap();
        let sb_c = forward_dwt(&combined, &bank).unwrap();
        for c in 0..3 {
            let expect = scale_a * &sb_a.hh[c] + scale_b * &sb_b.hh[c];
            for (e, g) in expect.iter().zip(sb_c.hh[c].iter()) {
                prop_assert!((e - g).abs() < 1e-9);
            }
            let expect_ll = scale_a * &sb_a.ll[c] + scale_b * &sb_b.ll[c];
            for (e, g) in expect_ll.iter().zip(sb_c.ll[c].iter()) {
                prop_assert!((e - g).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn strided_ops_match_dense_oracle(
        len in 2..40usize,
        cols in 2..16usize,
        high in proptest::bool::ANY,
    ) {
        let taps = if high { HAAR_HIGH } else { HAAR_LOW };
        let filter = Filter1D::new(taps.to_vec()).unwrap();
        let m = StridedFilterMatrix::new(filter, len).unwrap();
        let dense = m.dense();
        let x = Array2::from_shape_fn((len, cols), |(i, j)| ((i * 31 + j * 17) as f64 * 0.37).sin());
        let fast = m.forward_cols(&x);
        let slow = dense.dot(&x);
        for (a, b) in fast.iter().zip(slow.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let s = Array2::from_shape_fn((m.rows(), cols), |(i, j)| ((i + 2 * j) as f64 * 0.11).cos());
        let adj = m.adjoint_cols(&s);
        let adj_dense = dense.t().dot(&s);
        for (a, b) in adj.iter().zip(adj_dense.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn orthonormal_transform_conserves_energy(img in arb_image(24, 3)) {
        let bank = build_haar_bank();
        let sb = forward_dwt(&img, &bank).unwrap();
        let input_sq: f64 = img.channels().iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum();
        let mut band_sq = 0.0;
        for band in [&sb.ll, &sb.lh, &sb.hl, &sb.hh] {
            for c in band {
                band_sq += c.iter().map(|v| v * v).sum::<f64>();
            }
        }
        prop_assert!((input_sq - band_sq).abs() < 1e-6 * input_sq.max(1.0));
    }

    #[test]
    fn adaptive_weight_is_nonnegative(
        img in arb_image(12, 3),
        offset in -0.5..0.5f64,
    ) {
        let shifted = Image::new(
            img.channels().iter().map(|c| c.mapv(|v| v + offset)).collect(),
        ).unwrap();
        let lambda = adaptive_weight(&shifted, &img).unwrap();
        prop_assert!(lambda >= 0.0);
        // A constant offset carries no diagonal detail, so the detail gap is 0.
        prop_assert!(lambda < 1e-12);
    }

    #[test]
    fn rendered_intensities_stay_in_unit_interval(
        seed_vals in proptest::collection::vec((0.0..20.0f64, 0.0..20.0f64, -4.0..4.0f64, 0.2..4.0f64), 1..12),
    ) {
        let gaussians: Vec<Gaussian2D> = seed_vals.iter().map(|&(x, y, logit_val, scale)| Gaussian2D {
            mu: [x, y],
            log_scale: [scale.ln(), (scale * 0.7).ln()],
            theta: x * 0.3 - y * 0.2,
            color: [logit_val, -logit_val, logit_val * 0.5],
            opacity_logit: logit_val,
        }).collect();
        let cloud = GaussianCloud::new(gaussians);
        let img = render(&cloud, &RenderSettings::new(20, 20));
        for c in img.channels() {
            for v in c.iter() {
                prop_assert!((0.0..=1.0).contains(v), "value {v} escaped [0,1]");
            }
        }
    }
}

#[test]
fn adaptive_weight_positive_when_detail_differs() {
    let flat = Image::new(vec![Array2::from_elem((8, 8), 0.5); 3]).unwrap();
    let checker = Image::new(
        vec![Array2::from_shape_fn((8, 8), |(y, x)| if (y + x) % 2 == 0 { 0.9 } else { 0.1 }); 3],
    )
    .unwrap();
    let lambda = adaptive_weight(&flat, &checker).unwrap();
    assert!(lambda > 0.5, "checker vs flat should have a large detail gap, got {lambda}");
}

#[test]
fn render_is_identical_across_thread_counts() {
    let gaussians: Vec<Gaussian2D> = (0..40)
        .map(|i| Gaussian2D {
            mu: [(i % 8) as f64 * 4.0 + 1.0, (i / 8) as f64 * 6.0 + 2.0],
            log_scale: [(1.0 + (i % 4) as f64).ln(), (2.0 + (i % 3) as f64).ln()],
            theta: i as f64 * 0.17,
            color: [(i as f64 * 0.37).sin(), 0.3, -0.4],
            opacity_logit: ((i % 5) as f64 - 2.0) * 0.4,
        })
        .collect();
    let settings = RenderSettings::new(32, 30);
    let dl = Image::new(vec![Array2::from_shape_fn((30, 32), |(y, x)| ((y * 3 + x) as f64 * 0.05).sin()); 3]).unwrap();
    let mut outputs = Vec::new();
    for threads in [1usize, 2, 5] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let (img, grads) = pool.install(|| {
            let mut cloud = GaussianCloud::new(gaussians.clone());
            let img = render(&cloud, &settings);
            let grads = render_backward(&mut cloud, &settings, &dl).unwrap();
            (img, grads)
        });
        outputs.push((img, grads));
    }
    for other in &outputs[1..] {
        assert_eq!(
            image_max_diff(&outputs[0].0, &other.0),
            0.0,
            "forward render differs across thread counts"
        );
        assert_eq!(outputs[0].1.mu, other.1.mu);
        assert_eq!(outputs[0].1.log_scale, other.1.log_scale);
        assert_eq!(outputs[0].1.theta, other.1.theta);
        assert_eq!(outputs[0].1.color, other.1.color);
        assert_eq!(outputs[0].1.opacity, other.1.opacity);
    }
}

#[test]
fn tied_and_untied_agree_on_first_homogeneous_step() {
    // The wavelet loss is spatially homogeneous: every band sees the same
    // gradient, so one optimizer step from the shared zero init must produce
    // the same row-averaged taps in both parameterizations (up to the Adam
    // epsilon, which reacts to the gradient magnitude).
    let reference = haar_reference(16, 12).unwrap();
    let mut tied = LearnableHighPass::init_zero(16, 12, FilterMode::Analysis, true).unwrap();
    let mut untied = LearnableHighPass::init_zero(16, 12, FilterMode::Analysis, false).unwrap();
    let mut tied_state = WaveletOptimState::new(&tied);
    let mut untied_state = WaveletOptimState::new(&untied);
    let (_, g0, g1) = tied.wavelet_loss(&reference);
    assert!(apply_update(&mut tied, &mut tied_state, g0, g1, 1e-3));
    let (_, g0, g1) = untied.wavelet_loss(&reference);
    assert!(apply_update(&mut untied, &mut untied_state, g0, g1, 1e-3));
    let (t0, t1) = tied.row_averaged_filter();
    let (u0, u1) = untied.row_averaged_filter();
    for k in 0..2 {
        assert!((t0[k] - u0[k]).abs() < 1e-6, "h0 tap {k}: {} vs {}", t0[k], u0[k]);
        assert!((t1[k] - u1[k]).abs() < 1e-6, "h1 tap {k}: {} vs {}", t1[k], u1[k]);
    }
}

#[test]
fn modulation_round_trips_at_reference() {
    // With the learnable filter holding the reference taps, modulation is a
    // perfect-reconstruction transform for any image.
    for (h, w) in [(8usize, 8usize), (10, 6), (32, 20)] {
        let img = Image::new(
            (0..3)
                .map(|c| {
                    Array2::from_shape_fn((h, w), |(y, x)| {
                        ((y * 7 + x * 3 + c * 11) as f64 * 0.23).sin() * 0.4 + 0.5
                    })
                })
                .collect(),
        )
        .unwrap();
        for mode in [FilterMode::Analysis, FilterMode::Synthesis] {
            let lhp = LearnableHighPass::from_reference(h, w, mode, false).unwrap();
            let m = lhp.modulate_image(&img).unwrap();
            assert!(
                image_max_diff(&m.recon, &img) < 1e-6,
                "{mode:?} at {h}x{w}"
            );
        }
    }
}
