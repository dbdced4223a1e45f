use std::time::Instant;
use wavemod_core::image::synthetic_scene;
use wavemod_core::loss::combined_loss;
use wavemod_core::splat::{init_from_image, render, render_backward, RenderSettings};
use wavemod_core::wavelet::{build_haar_bank, forward_dwt, inverse_dwt};

fn main() {
    std::env::set_var("WAVEMOD_THREADS", "1");
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build_global()
        .ok();
    let gt = synthetic_scene(128);
    let settings = RenderSettings::new(128, 128);
    for n in [64usize, 1000, 2440] {
        let mut cloud = init_from_image(&gt, n, 7).unwrap();
        let reps = 50;
        let t = Instant::now();
        let mut img = render(&cloud, &settings);
        for _ in 1..reps {
            img = render(&cloud, &settings);
        }
        let fwd = t.elapsed().as_secs_f64() / reps as f64;
        let loss = combined_loss(&img, &gt).unwrap();
        let t = Instant::now();
        for _ in 0..reps {
            render_backward(&mut cloud, &settings, &loss.dx).unwrap();
        }
        let bwd = t.elapsed().as_secs_f64() / reps as f64;
        let t = Instant::now();
        for _ in 0..reps {
            let _ = combined_loss(&img, &gt).unwrap();
        }
        let lo = t.elapsed().as_secs_f64() / reps as f64;
        println!(
            "n={n}: render fwd {:.2}ms  bwd {:.2}ms  combined_loss {:.2}ms",
            fwd * 1e3,
            bwd * 1e3,
            lo * 1e3
        );
    }
    let bank = build_haar_bank();
    let reps = 50;
    let t = Instant::now();
    for _ in 0..reps {
        let bands = forward_dwt(&gt, &bank).unwrap();
        let _ = inverse_dwt(&bands, &bank).unwrap();
    }
    println!("dwt round trip {:.2}ms", t.elapsed().as_secs_f64() / reps as f64 * 1e3);
}
