use wavemod_core::image::synthetic_scene;
use wavemod_core::splat::{load_cloud, render, RenderSettings};

fn main() {
    let path = std::env::args().nth(1).expect("usage: cloud_stats <cloud.bin>");
    let cloud = load_cloud(std::path::Path::new(&path)).unwrap();
    let gt = synthetic_scene(128);
    let img = render(&cloud, &RenderSettings::new(128, 128));
    let mut hist = [0usize; 8];
    for g in &cloud.gaussians {
        let s = g.log_scale[0].exp().max(g.log_scale[1].exp());
        let b = if s < 0.25 {
            0
        } else if s < 0.5 {
            1
        } else if s < 1.0 {
            2
        } else if s < 1.5 {
            3
        } else if s < 2.0 {
            4
        } else if s < 4.0 {
            5
        } else if s < 8.0 {
            6
        } else {
            7
        };
        hist[b] += 1;
    }
    println!("n = {}", cloud.len());
    println!("max-scale hist [<.25 <.5 <1 <1.5 <2 <4 <8 >=8]: {hist:?}");
    // Region MSE: checker patch x 88..104 y 24..40, a ring around it, rest.
    let mut acc = [[0.0f64; 2]; 3];
    for y in 0..128 {
        for x in 0..128 {
            let in_patch = (88..104).contains(&x) && (24..40).contains(&y);
            let in_ring = !in_patch && (84..108).contains(&x) && (20..44).contains(&y);
            let r = if in_patch { 0 } else if in_ring { 1 } else { 2 };
            for c in 0..3 {
                let d = img.get(c, y, x) - gt.get(c, y, x);
                acc[r][0] += d * d;
                acc[r][1] += 1.0;
            }
        }
    }
    for (name, a) in ["patch", "ring ", "rest "].iter().zip(acc) {
        let mse = a[0] / a[1];
        println!("{name}: mse {mse:.3e}  psnr {:.2}", -10.0 * mse.log10());
    }
    // Count gaussians centered in the patch region.
    let inside = cloud
        .gaussians
        .iter()
        .filter(|g| (84.0..108.0).contains(&g.mu[0]) && (20.0..44.0).contains(&g.mu[1]))
        .count();
    println!("centered in patch+ring: {inside}");
    let lh = wavemod_core::learnable::adaptive_weight(&img, &gt).unwrap();
    println!("lambda_h vs gt: {lh:.4}");
}
