//! Regenerates the bundled synthetic test scene.
//!
//! Usage: cargo run -p wavemod-core --example gen_scene -- [SIZE] [OUT.png]
//! Defaults: 128 crates/cli/assets/synthetic128.png

use std::path::PathBuf;

use wavemod_core::image::synthetic_scene;

fn main() {
    let mut args = std::env::args().skip(1);
    let size: usize = args
        .next()
        .map(|s| s.parse().expect("SIZE must be an integer"))
        .unwrap_or(128);
    let out = PathBuf::from(
        args.next()
            .unwrap_or_else(|| "crates/cli/assets/synthetic128.png".into()),
    );
    let scene = synthetic_scene(size);
    scene.save_png(&out).expect("write scene");
    println!("wrote {}x{} scene to {}", size, size, out.display());
}
