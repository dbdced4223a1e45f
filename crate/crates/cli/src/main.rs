//! `wavemod` — learnable wavelet frequency modulation for 2D Gaussian
//! splatting, from the command line.
//!
//! Exit codes: 0 success, 1 verification failure (reconstruction or gradient
//! check out of tolerance), 2 usage/config error, 3 runtime numeric failure.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use wavemod_core::check::{run_gradcheck, GRADCHECK_TOLERANCE};
use wavemod_core::error::Error;
use wavemod_core::image::Image;
use wavemod_core::trainer::{compare_modes, run_training};
use wavemod_core::wavelet::{build_haar_bank, forward_dwt, inverse_dwt, SubbandSet};

const EXIT_VERIFICATION: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_NUMERIC: i32 = 3;

#[derive(Parser)]
#[command(
    name = "wavemod",
    version,
    about = "Coarse-to-fine Gaussian splat training with a learnable wavelet filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training regime: vanilla, opti, or auto.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Learning rate for the wavelet filter (auto mode).
    #[arg(long)]
    filter_lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training image; repeatable. Overrides images from the config file.
    #[arg(long)]
    image: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose an image into Haar subbands and verify reconstruction.
    Dwt {
        /// Input image (PNG or binary PPM).
        #[arg(long)]
        image: PathBuf,
        /// Output directory for subband images and reconstruction.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit a 2D Gaussian cloud to an image under the configured regime.
    Train(RunArgs),
    /// Run vanilla, opti, and auto with a shared seed and tabulate results.
    Compare(RunArgs),
    /// Check every analytic gradient against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn resolve_run_config(args: &RunArgs) -> Result<wavemod_core::trainer::TrainConfig, Error> {
    let file = match &args.config {
        Some(path) => config::load_config_file(path)?,
        None => config::FileValues::default(),
    };
    let cli = config::CliValues {
        mode: args.mode.as_deref().map(str::parse).transpose()?,
        iterations: args.iterations,
        filter_lr: args.filter_lr,
        seed: args.seed,
        out_dir: args.out.clone(),
        images: args.image.clone(),
    };
    Ok(config::resolve(file, cli))
}

/// Maps a subband to a displayable image: 0.5 + value normalized by twice
/// the band's max magnitude, so zero detail renders mid-gray.
fn visualize_high_band(band: &[ndarray::Array2<f64>]) -> Image {
    let maxabs = band
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let channels = band
        .iter()
        .map(|c| {
            if maxabs == 0.0 {
                ndarray::Array2::from_elem(c.dim(), 0.5)
            } else {
                c.mapv(|v| 0.5 + v / (2.0 * maxabs))
            }
        })
        .collect();
    Image::new(channels).expect("subband channels are a valid image")
}

fn write_band_f32(path: &Path, band: &[ndarray::Array2<f64>]) -> Result<(), Error> {
    let mut bytes = Vec::new();
    for c in band {
        for v in c.iter() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn cmd_dwt(image: &Path, out: &Path) -> Result<i32, Error> {
    let input = Image::load(image)
        .map_err(|e| Error::Config(format!("cannot load {}: {e}", image.display())))?;
    let input = input.pad_to_even();
    let bank = build_haar_bank();
    let subbands: SubbandSet = forward_dwt(&input, &bank)?;
    let recon = inverse_dwt(&subbands, &bank)?;
    let mut max_err = 0.0f64;
    for c in 0..input.num_channels() {
        for y in 0..input.height() {
            for x in 0..input.width() {
                max_err = max_err.max((recon.get(c, y, x) - input.get(c, y, x)).abs());
            }
        }
    }
    std::fs::create_dir_all(out)?;
    // The coarse band carries a factor-2 gain over the input range.
    let ll_vis = Image::new(subbands.ll.iter().map(|c| c.mapv(|v| v / 2.0)).collect())?;
    ll_vis.clamp01().save_png(&out.join("ll.png"))?;
    visualize_high_band(&subbands.lh).save_png(&out.join("lh.png"))?;
    visualize_high_band(&subbands.hl).save_png(&out.join("hl.png"))?;
    visualize_high_band(&subbands.hh).save_png(&out.join("hh.png"))?;
    recon.clamp01().save_png(&out.join("recon.png"))?;
    write_band_f32(&out.join("ll.f32"), &subbands.ll)?;
    write_band_f32(&out.join("lh.f32"), &subbands.lh)?;
    write_band_f32(&out.join("hl.f32"), &subbands.hl)?;
    write_band_f32(&out.join("hh.f32"), &subbands.hh)?;
    println!("max reconstruction error: {max_err:e}");
    println!("wrote subbands and reconstruction to {}", out.display());
    if max_err < 1e-6 {
        Ok(0)
    } else {
        eprintln!("reconstruction error exceeds 1e-6");
        Ok(EXIT_VERIFICATION)
    }
}

fn cmd_train(args: &RunArgs) -> Result<i32, Error> {
    let cfg = resolve_run_config(args)?;
    let artifacts = run_training(&cfg)?;
    let out = &artifacts.output;
    let last = out.metrics.last().expect("at least one metrics row");
    println!(
        "{} mode: {} iterations, final PSNR {:.2} dB, SSIM {:.4}, {} Gaussians (peak {})",
        cfg.mode,
        cfg.iterations,
        last.psnr,
        last.ssim,
        last.gaussian_count,
        last.peak_gaussian_count
    );
    if out.skipped_filter_updates > 0 {
        eprintln!(
            "warning: {} filter updates skipped on non-finite gradients",
            out.skipped_filter_updates
        );
    }
    println!(
        "wall clock: {} ms; artifacts in {}",
        out.wall_clock.as_millis(),
        artifacts.out_dir.display()
    );
    Ok(0)
}

fn cmd_compare(args: &RunArgs) -> Result<i32, Error> {
    let cfg = resolve_run_config(args)?;
    let rows = compare_modes(&cfg)?;
    println!("mode      psnr     ssim    peak_gaussians  wall_clock_ms");
    for r in &rows {
        println!(
            "{:<8} {:>7.2} {:>8.4} {:>15} {:>13}",
            r.mode.as_str(),
            r.psnr,
            r.ssim,
            r.peak_gaussians,
            r.wall_clock_ms
        );
    }
    println!(
        "summary written to {}",
        cfg.out_dir.join("summary.csv").display()
    );
    Ok(0)
}

fn cmd_gradcheck(seed: u64) -> i32 {
    let report = run_gradcheck(seed);
    for g in &report.groups {
        println!(
            "group {:<18} worst rel err {:>10.3e} over {:>2} probes -> {}",
            g.name,
            g.worst_rel,
            g.probes,
            if g.pass() { "PASS" } else { "FAIL" }
        );
    }
    if report.all_pass() {
        println!(
            "all {} gradient groups within {GRADCHECK_TOLERANCE:e}",
            report.groups.len()
        );
        0
    } else {
        eprintln!("gradient check failed");
        EXIT_VERIFICATION
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Dwt { image, out } => cmd_dwt(image, out),
        Command::Train(args) => cmd_train(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Gradcheck { seed } => Ok(cmd_gradcheck(*seed)),
    }
}

fn main() {
    // WAVEMOD_THREADS caps internal parallelism; 0 or unset means automatic.
    let threads = std::env::var("WAVEMOD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}
