//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, blank lines ignored. Every key
//! maps onto a `TrainConfig` field; unknown keys are rejected with their
//! line number so typos fail loudly instead of silently training with
//! defaults. `image` may repeat; all other keys may not. Values given on the
//! command line override the file.

use std::path::PathBuf;

use wavemod_core::error::{Error, Result};
use wavemod_core::learnable::FilterMode;
use wavemod_core::trainer::{BlurStage, TrainConfig, TrainMode};

#[derive(Debug, Default)]
pub struct FileValues {
    pub mode: Option<TrainMode>,
    pub iterations: Option<usize>,
    pub filter_lr: Option<f64>,
    pub filter_mode: Option<FilterMode>,
    pub tied: Option<bool>,
    pub norm_loss: Option<bool>,
    pub norm_loss_start: Option<usize>,
    pub blur_schedule: Option<Vec<BlurStage>>,
    pub n0: Option<usize>,
    pub adc_interval: Option<usize>,
    pub tau_grad: Option<f64>,
    pub tau_scale: Option<f64>,
    pub tau_opacity: Option<f64>,
    pub seed: Option<u64>,
    pub images: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub eval_interval: Option<usize>,
    pub record_wall_clock: Option<bool>,
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("config line {line_no}: {msg}"))
}

fn parse_bool(v: &str, line_no: usize) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(bad(line_no, format!("expected true/false, got '{other}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, line_no: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| bad(line_no, format!("invalid {what} '{v}': {e}")))
}

/// Schedule syntax: `start-end:window` stages joined by commas, e.g.
/// `0-1000:15,1000-2000:9`. An empty value means no blurring at all.
pub fn parse_blur_schedule(v: &str, line_no: usize) -> Result<Vec<BlurStage>> {
    let mut stages = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (range, window) = part
            .split_once(':')
            .ok_or_else(|| bad(line_no, format!("stage '{part}' is missing ':window'")))?;
        let (start, end) = range
            .split_once('-')
            .ok_or_else(|| bad(line_no, format!("stage '{part}' needs a start-end range")))?;
        stages.push(BlurStage {
            start: parse_num(start.trim(), line_no, "stage start")?,
            end: parse_num(end.trim(), line_no, "stage end")?,
            window: parse_num(window.trim(), line_no, "blur window")?,
        });
    }
    Ok(stages)
}

pub fn parse_config_text(text: &str) -> Result<FileValues> {
    let mut out = FileValues::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        if key != "image" && seen.contains(&key) {
            return Err(bad(line_no, format!("duplicate key '{key}'")));
        }
        match key {
            "mode" => out.mode = Some(value.parse()?),
            "iterations" => out.iterations = Some(parse_num(value, line_no, "iteration count")?),
            "filter_lr" => out.filter_lr = Some(parse_num(value, line_no, "learning rate")?),
            "filter_mode" => {
                out.filter_mode = Some(match value {
                    "analysis" => FilterMode::Analysis,
                    "synthesis" => FilterMode::Synthesis,
                    other => {
                        return Err(bad(
                            line_no,
                            format!("filter_mode '{other}' (expected analysis or synthesis)"),
                        ))
                    }
                })
            }
            "tied" => out.tied = Some(parse_bool(value, line_no)?),
            "norm_loss" => out.norm_loss = Some(parse_bool(value, line_no)?),
            "norm_loss_start" => {
                out.norm_loss_start = Some(parse_num(value, line_no, "iteration")?)
            }
            "blur_schedule" => out.blur_schedule = Some(parse_blur_schedule(value, line_no)?),
            "n0" => out.n0 = Some(parse_num(value, line_no, "count")?),
            "adc_interval" => out.adc_interval = Some(parse_num(value, line_no, "interval")?),
            "tau_grad" => out.tau_grad = Some(parse_num(value, line_no, "threshold")?),
            "tau_scale" => out.tau_scale = Some(parse_num(value, line_no, "threshold")?),
            "tau_opacity" => out.tau_opacity = Some(parse_num(value, line_no, "threshold")?),
            "seed" => out.seed = Some(parse_num(value, line_no, "seed")?),
            "image" => out.images.push(PathBuf::from(value)),
            "out_dir" => out.out_dir = Some(PathBuf::from(value)),
            "eval_interval" => out.eval_interval = Some(parse_num(value, line_no, "interval")?),
            "record_wall_clock" => out.record_wall_clock = Some(parse_bool(value, line_no)?),
            other => return Err(bad(line_no, format!("unknown key '{other}'"))),
        }
        if key != "image" {
            seen.push(key);
        }
    }
    Ok(out)
}

/// CLI-level overrides; every field beats the file, which beats defaults.
#[derive(Debug, Default)]
pub struct CliValues {
    pub mode: Option<TrainMode>,
    pub iterations: Option<usize>,
    pub filter_lr: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub images: Vec<PathBuf>,
}

pub fn resolve(file: FileValues, cli: CliValues) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    if let Some(v) = file.mode {
        cfg.mode = v;
    }
    if let Some(v) = file.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = file.filter_lr {
        cfg.filter_lr = v;
    }
    if let Some(v) = file.filter_mode {
        cfg.filter_mode = v;
    }
    if let Some(v) = file.tied {
        cfg.tied = v;
    }
    if let Some(v) = file.norm_loss {
        cfg.norm_loss_enabled = v;
    }
    if let Some(v) = file.norm_loss_start {
        cfg.norm_loss_start = v;
    }
    if let Some(v) = file.blur_schedule {
        cfg.blur_schedule = v;
    }
    if let Some(v) = file.n0 {
        cfg.n0 = v;
    }
    if let Some(v) = file.adc_interval {
        cfg.adc_interval = v;
    }
    if let Some(v) = file.tau_grad {
        cfg.tau_grad = v;
    }
    if let Some(v) = file.tau_scale {
        cfg.tau_scale = v;
    }
    if let Some(v) = file.tau_opacity {
        cfg.tau_opacity = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if !file.images.is_empty() {
        cfg.images = file.images;
    }
    if let Some(v) = file.out_dir {
        cfg.out_dir = v;
    }
    if let Some(v) = file.eval_interval {
        cfg.eval_interval = v;
    }
    if let Some(v) = file.record_wall_clock {
        cfg.record_wall_clock = v;
    }
    if let Some(v) = cli.mode {
        cfg.mode = v;
    }
    if let Some(v) = cli.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = cli.filter_lr {
        cfg.filter_lr = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.out_dir {
        cfg.out_dir = v;
    }
    if !cli.images.is_empty() {
        cfg.images = cli.images;
    }
    cfg
}

pub fn load_config_file(path: &std::path::Path) -> Result<FileValues> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# a comment
mode = auto
iterations = 2000   # trailing comment
filter_lr = 0.002
image = a.png
image = b.png
blur_schedule = 0-100:15, 100-200:9
norm_loss = true
tied = 1
";
        let f = parse_config_text(text).unwrap();
        assert_eq!(f.mode, Some(TrainMode::Auto));
        assert_eq!(f.iterations, Some(2000));
        assert_eq!(f.filter_lr, Some(0.002));
        assert_eq!(f.images.len(), 2);
        assert_eq!(
            f.blur_schedule.as_deref(),
            Some(&[
                BlurStage { start: 0, end: 100, window: 15 },
                BlurStage { start: 100, end: 200, window: 9 }
            ][..])
        );
        assert_eq!(f.norm_loss, Some(true));
        assert_eq!(f.tied, Some(true));
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let err = parse_config_text("mode = auto\nitterations = 5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("itterations"), "{msg}");
    }

    #[test]
    fn duplicate_keys_rejected_except_image() {
        assert!(parse_config_text("seed = 1\nseed = 2\n").is_err());
        assert!(parse_config_text("image = a.png\nimage = b.png\n").is_ok());
    }

    #[test]
    fn cli_overrides_file() {
        let file = parse_config_text("mode = opti\nseed = 5\niterations = 100\n").unwrap();
        let cli = CliValues {
            mode: Some(TrainMode::Auto),
            seed: Some(9),
            ..CliValues::default()
        };
        let cfg = resolve(file, cli);
        assert_eq!(cfg.mode, TrainMode::Auto);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.iterations, 100);
    }

    #[test]
    fn bad_values_reject_with_context() {
        assert!(parse_config_text("iterations = many\n").is_err());
        assert!(parse_config_text("mode = fast\n").is_err());
        assert!(parse_config_text("blur_schedule = 0-100\n").is_err());
        assert!(parse_config_text("tied = maybe\n").is_err());
        assert!(parse_config_text("just a line\n").is_err());
    }
}
