//! Differentiable 2D Gaussian splatting.
//!
//! Each Gaussian carries position (pixel coordinates), per-axis log scales,
//! a rotation, sigmoid-activated RGB, and a sigmoid-activated opacity. Pixels
//! composite contributions front to back in creation order over a black
//! background:
//!
//!   C(p) = sum_i rgb_i * alpha_i(p) * prod_{j<i} (1 - alpha_j(p))
//!
//! with alpha_i(p) = min(alpha_max, opacity_i * exp(-0.5 * d^T Sigma_i^-1 d)).
//! Contributions outside the cull radius or below the alpha cutoff are
//! skipped, and a pixel stops accepting contributions once its remaining
//! transmittance falls below a floor; forward and backward apply the same
//! rules, so the two always describe the same function.
//!
//! Along an image row the Mahalanobis form is a quadratic in x with constant
//! second difference, so per-pixel densities follow a two-multiply recurrence
//! instead of one exp() per pixel; Gaussians skewed enough for the recurrence
//! to leave double range fall back to direct evaluation.
//!
//! Work is split over fixed row bands (independent of thread count) and
//! backward partials are reduced in band order, which keeps every result
//! bit-reproducible under any parallelism setting.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

pub const ALPHA_CUTOFF: f64 = 1.0 / 255.0;
pub const ALPHA_MAX: f64 = 0.999;
pub const CULL_SIGMA: f64 = 3.0;
/// A pixel stops compositing once its transmittance drops below this. The
/// truncation (at most 1e-3 of full scale) sits well under the 1/255
/// quantization step of every image output.
pub const TRANS_FLOOR: f64 = 1e-3;
const ROW_BANDS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2D {
    /// Center in pixel coordinates (x, y); pixel centers sit on integers.
    pub mu: [f64; 2],
    /// Per-axis log standard deviations; effective scale is exp().
    pub log_scale: [f64; 2],
    /// Rotation of the scale frame, radians.
    pub theta: f64,
    /// Pre-activation RGB; effective color is sigmoid().
    pub color: [f64; 3],
    /// Pre-activation opacity; effective opacity is sigmoid().
    pub opacity_logit: f64,
}

#[derive(Debug, Clone)]
pub struct GaussianCloud {
    pub gaussians: Vec<Gaussian2D>,
    /// Accumulated diagonal-relative positional gradient norms since the last
    /// densification event, one slot per Gaussian.
    pub grad_accum: Vec<f64>,
    /// Accumulated raw positional gradient vectors over the same window; their
    /// mean direction seeds the clone offset so deterministic full-batch twins
    /// separate instead of shadowing each other forever.
    pub grad_dir_accum: Vec<[f64; 2]>,
    pub accum_count: u64,
}

impl GaussianCloud {
    pub fn new(gaussians: Vec<Gaussian2D>) -> Self {
        let n = gaussians.len();
        GaussianCloud {
            gaussians,
            grad_accum: vec![0.0; n],
            grad_dir_accum: vec![[0.0; 2]; n],
            accum_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn reset_accum(&mut self) {
        self.grad_accum.iter_mut().for_each(|v| *v = 0.0);
        self.grad_dir_accum.iter_mut().for_each(|v| *v = [0.0; 2]);
        self.accum_count = 0;
    }
}

#[derive(Debug, Clone)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub alpha_cutoff: f64,
    pub alpha_max: f64,
    pub cull_sigma: f64,
}

impl RenderSettings {
    pub fn new(width: usize, height: usize) -> Self {
        RenderSettings {
            width,
            height,
            alpha_cutoff: ALPHA_CUTOFF,
            alpha_max: ALPHA_MAX,
            cull_sigma: CULL_SIGMA,
        }
    }

    pub fn image_diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }
}

/// Per-group parameter gradients from one backward pass.
#[derive(Debug, Clone)]
pub struct CloudGrads {
    pub mu: Vec<[f64; 2]>,
    pub log_scale: Vec<[f64; 2]>,
    pub theta: Vec<f64>,
    pub color: Vec<[f64; 3]>,
    pub opacity: Vec<f64>,
}

impl CloudGrads {
    fn zeros(n: usize) -> Self {
        CloudGrads {
            mu: vec![[0.0; 2]; n],
            log_scale: vec![[0.0; 2]; n],
            theta: vec![0.0; n],
            color: vec![[0.0; 3]; n],
            opacity: vec![0.0; n],
        }
    }

    fn merge(&mut self, other: &CloudGrads) {
        for i in 0..self.theta.len() {
            self.mu[i][0] += other.mu[i][0];
            self.mu[i][1] += other.mu[i][1];
            self.log_scale[i][0] += other.log_scale[i][0];
            self.log_scale[i][1] += other.log_scale[i][1];
            self.theta[i] += other.theta[i];
            self.color[i][0] += other.color[i][0];
            self.color[i][1] += other.color[i][1];
            self.color[i][2] += other.color[i][2];
            self.opacity[i] += other.opacity[i];
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Activation-space view of one Gaussian, plus its conservative AABB and the
/// constants of the along-row density recurrence.
struct Prep {
    mu: [f64; 2],
    rgb: [f64; 3],
    op: f64,
    cos: f64,
    sin: f64,
    inv_sx2: f64,
    inv_sy2: f64,
    half_x: f64,
    half_y: f64,
    /// exp(-A) where 2A is the second x-difference of the Mahalanobis form.
    qmul: f64,
    /// Whether the multiplicative recurrence stays in double range over the
    /// whole AABB; when false, densities are evaluated directly.
    fast: bool,
    live: bool,
}

fn prepare(cloud: &GaussianCloud, settings: &RenderSettings) -> Vec<Prep> {
    cloud
        .gaussians
        .iter()
        .map(|g| {
            let sx = g.log_scale[0].exp();
            let sy = g.log_scale[1].exp();
            let (sin, cos) = g.theta.sin_cos();
            let op = sigmoid(g.opacity_logit);
            let inv_sx2 = 1.0 / (sx * sx);
            let inv_sy2 = 1.0 / (sy * sy);
            // Axis-aligned extent of the cull ellipse.
            let var_x = cos * cos * sx * sx + sin * sin * sy * sy;
            let var_y = sin * sin * sx * sx + cos * cos * sy * sy;
            let hx = settings.cull_sigma * var_x.sqrt();
            let hy = settings.cull_sigma * var_y.sqrt();
            // u(dx, dy) = a dx^2 + 2 b dx dy + c dy^2. The recurrence is safe
            // when u at the AABB corner keeps exp(-u/2) normal and the largest
            // one-pixel step of u keeps the ratio finite.
            let a = cos * cos * inv_sx2 + sin * sin * inv_sy2;
            let b = sin * cos * (inv_sx2 - inv_sy2);
            let c = sin * sin * inv_sx2 + cos * cos * inv_sy2;
            let u_corner = a * hx * hx + 2.0 * b.abs() * hx * hy + c * hy * hy;
            let max_step = 2.0 * a * (hx + 1.0) + 2.0 * b.abs() * hy;
            Prep {
                mu: g.mu,
                rgb: [sigmoid(g.color[0]), sigmoid(g.color[1]), sigmoid(g.color[2])],
                op,
                cos,
                sin,
                inv_sx2,
                inv_sy2,
                half_x: hx,
                half_y: hy,
                qmul: (-a).exp(),
                fast: u_corner <= 1400.0 && max_step <= 1200.0,
                live: op >= settings.alpha_cutoff
                    && sx.is_finite()
                    && sy.is_finite()
                    && g.mu[0].is_finite()
                    && g.mu[1].is_finite(),
            }
        })
        .collect()
}

/// Creation-ordered Gaussian index lists per image row.
fn row_lists(prep: &[Prep], settings: &RenderSettings) -> Vec<Vec<u32>> {
    let (w, h) = (settings.width, settings.height);
    let mut lists = vec![Vec::new(); h];
    for (i, p) in prep.iter().enumerate() {
        if !p.live {
            continue;
        }
        let x0 = (p.mu[0] - p.half_x).ceil();
        let x1 = (p.mu[0] + p.half_x).floor();
        if x1 < 0.0 || x0 > (w - 1) as f64 || x1 < x0 {
            continue;
        }
        let y0 = (p.mu[1] - p.half_y).ceil().max(0.0);
        let y1 = (p.mu[1] + p.half_y).floor().min((h - 1) as f64);
        if y1 < y0 {
            continue;
        }
        for y in y0 as usize..=y1 as usize {
            lists[y].push(i as u32);
        }
    }
    lists
}

#[derive(Clone)]
struct PixelHit {
    index: u32,
    alpha: f64,
    density: f64,
    qx: f64,
    qy: f64,
    trans: f64,
    clamped: bool,
}

/// Visits (x, density) for every pixel of one Gaussian's span on row `py`
/// whose density clears `eff_floor` (the cull floor raised to where opacity
/// times density reaches the alpha cutoff, so sub-cutoff pixels never leave
/// the sweep). Both passes drive their per-pixel work through this single
/// function, so their coverage decisions agree bitwise.
#[inline(always)]
fn sweep_row(
    p: &Prep,
    w: usize,
    py: f64,
    eff_floor: f64,
    cull2: f64,
    mut visit: impl FnMut(usize, f64),
) {
    let xs = (p.mu[0] - p.half_x).ceil().max(0.0);
    let xe = (p.mu[0] + p.half_x).floor().min((w - 1) as f64);
    if xe < xs {
        return;
    }
    let dy = py - p.mu[1];
    let dx0 = xs - p.mu[0];
    let qx0 = p.cos * dx0 + p.sin * dy;
    let qy0 = -p.sin * dx0 + p.cos * dy;
    let u0 = qx0 * qx0 * p.inv_sx2 + qy0 * qy0 * p.inv_sy2;
    let (xs, xe) = (xs as usize, xe as usize);
    if p.fast {
        let qx1 = qx0 + p.cos;
        let qy1 = qy0 - p.sin;
        let u1 = qx1 * qx1 * p.inv_sx2 + qy1 * qy1 * p.inv_sy2;
        let mut d = (-0.5 * u0).exp();
        let mut m = (-0.5 * (u1 - u0)).exp();
        for x in xs..=xe {
            if d >= eff_floor {
                visit(x, d);
            } else if m <= 1.0 {
                // Past the peak and already below the floor: monotone from
                // here on, nothing left to emit.
                break;
            }
            d *= m;
            m *= p.qmul;
        }
    } else {
        for x in xs..=xe {
            let k = (x - xs) as f64;
            let qx = qx0 + p.cos * k;
            let qy = qy0 - p.sin * k;
            let u = qx * qx * p.inv_sx2 + qy * qy * p.inv_sy2;
            if u <= cull2 {
                let d = (-0.5 * u).exp();
                if d >= eff_floor {
                    visit(x, d);
                }
            }
        }
    }
}

/// Front-to-back compositing over a black background. Output is raw (no
/// clamp); colors and opacities in (0, 1) keep every value inside [0, 1].
pub fn render(cloud: &GaussianCloud, settings: &RenderSettings) -> Image {
    let (w, h) = (settings.width, settings.height);
    let prep = prepare(cloud, settings);
    let lists = row_lists(&prep, settings);
    let floor = (-0.5 * settings.cull_sigma * settings.cull_sigma).exp();
    let cull2 = settings.cull_sigma * settings.cull_sigma;
    let mut flat = vec![[0.0f64; 3]; w * h];
    let band_rows = h.div_ceil(ROW_BANDS);
    flat.par_chunks_mut(band_rows * w)
        .enumerate()
        .for_each(|(band, rows)| {
            let y_start = band * band_rows;
            let mut trans = vec![1.0f64; w];
            for (local_y, row) in rows.chunks_mut(w).enumerate() {
                let y = y_start + local_y;
                let py = y as f64;
                trans.iter_mut().for_each(|t| *t = 1.0);
                let mut live_px = w;
                for &gi in &lists[y] {
                    if live_px == 0 {
                        break;
                    }
                    let p = &prep[gi as usize];
                    let eff = floor.max(settings.alpha_cutoff / p.op);
                    sweep_row(p, w, py, eff, cull2, |x, d| {
                        let t = trans[x];
                        if t < TRANS_FLOOR {
                            return;
                        }
                        let raw = p.op * d;
                        let alpha = if raw > settings.alpha_max { settings.alpha_max } else { raw };
                        let wgt = alpha * t;
                        row[x][0] += p.rgb[0] * wgt;
                        row[x][1] += p.rgb[1] * wgt;
                        row[x][2] += p.rgb[2] * wgt;
                        let tn = t * (1.0 - alpha);
                        trans[x] = tn;
                        if tn < TRANS_FLOOR {
                            live_px -= 1;
                        }
                    });
                }
            }
        });
    let mut channels = vec![Array2::zeros((h, w)); 3];
    for y in 0..h {
        for x in 0..w {
            let px = flat[y * w + x];
            for c in 0..3 {
                channels[c][(y, x)] = px[c];
            }
        }
    }
    Image::new(channels).unwrap()
}

/// Analytic gradients of a scalar loss through the compositing, given
/// dL/dC(p). Also folds each Gaussian's positional gradient norm (scaled by
/// the image diagonal) into the densification accumulator.
pub fn render_backward(
    cloud: &mut GaussianCloud,
    settings: &RenderSettings,
    dl_dc: &Image,
) -> Result<CloudGrads> {
    if dl_dc.num_channels() != 3
        || dl_dc.height() != settings.height
        || dl_dc.width() != settings.width
    {
        return Err(Error::Config("gradient image must be H x W x 3".into()));
    }
    let n = cloud.len();
    let (w, h) = (settings.width, settings.height);
    let prep = prepare(cloud, settings);
    let lists = row_lists(&prep, settings);
    let floor = (-0.5 * settings.cull_sigma * settings.cull_sigma).exp();
    let cull2 = settings.cull_sigma * settings.cull_sigma;
    let band_rows = h.div_ceil(ROW_BANDS);
    let bands: Vec<usize> = (0..h.div_ceil(band_rows)).collect();
    let partials: Vec<CloudGrads> = bands
        .par_iter()
        .map(|&band| {
            let mut g = CloudGrads::zeros(n);
            let y_end = ((band + 1) * band_rows).min(h);
            let mut trans = vec![1.0f64; w];
            let mut hits: Vec<Vec<PixelHit>> = vec![Vec::new(); w];
            for y in band * band_rows..y_end {
                let py = y as f64;
                trans.iter_mut().for_each(|t| *t = 1.0);
                hits.iter_mut().for_each(|hv| hv.clear());
                let mut live_px = w;
                // Same sweep as the forward pass, but remembering each
                // accepted contribution and its incoming transmittance.
                for &gi in &lists[y] {
                    if live_px == 0 {
                        break;
                    }
                    let p = &prep[gi as usize];
                    let eff = floor.max(settings.alpha_cutoff / p.op);
                    sweep_row(p, w, py, eff, cull2, |x, d| {
                        let t = trans[x];
                        if t < TRANS_FLOOR {
                            return;
                        }
                        let raw = p.op * d;
                        let clamped = raw > settings.alpha_max;
                        let alpha = if clamped { settings.alpha_max } else { raw };
                        let dx = x as f64 - p.mu[0];
                        let dy = py - p.mu[1];
                        hits[x].push(PixelHit {
                            index: gi,
                            alpha,
                            density: d,
                            qx: p.cos * dx + p.sin * dy,
                            qy: -p.sin * dx + p.cos * dy,
                            trans: t,
                            clamped,
                        });
                        let tn = t * (1.0 - alpha);
                        trans[x] = tn;
                        if tn < TRANS_FLOOR {
                            live_px -= 1;
                        }
                    });
                }
                for x in 0..w {
                    if hits[x].is_empty() {
                        continue;
                    }
                    let dl = [
                        dl_dc.get(0, y, x),
                        dl_dc.get(1, y, x),
                        dl_dc.get(2, y, x),
                    ];
                    // Walk back to front, keeping the color composited behind
                    // the current Gaussian (relative transmittance 1).
                    let mut behind = [0.0f64; 3];
                    for hit in hits[x].iter().rev() {
                        let i = hit.index as usize;
                        let p = &prep[i];
                        let wgt = hit.alpha * hit.trans;
                        let mut dl_dalpha = 0.0;
                        for c in 0..3 {
                            g.color[i][c] +=
                                dl[c] * wgt * p.rgb[c] * (1.0 - p.rgb[c]);
                            dl_dalpha += dl[c] * hit.trans * (p.rgb[c] - behind[c]);
                        }
                        if !hit.clamped {
                            g.opacity[i] += dl_dalpha * hit.density * p.op * (1.0 - p.op);
                            let dl_du = dl_dalpha * (-0.5) * hit.alpha;
                            let dl_qx = dl_du * 2.0 * hit.qx * p.inv_sx2;
                            let dl_qy = dl_du * 2.0 * hit.qy * p.inv_sy2;
                            let dl_dx = dl_qx * p.cos - dl_qy * p.sin;
                            let dl_dy = dl_qx * p.sin + dl_qy * p.cos;
                            g.mu[i][0] -= dl_dx;
                            g.mu[i][1] -= dl_dy;
                            g.log_scale[i][0] -= dl_du * 2.0 * hit.qx * hit.qx * p.inv_sx2;
                            g.log_scale[i][1] -= dl_du * 2.0 * hit.qy * hit.qy * p.inv_sy2;
                            g.theta[i] +=
                                dl_du * 2.0 * hit.qx * hit.qy * (p.inv_sx2 - p.inv_sy2);
                        }
                        for c in 0..3 {
                            behind[c] = p.rgb[c] * hit.alpha + (1.0 - hit.alpha) * behind[c];
                        }
                    }
                }
            }
            g
        })
        .collect();
    let mut grads = CloudGrads::zeros(n);
    for part in &partials {
        grads.merge(part);
    }
    let diag = settings.image_diagonal();
    for i in 0..n {
        let norm = (grads.mu[i][0] * grads.mu[i][0] + grads.mu[i][1] * grads.mu[i][1]).sqrt();
        cloud.grad_accum[i] += norm * diag;
        cloud.grad_dir_accum[i][0] += grads.mu[i][0];
        cloud.grad_dir_accum[i][1] += grads.mu[i][1];
    }
    cloud.accum_count += 1;
    Ok(grads)
}

/// Seeds a cloud from the target image: a jittered sqrt(n0) x sqrt(n0) grid,
/// colors sampled at the grid points, isotropic scale diagonal/sqrt(n0), and
/// opacity 0.5.
pub fn init_from_image(gt: &Image, n0: usize, seed: u64) -> Result<GaussianCloud> {
    if n0 == 0 {
        return Err(Error::Config("initial Gaussian count must be positive".into()));
    }
    let (w, h) = (gt.width(), gt.height());
    let rgb = gt.to_rgb();
    let diag = ((w * w + h * h) as f64).sqrt();
    let grid = (n0 as f64).sqrt().ceil() as usize;
    let cell_w = w as f64 / grid as f64;
    let cell_h = h as f64 / grid as f64;
    let scale = (diag / (n0 as f64).sqrt()).max(1e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussians = Vec::with_capacity(n0);
    'outer: for gy in 0..grid {
        for gx in 0..grid {
            if gaussians.len() == n0 {
                break 'outer;
            }
            let cx = (gx as f64 + 0.5) * cell_w + rng.gen_range(-0.25..0.25) * cell_w;
            let cy = (gy as f64 + 0.5) * cell_h + rng.gen_range(-0.25..0.25) * cell_h;
            let sx = (cx.round() as usize).min(w - 1);
            let sy = (cy.round() as usize).min(h - 1);
            let color = [
                logit(rgb.get(0, sy, sx).clamp(1e-3, 1.0 - 1e-3)),
                logit(rgb.get(1, sy, sx).clamp(1e-3, 1.0 - 1e-3)),
                logit(rgb.get(2, sy, sx).clamp(1e-3, 1.0 - 1e-3)),
            ];
            gaussians.push(Gaussian2D {
                mu: [cx, cy],
                log_scale: [scale.ln(), scale.ln()],
                theta: 0.0,
                color,
                opacity_logit: 0.0,
            });
        }
    }
    Ok(GaussianCloud::new(gaussians))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensifyStats {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Densify-and-prune pass. High mean positional gradient splits large
/// Gaussians (scales / 1.6, centers offset +-0.5 major std along the major
/// axis) and clones small ones, nudging the copy half a std down the mean
/// gradient; low opacities are dropped. Returns the new cloud, a remap
/// (`Some(old)` keeps that entry's optimizer state, `None` starts fresh) and
/// event counts. Accumulators come back zeroed.
pub fn densify_and_prune(
    cloud: &GaussianCloud,
    tau_grad: f64,
    tau_scale: f64,
    tau_opacity: f64,
    max_dim: f64,
) -> (GaussianCloud, Vec<Option<usize>>, DensifyStats) {
    let ln_split = 1.6f64.ln();
    let (lo, hi) = ((1e-3f64).ln(), max_dim.ln());
    let mut out = Vec::with_capacity(cloud.len() + 8);
    let mut remap = Vec::with_capacity(cloud.len() + 8);
    let mut stats = DensifyStats::default();
    for (i, g) in cloud.gaussians.iter().enumerate() {
        if sigmoid(g.opacity_logit) < tau_opacity {
            stats.pruned += 1;
            continue;
        }
        let mean = if cloud.accum_count > 0 {
            cloud.grad_accum[i] / cloud.accum_count as f64
        } else {
            0.0
        };
        let mut clamped = *g;
        clamped.log_scale[0] = clamped.log_scale[0].clamp(lo, hi);
        clamped.log_scale[1] = clamped.log_scale[1].clamp(lo, hi);
        if mean > tau_grad {
            let sx = clamped.log_scale[0].exp();
            let sy = clamped.log_scale[1].exp();
            if sx.max(sy) > tau_scale {
                let (sin, cos) = clamped.theta.sin_cos();
                let (s_major, dir) = if sx >= sy {
                    (sx, [cos, sin])
                } else {
                    (sy, [-sin, cos])
                };
                let off = 0.5 * s_major;
                let ls = [
                    (clamped.log_scale[0] - ln_split).clamp(lo, hi),
                    (clamped.log_scale[1] - ln_split).clamp(lo, hi),
                ];
                for sgn in [-1.0, 1.0] {
                    let mut child = clamped;
                    child.mu = [
                        clamped.mu[0] + sgn * off * dir[0],
                        clamped.mu[1] + sgn * off * dir[1],
                    ];
                    child.log_scale = ls;
                    out.push(child);
                    remap.push(None);
                }
                stats.split += 1;
            } else {
                out.push(clamped);
                remap.push(Some(i));
                // Identical twins would see identical gradients forever in a
                // deterministic full-batch run, so the copy starts half a std
                // along the descent direction.
                let dir = cloud.grad_dir_accum[i];
                let dn = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
                let mut copy = clamped;
                if dn > 0.0 {
                    let step = 0.5 * sx.max(sy);
                    copy.mu[0] -= step * dir[0] / dn;
                    copy.mu[1] -= step * dir[1] / dn;
                }
                out.push(copy);
                remap.push(None);
                stats.cloned += 1;
            }
        } else {
            out.push(clamped);
            remap.push(Some(i));
        }
    }
    (GaussianCloud::new(out), remap, stats)
}

const CLOUD_MAGIC: &[u8; 4] = b"WMG2";

/// Binary checkpoint: magic, little-endian u32 count, then 9 f64 fields per
/// Gaussian in declaration order.
pub fn save_cloud(cloud: &GaussianCloud, path: &std::path::Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + cloud.len() * 72);
    bytes.extend_from_slice(CLOUD_MAGIC);
    bytes.extend_from_slice(&(cloud.len() as u32).to_le_bytes());
    for g in &cloud.gaussians {
        for v in [
            g.mu[0],
            g.mu[1],
            g.log_scale[0],
            g.log_scale[1],
            g.theta,
            g.color[0],
            g.color[1],
            g.color[2],
            g.opacity_logit,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_cloud(path: &std::path::Path) -> Result<GaussianCloud> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 || &bytes[0..4] != CLOUD_MAGIC {
        return Err(Error::Codec("not a Gaussian cloud checkpoint".into()));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + count * 72 {
        return Err(Error::Codec(format!(
            "checkpoint length {} does not match count {}",
            bytes.len(),
            count
        )));
    }
    let mut gaussians = Vec::with_capacity(count);
    let mut off = 8;
    let mut next = || {
        let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        off += 8;
        v
    };
    for _ in 0..count {
        gaussians.push(Gaussian2D {
            mu: [next(), next()],
            log_scale: [next(), next()],
            theta: next(),
            color: [next(), next(), next()],
            opacity_logit: next(),
        });
    }
    Ok(GaussianCloud::new(gaussians))
}
