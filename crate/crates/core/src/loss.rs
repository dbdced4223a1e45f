//! Photometric losses with analytic gradients.
//!
//! The structural term uses an 11x11 Gaussian window (sigma 1.5) with
//! zero-padded same-size convolution, stabilizers C1 = 0.01^2 and C2 = 0.03^2
//! on a unit dynamic range, and is averaged over pixels and channels.
//! Gradients are provided with respect to both arguments because the trainer
//! backpropagates into the rendered image and into the (modulated) target.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
/// Structural weight in the combined loss: (1 - w) * L1 + w * DSSIM.
pub const DSSIM_WEIGHT: f64 = 0.2;

fn check_pair(a: &Image, b: &Image) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() || a.num_channels() != b.num_channels()
    {
        return Err(Error::Config(format!(
            "loss arguments differ in shape: {}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.num_channels(),
            b.height(),
            b.width(),
            b.num_channels()
        )));
    }
    Ok(())
}

/// Mean absolute error and its gradients. The subgradient at exact ties is 0.
pub fn l1_with_grad(x: &Image, y: &Image) -> Result<(f64, Image, Image)> {
    check_pair(x, y)?;
    let n = (x.height() * x.width() * x.num_channels()) as f64;
    let mut value = 0.0;
    let mut dx = Vec::with_capacity(x.num_channels());
    let mut dy = Vec::with_capacity(x.num_channels());
    for (cx, cy) in x.channels().iter().zip(y.channels()) {
        let mut gx = Array2::zeros(cx.dim());
        let mut gy = Array2::zeros(cx.dim());
        ndarray::Zip::from(cx)
            .and(cy)
            .and(&mut gx)
            .and(&mut gy)
            .for_each(|&a, &b, ga, gb| {
                let d = a - b;
                value += d.abs();
                let s = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *ga = s / n;
                *gb = -s / n;
            });
        dx.push(gx);
        dy.push(gy);
    }
    Ok((value / n, Image::new(dx)?, Image::new(dy)?))
}

pub fn l1_value(x: &Image, y: &Image) -> Result<f64> {
    check_pair(x, y)?;
    let n = (x.height() * x.width() * x.num_channels()) as f64;
    let mut value = 0.0;
    for (cx, cy) in x.channels().iter().zip(y.channels()) {
        for (a, b) in cx.iter().zip(cy.iter()) {
            value += (a - b).abs();
        }
    }
    Ok(value / n)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Separable same-size convolution with zero padding. The kernel is symmetric,
/// so this operator is its own adjoint. Runs as shifted row accumulations over
/// contiguous slices; this sits on the training hot path.
fn conv_same(x: &Array2<f64>, k: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (h, w) = x.dim();
    let half = (SSIM_WINDOW / 2) as isize;
    let src = x.as_slice().expect("loss inputs are standard layout");
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let orow = &mut tmp[y * w..(y + 1) * w];
        for (i, &kv) in k.iter().enumerate() {
            let off = i as isize - half;
            let shift = off.unsigned_abs();
            if shift >= w {
                continue;
            }
            let len = w - shift;
            let (dst0, src0) = if off < 0 { (shift, 0) } else { (0, shift) };
            for (d, s) in orow[dst0..dst0 + len].iter_mut().zip(&row[src0..src0 + len]) {
                *d += kv * s;
            }
        }
    }
    let mut out = vec![0.0; h * w];
    for (i, &kv) in k.iter().enumerate() {
        let off = i as isize - half;
        let shift = off.unsigned_abs();
        if shift >= h {
            continue;
        }
        let (dst_y0, src_y0) = if off < 0 { (shift, 0) } else { (0, shift) };
        for j in 0..h - shift {
            let srow = &tmp[(src_y0 + j) * w..(src_y0 + j + 1) * w];
            let drow = &mut out[(dst_y0 + j) * w..(dst_y0 + j + 1) * w];
            for (d, s) in drow.iter_mut().zip(srow) {
                *d += kv * s;
            }
        }
    }
    Array2::from_shape_vec((h, w), out).expect("dimensions preserved")
}

struct SsimChannel {
    mean_map: f64,
    // dL/d(conv outputs), kept so the adjoint pass can run lazily.
    d_mu_x: Array2<f64>,
    d_mu_y: Array2<f64>,
    d_sxx: Array2<f64>,
    d_syy: Array2<f64>,
    d_sxy: Array2<f64>,
}

/// Per-channel SSIM map statistics. `d_*` hold the map's derivative with
/// respect to each convolution output, not yet scaled by the loss weight.
fn ssim_channel(x: &Array2<f64>, y: &Array2<f64>, k: &[f64; SSIM_WINDOW], with_grad: bool) -> SsimChannel {
    let (h, w) = x.dim();
    let mu_x = conv_same(x, k);
    let mu_y = conv_same(y, k);
    let sxx = conv_same(&(x * x), k);
    let syy = conv_same(&(y * y), k);
    let sxy = conv_same(&(x * y), k);
    let mut total = 0.0;
    let dims = if with_grad { (h, w) } else { (0, 0) };
    let mut d_mu_x = Array2::zeros(dims);
    let mut d_mu_y = Array2::zeros(dims);
    let mut d_sxx = Array2::zeros(dims);
    let mut d_syy = Array2::zeros(dims);
    let mut d_sxy = Array2::zeros(dims);
    for i in 0..h {
        for j in 0..w {
            let (mx, my) = (mu_x[(i, j)], mu_y[(i, j)]);
            let n1 = 2.0 * mx * my + SSIM_C1;
            let n2 = 2.0 * (sxy[(i, j)] - mx * my) + SSIM_C2;
            let d1 = mx * mx + my * my + SSIM_C1;
            let d2 = sxx[(i, j)] - mx * mx + syy[(i, j)] - my * my + SSIM_C2;
            let s = (n1 * n2) / (d1 * d2);
            total += s;
            if with_grad {
                let inv = 1.0 / (d1 * d2);
                d_mu_x[(i, j)] = 2.0 * my * (n2 - n1) * inv - 2.0 * mx * s * (1.0 / d1 - 1.0 / d2);
                d_mu_y[(i, j)] = 2.0 * mx * (n2 - n1) * inv - 2.0 * my * s * (1.0 / d1 - 1.0 / d2);
                d_sxx[(i, j)] = -s / d2;
                d_syy[(i, j)] = -s / d2;
                d_sxy[(i, j)] = 2.0 * n1 * inv;
            }
        }
    }
    SsimChannel {
        mean_map: total / (h * w) as f64,
        d_mu_x,
        d_mu_y,
        d_sxx,
        d_syy,
        d_sxy,
    }
}

pub fn ssim_value(x: &Image, y: &Image) -> Result<f64> {
    check_pair(x, y)?;
    let k = gaussian_kernel();
    let mut acc = 0.0;
    for (cx, cy) in x.channels().iter().zip(y.channels()) {
        acc += ssim_channel(cx, cy, &k, false).mean_map;
    }
    Ok(acc / x.num_channels() as f64)
}

/// 1 - SSIM and its gradients with respect to both images.
pub fn dssim_with_grad(x: &Image, y: &Image) -> Result<(f64, Image, Image)> {
    check_pair(x, y)?;
    let k = gaussian_kernel();
    let nch = x.num_channels() as f64;
    let npix = (x.height() * x.width()) as f64;
    // d(dssim)/d(map pixel) for the mean over pixels and channels.
    let scale = -1.0 / (npix * nch);
    let mut value = 0.0;
    let mut dx = Vec::with_capacity(x.num_channels());
    let mut dy = Vec::with_capacity(x.num_channels());
    for (cx, cy) in x.channels().iter().zip(y.channels()) {
        let ch = ssim_channel(cx, cy, &k, true);
        value += ch.mean_map;
        // Adjoint of each conv output; the kernel is symmetric so conv_same
        // is self-adjoint under zero padding.
        let a_mu_x = conv_same(&ch.d_mu_x.mapv(|v| v * scale), &k);
        let a_mu_y = conv_same(&ch.d_mu_y.mapv(|v| v * scale), &k);
        let a_sxx = conv_same(&ch.d_sxx.mapv(|v| v * scale), &k);
        let a_syy = conv_same(&ch.d_syy.mapv(|v| v * scale), &k);
        let a_sxy = conv_same(&ch.d_sxy.mapv(|v| v * scale), &k);
        let gx = &a_mu_x + &(2.0 * cx * &a_sxx) + &(cy * &a_sxy);
        let gy = &a_mu_y + &(2.0 * cy * &a_syy) + &(cx * &a_sxy);
        dx.push(gx);
        dy.push(gy);
    }
    Ok((1.0 - value / nch, Image::new(dx)?, Image::new(dy)?))
}

pub struct CombinedLoss {
    pub total: f64,
    pub l1: f64,
    pub dssim: f64,
    pub dx: Image,
    pub dy: Image,
}

/// (1 - w) * L1 + w * (1 - SSIM), gradients included.
pub fn combined_loss(x: &Image, y: &Image) -> Result<CombinedLoss> {
    let (l1, l1_dx, l1_dy) = l1_with_grad(x, y)?;
    let (dssim, ds_dx, ds_dy) = dssim_with_grad(x, y)?;
    let mix = |a: &Image, b: &Image| -> Result<Image> {
        Image::new(
            a.channels()
                .iter()
                .zip(b.channels())
                .map(|(ca, cb)| (1.0 - DSSIM_WEIGHT) * ca + DSSIM_WEIGHT * cb)
                .collect(),
        )
    };
    Ok(CombinedLoss {
        total: (1.0 - DSSIM_WEIGHT) * l1 + DSSIM_WEIGHT * dssim,
        l1,
        dssim,
        dx: mix(&l1_dx, &ds_dx)?,
        dy: mix(&l1_dy, &ds_dy)?,
    })
}

/// Peak signal-to-noise ratio on a unit dynamic range, capped at 99 dB.
pub fn psnr(x: &Image, y: &Image) -> Result<f64> {
    check_pair(x, y)?;
    let n = (x.height() * x.width() * x.num_channels()) as f64;
    let mut mse = 0.0;
    for (cx, cy) in x.channels().iter().zip(y.channels()) {
        for (a, b) in cx.iter().zip(cy.iter()) {
            mse += (a - b) * (a - b);
        }
    }
    mse /= n;
    if mse == 0.0 {
        return Ok(99.0);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(99.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_image(h: usize, w: usize, nch: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(
            (0..nch)
                .map(|_| Array2::from_shape_fn((h, w), |_| rng.gen_range(0.1..0.9)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_images_have_zero_loss() {
        let img = rand_image(16, 16, 3, 1);
        assert_eq!(l1_value(&img, &img).unwrap(), 0.0);
        let (d, _, _) = dssim_with_grad(&img, &img).unwrap();
        assert!(d.abs() < 1e-12);
        assert!((ssim_value(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(psnr(&img, &img).unwrap(), 99.0);
    }

    #[test]
    fn l1_of_uniform_offset() {
        let a = Image::new(vec![Array2::from_elem((8, 8), 0.5); 3]).unwrap();
        let b = Image::new(vec![Array2::from_elem((8, 8), 0.6); 3]).unwrap();
        assert!((l1_value(&a, &b).unwrap() - 0.1).abs() < 1e-12);
        let c = combined_loss(&a, &b).unwrap();
        assert!((c.total - (0.8 * c.l1 + 0.2 * c.dssim)).abs() < 1e-15);
    }

    #[test]
    fn psnr_of_known_mse() {
        let a = Image::new(vec![Array2::from_elem((4, 4), 0.5)]).unwrap();
        let b = Image::new(vec![Array2::from_elem((4, 4), 0.6)]).unwrap();
        // MSE = 0.01 -> 20 dB.
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_penalizes_structure_change() {
        let a = rand_image(16, 16, 1, 3);
        let mut shuffled = a.clone();
        let flipped = Array2::from_shape_fn((16, 16), |(y, x)| a.get(0, 15 - y, x));
        shuffled.channels_mut()[0] = flipped;
        assert!(ssim_value(&a, &shuffled).unwrap() < 0.9);
    }

    fn fd_check(h: usize, w: usize, seed: u64) {
        let x = rand_image(h, w, 1, seed);
        let y = rand_image(h, w, 1, seed + 50);
        let c = combined_loss(&x, &y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 999);
        let eps = 1e-5;
        for _ in 0..12 {
            let yy = rng.gen_range(0..h);
            let xx = rng.gen_range(0..w);
            for side in 0..2 {
                let (probe, grad) = if side == 0 { (&x, &c.dx) } else { (&y, &c.dy) };
                let mut plus = probe.clone();
                plus.set(0, yy, xx, probe.get(0, yy, xx) + eps);
                let mut minus = probe.clone();
                minus.set(0, yy, xx, probe.get(0, yy, xx) - eps);
                let (fp, fm) = if side == 0 {
                    (
                        combined_loss(&plus, &y).unwrap().total,
                        combined_loss(&minus, &y).unwrap().total,
                    )
                } else {
                    (
                        combined_loss(&x, &plus).unwrap().total,
                        combined_loss(&x, &minus).unwrap().total,
                    )
                };
                let fd = (fp - fm) / (2.0 * eps);
                let an = grad.get(0, yy, xx);
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel < 1e-4, "side {side} at ({yy},{xx}): fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn combined_gradients_match_finite_differences() {
        fd_check(12, 12, 7);
        fd_check(8, 14, 8);
    }
}
