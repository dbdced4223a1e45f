//! Planar float image type plus the PNG/PPM codecs used at the I/O boundary.
//!
//! Pixels are f64 in [0, 1] at load/save time; intermediate math is free to
//! leave that range and nothing in here clamps except the 8-bit quantizer.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// H x W x C image, stored as one row-major matrix per channel. C is 1 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: Vec<Array2<f64>>,
}

impl Image {
    pub fn new(channels: Vec<Array2<f64>>) -> Result<Self> {
        if channels.len() != 1 && channels.len() != 3 {
            return Err(Error::Config(format!(
                "image must have 1 or 3 channels, got {}",
                channels.len()
            )));
        }
        let dim = channels[0].dim();
        if dim.0 == 0 || dim.1 == 0 {
            return Err(Error::Config("image dimensions must be nonzero".into()));
        }
        if channels.iter().any(|c| c.dim() != dim) {
            return Err(Error::Config("image channels differ in shape".into()));
        }
        Ok(Image { channels })
    }

    pub fn zeros(height: usize, width: usize, nch: usize) -> Result<Self> {
        Image::new(vec![Array2::zeros((height, width)); nch])
    }

    pub fn height(&self) -> usize {
        self.channels[0].nrows()
    }

    pub fn width(&self) -> usize {
        self.channels[0].ncols()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Array2<f64>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.channels
    }

    pub fn get(&self, ch: usize, y: usize, x: usize) -> f64 {
        self.channels[ch][(y, x)]
    }

    pub fn set(&mut self, ch: usize, y: usize, x: usize, v: f64) {
        self.channels[ch][(y, x)] = v;
    }

    pub fn clamp01(&self) -> Image {
        Image {
            channels: self
                .channels
                .iter()
                .map(|c| c.mapv(|v| v.clamp(0.0, 1.0)))
                .collect(),
        }
    }

    /// Grayscale to RGB by replication; RGB passes through unchanged.
    pub fn to_rgb(&self) -> Image {
        if self.channels.len() == 3 {
            self.clone()
        } else {
            Image {
                channels: vec![self.channels[0].clone(); 3],
            }
        }
    }

    /// Extends odd dimensions by replicating the last row/column, so both
    /// dimensions come out even. Even inputs are returned unchanged.
    pub fn pad_to_even(&self) -> Image {
        let (h, w) = (self.height(), self.width());
        let (ph, pw) = (h + h % 2, w + w % 2);
        if (ph, pw) == (h, w) {
            return self.clone();
        }
        let channels = self
            .channels
            .iter()
            .map(|c| {
                Array2::from_shape_fn((ph, pw), |(y, x)| c[(y.min(h - 1), x.min(w - 1))])
            })
            .collect();
        Image { channels }
    }

    /// Top-left crop, inverse of `pad_to_even`.
    pub fn crop(&self, height: usize, width: usize) -> Result<Image> {
        if height > self.height() || width > self.width() || height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "cannot crop {}x{} out of {}x{}",
                height,
                width,
                self.height(),
                self.width()
            )));
        }
        let channels = self
            .channels
            .iter()
            .map(|c| c.slice(ndarray::s![0..height, 0..width]).to_owned())
            .collect();
        Ok(Image { channels })
    }

    pub fn resize_bilinear(&self, height: usize, width: usize) -> Result<Image> {
        if height == 0 || width == 0 {
            return Err(Error::Config("resize target must be nonzero".into()));
        }
        let (sh, sw) = (self.height(), self.width());
        let fy = sh as f64 / height as f64;
        let fx = sw as f64 / width as f64;
        let channels = self
            .channels
            .iter()
            .map(|c| {
                Array2::from_shape_fn((height, width), |(y, x)| {
                    let sy = ((y as f64 + 0.5) * fy - 0.5).clamp(0.0, (sh - 1) as f64);
                    let sx = ((x as f64 + 0.5) * fx - 0.5).clamp(0.0, (sw - 1) as f64);
                    let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
                    let (y1, x1) = ((y0 + 1).min(sh - 1), (x0 + 1).min(sw - 1));
                    let (wy, wx) = (sy - y0 as f64, sx - x0 as f64);
                    (1.0 - wy) * ((1.0 - wx) * c[(y0, x0)] + wx * c[(y0, x1)])
                        + wy * ((1.0 - wx) * c[(y1, x0)] + wx * c[(y1, x1)])
                })
            })
            .collect();
        Ok(Image { channels })
    }

    /// Quantized 8-bit view, interleaved row-major. Values are clamped first.
    pub fn to_u8(&self) -> Vec<u8> {
        let (h, w, nc) = (self.height(), self.width(), self.num_channels());
        let mut out = Vec::with_capacity(h * w * nc);
        for y in 0..h {
            for x in 0..w {
                for c in 0..nc {
                    out.push(quantize(self.channels[c][(y, x)]));
                }
            }
        }
        out
    }

    pub fn from_u8(data: &[u8], height: usize, width: usize, nch: usize) -> Result<Image> {
        if data.len() != height * width * nch {
            return Err(Error::Codec(format!(
                "pixel buffer length {} does not match {}x{}x{}",
                data.len(),
                height,
                width,
                nch
            )));
        }
        let mut channels = vec![Array2::zeros((height, width)); nch];
        for y in 0..height {
            for x in 0..width {
                for c in 0..nch {
                    channels[c][(y, x)] = data[(y * width + x) * nch + c] as f64 / 255.0;
                }
            }
        }
        Image::new(channels)
    }

    /// Loads a PNG or binary PPM, deciding by file magic rather than extension.
    pub fn load(path: &Path) -> Result<Image> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(b"P6") {
            decode_ppm(&bytes)
        } else {
            decode_png(&bytes)
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let (h, w) = (self.height() as u32, self.width() as u32);
        let data = self.to_u8();
        let color = if self.num_channels() == 1 {
            image::ExtendedColorType::L8
        } else {
            image::ExtendedColorType::Rgb8
        };
        image::save_buffer_with_format(path, &data, w, h, color, image::ImageFormat::Png)?;
        Ok(())
    }

    /// Binary PPM (P6, maxval 255). Grayscale is expanded to RGB.
    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        let rgb = self.to_rgb();
        let mut f = std::fs::File::create(path)?;
        write!(f, "P6\n{} {}\n255\n", rgb.width(), rgb.height())?;
        f.write_all(&rgb.to_u8())?;
        Ok(())
    }
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let dynimg = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    match dynimg {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            Image::from_u8(g.as_raw(), h, w, 1)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            Image::from_u8(rgb.as_raw(), h, w, 3)
        }
    }
}

fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 2];
    cursor.read_exact(&mut magic)?;
    if &magic != b"P6" {
        return Err(Error::Codec("not a binary PPM (P6) file".into()));
    }
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = read_ppm_int(&mut cursor)?;
    }
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(Error::Codec(format!("unsupported PPM maxval {maxval}")));
    }
    if w == 0 || h == 0 || w > 1 << 16 || h > 1 << 16 {
        return Err(Error::Codec(format!("bad PPM dimensions {w}x{h}")));
    }
    let mut data = vec![0u8; w * h * 3];
    cursor.read_exact(&mut data)?;
    Image::from_u8(&data, h, w, 3)
}

/// Reads one whitespace-delimited integer, skipping `#` comment lines.
fn read_ppm_int(cursor: &mut std::io::Cursor<&[u8]>) -> Result<usize> {
    let mut byte = [0u8; 1];
    let mut value: Option<usize> = None;
    loop {
        if cursor.read(&mut byte)? == 0 {
            return value.ok_or_else(|| Error::Codec("truncated PPM header".into()));
        }
        match byte[0] {
            b'#' => {
                while cursor.read(&mut byte)? == 1 && byte[0] != b'\n' {}
            }
            b'0'..=b'9' => {
                let digit = (byte[0] - b'0') as usize;
                value = Some(value.unwrap_or(0) * 10 + digit);
            }
            b' ' | b'\t' | b'\r' | b'\n' => {
                if value.is_some() {
                    return Ok(value.unwrap());
                }
            }
            other => return Err(Error::Codec(format!("bad PPM header byte {other:#x}"))),
        }
    }
}

/// Deterministic test scene: a flat quadrant, a horizontal ramp, a
/// 3px-checkerboard patch that concentrates Haar HH energy, and a lattice of
/// small dark dots. The dots are the densification driver: each one is an
/// isolated feature that pulls splat gradients coherently at every kernel
/// scale, unlike the checker, whose alternation cancels out of any kernel
/// wider than a cell. Region boundaries are antialiased by 2x supersampling,
/// so edges span one pixel the way captured images do instead of being
/// 0-width steps that a Gaussian kernel can never finish fitting.
pub fn synthetic_scene(size: usize) -> Image {
    assert!(size >= 16 && size % 4 == 0, "scene size must be >= 16 and divisible by 4");
    let half = size / 2;
    // Checker patch sits at the center of the top-right quadrant; small, so
    // reconstructing it densifies a bounded region, and a minority share of
    // the scene's HH energy, so the adaptive weight can settle even before
    // the checker itself is fully resolved. 3px cells keep the pattern below
    // the Haar block scale but above Nyquist.
    let (cx0, cx1) = (half + 13 * half / 32, half + 19 * half / 32);
    let (cy0, cy1) = (13 * half / 32, 19 * half / 32);
    let halff = half as f64;
    // Dot lattice in the bottom-right quadrant: 6px pitch, sub-2px cores so a
    // 2x2 block average (the zero-init modulated target) strongly mutes them.
    // Deterministic jitter breaks the lattice symmetry; on a perfectly regular
    // grid the pulls from surrounding dots cancel out of any wide kernel and
    // coarse Gaussians never feel the dots at all.
    let dot_pitch = 6.0;
    let dot_r2 = 1.0f64;
    let dot_origin = halff + 4.0;
    let dot_max = ((halff - 8.0) / dot_pitch).floor();
    let dot_jitter = |kx: i64, ky: i64| -> (f64, f64) {
        let mut h = (kx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (ky as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= h >> 33;
        h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
        h ^= h >> 33;
        let ux = (h & 0xFFFF) as f64 / 65535.0;
        let uy = ((h >> 16) & 0xFFFF) as f64 / 65535.0;
        (1.5 * (2.0 * ux - 1.0), 1.5 * (2.0 * uy - 1.0))
    };
    let sample = |xf: f64, yf: f64| -> [f64; 3] {
        if yf < halff && xf < halff {
            [0.28, 0.38, 0.55]
        } else if yf < halff {
            if xf >= cx0 as f64 && xf < cx1 as f64 && yf >= cy0 as f64 && yf < cy1 as f64 {
                let cell = ((xf - cx0 as f64) / 3.0).floor() as i64
                    + ((yf - cy0 as f64) / 3.0).floor() as i64;
                if cell % 2 == 0 {
                    [0.82, 0.80, 0.75]
                } else {
                    [0.15, 0.15, 0.18]
                }
            } else {
                [0.52, 0.52, 0.52]
            }
        } else if xf < halff {
            let v = 0.15 + 0.70 * (xf / (half - 1) as f64);
            [v, 0.85 * v + 0.08, 0.55 * v + 0.22]
        } else {
            let kx = (((xf - dot_origin) / dot_pitch).round()).clamp(0.0, dot_max);
            let ky = (((yf - dot_origin) / dot_pitch).round()).clamp(0.0, dot_max);
            let (jx, jy) = dot_jitter(kx as i64, ky as i64);
            let dx = xf - (dot_origin + kx * dot_pitch + jx);
            let dy = yf - (dot_origin + ky * dot_pitch + jy);
            if dx * dx + dy * dy <= dot_r2 {
                [0.10, 0.08, 0.06]
            } else {
                [0.68, 0.52, 0.32]
            }
        }
    };
    let mut channels = vec![Array2::zeros((size, size)); 3];
    for y in 0..size {
        for x in 0..size {
            let mut px = [0.0f64; 3];
            for (ox, oy) in [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)] {
                let s = sample(x as f64 + ox, y as f64 + oy);
                for c in 0..3 {
                    px[c] += 0.25 * s[c];
                }
            }
            for c in 0..3 {
                channels[c][(y, x)] = px[c];
            }
        }
    }
    Image::new(channels).unwrap()
}
