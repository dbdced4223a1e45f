//! Learnable high-pass filter matrices and their training machinery.
//!
//! One decomposition level keeps its low-pass path fixed at Haar while the
//! high-pass matrices H0 (vertical, ceil(H/2) x H) and H1 (horizontal,
//! W x ceil(W/2)) are free parameters. Starting them at zero suppresses every
//! detail subband, so the reconstruction begins as a 2x2 block average and
//! sharpens as the entries grow toward the banded Haar reference.
//!
//! The learnable pair sits on the analysis side by default; `FilterMode::Synthesis`
//! moves it to the synthesis side instead, with the analysis bank fixed at Haar.

use ndarray::Array2;

use crate::adam::Moments;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::wavelet::{build_haar_bank, forward_dwt, StridedFilterMatrix, SubbandSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Analysis,
    Synthesis,
}

/// Fixed banded Haar high-pass matrices, the target of the wavelet loss.
#[derive(Debug, Clone)]
pub struct HaarReference {
    pub h0: Array2<f64>,
    pub h1: Array2<f64>,
}

/// Banded matrix with `taps` on each stride-2 band: row r covers columns
/// (2r, 2r+1).
fn banded_rows(rows: usize, cols: usize, taps: [f64; 2]) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for r in 0..rows {
        m[(r, 2 * r)] = taps[0];
        if 2 * r + 1 < cols {
            m[(r, 2 * r + 1)] = taps[1];
        }
    }
    m
}

pub fn haar_reference(height: usize, width: usize) -> Result<HaarReference> {
    check_dims(height, width)?;
    let taps = crate::wavelet::HAAR_HIGH;
    Ok(HaarReference {
        h0: banded_rows(height / 2, height, taps),
        h1: banded_rows(width / 2, width, taps).t().to_owned(),
    })
}

#[derive(Debug, Clone)]
pub struct LearnableHighPass {
    pub h0: Array2<f64>,
    pub h1: Array2<f64>,
    mode: FilterMode,
    tied: bool,
}

/// Reconstruction plus everything the backward pass needs.
pub struct Modulation {
    pub recon: Image,
    pub subbands: SubbandSet,
    cache: Cache,
}

enum Cache {
    /// Per-channel products with the fixed low-pass and the current high-pass.
    Analysis {
        x_l1: Vec<Array2<f64>>,
        x_h1: Vec<Array2<f64>>,
        l0_x: Vec<Array2<f64>>,
        h0_x: Vec<Array2<f64>>,
    },
    /// Subbands are parameter-independent here; nothing extra to keep.
    Synthesis,
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height < 2 || width < 2 || height % 2 != 0 || width % 2 != 0 {
        return Err(Error::Config(format!(
            "learnable filter needs even dims >= 2, got {height}x{width}"
        )));
    }
    Ok(())
}

struct HaarOps {
    col_low: StridedFilterMatrix,
    row_low: StridedFilterMatrix,
    col_high: StridedFilterMatrix,
    row_high: StridedFilterMatrix,
    scol_low: StridedFilterMatrix,
    srow_low: StridedFilterMatrix,
    scol_high: StridedFilterMatrix,
    srow_high: StridedFilterMatrix,
}

fn haar_ops(height: usize, width: usize) -> HaarOps {
    let b = build_haar_bank();
    HaarOps {
        col_low: StridedFilterMatrix::new(b.analysis_low.clone(), height).unwrap(),
        row_low: StridedFilterMatrix::new(b.analysis_low.clone(), width).unwrap(),
        col_high: StridedFilterMatrix::new(b.analysis_high.clone(), height).unwrap(),
        row_high: StridedFilterMatrix::new(b.analysis_high.clone(), width).unwrap(),
        scol_low: StridedFilterMatrix::new(b.synthesis_low.clone(), height).unwrap(),
        srow_low: StridedFilterMatrix::new(b.synthesis_low.clone(), width).unwrap(),
        scol_high: StridedFilterMatrix::new(b.synthesis_high.clone(), height).unwrap(),
        srow_high: StridedFilterMatrix::new(b.synthesis_high, width).unwrap(),
    }
}

impl LearnableHighPass {
    /// All-zero start: the modulated image is the pure low-pass reconstruction.
    pub fn init_zero(height: usize, width: usize, mode: FilterMode, tied: bool) -> Result<Self> {
        check_dims(height, width)?;
        Ok(LearnableHighPass {
            h0: Array2::zeros((height / 2, height)),
            h1: Array2::zeros((width, width / 2)),
            mode,
            tied,
        })
    }

    /// Starts exactly at the Haar reference; reconstruction is then perfect.
    pub fn from_reference(height: usize, width: usize, mode: FilterMode, tied: bool) -> Result<Self> {
        let r = haar_reference(height, width)?;
        let mut lhp = Self::init_zero(height, width, mode, tied)?;
        lhp.h0 = r.h0;
        lhp.h1 = r.h1;
        Ok(lhp)
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn tied(&self) -> bool {
        self.tied
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.h0.ncols(), self.h1.nrows())
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        let (h, w) = self.image_dims();
        if img.height() != h || img.width() != w {
            return Err(Error::Config(format!(
                "image {}x{} does not match filter dims {}x{}",
                img.height(),
                img.width(),
                h,
                w
            )));
        }
        Ok(())
    }

    /// Runs the image through the half-learnable filter bank and reconstructs.
    /// The reconstruction is not clamped.
    pub fn modulate_image(&self, img: &Image) -> Result<Modulation> {
        self.check_image(img)?;
        let (h, w) = self.image_dims();
        let ops = haar_ops(h, w);
        let nch = img.num_channels();
        let mut sb = SubbandSet {
            ll: Vec::with_capacity(nch),
            lh: Vec::with_capacity(nch),
            hl: Vec::with_capacity(nch),
            hh: Vec::with_capacity(nch),
        };
        let mut channels = Vec::with_capacity(nch);
        match self.mode {
            FilterMode::Analysis => {
                let mut x_l1 = Vec::with_capacity(nch);
                let mut x_h1 = Vec::with_capacity(nch);
                let mut l0_x = Vec::with_capacity(nch);
                let mut h0_x = Vec::with_capacity(nch);
                for ch in img.channels() {
                    let tl = ops.row_low.forward_rows(ch);
                    let th = ch.dot(&self.h1);
                    let ll = ops.col_low.forward_cols(&tl);
                    let lh = self.h0.dot(&tl);
                    let hl = ops.col_low.forward_cols(&th);
                    let hh = self.h0.dot(&th);
                    let stl = ops.scol_low.adjoint_cols(&ll) + ops.scol_high.adjoint_cols(&lh);
                    let sth = ops.scol_low.adjoint_cols(&hl) + ops.scol_high.adjoint_cols(&hh);
                    channels
                        .push(ops.srow_low.adjoint_rows(&stl) + ops.srow_high.adjoint_rows(&sth));
                    l0_x.push(ops.col_low.forward_cols(ch));
                    h0_x.push(self.h0.dot(ch));
                    x_l1.push(tl);
                    x_h1.push(th);
                    sb.ll.push(ll);
                    sb.lh.push(lh);
                    sb.hl.push(hl);
                    sb.hh.push(hh);
                }
                Ok(Modulation {
                    recon: Image::new(channels)?,
                    subbands: sb,
                    cache: Cache::Analysis { x_l1, x_h1, l0_x, h0_x },
                })
            }
            FilterMode::Synthesis => {
                for ch in img.channels() {
                    let tl = ops.row_low.forward_rows(ch);
                    let th = ops.row_high.forward_rows(ch);
                    let ll = ops.col_low.forward_cols(&tl);
                    let lh = ops.col_high.forward_cols(&tl);
                    let hl = ops.col_low.forward_cols(&th);
                    let hh = ops.col_high.forward_cols(&th);
                    let stl = ops.scol_low.adjoint_cols(&ll) + self.h0.t().dot(&lh);
                    let sth = ops.scol_low.adjoint_cols(&hl) + self.h0.t().dot(&hh);
                    channels.push(ops.srow_low.adjoint_rows(&stl) + sth.dot(&self.h1.t()));
                    sb.ll.push(ll);
                    sb.lh.push(lh);
                    sb.hl.push(hl);
                    sb.hh.push(hh);
                }
                Ok(Modulation {
                    recon: Image::new(channels)?,
                    subbands: sb,
                    cache: Cache::Synthesis,
                })
            }
        }
    }

    /// Pulls a reconstruction-space gradient back to (dL/dH0, dL/dH1),
    /// summing over channels. In tied mode the band positions are further
    /// summed when `apply_update` projects the gradient.
    pub fn backprop_highpass(
        &self,
        dl_dxhat: &Image,
        modulation: &Modulation,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_image(dl_dxhat)?;
        let (h, w) = self.image_dims();
        let ops = haar_ops(h, w);
        let mut dh0 = Array2::zeros(self.h0.dim());
        let mut dh1 = Array2::zeros(self.h1.dim());
        match &modulation.cache {
            Cache::Analysis { x_l1, x_h1, l0_x, h0_x } => {
                for (c, g) in dl_dxhat.channels().iter().enumerate() {
                    let dstl = ops.srow_low.forward_rows(g);
                    let dsth = ops.srow_high.forward_rows(g);
                    let dlh = ops.scol_high.forward_cols(&dstl);
                    let dhl = ops.scol_low.forward_cols(&dsth);
                    let dhh = ops.scol_high.forward_cols(&dsth);
                    dh0 = dh0 + dlh.dot(&x_l1[c].t()) + dhh.dot(&x_h1[c].t());
                    dh1 = dh1 + l0_x[c].t().dot(&dhl) + h0_x[c].t().dot(&dhh);
                }
            }
            Cache::Synthesis => {
                let sb = &modulation.subbands;
                for (c, g) in dl_dxhat.channels().iter().enumerate() {
                    let m = ops.srow_low.adjoint_rows(&sb.lh[c]) + sb.hh[c].dot(&self.h1.t());
                    let n = ops.scol_low.adjoint_cols(&sb.hl[c]) + self.h0.t().dot(&sb.hh[c]);
                    dh0 = dh0 + m.dot(&g.t());
                    dh1 = dh1 + g.t().dot(&n);
                }
            }
        }
        Ok((dh0, dh1))
    }

    /// Squared Frobenius distance to the Haar reference, with its gradient.
    pub fn wavelet_loss(&self, reference: &HaarReference) -> (f64, Array2<f64>, Array2<f64>) {
        let d0 = &self.h0 - &reference.h0;
        let d1 = &self.h1 - &reference.h1;
        let value = d0.iter().map(|v| v * v).sum::<f64>() + d1.iter().map(|v| v * v).sum::<f64>();
        (value, d0.mapv(|v| 2.0 * v), d1.mapv(|v| 2.0 * v))
    }

    pub fn frob_dist(&self, reference: &HaarReference) -> f64 {
        self.wavelet_loss(reference).0.sqrt()
    }

    /// Unit-row-norm regularizer: weight * sum over bands of (||band||^2 - 1)^2.
    /// H0 bands are rows; H1 bands are columns.
    pub fn norm_loss(&self) -> (f64, Array2<f64>, Array2<f64>) {
        const WEIGHT: f64 = 0.01;
        let mut value = 0.0;
        let mut g0 = Array2::zeros(self.h0.dim());
        let mut g1 = Array2::zeros(self.h1.dim());
        for r in 0..self.h0.nrows() {
            let n: f64 = self.h0.row(r).iter().map(|v| v * v).sum();
            value += (n - 1.0) * (n - 1.0);
            for j in 0..self.h0.ncols() {
                g0[(r, j)] = WEIGHT * 4.0 * (n - 1.0) * self.h0[(r, j)];
            }
        }
        for c in 0..self.h1.ncols() {
            let n: f64 = self.h1.column(c).iter().map(|v| v * v).sum();
            value += (n - 1.0) * (n - 1.0);
            for i in 0..self.h1.nrows() {
                g1[(i, c)] = WEIGHT * 4.0 * (n - 1.0) * self.h1[(i, c)];
            }
        }
        (WEIGHT * value, g0, g1)
    }

    /// Mean taps over the stride-2 band positions, for logging and plots.
    pub fn row_averaged_filter(&self) -> ([f64; 2], [f64; 2]) {
        let rows = self.h0.nrows();
        let mut t0 = [0.0; 2];
        for r in 0..rows {
            t0[0] += self.h0[(r, 2 * r)];
            t0[1] += self.h0[(r, 2 * r + 1)];
        }
        t0[0] /= rows as f64;
        t0[1] /= rows as f64;
        let cols = self.h1.ncols();
        let mut t1 = [0.0; 2];
        for c in 0..cols {
            t1[0] += self.h1[(2 * c, c)];
            t1[1] += self.h1[(2 * c + 1, c)];
        }
        t1[0] /= cols as f64;
        t1[1] /= cols as f64;
        (t0, t1)
    }
}

/// Collapses a dense gradient onto the tied 2-tap parameterization: tap
/// gradients are summed over band positions, then scattered back so every
/// band sees the identical update.
pub(crate) fn project_tied(grad_h0: &mut Array2<f64>, grad_h1: &mut Array2<f64>) {
    let rows = grad_h0.nrows();
    let mut g = [0.0; 2];
    for r in 0..rows {
        g[0] += grad_h0[(r, 2 * r)];
        g[1] += grad_h0[(r, 2 * r + 1)];
    }
    grad_h0.fill(0.0);
    for r in 0..rows {
        grad_h0[(r, 2 * r)] = g[0];
        grad_h0[(r, 2 * r + 1)] = g[1];
    }
    let cols = grad_h1.ncols();
    let mut g = [0.0; 2];
    for c in 0..cols {
        g[0] += grad_h1[(2 * c, c)];
        g[1] += grad_h1[(2 * c + 1, c)];
    }
    grad_h1.fill(0.0);
    for c in 0..cols {
        grad_h1[(2 * c, c)] = g[0];
        grad_h1[(2 * c + 1, c)] = g[1];
    }
}

/// Adam state for the filter pair.
#[derive(Debug, Clone)]
pub struct WaveletOptimState {
    m0: Moments,
    m1: Moments,
    t: u64,
}

impl WaveletOptimState {
    pub fn new(lhp: &LearnableHighPass) -> Self {
        WaveletOptimState {
            m0: Moments::zeros(lhp.h0.len()),
            m1: Moments::zeros(lhp.h1.len()),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

/// One Adam step on the filter pair. Non-finite gradients abort the update
/// (state untouched) and return false so the caller can flag the record.
pub fn apply_update(
    lhp: &mut LearnableHighPass,
    state: &mut WaveletOptimState,
    mut grad_h0: Array2<f64>,
    mut grad_h1: Array2<f64>,
    lr: f64,
) -> bool {
    if grad_h0.iter().chain(grad_h1.iter()).any(|g| !g.is_finite()) {
        return false;
    }
    if lhp.tied {
        project_tied(&mut grad_h0, &mut grad_h1);
    }
    state.t += 1;
    state.m0.step(
        lhp.h0.as_slice_mut().unwrap(),
        grad_h0.as_slice().unwrap(),
        lr,
        state.t,
    );
    state.m1.step(
        lhp.h1.as_slice_mut().unwrap(),
        grad_h1.as_slice().unwrap(),
        lr,
        state.t,
    );
    true
}

/// Adaptive wavelet-loss weight: L1 distance between the Haar HH subbands of
/// the rendered and ground-truth images, normalized by the latter's mass.
/// Both transforms use the fixed Haar bank regardless of the learnable state.
pub fn adaptive_weight(rendered: &Image, gt: &Image) -> Result<f64> {
    if rendered.height() != gt.height()
        || rendered.width() != gt.width()
        || rendered.num_channels() != gt.num_channels()
    {
        return Err(Error::Config("adaptive weight needs matching images".into()));
    }
    let bank = build_haar_bank();
    let sr = forward_dwt(rendered, &bank)?;
    let sg = forward_dwt(gt, &bank)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..sr.hh.len() {
        for (a, b) in sr.hh[c].iter().zip(sg.hh[c].iter()) {
            num += (a - b).abs();
            den += b.abs();
        }
    }
    Ok(num / (den + 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{inverse_dwt, subband_energy};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_image(h: usize, w: usize, nch: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = (0..nch)
            .map(|_| Array2::from_shape_fn((h, w), |_| rng.gen_range(0.0..1.0)))
            .collect();
        Image::new(channels).unwrap()
    }

    #[test]
    fn reference_rows_are_orthonormal() {
        let r = haar_reference(8, 8).unwrap();
        let gram = r.h0.dot(&r.h0.t());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-12);
            }
        }
        let gram1 = r.h1.t().dot(&r.h1);
        for i in 0..4 {
            assert!((gram1[(i, i)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_init_reconstruction_is_block_average() {
        for mode in [FilterMode::Analysis, FilterMode::Synthesis] {
            let img = rand_image(8, 8, 3, 5);
            let lhp = LearnableHighPass::init_zero(8, 8, mode, false).unwrap();
            let m = lhp.modulate_image(&img).unwrap();
            for c in 0..3 {
                let x = &img.channels()[c];
                for by in 0..4 {
                    for bx in 0..4 {
                        let avg = (x[(2 * by, 2 * bx)]
                            + x[(2 * by, 2 * bx + 1)]
                            + x[(2 * by + 1, 2 * bx)]
                            + x[(2 * by + 1, 2 * bx + 1)])
                            / 4.0;
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let got = m.recon.get(c, 2 * by + dy, 2 * bx + dx);
                                assert!((got - avg).abs() < 1e-9, "mode {mode:?}");
                            }
                        }
                    }
                }
            }
            // Block-averaged output carries no Haar HH energy.
            let hh = subband_energy(&forward_dwt(&m.recon, &build_haar_bank()).unwrap()).hh;
            assert!(hh < 1e-9);
        }
    }

    #[test]
    fn reference_init_reconstructs_perfectly() {
        for mode in [FilterMode::Analysis, FilterMode::Synthesis] {
            let img = rand_image(10, 6, 3, 9);
            let lhp = LearnableHighPass::from_reference(10, 6, mode, false).unwrap();
            let m = lhp.modulate_image(&img).unwrap();
            for c in 0..3 {
                for y in 0..10 {
                    for x in 0..6 {
                        assert!((m.recon.get(c, y, x) - img.get(c, y, x)).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn reference_subbands_match_fixed_haar() {
        let img = rand_image(8, 8, 1, 3);
        let lhp = LearnableHighPass::from_reference(8, 8, FilterMode::Analysis, false).unwrap();
        let m = lhp.modulate_image(&img).unwrap();
        let sb = forward_dwt(&img, &build_haar_bank()).unwrap();
        for (a, b) in m.subbands.hh[0].iter().zip(sb.hh[0].iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = inverse_dwt(&m.subbands, &build_haar_bank()).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert!((back.get(0, y, x) - img.get(0, y, x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wavelet_loss_at_zero_init_counts_bands() {
        // 8x8: four bands per matrix, each tap pair has unit squared norm.
        let lhp = LearnableHighPass::init_zero(8, 8, FilterMode::Analysis, false).unwrap();
        let r = haar_reference(8, 8).unwrap();
        let (v, g0, _) = lhp.wavelet_loss(&r);
        assert!((v - 8.0).abs() < 1e-12);
        // Gradient points away from the reference: 2 * (0 - ref).
        assert!((g0[(0, 0)] - 2.0 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((lhp.frob_dist(&r) - 8.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_loss_counts_bands_at_zero() {
        let lhp = LearnableHighPass::init_zero(8, 6, FilterMode::Analysis, false).unwrap();
        let (v, g0, g1) = lhp.norm_loss();
        // 4 rows in h0 plus 3 columns in h1, each contributing (0 - 1)^2.
        assert!((v - 0.01 * 7.0).abs() < 1e-12);
        assert!(g0.iter().all(|x| *x == 0.0));
        assert!(g1.iter().all(|x| *x == 0.0));
        let at_ref = LearnableHighPass::from_reference(8, 6, FilterMode::Analysis, false).unwrap();
        let (v_ref, _, _) = at_ref.norm_loss();
        assert!(v_ref.abs() < 1e-12);
    }

    #[test]
    fn adaptive_weight_basics() {
        let img = rand_image(8, 8, 3, 11);
        assert!(adaptive_weight(&img, &img).unwrap().abs() < 1e-12);
        let flat_a = Image::new(vec![Array2::from_elem((8, 8), 0.3); 3]).unwrap();
        let flat_b = Image::new(vec![Array2::from_elem((8, 8), 0.9); 3]).unwrap();
        assert!(adaptive_weight(&flat_a, &flat_b).unwrap().abs() < 1e-12);
        let mismatched = rand_image(6, 6, 3, 1);
        assert!(adaptive_weight(&img, &mismatched).is_err());
    }

    #[test]
    fn adaptive_weight_nonnegative() {
        for seed in 0..20 {
            let a = rand_image(6, 6, 1, seed);
            let b = rand_image(6, 6, 1, seed + 100);
            assert!(adaptive_weight(&a, &b).unwrap() >= 0.0);
        }
    }

    #[test]
    fn tied_bands_stay_identical() {
        let img = rand_image(8, 8, 1, 21);
        let mut lhp = LearnableHighPass::init_zero(8, 8, FilterMode::Analysis, true).unwrap();
        let mut state = WaveletOptimState::new(&lhp);
        let r = haar_reference(8, 8).unwrap();
        for _ in 0..50 {
            let m = lhp.modulate_image(&img).unwrap();
            let dl = Image::new(m.recon.channels().iter().map(|c| c.mapv(|v| 2.0 * v)).collect())
                .unwrap();
            let (mut g0, mut g1) = lhp.backprop_highpass(&dl, &m).unwrap();
            let (_, w0, w1) = lhp.wavelet_loss(&r);
            g0 = g0 + w0;
            g1 = g1 + w1;
            assert!(apply_update(&mut lhp, &mut state, g0, g1, 1e-3));
        }
        let (a, b) = (lhp.h0[(0, 0)], lhp.h0[(0, 1)]);
        for r in 0..4 {
            assert_eq!(lhp.h0[(r, 2 * r)], a);
            assert_eq!(lhp.h0[(r, 2 * r + 1)], b);
            for j in 0..8 {
                if j != 2 * r && j != 2 * r + 1 {
                    assert_eq!(lhp.h0[(r, j)], 0.0);
                }
            }
        }
        assert!(a != 0.0 || b != 0.0);
    }

    #[test]
    fn non_finite_gradient_skips_update() {
        let mut lhp = LearnableHighPass::init_zero(4, 4, FilterMode::Analysis, false).unwrap();
        let mut state = WaveletOptimState::new(&lhp);
        let mut g0 = Array2::zeros((2, 4));
        g0[(0, 0)] = f64::NAN;
        let g1 = Array2::zeros((4, 2));
        assert!(!apply_update(&mut lhp, &mut state, g0, g1, 1e-3));
        assert_eq!(state.steps_taken(), 0);
        assert!(lhp.h0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn repeated_wavelet_steps_decrease_distance_monotonically() {
        let mut lhp = LearnableHighPass::init_zero(8, 8, FilterMode::Analysis, false).unwrap();
        let mut state = WaveletOptimState::new(&lhp);
        let r = haar_reference(8, 8).unwrap();
        let mut last = lhp.frob_dist(&r);
        for _ in 0..100 {
            let (_, g0, g1) = lhp.wavelet_loss(&r);
            assert!(apply_update(&mut lhp, &mut state, g0, g1, 1e-3));
            let d = lhp.frob_dist(&r);
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn row_averaged_filter_reads_bands() {
        let lhp = LearnableHighPass::from_reference(8, 8, FilterMode::Analysis, false).unwrap();
        let (t0, t1) = lhp.row_averaged_filter();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((t0[0] + s).abs() < 1e-12 && (t0[1] - s).abs() < 1e-12);
        assert!((t1[0] + s).abs() < 1e-12 && (t1[1] - s).abs() < 1e-12);
    }
}
