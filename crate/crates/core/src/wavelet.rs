//! Single-level 2D discrete wavelet transform.
//!
//! Subbands follow the matrix convention LL = L0 X L1, LH = H0 X L1,
//! HL = L0 X H1, HH = H0 X H1, where the left factor filters columns
//! (vertical direction) and the right factor filters rows. The computational
//! path is stride-2 correlation; `StridedFilterMatrix::dense` materializes the
//! equivalent banded matrix so tests can check both routes against each other.
//!
//! Nothing here clamps values: reconstructions may transiently leave [0, 1]
//! and clamping is the caller's business at I/O boundaries.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::Image;

pub const HAAR_LOW: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
pub const HAAR_HIGH: [f64; 2] = [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

#[derive(Debug, Clone, PartialEq)]
pub struct Filter1D {
    taps: Vec<f64>,
}

impl Filter1D {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len() < 2 {
            return Err(Error::Config("filter needs at least 2 taps".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("filter taps must be finite".into()));
        }
        Ok(Filter1D { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Analysis and synthesis filter pairs for one decomposition level.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub analysis_low: Filter1D,
    pub analysis_high: Filter1D,
    pub synthesis_low: Filter1D,
    pub synthesis_high: Filter1D,
}

/// Orthonormal Haar bank. Both passes run as strided correlations with the
/// same index layout, so the inverse is the plain matrix transpose and the
/// synthesis taps equal the analysis taps (the classical filter flip belongs
/// to the convolution convention, not this one).
pub fn build_haar_bank() -> FilterBank {
    FilterBank {
        analysis_low: Filter1D::new(HAAR_LOW.to_vec()).unwrap(),
        analysis_high: Filter1D::new(HAAR_HIGH.to_vec()).unwrap(),
        synthesis_low: Filter1D::new(HAAR_LOW.to_vec()).unwrap(),
        synthesis_high: Filter1D::new(HAAR_HIGH.to_vec()).unwrap(),
    }
}

/// A stride-2 correlation operator over signals of fixed length: row r of the
/// dense equivalent carries the taps starting at column 2r (clipped at the
/// signal edge).
#[derive(Debug, Clone)]
pub struct StridedFilterMatrix {
    filter: Filter1D,
    signal_len: usize,
}

impl StridedFilterMatrix {
    pub fn new(filter: Filter1D, signal_len: usize) -> Result<Self> {
        if signal_len < 2 {
            return Err(Error::Config("signal length must be at least 2".into()));
        }
        Ok(StridedFilterMatrix { filter, signal_len })
    }

    pub fn rows(&self) -> usize {
        self.signal_len.div_ceil(2)
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn filter(&self) -> &Filter1D {
        &self.filter
    }

    /// Dense banded equivalent, the oracle for the strided path.
    pub fn dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows(), self.signal_len));
        for r in 0..self.rows() {
            for (k, &t) in self.filter.taps().iter().enumerate() {
                let col = 2 * r + k;
                if col < self.signal_len {
                    m[(r, col)] = t;
                }
            }
        }
        m
    }

    /// M * X: filters each column of `x` (length `signal_len`) with stride 2.
    pub fn forward_cols(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.nrows(), self.signal_len);
        let taps = self.filter.taps();
        let mut out = Array2::zeros((self.rows(), x.ncols()));
        for r in 0..self.rows() {
            for (k, &t) in taps.iter().enumerate() {
                let src = 2 * r + k;
                if src >= self.signal_len {
                    break;
                }
                for c in 0..x.ncols() {
                    out[(r, c)] += t * x[(src, c)];
                }
            }
        }
        out
    }

    /// X * M^T: filters each row of `x` (length `signal_len`) with stride 2.
    pub fn forward_rows(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.ncols(), self.signal_len);
        let taps = self.filter.taps();
        let mut out = Array2::zeros((x.nrows(), self.rows()));
        for i in 0..x.nrows() {
            for r in 0..self.rows() {
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let src = 2 * r + k;
                    if src >= self.signal_len {
                        break;
                    }
                    acc += t * x[(i, src)];
                }
                out[(i, r)] = acc;
            }
        }
        out
    }

    /// M^T * S: the adjoint of `forward_cols`, used for synthesis.
    pub fn adjoint_cols(&self, s: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(s.nrows(), self.rows());
        let taps = self.filter.taps();
        let mut out = Array2::zeros((self.signal_len, s.ncols()));
        for r in 0..self.rows() {
            for (k, &t) in taps.iter().enumerate() {
                let dst = 2 * r + k;
                if dst >= self.signal_len {
                    break;
                }
                for c in 0..s.ncols() {
                    out[(dst, c)] += t * s[(r, c)];
                }
            }
        }
        out
    }

    /// S * M: the adjoint of `forward_rows`.
    pub fn adjoint_rows(&self, s: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(s.ncols(), self.rows());
        let taps = self.filter.taps();
        let mut out = Array2::zeros((s.nrows(), self.signal_len));
        for i in 0..s.nrows() {
            for r in 0..self.rows() {
                let v = s[(i, r)];
                for (k, &t) in taps.iter().enumerate() {
                    let dst = 2 * r + k;
                    if dst >= self.signal_len {
                        break;
                    }
                    out[(i, dst)] += t * v;
                }
            }
        }
        out
    }
}

/// One level of subbands, one matrix per channel in each band.
#[derive(Debug, Clone)]
pub struct SubbandSet {
    pub ll: Vec<Array2<f64>>,
    pub lh: Vec<Array2<f64>>,
    pub hl: Vec<Array2<f64>>,
    pub hh: Vec<Array2<f64>>,
}

impl SubbandSet {
    pub fn num_channels(&self) -> usize {
        self.ll.len()
    }

    pub fn band_dims(&self) -> (usize, usize) {
        self.ll[0].dim()
    }
}

/// Per-subband L1 norms, summed over channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbandEnergy {
    pub ll: f64,
    pub lh: f64,
    pub hl: f64,
    pub hh: f64,
}

fn l1(mats: &[Array2<f64>]) -> f64 {
    mats.iter()
        .map(|m| m.iter().map(|v| v.abs()).sum::<f64>())
        .sum()
}

pub fn subband_energy(sb: &SubbandSet) -> SubbandEnergy {
    SubbandEnergy {
        ll: l1(&sb.ll),
        lh: l1(&sb.lh),
        hl: l1(&sb.hl),
        hh: l1(&sb.hh),
    }
}

fn check_even(img: &Image) -> Result<()> {
    if img.height() % 2 != 0 || img.width() % 2 != 0 {
        return Err(Error::Config(format!(
            "transform needs even dimensions, got {}x{} (pad_to_even first)",
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

pub fn forward_dwt(img: &Image, bank: &FilterBank) -> Result<SubbandSet> {
    check_even(img)?;
    let col_low = StridedFilterMatrix::new(bank.analysis_low.clone(), img.height())?;
    let col_high = StridedFilterMatrix::new(bank.analysis_high.clone(), img.height())?;
    let row_low = StridedFilterMatrix::new(bank.analysis_low.clone(), img.width())?;
    let row_high = StridedFilterMatrix::new(bank.analysis_high.clone(), img.width())?;
    let mut sb = SubbandSet {
        ll: Vec::new(),
        lh: Vec::new(),
        hl: Vec::new(),
        hh: Vec::new(),
    };
    for ch in img.channels() {
        let tl = row_low.forward_rows(ch);
        let th = row_high.forward_rows(ch);
        sb.ll.push(col_low.forward_cols(&tl));
        sb.lh.push(col_high.forward_cols(&tl));
        sb.hl.push(col_low.forward_cols(&th));
        sb.hh.push(col_high.forward_cols(&th));
    }
    Ok(sb)
}

pub fn inverse_dwt(sb: &SubbandSet, bank: &FilterBank) -> Result<Image> {
    let (bh, bw) = sb.band_dims();
    let (h, w) = (2 * bh, 2 * bw);
    let col_low = StridedFilterMatrix::new(bank.synthesis_low.clone(), h)?;
    let col_high = StridedFilterMatrix::new(bank.synthesis_high.clone(), h)?;
    let row_low = StridedFilterMatrix::new(bank.synthesis_low.clone(), w)?;
    let row_high = StridedFilterMatrix::new(bank.synthesis_high.clone(), w)?;
    let mut channels = Vec::with_capacity(sb.num_channels());
    for c in 0..sb.num_channels() {
        let tl = col_low.adjoint_cols(&sb.ll[c]) + col_high.adjoint_cols(&sb.lh[c]);
        let th = col_low.adjoint_cols(&sb.hl[c]) + col_high.adjoint_cols(&sb.hh[c]);
        channels.push(row_low.adjoint_rows(&tl) + row_high.adjoint_rows(&th));
    }
    Image::new(channels)
}
