//! Exact-length discrete Fourier machinery.
//!
//! Transforms are computed at the signal's own length for every `N`,
//! primes included. Zero-padding would change the period and break the
//! circular-shift identities alignment relies on.

use std::cell::RefCell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, AddAssign, Index};

pub use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectralError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

fn inverse_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
}

/// Real-valued discrete-time signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealSignal(Vec<f64>);

impl RealSignal {
    pub fn new(samples: Vec<f64>) -> Self {
        Self(samples)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for RealSignal {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for RealSignal {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl Index<usize> for RealSignal {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `N` complex DFT coefficients of a length-`N` signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum(Vec<Complex64>);

impl Spectrum {
    pub fn new(coefficients: Vec<Complex64>) -> Self {
        Self(coefficients)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise product `conj(self) · other`.
    pub fn conj_mul(&self, other: &Spectrum) -> Result<Spectrum, SpectralError> {
        check_len(self.len(), other.len())?;
        Ok(Spectrum(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.conj() * b)
                .collect(),
        ))
    }

    /// Pointwise product `self · other`.
    pub fn mul(&self, other: &Spectrum) -> Result<Spectrum, SpectralError> {
        check_len(self.len(), other.len())?;
        Ok(Spectrum(
            self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> Spectrum {
        Spectrum(self.0.iter().map(|c| c * factor).collect())
    }
}

impl Index<usize> for Spectrum {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl AddAssign<&Spectrum> for Spectrum {
    fn add_assign(&mut self, rhs: &Spectrum) {
        assert_eq!(self.len(), rhs.len(), "spectrum length mismatch");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add<&Spectrum> for Spectrum {
    type Output = Spectrum;
    fn add(mut self, rhs: &Spectrum) -> Spectrum {
        self += rhs;
        self
    }
}

fn check_len(left: usize, right: usize) -> Result<(), SpectralError> {
    if left != right {
        return Err(SpectralError::LengthMismatch { left, right });
    }
    Ok(())
}

/// Forward DFT, `X[m] = Σ_n x[n]·e^{−j2πmn/N}`.
pub fn dft(signal: &RealSignal) -> Spectrum {
    dft_samples(signal.samples())
}

pub fn dft_samples(samples: &[f64]) -> Spectrum {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_in_place(&mut buf);
    Spectrum(buf)
}

/// Inverse DFT of a spectrum, returning the complex samples.
pub fn idft_complex(spectrum: &Spectrum) -> Vec<Complex64> {
    let mut buf = spectrum.0.clone();
    inverse_in_place(&mut buf);
    buf
}

/// Inverse DFT, `x[n] = (1/N)·Σ_m X[m]·e^{+j2πmn/N}`, keeping real parts.
pub fn idft(spectrum: &Spectrum) -> RealSignal {
    RealSignal(idft_complex(spectrum).into_iter().map(|c| c.re).collect())
}

/// `z[k] = Σ_n h[n]·x[(n+k) mod N]`, via `idft(conj(H)·X)`.
pub fn circular_cross_correlation(
    h: &RealSignal,
    x: &RealSignal,
) -> Result<RealSignal, SpectralError> {
    check_len(h.len(), x.len())?;
    Ok(idft(&dft(h).conj_mul(&dft(x))?))
}

/// `y[k] = Σ_n h[n]·x[(k−n) mod N]`, via `idft(H·X)`.
pub fn circular_convolution(h: &RealSignal, x: &RealSignal) -> Result<RealSignal, SpectralError> {
    check_len(h.len(), x.len())?;
    Ok(idft(&dft(h).mul(&dft(x))?))
}

/// Strongest non-DC coefficient of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantCoefficient {
    pub index: usize,
    pub magnitude: f64,
    /// Principal value in `(−π, π]`.
    pub phase: f64,
}

/// Principal phase angle in `(−π, π]`.
pub fn phase(c: Complex64) -> f64 {
    let a = c.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Relative magnitude gap below which two bins count as tied.
///
/// Real signals have `|X[m]| = |X[N−m]|` exactly in theory but not bit for
/// bit after an FFT; without a tolerance the mirrored bin could win.
pub const DOMINANT_TIE_RTOL: f64 = 1e-10;

/// Largest-magnitude coefficient among bins `1..N`; ties (within
/// [`DOMINANT_TIE_RTOL`]) go to the smaller bin.
///
/// Panics if the spectrum has fewer than two coefficients.
pub fn dominant_coefficient(spectrum: &Spectrum) -> DominantCoefficient {
    assert!(spectrum.len() >= 2, "dominant coefficient needs N >= 2");
    let magnitudes: Vec<f64> = spectrum.0[1..].iter().map(|c| c.norm()).collect();
    let max = magnitudes.iter().cloned().fold(0.0, f64::max);
    let floor = max * (1.0 - DOMINANT_TIE_RTOL);
    let offset = magnitudes
        .iter()
        .position(|&m| m >= floor)
        .unwrap_or(0);
    let index = offset + 1;
    DominantCoefficient {
        index,
        magnitude: magnitudes[offset],
        phase: phase(spectrum[index]),
    }
}

/// Single-level Haar decomposition, packed as `[approximation..., detail...]`.
///
/// The output has the input's length. For odd `N` the last sample is
/// repeated to complete the final pair; that pair's detail is identically
/// zero and is dropped.
pub fn dwt(signal: &RealSignal) -> RealSignal {
    let x = signal.samples();
    let n = x.len();
    let pairs = n.div_ceil(2);
    let mut approx = Vec::with_capacity(pairs);
    let mut detail = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let a = x[2 * p];
        let b = if 2 * p + 1 < n { x[2 * p + 1] } else { a };
        approx.push((a + b) * FRAC_1_SQRT_2);
        if 2 * p + 1 < n {
            detail.push((a - b) * FRAC_1_SQRT_2);
        }
    }
    approx.extend(detail);
    RealSignal(approx)
}
