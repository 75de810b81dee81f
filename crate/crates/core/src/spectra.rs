//! Dense Hermitian eigenvalue computation and empirical spectral measures
//! μ_A = (1/n) Σ δ_{λᵢ}.

use std::io::{self, Write};
use std::sync::Once;

use num_complex::Complex64;
use thiserror::Error;

use crate::ensembles::HermitianMatrix;

/// Order guard: one dense eigensolve beyond this takes minutes at desk scale.
pub const MAX_EIGEN_ORDER: usize = 8192;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("matrix order {0} exceeds the eigensolve guard {MAX_EIGEN_ORDER}")]
    OrderGuard(usize),
    #[error("eigensolver failed to converge (LAPACK zheev info = {0})")]
    Convergence(i32),
    #[error("empty eigenvalue list")]
    Empty,
}

extern "C" {
    fn openblas_set_num_threads(num_threads: std::os::raw::c_int);
}

/// OpenBLAS is pinned to one thread so eigensolves are bit-reproducible
/// regardless of machine or caller thread count; the harness parallelizes
/// across trials, never inside a solve.
fn pin_blas_threads() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// All eigenvalues of a Hermitian matrix, ascending (LAPACK `zheev`,
/// eigenvalues only).
pub fn hermitian_eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>, SpectraError> {
    let n = m.order();
    if n > MAX_EIGEN_ORDER {
        return Err(SpectraError::OrderGuard(n));
    }
    pin_blas_threads();

    let ni = n as i32;
    // nalgebra stores column-major, which is what LAPACK expects.
    let mut a: Vec<Complex64> = m.as_matrix().as_slice().to_vec();
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; (3 * n).saturating_sub(2).max(1)];
    let mut info = 0i32;

    // Workspace query, then the actual solve.
    let mut probe = [Complex64::new(0.0, 0.0)];
    unsafe {
        lapack::zheev(b'N', b'L', ni, &mut a, ni, &mut w, &mut probe, -1, &mut rwork, &mut info);
    }
    if info != 0 {
        return Err(SpectraError::Convergence(info));
    }
    let lwork = (probe[0].re as i32).max(2 * ni - 1).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack::zheev(b'N', b'L', ni, &mut a, ni, &mut w, &mut work, lwork, &mut rwork, &mut info);
    }
    if info != 0 {
        return Err(SpectraError::Convergence(info));
    }
    w.sort_unstable_by(f64::total_cmp);
    Ok(w)
}

/// Sorted eigenvalue multiset with uniform weights 1/n.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    eigenvalues: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self, SpectraError> {
        if eigenvalues.is_empty() {
            return Err(SpectraError::Empty);
        }
        eigenvalues.sort_unstable_by(f64::total_cmp);
        Ok(SpectralMeasure { eigenvalues })
    }

    /// Merge several spectra into one pooled measure (all weights uniform).
    pub fn pooled<I: IntoIterator<Item = SpectralMeasure>>(parts: I) -> Result<Self, SpectraError> {
        let mut all = Vec::new();
        for p in parts {
            all.extend(p.eigenvalues);
        }
        Self::new(all)
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// (1/n) Σ λᵢᵏ, the k-th moment of the spectral measure.
    pub fn moment(&self, k: u32) -> f64 {
        let sum: f64 = self.eigenvalues.iter().map(|x| x.powi(k as i32)).sum();
        sum / self.order() as f64
    }

    /// Empirical CDF (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.eigenvalues.partition_point(|&v| v <= x);
        idx as f64 / self.order() as f64
    }

    /// Equal-width histogram over `[min, max]`; the top bin is closed.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let bins = bins.max(1);
        let lo = self.min();
        let hi = self.max();
        let width = (hi - lo).max(f64::MIN_POSITIVE);
        let mut counts = vec![0usize; bins];
        for &x in &self.eigenvalues {
            let mut b = ((x - lo) / width * bins as f64) as usize;
            if b >= bins {
                b = bins - 1;
            }
            counts[b] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let left = lo + width * i as f64 / bins as f64;
                let right = lo + width * (i + 1) as f64 / bins as f64;
                (left, right, c)
            })
            .collect()
    }

    /// Write `index,eigenvalue` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (i, &x) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{}", i, x)?;
        }
        Ok(())
    }

    /// Write `bin_left,bin_right,count` rows.
    pub fn write_histogram_csv<W: Write>(&self, bins: usize, out: &mut W) -> io::Result<()> {
        writeln!(out, "bin_left,bin_right,count")?;
        for (l, r, c) in self.histogram(bins) {
            writeln!(out, "{},{},{}", l, r, c)?;
        }
        Ok(())
    }
}

/// Eigensolve and wrap as a spectral measure.
pub fn spectral_measure(m: &HermitianMatrix) -> Result<SpectralMeasure, SpectraError> {
    SpectralMeasure::new(hermitian_eigenvalues(m)?)
}
