//! Spectra of random block matrices `I_k ⊗ A_n + W_k ⊗ B_n`.
//!
//! The crate has three layers:
//!
//! * simulation — seeded sampling of Wigner / Gaussian-Wigner / Wishart
//!   ensembles ([`ensembles`]), Kronecker block assembly ([`blockops`]) and
//!   dense Hermitian eigensolves ([`spectra`]);
//! * theory — probability measures on the real line with moments, CDFs and
//!   densities ([`measures`]), free-additive-convolution transform calculus
//!   ([`freeconv`]) and the limiting laws of the block model ([`limits`]);
//! * validation — a Monte Carlo harness comparing pooled empirical spectra
//!   against the analytic laws by moments and Kolmogorov–Smirnov distance
//!   ([`harness`]), driven by the `blockspectra` CLI ([`cli`]).
//!
//! All sampling is a pure function of `(spec, seed)`; reports are
//! byte-reproducible across runs and thread counts.

pub mod blockops;
pub mod cli;
pub mod ensembles;
pub mod freeconv;
pub mod harness;
pub mod limits;
pub mod measures;
pub mod spectra;

pub use ensembles::{EnsembleKind, EnsembleSpec, EntryLaw, HermitianMatrix, RngSeed};
pub use harness::{ComparisonReport, ExperimentConfig, MatrixSource, TheoryModel};
pub use measures::{AnalyticDensity, DiscreteMeasure, MarchenkoPasturLaw, SemicircleLaw};
pub use spectra::SpectralMeasure;
