//! Transform calculus for free additive convolution: Cauchy and R-transforms
//! of the shipped laws, the cubic equation defining the Cauchy transform of
//! γ_{0,1} ⊞ D_t(ρ₁), its closed-form density f(x;t) with quartic support
//! endpoints s₁(t) < s₂(t), and numerical Stieltjes inversion as an
//! independent evaluation route.

mod roots;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::measures::{
    AnalyticDensity, DensityKind, DiscreteMeasure, MarchenkoPasturLaw, MeasureError, SemicircleLaw,
};

/// Below this |t| the law γ_{0,1} ⊞ D_t(ρ₁) is evaluated as the plain
/// semicircle: D₀(ρ₁) = δ₀ and the closed form loses precision to its 1/t
/// factors.
pub const SEMICIRCLE_SWITCH: f64 = 1e-3;

/// Default ε ladder for the Stieltjes inversion oracle.
pub const DEFAULT_EPS_SEQUENCE: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

/// Imaginary-axis start of the root-continuation path.
const CONTINUATION_START: f64 = 1e6;
const CONTINUATION_RATIO: f64 = 0.1;

#[derive(Debug, Error)]
pub enum FreeConvError {
    #[error("the Cauchy transform requires Im z > 0 (got z = {0})")]
    ImagNotPositive(Complex64),
    #[error("dilation parameter must be positive (got t = {0})")]
    NonPositiveT(f64),
    #[error("t = 0 has no closed-form density; the law is the semicircle γ(0,1)")]
    TZero,
    #[error("R-transform evaluated within {0:e} of its pole")]
    PoleProximity(f64),
    #[error("no admissible root with Im g < 0 at z = {z}, t = {t}")]
    RootSelection { z: Complex64, t: f64 },
    #[error("cubic root residual {residual:e} exceeds tolerance at z = {z}, t = {t}")]
    Residual { z: Complex64, t: f64, residual: f64 },
    #[error("support quartic has {found} real roots at t = {t}, expected exactly 2")]
    QuarticRootCount { found: usize, t: f64 },
    #[error("Stieltjes inversion did not converge (last two levels differ by {delta:e})")]
    ExtrapolationDiverged { delta: f64 },
    #[error("eps sequence must be strictly decreasing positive with at least 2 entries")]
    BadEpsSequence,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

// ---------------------------------------------------------------------------
// Cauchy transforms
// ---------------------------------------------------------------------------

/// G_μ(z) = ∫ (z - x)⁻¹ dμ(x) for Im z > 0; maps the upper half plane into
/// the lower one with z·G(z) → 1 at infinity.
pub trait CauchyTransform {
    fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, FreeConvError>;
}

fn require_upper(z: Complex64) -> Result<(), FreeConvError> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(FreeConvError::ImagNotPositive(z))
    }
}

/// √((z-a)(z-b)) with the branch that behaves like z at infinity, computed as
/// a product of principal square roots; both factors live in the upper half
/// plane when z does.
fn edge_sqrt(z: Complex64, a: f64, b: f64) -> Complex64 {
    (z - Complex64::new(a, 0.0)).sqrt() * (z - Complex64::new(b, 0.0)).sqrt()
}

impl CauchyTransform for SemicircleLaw {
    fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, FreeConvError> {
        require_upper(z)?;
        let w = z - Complex64::new(self.center, 0.0);
        let two_sigma = 2.0 * self.variance.sqrt();
        let s = edge_sqrt(w, -two_sigma, two_sigma);
        Ok((w - s) / (2.0 * self.variance))
    }
}

impl CauchyTransform for MarchenkoPasturLaw {
    fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, FreeConvError> {
        require_upper(z)?;
        let (a, b) = self.support();
        let s = edge_sqrt(z, a, b);
        Ok((z + Complex64::new(1.0 - self.mean, 0.0) - s) / (z * 2.0))
    }
}

impl CauchyTransform for DiscreteMeasure {
    fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, FreeConvError> {
        require_upper(z)?;
        Ok(self
            .atoms()
            .iter()
            .map(|&(x, w)| Complex64::new(w, 0.0) / (z - Complex64::new(x, 0.0)))
            .sum())
    }
}

/// Free-function form of [`CauchyTransform::cauchy_transform`].
pub fn cauchy_transform<M: CauchyTransform>(
    measure: &M,
    z: Complex64,
) -> Result<Complex64, FreeConvError> {
    measure.cauchy_transform(z)
}

// ---------------------------------------------------------------------------
// R-transforms
// ---------------------------------------------------------------------------

/// Laws with a closed-form R-transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum RLaw {
    /// R(z) = σ² z.
    Semicircle { variance: f64 },
    /// R(z) = α / (1 - z).
    MarchenkoPastur { mean: f64 },
    /// R(z) = t / (1 - t z), from R_{D_t(μ)}(z) = t R_μ(t z).
    DilatedMarchenkoPastur { t: f64 },
}

const POLE_GUARD: f64 = 1e-12;

/// R_μ(z) for the closed-form laws.
pub fn r_transform(law: RLaw, z: Complex64) -> Result<Complex64, FreeConvError> {
    match law {
        RLaw::Semicircle { variance } => Ok(z * variance),
        RLaw::MarchenkoPastur { mean } => {
            let d = Complex64::new(1.0, 0.0) - z;
            if d.norm() < POLE_GUARD {
                return Err(FreeConvError::PoleProximity(d.norm()));
            }
            Ok(Complex64::new(mean, 0.0) / d)
        }
        RLaw::DilatedMarchenkoPastur { t } => {
            let d = Complex64::new(1.0, 0.0) - z * t;
            if d.norm() < POLE_GUARD {
                return Err(FreeConvError::PoleProximity(d.norm()));
            }
            Ok(Complex64::new(t, 0.0) / d)
        }
    }
}

/// K_μ(z) = R_μ(z) + 1/z, the functional inverse of the Cauchy transform.
pub fn k_transform(law: RLaw, z: Complex64) -> Result<Complex64, FreeConvError> {
    if z.norm() < POLE_GUARD {
        return Err(FreeConvError::PoleProximity(z.norm()));
    }
    Ok(r_transform(law, z)? + z.inv())
}

// ---------------------------------------------------------------------------
// The cubic for γ_{0,1} ⊞ D_t(ρ₁)
// ---------------------------------------------------------------------------

/// All three roots of t·g³ - (1 + tz)·g² + z·g - 1 = 0.
pub fn cubic_g_roots(z: Complex64, t: f64) -> Result<[Complex64; 3], FreeConvError> {
    if !(t > 0.0) {
        return Err(FreeConvError::NonPositiveT(t));
    }
    let ti = 1.0 / t;
    let c2 = -(Complex64::new(1.0, 0.0) + z * t) * ti;
    let c1 = z * ti;
    let c0 = Complex64::new(-ti, 0.0);
    Ok(roots::cubic_roots(c2, c1, c0))
}

fn cubic_residual(g: Complex64, z: Complex64, t: f64) -> (f64, f64) {
    let t1 = g * g * g * t;
    let t2 = g * g * (Complex64::new(1.0, 0.0) + z * t);
    let t3 = g * z;
    let residual = (t1 - t2 + t3 - Complex64::new(1.0, 0.0)).norm();
    let scale = 1.0 + t1.norm() + t2.norm() + t3.norm();
    (residual, scale)
}

/// The Cauchy-transform branch of the cubic: the unique root with Im g < 0
/// that continues from g ≈ 1/z on the imaginary axis. The branch is tracked
/// down a geometric path from Im = 10⁶ so that near-real z (where a second
/// root can dip below the axis) still resolves to the transform branch.
pub fn solve_cubic_g(z: Complex64, t: f64) -> Result<Complex64, FreeConvError> {
    if !(t > 0.0) {
        return Err(FreeConvError::NonPositiveT(t));
    }
    require_upper(z)?;

    let mut y = CONTINUATION_START.max(10.0 * z.im);
    let mut g = Complex64::new(z.re, y).inv();
    loop {
        let zc = Complex64::new(z.re, y);
        let candidates = cubic_g_roots(zc, t)?;
        g = candidates
            .into_iter()
            .min_by(|p, q| (p - g).norm().total_cmp(&(q - g).norm()))
            .unwrap();
        if y <= z.im {
            break;
        }
        y = (y * CONTINUATION_RATIO).max(z.im);
    }

    let (residual, scale) = cubic_residual(g, z, t);
    if residual > 1e-10 * scale {
        return Err(FreeConvError::Residual { z, t, residual });
    }
    if g.im > 1e-12 * (1.0 + g.norm()) {
        return Err(FreeConvError::RootSelection { z, t });
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Closed-form density and its support
// ---------------------------------------------------------------------------

fn h1(x: f64, t: f64) -> f64 {
    2.0 + 27.0 * t * t - 3.0 * t * x - 3.0 * t * t * x * x + 2.0 * t * t * t * x * x * x
}

fn h2(x: f64, t: f64) -> f64 {
    1.0 - t * x + t * t * x * x
}

/// Raw closed form, valid inside the support for t > 0. Inside the support
/// the defining cubic (real coefficients at real x) has one real root and a
/// conjugate pair; the density is |Im|/π of the pair, which Cardano reduces
/// to this real-arithmetic expression. The absolute value fixes the branch of
/// the real cube root: the combination vanishes exactly at the endpoints.
fn f_raw(x: f64, t: f64) -> f64 {
    let h1v = h1(x, t);
    let h2v = h2(x, t);
    let disc = h1v * h1v - 4.0 * h2v * h2v * h2v;
    if disc <= 0.0 {
        return 0.0;
    }
    let h = ((h1v + disc.sqrt()) / 2.0).cbrt();
    (h - h2v / h).abs() / (2.0 * 3.0f64.sqrt() * std::f64::consts::PI * t)
}

/// The two real roots s₁(t) < s₂(t) of the support quartic
/// 4 + 27t² - 6tx - x² - 6t²x² + 2tx³ + 4t³x³ - t²x⁴ = 0 for t > 0, found as
/// companion-matrix eigenvalues of the monic form. Exactly two real roots
/// exist for every t > 0; any other count is a numerical failure and is
/// surfaced as an error.
pub fn support_endpoints(t: f64) -> Result<(f64, f64), FreeConvError> {
    if !(t > 0.0) {
        return Err(FreeConvError::NonPositiveT(t));
    }
    let t2 = t * t;
    // Monic: x⁴ + c3 x³ + c2 x² + c1 x + c0 after dividing by -t².
    let c3 = -(2.0 * t + 4.0 * t * t2) / t2;
    let c2 = (1.0 + 6.0 * t2) / t2;
    let c1 = 6.0 / t;
    let c0 = -(4.0 + 27.0 * t2) / t2;
    let all = roots::quartic_roots(c0, c1, c2, c3);
    let real: Vec<f64> = all
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    if real.len() != 2 {
        return Err(FreeConvError::QuarticRootCount { found: real.len(), t });
    }
    let (s1, s2) = (real[0].min(real[1]), real[0].max(real[1]));
    Ok((s1, s2))
}

/// Value of the original (non-monic) support quartic; used for residual
/// checks against the published coefficients.
pub fn support_quartic(x: f64, t: f64) -> f64 {
    4.0 + 27.0 * t * t - 6.0 * t * x - x * x - 6.0 * t * t * x * x
        + 2.0 * t * x * x * x
        + 4.0 * t * t * t * x * x * x
        - t * t * x * x * x * x
}

/// Closed-form density of γ_{0,1} ⊞ D_t(ρ₁) at x, masked to [s₁(t), s₂(t)].
/// Negative t uses the reflection f(x;t) = f(-x;-t); t = 0 is rejected (the
/// law is the plain semicircle there).
pub fn f_closed_form(x: f64, t: f64) -> Result<f64, FreeConvError> {
    if t == 0.0 {
        return Err(FreeConvError::TZero);
    }
    if t < 0.0 {
        return f_closed_form(-x, -t);
    }
    let (s1, s2) = support_endpoints(t)?;
    if x < s1 || x > s2 {
        return Ok(0.0);
    }
    Ok(f_raw(x, t))
}

/// γ_{0,1} ⊞ D_t(γ_{0,1}) = γ_{0,1+t²}, for every real t.
pub fn semicircle_convolution(t: f64) -> SemicircleLaw {
    SemicircleLaw::new(0.0, 1.0 + t * t).expect("variance >= 1")
}

/// −(1/π)·Im G(x + iε) extrapolated to ε → 0 over a decreasing ε ladder
/// (Richardson on the last two levels). Serves as the branch-unambiguous
/// oracle for [`f_closed_form`].
pub fn stieltjes_invert(t: f64, x: f64, eps_sequence: &[f64]) -> Result<f64, FreeConvError> {
    if !(t > 0.0) {
        return Err(FreeConvError::NonPositiveT(t));
    }
    if eps_sequence.len() < 2
        || eps_sequence.windows(2).any(|w| w[1] >= w[0])
        || eps_sequence.iter().any(|&e| !(e > 0.0))
    {
        return Err(FreeConvError::BadEpsSequence);
    }
    let phis: Vec<f64> = eps_sequence
        .iter()
        .map(|&eps| {
            solve_cubic_g(Complex64::new(x, eps), t)
                .map(|g| -g.im / std::f64::consts::PI)
        })
        .collect::<Result<_, _>>()?;
    let m = phis.len();
    let delta = (phis[m - 1] - phis[m - 2]).abs();
    if delta > 1e-3 {
        return Err(FreeConvError::ExtrapolationDiverged { delta });
    }
    let (e1, e2) = (eps_sequence[m - 2], eps_sequence[m - 1]);
    // Im G is linear in ε to leading order; eliminate that term.
    Ok((e1 * phis[m - 1] - e2 * phis[m - 2]) / (e1 - e2))
}

// ---------------------------------------------------------------------------
// Evaluable model of γ_{0,1} ⊞ D_t(ρ₁)
// ---------------------------------------------------------------------------

/// Which evaluation route a [`ConvolutionModel`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    ClosedForm,
    NumericInversion,
}

/// The free convolution γ_{0,1} ⊞ D_t(ρ₁) with cached support endpoints.
/// |t| < [`SEMICIRCLE_SWITCH`] degrades to γ_{0,1}; negative t reflects the
/// positive-t law.
#[derive(Clone, Copy, Debug)]
pub struct ConvolutionModel {
    t: f64,
    s1: f64,
    s2: f64,
    mode: EvalMode,
}

impl ConvolutionModel {
    pub fn new(t: f64) -> Result<Self, FreeConvError> {
        Self::with_mode(t, EvalMode::ClosedForm)
    }

    pub fn with_mode(t: f64, mode: EvalMode) -> Result<Self, FreeConvError> {
        let (s1, s2) = if t.abs() < SEMICIRCLE_SWITCH {
            (-2.0, 2.0)
        } else if t > 0.0 {
            support_endpoints(t)?
        } else {
            let (m1, m2) = support_endpoints(-t)?;
            (-m2, -m1)
        };
        Ok(ConvolutionModel { t, s1, s2, mode })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn support(&self) -> (f64, f64) {
        (self.s1, self.s2)
    }

    /// Density value at x. The numeric-inversion mode maps the rare
    /// non-convergence near the support endpoints to 0, where the density
    /// vanishes anyway.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.s1 || x > self.s2 {
            return 0.0;
        }
        if self.t.abs() < SEMICIRCLE_SWITCH {
            return SemicircleLaw::standard().density(x);
        }
        let (x, t) = if self.t > 0.0 { (x, self.t) } else { (-x, -self.t) };
        match self.mode {
            EvalMode::ClosedForm => f_raw(x, t),
            EvalMode::NumericInversion => {
                stieltjes_invert(t, x, &DEFAULT_EPS_SEQUENCE).unwrap_or(0.0)
            }
        }
    }

    pub fn to_density(&self) -> Result<AnalyticDensity, FreeConvError> {
        let model = *self;
        Ok(AnalyticDensity::new(
            DensityKind::FreeConvF { t: model.t },
            vec![(model.s1, model.s2)],
            Vec::new(),
            Arc::new(move |x| model.density(x)),
        )?)
    }
}
