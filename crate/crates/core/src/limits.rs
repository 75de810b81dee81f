//! Limiting laws of the block model: the mixture ν(dx) = ∫ψ(t;dx) μ_ω(dt),
//! the Wigner+Gaussian density g, the Wigner+Wishart density, the fixed-k
//! block limit and the SS-Law (finite mixture of semicircle laws).

use std::sync::Arc;

use thiserror::Error;

use crate::freeconv::{ConvolutionModel, FreeConvError};
use crate::measures::quad::integrate;
use crate::measures::{
    gauss_chebyshev_rule, AnalyticDensity, DensityKind, DiscreteMeasure, MeasureError,
    QuadratureRule, SemicircleLaw,
};

/// Largest outer order accepted by [`finite_k_limit`]; ψ(k-1;·) has support
/// growing like O(k).
pub const MAX_FINITE_K: usize = 1024;

/// Discretization order of μ_ω = γ_{0,1} used for the semicircle-family
/// mixture ν. The integrand t ↦ ψ(t;x) has a square-root kink where the
/// component support crosses x, so the rule converges algebraically rather
/// than spectrally; this order keeps the mixture within ~1.5e-6 of the exact
/// density on [-5, 5].
pub const DEFAULT_OMEGA_ORDER: usize = 4096;

/// Discretization order of μ_ω for the Wigner+Wishart mixture, where each
/// node costs a closed-form evaluation of f(·;t); accurate to a few 1e-4,
/// far below the Monte Carlo comparison tolerances it serves.
pub const DEFAULT_WISHART_OMEGA_ORDER: usize = 64;

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("alphas and betas must have equal nonzero length (got {0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("outer order {0} outside 1..={MAX_FINITE_K}")]
    KGuard(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    FreeConv(#[from] FreeConvError),
}

// ---------------------------------------------------------------------------
// ψ families
// ---------------------------------------------------------------------------

/// User-supplied ψ family: density and support as functions of t.
pub struct TabulatedPsi {
    pub density: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub support: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
}

/// A family of probability laws ψ(t;·), the limit of μ_{A+tB} as the block
/// order grows.
#[derive(Clone)]
pub enum PsiFamily {
    /// ψ(t;·) = γ_{0,1+t²} (A, B both Gaussian Wigner).
    SemicircleOnePlusT2,
    /// ψ(t;·) = γ_{0,1} ⊞ D_t(ρ₁) (A Gaussian Wigner, B Wishart, p/n → 1).
    WishartFreeConv,
    /// Arbitrary tabulated family.
    Tabulated(Arc<TabulatedPsi>),
}

impl std::fmt::Debug for PsiFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiFamily::SemicircleOnePlusT2 => write!(f, "PsiFamily::SemicircleOnePlusT2"),
            PsiFamily::WishartFreeConv => write!(f, "PsiFamily::WishartFreeConv"),
            PsiFamily::Tabulated(_) => write!(f, "PsiFamily::Tabulated"),
        }
    }
}

/// One frozen mixture component: ψ at a fixed t, cheap to evaluate.
#[derive(Clone)]
enum Component {
    Semicircle(SemicircleLaw),
    FreeConv(ConvolutionModel),
    Tabulated(Arc<TabulatedPsi>, f64),
}

impl Component {
    fn density(&self, x: f64) -> f64 {
        match self {
            Component::Semicircle(law) => law.density(x),
            Component::FreeConv(model) => model.density(x),
            Component::Tabulated(psi, t) => {
                let (lo, hi) = (psi.support)(*t);
                if x < lo || x > hi {
                    0.0
                } else {
                    (psi.density)(*t, x)
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Component::Semicircle(law) => law.support(),
            Component::FreeConv(model) => model.support(),
            Component::Tabulated(psi, t) => (psi.support)(*t),
        }
    }
}

impl PsiFamily {
    fn component(&self, t: f64) -> Result<Component, LimitsError> {
        Ok(match self {
            PsiFamily::SemicircleOnePlusT2 => {
                Component::Semicircle(SemicircleLaw::new(0.0, 1.0 + t * t)?)
            }
            PsiFamily::WishartFreeConv => Component::FreeConv(ConvolutionModel::new(t)?),
            PsiFamily::Tabulated(psi) => Component::Tabulated(Arc::clone(psi), t),
        })
    }

    /// Density of ψ(t;·) at x.
    pub fn density(&self, t: f64, x: f64) -> Result<f64, LimitsError> {
        Ok(self.component(t)?.density(x))
    }

    /// Support interval of ψ(t;·).
    pub fn support(&self, t: f64) -> Result<(f64, f64), LimitsError> {
        Ok(self.component(t)?.support())
    }
}

// ---------------------------------------------------------------------------
// Mixtures ν(dx) = ∫ ψ(t;dx) μ_ω(dt)
// ---------------------------------------------------------------------------

/// μ_ω, discretized either by a quadrature rule or by exact atoms.
#[derive(Clone, Debug)]
pub enum OmegaMeasure {
    Rule(QuadratureRule),
    Atoms(DiscreteMeasure),
}

impl OmegaMeasure {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            OmegaMeasure::Rule(rule) => rule.pairs().collect(),
            OmegaMeasure::Atoms(m) => m.atoms().to_vec(),
        }
    }
}

/// Pointwise mixture density Σⱼ wⱼ ψ(tⱼ; x) over the nodes of `omega`.
///
/// Components are rebuilt per call; for repeated evaluation construct a
/// [`MixtureLaw`] once instead.
pub fn nu_density(psi: &PsiFamily, omega: &OmegaMeasure, x: f64) -> Result<f64, LimitsError> {
    let mut sum = 0.0;
    for (t, w) in omega.pairs() {
        if w == 0.0 {
            continue;
        }
        sum += w * psi.component(t)?.density(x);
    }
    Ok(sum)
}

/// A frozen mixture: per-node components with their weights, wrapped as an
/// evaluable density with merged support.
#[derive(Clone)]
pub struct MixtureLaw {
    law: AnalyticDensity,
}

impl MixtureLaw {
    pub fn new(psi: &PsiFamily, omega: &OmegaMeasure) -> Result<Self, LimitsError> {
        let mut components: Vec<(f64, Component)> = Vec::new();
        let mut support = Vec::new();
        for (t, w) in omega.pairs() {
            if w == 0.0 {
                continue;
            }
            let comp = psi.component(t)?;
            support.push(comp.support());
            components.push((w, comp));
        }
        let components = Arc::new(components);
        let eval = {
            let components = Arc::clone(&components);
            move |x: f64| components.iter().map(|(w, c)| w * c.density(x)).sum::<f64>()
        };
        let law = AnalyticDensity::new(
            DensityKind::TabulatedMixture,
            support,
            Vec::new(),
            Arc::new(eval),
        )?;
        Ok(MixtureLaw { law })
    }

    pub fn law(&self) -> &AnalyticDensity {
        &self.law
    }

    pub fn into_law(self) -> AnalyticDensity {
        self.law
    }
}

// ---------------------------------------------------------------------------
// The closed-form limit densities
// ---------------------------------------------------------------------------

const TWO_SQRT5: f64 = 4.472_135_954_999_579_4;

/// Density of the limiting law when A, B are Gaussian Wigner and W is Wigner:
/// the Eq.-style double integral evaluated directly by adaptive quadrature.
/// Supported on |x| ≤ 2√5.
pub fn g_wigner_gaussian(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= TWO_SQRT5 {
        return 0.0;
    }
    let lower = (ax * ax / 4.0 - 1.0).max(0.0).sqrt();
    let integrand = |t: f64| {
        let top = (4.0 * (1.0 + t * t) - x * x).max(0.0).sqrt();
        let weight = (4.0 - t * t).max(0.0).sqrt();
        top * weight / (1.0 + t * t)
    };
    integrate(integrand, lower, 2.0, 1e-10) / (2.0 * std::f64::consts::PI.powi(2))
}

/// The Wigner+Gaussian limit as an evaluable law.
pub fn wigner_gaussian_law() -> Result<AnalyticDensity, LimitsError> {
    Ok(AnalyticDensity::new(
        DensityKind::WignerGaussianG,
        vec![(-TWO_SQRT5, TWO_SQRT5)],
        Vec::new(),
        Arc::new(g_wigner_gaussian),
    )?)
}

/// Pointwise Wigner+Wishart density ∫ f(x;t) γ_{0,1}(dt) against the nodes of
/// `omega_rule`. Negative nodes use the reflection f(x;t) = f(-x;-t) and
/// near-zero nodes the semicircle substitute, both inside
/// [`ConvolutionModel`].
pub fn g_wigner_wishart(x: f64, omega_rule: &QuadratureRule) -> Result<f64, LimitsError> {
    let mut sum = 0.0;
    for (t, w) in omega_rule.pairs() {
        sum += w * ConvolutionModel::new(t)?.density(x);
    }
    Ok(sum)
}

/// The Wigner+Wishart limit as a frozen mixture law.
pub fn wigner_wishart_law(order: usize) -> Result<AnalyticDensity, LimitsError> {
    let rule = gauss_chebyshev_rule(order)?;
    Ok(MixtureLaw::new(&PsiFamily::WishartFreeConv, &OmegaMeasure::Rule(rule))?.into_law())
}

/// Fixed-outer-order limit for the complete-graph coupling: the mixture
/// ((k-1)/k)·ψ(-1;·) + (1/k)·ψ(k-1;·). `k = 1` degenerates to ψ(0;·).
pub fn finite_k_limit(psi: &PsiFamily, k: usize) -> Result<AnalyticDensity, LimitsError> {
    if k == 0 || k > MAX_FINITE_K {
        return Err(LimitsError::KGuard(k));
    }
    let kf = k as f64;
    let atoms = if k == 1 {
        DiscreteMeasure::dirac(0.0)
    } else {
        DiscreteMeasure::new(vec![(-1.0, (kf - 1.0) / kf), (kf - 1.0, 1.0 / kf)])
            .expect("convex combination")
    };
    Ok(MixtureLaw::new(psi, &OmegaMeasure::Atoms(atoms))?.into_law())
}

/// The SS-Law (1/n) Σⱼ γ_{αⱼ, βⱼ²}: the k → ∞ limit when A and B commute
/// with eigenvalue pairs (αⱼ, βⱼ). Components with βⱼ = 0 degenerate to
/// atoms δ_{αⱼ}, tracked in the atomic part of the returned law.
pub fn ss_law(alphas: &[f64], betas: &[f64]) -> Result<AnalyticDensity, LimitsError> {
    if alphas.is_empty() || alphas.len() != betas.len() {
        return Err(LimitsError::LengthMismatch(alphas.len(), betas.len()));
    }
    let n = alphas.len() as f64;
    let mut components = Vec::new();
    let mut atoms = Vec::new();
    let mut support = Vec::new();
    for (&a, &b) in alphas.iter().zip(betas) {
        if b == 0.0 {
            atoms.push((a, 1.0 / n));
        } else {
            let law = SemicircleLaw::new(a, b * b)?;
            support.push(law.support());
            components.push(law);
        }
    }
    if components.is_empty() {
        // Purely atomic; keep a zero-density sliver so the support is valid.
        support.push((alphas[0], alphas[0] + f64::EPSILON));
    }
    let weight = 1.0 / n;
    let eval = move |x: f64| {
        components.iter().map(|law| weight * law.density(x)).sum::<f64>()
    };
    Ok(AnalyticDensity::new(
        DensityKind::SsLaw,
        support,
        atoms,
        Arc::new(eval),
    )?)
}

/// Absolutely continuous part of the SS-Law density at x.
pub fn ss_law_density(alphas: &[f64], betas: &[f64], x: f64) -> Result<f64, LimitsError> {
    if alphas.is_empty() || alphas.len() != betas.len() {
        return Err(LimitsError::LengthMismatch(alphas.len(), betas.len()));
    }
    let n = alphas.len() as f64;
    let mut sum = 0.0;
    for (&a, &b) in alphas.iter().zip(betas) {
        if b != 0.0 {
            sum += SemicircleLaw::new(a, b * b)?.density(x) / n;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::quad::QuadTarget;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nu_with_dirac_at_zero_is_the_plain_semicircle() {
        let psi = PsiFamily::WishartFreeConv;
        let omega = OmegaMeasure::Atoms(DiscreteMeasure::dirac(0.0));
        let reference = SemicircleLaw::standard();
        for x in [-1.9, -1.0, 0.0, 0.7, 1.5] {
            let v = nu_density(&psi, &omega, x).unwrap();
            assert_abs_diff_eq!(v, reference.density(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn nu_with_symmetric_atoms_matches_variance_two_semicircle() {
        let psi = PsiFamily::SemicircleOnePlusT2;
        let omega = OmegaMeasure::Atoms(
            DiscreteMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        );
        let reference = SemicircleLaw::new(0.0, 2.0).unwrap();
        for x in [-2.5, -0.5, 0.0, 1.0, 2.7] {
            let v = nu_density(&psi, &omega, x).unwrap();
            assert_abs_diff_eq!(v, reference.density(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn nu_moments_for_semicircle_family_against_closed_values() {
        // ∫(1+t²)γ(dt) = 2 and ∫2(1+t²)²γ(dt) = 10, from semicircle moments
        // m₂ = 1, m₄ = 2 (Catalan numbers).
        let rule = gauss_chebyshev_rule(DEFAULT_OMEGA_ORDER).unwrap();
        assert_eq!(rule.target(), QuadTarget::StandardSemicircle);
        let mixture = MixtureLaw::new(
            &PsiFamily::SemicircleOnePlusT2,
            &OmegaMeasure::Rule(rule),
        )
        .unwrap();
        let m2 = mixture.law().moment(2).unwrap();
        let m4 = mixture.law().moment(4).unwrap();
        assert_abs_diff_eq!(m2, 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(m4, 10.0, epsilon = 1e-6);
    }

    #[test]
    fn moment_interchange_with_the_mixture() {
        // moment(ν, m) = Σⱼ wⱼ·moment(ψ(tⱼ), m) — the Fubini step.
        let atoms = DiscreteMeasure::new(vec![(-1.0, 0.25), (0.5, 0.35), (2.0, 0.4)]).unwrap();
        let psi = PsiFamily::SemicircleOnePlusT2;
        let mixture =
            MixtureLaw::new(&psi, &OmegaMeasure::Atoms(atoms.clone())).unwrap();
        for m in 0..=6u32 {
            let lhs = mixture.law().moment(m).unwrap();
            let mut rhs = 0.0;
            for &(t, w) in atoms.atoms() {
                let comp = SemicircleLaw::new(0.0, 1.0 + t * t).unwrap().to_density();
                rhs += w * comp.moment(m).unwrap();
            }
            assert!((lhs - rhs).abs() <= 1e-7 * rhs.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn g_wigner_gaussian_support_and_positivity() {
        assert!(g_wigner_gaussian(3.0) > 0.0);
        assert_eq!(g_wigner_gaussian(TWO_SQRT5 + 0.01), 0.0);
        assert!(g_wigner_gaussian(0.0) > g_wigner_gaussian(4.0));
    }

    #[test]
    fn g_wigner_gaussian_is_normalized() {
        let mass = integrate(g_wigner_gaussian, -TWO_SQRT5, TWO_SQRT5, 1e-9);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn wigner_wishart_convenience_matches_frozen_law() {
        let rule = gauss_chebyshev_rule(DEFAULT_WISHART_OMEGA_ORDER).unwrap();
        let law = wigner_wishart_law(DEFAULT_WISHART_OMEGA_ORDER).unwrap();
        for x in [-1.5, -0.3, 0.4, 1.2, 2.5, 4.0] {
            let a = g_wigner_wishart(x, &rule).unwrap();
            assert_abs_diff_eq!(a, law.density(x), epsilon = 1e-12);
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn wigner_wishart_rule_orders_agree_loosely() {
        // The moving support edge puts a sqrt kink in t ↦ f(x;t), so doubling
        // the rule order shifts the mixture by ~1e-3 at worst, not 1e-5; the
        // law stays a genuine probability density at every order.
        let r64 = gauss_chebyshev_rule(64).unwrap();
        let r128 = gauss_chebyshev_rule(128).unwrap();
        let mut worst: f64 = 0.0;
        let mut x = -6.0;
        while x <= 10.0 {
            let a = g_wigner_wishart(x, &r64).unwrap();
            let b = g_wigner_wishart(x, &r128).unwrap();
            worst = worst.max((a - b).abs());
            x += 0.25;
        }
        assert!(worst <= 2e-3, "worst = {worst}");
    }

    #[test]
    fn finite_k_limit_cases() {
        let psi = PsiFamily::SemicircleOnePlusT2;
        // k = 1: single block, ψ(0;·) = γ_{0,1}.
        let k1 = finite_k_limit(&psi, 1).unwrap();
        let std = SemicircleLaw::standard();
        for x in [-1.5, 0.0, 1.0] {
            assert_abs_diff_eq!(k1.density(x), std.density(x), epsilon = 1e-12);
        }
        // k = 2: ½ψ(-1;·) + ½ψ(1;·) = γ_{0,2} by t² symmetry.
        let k2 = finite_k_limit(&psi, 2).unwrap();
        let two = SemicircleLaw::new(0.0, 2.0).unwrap();
        for x in [-2.0, 0.3, 2.5] {
            assert_abs_diff_eq!(k2.density(x), two.density(x), epsilon = 1e-12);
        }
        for k in [2usize, 3, 10] {
            let law = finite_k_limit(&psi, k).unwrap();
            let mass = law.ac_mass() + law.atom_mass();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
        }
        assert!(finite_k_limit(&psi, 0).is_err());
        assert!(finite_k_limit(&psi, MAX_FINITE_K + 1).is_err());
    }

    #[test]
    fn ss_law_single_component_is_semicircle() {
        let law = ss_law(&[0.0], &[1.0]).unwrap();
        let std = SemicircleLaw::standard();
        for x in [-1.2, 0.0, 1.8] {
            assert_abs_diff_eq!(law.density(x), std.density(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn ss_law_disjoint_components_split_mass() {
        let law = ss_law(&[-3.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_eq!(law.support(), &[(-5.0, -1.0), (1.0, 5.0)]);
        let left = integrate(|x| law.density(x), -5.0, -1.0, 1e-10);
        assert_abs_diff_eq!(left, 0.5, epsilon = 1e-8);
        assert_eq!(law.density(0.0), 0.0);
    }

    #[test]
    fn ss_law_zero_beta_becomes_atom() {
        let law = ss_law(&[1.0, -2.0], &[1.0, 0.0]).unwrap();
        assert_eq!(law.atoms(), &[(-2.0, 0.5)]);
        assert_abs_diff_eq!(law.ac_mass(), 0.5, epsilon = 1e-8);
    }

    #[test]
    fn ss_law_moment_matches_component_formula() {
        // m₂ = (1/n) Σ (αⱼ² + βⱼ²) via the semicircle change of variables.
        let alphas = [0.3, -1.2, 2.0, 0.0];
        let betas = [1.0, 0.5, 1.5, 2.0];
        let law = ss_law(&alphas, &betas).unwrap();
        let m2 = law.moment(2).unwrap();
        let expect: f64 = alphas
            .iter()
            .zip(&betas)
            .map(|(&a, &b)| a * a + b * b)
            .sum::<f64>()
            / alphas.len() as f64;
        assert_abs_diff_eq!(m2, expect, epsilon = 1e-7);
    }

    #[test]
    fn ss_law_rejects_length_mismatch() {
        assert!(ss_law(&[1.0], &[1.0, 2.0]).is_err());
        assert!(ss_law_density(&[1.0], &[], 0.0).is_err());
    }
}
