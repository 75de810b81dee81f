//! Probability measures on the real line: finite atom lists, the classical
//! limit laws (semicircle, Marchenko–Pastur), generic evaluable densities
//! with optional atomic parts, moments, CDFs, dilation and the
//! Kolmogorov–Smirnov distance against empirical spectra.

mod cdf;
pub mod quad;

use std::fmt;
use std::io::{self, Write};
use std::sync::{Arc, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::spectra::SpectralMeasure;
use cdf::CdfTable;
pub use quad::{gauss_chebyshev_rule, QuadTarget, QuadratureRule};

/// Mass normalization tolerance for constructed densities.
pub const MASS_TOL: f64 = 1e-6;
/// Weight normalization tolerance for atom lists.
const ATOM_SUM_TOL: f64 = 1e-12;
/// Largest moment order served; higher powers lose all precision in f64.
pub const MAX_MOMENT_ORDER: u32 = 64;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("atom weights must be nonnegative (got {0})")]
    NegativeWeight(f64),
    #[error("measure mass is {0}, expected 1")]
    NotNormalized(f64),
    #[error("moment order {0} exceeds the supported maximum {MAX_MOMENT_ORDER}")]
    MomentOrder(u32),
    #[error("empirical measure is empty")]
    EmptyEmpirical,
    #[error("{0}")]
    InvalidParameter(String),
}

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

/// A purely atomic probability measure: finitely many `(location, weight)`
/// pairs with nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        let mut sum = 0.0;
        for &(_, w) in &atoms {
            if w < 0.0 || !w.is_finite() {
                return Err(MeasureError::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > ATOM_SUM_TOL {
            return Err(MeasureError::NotNormalized(sum));
        }
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, w)| w > 0.0).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge exactly coincident locations.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    /// The point mass δ_x.
    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure { atoms: vec![(x, 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Exact weighted power sum Σ wᵢ xᵢᵏ.
    pub fn moment(&self, k: u32) -> Result<f64, MeasureError> {
        if k > MAX_MOMENT_ORDER {
            return Err(MeasureError::MomentOrder(k));
        }
        Ok(self.atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum())
    }

    /// Pushforward under x ↦ tx; `t = 0` collapses to δ₀.
    pub fn dilate(&self, t: f64) -> Self {
        if t == 0.0 {
            return Self::dirac(0.0);
        }
        let atoms = self.atoms.iter().map(|&(x, w)| (t * x, w)).collect();
        Self::new(atoms).expect("dilation preserves weights")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|&&(loc, _)| loc <= x)
            .map(|&(_, w)| w)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Closed-form laws
// ---------------------------------------------------------------------------

/// Semicircle law γ_{α,σ²} with density √(4σ² - (x-α)²) / (2πσ²) on
/// [α-2σ, α+2σ].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SemicircleLaw {
    pub center: f64,
    pub variance: f64,
}

impl SemicircleLaw {
    pub fn new(center: f64, variance: f64) -> Result<Self, MeasureError> {
        if !(variance > 0.0) || !variance.is_finite() || !center.is_finite() {
            return Err(MeasureError::InvalidParameter(format!(
                "semicircle law needs finite center and variance > 0 (got {center}, {variance})"
            )));
        }
        Ok(SemicircleLaw { center, variance })
    }

    /// The standard semicircle γ_{0,1}.
    pub fn standard() -> Self {
        SemicircleLaw { center: 0.0, variance: 1.0 }
    }

    pub fn support(&self) -> (f64, f64) {
        let r = 2.0 * self.variance.sqrt();
        (self.center - r, self.center + r)
    }

    pub fn density(&self, x: f64) -> f64 {
        let d = 4.0 * self.variance - (x - self.center).powi(2);
        if d <= 0.0 {
            0.0
        } else {
            d.sqrt() / (2.0 * std::f64::consts::PI * self.variance)
        }
    }

    pub fn dilate(&self, t: f64) -> Option<SemicircleLaw> {
        (t != 0.0).then(|| SemicircleLaw {
            center: t * self.center,
            variance: t * t * self.variance,
        })
    }

    pub fn to_density(&self) -> AnalyticDensity {
        let law = *self;
        let (lo, hi) = law.support();
        AnalyticDensity::new(
            DensityKind::Semicircle { center: law.center, variance: law.variance },
            vec![(lo, hi)],
            Vec::new(),
            Arc::new(move |x| law.density(x)),
        )
        .expect("semicircle law is normalized")
    }
}

/// Evaluate the semicircle density γ_{c,σ²} at `x`.
pub fn semicircle_density(x: f64, center: f64, variance: f64) -> Result<f64, MeasureError> {
    Ok(SemicircleLaw::new(center, variance)?.density(x))
}

/// Marchenko–Pastur law ρ_α with mean α: an atom of mass (1-α)⁺ at zero plus
/// density √((x-a)(b-x)) / (2πx) on [a, b], a = (√α-1)², b = (√α+1)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarchenkoPasturLaw {
    pub mean: f64,
}

impl MarchenkoPasturLaw {
    pub fn new(mean: f64) -> Result<Self, MeasureError> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(MeasureError::InvalidParameter(format!(
                "marchenko-pastur law needs mean > 0 (got {mean})"
            )));
        }
        Ok(MarchenkoPasturLaw { mean })
    }

    pub fn atom_mass(&self) -> f64 {
        (1.0 - self.mean).max(0.0)
    }

    /// Support of the absolutely continuous part.
    pub fn support(&self) -> (f64, f64) {
        let s = self.mean.sqrt();
        ((s - 1.0).powi(2), (s + 1.0).powi(2))
    }

    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((x - a) * (b - x)).sqrt() / (2.0 * std::f64::consts::PI * x)
    }

    pub fn to_density(&self) -> AnalyticDensity {
        let law = *self;
        let (a, b) = law.support();
        let atoms = if law.atom_mass() > 0.0 { vec![(0.0, law.atom_mass())] } else { Vec::new() };
        AnalyticDensity::new(
            DensityKind::MarchenkoPastur { mean: law.mean },
            vec![(a, b)],
            atoms,
            Arc::new(move |x| law.density(x)),
        )
        .expect("marchenko-pastur law is normalized")
    }
}

/// Evaluate ρ_α at `x`, returning `(atom mass at zero, density value)`.
pub fn marchenko_pastur_density(x: f64, mean: f64) -> Result<(f64, f64), MeasureError> {
    let law = MarchenkoPasturLaw::new(mean)?;
    Ok((law.atom_mass(), law.density(x)))
}

// ---------------------------------------------------------------------------
// Generic evaluable densities
// ---------------------------------------------------------------------------

/// Identification tag for an [`AnalyticDensity`]; carried through exports.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DensityKind {
    Semicircle { center: f64, variance: f64 },
    MarchenkoPastur { mean: f64 },
    /// Free convolution γ_{0,1} ⊞ D_t(ρ₁) with parameter t.
    FreeConvF { t: f64 },
    /// The Wigner + Gaussian limit density of the block model.
    WignerGaussianG,
    /// Finite mixture of semicircle laws.
    SsLaw,
    /// A quadrature- or atom-weighted mixture of parametric components.
    TabulatedMixture,
    /// Pushforward of `base` under x ↦ tx.
    Dilated { t: f64, base: Box<DensityKind> },
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named absolutely continuous law with explicit support and an optional
/// atomic part. Evaluation outside the declared support is exactly zero.
/// Instances are immutable; the CDF table is built once on first use.
#[derive(Clone)]
pub struct AnalyticDensity {
    kind: DensityKind,
    support: Vec<(f64, f64)>,
    atoms: Vec<(f64, f64)>,
    ac_mass: f64,
    eval: Eval,
    cdf: Arc<OnceLock<CdfTable>>,
}

impl fmt::Debug for AnalyticDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticDensity")
            .field("kind", &self.kind)
            .field("support", &self.support)
            .field("atoms", &self.atoms)
            .field("ac_mass", &self.ac_mass)
            .finish()
    }
}

/// Sort, validate and merge overlapping support intervals.
fn normalize_support(mut intervals: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>, MeasureError> {
    intervals.retain(|&(a, b)| b > a);
    if intervals.is_empty() {
        return Err(MeasureError::InvalidParameter("empty support".into()));
    }
    for &(a, b) in &intervals {
        if !a.is_finite() || !b.is_finite() {
            return Err(MeasureError::InvalidParameter(format!(
                "support interval ({a}, {b}) is not finite"
            )));
        }
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(merged)
}

impl AnalyticDensity {
    /// Build a density as `atoms + eval·1_support` and verify it carries unit
    /// mass (quadrature for the a.c. part, exact sums for atoms).
    pub fn new(
        kind: DensityKind,
        support: Vec<(f64, f64)>,
        atoms: Vec<(f64, f64)>,
        eval: Eval,
    ) -> Result<Self, MeasureError> {
        let support = normalize_support(support)?;
        let mut atom_mass = 0.0;
        for &(_, w) in &atoms {
            if w < 0.0 || !w.is_finite() {
                return Err(MeasureError::NegativeWeight(w));
            }
            atom_mass += w;
        }
        let ac_mass: f64 = support
            .iter()
            .map(|&(a, b)| quad::integrate(&*eval, a, b, 1e-10))
            .sum();
        let total = ac_mass + atom_mass;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::NotNormalized(total));
        }
        let mut atoms = atoms;
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(AnalyticDensity {
            kind,
            support,
            atoms,
            ac_mass,
            eval,
            cdf: Arc::new(OnceLock::new()),
        })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Disjoint, ascending support intervals of the a.c. part.
    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// Smallest interval containing the support and all atoms.
    pub fn support_hull(&self) -> (f64, f64) {
        let mut lo = self.support[0].0;
        let mut hi = self.support.last().unwrap().1;
        if let Some(&(x, _)) = self.atoms.first() {
            lo = lo.min(x);
        }
        if let Some(&(x, _)) = self.atoms.last() {
            hi = hi.max(x);
        }
        (lo, hi)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    pub fn ac_mass(&self) -> f64 {
        self.ac_mass
    }

    /// Density of the a.c. part; exactly zero outside the declared support.
    pub fn density(&self, x: f64) -> f64 {
        if self.support.iter().any(|&(a, b)| x >= a && x <= b) {
            (self.eval)(x)
        } else {
            0.0
        }
    }

    fn table(&self) -> &CdfTable {
        self.cdf.get_or_init(|| {
            let eval = Arc::clone(&self.eval);
            CdfTable::build(&self.support, move |x| eval(x))
        })
    }

    /// Force the CDF table to exist; afterwards all evaluation paths are
    /// read-only and freely shareable across threads.
    pub fn precompute_cdf(&self) {
        self.table();
    }

    /// Right-continuous CDF including atoms.
    pub fn cdf(&self, x: f64) -> f64 {
        let ac = self.table().ac_cdf(x);
        let atoms: f64 = self
            .atoms
            .iter()
            .take_while(|&&(loc, _)| loc <= x)
            .map(|&(_, w)| w)
            .sum();
        ac + atoms
    }

    /// Leftmost x with CDF(x) >= p, located by bisection over the hull.
    pub fn quantile(&self, p: f64) -> Result<f64, MeasureError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MeasureError::InvalidParameter(format!(
                "quantile level must be in [0, 1] (got {p})"
            )));
        }
        let (mut lo, mut hi) = self.support_hull();
        if self.cdf(lo) >= p {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        Ok(hi)
    }

    /// ∫ xᵏ dμ by adaptive quadrature plus exact atom contributions.
    pub fn moment(&self, k: u32) -> Result<f64, MeasureError> {
        if k > MAX_MOMENT_ORDER {
            return Err(MeasureError::MomentOrder(k));
        }
        let radius = self
            .support_hull()
            .0
            .abs()
            .max(self.support_hull().1.abs())
            .max(1.0);
        // Panel tolerance scaled by the integrand magnitude so that small
        // orders come out near 1e-9 absolute and large orders stay relative.
        let tol = 1e-12 * radius.powi(k as i32).max(1.0);
        let eval = &self.eval;
        let ac: f64 = self
            .support
            .iter()
            .map(|&(a, b)| quad::integrate(|x| x.powi(k as i32) * eval(x), a, b, tol))
            .sum();
        let atoms: f64 = self.atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum();
        Ok(ac + atoms)
    }

    /// Pushforward under x ↦ tx. For `t = 0` every measure collapses to δ₀.
    pub fn dilate(&self, t: f64) -> Measure {
        if t == 0.0 {
            return Measure::Discrete(DiscreteMeasure::dirac(0.0));
        }
        if let DensityKind::Semicircle { center, variance } = self.kind {
            let law = SemicircleLaw { center: t * center, variance: t * t * variance };
            return Measure::Density(law.to_density());
        }
        let support = self.support.iter().map(|&(a, b)| (t * a, t * b)).collect();
        let atoms = self.atoms.iter().map(|&(x, w)| (t * x, w)).collect();
        let inner = Arc::clone(&self.eval);
        let scale = t.abs();
        let eval: Eval = Arc::new(move |x| inner(x / t) / scale);
        let kind = DensityKind::Dilated { t, base: Box::new(self.kind.clone()) };
        Measure::Density(
            AnalyticDensity::new(kind, support, atoms, eval)
                .expect("dilation preserves total mass"),
        )
    }

    /// Serializable description (kind, support, masses) for JSON sidecars.
    pub fn describe(&self) -> DensityDescription {
        DensityDescription {
            kind: self.kind.clone(),
            support: self.support.clone(),
            atoms: self.atoms.clone(),
            ac_mass: self.ac_mass,
            total_mass: self.ac_mass + self.atom_mass(),
        }
    }

    /// Write `x,density` rows over `grid`.
    pub fn write_density_csv<W: Write>(&self, grid: &[f64], out: &mut W) -> io::Result<()> {
        writeln!(out, "x,density")?;
        for &x in grid {
            writeln!(out, "{},{}", x, self.density(x))?;
        }
        Ok(())
    }

    /// Write `x,cdf` rows over `grid`.
    pub fn write_cdf_csv<W: Write>(&self, grid: &[f64], out: &mut W) -> io::Result<()> {
        writeln!(out, "x,cdf")?;
        for &x in grid {
            writeln!(out, "{},{}", x, self.cdf(x))?;
        }
        Ok(())
    }
}

/// JSON-friendly summary of an [`AnalyticDensity`].
#[derive(Clone, Debug, Serialize)]
pub struct DensityDescription {
    #[serde(flatten)]
    pub kind: DensityKind,
    pub support: Vec<(f64, f64)>,
    pub atoms: Vec<(f64, f64)>,
    pub ac_mass: f64,
    pub total_mass: f64,
}

// ---------------------------------------------------------------------------
// Union type and free-function forms of the operations
// ---------------------------------------------------------------------------

/// Either representation of a probability measure on ℝ.
#[derive(Clone, Debug)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Density(AnalyticDensity),
}

impl Measure {
    pub fn moment(&self, k: u32) -> Result<f64, MeasureError> {
        match self {
            Measure::Discrete(m) => m.moment(k),
            Measure::Density(d) => d.moment(k),
        }
    }

    pub fn dilate(&self, t: f64) -> Measure {
        match self {
            Measure::Discrete(m) => Measure::Discrete(m.dilate(t)),
            Measure::Density(d) => d.dilate(t),
        }
    }
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<AnalyticDensity> for Measure {
    fn from(d: AnalyticDensity) -> Self {
        Measure::Density(d)
    }
}

/// ∫ xᵏ dμ for either measure representation.
pub fn moment(measure: &Measure, k: u32) -> Result<f64, MeasureError> {
    measure.moment(k)
}

/// Dilation D_t(μ); D₀(μ) = δ₀.
pub fn dilate(measure: &Measure, t: f64) -> Measure {
    measure.dilate(t)
}

/// One-sample Kolmogorov–Smirnov distance between an empirical spectral
/// measure and a reference law: sup over the empirical jump points of
/// |F_emp - F_theory|, both one-sided gaps included.
pub fn ks_distance(
    empirical: &SpectralMeasure,
    theory: &AnalyticDensity,
) -> Result<f64, MeasureError> {
    let xs = empirical.eigenvalues();
    if xs.is_empty() {
        return Err(MeasureError::EmptyEmpirical);
    }
    theory.precompute_cdf();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = theory.cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(d.clamp(0.0, 1.0))
}
