//! Adaptive Gauss–Kronrod integration and the Gauss–Chebyshev rule for the
//! standard semicircle weight.

use serde::{Deserialize, Serialize};

use super::MeasureError;

/// 15-point Kronrod abscissae on [-1, 1] (positive half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_82,
];

/// 7-point Gauss weights for the embedded rule (odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_6,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15(7) panel: returns (estimate, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;

    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }

    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Maximum bisection depth; panels at the cap are accepted as-is. A width
/// ratio of 2^-48 puts the cap far below any tolerance used in this crate.
const MAX_DEPTH: u32 = 48;

fn integrate_rec<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return value;
    }
    let mid = 0.5 * (a + b);
    // Fixed left-then-right order keeps the summation bit-stable.
    integrate_rec(f, a, mid, tol, depth + 1) + integrate_rec(f, mid, b, tol, depth + 1)
}

/// Adaptive panel integration of `f` over `[a, b]`.
///
/// Panels are bisected until the local Gauss–Kronrod error estimate drops
/// below `panel_tol` (absolute). Square-root edge singularities, which all
/// densities in this crate exhibit, are handled by the subdivision alone.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    integrate_rec(&mut f, a, b, panel_tol, 0)
}

/// Target measure a quadrature rule discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadTarget {
    /// γ_{0,1}, the standard semicircle on [-2, 2].
    StandardSemicircle,
}

/// Nodes and nonnegative weights approximating ∫ f dμ by Σ wⱼ f(tⱼ).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    target: QuadTarget,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> QuadTarget {
        self.target
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node/weight pairs in node order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Σ wⱼ f(tⱼ).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.pairs().map(|(t, w)| w * f(t)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Chebyshev (second kind) rule for the standard semicircle γ_{0,1}:
/// nodes tⱼ = 2 cos(jπ/(N+1)), weights 2 sin²(jπ/(N+1))/(N+1), j = 1..N.
/// Integrates polynomials of degree ≤ 2N-1 exactly against γ_{0,1}.
pub fn gauss_chebyshev_rule(order: usize) -> Result<QuadratureRule, MeasureError> {
    if order == 0 {
        return Err(MeasureError::InvalidParameter(
            "gauss-chebyshev rule order must be >= 1".into(),
        ));
    }
    let n1 = (order + 1) as f64;
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for j in 1..=order {
        let theta = j as f64 * std::f64::consts::PI / n1;
        nodes.push(2.0 * theta.cos());
        weights.push(2.0 / n1 * theta.sin().powi(2));
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        target: QuadTarget::StandardSemicircle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gk_panel_is_exact_on_low_degree_polynomials() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_handles_sqrt_edge_singularity() {
        // ∫_0^1 sqrt(x) dx = 2/3
        let v = integrate(|x| x.max(0.0).sqrt(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn chebyshev_rule_rejects_order_zero() {
        assert!(gauss_chebyshev_rule(0).is_err());
    }

    #[test]
    fn chebyshev_weights_sum_to_one() {
        for order in [1_usize, 2, 7, 64, 129] {
            let rule = gauss_chebyshev_rule(order).unwrap();
            assert_abs_diff_eq!(rule.total_weight(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn chebyshev_rule_matches_semicircle_moments() {
        // Even semicircle moments are the Catalan numbers 1, 1, 2, 5, 14, 42...
        let rule = gauss_chebyshev_rule(10).unwrap();
        assert_abs_diff_eq!(rule.integrate(|t| t), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.integrate(|t| t * t), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.integrate(|t| t.powi(4)), 2.0, epsilon = 1e-12);
        // Exactness degree is 2N-1 = 19; m_18 = C_9 = 4862.
        let m18 = rule.integrate(|t| t.powi(18));
        assert!((m18 - 4862.0).abs() / 4862.0 <= 1e-10);
    }
}
