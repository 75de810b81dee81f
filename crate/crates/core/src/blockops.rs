//! Kronecker-product algebra for the block model: assembly of
//! `I_k ⊗ A + W ⊗ B`, the noncommutative word expansion φ behind the
//! trace-moment identity, and the fixed complete-graph coupling matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::ensembles::{EnsembleError, HermitianMatrix};
use crate::measures::DiscreteMeasure;

/// Longest monomial length enumerated by [`phi_expansion`]; 2^m words.
pub const MAX_WORD_LENGTH: u32 = 12;
/// Guards for the exact trace-moment check.
pub const MAX_TRACE_MOMENT: u32 = 10;
pub const MAX_TRACE_ORDER: usize = 256;

#[derive(Debug, Error)]
pub enum BlockOpsError {
    #[error("matrix orders do not match: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("word length {0} exceeds the enumeration guard {MAX_WORD_LENGTH}")]
    WordLength(u32),
    #[error("moment order {0} exceeds the exact-check guard {MAX_TRACE_MOMENT}")]
    MomentOrder(u32),
    #[error("assembled order {0} exceeds the exact-check guard {MAX_TRACE_ORDER}")]
    OrderGuard(usize),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Kronecker product A ⊗ B: the (i, j) block of the result is a_ij · B.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Normalized trace tr_n = (Σ diagonal)/n of a general complex matrix.
pub fn normalized_trace(m: &DMatrix<Complex64>) -> Complex64 {
    m.trace() / Complex64::new(m.nrows() as f64, 0.0)
}

/// Specification of one block matrix `I_k ⊗ A + W ⊗ B` with W of order k and
/// A, B of order n.
#[derive(Clone, Debug)]
pub struct BlockMatrixSpec {
    k: usize,
    n: usize,
    w: HermitianMatrix,
    a: HermitianMatrix,
    b: HermitianMatrix,
}

impl BlockMatrixSpec {
    pub fn new(
        w: HermitianMatrix,
        a: HermitianMatrix,
        b: HermitianMatrix,
    ) -> Result<Self, BlockOpsError> {
        if a.order() != b.order() {
            return Err(BlockOpsError::DimensionMismatch {
                expected: a.order(),
                got: b.order(),
            });
        }
        Ok(BlockMatrixSpec { k: w.order(), n: a.order(), w, a, b })
    }

    pub fn outer_order(&self) -> usize {
        self.k
    }

    pub fn block_order(&self) -> usize {
        self.n
    }

    pub fn assembled_order(&self) -> usize {
        self.k * self.n
    }

    pub fn coupling(&self) -> &HermitianMatrix {
        &self.w
    }

    pub fn diagonal_block(&self) -> &HermitianMatrix {
        &self.a
    }

    pub fn coupled_block(&self) -> &HermitianMatrix {
        &self.b
    }
}

/// Assemble `I_k ⊗ A + W ⊗ B`, of order nk. The sum of two exactly Hermitian
/// Kronecker products is exactly Hermitian, so no symmetrization is needed.
pub fn assemble(spec: &BlockMatrixSpec) -> Result<HermitianMatrix, BlockOpsError> {
    let eye = DMatrix::<Complex64>::identity(spec.k, spec.k);
    let m = kron(&eye, spec.a.as_matrix()) + kron(spec.w.as_matrix(), spec.b.as_matrix());
    debug_assert!({
        let adj = m.adjoint();
        m == adj
    });
    Ok(HermitianMatrix::from_dense(m)?)
}

/// All φ(A, B; m-j, j) for j = 0..=m in one pass over the 2^m binary words of
/// length m (bit 1 selects B). Words are accumulated in ascending bitmask
/// order so results are bit-stable.
fn phi_all(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    m: u32,
) -> Result<Vec<DMatrix<Complex64>>, BlockOpsError> {
    if m > MAX_WORD_LENGTH {
        return Err(BlockOpsError::WordLength(m));
    }
    if a.nrows() != b.nrows() {
        return Err(BlockOpsError::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let n = a.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut buckets = vec![DMatrix::<Complex64>::zeros(n, n); m as usize + 1];
    if m == 0 {
        buckets[0] = eye;
        return Ok(buckets);
    }
    for word in 0u64..(1u64 << m) {
        let mut prod = eye.clone();
        for pos in 0..m {
            let factor = if word >> pos & 1 == 1 { b } else { a };
            prod *= factor;
        }
        let ones = word.count_ones() as usize;
        buckets[ones] += prod;
    }
    Ok(buckets)
}

/// φ(A, B; a_count, b_count): the sum of all noncommutative monomials of
/// length a_count + b_count in which A appears a_count times and B appears
/// b_count times.
pub fn phi_expansion(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    a_count: u32,
    b_count: u32,
) -> Result<DMatrix<Complex64>, BlockOpsError> {
    let m = a_count + b_count;
    let mut buckets = phi_all(a, b, m)?;
    Ok(buckets.swap_remove(b_count as usize))
}

/// Both sides of the exact finite-dimensional trace identity
/// tr_{nk}(𝔹ᵐ) = Σⱼ tr_k(Wʲ) · tr_n(φ(A, B; m-j, j)), computed independently:
/// the left by powering the assembled matrix, the right by word enumeration.
pub fn trace_moment_decomposition(
    spec: &BlockMatrixSpec,
    m: u32,
) -> Result<(f64, f64), BlockOpsError> {
    if m > MAX_TRACE_MOMENT {
        return Err(BlockOpsError::MomentOrder(m));
    }
    if spec.assembled_order() > MAX_TRACE_ORDER {
        return Err(BlockOpsError::OrderGuard(spec.assembled_order()));
    }

    let assembled = assemble(spec)?;
    let nk = assembled.order();
    let mut power = DMatrix::<Complex64>::identity(nk, nk);
    for _ in 0..m {
        power *= assembled.as_matrix();
    }
    let lhs = normalized_trace(&power).re;

    let phis = phi_all(spec.a.as_matrix(), spec.b.as_matrix(), m)?;
    let mut w_power = DMatrix::<Complex64>::identity(spec.k, spec.k);
    let mut rhs = Complex64::new(0.0, 0.0);
    for (j, phi) in phis.iter().enumerate() {
        if j > 0 {
            w_power *= spec.w.as_matrix();
        }
        rhs += normalized_trace(&w_power) * normalized_trace(phi);
    }
    Ok((lhs, rhs.re))
}

/// The k × k coupling matrix of the complete-graph block pattern: zero
/// diagonal, ones elsewhere, together with its exact spectral measure
/// (k-1)/k · δ₋₁ + 1/k · δ_{k-1}.
pub fn complete_graph_w(k: usize) -> Result<(HermitianMatrix, DiscreteMeasure), BlockOpsError> {
    let w = HermitianMatrix::from_upper(k, |i, j| {
        Complex64::new(if i == j { 0.0 } else { 1.0 }, 0.0)
    })?;
    let kf = k as f64;
    let measure = if k == 1 {
        DiscreteMeasure::dirac(0.0)
    } else {
        DiscreteMeasure::new(vec![(-1.0, (kf - 1.0) / kf), (kf - 1.0, 1.0 / kf)])
            .expect("complete-graph weights sum to one")
    };
    Ok((w, measure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_wigner, EntryLaw, RngSeed};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hermitian(n: usize, stream: u64) -> HermitianMatrix {
        sample_wigner(n, EntryLaw::Gaussian, RngSeed::new(77, stream)).unwrap()
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let b = random_complex(3, &mut ChaCha8Rng::seed_from_u64(1));
        let k = kron(&eye, &b);
        assert_eq!(k.nrows(), 6);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k[(i, j)], b[(i, j)]);
                assert_eq!(k[(3 + i, 3 + j)], b[(i, j)]);
                assert_eq!(k[(i, 3 + j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn kron_trace_factorizes() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(4.0, 0.0),
        ]));
        let t = kron(&a, &b).trace();
        assert_abs_diff_eq!(t.re, 21.0, epsilon = 1e-12);
    }

    #[test]
    fn kron_mixed_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b, c, d) = (
            random_complex(2, &mut rng),
            random_complex(2, &mut rng),
            random_complex(2, &mut rng),
            random_complex(2, &mut rng),
        );
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        for i in 0..4 {
            for j in 0..4 {
                assert!((lhs[(i, j)] - rhs[(i, j)]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn assemble_with_zero_coupling_repeats_a() {
        let a = random_hermitian(3, 0);
        let b = random_hermitian(3, 1);
        let w = HermitianMatrix::zeros(2).unwrap();
        let spec = BlockMatrixSpec::new(w, a.clone(), b).unwrap();
        let m = assemble(&spec).unwrap();
        let ev = crate::spectra::hermitian_eigenvalues(&m).unwrap();
        let mut expect = crate::spectra::hermitian_eigenvalues(&a).unwrap();
        expect.extend(expect.clone());
        expect.sort_unstable_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&expect) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn assemble_with_identity_coupling_and_zero_a() {
        let b = random_hermitian(3, 2);
        let a = HermitianMatrix::zeros(3).unwrap();
        let w = HermitianMatrix::identity(2).unwrap();
        let spec = BlockMatrixSpec::new(w, a, b.clone()).unwrap();
        let m = assemble(&spec).unwrap();
        let ev = crate::spectra::hermitian_eigenvalues(&m).unwrap();
        let mut expect = crate::spectra::hermitian_eigenvalues(&b).unwrap();
        expect.extend(expect.clone());
        expect.sort_unstable_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&expect) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn assemble_scalar_case() {
        let a = HermitianMatrix::from_real_diagonal(&[2.0]).unwrap();
        let b = HermitianMatrix::from_real_diagonal(&[3.0]).unwrap();
        let w = HermitianMatrix::from_real_diagonal(&[5.0]).unwrap();
        let spec = BlockMatrixSpec::new(w, a, b).unwrap();
        let m = assemble(&spec).unwrap();
        assert_abs_diff_eq!(m.as_matrix()[(0, 0)].re, 17.0, epsilon = 1e-15);
    }

    #[test]
    fn assemble_is_linear_in_each_block() {
        let w = random_hermitian(2, 3);
        let a1 = random_hermitian(3, 4);
        let a2 = random_hermitian(3, 5);
        let b = random_hermitian(3, 6);
        let zero = HermitianMatrix::zeros(3).unwrap();
        let sum_a = HermitianMatrix::from_dense(a1.as_matrix() + a2.as_matrix()).unwrap();
        let m12 = assemble(&BlockMatrixSpec::new(w.clone(), sum_a, b.clone()).unwrap()).unwrap();
        let m1 = assemble(&BlockMatrixSpec::new(w.clone(), a1, b.clone()).unwrap()).unwrap();
        let m2 = assemble(&BlockMatrixSpec::new(w, a2, zero).unwrap()).unwrap();
        let diff = m12.as_matrix() - (m1.as_matrix() + m2.as_matrix());
        assert!(diff.iter().all(|z| z.norm() <= 1e-14));
    }

    #[test]
    fn phi_single_letter_words() {
        let a = random_complex(3, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_complex(3, &mut ChaCha8Rng::seed_from_u64(4));
        let ab_ba = phi_expansion(&a, &b, 1, 1).unwrap();
        let expect = &a * &b + &b * &a;
        assert!((&ab_ba - &expect).iter().all(|z| z.norm() <= 1e-13));
        let a2 = phi_expansion(&a, &b, 2, 0).unwrap();
        assert!((&a2 - &a * &a).iter().all(|z| z.norm() <= 1e-13));
    }

    #[test]
    fn phi_word_length_guard() {
        let a = random_complex(2, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(matches!(
            phi_expansion(&a, &a, 7, 6),
            Err(BlockOpsError::WordLength(13))
        ));
    }

    #[test]
    fn phi_binomial_expansion_oracle() {
        // Σ_j t^j φ(A, B; m-j, j) = (A + tB)^m for Hermitian A, B.
        let a = random_hermitian(3, 7);
        let b = random_hermitian(3, 8);
        let t = 0.7;
        let m = 4u32;
        let sum_mat = a.as_matrix() + b.as_matrix().map(|z| z * t);
        let mut direct = DMatrix::<Complex64>::identity(3, 3);
        for _ in 0..m {
            direct *= &sum_mat;
        }
        let mut via_phi = DMatrix::<Complex64>::zeros(3, 3);
        for j in 0..=m {
            let phi = phi_expansion(a.as_matrix(), b.as_matrix(), m - j, j).unwrap();
            via_phi += phi.map(|z| z * t.powi(j as i32));
        }
        assert!((&direct - &via_phi).iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn trace_moment_identity_trivial_orders() {
        let spec = BlockMatrixSpec::new(
            random_hermitian(2, 9),
            random_hermitian(3, 10),
            random_hermitian(3, 11),
        )
        .unwrap();
        let (l0, r0) = trace_moment_decomposition(&spec, 0).unwrap();
        assert_abs_diff_eq!(l0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r0, 1.0, epsilon = 1e-14);
        let (l1, r1) = trace_moment_decomposition(&spec, 1).unwrap();
        let expect = spec.diagonal_block().normalized_trace()
            + spec.coupling().normalized_trace() * spec.coupled_block().normalized_trace();
        assert_abs_diff_eq!(l1, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(r1, expect, epsilon = 1e-12);
    }

    #[test]
    fn trace_moment_identity_m5() {
        let spec = BlockMatrixSpec::new(
            random_hermitian(2, 12),
            random_hermitian(3, 13),
            random_hermitian(3, 14),
        )
        .unwrap();
        let (lhs, rhs) = trace_moment_decomposition(&spec, 5).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn finite_k_trace_identity_against_w_spectrum() {
        // tr_{nk}(𝔹ᵐ) = ∫ tr_n((A+tB)ᵐ) μ_W(dt) as an exact atom sum.
        let (w, mu_w) = complete_graph_w(3).unwrap();
        let a = random_hermitian(2, 15);
        let b = random_hermitian(2, 16);
        let spec = BlockMatrixSpec::new(w, a.clone(), b.clone()).unwrap();
        for m in 0..=6u32 {
            let (lhs, _) = trace_moment_decomposition(&spec, m).unwrap();
            let mut rhs = 0.0;
            for &(t, weight) in mu_w.atoms() {
                let sum_mat = a.as_matrix() + b.as_matrix().map(|z| z * t);
                let mut p = DMatrix::<Complex64>::identity(2, 2);
                for _ in 0..m {
                    p *= &sum_mat;
                }
                rhs += weight * normalized_trace(&p).re;
            }
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn complete_graph_small_cases() {
        let (w2, mu2) = complete_graph_w(2).unwrap();
        let ev = crate::spectra::hermitian_eigenvalues(&w2).unwrap();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
        assert_eq!(mu2.atoms(), &[(-1.0, 0.5), (1.0, 0.5)]);

        let (w1, mu1) = complete_graph_w(1).unwrap();
        assert_eq!(w1.as_matrix()[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(mu1.atoms(), &[(0.0, 1.0)]);
    }
}
