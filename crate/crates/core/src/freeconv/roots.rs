//! Small polynomial root finders used by the transform calculus: a complex
//! Cardano solve for cubics and a companion-matrix eigensolve for quartics,
//! both followed by Newton polishing.

use nalgebra::DMatrix;
use num_complex::Complex64;

const OMEGA: Complex64 = Complex64::new(-0.5, 0.866_025_403_784_438_6);
const OMEGA2: Complex64 = Complex64::new(-0.5, -0.866_025_403_784_438_6);

fn polish_cubic(c2: Complex64, c1: Complex64, c0: Complex64, mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let f = ((z + c2) * z + c1) * z + c0;
        let df = (z * 3.0 + c2 * 2.0) * z + c1;
        if df.norm() == 0.0 {
            break;
        }
        z -= f / df;
    }
    z
}

/// All three roots of the monic cubic z³ + c2 z² + c1 z + c0 by Cardano's
/// formula in complex arithmetic, Newton-polished. Output order is fixed by
/// the cube-root-of-unity index, so calls are deterministic.
pub(crate) fn cubic_roots(c2: Complex64, c1: Complex64, c0: Complex64) -> [Complex64; 3] {
    let third = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = c2 * c2 * c2 * (2.0 / 27.0) - c2 * c1 / 3.0 + c0;

    let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    // Pick the larger branch to avoid cancellation in -q/2 ± s.
    let w1 = -q / 2.0 + s;
    let w2 = -q / 2.0 - s;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };

    let roots = if w.norm() == 0.0 {
        if p.norm() == 0.0 {
            [-third; 3]
        } else {
            // q²/4 = -p³/27 exactly; fall back to the trigonometric form via
            // the other branch of u (u³ = w2 may still vanish, p does not).
            let u = (-q / 2.0).cbrt_principal();
            let v = -p / (u * 3.0);
            [u + v - third, OMEGA * u + OMEGA2 * v - third, OMEGA2 * u + OMEGA * v - third]
        }
    } else {
        let u = w.cbrt_principal();
        let v = -p / (u * 3.0);
        [u + v - third, OMEGA * u + OMEGA2 * v - third, OMEGA2 * u + OMEGA * v - third]
    };

    [
        polish_cubic(c2, c1, c0, roots[0]),
        polish_cubic(c2, c1, c0, roots[1]),
        polish_cubic(c2, c1, c0, roots[2]),
    ]
}

trait CbrtPrincipal {
    fn cbrt_principal(self) -> Self;
}

impl CbrtPrincipal for Complex64 {
    fn cbrt_principal(self) -> Self {
        self.powf(1.0 / 3.0)
    }
}

fn quartic_value_deriv(c: &[f64; 4], z: Complex64) -> (Complex64, Complex64) {
    // Monic quartic z⁴ + c[3] z³ + c[2] z² + c[1] z + c[0].
    let f = (((z + c[3]) * z + c[2]) * z + c[1]) * z + c[0];
    let df = ((z * 4.0 + c[3] * 3.0) * z + c[2] * 2.0) * z + c[1];
    (f, df)
}

/// All four roots of the monic quartic with real coefficients
/// z⁴ + c3 z³ + c2 z² + c1 z + c0, via the companion-matrix eigenvalues,
/// Newton-polished.
pub(crate) fn quartic_roots(c0: f64, c1: f64, c2: f64, c3: f64) -> Vec<Complex64> {
    let mut companion = DMatrix::<f64>::zeros(4, 4);
    companion[(1, 0)] = 1.0;
    companion[(2, 1)] = 1.0;
    companion[(3, 2)] = 1.0;
    companion[(0, 3)] = -c0;
    companion[(1, 3)] = -c1;
    companion[(2, 3)] = -c2;
    companion[(3, 3)] = -c3;
    let eigs = companion.complex_eigenvalues();
    let coeffs = [c0, c1, c2, c3];
    let mut roots: Vec<Complex64> = eigs
        .iter()
        .map(|&z| {
            let mut z = z;
            for _ in 0..4 {
                let (f, df) = quartic_value_deriv(&coeffs, z);
                if df.norm() == 0.0 {
                    break;
                }
                z -= f / df;
            }
            z
        })
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}
