//! Dense symmetric eigensolver used by the compression and analysis paths.
//!
//! Cyclic Jacobi was chosen over faster tridiagonalization methods because it
//! is simple, portable, and easy to verify against an independent solver; the
//! matrices here are small (hundreds of rows at most).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Relative off-diagonal tolerance that ends the sweep loop.
const SWEEP_TOL: f64 = 1e-12;
/// Jacobi converges quadratically; well-conditioned inputs finish in ~10 sweeps.
const MAX_SWEEPS: usize = 64;

pub fn frobenius_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix: values descending, vectors as
/// columns of the returned matrix, each column's largest-magnitude entry
/// made positive so repeated runs agree bit-for-bit.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::argument(format!(
            "symmetric_eigen needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::argument("symmetric_eigen needs a nonempty matrix"));
    }
    let norm = frobenius_norm(a);
    if !norm.is_finite() {
        return Err(Error::numeric("matrix contains non-finite entries"));
    }
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (a[[i, j]] - a[[j, i]]).abs())
        .fold(0.0f64, f64::max);
    if asym > 1e-8 * (1.0 + norm) {
        return Err(Error::argument(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }

    // Flat row-major copies; the rotation loops are the hot path.
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut v: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let tol = SWEEP_TOL * norm;
    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m, n) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                // Smaller-angle root keeps the rotation stable.
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m[i * n + p];
                    let aiq = m[i * n + q];
                    m[i * n + p] = c * aip - s * aiq;
                    m[p * n + i] = m[i * n + p];
                    m[i * n + q] = s * aip + c * aiq;
                    m[q * n + i] = m[i * n + q];
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&m, n) > tol {
        return Err(Error::numeric(format!(
            "Jacobi sweeps did not converge in {MAX_SWEEPS} iterations"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .expect("eigenvalues are finite")
    });

    let mut values = Array1::zeros(n);
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        values[col] = m[src * n + src];
        // Sign convention: largest-magnitude entry positive, first such
        // entry breaking ties.
        let mut imax = 0;
        let mut best = -1.0f64;
        for i in 0..n {
            let mag = v[i * n + src].abs();
            if mag > best {
                best = mag;
                imax = i;
            }
        }
        let flip = if v[imax * n + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[[i, col]] = flip * v[i * n + src];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        a
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let (vals, vecs) = symmetric_eigen(&Array2::eye(4)).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(vals[i], 1.0, epsilon = 1e-12);
        }
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(vecs[[i, j]].abs(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn known_two_by_two() {
        // Eigenvalues of [[2,1],[1,2]] are 3 and 1.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(vecs[[0, 0]], inv_sqrt2, epsilon = 1e-12);
        assert_abs_diff_eq!(vecs[[1, 0]], inv_sqrt2, epsilon = 1e-12);
    }

    #[test]
    fn satisfies_eigen_equation_and_orthonormality() {
        for seed in 0..5u64 {
            let a = random_symmetric(24, seed);
            let (vals, vecs) = symmetric_eigen(&a).unwrap();
            let av = a.dot(&vecs);
            for j in 0..24 {
                for i in 0..24 {
                    assert_abs_diff_eq!(av[[i, j]], vals[j] * vecs[[i, j]], epsilon = 1e-9);
                }
            }
            let vtv = vecs.t().dot(&vecs);
            for i in 0..24 {
                for j in 0..24 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(vtv[[i, j]], expect, epsilon = 1e-10);
                }
            }
            // Descending order.
            for j in 1..24 {
                assert!(vals[j - 1] >= vals[j] - 1e-12);
            }
        }
    }

    #[test]
    fn matches_independent_solver() {
        for seed in 10..15u64 {
            let a = random_symmetric(17, seed);
            let (vals, vecs) = symmetric_eigen(&a).unwrap();

            let na = nalgebra::DMatrix::from_fn(17, 17, |i, j| a[[i, j]]);
            let se = nalgebra::SymmetricEigen::new(na);
            let mut reference: Vec<(f64, Vec<f64>)> = (0..17)
                .map(|j| {
                    (
                        se.eigenvalues[j],
                        se.eigenvectors.column(j).iter().copied().collect(),
                    )
                })
                .collect();
            reference.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

            for j in 0..17 {
                assert_abs_diff_eq!(vals[j], reference[j].0, epsilon = 1e-9);
                // Vectors agree up to sign.
                let dot: f64 = (0..17).map(|i| vecs[[i, j]] * reference[j].1[i]).sum();
                assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        for seed in 20..25u64 {
            let a = random_symmetric(12, seed);
            let (_, vecs) = symmetric_eigen(&a).unwrap();
            for j in 0..12 {
                let col: Vec<f64> = (0..12).map(|i| vecs[[i, j]]).collect();
                let imax = col
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
                    .unwrap()
                    .0;
                assert!(col[imax] > 0.0, "column {j} violates sign convention");
            }
        }
    }

    #[test]
    fn rejects_non_symmetric() {
        let a = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(symmetric_eigen(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_non_square() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(matches!(symmetric_eigen(&a), Err(Error::Argument(_))));
    }
}
