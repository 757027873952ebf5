//! Dense symmetric/Hermitian kernels used by the solver and the extraction
//! paths: cyclic Jacobi eigendecomposition, Cholesky factorization, and the
//! standard real embedding of complex Hermitian matrices.
//!
//! Everything here is written for the small dense blocks this crate actually
//! produces (a few hundred rows at most), favoring robustness over peak speed.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Relative off-diagonal threshold at which Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as columns, so `a ≈ v · diag(vals) · vᵀ`.
pub fn jacobi_eigh(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "jacobi_eigh needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(d);
    if d <= 1 {
        return (m.diag().to_owned(), v);
    }

    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = JACOBI_TOL * norm.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if (2.0 * off).sqrt() <= stop {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[[p, q]];
                if apq.abs() <= stop / (d as f64) {
                    continue;
                }
                let tau = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..d {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = c * mip - s * miq;
                    m[[i, q]] = s * mip + c * miq;
                }
                for i in 0..d {
                    let mpi = m[[p, i]];
                    let mqi = m[[q, i]];
                    m[[p, i]] = c * mpi - s * mqi;
                    m[[q, i]] = s * mpi + c * mqi;
                }
                for i in 0..d {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vecs = Array2::<f64>::zeros((d, d));
    for (col, &src) in order.iter().enumerate() {
        for r in 0..d {
            vecs[[r, col]] = v[[r, src]];
        }
    }
    (vals, vecs)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "cholesky needs a square matrix");
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / ljj;
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`, in place.
pub fn solve_lower_inplace(l: &Array2<f64>, b: &mut [f64]) {
    let d = l.nrows();
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v -= l[[i, k]] * b[k];
        }
        b[i] = v / l[[i, i]];
    }
}

/// Solves `Lᵀ x = b` for lower-triangular `L`, in place.
pub fn solve_lower_t_inplace(l: &Array2<f64>, b: &mut [f64]) {
    let d = l.nrows();
    for i in (0..d).rev() {
        let mut v = b[i];
        for k in (i + 1)..d {
            v -= l[[k, i]] * b[k];
        }
        b[i] = v / l[[i, i]];
    }
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    solve_lower_inplace(l, &mut x);
    solve_lower_t_inplace(l, &mut x);
    x
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(l: &Array2<f64>) -> Array2<f64> {
    let d = l.nrows();
    let mut inv = Array2::<f64>::zeros((d, d));
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        solve_lower_inplace(l, &mut e);
        solve_lower_t_inplace(l, &mut e);
        for i in 0..d {
            inv[[i, j]] = e[i];
        }
    }
    // Symmetrize away round-off drift between the column solves.
    for i in 0..d {
        for j in (i + 1)..d {
            let m = 0.5 * (inv[[i, j]] + inv[[j, i]]);
            inv[[i, j]] = m;
            inv[[j, i]] = m;
        }
    }
    inv
}

/// Inverse of a lower-triangular matrix (column-wise forward substitution).
pub fn lower_inverse(l: &Array2<f64>) -> Array2<f64> {
    let d = l.nrows();
    let mut inv = Array2::<f64>::zeros((d, d));
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        solve_lower_inplace(l, &mut e);
        for i in j..d {
            inv[[i, j]] = e[i];
        }
    }
    inv
}

/// Standard real embedding of a complex Hermitian matrix:
/// `M = X + iY  ->  [[X, -Y], [Y, X]]` (dimension doubles, every eigenvalue
/// of `M` appears twice, and `M ⪰ 0` iff the embedding is PSD).
pub fn embed_hermitian(m: &Array2<Complex64>) -> Array2<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "embed_hermitian needs a square matrix");
    let mut e = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let x = m[[i, j]].re;
            let y = m[[i, j]].im;
            e[[i, j]] = x;
            e[[n + i, n + j]] = x;
            e[[i, n + j]] = -y;
            e[[n + i, j]] = y;
        }
    }
    e
}

/// Eigenvalues of a complex Hermitian matrix, descending. Computed on the
/// real embedding; the doubled spectrum is collapsed back by taking every
/// second entry.
pub fn hermitian_eigvals(m: &Array2<Complex64>) -> Array1<f64> {
    let n = m.nrows();
    if n == 0 {
        return Array1::zeros(0);
    }
    let (vals, _) = jacobi_eigh(&embed_hermitian(m));
    Array1::from_iter((0..n).map(|i| vals[2 * i]))
}

/// Largest eigenvalue and a matching unit eigenvector of a complex Hermitian
/// matrix. The embedding eigenvector `[x; y]` maps back to `x + iy`.
pub fn hermitian_leading_eigpair(m: &Array2<Complex64>) -> (f64, Array1<Complex64>) {
    let n = m.nrows();
    assert!(n > 0, "empty matrix");
    let (vals, vecs) = jacobi_eigh(&embed_hermitian(m));
    let lead = vals[0];
    let mut z = Array1::<Complex64>::zeros(n);
    for i in 0..n {
        z[i] = Complex64::new(vecs[[i, 0]], vecs[[n + i, 0]]);
    }
    let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        z.mapv_inplace(|v| v / norm);
    }
    (lead, z)
}

/// Enforces exact Hermitian symmetry, `(M + Mᴴ)/2`.
pub fn hermitize(m: &Array2<Complex64>) -> Array2<Complex64> {
    let n = m.nrows();
    let mut out = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]].conj());
        }
    }
    out
}
