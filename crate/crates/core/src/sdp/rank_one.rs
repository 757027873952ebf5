//! Rank-one beamformer recovery from the matrix-valued design solution.

use crate::linalg::{hermitian_eigvals, hermitian_leading_eigpair};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// A recovered per-user beamformer together with its rank defect.
#[derive(Clone, Debug)]
pub struct ExtractedBeam {
    /// w = √λ₁ u₁, phase-normalized.
    pub w: Array1<Complex64>,
    /// λ₂ / λ₁ with eigenvalues sorted descending (0 for the zero matrix).
    pub defect: f64,
    /// Set when the matrix carries (numerically) no power at all.
    pub zero_power: bool,
}

impl ExtractedBeam {
    pub fn power(&self) -> f64 {
        self.w.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Pulls the dominant rank-one component out of a Hermitian PSD block.
///
/// The returned vector is scaled so that w wᴴ reproduces the leading
/// eigenpair, and rotated so its first non-negligible entry is real and
/// nonnegative. The defect is always reported; callers enforce their own
/// rank threshold against it.
pub fn extract_beamformer(w_mat: &Array2<Complex64>) -> ExtractedBeam {
    let n = w_mat.nrows();
    assert_eq!(n, w_mat.ncols(), "square matrix required");
    let evals = hermitian_eigvals(w_mat);
    let lambda1 = evals[0];
    let trace: f64 = (0..n).map(|i| w_mat[[i, i]].re.abs()).sum();
    if lambda1 <= 1e-12 * trace.max(1.0) {
        return ExtractedBeam {
            w: Array1::zeros(n),
            defect: 0.0,
            zero_power: true,
        };
    }
    let lambda2 = if evals.len() > 1 { evals[1].max(0.0) } else { 0.0 };
    let (lead, u) = hermitian_leading_eigpair(w_mat);
    let scale = lead.max(0.0).sqrt();
    let mut w: Array1<Complex64> = u.mapv(|v| v * scale);
    let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if let Some(first) = w.iter().find(|v| v.norm() > 1e-9 * norm) {
        let phase = first / first.norm();
        let rot = phase.conj();
        w.mapv_inplace(|v| v * rot);
    }
    let defect = lambda2 / lambda1;
    ExtractedBeam { w, defect, zero_power: false }
}

/// Extracts every user's beamformer from a set of matrix blocks.
pub fn extract_all(w_blocks: &[Array2<Complex64>]) -> Vec<ExtractedBeam> {
    w_blocks.iter().map(extract_beamformer).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn outer(v: &Array1<Complex64>) -> Array2<Complex64> {
        let n = v.len();
        Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj())
    }

    #[test]
    fn exact_rank_one_is_recovered_with_zero_defect() {
        let v = array![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, -1.1),
        ];
        let m = outer(&v);
        let beam = extract_beamformer(&m);
        assert!(!beam.zero_power);
        assert!(beam.defect < 1e-12, "defect {}", beam.defect);
        // w w^H must reproduce the matrix regardless of the phase choice.
        let back = outer(&beam.w);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[[i, j]].re, m[[i, j]].re, epsilon = 1e-10);
                assert_abs_diff_eq!(back[[i, j]].im, m[[i, j]].im, epsilon = 1e-10);
            }
        }
        // Phase convention: first sizable entry is real nonnegative.
        assert!(beam.w[0].im.abs() < 1e-12);
        assert!(beam.w[0].re > 0.0);
        assert_abs_diff_eq!(beam.power(), v.iter().map(|x| x.norm_sqr()).sum(), epsilon = 1e-10);
    }

    #[test]
    fn identity_has_unit_defect() {
        let m = Array2::<Complex64>::eye(2);
        let beam = extract_beamformer(&m);
        assert!(!beam.zero_power);
        assert_abs_diff_eq!(beam.defect, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(beam.power(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_matrix_flags_zero_power() {
        let m = Array2::<Complex64>::zeros((4, 4));
        let beam = extract_beamformer(&m);
        assert!(beam.zero_power);
        assert_eq!(beam.defect, 0.0);
        assert!(beam.w.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn leading_zero_entry_does_not_break_the_phase_rule() {
        let v = array![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(1.0, 0.0),
        ];
        let m = outer(&v);
        let beam = extract_beamformer(&m);
        // First entry is ~0; the convention applies to the second instead.
        assert!(beam.w[0].norm() < 1e-10);
        assert!(beam.w[1].im.abs() < 1e-10);
        assert!(beam.w[1].re > 0.0);
    }

    #[test]
    fn mixture_defect_matches_eigenvalue_ratio() {
        // 0.8 v1 v1^H + 0.2 v2 v2^H with orthonormal v1, v2.
        let v1 = array![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let v2 = array![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)];
        let m = outer(&v1.mapv(|x| x * 0.8_f64.sqrt()))
            + outer(&v2.mapv(|x| x * 0.2_f64.sqrt()));
        let beam = extract_beamformer(&m);
        assert_abs_diff_eq!(beam.defect, 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(beam.power(), 0.8, epsilon = 1e-10);
    }
}
