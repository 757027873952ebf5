//! Uniform linear array geometry: steering vectors, Bartlett beampattern
//! power, angular regions, and lobe matrices integrated with Gauss–Legendre
//! panels.
//!
//! Angles are radians in [-π/2, π/2] measured from broadside; element spacing
//! is in carrier wavelengths. The beampattern convention throughout the crate
//! is `P(θ) = Σ_k aᵀ(θ) W_k a*(θ)`.

use crate::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Default Gauss–Legendre points per angular interval.
pub const DEFAULT_QUAD_POINTS: usize = 256;
/// Smallest accepted panel size; fewer points would visibly bias lobe traces.
pub const MIN_QUAD_POINTS: usize = 16;

/// Uniform linear array description.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UlaConfig {
    pub n_antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl UlaConfig {
    pub fn new(n_antennas: usize, spacing: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::Config("array needs at least one antenna".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Config(format!("element spacing must be positive, got {spacing}")));
        }
        Ok(Self { n_antennas, spacing })
    }

    /// Half-wavelength array, the common default.
    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, 0.5)
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > FRAC_PI_2 + 1e-12 {
        return Err(Error::Config(format!(
            "angle {theta} rad outside [-π/2, π/2]"
        )));
    }
    Ok(())
}

/// Steering vector `a(θ)` with entries `exp(i·2π·d·n·sin θ)`, n = 0..N-1.
/// Always has squared norm N.
pub fn steering_vector(ula: &UlaConfig, theta: f64) -> Result<Array1<Complex64>> {
    check_angle(theta)?;
    let phase = 2.0 * PI * ula.spacing * theta.sin();
    Ok(Array1::from_iter(
        (0..ula.n_antennas).map(|n| Complex64::from_polar(1.0, phase * n as f64)),
    ))
}

/// Quadratic form `aᵀ M a*` for Hermitian `M`; the result is real up to
/// round-off and returned as such.
pub(crate) fn transpose_quadratic_form(a: &Array1<Complex64>, m: &Array2<Complex64>) -> f64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            acc += a[p] * m[[p, q]] * a[q].conj();
        }
    }
    acc.re
}

/// Bartlett transmit beampattern power `P(θ) = Σ_k aᵀ(θ) W_k a*(θ)`.
/// Nonnegative for PSD inputs up to a ~1e-12 numerical floor.
pub fn bartlett_power(ula: &UlaConfig, theta: f64, w_set: &[Array2<Complex64>]) -> Result<f64> {
    let a = steering_vector(ula, theta)?;
    let mut total = 0.0;
    for w in w_set {
        if w.nrows() != ula.n_antennas || w.ncols() != ula.n_antennas {
            return Err(Error::Dimension(format!(
                "covariance block is {}x{}, array has {} antennas",
                w.nrows(),
                w.ncols(),
                ula.n_antennas
            )));
        }
        total += transpose_quadratic_form(&a, w);
    }
    Ok(total)
}

/// Same pattern evaluated on a pre-summed transmit covariance.
pub fn bartlett_power_cov(ula: &UlaConfig, theta: f64, r: &Array2<Complex64>) -> Result<f64> {
    if r.nrows() != ula.n_antennas || r.ncols() != ula.n_antennas {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, array has {} antennas",
            r.nrows(),
            r.ncols(),
            ula.n_antennas
        )));
    }
    let a = steering_vector(ula, theta)?;
    Ok(transpose_quadratic_form(&a, r))
}

/// A union of closed angular intervals inside [-π/2, π/2].
#[derive(Clone, Debug, PartialEq)]
pub struct AngularRegion {
    intervals: Vec<(f64, f64)>,
}

impl AngularRegion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Config("angular region must not be empty".into()));
        }
        for &(lo, hi) in &intervals {
            check_angle(lo)?;
            check_angle(hi)?;
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "angular interval [{lo}, {hi}] is empty or reversed"
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    /// Mainlobe `[θ0 - width/2, θ0 + width/2]`, clipped to the visible domain.
    pub fn mainlobe(theta0: f64, width: f64) -> Result<Self> {
        check_angle(theta0)?;
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Config(format!("mainlobe width must be positive, got {width}")));
        }
        let lo = (theta0 - 0.5 * width).max(-FRAC_PI_2);
        let hi = (theta0 + 0.5 * width).min(FRAC_PI_2);
        Self::single(lo, hi)
    }

    /// Complement within [-π/2, π/2]. Errors when the complement is empty.
    pub fn complement(&self) -> Result<Self> {
        let mut ivs = self.intervals.clone();
        ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut gaps = Vec::new();
        let mut cursor = -FRAC_PI_2;
        for &(lo, hi) in &ivs {
            if lo > cursor + 1e-12 {
                gaps.push((cursor, lo));
            }
            cursor = cursor.max(hi);
        }
        if cursor < FRAC_PI_2 - 1e-12 {
            gaps.push((cursor, FRAC_PI_2));
        }
        if gaps.is_empty() {
            return Err(Error::Config("region covers the whole visible domain".into()));
        }
        Self::new(gaps)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Total angular width in radians.
    pub fn width(&self) -> f64 {
        self.intervals.iter().map(|&(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| theta >= lo && theta <= hi)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. `n` is validated to at least [`MIN_QUAD_POINTS`].
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < MIN_QUAD_POINTS {
        return Err(Error::Config(format!(
            "need at least {MIN_QUAD_POINTS} quadrature points, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok((nodes, weights))
}

/// Lobe matrix `A(Θ) = ∫_Θ a(θ) aᴴ(θ) dθ`, one Gauss–Legendre panel of
/// `quad_points` nodes per interval. Hermitian PSD by construction; symmetry
/// is enforced exactly before returning.
pub fn lobe_matrix(
    ula: &UlaConfig,
    region: &AngularRegion,
    quad_points: usize,
) -> Result<Array2<Complex64>> {
    let (nodes, weights) = gauss_legendre(quad_points)?;
    let n = ula.n_antennas;
    let mut acc = Array2::<Complex64>::zeros((n, n));
    for &(lo, hi) in region.intervals() {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let theta = mid + half * x;
            let a = steering_vector(ula, theta)?;
            let scale = w * half;
            for p in 0..n {
                for q in 0..n {
                    acc[[p, q]] += scale * a[p] * a[q].conj();
                }
            }
        }
    }
    Ok(crate::linalg::hermitize(&acc))
}
