//! Downlink channel model: nominal channel draws, circularly-symmetric
//! Gaussian error vectors, realized SINR, and achievable rate.
//!
//! `CN(0, σ²)` here means total complex variance σ² per entry, i.e. real and
//! imaginary parts are independent `N(0, σ²/2)`.

use crate::array::transpose_quadratic_form;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Per-user requirement: SINR target (linear), outage budget, error spread.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct UserSpec {
    /// SINR target γ on the linear scale.
    pub gamma: f64,
    /// Outage probability budget p ∈ (0, 1).
    pub outage_p: f64,
    /// Channel error standard deviation σ_Δ per complex entry.
    pub sigma_delta: f64,
}

impl UserSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("SINR target must be positive, got {}", self.gamma)));
        }
        if !(self.outage_p > 0.0 && self.outage_p < 1.0) {
            return Err(Error::Config(format!(
                "outage probability must lie in (0, 1), got {}",
                self.outage_p
            )));
        }
        if self.sigma_delta < 0.0 || !self.sigma_delta.is_finite() {
            return Err(Error::Config(format!(
                "error standard deviation must be nonnegative, got {}",
                self.sigma_delta
            )));
        }
        Ok(())
    }

    /// ε = −ln p, the exponent the concentration surrogate works with.
    pub fn epsilon(&self) -> f64 {
        -self.outage_p.ln()
    }
}

/// Nominal channels for all users, one length-N vector per user.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub nominal: Vec<Array1<Complex64>>,
}

impl ChannelSet {
    pub fn new(nominal: Vec<Array1<Complex64>>) -> Result<Self> {
        if nominal.is_empty() {
            return Err(Error::Config("need at least one user channel".into()));
        }
        let n = nominal[0].len();
        if n == 0 || nominal.iter().any(|h| h.len() != n) {
            return Err(Error::Dimension("all user channels must share one antenna count".into()));
        }
        Ok(Self { nominal })
    }

    pub fn n_users(&self) -> usize {
        self.nominal.len()
    }

    pub fn n_antennas(&self) -> usize {
        self.nominal[0].len()
    }
}

/// Draws a CN(0, σ²I) vector: each entry σ/√2·(g₁ + i·g₂) with gᵢ ~ N(0,1).
pub fn complex_gaussian_vector<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    sigma: f64,
) -> Array1<Complex64> {
    let s = sigma / 2.0_f64.sqrt();
    Array1::from_iter((0..n).map(|_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }))
}

/// Samples K nominal user channels h_k ~ CN(0, I_N).
pub fn sample_nominal<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Result<ChannelSet> {
    if k == 0 || n == 0 {
        return Err(Error::Config("need at least one user and one antenna".into()));
    }
    ChannelSet::new((0..k).map(|_| complex_gaussian_vector(rng, n, 1.0)).collect())
}

/// Samples one channel error draw Δh ~ CN(0, σ_Δ² I_N).
pub fn sample_error<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma_delta: f64) -> Array1<Complex64> {
    complex_gaussian_vector(rng, n, sigma_delta)
}

/// Beamformers either as vectors w_k or covariance blocks W_k = w_k w_kᴴ.
/// The vector form keeps Monte-Carlo SINR evaluation at O(N) per user.
#[derive(Clone, Debug)]
pub enum BeamformerSet {
    Vectors(Vec<Array1<Complex64>>),
    Matrices(Vec<Array2<Complex64>>),
}

impl BeamformerSet {
    pub fn n_users(&self) -> usize {
        match self {
            Self::Vectors(v) => v.len(),
            Self::Matrices(m) => m.len(),
        }
    }

    pub fn n_antennas(&self) -> usize {
        match self {
            Self::Vectors(v) => v.first().map_or(0, |w| w.len()),
            Self::Matrices(m) => m.first().map_or(0, |w| w.nrows()),
        }
    }

    /// `hᵀ W_k h*`, i.e. `|hᵀ w_k|²` in the vector form.
    pub fn signal_power(&self, k: usize, h: &Array1<Complex64>) -> f64 {
        match self {
            Self::Vectors(v) => {
                let dot: Complex64 = h.iter().zip(v[k].iter()).map(|(a, b)| a * b).sum();
                dot.norm_sqr()
            }
            Self::Matrices(m) => transpose_quadratic_form(h, &m[k]),
        }
    }

    /// Sum of the per-user covariance blocks.
    pub fn covariance_sum(&self) -> Array2<Complex64> {
        let n = self.n_antennas();
        let mut r = Array2::<Complex64>::zeros((n, n));
        match self {
            Self::Vectors(v) => {
                for w in v {
                    for p in 0..n {
                        for q in 0..n {
                            r[[p, q]] += w[p] * w[q].conj();
                        }
                    }
                }
            }
            Self::Matrices(m) => {
                for w in m {
                    r += w;
                }
            }
        }
        r
    }
}

/// Realized SINR of user k at channel draw h̃:
/// `h̃ᵀ W_k h̃* / (Σ_{ℓ≠k} h̃ᵀ W_ℓ h̃* + σ_c²)`.
pub fn realized_sinr(
    h_tilde: &Array1<Complex64>,
    k: usize,
    beamformers: &BeamformerSet,
    noise_var: f64,
) -> Result<f64> {
    let kk = beamformers.n_users();
    if k >= kk {
        return Err(Error::Dimension(format!("user index {k} out of range for {kk} users")));
    }
    if h_tilde.len() != beamformers.n_antennas() {
        return Err(Error::Dimension(format!(
            "channel has {} entries, beamformers have {} antennas",
            h_tilde.len(),
            beamformers.n_antennas()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!("noise variance must be positive, got {noise_var}")));
    }
    let signal = beamformers.signal_power(k, h_tilde);
    let mut interference = 0.0;
    for l in 0..kk {
        if l != k {
            interference += beamformers.signal_power(l, h_tilde);
        }
    }
    Ok(signal / (interference + noise_var))
}

/// Shannon rate `log2(1 + sinr)` in bps/Hz.
pub fn achievable_rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}
