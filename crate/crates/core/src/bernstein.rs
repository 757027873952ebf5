//! Concentration surrogate for the per-user outage SINR constraints.
//!
//! With channel error Δh ~ CN(0, σ_Δ²I) and z = Δh*/σ_Δ ~ CN(0, I), the
//! outage event SINR_k ≤ γ_k is the Gaussian quadratic-form event
//!   zᴴ A z + 2Re(zᴴ b) ≤ σ²,
//! where, writing W̄ = W_k/γ_k − Σ_{ℓ≠k} W_ℓ,
//!   A = σ_Δ² W̄,   b = σ_Δ W̄ h*,   σ² = σ_c² − hᵀ W̄ h*.
//! The lower-tail bound Pr(ξ ≤ Tr A − √(2ε)c − ελ⁻) ≤ e^{−ε}, with
//! c = √(‖A‖_F² + 2‖b‖²) and λ⁻ = max(λ_max(−A), 0), yields the sufficient
//! condition σ² ≤ U(ε) with U = Tr A − √(2ε)c − ελ⁻ for outage budget
//! p = e^{−ε}.

use crate::channel::{realized_sinr, sample_error, BeamformerSet, UserSpec};
use crate::linalg::hermitian_eigvals;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

/// Ingredients of the surrogate constraint for one user.
#[derive(Clone, Debug)]
pub struct BernsteinData {
    /// A = σ_Δ² W̄ (Hermitian).
    pub a: Array2<Complex64>,
    /// b = σ_Δ W̄ h*.
    pub b: Array1<Complex64>,
    /// σ² = σ_c² − hᵀ W̄ h*.
    pub sigma_sq: f64,
    /// ε = −ln p.
    pub epsilon: f64,
    /// λ⁻ = max(λ_max(−A), 0).
    pub lambda_minus: f64,
    /// c = √(‖A‖_F² + 2‖b‖²).
    pub c_norm: f64,
}

/// W̄ = W_k/γ − Σ_{ℓ≠k} W_ℓ.
pub fn build_wbar(w_set: &[Array2<Complex64>], k: usize, gamma: f64) -> Result<Array2<Complex64>> {
    if w_set.is_empty() {
        return Err(Error::Config("need at least one beamforming block".into()));
    }
    if k >= w_set.len() {
        return Err(Error::Dimension(format!(
            "user index {k} out of range for {} users",
            w_set.len()
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("SINR target must be positive, got {gamma}")));
    }
    let n = w_set[0].nrows();
    if w_set.iter().any(|w| w.nrows() != n || w.ncols() != n) {
        return Err(Error::Dimension("beamforming blocks must be square and same size".into()));
    }
    let mut wbar = w_set[k].mapv(|v| v / gamma);
    for (l, w) in w_set.iter().enumerate() {
        if l != k {
            wbar -= w;
        }
    }
    Ok(wbar)
}

/// Assembles the surrogate data for user k at nominal channel h.
pub fn build_bernstein(
    w_set: &[Array2<Complex64>],
    k: usize,
    user: &UserSpec,
    h: &Array1<Complex64>,
    noise_var: f64,
) -> Result<BernsteinData> {
    user.validate()?;
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!("noise variance must be positive, got {noise_var}")));
    }
    let wbar = build_wbar(w_set, k, user.gamma)?;
    let n = wbar.nrows();
    if h.len() != n {
        return Err(Error::Dimension(format!(
            "channel has {} entries, blocks have {n} rows",
            h.len()
        )));
    }
    let sd = user.sigma_delta;
    let a = wbar.mapv(|v| v * (sd * sd));
    let mut b = Array1::<Complex64>::zeros(n);
    for p in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..n {
            acc += wbar[[p, q]] * h[q].conj();
        }
        b[p] = sd * acc;
    }
    // hᵀ W̄ h* = Σ_pq h_p W̄_pq h_q*.
    let mut quad = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            quad += h[p] * wbar[[p, q]] * h[q].conj();
        }
    }
    let sigma_sq = noise_var - quad.re;
    let lambda_minus = if sd == 0.0 {
        0.0
    } else {
        hermitian_eigvals(&a.mapv(|v| -v))[0].max(0.0)
    };
    let fro_sq: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let b_sq: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    Ok(BernsteinData {
        a,
        b,
        sigma_sq,
        epsilon: user.epsilon(),
        lambda_minus,
        c_norm: (fro_sq + 2.0 * b_sq).sqrt(),
    })
}

/// U(ε) = Tr A − √(2ε)c − ελ⁻, the deterministic lower bound the surrogate
/// compares σ² against.
pub fn u_bound(d: &BernsteinData) -> f64 {
    let tr: f64 = (0..d.a.nrows()).map(|i| d.a[[i, i]].re).sum();
    tr - (2.0 * d.epsilon).sqrt() * d.c_norm - d.epsilon * d.lambda_minus
}

/// Whether the surrogate constraint σ² ≤ U holds (ties count as satisfied).
pub fn surrogate_satisfied(d: &BernsteinData) -> bool {
    d.sigma_sq <= u_bound(d)
}

/// Empirical outage rate of user k over fresh error draws; ties count as
/// outage, matching the event SINR ≤ γ.
pub fn monte_carlo_outage<R: Rng + ?Sized>(
    beamformers: &BeamformerSet,
    k: usize,
    user: &UserSpec,
    h: &Array1<Complex64>,
    noise_var: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    user.validate()?;
    if trials == 0 {
        return Err(Error::Config("need at least one outage trial".into()));
    }
    let n = h.len();
    let mut outages = 0usize;
    for _ in 0..trials {
        let err = sample_error(rng, n, user.sigma_delta);
        let h_tilde = h + &err;
        let sinr = realized_sinr(&h_tilde, k, beamformers, noise_var)?;
        if sinr <= user.gamma {
            outages += 1;
        }
    }
    Ok(outages as f64 / trials as f64)
}
