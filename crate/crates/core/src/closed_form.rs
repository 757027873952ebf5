//! Closed-form single-user beamformers.
//!
//! With one user the design collapses to a two-dimensional search inside
//! span{h*, a*(θ0)}: either the pure array response already meets the SINR
//! requirement (Bartlett branch), or the optimum mixes a channel-aligned
//! component with the orthogonalized array component (mixture branch). The
//! mixture weight solves a scalar equation whose root is bracketed in [0, 1].

use crate::array::{steering_vector, UlaConfig};
use crate::{Error, Result};
use ndarray::Array1;
use num_complex::Complex64;

/// Which branch of the closed form produced the beamformer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuBranch {
    /// w = a*(θ0)/√N: the radar-optimal vector already serves the user.
    Bartlett,
    /// Unit-power mix of the channel direction and its orthogonal complement.
    Mixture,
}

/// Closed-form single-user solution.
#[derive(Clone, Debug)]
pub struct SuSolution {
    /// Unit-power beamformer (zeros when infeasible).
    pub w: Array1<Complex64>,
    pub branch: SuBranch,
    /// Mixture weight ρ on the channel-aligned component (None on the
    /// Bartlett branch and when infeasible).
    pub rho: Option<f64>,
    /// Branch threshold compared against |hᵀa*(θ0)|².
    pub lambda_threshold: f64,
    pub feasible: bool,
}

impl SuSolution {
    /// |aᵀ(θ0) w|²: the array power this beamformer places on the look
    /// direction.
    pub fn beam_power(&self, ula: &UlaConfig, theta0: f64) -> Result<f64> {
        let a = steering_vector(ula, theta0)?;
        if a.len() != self.w.len() {
            return Err(Error::Dimension("beamformer length differs from array".into()));
        }
        let dot: Complex64 = a.iter().zip(self.w.iter()).map(|(x, y)| x * y).sum();
        Ok(dot.norm_sqr())
    }
}

/// Orthonormal pair built from two vectors: `parallel` is the normalized
/// primary, `perp` the normalized residual of the secondary.
#[derive(Clone, Debug)]
pub struct GramSchmidtPair {
    pub parallel: Array1<Complex64>,
    pub perp: Array1<Complex64>,
    /// Set when the secondary lies (numerically) in the span of the primary;
    /// `perp` is zero in that case.
    pub degenerate: bool,
}

/// Gram-Schmidt step returning both unit vectors. The residual counts as
/// degenerate below a 1e-12 relative threshold.
pub fn gram_schmidt_pair(
    primary: &Array1<Complex64>,
    secondary: &Array1<Complex64>,
) -> Result<GramSchmidtPair> {
    if primary.len() != secondary.len() {
        return Err(Error::Dimension("gram-schmidt needs equal lengths".into()));
    }
    let pnorm = primary.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if pnorm <= 0.0 {
        return Err(Error::Numerical("gram-schmidt primary vector is zero".into()));
    }
    let parallel = primary.mapv(|v| v / pnorm);
    let coef: Complex64 = parallel.iter().zip(secondary.iter()).map(|(p, s)| p.conj() * s).sum();
    let resid = secondary - &parallel.mapv(|v| v * coef);
    let snorm = secondary.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rnorm = resid.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if rnorm <= 1e-12 * snorm.max(1e-300) {
        return Ok(GramSchmidtPair {
            parallel,
            perp: Array1::zeros(secondary.len()),
            degenerate: true,
        });
    }
    Ok(GramSchmidtPair { parallel, perp: resid.mapv(|v| v / rnorm), degenerate: false })
}

/// z/|z|, defaulting to 1 for (numerically) zero input.
fn unit_phase(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 1e-30 {
        z / n
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn validate_inputs(
    ula: &UlaConfig,
    h: &Array1<Complex64>,
    gamma: f64,
    sigma_delta: f64,
    epsilon: f64,
    noise_var: f64,
) -> Result<()> {
    if h.len() != ula.n_antennas {
        return Err(Error::Dimension(format!(
            "channel has {} entries, array has {} antennas",
            h.len(),
            ula.n_antennas
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("SINR target must be positive, got {gamma}")));
    }
    if !(sigma_delta >= 0.0) {
        return Err(Error::Config(format!("error spread must be nonnegative, got {sigma_delta}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("outage exponent must be nonnegative, got {epsilon}")));
    }
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!("noise variance must be positive, got {noise_var}")));
    }
    Ok(())
}

/// Constraint margin along the mixture parametrization: x = √ρ maps to a
/// beamformer with |hᵀw|² = x²‖h‖², and the surrogate holds iff g(x) ≥ 0.
/// The doubled gain term under the square root matches the matrix surrogate
/// exactly (fold a unit-power rank-one solution into it to verify).
fn g_margin(x: f64, hnorm_sq: f64, gamma: f64, sigma_delta: f64, epsilon: f64, noise_var: f64) -> f64 {
    let y = x * x * hnorm_sq;
    y - (gamma * noise_var - sigma_delta * sigma_delta)
        - sigma_delta
            * (2.0 * epsilon).sqrt()
            * (sigma_delta * sigma_delta + 2.0 * y).sqrt()
}

/// Root of g in [0, 1] by bisection; requires g(0) < 0 ≤ g(1).
fn mixture_root(hnorm_sq: f64, gamma: f64, sigma_delta: f64, epsilon: f64, noise_var: f64) -> f64 {
    let g = |x: f64| g_margin(x, hnorm_sq, gamma, sigma_delta, epsilon, noise_var);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    debug_assert!(g(lo) < 0.0);
    debug_assert!(g(hi) >= 0.0);
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn infeasible(n: usize, lambda_threshold: f64) -> SuSolution {
    SuSolution {
        w: Array1::zeros(n),
        branch: SuBranch::Mixture,
        rho: None,
        lambda_threshold,
        feasible: false,
    }
}

/// Builds the mixture beamformer √ρ e^{jφ∥} h_∥ + √(1−ρ) e^{jφ⊥} h_⊥ with the
/// phases chosen so both components add coherently toward the look direction.
fn mixture_vector(
    h: &Array1<Complex64>,
    a_conj: &Array1<Complex64>,
    rho: f64,
) -> Result<Array1<Complex64>> {
    let h_conj = h.mapv(|v| v.conj());
    let pair = gram_schmidt_pair(&h_conj, a_conj)?;
    let perp = if pair.degenerate {
        // The array direction carries no component off the channel; any unit
        // vector orthogonal to h_∥ completes the pair (it cannot contribute
        // to the objective, but keeps the beamformer at full power).
        let n = h.len();
        let mut fallback = None;
        for i in 0..n {
            let mut e = Array1::<Complex64>::zeros(n);
            e[i] = Complex64::new(1.0, 0.0);
            let cand = gram_schmidt_pair(&h_conj, &e)?;
            if !cand.degenerate {
                fallback = Some(cand.perp);
                break;
            }
        }
        fallback.ok_or_else(|| {
            Error::Numerical("no direction orthogonal to the channel exists".into())
        })?
    } else {
        pair.perp
    };
    let phase_par = unit_phase(
        pair.parallel.iter().zip(a_conj.iter()).map(|(p, a)| p.conj() * a).sum(),
    );
    let phase_perp = unit_phase(perp.iter().zip(a_conj.iter()).map(|(p, a)| p.conj() * a).sum());
    let c1 = phase_par * rho.sqrt();
    let c2 = phase_perp * (1.0 - rho).sqrt();
    Ok(&pair.parallel.mapv(|v| v * c1) + &perp.mapv(|v| v * c2))
}

/// Single-user closed form with an outage exponent ε = −ln p.
///
/// The Bartlett branch triggers when the threshold Λ falls below the
/// channel/array correlation |hᵀa*(θ0)|²; otherwise the mixture weight is
/// the unique root of the scalar margin in [0, 1], when one exists.
pub fn su_solve(
    ula: &UlaConfig,
    theta0: f64,
    h: &Array1<Complex64>,
    gamma: f64,
    sigma_delta: f64,
    epsilon: f64,
    noise_var: f64,
) -> Result<SuSolution> {
    validate_inputs(ula, h, gamma, sigma_delta, epsilon, noise_var)?;
    let n = ula.n_antennas;
    let a = steering_vector(ula, theta0)?;
    let a_conj = a.mapv(|v| v.conj());
    let corr: Complex64 = h.iter().zip(a.iter()).map(|(hi, ai)| hi * ai.conj()).sum();
    let corr_sq = corr.norm_sqr();
    let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();

    let lambda = n as f64
        * (gamma * noise_var - sigma_delta * sigma_delta
            + sigma_delta
                * (2.0 * epsilon).sqrt()
                * (sigma_delta * sigma_delta + 2.0 * corr_sq / n as f64).sqrt());

    if lambda <= corr_sq {
        let scale = 1.0 / (n as f64).sqrt();
        return Ok(SuSolution {
            w: a_conj.mapv(|v| v * scale),
            branch: SuBranch::Bartlett,
            rho: None,
            lambda_threshold: lambda,
            feasible: true,
        });
    }

    if g_margin(1.0, hnorm_sq, gamma, sigma_delta, epsilon, noise_var) < 0.0 {
        return Ok(infeasible(n, lambda));
    }
    // The mixture branch implies the margin is negative at ρ = 0: a zero
    // channel gain cannot meet a target the Bartlett vector already missed.
    if g_margin(0.0, hnorm_sq, gamma, sigma_delta, epsilon, noise_var) >= 0.0 {
        return Err(Error::Numerical(
            "margin bracket violated; the branch threshold disagrees with the margin".into(),
        ));
    }
    let x = mixture_root(hnorm_sq, gamma, sigma_delta, epsilon, noise_var);
    let rho = x * x;
    Ok(SuSolution {
        w: mixture_vector(h, &a_conj, rho)?,
        branch: SuBranch::Mixture,
        rho: Some(rho),
        lambda_threshold: lambda,
        feasible: true,
    })
}

/// Single-user closed form in the vanishing-outage-exponent limit, where the
/// mixture weight has the explicit form ρ = (γσ_c² − σ_Δ²)/‖h‖².
pub fn su_solve_eps_zero(
    ula: &UlaConfig,
    theta0: f64,
    h: &Array1<Complex64>,
    gamma: f64,
    sigma_delta: f64,
    noise_var: f64,
) -> Result<SuSolution> {
    validate_inputs(ula, h, gamma, sigma_delta, 0.0, noise_var)?;
    let n = ula.n_antennas;
    let a = steering_vector(ula, theta0)?;
    let a_conj = a.mapv(|v| v.conj());
    let corr: Complex64 = h.iter().zip(a.iter()).map(|(hi, ai)| hi * ai.conj()).sum();
    let corr_sq = corr.norm_sqr();
    let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    let need = gamma * noise_var - sigma_delta * sigma_delta;
    let lambda = n as f64 * need;

    if lambda <= corr_sq {
        let scale = 1.0 / (n as f64).sqrt();
        return Ok(SuSolution {
            w: a_conj.mapv(|v| v * scale),
            branch: SuBranch::Bartlett,
            rho: None,
            lambda_threshold: lambda,
            feasible: true,
        });
    }
    let rho = need / hnorm_sq;
    if !(rho <= 1.0) {
        return Ok(infeasible(n, lambda));
    }
    // Mixture branch with ρ ≤ 0 is impossible: Λ > |hᵀa*|² ≥ 0 forces a
    // strictly positive requirement.
    if rho <= 0.0 {
        return Err(Error::Numerical(
            "nonpositive mixture weight on the mixture branch".into(),
        ));
    }
    Ok(SuSolution {
        w: mixture_vector(h, &a_conj, rho)?,
        branch: SuBranch::Mixture,
        rho: Some(rho),
        lambda_threshold: lambda,
        feasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{build_bernstein, u_bound};
    use crate::channel::{sample_nominal, UserSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ula(n: usize) -> UlaConfig {
        UlaConfig::half_wavelength(n).unwrap()
    }

    fn random_channel(seed: u64, n: usize) -> Array1<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_nominal(&mut rng, 1, n).unwrap().nominal.remove(0)
    }

    fn outer(v: &Array1<Complex64>) -> Array2<Complex64> {
        let n = v.len();
        Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj())
    }

    /// Algebraic root of the margin: substituting u = σ_Δ² + 2x²‖h‖² turns
    /// g(x) = 0 into u − 2c√u + (σ_Δ² − 2γσ_c²) = 0, a quadratic in √u.
    fn algebraic_root(hnorm_sq: f64, gamma: f64, sd: f64, eps: f64, nv: f64) -> f64 {
        let c = sd * (2.0 * eps).sqrt();
        let sqrt_u = c + (c * c - sd * sd + 2.0 * gamma * nv).sqrt();
        let u = sqrt_u * sqrt_u;
        ((u - sd * sd) / (2.0 * hnorm_sq)).sqrt()
    }

    #[test]
    fn bisection_matches_the_algebraic_root() {
        let cases = [
            (3.0, 1.2, 0.1, 2.302585092994046, 1.0),
            (5.0, 2.0, 0.3, 0.1, 1.0),
            (2.5, 1.0, 0.05, 4.605170185988091, 2.0),
            (8.0, 4.0, 0.2, 1.0, 1.0),
        ];
        for &(hn, gamma, sd, eps, nv) in &cases {
            let want = algebraic_root(hn, gamma, sd, eps, nv);
            assert!(want > 0.0 && want < 1.0, "case not interior: {want}");
            assert!(g_margin(0.0, hn, gamma, sd, eps, nv) < 0.0);
            assert!(g_margin(1.0, hn, gamma, sd, eps, nv) >= 0.0);
            let got = mixture_root(hn, gamma, sd, eps, nv);
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn margin_is_zero_at_the_returned_weight() {
        for seed in 0..20u64 {
            let n = 4 + (seed % 4) as usize;
            let h = random_channel(seed, n);
            let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            // Target chosen to land between the branch threshold and the
            // feasibility edge most of the time.
            let gamma = 0.8 * hnorm_sq;
            let sol = su_solve(&ula(n), 0.6, &h, gamma, 0.1, 2.302585092994046, 1.0).unwrap();
            if let (SuBranch::Mixture, Some(rho), true) = (sol.branch, sol.rho, sol.feasible) {
                let g = g_margin(rho.sqrt(), hnorm_sq, gamma, 0.1, 2.302585092994046, 1.0);
                assert!(g.abs() < 1e-8, "seed {seed}: residual margin {g}");
            }
        }
    }

    #[test]
    fn surrogate_constraint_is_tight_at_the_mixture_solution() {
        // Cross-module check: fold the closed-form vector back into the
        // matrix surrogate and measure its slack there.
        let n = 5;
        let h = random_channel(77, n);
        let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let gamma = 0.7 * hnorm_sq;
        let eps = 2.302585092994046;
        let sol = su_solve(&ula(n), 0.5, &h, gamma, 0.1, eps, 1.0).unwrap();
        assert_eq!(sol.branch, SuBranch::Mixture);
        assert!(sol.feasible);
        let wmat = outer(&sol.w);
        let user = UserSpec { gamma, outage_p: (-eps).exp(), sigma_delta: 0.1 };
        let data = build_bernstein(std::slice::from_ref(&wmat), 0, &user, &h, 1.0).unwrap();
        let slack = u_bound(&data) - data.sigma_sq;
        assert!(slack.abs() < 1e-8, "surrogate slack {slack}");
        // Unit power.
        let p: f64 = sol.w.iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vanishing_exponent_reduces_to_the_explicit_weight() {
        for seed in 0..15u64 {
            let n = 3 + (seed % 5) as usize;
            let h = random_channel(seed.wrapping_add(1000), n);
            let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            let gamma = 0.6 * hnorm_sq + 0.05;
            let a = su_solve(&ula(n), 0.4, &h, gamma, 0.15, 0.0, 1.0).unwrap();
            let b = su_solve_eps_zero(&ula(n), 0.4, &h, gamma, 0.15, 1.0).unwrap();
            assert_eq!(a.branch, b.branch, "seed {seed}");
            assert_eq!(a.feasible, b.feasible);
            match (a.rho, b.rho) {
                (Some(ra), Some(rb)) => assert_abs_diff_eq!(ra, rb, epsilon = 1e-9),
                (None, None) => {}
                other => panic!("weight mismatch: {other:?}"),
            }
            for i in 0..n {
                assert!((a.w[i] - b.w[i]).norm() < 1e-8, "seed {seed} entry {i}");
            }
            // A tiny exponent behaves like zero.
            let c = su_solve(&ula(n), 0.4, &h, gamma, 0.15, 1e-15, 1.0).unwrap();
            assert_eq!(c.branch, b.branch);
            for i in 0..n {
                assert!((c.w[i] - b.w[i]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn aligned_channel_selects_the_bartlett_branch() {
        let n = 6;
        let arr = ula(n);
        let a = steering_vector(&arr, 0.5).unwrap();
        // h ∝ a(θ0) maximizes |hᵀa*| at fixed norm.
        let h = a.mapv(|v| v * 2.0);
        let sol = su_solve(&arr, 0.5, &h, 1.5, 0.1, 2.302585092994046, 1.0).unwrap();
        assert_eq!(sol.branch, SuBranch::Bartlett);
        assert!(sol.feasible);
        assert_eq!(sol.rho, None);
        assert_abs_diff_eq!(sol.beam_power(&arr, 0.5).unwrap(), n as f64, epsilon = 1e-10);
        // The Bartlett vector satisfies the surrogate with slack.
        let wmat = outer(&sol.w);
        let user = UserSpec { gamma: 1.5, outage_p: 0.1, sigma_delta: 0.1 };
        let data = build_bernstein(std::slice::from_ref(&wmat), 0, &user, &h, 1.0).unwrap();
        assert!(u_bound(&data) - data.sigma_sq >= -1e-12);
    }

    #[test]
    fn orthogonal_channel_splits_power_as_expected() {
        // Build h with hᵀa*(θ0) = 0: the array term then lives entirely in
        // the orthogonal component and the objective is (1 − ρ)N.
        let n = 4;
        let arr = ula(n);
        let a = steering_vector(&arr, 0.3).unwrap();
        let raw = random_channel(5, n);
        // Remove the component of conj(h) along a*: conj-side Gram-Schmidt.
        let pair = gram_schmidt_pair(&a.mapv(|v| v.conj()), &raw.mapv(|v| v.conj())).unwrap();
        let h = pair.perp.mapv(|v| v.conj() * 1.7);
        let corr: Complex64 = h.iter().zip(a.iter()).map(|(x, y)| x * y.conj()).sum();
        assert!(corr.norm() < 1e-12);

        let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let eps = 2.302585092994046;
        let gamma = 0.5 * hnorm_sq;
        let sol = su_solve(&arr, 0.3, &h, gamma, 0.1, eps, 1.0).unwrap();
        assert_eq!(sol.branch, SuBranch::Mixture);
        assert!(sol.feasible);
        let rho = sol.rho.unwrap();
        let power = sol.beam_power(&arr, 0.3).unwrap();
        assert_abs_diff_eq!(power, (1.0 - rho) * n as f64, epsilon = 1e-9);
        // Channel gain matches the parametrization |hᵀw|² = ρ‖h‖².
        let gain: Complex64 = h.iter().zip(sol.w.iter()).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(gain.norm_sqr(), rho * hnorm_sq, epsilon = 1e-9);

        // With no error spread the weight is exactly γσ_c²/‖h‖², so γ can be
        // tuned for an even split.
        let half = su_solve(&arr, 0.3, &h, 0.5 * hnorm_sq, 0.0, eps, 1.0).unwrap();
        assert_abs_diff_eq!(half.rho.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            half.beam_power(&arr, 0.3).unwrap(),
            0.5 * n as f64,
            epsilon = 1e-9
        );
    }

    #[test]
    fn zero_spread_weight_is_target_over_channel_gain() {
        let n = 5;
        let h = random_channel(11, n);
        let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let gamma = 0.65 * hnorm_sq;
        let sol = su_solve(&ula(n), 0.9, &h, gamma, 0.0, 2.302585092994046, 1.0).unwrap();
        if sol.branch == SuBranch::Mixture {
            assert_abs_diff_eq!(sol.rho.unwrap(), gamma / hnorm_sq, epsilon = 1e-12);
        }
    }

    #[test]
    fn feasibility_boundary_is_sharp() {
        for seed in 0..10u64 {
            let n = 4 + (seed % 3) as usize;
            let h = random_channel(seed.wrapping_add(300), n);
            let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            let sd = 0.1;

            // Without the exponent the edge sits at (‖h‖² + σ_Δ²)/σ_c².
            let bound = hnorm_sq + sd * sd;
            let hi = su_solve_eps_zero(&ula(n), 0.7, &h, bound * (1.0 + 1e-9), sd, 1.0).unwrap();
            assert!(!hi.feasible, "seed {seed}: beyond the edge must fail");
            let lo = su_solve_eps_zero(&ula(n), 0.7, &h, bound * (1.0 - 1e-9), sd, 1.0).unwrap();
            assert!(lo.feasible);
            if lo.branch == SuBranch::Mixture {
                assert!(lo.rho.unwrap() <= 1.0 + 1e-12);
                assert!(lo.rho.unwrap() >= 1.0 - 1e-6);
            }

            // With an exponent the edge solves g(1) = 0.
            let eps = 2.302585092994046;
            let edge = hnorm_sq + sd * sd
                - sd * (2.0 * eps as f64).sqrt() * (sd * sd + 2.0 * hnorm_sq).sqrt();
            let hi = su_solve(&ula(n), 0.7, &h, edge * (1.0 + 1e-9), sd, eps, 1.0).unwrap();
            assert!(!hi.feasible);
            let lo = su_solve(&ula(n), 0.7, &h, edge * (1.0 - 1e-9), sd, eps, 1.0).unwrap();
            assert!(lo.feasible);
        }
    }

    #[test]
    fn threshold_grows_with_exponent_and_target() {
        let n = 6;
        let h = random_channel(42, n);
        let thr = |gamma: f64, eps: f64| {
            su_solve(&ula(n), 0.2, &h, gamma, 0.1, eps, 1.0).unwrap().lambda_threshold
        };
        let mut last = thr(1.0, 0.01);
        for &eps in &[0.1, 0.5, 1.0, 2.302585092994046, 4.605170185988091] {
            let cur = thr(1.0, eps);
            assert!(cur > last, "threshold must grow with the exponent");
            last = cur;
        }
        let mut last = thr(0.2, 1.0);
        for &gamma in &[0.5, 1.0, 2.0, 4.0] {
            let cur = thr(gamma, 1.0);
            assert!(cur > last, "threshold must grow with the target");
            last = cur;
        }
    }

    #[test]
    fn mixture_components_combine_coherently() {
        for seed in 0..12u64 {
            let n = 5;
            let arr = ula(n);
            let h = random_channel(seed.wrapping_add(2000), n);
            let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            let sol =
                su_solve(&arr, 1.1, &h, 0.75 * hnorm_sq, 0.12, 2.302585092994046, 1.0).unwrap();
            if sol.branch != SuBranch::Mixture || !sol.feasible {
                continue;
            }
            let rho = sol.rho.unwrap();
            let a = steering_vector(&arr, 1.1).unwrap();
            let a_conj = a.mapv(|v| v.conj());
            let pair = gram_schmidt_pair(&h.mapv(|v| v.conj()), &a_conj).unwrap();
            let g_par: Complex64 =
                a.iter().zip(pair.parallel.iter()).map(|(x, y)| x * y).sum();
            let g_perp: Complex64 = a.iter().zip(pair.perp.iter()).map(|(x, y)| x * y).sum();
            let want = rho.sqrt() * g_par.norm() + (1.0 - rho).sqrt() * g_perp.norm();
            let got: Complex64 = a.iter().zip(sol.w.iter()).map(|(x, y)| x * y).sum();
            assert_abs_diff_eq!(got.norm(), want, epsilon = 1e-10);
            // Nothing beats packing the whole array gain.
            assert!(got.norm_sqr() <= n as f64 + 1e-9);
        }
    }

    #[test]
    fn gram_schmidt_produces_an_orthonormal_pair() {
        let u = random_channel(8, 6);
        let v = random_channel(9, 6);
        let pair = gram_schmidt_pair(&u, &v).unwrap();
        assert!(!pair.degenerate);
        let nu: f64 = pair.parallel.iter().map(|x| x.norm_sqr()).sum();
        let nv: f64 = pair.perp.iter().map(|x| x.norm_sqr()).sum();
        assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(nv, 1.0, epsilon = 1e-13);
        let ip: Complex64 =
            pair.parallel.iter().zip(pair.perp.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(ip.norm() < 1e-13);
    }

    #[test]
    fn gram_schmidt_flags_parallel_inputs() {
        let u = random_channel(10, 4);
        let v = u.mapv(|x| x * Complex64::new(0.0, -2.5));
        let pair = gram_schmidt_pair(&u, &v).unwrap();
        assert!(pair.degenerate);
        assert!(pair.perp.iter().all(|x| x.norm() == 0.0));
        assert!(gram_schmidt_pair(&Array1::zeros(4), &u).is_err());
    }

    #[test]
    fn infeasible_reports_zero_vector() {
        let n = 4;
        let h = random_channel(21, n);
        let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let sol = su_solve(&ula(n), 0.4, &h, 5.0 * hnorm_sq, 0.1, 2.302585092994046, 1.0).unwrap();
        assert!(!sol.feasible);
        assert_eq!(sol.rho, None);
        assert!(sol.w.iter().all(|v| v.norm() == 0.0));
    }
}
