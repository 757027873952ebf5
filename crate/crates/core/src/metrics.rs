//! Radar and communication quality metrics: integrated sidelobe-to-mainlobe
//! ratio, detection probability, achievable rates, and feasibility rates.

use crate::array::{bartlett_power, lobe_matrix, AngularRegion, UlaConfig};
use crate::channel::{achievable_rate, realized_sinr, BeamformerSet, ChannelSet, UserSpec};
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

/// Default mainlobe width for sidelobe metrics (radians).
pub const DEFAULT_MAINLOBE_WIDTH: f64 = 20.0 * std::f64::consts::PI / 180.0;

/// Quadrature order per angular interval for the lobe matrices.
const LOBE_QUAD_POINTS: usize = 96;

/// Radar detection operating point used when reporting metrics.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct RadarProbe {
    /// Radar SNR in linear scale.
    pub snr_r_linear: f64,
    /// False-alarm probability.
    pub p_fa: f64,
}

impl Default for RadarProbe {
    /// 1 dB radar SNR at a 1e-4 false-alarm rate.
    fn default() -> Self {
        Self { snr_r_linear: 10f64.powf(0.1), p_fa: 1e-4 }
    }
}

/// Integrated sidelobe-to-mainlobe ratio of the transmit beampattern.
///
/// The pattern P(θ) = aᵀ(θ) R a*(θ) is integrated over the mainlobe
/// [θ0 ± width/2] and its complement within the visible region; the metric
/// is the sidelobe integral divided by the mainlobe integral. Smaller is
/// better; an isotropic pattern scores exactly (π − width)/width.
pub fn ismr_cov(
    r: &Array2<Complex64>,
    ula: &UlaConfig,
    theta0: f64,
    mainlobe_width: f64,
) -> Result<f64> {
    if r.nrows() != ula.n_antennas || r.ncols() != ula.n_antennas {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, array has {} antennas",
            r.nrows(),
            r.ncols(),
            ula.n_antennas
        )));
    }
    let main = AngularRegion::mainlobe(theta0, mainlobe_width)?;
    let side = main.complement()?;
    let a_main = lobe_matrix(ula, &main, LOBE_QUAD_POINTS)?;
    let a_side = lobe_matrix(ula, &side, LOBE_QUAD_POINTS)?;
    // ∫ P(θ) dθ = Tr(R conj(A)) under the transpose pattern convention.
    let trace_with = |lobe: &Array2<Complex64>| -> f64 {
        let n = r.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..n {
            for q in 0..n {
                acc += r[[p, q]] * lobe[[q, p]].conj();
            }
        }
        acc.re
    };
    let main_power = trace_with(&a_main);
    let side_power = trace_with(&a_side);
    if main_power <= 0.0 {
        return Err(Error::Numerical(format!(
            "degenerate beam: mainlobe power {main_power}"
        )));
    }
    Ok(side_power.max(0.0) / main_power)
}

/// ISMR of a per-user beamforming matrix set (the pattern uses Σ_k W_k).
pub fn ismr(
    w_set: &[Array2<Complex64>],
    ula: &UlaConfig,
    theta0: f64,
    mainlobe_width: f64,
) -> Result<f64> {
    if w_set.is_empty() {
        return Err(Error::Dimension("at least one beamforming block required".into()));
    }
    let n = w_set[0].nrows();
    let mut r = Array2::<Complex64>::zeros((n, n));
    for w in w_set {
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::Dimension("beamforming blocks must share dimensions".into()));
        }
        r += w;
    }
    ismr_cov(&r, ula, theta0, mainlobe_width)
}

/// First-order Marcum Q function Q₁(a, b) = Pr(X > b²) for X noncentral
/// chi-squared with 2 degrees of freedom and noncentrality a².
///
/// Series over Poisson-weighted central chi-squared tails, with the Poisson
/// weights tracked in log space so large noncentralities cannot underflow.
/// Truncation error is below 1e-12 (the discarded Poisson tail mass).
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "marcum arguments must be nonnegative");
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if y == 0.0 {
        return 1.0;
    }
    if x == 0.0 {
        return (-y).exp();
    }
    let lx = x.ln();
    let ly = y.ln();
    // Central 2(n+1)-DoF tail S_n = e^{-y} Σ_{j≤n} y^j/j!, built alongside.
    let mut ln_pois = -x;
    let mut ln_chi_term = -y;
    let mut survival = ln_chi_term.exp();
    let mut pois_mass = 0.0_f64;
    let mut total = 0.0_f64;
    let n_max = (x + 60.0 * (x + 1.0).sqrt() + 200.0) as usize;
    for n in 0..n_max {
        let p = ln_pois.exp();
        pois_mass += p;
        total += p * survival.min(1.0);
        if pois_mass >= 1.0 - 1e-14 && n as f64 >= x {
            break;
        }
        ln_pois += lx - ((n + 1) as f64).ln();
        ln_chi_term += ly - ((n + 1) as f64).ln();
        survival += ln_chi_term.exp();
    }
    total.clamp(0.0, 1.0)
}

/// Detection probability of the look-direction radar test.
///
/// The detector compares a noncentral chi-squared statistic (2 degrees of
/// freedom) against the threshold t = −2 ln p_fa; the noncentrality is the
/// radar SNR times the squared look-direction power of the transmit
/// covariance.
pub fn detection_probability(
    w_set: &[Array2<Complex64>],
    ula: &UlaConfig,
    theta0: f64,
    snr_r_linear: f64,
    p_fa: f64,
) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa <= 1.0) {
        return Err(Error::Config(format!("false-alarm rate must be in (0, 1], got {p_fa}")));
    }
    if !(snr_r_linear > 0.0) {
        return Err(Error::Config(format!("radar SNR must be positive, got {snr_r_linear}")));
    }
    let look = bartlett_power(ula, theta0, w_set)?;
    let lambda_nc = snr_r_linear * look * look;
    Ok(detection_probability_from_lambda(lambda_nc, p_fa))
}

/// Detection probability from a precomputed noncentrality.
pub fn detection_probability_from_lambda(lambda_nc: f64, p_fa: f64) -> f64 {
    assert!(
        p_fa > 0.0 && p_fa <= 1.0 && lambda_nc >= 0.0,
        "invalid detection inputs"
    );
    if lambda_nc == 0.0 {
        // Central case: the threshold is defined by Pr(X > t) = p_fa.
        return p_fa;
    }
    let t = -2.0 * p_fa.ln();
    marcum_q1(lambda_nc.sqrt(), t.sqrt())
}

/// Fraction of true outcomes.
pub fn feasibility_rate(outcomes: &[bool]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Dimension("feasibility rate needs at least one outcome".into()));
    }
    Ok(outcomes.iter().filter(|&&b| b).count() as f64 / outcomes.len() as f64)
}

/// Aggregated per-design metrics.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    /// Rate of each user at its nominal channel (bps/Hz).
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    pub avg_rate_per_user: f64,
    /// Monte Carlo outage estimate per user.
    pub empirical_outage: Vec<f64>,
    /// Sidelobe-to-mainlobe ratio (linear; lower is better).
    pub ismr: f64,
    /// 10 log10(1/ismr): the inverted ratio in dB (higher is better).
    pub ismr_inv_db: f64,
    pub p_detect: f64,
    pub feasible: bool,
}

impl MetricReport {
    /// All-NaN report for designs that produced no usable solution.
    pub fn infeasible(n_users: usize) -> Self {
        Self {
            per_user_rate: vec![f64::NAN; n_users],
            sum_rate: f64::NAN,
            avg_rate_per_user: f64::NAN,
            empirical_outage: vec![f64::NAN; n_users],
            ismr: f64::NAN,
            ismr_inv_db: f64::NAN,
            p_detect: f64::NAN,
            feasible: false,
        }
    }
}

/// Computes the full metric set for one solved design.
///
/// Rates are evaluated at the nominal channels; outage comes from Monte
/// Carlo over the error distribution with `mc_trials` draws per user.
#[allow(clippy::too_many_arguments)]
pub fn report<R: Rng + ?Sized>(
    ula: &UlaConfig,
    theta0: f64,
    users: &[UserSpec],
    channels: &ChannelSet,
    noise_var: f64,
    w_blocks: &[Array2<Complex64>],
    radar: &RadarProbe,
    rng: &mut R,
    mc_trials: usize,
) -> Result<MetricReport> {
    if users.len() != channels.n_users() || users.len() != w_blocks.len() {
        return Err(Error::Dimension(
            "users, channels, and beamforming blocks must align".into(),
        ));
    }
    let beams = BeamformerSet::Matrices(w_blocks.to_vec());
    let k = users.len();
    let mut per_user_rate = Vec::with_capacity(k);
    let mut empirical_outage = Vec::with_capacity(k);
    for (idx, user) in users.iter().enumerate() {
        let sinr = realized_sinr(&channels.nominal[idx], idx, &beams, noise_var)?;
        per_user_rate.push(achievable_rate(sinr));
        empirical_outage.push(crate::bernstein::monte_carlo_outage(
            &beams,
            idx,
            user,
            &channels.nominal[idx],
            noise_var,
            mc_trials,
            rng,
        )?);
    }
    let sum_rate: f64 = per_user_rate.iter().sum();
    let ismr_val = ismr(w_blocks, ula, theta0, DEFAULT_MAINLOBE_WIDTH)?;
    let p_detect =
        detection_probability(w_blocks, ula, theta0, radar.snr_r_linear, radar.p_fa)?;
    Ok(MetricReport {
        sum_rate,
        avg_rate_per_user: sum_rate / k as f64,
        per_user_rate,
        empirical_outage,
        ismr: ismr_val,
        ismr_inv_db: -10.0 * ismr_val.log10(),
        p_detect,
        feasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ula(n: usize) -> UlaConfig {
        UlaConfig::half_wavelength(n).unwrap()
    }

    /// Modified Bessel function of the first kind, order zero, by its power
    /// series; converges for every finite argument used here.
    fn bessel_i0(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        for k in 1..400 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    /// Survival of the noncentral chi-squared (2 DoF) at t, by Simpson
    /// integration of its density ½ e^{-(x+λ)/2} I₀(√(λx)) over [0, t].
    fn survival_by_integration(lambda: f64, t: f64) -> f64 {
        let panels = 40_000usize;
        let h = t / panels as f64;
        let f = |x: f64| 0.5 * (-(x + lambda) / 2.0).exp() * bessel_i0((lambda * x).sqrt());
        let mut acc = f(0.0) + f(t);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        1.0 - acc * h / 3.0
    }

    #[test]
    fn marcum_matches_direct_integration_on_the_grid() {
        for &lambda in &[0.1f64, 1.0, 10.0, 100.0] {
            for &t in &[1.0f64, 10.0, 18.4] {
                let series = marcum_q1(lambda.sqrt(), t.sqrt());
                let integral = survival_by_integration(lambda, t);
                assert!(
                    (series - integral).abs() < 1e-8,
                    "lambda {lambda} t {t}: series {series} vs integral {integral}"
                );
            }
        }
    }

    #[test]
    fn marcum_matches_pinned_reference_values() {
        // Independently tabulated survival values of the noncentral
        // chi-squared distribution with 2 degrees of freedom.
        let cases: [(f64, f64, f64); 10] = [
            (0.1, 1.0, 0.621413008200),
            (0.1, 10.0, 0.008485712068),
            (0.1, 18.4, 0.000151815647),
            (1.0, 1.0, 0.732879803797),
            (1.0, 10.0, 0.029950585625),
            (1.0, 18.4, 0.001104877196),
            (10.0, 1.0, 0.992819361047),
            (10.0, 10.0, 0.563916668582),
            (10.0, 18.4, 0.161001503849),
            (100.0, 18.4, 0.999999996372),
        ];
        for &(lambda, t, want) in &cases {
            let got = marcum_q1(lambda.sqrt(), t.sqrt());
            assert!(
                (got - want).abs() < 5e-10,
                "lambda {lambda} t {t}: got {got} want {want}"
            );
        }
    }

    #[test]
    fn zero_noncentrality_returns_the_false_alarm_rate_exactly() {
        for &p_fa in &[1e-6, 1e-4, 0.01, 0.5, 1.0] {
            assert_eq!(detection_probability_from_lambda(0.0, p_fa), p_fa);
        }
    }

    #[test]
    fn detection_grows_strictly_with_noncentrality() {
        let mut last = detection_probability_from_lambda(0.0, 1e-4);
        for i in 1..60 {
            let lambda = 0.5 * i as f64;
            let cur = detection_probability_from_lambda(lambda, 1e-4);
            assert!(cur > last, "lambda {lambda}: {cur} !> {last}");
            last = cur;
        }
    }

    #[test]
    fn detection_limits() {
        assert!(detection_probability_from_lambda(1e4, 1e-4) > 0.999);
        assert_eq!(detection_probability_from_lambda(5.0, 1.0), 1.0);
        // Tiny false-alarm budgets push detection to zero at bounded SNR.
        assert!(detection_probability_from_lambda(1.0, 1e-12) < 1e-6);
    }

    #[test]
    fn isotropic_pattern_scores_the_region_ratio() {
        for &n in &[4usize, 7] {
            let arr = ula(n);
            let r = Array2::<Complex64>::eye(n).mapv(|v| v / n as f64);
            let got = ismr_cov(&r, &arr, 0.3, DEFAULT_MAINLOBE_WIDTH).unwrap();
            assert_abs_diff_eq!(got, 8.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn ismr_is_scale_invariant_and_matches_a_grid_quadrature() {
        let n = 8;
        let arr = ula(n);
        let theta0 = 30.0_f64.to_radians();
        let a = steering_vector(&arr, theta0).unwrap();
        // Bartlett covariance concentrates power on the mainlobe.
        let w = Array2::from_shape_fn((n, n), |(p, q)| a[p].conj() * a[q] / n as f64);
        let got = ismr_cov(&w, &arr, theta0, DEFAULT_MAINLOBE_WIDTH).unwrap();
        assert!(got < 1.0, "mainlobe-concentrated pattern must score below 1, got {got}");

        let scaled = w.mapv(|v| v * 37.0);
        let got_scaled = ismr_cov(&scaled, &arr, theta0, DEFAULT_MAINLOBE_WIDTH).unwrap();
        assert_abs_diff_eq!(got, got_scaled, epsilon = 1e-12 * got.abs());

        // Independent Simpson quadrature of the pattern itself.
        let half = 0.5 * DEFAULT_MAINLOBE_WIDTH;
        let step = 0.02_f64.to_radians();
        let grid_power = |lo: f64, hi: f64| -> f64 {
            let mut m = ((hi - lo) / step).ceil() as usize;
            if m % 2 == 1 {
                m += 1;
            }
            let h = (hi - lo) / m as f64;
            let mut acc = 0.0;
            for i in 0..=m {
                let theta = lo + h * i as f64;
                let p = crate::array::bartlett_power_cov(&arr, theta, &w).unwrap();
                let weight = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += weight * p;
            }
            acc * h / 3.0
        };
        use std::f64::consts::FRAC_PI_2;
        let main = grid_power(theta0 - half, theta0 + half);
        let side = grid_power(-FRAC_PI_2, theta0 - half) + grid_power(theta0 + half, FRAC_PI_2);
        let want = side / main;
        assert!(
            (got - want).abs() < 1e-6 * want.max(1.0),
            "quadratures disagree: {got} vs {want}"
        );
    }

    #[test]
    fn degenerate_beam_is_an_error() {
        let n = 4;
        let r = Array2::<Complex64>::zeros((n, n));
        assert!(ismr_cov(&r, &ula(n), 0.0, DEFAULT_MAINLOBE_WIDTH).is_err());
    }

    #[test]
    fn feasibility_rate_counts_true_outcomes() {
        assert_eq!(feasibility_rate(&[true, true]).unwrap(), 1.0);
        assert_eq!(feasibility_rate(&[true, false]).unwrap(), 0.5);
        assert!(feasibility_rate(&[]).is_err());
    }

    #[test]
    fn matched_filter_report_has_the_textbook_rate() {
        let n = 4;
        let arr = ula(n);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let channels = crate::channel::sample_nominal(&mut rng, 1, n).unwrap();
        let h = &channels.nominal[0];
        let hnorm_sq: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        // Matched filter w = h*/‖h‖ as a rank-one block.
        let w = Array2::from_shape_fn((n, n), |(p, q)| h[p].conj() * h[q] / hnorm_sq);
        let users = vec![UserSpec { gamma: 1.0, outage_p: 0.1, sigma_delta: 0.0 }];
        let rep = report(
            &arr,
            0.5,
            &users,
            &channels,
            1.0,
            std::slice::from_ref(&w),
            &RadarProbe::default(),
            &mut rng,
            200,
        )
        .unwrap();
        assert!(rep.feasible);
        assert_abs_diff_eq!(rep.sum_rate, (1.0 + hnorm_sq).log2(), epsilon = 1e-10);
        assert_abs_diff_eq!(rep.sum_rate, rep.per_user_rate.iter().sum(), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.avg_rate_per_user, rep.sum_rate, epsilon = 1e-12);
        // No error spread: the nominal SINR of 𝔼‖h‖² exceeds γ, outage 0.
        assert_eq!(rep.empirical_outage[0], 0.0);
        assert!(rep.p_detect > 0.0 && rep.p_detect <= 1.0);
        assert!(rep.ismr.is_finite());
        assert_abs_diff_eq!(
            rep.ismr_inv_db,
            -10.0 * rep.ismr.log10(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn infeasible_report_is_nan_flagged() {
        let rep = MetricReport::infeasible(3);
        assert!(!rep.feasible);
        assert_eq!(rep.per_user_rate.len(), 3);
        assert!(rep.sum_rate.is_nan());
        assert!(rep.per_user_rate.iter().all(|v| v.is_nan()));
        assert!(rep.empirical_outage.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn report_fields_are_consistent_on_a_random_scenario() {
        let n = 5;
        let arr = ula(n);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let channels = crate::channel::sample_nominal(&mut rng, 2, n).unwrap();
        let users = vec![UserSpec { gamma: 0.5, outage_p: 0.1, sigma_delta: 0.1 }; 2];
        // Simple orthonormal-ish blocks.
        let mut w1 = Array2::<Complex64>::zeros((n, n));
        w1[[0, 0]] = Complex64::new(0.4, 0.0);
        let mut w2 = Array2::<Complex64>::zeros((n, n));
        w2[[1, 1]] = Complex64::new(0.6, 0.0);
        let rep = report(
            &arr,
            0.2,
            &users,
            &channels,
            1.0,
            &[w1, w2],
            &RadarProbe::default(),
            &mut rng,
            500,
        )
        .unwrap();
        assert!(rep.feasible);
        assert!(rep.sum_rate.is_finite());
        assert_abs_diff_eq!(rep.sum_rate, rep.per_user_rate.iter().sum(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            rep.avg_rate_per_user * 2.0,
            rep.sum_rate,
            epsilon = 1e-12
        );
        assert!(rep.empirical_outage.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((0.0..=1.0).contains(&rep.p_detect));
        assert!(rep.ismr > 0.0);
    }
}
