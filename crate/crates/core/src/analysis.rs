//! Statistical post-processing: empirical summaries, Kolmogorov-Smirnov
//! distances, integrated autocorrelation times with automatic windowing,
//! log-log scaling fits of relaxation time against system size, and exact
//! lattice-law-versus-limit comparisons.
//!
//! Scaling studies measure tau in raw chain steps, which avoids committing
//! to either time embedding (deterministic or Poissonized holding times
//! scale identically). The autocorrelation observable is eta below the
//! critical point and eta^2 at it: odd observables decorrelate atypically
//! fast at criticality by symmetry.

use crate::chains::{lmh_step, mh_step, ChainError, ChainKind, LatticeState, LiftedState};
use crate::math::{ks_sorted_both_gaps, KahanSum};
use crate::model::{exact_stationary_law, limiting_law, ModelError, ModelParams, Regime};
use crate::rng::derive_stream;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value: {0}")]
    NonFiniteSample(f64),
    #[error("series of length {0} is too short for autocorrelation analysis")]
    SeriesTooShort(usize),
    #[error("series is constant; autocorrelation time is undefined")]
    DegenerateSeries,
    #[error("window rule needs a positive finite growth factor, got {0}")]
    BadWindowRule(f64),
    #[error("need at least 4 distinct sizes, got {0}")]
    TooFewSizes(usize),
    #[error("study config invalid: {0}")]
    BadStudyConfig(&'static str),
    #[error("n = {n} needs {steps} raw steps per replica, over the {cap} budget")]
    StudyBudget { n: u64, steps: u128, cap: u128 },
}

/// A sorted sample with its first two moments.
#[derive(Debug, Clone)]
pub struct EmpiricalSummary {
    sorted: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl EmpiricalSummary {
    pub fn from_samples(mut values: Vec<f64>) -> Result<Self, AnalysisError> {
        if values.is_empty() {
            return Err(AnalysisError::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFiniteSample(bad));
        }
        values.sort_by(f64::total_cmp);
        let mut acc = KahanSum::default();
        for &v in &values {
            acc.add(v);
        }
        let mean = acc.value() / values.len() as f64;
        let mut sq = KahanSum::default();
        for &v in &values {
            sq.add((v - mean) * (v - mean));
        }
        let variance = if values.len() > 1 {
            (sq.value() / (values.len() - 1) as f64).max(0.0)
        } else {
            0.0
        };
        Ok(EmpiricalSummary { sorted: values, mean, variance })
    }

    pub fn count(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 denominator), 0 for a single point.
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Kolmogorov-Smirnov distance of the sample against a continuous CDF:
/// the supremum over order statistics of both one-sided gaps.
pub fn ks_distance(sample: &EmpiricalSummary, cdf: &dyn Fn(f64) -> f64) -> f64 {
    ks_sorted_both_gaps(&sample.sorted, cdf)
}

/// Automatic windowing rule for the autocorrelation sum: the window W is
/// the smallest lag with W >= c * tau_hat(W), capped at a third of the
/// series.
#[derive(Debug, Clone, Copy)]
pub struct WindowRule {
    pub c: f64,
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule { c: 6.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AutocorrEstimate {
    /// tau_int = 1 + 2 sum_{k <= W} rho_k.
    pub tau: f64,
    /// Madras-Sokal error bar: tau * sqrt(2 (2W + 1) / N).
    pub stderr: f64,
    /// Window the sum stopped at.
    pub window: usize,
    /// Set when the window hit its cap or the series is shorter than
    /// 1000 tau; the estimate is then untrustworthy rather than wrong.
    pub flagged: bool,
}

/// Integrated autocorrelation time of a scalar series.
pub fn integrated_autocorrelation(
    series: &[f64],
    rule: &WindowRule,
) -> Result<AutocorrEstimate, AnalysisError> {
    if !(rule.c > 0.0 && rule.c.is_finite()) {
        return Err(AnalysisError::BadWindowRule(rule.c));
    }
    let n = series.len();
    if n < 16 {
        return Err(AnalysisError::SeriesTooShort(n));
    }
    let mut acc = KahanSum::default();
    for &v in series {
        acc.add(v);
    }
    let mean = acc.value() / n as f64;
    let mut c0 = KahanSum::default();
    for &v in series {
        c0.add((v - mean) * (v - mean));
    }
    let c0 = c0.value() / n as f64;
    if c0 <= 0.0 {
        return Err(AnalysisError::DegenerateSeries);
    }
    let cap = n / 3;
    let mut tau = 1.0f64;
    let mut window = cap;
    let mut hit_cap = true;
    for w in 1..=cap {
        let mut cw = KahanSum::default();
        for t in 0..n - w {
            cw.add((series[t] - mean) * (series[t + w] - mean));
        }
        let rho = cw.value() / (n - w) as f64 / c0;
        tau += 2.0 * rho;
        if w as f64 >= rule.c * tau {
            window = w;
            hit_cap = false;
            break;
        }
    }
    let stderr = tau.abs() * (2.0 * (2.0 * window as f64 + 1.0) / n as f64).sqrt();
    let flagged = hit_cap || (n as f64) < 1000.0 * tau;
    Ok(AutocorrEstimate { tau, stderr, window, flagged })
}

/// Budget knobs for a scaling study. The stride thins the recorded series
/// so its autocorrelation time lands near `thin_target` recorded steps,
/// assuming tau grows like n^alpha for the nominal alpha of the
/// (chain, regime) cell; the raw-step tau is stride * tau_thinned either
/// way, so a wrong guess costs variance, not bias.
#[derive(Debug, Clone, Copy)]
pub struct StudyConfig {
    pub replicas: usize,
    pub recorded_samples: usize,
    pub thin_target: f64,
    pub bootstrap: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            replicas: 8,
            recorded_samples: 300_000,
            thin_target: 64.0,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub n: u64,
    /// Integrated autocorrelation time in raw chain steps, averaged over
    /// replicas.
    pub tau: f64,
    /// Standard error of the replica mean.
    pub stderr: f64,
    /// Thinning stride the series was recorded at.
    pub stride: u64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub kind: ChainKind,
    pub regime: Regime,
    pub beta: f64,
    pub h: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log tau against log n.
    pub slope: f64,
    /// Bootstrap 95% interval, widened to contain the point estimate.
    pub ci: (f64, f64),
}

const STUDY_STEP_CAP: u128 = 100_000_000_000;

/// Measures the raw-step relaxation exponent of a chain: for each n, runs
/// stationary-start replicas, records the regime observable every `stride`
/// steps, estimates tau, and fits log tau against log n with a bootstrap
/// confidence interval over replicas. Replicas run in parallel on streams
/// keyed by replica index; results are independent of thread count.
pub fn scaling_study(
    kind: ChainKind,
    beta: f64,
    h: f64,
    n_list: &[u64],
    cfg: &StudyConfig,
    seed: u64,
) -> Result<ScalingReport, AnalysisError> {
    let mut distinct = n_list.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(AnalysisError::TooFewSizes(distinct.len()));
    }
    if cfg.replicas < 2 {
        return Err(AnalysisError::BadStudyConfig("need at least 2 replicas"));
    }
    if cfg.recorded_samples < 1000 {
        return Err(AnalysisError::BadStudyConfig("need at least 1000 recorded samples"));
    }
    if !(cfg.thin_target >= 1.0 && cfg.thin_target.is_finite()) {
        return Err(AnalysisError::BadStudyConfig("thin_target must be >= 1"));
    }
    if cfg.bootstrap < 10 {
        return Err(AnalysisError::BadStudyConfig("need at least 10 bootstrap resamples"));
    }
    let mut regime = None;
    let mut rows = Vec::with_capacity(distinct.len());
    let mut replica_taus: Vec<Vec<f64>> = Vec::with_capacity(distinct.len());
    for &n in &distinct {
        let params = ModelParams::new(beta, h, n)?;
        regime = Some(params.regime());
        let alpha = kind.alpha(params.regime());
        let stride = ((n as f64).powf(alpha) / cfg.thin_target).round().max(1.0) as u64;
        let raw_steps = cfg.recorded_samples as u128 * stride as u128;
        if raw_steps > STUDY_STEP_CAP {
            return Err(AnalysisError::StudyBudget { n, steps: raw_steps, cap: STUDY_STEP_CAP });
        }
        let law = exact_stationary_law(&params)?;
        let purpose = format!("scaling/{}/n{}", kind.label(), n);
        let estimates: Vec<Result<AutocorrEstimate, AnalysisError>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = derive_stream(seed, r as u64, &purpose);
                let series = record_thinned_series(
                    &params,
                    kind,
                    law.sample(&mut rng),
                    stride,
                    cfg.recorded_samples,
                    &mut rng,
                );
                integrated_autocorrelation(&series, &WindowRule::default())
            })
            .collect();
        let mut taus = Vec::with_capacity(cfg.replicas);
        let mut flagged = false;
        for est in estimates {
            let est = est?;
            flagged |= est.flagged;
            // tau in raw steps; clamp pathological non-positive estimates.
            taus.push((stride as f64 * est.tau).max(1e-3));
        }
        let mean = taus.iter().sum::<f64>() / taus.len() as f64;
        let var = taus.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
            / (taus.len() - 1) as f64;
        rows.push(ScalingRow {
            n,
            tau: mean,
            stderr: (var / taus.len() as f64).sqrt(),
            stride,
            flagged,
        });
        replica_taus.push(taus);
    }
    let ln_ns: Vec<f64> = distinct.iter().map(|&n| (n as f64).ln()).collect();
    let ln_taus: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
    let slope = fit_loglog(&ln_ns, &ln_taus);
    let mut rng = derive_stream(seed, u64::MAX, "scaling/bootstrap");
    let ci = bootstrap_slope_ci(&ln_ns, &replica_taus, cfg.bootstrap, &mut rng);
    let ci = (ci.0.min(slope), ci.1.max(slope));
    Ok(ScalingReport {
        kind,
        regime: regime.expect("validated nonempty size list"),
        beta,
        h,
        rows,
        slope,
        ci,
    })
}

/// Advance the chain `stride` raw steps between recorded points and return
/// the observable series (eta below criticality, eta^2 at it).
fn record_thinned_series<R: Rng + ?Sized>(
    params: &ModelParams,
    kind: ChainKind,
    k0: u64,
    stride: u64,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let critical = params.regime() == Regime::Critical;
    let observe = |k: u64| {
        let eta = params.eta(k);
        if critical {
            eta * eta
        } else {
            eta
        }
    };
    let mut series = Vec::with_capacity(samples);
    match kind {
        ChainKind::Mh => {
            let mut state = LatticeState { k: k0 };
            for _ in 0..samples {
                series.push(observe(state.k));
                for _ in 0..stride {
                    state = mh_step(params, state, rng);
                }
            }
        }
        ChainKind::Lmh => {
            let j: i8 = if rng.random::<f64>() < 0.5 { 1 } else { -1 };
            let mut state = LiftedState { state: LatticeState { k: k0 }, j };
            for _ in 0..samples {
                series.push(observe(state.state.k));
                for _ in 0..stride {
                    state = lmh_step(params, state, rng);
                }
            }
        }
    }
    series
}

/// Least-squares slope of ys against xs.
fn fit_loglog(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// Percentile bootstrap over replicas: resample each size's replica taus
/// with replacement, refit the slope, take the 2.5%/97.5% quantiles.
fn bootstrap_slope_ci<R: Rng + ?Sized>(
    ln_ns: &[f64],
    replica_taus: &[Vec<f64>],
    resamples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut slopes = Vec::with_capacity(resamples);
    let mut ln_taus = vec![0.0; ln_ns.len()];
    for _ in 0..resamples {
        for (cell, taus) in ln_taus.iter_mut().zip(replica_taus) {
            let mut acc = 0.0;
            for _ in 0..taus.len() {
                acc += taus[rng.random_range(0..taus.len())];
            }
            *cell = (acc / taus.len() as f64).ln();
        }
        slopes.push(fit_loglog(ln_ns, &ln_taus));
    }
    slopes.sort_by(f64::total_cmp);
    let lo = slopes[(0.025 * (resamples - 1) as f64).round() as usize];
    let hi = slopes[(0.975 * (resamples - 1) as f64).round() as usize];
    (lo, hi)
}

#[derive(Debug, Clone, Copy)]
pub struct LimitRow {
    pub n: u64,
    /// Exact KS distance between the lattice law of eta and the limit law.
    pub ks: f64,
    /// Wasserstein-1 companion diagnostic.
    pub w1: f64,
}

/// Exact per-n distance between the rescaled stationary lattice law and its
/// limit (Gaussian below criticality, quartic at it). No sampling: the
/// values are deterministic functions of (beta, h, n). The MH and lifted
/// chains share this magnetization marginal, so there is no chain tag.
pub fn limit_check(beta: f64, h: f64, n_list: &[u64]) -> Result<Vec<LimitRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = ModelParams::new(beta, h, n)?;
        let law = exact_stationary_law(&params)?;
        let limit = limiting_law(&params);
        let target = |y: f64| limit.cdf(y);
        rows.push(LimitRow {
            n,
            ks: law.ks_against_cdf(&target),
            w1: law.wasserstein_against_cdf(&target),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;
    use statrs::function::erf::erf;

    fn normal_cdf(y: f64) -> f64 {
        0.5 * (1.0 + erf(y / 2f64.sqrt()))
    }

    fn ar1_series(rho: f64, len: usize, seed_purpose: &str) -> Vec<f64> {
        let mut rng = derive_stream(2024, 0, seed_purpose);
        let mut x = 0.0;
        // Burn past the transient from the zero start.
        for _ in 0..2000 {
            let eps: f64 = rng.sample(StandardNormal);
            x = rho * x + eps;
        }
        (0..len)
            .map(|_| {
                let eps: f64 = rng.sample(StandardNormal);
                x = rho * x + eps;
                x
            })
            .collect()
    }

    #[test]
    fn summary_validation_and_moments() {
        assert!(matches!(
            EmpiricalSummary::from_samples(vec![]),
            Err(AnalysisError::EmptySample)
        ));
        assert!(matches!(
            EmpiricalSummary::from_samples(vec![1.0, f64::NAN]),
            Err(AnalysisError::NonFiniteSample(_))
        ));
        let s = EmpiricalSummary::from_samples(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.count(), 4);
        assert_eq!(s.sorted(), &[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean() - 2.5).abs() < 1e-15);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_exact_quantiles_and_median_point() {
        // Samples at the exact uniform quantiles (i + 1/2)/m give KS 1/(2m).
        let m = 8;
        let draws: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let s = EmpiricalSummary::from_samples(draws).unwrap();
        let uniform = |y: f64| y.clamp(0.0, 1.0);
        assert!((ks_distance(&s, &uniform) - 1.0 / (2.0 * m as f64)).abs() < 1e-15);
        let single = EmpiricalSummary::from_samples(vec![0.0]).unwrap();
        assert!((ks_distance(&single, &normal_cdf) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_of_normal_sample_sits_near_critical_value() {
        let mut rng = derive_stream(99, 0, "analysis/ks-normal");
        let draws: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let s = EmpiricalSummary::from_samples(draws).unwrap();
        let ks = ks_distance(&s, &normal_cdf);
        // 1.5x the asymptotic 95% critical value 1.36/sqrt(m).
        assert!(ks < 1.5 * 1.36 / (100_000f64).sqrt(), "KS {ks}");
    }

    #[test]
    fn ks_is_invariant_under_affine_maps() {
        let mut rng = derive_stream(7, 0, "analysis/affine");
        let draws: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let s = EmpiricalSummary::from_samples(draws.clone()).unwrap();
        let base = ks_distance(&s, &normal_cdf);
        let mapped: Vec<f64> = draws.iter().map(|x| 2.0 * x + 3.0).collect();
        let sm = EmpiricalSummary::from_samples(mapped).unwrap();
        let pulled = ks_distance(&sm, &|y: f64| normal_cdf((y - 3.0) / 2.0));
        assert!((base - pulled).abs() < 1e-12, "{base} vs {pulled}");
    }

    #[test]
    fn iid_series_has_unit_tau() {
        let mut rng = derive_stream(11, 0, "analysis/iid");
        let series: Vec<f64> = (0..50_000).map(|_| rng.sample(StandardNormal)).collect();
        let est = integrated_autocorrelation(&series, &WindowRule::default()).unwrap();
        assert!((est.tau - 1.0).abs() < 2.0 * est.stderr + 0.05, "tau {}", est.tau);
        assert!(!est.flagged);
    }

    #[test]
    fn ar1_tau_matches_closed_form() {
        // tau = (1 + rho) / (1 - rho) = 19 at rho = 0.9.
        let series = ar1_series(0.9, 200_000, "analysis/ar1");
        let est = integrated_autocorrelation(&series, &WindowRule::default()).unwrap();
        assert!((est.tau / 19.0 - 1.0).abs() < 0.10, "tau {}", est.tau);
        assert!(!est.flagged);
        assert!(est.window >= 20 && est.window < 1000, "window {}", est.window);
    }

    #[test]
    fn alternating_series_has_tau_below_one() {
        let series: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let est = integrated_autocorrelation(&series, &WindowRule::default()).unwrap();
        assert!(est.tau < 1.0, "tau {}", est.tau);
    }

    #[test]
    fn thinning_by_two_halves_tau() {
        // Thinned AR(1) is AR(1) with rho^2: tau 39 -> 19.5.
        let series = ar1_series(0.95, 400_000, "analysis/thin");
        let full = integrated_autocorrelation(&series, &WindowRule::default()).unwrap();
        let thinned: Vec<f64> = series.iter().step_by(2).copied().collect();
        let half = integrated_autocorrelation(&thinned, &WindowRule::default()).unwrap();
        let gap = (full.tau / 2.0 - half.tau).abs();
        assert!(
            gap < 2.0 * (full.stderr / 2.0 + half.stderr),
            "full {} half {} gap {gap}",
            full.tau,
            half.tau
        );
    }

    #[test]
    fn autocorrelation_validates_input() {
        assert!(matches!(
            integrated_autocorrelation(&[1.0; 10], &WindowRule::default()),
            Err(AnalysisError::SeriesTooShort(10))
        ));
        assert!(matches!(
            integrated_autocorrelation(&[3.5; 100], &WindowRule::default()),
            Err(AnalysisError::DegenerateSeries)
        ));
        assert!(matches!(
            integrated_autocorrelation(&[1.0, 2.0], &WindowRule { c: 0.0 }),
            Err(AnalysisError::BadWindowRule(_))
        ));
    }

    #[test]
    fn short_series_relative_to_tau_is_flagged() {
        let series = ar1_series(0.9, 4000, "analysis/short");
        let est = integrated_autocorrelation(&series, &WindowRule::default()).unwrap();
        assert!(est.flagged, "tau {} over {} points not flagged", est.tau, series.len());
    }

    #[test]
    fn slope_fit_recovers_synthetic_exponents() {
        // tau(n) = 3 n^s with lognormal replica noise; the fitted slope and
        // its bootstrap interval must capture s.
        let ns = [64u64, 128, 256, 512, 1024, 2048, 4096];
        let ln_ns: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        for (case, s) in [0.5, 0.75, 1.0, 1.5].into_iter().enumerate() {
            let mut rng = derive_stream(31, case as u64, "analysis/slope");
            let replica_taus: Vec<Vec<f64>> = ns
                .iter()
                .map(|&n| {
                    (0..8)
                        .map(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            3.0 * (n as f64).powf(s) * (0.1 * z).exp()
                        })
                        .collect()
                })
                .collect();
            let ln_taus: Vec<f64> = replica_taus
                .iter()
                .map(|taus| (taus.iter().sum::<f64>() / taus.len() as f64).ln())
                .collect();
            let slope = fit_loglog(&ln_ns, &ln_taus);
            assert!((slope - s).abs() < 0.08, "s={s}: slope {slope}");
            let (lo, hi) = bootstrap_slope_ci(&ln_ns, &replica_taus, 200, &mut rng);
            let (lo, hi) = (lo.min(slope), hi.max(slope));
            assert!(lo <= s && s <= hi, "s={s}: CI [{lo}, {hi}]");
        }
    }

    #[test]
    fn scaling_study_smoke_run() {
        let cfg = StudyConfig {
            replicas: 4,
            recorded_samples: 3000,
            thin_target: 8.0,
            bootstrap: 50,
        };
        let report =
            scaling_study(ChainKind::Lmh, 0.5, 0.0, &[16, 32, 64, 128], &cfg, 5).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.regime, Regime::Supercritical);
        for row in &report.rows {
            assert!(row.tau > 0.0);
            assert!(row.stride >= 1);
        }
        assert!(report.ci.0 <= report.slope && report.slope <= report.ci.1);
    }

    #[test]
    fn scaling_study_validates_config() {
        let cfg = StudyConfig::default();
        assert!(matches!(
            scaling_study(ChainKind::Mh, 0.5, 0.0, &[16, 32, 16], &cfg, 1),
            Err(AnalysisError::TooFewSizes(2))
        ));
        let bad = StudyConfig { replicas: 1, ..cfg };
        assert!(matches!(
            scaling_study(ChainKind::Mh, 0.5, 0.0, &[16, 32, 64, 128], &bad, 1),
            Err(AnalysisError::BadStudyConfig(_))
        ));
        let heavy = StudyConfig { thin_target: 1.0, recorded_samples: 2_000_000, ..cfg };
        assert!(matches!(
            scaling_study(ChainKind::Mh, 1.0, 0.0, &[1 << 14, 1 << 15, 1 << 16, 1 << 17], &heavy, 1),
            Err(AnalysisError::StudyBudget { .. })
        ));
    }

    #[test]
    fn limit_check_distances_decrease() {
        let grid = [100u64, 1000, 10_000];
        // Free case: scaled binomial against N(0, 1).
        let free = limit_check(0.0, 0.0, &grid).unwrap();
        // Interacting supercritical case: limit variance is exactly 2.
        let half = limit_check(0.5, 0.0, &grid).unwrap();
        // Critical case against the quartic law.
        let crit = limit_check(1.0, 0.0, &grid).unwrap();
        for rows in [&free, &half, &crit] {
            for pair in rows.windows(2) {
                assert!(pair[1].ks < pair[0].ks, "KS did not decrease: {pair:?}");
                assert!(pair[1].w1 < pair[0].w1, "W1 did not decrease: {pair:?}");
            }
        }
        let params = ModelParams::new(0.5, 0.0, 100).unwrap();
        assert_eq!(params.consts().v, Some(2.0));
    }

    #[test]
    fn limit_check_is_deterministic() {
        let a = limit_check(0.5, 0.3, &[100, 1000]).unwrap();
        let b = limit_check(0.5, 0.3, &[100, 1000]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.ks.to_bits(), y.ks.to_bits());
            assert_eq!(x.w1.to_bits(), y.w1.to_bits());
        }
    }
}
