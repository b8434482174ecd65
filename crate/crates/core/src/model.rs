//! The mean-field spin model and its exact magnetization law.
//!
//! For `n` spins with inverse temperature `beta` and field `h`, the lumped
//! magnetization chain lives on k in {0..n} with m = (2k - n)/n and
//! stationary weights C(n, k) * exp(beta * n * (m^2/2 + h*m)). Centered,
//! rescaled coordinates are eta = n^gamma * (m - m0), where m0 solves
//! m0 = tanh(beta * (m0 + h)) and gamma is 1/2 away from the critical point
//! and 1/4 at it.
//!
//! Supported phase: beta in [0, 1], with h = 0 required at beta = 1. For
//! beta > 1 at h = 0 the magnetization fixed point is not unique and the
//! scalings computed here do not apply, so construction is rejected.

use crate::math::{adaptive_simpson, ln_binomial, log_sum_exp, KahanSum, NumericCdf};
use rand::Rng;
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;
use std::sync::OnceLock;
use thiserror::Error;

/// Largest lattice for which the dense stationary law may be materialized.
pub const LAW_SIZE_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("beta must lie in [0, 1], got {0}; beyond 1 the magnetization fixed point is not unique and the implemented scalings do not apply")]
    BetaOutOfRange(f64),
    #[error("beta = 1 requires h = 0, got h = {0}; the quartic scaling only holds at zero field")]
    CriticalField(f64),
    #[error("n must be at least 2, got {0}")]
    TooFewSpins(u64),
    #[error("gamma must lie strictly inside (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("n = {n} exceeds the dense-law cap {cap}")]
    LawTooLarge { n: u64, cap: u64 },
    #[error("probability vector has wrong length: got {got}, lattice needs {want}")]
    WrongLength { got: usize, want: usize },
    #[error("probability vector is not a distribution: {0}")]
    NotADistribution(String),
}

/// Phase of the model, which fixes the standard scaling exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// beta < 1 (any field): Gaussian limit, gamma = 1/2.
    Supercritical,
    /// beta = 1, h = 0: quartic limit, gamma = 1/4.
    Critical,
}

impl Regime {
    pub fn standard_gamma(self) -> f64 {
        match self {
            Regime::Supercritical => 0.5,
            Regime::Critical => 0.25,
        }
    }

    /// Time-scaling exponent for the unlifted chain, alpha = 2(1 - gamma).
    pub fn mh_alpha(self) -> f64 {
        match self {
            Regime::Supercritical => 1.0,
            Regime::Critical => 1.5,
        }
    }

    /// Time-scaling exponent for the lifted chain, alpha = 1 - gamma.
    pub fn lmh_alpha(self) -> f64 {
        match self {
            Regime::Supercritical => 0.5,
            Regime::Critical => 0.75,
        }
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { name, value })
    }
}

fn check_phase(beta: f64, h: f64) -> Result<(), ModelError> {
    check_finite("beta", beta)?;
    check_finite("h", h)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(ModelError::BetaOutOfRange(beta));
    }
    if beta == 1.0 && h != 0.0 {
        return Err(ModelError::CriticalField(h));
    }
    Ok(())
}

/// Solve m0 = tanh(beta * (m0 + h)) for the supported phase.
///
/// Returns exactly 0 when h = 0 or beta = 0; otherwise bisection bracketing
/// followed by Newton polishing, residual below 1e-13.
pub fn solve_m0(beta: f64, h: f64) -> Result<f64, ModelError> {
    check_phase(beta, h)?;
    if h == 0.0 || beta == 0.0 {
        return Ok(0.0);
    }
    // Reduce to h > 0 by oddness: m0(beta, -h) = -m0(beta, h).
    let sign = if h > 0.0 { 1.0 } else { -1.0 };
    let h = h.abs();
    let g = |m: f64| m - (beta * (m + h)).tanh();
    // g(0) = -tanh(beta h) < 0 and g(1) >= 1 - tanh(beta(1+h)) > 0.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish; g' = 1 - beta * sech^2 >= 1 - beta > 0 here since the
    // critical point only enters with h = 0 (handled above).
    let mut m = 0.5 * (lo + hi);
    for _ in 0..8 {
        let sech2 = {
            let c = (beta * (m + h)).cosh();
            1.0 / (c * c)
        };
        let deriv = 1.0 - beta * sech2;
        let step = g(m) / deriv;
        m -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    Ok(sign * m.clamp(0.0, 1.0))
}

/// Constants of the scaling limits, all functions of (beta, h) alone.
///
/// With mbar = |m0|: a = 1 - mbar (lifted advance speed), l = 1/(1 + mbar) -
/// beta * (1 - mbar) (restoring-rate coefficient, 0 exactly at the critical
/// point), sigma = 2 sqrt(1 - mbar) (diffusion coefficient), and for beta < 1
/// the limiting Gaussian variance v = (1 - m0^2) / (1 - beta (1 - m0^2)),
/// which equals a / l identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub m0: f64,
    pub a: f64,
    pub l: f64,
    pub sigma: f64,
    pub v: Option<f64>,
}

impl DerivedConstants {
    pub fn compute(beta: f64, h: f64) -> Result<Self, ModelError> {
        let m0 = solve_m0(beta, h)?;
        let mbar = m0.abs();
        let a = 1.0 - mbar;
        let l = 1.0 / (1.0 + mbar) - beta * (1.0 - mbar);
        let sigma = 2.0 * a.sqrt();
        let v = if beta < 1.0 {
            Some((1.0 - m0 * m0) / (1.0 - beta * (1.0 - m0 * m0)))
        } else {
            None
        };
        Ok(DerivedConstants { m0, a, l, sigma, v })
    }
}

/// Validated model parameters plus cached lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    h: f64,
    n: u64,
    gamma: f64,
    consts: DerivedConstants,
    n_f: f64,
    pow_gamma: f64,
    spacing: f64,
}

impl ModelParams {
    /// Standard scaling: gamma = 1/2 for beta < 1, gamma = 1/4 at beta = 1.
    pub fn new(beta: f64, h: f64, n: u64) -> Result<Self, ModelError> {
        check_phase(beta, h)?;
        let regime = if beta < 1.0 {
            Regime::Supercritical
        } else {
            Regime::Critical
        };
        Self::with_gamma(beta, h, n, regime.standard_gamma())
    }

    /// Explicit gamma in (0, 1); the standard choices are the ones the limit
    /// statements hold for, anything else is for exploration.
    pub fn with_gamma(beta: f64, h: f64, n: u64, gamma: f64) -> Result<Self, ModelError> {
        check_phase(beta, h)?;
        check_finite("gamma", gamma)?;
        if n < 2 {
            return Err(ModelError::TooFewSpins(n));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ModelError::GammaOutOfRange(gamma));
        }
        let consts = DerivedConstants::compute(beta, h)?;
        let n_f = n as f64;
        Ok(ModelParams {
            beta,
            h,
            n,
            gamma,
            consts,
            n_f,
            pow_gamma: n_f.powf(gamma),
            spacing: 2.0 * n_f.powf(gamma - 1.0),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn regime(&self) -> Regime {
        if self.beta < 1.0 {
            Regime::Supercritical
        } else {
            Regime::Critical
        }
    }

    pub fn is_standard_gamma(&self) -> bool {
        self.gamma == self.regime().standard_gamma()
    }

    pub fn consts(&self) -> &DerivedConstants {
        &self.consts
    }

    pub fn m0(&self) -> f64 {
        self.consts.m0
    }

    /// Lattice spacing of eta: consecutive k differ by 2 n^(gamma-1).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// n^(-gamma), the scale factor from eta back to magnetization units.
    pub fn eta_scale(&self) -> f64 {
        1.0 / self.pow_gamma
    }

    /// Magnetization m = (2k - n)/n at lattice site k.
    pub fn m_of_k(&self, k: u64) -> f64 {
        debug_assert!(k <= self.n);
        (2 * k as i64 - self.n as i64) as f64 / self.n_f
    }

    /// Centered, rescaled coordinate eta_k = n^gamma (m_k - m0).
    pub fn eta(&self, k: u64) -> f64 {
        self.pow_gamma * (self.m_of_k(k) - self.consts.m0)
    }

    /// Rescaled potential: phi(eta) = -1/2 n^(1-2 gamma) eta^2 -
    /// n^(1-gamma) (m0 + h) eta. Stationary weights are C(n, k)
    /// exp(-beta phi(eta_k)) up to an eta-independent constant.
    pub fn phi(&self, eta: f64) -> f64 {
        let quad = self.n_f.powf(1.0 - 2.0 * self.gamma);
        let lin = self.n_f.powf(1.0 - self.gamma);
        -0.5 * quad * eta * eta - lin * (self.consts.m0 + self.h) * eta
    }

    /// phi(eta) - phi(eta + s * spacing) in closed form:
    /// 2 s n^(-gamma) eta + 2 s (m0 + h) + 2/n. The exponent of the MH
    /// acceptance ratio for a move in direction s is beta times this.
    pub fn phi_increment(&self, eta: f64, s: i8) -> f64 {
        debug_assert!(s == 1 || s == -1);
        let s = s as f64;
        2.0 * s * eta / self.pow_gamma + 2.0 * s * (self.consts.m0 + self.h) + 2.0 / self.n_f
    }

    /// Same increment evaluated directly in lattice coordinates,
    /// 2 s (m_k + h) + 2/n; avoids the m0 round trip, exact at h = 0.
    pub(crate) fn increment_at_k(&self, k: u64, s: i8) -> f64 {
        debug_assert!(s == 1 || s == -1);
        2.0 * s as f64 * (self.m_of_k(k) + self.h) + 2.0 / self.n_f
    }

    /// Integer window {k : |eta_k| <= n^delta}, realized as
    /// [ceil(n(1 + m0 - n^(delta-gamma))/2), floor(n(1 + m0 + n^(delta-gamma))/2)]
    /// clamped to the lattice.
    pub fn window(&self, delta: f64) -> (u64, u64) {
        let half = self.n_f.powf(delta - self.gamma);
        let lo = (self.n_f * (1.0 + self.consts.m0 - half) / 2.0).ceil();
        let hi = (self.n_f * (1.0 + self.consts.m0 + half) / 2.0).floor();
        let lo = lo.max(0.0) as u64;
        let hi = (hi.max(0.0) as u64).min(self.n);
        debug_assert!(lo <= hi, "empty window: n too small for delta");
        (lo, hi)
    }
}

/// Dense stationary law of the magnetization lattice.
#[derive(Debug, Clone)]
pub struct MagnetizationLaw {
    n: u64,
    gamma: f64,
    m0: f64,
    pow_gamma: f64,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Build the exact stationary law; log-space weights, normalized by
/// log-sum-exp. Capped at n = 1e7 sites.
pub fn exact_stationary_law(params: &ModelParams) -> Result<MagnetizationLaw, ModelError> {
    let n = params.n();
    if n > LAW_SIZE_CAP {
        return Err(ModelError::LawTooLarge { n, cap: LAW_SIZE_CAP });
    }
    let beta = params.beta();
    let h = params.h();
    let n_f = n as f64;
    let mut log_weights = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let m = params.m_of_k(k);
        log_weights.push(ln_binomial(n, k) + beta * n_f * (0.5 * m * m + h * m));
    }
    let log_z = log_sum_exp(&log_weights);
    let probs: Vec<f64> = log_weights.iter().map(|w| (w - log_z).exp()).collect();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = KahanSum::default();
    for &p in &probs {
        acc.add(p);
        cdf.push(acc.value());
    }
    Ok(MagnetizationLaw {
        n,
        gamma: params.gamma(),
        m0: params.m0(),
        pow_gamma: n_f.powf(params.gamma()),
        log_weights,
        probs,
        cdf,
    })
}

impl MagnetizationLaw {
    /// Wrap an externally computed probability vector (e.g. from the spin
    /// enumeration oracle) in law form, validating it is a distribution.
    pub fn from_probs(params: &ModelParams, probs: Vec<f64>) -> Result<Self, ModelError> {
        let want = params.n() as usize + 1;
        if probs.len() != want {
            return Err(ModelError::WrongLength { got: probs.len(), want });
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ModelError::NotADistribution(format!(
                "entry {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ModelError::NotADistribution(format!(
                "total mass {sum} differs from 1 by more than 1e-12"
            )));
        }
        let log_weights = probs.iter().map(|p| p.ln()).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = KahanSum::default();
        for &p in &probs {
            acc.add(p);
            cdf.push(acc.value());
        }
        Ok(MagnetizationLaw {
            n: params.n(),
            gamma: params.gamma(),
            m0: params.m0(),
            pow_gamma: (params.n() as f64).powf(params.gamma()),
            log_weights,
            probs,
            cdf,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.probs[k as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_weight(&self, k: u64) -> f64 {
        self.log_weights[k as usize]
    }

    /// P(K <= k).
    pub fn cdf_at(&self, k: u64) -> f64 {
        self.cdf[k as usize]
    }

    pub fn eta(&self, k: u64) -> f64 {
        self.pow_gamma * ((2 * k as i64 - self.n as i64) as f64 / self.n as f64 - self.m0)
    }

    /// Inverse-CDF draw of a lattice index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        (idx as u64).min(self.n)
    }

    pub fn mean_eta(&self) -> f64 {
        let mut acc = KahanSum::default();
        for k in 0..=self.n {
            acc.add(self.probs[k as usize] * self.eta(k));
        }
        acc.value()
    }

    pub fn var_eta(&self) -> f64 {
        let mean = self.mean_eta();
        let mut acc = KahanSum::default();
        for k in 0..=self.n {
            let d = self.eta(k) - mean;
            acc.add(self.probs[k as usize] * d * d);
        }
        acc.value()
    }

    /// Total mass at sites with |eta_k| > threshold (tail sums from both
    /// lattice ends; eta is monotone in k).
    pub fn mass_outside(&self, threshold: f64) -> f64 {
        let mut acc = KahanSum::default();
        for k in 0..=self.n {
            if self.eta(k) > -threshold {
                break;
            }
            if self.eta(k) < -threshold {
                acc.add(self.probs[k as usize]);
            }
        }
        for k in (0..=self.n).rev() {
            if self.eta(k) < threshold {
                break;
            }
            if self.eta(k) > threshold {
                acc.add(self.probs[k as usize]);
            }
        }
        acc.value()
    }

    /// Exact Kolmogorov distance against a continuous CDF evaluated in eta
    /// coordinates: both one-sided gaps at every atom.
    pub fn ks_against_cdf(&self, target: &dyn Fn(f64) -> f64) -> f64 {
        let mut best = 0.0f64;
        let mut prev = 0.0f64;
        for k in 0..=self.n {
            let g = target(self.eta(k));
            let here = self.cdf[k as usize];
            best = best.max((here - g).abs()).max((prev - g).abs());
            prev = here;
        }
        best
    }

    /// Exact Kolmogorov distance between this law and the empirical law of
    /// lattice counts (counts[k] = occurrences of site k). Both step
    /// functions jump only at lattice atoms, so scanning atoms is exact.
    pub fn ks_from_counts(&self, counts: &[u64]) -> Result<f64, ModelError> {
        if counts.len() != self.len() {
            return Err(ModelError::WrongLength { got: counts.len(), want: self.len() });
        }
        let total: u64 = counts.iter().sum();
        let total = total as f64;
        let mut emp = 0.0f64;
        let mut best = 0.0f64;
        for k in 0..=self.n {
            emp += counts[k as usize] as f64 / total;
            best = best.max((emp - self.cdf[k as usize]).abs());
        }
        Ok(best)
    }

    /// Wasserstein-1 distance against a continuous CDF: integral of
    /// |F_n - G| over the support, with Gaussian-scale tail padding.
    /// Quadrature accuracy ~1e-8; intended as a diagnostic companion to KS.
    pub fn wasserstein_against_cdf(&self, target: &dyn Fn(f64) -> f64) -> f64 {
        let mut acc = KahanSum::default();
        // Tails: below the lattice F_n = 0, above it F_n = 1.
        let lo = self.eta(0);
        let hi = self.eta(self.n);
        let pad = 12.0;
        acc.add(adaptive_simpson(&|y| target(y).abs(), lo - pad, lo, 1e-10));
        acc.add(adaptive_simpson(&|y| (1.0 - target(y)).abs(), hi, hi + pad, 1e-10));
        for k in 0..self.n {
            let f_here = self.cdf[k as usize];
            let a = self.eta(k);
            let b = self.eta(k + 1);
            acc.add(adaptive_simpson(&|y| (f_here - target(y)).abs(), a, b, 1e-11));
        }
        acc.value()
    }
}

/// The limiting stationary law of eta.
#[derive(Debug, Clone, Copy)]
pub enum LimitingLaw {
    /// Supercritical: centered Gaussian with variance v = a/l.
    Gaussian { variance: f64 },
    /// Critical: density proportional to exp(-y^4/12).
    Quartic,
}

struct QuarticTable {
    cdf: NumericCdf,
    z: f64,
    variance: f64,
}

fn quartic_table() -> &'static QuarticTable {
    static TABLE: OnceLock<QuarticTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let density = |y: f64| (-y.powi(4) / 12.0).exp();
        // exp(-8^4/12) ~ 1e-148: the grid holds all representable mass.
        let cdf = NumericCdf::build(&density, -8.0, 8.0, 16_000);
        let z = cdf.total_mass();
        let closed = 12f64.powf(0.25) * gamma(0.25) / 2.0;
        assert!(
            (z - closed).abs() <= 1e-8 * closed,
            "quartic normalization: quadrature {z} vs closed form {closed}"
        );
        let second = adaptive_simpson(&|y: f64| y * y * density(y), -8.0, 8.0, 1e-12);
        QuarticTable { cdf, z, variance: second / z }
    })
}

/// Limiting law for the given parameters: Gaussian N(0, v) when beta < 1,
/// the quartic law at beta = 1.
pub fn limiting_law(params: &ModelParams) -> LimitingLaw {
    match params.regime() {
        Regime::Supercritical => LimitingLaw::Gaussian {
            variance: params
                .consts()
                .v
                .expect("supercritical constants always carry v"),
        },
        Regime::Critical => LimitingLaw::Quartic,
    }
}

impl LimitingLaw {
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            LimitingLaw::Gaussian { variance } => {
                (-0.5 * y * y / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
            }
            LimitingLaw::Quartic => {
                let t = quartic_table();
                (-y.powi(4) / 12.0).exp() / t.z
            }
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            LimitingLaw::Gaussian { variance } => {
                0.5 * (1.0 + erf(y / (2.0 * variance).sqrt()))
            }
            LimitingLaw::Quartic => quartic_table().cdf.cdf(y),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            LimitingLaw::Gaussian { variance } => variance,
            LimitingLaw::Quartic => quartic_table().variance,
        }
    }
}

/// CDF of the standard quartic law (density exp(-u^4/12)/Z), shared with the
/// zig-zag stationary profile.
pub(crate) fn standard_quartic_cdf(u: f64) -> f64 {
    quartic_table().cdf.cdf(u)
}

pub(crate) fn standard_quartic_variance() -> f64 {
    quartic_table().variance
}

pub(crate) fn standard_quartic_norm() -> f64 {
    quartic_table().z
}
