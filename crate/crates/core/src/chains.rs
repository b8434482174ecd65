//! Transition kernels on the magnetization lattice.
//!
//! The unlifted chain proposes a uniformly random spin flip, which in lumped
//! coordinates is a +-1 step with probabilities q+ = (n-k)/n, q- = k/n, and
//! accepts with min(1, exp(beta * increment)) where the increment is the
//! closed-form potential difference (see `ModelParams::phi_increment`). The
//! lifted chain carries a direction replica j in {-1, +1}: it advances in
//! direction j with the MH probability for that direction, switches replica
//! with probability max(0, p_{-j} - p_j), and otherwise holds. Both kernels
//! leave the exact lattice law invariant; the lifted one is non-reversible.

use crate::model::{exact_stationary_law, MagnetizationLaw, ModelError, ModelParams, Regime};
use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

/// Hard cap on simulated steps per trajectory.
pub const STEP_BUDGET: u128 = 1 << 40;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("horizon must be finite and nonnegative, got {0}")]
    BadHorizon(f64),
    #[error("time exponent alpha must be finite and positive, got {0}")]
    BadAlpha(f64),
    #[error("trajectory needs {steps} steps, over the budget of 2^40")]
    StepBudget { steps: u128 },
    #[error("initial site {k} outside lattice 0..={n}")]
    InitOutsideLattice { k: u64, n: u64 },
    #[error("replica direction must be +1 or -1, got {0}")]
    BadDirection(i8),
    #[error("taylor order must be at most 3, got {0}")]
    BadTaylorOrder(u32),
    #[error("window exponent delta must lie in (0, gamma), got delta={delta} gamma={gamma}")]
    BadWindow { delta: f64, gamma: f64 },
}

/// Which chain a study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Mh,
    Lmh,
}

impl ChainKind {
    pub fn label(self) -> &'static str {
        match self {
            ChainKind::Mh => "mh",
            ChainKind::Lmh => "lmh",
        }
    }

    /// Standard time-scaling exponent for this chain in the given regime.
    pub fn alpha(self, regime: Regime) -> f64 {
        match self {
            ChainKind::Mh => regime.mh_alpha(),
            ChainKind::Lmh => regime.lmh_alpha(),
        }
    }
}

/// Position of the unlifted chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeState {
    pub k: u64,
}

/// Position plus direction replica of the lifted chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedState {
    pub state: LatticeState,
    pub j: i8,
}

/// One-step probabilities of the unlifted chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionProbs {
    pub p_plus: f64,
    pub p_minus: f64,
    pub hold: f64,
}

/// One-step probabilities of the lifted chain at a given replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedProbs {
    pub advance: f64,
    pub switch: f64,
    pub hold: f64,
}

/// Spin-flip proposal masses (up, down); exactly ((n-k)/n, k/n), so the
/// boundary exit mass is exactly zero.
pub fn rw_proposal(params: &ModelParams, state: LatticeState) -> (f64, f64) {
    let n = params.n();
    debug_assert!(state.k <= n);
    (
        (n - state.k) as f64 / n as f64,
        state.k as f64 / n as f64,
    )
}

/// Metropolis-Hastings one-step probabilities at site k.
pub fn mh_probs(params: &ModelParams, state: LatticeState) -> TransitionProbs {
    let (q_plus, q_minus) = rw_proposal(params, state);
    let beta = params.beta();
    let acc_plus = (beta * params.increment_at_k(state.k, 1)).exp().min(1.0);
    let acc_minus = (beta * params.increment_at_k(state.k, -1)).exp().min(1.0);
    let p_plus = q_plus * acc_plus;
    let p_minus = q_minus * acc_minus;
    TransitionProbs {
        p_plus,
        p_minus,
        hold: 1.0 - p_plus - p_minus,
    }
}

/// One MH step. Categorical order is fixed (up, down, hold) so a given
/// stream reproduces the same path on every run.
pub fn mh_step<R: Rng + ?Sized>(
    params: &ModelParams,
    state: LatticeState,
    rng: &mut R,
) -> LatticeState {
    let p = mh_probs(params, state);
    let u: f64 = rng.random();
    if u < p.p_plus {
        LatticeState { k: state.k + 1 }
    } else if u < p.p_plus + p.p_minus {
        LatticeState { k: state.k - 1 }
    } else {
        state
    }
}

/// Lifted one-step probabilities: advance with p_j, switch replica with
/// max(0, p_{-j} - p_j), hold with the rest (= 1 - max(p+, p-)).
pub fn lmh_probs(params: &ModelParams, state: LiftedState) -> LiftedProbs {
    debug_assert!(state.j == 1 || state.j == -1);
    let p = mh_probs(params, state.state);
    let (own, other) = if state.j == 1 {
        (p.p_plus, p.p_minus)
    } else {
        (p.p_minus, p.p_plus)
    };
    let switch = (other - own).max(0.0);
    LiftedProbs {
        advance: own,
        switch,
        hold: 1.0 - own - switch,
    }
}

/// One lifted step; categorical order advance, switch, hold.
pub fn lmh_step<R: Rng + ?Sized>(
    params: &ModelParams,
    state: LiftedState,
    rng: &mut R,
) -> LiftedState {
    let p = lmh_probs(params, state);
    let u: f64 = rng.random();
    if u < p.advance {
        let k = if state.j == 1 {
            state.state.k + 1
        } else {
            state.state.k - 1
        };
        LiftedState { state: LatticeState { k }, j: state.j }
    } else if u < p.advance + p.switch {
        LiftedState { state: state.state, j: -state.j }
    } else {
        state
    }
}

fn truncated_exp(x: f64, order: u32) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for i in 1..=order {
        term *= x / i as f64;
        sum += term;
    }
    sum
}

/// Piecewise Taylor reference probabilities of order <= 3.
///
/// With c = m0 + h, the acceptance factor for direction s is replaced by:
/// 1 when s*c > 0; the order-`order` Taylor polynomial of exp at
/// 2 s beta (m_k - m0) when c = 0 and s*eta < 0 (1 when s*eta >= 0);
/// exp(2 s beta c) times that polynomial when s*c < 0. The proposal factor
/// is kept exact. Used as the public test surface for the acceptance-ratio
/// expansions; the supremum gap to `mh_probs` vanishes as n grows.
pub fn taylor_probs(
    params: &ModelParams,
    state: LatticeState,
    order: u32,
) -> Result<(f64, f64), ChainError> {
    if order > 3 {
        return Err(ChainError::BadTaylorOrder(order));
    }
    let (q_plus, q_minus) = rw_proposal(params, state);
    let beta = params.beta();
    let c = params.m0() + params.h();
    let dev = params.m_of_k(state.k) - params.m0();
    let factor = |s: f64| -> f64 {
        if s * c > 0.0 {
            1.0
        } else if c == 0.0 {
            if s * dev >= 0.0 {
                1.0
            } else {
                truncated_exp(2.0 * s * beta * dev, order)
            }
        } else {
            (2.0 * s * beta * c).exp() * truncated_exp(2.0 * s * beta * dev, order)
        }
    };
    Ok((q_plus * factor(1.0), q_minus * factor(-1.0)))
}

/// How a trajectory is initialized.
#[derive(Debug, Clone, Copy)]
pub enum InitState {
    /// Draw k from the exact stationary law (and j uniform for the lifted
    /// chain). Builds the dense law internally; callers running many
    /// replicas should sample sites from one shared law and pass `Lattice`.
    Stationary,
    Lattice(u64),
    Lifted { k: u64, j: i8 },
}

/// Trajectory recording options.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Record every `record_stride`-th step (step 0 and the final step are
    /// always recorded).
    pub record_stride: u64,
    /// Embed steps at i.i.d. Exp(1)/n^alpha holding times instead of the
    /// deterministic step/n^alpha clock. Laws at fixed step count are
    /// identical; only timestamps differ.
    pub poissonized: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions { record_stride: 1, poissonized: false }
    }
}

/// A recorded trajectory in rescaled coordinates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Embedded times of the recorded steps.
    pub times: Vec<f64>,
    /// eta at the recorded steps.
    pub etas: Vec<f64>,
    /// Replica directions at the recorded steps (lifted chain only).
    pub js: Option<Vec<i8>>,
    /// Total steps simulated.
    pub steps: u64,
}

/// Run `ceil(t_end * n^alpha)` steps of the chosen chain.
pub fn run_trajectory<R: Rng + ?Sized>(
    params: &ModelParams,
    kind: ChainKind,
    alpha: f64,
    t_end: f64,
    init: InitState,
    opts: &TrajectoryOptions,
    rng: &mut R,
) -> Result<Trajectory, ChainError> {
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(ChainError::BadHorizon(t_end));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(ChainError::BadAlpha(alpha));
    }
    let clock = (params.n() as f64).powf(alpha);
    let steps_f = (t_end * clock).ceil();
    if steps_f as u128 > STEP_BUDGET {
        return Err(ChainError::StepBudget { steps: steps_f as u128 });
    }
    let steps = steps_f as u64;
    let stride = opts.record_stride.max(1);

    let (mut k, mut j) = match init {
        InitState::Stationary => {
            let law = exact_stationary_law(params)?;
            let k = law.sample(rng);
            let j: i8 = if rng.random::<f64>() < 0.5 { 1 } else { -1 };
            (k, j)
        }
        InitState::Lattice(k) => (k, 1),
        InitState::Lifted { k, j } => (k, j),
    };
    if k > params.n() {
        return Err(ChainError::InitOutsideLattice { k, n: params.n() });
    }
    if j != 1 && j != -1 {
        return Err(ChainError::BadDirection(j));
    }

    let capacity = (steps / stride + 2) as usize;
    let mut times = Vec::with_capacity(capacity);
    let mut etas = Vec::with_capacity(capacity);
    let mut js = match kind {
        ChainKind::Mh => None,
        ChainKind::Lmh => Some(Vec::with_capacity(capacity)),
    };
    let mut clock_time = 0.0f64;
    let mut record = |step: u64, t: f64, k: u64, j: i8| {
        times.push(t);
        etas.push(params.eta(k));
        if let Some(js) = js.as_mut() {
            js.push(j);
        }
        let _ = step;
    };
    record(0, 0.0, k, j);
    for step in 1..=steps {
        match kind {
            ChainKind::Mh => {
                k = mh_step(params, LatticeState { k }, rng).k;
            }
            ChainKind::Lmh => {
                let next = lmh_step(params, LiftedState { state: LatticeState { k }, j }, rng);
                k = next.state.k;
                j = next.j;
            }
        }
        clock_time = if opts.poissonized {
            clock_time + rng.sample::<f64, _>(Exp1) / clock
        } else {
            step as f64 / clock
        };
        if step % stride == 0 || step == steps {
            record(step, clock_time, k, j);
        }
    }
    Ok(Trajectory { times, etas, js, steps })
}

/// The six limit statistics checked on the concentration window.
///
/// Each compares an exactly computed one-step quantity, rescaled by the
/// regime's clock, against its limiting counterpart:
/// second moment 4(p+ + p-) vs sigma^2; drift 2 n^(1-gamma) (p+ - p-) vs
/// -2 l eta (supercritical) or -(2/3) eta^3 (critical); lifted advance
/// 2 p_j vs a; lifted switching rate n^(1-gamma) max(0, p_{-j} - p_j) vs
/// max(0, j l eta) (supercritical) or max(0, (1/3) j eta^3) (critical).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaStatistic {
    MhSecondMoment,
    MhDriftSupercritical,
    MhDriftCritical,
    LmhDrift,
    LmhSwitchSupercritical,
    LmhSwitchCritical,
}

impl LemmaStatistic {
    pub const ALL: [LemmaStatistic; 6] = [
        LemmaStatistic::MhSecondMoment,
        LemmaStatistic::MhDriftSupercritical,
        LemmaStatistic::MhDriftCritical,
        LemmaStatistic::LmhDrift,
        LemmaStatistic::LmhSwitchSupercritical,
        LemmaStatistic::LmhSwitchCritical,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LemmaStatistic::MhSecondMoment => "mh-second-moment",
            LemmaStatistic::MhDriftSupercritical => "mh-drift-supercritical",
            LemmaStatistic::MhDriftCritical => "mh-drift-critical",
            LemmaStatistic::LmhDrift => "lmh-drift",
            LemmaStatistic::LmhSwitchSupercritical => "lmh-switch-supercritical",
            LemmaStatistic::LmhSwitchCritical => "lmh-switch-critical",
        }
    }

    pub fn is_critical(self) -> bool {
        matches!(
            self,
            LemmaStatistic::MhDriftCritical | LemmaStatistic::LmhSwitchCritical
        )
    }

    /// Standard evaluation point: (beta, h, delta). Supercritical checks run
    /// at beta = 0.5, h = 0 with window exponent 1/8; critical ones at
    /// beta = 1, h = 0 with window exponent 1/32.
    pub fn standard_setup(self) -> (f64, f64, f64) {
        if self.is_critical() {
            (1.0, 0.0, 1.0 / 32.0)
        } else {
            (0.5, 0.0, 0.125)
        }
    }
}

/// Supremum of one statistic over the window, with its witness site.
#[derive(Debug, Clone, Copy)]
pub struct LemmaSupremum {
    pub value: f64,
    pub arg_k: u64,
    pub arg_eta: f64,
}

/// Exact supremum of `stat` over {k : |eta_k| <= n^delta}. No sampling:
/// probabilities are evaluated exactly at every window site.
pub fn lemma_supremum(
    stat: LemmaStatistic,
    params: &ModelParams,
    delta: f64,
) -> Result<LemmaSupremum, ChainError> {
    if !(delta > 0.0 && delta < params.gamma()) {
        return Err(ChainError::BadWindow { delta, gamma: params.gamma() });
    }
    let consts = *params.consts();
    let scale = (params.n() as f64).powf(1.0 - params.gamma());
    let (lo, hi) = params.window(delta);
    let mut best = LemmaSupremum { value: -1.0, arg_k: lo, arg_eta: params.eta(lo) };
    for k in lo..=hi {
        let eta = params.eta(k);
        let p = mh_probs(params, LatticeState { k });
        let value = match stat {
            LemmaStatistic::MhSecondMoment => {
                (4.0 * (p.p_plus + p.p_minus) - consts.sigma * consts.sigma).abs()
            }
            LemmaStatistic::MhDriftSupercritical => {
                (2.0 * scale * (p.p_plus - p.p_minus) + 2.0 * consts.l * eta).abs()
            }
            LemmaStatistic::MhDriftCritical => {
                (2.0 * scale * (p.p_plus - p.p_minus) + 2.0 / 3.0 * eta.powi(3)).abs()
            }
            LemmaStatistic::LmhDrift => (2.0 * p.p_plus - consts.a)
                .abs()
                .max((2.0 * p.p_minus - consts.a).abs()),
            LemmaStatistic::LmhSwitchSupercritical => {
                let up = (p.p_minus - p.p_plus).max(0.0);
                let down = (p.p_plus - p.p_minus).max(0.0);
                (scale * up - (consts.l * eta).max(0.0))
                    .abs()
                    .max((scale * down - (-consts.l * eta).max(0.0)).abs())
            }
            LemmaStatistic::LmhSwitchCritical => {
                let up = (p.p_minus - p.p_plus).max(0.0);
                let down = (p.p_plus - p.p_minus).max(0.0);
                let target = eta.powi(3) / 3.0;
                (scale * up - target.max(0.0))
                    .abs()
                    .max((scale * down - (-target).max(0.0)).abs())
            }
        };
        if value > best.value {
            best = LemmaSupremum { value, arg_k: k, arg_eta: eta };
        }
    }
    Ok(best)
}

/// One statistic's supremum ladder over a list of lattice sizes.
#[derive(Debug, Clone)]
pub struct LemmaTable {
    pub statistic: LemmaStatistic,
    pub beta: f64,
    pub h: f64,
    pub delta: f64,
    /// (n, supremum) rows in the given n order.
    pub rows: Vec<(u64, f64)>,
}

/// All six statistics at their standard setups over `n_list`.
pub fn standard_lemma_suite(n_list: &[u64]) -> Result<Vec<LemmaTable>, ChainError> {
    let mut tables = Vec::with_capacity(LemmaStatistic::ALL.len());
    for stat in LemmaStatistic::ALL {
        let (beta, h, delta) = stat.standard_setup();
        let mut rows = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let params = ModelParams::new(beta, h, n)?;
            rows.push((n, lemma_supremum(stat, &params, delta)?.value));
        }
        tables.push(LemmaTable { statistic: stat, beta, h, delta, rows });
    }
    Ok(tables)
}

/// Supremum of n^r * |exact - taylor| over the window, both directions.
pub fn taylor_supremum(
    params: &ModelParams,
    order: u32,
    r: f64,
    delta: f64,
) -> Result<f64, ChainError> {
    if !(delta > 0.0 && delta < params.gamma()) {
        return Err(ChainError::BadWindow { delta, gamma: params.gamma() });
    }
    let scale = (params.n() as f64).powf(r);
    let (lo, hi) = params.window(delta);
    let mut best = 0.0f64;
    for k in lo..=hi {
        let state = LatticeState { k };
        let exact = mh_probs(params, state);
        let (tp, tm) = taylor_probs(params, state, order)?;
        best = best
            .max(scale * (exact.p_plus - tp).abs())
            .max(scale * (exact.p_minus - tm).abs());
    }
    Ok(best)
}

/// Convenience: stationary-law draw shared across tests and the CLI.
pub fn sample_stationary<R: Rng + ?Sized>(law: &MagnetizationLaw, rng: &mut R) -> u64 {
    law.sample(rng)
}
