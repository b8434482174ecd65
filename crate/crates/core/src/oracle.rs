//! Dense-matrix ground truth for small lattices.
//!
//! Matrices are assembled entry by entry from the same one-step probabilities
//! the samplers draw from, so every chain-level claim (stationarity, exact
//! reversibility or its deliberate absence, mixing order) can be checked by
//! direct linear algebra instead of Monte Carlo. Everything here trades
//! performance for exhaustiveness; size caps keep that trade affordable.

use crate::chains::{lmh_probs, mh_probs, LatticeState, LiftedState};
use crate::math::KahanSum;
use crate::model::{exact_stationary_law, MagnetizationLaw, ModelError, ModelParams};
use thiserror::Error;

/// Largest lattice for which dense matrices are built. The lifted matrix at
/// this cap is 2(n+1) square, about half a gigabyte; tests stay far below.
pub const DENSE_N_CAP: u64 = 4096;

/// Largest spin count for literal enumeration of all 2^n configurations.
pub const SPIN_N_CAP: u64 = 20;

/// Work ceiling for iterated matrix-vector products (entries touched).
const ITERATION_FLOP_CAP: u128 = 1 << 38;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("lattice size n = {0} exceeds the dense-matrix cap {DENSE_N_CAP}")]
    TooLarge(u64),
    #[error("spin enumeration needs n <= {SPIN_N_CAP}, got {0}")]
    SpinTooLarge(u64),
    #[error("matrix needs {expected} entries for size {size}, got {got}")]
    WrongLength { size: usize, expected: usize, got: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("stationary vector is not a distribution (sum {0})")]
    BadStationary(f64),
    #[error("state index {state} out of range for {size} states")]
    BadState { state: usize, size: usize },
    #[error("time grid must be nondecreasing")]
    UnsortedGrid,
    #[error("iteration budget exceeded: {0} matrix-vector entries")]
    IterationBudget(u128),
    #[error("power iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}

/// Row index of the lifted state (k, j) in the 2(n+1)-state matrix.
/// The forward replica (j = +1) occupies the first block.
pub fn lifted_index(n: u64, k: u64, j: i8) -> usize {
    debug_assert!(k <= n);
    debug_assert!(j == 1 || j == -1);
    let block = if j == 1 { 0 } else { n as usize + 1 };
    block + k as usize
}

/// A finite Markov chain held as a full row-major transition matrix together
/// with the distribution its builder claims is stationary. Validation checks
/// stochasticity only; invariance of the claimed vector is measured, not
/// assumed, so residual methods can be used as tests.
pub struct DenseChain {
    size: usize,
    rows: Vec<f64>,
    stationary: Vec<f64>,
}

impl DenseChain {
    /// Rows must be stochastic to 1e-13 with nonnegative entries; the
    /// stationary vector must be a distribution to 1e-12.
    pub fn from_parts(
        size: usize,
        rows: Vec<f64>,
        stationary: Vec<f64>,
    ) -> Result<Self, OracleError> {
        if rows.len() != size * size {
            return Err(OracleError::WrongLength {
                size,
                expected: size * size,
                got: rows.len(),
            });
        }
        if stationary.len() != size {
            return Err(OracleError::WrongLength {
                size,
                expected: size,
                got: stationary.len(),
            });
        }
        for row in 0..size {
            let mut sum = KahanSum::default();
            for col in 0..size {
                let value = rows[row * size + col];
                if value < 0.0 || value.is_nan() {
                    return Err(OracleError::NegativeEntry { row, col, value });
                }
                sum.add(value);
            }
            let sum = sum.value();
            if (sum - 1.0).abs() > 1e-13 {
                return Err(OracleError::RowNotStochastic { row, sum });
            }
        }
        let mut total = KahanSum::default();
        for (row, &value) in stationary.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(OracleError::NegativeEntry { row, col: 0, value });
            }
            total.add(value);
        }
        let total = total.value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OracleError::BadStationary(total));
        }
        Ok(Self { size, rows, stationary })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.rows[row * self.size + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row * self.size..(row + 1) * self.size]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// One application of the transition matrix to a row distribution.
    pub fn step_distribution(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![KahanSum::default(); self.size];
        for (row, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let base = row * self.size;
            for (col, acc) in out.iter_mut().enumerate() {
                acc.add(mass * self.rows[base + col]);
            }
        }
        out.into_iter().map(|s| s.value()).collect()
    }

    /// max_y |(pi P)(y) - pi(y)| for the stored stationary vector.
    pub fn stationarity_residual(&self) -> f64 {
        let next = self.step_distribution(&self.stationary);
        next.iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|: zero iff reversible.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.size {
            for y in (x + 1)..self.size {
                let flux = self.stationary[x] * self.entry(x, y)
                    - self.stationary[y] * self.entry(y, x);
                worst = worst.max(flux.abs());
            }
        }
        worst
    }

    /// Total variation distance of `dist` from the stored stationary vector.
    pub fn tv_from_stationary(&self, dist: &[f64]) -> f64 {
        let mut sum = KahanSum::default();
        for (a, b) in dist.iter().zip(&self.stationary) {
            sum.add((a - b).abs());
        }
        0.5 * sum.value()
    }

    /// TV distance of delta_{from_state} P^t from stationary at each t of a
    /// nondecreasing grid, by iterated vector-matrix products.
    pub fn tv_mixing_profile(
        &self,
        from_state: usize,
        t_grid: &[u64],
    ) -> Result<Vec<f64>, OracleError> {
        if from_state >= self.size {
            return Err(OracleError::BadState { state: from_state, size: self.size });
        }
        if t_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(OracleError::UnsortedGrid);
        }
        if let Some(&t_max) = t_grid.last() {
            let work = t_max as u128 * (self.size as u128).pow(2);
            if work > ITERATION_FLOP_CAP {
                return Err(OracleError::IterationBudget(work));
            }
        }
        let mut dist = vec![0.0; self.size];
        dist[from_state] = 1.0;
        let mut t_now = 0u64;
        let mut out = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            while t_now < t {
                dist = self.step_distribution(&dist);
                t_now += 1;
            }
            out.push(self.tv_from_stationary(&dist));
        }
        Ok(out)
    }

    /// Smallest t <= t_cap with TV(delta_{from_state} P^t, pi) < threshold.
    pub fn steps_to_tv_below(
        &self,
        from_state: usize,
        threshold: f64,
        t_cap: u64,
    ) -> Result<Option<u64>, OracleError> {
        if from_state >= self.size {
            return Err(OracleError::BadState { state: from_state, size: self.size });
        }
        let work = t_cap as u128 * (self.size as u128).pow(2);
        if work > ITERATION_FLOP_CAP {
            return Err(OracleError::IterationBudget(work));
        }
        let mut dist = vec![0.0; self.size];
        dist[from_state] = 1.0;
        for t in 0..=t_cap {
            if self.tv_from_stationary(&dist) < threshold {
                return Ok(Some(t));
            }
            dist = self.step_distribution(&dist);
        }
        Ok(None)
    }

    /// Stationary vector recovered by power iteration with Cesaro averaging
    /// over blocks of 100 sweeps. Averaging makes the iteration robust to the
    /// near-period-2 behaviour of strongly lifted dynamics. Convergence is
    /// declared when a block mean is invariant to `tol` in the max norm.
    pub fn power_stationary(&self, max_sweeps: usize, tol: f64) -> Result<Vec<f64>, OracleError> {
        const BLOCK: usize = 100;
        let uniform = 1.0 / self.size as f64;
        let mut dist = vec![uniform; self.size];
        let mut sweeps = 0usize;
        while sweeps < max_sweeps {
            let mut mean = vec![KahanSum::default(); self.size];
            for _ in 0..BLOCK {
                dist = self.step_distribution(&dist);
                for (m, &d) in mean.iter_mut().zip(&dist) {
                    m.add(d);
                }
                sweeps += 1;
            }
            let mean: Vec<f64> = mean.into_iter().map(|s| s.value() / BLOCK as f64).collect();
            let next = self.step_distribution(&mean);
            let residual = next
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual < tol {
                return Ok(mean);
            }
        }
        Err(OracleError::NoConvergence(max_sweeps))
    }
}

/// Dense transition matrix of the magnetization Metropolis chain on
/// {0, ..., n}, with the exact stationary law attached. Tridiagonal by
/// construction: only k -> k-1, k, k+1 receive mass.
pub fn build_mh_matrix(params: &ModelParams) -> Result<DenseChain, OracleError> {
    let n = params.n();
    if n > DENSE_N_CAP {
        return Err(OracleError::TooLarge(n));
    }
    let size = n as usize + 1;
    let law = exact_stationary_law(params)?;
    let mut rows = vec![0.0; size * size];
    for k in 0..=n {
        let probs = mh_probs(params, LatticeState { k });
        let row = k as usize * size;
        if k > 0 {
            rows[row + k as usize - 1] = probs.p_minus;
        }
        if k < n {
            rows[row + k as usize + 1] = probs.p_plus;
        }
        rows[row + k as usize] = probs.hold;
    }
    DenseChain::from_parts(size, rows, law.probs().to_vec())
}

/// Dense transition matrix of the lifted chain on {0..n} x {+1, -1}, with
/// the half-and-half lifted law attached. Block layout: forward replica
/// first, switches on the diagonal between blocks.
pub fn build_lmh_matrix(params: &ModelParams) -> Result<DenseChain, OracleError> {
    let n = params.n();
    if n > DENSE_N_CAP {
        return Err(OracleError::TooLarge(n));
    }
    let size = 2 * (n as usize + 1);
    let law = exact_stationary_law(params)?;
    let mut rows = vec![0.0; size * size];
    for k in 0..=n {
        for j in [1i8, -1] {
            let row = lifted_index(n, k, j) * size;
            let probs = lmh_probs(params, LiftedState { state: LatticeState { k }, j });
            let target = k as i64 + j as i64;
            if (0..=n as i64).contains(&target) {
                rows[row + lifted_index(n, target as u64, j)] = probs.advance;
            } else {
                // Advance off the lattice has probability zero already; the
                // assert keeps the indexing honest.
                debug_assert_eq!(probs.advance, 0.0);
            }
            rows[row + lifted_index(n, k, -j)] = probs.switch;
            rows[row + lifted_index(n, k, j)] += probs.hold;
        }
    }
    let mut stationary = vec![0.0; size];
    for k in 0..=n {
        stationary[lifted_index(n, k, 1)] = 0.5 * law.prob(k);
        stationary[lifted_index(n, k, -1)] = 0.5 * law.prob(k);
    }
    DenseChain::from_parts(size, rows, stationary)
}

/// max_k |pi(k) T+(k, k+1) - pi(k+1) T-(k+1, k)|: the within-replica flux
/// balance that the lifting construction guarantees exactly.
pub fn skew_balance_residual(params: &ModelParams) -> Result<f64, OracleError> {
    let n = params.n();
    let law = exact_stationary_law(params)?;
    let mut worst = 0.0f64;
    for k in 0..n {
        let up = lmh_probs(params, LiftedState { state: LatticeState { k }, j: 1 }).advance;
        let down =
            lmh_probs(params, LiftedState { state: LatticeState { k: k + 1 }, j: -1 }).advance;
        worst = worst.max((law.prob(k) * up - law.prob(k + 1) * down).abs());
    }
    Ok(worst)
}

/// max_k |(T+-(k) - T-+(k)) - sum_y (T-(k,y) - T+(k,y))|: the replica-switch
/// rates must absorb exactly the within-replica rate imbalance.
pub fn row_sum_identity_residual(params: &ModelParams) -> Result<f64, OracleError> {
    let n = params.n();
    let mut worst = 0.0f64;
    for k in 0..=n {
        let fwd = lmh_probs(params, LiftedState { state: LatticeState { k }, j: 1 });
        let bwd = lmh_probs(params, LiftedState { state: LatticeState { k }, j: -1 });
        // fwd.advance = T+(k, k+1), bwd.advance = T-(k, k-1); these are the
        // only off-diagonal within-replica entries.
        let imbalance = bwd.advance - fwd.advance;
        worst = worst.max(((fwd.switch - bwd.switch) - imbalance).abs());
    }
    Ok(worst)
}

/// The (x, y, |flux gap|) maximizing |mu(x) T(x,y) - mu(y) T(y,x)|, or None
/// when every pair balances to 1e-13 (a reversible chain).
pub fn nonreversibility_witness(chain: &DenseChain) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for x in 0..chain.size() {
        for y in (x + 1)..chain.size() {
            let gap = (chain.stationary()[x] * chain.entry(x, y)
                - chain.stationary()[y] * chain.entry(y, x))
            .abs();
            if best.is_none_or(|(_, _, g)| gap > g) {
                best = Some((x, y, gap));
            }
        }
    }
    best.filter(|&(_, _, gap)| gap > 1e-13)
}

/// Stationary magnetization law obtained by literal summation over all 2^n
/// spin configurations, grouped by up-spin count. Independent of the
/// binomial-weight construction: each configuration contributes its own
/// Boltzmann factor, one term at a time.
pub fn spin_enumeration_law(beta: f64, h: f64, n: u64) -> Result<MagnetizationLaw, OracleError> {
    if n > SPIN_N_CAP {
        return Err(OracleError::SpinTooLarge(n));
    }
    let params = ModelParams::new(beta, h, n)?;
    let n_f = n as f64;
    let mut sums = vec![KahanSum::default(); n as usize + 1];
    for config in 0u64..(1u64 << n) {
        let k = config.count_ones() as usize;
        let m = (2.0 * k as f64 - n_f) / n_f;
        sums[k].add((beta * n_f * (0.5 * m * m + h * m)).exp());
    }
    let mut total = KahanSum::default();
    for s in &sums {
        total.add(s.value());
    }
    let total = total.value();
    let probs = sums.into_iter().map(|s| s.value() / total).collect();
    Ok(MagnetizationLaw::from_probs(&params, probs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, h: f64, n: u64) -> ModelParams {
        ModelParams::new(beta, h, n).unwrap()
    }

    #[test]
    fn mh_matrix_two_site_walk() {
        // n = 2, beta = 0: free walk on {0, 1, 2} with law (1/4, 1/2, 1/4).
        let chain = build_mh_matrix(&params(0.0, 0.0, 2)).unwrap();
        assert_eq!(chain.size(), 3);
        assert_eq!(chain.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(chain.row(1), &[0.5, 0.0, 0.5]);
        assert_eq!(chain.row(2), &[0.0, 1.0, 0.0]);
        // The law itself passes through log-weights, so compare to 1e-14.
        for (got, want) in chain.stationary().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(chain.stationarity_residual() < 1e-14);
    }

    #[test]
    fn mh_matrix_is_tridiagonal_and_stationary() {
        for (beta, h) in [(0.5, 0.0), (0.5, 0.3), (0.9, 0.3), (1.0, 0.0)] {
            let chain = build_mh_matrix(&params(beta, h, 8)).unwrap();
            for x in 0..chain.size() {
                for y in 0..chain.size() {
                    if x.abs_diff(y) > 1 {
                        assert_eq!(chain.entry(x, y), 0.0, "({x},{y}) beta={beta} h={h}");
                    }
                }
            }
            assert!(
                chain.stationarity_residual() < 1e-13,
                "stationarity at beta={beta} h={h}"
            );
            assert!(
                chain.detailed_balance_residual() < 1e-13,
                "reversibility at beta={beta} h={h}"
            );
            assert!(nonreversibility_witness(&chain).is_none());
        }
    }

    #[test]
    fn lmh_matrix_invariance_and_nonreversibility() {
        let chain = build_lmh_matrix(&params(0.5, 0.3, 8)).unwrap();
        assert_eq!(chain.size(), 18);
        assert!(chain.stationarity_residual() < 1e-13);
        // Lifting is built to be non-reversible: some pair carries net flux.
        let (x, y, gap) = nonreversibility_witness(&chain).expect("witness");
        assert!(gap > 1e-3, "flux gap {gap} at ({x},{y})");
    }

    #[test]
    fn lmh_matrix_free_walk_entries() {
        // n = 2, beta = 0. From (k=1, +1): advance 1/2 to (2, +1), no switch
        // (p- = p+), hold 1/2. Lifted law is half the free law per replica.
        let chain = build_lmh_matrix(&params(0.0, 0.0, 2)).unwrap();
        let n = 2;
        let row = lifted_index(n, 1, 1);
        assert_eq!(chain.entry(row, lifted_index(n, 2, 1)), 0.5);
        assert_eq!(chain.entry(row, lifted_index(n, 1, -1)), 0.0);
        assert_eq!(chain.entry(row, lifted_index(n, 1, 1)), 0.5);
        // Edge state (2, +1): advance impossible, switch = p- - p+ = 1.
        let edge = lifted_index(n, 2, 1);
        assert_eq!(chain.entry(edge, lifted_index(n, 2, -1)), 1.0);
        let expected = [0.125, 0.25, 0.125, 0.125, 0.25, 0.125];
        for (i, &e) in expected.iter().enumerate() {
            assert!((chain.stationary()[i] - e).abs() < 1e-15);
        }
        assert!(chain.stationarity_residual() < 1e-15);
    }

    #[test]
    fn skew_and_row_sum_residuals_vanish_exhaustively() {
        for n in [8u64, 16, 64] {
            for beta in [0.0, 0.5, 0.9, 1.0] {
                for h in [0.0, 0.3] {
                    if beta == 1.0 && h != 0.0 {
                        continue;
                    }
                    let p = params(beta, h, n);
                    let skew = skew_balance_residual(&p).unwrap();
                    assert!(skew < 1e-13, "skew {skew} at n={n} beta={beta} h={h}");
                    let rowsum = row_sum_identity_residual(&p).unwrap();
                    assert!(rowsum < 1e-14, "rowsum {rowsum} at n={n} beta={beta} h={h}");
                }
            }
        }
    }

    #[test]
    fn lifted_invariance_exhaustive_grid() {
        for n in [4u64, 8, 16, 32, 64] {
            for beta in [0.0, 0.5, 0.9, 1.0] {
                for h in [0.0, 0.3] {
                    if beta == 1.0 && h != 0.0 {
                        continue;
                    }
                    let chain = build_lmh_matrix(&params(beta, h, n)).unwrap();
                    let r = chain.stationarity_residual();
                    assert!(r < 1e-13, "residual {r} at n={n} beta={beta} h={h}");
                }
            }
        }
    }

    #[test]
    fn spin_enumeration_matches_lumped_law() {
        for n in 2..=12u64 {
            for (beta, h) in [(0.0, 0.0), (0.5, 0.0), (0.5, 0.2), (1.0, 0.0)] {
                let by_spins = spin_enumeration_law(beta, h, n).unwrap();
                let by_weights = exact_stationary_law(&params(beta, h, n)).unwrap();
                for k in 0..=n {
                    let diff = (by_spins.prob(k) - by_weights.prob(k)).abs();
                    assert!(diff < 1e-12, "n={n} beta={beta} h={h} k={k}: {diff}");
                }
            }
        }
    }

    #[test]
    fn spin_enumeration_free_and_tilted_examples() {
        let free = spin_enumeration_law(0.0, 0.0, 2).unwrap();
        assert!((free.prob(0) - 0.25).abs() < 1e-15);
        assert!((free.prob(1) - 0.5).abs() < 1e-15);
        assert!((free.prob(2) - 0.25).abs() < 1e-15);
        // Positive field tilts the mean magnetization positive.
        let tilted = spin_enumeration_law(0.5, 0.2, 3).unwrap();
        let mean_m: f64 = (0..=3u64)
            .map(|k| tilted.prob(k) * (2.0 * k as f64 - 3.0) / 3.0)
            .sum();
        assert!(mean_m > 0.0);
    }

    #[test]
    fn tv_profile_starts_at_point_mass_and_never_increases() {
        let chain = build_mh_matrix(&params(0.5, 0.0, 16)).unwrap();
        let grid: Vec<u64> = (0..=200).collect();
        let tv = chain.tv_mixing_profile(0, &grid).unwrap();
        assert!((tv[0] - (1.0 - chain.stationary()[0])).abs() < 1e-15);
        for w in tv.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "TV increased: {} -> {}", w[0], w[1]);
        }
        assert!(*tv.last().unwrap() < 0.05);
    }

    #[test]
    fn tv_profile_identity_chain_is_constant() {
        let size = 4;
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        let stationary = vec![0.25; size];
        let chain = DenseChain::from_parts(size, rows, stationary).unwrap();
        let tv = chain.tv_mixing_profile(2, &[0, 5, 50]).unwrap();
        assert_eq!(tv[0], tv[1]);
        assert_eq!(tv[1], tv[2]);
    }

    #[test]
    fn lifted_chain_mixes_faster_in_tv() {
        // Displaced start at the lattice edge; count steps to TV < 1/4.
        let p = params(0.5, 0.0, 64);
        let mh = build_mh_matrix(&p).unwrap();
        let lmh = build_lmh_matrix(&p).unwrap();
        let mh_steps = mh.steps_to_tv_below(0, 0.25, 100_000).unwrap().unwrap();
        let lmh_steps = lmh
            .steps_to_tv_below(lifted_index(64, 0, 1), 0.25, 100_000)
            .unwrap()
            .unwrap();
        assert!(
            lmh_steps < mh_steps,
            "lifted {lmh_steps} steps vs reversible {mh_steps}"
        );
    }

    #[test]
    fn power_iteration_recovers_lifted_invariant() {
        for n in [16u64, 64] {
            let chain = build_lmh_matrix(&params(0.9, 0.3, n)).unwrap();
            let pi = chain.power_stationary(200_000, 1e-12).unwrap();
            let worst = pi
                .iter()
                .zip(chain.stationary())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-10, "n={n}: power iteration off by {worst}");
        }
    }

    #[test]
    fn from_parts_rejects_malformed_input() {
        let bad_sum = DenseChain::from_parts(2, vec![0.5, 0.4, 0.5, 0.5], vec![0.5, 0.5]);
        assert!(matches!(bad_sum, Err(OracleError::RowNotStochastic { row: 0, .. })));
        let negative = DenseChain::from_parts(2, vec![1.5, -0.5, 0.0, 1.0], vec![0.5, 0.5]);
        assert!(matches!(negative, Err(OracleError::NegativeEntry { .. })));
        let short = DenseChain::from_parts(2, vec![1.0, 0.0, 1.0], vec![0.5, 0.5]);
        assert!(matches!(short, Err(OracleError::WrongLength { .. })));
        let bad_pi = DenseChain::from_parts(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.7, 0.5]);
        assert!(matches!(bad_pi, Err(OracleError::BadStationary(_))));
    }

    #[test]
    fn size_guards() {
        assert!(matches!(
            build_mh_matrix(&params(0.5, 0.0, DENSE_N_CAP + 1)),
            Err(OracleError::TooLarge(_))
        ));
        assert!(matches!(
            build_lmh_matrix(&params(0.5, 0.0, DENSE_N_CAP + 1)),
            Err(OracleError::TooLarge(_))
        ));
        assert!(matches!(
            spin_enumeration_law(0.5, 0.0, SPIN_N_CAP + 1),
            Err(OracleError::SpinTooLarge(_))
        ));
    }

    #[test]
    fn profile_rejects_bad_inputs() {
        let chain = build_mh_matrix(&params(0.5, 0.0, 8)).unwrap();
        assert!(matches!(
            chain.tv_mixing_profile(99, &[0]),
            Err(OracleError::BadState { .. })
        ));
        assert!(matches!(
            chain.tv_mixing_profile(0, &[5, 3]),
            Err(OracleError::UnsortedGrid)
        ));
    }
}
