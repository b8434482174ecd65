//! Small numeric kernels shared across the engine: log-space summation,
//! log-binomials, adaptive quadrature, tabulated CDFs, compensated sums.

use statrs::function::gamma::ln_gamma;

/// log(sum(exp(x_i))) with max-shift; -inf on an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// ln C(n, k). Exact to ~1e-14 relative via ln-gamma.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Two-sided Kolmogorov-Smirnov distance of a SORTED sample against a
/// continuous CDF: at each order statistic both the left gap (i/m below) and
/// the right gap ((i+1)/m above) are taken, which is where the supremum of
/// the empirical step function against a continuous target lives.
pub fn ks_sorted_both_gaps(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let m = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / m).abs());
        sup = sup.max((f - (i as f64 + 1.0) / m).abs());
    }
    sup
}

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Cumulative distribution tabulated on a uniform grid by per-cell Simpson
/// integration of a density. Query is linear interpolation; outside the grid
/// the CDF is clamped to 0 / total.
#[derive(Debug, Clone)]
pub struct NumericCdf {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
    total: f64,
}

impl NumericCdf {
    pub fn build(density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Self {
        assert!(hi > lo && cells >= 2, "degenerate grid");
        let step = (hi - lo) / cells as f64;
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut acc = KahanSum::default();
        let mut f_left = density(lo);
        for i in 0..cells {
            let a = lo + step * i as f64;
            let b = a + step;
            let fm = density(0.5 * (a + b));
            let f_right = density(b);
            acc.add(step / 6.0 * (f_left + 4.0 * fm + f_right));
            cum.push(acc.value());
            f_left = f_right;
        }
        let total = acc.value();
        NumericCdf { lo, step, cum, total }
    }

    /// Unnormalized mass of (-inf, y].
    pub fn mass_below(&self, y: f64) -> f64 {
        let pos = (y - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = (self.cum.len() - 1) as f64;
        if pos >= last {
            return self.total;
        }
        let idx = pos.floor() as usize;
        let frac = pos - idx as f64;
        self.cum[idx] + frac * (self.cum[idx + 1] - self.cum[idx])
    }

    /// Normalized CDF at y.
    pub fn cdf(&self, y: f64) -> f64 {
        self.mass_below(y) / self.total
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }
}

/// Kahan-Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
