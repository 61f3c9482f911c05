//! Sparse active user detection.
//!
//! Each subcarrier is solved independently with sparsity-adaptive matching
//! pursuit, the per-subcarrier supports are combined by a threshold vote, and
//! an l1 (ISTA) solver plus an exhaustive search are provided as references.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::{correlations, least_squares, regularized_solve, spectral_norm_sq, top_k, CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Stage size increment `s`; stage `θ` selects `s·θ` columns.
    pub step_size: usize,
    pub vote_threshold: f64,
    pub max_stages: usize,
    /// Stop when `||r|| <= residual_tolerance * ||y||`.
    pub residual_tolerance: f64,
    /// Stop when `||r|| <= noise_floor` (absolute). Zero for noiseless use.
    pub noise_floor: f64,
    /// Support cap; `None` means the number of antennas M.
    pub max_support: Option<usize>,
    /// Refit coefficients with magnitude above this are declared active.
    pub coefficient_threshold: f64,
    /// Ridge for rank-deficient refits.
    pub ridge: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            step_size: 1,
            vote_threshold: 0.5,
            max_stages: 64,
            residual_tolerance: 1e-6,
            noise_floor: 0.0,
            max_support: None,
            coefficient_threshold: 0.5,
            ridge: 1e-10,
        }
    }
}

impl RecoveryConfig {
    /// Residual floor matched to `CN(0, noise_variance)` noise on `m` antennas:
    /// `sqrt(margin * m * noise_variance)`.
    pub fn noise_floor_for(m: usize, noise_variance: f64, margin: f64) -> f64 {
        (margin * m as f64 * noise_variance).sqrt()
    }

    pub fn support_cap(&self, m: usize) -> usize {
        self.max_support.unwrap_or(m)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        ensure(self.step_size >= 1, || "step_size must be >= 1".into())?;
        ensure(self.vote_threshold > 0.0 && self.vote_threshold <= 1.0, || {
            format!("vote_threshold {} outside (0,1]", self.vote_threshold)
        })?;
        ensure(self.max_stages >= 1, || "max_stages must be >= 1".into())?;
        ensure(self.residual_tolerance > 0.0, || "residual_tolerance must be > 0".into())?;
        ensure(self.noise_floor >= 0.0, || "noise_floor must be >= 0".into())?;
        let cap = self.support_cap(m);
        ensure(cap >= 1 && cap <= m, || format!("max_support {cap} must be in [1, M={m}]"))?;
        ensure(self.ridge > 0.0, || "ridge must be > 0".into())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ZeroMeasurement,
    Converged,
    StageCap,
    SupportCap,
    IterationCap,
}

/// Full record of one matching-pursuit solve.
#[derive(Debug, Clone)]
pub struct SampTrace {
    /// Final support (sorted) and its refit coefficients.
    pub support: Vec<usize>,
    pub coefficients: Vec<C64>,
    pub indicator: Vec<bool>,
    /// Residual norms of the initial residual and every accepted iteration.
    pub accepted_residuals: Vec<f64>,
    pub final_stage: usize,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Normal-equation pieces for one subcarrier, filled on demand.
struct GramCache<'a> {
    h: &'a CMatrix,
    n: usize,
    gram: Vec<C64>,
    known: Vec<bool>,
    hty: CVector,
}

impl<'a> GramCache<'a> {
    fn new(h: &'a CMatrix, y: &CVector) -> Self {
        let n = h.ncols();
        Self {
            h,
            n,
            gram: vec![C64::new(0.0, 0.0); n * n],
            known: vec![false; n * n],
            hty: h.ad_mul(y),
        }
    }

    fn entry(&mut self, i: usize, j: usize) -> C64 {
        let idx = i * self.n + j;
        if !self.known[idx] {
            let v = self.h.column(i).dotc(&self.h.column(j));
            self.gram[idx] = v;
            self.known[idx] = true;
            self.gram[j * self.n + i] = v.conj();
            self.known[j * self.n + i] = true;
        }
        self.gram[idx]
    }

    /// Least-squares coefficients of y on `cols` (same regularization rule as
    /// [`least_squares`]).
    fn solve(&mut self, cols: &[usize], ridge: f64) -> CVector {
        let k = cols.len();
        let mut g = vec![C64::new(0.0, 0.0); k * k];
        for (a, &i) in cols.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate().take(a + 1) {
                g[a * k + b] = self.entry(i, j);
            }
        }
        let rhs: Vec<C64> = cols.iter().map(|&i| self.hty[i]).collect();
        let (x, _) = regularized_solve(&g, k, &rhs, ridge, k <= self.h.nrows());
        CVector::from_vec(x)
    }

    fn residual(&self, y: &CVector, cols: &[usize], coef: &CVector) -> CVector {
        let mut r = y.clone();
        for (&i, &c) in cols.iter().zip(coef.iter()) {
            r.axpy(-c, &self.h.column(i), C64::new(1.0, 0.0));
        }
        r
    }
}

/// Sparsity-adaptive matching pursuit on one subcarrier; returns the binary
/// support indicator.
pub fn samp_recover(h: &CMatrix, y: &CVector, cfg: &RecoveryConfig) -> Vec<bool> {
    samp_trace(h, y, cfg).indicator
}

pub fn samp_trace(h: &CMatrix, y: &CVector, cfg: &RecoveryConfig) -> SampTrace {
    let (m, n) = h.shape();
    let y_norm = y.norm();
    // A support of M columns spans the whole measurement space and would fit
    // any y exactly, so supports stay strictly below M.
    let cap = cfg.support_cap(m).min(m.saturating_sub(1).max(1)).min(n);
    let mut trace = SampTrace {
        support: Vec::new(),
        coefficients: Vec::new(),
        indicator: vec![false; n],
        accepted_residuals: vec![y_norm],
        final_stage: 1,
        iterations: 0,
        stop: StopReason::ZeroMeasurement,
    };
    if y_norm == 0.0 {
        return trace;
    }
    let tol = (cfg.residual_tolerance * y_norm).max(cfg.noise_floor);

    let mut accepted: Vec<usize> = Vec::new();
    let mut accepted_coef: Vec<C64> = Vec::new();
    let mut r_prev = y.clone();
    let mut r_prev_norm = y_norm;
    let mut stage = 1usize;
    let max_iter = 4 * n + 16;
    let mut cache = GramCache::new(h, y);
    // Correlations are taken against unit-norm columns so that a single
    // active user is always the first pick (Cauchy-Schwarz).
    let inv_norms: Vec<f64> = h
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            if norm > 0.0 { 1.0 / norm } else { 0.0 }
        })
        .collect();

    let stop = loop {
        if trace.iterations >= max_iter {
            break StopReason::IterationCap;
        }
        if stage > cfg.max_stages {
            break StopReason::StageCap;
        }
        let size = cfg.step_size * stage;
        if size > cap {
            break StopReason::SupportCap;
        }
        trace.iterations += 1;

        let mut corr = correlations(h, &r_prev);
        corr.iter_mut().zip(&inv_norms).for_each(|(c, w)| *c *= w);
        let picked = top_k(&corr, size);
        let mut candidates = accepted.clone();
        candidates.extend(picked);
        candidates.sort_unstable();
        candidates.dedup();

        let wide = cache.solve(&candidates, cfg.ridge);
        let mags: Vec<f64> = wide.iter().map(|z| z.norm()).collect();
        let mut support: Vec<usize> = top_k(&mags, size).into_iter().map(|i| candidates[i]).collect();
        support.sort_unstable();
        if support == accepted && !accepted.is_empty() {
            // Same support as last accepted: the refit would reproduce r_prev.
            stage += 1;
            continue;
        }

        let coef = cache.solve(&support, cfg.ridge);
        let residual = cache.residual(y, &support, &coef);
        let r_norm = residual.norm();

        if r_norm <= tol {
            accepted = support;
            accepted_coef = coef.iter().copied().collect();
            trace.accepted_residuals.push(r_norm);
            break StopReason::Converged;
        }
        // The stage grows when the residual fails to shrink; equality also
        // bumps the stage, otherwise an unchanged support would repeat forever.
        if r_norm >= r_prev_norm {
            stage += 1;
        } else {
            accepted = support;
            accepted_coef = coef.iter().copied().collect();
            trace.accepted_residuals.push(r_norm);
            r_prev = residual;
            r_prev_norm = r_norm;
        }
    };

    trace.final_stage = stage;
    trace.stop = stop;
    for (&i, c) in accepted.iter().zip(&accepted_coef) {
        trace.indicator[i] = c.norm() > cfg.coefficient_threshold;
    }
    trace.support = accepted;
    trace.coefficients = accepted_coef;
    trace
}

/// `α̂_n = 1` iff the fraction of subcarriers voting for n strictly exceeds
/// `threshold`.
pub fn vote(per_subcarrier: &[Vec<bool>], threshold: f64) -> Result<Vec<bool>> {
    let Some(first) = per_subcarrier.first() else {
        return Err(Error::Dimension("vote needs at least one subcarrier".into()));
    };
    let n = first.len();
    if per_subcarrier.iter().any(|v| v.len() != n) {
        return Err(Error::Dimension("subcarrier votes have unequal lengths".into()));
    }
    let k = per_subcarrier.len() as f64;
    Ok((0..n)
        .map(|i| {
            let votes = per_subcarrier.iter().filter(|v| v[i]).count() as f64;
            votes / k > threshold
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub indicator: Vec<bool>,
    pub per_subcarrier: Vec<Vec<bool>>,
}

impl SupportEstimate {
    pub fn support(&self) -> Vec<usize> {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Per-subcarrier recovery followed by the vote. `parallel` only changes the
/// scheduling; the result is identical.
pub fn recover(
    normalized: &[CMatrix],
    y: &[CVector],
    cfg: &RecoveryConfig,
    parallel: bool,
) -> Result<SupportEstimate> {
    if normalized.len() != y.len() || normalized.is_empty() {
        return Err(Error::Dimension(format!(
            "{} channel matrices vs {} measurements",
            normalized.len(),
            y.len()
        )));
    }
    let per_subcarrier: Vec<Vec<bool>> = if parallel {
        normalized
            .par_iter()
            .zip(y.par_iter())
            .map(|(h, yk)| samp_recover(h, yk, cfg))
            .collect()
    } else {
        normalized
            .iter()
            .zip(y)
            .map(|(h, yk)| samp_recover(h, yk, cfg))
            .collect()
    };
    let indicator = vote(&per_subcarrier, cfg.vote_threshold)?;
    Ok(SupportEstimate {
        indicator,
        per_subcarrier,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    pub max_iter: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tolerance: f64,
    /// Support threshold multiplier ϑ: active iff `|α_n| > ϑ ε_N`.
    pub separation: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tolerance: 1e-12,
            separation: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoResult {
    pub coefficients: CVector,
    pub support: Vec<bool>,
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `(1/2M)||y - Hα||² + ε||α||₁`.
pub fn lasso_objective(h: &CMatrix, y: &CVector, alpha: &CVector, eps_n: f64) -> f64 {
    let m = h.nrows() as f64;
    let r = y - h * alpha;
    r.norm_squared() / (2.0 * m) + eps_n * alpha.iter().map(|z| z.norm()).sum::<f64>()
}

fn soft_threshold(z: C64, t: f64) -> C64 {
    let mag = z.norm();
    if mag <= t {
        C64::new(0.0, 0.0)
    } else {
        z * ((mag - t) / mag)
    }
}

/// Complex iterative shrinkage-thresholding with step `M / ||H||²`, which keeps
/// the objective monotone. On hitting `max_iter` the best iterate is returned
/// with `converged == false`.
pub fn lasso_recover(h: &CMatrix, y: &CVector, eps_n: f64, opts: &LassoOptions) -> Result<LassoResult> {
    ensure(eps_n > 0.0, || format!("eps_n must be > 0, got {eps_n}"))?;
    if h.nrows() != y.len() {
        return Err(Error::Dimension("H rows differ from y length".into()));
    }
    let (m, n) = h.shape();
    let m_f = m as f64;
    let lip = spectral_norm_sq(h) / m_f;
    let mut alpha = CVector::zeros(n);
    let mut objective = vec![lasso_objective(h, y, &alpha, eps_n)];
    let mut best = (objective[0], alpha.clone());
    let mut converged = lip == 0.0;
    let mut iterations = 0;

    if !converged {
        let step = 1.0 / lip;
        let hty = h.ad_mul(y);
        let gram = h.ad_mul(h);
        for _ in 0..opts.max_iter {
            iterations += 1;
            let grad = (&gram * &alpha - &hty) / C64::new(m_f, 0.0);
            let next = (&alpha - grad * C64::new(step, 0.0)).map(|z| soft_threshold(z, step * eps_n));
            let f = lasso_objective(h, y, &next, eps_n);
            let prev = *objective.last().unwrap();
            alpha = next;
            objective.push(f);
            if f < best.0 {
                best = (f, alpha.clone());
            }
            if (prev - f).abs() <= opts.tolerance * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    let coefficients = best.1;
    let threshold = opts.separation * eps_n;
    let support = coefficients.iter().map(|z| z.norm() > threshold).collect();
    Ok(LassoResult {
        coefficients,
        support,
        objective,
        iterations,
        converged,
    })
}

/// `1 - ||α - α̂||₁ / N` for binary vectors.
pub fn detection_accuracy(truth: &[bool], estimate: &[bool]) -> Result<f64> {
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::Dimension(format!(
            "accuracy needs equal non-empty lengths, got {} and {}",
            truth.len(),
            estimate.len()
        )));
    }
    let mismatches = truth.iter().zip(estimate).filter(|(a, b)| a != b).count();
    Ok(1.0 - mismatches as f64 / truth.len() as f64)
}

pub const BRUTE_FORCE_MAX_USERS: usize = 16;
pub const BRUTE_FORCE_MAX_SPARSITY: usize = 3;

/// Least-squares residual norm of `y` on the given columns.
pub fn support_residual(h: &CMatrix, y: &CVector, support: &[usize], ridge: f64) -> f64 {
    least_squares(h, support, y, ridge).residual_norm()
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        f(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Exhaustive search over every support of size `<= max_k`; the support with
/// the smallest least-squares residual wins, preferring smaller supports on
/// numerical ties.
pub fn brute_force_recover(h: &CMatrix, y: &CVector, max_k: usize) -> Result<Vec<bool>> {
    let n = h.ncols();
    if n > BRUTE_FORCE_MAX_USERS || max_k > BRUTE_FORCE_MAX_SPARSITY {
        return Err(Error::SearchTooLarge(format!(
            "N={n}, max_k={max_k}; limits are N<={BRUTE_FORCE_MAX_USERS}, max_k<={BRUTE_FORCE_MAX_SPARSITY}"
        )));
    }
    let slack = 1e-9 * y.norm();
    let mut best_support: Vec<usize> = Vec::new();
    let mut best = y.norm();
    for k in 1..=max_k.min(n) {
        for_each_combination(n, k, |cols| {
            let r = support_residual(h, y, cols, 1e-10);
            if r < best - slack {
                best = r;
                best_support = cols.to_vec();
            }
        });
    }
    let mut out = vec![false; n];
    for i in best_support {
        out[i] = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use crate::rng;
    use nalgebra::DMatrix;
    use rand::seq::index::sample;

    fn gaussian(m: usize, n: usize, seed: u64) -> CMatrix {
        let mut r = rng::from_seed(seed);
        DMatrix::from_fn(m, n, |_, _| complex_gaussian(&mut r, 1.0))
    }

    fn measure(h: &CMatrix, support: &[usize]) -> CVector {
        let mut y = CVector::zeros(h.nrows());
        for &i in support {
            y += h.column(i);
        }
        y
    }

    fn ones(n: usize, support: &[usize]) -> Vec<bool> {
        let mut v = vec![false; n];
        for &i in support {
            v[i] = true;
        }
        v
    }

    #[test]
    fn combinations_enumerate_binomial_counts() {
        let mut count = 0;
        for_each_combination(10, 3, |c| {
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, 120);
        let mut single = 0;
        for_each_combination(4, 4, |_| single += 1);
        assert_eq!(single, 1);
    }

    #[test]
    fn zero_measurement_gives_empty_support() {
        let h = gaussian(8, 10, 1);
        let cfg = RecoveryConfig::default();
        assert!(samp_recover(&h, &CVector::zeros(8), &cfg).iter().all(|&b| !b));
    }

    #[test]
    fn single_user_is_recovered_exactly() {
        let cfg = RecoveryConfig::default();
        let mut failures = 0;
        for m in [2, 4, 8] {
            for seed in 0..100 {
                let h = gaussian(m, 12, 100 + seed);
                let target = (seed as usize) % 12;
                let y = measure(&h, &[target]);
                if samp_recover(&h, &y, &cfg) != ones(12, &[target]) {
                    failures += 1;
                }
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn accepted_residuals_never_increase() {
        let mut r = rng::from_seed(9);
        let cfg = RecoveryConfig { noise_floor: 0.3, ..Default::default() };
        for seed in 0..50 {
            let h = gaussian(16, 32, 200 + seed);
            let support = sample(&mut r, 32, 5).into_vec();
            let mut y = measure(&h, &support);
            for z in y.iter_mut() {
                *z += complex_gaussian(&mut r, 0.01);
            }
            let trace = samp_trace(&h, &y, &cfg);
            assert!(trace.accepted_residuals.windows(2).all(|w| w[1] <= w[0]));
            assert!(trace.support.len() <= 16);
        }
    }

    #[test]
    fn support_cap_is_respected() {
        let h = gaussian(12, 30, 4);
        let y = measure(&h, &[0, 3, 7, 11, 20, 25]);
        let cfg = RecoveryConfig { max_support: Some(3), ..Default::default() };
        let trace = samp_trace(&h, &y, &cfg);
        assert!(trace.support.len() <= 3);
        assert_eq!(trace.stop, StopReason::SupportCap);
        assert!(RecoveryConfig { max_support: Some(13), ..Default::default() }.validate(12).is_err());
    }

    #[test]
    fn vote_examples() {
        let v = vec![true, false, true];
        assert_eq!(vote(&vec![v.clone(); 4], 0.9).unwrap(), v);
        let two = vec![vec![true], vec![true], vec![false], vec![false]];
        assert_eq!(vote(&two, 0.5).unwrap(), vec![false]);
        let three = vec![vec![true], vec![true], vec![true], vec![false]];
        assert_eq!(vote(&three, 0.5).unwrap(), vec![true]);
        assert!(vote(&[], 0.5).is_err());
        assert!(vote(&[vec![true], vec![true, false]], 0.5).is_err());
    }

    #[test]
    fn lasso_zero_and_large_penalty() {
        let h = gaussian(8, 10, 5);
        let res = lasso_recover(&h, &CVector::zeros(8), 0.1, &LassoOptions::default()).unwrap();
        assert!(res.coefficients.iter().all(|z| z.norm() == 0.0));

        let y = measure(&h, &[2, 5]);
        let bound = (h.ad_mul(&y) / C64::new(8.0, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let res = lasso_recover(&h, &y, bound * 1.0001, &LassoOptions::default()).unwrap();
        assert!(res.coefficients.iter().all(|z| z.norm() == 0.0));
        assert!(lasso_recover(&h, &y, 0.0, &LassoOptions::default()).is_err());
    }

    #[test]
    fn lasso_objective_is_monotone_and_finds_singleton() {
        for seed in 0..20 {
            let h = gaussian(8, 10, 300 + seed);
            let target = (seed as usize * 3) % 10;
            let y = measure(&h, &[target]);
            let eps = 0.01;
            let res = lasso_recover(&h, &y, eps, &LassoOptions::default()).unwrap();
            assert!(res.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
            assert_eq!(res.support, ones(10, &[target]));
            let oracle = brute_force_recover(&h, &y, 1).unwrap();
            assert_eq!(res.support, oracle);
        }
    }

    #[test]
    fn lasso_reports_non_convergence() {
        let h = gaussian(8, 10, 6);
        let y = measure(&h, &[1, 4, 7]);
        let res = lasso_recover(&h, &y, 1e-3, &LassoOptions { max_iter: 3, ..Default::default() }).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
    }

    #[test]
    fn accuracy_examples() {
        let a = vec![true, false, true, false];
        assert_eq!(detection_accuracy(&a, &a).unwrap(), 1.0);
        let c: Vec<bool> = a.iter().map(|b| !b).collect();
        assert_eq!(detection_accuracy(&a, &c).unwrap(), 0.0);
        let truth = vec![false; 256];
        let mut est = truth.clone();
        for i in [3, 50, 100, 200] {
            est[i] = true;
        }
        assert_eq!(detection_accuracy(&truth, &est).unwrap(), 0.984375);
        assert!(detection_accuracy(&a, &a[..2]).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let h = gaussian(6, 8, 7);
        assert_eq!(brute_force_recover(&h, &CVector::zeros(6), 2).unwrap(), vec![false; 8]);
        let mut r = rng::from_seed(8);
        for _ in 0..20 {
            let support = sample(&mut r, 8, 2).into_vec();
            let y = measure(&h, &support);
            assert_eq!(brute_force_recover(&h, &y, 2).unwrap(), ones(8, &support));
        }
        assert!(brute_force_recover(&gaussian(4, 17, 1), &CVector::zeros(4), 1).is_err());
        assert!(brute_force_recover(&h, &CVector::zeros(6), 4).is_err());
    }

    #[test]
    fn brute_force_residual_lower_bounds_samp() {
        let mut r = rng::from_seed(10);
        for seed in 0..30 {
            let h = gaussian(6, 10, 400 + seed);
            let support = sample(&mut r, 10, 2).into_vec();
            let mut y = measure(&h, &support);
            for z in y.iter_mut() {
                *z += complex_gaussian(&mut r, 0.05);
            }
            let greedy: Vec<usize> = samp_trace(&h, &y, &RecoveryConfig::default()).support;
            if greedy.is_empty() || greedy.len() > 3 {
                continue;
            }
            let k = greedy.len();
            let exact = brute_force_recover(&h, &y, k).unwrap();
            let exact_support: Vec<usize> = (0..10).filter(|&i| exact[i]).collect();
            assert!(
                support_residual(&h, &y, &exact_support, 1e-10)
                    <= support_residual(&h, &y, &greedy, 1e-10) + 1e-12
            );
        }
    }

    #[test]
    fn parallel_and_serial_recovery_agree() {
        let hs: Vec<CMatrix> = (0..6).map(|k| gaussian(16, 32, 500 + k)).collect();
        let ys: Vec<CVector> = hs.iter().map(|h| measure(h, &[1, 9, 17, 30])).collect();
        let cfg = RecoveryConfig::default();
        let a = recover(&hs, &ys, &cfg, true).unwrap();
        let b = recover(&hs, &ys, &cfg, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.support(), vec![1, 9, 17, 30]);
    }
}
