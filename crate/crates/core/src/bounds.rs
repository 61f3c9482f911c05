//! Analytical oracles: the detection-accuracy lower bound and its sparsity
//! constraints, the single-class utility optimum over a load curve, and the
//! complexity formulas for the tabular and deep agents.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// N.
    pub n_users: usize,
    /// M.
    pub n_antennas: usize,
    /// Compressive ratio M/N.
    pub eta: f64,
    /// Must exceed 2.
    pub phi: f64,
    /// Separation constant in the preamble-amplitude condition.
    pub theta_sep: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BoundParams {
    /// Parameters with `eta = M/N` and unit bound constants.
    pub fn new(n_users: usize, n_antennas: usize, phi: f64) -> Self {
        BoundParams {
            n_users,
            n_antennas,
            eta: n_antennas as f64 / n_users.max(1) as f64,
            phi,
            theta_sep: 1.0,
            a1: 1.0,
            a2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_users >= 2, || format!("n_users must be >= 2, got {}", self.n_users))?;
        ensure(self.n_antennas >= 1, || "n_antennas must be positive".into())?;
        ensure(self.phi > 2.0 && self.phi.is_finite(), || format!("phi must exceed 2, got {}", self.phi))?;
        let eta = self.n_antennas as f64 / self.n_users as f64;
        ensure(self.eta == eta, || format!("eta must equal M/N = {eta}, got {}", self.eta))?;
        ensure(self.a1 > 0.0 && self.a1.is_finite(), || format!("a1 must be positive, got {}", self.a1))?;
        ensure(self.a2 > 0.0 && self.a2.is_finite(), || format!("a2 must be positive, got {}", self.a2))?;
        ensure(self.theta_sep.is_finite() && self.theta_sep >= 0.0, || "theta_sep must be finite and non-negative".into())
    }
}

/// Regularization weight `sqrt(2 phi ln N / (eta N))`.
pub fn epsilon_n(params: &BoundParams) -> f64 {
    let n = params.n_users as f64;
    (2.0 * params.phi * n.ln() / (params.eta * n)).sqrt()
}

/// Whether the smallest preamble amplitude clears `theta_sep * epsilon_n`.
pub fn preamble_condition(min_amplitude: f64, params: &BoundParams) -> bool {
    min_amplitude > params.theta_sep * epsilon_n(params)
}

/// Minimum tolerable sparsity level `eta N (1 - 1/phi) / (2 ln N)`.
pub fn sparsity_lower_bound(params: &BoundParams) -> f64 {
    let n = params.n_users as f64;
    params.eta * n * (1.0 - 1.0 / params.phi) / (2.0 * n.ln())
}

/// `2 (k + 1/eps^2) ln(N - k) - M`; the maximum sparsity is its root.
pub fn sparsity_residual(k: f64, params: &BoundParams) -> f64 {
    let eps = epsilon_n(params);
    2.0 * (k + 1.0 / (eps * eps)) * (params.n_users as f64 - k).ln() - params.n_antennas as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub max_sparsity: f64,
    pub residual: f64,
    pub lower_bound: f64,
    /// `max_sparsity >= lower_bound`.
    pub lower_bound_ok: bool,
    pub epsilon_n: f64,
}

/// Largest tolerable sparsity: the smallest root of [`sparsity_residual`] in
/// `[0, min(M, N))`, located by a sign-change scan and refined by bisection.
pub fn max_sparsity(params: &BoundParams) -> Result<SparsityReport> {
    params.validate()?;
    let hi = params.n_antennas.min(params.n_users) as f64;
    let f = |k: f64| sparsity_residual(k, params);
    const SCAN: usize = 4096;
    let mut bracket = None;
    let mut prev_k = 0.0;
    let mut prev_f = f(0.0);
    if prev_f == 0.0 {
        bracket = Some((0.0, 0.0));
    }
    for i in 1..=SCAN {
        if bracket.is_some() {
            break;
        }
        // stay strictly inside the half-open range
        let k = hi * i as f64 / SCAN as f64 * (1.0 - 1e-12);
        let fk = f(k);
        if fk == 0.0 || (prev_f < 0.0) != (fk < 0.0) {
            bracket = Some((prev_k, k));
        }
        prev_k = k;
        prev_f = fk;
    }
    let (mut lo, mut up) = bracket.ok_or_else(|| {
        Error::Infeasible(format!(
            "no sparsity in [0, {hi}) satisfies M = 2(k + 1/eps^2) ln(N - k) for N={}, M={}, phi={}",
            params.n_users, params.n_antennas, params.phi
        ))
    })?;
    let lo_neg = f(lo) < 0.0;
    while up - lo > 0.0 {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            up = mid;
            break;
        }
        if (fm < 0.0) == lo_neg {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let root = if f(lo).abs() <= f(up).abs() { lo } else { up };
    let lower = sparsity_lower_bound(params);
    Ok(SparsityReport {
        max_sparsity: root,
        residual: f(root),
        lower_bound: lower,
        lower_bound_ok: root >= lower,
        epsilon_n: epsilon_n(params),
    })
}

/// `1 - a1 exp(-a2 min(k, ln(N - k)))`, clamped to `[0, 1]`.
pub fn theorem1_bound(sparsity: f64, params: &BoundParams) -> f64 {
    let n = params.n_users as f64;
    let m = sparsity.min((n - sparsity).ln());
    (1.0 - params.a1 * (-params.a2 * m).exp()).clamp(0.0, 1.0)
}

/// Least-squares fit of `(a1, a2)` to `(sparsity, accuracy)` samples.
///
/// For fixed `a2` the optimal `a1` is closed-form; `a2` is chosen on a
/// log grid over `[1e-3, 1e2]` and refined by golden section.
pub fn fit_theorem1_constants(n_users: usize, samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    ensure(!samples.is_empty(), || "no samples to fit".into())?;
    let n = n_users as f64;
    let mins: Vec<f64> = samples.iter().map(|&(k, _)| k.min((n - k).ln())).collect();
    let eval = |a2: f64| -> (f64, f64) {
        let e: Vec<f64> = mins.iter().map(|m| (-a2 * m).exp()).collect();
        let num: f64 = e.iter().zip(samples).map(|(ei, &(_, c))| (1.0 - c) * ei).sum();
        let den: f64 = e.iter().map(|x| x * x).sum();
        let a1 = if den > 0.0 { (num / den).max(1e-12) } else { 1e-12 };
        let sse = e.iter().zip(samples).map(|(ei, &(_, c))| (1.0 - c - a1 * ei).powi(2)).sum();
        (a1, sse)
    };
    let grid: Vec<f64> = (0..=100).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 100.0)).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| eval(grid[i]).1.total_cmp(&eval(grid[j]).1))
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let x = golden_max(|t| -eval(t.exp()).1, lo, hi, 1e-10);
    let a2 = x.exp();
    Ok((eval(a2).0, a2))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Mean detection accuracy as a function of the permitted load `p`.
///
/// Piecewise linear through its knots; flat to the left of the first knot and
/// linearly extended (floored at zero) to the right of the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCurve {
    pub samples: Vec<(f64, f64)>,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl LoadCurve {
    /// Interpolant through the points as given (sorted by load, no smoothing).
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        let sorted = sorted_points(points)?;
        let mut knots: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for &(x, y) in &sorted {
            if knots.last() == Some(&x) {
                return Err(Error::InvalidCurve(format!("duplicate load {x} in point list")));
            }
            knots.push(x);
            values.push(y);
        }
        Ok(LoadCurve {
            samples: sorted,
            knots,
            values,
        })
    }

    /// Non-increasing concave fit to noisy samples: repeated loads are pooled,
    /// a decreasing isotonic regression is applied, and the result is
    /// projected onto non-increasing concave piecewise-linear functions by
    /// weighted non-negative least squares.
    pub fn fit(samples: &[(f64, f64)]) -> Result<Self> {
        let sorted = sorted_points(samples)?;
        let mut knots: Vec<f64> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for &(x, y) in &sorted {
            if knots.last() == Some(&x) {
                *sums.last_mut().unwrap() += y;
                *weights.last_mut().unwrap() += 1.0;
            } else {
                knots.push(x);
                sums.push(y);
                weights.push(1.0);
            }
        }
        let means: Vec<f64> = sums.iter().zip(&weights).map(|(s, w)| s / w).collect();
        let iso = isotonic_decreasing(&means, &weights);
        let mut values = concave_decreasing_fit(&knots, &iso, &weights);
        for v in &mut values {
            *v = v.min(1.0);
        }
        // Clamping at zero would put a convex kink into the curve, so the
        // fit is cut at its zero crossing instead; `eval` floors beyond it.
        match values.iter().position(|&v| v < 0.0) {
            Some(0) => values.iter_mut().for_each(|v| *v = 0.0),
            Some(i) => {
                let t = values[i - 1] / (values[i - 1] - values[i]);
                knots[i] = knots[i - 1] + t * (knots[i] - knots[i - 1]);
                values[i] = 0.0;
                knots.truncate(i + 1);
                values.truncate(i + 1);
            }
            None => {}
        }
        let curve = LoadCurve {
            samples: sorted,
            knots,
            values,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn eval(&self, p: f64) -> f64 {
        let k = &self.knots;
        let v = &self.values;
        if k.len() == 1 || p <= k[0] {
            return v[0];
        }
        let last = k.len() - 1;
        let j = if p >= k[last] {
            last - 1
        } else {
            k.partition_point(|&x| x <= p) - 1
        };
        let slope = (v[j + 1] - v[j]) / (k[j + 1] - k[j]);
        (v[j] + slope * (p - k[j])).max(0.0)
    }

    /// Where the linear extension past the last knot reaches zero, if it
    /// does; `eval` is floored there.
    pub fn extrapolated_zero(&self) -> Option<f64> {
        let k = &self.knots;
        let v = &self.values;
        let last = k.len().checked_sub(1).filter(|&l| l >= 1)?;
        let slope = (v[last] - v[last - 1]) / (k[last] - k[last - 1]);
        (slope < 0.0 && v[last] > 0.0).then(|| k[last] - v[last] / slope)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Checks values in `[0, 1]`, non-positive slopes and non-increasing
    /// slopes (concavity), each with a `1e-9` slack.
    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        if self.knots.is_empty() || self.knots.len() != self.values.len() {
            return Err(Error::InvalidCurve("knot and value lists must be nonempty and equal length".into()));
        }
        for (i, &v) in self.values.iter().enumerate() {
            if !(-TOL..=1.0 + TOL).contains(&v) {
                return Err(Error::InvalidCurve(format!("value {v} at knot {i} outside [0, 1]")));
            }
        }
        let slopes = self.slopes();
        for (i, &s) in slopes.iter().enumerate() {
            if s > TOL {
                return Err(Error::InvalidCurve(format!("curve increases on segment {i} (slope {s})")));
            }
        }
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] > w[0] + TOL {
                return Err(Error::InvalidCurve(format!(
                    "slope rises from {} to {} at knot {} (not concave)",
                    w[0],
                    w[1],
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

fn sorted_points(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if points.is_empty() {
        return Err(Error::InvalidCurve("no points".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidCurve("non-finite point".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(sorted)
}

/// Pool-adjacent-violators for a non-increasing fit.
pub fn isotonic_decreasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() >= 2 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let wt = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / wt, wt, c1 + c2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, c)| std::iter::repeat_n(m, c)).collect()
}

/// Weighted least-squares projection onto non-increasing concave
/// piecewise-linear functions on the knots:
/// `v_i = c - sum_t d_t max(0, x_i - x_{t-1})` with `d >= 0`.
fn concave_decreasing_fit(x: &[f64], y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n <= 1 {
        return y.to_vec();
    }
    let m = n - 1;
    let wsum: f64 = w.iter().sum();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    // Eliminate the free intercept by weighted centering.
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let mut a = vec![vec![0.0; m]; n];
    for t in 0..m {
        let col: Vec<f64> = x.iter().map(|&xi| -(xi - x[t]).max(0.0)).collect();
        let mean = col.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
        for i in 0..n {
            a[i][t] = sw[i] * (col[i] - mean);
        }
    }
    let b: Vec<f64> = (0..n).map(|i| sw[i] * (y[i] - ybar)).collect();
    let d = nnls(&a, &b);
    let raw: Vec<f64> = x
        .iter()
        .map(|&xi| -(0..m).map(|t| d[t] * (xi - x[t]).max(0.0)).sum::<f64>())
        .collect();
    let rbar = raw.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let c = ybar - rbar;
    raw.into_iter().map(|r| c + r).collect()
}

/// Lawson-Hanson active-set solver for `min |A d - b|` with `d >= 0`.
fn nnls(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let am = DMatrix::from_fn(rows, cols, |i, j| a[i][j]);
    let bv = DVector::from_column_slice(b);
    let mut d = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let tol = 1e-12 * (1.0 + am.norm() * bv.norm());
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(cols);
        if idx.is_empty() {
            return z;
        }
        let sub = am.select_columns(&idx);
        let sol = sub
            .clone()
            .svd(true, true)
            .solve(&bv, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        for (k, &j) in idx.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    };
    for _ in 0..(3 * cols + 10) {
        let grad = am.transpose() * (&bv - &am * &d);
        let candidate = (0..cols)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate.filter(|&j| grad[j] > tol) else {
            break;
        };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..cols).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                d = z;
                break;
            }
            let mut alpha = 1.0f64;
            for k in 0..cols {
                if passive[k] && z[k] <= 0.0 {
                    let denom = d[k] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(d[k] / denom);
                    }
                }
            }
            d = &d + (&z - &d) * alpha;
            for k in 0..cols {
                if passive[k] && d[k] <= 1e-15 {
                    passive[k] = false;
                    d[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    d.iter().map(|v| v.max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub p_star: f64,
    pub u_star: f64,
}

/// Single-class utility `f(p) (p r N + rho2) - rho2` on the curve.
pub fn single_class_utility(curve: &LoadCurve, p: f64, r: f64, n: usize, rho2: f64) -> f64 {
    curve.eval(p) * (p * r * n as f64 + rho2) - rho2
}

/// Maximizes [`single_class_utility`] over `p` in `[0, 1]`.
///
/// Golden-section search to `1e-6`, followed by an exact pass over the
/// piecewise-quadratic structure of the objective (knots, endpoints and each
/// segment's stationary point); the best of all candidates is returned.
pub fn theorem2_optimum(curve: &LoadCurve, r: f64, n: usize, rho2: f64) -> Result<Optimum> {
    curve.validate()?;
    ensure(r.is_finite() && r >= 0.0, || format!("r must be non-negative, got {r}"))?;
    ensure(rho2.is_finite() && rho2 >= 0.0, || format!("rho2 must be non-negative, got {rho2}"))?;
    let u = |p: f64| single_class_utility(curve, p, r, n, rho2);
    let mut candidates = vec![golden_max(u, 0.0, 1.0, 1e-6), 0.0, 1.0];
    let mut edges: Vec<f64> = vec![0.0];
    edges.extend(curve.knots.iter().copied().filter(|&k| k > 0.0 && k < 1.0));
    if let Some(zero) = curve.extrapolated_zero().filter(|&z| z > 0.0 && z < 1.0) {
        edges.push(zero);
    }
    edges.sort_by(f64::total_cmp);
    edges.push(1.0);
    candidates.extend(edges.iter().copied());
    let a = r * n as f64;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        // f(p) = f0 + s p on this segment, u = (f0 + s p)(a p + rho2) - rho2
        let h = (hi - lo).max(1e-12);
        let s = (curve.eval(hi) - curve.eval(lo)) / h;
        let f0 = curve.eval(mid) - s * mid;
        if s < 0.0 && a > 0.0 {
            let p = -(f0 * a + s * rho2) / (2.0 * s * a);
            if p > lo && p < hi {
                candidates.push(p);
            }
        }
    }
    let p_star = candidates
        .into_iter()
        .max_by(|&x, &y| u(x).total_cmp(&u(y)).then(y.total_cmp(&x)))
        .unwrap_or(0.0);
    Ok(Optimum {
        p_star,
        u_star: u(p_star),
    })
}

/// Dominating slot count `tau * xi` of the tabular agent.
pub fn rl_complexity(tau: u64, xi: u64) -> u64 {
    tau.saturating_mul(xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub slots: u64,
    /// Magnitude of the monic cubic with roots `X1^L X2`, `X1^L`, `tau`
    /// evaluated at zero, i.e. the product of the roots.
    pub threshold: f64,
    /// `slots > threshold`.
    pub valid: bool,
}

pub fn rl_complexity_report(tau: u64, xi: u64, x1: usize, x2: usize, n_classes: usize) -> ComplexityReport {
    let b = (x1 as f64).powi(n_classes as i32);
    let a = b * x2 as f64;
    let threshold = a * b * tau as f64;
    let slots = rl_complexity(tau, xi);
    ComplexityReport {
        slots,
        threshold,
        valid: slots as f64 > threshold,
    }
}

/// Operation count `tau xi C_i w_i^2 C_o ((w_i - v)/s + 1)^2` of the deep agent.
pub fn drl_complexity(tau: u64, xi: u64, c_in: usize, w_in: usize, c_out: usize, kernel: usize, stride: usize) -> f64 {
    let w_out = (w_in as f64 - kernel as f64) / stride.max(1) as f64 + 1.0;
    tau as f64 * xi as f64 * c_in as f64 * (w_in * w_in) as f64 * c_out as f64 * w_out * w_out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_params() -> BoundParams {
        BoundParams::new(256, 128, 2.5)
    }

    #[test]
    fn epsilon_matches_direct_evaluation() {
        let e = epsilon_n(&paper_params());
        let direct = (2.0 * 2.5 * 256f64.ln() / (0.5 * 256.0)).sqrt();
        assert!((e - direct).abs() < 1e-15);
        assert!((e - 0.4654).abs() < 1e-3);
        let mut p2 = paper_params();
        p2.phi = 5.0;
        assert!((epsilon_n(&p2) / e - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn max_sparsity_matches_grid_scan() {
        let p = paper_params();
        let rep = max_sparsity(&p).unwrap();
        assert!(rep.residual.abs() < 1e-9);
        assert!(rep.max_sparsity < 128.0);
        let step = 1e-4;
        let mut k = 0.0;
        while sparsity_residual(k + step, &p) < 0.0 {
            k += step;
        }
        assert!((rep.max_sparsity - k).abs() <= step);
        let lower = 0.5 * 256.0 * (1.0 - 1.0 / 2.5) / (2.0 * 256f64.ln());
        assert!((rep.lower_bound - lower).abs() < 1e-12);
        assert!(rep.lower_bound_ok);
    }

    #[test]
    fn infeasible_params_are_reported() {
        let p = BoundParams::new(4, 4, 2.5);
        assert!(matches!(max_sparsity(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn theorem1_examples() {
        let p = paper_params();
        assert!((theorem1_bound(4.0, &p) - (1.0 - (-4f64).exp())).abs() < 1e-12);
        let mut zero = p;
        zero.a1 = 0.0;
        assert_eq!(theorem1_bound(10.0, &zero), 1.0);
    }

    #[test]
    fn constant_fit_recovers_generating_values() {
        let n = 64;
        let samples: Vec<(f64, f64)> = (1..30)
            .map(|k| {
                let k = k as f64;
                (k, 1.0 - 0.8 * (-0.6 * k.min((n as f64 - k).ln())).exp())
            })
            .collect();
        let (a1, a2) = fit_theorem1_constants(n, &samples).unwrap();
        assert!((a1 - 0.8).abs() < 1e-5, "{a1}");
        assert!((a2 - 0.6).abs() < 1e-5, "{a2}");
    }

    #[test]
    fn toy_curve_optimum() {
        let curve = LoadCurve::from_points(&[(0.0, 1.0), (1.0, 0.0)]).unwrap();
        let opt = theorem2_optimum(&curve, 1.0, 1, 0.0).unwrap();
        assert!((opt.p_star - 0.5).abs() < 1e-9);
        assert!((opt.u_star - 0.25).abs() < 1e-12);
    }

    #[test]
    fn flat_curve_optimum_is_full_load() {
        let curve = LoadCurve::from_points(&[(0.0, 0.8), (1.0, 0.8)]).unwrap();
        let opt = theorem2_optimum(&curve, 2.0, 10, 0.0).unwrap();
        assert_eq!(opt.p_star, 1.0);
        assert!((opt.u_star - 16.0).abs() < 1e-12);
    }

    #[test]
    fn rising_curve_is_rejected() {
        let curve = LoadCurve::from_points(&[(0.0, 0.2), (1.0, 0.8)]).unwrap();
        assert!(matches!(theorem2_optimum(&curve, 1.0, 1, 0.0), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn fit_smooths_noise_into_a_valid_curve() {
        let pts = [(0.0, 0.99), (0.2, 1.0), (0.4, 0.93), (0.6, 0.95), (0.8, 0.7), (1.0, 0.3)];
        let curve = LoadCurve::fit(&pts).unwrap();
        curve.validate().unwrap();
        let sse: f64 = pts.iter().map(|&(x, y)| (curve.eval(x) - y).powi(2)).sum();
        assert!(sse < 0.01, "{sse}");
    }

    #[test]
    fn fit_is_identity_on_concave_data() {
        let pts = [(0.0, 1.0), (0.5, 0.9), (0.75, 0.7), (1.0, 0.4)];
        let curve = LoadCurve::fit(&pts).unwrap();
        for (x, y) in pts {
            assert!((curve.eval(x) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn isotonic_pools_violators() {
        let out = isotonic_decreasing(&[1.0, 2.0, 0.5], &[1.0, 1.0, 1.0]);
        assert_eq!(out, vec![1.5, 1.5, 0.5]);
    }

    #[test]
    fn complexity_formulas() {
        assert_eq!(rl_complexity(1, 1), 1);
        assert_eq!(rl_complexity(100, 200), 20000);
        let r = rl_complexity_report(10, 100, 5, 5, 2);
        assert_eq!(r.threshold, 125.0 * 25.0 * 10.0);
        assert!(!r.valid);
        assert!(rl_complexity_report(10, 1_000_000, 5, 5, 2).valid);
        assert_eq!(drl_complexity(1, 1, 1, 8, 4, 3, 1), 64.0 * 4.0 * 36.0);
    }
}
