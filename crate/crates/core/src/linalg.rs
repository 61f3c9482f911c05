//! Small dense complex helpers shared by the recovery routines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// `|A^H r|` per column.
pub fn correlations(a: &CMatrix, r: &CVector) -> Vec<f64> {
    a.ad_mul(r).iter().map(|z| z.norm()).collect()
}

/// Indices of the `k` largest values, largest first; ties go to the lower index.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Solves `G x = b` for Hermitian positive-definite `G` (row-major `k x k`,
/// only the lower triangle is read). Returns `None` when a pivot falls below
/// `1e-12` of its diagonal entry, i.e. `G` is numerically singular.
pub fn cholesky_solve(g: &[C64], k: usize, b: &[C64]) -> Option<Vec<C64>> {
    let zero = C64::new(0.0, 0.0);
    let mut l = vec![zero; k * k];
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let (head, tail) = l.split_at_mut(j * k + k);
        let row_j = &head[j * k..j * k + j];
        let d = g[j * k + j].re - row_j.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !d.is_finite() || d <= 1e-12 * g[j * k + j].re.abs() {
            return None;
        }
        let djj = d.sqrt();
        diag[j] = djj;
        let inv = 1.0 / djj;
        for i in j + 1..k {
            let row_i = &mut tail[(i - j - 1) * k..(i - j) * k];
            let acc = row_i[..j]
                .iter()
                .zip(row_j)
                .fold(g[i * k + j], |acc, (a, b)| acc - a * b.conj());
            row_i[j] = acc * inv;
        }
        head[j * k + j] = C64::new(djj, 0.0);
    }
    let mut z = vec![zero; k];
    for i in 0..k {
        let acc = l[i * k..i * k + i].iter().zip(&z[..i]).fold(b[i], |acc, (a, x)| acc - a * x);
        z[i] = acc / diag[i];
    }
    let mut x = z;
    for i in (0..k).rev() {
        let mut acc = x[i];
        for p in i + 1..k {
            acc -= l[p * k + i].conj() * x[p];
        }
        x[i] = acc / diag[i];
    }
    Some(x)
}

/// Cholesky solve that falls back to `G + λI` with `λ = ridge * max(1, trace/k)`,
/// growing λ by 100x until the factorization succeeds. The flag reports
/// whether a ridge was needed.
pub fn regularized_solve(g: &[C64], k: usize, b: &[C64], ridge: f64, allow_plain: bool) -> (Vec<C64>, bool) {
    if allow_plain {
        if let Some(x) = cholesky_solve(g, k, b) {
            return (x, false);
        }
    }
    let scale = (0..k).map(|i| g[i * k + i].re).sum::<f64>() / k.max(1) as f64;
    let mut lambda = ridge.max(f64::MIN_POSITIVE) * scale.max(1.0);
    let mut reg = g.to_vec();
    loop {
        for i in 0..k {
            reg[i * k + i] = g[i * k + i] + C64::new(lambda, 0.0);
        }
        if let Some(x) = cholesky_solve(&reg, k, b) {
            return (x, true);
        }
        lambda *= 100.0;
    }
}

#[derive(Debug, Clone)]
pub struct LsFit {
    /// Coefficients aligned with the requested column list.
    pub coef: CVector,
    pub residual: CVector,
    /// True when the plain normal equations failed and a ridge was added.
    pub regularized: bool,
}

impl LsFit {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Least-squares fit of `y` on the columns `cols` of `a`.
///
/// Solves the normal equations by Cholesky. When the Gram matrix is not
/// numerically positive definite (rank-deficient column set) a ridge of
/// `ridge * max(1, trace/n)` is added, growing by 100x until the factorization
/// succeeds, so the call never fails.
pub fn least_squares(a: &CMatrix, cols: &[usize], y: &CVector, ridge: f64) -> LsFit {
    if cols.is_empty() {
        return LsFit {
            coef: CVector::zeros(0),
            residual: y.clone(),
            regularized: false,
        };
    }
    let sub = a.select_columns(cols);
    let n = cols.len();
    let gram = sub.ad_mul(&sub);
    let rhs: Vec<C64> = sub.ad_mul(y).iter().copied().collect();
    let g: Vec<C64> = gram.transpose().iter().copied().collect();
    let (x, regularized) = regularized_solve(&g, n, &rhs, ridge, n <= a.nrows());
    let coef = CVector::from_vec(x);
    let residual = y - &sub * &coef;
    LsFit {
        coef,
        residual,
        regularized,
    }
}

/// Largest eigenvalue of `A^H A` by power iteration.
pub fn spectral_norm_sq(a: &CMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = CVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64) * 1e-3, 0.0));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = a.ad_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w / C64::new(norm, 0.0);
        let converged = (norm - lambda).abs() <= 1e-12 * norm;
        lambda = norm;
        v = next;
        if converged {
            break;
        }
    }
    lambda
}

/// Real-valued matrix from a real closure; handy in tests.
pub fn real_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMatrix {
    DMatrix::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
}
