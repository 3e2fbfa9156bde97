//! Row-stochastic view of a kernel: the Markov chain that jumps from `i` to
//! `j` with probability proportional to `K_ij`.
//!
//! Because `K` is symmetric the chain is reversible and its stationary law is
//! proportional to the kernel row sums. Rows of `P^m` (diffusion profiles)
//! started in the same well-separated cluster become indistinguishable,
//! while profiles started in different clusters have nearly disjoint support.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;

pub const STATIONARY_TOL: f64 = 1e-12;
/// Plain steps between squarings of the iteration operator.
pub const SQUARE_EVERY: usize = 256;
pub const STATIONARY_MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `x P` for a row vector `x`.
    pub fn step(&self, x: &DVector<f64>) -> DVector<f64> {
        self.entries.tr_mul(x)
    }
}

/// `P_ij = K_ij / sum_j K_ij`, using raw (unclamped) row sums.
pub fn stochastic_matrix(k: &KernelMatrix) -> StochasticMatrix {
    let mut p = k.matrix().clone();
    for mut row in p.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
    StochasticMatrix { entries: p }
}

/// Stationary distribution by power iteration from the uniform law.
pub fn stationary_distribution(p: &StochasticMatrix) -> Result<Vec<f64>> {
    let n = p.n();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let mut op = p.matrix().clone();
    let mut residual = f64::INFINITY;
    for step in 1..=STATIONARY_MAX_STEPS {
        let mut next = (pi.transpose() * &op).transpose();
        next /= next.sum();
        pi = next;
        residual = (p.step(&pi) - &pi).lp_norm(1);
        if residual <= STATIONARY_TOL {
            return Ok(pi.iter().copied().collect());
        }
        if step % SQUARE_EVERY == 0 {
            op = &op * &op;
        }
    }
    Err(Error::NonConvergence { steps: STATIONARY_MAX_STEPS, residual })
}

/// Row `i` of `P^m`, by `m` vector-matrix products.
pub fn diffusion_profile(p: &StochasticMatrix, m: usize, i: usize) -> Result<Vec<f64>> {
    let n = p.n();
    if m == 0 {
        return Err(Error::Param("diffusion steps m must be >= 1".into()));
    }
    if i >= n {
        return Err(Error::Param(format!("start index {i} out of range for n = {n}")));
    }
    let mut x = DVector::zeros(n);
    x[i] = 1.0;
    for _ in 0..m {
        x = p.step(&x);
    }
    Ok(x.iter().copied().collect())
}

/// All of `P^m`, by binary exponentiation.
pub fn diffusion_matrix(p: &StochasticMatrix, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::Param("diffusion steps m must be >= 1".into()));
    }
    let mut base = p.entries.clone();
    let mut acc: Option<DMatrix<f64>> = None;
    let mut e = m;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                Some(a) => &a * &base,
                None => base.clone(),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    Ok(acc.expect("m >= 1"))
}

/// Total-variation distance `(1/2) sum |a_k - b_k|`.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Pairwise total-variation distances between the rows of `rows`.
pub fn tv_matrix(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rows.nrows();
    let mut tv = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 0.5 * rows.row(i).iter().zip(rows.row(j).iter()).map(|(x, y)| (x - y).abs()).sum::<f64>();
            tv[(i, j)] = d;
            tv[(j, i)] = d;
        }
    }
    tv
}

/// `S_ij = sqrt(pi_i) P_ij / sqrt(pi_j)`, symmetric for a reversible chain.
pub fn symmetrize(p: &StochasticMatrix, pi: &[f64]) -> DMatrix<f64> {
    let n = p.n();
    DMatrix::from_fn(n, n, |i, j| pi[i].sqrt() * p.get(i, j) / pi[j].sqrt())
}
