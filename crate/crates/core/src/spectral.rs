//! Degrees, the normalized operator `M`, its eigendecomposition, spectral
//! powers `M^m` and the renormalized affinity `C`.
//!
//! `M_ij = K_ij / (n sqrt(D_i D_j))` with `D_i = max(mean_j K_ij, sigma)`.
//! The single `1/n` makes `sqrt(D)` a fixed point of `M` whenever no degree
//! is clamped, so the leading eigenvalue is 1 and the others lie in [0, 1).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;

/// Default degree clamp.
pub const SIGMA: f64 = 0.001;
/// Largest asymmetry accepted by [`eig_sym`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest admissible `(M^m)_ii` (and embedding row norm).
pub const DIAG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeVector {
    pub degrees: Vec<f64>,
    pub clamped: Vec<bool>,
    pub sigma: f64,
}

impl DegreeVector {
    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }

    pub fn clamped_indices(&self) -> Vec<usize> {
        self.clamped.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect()
    }
}

/// Eigenvalues sorted descending; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(max(lambda, 0)^(m/2))`, the square-root factor of `M^m`.
    pub fn half_power_factor(&self, m: usize) -> DMatrix<f64> {
        let half = m as f64 / 2.0;
        let mut w = self.eigenvectors.clone();
        for (k, mut col) in w.column_iter_mut().enumerate() {
            col *= self.eigenvalues[k].max(0.0).powf(half);
        }
        w
    }
}

/// Renormalized `M^m`: cosines between iterated point representations.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityProfile {
    pub entries: DMatrix<f64>,
    pub m: usize,
}

impl AffinityProfile {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// `D_i = max((1/n) sum_j K_ij, sigma)`.
pub fn degrees(k: &KernelMatrix, sigma: f64) -> Result<DegreeVector> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("sigma must be finite and > 0, got {sigma}")));
    }
    let n = k.n();
    let (degrees, clamped) = k
        .matrix()
        .row_iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / n as f64;
            if mean < sigma {
                (sigma, true)
            } else {
                (mean, false)
            }
        })
        .unzip();
    Ok(DegreeVector { degrees, clamped, sigma })
}

/// `M_ij = K_ij / (n sqrt(D_i) sqrt(D_j))`, computed once per pair and mirrored.
pub fn build_m(k: &KernelMatrix, d: &DegreeVector) -> DMatrix<f64> {
    let n = k.n();
    assert_eq!(n, d.degrees.len(), "kernel and degree sizes differ");
    let root: Vec<f64> = d.degrees.iter().map(|v| v.sqrt()).collect();
    let nf = n as f64;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.get(i, j) / (nf * root[i] * root[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Full symmetric eigendecomposition, eigenvalues descending.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude entry is
/// positive.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(Error::Param(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().fold(0.0f64, |best, &v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(dst, &(col * sign));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `M^m = V diag(max(lambda, 0)^m) V^T`, symmetrized by mirroring.
pub fn matrix_power(dec: &SpectralDecomposition, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::Param("power m must be >= 1".into()));
    }
    let w = dec.half_power_factor(m);
    Ok(symmetric_gram(&w))
}

fn symmetric_gram(w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = w * w.transpose();
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

/// `C_ij = (M^m)_ij / (sqrt((M^m)_ii) sqrt((M^m)_jj))`, unit diagonal.
pub fn affinity_profile(mm: &DMatrix<f64>, m: usize) -> Result<AffinityProfile> {
    let n = mm.nrows();
    let mut root = Vec::with_capacity(n);
    for i in 0..n {
        let v = mm[(i, i)];
        if !(v >= DIAG_FLOOR) {
            return Err(Error::VanishingSelfAffinity { index: i, value: v });
        }
        root.push(v.sqrt());
    }
    let mut c = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = mm[(i, j)] / (root[i] * root[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(AffinityProfile { entries: c, m })
}

/// Rows of `V Lambda^(m/2)` restricted to the leading `k` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// n x k, rows of unit norm except where `degenerate` is set.
    pub coords: DMatrix<f64>,
    pub degenerate: Vec<bool>,
}

pub fn embedding(dec: &SpectralDecomposition, m: usize, k: usize) -> Result<Embedding> {
    let n = dec.n();
    if k == 0 || k > n {
        return Err(Error::Param(format!("embedding dimension k = {k} must lie in 1..={n}")));
    }
    let w = dec.half_power_factor(m);
    let mut coords = w.columns(0, k).into_owned();
    let mut degenerate = vec![false; n];
    for (i, mut row) in coords.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm < DIAG_FLOOR {
            degenerate[i] = true;
        } else {
            row /= norm;
        }
    }
    Ok(Embedding { coords, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    /// 1-based rank.
    pub index: usize,
    pub lambda_m: f64,
    pub lambda_m_pow_m: f64,
    /// Eigenvalue of `C / n`.
    pub lambda_c: f64,
}

/// Leading `rows` eigenvalues of `M`, of `M^m`, and of `C / n`.
pub fn spectrum_report(dec: &SpectralDecomposition, c: &AffinityProfile, rows: usize) -> Result<Vec<SpectrumRow>> {
    let n = dec.n();
    let m = c.m;
    let c_eig = eig_sym(&(&c.entries / n as f64))?;
    Ok((0..rows.min(n))
        .map(|i| {
            let l = dec.eigenvalues[i];
            SpectrumRow {
                index: i + 1,
                lambda_m: l,
                lambda_m_pow_m: l.max(0.0).powi(m.min(i32::MAX as usize) as i32),
                lambda_c: c_eig.eigenvalues[i],
            }
        })
        .collect())
}
