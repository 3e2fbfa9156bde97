//! Gaussian kernel matrices and kernel composition through the distance
//! induced by a unit-diagonal kernel's feature space.

use nalgebra::DMatrix;

use crate::calibration::{calibrate_beta, CalibrationResult};
use crate::error::{Error, Result};
use crate::points::SquaredDistanceMatrix;

/// Symmetric kernel matrix with unit diagonal and entries in [0, 1].
///
/// Entries are `exp(-beta * d2)`. Far pairs may underflow to exactly zero;
/// nothing is flushed explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    beta: f64,
}

impl KernelMatrix {
    /// Wrap a matrix after checking symmetry, unit diagonal and range.
    pub fn from_matrix(entries: DMatrix<f64>, beta: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Param("kernel matrix must be square and non-empty".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            if entries[(i, i)] != 1.0 {
                return Err(Error::Param(format!("kernel diagonal at {i} is {}, expected 1", entries[(i, i)])));
            }
            for j in 0..i {
                let v = entries[(i, j)];
                if v != entries[(j, i)] || !(0.0..=1.0).contains(&v) {
                    return Err(Error::Param(format!("kernel entry ({i},{j}) = {v} is asymmetric or outside [0,1]")));
                }
            }
        }
        Ok(KernelMatrix { entries, beta })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// `K_ij = exp(-beta * d2_ij)`, computed once per pair and mirrored.
pub fn gaussian_kernel(d2: &SquaredDistanceMatrix, beta: f64) -> Result<KernelMatrix> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Param(format!("beta must be finite and > 0, got {beta}")));
    }
    let n = d2.n();
    let mut k = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-beta * d2.get(i, j)).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(KernelMatrix { entries: k, beta })
}

/// Squared feature-space distances of a unit-diagonal kernel:
/// `||phi(x) - phi(y)||^2 = 2 (1 - A(x, y))`.
pub fn induced_distances(a: &KernelMatrix) -> SquaredDistanceMatrix {
    let n = a.n();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 2.0 * (1.0 - a.get(i, j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    SquaredDistanceMatrix::from_matrix_unchecked(d)
}

/// One level of kernel composition: a Gaussian kernel on the distances
/// induced by `a`, with its own bandwidth calibrated to target `h`.
pub fn compose_kernel(a: &KernelMatrix, h: f64) -> Result<(KernelMatrix, CalibrationResult)> {
    let d2 = induced_distances(a);
    let cal = calibrate_beta(&d2, h)?;
    let k = gaussian_kernel(&d2, cal.beta)?;
    Ok((k, cal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{gen_blobs, polygon_centers, squared_distances, PointSet};

    fn two_points(d: f64) -> SquaredDistanceMatrix {
        squared_distances(&PointSet::new(vec![vec![0.0], vec![d]]).unwrap()).unwrap()
    }

    #[test]
    fn unit_diagonal() {
        let ps = gen_blobs(1, 6, &[vec![0.0, 0.0]], 1.0, 4).unwrap();
        let k = gaussian_kernel(&squared_distances(&ps).unwrap(), 17.0).unwrap();
        for i in 0..6 {
            assert_eq!(k.get(i, i), 1.0);
        }
    }

    #[test]
    fn ln2_gives_half() {
        let k = gaussian_kernel(&two_points(1.0), std::f64::consts::LN_2).unwrap();
        assert!((k.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_scalar_oracle() {
        let ps = gen_blobs(1, 6, &[vec![0.0, 0.0, 0.0]], 0.7, 8).unwrap();
        let d2 = squared_distances(&ps).unwrap();
        let k = gaussian_kernel(&d2, 2.5).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut s = 0.0;
                for t in 0..3 {
                    s += (ps.point(i)[t] - ps.point(j)[t]).powi(2);
                }
                assert!((k.get(i, j) - (-2.5 * s).exp()).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn non_positive_beta_rejected() {
        assert!(gaussian_kernel(&two_points(1.0), 0.0).is_err());
        assert!(gaussian_kernel(&two_points(1.0), -1.0).is_err());
        assert!(gaussian_kernel(&two_points(1.0), f64::NAN).is_err());
    }

    #[test]
    fn induced_distance_values() {
        let ones = KernelMatrix::from_matrix(DMatrix::from_element(3, 3, 1.0), 0.0).unwrap();
        assert!(induced_distances(&ones).matrix().iter().all(|&v| v == 0.0));
        let half = KernelMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]), 1.0).unwrap();
        assert_eq!(induced_distances(&half).get(0, 1), 1.0);
    }

    #[test]
    fn compose_all_ones_is_unreachable() {
        let ones = KernelMatrix::from_matrix(DMatrix::from_element(3, 3, 1.0), 0.0).unwrap();
        let err = compose_kernel(&ones, 0.005).unwrap_err();
        assert!(matches!(err, Error::Unreachable { inf_f } if inf_f == 1.0), "{err}");
    }

    #[test]
    fn compose_single_pair_closed_form() {
        let a = KernelMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]), 1.0).unwrap();
        let (k, cal) = compose_kernel(&a, 0.005).unwrap();
        let beta = 200f64.ln() / 2.0;
        assert!((cal.beta - beta).abs() <= 1e-8 * beta);
        assert!((k.get(0, 1) - 1.0 / 200f64.sqrt()).abs() < 1e-9);
        assert_eq!(k.get(0, 0), 1.0);
    }

    #[test]
    fn composition_shrinks_off_block_entries() {
        let ps = gen_blobs(3, 15, &polygon_centers(3, 2.0), 0.5, 21).unwrap();
        let d2 = squared_distances(&ps).unwrap();
        let cal = calibrate_beta(&d2, 0.05).unwrap();
        let k1 = gaussian_kernel(&d2, cal.beta).unwrap();
        let (k2, _) = compose_kernel(&k1, 0.05).unwrap();
        let (mut off1, mut off2) = (0.0f64, 0.0f64);
        for i in 0..45 {
            for j in 0..45 {
                if i / 15 != j / 15 {
                    off1 = off1.max(k1.get(i, j));
                    off2 = off2.max(k2.get(i, j));
                }
            }
        }
        assert!(off2 < off1, "composed max off-block {off2} vs single level {off1}");
    }
}
