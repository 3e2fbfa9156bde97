//! Kernel spectral clustering.
//!
//! The pipeline builds a Gaussian affinity whose bandwidth is calibrated so
//! that the mean squared off-diagonal affinity hits a target `h`, normalizes
//! it by the (clamped) degrees, raises the normalized operator to a power `m`
//! chosen from its spectrum, renormalizes the result into a cosine matrix `C`
//! and finally extracts clusters greedily by thresholding `C`. The number of
//! clusters is an output, not an input.
//!
//! ```text
//! points -> squared distances -> [kernel composition]* -> calibrate beta
//!        -> K -> degrees D -> M = K / (n sqrt(D_i D_j)) -> eig(M) -> m
//!        -> M^m -> C -> greedy threshold clustering
//! ```
//!
//! The [`markov`] module exposes the row-stochastic view of the same kernel
//! (stationary distribution, diffusion profiles) used to check that iterated
//! representations become constant on each cluster.

pub mod calibration;
pub mod clustering;
pub mod error;
pub mod kernels;
pub mod markov;
pub mod output;
pub mod points;
pub mod spectral;

pub use calibration::{calibrate_beta, empirical_f, select_m, CalibrationResult};
pub use clustering::{cluster_pipeline, greedy_cluster, Clustering, PipelineConfig, PipelineResult, Strategy};
pub use error::{Error, Result};
pub use kernels::{compose_kernel, gaussian_kernel, induced_distances, KernelMatrix};
pub use markov::{diffusion_profile, stationary_distribution, stochastic_matrix, StochasticMatrix};
pub use points::{
    extract_windows, gen_blobs, GenSpec, gen_rings, load_points, parse_pgm, squared_distances, GrayImage, PointSet,
    SquaredDistanceMatrix,
};
pub use spectral::{
    affinity_profile, build_m, degrees, eig_sym, embedding, matrix_power, spectrum_report, AffinityProfile,
    DegreeVector, Embedding, SpectralDecomposition, SpectrumRow,
};
