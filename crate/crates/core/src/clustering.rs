//! Greedy threshold clustering on the renormalized affinity and the
//! end-to-end pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calibration::{calibrate_beta, select_m, CalibrationResult};
use crate::error::{Error, Result};
use crate::kernels::{compose_kernel, gaussian_kernel, induced_distances, KernelMatrix};
use crate::points::{squared_distances, PointSet};
use crate::spectral::{
    affinity_profile, build_m, degrees, eig_sym, matrix_power, AffinityProfile, DegreeVector, SpectralDecomposition,
    SIGMA,
};

/// How the next seed index is chosen among unassigned points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    LowestIndex,
    Random { seed: u64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::LowestIndex => "lowest-index",
            Strategy::Random { .. } => "random",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Strategy::LowestIndex => None,
            Strategy::Random { seed } => Some(*seed),
        }
    }
}

/// Effective parameters of a run, echoed into the JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub beta: f64,
    pub m: usize,
    pub p: usize,
    pub h: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub s: f64,
    pub strategy: &'static str,
    pub seed: Option<u64>,
    pub compose_levels: usize,
    pub level_h: Vec<f64>,
    pub level_betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub c: usize,
    pub labels: Vec<usize>,
    pub seeds: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
}

impl Clustering {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("clustering serializes")
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.c];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Repeatedly seed an unassigned index `i` and give every unassigned `j`
/// with `C_ij >= s` the next label.
pub fn greedy_cluster(c: &AffinityProfile, s: f64, strategy: Strategy) -> Result<Clustering> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Param(format!("threshold s must lie in (0, 1), got {s}")));
    }
    let n = c.n();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut seeds = Vec::new();
    let mut rng = strategy.seed().map(ChaCha8Rng::seed_from_u64);
    while !unassigned.is_empty() {
        let pick = match rng.as_mut() {
            Some(r) => r.random_range(0..unassigned.len()),
            None => 0,
        };
        let seed = unassigned[pick];
        let k = seeds.len();
        seeds.push(seed);
        labels[seed] = Some(k);
        for &j in &unassigned {
            if c.get(seed, j).min(1.0) >= s {
                labels[j] = Some(k);
            }
        }
        unassigned.retain(|&j| labels[j].is_none());
    }
    Ok(Clustering {
        c: seeds.len(),
        labels: labels.into_iter().map(|l| l.expect("every index labeled")).collect(),
        seeds,
        params: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub h: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub p: usize,
    pub s: f64,
    pub strategy: Strategy,
    pub compose_levels: usize,
    /// Calibration targets for the composition levels; missing entries use `h`.
    pub level_h: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            h: 0.005,
            sigma: SIGMA,
            zeta: 0.01,
            p: 7,
            s: 0.1,
            strategy: Strategy::LowestIndex,
            compose_levels: 0,
            level_h: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Param(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("h", self.h)?;
        unit("zeta", self.zeta)?;
        unit("s", self.s)?;
        for &lh in &self.level_h {
            unit("level h", lh)?;
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Param(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.p < 2 {
            return Err(Error::Param(format!("p must be >= 2, got {}", self.p)));
        }
        Ok(())
    }

    pub fn level_target(&self, level: usize) -> f64 {
        self.level_h.get(level).copied().unwrap_or(self.h)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub clustering: Clustering,
    pub affinity: AffinityProfile,
    pub decomposition: SpectralDecomposition,
    pub calibration: CalibrationResult,
    pub level_calibrations: Vec<CalibrationResult>,
    pub kernel: KernelMatrix,
    pub degrees: DegreeVector,
    pub m: usize,
    pub warnings: Vec<String>,
}

/// Final Gaussian kernel of the pipeline: Euclidean distances, optionally
/// replaced `compose_levels` times by the distances `2 (1 - k(x, y))`
/// induced by a calibrated Gaussian kernel, then a kernel calibrated to `h`.
///
/// Returns the kernel, its calibration and the per-level calibrations.
pub fn pipeline_kernel(
    ps: &PointSet,
    cfg: &PipelineConfig,
) -> Result<(KernelMatrix, CalibrationResult, Vec<CalibrationResult>)> {
    cfg.validate()?;
    let mut d2 = squared_distances(ps).map_err(|e| e.at("distances"))?;
    let mut level_calibrations = Vec::with_capacity(cfg.compose_levels);
    if cfg.compose_levels > 0 {
        let cal = calibrate_beta(&d2, cfg.level_target(0)).map_err(|e| e.at("composition level 1"))?;
        let mut k = gaussian_kernel(&d2, cal.beta).map_err(|e| e.at("composition level 1"))?;
        level_calibrations.push(cal);
        for level in 1..cfg.compose_levels {
            let (next, cal) = compose_kernel(&k, cfg.level_target(level)).map_err(|e| e.at("composition"))?;
            k = next;
            level_calibrations.push(cal);
        }
        d2 = induced_distances(&k);
    }
    let calibration = calibrate_beta(&d2, cfg.h).map_err(|e| e.at("calibration"))?;
    let kernel = gaussian_kernel(&d2, calibration.beta).map_err(|e| e.at("kernel"))?;
    Ok((kernel, calibration, level_calibrations))
}

/// Run every stage from raw points to a clustering.
pub fn cluster_pipeline(ps: &PointSet, cfg: &PipelineConfig) -> Result<PipelineResult> {
    cfg.validate()?;
    let n = ps.n();
    if n < 2 {
        return Err(Error::Param(format!("need at least 2 points, got {n}")));
    }
    if cfg.p > n {
        return Err(Error::Param(format!("p = {} exceeds the number of points {n}", cfg.p)));
    }
    let mut warnings = Vec::new();

    let (kernel, calibration, level_calibrations) = pipeline_kernel(ps, cfg)?;
    let degrees = degrees(&kernel, cfg.sigma).map_err(|e| e.at("degrees"))?;
    if degrees.any_clamped() {
        let msg = format!("degrees clamped at sigma for indices {:?}", degrees.clamped_indices());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let m_op = build_m(&kernel, &degrees);
    let decomposition = eig_sym(&m_op).map_err(|e| e.at("eigendecomposition"))?;
    let m = select_m(&decomposition.eigenvalues, cfg.p, cfg.zeta).map_err(|e| e.at("iteration count"))?;
    let mm = matrix_power(&decomposition, m).map_err(|e| e.at("matrix power"))?;
    let affinity = affinity_profile(&mm, m).map_err(|e| e.at("affinity"))?;
    let mut clustering = greedy_cluster(&affinity, cfg.s, cfg.strategy).map_err(|e| e.at("clustering"))?;
    if clustering.c > cfg.p {
        let msg = format!("estimated {} clusters, more than p = {}", clustering.c, cfg.p);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    clustering.params = Some(Params {
        beta: calibration.beta,
        m,
        p: cfg.p,
        h: cfg.h,
        sigma: cfg.sigma,
        zeta: cfg.zeta,
        s: cfg.s,
        strategy: cfg.strategy.name(),
        seed: cfg.strategy.seed(),
        compose_levels: cfg.compose_levels,
        level_h: (0..cfg.compose_levels).map(|l| cfg.level_target(l)).collect(),
        level_betas: level_calibrations.iter().map(|c| c.beta).collect(),
    });
    Ok(PipelineResult {
        clustering,
        affinity,
        decomposition,
        calibration,
        level_calibrations,
        kernel,
        degrees,
        m,
        warnings,
    })
}

/// Extremes of `C` within and across the groups of a labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    /// Smallest `C_ij` with `i != j` in the same group (`None` if all groups are singletons).
    pub min_within: Option<f64>,
    /// Largest `C_ij` with `i`, `j` in different groups (`None` for one group).
    pub max_across: Option<f64>,
}

pub fn separation(c: &AffinityProfile, labels: &[usize]) -> Separation {
    let mut min_within: Option<f64> = None;
    let mut max_across: Option<f64> = None;
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let v = c.get(i, j);
            if labels[i] == labels[j] {
                min_within = Some(min_within.map_or(v, |w| w.min(v)));
            } else {
                max_across = Some(max_across.map_or(v, |a| a.max(v)));
            }
        }
    }
    Separation { min_within, max_across }
}

/// Number of points whose label disagrees with `truth` under the best
/// one-to-one relabeling, or `None` when the cluster counts differ.
pub fn label_errors(labels: &[usize], truth: &[usize]) -> Option<usize> {
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let t = truth.iter().max().map_or(0, |m| m + 1);
    if c != t || labels.len() != truth.len() {
        return None;
    }
    // majority truth label per cluster; a bijection is required
    let mut counts = vec![vec![0usize; t]; c];
    for (&l, &g) in labels.iter().zip(truth) {
        counts[l][g] += 1;
    }
    let mut used = vec![false; t];
    let mut correct = 0;
    for row in &counts {
        let (g, &best) = row.iter().enumerate().max_by_key(|(g, &v)| (v, std::cmp::Reverse(*g)))?;
        if used[g] {
            return None;
        }
        used[g] = true;
        correct += best;
    }
    Some(labels.len() - correct)
}
