//! Bandwidth calibration and iteration-count selection.
//!
//! The bandwidth is the root of `F(beta) = h`, where `F` is the mean over
//! distinct ordered pairs of `exp(-2 beta d2_ij)`, the squared Gaussian
//! affinity. `F` decreases from 1 at `beta = 0` to the fraction of
//! coincident pairs as `beta -> inf`, so the root is bracketed by doubling
//! and then bisected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::SquaredDistanceMatrix;

/// Relative tolerance on `|F(beta) - h| / h`.
pub const TOL_F: f64 = 1e-9;
pub const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 2048;
/// Eigenvalues below this are replaced by it in [`select_m`].
pub const LAMBDA_FLOOR: f64 = 1e-12;
pub const M_MAX: usize = 1_000_000;
/// Ratios `lambda_p / lambda_1` this close to 1 are roundoff, not decay.
pub const DEGENERATE_RATIO_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Phase {
    Bracket,
    Bisect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub phase: Phase,
    pub beta: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub beta: f64,
    pub achieved_f: f64,
    pub target_h: f64,
    /// Number of bisection steps.
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
}

/// Mean of `exp(-2 beta d2_ij)` over ordered pairs `i != j`.
pub fn empirical_f(d2: &SquaredDistanceMatrix, beta: f64) -> f64 {
    let n = d2.n() as f64;
    let sum: f64 = d2.pairs().map(|v| (-2.0 * beta * v).exp()).sum();
    2.0 * sum / (n * (n - 1.0))
}

/// Solve `empirical_f(d2, beta) = h` to relative tolerance [`TOL_F`].
pub fn calibrate_beta(d2: &SquaredDistanceMatrix, h: f64) -> Result<CalibrationResult> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Param(format!("target h must lie in (0, 1), got {h}")));
    }
    let n = d2.n() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let (zeros, positive_sum) = d2
        .pairs()
        .fold((0usize, 0.0f64), |(z, s), v| if v == 0.0 { (z + 1, s) } else { (z, s + v) });
    let inf_f = zeros as f64 / pairs;
    if inf_f >= h {
        return Err(Error::Unreachable { inf_f });
    }

    let tol = TOL_F * h;
    let mut trace = Vec::new();
    let mut lo = 0.0;
    let mut hi = (pairs - zeros as f64) / positive_sum;
    let mut f_hi = empirical_f(d2, hi);
    trace.push(TraceStep { phase: Phase::Bracket, beta: hi, f: f_hi });
    let mut doublings = 0;
    while f_hi >= h {
        if (f_hi - h).abs() <= tol {
            return Ok(CalibrationResult { beta: hi, achieved_f: f_hi, target_h: h, iterations: 0, trace });
        }
        lo = hi;
        hi *= 2.0;
        f_hi = empirical_f(d2, hi);
        trace.push(TraceStep { phase: Phase::Bracket, beta: hi, f: f_hi });
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Unreachable { inf_f: f_hi });
        }
    }

    let (mut best_beta, mut best_f) = (hi, f_hi);
    for step in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = empirical_f(d2, mid);
        trace.push(TraceStep { phase: Phase::Bisect, beta: mid, f });
        if (f - h).abs() < (best_f - h).abs() {
            best_beta = mid;
            best_f = f;
        }
        if (f - h).abs() <= tol || mid == lo || mid == hi {
            return Ok(CalibrationResult { beta: best_beta, achieved_f: best_f, target_h: h, iterations: step, trace });
        }
        if f > h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationResult { beta: best_beta, achieved_f: best_f, target_h: h, iterations: MAX_BISECTIONS, trace })
}

/// Smallest `m >= 1` with `(lambda_p / lambda_1)^m <= zeta`.
///
/// `eigs` must be sorted descending; `p` is 1-based.
pub fn select_m(eigs: &[f64], p: usize, zeta: f64) -> Result<usize> {
    if p == 0 || p > eigs.len() {
        return Err(Error::Param(format!("p = {p} must lie in 1..={}", eigs.len())));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Param(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let top = eigs[0];
    if !(top > 0.0) {
        return Err(Error::Param(format!("leading eigenvalue must be positive, got {top}")));
    }
    let ratio = eigs[p - 1].max(LAMBDA_FLOOR) / top;
    if ratio >= 1.0 - DEGENERATE_RATIO_GAP {
        return Err(Error::DegenerateSpectrum { ratio });
    }
    let m = (zeta.ln() / ratio.ln()).ceil().max(1.0);
    if m > M_MAX as f64 {
        log::warn!("iteration count {m} capped at {M_MAX} (lambda_p / lambda_1 = {ratio})");
        return Ok(M_MAX);
    }
    Ok(m as usize)
}
