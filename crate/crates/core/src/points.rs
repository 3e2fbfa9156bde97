//! Point sets, their ingestion (CSV, PGM sliding windows), synthetic
//! generators and pairwise squared distances.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `n` points of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if d == 0 {
            return Err(Error::Param("points must have dimension >= 1".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Param(format!(
                "point {} has dimension {}, expected {}",
                i + 1,
                rows[i].len(),
                d
            )));
        }
        let n = rows.len();
        Ok(PointSet { data: rows.into_iter().flatten().collect(), n, d })
    }

    pub fn from_flat(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || data.is_empty() || !data.len().is_multiple_of(d) {
            return Err(Error::Param(format!("flat buffer of length {} is not a multiple of d = {}", data.len(), d)));
        }
        let n = data.len() / d;
        Ok(PointSet { data, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Concatenate two point sets of the same dimension.
    pub fn concat(&self, other: &PointSet) -> Result<PointSet> {
        if self.d != other.d {
            return Err(Error::Param(format!("dimension mismatch: {} vs {}", self.d, other.d)));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(PointSet { data, n: self.n + other.n, d: self.d })
    }
}

/// Symmetric, zero-diagonal, nonnegative matrix of squared distances.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistanceMatrix(DMatrix<f64>);

impl SquaredDistanceMatrix {
    /// Wrap an existing matrix after checking the invariants exactly.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::Param(format!("distance matrix must be square with n >= 2, got {}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::Param(format!("distance matrix has nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = m[(i, j)];
                if v != m[(j, i)] || !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Param(format!("distance matrix entry ({i},{j}) is invalid or asymmetric")));
                }
            }
        }
        Ok(SquaredDistanceMatrix(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        SquaredDistanceMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Off-diagonal entries `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| self.0[(i, j)]))
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Param(format!(
                "image {}x{} needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Parse CSV text with one point per line and no header.
pub fn load_points(text: &str) -> Result<PointSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut arity = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse(format!("row {}: invalid number {:?}", lineno + 1, tok)))
            })
            .collect::<Result<Vec<f64>>>()?;
        match arity {
            None => arity = Some(row.len()),
            Some(a) if a != row.len() => {
                let plural = if row.len() == 1 { "" } else { "s" };
                return Err(Error::Parse(format!(
                    "row {} has {} field{}, expected {}",
                    lineno + 1,
                    row.len(),
                    plural,
                    a
                )));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    PointSet::new(rows)
}

/// Pairwise squared Euclidean distances; each pair is summed once in index
/// order and mirrored.
pub fn squared_distances(ps: &PointSet) -> Result<SquaredDistanceMatrix> {
    let n = ps.n();
    if n < 2 {
        return Err(Error::Param(format!("need at least 2 points, got {n}")));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = ps.point(i);
        for j in (i + 1)..n {
            let s: f64 = xi.iter().zip(ps.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    Ok(SquaredDistanceMatrix(m))
}

/// `k` isotropic Gaussian blobs of `n_per` points each, blob-major order.
pub fn gen_blobs(k: usize, n_per: usize, centers: &[Vec<f64>], spread: f64, seed: u64) -> Result<PointSet> {
    if k == 0 || n_per == 0 {
        return Err(Error::Param("gen_blobs needs k >= 1 and n_per >= 1".into()));
    }
    if centers.len() != k {
        return Err(Error::Param(format!("expected {k} centers, got {}", centers.len())));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::Param(format!("spread must be finite and >= 0, got {spread}")));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::Param("centers must share a dimension >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(k * n_per * d);
    for c in centers {
        for _ in 0..n_per {
            for &ck in c {
                let g: f64 = rng.sample(StandardNormal);
                data.push(ck + spread * g);
            }
        }
    }
    PointSet::from_flat(data, d)
}

/// Vertices of a regular `k`-gon in the plane with adjacent vertices `sep`
/// apart (for `k = 3` every pair is `sep` apart).
pub fn polygon_centers(k: usize, sep: f64) -> Vec<Vec<f64>> {
    match k {
        0 => Vec::new(),
        1 => vec![vec![0.0, 0.0]],
        _ => {
            let radius = sep / (2.0 * (PI / k as f64).sin());
            (0..k)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / k as f64;
                    vec![radius * t.cos(), radius * t.sin()]
                })
                .collect()
        }
    }
}

/// Concentric noisy circles centered at the origin, ring-major order.
pub fn gen_rings(radii: &[f64], n_per: usize, noise: f64, seed: u64) -> Result<PointSet> {
    if radii.is_empty() || n_per == 0 {
        return Err(Error::Param("gen_rings needs at least one radius and n_per >= 1".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::Param(format!("radius must be positive, got {r}")));
    }
    for (i, a) in radii.iter().enumerate() {
        if radii[..i].contains(a) {
            return Err(Error::Param(format!("radius {a} is repeated")));
        }
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::Param(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(radii.len() * n_per * 2);
    for &r in radii {
        for _ in 0..n_per {
            let theta = rng.random_range(0.0..2.0 * PI);
            let gx: f64 = rng.sample(StandardNormal);
            let gy: f64 = rng.sample(StandardNormal);
            data.push(r * theta.cos() + noise * gx);
            data.push(r * theta.sin() + noise * gy);
        }
    }
    PointSet::from_flat(data, 2)
}

/// Ground-truth labels for generator output: `groups` consecutive runs of `n_per`.
pub fn block_labels(groups: usize, n_per: usize) -> Vec<usize> {
    (0..groups).flat_map(|g| std::iter::repeat_n(g, n_per)).collect()
}

/// Synthetic data description used on the command line:
/// `blobs:k:n_per:center_sep:spread` or `rings:r1,r2,...:n_per:noise`.
#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    Blobs { k: usize, n_per: usize, sep: f64, spread: f64 },
    Rings { radii: Vec<f64>, n_per: usize, noise: f64 },
}

impl GenSpec {
    pub fn generate(&self, seed: u64) -> Result<PointSet> {
        match self {
            GenSpec::Blobs { k, n_per, sep, spread } => gen_blobs(*k, *n_per, &polygon_centers(*k, *sep), *spread, seed),
            GenSpec::Rings { radii, n_per, noise } => gen_rings(radii, *n_per, *noise, seed),
        }
    }

    /// Generating component of every point, in output order.
    pub fn labels(&self) -> Vec<usize> {
        match self {
            GenSpec::Blobs { k, n_per, .. } => block_labels(*k, *n_per),
            GenSpec::Rings { radii, n_per, .. } => block_labels(radii.len(), *n_per),
        }
    }
}

impl std::str::FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Param(format!("invalid generator spec {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let count = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["blobs", k, n_per, sep, spread] => Ok(GenSpec::Blobs {
                k: count(k)?,
                n_per: count(n_per)?,
                sep: num(sep)?,
                spread: num(spread)?,
            }),
            ["rings", radii, n_per, noise] => Ok(GenSpec::Rings {
                radii: radii.split(',').map(num).collect::<Result<_>>()?,
                n_per: count(n_per)?,
                noise: num(noise)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Every `w`x`w` subwindow at offsets that are multiples of `stride`,
/// flattened row-major and scaled to [0, 1]. Windows are ordered row-major
/// by offset.
pub fn extract_windows(img: &GrayImage, w: usize, stride: usize) -> Result<PointSet> {
    if w == 0 || w > img.width.min(img.height) {
        return Err(Error::Param(format!(
            "window size {w} must be in 1..={} for a {}x{} image",
            img.width.min(img.height),
            img.width,
            img.height
        )));
    }
    if stride == 0 || stride >= w {
        return Err(Error::Param(format!("stride {stride} must satisfy 1 <= stride < window size {w}")));
    }
    let mut data = Vec::new();
    for top in (0..=img.height - w).step_by(stride) {
        for left in (0..=img.width - w).step_by(stride) {
            for r in top..top + w {
                data.extend(img.pixels[r * img.width + left..r * img.width + left + w].iter().map(|&p| p as f64 / 255.0));
            }
        }
    }
    PointSet::from_flat(data, w * w)
}

/// Parse a binary (`P5`) or ASCII (`P2`) PGM with maxval <= 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::Parse("pgm: missing magic".into()))?;
    let binary = match magic.as_slice() {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(Error::Parse(format!("pgm: unsupported magic {:?}", String::from_utf8_lossy(&magic)))),
    };
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| Error::Parse(format!("pgm: missing {name}")))?;
        *slot = std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("pgm: invalid {name}")))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("pgm: maxval {maxval} not in 1..=255")));
    }
    let count = width * height;
    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let raster = bytes
            .get(pos..pos + count)
            .ok_or_else(|| Error::Parse(format!("pgm: expected {count} pixel bytes")))?;
        raster.to_vec()
    } else {
        let mut px = Vec::with_capacity(count);
        for _ in 0..count {
            let tok = next_token(bytes, &mut pos).ok_or_else(|| Error::Parse(format!("pgm: expected {count} pixel values")))?;
            let v: usize = std::str::from_utf8(&tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse("pgm: invalid pixel value".into()))?;
            if v > maxval {
                return Err(Error::Parse(format!("pgm: pixel value {v} exceeds maxval {maxval}")));
            }
            px.push(v as u8);
        }
        px
    };
    if let Some(&v) = pixels.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::Parse(format!("pgm: pixel value {v} exceeds maxval {maxval}")));
    }
    GrayImage::new(width, height, pixels)
}

/// Next whitespace-delimited token, skipping `#` comments to end of line.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| bytes[start..*pos].to_vec())
}
