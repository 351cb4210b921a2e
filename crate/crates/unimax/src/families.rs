//! Explicit families of continuous functions over concretely sampled domains:
//! sin/cos on [0, 2pi), the damped spiral pair on the real line, coordinate
//! projections on spheres, the half-line extension into the open unit ball,
//! the truncated weighted-coordinate family on a compact of sequence space,
//! and user-supplied tabulated families from CSV.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inverse_normal_cdf, mesh_estimate, sample_sphere, SphereScheme};
use crate::linalg::{distance, norm2, singular_values};

/// Relative singular-value threshold for the linear-independence check.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Interval,
    HalfOpenInterval,
    CircleAngle,
    RealLineReparam,
    EuclideanGrid,
    SphereImage,
    L2TruncatedBall,
}

impl DomainKind {
    /// Parameter dimension of the refinement search space.
    pub fn is_one_dimensional(self) -> bool {
        matches!(
            self,
            DomainKind::Interval
                | DomainKind::HalfOpenInterval
                | DomainKind::CircleAngle
                | DomainKind::RealLineReparam
        )
    }
}

/// A finite sample of a domain, stored as flat ambient coordinates.
/// One-dimensional kinds keep their points strictly increasing.
#[derive(Debug, Clone)]
pub struct SampledDomain {
    pub kind: DomainKind,
    dim: usize,
    coords: Vec<f64>,
    /// Typical sample spacing (median adjacent distance for 1-d kinds,
    /// subsampled worst nearest-neighbor distance otherwise). Used to derive
    /// default tolerances, never for correctness.
    pub mesh_norm: f64,
    /// Parameter bounds for 1-d kinds; half-open right endpoints are shaved
    /// so refinement never evaluates at the excluded point.
    pub bounds: Option<(f64, f64)>,
    /// Truncation N for the l2 ball membership test.
    pub l2_truncation: Option<usize>,
}

impl SampledDomain {
    fn from_points(kind: DomainKind, dim: usize, coords: Vec<f64>) -> Self {
        let len = coords.len() / dim;
        let mesh_norm = estimate_mesh(kind, dim, &coords, len);
        let bounds = if kind.is_one_dimensional() && len > 0 {
            Some((coords[0], coords[len - 1]))
        } else {
            None
        };
        Self {
            kind,
            dim,
            coords,
            mesh_norm,
            bounds,
            l2_truncation: None,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest distance from sample `i` to an adjacent sample (1-d kinds);
    /// falls back to the global mesh estimate elsewhere. Grids with strongly
    /// nonuniform spacing (the real-line reparameterization) need this local
    /// notion for sensible default exclusion radii.
    pub fn local_spacing(&self, i: usize) -> f64 {
        if !self.kind.is_one_dimensional() {
            return self.mesh_norm;
        }
        let n = self.len();
        let mut spacing: f64 = 0.0;
        if i > 0 {
            spacing = spacing.max(self.point(i)[0] - self.point(i - 1)[0]);
        }
        if i + 1 < n {
            spacing = spacing.max(self.point(i + 1)[0] - self.point(i)[0]);
        }
        spacing
    }

    /// Whether an off-grid candidate point is admissible for refinement.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self.kind {
            DomainKind::L2TruncatedBall => {
                let n = self.l2_truncation.unwrap_or(p.len());
                let s: f64 = p
                    .iter()
                    .take(n)
                    .enumerate()
                    .map(|(i, y)| {
                        let a = (i + 1) as f64 * y;
                        a * a
                    })
                    .sum();
                s <= 1.0 + 1e-9
            }
            DomainKind::SphereImage => (norm2(p) - 1.0).abs() < 1e-9,
            _ => match self.bounds {
                Some((lo, hi)) => p[0] >= lo && p[0] <= hi,
                None => true,
            },
        }
    }
}

fn estimate_mesh(kind: DomainKind, dim: usize, coords: &[f64], len: usize) -> f64 {
    if len < 2 {
        return 0.0;
    }
    if kind.is_one_dimensional() {
        let mut gaps: Vec<f64> = (1..len).map(|i| coords[i * dim] - coords[(i - 1) * dim]).collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        gaps[gaps.len() / 2]
    } else {
        let stride = (len / 256).max(1);
        let mut worst: f64 = 0.0;
        for i in (0..len).step_by(stride) {
            let pi = &coords[i * dim..(i + 1) * dim];
            let mut nn = f64::INFINITY;
            for j in 0..len {
                if i == j {
                    continue;
                }
                let d = distance(pi, &coords[j * dim..(j + 1) * dim]);
                if d < nn {
                    nn = d;
                }
            }
            worst = worst.max(nn);
        }
        worst
    }
}

type AnalyticFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A generator is either a closed-form map evaluable anywhere in the domain,
/// or a table of values over the sampled points (CSV-loaded families).
#[derive(Clone)]
pub enum Generator {
    Analytic { label: String, f: AnalyticFn },
    Tabulated { label: String },
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Generator::Analytic { label, .. } => write!(f, "Analytic({label})"),
            Generator::Tabulated { label } => write!(f, "Tabulated({label})"),
        }
    }
}

/// A finite ordered list of generators over a sampled domain, with the
/// evaluation matrix precomputed column by column.
#[derive(Debug, Clone)]
pub struct FunctionFamily {
    pub name: String,
    pub domain: SampledDomain,
    generators: Vec<Generator>,
    columns: Vec<Vec<f64>>,
}

impl FunctionFamily {
    fn build(name: &str, domain: SampledDomain, generators: Vec<Generator>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let family = Self {
            name: name.to_string(),
            domain,
            generators,
            columns,
        };
        family.check_independence()?;
        Ok(family)
    }

    fn from_analytic(name: &str, domain: SampledDomain, generators: Vec<(String, AnalyticFn)>) -> Result<Self> {
        let columns = generators
            .iter()
            .map(|(_, f)| (0..domain.len()).map(|i| f(domain.point(i))).collect())
            .collect();
        let generators = generators
            .into_iter()
            .map(|(label, f)| Generator::Analytic { label, f })
            .collect();
        Self::build(name, domain, generators, columns)
    }

    fn check_independence(&self) -> Result<()> {
        let cols: Vec<&[f64]> = self.columns.iter().map(|c| c.as_slice()).collect();
        let sv = singular_values(&cols);
        let largest = sv[0];
        let smallest = sv[sv.len() - 1];
        let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
        if ratio < INDEPENDENCE_THRESHOLD {
            return Err(Error::DegenerateFamily {
                ratio,
                threshold: INDEPENDENCE_THRESHOLD,
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.generators.len()
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Precomputed values of generator `j` over all sampled points.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// F(p_i) = (f_1(p_i), ..., f_n(p_i)), read from the precomputed matrix.
    pub fn image_row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn is_analytic(&self) -> bool {
        self.generators
            .iter()
            .all(|g| matches!(g, Generator::Analytic { .. }))
    }

    /// Sum_j coeffs[j] * f_j at sampled point `i`.
    pub fn evaluate(&self, coeffs: &[f64], i: usize) -> Result<f64> {
        if coeffs.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: coeffs.len(),
            });
        }
        Ok(self
            .columns
            .iter()
            .zip(coeffs)
            .map(|(col, c)| c * col[i])
            .sum())
    }

    /// Combination value at an off-grid point; `None` for tabulated families.
    pub fn evaluate_at(&self, coeffs: &[f64], p: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (g, c) in self.generators.iter().zip(coeffs) {
            match g {
                Generator::Analytic { f, .. } => acc += c * f(p),
                Generator::Tabulated { .. } => return None,
            }
        }
        Some(acc)
    }

    /// Fill `out[i]` with the combination value at every sampled point.
    pub fn evaluate_all(&self, coeffs: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if coeffs.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: coeffs.len(),
            });
        }
        out.clear();
        out.extend_from_slice(&self.columns[0]);
        let c0 = coeffs[0];
        for v in out.iter_mut() {
            *v *= c0;
        }
        for (col, &c) in self.columns.iter().zip(coeffs).skip(1) {
            if c == 0.0 {
                continue;
            }
            for (v, x) in out.iter_mut().zip(col) {
                *v += c * x;
            }
        }
        Ok(())
    }
}

/// mu(t) = e^t for t <= 0, 1 for t >= 0.
fn mu(t: f64) -> f64 {
    if t <= 0.0 {
        t.exp()
    } else {
        1.0
    }
}

/// The spiral pair on the real line: x(t) = mu(t) cos(4 arctan|t|).
fn spiral_x(t: f64) -> f64 {
    mu(t) * (4.0 * t.abs().atan()).cos()
}

/// y(t) = mu(t) sin(4 arctan|t|).
fn spiral_y(t: f64) -> f64 {
    mu(t) * (4.0 * t.abs().atan()).sin()
}

/// Uniform grid of `resolution` parameters strictly inside (-1, 1), with 0
/// inserted, mapped through s -> s / (1 - s^2) onto the real line.
fn real_line_points(resolution: usize) -> Vec<f64> {
    let mut s_values: Vec<f64> = (0..resolution)
        .map(|j| -1.0 + 2.0 * (j as f64 + 1.0) / (resolution as f64 + 1.0))
        .collect();
    if !s_values.iter().any(|&s| s == 0.0) {
        s_values.push(0.0);
        s_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    s_values.iter().map(|&s| s / (1.0 - s * s)).collect()
}

/// sin and cos on [0, 2pi), sampled uniformly excluding the right endpoint.
pub fn make_circle_family(resolution: usize) -> Result<FunctionFamily> {
    if resolution < 16 {
        return Err(Error::ResolutionTooSmall {
            resolution,
            min: 16,
        });
    }
    let step = 2.0 * PI / resolution as f64;
    let coords: Vec<f64> = (0..resolution).map(|i| i as f64 * step).collect();
    let mut domain = SampledDomain::from_points(DomainKind::HalfOpenInterval, 1, coords);
    // Refinement may approach, but never reach, the excluded endpoint.
    domain.bounds = Some((0.0, 2.0 * PI - 1e-9));
    FunctionFamily::from_analytic(
        "circle",
        domain,
        vec![
            ("sin".to_string(), Arc::new(|p: &[f64]| p[0].sin()) as AnalyticFn),
            ("cos".to_string(), Arc::new(|p: &[f64]| p[0].cos()) as AnalyticFn),
        ],
    )
}

/// The damped spiral pair {x(t), y(t)} on the reparameterized real line.
pub fn make_real_line_family(resolution: usize) -> Result<FunctionFamily> {
    if resolution < 64 {
        return Err(Error::ResolutionTooSmall {
            resolution,
            min: 64,
        });
    }
    let coords = real_line_points(resolution);
    let domain = SampledDomain::from_points(DomainKind::RealLineReparam, 1, coords);
    FunctionFamily::from_analytic(
        "real-line",
        domain,
        vec![
            ("x".to_string(), Arc::new(|p: &[f64]| spiral_x(p[0])) as AnalyticFn),
            ("y".to_string(), Arc::new(|p: &[f64]| spiral_y(p[0])) as AnalyticFn),
        ],
    )
}

/// Coordinate projections pi_1, ..., pi_n on a sampled S^{n-1}.
pub fn make_sphere_projection_family(n: usize, resolution: usize) -> Result<FunctionFamily> {
    if n < 2 {
        return Err(Error::InvalidDimension { n });
    }
    let mut count = resolution.max(4);
    if count % 2 != 0 {
        count += 1;
    }
    let sample = sample_sphere(n, count, SphereScheme::GeneralizedSpiral, 0)?;
    let mut coords = Vec::with_capacity(count * n);
    for p in &sample.points {
        coords.extend_from_slice(p.coords());
    }
    let mut domain = SampledDomain::from_points(DomainKind::SphereImage, n, coords);
    domain.mesh_norm = mesh_estimate(&sample.points);
    let generators = (0..n)
        .map(|i| {
            (
                format!("pi_{}", i + 1),
                Arc::new(move |p: &[f64]| p[i]) as AnalyticFn,
            )
        })
        .collect();
    FunctionFamily::from_analytic("sphere-projection", domain, generators)
}

/// Angle homeomorphism [0, inf) -> [0, 2pi) used by the half-line extension.
fn halfline_theta(x: f64) -> f64 {
    2.0 * PI * x / (1.0 + x)
}

/// G: R -> R^2 extending F(x) = (cos theta(x), sin theta(x)) on [0, inf) by
/// the segment from F(0) = (1, 0) toward the origin on (-inf, 0), with norm
/// strictly below 1 off the half-line.
pub fn halfline_g(x: f64) -> [f64; 2] {
    if x >= 0.0 {
        let theta = halfline_theta(x);
        [theta.cos(), theta.sin()]
    } else {
        [1.0 / (1.0 - x), 0.0]
    }
}

/// The pair {pi_1 o G, pi_2 o G} on the reparameterized real line.
pub fn make_halfline_extension_family(resolution: usize) -> Result<FunctionFamily> {
    if resolution < 64 {
        return Err(Error::ResolutionTooSmall {
            resolution,
            min: 64,
        });
    }
    let coords = real_line_points(resolution);
    let domain = SampledDomain::from_points(DomainKind::RealLineReparam, 1, coords);
    FunctionFamily::from_analytic(
        "halfline-extension",
        domain,
        vec![
            (
                "pi1_G".to_string(),
                Arc::new(|p: &[f64]| halfline_g(p[0])[0]) as AnalyticFn,
            ),
            (
                "pi2_G".to_string(),
                Arc::new(|p: &[f64]| halfline_g(p[0])[1]) as AnalyticFn,
            ),
        ],
    )
}

/// The point of K with coordinates y_n = b_n / (n ||b||): the analytic
/// maximizer of the combination with coefficients b.
pub fn l2_candidate_point(b: &[f64], n_trunc: usize) -> Result<Vec<f64>> {
    let norm = norm2(b);
    if norm <= 1e-300 {
        return Err(Error::ZeroCombination);
    }
    let mut y = vec![0.0; n_trunc];
    for (i, &bi) in b.iter().enumerate().take(n_trunc) {
        y[i] = bi / ((i + 1) as f64 * norm);
    }
    Ok(y)
}

/// Generators j * pi_j, j = 1..k, over a quasi-random sample of the compact
/// K = { (a_n / n) : ||a||_2 <= 1 } truncated at dimension N, augmented with
/// the analytic candidate points for a fixed test set and any caller-supplied
/// coefficient vectors.
pub fn make_l2_truncated_family(
    k: usize,
    n_trunc: usize,
    sample_count: usize,
    extra_candidates: &[Vec<f64>],
) -> Result<FunctionFamily> {
    if k < 1 || k > n_trunc || n_trunc > 64 {
        return Err(Error::InvalidTruncation { k, n_trunc });
    }
    let alphas: Vec<f64> = crate::geometry::weyl_alphas(n_trunc + 1);
    let mut coords = Vec::with_capacity((sample_count + k + 1) * n_trunc);
    let mut scratch = vec![0.0; n_trunc];
    for j in 0..sample_count {
        for (i, a) in alphas.iter().take(n_trunc).enumerate() {
            let u = ((j as f64 + 1.0) * a).fract().clamp(1e-12, 1.0 - 1e-12);
            scratch[i] = inverse_normal_cdf(u);
        }
        let norm = norm2(&scratch);
        let u_r = ((j as f64 + 1.0) * alphas[n_trunc]).fract().clamp(1e-12, 1.0 - 1e-12);
        let radius = u_r.powf(1.0 / n_trunc as f64);
        for (i, s) in scratch.iter().enumerate() {
            coords.push(radius * s / norm / (i + 1) as f64);
        }
    }
    // Fixed test set: the unit coordinate directions and the all-ones vector.
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        candidates.push(e);
    }
    candidates.push(vec![1.0; k]);
    candidates.extend_from_slice(extra_candidates);
    for b in &candidates {
        coords.extend_from_slice(&l2_candidate_point(b, n_trunc)?);
    }
    let mut domain = SampledDomain::from_points(DomainKind::L2TruncatedBall, n_trunc, coords);
    domain.l2_truncation = Some(n_trunc);
    let generators = (0..k)
        .map(|j| {
            (
                format!("{}·pi_{}", j + 1, j + 1),
                Arc::new(move |p: &[f64]| (j + 1) as f64 * p[j]) as AnalyticFn,
            )
        })
        .collect();
    FunctionFamily::from_analytic("l2-truncated", domain, generators)
}

/// Polynomial generators (coefficient lists, lowest degree first) on a
/// uniform grid of [0, 1]. Used for the compact-interval probe corpus.
pub fn make_interval_polynomial_family(polys: &[Vec<f64>], resolution: usize) -> Result<FunctionFamily> {
    if resolution < 16 {
        return Err(Error::ResolutionTooSmall {
            resolution,
            min: 16,
        });
    }
    let step = 1.0 / (resolution as f64 - 1.0);
    let coords: Vec<f64> = (0..resolution).map(|i| i as f64 * step).collect();
    let domain = SampledDomain::from_points(DomainKind::Interval, 1, coords);
    let generators = polys
        .iter()
        .enumerate()
        .map(|(j, poly)| {
            let poly = poly.clone();
            (
                format!("p{}", j + 1),
                Arc::new(move |p: &[f64]| horner(&poly, p[0])) as AnalyticFn,
            )
        })
        .collect();
    FunctionFamily::from_analytic("interval-polynomial", domain, generators)
}

fn horner(poly: &[f64], t: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// A tabulated family over explicit 1-d sample points (strictly increasing).
pub fn make_tabulated_interval_family(points: &[f64], columns: Vec<Vec<f64>>) -> Result<FunctionFamily> {
    for i in 1..points.len() {
        if points[i] <= points[i - 1] {
            return Err(Error::CsvFormat(
                "1-d domain points must be strictly increasing".into(),
            ));
        }
    }
    for col in &columns {
        if col.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: col.len(),
            });
        }
    }
    let domain = SampledDomain::from_points(DomainKind::Interval, 1, points.to_vec());
    let generators = (0..columns.len())
        .map(|j| Generator::Tabulated {
            label: format!("g{}", j + 1),
        })
        .collect();
    FunctionFamily::build("tabulated", domain, generators, columns)
}

/// Load a tabulated family from CSV with header `p1,...,pd,g1,...,gn`.
pub fn load_family_csv(path: &Path) -> Result<FunctionFamily> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let first_gen = headers
        .iter()
        .position(|h| h.starts_with('g'))
        .ok_or_else(|| Error::CsvFormat("no generator columns (g1, g2, ...) in header".into()))?;
    if first_gen == 0 {
        return Err(Error::CsvFormat("no coordinate columns before g1".into()));
    }
    let dim = first_gen;
    let n = headers.len() - first_gen;
    let mut coords = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    for record in reader.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::CsvFormat(format!(
                "row has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (idx, field) in record.iter().enumerate() {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::CsvFormat(format!("bad number {field:?}")))?;
            if idx < dim {
                coords.push(value);
            } else {
                columns[idx - dim].push(value);
            }
        }
    }
    let len = coords.len() / dim;
    if dim == 1 {
        for i in 1..len {
            if coords[i] <= coords[i - 1] {
                return Err(Error::CsvFormat(
                    "1-d domain points must be strictly increasing".into(),
                ));
            }
        }
    }
    let kind = if dim == 1 {
        DomainKind::Interval
    } else {
        DomainKind::EuclideanGrid
    };
    let domain = SampledDomain::from_points(kind, dim, coords);
    let generators = (0..n)
        .map(|j| Generator::Tabulated {
            label: headers[first_gen + j].to_string(),
        })
        .collect();
    FunctionFamily::build("csv", domain, generators, columns)
}

/// Write a family's samples and generator values as CSV (the same layout
/// `load_family_csv` reads).
pub fn save_family_csv(family: &FunctionFamily, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let dim = family.domain.dim();
    let mut header: Vec<String> = (1..=dim).map(|i| format!("p{i}")).collect();
    header.extend((1..=family.n()).map(|j| format!("g{j}")));
    writer.write_record(&header)?;
    for i in 0..family.len() {
        let mut row: Vec<String> = family.domain.point(i).iter().map(|v| format!("{v:.17e}")).collect();
        row.extend((0..family.n()).map(|j| format!("{:.17e}", family.column(j)[i])));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
