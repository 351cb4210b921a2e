//! The open sets U_n on C[0,1] at grid scale: membership testing, the
//! triangular bump that pushes any sampled function into U_n while moving it
//! at most epsilon in sup norm, and a consistency check of the finite
//! intersection against the unique-max certifier.
//!
//! All semantics are grid-restricted: "max over |t - x| >= 1/n" means the max
//! over grid points at index distance >= ceil((resolution-1)/n), which is
//! exact because the grid is uniform.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::certify::{certify_unique_max, CertifyOutcome};
use crate::error::{Error, Result};
use crate::families::make_tabulated_interval_family;

/// Minimum number of grid samples for a function on [0,1].
pub const MIN_RESOLUTION: usize = 17;

/// A function on [0,1] sampled on the uniform grid t_i = i/(resolution-1),
/// endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction01 {
    pub values: Vec<f64>,
}

impl SampledFunction01 {
    /// Wraps a value vector; the grid is implied by its length.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_RESOLUTION {
            return Err(Error::ResolutionTooSmall {
                resolution: values.len(),
                min: MIN_RESOLUTION,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ConfigInvalid(
                "sampled function contains non-finite values".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Samples `f` at `resolution` uniform grid points.
    pub fn from_fn(resolution: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let step = 1.0 / (resolution.max(2) - 1) as f64;
        Self::new((0..resolution).map(|i| f(i as f64 * step)).collect())
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    /// Grid spacing 1/(resolution - 1).
    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    /// Grid point t_i.
    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    /// Index of the first grid maximizer.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Writes the function as CSV with header `t,value`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["t", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            writer.write_record([format!("{:.17e}", self.t(i)), format!("{v:.17e}")])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a `t,value` CSV and checks the grid is the expected uniform one.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::CsvFormat(format!(
                "expected header t,value, got {headers:?}"
            )));
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::CsvFormat(format!("bad number {s:?}: {e}")))
            };
            ts.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        let f = Self::new(values)?;
        let step = f.step();
        for (i, &t) in ts.iter().enumerate() {
            if (t - i as f64 * step).abs() > 1e-9 {
                return Err(Error::CsvFormat(format!(
                    "row {i}: t = {t} is not on the uniform grid with step {step}"
                )));
            }
        }
        Ok(f)
    }
}

/// Index distance corresponding to |t - x| >= 1/n on the grid, after checking
/// the coarseness precondition 1/n >= 2 * step.
fn far_index_distance(f: &SampledFunction01, n: usize) -> Result<usize> {
    let step = f.step();
    if n == 0 || 1.0 / (n as f64) < 2.0 * step {
        return Err(Error::ResolutionTooCoarse { n, step });
    }
    // |i - j| * step >= 1/n  <=>  |i - j| >= (res-1)/n, so the smallest far
    // index offset is ceil((res-1)/n).
    Ok((f.values.len() - 1).div_ceil(n))
}

/// Tests whether `f` belongs to U_n at grid scale: some grid point x has
/// f(x) > max over grid points t with |t - x| >= 1/n. Returns the first
/// witness x in grid order, or None.
pub fn un_membership(f: &SampledFunction01, n: usize) -> Result<(bool, Option<f64>)> {
    let d = far_index_distance(f, n)?;
    let len = f.values.len();
    // prefix[i] = max of values[..=i]; suffix[i] = max of values[i..].
    let mut prefix = f.values.clone();
    for i in 1..len {
        prefix[i] = prefix[i].max(prefix[i - 1]);
    }
    let mut suffix = f.values.clone();
    for i in (0..len - 1).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    for i in 0..len {
        let mut far = f64::NEG_INFINITY;
        if i >= d {
            far = far.max(prefix[i - d]);
        }
        if i + d < len {
            far = far.max(suffix[i + d]);
        }
        // An empty far region (possible only for n = 1) never witnesses:
        // there is nothing to dominate strictly.
        if far.is_finite() && f.values[i] > far {
            return Ok((true, Some(f.t(i))));
        }
    }
    Ok((false, None))
}

/// Strictness margin of the witness at grid point index `i`: f(x) minus the
/// far max. Positive iff `i` witnesses membership in U_n.
pub fn un_margin(f: &SampledFunction01, n: usize, i: usize) -> Result<f64> {
    let d = far_index_distance(f, n)?;
    let mut far = f64::NEG_INFINITY;
    for j in 0..f.values.len() {
        if j.abs_diff(i) >= d {
            far = far.max(f.values[j]);
        }
    }
    if !far.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(f.values[i] - far)
}

/// Adds a triangular bump of height `epsilon` at the first grid maximizer of
/// `h`, producing k with ||h - k||_inf <= epsilon and k in U_n. The bump
/// half-width is min(1/(2n), distance to the boundary clamped below at twice
/// the grid step), which keeps the bump strictly inside the far-exclusion
/// radius 1/n.
pub fn bump_into_un(h: &SampledFunction01, epsilon: f64, n: usize) -> Result<SampledFunction01> {
    if !(epsilon > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "bump height must be positive, got {epsilon}"
        )));
    }
    far_index_distance(h, n)?;
    let step = h.step();
    let i0 = h.argmax();
    let x0 = h.t(i0);
    let boundary = x0.min(1.0 - x0);
    let width = (1.0 / (2.0 * n as f64)).min(boundary.max(2.0 * step));
    let values = h
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let b = epsilon * (1.0 - (h.t(i) - x0).abs() / width).max(0.0);
            let mut k = v + b;
            // fl(v + eps) - v can round one ulp above eps; step down so the
            // sup-norm bound ||h - k|| <= eps holds exactly in f64.
            while k - v > epsilon {
                k = k.next_down();
            }
            k
        })
        .collect();
    SampledFunction01::new(values)
}

/// Per-n membership record inside a consistency report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnRecord {
    pub n: usize,
    pub member: bool,
    pub witness: Option<f64>,
}

/// Verdict of comparing finite U_n membership against the certifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyVerdict {
    /// Both sides say unique max, or both say not.
    Agree,
    /// In every tested U_n, yet the certifier found distinct near-maxima whose
    /// separation is below 1/n_max: the finite intersection is too coarse to
    /// see them, which is the expected finite-n gap, not a contradiction.
    NMaxTooSmall,
    /// The certifier could not decide at the requested tolerances.
    Inconclusive,
    /// A genuine mismatch between the two computations.
    Disagree,
}

/// Report of `intersection_consistency`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub resolution: usize,
    pub n_max: usize,
    pub memberships: Vec<UnRecord>,
    pub member_of_all: bool,
    pub certify: CertifyOutcome,
    pub verdict: ConsistencyVerdict,
}

/// Compares membership in U_n for all valid n <= n_max against the verdict of
/// the unique-max certifier run on `f` as a one-generator family.
pub fn intersection_consistency(
    f: &SampledFunction01,
    n_max: usize,
    exclusion_radius: Option<f64>,
    tie_tolerance: Option<f64>,
) -> Result<ConsistencyReport> {
    // Validate the finest requested level up front; coarser n only get
    // skipped if even n = 1 fails, which new() resolutions cannot.
    far_index_distance(f, n_max.max(1))?;
    let mut memberships = Vec::new();
    let mut member_of_all = true;
    // U_1 at grid scale only compares the two endpoints (|t - x| >= 1 forces
    // {x, t} = {0, 1}), which says nothing about interior maxima; the
    // intersection over n >= 2 is the same set, so start there.
    for n in 2..=n_max {
        let (member, witness) = un_membership(f, n)?;
        member_of_all &= member;
        memberships.push(UnRecord { n, member, witness });
    }

    let points: Vec<f64> = (0..f.values.len()).map(|i| f.t(i)).collect();
    let family = make_tabulated_interval_family(&points, vec![f.values.clone()])?;
    let certify = certify_unique_max(&family, &[1.0], exclusion_radius, tie_tolerance)?;

    let verdict = match &certify {
        CertifyOutcome::Certificate(_) => {
            if member_of_all {
                ConsistencyVerdict::Agree
            } else {
                ConsistencyVerdict::Disagree
            }
        }
        CertifyOutcome::Witness(w) => {
            if !member_of_all {
                ConsistencyVerdict::Agree
            } else if w.separation < 1.0 / n_max as f64 {
                // Maxima closer than the finest excluded radius 1/n_max are
                // invisible to every tested U_n.
                ConsistencyVerdict::NMaxTooSmall
            } else {
                ConsistencyVerdict::Disagree
            }
        }
        CertifyOutcome::Inconclusive { .. } => ConsistencyVerdict::Inconclusive,
    };

    Ok(ConsistencyReport {
        resolution: f.values.len(),
        n_max,
        memberships,
        member_of_all,
        certify,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quartic(t: f64) -> f64 {
        -(t - 0.25) * (t - 0.25) * (t - 0.75) * (t - 0.75)
    }

    #[test]
    fn rejects_short_vectors() {
        assert!(matches!(
            SampledFunction01::new(vec![0.0; 16]),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn sine_is_in_u2() {
        // First witness in grid order is the first x with
        // sin(pi x) > sin(pi (x + 1/2)), i.e. just past x = 1/4.
        let f = SampledFunction01::from_fn(101, |t| (PI * t).sin()).unwrap();
        let (member, witness) = un_membership(&f, 2).unwrap();
        assert!(member);
        assert!((witness.unwrap() - 0.26).abs() < 1e-12);
        // The paper's canonical witness x = 1/2 also works.
        assert!(un_margin(&f, 2, 50).unwrap() > 0.9);
    }

    #[test]
    fn two_equal_maxima_fail_u4() {
        let f = SampledFunction01::from_fn(101, quartic).unwrap();
        let (member, witness) = un_membership(&f, 4).unwrap();
        assert!(!member);
        assert!(witness.is_none());
    }

    #[test]
    fn constant_never_member() {
        let f = SampledFunction01::new(vec![3.5; 33]).unwrap();
        for n in 1..=8 {
            assert!(!un_membership(&f, n).unwrap().0);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let f = SampledFunction01::new(vec![0.0; 17]).unwrap();
        // step = 1/16; n = 9 gives 1/9 < 2/16.
        assert!(matches!(
            un_membership(&f, 9),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        assert!(un_membership(&f, 8).is_ok());
    }

    #[test]
    fn nesting_of_witness() {
        // U_n shrinks as n grows: a witness for U_n stays a witness for every
        // n' <= n, because the far set only loses points.
        let f = SampledFunction01::from_fn(201, |t| (PI * t).sin()).unwrap();
        let (member, witness) = un_membership(&f, 16).unwrap();
        assert!(member);
        let i = (witness.unwrap() / f.step()).round() as usize;
        for n in 2..=16 {
            assert!(un_margin(&f, n, i).unwrap() > 0.0);
        }
    }

    #[test]
    fn openness_at_grid_scale() {
        let f = SampledFunction01::from_fn(101, |t| (PI * t).sin()).unwrap();
        let (_, witness) = un_membership(&f, 2).unwrap();
        let i = (witness.unwrap() / f.step()).round() as usize;
        let margin = un_margin(&f, 2, i).unwrap();
        assert!(margin > 0.0);
        // Perturb by just under half the margin with worst signs.
        let eps = 0.499 * margin;
        let mut g = f.clone();
        for (j, v) in g.values.iter_mut().enumerate() {
            *v += if j == i { -eps } else { eps };
        }
        assert!(un_margin(&g, 2, i).unwrap() > 0.0);
    }

    #[test]
    fn bump_flat_function() {
        let h = SampledFunction01::new(vec![0.0; 101]).unwrap();
        let k = bump_into_un(&h, 0.1, 4).unwrap();
        // First-index tie-break puts the peak at t = 0.
        assert_eq!(k.values[0], 0.1);
        assert!((h.sup_distance(&k).unwrap() - 0.1).abs() < 1e-15);
        let (member, witness) = un_membership(&k, 4).unwrap();
        assert!(member);
        assert_eq!(witness, Some(0.0));
    }

    #[test]
    fn bump_preserves_existing_membership() {
        let h = SampledFunction01::from_fn(101, |t| (PI * t).sin()).unwrap();
        assert!(un_membership(&h, 4).unwrap().0);
        let k = bump_into_un(&h, 0.05, 4).unwrap();
        assert!(h.sup_distance(&k).unwrap() <= 0.05);
        assert!(un_membership(&k, 4).unwrap().0);
    }

    #[test]
    fn bump_breaks_quartic_tie() {
        let h = SampledFunction01::from_fn(101, quartic).unwrap();
        assert!(!un_membership(&h, 4).unwrap().0);
        let k = bump_into_un(&h, 1e-3, 4).unwrap();
        assert!(h.sup_distance(&k).unwrap() <= 1e-3);
        let (member, witness) = un_membership(&k, 4).unwrap();
        assert!(member);
        // The bump is centered on the first maximizer t = 1/4; the first grid
        // witness lies inside its support (the whole raised neighborhood
        // dominates the untouched twin peak at 3/4).
        assert!((witness.unwrap() - 0.25).abs() <= 0.125 + 1e-12);
        assert!(un_margin(&k, 4, 25).unwrap() > 0.0);
    }

    #[test]
    fn bump_rejects_nonpositive_epsilon() {
        let h = SampledFunction01::new(vec![0.0; 101]).unwrap();
        assert!(matches!(
            bump_into_un(&h, 0.0, 4),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn consistency_sine_agrees() {
        let f = SampledFunction01::from_fn(1001, |t| (PI * t).sin()).unwrap();
        let report = intersection_consistency(&f, 8, None, None).unwrap();
        assert!(report.member_of_all);
        assert!(report.certify.is_certificate());
        assert_eq!(report.verdict, ConsistencyVerdict::Agree);
    }

    #[test]
    fn consistency_quartic_agrees_on_failure() {
        let f = SampledFunction01::from_fn(1001, quartic).unwrap();
        let report = intersection_consistency(&f, 8, None, None).unwrap();
        assert!(!report.member_of_all);
        assert!(report.certify.is_witness());
        assert_eq!(report.verdict, ConsistencyVerdict::Agree);
    }

    #[test]
    fn consistency_close_maxima_flag_n_max() {
        // Equal peaks at 0.5 and 0.55: distance below 1/8, so every U_n with
        // n <= 8 excludes the twin from the far set.
        let peak = |c: f64, t: f64| (1.0 - (t - c).abs() / 0.02).max(0.0);
        let f =
            SampledFunction01::from_fn(1001, |t| peak(0.5, t).max(peak(0.55, t))).unwrap();
        let report = intersection_consistency(&f, 8, None, None).unwrap();
        assert!(report.member_of_all);
        assert!(report.certify.is_witness());
        assert_eq!(report.verdict, ConsistencyVerdict::NMaxTooSmall);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = SampledFunction01::from_fn(65, |t| t * (1.0 - t)).unwrap();
        f.save_csv(&path).unwrap();
        let g = SampledFunction01::load_csv(&path).unwrap();
        assert_eq!(f, g);
    }
}
