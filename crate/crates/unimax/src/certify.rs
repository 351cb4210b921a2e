//! Certifies that a nontrivial linear combination attains its maximum exactly
//! once over the sampled domain, with a quantified separation margin: global
//! grid search, tie clustering by exclusion radius, and local refinement.
//! Also provides the closed-form oracle for the sphere case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{DomainKind, FunctionFamily};
use crate::geometry::{normalize, UnitVector};
use crate::linalg::{distance, norm2};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// A certified unique maximum: the margin is the gap between the (refined)
/// maximum and the best sampled value outside the exclusion ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniqueMaxCertificate {
    pub location: Vec<f64>,
    pub value: f64,
    pub margin: f64,
    pub exclusion_radius: f64,
    pub resolution: usize,
}

/// Two or more well-separated sample clusters tie for the maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonUniqueWitness {
    pub locations: Vec<Vec<f64>>,
    pub value_gap: f64,
    pub separation: f64,
}

/// Certification verdict. `Inconclusive` means the single tie cluster did not
/// separate from the rest of the domain at this resolution; it is reported as
/// such, never coerced to unique or non-unique.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CertifyOutcome {
    Certificate(UniqueMaxCertificate),
    Witness(NonUniqueWitness),
    Inconclusive {
        location: Vec<f64>,
        value: f64,
        margin: f64,
        exclusion_radius: f64,
    },
}

impl CertifyOutcome {
    pub fn is_certificate(&self) -> bool {
        matches!(self, CertifyOutcome::Certificate(_))
    }

    pub fn is_witness(&self) -> bool {
        matches!(self, CertifyOutcome::Witness(_))
    }
}

fn check_nonzero(coeffs: &[f64]) -> Result<()> {
    if norm2(coeffs) <= 1e-300 {
        return Err(Error::ZeroCombination);
    }
    Ok(())
}

/// Exact maximum over the sampled domain; ties broken by ascending index.
pub fn brute_force_argmax(
    family: &FunctionFamily,
    coeffs: &[f64],
    top_k: usize,
) -> Result<Vec<(usize, f64)>> {
    check_nonzero(coeffs)?;
    let mut values = Vec::new();
    family.evaluate_all(coeffs, &mut values)?;
    let mut top: Vec<(usize, f64)> = Vec::with_capacity(top_k + 1);
    for (i, &v) in values.iter().enumerate() {
        let pos = top.partition_point(|&(pi, pv)| pv > v || (pv == v && pi < i));
        if pos < top_k {
            top.insert(pos, (i, v));
            top.truncate(top_k);
        }
    }
    Ok(top)
}

/// Maximizer of the sampled values; lowest index wins ties.
pub(crate) fn scan_argmax(values: &[f64]) -> (usize, f64) {
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    (best_i, best_v)
}

/// Local ascent from a sampled maximizer: golden-section (plus a parabolic
/// polish) on 1-parameter domains, compass search on sphere and grid domains.
/// Never returns a value below the seeded one; tabulated families and
/// degenerate radii return the seed unchanged.
pub fn refine_local(
    family: &FunctionFamily,
    coeffs: &[f64],
    seed_index: usize,
    radius: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let seed_point = family.domain.point(seed_index).to_vec();
    let seed_value = family
        .evaluate(coeffs, seed_index)
        .expect("seed index and coefficients validated by callers");
    if !family.is_analytic() || radius <= 0.0 || iterations == 0 {
        return (seed_point, seed_value);
    }
    let (point, value) = match family.domain.kind {
        k if k.is_one_dimensional() => {
            refine_1d(family, coeffs, seed_point[0], radius, iterations)
        }
        DomainKind::SphereImage => {
            refine_compass(family, coeffs, &seed_point, radius, iterations, true)
        }
        _ => refine_compass(family, coeffs, &seed_point, radius, iterations, false),
    };
    if value > seed_value {
        (point, value)
    } else {
        (seed_point, seed_value)
    }
}

fn refine_1d(
    family: &FunctionFamily,
    coeffs: &[f64],
    t0: f64,
    radius: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let (lo, hi) = family.domain.bounds.unwrap_or((t0 - radius, t0 + radius));
    let mut a = (t0 - radius).max(lo);
    let mut b = (t0 + radius).min(hi);
    let eval = |t: f64| family.evaluate_at(coeffs, &[t]).unwrap();
    let mut best_t = t0;
    let mut best_v = eval(t0);
    let consider = |t: f64, v: f64, best_t: &mut f64, best_v: &mut f64| {
        if v > *best_v {
            *best_v = v;
            *best_t = t;
        }
    };
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    consider(c, fc, &mut best_t, &mut best_v);
    consider(d, fd, &mut best_t, &mut best_v);
    for _ in 0..iterations {
        if (b - a).abs() < 1e-14 * (1.0 + t0.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = eval(c);
            consider(c, fc, &mut best_t, &mut best_v);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = eval(d);
            consider(d, fd, &mut best_t, &mut best_v);
        }
    }
    // Parabolic polish: the golden bracket bottoms out at sqrt(eps) in
    // location; the fitted vertex recovers full precision on smooth maxima
    // and is rejected whenever it does not improve (kinks, plateaus).
    let h = 1e-4 * (1.0 + best_t.abs());
    if best_t - h >= lo && best_t + h <= hi {
        let (fl, f0, fr) = (eval(best_t - h), best_v, eval(best_t + h));
        let denom = fl - 2.0 * f0 + fr;
        if denom < 0.0 {
            let vertex = (best_t + h * (fl - fr) / (2.0 * denom)).clamp(lo, hi);
            let fv = eval(vertex);
            if fv >= best_v {
                best_v = fv;
                best_t = vertex;
            }
        }
    }
    (vec![best_t], best_v)
}

fn refine_compass(
    family: &FunctionFamily,
    coeffs: &[f64],
    seed: &[f64],
    radius: f64,
    iterations: usize,
    renormalize: bool,
) -> (Vec<f64>, f64) {
    let mut p = seed.to_vec();
    let mut v = family.evaluate_at(coeffs, &p).unwrap();
    let mut r = radius;
    for _ in 0..iterations {
        let mut improved = false;
        for i in 0..p.len() {
            for sign in [1.0, -1.0] {
                let mut q = p.clone();
                q[i] += sign * r;
                if renormalize {
                    match normalize(&q) {
                        Ok(u) => q = u.coords().to_vec(),
                        Err(_) => continue,
                    }
                } else if !family.domain.contains(&q) {
                    continue;
                }
                let qv = family.evaluate_at(coeffs, &q).unwrap();
                if qv > v {
                    v = qv;
                    p = q;
                    improved = true;
                }
            }
        }
        if !improved {
            r *= 0.5;
            if r < 1e-13 {
                break;
            }
        }
    }
    (p, v)
}

/// Default exclusion radius: ten sample spacings around the maximizer
/// (local spacing, so strongly nonuniform grids get a sensible scale).
fn default_exclusion_radius(family: &FunctionFamily, argmax: usize) -> f64 {
    10.0 * family.domain.local_spacing(argmax).max(1e-300)
}

/// Cluster the tied sample indices so that distinct clusters are at least
/// `radius` apart (single linkage). Returns one representative per cluster:
/// the member with the highest value, lowest index on ties.
fn cluster_ties(
    family: &FunctionFamily,
    ties: &[usize],
    values: &[f64],
    radius: f64,
) -> Vec<usize> {
    let one_d = family.domain.kind.is_one_dimensional();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    if one_d {
        // Samples are in increasing parameter order: split at gaps > radius.
        let mut current: Vec<usize> = Vec::new();
        for &i in ties {
            if let Some(&prev) = current.last() {
                let gap = family.domain.point(i)[0] - family.domain.point(prev)[0];
                if gap > radius {
                    clusters.push(std::mem::take(&mut current));
                }
            }
            current.push(i);
        }
        if !current.is_empty() {
            clusters.push(current);
        }
    } else if ties.len() <= 4096 {
        // Single-linkage by repeated merging.
        let mut label: Vec<usize> = (0..ties.len()).collect();
        loop {
            let mut merged = false;
            for a in 0..ties.len() {
                for b in (a + 1)..ties.len() {
                    if label[a] != label[b]
                        && distance(
                            family.domain.point(ties[a]),
                            family.domain.point(ties[b]),
                        ) <= radius
                    {
                        let (from, to) = (label[b].max(label[a]), label[b].min(label[a]));
                        for l in label.iter_mut() {
                            if *l == from {
                                *l = to;
                            }
                        }
                        merged = true;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        let mut seen: Vec<usize> = Vec::new();
        for (k, &l) in label.iter().enumerate() {
            if !seen.contains(&l) {
                seen.push(l);
                clusters.push(Vec::new());
            }
            let pos = seen.iter().position(|&s| s == l).unwrap();
            clusters[pos].push(ties[k]);
        }
    } else {
        // Degenerate tie sets (near-constant combinations): greedy attach to
        // the nearest representative.
        let mut reps: Vec<usize> = Vec::new();
        for &i in ties {
            let pos = reps.iter().position(|&r| {
                distance(family.domain.point(i), family.domain.point(r)) <= radius
            });
            match pos {
                Some(c) => {
                    clusters[c].push(i);
                }
                None => {
                    reps.push(i);
                    clusters.push(vec![i]);
                }
            }
        }
    }
    clusters
        .iter()
        .map(|members| {
            *members
                .iter()
                .max_by(|&&a, &&b| {
                    values[a]
                        .partial_cmp(&values[b])
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap()
        })
        .collect()
}

/// Certify "attains the maximum exactly once" over the sampled domain, up to
/// (exclusion radius, tie tolerance, resolution). `None` tolerances take the
/// documented defaults: 10 sample spacings and 1e-9 * |max|.
pub fn certify_unique_max(
    family: &FunctionFamily,
    coeffs: &[f64],
    exclusion_radius: Option<f64>,
    tie_tolerance: Option<f64>,
) -> Result<CertifyOutcome> {
    check_nonzero(coeffs)?;
    let mut values = Vec::new();
    family.evaluate_all(coeffs, &mut values)?;
    Ok(certify_from_values(
        family,
        coeffs,
        &values,
        exclusion_radius,
        tie_tolerance,
        true,
    ))
}

/// Shared core: callers that already hold the value table (the prober) skip
/// the redundant evaluation pass, and may skip refinement.
pub(crate) fn max_and_tie_reps(
    family: &FunctionFamily,
    values: &[f64],
    exclusion_radius: Option<f64>,
    tie_tolerance: Option<f64>,
) -> (f64, f64, Vec<usize>) {
    let (argmax, max_value) = scan_argmax(values);
    // Default tie tolerance: 1e-9 relative, plus an absolute floor scaled by
    // the value range so that mathematically exact ties survive 1-ulp
    // cancellation noise (e.g. v0 + v1 for v1 = -v0 computed by sin/cos).
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tie_tol = tie_tolerance.unwrap_or(1e-9 * max_value.abs() + 1e-12 * max_abs);
    let radius = exclusion_radius.unwrap_or_else(|| default_exclusion_radius(family, argmax));
    let threshold = max_value - tie_tol;
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= threshold).collect();
    let reps = cluster_ties(family, &ties, values, radius);
    (max_value, radius, reps)
}

pub(crate) fn certify_from_values(
    family: &FunctionFamily,
    coeffs: &[f64],
    values: &[f64],
    exclusion_radius: Option<f64>,
    tie_tolerance: Option<f64>,
    refine: bool,
) -> CertifyOutcome {
    let (max_value, radius, reps) =
        max_and_tie_reps(family, values, exclusion_radius, tie_tolerance);
    if reps.len() > 1 {
        let min_rep_value = reps
            .iter()
            .map(|&i| values[i])
            .fold(f64::INFINITY, f64::min);
        let mut separation = f64::INFINITY;
        for (ai, &a) in reps.iter().enumerate() {
            for &b in reps.iter().skip(ai + 1) {
                separation =
                    separation.min(distance(family.domain.point(a), family.domain.point(b)));
            }
        }
        return CertifyOutcome::Witness(NonUniqueWitness {
            locations: reps
                .iter()
                .map(|&i| family.domain.point(i).to_vec())
                .collect(),
            value_gap: max_value - min_rep_value,
            separation,
        });
    }
    let rep = reps[0];
    let (location, value) = if refine {
        let refine_radius = 2.0 * family.domain.local_spacing(rep);
        refine_local(family, coeffs, rep, refine_radius, 200)
    } else {
        (family.domain.point(rep).to_vec(), values[rep])
    };
    // Best sampled value outside the exclusion ball around the refined
    // location.
    let mut best_outside = f64::NEG_INFINITY;
    for i in 0..values.len() {
        if distance(family.domain.point(i), &location) >= radius && values[i] > best_outside {
            best_outside = values[i];
        }
    }
    let margin = value - best_outside;
    if margin > 0.0 {
        CertifyOutcome::Certificate(UniqueMaxCertificate {
            location,
            value,
            margin,
            exclusion_radius: radius,
            resolution: family.len(),
        })
    } else {
        CertifyOutcome::Inconclusive {
            location,
            value,
            margin,
            exclusion_radius: radius,
        }
    }
}

/// Closed form for the sphere projection family: the combination with
/// coefficients a attains its maximum at a/||a|| with value ||a||.
pub fn closed_form_sphere_argmax(coeffs: &[f64]) -> Result<(UnitVector, f64)> {
    let direction = normalize(coeffs)?;
    Ok((direction, norm2(coeffs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        load_family_csv, make_circle_family, make_interval_polynomial_family,
        make_real_line_family, make_sphere_projection_family, make_tabulated_interval_family,
        save_family_csv,
    };
    use std::f64::consts::PI;

    #[test]
    fn brute_force_circle_sin() {
        let fam = make_circle_family(4096).unwrap();
        let top = brute_force_argmax(&fam, &[1.0, 0.0], 1).unwrap();
        let t = fam.domain.point(top[0].0)[0];
        assert!((t - PI / 2.0).abs() < 2.0 * PI / 4096.0);
        assert!((top[0].1 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn brute_force_sphere_projection() {
        let fam = make_sphere_projection_family(2, 4096).unwrap();
        let top = brute_force_argmax(&fam, &[0.0, 1.0], 1).unwrap();
        let p = fam.domain.point(top[0].0);
        assert!(distance(p, &[0.0, 1.0]) < 0.01);
    }

    #[test]
    fn brute_force_zero_combination_errors() {
        let fam = make_circle_family(64).unwrap();
        assert!(matches!(
            brute_force_argmax(&fam, &[0.0, 0.0], 1),
            Err(Error::ZeroCombination)
        ));
    }

    #[test]
    fn brute_force_tie_break_is_lowest_index() {
        // t^2 - t on [0,1]: exact 0.0 at both endpoints; index 0 must win.
        let fam =
            make_interval_polynomial_family(&[vec![0.0, 1.0], vec![0.0, 0.0, 1.0]], 101).unwrap();
        let top = brute_force_argmax(&fam, &[-1.0, 1.0], 2).unwrap();
        assert_eq!(top[0].0, 0);
        assert_eq!(top[1].0, 100);
        assert_eq!(top[0].1, 0.0);
    }

    #[test]
    fn refine_circle_diagonal() {
        let fam = make_circle_family(4096).unwrap();
        let top = brute_force_argmax(&fam, &[1.0, 1.0], 1).unwrap();
        let (p, v) = refine_local(&fam, &[1.0, 1.0], top[0].0, 0.01, 200);
        assert!((p[0] - PI / 4.0).abs() < 1e-8, "got {}", p[0]);
        assert!((v - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn refine_real_line_second_generator() {
        let fam = make_real_line_family(20001).unwrap();
        let top = brute_force_argmax(&fam, &[0.0, 1.0], 1).unwrap();
        let spacing = fam.domain.local_spacing(top[0].0);
        let (p, _) = refine_local(&fam, &[0.0, 1.0], top[0].0, 2.0 * spacing, 200);
        assert!((p[0] - (2f64.sqrt() - 1.0)).abs() < 1e-6, "got {}", p[0]);
    }

    #[test]
    fn refine_constant_plateau_is_identity() {
        let fam = make_interval_polynomial_family(&[vec![2.5]], 101).unwrap();
        let (p, v) = refine_local(&fam, &[1.0], 40, 0.1, 100);
        assert_eq!(p[0], fam.domain.point(40)[0]);
        assert_eq!(v, 2.5);
    }

    #[test]
    fn certify_sphere_1_2_2() {
        let fam = make_sphere_projection_family(3, 20000).unwrap();
        let outcome = certify_unique_max(&fam, &[1.0, 2.0, 2.0], None, None).unwrap();
        match outcome {
            CertifyOutcome::Certificate(cert) => {
                assert!((cert.value - 3.0).abs() < 1e-6);
                let expected = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
                assert!(distance(&cert.location, &expected) < 1e-3);
                assert!(cert.margin > 0.0);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn certify_csv_loaded_t_t2_witness() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fam.csv");
        let fam =
            make_interval_polynomial_family(&[vec![0.0, 1.0], vec![0.0, 0.0, 1.0]], 1001).unwrap();
        save_family_csv(&fam, &path).unwrap();
        let fam = load_family_csv(&path).unwrap();
        let outcome = certify_unique_max(&fam, &[-1.0, 1.0], None, None).unwrap();
        match outcome {
            CertifyOutcome::Witness(w) => {
                assert_eq!(w.locations.len(), 2);
                assert!((w.locations[0][0] - 0.0).abs() < 1e-12);
                assert!((w.locations[1][0] - 1.0).abs() < 1e-12);
                assert!(w.value_gap <= 1e-12);
                assert!((w.separation - 1.0).abs() < 1e-12);
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn certify_circle_margin_matches_cosine_gap() {
        let fam = make_circle_family(8192).unwrap();
        let r = 0.3;
        let outcome = certify_unique_max(&fam, &[1.0, 0.0], Some(r), None).unwrap();
        match outcome {
            CertifyOutcome::Certificate(cert) => {
                assert!((cert.location[0] - PI / 2.0).abs() < 1e-6);
                let expected_margin = 1.0 - r.cos();
                assert!(
                    (cert.margin - expected_margin).abs() < 1e-3,
                    "margin {} vs expected {}",
                    cert.margin,
                    expected_margin
                );
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn certify_plateau_is_inconclusive() {
        // A flat top wider than the exclusion ball: honest "can't tell".
        let points: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let values: Vec<f64> = points
            .iter()
            .map(|&t| if (0.3..=0.7).contains(&t) { 1.0 } else { t.min(1.0 - t) })
            .collect();
        let fam = make_tabulated_interval_family(&points, vec![values]).unwrap();
        let outcome = certify_unique_max(&fam, &[1.0], Some(0.1), None).unwrap();
        assert!(matches!(outcome, CertifyOutcome::Inconclusive { .. }));
    }

    #[test]
    fn closed_form_examples() {
        let (z, v) = closed_form_sphere_argmax(&[3.0, 4.0]).unwrap();
        assert!((z.coords()[0] - 0.6).abs() < 1e-15);
        assert!((z.coords()[1] - 0.8).abs() < 1e-15);
        assert!((v - 5.0).abs() < 1e-15);
        let (z, v) = closed_form_sphere_argmax(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(z.coords(), &[0.0, 0.0, 1.0]);
        assert_eq!(v, 1.0);
        assert!(closed_form_sphere_argmax(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn certificate_soundness_rescan() {
        let fam = make_circle_family(2048).unwrap();
        let coeffs = [0.8, -1.7];
        let outcome = certify_unique_max(&fam, &coeffs, None, None).unwrap();
        let cert = match outcome {
            CertifyOutcome::Certificate(c) => c,
            other => panic!("expected certificate, got {other:?}"),
        };
        for i in 0..fam.len() {
            assert!(fam.evaluate(&coeffs, i).unwrap() <= cert.value + 1e-12);
        }
    }
}
