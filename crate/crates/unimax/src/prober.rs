//! Probes n-generator families over sampled compacta for the failure of
//! unique-maximality: builds the max locus D' and its image X = F(D'),
//! evaluates the direction-to-maximizer map over an antipodally paired
//! direction sample, and searches for the collision that witnesses the
//! impossibility of such families when the ambient dimension is too small.

use serde::{Deserialize, Serialize};

use crate::certify::max_and_tie_reps;
use crate::error::{Error, Result};
use crate::families::FunctionFamily;
use crate::geometry::{mesh_estimate, sample_sphere, SphereSample, SphereScheme, UnitVector};
use crate::linalg::{distance, dot, norm2};

/// The sampled maximizer set D' and its image X under F = (f_1, ..., f_n).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxLocus {
    /// Sample indices of the maximizers (identity, not proximity, is the
    /// deduplication key).
    pub dprime_indices: Vec<usize>,
    pub dprime_points: Vec<Vec<f64>>,
    pub x_points: Vec<Vec<f64>>,
    /// The direction whose combination each maximizer maximizes.
    pub direction_of: Vec<UnitVector>,
}

impl MaxLocus {
    pub fn len(&self) -> usize {
        self.x_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// An antipodal pair v, -v whose maximizers on X (essentially) coincide.
    AntipodalCollision,
    /// Some g_v has two well-separated maximizers on X: g_v is constant on
    /// the argmax set.
    ConstantDirection,
    /// Some sampled direction's combination already fails unique maximality
    /// on the domain itself.
    NonUniqueCombination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionWitness {
    pub kind: WitnessKind,
    pub v: UnitVector,
    pub x_v: Vec<f64>,
    pub x_minus_v: Vec<f64>,
    pub collision_distance: f64,
    pub detail: String,
}

/// `NoWitnessFound` is data, not an error: it is the expected outcome when
/// the family's dimension does not exceed the ambient dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum ProbeOutcome {
    Witness(CollisionWitness),
    NoWitnessFound {
        min_distance: f64,
        direction: UnitVector,
    },
}

impl ProbeOutcome {
    pub fn witness(&self) -> Option<&CollisionWitness> {
        match self {
            ProbeOutcome::Witness(w) => Some(w),
            ProbeOutcome::NoWitnessFound { .. } => None,
        }
    }
}

fn direction_sample(n: usize, sphere_resolution: usize) -> Result<SphereSample> {
    let mut count = sphere_resolution.max(4);
    if count % 2 != 0 {
        count += 1;
    }
    sample_sphere(n, count, SphereScheme::GeneralizedSpiral, 0)
}

/// For each sampled direction, the tie-cluster representatives of its
/// combination's maximum over the domain, deduplicated by sample identity.
/// Value ties within the certifier's default tolerance are clustered, so a
/// direction whose combination is (numerically) constant contributes one
/// representative rather than its floating-point noise argmax.
pub fn extract_max_locus(family: &FunctionFamily, sphere_resolution: usize) -> Result<MaxLocus> {
    if family.n() < 2 {
        return Err(Error::InvalidDimension { n: family.n() });
    }
    let directions = direction_sample(family.n(), sphere_resolution)?;
    let mut locus = MaxLocus {
        dprime_indices: Vec::new(),
        dprime_points: Vec::new(),
        x_points: Vec::new(),
        direction_of: Vec::new(),
    };
    let mut values = Vec::new();
    for v in &directions.points {
        family.evaluate_all(v.coords(), &mut values)?;
        let (_max, _radius, reps) = max_and_tie_reps(family, &values, None, None);
        for i in reps {
            if !locus.dprime_indices.contains(&i) {
                locus.dprime_indices.push(i);
                locus.dprime_points.push(family.domain.point(i).to_vec());
                locus.x_points.push(family.image_row(i));
                locus.direction_of.push(v.clone());
            }
        }
    }
    Ok(locus)
}

/// The maximizer x_v of x -> <x, v> over X, and the raw count of X points
/// whose value lies within `tie_tolerance` of the maximum.
pub fn f_map(v: &UnitVector, locus: &MaxLocus, tie_tolerance: f64) -> (Vec<f64>, usize) {
    debug_assert!(!locus.is_empty());
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, x) in locus.x_points.iter().enumerate() {
        let val = dot(x, v.coords());
        if val > best_val {
            best_val = val;
            best = i;
        }
    }
    let multiplicity = locus
        .x_points
        .iter()
        .filter(|x| dot(x, v.coords()) >= best_val - tie_tolerance)
        .count();
    (locus.x_points[best].clone(), multiplicity)
}

/// As `f_map`, but counting well-separated clusters of tied maximizers
/// instead of raw points, so that the flat top of a smooth maximum is not
/// mistaken for a two-point tie. Returns one representative per cluster.
fn f_map_clusters(
    v: &[f64],
    locus: &MaxLocus,
    tie_tolerance: f64,
    separation: f64,
) -> Vec<usize> {
    let mut best_val = f64::NEG_INFINITY;
    for x in &locus.x_points {
        let val = dot(x, v);
        if val > best_val {
            best_val = val;
        }
    }
    let ties: Vec<usize> = (0..locus.len())
        .filter(|&i| dot(&locus.x_points[i], v) >= best_val - tie_tolerance)
        .collect();
    // Greedy single-linkage over the (small) tie set.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &ties {
        let mut joined: Option<usize> = None;
        for (c, members) in clusters.iter().enumerate() {
            if members
                .iter()
                .any(|&m| distance(&locus.x_points[i], &locus.x_points[m]) <= separation)
            {
                joined = Some(c);
                break;
            }
        }
        match joined {
            Some(c) => clusters[c].push(i),
            None => clusters.push(vec![i]),
        }
    }
    // Merge clusters bridged by later members.
    loop {
        let mut merged = false;
        'outer: for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let bridge = clusters[a].iter().any(|&i| {
                    clusters[b]
                        .iter()
                        .any(|&j| distance(&locus.x_points[i], &locus.x_points[j]) <= separation)
                });
                if bridge {
                    let tail = clusters.remove(b);
                    clusters[a].extend(tail);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    clusters
        .iter()
        .map(|members| {
            *members
                .iter()
                .max_by(|&&a, &&b| {
                    dot(&locus.x_points[a], v)
                        .partial_cmp(&dot(&locus.x_points[b], v))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap()
        })
        .collect()
}

/// Largest nearest-neighbor distance of the F-image of the domain sample:
/// the discretization scale that collision tolerances are tied to.
fn image_mesh(family: &FunctionFamily) -> f64 {
    let len = family.len();
    if len < 2 {
        return 0.0;
    }
    if family.domain.kind.is_one_dimensional() {
        (1..len)
            .map(|i| distance(&family.image_row(i - 1), &family.image_row(i)))
            .fold(0.0, f64::max)
    } else {
        let stride = (len / 256).max(1);
        let mut worst: f64 = 0.0;
        for i in (0..len).step_by(stride) {
            let xi = family.image_row(i);
            let mut nn = f64::INFINITY;
            for j in 0..len {
                if i != j {
                    nn = nn.min(distance(&xi, &family.image_row(j)));
                }
            }
            worst = worst.max(nn);
        }
        worst
    }
}

/// Search for a witness that the family cannot consist of uniquely maximized
/// combinations: certify every sampled direction, then scan antipodal pairs
/// of the direction-to-maximizer map for collisions and constant directions.
pub fn find_collision(
    family: &FunctionFamily,
    sphere_resolution: usize,
    collision_tolerance: Option<f64>,
) -> Result<ProbeOutcome> {
    if family.n() < 2 {
        return Err(Error::InvalidDimension { n: family.n() });
    }
    let directions = direction_sample(family.n(), sphere_resolution)?;
    let fmesh = image_mesh(family);
    let collision_tol = collision_tolerance.unwrap_or(5.0 * fmesh);

    // Step (i): certify each direction's combination; collect the locus from
    // the same scans. A non-unique combination short-circuits.
    let mut locus = MaxLocus {
        dprime_indices: Vec::new(),
        dprime_points: Vec::new(),
        x_points: Vec::new(),
        direction_of: Vec::new(),
    };
    let mut values = Vec::new();
    for v in &directions.points {
        family.evaluate_all(v.coords(), &mut values)?;
        let (_max, _radius, reps) = max_and_tie_reps(family, &values, None, None);
        if reps.len() > 1 {
            let x_a = family.image_row(reps[0]);
            let x_b = family.image_row(reps[1]);
            let collision_distance = distance(&x_a, &x_b);
            let detail = format!(
                "combination with coefficients {:?} attains its sampled maximum at {} \
                 well-separated locations, e.g. {:?} and {:?}",
                v.coords(),
                reps.len(),
                family.domain.point(reps[0]),
                family.domain.point(reps[1]),
            );
            return Ok(ProbeOutcome::Witness(CollisionWitness {
                kind: WitnessKind::NonUniqueCombination,
                v: v.clone(),
                x_v: x_a,
                x_minus_v: x_b,
                collision_distance,
                detail,
            }));
        }
        let i = reps[0];
        if !locus.dprime_indices.contains(&i) {
            locus.dprime_indices.push(i);
            locus.dprime_points.push(family.domain.point(i).to_vec());
            locus.x_points.push(family.image_row(i));
            locus.direction_of.push(v.clone());
        }
    }

    // Tolerances for the X-side scans: a direction step of delta moves g_v
    // values by at most delta * max ||x||, so ties below that scale are
    // indistinguishable from a jump crossing between adjacent directions.
    let delta = mesh_estimate(&directions.points);
    let max_norm = locus
        .x_points
        .iter()
        .map(|x| norm2(x))
        .fold(0.0, f64::max)
        .max(1e-300);
    let tie_x = delta * max_norm;
    let separation = 10.0 * fmesh.max(tie_x);

    // Step (ii): antipodal scan. Pairs whose f_map is ambiguous (>= 2
    // separated clusters) are constant-direction candidates and are excluded
    // from the collision minimum, where the index tie-break would fake a
    // zero distance.
    let mut min_distance = f64::INFINITY;
    let mut min_pair: Option<(usize, Vec<f64>, Vec<f64>)> = None;
    let mut constant_dir: Option<(usize, Vec<usize>)> = None;
    for i in 0..directions.half() {
        let v = &directions.points[i];
        let neg = &directions.points[directions.antipode_index(i)];
        let clusters_v = f_map_clusters(v.coords(), &locus, tie_x, separation);
        let clusters_neg = f_map_clusters(neg.coords(), &locus, tie_x, separation);
        if clusters_v.len() >= 2 || clusters_neg.len() >= 2 {
            if constant_dir.is_none() {
                let (idx, reps) = if clusters_v.len() >= 2 {
                    (i, clusters_v)
                } else {
                    (directions.antipode_index(i), clusters_neg)
                };
                constant_dir = Some((idx, reps));
            }
            continue;
        }
        let x_v = &locus.x_points[clusters_v[0]];
        let x_neg = &locus.x_points[clusters_neg[0]];
        let d = distance(x_v, x_neg);
        if d < min_distance {
            min_distance = d;
            min_pair = Some((i, x_v.clone(), x_neg.clone()));
        }
    }

    if let Some((i, x_v, x_neg)) = &min_pair {
        if min_distance <= collision_tol {
            let v = directions.points[*i].clone();
            return Ok(ProbeOutcome::Witness(CollisionWitness {
                kind: WitnessKind::AntipodalCollision,
                detail: format!(
                    "maximizers of g_v and g_(-v) on X are {min_distance:e} apart \
                     (tolerance {collision_tol:e})"
                ),
                v,
                x_v: x_v.clone(),
                x_minus_v: x_neg.clone(),
                collision_distance: min_distance,
            }));
        }
    }
    if let Some((idx, reps)) = constant_dir {
        let v = directions.points[idx].clone();
        let x_a = locus.x_points[reps[0]].clone();
        let x_b = locus.x_points[reps[1]].clone();
        let collision_distance = distance(&x_a, &x_b);
        return Ok(ProbeOutcome::Witness(CollisionWitness {
            kind: WitnessKind::ConstantDirection,
            detail: format!(
                "g_v has {} well-separated maximizers on X within tolerance {tie_x:e}: \
                 g_v is constant on the argmax set",
                reps.len()
            ),
            v,
            x_v: x_a,
            x_minus_v: x_b,
            collision_distance,
        }));
    }
    let (i, x_v, x_neg) = min_pair.expect("at least one unambiguous antipodal pair");
    let _ = (x_v, x_neg);
    Ok(ProbeOutcome::NoWitnessFound {
        min_distance,
        direction: directions.points[i].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_interval_polynomial_family, make_sphere_projection_family};

    fn affine_pair() -> FunctionFamily {
        // {t, 1 - t} on [0, 1].
        make_interval_polynomial_family(&[vec![0.0, 1.0], vec![1.0, -1.0]], 101).unwrap()
    }

    #[test]
    fn locus_of_affine_pair_lies_on_the_segment() {
        let fam = affine_pair();
        let locus = extract_max_locus(&fam, 64).unwrap();
        let ts: Vec<f64> = locus.dprime_points.iter().map(|p| p[0]).collect();
        // Both endpoints show up (each is the strict maximizer of an open arc
        // of directions); the two diagonal directions, where the combination
        // is constant, may each add one representative of the tied cluster.
        assert!(ts.contains(&0.0));
        assert!(ts.contains(&1.0));
        assert!(locus.len() <= 4, "locus {ts:?}");
        // X = F(D') lies on the segment x + y = 1.
        for x in &locus.x_points {
            assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn locus_of_sphere_projections_covers_the_circle() {
        let fam = make_sphere_projection_family(2, 512).unwrap();
        let locus = extract_max_locus(&fam, 256).unwrap();
        // Each direction's maximizer is (approximately) the direction itself.
        for (k, v) in locus.direction_of.iter().enumerate() {
            assert!(distance(&locus.x_points[k], v.coords()) < 0.05);
        }
        assert!(locus.len() > 200);
    }

    #[test]
    fn f_map_two_point_examples() {
        let locus = MaxLocus {
            dprime_indices: vec![0, 1],
            dprime_points: vec![vec![0.0], vec![1.0]],
            x_points: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            direction_of: vec![
                UnitVector::new(vec![0.0, 1.0]).unwrap(),
                UnitVector::new(vec![1.0, 0.0]).unwrap(),
            ],
        };
        let v = UnitVector::new(vec![1.0, 0.0]).unwrap();
        let (x, mult) = f_map(&v, &locus, 1e-9);
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(mult, 1);
        let s = 0.5f64.sqrt();
        let diag = UnitVector::new(vec![s, s]).unwrap();
        let (_, mult) = f_map(&diag, &locus, 1e-9);
        assert_eq!(mult, 2);
    }

    #[test]
    fn probe_t_t2_is_non_unique_combination() {
        let fam =
            make_interval_polynomial_family(&[vec![0.0, 1.0], vec![0.0, 0.0, 1.0]], 10001).unwrap();
        let outcome = find_collision(&fam, 256, None).unwrap();
        let w = outcome.witness().expect("witness expected for m=1 < n=2");
        assert_eq!(w.kind, WitnessKind::NonUniqueCombination);
        // At coefficients proportional to (-1, 1).
        let s = 0.5f64.sqrt();
        assert!(distance(w.v.coords(), &[-s, s]) < 1e-12);
    }

    #[test]
    fn probe_affine_pair_is_constant_direction() {
        let fam = affine_pair();
        let outcome = find_collision(&fam, 256, None).unwrap();
        let w = outcome.witness().expect("witness expected for m=1 < n=2");
        assert_eq!(w.kind, WitnessKind::ConstantDirection);
        let s = 0.5f64.sqrt();
        assert!(distance(w.v.coords(), &[s, s]) < 1e-12);
    }

    #[test]
    fn probe_sphere_projections_finds_nothing() {
        let fam = make_sphere_projection_family(2, 4096).unwrap();
        let outcome = find_collision(&fam, 512, None).unwrap();
        match outcome {
            ProbeOutcome::NoWitnessFound { min_distance, .. } => {
                assert!(min_distance >= 1.9, "min distance {min_distance}");
            }
            ProbeOutcome::Witness(w) => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn g_minus_v_is_exact_negation() {
        let locus = extract_max_locus(&affine_pair(), 64).unwrap();
        let v = UnitVector::new(vec![0.6, 0.8]).unwrap();
        let neg = v.negated();
        for x in &locus.x_points {
            let a = dot(x, v.coords());
            let b = dot(x, neg.coords());
            assert_eq!(a, -b);
        }
    }
}
