//! Euclidean vector utilities, sphere point generation with exact antipodal
//! pairing, and the closed-form argmax direction on the sphere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, norm2};

const NORM_TOLERANCE: f64 = 1e-12;
const ZERO_THRESHOLD: f64 = 1e-300;

/// A point of S^{n-1}, kept normalized to within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = norm2(&coords);
        if coords.len() < 2 {
            return Err(Error::InvalidDimension { n: coords.len() });
        }
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::ZeroVector { norm });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Exact antipode: coordinate-wise sign flip, no renormalization.
    pub fn negated(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

/// Normalize a nonzero vector; this is the closed-form argmax direction
/// z = a / ||a|| of y -> <a, y> on the sphere.
pub fn normalize(a: &[f64]) -> Result<UnitVector> {
    if a.len() < 2 {
        return Err(Error::InvalidDimension { n: a.len() });
    }
    let norm = norm2(a);
    if norm <= ZERO_THRESHOLD {
        return Err(Error::ZeroVector { norm });
    }
    Ok(UnitVector {
        coords: a.iter().map(|c| c / norm).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereScheme {
    /// Deterministic low-discrepancy points, prefix-stable so that doubling
    /// the count reuses every previously generated point.
    GeneralizedSpiral,
    /// Seeded Gaussian-normalize sampling.
    RandomUniform,
}

/// An antipodally closed point set on S^{n-1}. The second half of `points`
/// stores the exact negations of the first half.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereSample {
    pub points: Vec<UnitVector>,
    pub pairing: Vec<usize>,
    pub seed: u64,
    pub scheme: SphereScheme,
}

impl SphereSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn antipode_index(&self, i: usize) -> usize {
        self.pairing[i]
    }

    /// Number of base (non-negated) points.
    pub fn half(&self) -> usize {
        self.points.len() / 2
    }
}

/// Sample `count` points on S^{n-1} with exact antipodal closure.
/// Deterministic for fixed (n, count, scheme, seed).
pub fn sample_sphere(
    n: usize,
    count: usize,
    scheme: SphereScheme,
    seed: u64,
) -> Result<SphereSample> {
    if n < 2 {
        return Err(Error::InvalidDimension { n });
    }
    if count < 4 || count % 2 != 0 {
        return Err(Error::InvalidCount { count });
    }
    let half = count / 2;
    let base: Vec<UnitVector> = match scheme {
        SphereScheme::GeneralizedSpiral => {
            if n == 2 {
                // Van der Corput angles in [0, pi): prefix-stable and, at any
                // power-of-two count, an exactly uniform semicircle.
                (0..half)
                    .map(|j| {
                        let theta = std::f64::consts::PI * van_der_corput(j as u64);
                        UnitVector {
                            coords: vec![theta.cos(), theta.sin()],
                        }
                    })
                    .collect()
            } else {
                // Kronecker sequence mapped through the Gaussian quantile and
                // normalized; prefix-stable for the nesting guarantee.
                let alphas: Vec<f64> = PRIMES[..n].iter().map(|p| (*p as f64).sqrt().fract()).collect();
                (0..half)
                    .map(|j| {
                        let coords: Vec<f64> = alphas
                            .iter()
                            .map(|a| {
                                let u = ((j as f64 + 1.0) * a).fract();
                                inverse_normal_cdf(u.clamp(1e-12, 1.0 - 1e-12))
                            })
                            .collect();
                        normalize(&coords).expect("Gaussian quantiles cannot all vanish")
                    })
                    .collect()
            }
        }
        SphereScheme::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..half)
                .map(|_| loop {
                    let coords: Vec<f64> =
                        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    if norm2(&coords) > 1e-6 {
                        break normalize(&coords).unwrap();
                    }
                })
                .collect()
        }
    };
    let mut points = base;
    for i in 0..half {
        let neg = points[i].negated();
        points.push(neg);
    }
    let pairing = (0..count)
        .map(|i| if i < half { i + half } else { i - half })
        .collect();
    Ok(SphereSample {
        points,
        pairing,
        seed,
        scheme,
    })
}

/// Largest nearest-neighbor distance over a deterministic subsample; a cheap
/// stand-in for the covering radius of the point set.
pub fn mesh_estimate(points: &[UnitVector]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let stride = (points.len() / 256).max(1);
    let mut worst: f64 = 0.0;
    for i in (0..points.len()).step_by(stride) {
        let mut nn = f64::INFINITY;
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            let d = distance(points[i].coords(), points[j].coords());
            if d < nn {
                nn = d;
            }
        }
        worst = worst.max(nn);
    }
    worst
}

fn van_der_corput(mut j: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 0.5;
    while j > 0 {
        result += f * (j & 1) as f64;
        j >>= 1;
        f *= 0.5;
    }
    result
}

/// Irrational Kronecker-sequence increments frac(sqrt(p)) for the first
/// `dim` primes.
pub fn weyl_alphas(dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len());
    PRIMES[..dim].iter().map(|p| (*p as f64).sqrt().fract()).collect()
}

const PRIMES: [u32; 70] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293,
    307, 311, 313, 317, 331, 337, 347, 349,
];

/// Acklam's rational approximation to the standard normal quantile,
/// |relative error| < 1.15e-9 on (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four() {
        let z = normalize(&[3.0, 4.0]).unwrap();
        assert!((z.coords()[0] - 0.6).abs() < 1e-15);
        assert!((z.coords()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_identity_case() {
        let z = normalize(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(z.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_zero_vector_errors() {
        assert!(matches!(
            normalize(&[0.0, 0.0]),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn spiral_circle_four_points() {
        let s = sample_sphere(2, 4, SphereScheme::GeneralizedSpiral, 0).unwrap();
        // Quarter-turn spacing up to a global rotation; here the rotation is 0.
        let angles: Vec<f64> = s
            .points
            .iter()
            .map(|p| p.coords()[1].atan2(p.coords()[0]).rem_euclid(2.0 * std::f64::consts::PI))
            .collect();
        let mut sorted = angles.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, a) in sorted.iter().enumerate() {
            assert!((a - k as f64 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_is_fixed_point_free_involution_with_exact_negation() {
        for scheme in [SphereScheme::GeneralizedSpiral, SphereScheme::RandomUniform] {
            let s = sample_sphere(3, 64, scheme, 5).unwrap();
            for i in 0..s.len() {
                let j = s.antipode_index(i);
                assert_ne!(i, j);
                assert_eq!(s.antipode_index(j), i);
                let neg = s.points[i].negated();
                assert_eq!(s.points[j], neg, "antipodes must be stored by exact negation");
            }
        }
    }

    #[test]
    fn sample_norms_within_tolerance() {
        let s = sample_sphere(4, 128, SphereScheme::GeneralizedSpiral, 0).unwrap();
        for p in &s.points {
            assert!((norm2(p.coords()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_uniform_is_deterministic() {
        let a = sample_sphere(3, 1000, SphereScheme::RandomUniform, 7).unwrap();
        let b = sample_sphere(3, 1000, SphereScheme::RandomUniform, 7).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn spiral_is_prefix_stable() {
        let small = sample_sphere(3, 64, SphereScheme::GeneralizedSpiral, 0).unwrap();
        let big = sample_sphere(3, 128, SphereScheme::GeneralizedSpiral, 0).unwrap();
        for i in 0..small.half() {
            assert_eq!(small.points[i], big.points[i]);
        }
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(matches!(
            sample_sphere(2, 5, SphereScheme::GeneralizedSpiral, 0),
            Err(Error::InvalidCount { .. })
        ));
        assert!(matches!(
            sample_sphere(2, 2, SphereScheme::GeneralizedSpiral, 0),
            Err(Error::InvalidCount { .. })
        ));
    }

    #[test]
    fn inverse_normal_cdf_anchors() {
        assert!(inverse_normal_cdf(0.5).abs() < 1e-9);
        assert!((inverse_normal_cdf(0.975) - 1.959964).abs() < 1e-5);
        assert!((inverse_normal_cdf(0.025) + 1.959964).abs() < 1e-5);
    }
}
