//! Numerical laboratory for continuous functions that attain their maximum
//! exactly once: explicit families (circle, real line, spheres, truncated
//! l2), grid + refinement certification of unique maxima, antipodal-collision
//! probing of would-be n-dimensional subspaces, and the U_n toolkit on [0,1].

pub mod certify;
pub mod error;
pub mod families;
pub mod gdelta;
pub mod geometry;
pub mod linalg;
pub mod prober;

pub use certify::{
    brute_force_argmax, certify_unique_max, closed_form_sphere_argmax, CertifyOutcome,
    NonUniqueWitness, UniqueMaxCertificate,
};
pub use error::{Error, Result};
pub use families::{
    halfline_g, l2_candidate_point, load_family_csv, make_circle_family,
    make_halfline_extension_family, make_interval_polynomial_family, make_l2_truncated_family,
    make_real_line_family, make_sphere_projection_family, make_tabulated_interval_family,
    save_family_csv, DomainKind, FunctionFamily, Generator, SampledDomain,
};
pub use gdelta::{
    bump_into_un, intersection_consistency, un_membership, ConsistencyReport, ConsistencyVerdict,
    SampledFunction01,
};
pub use geometry::{normalize, sample_sphere, SphereSample, SphereScheme, UnitVector};
pub use prober::{find_collision, CollisionWitness, MaxLocus, ProbeOutcome, WitnessKind};
