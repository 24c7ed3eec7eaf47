//! One-dimensional densities: construction, classification, CDF profiles,
//! Grünbaum bounds, envelopes and extremal models.

pub mod check;
pub mod class;
pub mod density;
pub mod grunbaum;
pub mod moments;
pub mod profile;
pub mod random;
pub mod rigidity;
pub mod smean;
pub mod truncate;

pub use check::{check_class, ClassReport, CLASS_TOL};
pub use class::{grunbaum_bound, power_bound, ConcavityClass, Orientation};
pub use density::{
    cone_density, exp_density, neg_cone_density, Density1D, Family, Interval, ProfileTransform,
};
pub use grunbaum::{
    check_envelope, int_r_identity, verify_grunbaum_1d, EnvelopeReport, IdentityCheck,
    VerificationReport,
};
pub use moments::{barycenter_1d, recenter, second_moment};
pub use profile::{cdf_profile, CdfProfile, GridSpec};
pub use rigidity::{rigidity_detect, ModelParams, RigidityReport};
pub use smean::s_mean;
pub use truncate::truncate_normalize;
