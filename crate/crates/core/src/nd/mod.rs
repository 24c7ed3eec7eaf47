//! Euclidean `s`-concave measures: samplers, grid densities, halfspace
//! masses, Tukey depth, marginals and the Minkowski-combination test.

pub mod cloud;
pub mod depth;
pub mod grid;
pub mod marginal;
pub mod minkowski;
pub mod optimize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cloud::SampleCloud;
pub use depth::{tukey_depth, tukey_depth_with_directions, verify_depth_bound, DepthConfig, DepthReport, DepthVerification};
pub use grid::GridDensityND;
pub use marginal::{marginal_1d, Marginal};
pub use minkowski::{minkowski_test, MinkowskiReport};

/// Which closed side of the hyperplane `<v, x> = r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `<v, x> <= r`
    Le,
    /// `<v, x> >= r`
    Ge,
}

/// Bin edges and bin masses of a pushforward `<v, .>_# mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub cuts: Vec<f64>,
    pub masses: Vec<f64>,
    pub rule: &'static str,
}

/// Closed halfspace with unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub side: Side,
}

impl Halfspace {
    /// `{<v, x> <= r}` or `{>= r}`; `v` is rescaled to unit length.
    pub fn new(v: &[f64], r: f64, side: Side) -> Result<Self> {
        let norm = dot(v, v).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("halfspace normal must be nonzero".into()));
        }
        Ok(Halfspace {
            normal: v.iter().map(|c| c / norm).collect(),
            offset: r / norm,
            side,
        })
    }

    /// Halfspace whose boundary passes through `x`.
    pub fn through(x: &[f64], v: &[f64], side: Side) -> Result<Self> {
        Halfspace::new(v, dot(v, x), side)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let p = dot(&self.normal, x);
        match self.side {
            Side::Le => p <= self.offset,
            Side::Ge => p >= self.offset,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n
}

/// A probability measure on `R^n` that can report closed halfspace masses.
pub trait Measure: Sync {
    fn dim(&self) -> usize;

    /// Masses of `{<v, x> <= r}` and `{<v, x> >= r}` for unit `v`.
    fn split_masses(&self, v: &[f64], r: f64) -> (f64, f64);

    fn barycenter(&self) -> Vec<f64>;

    /// Binned pushforward along unit `v`.
    fn marginal_table(&self, v: &[f64]) -> Result<MarginalTable>;

    /// Monte Carlo sample size behind the masses (`None` for exact measures).
    fn sample_count(&self) -> Option<usize> {
        None
    }

    fn halfspace_mass(&self, h: &Halfspace) -> f64 {
        let (le, ge) = self.split_masses(&h.normal, h.offset);
        match h.side {
            Side::Le => le,
            Side::Ge => ge,
        }
    }
}

/// `barycenter_nd` for any measure.
pub fn barycenter_nd<M: Measure + ?Sized>(mu: &M) -> Vec<f64> {
    mu.barycenter()
}

/// Total mass of both closed sides; at least 1, with equality iff the
/// boundary hyperplane carries no mass.
pub fn halfspace_mass<M: Measure + ?Sized>(mu: &M, h: &Halfspace) -> f64 {
    mu.halfspace_mass(h)
}
