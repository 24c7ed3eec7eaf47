use serde::Serialize;

use super::{normalize, Measure};
use crate::core1d::{ConcavityClass, Density1D};
use crate::error::{Error, Result};

/// One-dimensional pushforward of a measure along a direction.
#[derive(Debug, Clone, Serialize)]
pub struct Marginal {
    pub density: Density1D,
    pub direction: Vec<f64>,
    /// Class the marginal must carry when the measure is `s`-concave.
    pub class: Option<ConcavityClass>,
    /// Class checks on sample histograms are advisory only.
    pub advisory: bool,
    pub bins: usize,
    pub rule: String,
}

/// Density of `<v, X>` tabulated at bin centers (zero at the outer bin
/// edges), normalized. With `s` given, tags the expected class of the
/// marginal of an `s`-concave measure.
pub fn marginal_1d<M: Measure + ?Sized>(mu: &M, v: &[f64], s: Option<f64>) -> Result<Marginal> {
    if v.len() != mu.dim() {
        return Err(Error::InvalidParameter("direction has the wrong dimension".into()));
    }
    let mut dir = v.to_vec();
    if normalize(&mut dir) == 0.0 {
        return Err(Error::InvalidParameter("direction must be nonzero".into()));
    }
    let table = mu.marginal_table(&dir)?;
    let first = table.masses.iter().position(|&m| m > 0.0).ok_or(Error::ZeroMass)?;
    let last = table.masses.iter().rposition(|&m| m > 0.0).ok_or(Error::ZeroMass)?;
    let mut xs = vec![table.cuts[first]];
    let mut ys = vec![0.0];
    for k in first..=last {
        let (a, b) = (table.cuts[k], table.cuts[k + 1]);
        xs.push(0.5 * (a + b));
        ys.push(table.masses[k] / (b - a));
    }
    xs.push(table.cuts[last + 1]);
    ys.push(0.0);
    let density = Density1D::tabulated(xs, ys)?.normalize()?;
    let class = match s {
        Some(s) => Some(ConcavityClass::s_concave(s, mu.dim())?.one_dim()?),
        None => None,
    };
    Ok(Marginal {
        density,
        direction: dir,
        class,
        advisory: mu.sample_count().is_some(),
        bins: last - first + 1,
        rule: table.rule.to_string(),
    })
}
