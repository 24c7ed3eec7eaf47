use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hypothesis regime of a density.
///
/// The one-dimensional condition behind each variant: `w^{1/(N-1)}` concave
/// (`PositiveN`), `log w` concave (`LogConcave`), `w^{1/(beta-1)}` convex
/// (`NegativeN`). `SConcave` tags an `n`-dimensional measure; its
/// one-dimensional marginals carry the class with `N = 1/s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcavityClass {
    PositiveN { n: f64 },
    LogConcave,
    NegativeN { beta: f64 },
    SConcave { s: f64, dim: usize },
}

/// Which end of the support carries the apex of an extremal profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Apex at the left end; the left Grünbaum mass is the extremal one.
    #[default]
    LeftApex,
    RightApex,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::LeftApex => Orientation::RightApex,
            Orientation::RightApex => Orientation::LeftApex,
        }
    }
}

impl ConcavityClass {
    pub fn positive(n: f64) -> Result<Self> {
        let c = ConcavityClass::PositiveN { n };
        c.validate()?;
        Ok(c)
    }

    pub fn negative(beta: f64) -> Result<Self> {
        let c = ConcavityClass::NegativeN { beta };
        c.validate()?;
        Ok(c)
    }

    pub fn s_concave(s: f64, dim: usize) -> Result<Self> {
        let c = ConcavityClass::SConcave { s, dim };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConcavityClass::PositiveN { n } if !(n > 1.0 && n.is_finite()) => Err(
                Error::InvalidParameter(format!("PositiveN requires N > 1, got {n}")),
            ),
            ConcavityClass::NegativeN { beta } if !(beta < -1.0 && beta.is_finite()) => Err(
                Error::InvalidParameter(format!("NegativeN requires beta < -1, got {beta}")),
            ),
            ConcavityClass::SConcave { s, dim } => {
                if dim == 0 {
                    return Err(Error::InvalidParameter("dimension must be positive".into()));
                }
                let top = 1.0 / dim as f64;
                if !(s > -1.0 && s <= top + 1e-15) {
                    Err(Error::InvalidParameter(format!(
                        "s must lie in (-1, 1/{dim}], got {s}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Class of a one-dimensional marginal: `q = s/(1-s)` concavity of the
    /// density, which is the `N = 1/s` curvature-dimension class.
    pub fn one_dim(&self) -> Result<ConcavityClass> {
        self.validate()?;
        match *self {
            ConcavityClass::SConcave { s, .. } => {
                if s == 0.0 {
                    Ok(ConcavityClass::LogConcave)
                } else if s > 0.0 {
                    if s >= 1.0 {
                        return Err(Error::Unsupported(
                            "s = 1 describes Lebesgue measure on a line; no 1-d class".into(),
                        ));
                    }
                    Ok(ConcavityClass::PositiveN { n: 1.0 / s })
                } else {
                    Ok(ConcavityClass::NegativeN { beta: 1.0 / s })
                }
            }
            other => Ok(other),
        }
    }

    /// Curvature-dimension parameter `N` (or `beta`) of a 1-d class.
    pub fn dimension(&self) -> Option<f64> {
        match *self {
            ConcavityClass::PositiveN { n } => Some(n),
            ConcavityClass::NegativeN { beta } => Some(beta),
            ConcavityClass::LogConcave => None,
            ConcavityClass::SConcave { s, .. } => (s != 0.0).then(|| 1.0 / s),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ConcavityClass::PositiveN { n } => format!("PositiveN({n})"),
            ConcavityClass::LogConcave => "LogConcave".to_string(),
            ConcavityClass::NegativeN { beta } => format!("NegativeN({beta})"),
            ConcavityClass::SConcave { s, dim } => format!("SConcave(s={s}, n={dim})"),
        }
    }
}

/// Sharp lower bound on the mass of either side at the barycenter.
pub fn grunbaum_bound(class: &ConcavityClass) -> f64 {
    match *class {
        ConcavityClass::PositiveN { n } => power_bound(n),
        ConcavityClass::NegativeN { beta } => power_bound(beta),
        ConcavityClass::LogConcave => (-1.0f64).exp(),
        ConcavityClass::SConcave { s, .. } => {
            if s == 0.0 {
                (-1.0f64).exp()
            } else {
                (-s.ln_1p() / s).exp()
            }
        }
    }
}

/// `(N/(N+1))^N`.
pub fn power_bound(n: f64) -> f64 {
    (-n * (1.0 / n).ln_1p()).exp()
}
