//! Run configuration: a JSON file (`--config`) overlaid by command-line flags.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use grunbaum_core::core1d::ConcavityClass;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Report,
    Csv,
    Svg,
}

/// Every setting a command may read. All fields are optional so that a
/// config file and the flags can be merged field by field.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Main input: density or product spec (JSON), needle file, or samples (CSV)
    pub input: Option<PathBuf>,

    /// JSON file with settings; flags given on the command line take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Concavity class: positive, log-concave, negative or s-concave
    #[arg(long)]
    pub class: Option<String>,

    /// Dimension parameter N of the positive class
    #[arg(long)]
    pub n: Option<f64>,

    /// Dimension parameter of the negative class (< -1)
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,

    /// Concavity exponent s of an n-dimensional measure
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,

    /// Ambient dimension for the s-concave class
    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long)]
    pub tol: Option<f64>,

    /// Monte Carlo sample count for generator specs
    #[arg(long)]
    pub mc_samples: Option<usize>,

    /// Base directions for the depth search
    #[arg(long)]
    pub directions: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output formats, comma separated
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,

    /// Recenter the input at its barycenter before verifying
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub recenter: bool,

    /// Omit the timestamp so identical runs give identical reports
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub reproducible: bool,

    /// Query point for depth, comma separated (default: barycenter)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,

    /// Projection direction for marginals, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub direction: Option<Vec<f64>>,

    /// Product spec used by the needle commands
    #[arg(long)]
    pub product: Option<PathBuf>,

    /// Needle file for needle-level stability
    #[arg(long)]
    pub needles: Option<PathBuf>,

    /// Stability slack ε for needle-level stability
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Extra slack δ for needle-level stability
    #[arg(long)]
    pub delta: Option<f64>,

    /// Random slabs for the disintegration check
    #[arg(long)]
    pub slabs: Option<usize>,
}

impl Settings {
    /// Fields set here win; the rest come from `base`.
    fn over(self, base: Settings) -> Settings {
        Settings {
            input: self.input.or(base.input),
            config: self.config,
            class: self.class.or(base.class),
            n: self.n.or(base.n),
            beta: self.beta.or(base.beta),
            s: self.s.or(base.s),
            dim: self.dim.or(base.dim),
            tol: self.tol.or(base.tol),
            mc_samples: self.mc_samples.or(base.mc_samples),
            directions: self.directions.or(base.directions),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            recenter: self.recenter || base.recenter,
            reproducible: self.reproducible || base.reproducible,
            point: self.point.or(base.point),
            direction: self.direction.or(base.direction),
            product: self.product.or(base.product),
            needles: self.needles.or(base.needles),
            epsilon: self.epsilon.or(base.epsilon),
            delta: self.delta.or(base.delta),
            slabs: self.slabs.or(base.slabs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify1d,
    Depth,
    Marginal,
    Product,
    Needles,
    Stability,
    Models,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify1d => "verify1d",
            Command::Depth => "depth",
            Command::Marginal => "marginal",
            Command::Product => "product",
            Command::Needles => "needles",
            Command::Stability => "stability",
            Command::Models => "models",
        }
    }

    fn default_tol(self) -> f64 {
        match self {
            Command::Depth => 1e-3,
            Command::Marginal => 1e-6,
            Command::Product | Command::Needles => 1e-8,
            _ => 1e-9,
        }
    }
}

/// Fully resolved settings, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<ConcavityClass>,
    pub tol: f64,
    pub mc_samples: usize,
    pub directions: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub recenter: bool,
    pub reproducible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub needles: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub slabs: usize,
    #[serde(skip)]
    pub n: Option<f64>,
    #[serde(skip)]
    pub beta: Option<f64>,
}

pub const MIN_MC_SAMPLES: usize = 1000;
pub const MIN_DIRECTIONS: usize = 8;

impl RunConfig {
    pub fn resolve(command: Command, flags: Settings) -> anyhow::Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<Settings>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => Settings::default(),
        };
        let s = flags.over(file);
        let class = resolve_class(&s)?;
        let cfg = RunConfig {
            command,
            input: s.input,
            class,
            tol: s.tol.unwrap_or(command.default_tol()),
            mc_samples: s.mc_samples.unwrap_or(1_000_000),
            directions: s.directions.unwrap_or(720),
            seed: s.seed.unwrap_or(0),
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
            formats: s.format.unwrap_or_else(|| vec![Format::Report]),
            recenter: s.recenter,
            reproducible: s.reproducible,
            s: s.s,
            point: s.point,
            direction: s.direction,
            product: s.product,
            needles: s.needles,
            epsilon: s.epsilon,
            delta: s.delta,
            slabs: s.slabs.unwrap_or(20),
            n: s.n,
            beta: s.beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("--tol must be positive, got {}", self.tol);
        }
        if self.mc_samples < MIN_MC_SAMPLES {
            bail!("--mc-samples must be at least {MIN_MC_SAMPLES}, got {}", self.mc_samples);
        }
        if self.directions < MIN_DIRECTIONS {
            bail!("--directions must be at least {MIN_DIRECTIONS}, got {}", self.directions);
        }
        if self.slabs == 0 {
            bail!("--slabs must be positive");
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn input(&self) -> anyhow::Result<&PathBuf> {
        self.input
            .as_ref()
            .with_context(|| format!("{} needs an input file", self.command.name()))
    }

    pub fn class(&self) -> anyhow::Result<ConcavityClass> {
        self.class.with_context(|| format!("{} needs --class", self.command.name()))
    }
}

fn resolve_class(s: &Settings) -> anyhow::Result<Option<ConcavityClass>> {
    let Some(name) = s.class.as_deref() else {
        return Ok(None);
    };
    let cls = match name {
        "positive" | "positive_n" => ConcavityClass::positive(s.n.context("class positive needs --n")?)?,
        "log-concave" | "log_concave" | "logconcave" => ConcavityClass::LogConcave,
        "negative" | "negative_n" => ConcavityClass::negative(s.beta.context("class negative needs --beta")?)?,
        "s-concave" | "s_concave" => {
            let sv = s.s.context("class s-concave needs --s")?;
            let dim = s.dim.context("class s-concave needs --dim")?;
            ConcavityClass::s_concave(sv, dim)?
        }
        other => bail!("unknown class {other:?}; expected positive, log-concave, negative or s-concave"),
    };
    Ok(Some(cls))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Settings {
            tol: Some(1e-3),
            seed: Some(5),
            ..Settings::default()
        };
        let flags = Settings {
            tol: Some(1e-6),
            ..Settings::default()
        };
        let s = flags.over(file);
        assert_eq!(s.tol, Some(1e-6));
        assert_eq!(s.seed, Some(5));
    }

    #[test]
    fn classes_resolve() {
        let s = Settings {
            class: Some("negative".into()),
            beta: Some(-3.0),
            ..Settings::default()
        };
        assert_eq!(resolve_class(&s).unwrap(), Some(ConcavityClass::NegativeN { beta: -3.0 }));
        let bad = Settings {
            class: Some("positive".into()),
            ..Settings::default()
        };
        assert!(resolve_class(&bad).is_err());
    }

    #[test]
    fn budgets_are_checked() {
        let s = Settings {
            mc_samples: Some(10),
            ..Settings::default()
        };
        assert!(RunConfig::resolve(Command::Depth, s).is_err());
    }
}
