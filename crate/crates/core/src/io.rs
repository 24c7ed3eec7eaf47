//! File formats: density specs, grid densities, product densities, needle
//! decompositions (all JSON) and sample clouds (CSV).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::core1d::{
    cone_density, exp_density, neg_cone_density, ConcavityClass, Density1D, Interval, Orientation,
    ProfileTransform,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nd::{cloud, GridDensityND, SampleCloud};
use crate::product::{FiberSpace, Needle, NeedleDecomposition, ProductDensity};

/// A support end: a number, `"-inf"`/`"inf"`, or `null` (infinite on that side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound(pub f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Bound)
                .ok_or_else(|| serde::de::Error::custom("support end out of range")),
            Value::String(s) => match s.trim() {
                "inf" | "+inf" | "infinity" => Ok(Bound(f64::INFINITY)),
                "-inf" | "-infinity" => Ok(Bound(f64::NEG_INFINITY)),
                other => other
                    .parse::<f64>()
                    .map(Bound)
                    .map_err(|_| serde::de::Error::custom(format!("bad support end {other:?}"))),
            },
            Value::Null => Ok(Bound(f64::NAN)),
            other => Err(serde::de::Error::custom(format!("bad support end {other}"))),
        }
    }
}

/// One-dimensional density description.
///
/// `family` is one of `uniform`, `cone`, `neg_cone`, `exponential`,
/// `polynomial`, `exp_polynomial`, `gaussian`, `model`, `tabulated`,
/// `power_profile`. Shape parameters go in `params`; the optional
/// `shift`/`scale` params apply `x -> scale x + shift` afterwards, and
/// `normalize` (default true) rescales to unit mass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DensitySpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[Bound; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Cell edges per axis, for grid densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Vec<f64>>>,
}

impl DensitySpec {
    pub fn new(family: &str) -> Self {
        DensitySpec {
            family: family.into(),
            ..DensitySpec::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn with_support(mut self, lower: f64, upper: f64) -> Self {
        self.support = Some([Bound(lower), Bound(upper)]);
        self
    }

    fn num(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Parse(format!("{} density needs numeric param {key:?}", self.family)))
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("param {key:?} must be a number"))),
        }
    }

    fn coeffs(&self) -> Result<Vec<f64>> {
        let v = self
            .params
            .get("coeffs")
            .ok_or_else(|| Error::Parse(format!("{} density needs param \"coeffs\"", self.family)))?;
        serde_json::from_value(v.clone()).map_err(Error::from)
    }

    fn orientation(&self) -> Result<Orientation> {
        match self.params.get("orientation").and_then(Value::as_str) {
            None | Some("left") | Some("left_apex") => Ok(Orientation::LeftApex),
            Some("right") | Some("right_apex") => Ok(Orientation::RightApex),
            Some(o) => Err(Error::Parse(format!("unknown orientation {o:?}"))),
        }
    }

    fn interval(&self, default: Option<Interval>) -> Result<Interval> {
        match self.support {
            Some([Bound(a), Bound(b)]) => {
                let a = if a.is_nan() { f64::NEG_INFINITY } else { a };
                let b = if b.is_nan() { f64::INFINITY } else { b };
                Interval::new(a, b)
            }
            None => default.ok_or_else(|| Error::Parse(format!("{} density needs a support", self.family))),
        }
    }

    fn table(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match (&self.grid, &self.values) {
            (Some(g), Some(v)) => Ok((g.clone(), v.clone())),
            _ => Err(Error::Parse(format!("{} density needs grid and values", self.family))),
        }
    }
}

/// Builds the density described by `spec`.
pub fn make_density(spec: &DensitySpec) -> Result<Density1D> {
    let d = match spec.family.as_str() {
        "uniform" => {
            let s = spec.interval(None)?;
            Density1D::uniform(s.lower, s.upper)?
        }
        "cone" => cone_density(spec.num("n")?, spec.num_or("c", 1.0)?, spec.orientation()?)?,
        "neg_cone" => {
            let n = spec.num("n").or_else(|_| spec.num("beta"))?;
            neg_cone_density(n, spec.num_or("c", 1.0)?, spec.orientation()?)?
        }
        "exponential" => exp_density(spec.num_or("c", 1.0)?, spec.orientation()?)?,
        "polynomial" => Density1D::polynomial(spec.coeffs()?, spec.interval(None)?)?,
        "exp_polynomial" => Density1D::exp_polynomial(spec.coeffs()?, spec.interval(None)?)?,
        "gaussian" => Density1D::gaussian(
            spec.num_or("mean", 0.0)?,
            spec.num_or("sd", 1.0)?,
            spec.interval(Some(Interval::real_line()))?,
        )?,
        "model" => Density1D::model(spec.num("n")?)?,
        "tabulated" => {
            let (xs, ys) = spec.table()?;
            Density1D::tabulated(xs, ys)?
        }
        "power_profile" => {
            let (xs, ys) = spec.table()?;
            let transform = match spec.params.get("transform") {
                Some(Value::String(s)) if s == "exp" => ProfileTransform::Exp,
                Some(v) => ProfileTransform::Power(
                    v.as_f64()
                        .ok_or_else(|| Error::Parse("transform must be \"exp\" or a number".into()))?,
                ),
                None => return Err(Error::Parse("power_profile density needs param \"transform\"".into())),
            };
            let default = Interval::new(xs[0], xs[xs.len() - 1]).ok();
            Density1D::power_profile(xs, ys, transform, spec.interval(default)?)?
        }
        other => return Err(Error::Parse(format!("unknown density family {other:?}"))),
    };
    let scale = spec.num_or("scale", 1.0)?;
    let d = if scale != 1.0 { d.dilate(scale)? } else { d };
    let shift = spec.num_or("shift", 0.0)?;
    let d = if shift != 0.0 { d.translate(shift) } else { d };
    let normalize = spec.params.get("normalize").and_then(Value::as_bool).unwrap_or(true);
    if normalize {
        d.normalize()
    } else {
        Ok(d)
    }
}

/// Grid density from a spec with family `grid` (`axes` plus row-major
/// `values`), `grid_simplex` (`n`, `cells`) or `grid_box` (`lo`, `hi`, `cells`).
pub fn make_grid_density(spec: &DensitySpec) -> Result<GridDensityND> {
    match spec.family.as_str() {
        "grid" => {
            let axes = spec.axes.clone().ok_or_else(|| Error::Parse("grid density needs axes".into()))?;
            let values = spec
                .values
                .clone()
                .ok_or_else(|| Error::Parse("grid density needs values".into()))?;
            GridDensityND::new(axes, values)
        }
        "grid_simplex" => GridDensityND::uniform_simplex(spec.num("n")? as usize, spec.num("cells")? as usize),
        "grid_box" => {
            let get = |k: &str| -> Result<Vec<f64>> {
                let v = spec
                    .params
                    .get(k)
                    .ok_or_else(|| Error::Parse(format!("grid_box needs param {k:?}")))?;
                serde_json::from_value(v.clone()).map_err(Error::from)
            };
            GridDensityND::uniform_box(&get("lo")?, &get("hi")?, spec.num("cells")? as usize)
        }
        other => Err(Error::Parse(format!("unknown grid density family {other:?}"))),
    }
}

/// Monte Carlo sample of `m` points from a generator spec: `uniform_simplex`
/// (`n`), `gaussian_nd` (`mean`, `covariance`), `uniform_polytope`
/// (`vertices`) or `cone_uniform` (`base`, `apex`).
pub fn make_cloud(spec: &DensitySpec, m: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    let get = |k: &str| -> Result<Value> {
        spec.params
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("{} needs param {k:?}", spec.family)))
    };
    match spec.family.as_str() {
        "uniform_simplex" => cloud::uniform_simplex(spec.num("n")? as usize, m, seed, exec),
        "gaussian_nd" => {
            let mean: Vec<f64> = serde_json::from_value(get("mean")?)?;
            let cov: Vec<Vec<f64>> = match spec.params.get("covariance") {
                Some(v) => serde_json::from_value(v.clone())?,
                None => (0..mean.len())
                    .map(|i| (0..mean.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
            };
            cloud::gaussian(&mean, &cov, m, seed, exec)
        }
        "uniform_polytope" => {
            let vertices: Vec<Vec<f64>> = serde_json::from_value(get("vertices")?)?;
            cloud::uniform_polytope(&vertices, m, seed, exec)
        }
        "cone_uniform" => {
            let base: Vec<Vec<f64>> = serde_json::from_value(get("base")?)?;
            let apex: Vec<f64> = serde_json::from_value(get("apex")?)?;
            cloud::cone_uniform(&base, &apex, m, seed, exec)
        }
        other => Err(Error::Parse(format!("unknown sample generator {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

/// Product density file: `values[i * fibers + y] = rho(t_grid[i], y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub t_grid: Vec<f64>,
    pub fibers: FiberSpec,
    pub values: Vec<f64>,
    pub class: ConcavityClass,
}

pub fn make_product(spec: &ProductSpec) -> Result<ProductDensity> {
    let fibers = FiberSpace::new(spec.fibers.weights.clone(), spec.fibers.metric.clone())?;
    ProductDensity::from_table(spec.t_grid.clone(), fibers, &spec.values, spec.class)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleSpec {
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<usize>,
    pub density: DensitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleFile {
    pub needles: Vec<NeedleSpec>,
}

pub fn make_needles(file: &NeedleFile) -> Result<NeedleDecomposition> {
    let needles = file
        .needles
        .iter()
        .map(|n| {
            Ok(Needle {
                weight: n.weight,
                density: make_density(&n.density)?,
                fiber: n.fiber,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NeedleDecomposition::new(needles)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Point cloud from CSV text, one point per row. A first row that does not
/// parse as numbers is taken as a header.
pub fn parse_samples<R: Read>(reader: R) -> Result<SampleCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
        }
    }
    SampleCloud::from_rows(&rows)
}

pub fn read_samples(path: &Path) -> Result<SampleCloud> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_samples(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parses_cone_spec() {
        let s: DensitySpec = serde_json::from_str(r#"{"family":"cone","params":{"n":2,"c":1}}"#).unwrap();
        let d = make_density(&s).unwrap();
        assert_abs_diff_eq!(d.integrate(-2.0, 0.0), 4.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn support_ends_accept_strings_and_null() {
        let s: DensitySpec =
            serde_json::from_str(r#"{"family":"gaussian","support":[null,"inf"],"params":{"sd":2}}"#).unwrap();
        let d = make_density(&s).unwrap();
        assert!(!d.support().is_bounded());
        let s: DensitySpec = serde_json::from_str(r#"{"family":"uniform","support":["-inf",1]}"#).unwrap();
        assert!(make_density(&s).is_err());
        let round = serde_json::to_string(&DensitySpec::new("uniform").with_support(f64::NEG_INFINITY, 1.0)).unwrap();
        assert!(round.contains("\"-inf\""));
    }

    #[test]
    fn shift_and_scale_apply() {
        let s = DensitySpec::new("uniform").with_support(0.0, 1.0).param("scale", 2.0).param("shift", -1.0);
        let d = make_density(&s).unwrap();
        assert_eq!(d.support(), Interval::new(-1.0, 1.0).unwrap());
        assert_abs_diff_eq!(d.eval(0.3), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unknown_family_is_a_parse_error() {
        assert!(matches!(make_density(&DensitySpec::new("banana")), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_with_header() {
        let cloud = parse_samples("x,y\n0,0\n1,0\n0,1\n".as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(parse_samples("0,0\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn product_and_needle_files() {
        let p: ProductSpec = serde_json::from_str(
            r#"{"t_grid":[-1,1],"fibers":{"weights":[1,1]},"values":[1,1,1,1],
                "class":{"kind":"positive_n","n":2}}"#,
        )
        .unwrap();
        let rho = make_product(&p).unwrap();
        assert_abs_diff_eq!(rho.eval(0.0, 0), 0.25, epsilon = 1e-15);
        let n: NeedleFile = serde_json::from_str(
            r#"{"needles":[{"weight":0.5,"density":{"family":"uniform","support":[-1,1]}},
                           {"weight":0.5,"density":{"family":"uniform","support":[-2,2]}}]}"#,
        )
        .unwrap();
        assert_eq!(make_needles(&n).unwrap().len(), 2);
    }
}
