use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use grunbaum_core::core1d::{
    cdf_profile, check_class, grunbaum_bound, recenter, rigidity_detect, verify_grunbaum_1d, CdfProfile,
    ConcavityClass, Density1D, GridSpec, ModelParams,
};
use grunbaum_core::io::{
    make_cloud, make_density, make_grid_density, make_needles, make_product, read_json, read_samples, DensitySpec,
    FiberSpec, NeedleFile, ProductSpec,
};
use grunbaum_core::nd::{marginal_1d, tukey_depth, verify_depth_bound, DepthConfig, GridDensityND, Measure, SampleCloud};
use grunbaum_core::product::{
    check_pushforward_class, needle_verify_with, pushforward_busemann, rigidity_profile_check, verify_main_theorem,
    FiberSpace, NeedleVerifyConfig,
};
use grunbaum_core::stability::{moment_sandwich, needle_stability, stability_certificate};
use grunbaum_core::{Error, Exec};
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::output::{Outcome, Plot, Series, Table};

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match cfg.command {
        Command::Verify1d => verify1d(cfg),
        Command::Depth => depth(cfg),
        Command::Marginal => marginal(cfg),
        Command::Product => product(cfg),
        Command::Needles => needles(cfg),
        Command::Stability => stability(cfg),
        Command::Models => models(cfg),
    }
}

/// Files whose bytes go into the report digest.
pub fn input_files(cfg: &RunConfig) -> Vec<&Path> {
    [&cfg.input, &cfg.product, &cfg.needles]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect()
}

fn load_density(cfg: &RunConfig) -> anyhow::Result<Density1D> {
    let spec: DensitySpec = read_json(cfg.input()?)?;
    let d = make_density(&spec)?;
    Ok(if cfg.recenter { recenter(&d)? } else { d })
}

fn precondition(e: Error) -> anyhow::Error {
    match e {
        Error::NotCentered { .. } => anyhow::Error::new(e).context("precondition failed; pass --recenter to center the input"),
        e => e.into(),
    }
}

fn cdf_plot(title: &str, p: &CdfProfile, model: Option<&ModelParams>) -> (Table, Plot) {
    let mut table = Table::new(&["x", "R", "F"]);
    let mut r = Vec::with_capacity(p.grid.len());
    let mut f = Vec::new();
    for (&x, &rx) in p.grid.iter().zip(&p.r) {
        let fx = model.map_or(f64::NAN, |m| m.cdf(x));
        table.rows.push(vec![x, rx, fx]);
        r.push((x, rx));
        if model.is_some() {
            f.push((x, fx));
        }
    }
    let mut series = vec![Series {
        name: "R".into(),
        points: r,
        dashed: false,
    }];
    if let Some(m) = model {
        series.push(Series {
            name: format!("model c = {:.4}", m.c),
            points: f,
            dashed: true,
        });
    }
    let plot = Plot {
        title: title.into(),
        x_label: "x".into(),
        y_label: "CDF".into(),
        series,
        reference: None,
    };
    (table, plot)
}

fn verify1d(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let cls = cfg.class()?;
    let d = load_density(cfg)?;
    let v = verify_grunbaum_1d(&d, &cls, cfg.tol).map_err(precondition)?;
    let p = cdf_profile(&d, &GridSpec::default())?;
    let rigidity = rigidity_detect(&p, &cls, cfg.tol).ok();
    let (table, plot) = cdf_plot("CDF against the extremal model", &p, rigidity.as_ref().map(|r| &r.params));
    let summary = format!(
        "{}: masses ({:.6}, {:.6}) against bound {:.6}, margin {:.3e}{}",
        cls.label(),
        v.left_mass,
        v.right_mass,
        v.bound,
        v.min_margin(),
        if v.equality { ", equality" } else { "" }
    );
    Ok(Outcome {
        passed: v.passed,
        summary,
        result: json!({ "verification": v, "rigidity": rigidity }),
        table: Some(table),
        plot: Some(plot),
    })
}

enum Loaded {
    Cloud(SampleCloud),
    Grid(GridDensityND),
}

impl Loaded {
    fn measure(&self) -> &dyn Measure {
        match self {
            Loaded::Cloud(c) => c,
            Loaded::Grid(g) => g,
        }
    }
}

fn load_measure(cfg: &RunConfig) -> anyhow::Result<Loaded> {
    let path = cfg.input()?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Ok(Loaded::Cloud(read_samples(path)?));
    }
    let spec: DensitySpec = read_json(path)?;
    if spec.family.starts_with("grid") {
        Ok(Loaded::Grid(make_grid_density(&spec)?))
    } else {
        Ok(Loaded::Cloud(make_cloud(&spec, cfg.mc_samples, cfg.seed, Exec::default())?))
    }
}

fn s_param(cfg: &RunConfig) -> Option<f64> {
    cfg.s.or(match cfg.class {
        Some(ConcavityClass::SConcave { s, .. }) => Some(s),
        _ => None,
    })
}

fn depth(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let loaded = load_measure(cfg)?;
    let mu = loaded.measure();
    let dcfg = DepthConfig {
        directions: cfg.directions,
        seed: cfg.seed,
        ..DepthConfig::default()
    };
    let (point, passed, summary, result, bound) = match &cfg.point {
        Some(x) => {
            if x.len() != mu.dim() {
                bail!("--point has {} coordinates, the measure has dimension {}", x.len(), mu.dim());
            }
            let r = tukey_depth(mu, x, &dcfg)?;
            let summary = format!("depth {:.6} at {:?}", r.depth, x);
            (x.clone(), true, summary, json!({ "depth": r }), None)
        }
        None => {
            let s = s_param(cfg).context("depth needs --s (or --class s-concave) to state the bound")?;
            let v = verify_depth_bound(mu, s, cfg.tol, &dcfg)?;
            let summary = format!(
                "depth {:.6} at the barycenter against bound {:.6} (s = {s}), margin {:.3e}",
                v.report.depth, v.bound, v.margin
            );
            (v.barycenter.clone(), v.passed, summary, json!({ "verification": v }), Some(v.bound))
        }
    };
    let (table, plot) = if mu.dim() == 2 {
        let mut table = Table::new(&["angle_deg", "mass"]);
        let mut pts = Vec::new();
        for k in 0..720 {
            let a = k as f64 * 0.5;
            let v = [a.to_radians().cos(), a.to_radians().sin()];
            let r = v[0] * point[0] + v[1] * point[1];
            let (le, _) = mu.split_masses(&v, r);
            table.rows.push(vec![a, le]);
            pts.push((a, le));
        }
        let plot = Plot {
            title: "Halfspace mass by normal direction".into(),
            x_label: "angle (degrees)".into(),
            y_label: "mass of {<v,y> <= <v,x>}".into(),
            series: vec![Series {
                name: "mass".into(),
                points: pts,
                dashed: false,
            }],
            reference: bound.map(|b| (b, format!("bound {b:.4}"))),
        };
        (Some(table), Some(plot))
    } else {
        (None, None)
    };
    Ok(Outcome {
        passed,
        summary,
        result,
        table,
        plot,
    })
}

fn marginal(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let loaded = load_measure(cfg)?;
    let mu = loaded.measure();
    let dir = cfg.direction.as_ref().context("marginal needs --direction")?;
    let m = marginal_1d(mu, dir, s_param(cfg))?;
    let check = m.class.map(|c| check_class(&m.density, &c, cfg.tol));
    let passed = check.as_ref().is_none_or(|c| c.passed || m.advisory);
    let summary = match (&check, &m.class) {
        (Some(c), Some(cls)) => format!(
            "marginal along {:?}: class {} {} (worst violation {:.3e}){}",
            m.direction,
            cls.label(),
            if c.passed { "holds" } else { "fails" },
            c.worst_violation,
            if m.advisory { ", advisory" } else { "" }
        ),
        _ => format!("marginal along {:?} over {} bins", m.direction, m.bins),
    };
    let s = m.density.support();
    let xs: Vec<f64> = m.density.knots().unwrap_or_else(|| {
        let (a, b) = (s.lower, s.upper);
        (0..=512).map(|i| a + (b - a) * i as f64 / 512.0).collect()
    });
    let mut table = Table::new(&["x", "density"]);
    let mut pts = Vec::with_capacity(xs.len());
    for &x in &xs {
        let w = m.density.eval(x) / m.density.mass();
        table.rows.push(vec![x, w]);
        pts.push((x, w));
    }
    let plot = Plot {
        title: "Marginal density".into(),
        x_label: "<v, x>".into(),
        y_label: "density".into(),
        series: vec![Series {
            name: "marginal".into(),
            points: pts,
            dashed: false,
        }],
        reference: None,
    };
    Ok(Outcome {
        passed,
        summary,
        result: json!({
            "direction": m.direction,
            "class": m.class,
            "advisory": m.advisory,
            "bins": m.bins,
            "rule": m.rule,
            "class_check": check,
        }),
        table: Some(table),
        plot: Some(plot),
    })
}

fn product(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let spec: ProductSpec = read_json(cfg.input()?)?;
    let rho = make_product(&spec)?;
    let rho = if cfg.recenter { rho.recenter()? } else { rho };
    let v = verify_main_theorem(&rho, cfg.tol).map_err(precondition)?;
    let push = check_pushforward_class(&rho, cfg.tol)?;
    let pf = pushforward_busemann(&rho)?;
    let p = cdf_profile(&pf.normalize()?, &GridSpec::default())?;
    let (table, mut plot) = cdf_plot("Busemann pushforward", &p, None);
    plot.reference = Some((v.bound, format!("bound {:.4}", v.bound)));
    let summary = format!(
        "{}: sublevel masses ({:.6}, {:.6}) against bound {:.6}, pushforward class {}",
        v.class.label(),
        v.left_mass,
        v.right_mass,
        v.bound,
        if push.passed { "holds" } else { "fails" }
    );
    Ok(Outcome {
        passed: v.passed && push.passed,
        summary,
        result: json!({ "verification": v, "pushforward": push }),
        table: Some(table),
        plot: Some(plot),
    })
}

fn needles(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let file: NeedleFile = read_json(cfg.input()?)?;
    let d = make_needles(&file)?;
    let path = cfg.product.as_ref().context("needles needs --product with the product spec")?;
    let rho = make_product(&read_json::<ProductSpec>(path)?)?;
    let cls = cfg.class.unwrap_or(rho.class());
    let vcfg = NeedleVerifyConfig {
        slabs: cfg.slabs,
        seed: cfg.seed,
        exec: Exec::default(),
    };
    let r = needle_verify_with(&d, &rho, &cls, cfg.tol, &vcfg)?;
    let rigidity = rigidity_profile_check(&d, Some(&rho), &cls, cfg.tol).ok();
    let mut table = Table::new(&["index", "weight", "barycenter", "left_mass", "right_mass", "passed"]);
    for n in &r.needles {
        table.rows.push(vec![
            n.index as f64,
            n.weight,
            n.barycenter,
            n.left_mass,
            n.right_mass,
            if n.passed { 1.0 } else { 0.0 },
        ]);
    }
    let summary = if r.failing.is_empty() {
        format!(
            "{} needles pass; global masses ({:.6}, {:.6}), disintegration residual {:.3e}",
            r.needles.len(),
            r.global_left,
            r.global_right,
            r.disintegration_residual
        )
    } else {
        format!("failing needles {:?}", r.failing)
    };
    Ok(Outcome {
        passed: r.passed,
        summary,
        result: json!({ "verification": r, "rigidity": rigidity }),
        table: Some(table),
        plot: None,
    })
}

fn stability(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let cls = cfg.class()?;
    if let Some(path) = &cfg.needles {
        let d = make_needles(&read_json::<NeedleFile>(path)?)?;
        let eps = cfg.epsilon.context("needle stability needs --epsilon")?;
        let delta = cfg.delta.context("needle stability needs --delta")?;
        let r = needle_stability(&d, &cls, eps, delta, cfg.tol)?;
        let mut table = Table::new(&["index", "weight", "left_mass", "selected", "lhs", "rhs"]);
        for n in &r.needles {
            let (lhs, rhs) = n
                .certificate
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |c| (c.lhs + c.truncation_error, c.rhs));
            table.rows.push(vec![n.index as f64, n.weight, n.left_mass, f64::from(u8::from(n.selected)), lhs, rhs]);
        }
        let summary = format!(
            "selected mass {:.6} >= {:.6}, ε' = {}, {}",
            r.selected_mass,
            r.required_mass,
            r.epsilon_prime,
            if r.failing.is_empty() {
                "all selected needles pass".to_string()
            } else {
                format!("failing needles {:?}", r.failing)
            }
        );
        return Ok(Outcome {
            passed: r.passed,
            summary,
            result: json!({ "needle_stability": r }),
            table: Some(table),
            plot: None,
        });
    }
    let d = load_density(cfg)?;
    let cert = stability_certificate(&d, &cls, cfg.tol).map_err(precondition)?;
    let p = cdf_profile(&d, &GridSpec::default())?;
    let sandwich = moment_sandwich(&p, &cls, cfg.tol).ok();
    let (table, plot) = cdf_plot("CDF against the stability model", &p, Some(&cert.model));
    let summary = format!(
        "ε = {:.6e}, ∫|R - F| = {:.6e} (+{:.1e} truncation) against bound {:.6e}",
        cert.epsilon, cert.lhs, cert.truncation_error, cert.rhs
    );
    Ok(Outcome {
        passed: cert.passed,
        summary,
        result: json!({ "certificate": cert, "sandwich": sandwich }),
        table: Some(table),
        plot: Some(plot),
    })
}

fn models(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let n = cfg.n.unwrap_or(2.0);
    let beta = cfg.beta.unwrap_or(-3.0);
    let specs = [
        ("cone.json", DensitySpec::new("cone").param("n", n).param("c", 1.0)),
        ("exponential.json", DensitySpec::new("exponential").param("c", 1.0)),
        ("neg_cone.json", DensitySpec::new("neg_cone").param("beta", beta).param("c", 1.0)),
    ];
    let mut files = Vec::new();
    for (name, spec) in &specs {
        make_density(spec)?;
        let path = cfg.out.join(name);
        write_json(&path, spec)?;
        files.push(path);
    }
    let fibers = FiberSpace::circle(16)?;
    let cylinder = ProductSpec {
        t_grid: vec![-1.0, 1.0],
        fibers: FiberSpec {
            weights: fibers.weights().to_vec(),
            metric: fibers.metric().map(<[Vec<f64>]>::to_vec),
        },
        values: vec![1.0; 2 * fibers.len()],
        class: ConcavityClass::PositiveN { n: 2.0 },
    };
    make_product(&cylinder)?;
    let path = cfg.out.join("cylinder.json");
    write_json(&path, &cylinder)?;
    files.push(path);
    let bounds = json!({
        "cone": grunbaum_bound(&ConcavityClass::PositiveN { n }),
        "exponential": grunbaum_bound(&ConcavityClass::LogConcave),
        "neg_cone": grunbaum_bound(&ConcavityClass::NegativeN { beta }),
    });
    Ok(Outcome {
        passed: true,
        summary: format!("wrote {} model specs", files.len()),
        result: json!({ "files": files, "bounds": bounds }),
        table: None,
        plot: None,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
