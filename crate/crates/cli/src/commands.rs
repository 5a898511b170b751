use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Context;
use serde_json::json;
use trigzeros::correlation::{validate_hypotheses, HypothesisReport, DEFAULT_GRID_POINTS};
use trigzeros::kacrice::{default_quadrature, expected_zeros, normalized_limit_table};
use trigzeros::kernels::KernelFamily;
use trigzeros::sampler::monte_carlo_zero_mean;
use trigzeros::{
    CorrelationModel, Error, ModelConfig, MomentEvaluator, QuadratureConfig, RootCountConfig,
    TWO_PI,
};

use crate::config::{parse_angle, parse_interval, parse_params, FileConfig};
use crate::manifest::{manifest_path, RunManifest};
use crate::output::{Cell, Format, Table};
use crate::{usage, Cli, Command, GridArgs, ModelArgs, EXIT_HYPOTHESES};

/// Edge offset of the default plotting grid, which avoids `0` and `2π`.
const PLOT_MARGIN: f64 = 1e-3;
const PLOT_POINTS: usize = 2048;

struct Outcome {
    body: String,
    model: String,
    params: BTreeMap<String, f64>,
    seed: Option<u64>,
    code: i32,
}

struct Models {
    list: Vec<(ModelConfig, CorrelationModel)>,
}

impl Models {
    fn label(&self) -> String {
        self.list
            .iter()
            .map(|(_, m)| m.label())
            .collect::<Vec<_>>()
            .join(";")
    }

    fn params(&self) -> BTreeMap<String, f64> {
        match self.list.as_slice() {
            [(cfg, _)] => cfg.params.clone(),
            many => many
                .iter()
                .flat_map(|(cfg, m)| {
                    let label = m.label();
                    cfg.params
                        .iter()
                        .map(move |(k, v)| (format!("{label}.{k}"), *v))
                })
                .collect(),
        }
    }

    fn single(self) -> anyhow::Result<(ModelConfig, CorrelationModel)> {
        let mut list = self.list;
        match list.len() {
            1 => Ok(list.remove(0)),
            0 => Err(usage("a model is required (--model)")),
            k => Err(usage(format!("this command takes one model, got {k}"))),
        }
    }
}

fn resolve_models(
    args: &ModelArgs,
    file: &FileConfig,
    defaults: &[&str],
) -> anyhow::Result<Models> {
    let specs: Vec<String> = if !args.model.is_empty() {
        args.model.clone()
    } else if let Some(m) = file.model.clone() {
        m.into_vec()
    } else {
        defaults.iter().map(|s| s.to_string()).collect()
    };
    let mut extra = file.params.clone().unwrap_or_default();
    if let Some(p) = &args.params {
        extra.extend(parse_params(p)?);
    }
    let list = specs
        .iter()
        .map(|spec| {
            let mut cfg = ModelConfig::from_str(spec)?;
            cfg.params
                .extend(extra.iter().map(|(k, v)| (k.clone(), *v)));
            let model = cfg.build()?;
            Ok((cfg, model))
        })
        .collect::<trigzeros::Result<Vec<_>>>()?;
    Ok(Models { list })
}

fn degrees(cli: &[usize], file: &FileConfig, default: &[usize]) -> Vec<usize> {
    if !cli.is_empty() {
        cli.to_vec()
    } else if let Some(n) = file.n.clone() {
        n.into_vec()
    } else {
        default.to_vec()
    }
}

fn single_degree(cli: Option<usize>, file: &FileConfig) -> anyhow::Result<usize> {
    match (cli, file.n.clone().map(|n| n.into_vec())) {
        (Some(n), _) => Ok(n),
        (None, Some(v)) if v.len() == 1 => Ok(v[0]),
        (None, Some(_)) => Err(usage("this command takes a single degree --n")),
        (None, None) => Err(usage("--n is required")),
    }
}

fn interval(cli: &Option<String>, file: &FileConfig) -> anyhow::Result<(f64, f64)> {
    match cli.as_ref().or(file.interval.as_ref()) {
        Some(s) => parse_interval(s),
        None => Ok((0.0, TWO_PI)),
    }
}

fn grid(args: &GridArgs, file: &FileConfig, lo: f64, hi: f64) -> anyhow::Result<Vec<f64>> {
    let points = args.points.or(file.points).unwrap_or(PLOT_POINTS);
    let angle = |cli: &Option<String>, fc: &Option<crate::config::Angle>, default: f64| match cli {
        Some(s) => parse_angle(s),
        None => match fc {
            Some(a) => parse_angle(&a.clone().into_string()),
            None => Ok(default),
        },
    };
    let lo = angle(&args.lo, &file.lo, lo)?;
    let hi = angle(&args.hi, &file.hi, hi)?;
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    if lo >= hi {
        return Err(usage(format!("grid needs lo < hi, got {lo} and {hi}")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

fn require_hypotheses(model: &CorrelationModel) -> anyhow::Result<HypothesisReport> {
    let report = validate_hypotheses(model, DEFAULT_GRID_POINTS, &QuadratureConfig::default())?;
    if !report.passes {
        return Err(Error::HypothesesViolated {
            model: model.label(),
            gamma: report.infimum_gamma,
            l1_norm: report.l1_norm,
        }
        .into());
    }
    Ok(report)
}

fn quadrature(
    rel_tol: Option<f64>,
    max_refinements: Option<usize>,
    points_per_panel: Option<usize>,
) -> anyhow::Result<QuadratureConfig> {
    let mut q = default_quadrature();
    if let Some(p) = points_per_panel {
        q.points_per_panel = p;
    }
    if let Some(t) = rel_tol {
        q.rel_tol = t;
    }
    if let Some(r) = max_refinements {
        q.max_refinements = r;
    }
    q.validate()?;
    Ok(q)
}

fn root_config(oversampling: Option<usize>) -> anyhow::Result<RootCountConfig> {
    let cfg = RootCountConfig {
        oversampling: oversampling.unwrap_or(RootCountConfig::default().oversampling),
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line and returns the exit code.
pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.global.threads.or(file.threads) {
        if threads == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let name = cli.command.name();
    let default_format = if name == "validate" {
        Format::Json
    } else {
        Format::Csv
    };
    let format = cli.global.format.or(file.format).unwrap_or(default_format);
    let user_seed = cli.global.seed.or(file.seed);
    let out = cli.global.out.clone().or(file.out.clone());

    let outcome = match &cli.command {
        Command::Validate { model, grid_points } => {
            let models = resolve_models(model, &file, &[])?;
            let params = models.params();
            let (_, m) = models.single()?;
            let points = grid_points
                .or(file.grid_points)
                .unwrap_or(DEFAULT_GRID_POINTS);
            validate(&m, points, format, params, user_seed)?
        }
        Command::Spectral { model, grid: g } => {
            let models = resolve_models(model, &file, &["fgn:H=0.6", "fgn:H=0.75", "fgn:H=0.9"])?;
            let xs = grid(g, &file, PLOT_MARGIN, TWO_PI - PLOT_MARGIN)?;
            spectral(&models, &xs, format, user_seed)?
        }
        Command::Kernels { n, fejer, grid: g } => {
            let ns = degrees(n, &file, &[2, 5, 10, 20]);
            let xs = grid(g, &file, PLOT_MARGIN, TWO_PI - PLOT_MARGIN)?;
            kernels(
                &ns,
                *fejer || file.fejer.unwrap_or(false),
                &xs,
                format,
                user_seed,
            )?
        }
        Command::Covariance { model, n, grid: g } => {
            let models = resolve_models(model, &file, &[])?;
            let params = models.params();
            let (_, m) = models.single()?;
            let n = single_degree(*n, &file)?;
            let ts = grid(g, &file, 0.0, TWO_PI)?;
            covariance(&m, n, &ts, format, params, user_seed)?
        }
        Command::Kacrice {
            model,
            n,
            interval: iv,
            rel_tol,
            max_refinements,
            points_per_panel,
        } => {
            let models = resolve_models(model, &file, &[])?;
            let params = models.params();
            let (_, m) = models.single()?;
            let ns = degrees(n, &file, &[]);
            if ns.is_empty() {
                return Err(usage("at least one --n is required"));
            }
            let q = quadrature(
                rel_tol.or(file.rel_tol),
                max_refinements.or(file.max_refinements),
                points_per_panel.or(file.points_per_panel),
            )?;
            let iv = interval(iv, &file)?;
            kacrice(&m, &ns, iv, &q, format, params, user_seed)?
        }
        Command::Theorem1 {
            model,
            n,
            interval: iv,
            rel_tol,
            montecarlo,
            oversampling,
        } => {
            let models = resolve_models(model, &file, &[])?;
            let params = models.params();
            let (_, m) = models.single()?;
            let ns = degrees(n, &file, &[10, 100, 400, 1600]);
            let q = quadrature(
                rel_tol.or(file.rel_tol),
                file.max_refinements,
                file.points_per_panel,
            )?;
            let iv = interval(iv, &file)?;
            let mc = montecarlo.or(file.montecarlo);
            let roots = root_config(oversampling.or(file.oversampling))?;
            let seed = mc.map(|_| user_seed.unwrap_or(0)).or(user_seed);
            theorem1(&m, &ns, iv, &q, mc, &roots, format, params, seed)?
        }
        Command::Montecarlo {
            model,
            n,
            trials,
            interval: iv,
            oversampling,
            compare,
        } => {
            let models = resolve_models(model, &file, &[])?;
            let params = models.params();
            let (_, m) = models.single()?;
            let n = single_degree(*n, &file)?;
            let trials = trials.or(file.trials).unwrap_or(1000);
            let iv = interval(iv, &file)?;
            let roots = root_config(oversampling.or(file.oversampling))?;
            let compare = *compare || file.compare.unwrap_or(false);
            let seed = user_seed.unwrap_or(0);
            montecarlo(&m, n, trials, iv, &roots, compare, format, params, seed)?
        }
    };
    emit(name, out, outcome)
}

fn emit(command: &str, out: Option<PathBuf>, outcome: Outcome) -> anyhow::Result<i32> {
    let mut manifest = RunManifest::new(command, outcome.model, outcome.params, outcome.seed);
    match out {
        Some(path) => {
            std::fs::write(&path, &outcome.body)
                .with_context(|| format!("writing {}", path.display()))?;
            manifest.outputs.push(path.display().to_string());
            let mpath = manifest_path(&path);
            std::fs::write(&mpath, manifest.to_json() + "\n")
                .with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.body.as_bytes())?;
            stdout.flush()?;
            manifest.outputs.push("-".to_string());
            eprintln!("{}", serde_json::to_string(&manifest)?);
        }
    }
    Ok(outcome.code)
}

fn validate(
    model: &CorrelationModel,
    grid_points: usize,
    format: Format,
    params: BTreeMap<String, f64>,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    let rep = validate_hypotheses(model, grid_points, &QuadratureConfig::default())?;
    let body = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "model": model.label(),
                "l1_norm": rep.l1_norm,
                "infimum_gamma": rep.infimum_gamma,
                "argmin": rep.argmin,
                "grid_points": rep.grid_points,
                "passes": rep.passes,
            }))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new([
                "l1_norm",
                "infimum_gamma",
                "argmin",
                "grid_points",
                "passes",
            ]);
            t.push(vec![
                rep.l1_norm.into(),
                rep.infimum_gamma.into(),
                rep.argmin.into(),
                rep.grid_points.into(),
                rep.passes.into(),
            ]);
            t.render(format)
        }
    };
    if !rep.passes {
        eprintln!(
            "hypotheses violated for {}: inf psi = {} at x = {}",
            model.label(),
            rep.infimum_gamma,
            rep.argmin
        );
    }
    Ok(Outcome {
        body,
        model: model.label(),
        params,
        seed,
        code: if rep.passes { 0 } else { EXIT_HYPOTHESES },
    })
}

fn spectral(
    models: &Models,
    xs: &[f64],
    format: Format,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    let mut columns = vec!["x".to_string()];
    columns.extend(models.list.iter().map(|(_, m)| m.label()));
    let mut t = Table::new(columns);
    for &x in xs {
        let mut row = vec![Cell::Num(x)];
        for (_, m) in &models.list {
            row.push(m.psi(x)?.into());
        }
        t.push(row);
    }
    Ok(Outcome {
        body: t.render(format),
        model: models.label(),
        params: models.params(),
        seed,
        code: 0,
    })
}

fn kernels(
    ns: &[usize],
    fejer: bool,
    xs: &[f64],
    format: Format,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    let families = ns
        .iter()
        .map(|&n| KernelFamily::new(n))
        .collect::<trigzeros::Result<Vec<_>>>()?;
    let mut columns = vec!["x".to_string()];
    for n in ns {
        if fejer {
            columns.push(format!("K_{n}"));
            columns.push(format!("dK_{n}"));
        }
        columns.push(format!("L_{n}"));
    }
    let mut t = Table::new(columns);
    for &x in xs {
        let mut row = vec![Cell::Num(x)];
        for k in &families {
            if fejer {
                row.push(k.fejer(x).into());
                row.push(k.fejer_derivative_periodic(x).into());
            }
            row.push(k.l_kernel(x).into());
        }
        t.push(row);
    }
    let params = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| (format!("n.{i}"), n as f64))
        .collect();
    Ok(Outcome {
        body: t.render(format),
        model: String::new(),
        params,
        seed,
        code: 0,
    })
}

fn covariance(
    model: &CorrelationModel,
    n: usize,
    ts: &[f64],
    format: Format,
    mut params: BTreeMap<String, f64>,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    let ev = MomentEvaluator::new(model, n)?;
    let mut t = Table::new(["t", "var_f", "var_fprime", "cov_cross"]);
    for &x in ts {
        let c = ev.triple(x)?;
        t.push(vec![
            x.into(),
            c.var_f.into(),
            c.var_fprime.into(),
            c.cov_cross.into(),
        ]);
    }
    params.insert("n".into(), n as f64);
    Ok(Outcome {
        body: t.render(format),
        model: model.label(),
        params,
        seed,
        code: 0,
    })
}

fn kacrice(
    model: &CorrelationModel,
    ns: &[usize],
    (lo, hi): (f64, f64),
    quad: &QuadratureConfig,
    format: Format,
    mut params: BTreeMap<String, f64>,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    require_hypotheses(model)?;
    let mut t = Table::new([
        "n",
        "interval_lo",
        "interval_hi",
        "value",
        "error_estimate",
        "value_over_n",
    ]);
    for &n in ns {
        let e = expected_zeros(model, n, (lo, hi), quad)?;
        t.push(vec![
            n.into(),
            lo.into(),
            hi.into(),
            e.value.into(),
            e.error_estimate.into(),
            e.value_over_n().into(),
        ]);
    }
    params.insert("rel_tol".into(), quad.rel_tol);
    params.insert("points_per_panel".into(), quad.points_per_panel as f64);
    params.insert("max_refinements".into(), quad.max_refinements as f64);
    Ok(Outcome {
        body: t.render(format),
        model: model.label(),
        params,
        seed,
        code: 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn theorem1(
    model: &CorrelationModel,
    ns: &[usize],
    (lo, hi): (f64, f64),
    quad: &QuadratureConfig,
    montecarlo: Option<usize>,
    roots: &RootCountConfig,
    format: Format,
    mut params: BTreeMap<String, f64>,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    require_hypotheses(model)?;
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("degrees must be strictly increasing"));
    }
    let rows = normalized_limit_table(model, ns, (lo, hi), quad)?;
    // E[N_n(K)]/n tends to |K|/(√3 π), which is 2/√3 on a full period.
    let limit = (hi - lo) / (3f64.sqrt() * std::f64::consts::PI);
    let mut columns = vec!["n", "value", "error_estimate", "value_over_n"];
    if montecarlo.is_some() {
        columns.extend(["mc_mean", "mc_std_error"]);
    }
    columns.push("deviation");
    let mut t = Table::new(columns);
    for r in &rows {
        let mut row = vec![
            r.n.into(),
            r.estimate.value.into(),
            r.estimate.error_estimate.into(),
            r.ratio.into(),
        ];
        if let Some(trials) = montecarlo {
            let mc = monte_carlo_zero_mean(model, r.n, trials, (lo, hi), seed.unwrap_or(0), roots)?;
            row.push(mc.mean.into());
            row.push(mc.std_error.into());
        }
        row.push((r.ratio - limit).abs().into());
        t.push(row);
    }
    if let Some(trials) = montecarlo {
        params.insert("trials".into(), trials as f64);
    }
    Ok(Outcome {
        body: t.render(format),
        model: model.label(),
        params,
        seed,
        code: 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn montecarlo(
    model: &CorrelationModel,
    n: usize,
    trials: usize,
    interval: (f64, f64),
    roots: &RootCountConfig,
    compare: bool,
    format: Format,
    mut params: BTreeMap<String, f64>,
    seed: u64,
) -> anyhow::Result<Outcome> {
    let kr = if compare {
        require_hypotheses(model)?;
        Some(expected_zeros(model, n, interval, &default_quadrature())?.value)
    } else {
        None
    };
    let mc = monte_carlo_zero_mean(model, n, trials, interval, seed, roots)?;
    let mut columns = vec!["n", "trials", "mean", "std_error", "near_tangencies"];
    let mut row: Vec<Cell> = vec![
        n.into(),
        trials.into(),
        mc.mean.into(),
        mc.std_error.into(),
        mc.near_tangencies.into(),
    ];
    if let Some(kr) = kr {
        columns.extend(["kac_rice", "z"]);
        row.push(kr.into());
        row.push(((mc.mean - kr) / mc.std_error).into());
    }
    let mut t = Table::new(columns);
    t.push(row);
    params.insert("n".into(), n as f64);
    params.insert("trials".into(), trials as f64);
    params.insert("oversampling".into(), roots.oversampling as f64);
    Ok(Outcome {
        body: t.render(format),
        model: model.label(),
        params,
        seed: Some(seed),
        code: 0,
    })
}
