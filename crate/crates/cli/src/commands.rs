//! One function per subcommand. Each returns the resolved parameters and the result.

use serde::Serialize;
use serde_json::{json, Map, Value};

use phasekit::embedding::{
    default_bins, embed, mutual_information_profile, select_delay, DelayEmbedding, NeighborIndex,
};
use phasekit::identify::{build_state_sequence, fit_model, BasisTerm, FitOptions, ModelMode, TimeBasis};
use phasekit::invariants::{
    box_grid, correlation_dimension, correlation_integral, default_grid, generalized_dimension, geometric_grid, kaplan_yorke,
    PairNormalization, DEFAULT_GRID_POINTS,
};
use phasekit::lyapunov::{
    benettin_spectrum, kantz_curve, rosenstein_curve, spectrum_checks, wolf_lambda1, BenettinConfig, BenettinSource,
    CurveOptions, LyapunovSpectrum, WolfParams, ZERO_EXPONENT_TOL,
};
use phasekit::predict::{
    composite_j, e_psi, local_predict, local_predict_where, local_stability, select_prediction, stability_features,
    stepwise_reconstruct, FeatureSeries, FeatureSpec, NetConfig, PredictorModel, RegressorKind, StepwiseConfig,
};
use phasekit::refsys::{catalog, default_initial_state, generate, SystemKind};
use phasekit::series::{to_csv_string, TimeSeries};
use phasekit::symmetry::{dft_contour, load_contour_csv, normalize, symmetry_between};

use crate::args::*;
use crate::input::{default_tau_max, load_scalar, load_table, resolve_tau};
use crate::output::write_file;
use crate::{CliError, Outcome};

type Res = Result<Outcome, CliError>;

pub fn dispatch(cli: &Cli) -> Res {
    let seed = cli.seed;
    let mut out = match &cli.command {
        Command::Simulate(a) => simulate(a, cli),
        Command::Mi(a) => mi(a),
        Command::Embed(a) => embed_cmd(a),
        Command::Dimension(a) => dimension(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::Identify(a) => identify(a),
        Command::Predict(a) => predict(a, seed),
        Command::Stepwise(a) => stepwise(a),
        Command::Symmetry(a) => symmetry(a),
    }?;
    if let Value::Object(map) = &mut out.params {
        map.insert("seed".into(), json!(seed));
        map.insert("out".into(), json!(cli.out));
    }
    Ok(out)
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::compute(e.to_string()))
}

/// Flattened argument map with resolved values merged over the given ones.
fn params(args: &impl Serialize, resolved: Value) -> Result<Value, CliError> {
    fn flatten(v: Value, into: &mut Map<String, Value>) {
        if let Value::Object(m) = v {
            for (k, v) in m {
                if matches!(k.as_str(), "input" | "embed") && v.is_object() {
                    flatten(v, into);
                } else {
                    into.insert(k, v);
                }
            }
        }
    }
    let mut map = Map::new();
    flatten(to_value(args)?, &mut map);
    flatten(resolved, &mut map);
    Ok(Value::Object(map))
}

fn done(params: Value, result: Value) -> Res {
    Ok(Outcome { params, result, stdout_override: None })
}

fn simulate(a: &SimulateArgs, cli: &Cli) -> Res {
    let sys = catalog(&a.system)?;
    let x0 = match &a.x0 {
        Some(x) => x.clone(),
        None => default_initial_state(&a.system)?,
    };
    if a.steps == 0 {
        return Err(CliError::usage("--steps must be at least 1"));
    }
    let observe: Vec<usize> = a.observe.clone().unwrap_or_else(|| (0..sys.dimension).collect());
    let traj = generate(&sys, &x0, a.dt, a.substeps, a.transient, a.steps)?;
    let series = traj.observe(&a.system, &observe)?;
    let csv = to_csv_string(&series, a.with_time);
    let dt = match sys.kind {
        SystemKind::Map => 1.0,
        SystemKind::Flow => a.dt,
    };
    let p = params(a, json!({ "x0": x0, "observe": observe }))?;
    let result = json!({
        "system": sys.name,
        "kind": match sys.kind { SystemKind::Map => "map", SystemKind::Flow => "flow" },
        "samples": series.len(),
        "channels": series.channels(),
        "dt": dt,
        "parameters": sys.parameters.iter().map(|(k, v)| json!({"name": k, "value": v})).collect::<Vec<_>>(),
    });
    match &cli.out {
        Some(path) => {
            write_file(path, &csv)?;
            done(p, result)
        }
        None => Ok(Outcome { params: p, result, stdout_override: Some(csv) }),
    }
}

fn mi(a: &MiArgs) -> Res {
    let s = load_scalar(&a.input)?;
    let n = s.len();
    let tau_max = a.tau_max.unwrap_or_else(|| default_tau_max(n));
    let bins = a.bins.unwrap_or_else(|| default_bins(n));
    let profile = mutual_information_profile(&s, 0, tau_max, bins)?;
    let sel = select_delay(&profile)?;
    done(
        params(a, json!({ "tau_max": tau_max, "bins": bins }))?,
        json!({
            "tau": sel.tau,
            "interior_minimum": sel.interior_minimum,
            "profile": profile.iter().map(|&(t, v)| json!([t, v])).collect::<Vec<_>>(),
        }),
    )
}

struct Embedded {
    series: TimeSeries,
    emb: DelayEmbedding,
    tau: usize,
    theiler: usize,
}

fn embed_input(input: &InputArgs, m: usize, tau: Option<usize>, theiler: Option<usize>) -> Result<Embedded, CliError> {
    let series = load_scalar(input)?;
    let tau = resolve_tau(&series, tau)?;
    let emb = embed(&series, m, tau)?;
    let theiler = theiler.unwrap_or_else(|| emb.default_theiler());
    Ok(Embedded { series, emb, tau, theiler })
}

fn embed_cmd(a: &EmbedArgs) -> Res {
    let e = embed_input(&a.input, a.embed.m, a.embed.tau, a.embed.theiler)?;
    if let Some(path) = &a.csv_out {
        write_file(path, &e.emb.to_csv_string())?;
    }
    let (lo, hi) = e.emb.bounds();
    done(
        params(a, json!({ "tau": e.tau, "theiler": e.theiler }))?,
        json!({
            "rows": e.emb.len(),
            "width": e.emb.width(),
            "first_time": e.emb.times().first(),
            "bounding_diagonal": e.emb.bounding_diagonal(),
            "lower": lo,
            "upper": hi,
        }),
    )
}

fn fit_range(v: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    v.as_ref().map(|r| (r[0], r[1]))
}

fn dimension(a: &DimensionArgs) -> Res {
    let e = embed_input(&a.input, a.embed.m, a.embed.tau, a.embed.theiler)?;
    let grid = if a.grid_points == DEFAULT_GRID_POINTS && a.q != 2.0 {
        box_grid(&e.emb)?
    } else if a.grid_points == DEFAULT_GRID_POINTS {
        default_grid(&e.emb)?
    } else {
        let d = e.emb.bounding_diagonal();
        geometric_grid(1e-3 * d, d, a.grid_points)?
    };
    let resolved = json!({ "tau": e.tau, "theiler": e.theiler });
    if a.q == 2.0 {
        let curve = correlation_integral(&e.emb, &grid, e.theiler, PairNormalization::Squared)?;
        if let Some(path) = &a.curve_out {
            write_file(path, &curve.to_csv_string())?;
        }
        let est = correlation_dimension(&curve, fit_range(&a.fit_range))?;
        done(
            params(a, resolved)?,
            json!({ "q": 2.0, "dimension": to_value(&est)?, "curve": to_value(&curve)? }),
        )
    } else {
        let est = generalized_dimension(&e.emb, a.q, &grid, fit_range(&a.fit_range))?;
        if let Some(path) = &a.curve_out {
            let mut csv = String::from("log2_eps,value\n");
            for (x, y) in &est.slope_points {
                csv.push_str(&format!("{x},{y}\n"));
            }
            write_file(path, &csv)?;
        }
        done(params(a, resolved)?, json!({ "q": a.q, "dimension": to_value(&est)?, "curve": null }))
    }
}

fn spectrum_json(spec: &LyapunovSpectrum, kind: SystemKind) -> Result<Value, CliError> {
    let checks = spectrum_checks(&spec.exponents, kind, ZERO_EXPONENT_TOL);
    Ok(json!({
        "exponents": spec.exponents,
        "per_time": spec.per_time(),
        "dt": spec.dt,
        "steps": spec.horizon,
        "kaplan_yorke": kaplan_yorke(&spec.exponents).ok(),
        "checks": to_value(&checks)?,
    }))
}

fn lyapunov(a: &LyapunovArgs) -> Res {
    if a.method == LyapunovMethod::Benettin {
        if let Some(name) = &a.system {
            return benettin_exact(a, name);
        }
    }
    let m = a.m.ok_or_else(|| CliError::usage("--m is required for data-driven estimates"))?;
    let e = embed_input(&a.input, m, a.tau, a.theiler)?;
    let idx = NeighborIndex::with_theiler(&e.emb, e.theiler);
    let diag = e.emb.bounding_diagonal();
    let horizon = a.horizon.unwrap_or(10 * e.tau);
    let opts = CurveOptions {
        reference_stride: a.stride,
        fit_window: a.fit_window.as_ref().map(|w| (w[0], w[1])),
        ..CurveOptions::default()
    };
    let dt = e.series.dt();
    let mut resolved = json!({ "m": m, "tau": e.tau, "theiler": e.theiler });
    let result = match a.method {
        LyapunovMethod::Wolf => {
            let evolve = a.evolve.unwrap_or(e.tau);
            let params = WolfParams {
                evolve_steps: evolve,
                max_len: a.max_len_frac * diag,
                min_len: a.min_len_frac * diag,
                angle_tol: a.angle_tol,
                bits: a.bits,
            };
            resolved["evolve"] = json!(evolve);
            let est = wolf_lambda1(&idx, &params)?;
            json!({
                "method": "wolf",
                "exponents": [est.lambda1],
                "per_time": [est.lambda1 / dt],
                "dt": dt,
                "replacements": est.replacements,
                "steps": est.total_steps,
                "max_len": params.max_len,
                "min_len": params.min_len,
            })
        }
        LyapunovMethod::Rosenstein | LyapunovMethod::Kantz => {
            resolved["horizon"] = json!(horizon);
            let (curve, name, eps0) = if a.method == LyapunovMethod::Rosenstein {
                (rosenstein_curve(&idx, horizon, &opts)?, "rosenstein", None)
            } else {
                let eps0 = a.eps_frac * diag;
                (kantz_curve(&idx, eps0, horizon, &opts)?, "kantz", Some(eps0))
            };
            if let Some(path) = &a.curve_out {
                write_file(path, &curve.to_csv_string())?;
            }
            json!({
                "method": name,
                "exponents": [curve.slope],
                "per_time": [curve.slope / dt],
                "dt": dt,
                "eps0": eps0,
                "curve": to_value(&curve)?,
            })
        }
        LyapunovMethod::Benettin => {
            let n_exp = a.n_exp.unwrap_or(e.emb.width());
            let k = a.k_neighbors.unwrap_or(2 * e.emb.width() + 1);
            resolved["n_exp"] = json!(n_exp);
            resolved["k_neighbors"] = json!(k);
            let cfg = BenettinConfig {
                n_exp,
                steps: a.steps,
                renorm_interval: a.renorm,
                warmup: a.warmup,
                jacobian_step: a.jacobian_step,
            };
            let spec = benettin_spectrum(&BenettinSource::Data { idx: &idx, k_neighbors: k }, &cfg)?;
            let mut v = spectrum_json(&spec, SystemKind::Flow)?;
            v["method"] = json!("benettin");
            v["mode"] = json!("data");
            v
        }
    };
    done(params(a, resolved)?, result)
}

fn benettin_exact(a: &LyapunovArgs, name: &str) -> Res {
    let sys = catalog(name)?;
    let x0 = default_initial_state(name)?;
    let n_exp = a.n_exp.unwrap_or(sys.dimension);
    let steps = if a.steps == 0 { 10_000 } else { a.steps };
    let cfg = BenettinConfig { n_exp, steps, renorm_interval: a.renorm, warmup: a.warmup, jacobian_step: 1 };
    let spec = benettin_spectrum(
        &BenettinSource::Exact { sys: &sys, x0: x0.clone(), dt: a.system_dt, substeps: a.substeps },
        &cfg,
    )?;
    let mut v = spectrum_json(&spec, sys.kind)?;
    v["method"] = json!("benettin");
    v["mode"] = json!("exact");
    v["system"] = json!(sys.name);
    done(params(a, json!({ "n_exp": n_exp, "steps": steps, "x0": x0 }))?, v)
}

fn parse_basis(text: &str) -> Result<TimeBasis, CliError> {
    let terms = text
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(BasisTerm::parse)
        .collect::<phasekit::Result<Vec<_>>>()?;
    Ok(TimeBasis::new(terms)?)
}

fn identify(a: &IdentifyArgs) -> Res {
    let basis = parse_basis(&a.basis)?;
    let e = embed_input(&a.input, a.embed.m, a.embed.tau, a.embed.theiler)?;
    let seq = build_state_sequence(&e.emb, a.n)?;
    let mode = match a.mode {
        Mode::Discrete => ModelMode::Discrete,
        Mode::Continuous => ModelMode::Continuous,
    };
    let model = fit_model(&seq, &basis, &e.series, mode, &FitOptions { smoother: a.smoother })?;
    if let Some(path) = &a.model_out {
        write_file(path, &(model.to_json()? + "\n"))?;
    }
    done(
        params(a, json!({ "tau": e.tau, "theiler": e.theiler }))?,
        json!({
            "fit": model.fit,
            "component_variances": seq.variances,
            "states": seq.len(),
            "model": to_value(&model)?,
        }),
    )
}

fn parse_features(text: &str) -> Result<Vec<FeatureSpec>, CliError> {
    let specs = text
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(FeatureSpec::parse)
        .collect::<phasekit::Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(CliError::usage(format!("feature list `{text}` is empty")));
    }
    Ok(specs)
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn predict(a: &PredictArgs, seed: u64) -> Res {
    let pipelines = a.features.iter().map(|f| parse_features(f)).collect::<Result<Vec<_>, _>>()?;
    let e = embed_input(&a.input, a.embed.m, a.embed.tau, a.embed.theiler)?;
    let (emb, series) = (&e.emb, &e.series);
    let idx = NeighborIndex::with_theiler(emb, e.theiler);
    let k = a.neighbors.unwrap_or(2 * emb.width() + 1);
    let t = emb.len() - 1;

    let mut names = vec!["local".to_string()];
    let local = local_predict(&idx, t, k)?;
    let mut candidates = vec![(local[0], e_psi(&idx, t, k, |u| local_predict(&idx, u, k))?)];

    let kind = match a.regressor {
        RegressorArg::Mean => RegressorKind::Mean,
        RegressorArg::Linear => RegressorKind::Linear,
        RegressorArg::Net => RegressorKind::Net,
    };
    let cfg = NetConfig { hidden: a.hidden, restarts: a.restarts, max_iter: a.max_iter, seed, ..NetConfig::default() };
    let train_rows: Vec<usize> = (0..t).collect();
    let mut models = Vec::new();
    for specs in pipelines {
        let name = specs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";");
        let model = PredictorModel::train(series, &idx, &train_rows, specs, kind, &cfg)?;
        candidates.push((model.predict(series, &idx, t, None)?, model.e_psi(series, &idx, t, k, None)?));
        names.push(name);
        models.push(model);
    }
    let sel = select_prediction(&candidates, a.gate)?;

    let region: Vec<usize> = idx.knn_where(t, k, |u| u + 1 < emb.len())?.iter().map(|nb| nb.row).collect();
    let stability = if region.len() >= 2 { Some(local_stability(emb, &region)?) } else { None };
    let j = stability.map(|s| composite_j(s.j1, s.j2, a.lambda_min));

    let holdout = match a.holdout {
        Some(h) => Some(holdout_score(&idx, k, h)?),
        None => None,
    };
    done(
        params(a, json!({ "tau": e.tau, "theiler": e.theiler, "neighbors": k }))?,
        json!({
            "candidates": names.iter().zip(&candidates).map(|(n, (y, err))| json!({"name": n, "forecast": y, "e_psi": err})).collect::<Vec<_>>(),
            "selection": to_value(&sel)?,
            "selected": names[sel.index],
            "stability": to_value(&stability)?,
            "composite_j": j,
            "models": to_value(&models)?,
            "holdout": holdout,
        }),
    )
}

/// One-step errors of the local model on the last `h` transitions, neighbors drawn
/// only from the earlier training segment, against the persistence forecast.
fn holdout_score(idx: &NeighborIndex<'_>, k: usize, h: usize) -> Result<Value, CliError> {
    let emb = idx.embedding();
    if h == 0 || h + 2 * k + 2 > emb.len() {
        return Err(CliError::usage(format!("--holdout {h} leaves too little training data")));
    }
    let start = emb.len() - 1 - h;
    let mut model_err = Vec::with_capacity(h);
    let mut persist_err = Vec::with_capacity(h);
    for r in start..emb.len() - 1 {
        let f = local_predict_where(idx, r, k, |u| u + 1 < start)?;
        let actual = emb.row(r + 1)[0];
        model_err.push(f[0] - actual);
        persist_err.push(emb.row(r)[0] - actual);
    }
    let (rm, rp) = (rmse(&model_err), rmse(&persist_err));
    Ok(json!({ "points": h, "rmse": rm, "persistence_rmse": rp, "ratio": rm / rp }))
}

/// `sign(yhat) / e_psi` and the sign of the last increment, from the local model
/// on `y`, aligned with the embedding times of `y`.
fn stability_pair(y: &TimeSeries, m: usize, tau: usize, k: usize) -> Result<(usize, Vec<f64>, Vec<f64>), CliError> {
    let emb = embed(y, m, tau)?;
    let idx = NeighborIndex::with_theiler(&emb, emb.default_theiler());
    let mut yhat = Vec::with_capacity(emb.len());
    let mut errs = Vec::with_capacity(emb.len());
    for r in 0..emb.len() {
        yhat.push(local_predict(&idx, r, k)?[0]);
        errs.push(e_psi(&idx, r, k, |u| local_predict(&idx, u, k))?);
    }
    let start = emb.times()[0];
    let obs: Vec<f64> = (start..y.len()).map(|i| y.value(i, 0)).collect();
    let (z1, z2) = stability_features(&obs, &yhat, &errs)?;
    Ok((start, z1, z2))
}

fn stepwise(a: &StepwiseArgs) -> Res {
    let table = load_table(&a.input)?;
    let columns: Vec<usize> = a.columns.clone().unwrap_or_else(|| (0..table.channels()).collect());
    if let Some(&c) = columns.iter().find(|&&c| c >= table.channels()) {
        return Err(CliError::usage(format!("column {c} out of range; the input has {} channel(s)", table.channels())));
    }
    let mut start = 0;
    let mut extra = Vec::new();
    if a.stability_pair {
        let y = table.select_channel(a.input.column)?;
        let (s, z1, z2) = stability_pair(&y, a.base_m, a.base_tau, a.neighbors)?;
        start = s;
        extra.push(FeatureSeries::new("z1", z1));
        extra.push(FeatureSeries::new("z2", z2));
    }
    let mut features: Vec<FeatureSeries> = columns
        .iter()
        .map(|&c| FeatureSeries::new(format!("x{c}"), table.channel(c)[start..].to_vec()))
        .collect();
    features.extend(extra);
    let m_max = a.m_max.unwrap_or(features.len());
    let cfg = StepwiseConfig {
        m_min: a.m_min,
        m_max,
        tau_min: a.tau_min,
        tau_max: a.tau_max,
        lambda_min: a.lambda_min,
        radius: a.radius,
        theiler: a.theiler,
        dt: table.dt(),
    };
    let res = stepwise_reconstruct(&features, &cfg)?;
    done(params(a, json!({ "columns": columns, "m_max": m_max, "offset": start }))?, to_value(&res)?)
}

fn symmetry(a: &SymmetryArgs) -> Res {
    for p in [&a.a, &a.b] {
        if !p.is_file() {
            return Err(CliError::usage(format!("contour file {} does not exist", p.display())));
        }
    }
    let (ca, cb) = (load_contour_csv(&a.a)?, load_contour_csv(&a.b)?);
    let report = symmetry_between(&ca, &cb, a.smoothing)?;
    if let Some(path) = &a.spectrum_out {
        write_file(path, &normalize(&dft_contour(&ca), a.smoothing)?.to_csv_string())?;
    }
    done(
        params(a, json!({}))?,
        json!({ "m": ca.m(), "n": ca.n(), "report": to_value(&report)? }),
    )
}
