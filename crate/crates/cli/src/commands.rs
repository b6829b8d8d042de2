use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use jointq::bench::{self, ExperimentSpec, RmseReport, TablePlan, TableRow};
use jointq::detect::{score, Detection, Detector, ScoreReport, AXES};
use jointq::io::{self as jio, RowPolicy, TimedEvent};
use jointq::joint::{QuantileGrid, Tracker, TrackerParams};
use jointq::streams::{StreamConfig, TrueQuantileOracle};
use serde_json::{json, Map, Value};

use crate::config::{FileConfig, Format};
use crate::error::{CliError, CliResult};
use crate::{BenchArgs, Cli, Command, DetectArgs, GenArgs, LambdaGridArgs, ScoreArgs, StreamArgs, SweepArgs, TrackArgs, TrackerArgs};

/// `merge!(cfg, args; a, b)` overwrites `cfg.a` with `args.a` when the flag
/// was given.
macro_rules! merge {
    ($cfg:expr, $args:expr; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(args) => gen(file, args),
        Command::Track(args) => track(file, args),
        Command::Sweep(args) => sweep(file, args),
        Command::Bench(args) => bench_tables(file, args),
        Command::Detect(args) => detect(file, args),
        Command::Score(args) => score_cmd(file, args),
    }
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn input(path: Option<&Path>) -> CliResult<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufReader::new(
            File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    })
}

fn write_err(e: io::Error) -> CliError {
    if e.kind() == io::ErrorKind::BrokenPipe {
        CliError::BrokenPipe
    } else {
        CliError::Output(e.to_string())
    }
}

fn lib_write_err(e: jointq::Error) -> CliError {
    match e {
        jointq::Error::Io(msg) if msg.contains("Broken pipe") => CliError::BrokenPipe,
        other => CliError::Output(other.to_string()),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn stream_config(
    stream: &mut (jointq::streams::Family, jointq::streams::Variant, f64, f64, u64, u64),
    args: &StreamArgs,
) -> StreamConfig {
    let (family, variant, a, b, period, seed) = stream;
    if let Some(v) = args.family {
        *family = v;
    }
    if let Some(v) = args.variant {
        *variant = v;
    }
    if let Some(v) = args.a {
        *a = v;
    }
    if let Some(v) = args.b {
        *b = v;
    }
    if let Some(v) = args.period {
        *period = v;
    }
    if let Some(v) = args.seed {
        *seed = v;
    }
    StreamConfig {
        family: *family,
        variant: *variant,
        a: *a,
        b: *b,
        period: *period,
        seed: *seed,
    }
}

fn stream_metadata(s: &StreamConfig) -> Vec<(String, String)> {
    vec![
        ("family".into(), s.family.to_string()),
        ("variant".into(), s.variant.to_string()),
        ("a".into(), s.a.to_string()),
        ("b".into(), s.b.to_string()),
        ("T".into(), s.period.to_string()),
        ("seed".into(), s.seed.to_string()),
    ]
}

fn version_metadata() -> (String, String) {
    ("jointq".into(), env!("CARGO_PKG_VERSION").into())
}

fn gen(file: FileConfig, args: GenArgs) -> CliResult<()> {
    let mut cfg = file.gen;
    let mut s = (cfg.family, cfg.variant, cfg.a, cfg.b, cfg.period, cfg.seed);
    let stream = stream_config(&mut s, &args.stream);
    merge!(cfg, args; n, truth);
    let mut generator = stream.generator()?;
    let oracle = TrueQuantileOracle::new(stream, &cfg.truth)?;

    let mut meta = vec![version_metadata()];
    meta.extend(stream_metadata(&stream));
    meta.push(("n".into(), cfg.n.to_string()));
    let headers: Vec<String> = cfg.truth.iter().map(|&p| format!("true_{}", jio::quantile_header(p))).collect();
    let rows = (0..cfg.n).map(|_| {
        let x = generator.next_sample();
        let n = generator.index();
        (n, x, oracle.at(n).to_vec())
    });
    let mut out = output(args.out.as_deref())?;
    jio::write_stream_csv(&mut out, &meta, &headers, rows).map_err(lib_write_err)?;
    out.flush().map_err(write_err)
}

fn tracker_settings(cfg: &mut crate::config::TrackConfig, args: &TrackerArgs) {
    merge!(cfg, args; tracker, probs, gamma, rho_ratio, offset, init_samples);
}

fn track(file: FileConfig, args: TrackArgs) -> CliResult<()> {
    let mut cfg = file.track;
    tracker_settings(&mut cfg, &args.tracker);
    merge!(cfg, args; lambda, format);
    if cfg.format == Format::Table {
        return Err(CliError::Usage("track writes csv or json-lines".into()));
    }
    let grid = QuantileGrid::new(cfg.probs.clone())?;
    let params = TrackerParams::new(cfg.lambda)
        .gamma(cfg.gamma)
        .rho_ratio(cfg.rho_ratio)
        .offset(cfg.offset);

    let source = args.input.as_deref().map_or("<stdin>".into(), |p| p.display().to_string());
    let table = jio::read_stream_csv(input(args.input.as_deref())?)
        .map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    let init = cfg.init_samples.max(grid.len() + 1);
    if table.values.len() <= init {
        return Err(CliError::Constraint(format!(
            "stream has {} samples; {init} are needed to initialise and at least one more to track",
            table.values.len()
        )));
    }
    let mut tracker = Tracker::warmup(cfg.tracker, grid.clone(), params, &table.values[..init])?;

    let headers: Vec<String> = grid.probs().iter().map(|&p| jio::quantile_header(p)).collect();
    let meta = vec![
        version_metadata(),
        ("tracker".into(), cfg.tracker.to_string()),
        ("probs".into(), join(grid.probs())),
        ("lambda".into(), cfg.lambda.to_string()),
        ("gamma".into(), cfg.gamma.to_string()),
        ("rho_ratio".into(), cfg.rho_ratio.to_string()),
        ("offset".into(), cfg.offset.to_string()),
        ("init_samples".into(), init.to_string()),
    ];
    let mut out = output(args.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            jio::write_metadata(&mut out, &meta).map_err(lib_write_err)?;
            writeln!(out, "n,{}", headers.join(",")).map_err(write_err)?;
        }
        _ => {
            let meta: Map<String, Value> = meta.into_iter().map(|(k, v)| (k, Value::String(v))).collect();
            writeln!(out, "{}", json!({ "meta": meta })).map_err(write_err)?;
        }
    }
    for (&n, &x) in table.index.iter().zip(&table.values).skip(init) {
        let est = tracker.step(x);
        match cfg.format {
            Format::Csv => writeln!(out, "{n},{}", join(est)),
            _ => {
                let mut row = Map::new();
                row.insert("n".into(), json!(n));
                for (h, v) in headers.iter().zip(est) {
                    row.insert(h.clone(), json!(v));
                }
                writeln!(out, "{}", Value::Object(row))
            }
        }
        .map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

fn lambda_grid(min: f64, max: f64, per_decade: usize) -> CliResult<Vec<f64>> {
    if !(min > 0.0 && min <= max && max < 1.0) || per_decade == 0 {
        return Err(CliError::Constraint(format!(
            "lambda range must satisfy 0 < min <= max < 1 with per_decade >= 1, got [{min}, {max}] at {per_decade}"
        )));
    }
    Ok(bench::log_grid(min, max, per_decade))
}

fn merge_grid(grid: &LambdaGridArgs, min: &mut f64, max: &mut f64, per: &mut usize, steps: &mut usize, warmup: &mut usize) {
    if let Some(v) = grid.lambda_min {
        *min = v;
    }
    if let Some(v) = grid.lambda_max {
        *max = v;
    }
    if let Some(v) = grid.per_decade {
        *per = v;
    }
    if let Some(v) = grid.steps {
        *steps = v;
    }
    if let Some(v) = grid.warmup {
        *warmup = v;
    }
}

fn sweep(file: FileConfig, args: SweepArgs) -> CliResult<()> {
    let mut cfg = file.sweep;
    let mut s = (cfg.family, cfg.variant, cfg.a, cfg.b, cfg.period, cfg.seed);
    let stream = stream_config(&mut s, &args.stream);
    let t = &args.tracker;
    merge!(cfg, t; tracker, probs, gamma, rho_ratio, init_samples);
    if let Some(v) = t.offset {
        cfg.offset = Some(v);
    }
    merge!(cfg, args; format);
    merge_grid(&args.grid, &mut cfg.lambda_min, &mut cfg.lambda_max, &mut cfg.per_decade, &mut cfg.steps, &mut cfg.warmup);

    let grid = QuantileGrid::new(cfg.probs.clone())?;
    let mut spec = ExperimentSpec::new(stream, cfg.tracker, grid);
    spec.lambdas = lambda_grid(cfg.lambda_min, cfg.lambda_max, cfg.per_decade)?;
    spec.gamma = cfg.gamma;
    spec.rho_ratio = cfg.rho_ratio;
    spec.offset = cfg.offset.unwrap_or(bench::default_offset(stream.family));
    spec.steps = cfg.steps;
    spec.warmup = cfg.warmup;
    spec.init_samples = cfg.init_samples;
    let report = bench::sweep(&spec)?;

    let mut meta = vec![version_metadata()];
    meta.extend(stream_metadata(&stream));
    meta.extend([
        ("tracker".into(), cfg.tracker.to_string()),
        ("probs".into(), join(&cfg.probs)),
        ("gamma".into(), spec.gamma.to_string()),
        ("rho_ratio".into(), spec.rho_ratio.to_string()),
        ("offset".into(), spec.offset.to_string()),
        ("steps".into(), spec.steps.to_string()),
        ("warmup".into(), spec.warmup.to_string()),
        ("init_samples".into(), spec.init_samples.to_string()),
    ]);
    let mut out = output(args.out.as_deref())?;
    write_sweep(&mut out, cfg.format, &meta, &cfg.probs, &report).map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn write_sweep(
    out: &mut dyn Write,
    format: Format,
    meta: &[(String, String)],
    probs: &[f64],
    report: &RmseReport,
) -> io::Result<()> {
    let best = report.optimal();
    match format {
        Format::Csv => {
            for (k, v) in meta {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "# lambda_opt={}", best.lambda)?;
            let per: Vec<String> = probs.iter().map(|&p| format!("rmse_{}", jio::quantile_header(p))).collect();
            writeln!(out, "lambda,rmse,violations,{}", per.join(","))?;
            for e in &report.entries {
                writeln!(out, "{},{},{},{}", e.lambda, e.rmse, e.violations, join(&e.per_quantile))?;
            }
        }
        Format::JsonLines => {
            let meta: Map<String, Value> = meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            writeln!(out, "{}", json!({ "meta": meta }))?;
            for e in &report.entries {
                writeln!(out, "{}", serde_json::to_string(e).expect("plain data"))?;
            }
        }
        Format::Table => {
            for (k, v) in meta {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "{:>12}  {:>10}  {:>10}", "lambda", "rmse", "violations")?;
            for e in &report.entries {
                let mark = if e.lambda == best.lambda { " *" } else { "" };
                writeln!(out, "{:>12.6}  {:>10.4}  {:>10}{mark}", e.lambda, e.rmse, e.violations)?;
            }
        }
    }
    Ok(())
}

fn bench_tables(file: FileConfig, args: BenchArgs) -> CliResult<()> {
    let mut cfg = file.bench;
    merge!(cfg, args; families, variants, ks, periods, trackers, gammas, seed, format);
    merge_grid(&args.grid, &mut cfg.lambda_min, &mut cfg.lambda_max, &mut cfg.per_decade, &mut cfg.steps, &mut cfg.warmup);
    let mut plan = TablePlan::full(cfg.seed);
    plan.families = cfg
        .families
        .iter()
        .flat_map(|&f| cfg.variants.iter().map(move |&v| (f, v)))
        .collect();
    plan.ks = cfg.ks.clone();
    plan.periods = cfg.periods.clone();
    plan.trackers = cfg.trackers.clone();
    plan.gammas = cfg.gammas.clone();
    plan.lambdas = lambda_grid(cfg.lambda_min, cfg.lambda_max, cfg.per_decade)?;
    plan.steps = cfg.steps;
    plan.warmup = cfg.warmup;
    let rows = bench::reproduce_tables(&plan)?;

    let meta = vec![
        version_metadata(),
        ("seed".into(), cfg.seed.to_string()),
        ("steps".into(), cfg.steps.to_string()),
        ("warmup".into(), cfg.warmup.to_string()),
        ("lambda_min".into(), cfg.lambda_min.to_string()),
        ("lambda_max".into(), cfg.lambda_max.to_string()),
        ("per_decade".into(), cfg.per_decade.to_string()),
    ];
    let mut out = output(args.out.as_deref())?;
    write_table(&mut out, cfg.format, &meta, &rows).map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn write_table(out: &mut dyn Write, format: Format, meta: &[(String, String)], rows: &[TableRow]) -> io::Result<()> {
    match format {
        Format::JsonLines => {
            let meta: Map<String, Value> = meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            writeln!(out, "{}", json!({ "meta": meta }))?;
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r).expect("plain data"))?;
            }
        }
        Format::Csv => {
            for (k, v) in meta {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "family,variant,k,T,tracker,gamma,lambda_opt,rmse,violations")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.family, r.variant, r.k, r.period, r.tracker, r.gamma, r.lambda_opt, r.rmse, r.violations
                )?;
            }
        }
        Format::Table => {
            for (k, v) in meta {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(
                out,
                "{:<10} {:<9} {:>3} {:>5} {:<16} {:>7} {:>10} {:>8} {:>10}",
                "family", "variant", "K", "T", "tracker", "gamma", "lambda", "rmse", "violations"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{:<10} {:<9} {:>3} {:>5} {:<16} {:>7} {:>10.5} {:>8.4} {:>10}",
                    r.family.to_string(),
                    r.variant.to_string(),
                    r.k,
                    r.period,
                    r.tracker.to_string(),
                    r.gamma,
                    r.lambda_opt,
                    r.rmse,
                    r.violations
                )?;
            }
        }
    }
    Ok(())
}

fn detect(file: FileConfig, args: DetectArgs) -> CliResult<()> {
    let mut cfg = file.detect;
    {
        let d = &mut cfg.detector;
        merge!(d, args; method, lambda, gamma, rho_ratio, nu, xi, eta, probs, offset);
        if let Some(v) = args.horizon {
            d.horizon_secs = v;
        }
        if let Some(v) = args.rate {
            d.sample_rate = v;
        }
    }
    if let Some(v) = args.timestamp_unit {
        cfg.timestamp_unit = v;
    }
    if args.skip_bad_rows {
        cfg.bad_rows = RowPolicy::Skip;
    }
    if args.user.is_some() {
        cfg.user = args.user.clone();
    }
    cfg.detector.validate()?;

    let parsed = jio::parse_accelerometer_csv(input(Some(&args.input))?, cfg.bad_rows)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    for e in &parsed.skipped {
        eprintln!("jointq: skipped {}: {e}", args.input.display());
    }
    let tick = cfg.timestamp_unit.seconds_per_tick();
    let d = &cfg.detector;
    let meta = json!({ "meta": {
        "jointq": env!("CARGO_PKG_VERSION"),
        "input": args.input.display().to_string(),
        "method": d.method.to_string(),
        "lambda": d.lambda, "gamma": d.gamma, "rho_ratio": d.rho_ratio,
        "nu": d.nu, "xi": d.xi, "horizon_secs": d.horizon_secs, "eta": d.eta,
        "sample_rate": d.sample_rate, "probs": d.probs, "offset": d.offset,
        "init_secs": d.init_secs, "arm_secs": d.arm_secs,
        "timestamp_unit": cfg.timestamp_unit,
    }});
    let mut out = output(args.out.as_deref())?;
    let mut truth_out = args.truth_out.as_deref().map(|p| output(Some(p))).transpose()?;
    writeln!(out, "{meta}").map_err(write_err)?;

    for rec in &parsed.users {
        if cfg.user.as_ref().is_some_and(|u| *u != rec.user) {
            continue;
        }
        let Some(first) = rec.records.first() else { continue };
        let t0 = first.timestamp;
        let seconds = |ts: i64| (ts - t0) as f64 * tick;
        let mut detector = Detector::new(cfg.detector.clone())?;
        let detections: Vec<Detection> = detector
            .run_timed(rec.records.iter().map(|r| (seconds(r.timestamp), [r.ax, r.ay, r.az])))?;
        for det in detections {
            let dimension = ["x", "y", "z"][det.dimension.min(AXES - 1)];
            let line = json!({
                "user": rec.user,
                "time": det.time,
                "index": det.index,
                "dimension": dimension,
                "statistic": det.statistic,
                "score": det.score,
            });
            writeln!(out, "{line}").map_err(write_err)?;
        }
        if let Some(t) = truth_out.as_mut() {
            for ts in rec.change_timestamps() {
                writeln!(t, "{}", json!({ "user": rec.user, "time": seconds(ts) })).map_err(write_err)?;
            }
        }
    }
    if let Some(mut t) = truth_out {
        t.flush().map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

fn group_by_user(events: Vec<TimedEvent>) -> BTreeMap<Option<String>, Vec<f64>> {
    let mut map: BTreeMap<Option<String>, Vec<f64>> = BTreeMap::new();
    for e in events {
        map.entry(e.user).or_default().push(e.time);
    }
    for times in map.values_mut() {
        times.sort_by(f64::total_cmp);
    }
    map
}

fn read_event_file(path: &PathBuf) -> CliResult<Vec<TimedEvent>> {
    jio::read_events(input(Some(path))?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn score_cmd(file: FileConfig, args: ScoreArgs) -> CliResult<()> {
    let mut cfg = file.score;
    if let Some(v) = args.tolerance {
        cfg.tolerance = Some(v);
    }
    merge!(cfg, args; format);
    if cfg.tolerance.is_some_and(|t| !(t > 0.0)) {
        return Err(CliError::Constraint("tolerance must be positive".into()));
    }
    let detections = group_by_user(read_event_file(&args.detections)?);
    let truth = group_by_user(read_event_file(&args.truth)?);
    let users: std::collections::BTreeSet<&Option<String>> = detections.keys().chain(truth.keys()).collect();
    let empty = Vec::new();
    let reports: Vec<ScoreReport> = users
        .into_iter()
        .map(|u| {
            score(
                detections.get(u).unwrap_or(&empty),
                truth.get(u).unwrap_or(&empty),
                cfg.tolerance,
            )
        })
        .collect();
    let total = ScoreReport::combine(&reports);

    let mut out = output(args.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            writeln!(out, "precision,recall,f1,mean_delay,detections,correct,true_changes").and_then(|_| {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    total.precision,
                    total.recall,
                    total.f1,
                    total.mean_delay.map(|d| d.to_string()).unwrap_or_default(),
                    total.detections,
                    total.correct,
                    total.true_changes
                )
            })
        }
        Format::JsonLines => writeln!(out, "{}", serde_json::to_string(&total).expect("plain data")),
        Format::Table => writeln!(
            out,
            "precision {:.3}  recall {:.3}  F1 {:.3}  delay {}  ({} detections, {} correct, {} changes)",
            total.precision,
            total.recall,
            total.f1,
            total.mean_delay.map(|d| format!("{d:.3} s")).unwrap_or_else(|| "-".into()),
            total.detections,
            total.correct,
            total.true_changes
        ),
    }
    .map_err(write_err)?;
    out.flush().map_err(write_err)
}
