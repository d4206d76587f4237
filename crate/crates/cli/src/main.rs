use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use kpz_core::audit::{axiom_audit, flat_profile, one_point_samples, AXIOMS};
use kpz_core::clock::{mix, replica_seed, ClockField, RateOrientation};
use kpz_core::config::ExperimentConfig;
use kpz_core::exclusion::{
    bernoulli_profile, certified_region, check_monotone, BasicEngine, CoupledEnsemble,
    ExoticEngine, JumpDistribution,
};
use kpz_core::horizon::property_star_test;
use kpz_core::lattice::{narrow_wedge, HeightFunction};
use kpz_core::metric::{
    composition_check, dpi_by_evolution, triangle_audit, variational_check, SpaceTime,
};
use kpz_core::multitype::{takeover_tail, y_tail, TailConfig};
use kpz_core::stats::{ks_against_table, ks_two_sample, mean, null_calibration, QuantileTable};
use kpz_core::tolerances::Tolerances;
use kpz_core::web::{
    drw, drw_bruteforce, m_eta_one_point, slack_violation_rate, RademacherField, WebDist,
};

#[derive(Parser, Debug)]
#[command(
    name = "kpzlab",
    version,
    about = "Seeded exclusion, metric and web-distance experiments"
)]
struct Cli {
    /// Master seed; overrides `run.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for replica fan-out.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one or more coupled height functions.
    Simulate(SimulateArgs),
    /// Directed metric samples and exact audits.
    Metric(MetricArgs),
    /// Takeover and discrepancy tails of the multi-type process.
    Multitype(MultitypeArgs),
    /// Web distances, their rescaling and audits.
    Webdist(WebArgs),
    /// Stationarity test of the two-line horizon.
    Horizon(HorizonArgs),
    /// Axiom audit; exit code 0 iff every requested axiom passes.
    Audit(AuditArgs),
    /// KS utilities.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Tasep,
    AsepExotic,
    AepBasic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Init {
    Wedge,
    Flat,
    Bernoulli,
    TwoWedge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Orientation {
    Standard,
    Literal,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long, default_value_t = 1)]
    a: i64,
    #[arg(long, default_value_t = 1)]
    b: i64,
    /// ASEP parameter: rates `p + 1` to the right and `p` to the left.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Rate table for aep-basic, e.g. `1:0.6,3:0.3,-3:0.1666667`.
    #[arg(long)]
    rates: Option<String>,
    /// Window half width.
    #[arg(long, default_value_t = 32)]
    window: i64,
    #[arg(long, default_value_t = 4.0)]
    horizon: f64,
    /// Initial condition of each copy, in order.
    #[arg(long = "copy", value_enum, default_values_t = vec![Init::Wedge])]
    copies: Vec<Init>,
    /// Number of equally spaced snapshots after time 0.
    #[arg(long, default_value_t = 1)]
    snapshots: usize,
    #[arg(long, value_enum, default_value_t = Orientation::Standard)]
    rate_orientation: Orientation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MetricAudit {
    Triangle,
    Variational,
    Composition,
    Symmetry,
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, default_value_t = 40)]
    window: i64,
    #[arg(long, default_value_t = 4.0)]
    horizon: f64,
    /// Source and target sites are `-reach..=reach`.
    #[arg(long, default_value_t = 4)]
    reach: i64,
    /// Emit rescaled one-point samples at `(0,0;0,1)` instead of a grid.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, value_enum)]
    audit: Option<MetricAudit>,
}

#[derive(Args, Debug)]
struct MultitypeArgs {
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long = "box")]
    box_half: Option<i64>,
    #[arg(long)]
    w: Option<i64>,
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WebAudit {
    Oracle,
    Slack,
    Lightcone,
}

#[derive(Args, Debug)]
struct WebArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    /// Box side for the oracle and light-cone audits.
    #[arg(long = "box", default_value_t = 8)]
    box_side: i64,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, value_enum)]
    audit: Option<WebAudit>,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Args, Debug)]
struct HorizonArgs {
    /// Comma separated increasing drifts; two lines are required.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    drifts: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Axiom keys; defaults to the config's list.
    #[arg(long, value_delimiter = ',')]
    axioms: Option<Vec<String>>,
    #[arg(long)]
    model: Option<String>,
    /// Drive each copy by its own clock (the monotonicity audit should fail).
    #[arg(long)]
    broken_coupling: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(subcommand)]
    cmd: StatsCmd,
}

#[derive(Subcommand, Debug)]
enum StatsCmd {
    /// KS distance of a sample column to the Tracy-Widom GUE table.
    Table {
        input: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
    },
    /// Two-sample KS test at the 1% level.
    Ks {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
    },
    /// Rejection rate of the KS test on same-law samples.
    Calibrate {
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
}

/// What a subcommand produced.
struct Output {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Value,
    /// `Some(false)` if a requested check failed.
    pass: Option<bool>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kpzlab: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
        cfg.horizon.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.display().to_string();
    }
    let out = match cli.cmd {
        Command::Simulate(a) => simulate(&mut cfg, a)?,
        Command::Metric(a) => metric(&cfg, a)?,
        Command::Multitype(a) => multitype(&mut cfg, a)?,
        Command::Webdist(a) => webdist(&mut cfg, a)?,
        Command::Horizon(a) => horizon(&mut cfg, a)?,
        Command::Audit(a) => audit(&mut cfg, a)?,
        Command::Stats(a) => stats(&cfg, a)?,
    };
    write_output(&cfg, &out, cli.format)?;
    Ok(out.pass.unwrap_or(true))
}

fn write_output(cfg: &ExperimentConfig, out: &Output, format: Format) -> Result<()> {
    let dir = Path::new(&cfg.run.out);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let doc = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash()?,
        "command": out.name,
        "seed": cfg.run.seed,
        "pass": out.pass,
        "summary": out.summary,
    });
    let path = match format {
        Format::Json => {
            let p = dir.join(format!("{}.json", out.name));
            let mut doc = doc.clone();
            doc["columns"] = json!(out.header);
            doc["rows"] = json!(out.rows);
            fs::write(&p, serde_json::to_string_pretty(&doc)? + "\n")?;
            p
        }
        Format::Csv => {
            let p = dir.join(format!("{}.csv", out.name));
            let mut w = csv::Writer::from_path(&p)?;
            w.write_record(&out.header)?;
            for r in &out.rows {
                w.write_record(r)?;
            }
            w.flush()?;
            fs::write(
                dir.join(format!("{}.report.json", out.name)),
                serde_json::to_string_pretty(&doc)? + "\n",
            )?;
            p
        }
    };
    println!("{}", serde_json::to_string(&doc)?);
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn parse_rates(s: &str) -> Result<BTreeMap<i64, f64>> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once(':')
                .ok_or_else(|| anyhow!("rate entry {kv:?} is not v:p"))?;
            Ok((k.trim().parse()?, v.trim().parse()?))
        })
        .collect()
}

fn initial(kind: Init, half: i64, seed: u64, index: usize) -> Result<HeightFunction> {
    Ok(match kind {
        Init::Wedge => narrow_wedge(0, -half, half)?,
        Init::Flat => flat_profile(-half, half)?,
        Init::Bernoulli => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x1417, index as u64]));
            bernoulli_profile(-half, half, 0.5, &mut rng)?
        }
        Init::TwoWedge => {
            narrow_wedge(-4, -half, half)?.max_with(&narrow_wedge(4, -half, half)?)?
        }
    })
}

enum Engine {
    Basic(BasicEngine),
    Exotic(ExoticEngine),
}

impl Engine {
    fn evolve(&mut self, t: f64) -> Result<()> {
        match self {
            Engine::Basic(e) => e.evolve(t)?,
            Engine::Exotic(e) => e.evolve(t)?,
        }
        Ok(())
    }

    fn ensemble(&self) -> &CoupledEnsemble {
        match self {
            Engine::Basic(e) => e.ensemble(),
            Engine::Exotic(e) => e.ensemble(),
        }
    }
}

fn simulate(cfg: &mut ExperimentConfig, a: SimulateArgs) -> Result<Output> {
    let model = match a.model {
        Some(m) => m,
        None => match cfg.run.model.as_str() {
            "tasep" => Model::Tasep,
            "asep-exotic" => Model::AsepExotic,
            "aep-basic" => Model::AepBasic,
            other => bail!("unknown model {other}"),
        },
    };
    cfg.run.model = match model {
        Model::Tasep => "tasep",
        Model::AsepExotic => "asep-exotic",
        Model::AepBasic => "aep-basic",
    }
    .into();
    let seed = cfg.run.seed;
    let copies = a
        .copies
        .iter()
        .enumerate()
        .map(|(i, &k)| initial(k, a.window, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let orientation = match a.rate_orientation {
        Orientation::Standard => RateOrientation::Standard,
        Orientation::Literal => RateOrientation::Literal,
    };
    let (mut engine, k) = match model {
        Model::Tasep => {
            let ens = CoupledEnsemble::new(copies, ClockField::tasep(seed, a.horizon))?;
            (
                Engine::Basic(BasicEngine::new(ens, JumpDistribution::tasep())?),
                1,
            )
        }
        Model::AepBasic => {
            let rates = match &a.rates {
                Some(r) => parse_rates(r)?,
                None => cfg.multitype.rates.iter().map(|r| (r.v, r.p)).collect(),
            };
            let p = JumpDistribution::new(rates.clone())?;
            let k = p.range();
            let clock = ClockField::tasep(seed, a.horizon).with_rates(rates);
            (
                Engine::Basic(BasicEngine::new(CoupledEnsemble::new(copies, clock)?, p)?),
                k,
            )
        }
        Model::AsepExotic => {
            let mut clock = ClockField::asep_exotic(seed, a.a, a.b, a.p, a.horizon);
            clock.orientation = orientation;
            let k = (a.p + 1.0).ceil() as i64;
            (
                Engine::Exotic(ExoticEngine::new(CoupledEnsemble::new(copies, clock)?)?),
                k,
            )
        }
    };
    let steps = a.snapshots.max(1);
    let mut rows = Vec::new();
    let mut snap = |eng: &Engine, t: f64| {
        for (c, h) in eng.ensemble().copies().iter().enumerate() {
            for x in h.window_lo()..=h.window_hi() {
                rows.push(vec![
                    fmt_f(t),
                    c.to_string(),
                    x.to_string(),
                    h.at(x).to_string(),
                ]);
            }
        }
    };
    snap(&engine, 0.0);
    for i in 1..=steps {
        let t = a.horizon * i as f64 / steps as f64;
        engine.evolve(t)?;
        snap(&engine, t);
    }
    let region = certified_region(-a.window, a.window, k, a.horizon);
    let mono = check_monotone(engine.ensemble());
    Ok(Output {
        name: "simulate",
        header: vec!["time", "copy", "site", "height"],
        rows,
        summary: json!({
            "model": cfg.run.model,
            "coupling": [a.a, a.b],
            "window": [-a.window, a.window],
            "horizon": a.horizon,
            "certified": region,
            "events": engine.ensemble().log().len(),
            "monotone": mono,
        }),
        pass: None,
    })
}

fn fmt_f(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn metric(cfg: &ExperimentConfig, a: MetricArgs) -> Result<Output> {
    let seed = cfg.run.seed;
    if let Some(eps) = a.epsilon {
        let n = a.replicas.unwrap_or(cfg.run.replicas);
        let v = one_point_samples(seed, eps, n)?;
        let table = QuantileTable::tw_gue();
        let rows = v
            .iter()
            .enumerate()
            .map(|(i, x)| vec![i.to_string(), "d_eps(0,0;0,1)".into(), fmt_f(*x)])
            .collect();
        return Ok(Output {
            name: "metric",
            header: vec!["replica", "quantity", "value"],
            rows,
            summary: json!({
                "epsilon": eps,
                "replicas": n,
                "mean": mean(&v),
                "ks_to_table": ks_against_table(&v, &table)?,
                "table_mean": table.mean,
            }),
            pass: None,
        });
    }
    let half = a.window;
    let clock = ClockField::tasep(seed, a.horizon);
    let xs: Vec<i64> = (-a.reach..=a.reach).collect();
    let times = [0.0, a.horizon / 2.0, a.horizon];
    let pts: Vec<SpaceTime> = times
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| SpaceTime::new(x, t)))
        .collect();
    let grid = dpi_by_evolution(&clock, &pts, &pts, (-half, half))?;
    let rows = grid
        .entries()
        .map(|(o, p, d)| {
            vec![
                o.x.to_string(),
                fmt_f(o.t),
                p.x.to_string(),
                fmt_f(p.t),
                fmt_f(d.to_f64()),
            ]
        })
        .collect();
    let (summary, pass) = match a.audit {
        None => (
            json!({ "window": [-half, half], "horizon": a.horizon }),
            None,
        ),
        Some(MetricAudit::Triangle) => {
            let r = triangle_audit(&grid);
            (json!({ "triangle": r }), Some(r.violations == 0))
        }
        Some(MetricAudit::Variational) => {
            let h0 = flat_profile(-half, half)?;
            let r = variational_check(&clock, &h0, 0.0, a.horizon)?;
            (json!({ "variational": r }), Some(r.ok))
        }
        Some(MetricAudit::Composition) => {
            let ok = composition_check(
                &clock,
                (-half, half),
                (0.0, a.horizon / 2.0, a.horizon),
                &xs,
                &xs,
            )?;
            (json!({ "composition": ok }), Some(ok))
        }
        Some(MetricAudit::Symmetry) => {
            let n = a.replicas.unwrap_or(cfg.run.replicas);
            let pairs = (0..n as u64)
                .into_par_iter()
                .map(|i| {
                    let c = ClockField::tasep(replica_seed(mix(&[seed, 0x5E77]), i), a.horizon);
                    let src = [
                        SpaceTime::new(0, 0.0),
                        SpaceTime::new(2, 0.0),
                        SpaceTime::new(-2, 0.0),
                    ];
                    let tgt = [
                        SpaceTime::new(1, a.horizon),
                        SpaceTime::new(3, a.horizon),
                        SpaceTime::new(-1, a.horizon),
                    ];
                    let g = dpi_by_evolution(&c, &src, &tgt, (-half, half))?;
                    Ok((
                        g.get(0, 0).to_f64(),
                        g.get(1, 1).to_f64(),
                        g.get(0, 2).to_f64(),
                    ))
                })
                .collect::<kpz_core::Result<Vec<_>>>()?;
            let base: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let shifted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let flipped: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let st = ks_two_sample(&base, &shifted)?;
            let fl = ks_two_sample(&base, &flipped)?;
            (
                json!({ "stationarity": st, "flip": fl }),
                Some(!st.reject && !fl.reject),
            )
        }
    };
    Ok(Output {
        name: "metric",
        header: vec!["x", "s", "y", "t", "d"],
        rows,
        summary,
        pass,
    })
}

fn multitype(cfg: &mut ExperimentConfig, a: MultitypeArgs) -> Result<Output> {
    let m = &mut cfg.multitype;
    if let Some(h) = a.horizon {
        m.horizon = h;
    }
    if let Some(b) = a.box_half {
        m.box_half = b;
    }
    if let Some(w) = a.w {
        m.w = w;
    }
    if let Some(r) = a.replicas {
        cfg.run.replicas = r;
    }
    let m = cfg.multitype.clone();
    let p = JumpDistribution::new(m.rates.iter().map(|r| (r.v, r.p)).collect())?;
    let tc = TailConfig {
        replicas: cfg.run.replicas,
        horizon: m.horizon,
        box_half: m.box_half,
        seed: cfg.run.seed,
    };
    let tail = takeover_tail(&p, &tc)?;
    let y = y_tail(&p, &tc, m.w)?;
    let mut rows: Vec<Vec<String>> = tail
        .survival
        .iter()
        .map(|&(k, s)| vec!["takeover_survival".into(), k.to_string(), fmt_f(s)])
        .collect();
    rows.extend(
        y.values
            .iter()
            .enumerate()
            .map(|(r, v)| vec!["y".into(), r.to_string(), v.to_string()]),
    );
    let fit = tail.log_linear_fit(2).ok();
    Ok(Output {
        name: "multitype",
        header: vec!["quantity", "index", "value"],
        rows,
        summary: json!({
            "labels": tail.counts.len(),
            "takeover_survival": tail.survival,
            "nonincreasing": tail.is_nonincreasing(),
            "log_linear_fit_from_2": fit,
            "y_survival": y.survival,
            "t": m.horizon,
            "w": m.w,
        }),
        pass: None,
    })
}

fn webdist(cfg: &mut ExperimentConfig, a: WebArgs) -> Result<Output> {
    if let Some(e) = a.eta {
        cfg.web.eta = e;
    }
    if let Some(n) = a.n {
        cfg.web.n = n;
    }
    let (eta, n, seed) = (cfg.web.eta, cfg.web.n, cfg.run.seed);
    let reps = a.replicas.unwrap_or(cfg.run.replicas);
    let base = mix(&[seed, 0x3EB]);
    match a.audit {
        None => {
            let v = (0..reps as u64)
                .into_par_iter()
                .map(|i| m_eta_one_point(replica_seed(base, i), eta, n))
                .collect::<kpz_core::Result<Vec<_>>>()?;
            let table = QuantileTable::tw_gue();
            Ok(Output {
                name: "webdist",
                header: vec!["x", "s", "y", "t", "value"],
                rows: v
                    .iter()
                    .map(|x| vec!["0".into(), "0".into(), "0".into(), "1".into(), fmt_f(*x)])
                    .collect(),
                summary: json!({ "eta": eta, "n": n, "replicas": reps, "mean": mean(&v), "table_mean": table.mean }),
                pass: None,
            })
        }
        Some(WebAudit::Slack) => {
            let r = slack_violation_rate(seed, eta, n, reps, a.delta)?;
            Ok(Output {
                name: "webdist",
                header: vec!["n", "chains", "violations", "rate"],
                rows: vec![vec![
                    fmt_f(r.n),
                    r.chains.to_string(),
                    r.violations.to_string(),
                    fmt_f(r.rate),
                ]],
                summary: json!({ "slack": r, "delta": a.delta }),
                pass: None,
            })
        }
        Some(kind) => {
            let b = a.box_side;
            let mut rows = Vec::new();
            let mut bad = 0usize;
            for f in 0..reps as u64 {
                let field = RademacherField::unbounded(replica_seed(base, f));
                let pts: Vec<(i64, i64)> = (0..b)
                    .flat_map(|n| (0..b).map(move |i| (i, n)))
                    .filter(|(i, n)| (i + n) % 2 == 0)
                    .collect();
                for &src in &pts {
                    for &dst in pts.iter().filter(|d| d.1 >= src.1) {
                        let d = drw(&field, src, dst)?;
                        let ok = match kind {
                            WebAudit::Oracle => d == drw_bruteforce(&field, src, dst)?,
                            _ => {
                                (d == WebDist::Infinite) == ((dst.0 - src.0).abs() > dst.1 - src.1)
                            }
                        };
                        if !ok {
                            bad += 1;
                        }
                        rows.push(vec![
                            f.to_string(),
                            format!("{},{}", src.0, src.1),
                            format!("{},{}", dst.0, dst.1),
                            d.to_string(),
                        ]);
                    }
                }
            }
            Ok(Output {
                name: "webdist",
                header: vec!["field", "from", "to", "drw"],
                rows,
                summary: json!({ "audit": format!("{kind:?}").to_lowercase(), "fields": reps, "mismatches": bad }),
                pass: Some(bad == 0),
            })
        }
    }
}

fn horizon(cfg: &mut ExperimentConfig, a: HorizonArgs) -> Result<Output> {
    let h = &mut cfg.horizon;
    if let Some(d) = a.drifts {
        h.drifts = d;
    }
    if let Some(e) = a.epsilon {
        h.eps = e;
    }
    if let Some(t) = a.dt {
        h.dt = t;
    }
    if let Some(r) = a.replicas {
        h.replicas = r;
    }
    let r = property_star_test(&cfg.horizon)?;
    let rows = r
        .increments
        .iter()
        .map(|t| {
            vec![
                t.line.to_string(),
                fmt_f(t.offset),
                fmt_f(t.ks.statistic),
                fmt_f(t.ks.threshold),
            ]
        })
        .collect();
    Ok(Output {
        name: "horizon",
        header: vec!["line", "offset", "ks", "threshold"],
        rows,
        summary: json!({ "slopes": r.slopes, "pass": r.pass }),
        pass: Some(r.pass),
    })
}

fn audit(cfg: &mut ExperimentConfig, a: AuditArgs) -> Result<Output> {
    if let Some(ax) = a.axioms {
        cfg.audit.axioms = ax;
    }
    if let Some(m) = a.model {
        cfg.run.model = m;
    }
    cfg.audit.broken_coupling |= a.broken_coupling;
    let r = axiom_audit(cfg)?;
    let rows = r
        .axioms
        .iter()
        .map(|x| {
            vec![
                x.axiom.clone(),
                x.pass.to_string(),
                x.seed_count.to_string(),
            ]
        })
        .collect();
    Ok(Output {
        name: "audit",
        header: vec!["axiom", "pass", "seeds"],
        rows,
        summary: json!({ "known_axioms": AXIOMS, "report": r }),
        pass: Some(r.pass),
    })
}

fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut rd =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let idx = rd
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| anyhow!("no column {column:?} in {}", path.display()))?;
    rd.records()
        .map(|r| {
            let r = r?;
            let cell = r.get(idx).ok_or_else(|| anyhow!("short record"))?;
            Ok(cell.parse::<f64>()?)
        })
        .collect()
}

fn stats(cfg: &ExperimentConfig, a: StatsArgs) -> Result<Output> {
    let (summary, pass) = match a.cmd {
        StatsCmd::Table { input, column } => {
            let v = read_column(&input, &column)?;
            let t = QuantileTable::tw_gue();
            (
                json!({ "n": v.len(), "mean": mean(&v), "ks_to_table": ks_against_table(&v, &t)?, "table_mean": t.mean }),
                None,
            )
        }
        StatsCmd::Ks { a, b, column } => {
            let r = ks_two_sample(&read_column(&a, &column)?, &read_column(&b, &column)?)?;
            (json!({ "ks": r }), Some(!r.reject))
        }
        StatsCmd::Calibrate { runs, n } => {
            let c = null_calibration(runs, n, cfg.run.seed)?;
            let tol = Tolerances::vendored();
            let limit = tol.calibration.max_rate_factor * tol.ks.alpha;
            (
                json!({ "calibration": c, "limit": limit }),
                Some(c.rate <= limit),
            )
        }
    };
    Ok(Output {
        name: "stats",
        header: vec!["key", "value"],
        rows: summary
            .as_object()
            .map(|o| {
                o.iter()
                    .map(|(k, v)| vec![k.clone(), v.to_string()])
                    .collect()
            })
            .unwrap_or_default(),
        summary,
        pass,
    })
}
