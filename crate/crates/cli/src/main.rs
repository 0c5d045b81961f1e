mod config;
mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use iutmed::linmod::{FitSummary, Reference};
use iutmed::medtests::{run_methods, Evidence, Method, TestReport, TestSettings};
use iutmed::regions::{self, CumulativePair, RegionSpec, DEFAULT_LADDER};
use iutmed::scan::{self, ScanConfig};
use iutmed::simlab::{self, SimScenario, TableKind};
use iutmed::worstcase::{self, Scenario};

use manifest::{Io, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "iutmed", version, about = "Intersection-union tests for the indirect effect in mediation analysis")]
struct Cli {
    /// File of `key = value` lines supplying flags of the chosen subcommand; flags given on the command line win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Maximum number of worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Where to write the run manifest [default: next to the main output]
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo rejection rates, the published tables, or a PS band-length sweep
    Simulate(SimulateArgs),
    /// Test every exposure-mediator pair of a delimited table
    Scan(ScanArgs),
    /// Worst-case PS type I error under a single null
    Worstcase(WorstcaseArgs),
    /// Membership raster of the S, PS and ASQ regions
    RegionDump(RegionDumpArgs),
    /// All six tests for one cumulative-probability pair
    TestOne(TestOneArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Scan(_) => "scan",
            Command::Worstcase(_) => "worstcase",
            Command::RegionDump(_) => "region-dump",
            Command::TestOne(_) => "test-one",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Exposure-to-mediator effects (comma list; scenarios are all combinations)
    #[arg(long, value_delimiter = ',', conflicts_with = "table")]
    beta: Vec<f64>,
    /// Mediator-to-outcome effects
    #[arg(long, value_delimiter = ',', conflicts_with = "table")]
    gamma: Vec<f64>,
    /// Sample sizes
    #[arg(long, value_delimiter = ',', conflicts_with = "table")]
    n: Vec<usize>,
    #[arg(long, default_value_t = simlab::DEFAULT_REPLICATES)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = regions::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Methods to report [default: all]
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Reference law for the t statistics: t or normal
    #[arg(long, default_value = "t")]
    reference: Reference,
    /// Reproduce published table 1 (type I error) or 2 (power)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), conflicts_with = "band_sweep")]
    table: Option<u8>,
    /// Run only the PS test across these band lengths
    #[arg(long, value_delimiter = ',')]
    band_sweep: Vec<f64>,
    /// CSV output; aligned text goes to stdout and next to the CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    outcome: String,
    #[arg(long, value_delimiter = ',', required = true)]
    exposures: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    mediators: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Tab-separated mediator, lower, upper
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Map each mediator to rank-based normal scores after clamping
    #[arg(long)]
    inverse_normal: bool,
    /// Normal scores use (rank - c) / (n + 1 - 2c)
    #[arg(long, default_value_t = 0.5)]
    rank_offset: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = regions::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER)]
    ladder: Vec<f64>,
    /// Keep the center square of the ASQ chains
    #[arg(long)]
    keep_center: bool,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long, default_value = "t")]
    reference: Reference,
    /// Field separator: tab, comma, or a single character
    #[arg(long, default_value = "tab")]
    delimiter: String,
    #[arg(long, default_value = "NA")]
    missing: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// QQ-plot coordinates as CSV
    #[arg(long)]
    qq: Option<PathBuf>,
    /// Run metadata as JSON [default: <out>.meta.json]
    #[arg(long)]
    metadata: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct WorstcaseArgs {
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5")]
    lambda: Vec<f64>,
    /// Levels to maximize over [default: 0.001..0.05 by 0.001, then to 0.2 by 0.005]
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Vec<f64>,
    /// Noncentrality grid before golden-section refinement [default: 0..8 by 0.25, then to 50 by 2]
    #[arg(long, value_delimiter = ',')]
    delta_grid: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RegionDumpArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = regions::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Grid points per axis (cell centers)
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    /// Use the PS p-value region instead of the constructed region
    #[arg(long)]
    effective: bool,
    #[arg(long)]
    keep_center: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct TestOneArgs {
    #[arg(long)]
    u: f64,
    #[arg(long)]
    v: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = regions::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER)]
    ladder: Vec<f64>,
    #[arg(long)]
    keep_center: bool,
    /// t statistic of the exposure-to-mediator fit (enables Sobel and product-normal)
    #[arg(long, allow_hyphen_values = true)]
    t_beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_gamma: Option<f64>,
    /// JSON reports
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_cli() -> Result<Cli> {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cmd = Cli::command();
    let matches = cmd.clone().try_get_matches_from(&argv).unwrap_or_else(|e| e.exit());
    let matches = match matches.get_one::<PathBuf>("config") {
        Some(path) => {
            let merged = config::merge(argv, &cmd, &matches, path)?;
            cmd.try_get_matches_from(merged).unwrap_or_else(|e| e.exit())
        }
        None => matches,
    };
    Ok(Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit()))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}

fn run() -> Result<()> {
    let cli = parse_cli()?;
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring worker threads")?;
    }
    let started = Utc::now();
    let mut io = Io::default();
    let (config, seed, main_out) = match &cli.command {
        Command::Simulate(a) => {
            simulate(a, &mut io)?;
            (serde_json::to_value(a)?, Some(a.seed), a.out.clone())
        }
        Command::Scan(a) => {
            run_scan(a, cli.threads, &mut io)?;
            (serde_json::to_value(a)?, Some(a.seed), Some(a.out.clone()))
        }
        Command::Worstcase(a) => {
            run_worstcase(a, &mut io)?;
            (serde_json::to_value(a)?, None, a.out.clone())
        }
        Command::RegionDump(a) => {
            region_dump(a, &mut io)?;
            (serde_json::to_value(a)?, None, a.out.clone())
        }
        Command::TestOne(a) => {
            test_one(a, &mut io)?;
            (serde_json::to_value(a)?, None, a.out.clone())
        }
    };
    let name = cli.command.name();
    let path = cli.manifest.clone().unwrap_or_else(|| match main_out {
        Some(p) => suffixed(&p, ".manifest.json"),
        None => PathBuf::from(format!("iutmed-{name}.manifest.json")),
    });
    let mut inputs = io.inputs.clone();
    if let Some(c) = &cli.config {
        inputs.push(c.clone());
    }
    let manifest = RunManifest {
        subcommand: name.into(),
        library_version: iutmed::VERSION.into(),
        config,
        seed,
        threads: cli.threads,
        started_at: manifest::timestamp(started),
        finished_at: manifest::timestamp(Utc::now()),
        input_digests: Io::digests(&inputs)?,
        output_digests: Io::digests(&io.outputs)?,
        notes: io.notes,
    };
    write_file(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(())
}

fn suffixed(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(io: &mut Io, path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)?;
    io.outputs.push(path.to_path_buf());
    Ok(())
}

fn simulate(a: &SimulateArgs, io: &mut Io) -> Result<()> {
    let methods = if a.methods.is_empty() { Method::ALL.to_vec() } else { a.methods.clone() };
    let configure = |mut s: SimScenario| {
        s.alpha = a.alpha;
        s.lambda = a.lambda;
        s.reference = a.reference;
        s
    };
    let (csv, text) = if let Some(t) = a.table {
        let kind = if t == 1 { TableKind::TypeI } else { TableKind::Power };
        let rows: Vec<SimScenario> = kind.scenarios(a.seed, a.reps).into_iter().map(configure).collect();
        let comparable = a.alpha == 0.05 && a.lambda == regions::DEFAULT_LAMBDA && a.reference == Reference::StudentT;
        if !comparable {
            io.notes.push("published comparison skipped: alpha, lambda or reference differ from the published setup".into());
        }
        let methods: Vec<Method> = kind.methods().iter().copied().filter(|m| methods.contains(m)).collect();
        let out = simlab::run_table(&rows, &methods, kind.shows_efficiency(), comparable.then(|| kind.reference_rows()))?;
        io.notes.push(format!("redraws: {}", out.cells.iter().map(|c| c.redraws).sum::<u64>()));
        (out.csv, out.text)
    } else {
        if a.beta.is_empty() || a.gamma.is_empty() || a.n.is_empty() {
            bail!("--beta, --gamma and --n are required unless --table is given");
        }
        let mut rows = Vec::new();
        for &beta in &a.beta {
            for &gamma in &a.gamma {
                for &n in &a.n {
                    let seed = a.seed.wrapping_add(rows.len() as u64);
                    rows.push(configure(SimScenario::new(beta, gamma, n, seed).with_replicates(a.reps)));
                }
            }
        }
        if a.band_sweep.is_empty() {
            let show_re = rows.iter().any(|r| !r.is_null()) && methods.contains(&Method::Maxp);
            let out = simlab::run_table(&rows, &methods, show_re, None)?;
            io.notes.push(format!("redraws: {}", out.cells.iter().map(|c| c.redraws).sum::<u64>()));
            (out.csv, out.text)
        } else {
            let sweep = simlab::band_sweep(&a.band_sweep, &rows)?;
            let mut text = format!("{:>6} {:>5} {:>5} {:>5} {:>8} {:>10}\n", "lambda", "beta", "gamma", "n", "ps_rate", "mc_stderr");
            for r in &sweep {
                let _ = writeln!(text, "{:>6} {:>5} {:>5} {:>5} {:>8.4} {:>10.5}", r.lambda, r.beta, r.gamma, r.n, r.rate, r.mc_stderr);
            }
            (simlab::sweep_csv(&sweep), text)
        }
    };
    print!("{text}");
    match &a.out {
        Some(p) => {
            emit(io, p, &csv)?;
            emit(io, &suffixed(p, ".txt"), &text)?;
        }
        None => print!("\n{csv}"),
    }
    Ok(())
}

fn delimiter(s: &str) -> Result<char> {
    Ok(match s {
        "tab" | "\\t" => '\t',
        "comma" => ',',
        other => {
            let mut chars = other.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => bail!("delimiter must be tab, comma, or one character"),
            }
        }
    })
}

fn run_scan(a: &ScanArgs, threads: Option<usize>, io: &mut Io) -> Result<()> {
    let limits = match &a.limits {
        Some(p) => {
            io.inputs.push(p.clone());
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            scan::parse_limits(&text)?
        }
        None => Default::default(),
    };
    let cfg = ScanConfig {
        input: a.input.clone(),
        delimiter: delimiter(&a.delimiter)?,
        missing: a.missing.clone(),
        outcome: a.outcome.clone(),
        exposures: a.exposures.clone(),
        mediators: a.mediators.clone(),
        covariates: a.covariates.clone(),
        limits,
        inverse_normal: a.inverse_normal,
        rank_offset: a.rank_offset,
        methods: if a.methods.is_empty() { Method::ALL.to_vec() } else { a.methods.clone() },
        alphas: a.alpha.clone(),
        lambda: a.lambda,
        ladder: a.ladder.clone(),
        omit_center: !a.keep_center,
        reference: a.reference,
        seed: a.seed,
    };
    io.inputs.push(a.input.clone());
    let out = scan::run_scan(&cfg, threads)?;
    emit(io, &a.out, &scan::records_tsv(&out.records, &cfg.methods, &cfg.alphas))?;
    if let Some(q) = &a.qq {
        emit(io, q, &scan::qq_csv(&scan::qq_data(&out.records, &cfg.methods)?))?;
    }
    #[derive(Serialize)]
    struct Metadata<'a> {
        library_version: &'a str,
        seed: u64,
        config: &'a ScanConfig,
        summary: &'a scan::ScanSummary,
    }
    let meta = Metadata { library_version: iutmed::VERSION, seed: cfg.seed, config: &cfg, summary: &out.summary };
    let meta_path = a.metadata.clone().unwrap_or_else(|| suffixed(&a.out, ".meta.json"));
    emit(io, &meta_path, &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    eprintln!("{} pairs: {} ok, {} with errors", out.summary.pairs, out.summary.ok, out.summary.errors);
    Ok(())
}

fn run_worstcase(a: &WorstcaseArgs, io: &mut Io) -> Result<()> {
    let alphas = if a.alpha_grid.is_empty() { worstcase::default_alpha_grid() } else { a.alpha_grid.clone() };
    let deltas = if a.delta_grid.is_empty() { worstcase::default_delta_grid() } else { a.delta_grid.clone() };
    let mut csv = String::new();
    for &lambda in &a.lambda {
        let report = worstcase::maximize_inflation(a.scenario, lambda, &alphas, &deltas)?;
        let g = report.global_max;
        println!(
            "{} lambda={lambda}: max ratio {:.6} at alpha={} (delta={:.4}, type I error {:.8})",
            a.scenario.name(),
            g.ratio,
            g.alpha,
            g.delta,
            g.type1
        );
        let body = report.to_csv();
        if csv.is_empty() {
            csv.push_str(&body);
        } else {
            csv.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
        }
    }
    match &a.out {
        Some(p) => emit(io, p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn region_dump(a: &RegionDumpArgs, io: &mut Io) -> Result<()> {
    if a.resolution == 0 {
        bail!("--resolution must be positive");
    }
    let s = RegionSpec::s(a.alpha);
    let ps = RegionSpec::ps(a.alpha, a.lambda);
    let asq = RegionSpec::asq(a.alpha, a.lambda, &[a.alpha], !a.keep_center);
    s.validate()?;
    ps.validate()?;
    asq.validate()?;
    let n = a.resolution;
    let mut csv = String::from("u,v,in_s,in_ps,in_asq\n");
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let v = (j as f64 + 0.5) / n as f64;
            let p = CumulativePair::new(u, v)?;
            let flag = |b: bool| u8::from(b);
            let _ = writeln!(
                csv,
                "{u},{v},{},{},{}",
                flag(regions::contains(p, &s, false)?),
                flag(regions::contains(p, &ps, a.effective)?),
                flag(regions::contains(p, &asq, false)?)
            );
        }
    }
    match &a.out {
        Some(p) => emit(io, p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn describe(r: &TestReport) -> String {
    let evidence = match r.evidence {
        Evidence::PValue(p) => format!("p = {p:.6}"),
        Evidence::Threshold(Some(t)) => format!("p <= {t}"),
        Evidence::Threshold(None) => "none".into(),
        Evidence::DecisionsOnly => "decisions only".into(),
    };
    let decisions: Vec<String> =
        r.reject_at.iter().map(|(a, x)| format!("{a}:{}", if *x { "reject" } else { "keep" })).collect();
    format!("{:<15} {:<22} {}", r.method.name(), evidence, decisions.join(" "))
}

fn test_one(a: &TestOneArgs, io: &mut Io) -> Result<()> {
    if !(a.u > 0.0 && a.u < 1.0 && a.v > 0.0 && a.v < 1.0) {
        bail!("u and v must lie in (0, 1), got ({}, {})", a.u, a.v);
    }
    let settings = TestSettings { alphas: a.alpha.clone(), lambda: a.lambda, ladder: a.ladder.clone(), omit_center: !a.keep_center };
    settings.validate()?;
    let fit = |t: Option<f64>, u: f64| FitSummary { estimate: t.unwrap_or(0.0), stderr: 1.0, tstat: t.unwrap_or(0.0), df: 0, u };
    let (b, g) = (fit(a.t_beta, a.u), fit(a.t_gamma, a.v));
    let has_t = a.t_beta.is_some() && a.t_gamma.is_some();
    let mut reports = Vec::new();
    for m in Method::ALL {
        let needs_t = matches!(m, Method::Sobel | Method::ProductNormal);
        if needs_t && !has_t {
            println!("{:<15} n/a (needs --t-beta and --t-gamma)", m.name());
            continue;
        }
        let r = run_methods(&b, &g, &[m], &settings)?.remove(0);
        println!("{}", describe(&r));
        reports.push(r);
    }
    if let Some(p) = &a.out {
        emit(io, p, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(())
}
