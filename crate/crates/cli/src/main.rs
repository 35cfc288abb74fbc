//! `fgflab`: sample log-correlated and fractional Gaussian fields, estimate
//! pairing covariances, run the verification suite, and export lattice files.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use fgflab_core::analysis::{estimate_covariance, CheckContext, CheckRegistry, CheckReport};
use fgflab_core::io::{FieldFile, MaskFile};
use fgflab_core::{Error, SamplerConfig, SamplerRegistry, SeededRng, TestFunctionSpec};

const SEED_ENV: &str = "FGFLAB_SEED";

#[derive(Parser)]
#[command(name = "fgflab", version, about = "Fractional Gaussian field laboratory")]
struct Cli {
    /// Worker threads for Monte-Carlo loops (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one field and write it in the lattice field format.
    Sample(SampleArgs),
    /// Monte-Carlo estimate of Cov[(h, phi1), (h, phi2)].
    EstimateCov(EstimateArgs),
    /// Run verification checks and print a JSON report.
    Verify(VerifyArgs),
    /// Write a field or mask file as CSV.
    Export(ExportArgs),
    /// Restrict a field to the hyperplane `x[axis] = index * dx`.
    Slice(SliceArgs),
    /// Threshold a field into a mask `value >= threshold`.
    Levelset(LevelsetArgs),
}

/// Sampler parameters. Every flag can also be given in the flat JSON file
/// passed with `--config`; flags win.
#[derive(Args, Default)]
struct SamplerFlags {
    /// Flat JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// white | spectral | eigen | cascade | cone | conv | kahane | volatility
    #[arg(long)]
    construction: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Points per axis.
    #[arg(long = "n", visible_alias = "N")]
    n: Option<usize>,
    /// Side of the periodic box.
    #[arg(long = "box-length", visible_alias = "L_box")]
    box_length: Option<f64>,
    /// Master seed; defaults to $FGFLAB_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    s: Option<f64>,
    /// unit | log_kernel
    #[arg(long)]
    normalization: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "kernel-radius")]
    kernel_radius: Option<f64>,
    #[arg(long = "correlation-length")]
    correlation_length: Option<f64>,
    /// Cascade levels as `kmin:kmax`, e.g. `-2:8`.
    #[arg(long, allow_hyphen_values = true)]
    levels: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// half_open | centered | shifted
    #[arg(long)]
    origin: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long = "slabs-per-efold")]
    slabs_per_efold: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    sampler: SamplerFlags,
    /// Output field file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    sampler: SamplerFlags,
    /// First test function as JSON `{"bumps": [{"center", "radius", "weight"}, ...]}`,
    /// or `@path` to a file holding it.
    #[arg(long)]
    phi1: Option<String>,
    #[arg(long)]
    phi2: Option<String>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Fast,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    /// Named checks; when given, `--suite` is ignored.
    names: Vec<String>,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// Master seed; defaults to $FGFLAB_SEED, then the built-in seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// List the available checks and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Field or mask file.
    input: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SliceArgs {
    input: PathBuf,
    #[arg(long)]
    axis: usize,
    #[arg(long)]
    index: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LevelsetArgs {
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    /// Bad flags, config, or parameter combination.
    Usage(String),
    Runtime(String),
    /// At least one check failed; the report is already printed.
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("fgflab: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("fgflab: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sample(a) => cmd_sample(a, cli.jobs),
        Command::EstimateCov(a) => cmd_estimate(a, cli.jobs),
        Command::Verify(a) => {
            init_jobs(cli.jobs)?;
            cmd_verify(a)
        }
        Command::Export(a) => cmd_export(a),
        Command::Slice(a) => cmd_slice(a),
        Command::Levelset(a) => cmd_levelset(a),
    }
}

fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn read_config(path: Option<&Path>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Failure::Usage(format!("config {} must be a JSON object", path.display()))),
        Err(e) => Err(Failure::Usage(format!("config {}: {e}", path.display()))),
    }
}

fn parse_levels(s: &str) -> CliResult<Value> {
    let bad = || Failure::Usage(format!("--levels expects kmin:kmax, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    Ok(json!([a, b]))
}

/// Config file overlaid with the flags that were given.
fn merged(flags: &SamplerFlags) -> CliResult<Map<String, Value>> {
    let mut m = read_config(flags.config.as_deref())?;
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    set("construction", flags.construction.clone().map(Value::from));
    set("d", flags.d.map(Value::from));
    set("N", flags.n.map(Value::from));
    set("L_box", flags.box_length.map(Value::from));
    set("seed", flags.seed.map(Value::from));
    set("s", flags.s.map(Value::from));
    set("normalization", flags.normalization.clone().map(Value::from));
    set("epsilon", flags.epsilon.map(Value::from));
    set("t", flags.t.map(Value::from));
    set("kernel_radius", flags.kernel_radius.map(Value::from));
    set("correlation_length", flags.correlation_length.map(Value::from));
    set("levels", flags.levels.as_deref().map(parse_levels).transpose()?);
    set("alpha", flags.alpha.map(Value::from));
    set("origin", flags.origin.clone().map(Value::from));
    set("n_max", flags.n_max.map(Value::from));
    set("slabs_per_efold", flags.slabs_per_efold.map(Value::from));
    if !m.contains_key("seed") {
        if let Some(seed) = env_seed()? {
            m.insert("seed".into(), seed.into());
        }
    }
    if let Some(Value::String(s)) = m.get("levels") {
        let v = parse_levels(&s.clone())?;
        m.insert("levels".into(), v);
    }
    Ok(m)
}

fn take<T: serde::de::DeserializeOwned>(m: &mut Map<String, Value>, key: &str) -> CliResult<Option<T>> {
    m.remove(key)
        .map(|v| serde_json::from_value(v).map_err(|e| Failure::Usage(format!("config key `{key}`: {e}"))))
        .transpose()
}

fn sampler_config(m: Map<String, Value>) -> CliResult<SamplerConfig> {
    serde_json::from_value(Value::Object(m)).map_err(|e| Failure::Usage(format!("sampler parameters: {e}")))
}

fn print_json(v: &Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn cmd_sample(a: SampleArgs, jobs: Option<usize>) -> CliResult<()> {
    let mut m = merged(&a.sampler)?;
    let out: Option<PathBuf> = take(&mut m, "out")?;
    let jobs = jobs.or(take(&mut m, "jobs")?);
    let out = a.out.or(out).ok_or_else(|| Failure::Usage("sample needs --out".into()))?;
    init_jobs(jobs)?;
    let config = sampler_config(m)?;
    let sampler = SamplerRegistry::with_builtins().build(&config)?;
    let field = sampler.sample(SeededRng::new(config.seed, 0))?;
    let mut file = FieldFile::new(field);
    file.header.config = serde_json::to_value(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
    file.write(&out)?;
    print_json(&json!({ "path": out, "header": file.header }))
}

fn test_function_arg(raw: Value, name: &str) -> CliResult<TestFunctionSpec> {
    let raw = match raw {
        Value::String(s) => {
            let text = match s.strip_prefix('@') {
                Some(path) => fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{name}: {path}: {e}")))?,
                None => s,
            };
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{name}: {e}")))?
        }
        v => v,
    };
    let spec: TestFunctionSpec = serde_json::from_value(raw).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
    Ok(TestFunctionSpec::new(spec.bumps)?)
}

fn cmd_estimate(a: EstimateArgs, jobs: Option<usize>) -> CliResult<()> {
    let mut m = merged(&a.sampler)?;
    let mut phi = |flag: Option<String>, key: &str| -> CliResult<TestFunctionSpec> {
        let from_config = m.remove(key);
        let raw = flag.map(Value::String).or(from_config).ok_or_else(|| Failure::Usage(format!("estimate-cov needs --{key}")))?;
        test_function_arg(raw, key)
    };
    let phi1 = phi(a.phi1, "phi1")?;
    let phi2 = phi(a.phi2, "phi2")?;
    let samples: Option<usize> = take(&mut m, "samples")?;
    let jobs = jobs.or(take(&mut m, "jobs")?);
    init_jobs(jobs)?;
    let samples = a.samples.or(samples).unwrap_or(2000);
    let config = sampler_config(m)?;
    let grid = config.grid()?;
    let estimate = estimate_covariance(&config, &phi1.discretize(&grid)?, &phi2.discretize(&grid)?, samples)?;
    print_json(&json!({ "config": config, "estimate": estimate }))
}

fn cmd_verify(a: VerifyArgs) -> CliResult<()> {
    let registry = CheckRegistry::with_builtins();
    if a.list {
        let list: Vec<Value> = registry
            .checks()
            .iter()
            .map(|c| json!({ "name": c.name, "summary": c.summary, "fast": c.fast }))
            .collect();
        return print_json(&Value::from(list));
    }
    let mut ctx = CheckContext::default();
    if let Some(seed) = a.seed.or(env_seed()?) {
        ctx.seed = seed;
    }
    let (suite, names): (String, Vec<&str>) = if !a.names.is_empty() {
        for n in &a.names {
            registry.get(n)?;
        }
        ("named".into(), a.names.iter().map(String::as_str).collect())
    } else {
        match a.suite.unwrap_or(Suite::Fast) {
            Suite::Fast => ("fast".into(), registry.fast_suite().map(|c| c.name).collect()),
            Suite::Full => ("full".into(), registry.checks().iter().map(|c| c.name).collect()),
        }
    };
    let mut reports: Vec<CheckReport> = Vec::with_capacity(names.len());
    for name in names {
        eprintln!("fgflab: running {name}");
        reports.push(registry.run(name, &ctx)?);
    }
    let pass = reports.iter().all(|r| r.pass);
    let doc = json!({
        "suite": suite,
        "seed": ctx.seed,
        "pass": pass,
        "checks": reports.len(),
        "failed": reports.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect::<Vec<_>>(),
        "reports": reports,
    });
    if let Some(path) = &a.out {
        fs::write(path, serde_json::to_vec_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))?)?;
    }
    print_json(&doc)?;
    if pass {
        Ok(())
    } else {
        for r in reports.iter().filter(|r| !r.pass) {
            eprintln!("FAILED {}", serde_json::to_string(r).map_err(|e| Failure::Runtime(e.to_string()))?);
        }
        Err(Failure::ChecksFailed)
    }
}

fn file_kind(path: &Path) -> CliResult<String> {
    let mut line = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut line)?;
    let header: Value = serde_json::from_str(line.trim_end()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(header.get("kind").and_then(Value::as_str).unwrap_or("field").to_string())
}

fn cmd_export(a: ExportArgs) -> CliResult<()> {
    let (grid, values): (_, Vec<String>) = if file_kind(&a.input)? == "mask" {
        let f = MaskFile::read(&a.input)?;
        (f.header.grid()?, f.mask.iter().map(|b| b.to_string()).collect())
    } else {
        let f = FieldFile::read(&a.input)?;
        (*f.field.grid(), f.field.values().iter().map(|v| format!("{v:e}")).collect())
    };
    let d = grid.dimension();
    let mut text = String::new();
    let cols: Vec<String> = (0..d).map(|i| format!("i{i}")).chain((0..d).map(|i| format!("x{i}"))).collect();
    text.push_str(&cols.join(","));
    text.push_str(",value\n");
    for (flat, v) in values.iter().enumerate() {
        let idx = grid.unravel(flat);
        let x = grid.coords(flat);
        let row: Vec<String> = idx[..d].iter().map(|i| i.to_string()).chain(x[..d].iter().map(|c| c.to_string())).collect();
        text.push_str(&row.join(","));
        text.push(',');
        text.push_str(v);
        text.push('\n');
    }
    match &a.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_slice(a: SliceArgs) -> CliResult<()> {
    let file = FieldFile::read(&a.input)?.slice(a.axis, a.index)?;
    file.write(&a.out)?;
    print_json(&json!({ "path": a.out, "header": file.header }))
}

fn cmd_levelset(a: LevelsetArgs) -> CliResult<()> {
    let mask = FieldFile::read(&a.input)?.levelset(a.threshold)?;
    mask.write(&a.out)?;
    print_json(&json!({ "path": a.out, "header": mask.header, "true_fraction": mask.true_fraction() }))
}
