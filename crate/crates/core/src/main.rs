use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use tracing::{info, warn};

use gasc_core::adapters::load_adapters;
use gasc_core::config::GlobalConfig;
use gasc_core::corpus::{self, AxiomSystem, ConjectureType, Corpus, Filter};
use gasc_core::geoform::{self, Dialect, GeoProblem};
use gasc_core::report::{self, Format};
use gasc_core::runner::{self, now_rfc3339, Results, RunOptions, TimingMode, RESULTS_FILE};
use gasc_core::scoring::{self, RANKING_FILE};
use gasc_core::service::{self, WatchOptions, WatchOutcome};

#[derive(Debug, Parser)]
#[command(name = "gasc", version, about = "Competition harness for geometry theorem provers")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[arg(long, global = true, value_enum, default_value = "auto")]
    color: ColorChoice,
    /// Config file; defaults to $GASC_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ColorChoice {
    Auto,
    Always,
    Never,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Translate a problem between dialects.
    Convert(ConvertArgs),
    /// Inspect a problem corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Run every selected problem against every available prover.
    Run(RunArgs),
    /// Adjudicate a results file and write ranking.json.
    Score(ScoreArgs),
    /// Render leaderboard artifacts from a results file.
    Report(ReportArgs),
    /// Serve live status of a run directory over HTTP.
    Serve(ServeArgs),
    /// Poll a status service until the run ends.
    Watch(WatchArgs),
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Source dialect; inferred from the file extension when omitted.
    #[arg(long)]
    from: Option<Dialect>,
    #[arg(long)]
    to: Dialect,
    input: PathBuf,
    /// Output file, or `-` for standard output.
    #[arg(default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    /// Check every entry; exits 1 if any fails.
    Validate { corpus: PathBuf },
    /// Print the ids of the selected problems, one per line.
    List(ListArgs),
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Keep only these axiom systems (repeatable or comma separated).
    #[arg(long = "axiom", value_delimiter = ',')]
    axiom: Vec<AxiomSystem>,
    /// Keep only these conjecture types.
    #[arg(long = "type", value_delimiter = ',')]
    conjecture_type: Vec<ConjectureType>,
    /// Keep only these problem ids.
    #[arg(long = "id", value_delimiter = ',')]
    id: Vec<String>,
}

impl SelectArgs {
    fn filter(&self) -> Filter {
        Filter { axiom_systems: self.axiom.clone(), conjecture_types: self.conjecture_type.clone(), ids: self.id.clone() }
    }
}

#[derive(Debug, Args)]
struct ListArgs {
    corpus: PathBuf,
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Corpus directory or manifest.
    #[arg(long)]
    corpus: PathBuf,
    /// Adapter registry file.
    #[arg(long)]
    adapters: Option<PathBuf>,
    /// Output run directory; must not already hold a run.
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock limit per job, seconds.
    #[arg(long)]
    wall: Option<f64>,
    /// CPU limit per job, seconds.
    #[arg(long)]
    cpu: Option<f64>,
    /// Memory limit per job, MiB.
    #[arg(long)]
    mem: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// `serial` runs one job at a time for comparable timings.
    #[arg(long)]
    timing: Option<TimingMode>,
    #[arg(long)]
    reps: Option<u32>,
    /// Seconds between SIGTERM and SIGKILL.
    #[arg(long)]
    grace: Option<f64>,
    #[arg(long)]
    keep_workdirs: bool,
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Run directory or results.json.
    #[arg(long)]
    results: PathBuf,
    /// Corpus for ground truth; defaults to the statuses in the run manifest.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output file; defaults to ranking.json next to the results.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directory or results.json.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "html,csv,json")]
    format: Vec<Format>,
    /// Output directory; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Run directory to serve.
    #[arg(long)]
    run: PathBuf,
    /// Listen address; defaults to 127.0.0.1:8080.
    #[arg(long)]
    bind: Option<String>,
}

#[derive(Debug, Args)]
struct WatchArgs {
    /// Base URL of the status service.
    url: String,
    /// Seconds between polls.
    #[arg(long, default_value_t = 2.0)]
    interval: f64,
    /// Consecutive connection failures tolerated.
    #[arg(long, default_value_t = 5)]
    retries: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    let ansi = match cli.color {
        ColorChoice::Always => true,
        ColorChoice::Never => false,
        ColorChoice::Auto => std::io::IsTerminal::is_terminal(&std::io::stderr()),
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into());
    tracing_subscriber::fmt().with_env_filter(filter).with_ansi(ansi).with_writer(std::io::stderr).init();
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let config = GlobalConfig::discover(cli.config.as_deref())?;
    match cli.command {
        Cmd::Convert(a) => convert(a).map(|_| ExitCode::SUCCESS),
        Cmd::Corpus(CorpusCmd::Validate { corpus }) => validate(&corpus),
        Cmd::Corpus(CorpusCmd::List(a)) => list(a).map(|_| ExitCode::SUCCESS),
        Cmd::Run(a) => run(a, &config).map(|_| ExitCode::SUCCESS),
        Cmd::Score(a) => score(a).map(|_| ExitCode::SUCCESS),
        Cmd::Report(a) => report(a).map(|_| ExitCode::SUCCESS),
        Cmd::Serve(a) => serve(a, &config).map(|_| ExitCode::SUCCESS),
        Cmd::Watch(a) => watch(a),
    }
}

fn infer_dialect(path: &Path) -> Option<Dialect> {
    let name = path.file_name()?.to_str()?;
    if name.ends_with(".gcl") {
        Some(Dialect::Gclc)
    } else if name.ends_with(".json") {
        Some(Dialect::Exchange)
    } else {
        None
    }
}

fn convert(a: ConvertArgs) -> Result<()> {
    let from = match a.from.or_else(|| infer_dialect(&a.input)) {
        Some(d) => d,
        None => usage_error(&format!("cannot infer the dialect of {}; pass --from", a.input.display())),
    };
    let bytes = std::fs::read(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let problem: GeoProblem = match from {
        Dialect::Gclc => {
            let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or(geoform::DEFAULT_PROBLEM_ID);
            match std::str::from_utf8(&bytes) {
                Ok(text) => geoform::parse_gclc_with_id(text, stem)?,
                // reports the position of the bad byte
                Err(_) => geoform::parse_gclc_bytes(&bytes)?,
            }
        }
        Dialect::Exchange => geoform::read_exchange_str(&String::from_utf8_lossy(&bytes))?,
        Dialect::Ggb => bail!("the GeoGebra dialect is output only"),
    };
    let text = a.to.emit(&problem);
    if a.output.as_os_str() == "-" {
        print!("{text}");
    } else {
        std::fs::write(&a.output, text).with_context(|| format!("cannot write {}", a.output.display()))?;
    }
    Ok(())
}

fn validate(path: &Path) -> Result<ExitCode> {
    let report = corpus::validate_corpus(path)?;
    for e in report.failed() {
        for f in &e.failures {
            eprintln!("{}: {f}", e.file);
        }
    }
    let failed = report.failed().count();
    println!("{} entries, {} valid, {} invalid", report.entries.len(), report.entries.len() - failed, failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn list(a: ListArgs) -> Result<()> {
    let corpus = Corpus::load(&a.corpus)?;
    for e in corpus.select(&a.select.filter())? {
        println!("{}\t{}\t{}\t{}", e.id(), e.meta.axiom_system, e.meta.conjecture_type, e.meta.expected_status);
    }
    Ok(())
}

fn run(a: RunArgs, config: &GlobalConfig) -> Result<()> {
    let mut rc = config.run_config();
    if let Some(v) = a.wall {
        rc.wall_limit_s = v;
    }
    if let Some(v) = a.cpu {
        rc.cpu_limit_s = v;
    }
    if let Some(v) = a.mem {
        rc.mem_limit_mib = v;
    }
    if let Some(v) = a.workers {
        rc.workers = v;
    }
    if let Some(v) = a.timing {
        rc.timing_mode = v;
    }
    if let Some(v) = a.reps {
        rc.repetitions = v;
    }
    if let Some(v) = a.grace {
        rc.grace_kill_s = v;
    }
    let adapters_path = match a.adapters.or_else(|| config.run.adapters.clone()) {
        Some(p) => p,
        None => usage_error("--adapters is required (or set run.adapters in the config file)"),
    };
    let corpus = Corpus::load(&a.corpus)?;
    let selection = corpus.select(&a.select.filter())?;
    let adapters = load_adapters(&adapters_path)?;
    let options = RunOptions { keep_workdirs: a.keep_workdirs, ..RunOptions::default() }.with_exe_dir();
    info!(problems = selection.len(), adapters = adapters.len(), out = %a.out.display(), "starting run");
    let results = runner::run_competition(&corpus, &selection, &adapters, &rc, &a.out, &options)?;
    for ad in results.manifest.adapters.iter().filter(|a| a.status == runner::AdapterStatus::Skipped) {
        warn!(adapter = %ad.name, "skipped: {}", ad.note.as_deref().unwrap_or("not available"));
    }
    info!(records = results.records.len(), "run finished");
    println!("{}", a.out.join(RESULTS_FILE).display());
    Ok(())
}

fn load_results(path: &Path) -> Result<(Results, PathBuf)> {
    let results = Results::load(path).with_context(|| format!("cannot load results from {}", path.display()))?;
    let run_dir = if path.is_dir() { path.to_path_buf() } else { path.parent().unwrap_or(Path::new(".")).to_path_buf() };
    Ok((results, run_dir))
}

fn load_optional_corpus(path: Option<&Path>) -> Result<Option<Corpus>> {
    path.map(|p| Corpus::load(p).map_err(anyhow::Error::from)).transpose()
}

fn score(a: ScoreArgs) -> Result<()> {
    let (results, run_dir) = load_results(&a.results)?;
    let corpus = load_optional_corpus(a.corpus.as_deref())?;
    let (_, ranking) = scoring::score_results(&results, corpus.as_ref(), Some(&run_dir))?;
    let out = a.out.unwrap_or_else(|| run_dir.join(RANKING_FILE));
    std::fs::write(&out, ranking.to_canonical_json()).with_context(|| format!("cannot write {}", out.display()))?;
    if results.incomplete {
        warn!("results are from an incomplete run");
    }
    println!("{}", out.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let (results, run_dir) = load_results(&a.results)?;
    let corpus = load_optional_corpus(a.corpus.as_deref())?;
    let (adjudicated, ranking) = scoring::score_results(&results, corpus.as_ref(), Some(&run_dir))?;
    let bundle = report::bundle(&results, &adjudicated, &ranking, &now_rfc3339());
    let out = a.out.unwrap_or(run_dir);
    for p in report::render(&bundle, &a.format, &out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().context("cannot start async runtime")
}

fn serve(a: ServeArgs, config: &GlobalConfig) -> Result<()> {
    let bind = a.bind.or_else(|| config.service.bind.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind).await.with_context(|| format!("cannot bind {bind}"))?;
        info!(addr = %listener.local_addr()?, run = %a.run.display(), "serving");
        service::serve(listener, a.run).await?;
        Ok(())
    })
}

fn watch(a: WatchArgs) -> Result<ExitCode> {
    if !(a.interval.is_finite() && a.interval > 0.0) {
        usage_error("--interval must be positive");
    }
    let opts = WatchOptions { interval: Duration::from_secs_f64(a.interval), retry_budget: a.retries };
    let outcome = runtime()?.block_on(async move {
        let mut out = std::io::stdout();
        service::watch(&a.url, &opts, &mut out).await
    })?;
    Ok(match outcome {
        WatchOutcome::Finished => ExitCode::SUCCESS,
        WatchOutcome::Incomplete => {
            eprintln!("run ended incomplete");
            ExitCode::from(1)
        }
    })
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, msg).exit()
}
