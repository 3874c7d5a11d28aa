//! Command line: argument parsing and the subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dialogue_games::backends::{builtin_registry, load_registry, Registry};
use dialogue_games::engine::{load_games, run_benchmark, Clock, Pairing, RunPlan};
use dialogue_games::games::{generate_instances, Flow, WordPool};
use dialogue_games::metrics::{
    export_leaderboard, kendall_tau, language_delta, ranking_pairs_export, read_ranking_csv,
    score_run, ExportFormat, ProductMode, ScoreOptions,
};
use dialogue_games::Backends;

use crate::service::{router, AppState, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "dgames", version, about = "Self-play dialogue game benchmark")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play games and write transcripts.
    Run(RunArgs),
    /// Score a results directory, or build a language delta table.
    Score(ScoreArgs),
    /// Export the leaderboard of a results directory.
    Leaderboard(LeaderboardArgs),
    /// Kendall rank correlation between two `model,score` CSV files.
    Correlate(CorrelateArgs),
    /// Generate an instance file.
    Instances(InstancesArgs),
    /// Serve human-play sessions and results over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Directory with `<game>.json` instance files; instances are generated
    /// when omitted.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Instances generated per game when no instance directory is given.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Model registry JSON, overlaid on the built-in bots.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Directory with extra `<game>.<lang>.json` locale packs.
    #[arg(long)]
    pub locales: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Comma-separated game names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub games: Vec<String>,
    /// Comma-separated pairings; seats within a pairing are joined by `+`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    #[arg(long, default_value = "en")]
    pub lang: String,
    #[arg(long, default_value = "results")]
    pub results: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Args)]
pub struct ScoreFlags {
    /// Average per-game products instead of multiplying macro averages.
    #[arg(long)]
    pub per_game_product: bool,
    /// Leave episodes lost to backend failures out of every count.
    #[arg(long)]
    pub exclude_backend_failures: bool,
}

impl ScoreFlags {
    fn options(&self) -> ScoreOptions {
        ScoreOptions {
            product: if self.per_game_product {
                ProductMode::PerGame
            } else {
                ProductMode::Macro
            },
            exclude_backend_failures: self.exclude_backend_failures,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// A results directory, or several `LANG=DIR` entries for a delta table.
    #[arg(required = true)]
    pub results: Vec<String>,
    /// Baseline language of the delta table.
    #[arg(long, default_value = "en")]
    pub baseline: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ScoreFlags,
}

#[derive(Debug, Args)]
pub struct LeaderboardArgs {
    pub results: PathBuf,
    /// csv, html or json.
    #[arg(long, default_value = "csv")]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ScoreFlags,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// JSON object mapping external model names to registry ids.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Also write `model,rank_a,rank_b` rows for a bump chart.
    #[arg(long)]
    pub pairs_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstancesArgs {
    pub game: String,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Word pool file for word games; the shipped pool otherwise.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, default_value = "results")]
    pub results: PathBuf,
    /// Games offered; all shipped games when omitted.
    #[arg(long, value_delimiter = ',')]
    pub games: Vec<String>,
    /// Model that plays the seats the human does not take.
    #[arg(long, default_value = "scripted:perfect")]
    pub partner: String,
    /// Seconds a session waits for a human response.
    #[arg(long, default_value_t = 1800)]
    pub human_timeout: u64,
    #[command(flatten)]
    pub source: SourceArgs,
}

fn registry(path: Option<&Path>) -> Result<Registry> {
    match path {
        Some(p) => Ok(load_registry(p)?),
        None => Ok(builtin_registry()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let src = &args.source;
    let games = load_games(
        &args.games,
        src.instances.as_deref(),
        src.n,
        src.seed,
        src.locales.as_deref(),
    )?;
    let backends = Backends::new(registry(src.registry.as_deref())?);
    let pairings = args
        .models
        .iter()
        .map(|m| Pairing(m.split('+').map(str::trim).map(String::from).collect()))
        .collect();
    let plan = RunPlan {
        games,
        pairings,
        language: args.lang,
        results_dir: args.results.clone(),
        seed: src.seed,
        jobs: args.jobs,
        clock: Clock::from_env(),
    };
    let summary = run_benchmark(&plan, &backends)?;
    eprintln!(
        "played {}, skipped {}, backend failures {}; results in {}",
        summary.played,
        summary.skipped,
        summary.backend_failures,
        args.results.display()
    );
    Ok(if summary.backend_failures > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let options = args.flags.options();
    if args.results.len() == 1 && !args.results[0].contains('=') {
        let reports = score_run(Path::new(&args.results[0]), &options)?;
        emit(args.out.as_deref(), &export_leaderboard(&reports, ExportFormat::Json))?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut by_lang = BTreeMap::new();
    for entry in &args.results {
        let Some((lang, dir)) = entry.split_once('=') else {
            bail!("with several results directories each must be given as LANG=DIR (got '{entry}')");
        };
        let reports = score_run(Path::new(dir), &options)?;
        by_lang.insert(lang.to_string(), reports);
    }
    let table = language_delta(&by_lang, &args.baseline)?;
    emit(args.out.as_deref(), &table.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_leaderboard(args: LeaderboardArgs) -> Result<ExitCode> {
    let reports = score_run(&args.results, &args.flags.options())?;
    emit(args.out.as_deref(), &export_leaderboard(&reports, args.format))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_correlate(args: CorrelateArgs) -> Result<ExitCode> {
    let aliases: Option<BTreeMap<String, String>> = match &args.aliases {
        Some(p) => Some(serde_json::from_str(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?),
        None => None,
    };
    let read = |p: &Path| -> Result<_> {
        let file = fs::File::open(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(read_ranking_csv(file, aliases.as_ref())?)
    };
    let (a, b) = (read(&args.a)?, read(&args.b)?);
    let r = kendall_tau(&a, &b)?;
    if r.dropped > 0 {
        eprintln!("warning: {} models appear in only one ranking", r.dropped);
    }
    println!("tau={:.3} p={:.4} n={}", r.tau, r.p_value, r.n_common);
    if let Some(out) = &args.pairs_out {
        emit(Some(out), &ranking_pairs_export(&a, &b)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_instances(args: InstancesArgs) -> Result<ExitCode> {
    let flow: Flow = args.game.parse()?;
    let pool = match &args.pool {
        Some(p) => WordPool::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => WordPool::builtin(flow),
    };
    let file = generate_instances(flow, args.n, args.seed, Some(&pool))?;
    emit(args.out.as_deref(), &file.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(args: ServeArgs) -> Result<ExitCode> {
    let src = &args.source;
    let names: Vec<String> = if args.games.is_empty() {
        Flow::ALL.iter().map(|f| f.as_str().to_string()).collect()
    } else {
        args.games.clone()
    };
    let games = load_games(&names, src.instances.as_deref(), src.n, src.seed, src.locales.as_deref())?;
    let backends = Backends::new(registry(src.registry.as_deref())?);
    let config = ServiceConfig {
        seed: src.seed,
        human_timeout: Duration::from_secs(args.human_timeout),
        default_partner: args.partner.clone(),
        ..ServiceConfig::new(&args.results)
    };
    backends.resolve(&config.default_partner)?;
    let app = router(Arc::new(AppState::new(games, backends, config)));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.bind)
            .await
            .with_context(|| format!("binding {}", args.bind))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Leaderboard(a) => cmd_leaderboard(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Instances(a) => cmd_instances(a),
        Command::Serve(a) => cmd_serve(a),
    }
}
