//! Command-line driver: ingestion checks, single-user recommendations, the
//! K × neighbour-count experiment grid, the MIRA/baseline comparison and
//! volunteer session scoring.
//!
//! Exit codes: 0 success, 1 data error (I/O, parsing, integrity), 2 query error
//! (unknown user, invalid flags).

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mira::clustering;
use mira::cycle;
use mira::dataset::{self, Catalog, RatingsStore, UserId};
use mira::evaluation;
use mira::CycleConfig;
use serde::Serialize;
use thiserror::Error;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Table output truncates titles to this many characters.
const TITLE_WIDTH: usize = 60;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(mira::Error),
    #[error("{0}")]
    Query(mira::Error),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl From<mira::Error> for CliError {
    fn from(e: mira::Error) -> Self {
        if e.is_query_error() {
            CliError::Query(e)
        } else {
            CliError::Data(e)
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Query(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mira", version, about = "Cognitive-cycle movie recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a dataset, printing its size.
    Ingest(DatasetArgs),
    /// Recommend movies for one user.
    Recommend(RecommendArgs),
    /// Run the K x similar-users precision grid.
    Experiment(ExperimentArgs),
    /// Compare MIRA with the collaborative-filtering baseline.
    Compare(CompareArgs),
    /// Add a volunteer's session ratings and score MIRA's recommendations for them.
    RateSession(SessionArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// MovieLens movies file (MovieID::Title::Genres).
    #[arg(long)]
    pub movies: PathBuf,
    /// MovieLens ratings file (UserID::MovieID::Rating::Timestamp).
    #[arg(long)]
    pub ratings: PathBuf,
    /// Optional users file; validated, otherwise unused.
    #[arg(long = "users-file")]
    pub users_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CycleArgs {
    /// Number of genre clusters.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Number of similar users retrieved.
    #[arg(long, default_value_t = 10)]
    pub similar: usize,
    /// Number of movies recommended.
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl CycleArgs {
    fn config(&self) -> CycleConfig {
        CycleConfig {
            k: self.k,
            n_similar: self.similar,
            n_recommendations: self.count,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub user: UserId,
    #[command(flatten)]
    pub cycle: CycleArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the output here (plus a sibling manifest) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct UserSelection {
    /// Explicit comma-separated user ids.
    #[arg(long, value_delimiter = ',', conflicts_with = "top_users")]
    pub users: Option<Vec<UserId>>,
    /// Use the N users with the most ratings.
    #[arg(long, default_value_t = evaluation::DEFAULT_USER_COUNT)]
    pub top_users: usize,
}

impl UserSelection {
    fn resolve(&self, store: &RatingsStore) -> Result<Vec<UserId>, CliError> {
        let users = match &self.users {
            Some(u) => u.clone(),
            None => store.most_active_users(self.top_users),
        };
        if users.is_empty() {
            return Err(CliError::Query(mira::Error::InvalidConfig(
                "no users selected".into(),
            )));
        }
        evaluation::check_users(store, &users)?;
        Ok(users)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,6,7,8,9,10")]
    pub ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,30,40,50")]
    pub similars: Vec<usize>,
    #[command(flatten)]
    pub users: UserSelection,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for grid.csv, grid.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fitted model for each k as model-k<K>.json.
    #[arg(long)]
    pub dump_models: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub similar: usize,
    #[command(flatten)]
    pub users: UserSelection,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for compare.csv, compare.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Session CSV with header `user_id,movie_id,rating`.
    #[arg(long)]
    pub session: PathBuf,
    #[command(flatten)]
    pub cycle: CycleArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to replay a run; written next to each output artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: CycleConfig,
    pub movies: String,
    pub ratings: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<UserId>>,
    pub output: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub ks: Vec<usize>,
    pub similars: Vec<usize>,
}

impl RunManifest {
    fn new(command: &str, config: CycleConfig, data: &DatasetArgs, output: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            movies: data.movies.display().to_string(),
            ratings: data.ratings.display().to_string(),
            users_file: data.users_file.as_ref().map(|p| p.display().to_string()),
            session: None,
            grid: None,
            users: None,
            output: output.display().to_string(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

struct Dataset {
    catalog: Catalog,
    store: RatingsStore,
    users_listed: Option<usize>,
}

fn load(data: &DatasetArgs) -> Result<Dataset, CliError> {
    let catalog = dataset::load_movies(&data.movies)?;
    let store = dataset::load_ratings(&data.ratings, &catalog)?;
    let users_listed = data
        .users_file
        .as_deref()
        .map(dataset::load_users)
        .transpose()?;
    Ok(Dataset {
        catalog,
        store,
        users_listed,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(())
}

/// `<file>.manifest.json` next to a single-file output.
fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn truncate(title: &str, width: usize) -> String {
    if title.chars().count() <= width {
        title.to_string()
    } else {
        title.chars().take(width).collect()
    }
}

pub fn render_table(list: &mira::RecommendationList) -> String {
    let mut out = String::new();
    writeln!(out, "user {}  cluster: {}", list.user_id, list.cluster_label).unwrap();
    writeln!(out, "{:>4}  {:>8}  {:>6}  title", "rank", "movie_id", "mean").unwrap();
    for item in &list.items {
        writeln!(
            out,
            "{:>4}  {:>8}  {:>6.3}  {}",
            item.rank,
            item.movie_id,
            item.mean_rating,
            truncate(&item.title, TITLE_WIDTH)
        )
        .unwrap();
    }
    out
}

/// Writes `text` to `out` if given (plus manifest), else to stdout.
fn emit(text: &str, out: Option<&Path>, manifest: Option<&RunManifest>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, text)?;
            if let Some(m) = manifest {
                write_file(&manifest_path(path), &to_json(m)?)?;
            }
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_ingest(args: &DatasetArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = load(args)?;
    writeln!(
        stdout,
        "{} movies, {} users, {} ratings",
        ds.catalog.len(),
        ds.store.user_count(),
        ds.store.rating_count()
    )?;
    writeln!(stdout, "referential integrity: ok")?;
    if let Some(n) = ds.users_listed {
        writeln!(stdout, "users file: {n} users (not used)")?;
    }
    Ok(())
}

fn cmd_recommend(args: &RecommendArgs, command: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = args.cycle.config();
    config.validate()?;
    let ds = load(&args.data)?;
    if !ds.store.contains_user(args.user) {
        return Err(mira::Error::UnknownUser(args.user).into());
    }
    let model = clustering::fit_catalog::<f64>(&ds.catalog, config.k, config.seed)?;
    let list = cycle::run_cycle(&ds.store, &ds.catalog, &model, &config, args.user)?;
    let text = match args.format {
        Format::Json => to_json(&list.report(config))?,
        Format::Table => render_table(&list),
    };
    let manifest = args
        .out
        .as_ref()
        .map(|out| RunManifest::new(command, config, &args.data, out));
    emit(&text, args.out.as_deref(), manifest.as_ref(), stdout)
}

fn cmd_experiment(args: &ExperimentArgs, command: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = load(&args.data)?;
    let users = args.users.resolve(&ds.store)?;
    let grid = evaluation::run_grid::<f64>(
        &ds.store,
        &ds.catalog,
        &users,
        &args.ks,
        &args.similars,
        args.count,
        args.seed,
    )?;
    fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("grid.csv"), &grid.to_csv())?;
    write_file(&args.out.join("grid.json"), &to_json(&grid)?)?;
    if args.dump_models {
        for cell in grid.cells.iter().filter(|c| c.n_similar == grid.cells[0].n_similar) {
            let model = clustering::fit_catalog::<f64>(&ds.catalog, cell.k, args.seed)?;
            write_file(
                &args.out.join(format!("model-k{}.json", cell.k)),
                &to_json(&model.dump())?,
            )?;
        }
    }
    let default = CycleConfig::default();
    let config = CycleConfig {
        k: *args.ks.first().unwrap_or(&default.k),
        n_similar: *args.similars.first().unwrap_or(&default.n_similar),
        n_recommendations: args.count,
        seed: args.seed,
    };
    let mut manifest = RunManifest::new(command, config, &args.data, &args.out);
    manifest.grid = Some(GridSpec {
        ks: grid.cells.iter().map(|c| c.k).collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
        similars: grid.cells.iter().map(|c| c.n_similar).collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
    });
    manifest.users = Some(users.clone());
    write_file(&args.out.join("manifest.json"), &to_json(&manifest)?)?;

    writeln!(stdout, "{} cells x {} users", grid.cells.len(), users.len())?;
    for cell in &grid.cells {
        writeln!(
            stdout,
            "k={:<3} similar={:<4} mean precision {:.4}",
            cell.k, cell.n_similar, cell.report.mean_precision
        )?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs, command: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = CycleConfig {
        k: args.k,
        n_similar: args.similar,
        n_recommendations: args.count,
        seed: args.seed,
    };
    config.validate()?;
    let ds = load(&args.data)?;
    let users = args.users.resolve(&ds.store)?;
    let report = evaluation::compare_models::<f64>(&ds.store, &ds.catalog, &users, config)?;
    fs::create_dir_all(&args.out)?;
    write_file(&args.out.join("compare.csv"), &report.to_csv())?;
    write_file(&args.out.join("compare.json"), &to_json(&report)?)?;
    let mut manifest = RunManifest::new(command, config, &args.data, &args.out);
    manifest.users = Some(users);
    write_file(&args.out.join("manifest.json"), &to_json(&manifest)?)?;
    writeln!(stdout, "mira     mean precision {:.4}", report.mira.mean_precision)?;
    writeln!(stdout, "baseline mean precision {:.4}", report.baseline.mean_precision)?;
    Ok(())
}

fn cmd_rate_session(args: &SessionArgs, command: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = args.cycle.config();
    config.validate()?;
    let ds = load(&args.data)?;
    let store = dataset::load_session(&args.session, &ds.store, &ds.catalog)?;
    let session_user = store
        .users()
        .map(|(u, _)| u)
        .find(|u| !ds.store.contains_user(*u))
        .expect("session adds exactly one user");
    let session = evaluation::evaluate_session::<f64>(&store, &ds.catalog, session_user, config)?;
    let precision = session.report.mean_precision;
    let text = match args.format {
        Format::Json => to_json(&session)?,
        Format::Table => {
            let mut t = render_table(&session.recommendations);
            let genres: Vec<&str> = session.preferred.genres.iter().map(|g| g.name()).collect();
            writeln!(t, "preferred genres: {}", genres.join(", ")).unwrap();
            writeln!(t, "precision: {precision:.4}").unwrap();
            t
        }
    };
    let manifest = args.out.as_ref().map(|out| {
        let mut m = RunManifest::new(command, config, &args.data, out);
        m.session = Some(args.session.display().to_string());
        m
    });
    emit(&text, args.out.as_deref(), manifest.as_ref(), stdout)
}

pub fn execute(cli: &Cli, command: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, stdout),
        Command::Recommend(a) => cmd_recommend(a, command, stdout),
        Command::Experiment(a) => cmd_experiment(a, command, stdout),
        Command::Compare(a) => cmd_compare(a, command, stdout),
        Command::RateSession(a) => cmd_rate_session(a, command, stdout),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    let command = args.iter().skip(1).cloned().collect::<Vec<_>>().join(" ");
    match execute(&cli, &command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
