//! Command-line front end. Every command builds one or more tables; they go
//! to stdout, or to files next to a JSON manifest when an output directory
//! is given.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytic::{relative_revenue, reward_rates_n2, reward_rates_n4};
use crate::error::{Error, Result};
use crate::markov;
use crate::model::{HashrateProfile, MinerId, ProtocolParams, Scenario, TieBreakParams};
use crate::sim::{self, SimConfig};
use crate::threshold::{
    convergence_study, profitable_threshold, threshold_curve, Evaluator, Search, ThresholdQuery,
};
use crate::transient::{
    cumulative_absolute_revenue, delay_from_rates, simulate_epochs, steady_round_rates,
    GrowthSchedule,
};

/// Exit code for malformed command lines.
pub const USAGE_EXIT: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "selfmine",
    version,
    about = "Selfish mining with two attackers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for sweeps and replications.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write datasets and a manifest into this directory instead of stdout.
    #[arg(long, global = true, env = "SELFMINE_OUT_DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Steady-state revenue from the generated chain.
    Analyze(AnalyzeArgs),
    /// Block-level Monte Carlo run.
    Simulate(SimulateArgs),
    /// Profitable hashrate thresholds.
    Threshold(ThresholdArgs),
    /// Revenue across difficulty adjustments.
    Transient(TransientArgs),
    /// Data behind one of the standard figures.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 0.0)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha2: f64,
    /// Sets both gamma1 and gamma2.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Sets both theta1 and theta2.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Private-chain cap.
    #[arg(long = "n", default_value_t = 4)]
    pub n: u8,
    /// Allow Henry to hold less hashrate than an attacker.
    #[arg(long)]
    pub no_honest_majority: bool,
}

impl ScenarioArgs {
    pub fn tie(&self) -> TieBreakParams {
        let d = TieBreakParams::default();
        let gamma = self.gamma.unwrap_or(d.gamma1);
        let theta = self.theta.unwrap_or(d.theta1);
        TieBreakParams::new(
            self.gamma1.unwrap_or(gamma),
            self.gamma2.unwrap_or(gamma),
            self.theta1.unwrap_or(theta),
            self.theta2.unwrap_or(theta),
        )
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(
            HashrateProfile::from_attackers(self.alpha1, self.alpha2),
            self.tie(),
            ProtocolParams::with_cap(self.n),
        )
        .validate(!self.no_honest_majority)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    AnalyticN2,
    AnalyticN4,
    Markov,
    MonteCarlo,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluatorArgs {
    #[arg(long, value_enum, default_value_t = EvaluatorKind::Markov)]
    pub evaluator: EvaluatorKind,
    /// Blocks per Monte Carlo evaluation.
    #[arg(long, default_value_t = 1_000_000)]
    pub blocks: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl EvaluatorArgs {
    fn evaluator(&self, n_cap: u8) -> Evaluator {
        match self.evaluator {
            EvaluatorKind::AnalyticN2 => Evaluator::AnalyticN2,
            EvaluatorKind::AnalyticN4 => Evaluator::AnalyticN4,
            EvaluatorKind::Markov => Evaluator::Markov { n_cap },
            EvaluatorKind::MonteCarlo => Evaluator::MonteCarlo {
                n_cap,
                blocks: self.blocks,
                seed: self.seed,
            },
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Compare against the closed form (caps 2 and 4).
    #[arg(long)]
    pub check_closed_form: bool,
    /// Write the transition system as an edge list.
    #[arg(long)]
    pub export_chain: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub blocks: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent runs, each on its own generator stream.
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    #[arg(long, default_value_t = sim::DEFAULT_BATCHES)]
    pub batches: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    /// Both attackers hold the searched hashrate.
    Symmetric,
    /// Alice's threshold with Bob at --alpha2.
    Alice,
    /// Bob's threshold with Alice at --alpha1.
    Bob,
    /// Bob's threshold over a grid of Alice's hashrates.
    Curve,
    /// Thresholds for caps 2 through --n.
    Convergence,
}

#[derive(Args, Debug, Serialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub eval: EvaluatorArgs,
    #[arg(long, value_enum, default_value_t = SearchKind::Symmetric)]
    pub search: SearchKind,
    #[arg(long, default_value_t = 0.01)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.45)]
    pub hi: f64,
    #[arg(long, default_value_t = crate::threshold::MIN_TOLERANCE)]
    pub tolerance: f64,
    /// First grid point of Alice's hashrate for --search curve.
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 0.30)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TransientArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub eval: EvaluatorArgs,
    #[arg(long, default_value_t = 100)]
    pub epochs: u32,
    /// `constant`, `geometric:<rate>` or a file with one multiplier per line.
    #[arg(long, default_value = "constant")]
    pub growth: String,
    #[arg(long, default_value_t = 2016)]
    pub blocks_per_epoch: u32,
    /// Minutes per block.
    #[arg(long, default_value_t = 10.0)]
    pub unit_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig11,
    Fig12,
}

#[derive(Args, Debug, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Epochs for the transient figures.
    #[arg(long, default_value_t = 100)]
    pub epochs: u32,
}

impl ReproduceArgs {
    fn tie(&self) -> TieBreakParams {
        let d = TieBreakParams::default();
        TieBreakParams::symmetric(
            self.gamma.unwrap_or(d.gamma1),
            self.theta.unwrap_or(d.theta1),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) => format!("{v:e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Cell {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Tables plus what produced them.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub tables: Vec<Table>,
    pub parameters: Value,
    pub summary: Value,
}

impl Dataset {
    fn new(name: &str, parameters: Value) -> Dataset {
        Dataset {
            name: name.to_string(),
            tables: Vec::new(),
            parameters,
            summary: json!({}),
        }
    }

    /// Files named `<table>.<format>` plus `<name>.manifest.json`.
    pub fn write_dir(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let mut files = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.{ext}", t.name));
            let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
            match format {
                Format::Csv => t.write_csv(&mut f)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut f, &t.to_json())?;
                    writeln!(f)?;
                }
            }
            f.flush()?;
            files.push(path);
        }
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "dataset": self.name,
            "format": format,
            "parameters": self.parameters,
            "summary": self.summary,
            "files": files
                .iter()
                .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
                .collect::<Vec<_>>(),
        });
        let path = dir.join(format!("{}.manifest.json", self.name));
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        files.push(path);
        Ok(files)
    }

    pub fn write_stdout<W: Write>(&self, mut w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => {
                for (i, t) in self.tables.iter().enumerate() {
                    if self.tables.len() > 1 {
                        if i > 0 {
                            writeln!(w)?;
                        }
                        writeln!(w, "# {}", t.name)?;
                    }
                    t.write_csv(&mut w)?;
                }
            }
            Format::Json => {
                let tables: serde_json::Map<String, Value> = self
                    .tables
                    .iter()
                    .map(|t| (t.name.clone(), t.to_json()))
                    .collect();
                let doc = json!({ "summary": self.summary, "tables": tables });
                writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
            }
        }
        Ok(())
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { USAGE_EXIT } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, stdout.lock()) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Execute `cli`. Returns the files written, if an output directory was
/// given; otherwise the dataset goes to `stdout`.
pub fn run<W: Write>(cli: &Cli, stdout: W) -> Result<Vec<PathBuf>> {
    if let Some(jobs) = cli.jobs {
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    let dataset = match &cli.command {
        Command::Analyze(a) => analyze(a)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Threshold(a) => threshold(a)?,
        Command::Transient(a) => transient(a)?,
        Command::Reproduce(a) => reproduce(a)?,
    };
    match &cli.out {
        Some(dir) => dataset.write_dir(dir, cli.format),
        None => dataset
            .write_stdout(stdout, cli.format)
            .map(|()| Vec::new()),
    }
}

fn params<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Dataset> {
    let scenario = args.scenario.scenario()?;
    let ts = markov::build_chain(&scenario)?;
    if let Some(path) = &args.export_chain {
        ts.write_edge_list(std::io::BufWriter::new(fs::File::create(path)?))?;
    }
    let a = markov::analyze_system(&ts)?;
    let mut t = Table::new("analyze", &["metric", "value"]);
    let mut put = |k: &str, v: Cell| t.push(vec![k.into(), v]);
    put("states", (a.states as u64).into());
    put("r1", a.rates.r1.into());
    put("r2", a.rates.r2.into());
    put("rh", a.rates.rh.into());
    put("p000", a.rates.p000.into());
    put("r_a", a.relative.r_a.into());
    put("r_b", a.relative.r_b.into());
    put("r_h", a.relative.r_h.into());
    put("main_chain_yield", a.main_chain_yield.into());
    put("orphan_rate", a.orphan_rate.into());
    put("stationary_residual", a.residual.into());
    if args.check_closed_form {
        let (h, tie) = (&scenario.hashrate, &scenario.tie);
        let closed = match scenario.n_cap() {
            2 => {
                let rates = reward_rates_n2(h, tie);
                let rate_gap = [
                    rates.r1 - a.rates.r1,
                    rates.r2 - a.rates.r2,
                    rates.rh - a.rates.rh,
                ]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()));
                relative_revenue(&rates)?
                    .max_abs_diff(&a.relative)
                    .max(rate_gap)
            }
            4 => relative_revenue(&reward_rates_n4(h, tie)?)?.max_abs_diff(&a.relative),
            n => {
                return Err(Error::InvalidParams(format!(
                    "closed forms exist for caps 2 and 4 only (got {n})"
                )))
            }
        };
        put("closed_form_residual", closed.into());
    }
    let mut d = Dataset::new("analyze", params(args));
    d.summary = json!({ "chain_kind": format!("{:?}", ts.kind) });
    d.tables.push(t);
    Ok(d)
}

pub fn simulate(args: &SimulateArgs) -> Result<Dataset> {
    let scenario = args.scenario.scenario()?;
    let mut config = SimConfig::new(scenario, args.blocks, args.seed);
    config.batches = args.batches;
    let r = if args.replications <= 1 {
        sim::run(&config)?
    } else {
        sim::run_replications(&config, args.replications)?
    };
    let relative = r.relative_revenue()?;
    let stderr = r.relative_stderr();
    let mut t = Table::new(
        "simulate",
        &[
            "miner",
            "mined",
            "credited",
            "orphaned",
            "relative_revenue",
            "stderr",
        ],
    );
    for m in MinerId::ALL {
        let k = m.index();
        t.push(vec![
            m.to_string().as_str().into(),
            r.mined[k].into(),
            r.credited[k].into(),
            r.orphaned[k].into(),
            relative.of(m).into(),
            stderr[k].into(),
        ]);
    }
    let mut d = Dataset::new("simulate", params(args));
    d.summary = json!({
        "rounds": r.rounds,
        "main_chain_length": r.main_chain_length(),
        "mean_round_main_blocks": r.mean_round_main_blocks(),
        "mean_round_mined_blocks": r.mean_round_mined_blocks(),
        "main_chain_yield": r.main_chain_yield(),
        "conserved": r.is_conserved(),
    });
    d.tables.push(t);
    Ok(d)
}

pub fn threshold(args: &ThresholdArgs) -> Result<Dataset> {
    let s = &args.scenario;
    let tie = s.tie();
    tie.validate()?;
    let evaluator = args.eval.evaluator(s.n);
    let query = |search| ThresholdQuery {
        tie,
        search,
        evaluator,
        lo: args.lo,
        hi: args.hi,
        tolerance: args.tolerance,
        honest_majority: !s.no_honest_majority,
    };
    let mut d = Dataset::new("threshold", params(args));
    match args.search {
        SearchKind::Symmetric | SearchKind::Alice | SearchKind::Bob => {
            let search = match args.search {
                SearchKind::Symmetric => Search::Symmetric,
                SearchKind::Alice => Search::Alice { alpha2: s.alpha2 },
                _ => Search::Bob { alpha1: s.alpha1 },
            };
            let r = profitable_threshold(&query(search))?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            let mut t = Table::new(
                "threshold",
                &["target", "threshold", "bracket_lo", "bracket_hi"],
            );
            t.push(vec![
                search.target().to_string().as_str().into(),
                r.alpha.into(),
                r.bracket.0.into(),
                r.bracket.1.into(),
            ]);
            d.summary = json!({ "evaluations": r.evaluations, "warnings": r.warnings });
            d.tables.push(t);
        }
        SearchKind::Curve => {
            let grid = grid(args.from, args.to, args.step)?;
            let curve = threshold_curve(&grid, &query(Search::Bob { alpha1: 0.0 }));
            let mut t = Table::new("threshold_curve", &["alpha1", "bob_threshold", "error"]);
            for p in &curve.points {
                let (v, e) = match &p.threshold {
                    Ok(v) => (Cell::Num(*v), Cell::Missing),
                    Err(e) => (Cell::Missing, Cell::Text(e.clone())),
                };
                t.push(vec![p.alpha1.into(), v, e]);
            }
            d.summary = json!({ "minimum": curve.minimum });
            d.tables.push(t);
        }
        SearchKind::Convergence => {
            let caps = 2..=s.n;
            let two = convergence_study(true, tie, caps.clone())?;
            let one = convergence_study(false, tie, caps)?;
            let mut t = Table::new("convergence", &["n", "single_attacker", "two_attackers"]);
            for (a, b) in one.rows.iter().zip(&two.rows) {
                t.push(vec![u64::from(a.0).into(), a.1.into(), b.1.into()]);
            }
            d.summary = json!({
                "single_attacker_converged_at": one.converged_at,
                "two_attackers_converged_at": two.converged_at,
            });
            d.tables.push(t);
        }
    }
    Ok(d)
}

/// `start, start + step, ...` up to and including `end` (within rounding).
fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && end >= start) {
        return Err(Error::InvalidParams(format!(
            "empty grid {start}..{end} step {step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| round6(start + step * i as f64))
        .collect())
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn parse_growth(arg: &str) -> Result<GrowthSchedule> {
    if arg == "constant" {
        return Ok(GrowthSchedule::Constant);
    }
    if let Some(rate) = arg.strip_prefix("geometric:") {
        let rate = rate
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad growth rate {rate:?}")))?;
        let g = GrowthSchedule::Geometric { rate };
        g.validate()?;
        return Ok(g);
    }
    GrowthSchedule::from_file(Path::new(arg))
}

pub fn transient(args: &TransientArgs) -> Result<Dataset> {
    let mut scenario = args.scenario.scenario()?;
    scenario.protocol.blocks_per_epoch = args.blocks_per_epoch;
    scenario.protocol.unit_time = args.unit_time;
    scenario.protocol.validate()?;
    let growth = parse_growth(&args.growth)?;
    let evaluator = args.eval.evaluator(scenario.n_cap());
    let rates = steady_round_rates(&scenario, &evaluator)?;
    let trace = simulate_epochs(rates.n, &scenario.protocol, &growth, args.epochs)?;
    let cumulative = cumulative_absolute_revenue(&trace, rates.shares.r_a);
    let bpe = f64::from(scenario.protocol.blocks_per_epoch);
    let mut t = Table::new(
        "transient",
        &[
            "epoch",
            "n",
            "m",
            "math",
            "t",
            "duration",
            "s",
            "absolute_revenue",
            "cumulative_absolute_revenue",
        ],
    );
    for (e, c) in trace.epochs.iter().zip(&cumulative) {
        t.push(vec![
            u64::from(e.epoch).into(),
            e.n.into(),
            e.m.into(),
            e.math.into(),
            e.t.into(),
            e.duration.into(),
            e.s.into(),
            (bpe * rates.shares.r_a / e.duration).into(),
            (*c).into(),
        ]);
    }
    let delay = match delay_from_rates(&rates, &scenario, &growth) {
        Ok(d) => json!(d),
        Err(Error::NeverProfitable { .. }) => Value::Null,
        Err(e) => return Err(e),
    };
    let mut d = Dataset::new("transient", params(args));
    d.summary = json!({
        "main_chain_yield": rates.n,
        "relative_revenue": rates.shares,
        "profitable_delay": delay,
    });
    d.tables.push(t);
    Ok(d)
}

pub fn reproduce(args: &ReproduceArgs) -> Result<Dataset> {
    let tie = args.tie();
    tie.validate()?;
    let name = format!("{:?}", args.figure).to_lowercase();
    let mut d = Dataset::new(&name, params(args));
    match args.figure {
        Figure::Fig6 => {
            let grid = grid(0.0, 0.30, 0.01)?;
            let caps = [2u8, 3, 4];
            let curves: Vec<_> = caps
                .iter()
                .map(|&n_cap| {
                    let q = ThresholdQuery::new(
                        Search::Bob { alpha1: 0.0 },
                        Evaluator::Markov { n_cap },
                    )
                    .with_tie(tie);
                    threshold_curve(&grid, &q)
                })
                .collect();
            let mut t = Table::new(
                "fig6",
                &[
                    "alpha1",
                    "bob_threshold_n2",
                    "bob_threshold_n3",
                    "bob_threshold_n4",
                ],
            );
            for (i, &a1) in grid.iter().enumerate() {
                let mut row = vec![Cell::Num(a1)];
                row.extend(
                    curves
                        .iter()
                        .map(|c| Cell::from(c.points[i].threshold.as_ref().ok().copied())),
                );
                t.push(row);
            }
            d.summary = json!({
                "minimum_n2": curves[0].minimum,
                "minimum_n3": curves[1].minimum,
                "minimum_n4": curves[2].minimum,
            });
            d.tables.push(t);
        }
        Figure::Fig7 | Figure::Fig8 => {
            let axis = grid(0.01, 0.35, 0.01)?;
            let mut cells = Vec::new();
            for n in [2u8, 3, 4] {
                for &a1 in &axis {
                    for &a2 in &axis {
                        cells.push((n, a1, a2));
                    }
                }
            }
            let values = cells
                .par_iter()
                .map(|&(n, a1, a2)| {
                    Evaluator::Markov { n_cap: n }
                        .relative_revenue(HashrateProfile::from_attackers(a1, a2), tie)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut t = if args.figure == Figure::Fig7 {
                Table::new(&name, &["n", "alpha1", "alpha2", "r_a", "r_b", "r_h"])
            } else {
                Table::new(
                    &name,
                    &[
                        "n",
                        "alpha1",
                        "alpha2",
                        "alice_gain",
                        "bob_gain",
                        "alice_profitable",
                        "bob_profitable",
                    ],
                )
            };
            for (&(n, a1, a2), r) in cells.iter().zip(&values) {
                let mut row = vec![u64::from(n).into(), a1.into(), a2.into()];
                if args.figure == Figure::Fig7 {
                    row.extend([r.r_a.into(), r.r_b.into(), r.r_h.into()]);
                } else {
                    let (ga, gb) = (r.r_a - a1, r.r_b - a2);
                    row.extend([
                        ga.into(),
                        gb.into(),
                        u64::from(ga > 0.0).into(),
                        u64::from(gb > 0.0).into(),
                    ]);
                }
                t.push(row);
            }
            d.tables.push(t);
        }
        Figure::Fig9 => {
            let caps = 2..=8u8;
            let two = convergence_study(true, tie, caps.clone())?;
            let one = convergence_study(false, tie, caps.clone())?;
            let bob_given = |alpha1: f64| {
                caps.clone()
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|&n_cap| {
                        let mut q = ThresholdQuery::new(
                            Search::Bob { alpha1 },
                            Evaluator::Markov { n_cap },
                        )
                        .with_tie(tie);
                        q.honest_majority = false;
                        profitable_threshold(&q).map(|t| t.alpha).ok()
                    })
                    .collect::<Vec<_>>()
            };
            let (b25, b30) = (bob_given(0.25), bob_given(0.30));
            let mut t = Table::new(
                "fig9",
                &[
                    "n",
                    "single_attacker",
                    "two_attackers",
                    "bob_alice_25",
                    "bob_alice_30",
                ],
            );
            for i in 0..one.rows.len() {
                t.push(vec![
                    u64::from(one.rows[i].0).into(),
                    one.rows[i].1.into(),
                    two.rows[i].1.into(),
                    b25[i].into(),
                    b30[i].into(),
                ]);
            }
            d.summary = json!({
                "single_attacker_converged_at": one.converged_at,
                "two_attackers_converged_at": two.converged_at,
            });
            d.tables.push(t);
        }
        Figure::Fig11 => {
            let protocol = ProtocolParams::default();
            let mut t = Table::new(
                "fig11",
                &[
                    "alpha",
                    "main_chain_yield",
                    "relative_revenue",
                    "absolute_revenue_first_epoch",
                    "absolute_revenue",
                ],
            );
            for a in grid(0.01, 0.33, 0.01)? {
                let s = Scenario::new(HashrateProfile::from_attackers(a, a), tie, protocol);
                let rates = steady_round_rates(&s, &Evaluator::Markov { n_cap: 4 })?;
                let trace =
                    simulate_epochs(rates.n, &protocol, &GrowthSchedule::Constant, args.epochs)?;
                let curve = cumulative_absolute_revenue(&trace, rates.shares.r_a);
                t.push(vec![
                    a.into(),
                    rates.n.into(),
                    rates.shares.r_a.into(),
                    curve[0].into(),
                    curve[curve.len() - 1].into(),
                ]);
            }
            d.tables.push(t);
        }
        Figure::Fig12 => {
            let protocol = ProtocolParams::default();
            let alphas = [0.22, 0.25, 0.30, 0.33];
            let mut curves = Vec::new();
            let mut delays = Table::new("fig12_delay", &["alpha", "epochs", "days"]);
            for &a in &alphas {
                let s = Scenario::new(HashrateProfile::from_attackers(a, a), tie, protocol);
                let rates = steady_round_rates(&s, &Evaluator::Markov { n_cap: 4 })?;
                let trace =
                    simulate_epochs(rates.n, &protocol, &GrowthSchedule::Constant, args.epochs)?;
                curves.push(cumulative_absolute_revenue(&trace, rates.shares.r_a));
            }
            for a in grid(0.22, 0.33, 0.01)? {
                let s = Scenario::new(HashrateProfile::from_attackers(a, a), tie, protocol);
                let rates = steady_round_rates(&s, &Evaluator::Markov { n_cap: 4 })?;
                match delay_from_rates(&rates, &s, &GrowthSchedule::Constant) {
                    Ok(dl) => {
                        delays.push(vec![a.into(), u64::from(dl.epochs).into(), dl.days.into()])
                    }
                    Err(Error::NeverProfitable { .. }) => {
                        delays.push(vec![a.into(), Cell::Missing, Cell::Missing])
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut t = Table::new(
                "fig12",
                &[
                    "k",
                    "absolute_revenue_22",
                    "absolute_revenue_25",
                    "absolute_revenue_30",
                    "absolute_revenue_33",
                ],
            );
            for k in 0..args.epochs as usize {
                let mut row = vec![Cell::Int(k as u64 + 1)];
                row.extend(curves.iter().map(|c| Cell::Num(c[k])));
                t.push(row);
            }
            d.tables.push(t);
            d.tables.push(delays);
        }
    }
    Ok(d)
}
