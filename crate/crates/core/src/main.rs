use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latecount::analysis::{
    emit_choropleth, emit_ratios, emit_replicates, emit_sweep, load_inputs, run_analysis_on, run_sweep,
    unit_distribution, unit_ratios, ChoroplethLayer, RunConfig, ScopeSelection, COUNTRY,
};
use latecount::fair_win::{fair_win_probability, fair_win_probability_shares};
use latecount::geodata::{load_settlements, LoadOptions, Placement};
use latecount::inference::{replicate_diagnostics, ResampleMode, WeightScheme};
use latecount::model::{FormKind, FormParams, ModelSpec};
use latecount::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "latecount", version, about = "Tests of late-count turnaround explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all three prongs and write the JSON report and choropleth tables.
    Analyze(AnalyzeArgs),
    /// Sweep model parameters and write E[h], E[gh] and the turnaround flag.
    Sweep(SweepArgs),
    /// Fair-win probability from half-time counts or shares.
    FairWin(FairWinArgs),
    /// Dump per-replicate moments of one unit.
    Replicates(ReplicateArgs),
    /// Dump bootstrapped c/m ratios of one unit.
    Ratios(RatioArgs),
}

#[derive(Args, Default)]
struct PlanArgs {
    /// bootstrap | subsample
    #[arg(long)]
    mode: Option<ResampleMode>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate replicates on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    settlements: Option<PathBuf>,
    #[arg(long)]
    tallies: Option<PathBuf>,
    /// Center counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    nvc: Option<Vec<usize>>,
    /// top-population | weighted-k-means
    #[arg(long)]
    placement: Option<Placement>,
    /// linear[:m], log:s, power:k, exp1:r or exp2:rh:rg; repeatable.
    #[arg(long)]
    form: Vec<FormParams>,
    /// per-region | country | both
    #[arg(long)]
    scope: Option<ScopeSelection>,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    min_population: Option<u64>,
    /// Fit shares without vote-total weights.
    #[arg(long)]
    unweighted: bool,
    /// Output directory; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    settlements: PathBuf,
    /// Region id or `country`.
    #[arg(long, default_value = COUNTRY)]
    unit: String,
    #[arg(long, default_value_t = 1)]
    nvc: usize,
    #[arg(long, default_value = "top-population")]
    placement: Placement,
    /// Form kinds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "linear,exp1,exp2")]
    form: Vec<FormKind>,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    min_population: u64,
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FairWinArgs {
    /// Half-time votes for the eventual winner.
    #[arg(long, requires = "v_n")]
    v_h: Option<u64>,
    /// Half-time votes for the half-time leader.
    #[arg(long)]
    v_n: Option<u64>,
    /// Raw shares `p,q` of all counted ballots.
    #[arg(long, value_delimiter = ',', conflicts_with = "v_h", requires = "ballots")]
    shares: Option<Vec<f64>>,
    /// Counted ballots for --shares.
    #[arg(long)]
    ballots: Option<f64>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    settlements: PathBuf,
    #[arg(long, default_value = COUNTRY)]
    unit: String,
    #[arg(long, default_value_t = 1)]
    nvc: usize,
    #[arg(long, default_value = "top-population")]
    placement: Placement,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    settlements: Option<PathBuf>,
    #[arg(long)]
    tallies: Option<PathBuf>,
    #[arg(long, default_value = COUNTRY)]
    unit: String,
    #[arg(long, default_value_t = 1)]
    nvc: usize,
    #[arg(long, default_value = "linear")]
    form: FormParams,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_plan(config: &mut RunConfig, plan: &PlanArgs) {
    if let Some(mode) = plan.mode {
        config.plan.mode = mode;
    }
    if let Some(n) = plan.sample_size {
        config.plan.sample_size = n;
    }
    if let Some(b) = plan.replicates {
        config.plan.replicates = b;
    }
    if let Some(seed) = plan.seed {
        config.plan.seed = seed;
    }
    if plan.serial {
        config.plan.parallel = false;
    }
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::from_json(&fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, Error> {
    let mut config = base_config(args.config.as_deref())?;
    if args.settlements.is_some() {
        config.settlements_path = args.settlements;
    }
    if args.tallies.is_some() {
        config.tallies_path = args.tallies;
    }
    if let Some(nvc) = args.nvc {
        config.nvc = nvc;
    }
    if let Some(p) = args.placement {
        config.placement = p;
    }
    if !args.form.is_empty() {
        config.forms = args.form.into_iter().map(ModelSpec::new).collect();
    }
    if let Some(s) = args.scope {
        config.scope = s;
    }
    apply_plan(&mut config, &args.plan);
    if let Some(c) = args.c {
        config.c = c;
    }
    if let Some(m) = args.min_population {
        config.min_population = m;
    }
    if args.unweighted {
        config.weighting = WeightScheme::Unweighted;
    }

    config.validate()?;
    let (geodata, tallies) = load_inputs(&config)?;
    let report = run_analysis_on(&geodata, &tallies, &config)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), report.to_json()?)?;
            emit_choropleth(&report, ChoroplethLayer::AllGeo, File::create(dir.join("choropleth_all_geo.csv"))?)?;
            emit_choropleth(&report, ChoroplethLayer::GipWindow, File::create(dir.join("choropleth_gip_window.csv"))?)?;
        }
        None => {
            let mut out = sink(None)?;
            out.write_all(report.to_json()?.as_bytes())?;
            out.flush()?;
        }
    }
    let degenerate = report.degenerate_cells();
    if degenerate > 0 {
        eprintln!("latecount: {degenerate} cell(s) with a degenerate distance law");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_geo(path: &Path, min_population: u64) -> Result<latecount::geodata::Geodata, Error> {
    load_settlements(io::BufReader::new(File::open(path)?), LoadOptions { min_population })
}

fn sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let geodata = load_geo(&args.settlements, args.min_population)?;
    let base = ModelSpec { c: args.c, ..ModelSpec::linear(0.0) };
    let rows = run_sweep(&geodata, &args.unit, args.nvc, args.placement, &args.form, &base)?;
    emit_sweep(&rows, sink(args.out.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

fn fair_win(args: FairWinArgs) -> Result<ExitCode, Error> {
    let lp = match (args.v_h, args.v_n, args.shares, args.ballots) {
        (Some(h), Some(n), _, _) => fair_win_probability(h, n)?,
        (_, _, Some(s), Some(b)) if s.len() == 2 => fair_win_probability_shares(s[0], s[1], b)?,
        _ => return Err(Error::Config("give --v-h and --v-n, or --shares and --ballots".into())),
    };
    println!("{lp}");
    Ok(ExitCode::SUCCESS)
}

fn replicates(args: ReplicateArgs) -> Result<ExitCode, Error> {
    let mut config = RunConfig::default();
    apply_plan(&mut config, &args.plan);
    let geodata = load_geo(&args.settlements, 0)?;
    let dist = unit_distribution(&geodata, &args.unit, args.nvc, args.placement)?;
    let rows = replicate_diagnostics(&dist, &config.plan)?;
    emit_replicates(&rows, sink(args.out.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

fn ratios(args: RatioArgs) -> Result<ExitCode, Error> {
    let mut config = base_config(args.config.as_deref())?;
    if args.settlements.is_some() {
        config.settlements_path = args.settlements;
    }
    if args.tallies.is_some() {
        config.tallies_path = args.tallies;
    }
    apply_plan(&mut config, &args.plan);
    let (geodata, tallies) = load_inputs(&config)?;
    let spec = ModelSpec::new(args.form);
    let sample = unit_ratios(&geodata, &tallies, &args.unit, args.nvc, &spec, &config)?
        .ok_or(Error::Degenerate("no usable share points in this unit"))?;
    emit_ratios(&sample, sink(args.out.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::FairWin(a) => fair_win(a),
        Command::Replicates(a) => replicates(a),
        Command::Ratios(a) => ratios(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("latecount: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Data => 1,
                ErrorClass::Config => 2,
                ErrorClass::Numeric => 3,
            })
        }
    }
}
