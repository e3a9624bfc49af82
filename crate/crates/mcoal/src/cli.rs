//! Command-line front end.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mcoal_core::bfw::{build_walk, excursion_lengths, explore};
use mcoal_core::limit::{default_horizon, limit_excursions, reflect, simulate_levy, ParamTriple, DEFAULT_C_MIN};
use mcoal_core::scaling::{check_hypotheses, choose_m, ScalingSequence};
use mcoal_core::uribe::{build_diagram, mass_process, run_coalescent};
use mcoal_core::{draw_clocks, simulate_direct, stream_rng, ClockFamily, MassVector};
use serde::Serialize;

use crate::checks::{convergence_test, partition_law_equality};
use crate::io::{
    one_based, one_based_blocks, open_output, parse_list, read_numbers, write_csv, write_json, ComponentRow,
    DiagramRow, EventRow, ExcursionRow, PathRow,
};
use crate::suite::{run_suite, ALPHA};

const CSV_HELP: &str = "\
CSV columns (block indices are 1-based, lists are ';'-joined):
  direct   time,left,right
  bfw      component_index,start,end,length,members
  uribe    line_id,block,intercept,slope,stop_time,target
  limit    start,end,length          (--dump-path: s,W,B)
  compare  name,statistic,p_value,n_samples,alpha,pass
  scaling  n,t,functional,ks_stat,p_value,n_samples
JSON documents carry a schema_version field.";

#[derive(Debug, Parser)]
#[command(name = "mcoal", version, about = "Multiplicative coalescent constructions and checks", after_help = CSV_HELP)]
pub struct Cli {
    /// Worker threads for replications (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Event-driven simulation up to a horizon.
    Direct(DirectArgs),
    /// Breadth-first walk at one q.
    Bfw(BfwArgs),
    /// Uribe's diagram and the coalescent read off from it.
    Uribe(UribeArgs),
    /// Reflected limit path and its excursions.
    Limit(LimitArgs),
    /// Partition law of direct, bfw and uribe compared pairwise.
    Compare(CompareArgs),
    /// Scaling hypotheses and finite-vs-limit convergence.
    Scaling(ScalingArgs),
    /// Run the acceptance criteria.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "MCOAL_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MassArgs {
    /// Comma-separated masses, e.g. 1.1,0.8,0.5.
    #[arg(long)]
    pub masses: Option<String>,
    /// File with masses separated by whitespace or commas.
    #[arg(long)]
    pub masses_file: Option<PathBuf>,
}

impl MassArgs {
    /// Raw values in input order (block `i` is the `i`-th value).
    fn values(&self) -> anyhow::Result<Vec<f64>> {
        match (&self.masses, &self.masses_file) {
            (Some(s), _) => Ok(parse_list(s)?),
            (_, Some(p)) => Ok(read_numbers(p)?),
            _ => bail!("one of --masses or --masses-file is required"),
        }
    }

    /// Masses must be given in non-increasing order.
    fn load(&self) -> anyhow::Result<MassVector> {
        Ok(MassVector::new(self.values()?)?)
    }
}

#[derive(Debug, Args)]
pub struct DirectArgs {
    #[command(flatten)]
    pub masses: MassArgs,
    #[arg(long)]
    pub horizon: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BfwArgs {
    #[command(flatten)]
    pub masses: MassArgs,
    #[arg(long)]
    pub q: f64,
    /// Comma-separated clock values in block order; skips drawing clocks.
    #[arg(long)]
    pub xi: Option<String>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct UribeArgs {
    #[command(flatten)]
    pub masses: MassArgs,
    /// Report classes and masses at this time.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub xi: Option<String>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Comma-separated non-increasing jump sizes.
    #[arg(long)]
    pub c: Option<String>,
    /// Drop jump sizes below this value.
    #[arg(long, default_value_t = DEFAULT_C_MIN)]
    pub c_min: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub grid_step: f64,
    /// Defaults to a horizon where the drift dominates.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub min_length: f64,
    /// Also write the sampled path (s, W, B) as CSV to this file.
    #[arg(long)]
    pub dump_path: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub masses: MassArgs,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Sequence {
    Standard,
    Distinguished,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = Sequence::Standard)]
    pub sequence: Sequence,
    /// Jump sizes of the distinguished blocks.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Time at which value and running minimum are compared.
    #[arg(long, default_value_t = 1.0)]
    pub at: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Run only these criteria (repeatable).
    #[arg(long = "criterion")]
    pub criteria: Vec<u32>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Usage = 1,
    SuiteFailed = 2,
}

fn clocks_for(x: &MassVector, xi: &Option<String>, seed: u64) -> anyhow::Result<ClockFamily> {
    match xi {
        Some(s) => Ok(ClockFamily::from_values(x, parse_list(s)?)?),
        None => Ok(draw_clocks(x, &mut stream_rng(seed, 0))?),
    }
}

fn emit<T: Serialize, R: Serialize>(out: &OutputArgs, json: &T, rows: &[R]) -> anyhow::Result<()> {
    let mut w = open_output(out.output.as_deref(), out.force)?;
    match out.format {
        Format::Json => write_json(&mut *w, json)?,
        Format::Csv => write_csv(&mut *w, rows)?,
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("--{name} must be positive, got {v}");
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<Status> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    match cli.command {
        Command::Direct(a) => direct(a),
        Command::Bfw(a) => bfw(a),
        Command::Uribe(a) => uribe(a),
        Command::Limit(a) => limit(a),
        Command::Compare(a) => compare(a),
        Command::Scaling(a) => scaling(a),
        Command::Suite(a) => suite(a),
    }
}

fn direct(a: DirectArgs) -> anyhow::Result<Status> {
    let x = a.masses.load()?;
    if a.horizon.is_nan() || a.horizon < 0.0 {
        bail!("--horizon must be nonnegative");
    }
    let traj = simulate_direct(&x, a.horizon, &mut stream_rng(a.seed.seed, 0))?;
    let rows: Vec<EventRow> = traj
        .events
        .iter()
        .map(|e| EventRow { time: e.time, left: one_based(&e.left), right: one_based(&e.right) })
        .collect();
    let fin = traj.final_partition();
    #[derive(Serialize)]
    struct Event {
        t: f64,
        left: Vec<usize>,
        right: Vec<usize>,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        seed: u64,
        horizon: f64,
        initial: &'a [f64],
        events: Vec<Event>,
        partition: String,
        blocks: Vec<Vec<usize>>,
    }
    let plus_one = |b: &[usize]| b.iter().map(|i| i + 1).collect();
    let json = Out {
        seed: a.seed.seed,
        horizon: a.horizon,
        initial: x.as_slice(),
        events: traj.events.iter().map(|e| Event { t: e.time, left: plus_one(&e.left), right: plus_one(&e.right) }).collect(),
        partition: fin.to_string(),
        blocks: one_based_blocks(fin.blocks()),
    };
    emit(&a.out, &json, &rows)?;
    Ok(Status::Ok)
}

fn bfw(a: BfwArgs) -> anyhow::Result<Status> {
    let x = a.masses.load()?;
    positive("q", a.q)?;
    let clocks = clocks_for(&x, &a.xi, a.seed.seed)?;
    let expl = explore(&build_walk(&x, &clocks, a.q)?);
    let partition = expl.partition(x.len());
    let rows: Vec<ComponentRow> = expl
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| ComponentRow {
            component_index: i + 1,
            start: c.start,
            end: c.end,
            length: c.mass,
            members: one_based(&c.members),
        })
        .collect();
    #[derive(Serialize)]
    struct Out<'a> {
        q: f64,
        partition: String,
        blocks: Vec<Vec<usize>>,
        lengths: Vec<f64>,
        components: &'a [ComponentRow],
    }
    let json = Out {
        q: a.q,
        partition: partition.to_string(),
        blocks: one_based_blocks(partition.blocks()),
        lengths: excursion_lengths(&expl).into_vec(),
        components: &rows,
    };
    emit(&a.out, &json, &rows)?;
    Ok(Status::Ok)
}

fn uribe(a: UribeArgs) -> anyhow::Result<Status> {
    let x = a.masses.load()?;
    let clocks = clocks_for(&x, &a.xi, a.seed.seed)?;
    let d = build_diagram(&x, &clocks)?;
    let uc = run_coalescent(&d);
    let rows: Vec<DiagramRow> = (0..d.len())
        .map(|k| DiagramRow {
            line_id: k + 1,
            block: d.order[k] + 1,
            intercept: d.intercepts[k],
            slope: d.slopes[k] + 0.0,
            stop_time: (k > 0).then(|| d.stop_times[k]),
            target: (k > 0).then(|| d.targets[k] + 1),
        })
        .collect();
    let events: Vec<EventRow> = uc
        .merges
        .iter()
        .map(|e| EventRow { time: e.time, left: one_based(&e.left), right: one_based(&e.right) })
        .collect();
    #[derive(Serialize)]
    struct AtTime {
        s: f64,
        partition: String,
        masses: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        lines: &'a [DiagramRow],
        events: Vec<EventRow>,
        first_event_time: f64,
        connectivity_time: f64,
        at: Option<AtTime>,
    }
    let at = match a.s {
        Some(s) => {
            Some(AtTime { s, partition: uc.partition_at(s)?.to_string(), masses: mass_process(&uc, s)?.into_vec() })
        }
        None => None,
    };
    let json = Out {
        lines: &rows,
        events,
        first_event_time: uc.first_event_time(),
        connectivity_time: uc.connectivity_time(),
        at,
    };
    emit(&a.out, &json, &rows)?;
    Ok(Status::Ok)
}

fn limit(a: LimitArgs) -> anyhow::Result<Status> {
    let c = match &a.c {
        Some(s) => parse_list(s)?,
        None => Vec::new(),
    };
    let params = ParamTriple::with_cutoff(a.kappa, a.tau, c, a.c_min)?;
    positive("grid-step", a.grid_step)?;
    let horizon = match a.horizon {
        Some(h) => {
            positive("horizon", h)?;
            h
        }
        None => default_horizon(&params, a.t)?,
    };
    if params.is_degenerate() {
        eprintln!("warning: kappa = 0 with no jumps gives a deterministic path");
    }
    if params.discarded_entries() > 0 {
        eprintln!(
            "warning: dropped {} jump sizes below {} (sum of cubes {:e})",
            params.discarded_entries(),
            a.c_min,
            params.discarded_cube_tail()
        );
    }
    let path = simulate_levy(&params, a.t, a.grid_step, horizon, &mut stream_rng(a.seed.seed, 0))?;
    let rp = reflect(&path);
    let ex = limit_excursions(&rp, a.min_length);
    if let Some(len) = ex.open_at_horizon {
        eprintln!("warning: excursion still open at horizon {horizon} (running length {len}) was left out");
    }
    if let Some(p) = &a.dump_path {
        let rows: Vec<PathRow> =
            rp.samples.iter().zip(&rp.reflected).map(|(s, b)| PathRow { s: s.s, w: s.value, b: *b }).collect();
        let mut w = open_output(Some(p), a.out.force)?;
        write_csv(&mut *w, &rows)?;
    }
    let rows: Vec<ExcursionRow> =
        ex.intervals.iter().map(|e| ExcursionRow { start: e.start, end: e.end, length: e.length() }).collect();
    #[derive(Serialize)]
    struct Out<'a> {
        seed: u64,
        kappa: f64,
        tau: f64,
        t: f64,
        c: &'a [f64],
        grid_step: f64,
        horizon: f64,
        lengths: Vec<f64>,
        excursions: &'a [ExcursionRow],
        open_at_horizon: Option<f64>,
        jump_started_excursions: usize,
    }
    let json = Out {
        seed: a.seed.seed,
        kappa: a.kappa,
        tau: a.tau,
        t: a.t,
        c: params.c(),
        grid_step: a.grid_step,
        horizon,
        lengths: ex.lengths.as_slice().to_vec(),
        excursions: &rows,
        open_at_horizon: ex.open_at_horizon,
        jump_started_excursions: ex.jump_started,
    };
    emit(&a.out, &json, &rows)?;
    Ok(Status::Ok)
}

fn compare(a: CompareArgs) -> anyhow::Result<Status> {
    let x = a.masses.load()?;
    if a.q.is_nan() || a.q < 0.0 {
        bail!("--q must be nonnegative");
    }
    if a.samples == 0 {
        bail!("--samples must be positive");
    }
    let r = partition_law_equality(&x, a.q, a.samples, a.seed.seed, 0, a.alpha)?;
    emit(&a.out, &r, &r.reports)?;
    Ok(Status::Ok)
}

fn scaling(a: ScalingArgs) -> anyhow::Result<Status> {
    let seq = match a.sequence {
        Sequence::Standard => ScalingSequence::Standard,
        Sequence::Distinguished => {
            let c = parse_list(a.c.as_deref().unwrap_or(""))?;
            if c.is_empty() {
                bail!("--sequence distinguished needs --c");
            }
            ScalingSequence::Distinguished { c }
        }
    };
    if a.n < 2 || a.samples < 2 {
        bail!("--n and --samples must be at least 2");
    }
    positive("grid-step", a.grid_step)?;
    let (kappa, c) = seq.target();
    let n_list: Vec<usize> = [a.n / 100, a.n / 10, a.n].into_iter().filter(|&n| n >= 1).collect::<Vec<_>>();
    let mut n_list = n_list;
    n_list.dedup();
    let report = check_hypotheses(&seq, &n_list, a.tolerance)?;
    #[derive(Serialize)]
    struct Row {
        n: usize,
        cubic_residual: f64,
        block_residual: f64,
        sigma2: f64,
    }
    #[derive(Serialize)]
    struct Hypotheses {
        rows: Vec<Row>,
        tolerance: f64,
        pass: bool,
    }
    let hypotheses = Hypotheses {
        rows: report
            .rows
            .iter()
            .map(|r| Row { n: r.n, cubic_residual: r.cubic, block_residual: r.blocks, sigma2: r.sigma2 })
            .collect(),
        tolerance: report.tolerance,
        pass: report.pass,
    };
    let x = seq.masses(a.n)?;
    let m = choose_m(&x, &c, a.tolerance);
    let params = ParamTriple::new(kappa, 0.0, c)?;
    let rows = convergence_test(&x, &params, a.t, a.at, a.samples, a.grid_step, a.seed.seed, 0, ALPHA)?;
    #[derive(Serialize)]
    struct Out<'a, H: Serialize, R: Serialize> {
        n: usize,
        m: usize,
        hypotheses: &'a H,
        convergence: &'a [R],
    }
    emit(&a.out, &Out { n: a.n, m, hypotheses: &hypotheses, convergence: &rows }, &rows)?;
    Ok(Status::Ok)
}

fn suite(a: SuiteArgs) -> anyhow::Result<Status> {
    if let Some(bad) = a.criteria.iter().find(|&&c| c == 0 || c > crate::suite::CRITERIA) {
        bail!("no criterion {bad}");
    }
    let summary = run_suite(a.seed.seed, &a.criteria);
    for o in &summary.criteria {
        eprintln!("{o}");
    }
    let rows: Vec<SuiteRow> = summary
        .criteria
        .iter()
        .map(|o| SuiteRow { id: o.id, title: o.title, pass: o.pass, seconds: o.seconds, detail: o.detail.clone() })
        .collect();
    emit(&a.out, &summary, &rows)?;
    Ok(if summary.failed == 0 { Status::Ok } else { Status::SuiteFailed })
}

#[derive(Serialize)]
struct SuiteRow {
    id: u32,
    title: &'static str,
    pass: bool,
    seconds: f64,
    detail: String,
}
