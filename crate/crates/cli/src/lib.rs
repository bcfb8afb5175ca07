//! Command-line front end: flag and config-file parsing, dispatch, output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use photocalc::estimator::{
    estimate_exact, estimate_functions, estimate_selected, estimates_table, make_grid, sample_outcomes, sweep,
    sweep_table, SweepMode, GENERATOR_ID,
};
use photocalc::fock_oracle::{
    adaptive_n_max, analytic_heralded_state, apply_beam_splitter, build_two_mode_input, compare_marginals, fidelity,
    heralded_state, mode2_marginal, DEFAULT_N_MAX,
};
use photocalc::output::{fmt17, Cell, Metadata, Table};
use photocalc::{
    analytic_distribution, invert_scheme, reduce_scheme, OutcomeDistribution, PrecisionPolicy, ReducedScheme,
    SplitterSpec, SqueezeSpec,
};

pub const DEFAULT_SHOTS: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] photocalc::Error),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) | CliError::Io { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Domain(e) => e.name(),
            CliError::Io { .. } => "IoError",
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "photocalc",
    version,
    about = "Squeezed-vacuum photon subtraction on a beam splitter: distributions, heralded states, function estimates",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: CommandKind,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Convert between squeezing and splitter parameterizations
    Convert,
    /// Outcome probabilities in the measured mode
    Distribution,
    /// Heralded mode-1 states from the Fock oracle, compared with the closed forms
    Herald,
    /// Sample outcomes and recover the analytic functions
    Estimate,
    /// Target functions over a grid of y1 at fixed B
    Sweep,
    /// Oracle-equivalence and normalization checks on the standard grid
    Verify,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Convert => "convert",
            CommandKind::Distribution => "distribution",
            CommandKind::Herald => "herald",
            CommandKind::Estimate => "estimate",
            CommandKind::Sweep => "sweep",
            CommandKind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum SourceArg {
    #[default]
    Analytic,
    Oracle,
}

impl FromStr for SourceArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <SourceArg as ValueEnum>::from_str(s, true)
    }
}

/// Every flag; all are accepted after the subcommand name.
#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct Options {
    /// Squeezing amplitude s
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Series parameter y = tanh(s)/2
    #[arg(long, global = true)]
    pub y: Option<f64>,
    /// Squeezing in decibels
    #[arg(long, global = true)]
    pub db: Option<f64>,
    /// Mean photon number sinh²(s)
    #[arg(long = "mean-n", global = true)]
    pub mean_n: Option<f64>,
    /// Intensity transmittance t²
    #[arg(long, global = true)]
    pub t2: Option<f64>,
    /// Beam-splitter parameter (1 - t²)/t²
    #[arg(long = "B", global = true)]
    pub b: Option<f64>,
    /// Reduced argument t²·y (convert only, with --B)
    #[arg(long, global = true)]
    pub y1: Option<f64>,
    /// Photons entering the second port (0, 1 or 2)
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Outcome or comma-separated outcomes
    #[arg(long, global = true)]
    pub l: Option<String>,
    /// Last outcome listed in a distribution
    #[arg(long = "l-max", global = true)]
    pub l_max: Option<u32>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Working mantissa bits
    #[arg(long = "precision-bits", global = true)]
    pub precision_bits: Option<usize>,
    /// Absolute bound on discarded series tails
    #[arg(long = "tail-eps", global = true)]
    pub tail_eps: Option<f64>,
    /// Oracle truncation (total photon number)
    #[arg(long, global = true)]
    pub nmax: Option<u32>,
    /// y1 grid as start:stop:step
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (standard output when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Distribution that estimate/distribution draw from
    #[arg(long, global = true, value_enum)]
    pub source: Option<SourceArg>,
    /// herald: emit the amplitudes instead of the summary
    #[arg(long = "dump-state", global = true)]
    pub dump_state: bool,
    /// estimate: replace frequencies by exact probabilities
    #[arg(long, global = true)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: CommandKind,
    pub options: Options,
    pub format: Format,
    pub output: Option<PathBuf>,
}

const CONFIG_KEYS: &[&str] = &[
    "s", "y", "db", "mean-n", "t2", "B", "y1", "k", "l", "l-max", "shots", "seed", "precision-bits", "tail-eps",
    "nmax", "grid", "format", "out", "source", "dump-state", "exact",
];

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("--config line {}: expected key = value", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let key = if key == "b" { "B".to_string() } else { key };
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("--config line {}: unknown key '{key}'", n + 1)));
        }
        map.insert(key, value.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

fn fill<T: FromStr>(slot: &mut Option<T>, cfg: &BTreeMap<String, String>, key: &str) -> Result<(), CliError>
where
    T::Err: Display,
{
    if slot.is_none() {
        if let Some(v) = cfg.get(key) {
            *slot = Some(
                v.parse()
                    .map_err(|e| usage(format!("--config key '{key}': invalid value '{v}': {e}")))?,
            );
        }
    }
    Ok(())
}

fn fill_flag(slot: &mut bool, cfg: &BTreeMap<String, String>, key: &str) -> Result<(), CliError> {
    let mut v: Option<bool> = None;
    fill(&mut v, cfg, key)?;
    *slot |= v.unwrap_or(false);
    Ok(())
}

/// Command-line values win; a squeeze or splitter choice on the command line
/// replaces the config file's choice for that group entirely.
fn merge(mut o: Options, mut cfg: BTreeMap<String, String>) -> Result<Options, CliError> {
    if o.s.is_some() || o.y.is_some() || o.db.is_some() || o.mean_n.is_some() {
        for key in ["s", "y", "db", "mean-n"] {
            cfg.remove(key);
        }
    }
    if o.t2.is_some() || o.b.is_some() {
        cfg.remove("t2");
        cfg.remove("B");
    }
    fill(&mut o.s, &cfg, "s")?;
    fill(&mut o.y, &cfg, "y")?;
    fill(&mut o.db, &cfg, "db")?;
    fill(&mut o.mean_n, &cfg, "mean-n")?;
    fill(&mut o.t2, &cfg, "t2")?;
    fill(&mut o.b, &cfg, "B")?;
    fill(&mut o.y1, &cfg, "y1")?;
    fill(&mut o.k, &cfg, "k")?;
    fill(&mut o.l, &cfg, "l")?;
    fill(&mut o.l_max, &cfg, "l-max")?;
    fill(&mut o.shots, &cfg, "shots")?;
    fill(&mut o.seed, &cfg, "seed")?;
    fill(&mut o.precision_bits, &cfg, "precision-bits")?;
    fill(&mut o.tail_eps, &cfg, "tail-eps")?;
    fill(&mut o.nmax, &cfg, "nmax")?;
    fill(&mut o.grid, &cfg, "grid")?;
    fill(&mut o.format, &cfg, "format")?;
    fill(&mut o.out, &cfg, "out")?;
    fill(&mut o.source, &cfg, "source")?;
    fill_flag(&mut o.dump_state, &cfg, "dump-state")?;
    fill_flag(&mut o.exact, &cfg, "exact")?;
    Ok(o)
}

fn squeeze_flags(o: &Options) -> Vec<&'static str> {
    [("--s", o.s), ("--y", o.y), ("--db", o.db), ("--mean-n", o.mean_n)]
        .into_iter()
        .filter_map(|(n, v)| v.map(|_| n))
        .collect()
}

fn validate(command: CommandKind, o: &Options) -> Result<(), CliError> {
    let sq = squeeze_flags(o);
    if sq.len() > 1 {
        return Err(usage(format!(
            "{} are mutually exclusive: give only one of --s, --y, --db, --mean-n",
            sq.join(" and ")
        )));
    }
    if o.t2.is_some() && o.b.is_some() {
        return Err(usage("--t2 and --B are mutually exclusive"));
    }
    let need_squeeze = || {
        if sq.is_empty() {
            Err(usage(format!("{} needs one of --s, --y, --db, --mean-n", command.as_str())))
        } else {
            Ok(())
        }
    };
    let need_splitter = || {
        if o.t2.is_none() && o.b.is_none() {
            Err(usage(format!("{} needs --t2 or --B", command.as_str())))
        } else {
            Ok(())
        }
    };
    match command {
        CommandKind::Convert => {
            if o.y1.is_some() {
                if !sq.is_empty() {
                    return Err(usage("--y1 replaces the squeezing flags in convert"));
                }
                need_splitter()?;
            } else {
                need_squeeze()?;
            }
        }
        CommandKind::Distribution | CommandKind::Herald | CommandKind::Estimate => {
            need_squeeze()?;
            need_splitter()?;
        }
        CommandKind::Sweep => {
            need_splitter()?;
            if o.grid.is_none() {
                return Err(usage("sweep needs --grid start:stop:step"));
            }
            if o.l.is_none() {
                return Err(usage("sweep needs --l"));
            }
        }
        CommandKind::Verify => {}
    }
    if let Some(l) = &o.l {
        parse_l_list(l)?;
    }
    if let Some(g) = &o.grid {
        parse_grid(g)?;
    }
    Ok(())
}

pub fn parse_l_list(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| usage(format!("--l: '{}' is not a non-negative integer", p.trim())))
        })
        .collect()
}

pub fn parse_grid(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage(format!("--grid: expected start:stop:step, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    Ok((v[0], v[1], v[2]))
}

/// Parses `argv` (program name first) into a validated invocation, reading
/// the config file if one is named.
pub fn parse_invocation<I, T>(argv: I) -> Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv).map(|cli| Invocation {
        command: cli.command,
        format: cli.options.format.unwrap_or_default(),
        output: cli.options.out.clone(),
        options: cli.options,
    })
}

/// Applies the config file and cross-flag rules to a parsed invocation.
pub fn resolve(inv: Invocation) -> Result<Invocation, CliError> {
    let options = match &inv.options.config {
        Some(path) => merge(inv.options.clone(), read_config(path)?)?,
        None => inv.options,
    };
    validate(inv.command, &options)?;
    Ok(Invocation {
        command: inv.command,
        format: options.format.unwrap_or_default(),
        output: options.out.clone(),
        options,
    })
}

/// Rendered artifact plus whether a verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub text: String,
    pub verification_failed: bool,
}

struct Context<'a> {
    inv: &'a Invocation,
    policy: PrecisionPolicy,
    meta: Metadata,
}

impl<'a> Context<'a> {
    fn new(inv: &'a Invocation) -> Result<Self, CliError> {
        let o = &inv.options;
        let defaults = PrecisionPolicy::default();
        let policy = PrecisionPolicy::new(
            o.precision_bits.unwrap_or(defaults.mantissa_bits),
            o.tail_eps.unwrap_or(defaults.tail_epsilon),
            defaults.max_terms,
        )?;
        let mut meta = Metadata::default();
        meta.push("command", inv.command.as_str());
        meta.push("version", env!("CARGO_PKG_VERSION"));
        let floats = [
            ("s", o.s),
            ("y", o.y),
            ("db", o.db),
            ("mean-n", o.mean_n),
            ("t2", o.t2),
            ("B", o.b),
            ("y1", o.y1),
        ];
        for (key, v) in floats {
            if let Some(v) = v {
                meta.push(key, fmt17(v));
            }
        }
        if let Some(l) = &o.l {
            meta.push("l", l);
        }
        for (key, v) in [("l-max", o.l_max.map(u64::from)), ("nmax", o.nmax.map(u64::from))] {
            if let Some(v) = v {
                meta.push(key, v);
            }
        }
        if let Some(g) = &o.grid {
            meta.push("grid", g);
        }
        meta.push("precision-bits", policy.mantissa_bits);
        meta.push("tail-eps", fmt17(policy.tail_epsilon));
        meta.push("max-terms", policy.max_terms);
        meta.push("generator", GENERATOR_ID);
        Ok(Self { inv, policy, meta })
    }

    fn opts(&self) -> &Options {
        &self.inv.options
    }

    fn k(&mut self) -> u32 {
        let k = self.opts().k.unwrap_or(0);
        self.meta.push("k", k);
        k
    }

    fn squeeze(&self) -> Result<SqueezeSpec, CliError> {
        let o = self.opts();
        Ok(match (o.s, o.y, o.db, o.mean_n) {
            (Some(v), ..) => SqueezeSpec::from_amplitude(v)?,
            (_, Some(v), ..) => SqueezeSpec::from_series_parameter(v)?,
            (_, _, Some(v), _) => SqueezeSpec::from_decibels(v)?,
            (.., Some(v)) => SqueezeSpec::from_mean_photons(v)?,
            _ => return Err(usage("missing one of --s, --y, --db, --mean-n")),
        })
    }

    fn splitter(&self) -> Result<SplitterSpec, CliError> {
        let o = self.opts();
        Ok(match (o.t2, o.b) {
            (Some(t2), _) => SplitterSpec::from_transmittance(t2)?,
            (_, Some(b)) => SplitterSpec::from_b(b)?,
            _ => return Err(usage("missing --t2 or --B")),
        })
    }

    fn ls(&self) -> Result<Option<Vec<u32>>, CliError> {
        self.opts().l.as_deref().map(parse_l_list).transpose()
    }

    fn n_max(&mut self) -> u32 {
        let n = self.opts().nmax.unwrap_or(DEFAULT_N_MAX);
        if self.opts().nmax.is_none() {
            self.meta.push("nmax", n);
        }
        n
    }

    fn source(&mut self) -> SourceArg {
        let s = self.opts().source.unwrap_or_default();
        self.meta.push("source", if s == SourceArg::Oracle { "oracle" } else { "analytic" });
        s
    }

    fn render(&self, mut table: Table) -> String {
        let mut meta = self.meta.clone();
        for (k, v) in &table.metadata.0 {
            if meta.get(k).is_none() {
                meta.push(k, v);
            }
        }
        table.metadata = meta;
        match self.inv.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        }
    }
}

fn quantity_table(rows: Vec<(&'static str, f64)>) -> Table {
    let mut t = Table::new(vec!["quantity", "value"]);
    for (q, v) in rows {
        t.push(vec![q.into(), v.into()]);
    }
    t
}

fn convert(ctx: &mut Context) -> Result<Table, CliError> {
    let (sq, bs) = if let Some(y1) = ctx.opts().y1 {
        let bs = ctx.splitter()?;
        invert_scheme(&ReducedScheme::new(y1, bs.b(), 0)?).map(|(sq, bs)| (sq, Some(bs)))?
    } else {
        let sq = ctx.squeeze()?;
        let bs = (ctx.opts().t2.is_some() || ctx.opts().b.is_some())
            .then(|| ctx.splitter())
            .transpose()?;
        (sq, bs)
    };
    let mut rows = vec![
        ("s", sq.amplitude()),
        ("y", sq.series_parameter()),
        ("S_dB", sq.decibels()),
        ("mean_n", sq.mean_photons()),
        ("cosh_s", sq.cosh_s()),
    ];
    if let Some(bs) = bs {
        let rs = reduce_scheme(&sq, &bs, 0)?;
        rows.extend([
            ("t", bs.t()),
            ("r", bs.r()),
            ("T", bs.transmittance()),
            ("R", bs.reflectance()),
            ("B", bs.b()),
            ("y1", rs.y1()),
        ]);
    }
    Ok(quantity_table(rows))
}

fn scheme(ctx: &mut Context) -> Result<(SqueezeSpec, SplitterSpec, ReducedScheme), CliError> {
    let k = ctx.k();
    let sq = ctx.squeeze()?;
    let bs = ctx.splitter()?;
    let rs = reduce_scheme(&sq, &bs, k)?;
    Ok((sq, bs, rs))
}

fn oracle_distribution(
    ctx: &mut Context,
    sq: &SqueezeSpec,
    bs: &SplitterSpec,
    k: u32,
) -> Result<OutcomeDistribution, CliError> {
    let n_max = ctx.n_max();
    let input = build_two_mode_input(sq, k, n_max, &ctx.policy)?;
    Ok(mode2_marginal(&apply_beam_splitter(&input, bs)))
}

fn distribution(ctx: &mut Context) -> Result<Table, CliError> {
    let (sq, bs, rs) = scheme(ctx)?;
    let dist = match ctx.source() {
        SourceArg::Analytic => analytic_distribution(rs.k(), &rs, &ctx.policy, ctx.opts().l_max)?,
        SourceArg::Oracle => {
            let mut d = oracle_distribution(ctx, &sq, &bs, rs.k())?;
            if let Some(cap) = ctx.opts().l_max {
                d.probs.truncate(cap as usize + 1);
            }
            d
        }
    };
    Ok(dist.to_table())
}

fn herald(ctx: &mut Context) -> Result<Table, CliError> {
    let (sq, bs, rs) = scheme(ctx)?;
    let n_max = ctx.n_max();
    let k = rs.k();
    let out = apply_beam_splitter(&build_two_mode_input(&sq, k, n_max, &ctx.policy)?, &bs);
    let marginal = mode2_marginal(&out);
    let explicit = ctx.ls()?;
    let ls = explicit.clone().unwrap_or_else(|| (0..=8.min(n_max)).collect());
    let mut summary = Table::new(vec!["l", "parity", "probability", "fidelity"]);
    let mut dump = Table::new(vec!["l", "n1", "oracle_amplitude", "analytic_amplitude"]);
    for l in ls {
        let o = match heralded_state(&out, l) {
            Ok(o) => o,
            // without explicit outcomes, impossible ones are just left out
            Err(photocalc::Error::ZeroProbabilityOutcome(_)) if explicit.is_none() => continue,
            Err(e) => return Err(e.into()),
        };
        let a = analytic_heralded_state(k, l, &rs, n_max, &ctx.policy)?;
        summary.push(vec![
            l.into(),
            o.parity.as_str().into(),
            marginal.probability(l).into(),
            fidelity(&o, &a)?.into(),
        ]);
        for (n1, (x, y)) in o.amplitudes_f64().into_iter().zip(a.amplitudes_f64()).enumerate() {
            if x != 0.0 || y != 0.0 {
                dump.push(vec![l.into(), (n1 as u32).into(), x.into(), y.into()]);
            }
        }
    }
    Ok(if ctx.opts().dump_state { dump } else { summary })
}

fn estimate(ctx: &mut Context) -> Result<Table, CliError> {
    let (sq, bs, rs) = scheme(ctx)?;
    let ls = ctx.ls()?;
    if ctx.opts().exact {
        ctx.meta.push("mode", "exact");
        let ls = match ls {
            Some(ls) => ls,
            None => {
                let d = analytic_distribution(rs.k(), &rs, &ctx.policy, ctx.opts().l_max)?;
                (0..=d.l_max()).collect()
            }
        };
        let est = estimate_exact(&rs, &ls, &ctx.policy)?;
        return Ok(estimates_table(&est, &rs, None));
    }
    let shots = ctx.opts().shots.unwrap_or(DEFAULT_SHOTS);
    let seed = ctx.opts().seed.unwrap_or(0);
    ctx.meta.push("shots", shots);
    ctx.meta.push("seed", seed);
    let dist = match ctx.source() {
        SourceArg::Analytic => analytic_distribution(rs.k(), &rs, &ctx.policy, ctx.opts().l_max)?,
        SourceArg::Oracle => oracle_distribution(ctx, &sq, &bs, rs.k())?,
    };
    let emp = sample_outcomes(&dist, shots, seed)?;
    let est = match ls {
        Some(ls) => estimate_selected(&emp, &rs, &ls, &ctx.policy, true)?,
        None => estimate_functions(&emp, &rs, &ctx.policy, true)?,
    };
    Ok(estimates_table(&est, &rs, Some(&emp)))
}

fn sweep_command(ctx: &mut Context) -> Result<Table, CliError> {
    let k = ctx.k();
    let b = ctx.splitter()?.b();
    let (start, stop, step) = parse_grid(ctx.opts().grid.as_deref().unwrap_or_default())?;
    let grid = make_grid(start, stop, step)?;
    let ls = ctx.ls()?.unwrap_or_default();
    let mode = match ctx.opts().shots {
        Some(shots) => {
            let seed = ctx.opts().seed.unwrap_or(0);
            ctx.meta.push("shots", shots);
            ctx.meta.push("seed", seed);
            SweepMode::Sampled { shots, seed }
        }
        None => {
            ctx.meta.push("mode", "exact");
            SweepMode::Exact
        }
    };
    let rows = sweep(k, b, &grid, &ls, mode, &ctx.policy)?;
    Ok(sweep_table(&rows, k, b))
}

/// Grid of `(y1, B)` points the `verify` command covers.
pub const VERIFY_Y1: [f64; 5] = [0.0, 0.05, 0.1, 0.2, 0.3];
pub const VERIFY_B: [f64; 4] = [0.0, 0.25, 1.0, 4.0];

fn verify(ctx: &mut Context) -> Result<(Table, bool), CliError> {
    let pinned = ctx.opts().nmax;
    if pinned.is_none() {
        ctx.meta.push("nmax", "adaptive (input tail <= 1e-30, at least 60)");
    }
    let mut t = Table::new(vec!["k", "y1", "B", "check", "passed", "detail"]);
    let mut failed = false;
    for y1 in VERIFY_Y1 {
        for b in VERIFY_B {
            if (1.0 + b) * y1 >= 0.5 {
                continue;
            }
            for k in 0..3u32 {
                let rs = ReducedScheme::new(y1, b, k)?;
                let dist = analytic_distribution(k, &rs, &ctx.policy, None)?;
                let total = dist.listed_mass() + dist.tail_mass;
                let norm_ok = (total - 1.0).abs() <= 1e-12;
                t.push(vec![
                    k.into(),
                    y1.into(),
                    b.into(),
                    "normalization".into(),
                    norm_ok.into(),
                    format!("sum {}", fmt17(total)).as_str().into(),
                ]);
                let n_max = pinned.unwrap_or_else(|| adaptive_n_max(rs.y(), k, 1e-30).max(DEFAULT_N_MAX));
                let (oracle_ok, detail) = match photocalc::fock_oracle::oracle_output(&rs, n_max, &ctx.policy) {
                    Ok(out) => {
                        let oracle = mode2_marginal(&out);
                        let cap = dist.l_max().max(n_max);
                        let analytic = analytic_distribution(k, &rs, &ctx.policy, Some(cap))?;
                        let bad = compare_marginals(&analytic, &oracle);
                        match bad.first() {
                            None => (true, format!("n_max {n_max}, {} outcomes", analytic.probs.len())),
                            Some(m) => (
                                false,
                                format!(
                                    "n_max {n_max}, {} outcomes off, first l={} analytic {} oracle {}",
                                    bad.len(),
                                    m.l,
                                    fmt17(m.analytic),
                                    fmt17(m.oracle)
                                ),
                            ),
                        }
                    }
                    Err(e) => (false, format!("n_max {n_max}: {}", e.name())),
                };
                failed |= !(norm_ok && oracle_ok);
                t.push(vec![
                    k.into(),
                    y1.into(),
                    b.into(),
                    "oracle_equivalence".into(),
                    oracle_ok.into(),
                    Cell::Text(detail),
                ]);
            }
        }
    }
    Ok((t, failed))
}

/// Runs a resolved invocation and renders its artifact.
pub fn execute_command(inv: &Invocation) -> Result<Emitted, CliError> {
    let mut ctx = Context::new(inv)?;
    let (table, verification_failed) = match inv.command {
        CommandKind::Convert => (convert(&mut ctx)?, false),
        CommandKind::Distribution => (distribution(&mut ctx)?, false),
        CommandKind::Herald => (herald(&mut ctx)?, false),
        CommandKind::Estimate => (estimate(&mut ctx)?, false),
        CommandKind::Sweep => (sweep_command(&mut ctx)?, false),
        CommandKind::Verify => verify(&mut ctx)?,
    };
    Ok(Emitted {
        text: ctx.render(table),
        verification_failed,
    })
}

fn emit(inv: &Invocation, text: &str) -> Result<(), CliError> {
    match &inv.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Full pipeline; returns the process exit status (0 ok, 1 usage, 2 domain,
/// 3 verification failure).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_invocation(argv) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = resolve(inv).and_then(|inv| {
        let emitted = execute_command(&inv)?;
        emit(&inv, &emitted.text)?;
        Ok(emitted.verification_failed)
    });
    match result {
        Ok(false) => 0,
        Ok(true) => {
            eprintln!("VerificationFailure: at least one check failed");
            3
        }
        Err(e) => {
            eprintln!("{}: {e}", e.name());
            e.exit_code()
        }
    }
}
