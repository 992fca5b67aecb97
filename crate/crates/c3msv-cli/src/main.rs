//! Command-line interface over the c3msv library. Every subcommand prints a
//! table (CSV or JSON) with %.12g float formatting, so identical
//! configurations produce byte-identical output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure or route
//! disagreement, 4 quadrature non-convergence (partial rows are flushed).

mod fmt;

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use c3msv::{
    build_c3msv_fock, c3msv_covariance, gaussian_steering, moment_fock, moment_generating,
    negativity, negativity_oracle, render_table, residual_gaussian_steering, run_all,
    run_criterion, steering_closed_form, steering_vs_time, subtract_and_reduce,
    sudden_death_time, wigner_c3msv, wigner_closed_form, ChannelParams, DeficitFamily, Error,
    NegativityEstimate, OracleGrid, QuadratureSpec, SqueezingConfig, SteeringCase,
    SubtractionScheme,
};

use fmt::{g12, table_to_csv, table_to_json, write_output, Cell, JVal, Table};

const EXIT_CONFIG: i32 = 2;
const EXIT_NUMERIC: i32 = 3;
const EXIT_NONCONVERGENCE: i32 = 4;

const ROUTE_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "c3msv",
    version,
    about = "Coupled three-mode squeezed vacuum: steering, decoherence, and Wigner negativity"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bipartite steering for the twelve partition cases, by both routes.
    Steering(SteeringArgs),
    /// Residual tripartite steering.
    Rgs(RgsArgs),
    /// Steering under independent thermal channels.
    Decoherence(DecoherenceArgs),
    /// Wigner negativity of photon-subtracted reductions.
    Negativity(NegativityArgs),
    /// Wigner function values on a phase-space grid.
    Wigner(WignerArgs),
    /// Normally ordered moments by two independent routes.
    Moments(MomentsArgs),
    /// Run the built-in acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Total mean photon number of the three-mode state.
    #[arg(long, conflicts_with = "r")]
    nbar: Option<f64>,
    /// Squeezing parameter, an alternative to --nbar.
    #[arg(long)]
    r: Option<f64>,
    /// Splitting angle in radians.
    #[arg(long, conflicts_with_all = ["phi_frac", "phi_grid"])]
    phi: Option<f64>,
    /// Splitting angle as a fraction k/n of pi, e.g. 1/8.
    #[arg(long, conflicts_with = "phi_grid")]
    phi_frac: Option<String>,
    /// Splitting-angle grid start:stop:count in radians, inclusive.
    #[arg(long)]
    phi_grid: Option<String>,
    /// Pump phase of the first squeezer, in [0, 2*pi).
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,
    /// Pump phase of the second squeezer, in [0, 2*pi).
    #[arg(long, default_value_t = 0.0)]
    theta2: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// JSON file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cross-check against the Fock-space oracle where supported.
    #[arg(long)]
    oracle: bool,
    /// Fock-space cutoff for oracle and moment routes.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Tolerance override (quadrature or root finding, per subcommand).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SteeringArgs {
    #[command(flatten)]
    common: Common,
    /// Report the residual tripartite value instead of the case table.
    #[arg(long)]
    rgs: bool,
    /// Evaluate every partition case (the default when --case is absent).
    #[arg(long, conflicts_with = "case")]
    all_cases: bool,
    /// Single partition case, e.g. 23to1, 2to13, 1to2.
    #[arg(long)]
    case: Option<String>,
}

#[derive(Args, Debug)]
struct RgsArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DecoherenceArgs {
    #[command(flatten)]
    common: Common,
    /// Uniform damping rate for all three modes.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Reservoir occupation values, comma separated.
    #[arg(long, default_value = "0")]
    nr: String,
    /// Partition case; defaults to 23to1.
    #[arg(long, conflicts_with = "all_cases")]
    case: Option<String>,
    /// Evaluate every partition case.
    #[arg(long)]
    all_cases: bool,
    /// Report first zero crossings instead of trajectories.
    #[arg(long)]
    sudden_death: bool,
    /// Largest gamma*t on the trajectory grid.
    #[arg(long, default_value_t = 0.6)]
    tmax: f64,
    /// Trajectory grid points.
    #[arg(long, default_value_t = 25)]
    steps: usize,
}

#[derive(Args, Debug)]
struct NegativityArgs {
    #[command(flatten)]
    common: Common,
    /// Subtraction scheme label, e.g. 1a_2, 2a_13, 1a3a_2.
    #[arg(long)]
    scheme: String,
    /// Integrand evaluation budget for the adaptive quadrature.
    #[arg(long)]
    max_evals: Option<u64>,
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[command(flatten)]
    common: Common,
    /// Subtraction scheme whose reduced Wigner function is sampled.
    #[arg(long, conflicts_with = "full")]
    scheme: Option<String>,
    /// Sample the full three-mode function instead of a reduction.
    #[arg(long)]
    full: bool,
    /// Mode whose phase plane is scanned under --full (others at origin).
    #[arg(long, default_value_t = 1)]
    mode: usize,
    /// Per-axis grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Per-axis range lo:hi.
    #[arg(long, default_value = "-4:4", allow_hyphen_values = true)]
    range: String,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[command(flatten)]
    common: Common,
    /// Moment index spec k1,k2,k3,l1,l2,l3; repeatable.
    #[arg(long = "spec")]
    specs: Vec<String>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
    /// Single criterion index; all criteria when absent.
    #[arg(long)]
    criterion: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
struct CliErr {
    code: i32,
    msg: String,
}

impl From<Error> for CliErr {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => EXIT_CONFIG,
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_NUMERIC,
        };
        CliErr {
            code,
            msg: e.to_string(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliErr {
    CliErr {
        code: EXIT_CONFIG,
        msg: msg.into(),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CliErr> {
    match cli.cmd {
        Cmd::Steering(a) => cmd_steering(a),
        Cmd::Rgs(a) => cmd_rgs(a),
        Cmd::Decoherence(a) => cmd_decoherence(a),
        Cmd::Negativity(a) => cmd_negativity(a),
        Cmd::Wigner(a) => cmd_wigner(a),
        Cmd::Moments(a) => cmd_moments(a),
        Cmd::Selftest(a) => cmd_selftest(a),
    }
}

// ---------------------------------------------------------------------------
// config file overlay

fn load_config_map(p: &Path) -> Result<serde_json::Map<String, Value>, CliErr> {
    let text = std::fs::read_to_string(p)
        .map_err(|e| cfg_err(format!("cannot read config {}: {e}", p.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| cfg_err(format!("config {}: {e}", p.display())))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(cfg_err("config file must hold a JSON object")),
    }
}

fn j_f64(v: &Value, k: &str) -> Result<f64, CliErr> {
    v.as_f64()
        .ok_or_else(|| cfg_err(format!("config key {k} must be a number")))
}

fn j_str(v: &Value, k: &str) -> Result<String, CliErr> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| cfg_err(format!("config key {k} must be a string")))
}

fn j_bool(v: &Value, k: &str) -> Result<bool, CliErr> {
    v.as_bool()
        .ok_or_else(|| cfg_err(format!("config key {k} must be a boolean")))
}

fn j_usize(v: &Value, k: &str) -> Result<usize, CliErr> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| cfg_err(format!("config key {k} must be a nonnegative integer")))
}

/// Applies one config-file key to the shared flags. Keys of each selector
/// group displace their alternatives, mirroring the flag conflict rules.
fn apply_common_key(c: &mut Common, k: &str, v: &Value) -> Result<bool, CliErr> {
    match k {
        "nbar" => {
            c.nbar = Some(j_f64(v, k)?);
            c.r = None;
        }
        "r" => {
            c.r = Some(j_f64(v, k)?);
            c.nbar = None;
        }
        "phi" => {
            c.phi = Some(j_f64(v, k)?);
            c.phi_frac = None;
            c.phi_grid = None;
        }
        "phi_frac" => {
            c.phi_frac = Some(j_str(v, k)?);
            c.phi = None;
            c.phi_grid = None;
        }
        "phi_grid" => {
            c.phi_grid = Some(j_str(v, k)?);
            c.phi = None;
            c.phi_frac = None;
        }
        "theta1" => c.theta1 = j_f64(v, k)?,
        "theta2" => c.theta2 = j_f64(v, k)?,
        "out" => c.out = Some(PathBuf::from(j_str(v, k)?)),
        "format" => {
            c.format = match j_str(v, k)?.as_str() {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => return Err(cfg_err(format!("unknown format {other:?}"))),
            }
        }
        "oracle" => c.oracle = j_bool(v, k)?,
        "cutoff" => c.cutoff = Some(j_usize(v, k)?),
        "tol" => c.tol = Some(j_f64(v, k)?),
        _ => return Ok(false),
    }
    Ok(true)
}

fn overlay<F>(
    common: &mut Common,
    map: &serde_json::Map<String, Value>,
    mut extra: F,
) -> Result<(), CliErr>
where
    F: FnMut(&str, &Value) -> Result<bool, CliErr>,
{
    for (k, v) in map {
        if apply_common_key(common, k, v)? {
            continue;
        }
        if extra(k, v)? {
            continue;
        }
        return Err(cfg_err(format!("unknown config key: {k}")));
    }
    Ok(())
}

fn take_config(common: &mut Common) -> Result<Option<serde_json::Map<String, Value>>, CliErr> {
    match common.config.take() {
        Some(p) => Ok(Some(load_config_map(&p)?)),
        None => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// shared parameter resolution

fn parse_frac(s: &str) -> Result<f64, CliErr> {
    let (k, n) = s
        .split_once('/')
        .ok_or_else(|| cfg_err(format!("phi fraction must look like k/n, got {s:?}")))?;
    let k: u32 = k
        .trim()
        .parse()
        .map_err(|_| cfg_err(format!("bad numerator in phi fraction {s:?}")))?;
    let n: u32 = n
        .trim()
        .parse()
        .map_err(|_| cfg_err(format!("bad denominator in phi fraction {s:?}")))?;
    if n == 0 {
        return Err(cfg_err("phi fraction denominator must be positive"));
    }
    Ok(k as f64 * PI / n as f64)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliErr> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(cfg_err(format!(
            "grid must look like start:stop:count, got {s:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| cfg_err(format!("bad grid start {:?}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| cfg_err(format!("bad grid stop {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| cfg_err(format!("bad grid count {:?}", parts[2])))?;
    if count == 0 {
        return Err(cfg_err("grid count must be at least 1"));
    }
    if !(start.is_finite() && stop.is_finite()) || start > stop {
        return Err(cfg_err(format!("grid range [{start}, {stop}] is invalid")));
    }
    Ok(linspace(start, stop, count))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn resolve_phis(c: &Common) -> Result<Vec<f64>, CliErr> {
    if let Some(g) = &c.phi_grid {
        return parse_grid(g);
    }
    if let Some(f) = &c.phi_frac {
        return Ok(vec![parse_frac(f)?]);
    }
    Ok(vec![c.phi.unwrap_or(FRAC_PI_4)])
}

fn single_phi(c: &Common, cmd: &str) -> Result<f64, CliErr> {
    let phis = resolve_phis(c)?;
    if phis.len() != 1 {
        return Err(cfg_err(format!(
            "{cmd} expects a single splitting angle, not a grid"
        )));
    }
    Ok(phis[0])
}

fn base_cfg(c: &Common, phi: f64) -> Result<SqueezingConfig, CliErr> {
    match (c.nbar, c.r) {
        (Some(n), None) => Ok(SqueezingConfig::from_mean_photons(
            n, phi, c.theta1, c.theta2,
        )?),
        (None, Some(r)) => Ok(SqueezingConfig::from_r(r, phi, c.theta1, c.theta2)?),
        (None, None) => Err(cfg_err("one of --nbar or --r is required")),
        (Some(_), Some(_)) => Err(cfg_err("use only one of --nbar / --r")),
    }
}

fn phi_echo(c: &Common) -> JVal {
    if let Some(g) = &c.phi_grid {
        JVal::Str(g.clone())
    } else if let Some(f) = &c.phi_frac {
        JVal::Str(f.clone())
    } else {
        JVal::num(c.phi.unwrap_or(FRAC_PI_4))
    }
}

fn echo_common(c: &Common) -> Vec<(String, JVal)> {
    let mut e = Vec::new();
    if let Some(n) = c.nbar {
        e.push(("nbar".to_string(), JVal::num(n)));
    }
    if let Some(r) = c.r {
        e.push(("r".to_string(), JVal::num(r)));
    }
    e.push(("phi".to_string(), phi_echo(c)));
    e.push(("theta1".to_string(), JVal::num(c.theta1)));
    e.push(("theta2".to_string(), JVal::num(c.theta2)));
    if c.oracle {
        e.push(("oracle".to_string(), JVal::Bool(true)));
    }
    if let Some(n) = c.cutoff {
        e.push(("cutoff".to_string(), JVal::int(n as i64)));
    }
    if let Some(t) = c.tol {
        e.push(("tol".to_string(), JVal::num(t)));
    }
    e
}

// ---------------------------------------------------------------------------
// output assembly

struct Emit<'a> {
    common: &'a Common,
    command: &'static str,
    echo: Vec<(String, JVal)>,
    convergence: Option<JVal>,
    failure: Option<CliErr>,
    exit_code: i32,
}

fn finish(e: Emit, table: Table) -> Result<i32, CliErr> {
    let text = match e.common.format {
        Format::Csv => table_to_csv(&table),
        Format::Json => {
            let mut meta = vec![
                (
                    "version".to_string(),
                    JVal::Str(env!("CARGO_PKG_VERSION").into()),
                ),
                ("command".to_string(), JVal::Str(e.command.into())),
                ("config".to_string(), JVal::Obj(e.echo)),
            ];
            if let Some(c) = e.convergence {
                meta.push(("convergence".to_string(), c));
            }
            let status = e.failure.as_ref().map(|err| {
                JVal::Obj(vec![
                    ("exit_code".to_string(), JVal::int(err.code as i64)),
                    ("message".to_string(), JVal::Str(err.msg.clone())),
                    (
                        "rows_emitted".to_string(),
                        JVal::int(table.rows.len() as i64),
                    ),
                ])
            });
            table_to_json(JVal::Obj(meta), &table, status)
        }
    };
    write_output(e.common.out.as_deref(), &text).map_err(|io| CliErr {
        code: EXIT_NUMERIC,
        msg: format!("cannot write output: {io}"),
    })?;
    if let Some(err) = e.failure {
        eprintln!("error: {}", err.msg);
        return Ok(err.code);
    }
    Ok(e.exit_code)
}

/// Evaluates f(0..n) on a small worker pool; results come back in index
/// order regardless of completion order.
fn index_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(n.max(1));
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let parts: Vec<Vec<(usize, T)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut acc = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break;
                        }
                        acc.push((i, f(i)));
                    }
                    acc
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut all: Vec<(usize, T)> = parts.into_iter().flatten().collect();
    all.sort_by_key(|(i, _)| *i);
    all.into_iter().map(|(_, t)| t).collect()
}

// ---------------------------------------------------------------------------
// steering and residual steering

fn cmd_steering(mut args: SteeringArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "rgs" => args.rgs = j_bool(v, k)?,
                "all_cases" => args.all_cases = j_bool(v, k)?,
                "case" => args.case = Some(j_str(v, k)?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    if args.rgs {
        return rgs_rows(&args.common, "steering");
    }
    let phis = resolve_phis(&args.common)?;
    let cases: Vec<SteeringCase> = match &args.case {
        Some(lbl) => vec![SteeringCase::from_label(lbl)?],
        None => SteeringCase::ALL.to_vec(),
    };
    let mut table = Table::new(vec![
        "nbar",
        "phi",
        "case",
        "g_generic",
        "g_closed_form",
        "abs_delta",
    ]);
    let mut worst = 0.0f64;
    for &phi in &phis {
        let cfg = base_cfg(&args.common, phi)?;
        let v = c3msv_covariance(&cfg);
        for &case in &cases {
            let g = gaussian_steering(&v, &case.partition())?.value;
            let cf = steering_closed_form(&cfg, case);
            let d = (g - cf).abs();
            worst = worst.max(d);
            table.push(vec![
                Cell::Num(cfg.nbar_total()),
                Cell::Num(phi),
                Cell::Str(case.label().to_string()),
                Cell::Num(g),
                Cell::Num(cf),
                Cell::Num(d),
            ]);
        }
    }
    let mut echo = echo_common(&args.common);
    if let Some(lbl) = &args.case {
        echo.push(("case".to_string(), JVal::Str(lbl.clone())));
    }
    let exit_code = if worst > ROUTE_TOLERANCE {
        eprintln!(
            "route disagreement: max |delta| = {} exceeds {}",
            g12(worst),
            g12(ROUTE_TOLERANCE)
        );
        EXIT_NUMERIC
    } else {
        0
    };
    finish(
        Emit {
            common: &args.common,
            command: "steering",
            echo,
            convergence: None,
            failure: None,
            exit_code,
        },
        table,
    )
}

fn cmd_rgs(mut args: RgsArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |_, _| Ok(false))?;
    }
    rgs_rows(&args.common, "rgs")
}

fn rgs_rows(common: &Common, command: &'static str) -> Result<i32, CliErr> {
    let phis = resolve_phis(common)?;
    let mut table = Table::new(vec!["nbar", "phi", "rgs", "argmin_pivot", "argmin_family"]);
    for &phi in &phis {
        let cfg = base_cfg(common, phi)?;
        let r = residual_gaussian_steering(&cfg)?;
        let family = match r.argmin_family {
            DeficitFamily::PairSteersPivot => "pair_steers_pivot",
            DeficitFamily::PivotSteersPair => "pivot_steers_pair",
        };
        table.push(vec![
            Cell::Num(cfg.nbar_total()),
            Cell::Num(phi),
            Cell::Num(r.value),
            Cell::Int((r.argmin_pivot + 1) as i64),
            Cell::Str(family.to_string()),
        ]);
    }
    finish(
        Emit {
            common,
            command,
            echo: echo_common(common),
            convergence: None,
            failure: None,
            exit_code: 0,
        },
        table,
    )
}

// ---------------------------------------------------------------------------
// decoherence

fn cmd_decoherence(mut args: DecoherenceArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "gamma" => args.gamma = j_f64(v, k)?,
                "nr" => args.nr = j_str(v, k)?,
                "case" => args.case = Some(j_str(v, k)?),
                "all_cases" => args.all_cases = j_bool(v, k)?,
                "sudden_death" => args.sudden_death = j_bool(v, k)?,
                "tmax" => args.tmax = j_f64(v, k)?,
                "steps" => args.steps = j_usize(v, k)?,
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let phi = single_phi(&args.common, "decoherence")?;
    let cfg = base_cfg(&args.common, phi)?;
    let nrs: Vec<f64> = args
        .nr
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| cfg_err(format!("bad reservoir occupation {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let cases: Vec<SteeringCase> = match (&args.case, args.all_cases) {
        (Some(lbl), _) => vec![SteeringCase::from_label(lbl)?],
        (None, true) => SteeringCase::ALL.to_vec(),
        (None, false) => vec![SteeringCase::from_label("23to1").expect("fixed label")],
    };
    if !(args.gamma.is_finite() && args.gamma >= 0.0) {
        return Err(cfg_err(format!("gamma must be nonnegative, got {}", args.gamma)));
    }

    let mut echo = echo_common(&args.common);
    echo.push(("gamma".to_string(), JVal::num(args.gamma)));
    echo.push(("nr".to_string(), JVal::Str(args.nr.clone())));
    let mut convergence = None;

    let table = if args.sudden_death {
        // Threshold in gamma*t units at six significant digits; a channel
        // that never kills the steering reports "no-death".
        let tol = args.common.tol.unwrap_or(1e-10);
        let time_tol = if args.gamma > 0.0 { tol / args.gamma } else { tol };
        let mut t = Table::new(vec!["n_r", "case", "gamma_t_death"]);
        for &nr in &nrs {
            let ch = ChannelParams::uniform(args.gamma, nr)?;
            for &case in &cases {
                let cell = match sudden_death_time(&cfg, &ch, case, time_tol)? {
                    Some(td) => Cell::Num6(args.gamma * td),
                    None => Cell::Str("no-death".to_string()),
                };
                t.push(vec![
                    Cell::Num(nr),
                    Cell::Str(case.label().to_string()),
                    cell,
                ]);
            }
        }
        t
    } else {
        let mut t = Table::new(vec!["gamma_t", "n_r", "case", "g"]);
        if args.gamma == 0.0 {
            // Nothing decays; the trajectory is a single constant value.
            convergence = Some(JVal::Obj(vec![(
                "no_death".to_string(),
                JVal::Bool(true),
            )]));
            eprintln!("note: gamma = 0, steering stays constant (no-death)");
            let v = c3msv_covariance(&cfg);
            for &nr in &nrs {
                ChannelParams::uniform(0.0, nr)?;
                for &case in &cases {
                    let g = gaussian_steering(&v, &case.partition())?.value;
                    t.push(vec![
                        Cell::Num(0.0),
                        Cell::Num(nr),
                        Cell::Str(case.label().to_string()),
                        Cell::Num(g),
                    ]);
                }
            }
        } else {
            if !(args.tmax.is_finite() && args.tmax >= 0.0) {
                return Err(cfg_err(format!("tmax must be nonnegative, got {}", args.tmax)));
            }
            let gts = linspace(0.0, args.tmax, args.steps.max(1));
            let times: Vec<f64> = gts.iter().map(|gt| gt / args.gamma).collect();
            for &nr in &nrs {
                let ch = ChannelParams::uniform(args.gamma, nr)?;
                for &case in &cases {
                    let traj = steering_vs_time(&cfg, &ch, case, &times)?;
                    for (i, &gt) in gts.iter().enumerate() {
                        t.push(vec![
                            Cell::Num(gt),
                            Cell::Num(nr),
                            Cell::Str(case.label().to_string()),
                            Cell::Num(traj.values[i]),
                        ]);
                    }
                }
            }
        }
        t
    };
    finish(
        Emit {
            common: &args.common,
            command: "decoherence",
            echo,
            convergence,
            failure: None,
            exit_code: 0,
        },
        table,
    )
}

// ---------------------------------------------------------------------------
// negativity

fn cmd_negativity(mut args: NegativityArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "scheme" => args.scheme = j_str(v, k)?,
                "max_evals" => args.max_evals = Some(j_usize(v, k)? as u64),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let scheme = SubtractionScheme::from_label(&args.scheme)?;
    let phis = resolve_phis(&args.common)?;
    let pair = scheme.kept().len() == 2;
    let mut spec = if pair {
        QuadratureSpec::two_mode()
    } else {
        QuadratureSpec::single_mode()
    };
    if let Some(t) = args.common.tol {
        spec.tol = t;
    }
    if let Some(m) = args.max_evals {
        spec.max_evals = m;
    }
    let (grid, budget) = if pair {
        (OracleGrid::pair(), 1e-5)
    } else {
        (OracleGrid::single_mode(), 1e-8)
    };
    let cutoff = args.common.cutoff;
    let want_oracle = args.common.oracle;
    let common = &args.common;

    type NegRow = Result<(f64, NegativityEstimate, Option<f64>), CliErr>;
    let results: Vec<(f64, NegRow)> = index_map(phis.len(), |i| {
        let phi = phis[i];
        let row: NegRow = (|| {
            let cfg = base_cfg(common, phi)?;
            let est = negativity(&cfg, scheme, &spec)?;
            let oracle = if want_oracle {
                let state = build_c3msv_fock(&cfg, cutoff, budget)?;
                let reduced = subtract_and_reduce(&state, scheme)?;
                Some(negativity_oracle(&reduced, &grid)?)
            } else {
                None
            };
            Ok((cfg.nbar_total(), est, oracle))
        })();
        (phi, row)
    });

    let mut headers = vec!["nbar", "phi", "scheme", "n_analytic"];
    if want_oracle {
        headers.push("n_oracle");
    }
    headers.push("refinements");
    headers.push("last_delta");
    let mut table = Table::new(headers);

    let mut failure = None;
    let mut max_refinements = 0i64;
    let mut max_last_delta = 0.0f64;
    let mut total_evals = 0i64;
    for (phi, row) in results {
        match row {
            Ok((nbar, est, oracle)) => {
                let mut cells = vec![
                    Cell::Num(nbar),
                    Cell::Num(phi),
                    Cell::Str(scheme.cli_label()),
                    Cell::Num(est.value),
                ];
                if let Some(o) = oracle {
                    cells.push(Cell::Num(o));
                }
                cells.push(Cell::Int(est.levels.len() as i64));
                cells.push(Cell::Num(est.last_delta));
                table.push(cells);
                max_refinements = max_refinements.max(est.levels.len() as i64);
                max_last_delta = max_last_delta.max(est.last_delta.abs());
                total_evals += est.evals as i64;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    let mut echo = echo_common(common);
    echo.push(("scheme".to_string(), JVal::Str(scheme.cli_label())));
    let convergence = Some(JVal::Obj(vec![
        ("refinements_max".to_string(), JVal::int(max_refinements)),
        ("last_delta_max".to_string(), JVal::num(max_last_delta)),
        ("evals_total".to_string(), JVal::int(total_evals)),
    ]));
    finish(
        Emit {
            common,
            command: "negativity",
            echo,
            convergence,
            failure,
            exit_code: 0,
        },
        table,
    )
}

// ---------------------------------------------------------------------------
// wigner sampling

fn cmd_wigner(mut args: WignerArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "scheme" => args.scheme = Some(j_str(v, k)?),
                "full" => args.full = j_bool(v, k)?,
                "mode" => args.mode = j_usize(v, k)?,
                "grid" => args.grid = Some(j_usize(v, k)?),
                "range" => args.range = j_str(v, k)?,
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let phi = single_phi(&args.common, "wigner")?;
    let cfg = base_cfg(&args.common, phi)?;
    let (lo, hi) = parse_range(&args.range)?;

    let mut echo = echo_common(&args.common);
    echo.push(("range".to_string(), JVal::Str(args.range.clone())));

    let table = if args.full {
        if !(1..=3).contains(&args.mode) {
            return Err(cfg_err(format!("mode must be 1..=3, got {}", args.mode)));
        }
        let n = args.grid.unwrap_or(64);
        if !(2..=2048).contains(&n) {
            return Err(cfg_err(format!("grid must be 2..=2048, got {n}")));
        }
        echo.push(("full".to_string(), JVal::Bool(true)));
        echo.push(("mode".to_string(), JVal::int(args.mode as i64)));
        echo.push(("grid".to_string(), JVal::int(n as i64)));
        let w = wigner_c3msv(&cfg);
        let ax = linspace(lo, hi, n);
        let mut t = Table::new(vec!["x", "p", "w"]);
        let mut z = [0.0f64; 6];
        for &x in &ax {
            for &p in &ax {
                z[2 * (args.mode - 1)] = x;
                z[2 * (args.mode - 1) + 1] = p;
                t.push(vec![Cell::Num(x), Cell::Num(p), Cell::Num(w.eval(&z))]);
            }
        }
        t
    } else {
        let lbl = args
            .scheme
            .as_deref()
            .ok_or_else(|| cfg_err("pass --scheme LABEL or --full"))?;
        let scheme = SubtractionScheme::from_label(lbl)?;
        let w = wigner_closed_form(&cfg, scheme)?;
        echo.push(("scheme".to_string(), JVal::Str(scheme.cli_label())));
        let kept: Vec<JVal> = scheme
            .kept()
            .iter()
            .map(|&m| JVal::int(m as i64 + 1))
            .collect();
        echo.push(("kept_modes".to_string(), JVal::Arr(kept)));
        match w.n_modes() {
            1 => {
                let n = args.grid.unwrap_or(64);
                if !(2..=2048).contains(&n) {
                    return Err(cfg_err(format!("grid must be 2..=2048, got {n}")));
                }
                echo.push(("grid".to_string(), JVal::int(n as i64)));
                let ax = linspace(lo, hi, n);
                let mut t = Table::new(vec!["x", "p", "w"]);
                for &x in &ax {
                    for &p in &ax {
                        t.push(vec![Cell::Num(x), Cell::Num(p), Cell::Num(w.eval(&[x, p]))]);
                    }
                }
                t
            }
            2 => {
                let n = args.grid.unwrap_or(16);
                if !(2..=32).contains(&n) {
                    return Err(cfg_err(format!(
                        "grid must be 2..=32 for two-mode sampling, got {n}"
                    )));
                }
                echo.push(("grid".to_string(), JVal::int(n as i64)));
                let ax = linspace(lo, hi, n);
                let mut t = Table::new(vec!["x", "p", "x2", "p2", "w"]);
                for &x in &ax {
                    for &p in &ax {
                        for &x2 in &ax {
                            for &p2 in &ax {
                                t.push(vec![
                                    Cell::Num(x),
                                    Cell::Num(p),
                                    Cell::Num(x2),
                                    Cell::Num(p2),
                                    Cell::Num(w.eval(&[x, p, x2, p2])),
                                ]);
                            }
                        }
                    }
                }
                t
            }
            other => {
                return Err(CliErr {
                    code: EXIT_NUMERIC,
                    msg: format!("unexpected reduced dimension {other}"),
                })
            }
        }
    };
    finish(
        Emit {
            common: &args.common,
            command: "wigner",
            echo,
            convergence: None,
            failure: None,
            exit_code: 0,
        },
        table,
    )
}

fn parse_range(s: &str) -> Result<(f64, f64), CliErr> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| cfg_err(format!("range must look like lo:hi, got {s:?}")))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| cfg_err(format!("bad range low end {lo:?}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| cfg_err(format!("bad range high end {hi:?}")))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(cfg_err(format!("range [{lo}, {hi}] is invalid")));
    }
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// moments

fn cmd_moments(mut args: MomentsArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "spec" => match v {
                    Value::String(s) => args.specs = vec![s.clone()],
                    Value::Array(items) => {
                        args.specs = items
                            .iter()
                            .map(|it| j_str(it, k))
                            .collect::<Result<_, _>>()?
                    }
                    _ => return Err(cfg_err("config key spec must be a string or array")),
                },
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let specs: Vec<[usize; 6]> = if args.specs.is_empty() {
        vec![
            [1, 0, 0, 1, 0, 0],
            [0, 1, 0, 0, 1, 0],
            [0, 0, 1, 0, 0, 1],
            [1, 1, 0, 0, 0, 0],
            [0, 1, 1, 0, 0, 0],
            [1, 0, 0, 0, 0, 1],
        ]
    } else {
        args.specs
            .iter()
            .map(|s| parse_moment_spec(s))
            .collect::<Result<_, _>>()?
    };
    let phi = single_phi(&args.common, "moments")?;
    let cfg = base_cfg(&args.common, phi)?;
    let cutoff = args.common.cutoff.unwrap_or(150);
    let state = build_c3msv_fock(&cfg, Some(cutoff), 1e-8)?;

    let mut table = Table::new(vec!["spec", "value_generating", "value_fock", "abs_delta"]);
    for s in &specs {
        let k = [s[0], s[1], s[2]];
        let l = [s[3], s[4], s[5]];
        let vg = moment_generating(&cfg, k, l);
        let vf = moment_fock(&state, k, l);
        table.push(vec![
            Cell::Str(
                s.iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            Cell::Cpx(vg),
            Cell::Cpx(vf),
            Cell::Num((vg - vf).norm()),
        ]);
    }
    let mut echo = echo_common(&args.common);
    echo.push(("cutoff".to_string(), JVal::int(cutoff as i64)));
    finish(
        Emit {
            common: &args.common,
            command: "moments",
            echo,
            convergence: None,
            failure: None,
            exit_code: 0,
        },
        table,
    )
}

fn parse_moment_spec(s: &str) -> Result<[usize; 6], CliErr> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 6 {
        return Err(cfg_err(format!(
            "moment spec must have six indices k1,k2,k3,l1,l2,l3, got {s:?}"
        )));
    }
    let mut out = [0usize; 6];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad moment index {p:?} in {s:?}")))?;
    }
    let degree: usize = out.iter().sum();
    if degree > 6 {
        return Err(cfg_err(format!(
            "moment degree {degree} exceeds the supported maximum 6"
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// selftest

fn cmd_selftest(mut args: SelftestArgs) -> Result<i32, CliErr> {
    if let Some(map) = take_config(&mut args.common)? {
        overlay(&mut args.common, &map, |k, v| {
            match k {
                "criterion" => args.criterion = Some(j_usize(v, k)?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let reports = match args.criterion {
        Some(i) => vec![run_criterion(i)],
        None => run_all(),
    };
    let text = if reports.len() == 1 {
        reports[0].render()
    } else {
        render_table(&reports)
    };
    write_output(args.common.out.as_deref(), &text).map_err(|io| CliErr {
        code: EXIT_NUMERIC,
        msg: format!("cannot write output: {io}"),
    })?;
    Ok(if reports.iter().all(|r| r.passed()) {
        0
    } else {
        1
    })
}
