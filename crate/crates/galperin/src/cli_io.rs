//! Command-line configuration, the six commands and their CSV/JSON output.
//!
//! Exact values are written as `p/q` strings; interval values as a midpoint
//! decimal plus a radius. Every JSON document carries `schema: 1`.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rug::Rational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::base_repr::{error_map, pi_digits, ErrorCell, GridSpec, PiDigits, ReprError};
use crate::closed_form::{collision_count, count_collisions_exact, ClosedForm, ClosedFormError, CountError};
use crate::core_dynamics::{
    count_interval, default_step_limit, simulate, simulate_interval, simulate_with, start_precision,
    with_escalation, BilliardSpec, CollisionEvent, CollisionKind, SimError, SpecError, Termination, Trajectory,
    DEFAULT_PRECISION_CAP,
};
use crate::field::{
    decimal_or_fraction, parse_mantissa, parse_rational, rational_string, Base, FactoredRational, Interval,
    ParseError, Real,
};
use crate::geometry_analysis::geometry_report;
use crate::invariants::{audit, superintegrable_spec, InvariantReport};
use crate::par::with_workers;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Digits,
    Simulate,
    Trace,
    Check,
    ErrorMap,
    Bench,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    Auto,
    Rational,
    Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug, Clone)]
#[command(name = "galperin", version, about = "Counts collisions of the two-ball billiard and reads off digits of pi")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Integer, decimal, fraction, or one of phi, e, pi.
    #[arg(long, default_value = "10")]
    pub base: String,
    #[arg(long, default_value = "1")]
    pub mantissa: String,
    /// Last mantissa of a digits table or a bench sweep.
    #[arg(long)]
    pub to: Option<u32>,
    /// Golden-ratio base: also print both forms with integer parts 100 and 11.
    #[arg(long)]
    pub dual: bool,
    #[arg(long, value_enum, default_value_t = FieldMode::Auto)]
    pub field: FieldMode,
    #[arg(long, default_value_t = DEFAULT_PRECISION_CAP)]
    pub precision_cap: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Error-map worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub step_limit: Option<u64>,
    /// check: audit the superintegrable run with m/M = tan²(π/q).
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long, default_value = "1.5")]
    pub b_min: String,
    #[arg(long, default_value = "16")]
    pub b_max: String,
    #[arg(long, default_value_t = 200)]
    pub b_steps: u32,
    #[arg(long, default_value = "1")]
    pub n_min: String,
    #[arg(long, default_value = "6")]
    pub n_max: String,
    #[arg(long, default_value_t = 200)]
    pub n_steps: u32,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("rational mode needs b^(2N) to be rational")]
    NotRational,
    #[error("degenerate case: {0}")]
    Degenerate(String),
    #[error("ambiguous: {0}")]
    Ambiguous(String),
    #[error("step limit of {0} reached")]
    StepLimit(u64),
    #[error("precision cap of {0} bits reached")]
    PrecisionCap(u32),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Degenerate(_) | CliError::Ambiguous(_) => 2,
            CliError::StepLimit(_) => 3,
            CliError::PrecisionCap(_) => 4,
            _ => 1,
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::NotRational => "usage",
            CliError::Degenerate(_) => "degeneracy",
            CliError::Ambiguous(_) => "ambiguity",
            CliError::StepLimit(_) => "step_limit",
            CliError::PrecisionCap(_) => "precision_cap",
            CliError::CheckFailed(_) => "check_failed",
            CliError::Io(_) => "io",
            CliError::Other(_) => "error",
        }
    }

    /// One-line machine-readable report for stderr.
    pub fn to_json(&self) -> String {
        json!({ "schema": SCHEMA, "reason": self.reason(), "exit_code": self.exit_code(), "message": self.to_string() })
            .to_string()
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Ambiguous { .. } => CliError::Ambiguous(e.to_string()),
            SimError::Simultaneous { .. } => CliError::Degenerate(e.to_string()),
            SimError::PrecisionCap { cap } => CliError::PrecisionCap(cap),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::SubmultipleDegeneracy { .. } => CliError::Degenerate(e.to_string()),
            CountError::PrecisionExhausted { cap } => CliError::PrecisionCap(cap),
        }
    }
}

impl From<ReprError> for CliError {
    fn from(e: ReprError) -> Self {
        match e {
            ReprError::FloorAmbiguity { .. } => CliError::Ambiguous(e.to_string()),
            ReprError::Count(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ClosedFormError> for CliError {
    fn from(e: ClosedFormError) -> Self {
        match e {
            ClosedFormError::Count(c) => c.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

/// Exact backend used in rational mode.
pub type Exact = FactoredRational;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub base: Base,
    pub mantissa: Rational,
    pub to: Option<u32>,
    pub dual: bool,
    pub field_mode: FieldMode,
    pub precision_cap_bits: u32,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub workers: usize,
    pub step_limit: Option<u64>,
    pub q: Option<u32>,
    pub grid: GridSpec,
}

impl RunConfig {
    pub fn from_args(a: &Args) -> Result<Self, CliError> {
        let base: Base = a.base.parse()?;
        let mantissa = parse_mantissa(&a.mantissa)?;
        if a.dual && !matches!(base, Base::Phi) {
            return Err(CliError::Usage("--dual applies to the golden-ratio base only".into()));
        }
        let grid = GridSpec {
            b_min: parse_rational(&a.b_min)?,
            b_max: parse_rational(&a.b_max)?,
            b_steps: a.b_steps,
            n_min: parse_rational(&a.n_min)?,
            n_max: parse_rational(&a.n_max)?,
            n_steps: a.n_steps,
        };
        Ok(RunConfig {
            command: a.command,
            base,
            mantissa,
            to: a.to,
            dual: a.dual,
            field_mode: a.field,
            precision_cap_bits: a.precision_cap,
            output: a.out.clone(),
            format: a.format,
            workers: a.workers,
            step_limit: a.step_limit,
            q: a.q,
            grid,
        })
    }

    /// Parses a full command line, program name first.
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let a = Args::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
        Self::from_args(&a)
    }

    /// `Rational` or `Interval` after resolving `auto`.
    pub fn field(&self) -> Result<FieldMode, CliError> {
        let exact = match self.q {
            Some(q) => crate::invariants::exact_tan_sq(q).is_some(),
            None => self.base.mass_ratio_is_rational(&self.mantissa),
        };
        match self.field_mode {
            FieldMode::Auto if exact => Ok(FieldMode::Rational),
            FieldMode::Auto => Ok(FieldMode::Interval),
            FieldMode::Rational if !exact => Err(CliError::NotRational),
            m => Ok(m),
        }
    }

    fn integer_mantissa(&self) -> Result<u32, CliError> {
        if *self.mantissa.denom() != 1 {
            return Err(CliError::Usage("this command needs an integer mantissa".into()));
        }
        self.mantissa.numer().to_u32().ok_or_else(|| CliError::Usage("mantissa too large".into()))
    }

    fn mantissas(&self) -> Result<Vec<u32>, CliError> {
        let lo = self.integer_mantissa()?;
        let hi = self.to.unwrap_or(lo);
        if hi < lo {
            return Err(CliError::Usage("--to must not be below --mantissa".into()));
        }
        Ok((lo..=hi).collect())
    }

    fn steps(&self) -> u64 {
        self.step_limit.unwrap_or_else(|| default_step_limit(&self.base, &self.mantissa))
    }
}

/// Output of one command. `flag` carries a non-fatal condition that still
/// sets the exit code (a degenerate row, a step limit, ambiguous cells).
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    /// Ambiguous error-map cells, written next to the main output.
    pub sidecar: Option<String>,
    pub flag: Option<CliError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.flag.as_ref().map_or(0, CliError::exit_code)
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Digits => cmd_digits(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Trace => cmd_trace(cfg),
        Command::Check => cmd_check(cfg),
        Command::ErrorMap => cmd_error_map(cfg),
        Command::Bench => cmd_bench(cfg),
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Other(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Other(e.to_string()))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

/// Rows as JSON objects keyed by the header.
fn rows_json(header: &[&str], rows: &[Vec<String>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Object(header.iter().zip(r).map(|(k, v)| (k.to_string(), json!(v))).collect()))
            .collect(),
    )
}

fn table(cfg: &RunConfig, command: &str, header: &[&str], rows: &[Vec<String>], meta: Value) -> Result<String, CliError> {
    match cfg.format {
        Format::Csv => csv_text(header, rows),
        Format::Json => {
            let mut doc = json!({ "schema": SCHEMA, "command": command });
            if let (Value::Object(d), Value::Object(m)) = (&mut doc, meta) {
                d.extend(m);
            }
            doc["rows"] = rows_json(header, rows);
            Ok(json_text(&doc))
        }
    }
}

// digits

pub const DIGITS_HEADER: [&str; 7] = ["N", "count", "count_base_b", "shifted", "error", "epsilon", "degenerate"];

/// One table row: `Π` in decimal, `Π` in base `b`, `Π/b^N` in base `b`,
/// `1/b^N` in base `b`, then `ε` and the degeneracy flag. The dual forms
/// follow for `--dual`.
pub fn digits_row(d: &PiDigits, dual: bool) -> Vec<String> {
    let mut row = vec![
        d.mantissa.to_string(),
        d.count.exact.to_string(),
        d.count_digits.to_string(),
        d.shifted.to_string(),
        d.unit().to_string().trim_end_matches('.').to_string(),
        d.count.epsilon.to_string(),
        d.count.degenerate.to_string(),
    ];
    if dual {
        if let Some((one, two)) = &d.dual {
            row.push(one.to_string());
            row.push(two.to_string());
        }
    }
    row
}

pub fn cmd_digits(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    let mut flag = None;
    for n in cfg.mantissas()? {
        let d = pi_digits(&cfg.base, n, cfg.precision_cap_bits)?;
        if d.count.degenerate && flag.is_none() {
            flag = Some(CliError::Degenerate(format!(
                "N = {n}: the count formula gives {} but the balls collide {} times",
                d.count.exact,
                Rational::from(&d.count.exact) - 1u32
            )));
        }
        rows.push(digits_row(&d, cfg.dual));
    }
    let mut header = DIGITS_HEADER.to_vec();
    if cfg.dual {
        header.extend(["type_i", "type_ii"]);
    }
    let body = table(cfg, "digits", &header, &rows, json!({ "base": cfg.base.to_string() }))?;
    Ok(Outcome { body, sidecar: None, flag })
}

// simulate and trace

/// A value as written to a trace: exact `p/q`, or midpoint and radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Exact(#[serde(with = "rational_string")] Rational),
    Approx { mid: String, rad: f64 },
}

impl Number {
    pub fn of<R: Real>(v: &R) -> Self {
        match v.exact() {
            Some(q) if R::EXACT => Number::Exact(q),
            _ => Number::Approx { mid: v.render(), rad: v.radius() },
        }
    }

    fn csv(&self) -> String {
        match self {
            Number::Exact(q) => q.to_string(),
            Number::Approx { mid, .. } => mid.clone(),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub n: u64,
    pub kind: CollisionKind,
    pub t: Number,
    pub X: Number,
    pub x: Number,
    pub V: Number,
    pub v: Number,
}

impl EventRecord {
    pub fn of<R: Real>(e: &CollisionEvent<R>) -> Self {
        let s = &e.state;
        EventRecord {
            n: e.index,
            kind: e.kind,
            t: Number::of(&s.t),
            X: Number::of(&s.X),
            x: Number::of(&s.x),
            V: Number::of(&s.V),
            v: Number::of(&s.v),
        }
    }

    fn csv(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.kind.code().to_string(),
            self.t.csv(),
            self.X.csv(),
            self.x.csv(),
            self.V.csv(),
            self.v.csv(),
        ]
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub M: Number,
    pub m: Number,
    pub X0: Number,
    pub x0: Number,
    pub V0: Number,
    pub v0: Number,
}

/// JSON form of `trace`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub schema: u32,
    pub command: String,
    pub base: Option<Base>,
    #[serde(with = "rational_string")]
    pub mantissa: Rational,
    pub field: FieldMode,
    /// Working precision in bits; zero in rational mode.
    pub precision_bits: u32,
    pub spec: SpecRecord,
    pub termination: Termination,
    pub events: Vec<EventRecord>,
}

impl TraceDoc {
    pub fn of<R: Real>(traj: &Trajectory<R>, field: FieldMode, mantissa: &Rational) -> Self {
        let s = &traj.spec;
        TraceDoc {
            schema: SCHEMA,
            command: "trace".into(),
            base: s.base.clone(),
            mantissa: mantissa.clone(),
            field,
            precision_bits: s.M.precision(),
            spec: SpecRecord {
                M: Number::of(&s.M),
                m: Number::of(&s.m),
                X0: Number::of(&s.X0),
                x0: Number::of(&s.x0),
                V0: Number::of(&s.V0),
                v0: Number::of(&s.v0),
            },
            termination: traj.termination,
            events: traj.events.iter().map(EventRecord::of).collect(),
        }
    }
}

pub const TRACE_HEADER: [&str; 7] = ["n", "kind", "t", "X", "x", "V", "v"];

pub fn read_trace_json(text: &str) -> Result<TraceDoc, CliError> {
    let doc: TraceDoc = serde_json::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(CliError::Usage(format!("unsupported schema {}", doc.schema)));
    }
    Ok(doc)
}

fn step_flag(termination: Termination, limit: u64) -> Option<CliError> {
    (termination == Termination::StepLimit).then_some(CliError::StepLimit(limit))
}

fn trace_output<R: Real>(cfg: &RunConfig, traj: &Trajectory<R>, field: FieldMode) -> Result<Outcome, CliError> {
    let doc = TraceDoc::of(traj, field, &cfg.mantissa);
    let body = match cfg.format {
        Format::Csv => csv_text(&TRACE_HEADER, &doc.events.iter().map(EventRecord::csv).collect::<Vec<_>>())?,
        Format::Json => json_text(&serde_json::to_value(&doc).map_err(|e| CliError::Other(e.to_string()))?),
    };
    Ok(Outcome { body, sidecar: None, flag: step_flag(traj.termination, cfg.steps()) })
}

pub fn cmd_trace(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let limit = cfg.steps();
    match cfg.field()? {
        FieldMode::Rational => {
            let spec = BilliardSpec::<Exact>::standard(&cfg.base, &cfg.mantissa, 0).map_err(SimError::from)?;
            trace_output(cfg, &simulate(&spec, limit)?, FieldMode::Rational)
        }
        _ => {
            let traj = simulate_interval(&cfg.base, &cfg.mantissa, limit, cfg.precision_cap_bits)?;
            trace_output(cfg, &traj, FieldMode::Interval)
        }
    }
}

/// Outcome of a streaming simulation checked against the closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub events: u64,
    pub termination: Termination,
    pub closed_form_count: String,
    pub degenerate: bool,
    pub count_matches: bool,
    /// Rational mode: every state equals the closed-form state.
    pub states_match: Option<bool>,
    pub precision_bits: u32,
    pub seconds: f64,
}

/// Simulates `spec` and compares each event with the closed form on the
/// fly, without storing the trajectory.
pub fn simulate_against_closed_form<R: Real + PartialEq>(
    spec: &BilliardSpec<R>,
    step_limit: u64,
    cap: u32,
) -> Result<SimulationSummary, CliError> {
    let start = Instant::now();
    let cf = ClosedForm::new(spec, cap)?;
    let mut states = cf.states();
    let mut all_equal = true;
    let run = simulate_with(spec, step_limit, |e| {
        if R::EXACT && all_equal {
            all_equal = states.next().is_some_and(|s| s == e.state);
        }
    })?;
    let count = cf.count();
    let formula = if cf.is_degenerate() { count + 1 } else { count };
    Ok(SimulationSummary {
        events: run.count,
        termination: run.termination,
        closed_form_count: formula.to_string(),
        degenerate: cf.is_degenerate(),
        count_matches: run.count == count,
        states_match: R::EXACT.then_some(all_equal && run.count == count),
        precision_bits: spec.M.precision(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn interval_summary(cfg: &RunConfig) -> Result<SimulationSummary, CliError> {
    let start = Instant::now();
    let cap = cfg.precision_cap_bits;
    let run = count_interval(&cfg.base, &cfg.mantissa, cfg.steps(), cap)?;
    let count = collision_count(&cfg.base, &cfg.mantissa, cap)?;
    let physical = if count.degenerate { count.exact.clone() - 1u32 } else { count.exact.clone() };
    Ok(SimulationSummary {
        events: run.count,
        termination: run.termination,
        closed_form_count: count.exact.to_string(),
        degenerate: count.degenerate,
        count_matches: physical == run.count,
        states_match: None,
        precision_bits: run.final_state.V.precision(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let field = cfg.field()?;
    let summary = match field {
        FieldMode::Rational => {
            let spec = BilliardSpec::<Exact>::standard(&cfg.base, &cfg.mantissa, 0).map_err(SimError::from)?;
            simulate_against_closed_form(&spec, cfg.steps(), cfg.precision_cap_bits)?
        }
        _ => interval_summary(cfg)?,
    };
    let mut flag = step_flag(summary.termination, cfg.steps());
    if flag.is_none() && summary.degenerate {
        flag = Some(CliError::Degenerate(format!(
            "{} collisions observed, the count formula gives {}",
            summary.events, summary.closed_form_count
        )));
    }
    let header = [
        "events",
        "termination",
        "closed_form_count",
        "degenerate",
        "count_matches",
        "states_match",
        "precision_bits",
        "seconds",
    ];
    let row = vec![
        summary.events.to_string(),
        format!("{:?}", summary.termination),
        summary.closed_form_count.clone(),
        summary.degenerate.to_string(),
        summary.count_matches.to_string(),
        summary.states_match.map_or(String::new(), |b| b.to_string()),
        summary.precision_bits.to_string(),
        format!("{:.6}", summary.seconds),
    ];
    let body = match cfg.format {
        Format::Csv => csv_text(&header, &[row])?,
        Format::Json => json_text(&json!({
            "schema": SCHEMA,
            "command": "simulate",
            "base": cfg.base.to_string(),
            "mantissa": cfg.mantissa.to_string(),
            "field": field,
            "summary": summary,
        })),
    };
    Ok(Outcome { body, sidecar: None, flag })
}

// check

fn series_rows<R: Real>(rep: &InvariantReport<R>) -> Vec<Vec<String>> {
    let mut all = vec![&rep.energy, &rep.momentum, &rep.action_bw, &rep.action_bb, &rep.l_sq];
    if let Some(j) = &rep.chevalley {
        all.push(j);
    }
    all.push(&rep.averaged_position);
    all.iter()
        .map(|s| {
            vec![
                s.name.to_string(),
                s.conserved_in_theory.to_string(),
                s.is_constant().to_string(),
                format!("{:e}", s.drift()),
                s.values.len().to_string(),
            ]
        })
        .collect()
}

fn check_trajectory<R: Real>(cfg: &RunConfig, traj: &Trajectory<R>) -> Result<Outcome, CliError> {
    let rep = audit(traj, cfg.q).map_err(|e| CliError::Other(e.to_string()))?;
    let mut rows = series_rows(&rep);
    let agree = rep.actions_agree();
    rows.push(vec!["actions_agree".into(), "true".into(), agree.to_string(), String::new(), String::new()]);
    let geometry = if cfg.q.is_none() { geometry_report(traj).ok() } else { None };
    let mut failed: Vec<String> =
        rep.conserved().iter().filter(|s| !s.is_constant()).map(|s| s.name.to_string()).collect();
    if !agree {
        failed.push("actions_agree".into());
    }
    let header = ["quantity", "conserved_in_theory", "constant", "drift", "samples"];
    let body = match cfg.format {
        Format::Csv => csv_text(&header, &rows)?,
        Format::Json => json_text(&json!({
            "schema": SCHEMA,
            "command": "check",
            "events": traj.events.len(),
            "initial_action": Number::of(&rep.initial_action.scaled),
            "invariants": rows_json(&header, &rows),
            "geometry": geometry,
        })),
    };
    let flag = if failed.is_empty() {
        step_flag(traj.termination, cfg.steps())
    } else {
        Some(CliError::CheckFailed(format!("not conserved: {}", failed.join(", "))))
    };
    Ok(Outcome { body, sidecar: None, flag })
}

fn checked_spec<R: Real>(cfg: &RunConfig, prec: u32) -> Result<BilliardSpec<R>, CliError> {
    let c = |v: i64| R::from_i64(v, prec);
    match cfg.q {
        Some(q) => superintegrable_spec(q, c(-2), c(-1), c(1), c(0), prec).map_err(|e| CliError::Usage(e.to_string())),
        None => BilliardSpec::standard(&cfg.base, &cfg.mantissa, prec).map_err(|e| SimError::from(e).into()),
    }
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let limit = cfg.steps();
    match cfg.field()? {
        FieldMode::Rational => {
            let spec = checked_spec::<Exact>(cfg, 0)?;
            check_trajectory(cfg, &simulate(&spec, limit)?)
        }
        _ => {
            let start = start_precision(&cfg.base, &cfg.mantissa);
            let mut setup = None;
            let traj = with_escalation(start, cfg.precision_cap_bits, |prec| match checked_spec::<Interval>(cfg, prec) {
                Ok(spec) => simulate(&spec, limit),
                Err(e) => {
                    setup = Some(e);
                    Err(SimError::Spec(SpecError::NotRepresentable))
                }
            });
            if let Some(e) = setup {
                return Err(e);
            }
            let traj = traj?;
            check_trajectory(cfg, &traj)
        }
    }
}

// error-map

pub const ERROR_MAP_HEADER: [&str; 3] = ["b", "N", "epsilon"];

fn cell_row(c: &ErrorCell) -> Vec<String> {
    vec![decimal_or_fraction(&c.b), decimal_or_fraction(&c.N), c.epsilon.unwrap_or(-1).to_string()]
}

pub fn cmd_error_map(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cap = cfg.precision_cap_bits;
    let grid = cfg.grid.clone();
    let cells = with_workers(cfg.workers, || error_map(&grid, cap));
    let rows: Vec<Vec<String>> = cells.iter().map(cell_row).collect();
    let ambiguous: Vec<Vec<String>> = cells.iter().filter(|c| c.epsilon.is_none()).map(cell_row).collect();
    let body = table(cfg, "error-map", &ERROR_MAP_HEADER, &rows, json!({ "grid": grid }))?;
    let (sidecar, flag) = if ambiguous.is_empty() {
        (None, None)
    } else {
        let n = ambiguous.len();
        (
            Some(csv_text(&ERROR_MAP_HEADER, &ambiguous)?),
            Some(CliError::Ambiguous(format!("{n} cells undecided at the precision cap"))),
        )
    };
    Ok(Outcome { body, sidecar, flag })
}

// bench

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mantissa: u32,
    pub field: FieldMode,
    pub events: u64,
    pub simulate_seconds: f64,
    pub ns_per_collision: f64,
    pub closed_form_seconds: f64,
    pub closed_form_count: String,
    pub count_matches: bool,
}

fn bench_one(cfg: &RunConfig, n: u32) -> Result<BenchRow, CliError> {
    let mantissa = Rational::from(n);
    let cap = cfg.precision_cap_bits;
    let t0 = Instant::now();
    let formula = count_collisions_exact(&cfg.base, &mantissa, cap);
    let closed_form_seconds = t0.elapsed().as_secs_f64();
    let (closed_form_count, physical) = match formula {
        Ok(k) => (k.to_string(), k),
        Err(CountError::SubmultipleDegeneracy { formula }) => (formula.to_string(), formula - 1u32),
        Err(e) => return Err(e.into()),
    };
    let sub = RunConfig { mantissa: mantissa.clone(), ..cfg.clone() };
    let field = sub.field()?;
    let limit = sub.steps();
    let t1 = Instant::now();
    let events = match field {
        FieldMode::Rational => {
            let spec = BilliardSpec::<Exact>::standard(&cfg.base, &mantissa, 0).map_err(SimError::from)?;
            simulate_with(&spec, limit, |_| {})?.count
        }
        _ => count_interval(&cfg.base, &mantissa, limit, cap)?.count,
    };
    let simulate_seconds = t1.elapsed().as_secs_f64();
    Ok(BenchRow {
        mantissa: n,
        field,
        events,
        simulate_seconds,
        ns_per_collision: simulate_seconds * 1e9 / events.max(1) as f64,
        closed_form_seconds,
        closed_form_count,
        count_matches: physical == events,
    })
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = cfg.mantissas()?.into_iter().map(|n| bench_one(cfg, n)).collect::<Result<Vec<_>, _>>()?;
    let body = match cfg.format {
        Format::Json => json_text(&json!({
            "schema": SCHEMA,
            "command": "bench",
            "base": cfg.base.to_string(),
            "rows": rows,
        })),
        Format::Csv => {
            let header = [
                "N",
                "field",
                "events",
                "simulate_seconds",
                "ns_per_collision",
                "closed_form_seconds",
                "closed_form_count",
                "count_matches",
            ];
            let text: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.mantissa.to_string(),
                        format!("{:?}", r.field).to_lowercase(),
                        r.events.to_string(),
                        format!("{:.6}", r.simulate_seconds),
                        format!("{:.1}", r.ns_per_collision),
                        format!("{:.6}", r.closed_form_seconds),
                        r.closed_form_count.clone(),
                        r.count_matches.to_string(),
                    ]
                })
                .collect();
            csv_text(&header, &text)?
        }
    };
    Ok(Outcome { body, sidecar: None, flag: None })
}
