//! Command-line front end for the `tm` library: check models, validate
//! event partitions, derive behavioral graphs, carve super-events, run the
//! token simulator, check trace conformance, and execute validation
//! scenarios. Positional inputs name files on disk or, when no such file
//! exists, one of the built-in example models.
//!
//! Exit status: 0 on success, 1 when the inputs carry diagnostics or a
//! check fails, 2 on I/O and usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tm::dsl::{
    parse_events, parse_groups, parse_injections, parse_model, parse_scenario, ParseError,
};
use tm::harness::{run_scenario, ExecMode, ScenarioContext, ValidationReport};
use tm::{
    behavior_to_dot, build_behavior, carve_auto, carve_manual, carving_to_dot, check_static,
    conforms, model_to_dot, simulate, ActionKind, BehavioralModel, Carving, EventsModel,
    InducedKind, Injection, SimError, StaticModel, ThingInstance, Trace, Value,
};

#[derive(Parser)]
#[command(
    name = "tm",
    version,
    about = "Thinging-machine models: check, derive, carve, simulate, validate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and run every static legality check
    Check(CheckArgs),
    /// Validate an event partition against its model
    Events(EventsArgs),
    /// Derive the behavioral graph from a model and its events
    Behavior(BehaviorArgs),
    /// Group events into super-events along transfer and trigger seams
    Carve(CarveArgs),
    /// Run the token simulator over injected instances
    Simulate(SimulateArgs),
    /// Check a recorded trace against the behavioral event order
    Conforms(ConformsArgs),
    /// Run validation scenarios and report per-case pass/fail counts
    Validate(ValidateArgs),
    /// Write a built-in example's files into a directory
    Export(ExportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Dot,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    /// Model file, or a built-in name (vending, shopping, ...)
    model: String,
    /// text: diagnostics; dot: render the model graph; json: diagnostics as JSON
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the artifact here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EventsArgs {
    /// Model file or built-in name
    model: String,
    /// Events file; defaults to the built-in partition when MODEL is built in
    events: Option<String>,
}

#[derive(Args)]
struct BehaviorArgs {
    /// Model file or built-in name
    model: String,
    /// Events file; defaults to the built-in partition when MODEL is built in
    events: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Dot)]
    format: Format,
    /// Write the artifact here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CarveArgs {
    /// Model file or built-in name
    model: String,
    /// Events file; defaults to the built-in partition when MODEL is built in
    events: Option<String>,
    /// Search for the best grouping (the default when --groups is absent)
    #[arg(long)]
    auto: bool,
    /// Cap the number of parts the search may produce (default: no cap)
    #[arg(long)]
    max_parts: Option<usize>,
    /// Grouping file or built-in name to validate instead of searching
    #[arg(long, conflicts_with_all = ["auto", "max_parts"])]
    groups: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the artifact here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model file or built-in name
    model: String,
    /// Injection file or built-in list name; may repeat
    #[arg(long)]
    injections: Vec<String>,
    /// Shorthand like `cola+75`: a selection named cola plus one coin per
    /// number. Needs the model to have one selection and one coin creator.
    #[arg(long)]
    inject: Vec<String>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// text: one line per firing; json: the whole trace as JSON
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the trace here, one JSON object per line
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConformsArgs {
    /// Model file or built-in name
    model: String,
    /// Events file; defaults to the built-in partition when MODEL is built in
    events: Option<String>,
    /// Trace file in the simulator's JSON-lines format
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Model file or built-in name
    model: String,
    /// Scenario files or built-in names, run in order with exports chained.
    /// Defaults to the vending suite when MODEL is in the vending family.
    scenarios: Vec<String>,
    /// Events file; defaults to the built-in partition when MODEL is built in
    #[arg(long)]
    events: Option<String>,
    /// Grouping file or built-in name; defaults likewise
    #[arg(long)]
    groups: Option<String>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Write the full JSON reports here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Run cases one at a time instead of on a thread pool
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Built-in family: vending or shopping
    name: String,
    /// Directory to write into
    #[arg(long, default_value = ".")]
    dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Check(a) => cmd_check(a),
        Command::Events(a) => cmd_events(a),
        Command::Behavior(a) => cmd_behavior(a),
        Command::Carve(a) => cmd_carve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Conforms(a) => cmd_conforms(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Export(a) => cmd_export(a),
    }
}

// ---------------------------------------------------------------- loading

/// Read `arg` as a file when one exists, else fall back to built-in text.
fn read_text(arg: &str, builtin: fn(&str) -> Option<&'static str>, what: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        return fs::read_to_string(path).with_context(|| format!("reading {what} `{arg}`"));
    }
    if let Some(text) = builtin(arg) {
        return Ok(text.to_string());
    }
    bail!("{what} `{arg}` is neither a file nor a built-in name")
}

fn print_parse_errors(label: &str, errors: &[ParseError]) {
    for e in errors {
        eprintln!("{label}: {e}");
    }
}

fn print_diagnostics(diags: &[tm::Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

/// Parse the model named on the command line. `None` means the input was
/// readable but carries errors, already reported on standard error.
fn load_model(arg: &str) -> Result<Option<StaticModel>> {
    let text = read_text(arg, tm::fixtures::model_source, "model")?;
    match parse_model(&text) {
        Ok(m) => Ok(Some(m)),
        Err(errors) => {
            print_parse_errors(arg, &errors);
            Ok(None)
        }
    }
}

/// Fetch the events text for `events_arg`, defaulting to the built-in
/// partition when the model itself is a built-in name.
fn events_text(model_arg: &str, events_arg: Option<&str>) -> Result<(String, String)> {
    match events_arg {
        Some(arg) => Ok((read_text(arg, tm::fixtures::events_source, "events")?, arg.to_string())),
        None => tm::fixtures::events_source(model_arg)
            .map(|t| (t.to_string(), format!("{model_arg} (built-in events)")))
            .ok_or_else(|| anyhow!("an events file is required unless the model is built in")),
    }
}

fn load_pair(model_arg: &str, events_arg: Option<&str>) -> Result<Option<(StaticModel, EventsModel)>> {
    let Some(model) = load_model(model_arg)? else { return Ok(None) };
    let (text, label) = events_text(model_arg, events_arg)?;
    match parse_events(&text, &model) {
        Ok(events) => Ok(Some((model, events))),
        Err(errors) => {
            print_parse_errors(&label, &errors);
            Ok(None)
        }
    }
}

fn derive_behavior(model: &StaticModel, events: &EventsModel) -> Option<BehavioralModel> {
    match build_behavior(model, events) {
        Ok(b) => Some(b),
        Err(diags) => {
            print_diagnostics(&diags);
            None
        }
    }
}

/// Write to `--out` when given, standard output otherwise.
fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

// --------------------------------------------------------------- commands

fn cmd_check(a: CheckArgs) -> Result<u8> {
    let text = read_text(&a.model, tm::fixtures::model_source, "model")?;
    let model = match parse_model(&text) {
        Ok(m) => m,
        Err(errors) => {
            print_parse_errors(&a.model, &errors);
            return Ok(1);
        }
    };
    let diags = check_static(&model);
    match a.format {
        Format::Text => {
            print_diagnostics(&diags);
            if diags.is_empty() {
                println!(
                    "ok: {} nodes, {} flows, {} triggers",
                    model.nodes.len(),
                    model.flows.len(),
                    model.triggers.len()
                );
            }
        }
        Format::Json => emit(a.out.as_deref(), &to_json(&diags)?)?,
        Format::Dot => {
            print_diagnostics(&diags);
            emit(a.out.as_deref(), &model_to_dot(&model))?;
        }
    }
    Ok(if diags.is_empty() { 0 } else { 1 })
}

fn cmd_events(a: EventsArgs) -> Result<u8> {
    let Some((model, events)) = load_pair(&a.model, a.events.as_deref())? else {
        return Ok(1);
    };
    let diags = tm::validate_events(&model, &events);
    print_diagnostics(&diags);
    if diags.is_empty() {
        let covered: usize = events.events.iter().map(|e| e.nodes.len()).sum();
        println!("ok: {} events over {} node slots", events.events.len(), covered);
        Ok(0)
    } else {
        Ok(1)
    }
}

fn cmd_behavior(a: BehaviorArgs) -> Result<u8> {
    let Some((model, events)) = load_pair(&a.model, a.events.as_deref())? else {
        return Ok(1);
    };
    let Some(behavior) = derive_behavior(&model, &events) else { return Ok(1) };
    let artifact = match a.format {
        Format::Dot => behavior_to_dot(&behavior),
        Format::Json => to_json(&behavior)?,
        Format::Text => {
            let mut buf = String::new();
            for e in &behavior.edges {
                buf.push_str(&format!(
                    "{} -> {} [{} via {} -> {}]\n",
                    e.from,
                    e.to,
                    kind_label(e.kind),
                    e.from_node,
                    e.to_node
                ));
            }
            buf
        }
    };
    emit(a.out.as_deref(), &artifact)?;
    Ok(0)
}

fn kind_label(kind: InducedKind) -> &'static str {
    match kind {
        InducedKind::PlainFlow => "flow",
        InducedKind::TransferFlow => "transfer",
        InducedKind::Trigger => "trigger",
    }
}

fn cmd_carve(a: CarveArgs) -> Result<u8> {
    let Some((model, events)) = load_pair(&a.model, a.events.as_deref())? else {
        return Ok(1);
    };
    let Some(behavior) = derive_behavior(&model, &events) else { return Ok(1) };

    let carving = if let Some(groups_arg) = &a.groups {
        let text = read_text(groups_arg, tm::fixtures::groups_source, "grouping")?;
        let pairs = match parse_groups(&text) {
            Ok(p) => p,
            Err(errors) => {
                print_parse_errors(groups_arg, &errors);
                return Ok(1);
            }
        };
        match carve_manual(&behavior, &pairs) {
            Ok(c) => c,
            Err(diags) => {
                print_diagnostics(&diags);
                return Ok(1);
            }
        }
    } else {
        carve_auto(&behavior, a.max_parts.unwrap_or(usize::MAX))
    };

    let artifact = match a.format {
        Format::Dot => carving_to_dot(&behavior, &carving),
        Format::Json => to_json(&carving)?,
        Format::Text => carving_summary(&carving),
    };
    emit(a.out.as_deref(), &artifact)?;
    Ok(0)
}

fn carving_summary(carving: &Carving) -> String {
    let mut buf = String::new();
    for part in &carving.parts {
        buf.push_str(&format!("{}: {}\n", part.name, part.members.join(", ")));
    }
    for joint in &carving.joints {
        buf.push_str(&format!(
            "joint: {} -> {} [{} via {} -> {}]\n",
            joint.from,
            joint.to,
            kind_label(joint.kind),
            joint.from_node,
            joint.to_node
        ));
    }
    for notice in &carving.notices {
        buf.push_str(&format!("# {notice}\n"));
    }
    buf
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8> {
    let Some(model) = load_model(&a.model)? else { return Ok(1) };

    let mut injections: Vec<Injection> = Vec::new();
    for arg in &a.injections {
        let text = read_text(arg, tm::fixtures::injection_list, "injection list")?;
        match parse_injections(&text) {
            Ok(list) => injections.extend(list),
            Err(errors) => {
                print_parse_errors(arg, &errors);
                return Ok(1);
            }
        }
    }
    for spec in &a.inject {
        injections.extend(shorthand_injections(&model, spec)?);
    }
    if injections.is_empty() {
        bail!("nothing to inject; pass --injections or --inject");
    }

    let (trace, code, summary) = match simulate(&model, &injections, a.max_steps) {
        Ok(trace) => {
            let line = format!("firings: {} (quiescent)", trace.firings.len());
            (trace, 0, line)
        }
        Err(SimError::StepBudgetExhausted { trace }) => {
            let line = format!(
                "firings: {} (step budget exhausted, work remains)",
                trace.firings.len()
            );
            (trace, 1, line)
        }
        Err(e) => {
            eprintln!("{e}");
            return Ok(1);
        }
    };

    match a.format {
        Format::Json => print!("{}", to_json(&trace)?),
        _ => {
            for f in &trace.firings {
                let made: Vec<&str> =
                    f.produced.iter().map(|inst| inst.thing_type.as_str()).collect();
                let made = if made.is_empty() { "-".to_string() } else { made.join(",") };
                let mark = if f.injected { "*" } else { " " };
                println!("{:>5}{} {}  {}", f.step, mark, f.node, made);
            }
        }
    }
    // Keep standard output machine-readable when a structured format was
    // asked for; the human summary moves to standard error.
    if code == 0 && !matches!(a.format, Format::Json) {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if let Some(path) = &a.out {
        fs::write(path, trace.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(code)
}

/// Expand `cola+75` into a selection injection plus one coin per number.
fn shorthand_injections(model: &StaticModel, spec: &str) -> Result<Vec<Injection>> {
    let mut out = Vec::new();
    for token in spec.split('+').filter(|t| !t.is_empty()) {
        if let Ok(value) = token.parse::<i64>() {
            let node = sole_creator(model, "coin")?;
            let mut inst = ThingInstance::new("coin");
            inst.attrs.insert("value".into(), Value::Int(value));
            out.push(Injection::new(node, inst));
        } else {
            let node = sole_creator(model, "selection")?;
            let mut inst = ThingInstance::new("selection");
            inst.attrs.insert("name".into(), Value::Text(token.to_string()));
            out.push(Injection::new(node, inst));
        }
    }
    if out.is_empty() {
        bail!("empty --inject spec");
    }
    Ok(out)
}

/// The create node for `thing` that acts as an external entry point: no
/// inbound flow or trigger, so nothing inside the model feeds it.
fn sole_creator(model: &StaticModel, thing: &str) -> Result<String> {
    let fed: std::collections::BTreeSet<&str> = model
        .flows
        .iter()
        .map(|f| f.to.as_str())
        .chain(model.triggers.iter().map(|t| t.to.as_str()))
        .collect();
    let mut creators = model
        .nodes
        .values()
        .filter(|n| n.kind == ActionKind::Create && n.thing_type == thing && !fed.contains(n.id.as_str()))
        .map(|n| n.id.clone());
    match (creators.next(), creators.next()) {
        (Some(node), None) => Ok(node),
        (None, _) => {
            bail!("--inject shorthand needs an entry-point create node for `{thing}`; this model has none")
        }
        (Some(_), Some(_)) => {
            bail!("--inject shorthand is ambiguous: several entry points create `{thing}`; use --injections")
        }
    }
}

fn cmd_conforms(a: ConformsArgs) -> Result<u8> {
    let Some((model, events)) = load_pair(&a.model, a.events.as_deref())? else {
        return Ok(1);
    };
    let Some(behavior) = derive_behavior(&model, &events) else { return Ok(1) };
    let text = fs::read_to_string(&a.trace)
        .with_context(|| format!("reading trace `{}`", a.trace.display()))?;
    let trace = match Trace::from_jsonl(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", a.trace.display());
            return Ok(1);
        }
    };
    match conforms(&trace, &behavior) {
        Ok(report) => {
            for v in &report.violations {
                eprintln!("step {} node {}: {}", v.step, v.node, v.message);
            }
            println!("checked: {} firings, {} violations", report.checked, report.violations.len());
            Ok(if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(1)
        }
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<u8> {
    let Some((model, events)) = load_pair(&a.model, a.events.as_deref())? else {
        return Ok(1);
    };
    let Some(behavior) = derive_behavior(&model, &events) else { return Ok(1) };

    let groups_text = match &a.groups {
        Some(arg) => Some((read_text(arg, tm::fixtures::groups_source, "grouping")?, arg.clone())),
        None => tm::fixtures::groups_source(&a.model)
            .map(|t| (t.to_string(), format!("{} (built-in groups)", a.model))),
    };
    let carving = match groups_text {
        Some((text, label)) => {
            let pairs = match parse_groups(&text) {
                Ok(p) => p,
                Err(errors) => {
                    print_parse_errors(&label, &errors);
                    return Ok(1);
                }
            };
            match carve_manual(&behavior, &pairs) {
                Ok(c) => Some(c),
                Err(diags) => {
                    print_diagnostics(&diags);
                    return Ok(1);
                }
            }
        }
        None => None,
    };

    let scenario_args: Vec<String> = if !a.scenarios.is_empty() {
        a.scenarios.clone()
    } else if a.model.starts_with("vending") && tm::fixtures::model_source(&a.model).is_some() {
        vec!["drinks".into(), "coins".into(), "outputs".into()]
    } else {
        bail!("no scenarios given; built-in scenario names exist only for the vending family")
    };

    let ctx = ScenarioContext {
        model: &model,
        behavior: &behavior,
        carving: carving.as_ref(),
        max_steps: a.max_steps,
    };
    let mode = if a.sequential { ExecMode::Sequential } else { ExecMode::Parallel };

    let mut reports: Vec<ValidationReport> = Vec::new();
    let mut all_pass = true;
    for arg in &scenario_args {
        let text = read_text(arg, tm::fixtures::scenario_text, "scenario")?;
        let scenario = match parse_scenario(&text) {
            Ok(s) => s,
            Err(errors) => {
                print_parse_errors(arg, &errors);
                return Ok(1);
            }
        };
        let report = match run_scenario(&ctx, &scenario, &reports, mode) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{e}");
                return Ok(1);
            }
        };
        println!("{}", report.summary_line());
        for failure in report.failures.iter().take(10) {
            eprintln!("  case {}: {}", failure.case, failure.message);
        }
        if report.failures.len() > 10 {
            eprintln!("  ... and {} more failing cases", report.failures.len() - 10);
        }
        all_pass &= report.passed();
        reports.push(report);
    }
    if let Some(path) = &a.report {
        fs::write(path, to_json(&reports)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_export(a: ExportArgs) -> Result<u8> {
    let files = tm::fixtures::fixture_files(&a.name)
        .ok_or_else(|| anyhow!("no built-in family `{}`; available: vending, shopping", a.name))?;
    fs::create_dir_all(&a.dir).with_context(|| format!("creating {}", a.dir.display()))?;
    for (name, text) in files {
        let path = a.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}
