//! Command tree for the `floornav` binary.
//!
//! Machine output is one JSON document per line on stdout; `--pretty` swaps in
//! human-readable tables. Diagnostics go to stderr.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use floornav::bench::{
    hypothesis_report, load_records, success_rate, DifficultyFilter, Experiment, ExperimentConfig, GroupKey, MapSpec,
    ReportOptions,
};
use floornav::fixtures;
use floornav::floorplan::{
    apply_labeling, build_connectivity, classify_task, double_map, oracle_plan, room_hop_distance, BridgeSpec,
    ConnectivityGraph, FloorPlan, LabelingOptions, LabelingScheme, LoadMode, NavTask,
};
use floornav::grammar::{
    grade_connectivity, parse_connectivity_claim, parse_plan, parse_response, serialize_plan, validate_plan_with,
    DoorStates, Plan, PlanFormat, Profile, ValidateOptions, Verdict,
};
use floornav::sim::{execute_with, rasterize, render_png, ExecOptions, RenderOptions};
use floornav::stats::{two_proportion_z_test, welch_t_test};
use floornav::vlm::{
    build_prompt, BackendConfig, BackendKind, ImageRef, PromptSpec, QueryContext, TemplateId, TranscriptCache,
    VlmClient,
};

/// Subcommand path and the library operations it exposes. Each operation has
/// exactly one home.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("map validate", &["FloorPlan::load"]),
    ("graph", &["build_connectivity", "grade_connectivity"]),
    ("oracle", &["oracle_plan", "serialize_plan"]),
    ("classify", &["room_hop_distance", "classify_task"]),
    ("transform double", &["double_map"]),
    ("transform relabel", &["apply_labeling"]),
    ("rasterize", &["rasterize"]),
    ("render", &["render_png"]),
    ("prompt", &["build_prompt"]),
    ("query", &["query", "mock_noisy_respond"]),
    ("validate-plan", &["parse_plan_json", "parse_plan_lines", "validate_plan"]),
    ("simulate", &["execute", "approach_pose", "astar"]),
    ("bench run", &["sample_tasks", "run_experiment", "success_rate"]),
    ("bench report", &["hypothesis_report"]),
    ("stats ttest", &["welch_t_test"]),
];

#[derive(Debug, Parser)]
#[command(name = "floornav", version, about = "Floor-plan navigation planning toolkit")]
pub struct Cli {
    /// Human-readable tables instead of JSON lines.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Environment variable holding the API credential for HTTP backends.
    #[arg(long, global = true, value_name = "VAR")]
    pub credential_env: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map document checks.
    #[command(subcommand)]
    Map(MapCommand),
    /// Print the room/door connectivity graph, or grade a claimed one.
    Graph(GraphArgs),
    /// Print the shortest ground-truth plan for a task.
    Oracle(OracleArgs),
    /// Hop distance and difficulty class of a task.
    Classify(ClassifyArgs),
    /// Produce a derived map.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Write an occupancy grid as a binary PGM.
    Rasterize(RasterizeArgs),
    /// Write the labeled map image as PNG.
    Render(RenderArgs),
    /// Print the prompt for a task.
    Prompt(PromptArgs),
    /// Ask a backend for a plan and print the transcript.
    Query(QueryArgs),
    /// Check a plan against the connectivity graph.
    ValidatePlan(PlanArgs),
    /// Execute a plan on the occupancy grid.
    Simulate(SimulateArgs),
    /// Run experiments and build reports.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Statistical tests on outcome files.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Subcommand)]
pub enum MapCommand {
    /// Load and validate a map; print a summary.
    Validate {
        #[command(flatten)]
        map: MapArg,
        /// Warn about unknown keys instead of rejecting them.
        #[arg(long)]
        lenient: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransformCommand {
    /// Join two copies of a map with one new door.
    Double(DoubleArgs),
    /// Replace labels with a sparse or dense scheme.
    Relabel(RelabelArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Run trials and print success rates per map and difficulty.
    Run(Box<BenchRunArgs>),
    /// Compare arms from a record file.
    Report(BenchReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Welch's t-test on two single-column CSV files.
    Ttest(TtestArgs),
}

#[derive(Debug, Args)]
pub struct MapArg {
    /// Map JSON file, or `fixture:<name>` for a shipped map.
    #[arg(long, value_name = "PATH")]
    pub map: String,
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    #[command(flatten)]
    pub map: MapArg,
    /// Start room (id or display name).
    #[arg(long)]
    pub start: String,
    /// Goal room (id or display name).
    #[arg(long)]
    pub goal: String,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub map: MapArg,
    /// Model response (text or JSON) whose door claims are graded.
    #[arg(long, value_name = "FILE")]
    pub grade: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Lines,
}

impl From<FormatArg> for PlanFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => PlanFormat::Json,
            FormatArg::Lines => PlanFormat::Lines,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    /// JSON when the text holds a JSON plan, otherwise lines.
    Auto,
    Json,
    Lines,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ProfileArg {
    #[default]
    Strict,
    Extended,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Strict => Profile::Strict,
            ProfileArg::Extended => Profile::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Sparse,
    Dense,
}

impl From<SchemeArg> for LabelingScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Sparse => LabelingScheme::Sparse,
            SchemeArg::Dense => LabelingScheme::Dense,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    Instructional,
    DraftPersona,
}

impl From<TemplateArg> for TemplateId {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::Instructional => TemplateId::Instructional,
            TemplateArg::DraftPersona => TemplateId::DraftPersona,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    MockOracle,
    MockNoisy,
    MockScripted,
    HttpChat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DifficultyArg {
    Easy,
    Hard,
    Any,
}

impl From<DifficultyArg> for DifficultyFilter {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Easy => DifficultyFilter::Easy,
            DifficultyArg::Hard => DifficultyFilter::Hard,
            DifficultyArg::Any => DifficultyFilter::Any,
        }
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub map: MapArg,
    #[arg(long, requires = "goal", required_unless_present = "all")]
    pub start: Option<String>,
    #[arg(long, requires = "start")]
    pub goal: Option<String>,
    /// Classify every ordered pair of distinct rooms.
    #[arg(long, conflicts_with_all = ["start", "goal"])]
    pub all: bool,
}

#[derive(Debug, Args)]
pub struct DoubleArgs {
    #[command(flatten)]
    pub map: MapArg,
    /// Room of the left copy that receives the bridge door.
    #[arg(long)]
    pub left: String,
    /// Room of the right copy that receives the bridge door.
    #[arg(long)]
    pub right: String,
    /// Door extent along the seam.
    #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
    pub span: Option<Vec<f64>>,
    #[arg(long)]
    pub width: Option<f64>,
    /// Write the map here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RelabelArgs {
    #[command(flatten)]
    pub map: MapArg,
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    #[command(flatten)]
    pub map: MapArg,
    /// Cell edge length in map units.
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub map: MapArg,
    #[arg(long, value_enum)]
    pub labeling: Option<SchemeArg>,
    #[arg(long, default_value_t = 8)]
    pub pixels_per_unit: u32,
    #[arg(long)]
    pub no_text: bool,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PromptOptions {
    #[arg(long, value_enum, default_value = "instructional")]
    pub template: TemplateArg,
    #[arg(long, value_enum, default_value = "strict")]
    pub profile: ProfileArg,
    /// Do not ask the model to list door connections.
    #[arg(long)]
    pub no_connections: bool,
    /// Relabel the map before rendering the prompt image.
    #[arg(long, value_enum)]
    pub labeling: Option<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub prompt: PromptOptions,
    /// Also write the prompt image.
    #[arg(long, value_name = "FILE")]
    pub image_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Backend config JSON; the flags below override its fields.
    #[arg(long, value_name = "FILE")]
    pub backend_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Seed for the noisy mock.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Error probability for the noisy mock.
    #[arg(long)]
    pub p_error: Option<f64>,
    /// Response script for the scripted mock.
    #[arg(long, value_name = "FILE")]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Transcript cache directory.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Serve transcripts from the cache only; never touch the network.
    #[arg(long, requires = "cache_dir")]
    pub replay: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub prompt: PromptOptions,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = 0)]
    pub trial: u32,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Plan file; `-` reads stdin.
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: InputFormat,
    #[arg(long, value_enum, default_value = "strict")]
    pub profile: ProfileArg,
    /// Require an ApproachDoor before acting on a door.
    #[arg(long)]
    pub pedantic: bool,
    /// Doors open at the start (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub open: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,
}

#[derive(Debug, Args)]
pub struct BenchRunArgs {
    /// Experiment config JSON. Without it, `--map` builds one.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Map to add (path or `fixture:<name>`); repeatable.
    #[arg(long, value_name = "PATH")]
    pub map: Vec<String>,
    #[arg(long, value_enum)]
    pub labeling: Option<SchemeArg>,
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, value_enum)]
    pub difficulty: Vec<DifficultyArg>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON-lines record file; an existing file is resumed.
    #[arg(long, value_name = "FILE")]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub max_trials: Option<usize>,
    /// Also write the comparison report into this directory.
    #[arg(long, value_name = "DIR")]
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchReportArgs {
    #[arg(long, value_name = "FILE")]
    pub records: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Restrict the map-size and difficulty comparisons to one labeling.
    #[arg(long, value_enum)]
    pub labeling: Option<SchemeArg>,
    /// Write report.json, report.csv and one SVG chart per comparison.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    #[arg(long, value_name = "CSV")]
    pub a: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub b: PathBuf,
    /// Column to read; defaults to the first.
    #[arg(long)]
    pub column: Option<String>,
}

/// Result of a command that ran to completion. `Failed` means the domain
/// answer was negative (invalid map, incorrect plan, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

struct Out<'a> {
    pretty: bool,
    w: &'a mut dyn Write,
}

impl Out<'_> {
    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let line = if self.pretty {
            serde_json::to_string_pretty(value)?
        } else {
            serde_json::to_string(value)?
        };
        writeln!(self.w, "{line}")?;
        Ok(())
    }

    fn text(&mut self, s: &str) -> Result<()> {
        writeln!(self.w, "{s}")?;
        Ok(())
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<Status> {
    let mut out = Out {
        pretty: cli.pretty,
        w: stdout,
    };
    let cred = cli.credential_env.as_deref();
    match cli.command {
        Command::Map(MapCommand::Validate { map, lenient }) => map_validate(&map.map, lenient, &mut out),
        Command::Graph(a) => graph(a, &mut out),
        Command::Oracle(a) => oracle(a, &mut out),
        Command::Classify(a) => classify(a, &mut out),
        Command::Transform(TransformCommand::Double(a)) => transform_double(a, &mut out),
        Command::Transform(TransformCommand::Relabel(a)) => transform_relabel(a, &mut out),
        Command::Rasterize(a) => rasterize_cmd(a, &mut out),
        Command::Render(a) => render(a, &mut out),
        Command::Prompt(a) => prompt(a, &mut out),
        Command::Query(a) => query(a, cred, &mut out),
        Command::ValidatePlan(a) => validate(a, &mut out),
        Command::Simulate(a) => simulate(a, &mut out),
        Command::Bench(BenchCommand::Run(a)) => bench_run(*a, cred, &mut out),
        Command::Bench(BenchCommand::Report(a)) => bench_report(a, &mut out),
        Command::Stats(StatsCommand::Ttest(a)) => ttest(a, &mut out),
    }
}

fn load_map_mode(reference: &str, mode: LoadMode) -> Result<(FloorPlan, Vec<String>)> {
    if let Some(name) = reference.strip_prefix("fixture:") {
        let plan = fixtures::by_name(name).ok_or_else(|| anyhow!("unknown fixture `{name}`"))?;
        return Ok((plan, Vec::new()));
    }
    let loaded = FloorPlan::load(reference, mode)?;
    Ok((loaded.plan, loaded.warnings))
}

fn load_map(reference: &str) -> Result<FloorPlan> {
    Ok(load_map_mode(reference, LoadMode::Strict)?.0)
}

fn resolve(graph: &ConnectivityGraph, room: &str) -> Result<String> {
    graph
        .resolve_room(room)
        .map(str::to_string)
        .ok_or_else(|| anyhow!("map `{}` has no room `{room}`", graph.map_id))
}

fn load_task(args: &TaskArgs) -> Result<(FloorPlan, ConnectivityGraph, NavTask)> {
    let plan = load_map(&args.map.map)?;
    let graph = build_connectivity(&plan)?;
    let task = NavTask::classified(&graph, &resolve(&graph, &args.start)?, &resolve(&graph, &args.goal)?)?;
    Ok((plan, graph, task))
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        return Ok(buf);
    }
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn map_validate(reference: &str, lenient: bool, out: &mut Out) -> Result<Status> {
    let mode = if lenient { LoadMode::Lenient } else { LoadMode::Strict };
    match load_map_mode(reference, mode) {
        Ok((plan, warnings)) => {
            out.json(&serde_json::json!({
                "valid": true,
                "map_id": plan.map_id,
                "rooms": plan.rooms.len(),
                "doors": plan.doors.len(),
                "labels": plan.labels.len(),
                "warnings": warnings,
            }))?;
            Ok(Status::Ok)
        }
        Err(e) => {
            out.json(&serde_json::json!({"valid": false, "error": format!("{e:#}")}))?;
            Ok(Status::Failed)
        }
    }
}

fn graph(args: GraphArgs, out: &mut Out) -> Result<Status> {
    let graph = build_connectivity(&load_map(&args.map.map)?)?;
    if let Some(path) = args.grade {
        let text = String::from_utf8_lossy(&read_input(&path)?).into_owned();
        let grade = grade_connectivity(&parse_connectivity_claim(&text), &graph);
        if out.pretty {
            out.text(&format!(
                "precision {:.3}  recall {:.3}  ({} matched, {} claimed, {} actual)",
                grade.precision, grade.recall, grade.matched, grade.claimed, grade.actual
            ))?;
        } else {
            out.json(&grade)?;
        }
        return Ok(Status::Ok);
    }
    if out.pretty {
        out.text(&format!("{}: {} rooms, {} doors", graph.map_id, graph.nodes.len(), graph.edges.len()))?;
        for e in &graph.edges {
            let name = |id: &str| graph.display_name(id).unwrap_or(id).to_string();
            out.text(&format!("  {:<6} {} <-> {}", e.door_id, name(&e.rooms[0]), name(&e.rooms[1])))?;
        }
    } else {
        out.json(&graph)?;
    }
    Ok(Status::Ok)
}

fn oracle(args: OracleArgs, out: &mut Out) -> Result<Status> {
    let (_, graph, task) = load_task(&args.task)?;
    let plan = oracle_plan(&graph, &task)?;
    out.text(&serialize_plan(&plan, args.format.into()))?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ClassifyRow {
    start_room: String,
    goal_room: String,
    hops: Option<usize>,
    class: &'static str,
}

fn classify(args: ClassifyArgs, out: &mut Out) -> Result<Status> {
    let graph = build_connectivity(&load_map(&args.map.map)?)?;
    let pairs: Vec<(String, String)> = if args.all {
        let n = &graph.nodes;
        n.iter()
            .flat_map(|a| n.iter().filter(move |b| *b != a).map(move |b| (a.clone(), b.clone())))
            .collect()
    } else {
        let (s, g) = (args.start.unwrap_or_default(), args.goal.unwrap_or_default());
        vec![(resolve(&graph, &s)?, resolve(&graph, &g)?)]
    };
    for (s, g) in pairs {
        let hops = room_hop_distance(&graph, &s, &g)?;
        let task = NavTask::classified(&graph, &s, &g)?;
        let class = if s == g {
            "degenerate"
        } else {
            match classify_task(&graph, &task)? {
                floornav::floorplan::TaskClass::Easy => "easy",
                floornav::floorplan::TaskClass::Hard => "hard",
                floornav::floorplan::TaskClass::Other => "other",
            }
        };
        if out.pretty {
            let hop = hops.map_or("-".to_string(), |h| h.to_string());
            out.text(&format!("{s:<24} {g:<24} {hop:>4} {class}"))?;
        } else {
            out.json(&ClassifyRow {
                start_room: s,
                goal_room: g,
                hops,
                class,
            })?;
        }
    }
    Ok(Status::Ok)
}

fn emit_map(plan: &FloorPlan, path: Option<&Path>, out: &mut Out) -> Result<Status> {
    match path {
        Some(p) => {
            write_file(p, format!("{}\n", plan.to_json_pretty()).as_bytes())?;
            out.json(&serde_json::json!({
                "map_id": plan.map_id,
                "rooms": plan.rooms.len(),
                "doors": plan.doors.len(),
                "labels": plan.labels.len(),
                "out": p,
            }))?;
        }
        None => out.json(plan)?,
    }
    Ok(Status::Ok)
}

fn transform_double(args: DoubleArgs, out: &mut Out) -> Result<Status> {
    let plan = load_map(&args.map.map)?;
    let mut bridge = BridgeSpec::new(args.left, args.right);
    bridge.span = args.span.map(|s| [s[0], s[1]]);
    bridge.width = args.width;
    let doubled = double_map(&plan, &bridge)?;
    emit_map(&doubled, args.out.as_deref(), out)
}

fn transform_relabel(args: RelabelArgs, out: &mut Out) -> Result<Status> {
    let plan = load_map(&args.map.map)?;
    let relabeled = apply_labeling(&plan, args.scheme.into(), &LabelingOptions::default());
    emit_map(&relabeled, args.out.as_deref(), out)
}

fn rasterize_cmd(args: RasterizeArgs, out: &mut Out) -> Result<Status> {
    let plan = load_map(&args.map.map)?;
    let grid = rasterize(&plan, args.resolution)?;
    write_file(&args.out, &grid.to_pgm())?;
    out.json(&serde_json::json!({
        "map_id": plan.map_id,
        "width": grid.width,
        "height": grid.height,
        "resolution": args.resolution,
        "components": grid.component_count(&grid.all_open()),
        "out": args.out,
    }))?;
    Ok(Status::Ok)
}

fn labeled(plan: FloorPlan, scheme: Option<SchemeArg>) -> FloorPlan {
    match scheme {
        Some(s) => apply_labeling(&plan, s.into(), &LabelingOptions::default()),
        None => plan,
    }
}

fn render(args: RenderArgs, out: &mut Out) -> Result<Status> {
    let plan = labeled(load_map(&args.map.map)?, args.labeling);
    let options = RenderOptions {
        pixels_per_unit: args.pixels_per_unit,
        draw_labels: !args.no_text,
        draw_door_ids: !args.no_text,
        ..RenderOptions::default()
    };
    let png = render_png(&plan, &options)?;
    write_file(&args.out, &png)?;
    out.json(&serde_json::json!({"map_id": plan.map_id, "bytes": png.len(), "out": args.out}))?;
    Ok(Status::Ok)
}

fn prompt_for(
    plan: &FloorPlan,
    graph: &ConnectivityGraph,
    task: &NavTask,
    opts: &PromptOptions,
) -> Result<floornav::vlm::Prompt> {
    let image_plan = labeled(plan.clone(), opts.labeling);
    let png = render_png(&image_plan, &RenderOptions::default())?;
    let name = |id: &str| graph.display_name(id).unwrap_or(id).to_string();
    Ok(build_prompt(&PromptSpec {
        template_id: opts.template.into(),
        start_room: name(&task.start_room),
        goal_room: name(&task.goal_room),
        profile: opts.profile.into(),
        ask_connections: !opts.no_connections,
        image: ImageRef::Png(png),
    })?)
}

fn prompt(args: PromptArgs, out: &mut Out) -> Result<Status> {
    let (plan, graph, task) = load_task(&args.task)?;
    let p = prompt_for(&plan, &graph, &task, &args.prompt)?;
    if let Some(path) = &args.image_out {
        write_file(path, &p.image_png)?;
    }
    if out.pretty {
        out.text(&p.text)?;
    } else {
        out.json(&p)?;
    }
    Ok(Status::Ok)
}

fn backend_config(args: &BackendArgs, base: Option<BackendConfig>, cred: Option<&str>) -> Result<BackendConfig> {
    let mut cfg = match &args.backend_config {
        Some(path) => serde_json::from_slice(&read_input(path)?)
            .with_context(|| format!("parsing backend config {}", path.display()))?,
        None => base.unwrap_or_default(),
    };
    if let Some(kind) = args.backend {
        cfg.kind = match kind {
            BackendArg::MockOracle => BackendKind::MockOracle,
            BackendArg::MockNoisy => BackendKind::MockNoisy,
            BackendArg::MockScripted => BackendKind::MockScripted,
            BackendArg::HttpChat => BackendKind::HttpChat,
        };
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(p) = args.p_error {
        cfg.p_error = p;
    }
    if let Some(s) = &args.script {
        cfg.script = Some(s.clone());
    }
    if let Some(e) = &args.endpoint {
        cfg.endpoint = Some(e.clone());
    }
    if let Some(m) = &args.model {
        cfg.model = m.clone();
    }
    if let Some(c) = cred {
        cfg.credential_env = Some(c.to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn query(args: QueryArgs, cred: Option<&str>, out: &mut Out) -> Result<Status> {
    let (plan, graph, task) = load_task(&args.task)?;
    let prompt = prompt_for(&plan, &graph, &task, &args.prompt)?;
    let cfg = backend_config(&args.backend, None, cred)?;
    let cache = args.backend.cache_dir.as_ref().map(TranscriptCache::new);
    let client = VlmClient::new(cfg, cache, args.backend.replay)?;
    let ctx = QueryContext {
        graph: &graph,
        task: &task,
        trial: args.trial,
        profile: args.prompt.profile.into(),
    };
    let transcript = client.query(&prompt, &ctx)?;
    let failed = transcript.error.is_some();
    if out.pretty {
        match (&transcript.error, &transcript.response_text) {
            (Some(e), _) => out.text(&format!("error ({}): {}", e.kind, e.message))?,
            (None, Some(text)) => out.text(text)?,
            (None, None) => {}
        }
    } else {
        out.json(&transcript)?;
    }
    Ok(if failed { Status::Failed } else { Status::Ok })
}

fn read_plan(args: &PlanArgs, task: &NavTask) -> Result<std::result::Result<Plan, Verdict>> {
    let bytes = read_input(&args.plan)?;
    let text = String::from_utf8_lossy(&bytes);
    let profile = args.profile.into();
    let parsed = match args.format {
        InputFormat::Auto => parse_response(&text, profile),
        InputFormat::Json => parse_plan(&text, PlanFormat::Json, profile),
        InputFormat::Lines => parse_plan(&text, PlanFormat::Lines, profile),
    };
    Ok(parsed.map_err(|e| Verdict::from_parse_error(&e, &task.start_room)))
}

fn door_states(graph: &ConnectivityGraph, open: &[String]) -> Result<DoorStates> {
    let mut ids = Vec::new();
    for d in open {
        let edge = graph.resolve_door(d).ok_or_else(|| anyhow!("map has no door `{d}`"))?;
        ids.push(edge.door_id.clone());
    }
    Ok(DoorStates::with_open(ids))
}

fn validate(args: PlanArgs, out: &mut Out) -> Result<Status> {
    let (_, graph, task) = load_task(&args.task)?;
    let verdict = match read_plan(&args, &task)? {
        Ok(plan) => {
            let doors = door_states(&graph, &args.open)?;
            validate_plan_with(&graph, &task, &plan, &doors, &ValidateOptions { pedantic: args.pedantic })
        }
        Err(v) => v,
    };
    if out.pretty {
        let at = verdict.failing_index.map(|i| format!(" at action {i}")).unwrap_or_default();
        out.text(&format!("{}{at}: {}", verdict.outcome.as_str(), verdict.detail))?;
        out.text(&format!("rooms: {}", verdict.trace.join(" -> ")))?;
    } else {
        out.json(&verdict)?;
    }
    Ok(if verdict.is_correct() { Status::Ok } else { Status::Failed })
}

fn simulate(args: SimulateArgs, out: &mut Out) -> Result<Status> {
    let (plan, graph, task) = load_task(&args.plan.task)?;
    let parsed = match read_plan(&args.plan, &task)? {
        Ok(p) => p,
        Err(verdict) => {
            out.json(&verdict)?;
            return Ok(Status::Failed);
        }
    };
    let grid = rasterize(&plan, args.resolution)?;
    let doors = door_states(&graph, &args.plan.open)?;
    let log = execute_with(&grid, &parsed, &task, &doors, &ExecOptions { pedantic: args.plan.pedantic })?;
    if out.pretty {
        for r in &log.records {
            out.text(&format!(
                "{:>3} {:<28} {:<16} {:>8.1}",
                r.index,
                r.action.to_string(),
                serde_json::to_value(r.outcome)?.as_str().unwrap_or_default(),
                r.cumulative_length
            ))?;
        }
        out.text(&format!("final room: {}", log.final_state.current_room))?;
    } else {
        out.json(&log)?;
    }
    Ok(if log.succeeded() { Status::Ok } else { Status::Failed })
}

fn bench_run(args: BenchRunArgs, cred: Option<&str>, out: &mut Out) -> Result<Status> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for m in &args.map {
        config.maps.push(MapSpec::new(m.clone()));
    }
    if let Some(s) = args.labeling {
        for m in &mut config.maps {
            m.labeling = Some(s.into());
        }
    }
    if let Some(n) = args.tasks {
        config.tasks_per_map = n;
    }
    if let Some(n) = args.trials {
        config.trials_per_task = n;
    }
    if !args.difficulty.is_empty() {
        config.difficulties = args.difficulty.iter().map(|d| (*d).into()).collect();
    }
    if let Some(seed) = args.backend.seed {
        config.seed = seed;
    }
    config.backend = backend_config(&args.backend, Some(config.backend.clone()), cred)?;
    if args.backend.cache_dir.is_some() {
        config.cache_dir = args.backend.cache_dir.clone();
    }
    config.replay |= args.backend.replay;
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if args.records.is_some() {
        config.records = args.records.clone();
    }
    if args.max_trials.is_some() {
        config.max_trials = args.max_trials;
    }
    if config.maps.is_empty() {
        bail!("no maps: pass --config or --map");
    }

    let records = Experiment::prepare(config)?.run()?;
    let rows = success_rate(&records, &[GroupKey::MapLabel, GroupKey::Difficulty]);
    if out.pretty {
        out.text(&format!("{:<32} {:<10} {:>7} {:>6} {:>5} {:>6}", "map", "difficulty", "correct", "graded", "infra", "rate"))?;
        for r in &rows {
            let rate = r.rate.map_or("-".to_string(), |x| format!("{x:.3}"));
            out.text(&format!(
                "{:<32} {:<10} {:>7} {:>6} {:>5} {:>6}",
                r.group["map_label"], r.group["difficulty"], r.correct, r.graded, r.infrastructure_failures, rate
            ))?;
        }
    } else {
        for r in &rows {
            out.json(r)?;
        }
    }
    if let Some(dir) = &args.report_dir {
        hypothesis_report(&records, &ReportOptions::default()).write_to(dir)?;
    }
    Ok(Status::Ok)
}

fn bench_report(args: BenchReportArgs, out: &mut Out) -> Result<Status> {
    let records = load_records(&args.records)?;
    if records.is_empty() {
        bail!("{} holds no records", args.records.display());
    }
    let options = ReportOptions {
        alpha: args.alpha,
        size_and_difficulty_labeling: args.labeling.map(Into::into),
    };
    let report = hypothesis_report(&records, &options);
    if let Some(dir) = &args.out {
        report.write_to(dir)?;
    }
    if out.pretty {
        for h in &report.hypotheses {
            match &h.pooled {
                Some(c) => {
                    let stat = c
                        .welch
                        .map_or_else(|| c.note.clone().unwrap_or_default(), |t| format!("t={:.3} p={:.4}", t.t, t.p_two_sided));
                    out.text(&format!(
                        "{} {:<16} {} {}/{} vs {} {}/{}  {stat}{}",
                        h.id,
                        h.name,
                        c.a.label,
                        c.a.correct,
                        c.a.graded,
                        c.b.label,
                        c.b.correct,
                        c.b.graded,
                        if h.significant { "  *" } else { "" }
                    ))?;
                }
                None => out.text(&format!("{} {:<16} unavailable: {}", h.id, h.name, h.reason.clone().unwrap_or_default()))?,
            }
        }
    } else {
        out.json(&report)?;
    }
    Ok(Status::Ok)
}

/// Reads one numeric column. A header row is detected by a non-numeric first
/// field; `true`/`false` count as 1/0.
fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let bytes = read_input(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = reader.records();
    let mut index = 0;
    let mut values = Vec::new();
    let parse = |s: &str| -> Option<f64> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Some(1.0),
            "false" => Some(0.0),
            other => other.parse().ok(),
        }
    };
    if let Some(first) = rows.next() {
        let first = first?;
        let header = first.get(0).is_some_and(|f| parse(f).is_none());
        if let Some(name) = column {
            if !header {
                bail!("{}: no header row to look up column `{name}`", path.display());
            }
            index = first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| anyhow!("{}: no column `{name}`", path.display()))?;
        } else if !header {
            values.push(first.get(0).and_then(parse).unwrap_or(f64::NAN));
        }
    }
    for (line, row) in rows.enumerate() {
        let row = row?;
        let field = row.get(index).unwrap_or("");
        if field.is_empty() {
            continue;
        }
        let v = parse(field).ok_or_else(|| anyhow!("{}: row {}: `{field}` is not a number", path.display(), line + 2))?;
        values.push(v);
    }
    Ok(values)
}

fn ttest(args: TtestArgs, out: &mut Out) -> Result<Status> {
    let a = read_column(&args.a, args.column.as_deref())?;
    let b = read_column(&args.b, args.column.as_deref())?;
    let t = welch_t_test(&a, &b)?;
    let binary = |v: &[f64]| v.iter().all(|x| *x == 0.0 || *x == 1.0);
    let z = if binary(&a) && binary(&b) {
        let ones = |v: &[f64]| v.iter().filter(|x| **x == 1.0).count();
        two_proportion_z_test(ones(&a), a.len(), ones(&b), b.len()).ok()
    } else {
        None
    };
    if out.pretty {
        out.text(&format!(
            "mean_a {:.4} (n={})  mean_b {:.4} (n={})\nt = {:.4}  df = {:.2}  p = {:.6}",
            t.mean_a, t.n_a, t.mean_b, t.n_b, t.t, t.degrees_of_freedom, t.p_two_sided
        ))?;
        if let Some(z) = z {
            out.text(&format!("z = {:.4}  p = {:.6}", z.z, z.p_two_sided))?;
        }
    } else {
        out.json(&serde_json::json!({"welch": t, "z": z}))?;
    }
    Ok(Status::Ok)
}
