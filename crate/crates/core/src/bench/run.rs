//! Trial execution with incremental, resumable record files.

use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{DifficultyFilter, ExperimentConfig, MapSpec};
use super::sample::{derive_seed, sample_tasks};
use super::BenchError;
use crate::fixtures;
use crate::floorplan::{
    apply_labeling, build_connectivity, double_map, oracle_plan, ConnectivityGraph, Difficulty, FloorPlan,
    LabelingScheme, LoadMode, NavTask,
};
use crate::grammar::{
    grade_connectivity, parse_connectivity_claim, parse_response, validate_plan_with, ConnectivityGrade, DoorStates,
    Outcome, ValidateOptions, Verdict,
};
use crate::sim::render_png;
use crate::vlm::{build_prompt, BackendKind, ErrorRecord, ImageRef, Prompt, PromptSpec, QueryContext, TranscriptCache, VlmClient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub map_label: String,
    pub map_id: String,
    /// Map id before doubling; equal to `map_id` for undoubled maps.
    pub base_map_id: String,
    pub doubled: bool,
    pub labeling: LabelingScheme,
    pub difficulty: Difficulty,
    pub start_room: String,
    pub goal_room: String,
    pub trial: u32,
    pub backend_id: String,
    pub prompt_hash: String,
    /// Transcript path relative to the cache root.
    pub transcript: String,
    /// `None` when the trial failed for infrastructure reasons.
    pub outcome: Option<Outcome>,
    pub correct: bool,
    pub failing_index: Option<usize>,
    pub plan_len: Option<usize>,
    /// Correct and no longer than the shortest plan.
    pub minimal: bool,
    pub connectivity: Option<ConnectivityGrade>,
    pub infrastructure_failure: Option<ErrorRecord>,
}

impl TrialRecord {
    pub fn key(&self) -> String {
        trial_key(&self.map_label, &self.start_room, &self.goal_room, self.trial)
    }

    pub fn is_infrastructure_failure(&self) -> bool {
        self.infrastructure_failure.is_some()
    }
}

fn trial_key(label: &str, start: &str, goal: &str, trial: u32) -> String {
    format!("{label}|{start}|{goal}|{trial}")
}

/// A map variant ready to run: transformed, labeled, rendered.
pub struct PreparedMap {
    pub spec: MapSpec,
    pub label: String,
    pub base_map_id: String,
    pub plan: FloorPlan,
    pub graph: ConnectivityGraph,
    pub image_png: Vec<u8>,
    pub tasks: Vec<NavTask>,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub maps: Vec<PreparedMap>,
}

fn load_source(path: &str) -> Result<FloorPlan, BenchError> {
    if let Some(name) = path.strip_prefix("fixture:") {
        return fixtures::by_name(name).ok_or_else(|| BenchError::Config(format!("unknown fixture `{name}`")));
    }
    Ok(FloorPlan::load(path, LoadMode::Strict)?.plan)
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self, BenchError> {
        config.validate()?;
        let mut maps = Vec::with_capacity(config.maps.len());
        let mut labels = BTreeSet::new();
        for spec in &config.maps {
            let source = load_source(&spec.path)?;
            let base_map_id = source.map_id.clone();
            let doubled = match &spec.double {
                Some(bridge) => double_map(&source, bridge)?,
                None => source,
            };
            let scheme = spec.labeling.unwrap_or(LabelingScheme::Sparse);
            let plan = apply_labeling(&doubled, scheme, &config.labeling_options);
            let label = spec
                .label
                .clone()
                .unwrap_or_else(|| format!("{}+{}", plan.map_id, scheme.tag()));
            if !labels.insert(label.clone()) {
                return Err(BenchError::Config(format!("duplicate map label `{label}`")));
            }
            let graph = build_connectivity(&plan)?;
            let image_png = render_png(&plan, &config.render)?;
            let mut tasks = Vec::new();
            for filter in spec.difficulties.as_ref().unwrap_or(&config.difficulties) {
                // Keyed by map id, so relabeled variants of one map share tasks.
                let seed = derive_seed(config.seed, &[&plan.map_id, filter.as_str()]);
                tasks.extend(sample_tasks(&graph, config.tasks_per_map, *filter, seed)?);
            }
            maps.push(PreparedMap {
                spec: spec.clone(),
                label,
                base_map_id,
                plan,
                graph,
                image_png,
                tasks,
            });
        }
        Ok(Self { config, maps })
    }

    fn client_for(&self, map: &PreparedMap) -> Result<VlmClient, BenchError> {
        let mut backend = map.spec.backend.clone().unwrap_or_else(|| self.config.backend.clone());
        if backend.kind == BackendKind::MockNoisy && map.spec.backend.is_none() {
            // Independent noise per map variant; otherwise two variants of one
            // map would fail on exactly the same trials.
            backend.seed = Some(derive_seed(backend.seed.unwrap_or_default(), &[&map.label]));
        }
        let cache = self.config.cache_dir.as_ref().map(TranscriptCache::new);
        Ok(VlmClient::new(backend, cache, self.config.replay)?)
    }

    /// Runs every pending trial in (map, task, trial) order and returns all
    /// records, including ones loaded from an existing record file.
    pub fn run(&self) -> Result<Vec<TrialRecord>, BenchError> {
        let clients = self.maps.iter().map(|m| self.client_for(m)).collect::<Result<Vec<_>, _>>()?;
        let mut prompts: Vec<Vec<Prompt>> = Vec::new();
        for map in &self.maps {
            let mut per_task = Vec::new();
            for task in &map.tasks {
                let names = |id: &str| map.graph.display_name(id).unwrap_or(id).to_string();
                per_task.push(build_prompt(&PromptSpec {
                    template_id: self.config.template,
                    start_room: names(&task.start_room),
                    goal_room: names(&task.goal_room),
                    profile: self.config.profile,
                    ask_connections: self.config.ask_connections,
                    image: ImageRef::Png(map.image_png.clone()),
                })?);
            }
            prompts.push(per_task);
        }

        let mut jobs = Vec::new();
        for (m, map) in self.maps.iter().enumerate() {
            for (t, _) in map.tasks.iter().enumerate() {
                for trial in 0..self.config.trials_per_task {
                    jobs.push((m, t, trial));
                }
            }
        }

        let mut existing = match &self.config.records {
            Some(path) => load_records(path)?,
            None => Vec::new(),
        };
        let done: HashMap<String, usize> = existing
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_infrastructure_failure())
            .map(|(i, r)| (r.key(), i))
            .collect();
        let job_key = |&(m, t, trial): &(usize, usize, u32)| {
            let task = &self.maps[m].tasks[t];
            trial_key(&self.maps[m].label, &task.start_room, &task.goal_room, trial)
        };
        let mut pending: Vec<usize> = (0..jobs.len()).filter(|&j| !done.contains_key(&job_key(&jobs[j]))).collect();
        if let Some(limit) = self.config.max_trials {
            pending.truncate(limit);
        }

        let writer = match &self.config.records {
            Some(path) => {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
                }
                Some(
                    OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(path)
                        .map_err(|e| BenchError::io(path, e))?,
                )
            }
            None => None,
        };
        let state = Mutex::new(Ordered {
            slots: vec![None; pending.len()],
            next: 0,
            writer,
            error: None,
        });
        let next_job = AtomicUsize::new(0);
        let workers = self
            .config
            .workers
            .unwrap_or(self.config.backend.in_flight)
            .clamp(1, pending.len().max(1));

        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let slot = next_job.fetch_add(1, Ordering::SeqCst);
                    if slot >= pending.len() {
                        break;
                    }
                    let (m, t, trial) = jobs[pending[slot]];
                    let record = self.run_trial(&clients[m], &self.maps[m], &prompts[m][t], &self.maps[m].tasks[t], trial);
                    state.lock().unwrap().complete(slot, record);
                });
            }
        });

        let state = state.into_inner().unwrap();
        if let Some(e) = state.error {
            return Err(e);
        }
        let fresh: HashMap<String, TrialRecord> = state
            .slots
            .into_iter()
            .flatten()
            .map(|r| (r.key(), r))
            .collect();
        let mut by_key: HashMap<String, TrialRecord> = existing.drain(..).map(|r| (r.key(), r)).collect();
        by_key.extend(fresh);
        Ok(jobs.iter().filter_map(|j| by_key.remove(&job_key(j))).collect())
    }

    fn run_trial(&self, client: &VlmClient, map: &PreparedMap, prompt: &Prompt, task: &NavTask, trial: u32) -> TrialRecord {
        let ctx = QueryContext {
            graph: &map.graph,
            task,
            trial,
            profile: self.config.profile,
        };
        let transcript = format!("{}/{}/trial-{trial}.json", prompt.hash, client.backend_id());
        let mut record = TrialRecord {
            map_label: map.label.clone(),
            map_id: map.plan.map_id.clone(),
            base_map_id: map.base_map_id.clone(),
            doubled: map.spec.double.is_some(),
            labeling: map.spec.labeling.unwrap_or(LabelingScheme::Sparse),
            difficulty: task.difficulty,
            start_room: task.start_room.clone(),
            goal_room: task.goal_room.clone(),
            trial,
            backend_id: client.backend_id().to_string(),
            prompt_hash: prompt.hash.clone(),
            transcript,
            outcome: None,
            correct: false,
            failing_index: None,
            plan_len: None,
            minimal: false,
            connectivity: None,
            infrastructure_failure: None,
        };
        let text = match client.query(prompt, &ctx) {
            Ok(t) => match (t.error, t.response_text) {
                (None, Some(text)) => text,
                (Some(e), _) => {
                    record.infrastructure_failure = Some(e);
                    return record;
                }
                (None, None) => {
                    record.infrastructure_failure = Some(ErrorRecord {
                        kind: "empty".into(),
                        message: "transcript has no response".into(),
                    });
                    return record;
                }
            },
            Err(e) => {
                record.infrastructure_failure = Some(ErrorRecord::from(&e));
                return record;
            }
        };
        let options = ValidateOptions {
            pedantic: self.config.pedantic,
        };
        let verdict = match parse_response(&text, self.config.profile) {
            Ok(plan) => {
                record.plan_len = Some(plan.len());
                validate_plan_with(&map.graph, task, &plan, &DoorStates::all_closed(), &options)
            }
            Err(e) => Verdict::from_parse_error(&e, &task.start_room),
        };
        record.outcome = Some(verdict.outcome);
        record.correct = verdict.is_correct();
        record.failing_index = verdict.failing_index;
        if record.correct {
            let shortest = oracle_plan(&map.graph, task).map(|p| p.len()).unwrap_or(0);
            record.minimal = record.plan_len.is_some_and(|n| n <= shortest);
        }
        if self.config.ask_connections {
            record.connectivity = Some(grade_connectivity(&parse_connectivity_claim(&text), &map.graph));
        }
        record
    }
}

struct Ordered {
    slots: Vec<Option<TrialRecord>>,
    next: usize,
    writer: Option<File>,
    error: Option<BenchError>,
}

impl Ordered {
    /// Stores a finished trial and appends every record that is now next in
    /// line, so the file always holds a prefix of the job order.
    fn complete(&mut self, slot: usize, record: TrialRecord) {
        self.slots[slot] = Some(record);
        while self.next < self.slots.len() {
            let Some(record) = &self.slots[self.next] else { break };
            if let (Some(w), None) = (self.writer.as_mut(), self.error.as_ref()) {
                let mut line = serde_json::to_string(record).expect("record serializes");
                line.push('\n');
                if let Err(e) = w.write_all(line.as_bytes()).and_then(|()| w.flush()) {
                    self.error = Some(BenchError::Io {
                        path: "records".into(),
                        message: e.to_string(),
                    });
                }
            }
            self.next += 1;
        }
    }
}

/// Reads a record file. A torn final line (from an interrupted run) is
/// dropped and cut from the file so appends start on a clean line.
pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>, BenchError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(BenchError::io(path, e)),
    };
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| BenchError::io(path, e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        let complete = line.ends_with('\n');
        match serde_json::from_str::<TrialRecord>(line.trim_end()) {
            Ok(r) if complete => {
                records.push(r);
                good_len += n as u64;
            }
            _ if !complete => break,
            Ok(_) => unreachable!(),
            Err(e) => {
                return Err(BenchError::Records(format!("{}:{lineno}: {e}", path.display())));
            }
        }
    }
    let actual = std::fs::metadata(path).map_err(|e| BenchError::io(path, e))?.len();
    if actual != good_len {
        log::warn!("dropping torn final record in {}", path.display());
        OpenOptions::new()
            .write(true)
            .open(path)
            .and_then(|f| f.set_len(good_len))
            .map_err(|e| BenchError::io(path, e))?;
    }
    Ok(records)
}

pub fn run_experiment(config: ExperimentConfig) -> Result<Vec<TrialRecord>, BenchError> {
    Experiment::prepare(config)?.run()
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<(), BenchError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| BenchError::io(path, e))
}

impl DifficultyFilter {
    pub fn matches(self, d: Difficulty) -> bool {
        match self {
            DifficultyFilter::Easy => d == Difficulty::Easy,
            DifficultyFilter::Hard => d == Difficulty::Hard,
            DifficultyFilter::Any => d != Difficulty::Degenerate,
        }
    }
}
