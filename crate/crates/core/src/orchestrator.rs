//! Supervisor loop: decompose a query into a task graph, run ready tasks one
//! at a time through the execution slot, review each result, retry on
//! failure, write passing results to memory and synthesize the report.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    supervisor_review, AgentRole, Payload, Provenance, Verdict, WorkerInputs, WorkerPool, WorkerResult, POLICY_NODE,
};
use crate::inventory::Inventory;
use crate::knowledge::{consensus_confidence, Confidence, KnowledgeError, MemoryGraph};
use crate::policy::{audit_with_horizon, ComplianceFinding, EffectiveHorizon};
use crate::risk_model::{QarsBreakdown, RiskBand, WeightProfile};

pub const DEFAULT_MAX_RETRIES: u32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("inventory is empty; nothing to assess")]
    EmptyInventory,
    #[error("task graph has a cycle through {0}")]
    Cycle(String),
    #[error("task {task} depends on unknown task {dependency}")]
    UnknownDependency { task: String, dependency: String },
    #[error("deadlock: no runnable task; blocked: {}", blocked.join(", "))]
    Deadlock { blocked: Vec<String> },
    #[error("execution slot busy with {0}")]
    SlotBusy(AgentRole),
    #[error("run incomplete; failed: {}; blocked: {}", format_failures(failed), blocked.join(", "))]
    PartialReport {
        failed: Vec<(String, String)>,
        blocked: Vec<String>,
    },
    #[error("missing results for assets: {}", .0.join(", "))]
    MissingResults(Vec<String>),
}

fn format_failures(failed: &[(String, String)]) -> String {
    failed
        .iter()
        .map(|(id, why)| format!("{id} ({why})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    AssessInventory,
    AuditPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    ResolvePrimitive,
    EstimateX,
    EstimateE,
    EstimateZ,
    ComputeQars,
    AuditAsset,
    Synthesize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subject {
    Asset(String),
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub kind: TaskKind,
    pub subject: Subject,
    pub deps: BTreeSet<String>,
    pub status: TaskStatus,
    pub attempts: u32,
}

impl Task {
    pub fn new(
        id: impl Into<String>,
        kind: TaskKind,
        subject: Subject,
        deps: impl IntoIterator<Item = String>,
    ) -> Self {
        Self {
            task_id: id.into(),
            kind,
            subject,
            deps: deps.into_iter().collect(),
            status: TaskStatus::Pending,
            attempts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskGraph {
    tasks: BTreeMap<String, Task>,
}

impl TaskGraph {
    /// Builds a graph and rejects unknown dependencies and cycles.
    pub fn from_tasks(tasks: impl IntoIterator<Item = Task>) -> Result<Self, OrchestratorError> {
        let graph = Self {
            tasks: tasks.into_iter().map(|t| (t.task_id.clone(), t)).collect(),
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<(), OrchestratorError> {
        for t in self.tasks.values() {
            if let Some(d) = t.deps.iter().find(|d| !self.tasks.contains_key(*d)) {
                return Err(OrchestratorError::UnknownDependency {
                    task: t.task_id.clone(),
                    dependency: d.clone(),
                });
            }
        }
        // Kahn's algorithm; anything left over sits on a cycle.
        let mut indegree: BTreeMap<&str, usize> =
            self.tasks.iter().map(|(id, t)| (id.as_str(), t.deps.len())).collect();
        let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut seen = 0;
        while let Some(id) = ready.pop() {
            seen += 1;
            for t in self.tasks.values().filter(|t| t.deps.contains(id)) {
                let d = indegree.get_mut(t.task_id.as_str()).expect("known task");
                *d -= 1;
                if *d == 0 {
                    ready.push(&t.task_id);
                }
            }
        }
        if seen != self.tasks.len() {
            let stuck = indegree
                .iter()
                .find(|(_, d)| **d > 0)
                .map(|(id, _)| id.to_string())
                .unwrap_or_default();
            return Err(OrchestratorError::Cycle(stuck));
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Task> {
        self.tasks.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Task> {
        self.tasks.get_mut(id)
    }

    /// Tasks in task_id order.
    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// Static plan per query kind.
///
/// AssessInventory: `z`, then per asset `resolve:{id}` → `x:{id}`, `e:{id}`
/// → `qars:{id}` (which also waits on `z`), and `synth` after every
/// `qars:*`. AuditPolicy: `z`, `audit:{id}` per asset, `synth`.
pub fn decompose(kind: QueryKind, inventory: &Inventory) -> Result<TaskGraph, OrchestratorError> {
    let mut tasks = vec![Task::new("z", TaskKind::EstimateZ, Subject::Global, [])];
    let mut synth_deps = Vec::new();
    match kind {
        QueryKind::AssessInventory => {
            if inventory.is_empty() {
                return Err(OrchestratorError::EmptyInventory);
            }
            for a in &inventory.assets {
                let id = &a.asset_id;
                let subject = || Subject::Asset(id.clone());
                let resolve = format!("resolve:{id}");
                let x = format!("x:{id}");
                let e = format!("e:{id}");
                let qars = format!("qars:{id}");
                tasks.push(Task::new(&resolve, TaskKind::ResolvePrimitive, subject(), []));
                tasks.push(Task::new(&x, TaskKind::EstimateX, subject(), [resolve.clone()]));
                tasks.push(Task::new(&e, TaskKind::EstimateE, subject(), [resolve.clone()]));
                tasks.push(Task::new(
                    &qars,
                    TaskKind::ComputeQars,
                    subject(),
                    [x, e, "z".to_string()],
                ));
                synth_deps.push(qars);
            }
        }
        QueryKind::AuditPolicy => {
            for a in &inventory.assets {
                let audit = format!("audit:{}", a.asset_id);
                tasks.push(Task::new(
                    &audit,
                    TaskKind::AuditAsset,
                    Subject::Asset(a.asset_id.clone()),
                    ["z".to_string()],
                ));
                synth_deps.push(audit);
            }
            if inventory.is_empty() {
                synth_deps.push("z".to_string());
            }
        }
    }
    tasks.push(Task::new("synth", TaskKind::Synthesize, Subject::Global, synth_deps));
    TaskGraph::from_tasks(tasks)
}

/// Lexicographically first pending task whose dependencies are all done.
pub fn schedule_next(graph: &TaskGraph) -> Result<Option<&Task>, OrchestratorError> {
    let done = |id: &String| graph.tasks.get(id).is_some_and(|t| t.status == TaskStatus::Done);
    let mut pending = false;
    let mut running = false;
    for t in graph.tasks.values() {
        match t.status {
            TaskStatus::Pending => {
                if t.deps.iter().all(done) {
                    return Ok(Some(t));
                }
                pending = true;
            }
            TaskStatus::Running => running = true,
            _ => {}
        }
    }
    if pending && !running {
        let blocked = graph
            .tasks
            .values()
            .filter(|t| t.status == TaskStatus::Pending)
            .map(|t| t.task_id.clone())
            .collect();
        return Err(OrchestratorError::Deadlock { blocked });
    }
    Ok(None)
}

/// What a worker sees: the memory nodes relevant to its subject and the
/// results of its direct dependencies.
#[derive(Debug, Clone, Default)]
pub struct TaskContext {
    pub graph: MemoryGraph,
    pub results: BTreeMap<String, WorkerResult>,
}

fn load_context(
    task: &Task,
    inputs: &WorkerInputs,
    memory: &MemoryGraph,
    results: &BTreeMap<String, WorkerResult>,
) -> TaskContext {
    let dep_results: BTreeMap<String, WorkerResult> = task
        .deps
        .iter()
        .filter_map(|d| results.get(d).map(|r| (d.clone(), r.clone())))
        .collect();
    let mut tokens: Vec<String> = vec![POLICY_NODE.to_string()];
    if let Subject::Asset(id) = &task.subject {
        if let Some(asset) = inputs.inventory.get(id) {
            tokens.push(asset.primitive_name.clone());
        }
        if let Some(Payload::Resolution { canonical, .. }) = results.get(&format!("resolve:{id}")).map(|r| &r.payload) {
            tokens.push(canonical.clone());
        }
    }
    TaskContext {
        graph: memory.subgraph(tokens.iter().map(String::as_str)),
        results: dep_results,
    }
}

/// One state swap: the supervisor's state is saved, the worker role loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapEvent {
    pub seq: usize,
    pub task_id: String,
    pub attempt: u32,
    pub saved: AgentRole,
    pub loaded: AgentRole,
}

/// Single execution slot. At most one role is active at a time.
#[derive(Debug, Clone, Default)]
pub struct ExecutionSlot {
    current: Option<AgentRole>,
    swap_log: Vec<SwapEvent>,
}

impl ExecutionSlot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn occupy(&mut self, role: AgentRole, task_id: &str, attempt: u32) -> Result<(), OrchestratorError> {
        if let Some(active) = self.current {
            return Err(OrchestratorError::SlotBusy(active));
        }
        self.swap_log.push(SwapEvent {
            seq: self.swap_log.len(),
            task_id: task_id.to_string(),
            attempt,
            saved: AgentRole::Supervisor,
            loaded: role,
        });
        self.current = Some(role);
        Ok(())
    }

    /// Wipes the worker context and restores the supervisor.
    pub fn release(&mut self) {
        self.current = None;
    }

    pub fn current(&self) -> Option<AgentRole> {
        self.current
    }

    pub fn swap_log(&self) -> &[SwapEvent] {
        &self.swap_log
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Start {
        task_id: String,
        attempt: u32,
    },
    Pass {
        task_id: String,
        attempt: u32,
    },
    Reject {
        task_id: String,
        attempt: u32,
        critique: String,
    },
    Error {
        task_id: String,
        attempt: u32,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub status: TaskStatus,
    pub attempts: u32,
}

/// Everything observable about how a run executed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    pub swap_log: Vec<SwapEvent>,
    pub tasks: Vec<TaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub max_retries: u32,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_retries: DEFAULT_MAX_RETRIES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub query: QueryKind,
    pub inventory: String,
    pub assessment_date: String,
    pub seed: u64,
    pub alpha: f64,
    pub weights: WeightProfile,
    pub crqc_estimate_years: f64,
    pub max_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub rank: usize,
    pub asset_id: String,
    pub name: String,
    pub primitive: String,
    pub classification: String,
    pub migration_years: f64,
    pub shelf_life_years: f64,
    pub effective_z_years: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qars: Option<QarsBreakdown>,
    pub compliance: ComplianceFinding,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportSummary {
    pub assets: usize,
    pub mosca_violations: usize,
    pub bands: BTreeMap<RiskBand, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub horizon: EffectiveHorizon,
    pub summary: ReportSummary,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn has_critical(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.qars.is_some_and(|q| q.band == RiskBand::Critical))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub trace: ExecutionTrace,
}

/// Runs the full supervisor loop. `memory` is updated in place with every
/// finding from passing results.
pub fn run(
    query: QueryKind,
    workers: &dyn WorkerPool,
    inputs: &WorkerInputs,
    memory: &mut MemoryGraph,
    config: &RunConfig,
) -> Result<RunOutput, OrchestratorError> {
    let mut graph = decompose(query, &inputs.inventory)?;
    let mut slot = ExecutionSlot::new();
    let mut events = Vec::new();
    let mut results: BTreeMap<String, WorkerResult> = BTreeMap::new();
    let mut failures: Vec<(String, String)> = Vec::new();

    loop {
        let next = match schedule_next(&graph) {
            Ok(Some(t)) => t.task_id.clone(),
            Ok(None) => break,
            Err(OrchestratorError::Deadlock { blocked }) => {
                return Err(OrchestratorError::PartialReport {
                    failed: failures,
                    blocked,
                })
            }
            Err(e) => return Err(e),
        };
        let task = {
            let t = graph.get_mut(&next).expect("scheduled task exists");
            t.status = TaskStatus::Running;
            t.clone()
        };
        let role = AgentRole::for_task(task.kind);
        let worker = workers.worker(role);
        let ctx = load_context(&task, inputs, memory, &results);

        let mut attempts = 0;
        let mut rejected: Option<(WorkerResult, String)> = None;
        let outcome: Result<WorkerResult, String> = loop {
            attempts += 1;
            slot.occupy(role, &task.task_id, attempts)?;
            events.push(TraceEvent::Start {
                task_id: task.task_id.clone(),
                attempt: attempts,
            });
            let produced = match &rejected {
                None => worker.execute(&task, &ctx),
                Some((_, critique)) => worker.retry(&task, &ctx, critique),
            };
            slot.release();
            let result = match produced {
                Ok(r) => r,
                Err(e) => {
                    events.push(TraceEvent::Error {
                        task_id: task.task_id.clone(),
                        attempt: attempts,
                        message: e.to_string(),
                    });
                    break Err(e.to_string());
                }
            };
            if let Some((prev, critique)) = &rejected {
                if *prev == result {
                    let message = format!("retry reproduced the rejected result ({critique})");
                    events.push(TraceEvent::Error {
                        task_id: task.task_id.clone(),
                        attempt: attempts,
                        message: message.clone(),
                    });
                    break Err(message);
                }
            }
            match supervisor_review(task.kind, &result, inputs.params, inputs.weights) {
                Verdict::Pass => {
                    events.push(TraceEvent::Pass {
                        task_id: task.task_id.clone(),
                        attempt: attempts,
                    });
                    break Ok(result);
                }
                Verdict::Fail(critique) => {
                    events.push(TraceEvent::Reject {
                        task_id: task.task_id.clone(),
                        attempt: attempts,
                        critique: critique.clone(),
                    });
                    if attempts > config.max_retries {
                        break Err(critique);
                    }
                    rejected = Some((result, critique));
                }
            }
        };

        let outcome = outcome.and_then(|r| commit(memory, &r).map(|_| r).map_err(|e| e.to_string()));
        let t = graph.get_mut(&next).expect("scheduled task exists");
        t.attempts = attempts;
        match outcome {
            Ok(r) => {
                t.status = TaskStatus::Done;
                results.insert(next, r);
            }
            Err(why) => {
                t.status = TaskStatus::Failed;
                failures.push((next, why));
            }
        }
    }

    let trace = ExecutionTrace {
        events,
        swap_log: slot.swap_log().to_vec(),
        tasks: graph
            .tasks()
            .map(|t| TaskSummary {
                task_id: t.task_id.clone(),
                status: t.status,
                attempts: t.attempts,
            })
            .collect(),
    };
    if !failures.is_empty() {
        return Err(OrchestratorError::PartialReport {
            failed: failures,
            blocked: Vec::new(),
        });
    }
    let report = synthesize(query, memory, &results, inputs, config)?;
    Ok(RunOutput { report, trace })
}

/// Writes a passing result's side effects into long-term memory.
fn commit(memory: &mut MemoryGraph, result: &WorkerResult) -> Result<(), KnowledgeError> {
    if let Payload::Resolution { canonical, aliases } = &result.payload {
        if memory.resolve(canonical).is_none() {
            memory.upsert_node(canonical)?;
        }
        let node = memory.resolve(canonical).expect("just ensured").canonical.clone();
        for alias in aliases {
            if alias != &node {
                memory.add_alias(&node, alias)?;
            }
        }
    }
    for Provenance { node, finding } in &result.provenance {
        if memory.resolve(node).is_none() {
            memory.upsert_node(node)?;
        }
        let existing = memory.findings(node).unwrap_or_default();
        if !existing.contains(finding) {
            memory.record_finding(node, finding.clone())?;
        }
    }
    Ok(())
}

fn z_horizon(results: &BTreeMap<String, WorkerResult>) -> Option<EffectiveHorizon> {
    match results.get("z").map(|r| &r.payload) {
        Some(Payload::ZEstimate {
            years,
            basis: Some(basis),
        }) => Some(EffectiveHorizon {
            years: *years,
            basis: *basis,
        }),
        _ => None,
    }
}

/// Builds the ranked report from reviewed results.
///
/// Assessments rank by score descending; audits by urgency ratio
/// descending. Ties break on asset_id ascending.
pub fn synthesize(
    query: QueryKind,
    memory: &MemoryGraph,
    results: &BTreeMap<String, WorkerResult>,
    inputs: &WorkerInputs,
    config: &RunConfig,
) -> Result<Report, OrchestratorError> {
    let horizon = z_horizon(results).ok_or_else(|| OrchestratorError::MissingResults(vec!["(horizon)".into()]))?;
    let mut missing = Vec::new();
    let mut entries = Vec::new();
    for asset in &inputs.inventory.assets {
        let id = &asset.asset_id;
        let payload = |prefix: &str| results.get(&format!("{prefix}:{id}")).map(|r| &r.payload);
        let entry = match query {
            QueryKind::AssessInventory => match (payload("resolve"), payload("x"), payload("qars")) {
                (
                    Some(Payload::Resolution { canonical, .. }),
                    Some(Payload::XEstimate { years: x }),
                    Some(Payload::Qars(breakdown)),
                ) => {
                    let compliance =
                        audit_with_horizon(asset, canonical, *x, horizon, &inputs.timeline, inputs.assessment_date)
                            .map_err(|_| OrchestratorError::MissingResults(vec![id.clone()]))?;
                    let confidence = memory
                        .findings(canonical)
                        .filter(|f| !f.is_empty())
                        .and_then(|f| consensus_confidence(f).ok());
                    Some(ReportEntry {
                        rank: 0,
                        asset_id: id.clone(),
                        name: asset.name.clone(),
                        primitive: canonical.clone(),
                        classification: asset.classification.to_string(),
                        migration_years: *x,
                        shelf_life_years: asset.shelf_life_years,
                        effective_z_years: horizon.years,
                        qars: Some(*breakdown),
                        compliance,
                        confidence,
                    })
                }
                _ => None,
            },
            QueryKind::AuditPolicy => match payload("audit") {
                Some(Payload::Compliance(f)) => Some(ReportEntry {
                    rank: 0,
                    asset_id: id.clone(),
                    name: asset.name.clone(),
                    primitive: f.primitive.clone(),
                    classification: asset.classification.to_string(),
                    migration_years: f.migration_years,
                    shelf_life_years: f.shelf_life_years,
                    effective_z_years: f.effective_z_years,
                    qars: None,
                    compliance: f.clone(),
                    confidence: memory
                        .findings(&f.primitive)
                        .filter(|f| !f.is_empty())
                        .and_then(|f| consensus_confidence(f).ok()),
                }),
                _ => None,
            },
        };
        match entry {
            Some(e) => entries.push(e),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(OrchestratorError::MissingResults(missing));
    }

    let key = |e: &ReportEntry| match e.qars {
        Some(q) => q.score,
        None => (e.migration_years + e.shelf_life_years) / e.effective_z_years,
    };
    entries.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.asset_id.cmp(&b.asset_id))
    });
    let mut summary = ReportSummary {
        assets: entries.len(),
        ..ReportSummary::default()
    };
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
        if e.compliance.violated {
            summary.mosca_violations += 1;
        }
        if let Some(q) = e.qars {
            *summary.bands.entry(q.band).or_default() += 1;
        }
    }
    Ok(Report {
        metadata: ReportMetadata {
            query,
            inventory: inputs.inventory.source_path.clone(),
            assessment_date: inputs.assessment_date.format("%Y-%m-%d").to_string(),
            seed: config.seed,
            alpha: inputs.params.alpha,
            weights: inputs.weights,
            crqc_estimate_years: inputs.timeline.crqc_estimate_years,
            max_retries: config.max_retries,
        },
        horizon,
        summary,
        entries,
    })
}
