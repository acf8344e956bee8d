//! Rule-based workers for the five agent roles, and the supervisor review.
//!
//! Each role is a deterministic function of its task, its context and the
//! shared read-only [`WorkerInputs`]. The [`Worker`] trait is the contract an
//! alternative backend would have to satisfy.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{Asset, Catalog, CryptoPrimitive, Inventory, InventoryError, SeverityFeed};
use crate::knowledge::{Finding, SourceTier};
use crate::orchestrator::{Subject, Task, TaskContext, TaskKind};
use crate::policy::{
    audit_with_horizon, effective_z, ComplianceFinding, EffectiveHorizon, HorizonBasis, PolicyError, PolicyTimeline,
};
use crate::risk_model::{
    self, DomainError, Exploitability, QarsBreakdown, RiskInputs, SensitivityLevel, UrgencyParams, WeightProfile,
};

/// Upper bound on a credible migration estimate, in years.
pub const MAX_MIGRATION_YEARS: f64 = 50.0;

/// Node that holds horizon findings shared by every asset.
pub const POLICY_NODE: &str = "policy-horizon";

const RECOMPUTE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    Supervisor,
    CryptoAnalyst,
    ThreatModeler,
    StandardsSpecialist,
    RiskAssessor,
}

impl AgentRole {
    pub const ALL: [AgentRole; 5] = [
        AgentRole::Supervisor,
        AgentRole::CryptoAnalyst,
        AgentRole::ThreatModeler,
        AgentRole::StandardsSpecialist,
        AgentRole::RiskAssessor,
    ];

    /// The role that executes a task kind.
    pub fn for_task(kind: TaskKind) -> AgentRole {
        match kind {
            TaskKind::ResolvePrimitive | TaskKind::EstimateX => AgentRole::CryptoAnalyst,
            TaskKind::EstimateE => AgentRole::ThreatModeler,
            TaskKind::EstimateZ | TaskKind::AuditAsset => AgentRole::StandardsSpecialist,
            TaskKind::ComputeQars => AgentRole::RiskAssessor,
            TaskKind::Synthesize => AgentRole::Supervisor,
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("task {task}: missing upstream result {dependency}")]
    MissingInput { task: String, dependency: String },
    #[error("task {task}: unknown asset {asset}")]
    UnknownAsset { task: String, asset: String },
    #[error("{role} cannot execute {kind:?} tasks")]
    WrongRole { role: AgentRole, kind: TaskKind },
}

/// Typed worker output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Resolution { canonical: String, aliases: Vec<String> },
    XEstimate { years: f64 },
    EEstimate { value: f64 },
    ZEstimate { years: f64, basis: Option<HorizonBasis> },
    Qars(QarsBreakdown),
    Compliance(ComplianceFinding),
    SynthesisFragment { text: String },
}

impl Payload {
    fn name(&self) -> &'static str {
        match self {
            Payload::Resolution { .. } => "resolution",
            Payload::XEstimate { .. } => "migration estimate",
            Payload::EEstimate { .. } => "exploitability estimate",
            Payload::ZEstimate { .. } => "horizon estimate",
            Payload::Qars(_) => "QARS breakdown",
            Payload::Compliance(_) => "compliance finding",
            Payload::SynthesisFragment { .. } => "synthesis fragment",
        }
    }

    fn matches(&self, kind: TaskKind) -> bool {
        matches!(
            (kind, self),
            (TaskKind::ResolvePrimitive, Payload::Resolution { .. })
                | (TaskKind::EstimateX, Payload::XEstimate { .. })
                | (TaskKind::EstimateE, Payload::EEstimate { .. })
                | (TaskKind::EstimateZ, Payload::ZEstimate { .. })
                | (TaskKind::ComputeQars, Payload::Qars(_))
                | (TaskKind::AuditAsset, Payload::Compliance(_))
                | (TaskKind::Synthesize, Payload::SynthesisFragment { .. })
        )
    }
}

/// A finding destined for a memory-graph node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub node: String,
    pub finding: Finding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerResult {
    pub task_id: String,
    pub role: AgentRole,
    pub payload: Payload,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Read-only data every worker may consult.
#[derive(Debug, Clone)]
pub struct WorkerInputs {
    pub inventory: Inventory,
    pub catalog: Catalog,
    pub severity: SeverityFeed,
    pub timeline: PolicyTimeline,
    pub assessment_date: NaiveDate,
    pub params: UrgencyParams,
    pub weights: WeightProfile,
}

pub trait Worker {
    fn role(&self) -> AgentRole;

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError>;

    /// Re-attempt after a failed review. A deterministic worker simply
    /// recomputes; the orchestrator treats an identical answer as inability.
    fn retry(&self, task: &Task, ctx: &TaskContext, _critique: &str) -> Result<WorkerResult, AgentError> {
        self.execute(task, ctx)
    }
}

/// Maps roles to workers.
pub trait WorkerPool {
    fn worker(&self, role: AgentRole) -> &dyn Worker;
}

fn catalog_finding(claim: String, role: AgentRole) -> Finding {
    Finding {
        claim,
        source_id: "catalog".into(),
        tier: SourceTier::Advisory,
        author_cluster: "catalog".into(),
        recorded_by: role,
    }
}

/// Migration time: the asset override if present, else the catalog default.
pub fn crypto_analyst_estimate_x(asset: &Asset, primitive: &CryptoPrimitive) -> (f64, Provenance) {
    let (years, finding) = match asset.migration_years_override {
        Some(years) => (
            years,
            Finding {
                claim: format!(
                    "{}: migration of asset {} takes {years} years",
                    primitive.canonical_name, asset.asset_id
                ),
                source_id: format!("inventory:{}", asset.asset_id),
                tier: SourceTier::Advisory,
                author_cluster: "inventory".into(),
                recorded_by: AgentRole::CryptoAnalyst,
            },
        ),
        None => (
            primitive.default_migration_years,
            catalog_finding(
                format!(
                    "{}: default migration time {} years",
                    primitive.canonical_name, primitive.default_migration_years
                ),
                AgentRole::CryptoAnalyst,
            ),
        ),
    };
    (
        years,
        Provenance {
            node: primitive.canonical_name.clone(),
            finding,
        },
    )
}

/// Exploitability from the severity feed (severity/10 scaled by maturity,
/// highest matching row wins), else the catalog default.
///
/// A feed row matches when its component equals the asset id, the asset's
/// primitive token, or the canonical primitive name.
pub fn threat_modeler_estimate_e(asset: &Asset, primitive: &CryptoPrimitive, feed: &SeverityFeed) -> (f64, Provenance) {
    let keys: BTreeSet<&str> = [
        asset.asset_id.as_str(),
        asset.primitive_name.as_str(),
        primitive.canonical_name.as_str(),
    ]
    .into_iter()
    .collect();
    let best = feed
        .matching(&keys)
        .map(|r| ((r.severity / 10.0).clamp(0.0, 1.0) * r.maturity.factor(), r))
        .fold(None, |best: Option<(f64, _)>, (e, r)| match best {
            Some((b, _)) if b >= e => best,
            _ => Some((e, r)),
        });
    match best {
        Some((e, record)) => (
            e,
            Provenance {
                node: primitive.canonical_name.clone(),
                finding: Finding {
                    claim: format!(
                        "{}: exploitability {e} (severity {} {})",
                        primitive.canonical_name,
                        record.severity,
                        record.maturity.as_str()
                    ),
                    source_id: format!("severity-feed:{}", record.line),
                    tier: SourceTier::Advisory,
                    author_cluster: "severity-feed".into(),
                    recorded_by: AgentRole::ThreatModeler,
                },
            },
        ),
        None => (
            primitive.default_exploitability,
            Provenance {
                node: primitive.canonical_name.clone(),
                finding: catalog_finding(
                    format!(
                        "{}: default exploitability {}",
                        primitive.canonical_name, primitive.default_exploitability
                    ),
                    AgentRole::ThreatModeler,
                ),
            },
        ),
    }
}

/// Delegates to [`effective_z`] and records the basis at standards tier.
pub fn standards_specialist_estimate_z(
    timeline: &PolicyTimeline,
    assessment_date: NaiveDate,
) -> Result<(EffectiveHorizon, Provenance), PolicyError> {
    let horizon = effective_z(timeline, assessment_date)?;
    let finding = Finding {
        claim: format!(
            "effective horizon {} years from {assessment_date} ({})",
            horizon.years, horizon.basis
        ),
        source_id: "policy-timeline".into(),
        tier: SourceTier::Standard,
        author_cluster: "policy".into(),
        recorded_by: AgentRole::StandardsSpecialist,
    };
    Ok((
        horizon,
        Provenance {
            node: POLICY_NODE.into(),
            finding,
        },
    ))
}

/// Delegates to [`risk_model::assess`].
#[allow(clippy::too_many_arguments)]
pub fn risk_assessor_score(
    x: f64,
    y: f64,
    z: f64,
    level: SensitivityLevel,
    e: f64,
    params: UrgencyParams,
    weights: WeightProfile,
) -> Result<QarsBreakdown, DomainError> {
    risk_model::assess(
        &RiskInputs::new(x, y, z)?,
        level,
        Exploitability::new(e)?,
        params,
        weights,
    )
}

/// Checks a worker result against the payload invariants for its task kind.
pub fn supervisor_review(
    kind: TaskKind,
    result: &WorkerResult,
    params: UrgencyParams,
    weights: WeightProfile,
) -> Verdict {
    let fail = |m: &str| Verdict::Fail(m.to_string());
    if !result.payload.matches(kind) {
        return Verdict::Fail(format!("payload type mismatch: {} for {kind:?}", result.payload.name()));
    }
    if result.role != AgentRole::for_task(kind) {
        return Verdict::Fail(format!("role mismatch: {} answered a {kind:?} task", result.role));
    }
    match &result.payload {
        Payload::Resolution { canonical, .. } => {
            if canonical.is_empty() {
                return fail("empty canonical name");
            }
        }
        Payload::XEstimate { years } => {
            if !years.is_finite() || *years < 0.0 {
                return fail("migration estimate out of range");
            }
            if *years > MAX_MIGRATION_YEARS {
                return fail("migration estimate exceeds 50 years");
            }
        }
        Payload::EEstimate { value } => {
            if !value.is_finite() || !(0.0..=1.0).contains(value) {
                return fail("exploitability out of range");
            }
        }
        Payload::ZEstimate { years, basis } => {
            if basis.is_none() {
                return fail("horizon basis missing");
            }
            if !years.is_finite() || *years <= 0.0 {
                return fail("horizon out of range");
            }
        }
        Payload::Qars(b) => {
            let in_unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
            if !(in_unit(b.temporal_urgency) && in_unit(b.sensitivity) && in_unit(b.exploitability) && in_unit(b.score))
            {
                return fail("breakdown component out of range");
            }
            match b.recompute_deviation(params, weights) {
                Some(d) if d <= RECOMPUTE_TOLERANCE => {}
                _ => return fail("recomputation mismatch"),
            }
        }
        Payload::Compliance(f) => {
            if !f.effective_z_years.is_finite() || f.effective_z_years <= 0.0 {
                return fail("horizon out of range");
            }
            if f.violated != f.message.contains("Mosca Violation Detected") {
                return fail("compliance message disagrees with verdict");
            }
        }
        Payload::SynthesisFragment { text } => {
            if text.is_empty() {
                return fail("empty synthesis");
            }
        }
    }
    for p in &result.provenance {
        if p.finding.claim.is_empty() || crate::knowledge::sanitize_text(&p.finding.claim) != p.finding.claim {
            return fail("unsanitized provenance claim");
        }
    }
    Verdict::Pass
}

/// The built-in deterministic workers.
pub struct RuleBasedWorkers<'a> {
    crypto: CryptoAnalyst<'a>,
    threat: ThreatModeler<'a>,
    standards: StandardsSpecialist<'a>,
    risk: RiskAssessor<'a>,
    supervisor: Supervisor,
}

impl<'a> RuleBasedWorkers<'a> {
    pub fn new(inputs: &'a WorkerInputs) -> Self {
        Self {
            crypto: CryptoAnalyst { inputs },
            threat: ThreatModeler { inputs },
            standards: StandardsSpecialist { inputs },
            risk: RiskAssessor { inputs },
            supervisor: Supervisor,
        }
    }
}

impl WorkerPool for RuleBasedWorkers<'_> {
    fn worker(&self, role: AgentRole) -> &dyn Worker {
        match role {
            AgentRole::Supervisor => &self.supervisor,
            AgentRole::CryptoAnalyst => &self.crypto,
            AgentRole::ThreatModeler => &self.threat,
            AgentRole::StandardsSpecialist => &self.standards,
            AgentRole::RiskAssessor => &self.risk,
        }
    }
}

fn subject_asset<'i>(inputs: &'i WorkerInputs, task: &Task) -> Result<&'i Asset, AgentError> {
    let Subject::Asset(id) = &task.subject else {
        return Err(AgentError::UnknownAsset {
            task: task.task_id.clone(),
            asset: "(global)".into(),
        });
    };
    inputs.inventory.get(id).ok_or_else(|| AgentError::UnknownAsset {
        task: task.task_id.clone(),
        asset: id.clone(),
    })
}

fn dep_payload<'c>(task: &Task, ctx: &'c TaskContext, dep: &str) -> Result<&'c Payload, AgentError> {
    ctx.results
        .get(dep)
        .map(|r| &r.payload)
        .ok_or_else(|| AgentError::MissingInput {
            task: task.task_id.clone(),
            dependency: dep.to_string(),
        })
}

fn resolved_primitive<'i>(
    inputs: &'i WorkerInputs,
    task: &Task,
    ctx: &TaskContext,
    asset: &Asset,
) -> Result<&'i CryptoPrimitive, AgentError> {
    let dep = format!("resolve:{}", asset.asset_id);
    match dep_payload(task, ctx, &dep)? {
        Payload::Resolution { canonical, .. } => inputs
            .catalog
            .get(canonical)
            .ok_or_else(|| InventoryError::UnknownPrimitive(canonical.clone()).into()),
        _ => Err(AgentError::MissingInput {
            task: task.task_id.clone(),
            dependency: dep,
        }),
    }
}

fn wrong_role(role: AgentRole, task: &Task) -> AgentError {
    AgentError::WrongRole { role, kind: task.kind }
}

pub struct CryptoAnalyst<'a> {
    inputs: &'a WorkerInputs,
}

impl Worker for CryptoAnalyst<'_> {
    fn role(&self) -> AgentRole {
        AgentRole::CryptoAnalyst
    }

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError> {
        let asset = subject_asset(self.inputs, task)?;
        let (payload, provenance) = match task.kind {
            TaskKind::ResolvePrimitive => {
                let p = crate::inventory::resolve_primitive(&asset.primitive_name, &self.inputs.catalog, &ctx.graph)?;
                let finding = catalog_finding(
                    format!("{} is {} ({})", p.canonical_name, p.quantum_class, p.family.as_str()),
                    AgentRole::CryptoAnalyst,
                );
                (
                    Payload::Resolution {
                        canonical: p.canonical_name.clone(),
                        aliases: p.aliases.clone(),
                    },
                    Provenance {
                        node: p.canonical_name.clone(),
                        finding,
                    },
                )
            }
            TaskKind::EstimateX => {
                let p = resolved_primitive(self.inputs, task, ctx, asset)?;
                let (years, prov) = crypto_analyst_estimate_x(asset, p);
                (Payload::XEstimate { years }, prov)
            }
            _ => return Err(wrong_role(self.role(), task)),
        };
        Ok(WorkerResult {
            task_id: task.task_id.clone(),
            role: self.role(),
            payload,
            provenance: vec![provenance],
        })
    }
}

pub struct ThreatModeler<'a> {
    inputs: &'a WorkerInputs,
}

impl Worker for ThreatModeler<'_> {
    fn role(&self) -> AgentRole {
        AgentRole::ThreatModeler
    }

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError> {
        if task.kind != TaskKind::EstimateE {
            return Err(wrong_role(self.role(), task));
        }
        let asset = subject_asset(self.inputs, task)?;
        let p = resolved_primitive(self.inputs, task, ctx, asset)?;
        let (value, provenance) = threat_modeler_estimate_e(asset, p, &self.inputs.severity);
        Ok(WorkerResult {
            task_id: task.task_id.clone(),
            role: self.role(),
            payload: Payload::EEstimate { value },
            provenance: vec![provenance],
        })
    }
}

pub struct StandardsSpecialist<'a> {
    inputs: &'a WorkerInputs,
}

impl Worker for StandardsSpecialist<'_> {
    fn role(&self) -> AgentRole {
        AgentRole::StandardsSpecialist
    }

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError> {
        let inputs = self.inputs;
        match task.kind {
            TaskKind::EstimateZ => {
                let (horizon, provenance) = standards_specialist_estimate_z(&inputs.timeline, inputs.assessment_date)?;
                Ok(WorkerResult {
                    task_id: task.task_id.clone(),
                    role: self.role(),
                    payload: Payload::ZEstimate {
                        years: horizon.years,
                        basis: Some(horizon.basis),
                    },
                    provenance: vec![provenance],
                })
            }
            TaskKind::AuditAsset => {
                let asset = subject_asset(inputs, task)?;
                let horizon = horizon_from(task, ctx)?;
                let p = crate::inventory::resolve_primitive(&asset.primitive_name, &inputs.catalog, &ctx.graph)?;
                let (x, _) = crypto_analyst_estimate_x(asset, p);
                let finding = audit_with_horizon(
                    asset,
                    &p.canonical_name,
                    x,
                    horizon,
                    &inputs.timeline,
                    inputs.assessment_date,
                )?;
                Ok(WorkerResult {
                    task_id: task.task_id.clone(),
                    role: self.role(),
                    payload: Payload::Compliance(finding),
                    provenance: Vec::new(),
                })
            }
            _ => Err(wrong_role(self.role(), task)),
        }
    }
}

fn horizon_from(task: &Task, ctx: &TaskContext) -> Result<EffectiveHorizon, AgentError> {
    match dep_payload(task, ctx, "z")? {
        Payload::ZEstimate {
            years,
            basis: Some(basis),
        } => Ok(EffectiveHorizon {
            years: *years,
            basis: *basis,
        }),
        _ => Err(AgentError::MissingInput {
            task: task.task_id.clone(),
            dependency: "z".into(),
        }),
    }
}

pub struct RiskAssessor<'a> {
    inputs: &'a WorkerInputs,
}

impl Worker for RiskAssessor<'_> {
    fn role(&self) -> AgentRole {
        AgentRole::RiskAssessor
    }

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError> {
        if task.kind != TaskKind::ComputeQars {
            return Err(wrong_role(self.role(), task));
        }
        let asset = subject_asset(self.inputs, task)?;
        let missing = |dep: String| AgentError::MissingInput {
            task: task.task_id.clone(),
            dependency: dep,
        };
        let x_dep = format!("x:{}", asset.asset_id);
        let Payload::XEstimate { years: x } = dep_payload(task, ctx, &x_dep)? else {
            return Err(missing(x_dep));
        };
        let e_dep = format!("e:{}", asset.asset_id);
        let Payload::EEstimate { value: e } = dep_payload(task, ctx, &e_dep)? else {
            return Err(missing(e_dep));
        };
        let horizon = horizon_from(task, ctx)?;
        let breakdown = risk_assessor_score(
            *x,
            asset.shelf_life_years,
            horizon.years,
            asset.classification,
            *e,
            self.inputs.params,
            self.inputs.weights,
        )?;
        Ok(WorkerResult {
            task_id: task.task_id.clone(),
            role: self.role(),
            payload: Payload::Qars(breakdown),
            provenance: Vec::new(),
        })
    }
}

/// Supervisor-as-worker only handles the synthesis summary line; the full
/// report is assembled by the orchestrator from memory.
pub struct Supervisor;

impl Worker for Supervisor {
    fn role(&self) -> AgentRole {
        AgentRole::Supervisor
    }

    fn execute(&self, task: &Task, ctx: &TaskContext) -> Result<WorkerResult, AgentError> {
        if task.kind != TaskKind::Synthesize {
            return Err(wrong_role(self.role(), task));
        }
        let text = format!("synthesized {} upstream results", ctx.results.len());
        Ok(WorkerResult {
            task_id: task.task_id.clone(),
            role: self.role(),
            payload: Payload::SynthesisFragment { text },
            provenance: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{parse_severity_feed, Maturity};
    use crate::knowledge::MemoryGraph;
    use crate::policy::{MilestoneAction, PolicyMilestone};
    use proptest::prelude::*;

    fn asset(primitive: &str, x: Option<f64>) -> Asset {
        Asset {
            asset_id: "A1".into(),
            name: "gw".into(),
            primitive_name: primitive.into(),
            classification: SensitivityLevel::Confidential,
            shelf_life_years: 5.0,
            migration_years_override: x,
            notes: String::new(),
        }
    }

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn estimate_x() {
        let c = Catalog::builtin();
        let rsa = c.get("RSA-2048").unwrap();
        assert_eq!(crypto_analyst_estimate_x(&asset("RSA-2048", None), rsa).0, 2.0);
        assert_eq!(crypto_analyst_estimate_x(&asset("RSA-2048", Some(4.5)), rsa).0, 4.5);
        let (x, prov) = crypto_analyst_estimate_x(&asset("ML-KEM", None), c.get("ML-KEM").unwrap());
        assert_eq!(x, 0.0);
        assert_eq!(prov.node, "ML-KEM");
    }

    #[test]
    fn estimate_e() {
        let c = Catalog::builtin();
        let rsa = c.get("RSA-2048").unwrap();
        let a = asset("RSA-2048", None);
        assert_eq!(threat_modeler_estimate_e(&a, rsa, &SeverityFeed::default()).0, 0.1);
        let weaponized = parse_severity_feed("component,severity_0_10,maturity\nRSA-2048,9.0,weaponized\n").unwrap();
        assert_eq!(threat_modeler_estimate_e(&a, rsa, &weaponized).0, 0.9);
        let theoretical = parse_severity_feed("component,severity_0_10,maturity\nRSA-2048,9.0,theoretical\n").unwrap();
        assert_eq!(threat_modeler_estimate_e(&a, rsa, &theoretical).0, 0.45);
        let both = parse_severity_feed(
            "component,severity_0_10,maturity\nRSA-2048,9.0,theoretical\nA1,5,poc\nOTHER,10,weaponized\n",
        )
        .unwrap();
        let (e, prov) = threat_modeler_estimate_e(&a, rsa, &both);
        assert_eq!(e, 0.45);
        assert_eq!(prov.finding.source_id, "severity-feed:2");
        assert_eq!(both.records[1].maturity, Maturity::Poc);
    }

    #[test]
    fn estimate_z_delegates() {
        let with = |d: Option<i32>, crqc: f64| {
            PolicyTimeline::new(
                d.map(|y| {
                    vec![PolicyMilestone {
                        year: y,
                        action: MilestoneAction::Disallow,
                        description: String::new(),
                    }]
                })
                .unwrap_or_default(),
                crqc,
            )
            .unwrap()
        };
        let d = date("2025-01-01");
        for t in [with(Some(2035), 20.0), with(Some(2035), 8.0), with(None, 10.0)] {
            let (h, prov) = standards_specialist_estimate_z(&t, d).unwrap();
            assert_eq!(h, effective_z(&t, d).unwrap());
            assert_eq!(prov.finding.tier, SourceTier::Standard);
        }
    }

    fn qars_result(b: QarsBreakdown) -> WorkerResult {
        WorkerResult {
            task_id: "qars:A1".into(),
            role: AgentRole::RiskAssessor,
            payload: Payload::Qars(b),
            provenance: vec![],
        }
    }

    #[test]
    fn review_rules() {
        let p = UrgencyParams::default();
        let w = WeightProfile::default();
        let b = risk_assessor_score(2.0, 10.0, 10.0, SensitivityLevel::Confidential, 0.1, p, w).unwrap();
        assert_eq!(
            supervisor_review(TaskKind::ComputeQars, &qars_result(b), p, w),
            Verdict::Pass
        );

        let mut tampered = b;
        tampered.score += 0.01;
        assert_eq!(
            supervisor_review(TaskKind::ComputeQars, &qars_result(tampered), p, w),
            Verdict::Fail("recomputation mismatch".into())
        );

        let e = WorkerResult {
            task_id: "e:A1".into(),
            role: AgentRole::ThreatModeler,
            payload: Payload::EEstimate { value: 1.7 },
            provenance: vec![],
        };
        assert_eq!(
            supervisor_review(TaskKind::EstimateE, &e, p, w),
            Verdict::Fail("exploitability out of range".into())
        );

        let x = WorkerResult {
            task_id: "x:A1".into(),
            role: AgentRole::CryptoAnalyst,
            payload: Payload::XEstimate { years: 60.0 },
            provenance: vec![],
        };
        assert!(matches!(supervisor_review(TaskKind::EstimateX, &x, p, w), Verdict::Fail(m) if m.contains("50 years")));

        let z = WorkerResult {
            task_id: "z".into(),
            role: AgentRole::StandardsSpecialist,
            payload: Payload::ZEstimate {
                years: 10.0,
                basis: None,
            },
            provenance: vec![],
        };
        assert_eq!(
            supervisor_review(TaskKind::EstimateZ, &z, p, w),
            Verdict::Fail("horizon basis missing".into())
        );
        assert!(matches!(supervisor_review(TaskKind::EstimateX, &z, p, w), Verdict::Fail(m) if m.contains("mismatch")));
    }

    #[test]
    fn workers_run_from_context() {
        let inputs = WorkerInputs {
            inventory: Inventory {
                assets: vec![asset("Kyber", None)],
                source_path: String::new(),
            },
            catalog: Catalog::builtin(),
            severity: SeverityFeed::default(),
            timeline: PolicyTimeline::builtin(),
            assessment_date: date("2025-01-01"),
            params: UrgencyParams::default(),
            weights: WeightProfile::default(),
        };
        let pool = RuleBasedWorkers::new(&inputs);
        let task = Task::new(
            "resolve:A1",
            TaskKind::ResolvePrimitive,
            Subject::Asset("A1".into()),
            [],
        );
        let ctx = TaskContext {
            graph: MemoryGraph::new(),
            results: Default::default(),
        };
        let r = pool.worker(AgentRole::CryptoAnalyst).execute(&task, &ctx).unwrap();
        assert!(matches!(&r.payload, Payload::Resolution { canonical, .. } if canonical == "ML-KEM"));
        // x needs the resolution result
        let x = Task::new(
            "x:A1",
            TaskKind::EstimateX,
            Subject::Asset("A1".into()),
            ["resolve:A1".to_string()],
        );
        assert!(matches!(
            pool.worker(AgentRole::CryptoAnalyst).execute(&x, &ctx),
            Err(AgentError::MissingInput { .. })
        ));
        assert!(matches!(
            pool.worker(AgentRole::ThreatModeler).execute(&task, &ctx),
            Err(AgentError::WrongRole { .. })
        ));
    }

    fn level() -> impl Strategy<Value = SensitivityLevel> {
        prop::sample::select(SensitivityLevel::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn risk_assessor_equals_assess(
            x in 0.0f64..30.0, y in 0.0f64..30.0, z in 0.1f64..30.0,
            lvl in level(), e in 0.0f64..=1.0, alpha in 0.5f64..30.0,
        ) {
            let p = UrgencyParams::new(alpha).unwrap();
            let w = WeightProfile::default();
            let direct = risk_model::assess(&RiskInputs::new(x, y, z).unwrap(), lvl, Exploitability::new(e).unwrap(), p, w).unwrap();
            prop_assert_eq!(risk_assessor_score(x, y, z, lvl, e, p, w).unwrap(), direct);
        }

        #[test]
        fn estimate_z_equals_effective_z(year in 2026i32..2080, crqc in 0.1f64..60.0, doy in 1u32..=365) {
            let t = PolicyTimeline::new(vec![PolicyMilestone { year, action: MilestoneAction::Disallow, description: String::new() }], crqc).unwrap();
            let d = NaiveDate::from_yo_opt(2025, doy).unwrap();
            prop_assert_eq!(standards_specialist_estimate_z(&t, d).unwrap().0, effective_z(&t, d).unwrap());
        }

        #[test]
        fn invalid_payloads_always_rejected(
            which in 0u8..5, bad in prop_oneof![
                Just(f64::NAN), Just(f64::INFINITY), -100.0f64..-1e-6, 1.000_001f64..100.0,
            ],
        ) {
            let p = UrgencyParams::default();
            let w = WeightProfile::default();
            let good = risk_assessor_score(1.0, 2.0, 4.0, SensitivityLevel::Internal, 0.3, p, w).unwrap();
            let (kind, role, payload) = match which {
                0 => (TaskKind::EstimateE, AgentRole::ThreatModeler, Payload::EEstimate { value: bad }),
                1 => (TaskKind::EstimateX, AgentRole::CryptoAnalyst, Payload::XEstimate { years: if bad > 0.0 && bad.is_finite() { bad + 50.0 } else { bad } }),
                2 => (TaskKind::ComputeQars, AgentRole::RiskAssessor, Payload::Qars(QarsBreakdown { score: bad, ..good })),
                3 => (TaskKind::ComputeQars, AgentRole::RiskAssessor, Payload::Qars(QarsBreakdown { exploitability: bad, ..good })),
                _ => (TaskKind::EstimateZ, AgentRole::StandardsSpecialist, Payload::ZEstimate { years: -bad.abs(), basis: Some(HorizonBasis::CrqcEstimate) }),
            };
            let r = WorkerResult { task_id: "t".into(), role, payload, provenance: vec![] };
            prop_assert!(!supervisor_review(kind, &r, p, w).is_pass());
        }
    }
}
