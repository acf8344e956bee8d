//! Text, CSV and JSON renderings of command results.

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::Serialize;

use qars_core::orchestrator::Report;
use qars_core::policy::{AuditOutcome, ComplianceFinding, EffectiveHorizon};
use qars_core::risk_model::LandscapeCell;

/// Ranked table in report order (score descending, then asset id).
pub fn report_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "assessment date {}  horizon Z={:.2} ({})  alpha={}  weights={},{},{}",
        report.metadata.assessment_date,
        report.horizon.years,
        report.horizon.basis,
        report.metadata.alpha,
        report.metadata.weights.w_t,
        report.metadata.weights.w_s,
        report.metadata.weights.w_e,
    );
    let _ = writeln!(
        out,
        "{:<4} {:<16} {:<20} {:>6} {:>6} {:>6} {:>6} {:>6} {:>5} {:>5} {:>6}  {:<8} {:<9} confidence",
        "rank", "asset", "primitive", "X", "Y", "Z", "r", "T", "S", "E", "R", "band", "violation"
    );
    for e in &report.entries {
        let Some(q) = e.qars else { continue };
        let confidence = e.confidence.map(|c| format!("{c:?}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<4} {:<16} {:<20} {:>6.2} {:>6.2} {:>6.2} {:>6.3} {:>6.4} {:>5.2} {:>5.2} {:>6.4}  {:<8} {:<9} {}",
            e.rank,
            e.asset_id,
            e.primitive,
            e.migration_years,
            e.shelf_life_years,
            e.effective_z_years,
            q.urgency_ratio,
            q.temporal_urgency,
            q.sensitivity,
            q.exploitability,
            q.score,
            q.band,
            if q.mosca_violation { "yes" } else { "no" },
            confidence,
        );
    }
    let bands: Vec<String> = report.summary.bands.iter().map(|(b, n)| format!("{b}={n}")).collect();
    let _ = writeln!(
        out,
        "{} assets, {} Mosca violations; bands: {}",
        report.summary.assets,
        report.summary.mosca_violations,
        if bands.is_empty() { "-".into() } else { bands.join(" ") }
    );
    out
}

#[derive(Serialize)]
struct AuditDocument<'a> {
    assessment_date: String,
    horizon: EffectiveHorizon,
    violations: usize,
    findings: &'a [ComplianceFinding],
    errors: Vec<AuditErrorEntry>,
}

#[derive(Serialize)]
struct AuditErrorEntry {
    asset_id: String,
    message: String,
}

pub fn audit_json(date: &NaiveDate, horizon: EffectiveHorizon, outcome: &AuditOutcome) -> String {
    let doc = AuditDocument {
        assessment_date: date.to_string(),
        horizon,
        violations: outcome.findings.iter().filter(|f| f.violated).count(),
        findings: &outcome.findings,
        errors: outcome
            .errors
            .iter()
            .map(|e| AuditErrorEntry {
                asset_id: e.asset_id.clone(),
                message: e.error.to_string(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("audit document serializes")
}

pub fn audit_text(date: &NaiveDate, horizon: EffectiveHorizon, outcome: &AuditOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "assessment date {date}  horizon Z={:.2} ({})",
        horizon.years, horizon.basis
    );
    for f in &outcome.findings {
        let _ = writeln!(
            out,
            "{} {}",
            if f.violated { "VIOLATION" } else { "ok       " },
            f.message
        );
        for a in &f.advisories {
            let _ = writeln!(out, "          advisory: {a}");
        }
    }
    for e in &outcome.errors {
        let _ = writeln!(out, "ERROR     {e}");
    }
    let violations = outcome.findings.iter().filter(|f| f.violated).count();
    let _ = writeln!(
        out,
        "{} assets audited, {violations} Mosca violations",
        outcome.findings.len()
    );
    out
}

pub fn landscape_csv(grid: &[LandscapeCell]) -> String {
    let mut out = String::from("x_plus_y,z,r,T\n");
    for c in grid {
        let _ = writeln!(out, "{},{},{},{}", c.x_plus_y, c.z, c.r, c.t);
    }
    out
}
