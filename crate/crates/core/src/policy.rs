//! Policy timelines and their projection onto assets.
//!
//! A timeline holds deprecation/disallowance milestones plus a CRQC arrival
//! estimate. The effective horizon Z for an audit is the nearer of the CRQC
//! estimate and the disallowance date.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{resolve_primitive, Asset, Catalog, Inventory, InventoryError};
use crate::knowledge::MemoryGraph;
use crate::risk_model::{mosca_violation, DomainError, RiskInputs};

pub const DEFAULT_CRQC_ESTIMATE_YEARS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid policy: {0}")]
    Invalid(String),
    #[error("disallow milestone {disallow_year} is not after the assessment year {assessment_year}")]
    DisallowPassed { disallow_year: i32, assessment_year: i32 },
    #[error("policy file: {0}")]
    Parse(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MilestoneAction {
    Deprecate,
    Disallow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMilestone {
    pub year: i32,
    pub action: MilestoneAction,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTimeline {
    pub milestones: Vec<PolicyMilestone>,
    #[serde(default = "default_crqc")]
    pub crqc_estimate_years: f64,
}

fn default_crqc() -> f64 {
    DEFAULT_CRQC_ESTIMATE_YEARS
}

impl PolicyTimeline {
    /// Sorts milestones by year and checks the invariants.
    pub fn new(mut milestones: Vec<PolicyMilestone>, crqc_estimate_years: f64) -> Result<Self, PolicyError> {
        milestones.sort_by_key(|m| m.year);
        let timeline = Self {
            milestones,
            crqc_estimate_years,
        };
        timeline.validate()?;
        Ok(timeline)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.crqc_estimate_years.is_finite() || self.crqc_estimate_years <= 0.0 {
            return Err(PolicyError::Invalid(format!(
                "crqc_estimate_years must be > 0, got {}",
                self.crqc_estimate_years
            )));
        }
        if let Some(m) = self.milestones.iter().find(|m| m.year < 2000) {
            return Err(PolicyError::Invalid(format!(
                "milestone year {} is before 2000",
                m.year
            )));
        }
        if self.milestones.windows(2).any(|w| w[0].year > w[1].year) {
            return Err(PolicyError::Invalid("milestones must be sorted by year".into()));
        }
        let disallows = self
            .milestones
            .iter()
            .filter(|m| m.action == MilestoneAction::Disallow)
            .count();
        if disallows > 1 {
            return Err(PolicyError::Invalid("at most one disallow milestone is allowed".into()));
        }
        Ok(())
    }

    /// 2030 deprecation, 2035 disallowance, CRQC estimate ten years out.
    pub fn builtin() -> Self {
        Self::new(
            vec![
                PolicyMilestone {
                    year: 2030,
                    action: MilestoneAction::Deprecate,
                    description: "PQC support required for new deployments; 112-bit strength retired".into(),
                },
                PolicyMilestone {
                    year: 2035,
                    action: MilestoneAction::Disallow,
                    description: "quantum-vulnerable public-key algorithms no longer permitted".into(),
                },
            ],
            DEFAULT_CRQC_ESTIMATE_YEARS,
        )
        .expect("built-in timeline is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let raw: PolicyTimeline = serde_json::from_str(text).map_err(|e| PolicyError::Parse(e.to_string()))?;
        Self::new(raw.milestones, raw.crqc_estimate_years)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timeline serializes")
    }

    pub fn disallow(&self) -> Option<&PolicyMilestone> {
        self.milestones.iter().find(|m| m.action == MilestoneAction::Disallow)
    }

    pub fn deprecations(&self) -> impl Iterator<Item = &PolicyMilestone> {
        self.milestones
            .iter()
            .filter(|m| m.action == MilestoneAction::Deprecate)
    }
}

impl Default for PolicyTimeline {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Which bound produced the effective horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HorizonBasis {
    CrqcEstimate,
    PolicyDisallow,
}

impl HorizonBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            HorizonBasis::CrqcEstimate => "CrqcEstimate",
            HorizonBasis::PolicyDisallow => "PolicyDisallow",
        }
    }
}

impl fmt::Display for HorizonBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHorizon {
    pub years: f64,
    pub basis: HorizonBasis,
}

/// Calendar year as a real number: 2025-01-01 is 2025.0, mid-year dates
/// add the elapsed fraction of that year's days.
pub fn fractional_year(date: NaiveDate) -> f64 {
    let year = date.year();
    let days_in_year = if NaiveDate::from_ymd_opt(year, 12, 31).map(|d| d.ordinal()) == Some(366) {
        366.0
    } else {
        365.0
    };
    year as f64 + f64::from(date.ordinal0()) / days_in_year
}

/// The nearer of the CRQC estimate and the disallowance date; ties go to
/// the policy bound.
pub fn effective_z(timeline: &PolicyTimeline, assessment_date: NaiveDate) -> Result<EffectiveHorizon, PolicyError> {
    timeline.validate()?;
    let crqc = EffectiveHorizon {
        years: timeline.crqc_estimate_years,
        basis: HorizonBasis::CrqcEstimate,
    };
    let Some(disallow) = timeline.disallow() else {
        return Ok(crqc);
    };
    if disallow.year <= assessment_date.year() {
        return Err(PolicyError::DisallowPassed {
            disallow_year: disallow.year,
            assessment_year: assessment_date.year(),
        });
    }
    let policy_years = f64::from(disallow.year) - fractional_year(assessment_date);
    if policy_years <= crqc.years {
        Ok(EffectiveHorizon {
            years: policy_years,
            basis: HorizonBasis::PolicyDisallow,
        })
    } else {
        Ok(crqc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceFinding {
    pub asset_id: String,
    pub primitive: String,
    pub migration_years: f64,
    pub shelf_life_years: f64,
    pub violated: bool,
    #[serde(rename = "effective_Z_years")]
    pub effective_z_years: f64,
    pub basis: HorizonBasis,
    pub message: String,
    /// Deprecation milestones that fall inside the asset's exposure window.
    pub advisories: Vec<String>,
}

/// Formats a year count with two decimals.
fn years(v: f64) -> String {
    format!("{v:.2}")
}

/// Audits one asset whose migration time X is already resolved.
pub fn audit_asset(
    asset: &Asset,
    primitive: &str,
    migration_years: f64,
    timeline: &PolicyTimeline,
    assessment_date: NaiveDate,
) -> Result<ComplianceFinding, PolicyError> {
    let horizon = effective_z(timeline, assessment_date)?;
    Ok(audit_with_horizon(
        asset,
        primitive,
        migration_years,
        horizon,
        timeline,
        assessment_date,
    )?)
}

/// As [`audit_asset`] with the horizon already computed.
pub fn audit_with_horizon(
    asset: &Asset,
    primitive: &str,
    migration_years: f64,
    horizon: EffectiveHorizon,
    timeline: &PolicyTimeline,
    assessment_date: NaiveDate,
) -> Result<ComplianceFinding, DomainError> {
    let inputs = RiskInputs::new(migration_years, asset.shelf_life_years, horizon.years)?;
    let violated = mosca_violation(&inputs)?;
    let mut message = format!(
        "Asset {} ({}) uses {}. X={}, Y={}, effective Z={} ({}).",
        asset.asset_id,
        asset.name,
        primitive,
        years(migration_years),
        years(asset.shelf_life_years),
        years(horizon.years),
        horizon.basis,
    );
    message.push_str(if violated {
        " Mosca Violation Detected."
    } else {
        " Within safety margin."
    });
    let exposure_end = fractional_year(assessment_date) + inputs.exposure_years();
    let advisories = timeline
        .deprecations()
        .filter(|m| f64::from(m.year) <= exposure_end)
        .map(|m| format!("{} deprecation: {}", m.year, m.description))
        .collect();
    Ok(ComplianceFinding {
        asset_id: asset.asset_id.clone(),
        primitive: primitive.to_string(),
        migration_years,
        shelf_life_years: asset.shelf_life_years,
        violated,
        effective_z_years: horizon.years,
        basis: horizon.basis,
        message,
        advisories,
    })
}

/// A per-asset failure that did not stop the rest of the audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetAuditError {
    pub asset_id: String,
    pub error: InventoryError,
}

impl fmt::Display for AssetAuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "asset {}: {}", self.asset_id, self.error)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditOutcome {
    pub findings: Vec<ComplianceFinding>,
    pub errors: Vec<AssetAuditError>,
}

/// Audits every asset in inventory order. Unresolvable primitives are
/// collected as errors; a past disallowance aborts the whole audit.
pub fn audit_inventory(
    inventory: &Inventory,
    catalog: &Catalog,
    graph: &MemoryGraph,
    timeline: &PolicyTimeline,
    assessment_date: NaiveDate,
) -> Result<AuditOutcome, PolicyError> {
    let horizon = effective_z(timeline, assessment_date)?;
    let mut outcome = AuditOutcome::default();
    for asset in &inventory.assets {
        match resolve_primitive(&asset.primitive_name, catalog, graph) {
            Ok(p) => {
                let x = asset.migration_years_override.unwrap_or(p.default_migration_years);
                outcome.findings.push(audit_with_horizon(
                    asset,
                    &p.canonical_name,
                    x,
                    horizon,
                    timeline,
                    assessment_date,
                )?);
            }
            Err(error) => outcome.errors.push(AssetAuditError {
                asset_id: asset.asset_id.clone(),
                error,
            }),
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk_model::SensitivityLevel;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn timeline(disallow: Option<i32>, crqc: f64) -> PolicyTimeline {
        let milestones = disallow
            .map(|y| {
                vec![PolicyMilestone {
                    year: y,
                    action: MilestoneAction::Disallow,
                    description: String::new(),
                }]
            })
            .unwrap_or_default();
        PolicyTimeline::new(milestones, crqc).unwrap()
    }

    fn asset(id: &str, y: f64) -> Asset {
        Asset {
            asset_id: id.into(),
            name: "VPN Concentrator".into(),
            primitive_name: "RSA-2048".into(),
            classification: SensitivityLevel::Confidential,
            shelf_life_years: y,
            migration_years_override: None,
            notes: String::new(),
        }
    }

    #[test]
    fn effective_z_examples() {
        let d = date("2025-01-01");
        let h = effective_z(&timeline(Some(2035), 20.0), d).unwrap();
        assert_eq!((h.years, h.basis), (10.0, HorizonBasis::PolicyDisallow));
        let h = effective_z(&timeline(Some(2035), 8.0), d).unwrap();
        assert_eq!((h.years, h.basis), (8.0, HorizonBasis::CrqcEstimate));
        let h = effective_z(&timeline(None, 10.0), d).unwrap();
        assert_eq!((h.years, h.basis), (10.0, HorizonBasis::CrqcEstimate));
    }

    #[test]
    fn effective_z_tie_prefers_policy() {
        let h = effective_z(&PolicyTimeline::builtin(), date("2025-01-01")).unwrap();
        assert_eq!((h.years, h.basis), (10.0, HorizonBasis::PolicyDisallow));
    }

    #[test]
    fn effective_z_mid_year() {
        // 2024 is a leap year: 182 elapsed days of 366
        let h = effective_z(&timeline(Some(2035), 20.0), date("2024-07-01")).unwrap();
        assert!((h.years - (11.0 - 182.0 / 366.0)).abs() < 1e-12);
    }

    #[test]
    fn past_disallow_is_an_error() {
        let err = effective_z(&timeline(Some(2035), 10.0), date("2035-06-01")).unwrap_err();
        assert!(matches!(
            err,
            PolicyError::DisallowPassed {
                disallow_year: 2035,
                ..
            }
        ));
        assert!(effective_z(&timeline(Some(2030), 10.0), date("2031-01-01")).is_err());
    }

    #[test]
    fn timeline_invariants() {
        let m = |year, action| PolicyMilestone {
            year,
            action,
            description: String::new(),
        };
        assert!(PolicyTimeline::new(
            vec![m(2035, MilestoneAction::Disallow), m(2040, MilestoneAction::Disallow)],
            10.0
        )
        .is_err());
        assert!(PolicyTimeline::new(vec![m(1999, MilestoneAction::Deprecate)], 10.0).is_err());
        assert!(PolicyTimeline::new(vec![], 0.0).is_err());
        let t = PolicyTimeline::new(
            vec![m(2035, MilestoneAction::Disallow), m(2030, MilestoneAction::Deprecate)],
            10.0,
        )
        .unwrap();
        assert_eq!(t.milestones[0].year, 2030);
    }

    #[test]
    fn policy_json() {
        let text = r#"{ "milestones": [
            {"year": 2030, "action": "deprecate", "description": "PQC support required for new deployments; 112-bit strength retired"},
            {"year": 2035, "action": "disallow", "description": "quantum-vulnerable public-key algorithms no longer permitted"}
        ], "crqc_estimate_years": 10.0 }"#;
        assert_eq!(PolicyTimeline::from_json(text).unwrap(), PolicyTimeline::builtin());
        assert_eq!(
            PolicyTimeline::from_json(&PolicyTimeline::builtin().to_json()).unwrap(),
            PolicyTimeline::builtin()
        );
        assert!(matches!(PolicyTimeline::from_json("{"), Err(PolicyError::Parse(_))));
        assert!(PolicyTimeline::from_json(r#"{"milestones":[{"year":2030,"action":"ban"}]}"#).is_err());
    }

    #[test]
    fn asset_402() {
        let f = audit_asset(
            &asset("A402", 10.0),
            "RSA-2048",
            2.0,
            &PolicyTimeline::builtin(),
            date("2025-01-01"),
        )
        .unwrap();
        assert!(f.violated);
        assert_eq!(f.effective_z_years, 10.0);
        assert_eq!(f.basis, HorizonBasis::PolicyDisallow);
        assert_eq!(
            f.message,
            "Asset A402 (VPN Concentrator) uses RSA-2048. X=2.00, Y=10.00, effective Z=10.00 (PolicyDisallow). Mosca Violation Detected."
        );
        assert_eq!(f.advisories.len(), 1);
    }

    #[test]
    fn audit_asset_non_violations() {
        let t = timeline(None, 10.0);
        let d = date("2025-01-01");
        let pqc = audit_asset(&asset("P1", 5.0), "ML-KEM", 0.0, &t, d).unwrap();
        assert!(!pqc.violated);
        assert!(!pqc.message.contains("Mosca Violation Detected"));
        let edge = audit_asset(&asset("B1", 5.0), "RSA-2048", 5.0, &t, d).unwrap();
        assert!(!edge.violated);
    }

    #[test]
    fn audit_inventory_collects_errors() {
        let catalog = Catalog::builtin();
        let graph = MemoryGraph::new();
        let t = PolicyTimeline::builtin();
        let d = date("2025-01-01");
        let empty = audit_inventory(&Inventory::default(), &catalog, &graph, &t, d).unwrap();
        assert!(empty.findings.is_empty() && empty.errors.is_empty());

        let mut pqc = asset("P1", 5.0);
        pqc.primitive_name = "Kyber".into();
        let mut rot = asset("R1", 1.0);
        rot.primitive_name = "ROT13".into();
        let inv = Inventory {
            assets: vec![asset("A402", 10.0), pqc, rot],
            source_path: String::new(),
        };
        let out = audit_inventory(&inv, &catalog, &graph, &t, d).unwrap();
        assert_eq!(out.findings.len(), 2);
        assert_eq!(out.findings.iter().filter(|f| f.violated).count(), 1);
        assert_eq!(out.findings[0].asset_id, "A402");
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].error, InventoryError::UnknownPrimitive("ROT13".into()));
    }

    proptest! {
        #[test]
        fn later_disallow_never_adds_violations(
            x in 0.0f64..15.0, y in 0.0f64..15.0, year in 2026i32..2060, shift in 0i32..20,
            crqc in 0.5f64..40.0, doy in 0u32..365,
        ) {
            let d = NaiveDate::from_yo_opt(2025, doy + 1).unwrap();
            let mut a = asset("P", y);
            a.migration_years_override = Some(x);
            let early = audit_asset(&a, "RSA-2048", x, &timeline(Some(year), crqc), d).unwrap();
            let late = audit_asset(&a, "RSA-2048", x, &timeline(Some(year + shift), crqc), d).unwrap();
            prop_assert!(!( !early.violated && late.violated ));
            for f in [&early, &late] {
                prop_assert!(f.effective_z_years <= crqc);
                let z = RiskInputs::new(x, y, f.effective_z_years).unwrap();
                prop_assert_eq!(f.violated, mosca_violation(&z).unwrap());
            }
            prop_assert!(early.effective_z_years <= f64::from(year) - fractional_year(d) + 1e-12);
        }
    }
}
