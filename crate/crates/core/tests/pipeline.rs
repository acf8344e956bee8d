//! Library-level end-to-end checks: custom catalogs, graph persistence and
//! alias resolution across runs.

use chrono::NaiveDate;

use qars_core::agents::{RuleBasedWorkers, WorkerInputs};
use qars_core::inventory::{load_catalog, parse_inventory, resolve_primitive, SeverityFeed};
use qars_core::knowledge::MemoryGraph;
use qars_core::orchestrator::{run, QueryKind, RunConfig};
use qars_core::policy::{audit_inventory, PolicyTimeline};
use qars_core::risk_model::{UrgencyParams, WeightProfile};

const CATALOG: &str = "\
canonical_name,family,quantum_class,default_migration_years,default_exploitability,aliases
RSA-2048,RSA,ShorBroken,3.5,0.2,rsa2048|RSA2K
ML-KEM,LatticePQC,PQCStandardized,0,0.05,Kyber|Kyber-768
";

const INVENTORY: &str = "\
asset_id,name,primitive,classification,shelf_life_years,migration_years,notes
S1,Signing service,RSA2K,Internal,7,,
S2,Key broker,Kyber-768,Confidential,12,1.5,pilot rollout
";

fn inputs() -> WorkerInputs {
    WorkerInputs {
        inventory: parse_inventory(INVENTORY).unwrap(),
        catalog: load_catalog(CATALOG).unwrap(),
        severity: SeverityFeed::default(),
        timeline: PolicyTimeline::builtin(),
        assessment_date: NaiveDate::from_ymd_opt(2026, 7, 1).unwrap(),
        params: UrgencyParams::default(),
        weights: WeightProfile::DEFAULT,
    }
}

#[test]
fn custom_catalog_drives_migration_defaults() {
    let inputs = inputs();
    let mut memory = MemoryGraph::new();
    let out = run(
        QueryKind::AssessInventory,
        &RuleBasedWorkers::new(&inputs),
        &inputs,
        &mut memory,
        &RunConfig::default(),
    )
    .unwrap();
    let s1 = out.report.entries.iter().find(|e| e.asset_id == "S1").unwrap();
    assert_eq!(s1.primitive, "RSA-2048");
    assert_eq!(s1.migration_years, 3.5);
    let s2 = out.report.entries.iter().find(|e| e.asset_id == "S2").unwrap();
    assert_eq!(s2.primitive, "ML-KEM");
    assert_eq!(s2.migration_years, 1.5);
    // Mid-year assessment: the horizon shrinks below the 2035 - 2026 whole years.
    assert!(out.report.horizon.years < 9.0 && out.report.horizon.years > 8.0);
}

#[test]
fn persisted_graph_reloads_identically_and_resolves_aliases() {
    let inputs = inputs();
    let mut memory = MemoryGraph::new();
    run(
        QueryKind::AssessInventory,
        &RuleBasedWorkers::new(&inputs),
        &inputs,
        &mut memory,
        &RunConfig::default(),
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    memory.save(&path).unwrap();
    let reloaded = MemoryGraph::load(&path).unwrap();
    assert_eq!(reloaded, memory);
    assert_eq!(reloaded.resolve("RSA2K").unwrap().canonical, "RSA-2048");
    assert_eq!(reloaded.resolve("Kyber-768").unwrap().canonical, "ML-KEM");

    // An alias learned only by the graph still resolves against the catalog.
    let mut graph = reloaded;
    graph.add_alias("ML-KEM", "mlkem768").unwrap();
    let catalog = load_catalog(CATALOG).unwrap();
    assert_eq!(
        resolve_primitive("mlkem768", &catalog, &graph).unwrap().canonical_name,
        "ML-KEM"
    );
}

#[test]
fn audit_and_assessment_agree_on_violations() {
    let inputs = inputs();
    let out = run(
        QueryKind::AssessInventory,
        &RuleBasedWorkers::new(&inputs),
        &inputs,
        &mut MemoryGraph::new(),
        &RunConfig::default(),
    )
    .unwrap();
    let audit = audit_inventory(
        &inputs.inventory,
        &inputs.catalog,
        &MemoryGraph::new(),
        &inputs.timeline,
        inputs.assessment_date,
    )
    .unwrap();
    assert!(audit.errors.is_empty());
    for f in &audit.findings {
        let entry = out.report.entries.iter().find(|e| e.asset_id == f.asset_id).unwrap();
        assert_eq!(entry.qars.unwrap().mosca_violation, f.violated, "{}", f.asset_id);
        assert_eq!(&entry.compliance, f);
    }
}
