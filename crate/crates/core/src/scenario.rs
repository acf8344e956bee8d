//! What-if analysis over an assessed inventory: sweeps over Z, alpha and
//! weight profiles, Monte Carlo over an uncertain CRQC arrival, and
//! Kendall-tau stability of the resulting priority rankings.
//!
//! Sample `i` of a Monte Carlo run draws from a ChaCha8 stream seeded with
//! `seed + i`, so results do not depend on evaluation order or thread count.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{crypto_analyst_estimate_x, threat_modeler_estimate_e, WorkerInputs};
use crate::inventory::{resolve_primitive, InventoryError};
use crate::knowledge::MemoryGraph;
use crate::risk_model::{
    assess, DomainError, Exploitability, Range, RiskBand, RiskInputs, SensitivityLevel, UrgencyParams, WeightProfile,
};

pub const DEFAULT_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("rankings disagree on the asset set: {0}")]
    MismatchedRankings(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Distribution of the CRQC arrival, in years from the assessment date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ZDistribution {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
}

impl ZDistribution {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (lo, mode, hi) = match *self {
            ZDistribution::Uniform { lo, hi } => (lo, lo, hi),
            ZDistribution::Triangular { lo, mode, hi } => (lo, mode, hi),
        };
        if !(lo.is_finite() && mode.is_finite() && hi.is_finite()) {
            return Err(ScenarioError::Distribution("bounds must be finite".into()));
        }
        if lo <= 0.0 {
            return Err(ScenarioError::Distribution(format!(
                "lower bound must be > 0, got {lo}"
            )));
        }
        if !(lo <= mode && mode <= hi) {
            return Err(ScenarioError::Distribution(format!(
                "bounds must satisfy lo <= mode <= hi (got {lo}, {mode}, {hi})"
            )));
        }
        Ok(())
    }

    /// Inverse-CDF transform of a uniform draw in [0,1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ZDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            ZDistribution::Triangular { lo, mode, hi } => {
                let width = hi - lo;
                if width == 0.0 {
                    return lo;
                }
                let split = (mode - lo) / width;
                if u < split {
                    lo + (u * width * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - u) * width * (hi - mode)).sqrt()
                }
            }
        }
    }
}

/// Draws sample `index` of the stream identified by `seed`.
pub fn sample_z(dist: &ZDistribution, seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
    dist.quantile(rng.gen::<f64>())
}

fn default_samples() -> u64 {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub z_sweep: Option<Range>,
    #[serde(default)]
    pub alpha_sweep: Option<Range>,
    #[serde(default)]
    pub weight_variants: Vec<WeightProfile>,
    #[serde(default)]
    pub z_distribution: Option<ZDistribution>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(r) = &self.z_sweep {
            r.values()?;
        }
        if let Some(r) = &self.alpha_sweep {
            r.values()?;
        }
        for w in &self.weight_variants {
            w.validate()?;
        }
        if let Some(d) = &self.z_distribution {
            d.validate()?;
        }
        if self.samples == 0 {
            return Err(ScenarioError::Invalid("samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// An asset with every QARS input resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAsset {
    pub asset_id: String,
    pub migration_years: f64,
    pub shelf_life_years: f64,
    pub sensitivity: SensitivityLevel,
    pub exploitability: f64,
}

impl ResolvedAsset {
    fn assess(&self, z: f64, params: UrgencyParams, weights: WeightProfile) -> Result<f64, DomainError> {
        let inputs = RiskInputs::new(self.migration_years, self.shelf_life_years, z)?;
        Ok(assess(
            &inputs,
            self.sensitivity,
            Exploitability::new(self.exploitability)?,
            params,
            weights,
        )?
        .score)
    }
}

/// Resolves X and E for every asset the same way the workers do.
pub fn resolve_assets(inputs: &WorkerInputs, graph: &MemoryGraph) -> Result<Vec<ResolvedAsset>, InventoryError> {
    inputs
        .inventory
        .assets
        .iter()
        .map(|a| {
            let p = resolve_primitive(&a.primitive_name, &inputs.catalog, graph)?;
            Ok(ResolvedAsset {
                asset_id: a.asset_id.clone(),
                migration_years: crypto_analyst_estimate_x(a, p).0,
                shelf_life_years: a.shelf_life_years,
                sensitivity: a.classification,
                exploitability: threat_modeler_estimate_e(a, p, &inputs.severity).0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub asset_id: String,
    pub score: f64,
    pub band: RiskBand,
}

/// One row per (z, asset), z-major.
pub fn sweep_z(
    assets: &[ResolvedAsset],
    z_values: &[f64],
    params: UrgencyParams,
    weights: WeightProfile,
) -> Result<Vec<SweepRow>, ScenarioError> {
    if z_values.is_empty() {
        return Err(ScenarioError::Invalid("z sweep has no values".into()));
    }
    let mut rows = Vec::with_capacity(z_values.len() * assets.len());
    for &z in z_values {
        if !z.is_finite() || z <= 0.0 {
            return Err(ScenarioError::Invalid(format!("z values must be > 0, got {z}")));
        }
        for a in assets {
            rows.push(row(z, a, a.assess(z, params, weights)?)?);
        }
    }
    Ok(rows)
}

/// One row per (alpha, asset) at a fixed horizon.
pub fn sweep_alpha(
    assets: &[ResolvedAsset],
    z: f64,
    alphas: &[f64],
    weights: WeightProfile,
) -> Result<Vec<SweepRow>, ScenarioError> {
    if alphas.is_empty() {
        return Err(ScenarioError::Invalid("alpha sweep has no values".into()));
    }
    let mut rows = Vec::new();
    for &alpha in alphas {
        let params = UrgencyParams::new(alpha)?;
        for a in assets {
            rows.push(row(alpha, a, a.assess(z, params, weights)?)?);
        }
    }
    Ok(rows)
}

fn row(value: f64, asset: &ResolvedAsset, score: f64) -> Result<SweepRow, ScenarioError> {
    Ok(SweepRow {
        value,
        asset_id: asset.asset_id.clone(),
        score,
        band: crate::risk_model::risk_band(score)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationEstimate {
    pub asset_id: String,
    pub probability: f64,
    pub standard_error: f64,
}

/// Fraction of sampled horizons Z with X + Y > Z.
pub fn monte_carlo_violation(
    asset_id: &str,
    exposure_years: f64,
    dist: &ZDistribution,
    samples: u64,
    seed: u64,
) -> Result<ViolationEstimate, ScenarioError> {
    dist.validate()?;
    if samples == 0 {
        return Err(ScenarioError::Invalid("samples must be >= 1".into()));
    }
    if !exposure_years.is_finite() || exposure_years < 0.0 {
        return Err(ScenarioError::Invalid(format!(
            "exposure must be >= 0, got {exposure_years}"
        )));
    }
    let hits = (0..samples)
        .into_par_iter()
        .filter(|&i| exposure_years > sample_z(dist, seed, i))
        .count() as u64;
    let p = hits as f64 / samples as f64;
    Ok(ViolationEstimate {
        asset_id: asset_id.to_string(),
        probability: p,
        standard_error: (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// Kendall tau between two orderings of the same items. A single item
/// (no pairs) counts as perfect agreement.
pub fn kendall_tau(a: &[String], b: &[String]) -> Result<f64, ScenarioError> {
    let pos_b: BTreeMap<&str, usize> = b.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    if a.len() != b.len() || pos_b.len() != b.len() {
        return Err(ScenarioError::MismatchedRankings(format!(
            "lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mapped: Vec<usize> = a
        .iter()
        .map(|s| {
            pos_b
                .get(s.as_str())
                .copied()
                .ok_or_else(|| ScenarioError::MismatchedRankings(format!("{s:?} missing")))
        })
        .collect::<Result<_, _>>()?;
    let n = mapped.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if mapped[i] < mapped[j] {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

/// Pairwise Kendall-tau matrix.
pub fn rank_stability(rankings: &[Vec<String>]) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let mut m = vec![vec![1.0; rankings.len()]; rankings.len()];
    for i in 0..rankings.len() {
        for j in i + 1..rankings.len() {
            let tau = kendall_tau(&rankings[i], &rankings[j])?;
            m[i][j] = tau;
            m[j][i] = tau;
        }
    }
    Ok(m)
}

/// Assets ordered by score descending, asset_id ascending on ties.
pub fn ranking(rows: &[&SweepRow]) -> Vec<String> {
    let mut sorted: Vec<&SweepRow> = rows.to_vec();
    sorted.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.asset_id.cmp(&b.asset_id))
    });
    sorted.into_iter().map(|r| r.asset_id.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub scenario_a: String,
    pub scenario_b: String,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub z_sweep: Vec<SweepRow>,
    pub alpha_sweep: Vec<SweepRow>,
    pub weight_variants: Vec<SweepRow>,
    pub violations: Vec<ViolationEstimate>,
    pub stability: Vec<StabilityRow>,
}

/// Runs every analysis the spec asks for. `base_z` is the horizon used by
/// the alpha and weight analyses.
pub fn run_scenario(
    spec: &ScenarioSpec,
    assets: &[ResolvedAsset],
    base_z: f64,
    params: UrgencyParams,
    weights: WeightProfile,
) -> Result<ScenarioOutput, ScenarioError> {
    spec.validate()?;
    let mut out = ScenarioOutput::default();
    let mut labelled: Vec<(String, Vec<String>)> = Vec::new();
    let group = |rows: &[SweepRow], prefix: &str, labelled: &mut Vec<(String, Vec<String>)>| {
        let mut by_value: Vec<(f64, Vec<&SweepRow>)> = Vec::new();
        for r in rows {
            match by_value.last_mut() {
                Some((v, members)) if *v == r.value => members.push(r),
                _ => by_value.push((r.value, vec![r])),
            }
        }
        for (v, members) in by_value {
            labelled.push((format!("{prefix}={v}"), ranking(&members)));
        }
    };

    if let Some(range) = &spec.z_sweep {
        out.z_sweep = sweep_z(assets, &range.values()?, params, weights)?;
        group(&out.z_sweep, "z", &mut labelled);
    }
    if let Some(range) = &spec.alpha_sweep {
        out.alpha_sweep = sweep_alpha(assets, base_z, &range.values()?, weights)?;
        group(&out.alpha_sweep, "alpha", &mut labelled);
    }
    for (i, w) in spec.weight_variants.iter().enumerate() {
        for a in assets {
            out.weight_variants
                .push(row(i as f64, a, a.assess(base_z, params, *w)?)?);
        }
    }
    group(&out.weight_variants, "weights", &mut labelled);
    if let Some(dist) = &spec.z_distribution {
        for a in assets {
            out.violations.push(monte_carlo_violation(
                &a.asset_id,
                a.migration_years + a.shelf_life_years,
                dist,
                spec.samples,
                spec.seed,
            )?);
        }
    }
    if !assets.is_empty() {
        let rankings: Vec<Vec<String>> = labelled.iter().map(|(_, r)| r.clone()).collect();
        let matrix = rank_stability(&rankings)?;
        for i in 0..labelled.len() {
            for j in i + 1..labelled.len() {
                out.stability.push(StabilityRow {
                    scenario_a: labelled[i].0.clone(),
                    scenario_b: labelled[j].0.clone(),
                    tau: matrix[i][j],
                });
            }
        }
    }
    Ok(out)
}

impl ScenarioOutput {
    /// Renders the non-empty tables as CSV sections, each introduced by a
    /// `# name` line and separated by a blank line.
    pub fn to_csv(&self) -> String {
        let mut sections: Vec<String> = Vec::new();
        let sweep = |header: &str, rows: &[SweepRow]| {
            let mut s = format!("{header},asset_id,score,band\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", r.value, r.asset_id, r.score, r.band);
            }
            s
        };
        if !self.z_sweep.is_empty() {
            sections.push(format!("# z_sweep\n{}", sweep("z", &self.z_sweep)));
        }
        if !self.alpha_sweep.is_empty() {
            sections.push(format!("# alpha_sweep\n{}", sweep("alpha", &self.alpha_sweep)));
        }
        if !self.weight_variants.is_empty() {
            sections.push(format!(
                "# weight_variants\n{}",
                sweep("variant", &self.weight_variants)
            ));
        }
        if !self.violations.is_empty() {
            let mut s = String::from("# monte_carlo\nasset_id,probability,standard_error\n");
            for v in &self.violations {
                let _ = writeln!(s, "{},{},{}", v.asset_id, v.probability, v.standard_error);
            }
            sections.push(s);
        }
        if !self.stability.is_empty() {
            let mut s = String::from("# rank_stability\nscenario_a,scenario_b,tau\n");
            for r in &self.stability {
                let _ = writeln!(s, "{},{},{}", r.scenario_a, r.scenario_b, r.tau);
            }
            sections.push(s);
        }
        sections.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk_model::temporal_urgency;

    fn asset(id: &str, x: f64, y: f64, s: SensitivityLevel, e: f64) -> ResolvedAsset {
        ResolvedAsset {
            asset_id: id.into(),
            migration_years: x,
            shelf_life_years: y,
            sensitivity: s,
            exploitability: e,
        }
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Counts pairs directly from positions; independent of kendall_tau's loop.
    fn brute_tau(a: &[&str], b: &[&str]) -> f64 {
        let pos = |v: &[&str], s: &str| v.iter().position(|x| *x == s).unwrap() as i64;
        let mut sum = 0i64;
        let mut pairs = 0i64;
        for x in a {
            for y in a {
                if x < y {
                    let da = pos(a, x) - pos(a, y);
                    let db = pos(b, x) - pos(b, y);
                    sum += da.signum() * db.signum();
                    pairs += 1;
                }
            }
        }
        sum as f64 / pairs as f64
    }

    #[test]
    fn sweep_midpoint_and_limit() {
        let p = UrgencyParams::default();
        let w = WeightProfile::default();
        let a = asset("A", 4.0, 6.0, SensitivityLevel::Public, 0.0);
        let rows = sweep_z(std::slice::from_ref(&a), &[10.0], p, w).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].score, 0.5 * 0.5);

        let low = asset("L", 1.0, 1.0, SensitivityLevel::Internal, 0.1);
        let rows = sweep_z(&[a, low], &[1e6], p, w).unwrap();
        assert!(rows.iter().all(|r| r.band == RiskBand::Low));
        assert!(sweep_z(&[], &[], p, w).is_err());
        assert!(sweep_z(&[], &[0.0], p, w).is_err());
    }

    #[test]
    fn sweep_rows_match_assess() {
        let p = UrgencyParams::default();
        let w = WeightProfile::default();
        let assets = [
            asset("A", 2.0, 10.0, SensitivityLevel::Confidential, 0.1),
            asset("B", 0.0, 5.0, SensitivityLevel::Internal, 0.05),
        ];
        let zs = Range::new(4.0, 16.0, 2.0).unwrap().values().unwrap();
        let rows = sweep_z(&assets, &zs, p, w).unwrap();
        assert_eq!(rows.len(), zs.len() * 2);
        for r in &rows {
            let a = assets.iter().find(|a| a.asset_id == r.asset_id).unwrap();
            let i = RiskInputs::new(a.migration_years, a.shelf_life_years, r.value).unwrap();
            let direct = assess(&i, a.sensitivity, Exploitability::new(a.exploitability).unwrap(), p, w).unwrap();
            assert_eq!(r.score, direct.score);
            assert_eq!(r.band, direct.band);
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let degenerate = ZDistribution::Uniform { lo: 10.0, hi: 10.0 };
        let v = monte_carlo_violation("A", 12.0, &degenerate, 1000, 1).unwrap();
        assert_eq!((v.probability, v.standard_error), (1.0, 0.0));
        let v = monte_carlo_violation("A", 10.0, &degenerate, 1000, 1).unwrap();
        assert_eq!(v.probability, 0.0);

        let u = ZDistribution::Uniform { lo: 8.0, hi: 12.0 };
        let v = monte_carlo_violation("A", 10.0, &u, 10_000, 7).unwrap();
        assert!((v.probability - 0.5).abs() <= 0.02, "{v:?}");
        assert!((v.standard_error - (v.probability * (1.0 - v.probability) / 10_000.0).sqrt()).abs() < 1e-15);
        assert_eq!(monte_carlo_violation("A", 7.0, &u, 10_000, 7).unwrap().probability, 0.0);
    }

    #[test]
    fn monte_carlo_is_order_independent() {
        let t = ZDistribution::Triangular {
            lo: 5.0,
            mode: 9.0,
            hi: 15.0,
        };
        let parallel = monte_carlo_violation("A", 9.5, &t, 5_000, 42).unwrap();
        let sequential = (0..5_000u64).filter(|&i| 9.5 > sample_z(&t, 42, i)).count() as f64 / 5_000.0;
        assert_eq!(parallel.probability, sequential);
        let reversed = (0..5_000u64).rev().filter(|&i| 9.5 > sample_z(&t, 42, i)).count() as f64 / 5_000.0;
        assert_eq!(parallel.probability, reversed);
    }

    #[test]
    fn monte_carlo_converges() {
        // Triangular(5, 9, 15): P(Z < 9) = (9-5)/(15-5) = 0.4
        let t = ZDistribution::Triangular {
            lo: 5.0,
            mode: 9.0,
            hi: 15.0,
        };
        let u = ZDistribution::Uniform { lo: 8.0, hi: 12.0 };
        for (dist, exposure, analytic) in [(t, 9.0, 0.4), (u, 9.0, 0.25)] {
            let mut small = 0.0;
            let mut large = 0.0;
            for seed in 0..8u64 {
                small += (monte_carlo_violation("A", exposure, &dist, 200, seed * 1_000_003)
                    .unwrap()
                    .probability
                    - analytic)
                    .abs();
                large += (monte_carlo_violation("A", exposure, &dist, 20_000, seed * 1_000_003)
                    .unwrap()
                    .probability
                    - analytic)
                    .abs();
            }
            assert!(large < small, "{large} !< {small}");
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(ZDistribution::Uniform { lo: 12.0, hi: 8.0 }.validate().is_err());
        assert!(ZDistribution::Uniform { lo: 0.0, hi: 8.0 }.validate().is_err());
        assert!(ZDistribution::Triangular {
            lo: 1.0,
            mode: 9.0,
            hi: 8.0
        }
        .validate()
        .is_err());
        assert!(monte_carlo_violation("A", 1.0, &ZDistribution::Uniform { lo: 1.0, hi: 2.0 }, 0, 0).is_err());
    }

    #[test]
    fn triangular_quantiles() {
        let t = ZDistribution::Triangular {
            lo: 0.5,
            mode: 1.0,
            hi: 2.0,
        };
        assert_eq!(t.quantile(0.0), 0.5);
        assert!((t.quantile(1.0 / 3.0) - 1.0).abs() < 1e-12);
        assert!((t.quantile(1.0 - 1e-12) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn tau_examples() {
        let base = ids(&["a", "b", "c", "d"]);
        assert_eq!(kendall_tau(&base, &base).unwrap(), 1.0);
        assert_eq!(kendall_tau(&base, &ids(&["d", "c", "b", "a"])).unwrap(), -1.0);
        let swapped = ids(&["a", "c", "b", "d"]);
        let tau = kendall_tau(&base, &swapped).unwrap();
        assert!((tau - brute_tau(&["a", "b", "c", "d"], &["a", "c", "b", "d"])).abs() < 1e-15);
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&base, &ids(&["a", "b", "c", "e"])).is_err());
        assert!(kendall_tau(&base, &ids(&["a", "b", "c"])).is_err());
        assert!(kendall_tau(&ids(&["a", "a"]), &ids(&["a", "a"])).is_err());
    }

    #[test]
    fn stability_matrix() {
        let m = rank_stability(&[ids(&["a", "b", "c"]), ids(&["c", "b", "a"]), ids(&["a", "b", "c"])]).unwrap();
        assert_eq!(m[0][0], 1.0);
        assert_eq!(m[0][1], -1.0);
        assert_eq!(m[1][0], -1.0);
        assert_eq!(m[0][2], 1.0);
    }

    #[test]
    fn spec_json_and_run() {
        let spec = ScenarioSpec::from_json(
            r#"{"z_sweep":{"start":5,"stop":15,"step":5},
                "alpha_sweep":{"start":5,"stop":10,"step":5},
                "weight_variants":[{"w_t":1,"w_s":0,"w_e":0},{"w_t":0,"w_s":1,"w_e":0}],
                "z_distribution":{"type":"uniform","lo":8,"hi":12},
                "samples":2000,"seed":3}"#,
        )
        .unwrap();
        let assets = [
            asset("A", 2.0, 10.0, SensitivityLevel::Confidential, 0.1),
            asset("B", 0.0, 5.0, SensitivityLevel::TopSecret, 0.05),
        ];
        let out = run_scenario(&spec, &assets, 10.0, UrgencyParams::default(), WeightProfile::default()).unwrap();
        assert_eq!(out.z_sweep.len(), 6);
        assert_eq!(out.alpha_sweep.len(), 4);
        assert_eq!(out.weight_variants.len(), 4);
        assert_eq!(out.violations.len(), 2);
        // 3 z + 2 alpha + 2 weight rankings
        assert_eq!(out.stability.len(), 7 * 6 / 2);
        let csv = out.to_csv();
        assert!(csv.contains("# z_sweep\nz,asset_id,score,band\n"));
        assert!(csv.contains("# monte_carlo\nasset_id,probability,standard_error\n"));
        assert_eq!(
            run_scenario(&spec, &assets, 10.0, UrgencyParams::default(), WeightProfile::default())
                .unwrap()
                .to_csv(),
            csv
        );

        let t = temporal_urgency(12.0 / 5.0, UrgencyParams::default()).unwrap();
        assert_eq!(out.z_sweep[0].score, 0.5 * t + 0.3 * 0.7 + 0.2 * 0.1);

        assert!(ScenarioSpec::from_json(r#"{"samples":0}"#).is_err());
        assert!(ScenarioSpec::from_json(r#"{"z_distribution":{"type":"beta","lo":1,"hi":2}}"#).is_err());
        assert!(ScenarioSpec::from_json(r#"{"z_sweep":{"start":5,"stop":1,"step":1}}"#).is_err());
    }
}
