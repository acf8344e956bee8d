//! Numeric core: Mosca inequality, urgency ratio, temporal urgency sigmoid,
//! weighted composite score, risk bands and the landscape grid.
//!
//! Every function here is pure. Inputs are validated on construction or at
//! the call boundary and rejected with [`DomainError`]; nothing is silently
//! clamped or renormalized.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Tolerance for the weight-sum check.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

fn domain<T>(msg: impl Into<String>) -> Result<T, DomainError> {
    Err(DomainError(msg.into()))
}

/// Migration time X, shelf life Y and collapse horizon Z, all in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    pub migration_years: f64,
    pub shelf_life_years: f64,
    pub collapse_years: f64,
}

impl RiskInputs {
    pub fn new(migration_years: f64, shelf_life_years: f64, collapse_years: f64) -> Result<Self, DomainError> {
        let inputs = Self {
            migration_years,
            shelf_life_years,
            collapse_years,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let Self {
            migration_years: x,
            shelf_life_years: y,
            collapse_years: z,
        } = *self;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return domain(format!("non-finite risk input (X={x}, Y={y}, Z={z})"));
        }
        if x < 0.0 {
            return domain(format!("migration years must be >= 0, got {x}"));
        }
        if y < 0.0 {
            return domain(format!("shelf life years must be >= 0, got {y}"));
        }
        if z <= 0.0 {
            return domain(format!("collapse years must be > 0, got {z}"));
        }
        Ok(())
    }

    /// X + Y, the exposure window.
    pub fn exposure_years(&self) -> f64 {
        self.migration_years + self.shelf_life_years
    }
}

/// Sigmoid steepness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrgencyParams {
    pub alpha: f64,
}

impl UrgencyParams {
    pub const DEFAULT_ALPHA: f64 = 10.0;

    pub fn new(alpha: f64) -> Result<Self, DomainError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return domain(format!("alpha must be finite and > 0, got {alpha}"));
        }
        Ok(Self { alpha })
    }
}

impl Default for UrgencyParams {
    fn default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

/// Weights for urgency, sensitivity and exploitability. Must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub w_t: f64,
    pub w_s: f64,
    pub w_e: f64,
}

impl WeightProfile {
    pub const DEFAULT: WeightProfile = WeightProfile {
        w_t: 0.5,
        w_s: 0.3,
        w_e: 0.2,
    };

    pub fn new(w_t: f64, w_s: f64, w_e: f64) -> Result<Self, DomainError> {
        let weights = Self { w_t, w_s, w_e };
        weights.validate()?;
        Ok(weights)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        for (name, w) in [("w_T", self.w_t), ("w_S", self.w_s), ("w_E", self.w_e)] {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return domain(format!("weight {name} must be in [0,1], got {w}"));
            }
        }
        let sum = self.w_t + self.w_s + self.w_e;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return domain(format!("weights must sum to 1 (got {sum})"));
        }
        Ok(())
    }
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl FromStr for WeightProfile {
    type Err = DomainError;

    /// Parses `w_T,w_S,w_E`, e.g. `0.5,0.3,0.2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return domain(format!("expected three comma-separated weights, got {s:?}"));
        }
        let mut w = [0.0; 3];
        for (slot, part) in w.iter_mut().zip(&parts) {
            *slot = part
                .parse::<f64>()
                .map_err(|_| DomainError(format!("invalid weight {part:?}")))?;
        }
        Self::new(w[0], w[1], w[2])
    }
}

/// Data classification level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensitivityLevel {
    Public,
    Internal,
    Confidential,
    TopSecret,
}

impl SensitivityLevel {
    pub const ALL: [SensitivityLevel; 4] = [
        SensitivityLevel::Public,
        SensitivityLevel::Internal,
        SensitivityLevel::Confidential,
        SensitivityLevel::TopSecret,
    ];

    pub fn value(self) -> f64 {
        sensitivity_value(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SensitivityLevel::Public => "Public",
            SensitivityLevel::Internal => "Internal",
            SensitivityLevel::Confidential => "Confidential",
            SensitivityLevel::TopSecret => "TopSecret",
        }
    }
}

impl fmt::Display for SensitivityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitivityLevel {
    type Err = DomainError;

    /// Case-insensitive; spaces, hyphens and underscores are ignored so
    /// "Top Secret", "TopSecret" and "top_secret" all parse.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        match folded.as_str() {
            "public" => Ok(SensitivityLevel::Public),
            "internal" => Ok(SensitivityLevel::Internal),
            "confidential" => Ok(SensitivityLevel::Confidential),
            "topsecret" => Ok(SensitivityLevel::TopSecret),
            _ => domain(format!("unknown classification {s:?}")),
        }
    }
}

/// Attack practicality in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exploitability(f64);

impl Exploitability {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return domain(format!("exploitability must be in [0,1], got {value}"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskBand {
    Low,
    Medium,
    High,
    Critical,
}

impl RiskBand {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskBand::Low => "Low",
            RiskBand::Medium => "Medium",
            RiskBand::High => "High",
            RiskBand::Critical => "Critical",
        }
    }
}

impl fmt::Display for RiskBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every intermediate quantity of one assessment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QarsBreakdown {
    pub urgency_ratio: f64,
    pub temporal_urgency: f64,
    pub sensitivity: f64,
    pub exploitability: f64,
    pub score: f64,
    pub mosca_violation: bool,
    pub band: RiskBand,
}

impl QarsBreakdown {
    /// Largest absolute deviation between the stored fields and a
    /// recomputation from `urgency_ratio`, `sensitivity` and `exploitability`.
    /// Returns `None` when a categorical field (violation flag, band)
    /// disagrees or a component is out of range.
    pub fn recompute_deviation(&self, params: UrgencyParams, weights: WeightProfile) -> Option<f64> {
        if !self.urgency_ratio.is_finite() || self.urgency_ratio < 0.0 {
            return None;
        }
        let t = temporal_urgency(self.urgency_ratio, params).ok()?;
        let r = qars_score(t, self.sensitivity, self.exploitability, weights).ok()?;
        if self.mosca_violation != (self.urgency_ratio > 1.0) {
            return None;
        }
        if risk_band(self.score).ok()? != self.band {
            return None;
        }
        Some((t - self.temporal_urgency).abs().max((r - self.score).abs()))
    }
}

/// (X + Y) / Z.
pub fn urgency_ratio(inputs: &RiskInputs) -> Result<f64, DomainError> {
    inputs.validate()?;
    Ok(inputs.exposure_years() / inputs.collapse_years)
}

/// Logistic map of the urgency ratio, centred on r = 1.
///
/// Evaluated on the branch whose exponent is non-positive so that
/// `exp` never overflows; far from the midpoint the result saturates to
/// exactly 0 or 1.
pub fn temporal_urgency(r: f64, params: UrgencyParams) -> Result<f64, DomainError> {
    if !r.is_finite() {
        return domain(format!("urgency ratio must be finite, got {r}"));
    }
    if r < 0.0 {
        return domain(format!("urgency ratio must be >= 0, got {r}"));
    }
    if !params.alpha.is_finite() || params.alpha <= 0.0 {
        return domain(format!("alpha must be finite and > 0, got {}", params.alpha));
    }
    let x = params.alpha * (r - 1.0);
    if x >= 0.0 {
        Ok(1.0 / (1.0 + (-x).exp()))
    } else {
        let e = x.exp();
        Ok(e / (1.0 + e))
    }
}

pub fn sensitivity_value(level: SensitivityLevel) -> f64 {
    match level {
        SensitivityLevel::Public => 0.0,
        SensitivityLevel::Internal => 0.3,
        SensitivityLevel::Confidential => 0.7,
        SensitivityLevel::TopSecret => 1.0,
    }
}

/// w_T·T + w_S·S + w_E·E.
pub fn qars_score(t: f64, s: f64, e: f64, weights: WeightProfile) -> Result<f64, DomainError> {
    for (name, v) in [("T", t), ("S", s), ("E", e)] {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return domain(format!("factor {name} must be in [0,1], got {v}"));
        }
    }
    weights.validate()?;
    let score = weights.w_t * t + weights.w_s * s + weights.w_e * e;
    // rounding can push a convex combination of ones a hair past 1
    Ok(score.clamp(0.0, 1.0))
}

/// Mosca's inequality X + Y > Z. Strict: equality is not a violation.
///
/// Decided on the ratio so that it agrees bit-for-bit with
/// `urgency_ratio(inputs) > 1`.
pub fn mosca_violation(inputs: &RiskInputs) -> Result<bool, DomainError> {
    Ok(urgency_ratio(inputs)? > 1.0)
}

pub fn assess(
    inputs: &RiskInputs,
    level: SensitivityLevel,
    exploitability: Exploitability,
    params: UrgencyParams,
    weights: WeightProfile,
) -> Result<QarsBreakdown, DomainError> {
    let r = urgency_ratio(inputs)?;
    let t = temporal_urgency(r, params)?;
    let s = sensitivity_value(level);
    let e = exploitability.value();
    let score = qars_score(t, s, e, weights)?;
    Ok(QarsBreakdown {
        urgency_ratio: r,
        temporal_urgency: t,
        sensitivity: s,
        exploitability: e,
        score,
        mosca_violation: r > 1.0,
        band: risk_band(score)?,
    })
}

/// Critical ≥ 0.8 > High ≥ 0.6 > Medium ≥ 0.4 > Low.
pub fn risk_band(score: f64) -> Result<RiskBand, DomainError> {
    if !score.is_finite() || !(0.0..=1.0).contains(&score) {
        return domain(format!("score must be in [0,1], got {score}"));
    }
    Ok(if score >= 0.8 {
        RiskBand::Critical
    } else if score >= 0.6 {
        RiskBand::High
    } else if score >= 0.4 {
        RiskBand::Medium
    } else {
        RiskBand::Low
    })
}

/// Inclusive arithmetic range `start, start+step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, DomainError> {
        let range = Self { start, stop, step };
        range.values()?;
        Ok(range)
    }

    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            step: 1.0,
        }
    }

    /// Values are `start + i·step`; the stop bound tolerates 1e-9 relative
    /// slack so that e.g. `0:1:0.1` includes 1.0.
    pub fn values(&self) -> Result<Vec<f64>, DomainError> {
        let Self { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return domain("range bounds must be finite");
        }
        if step <= 0.0 {
            return domain(format!("range step must be > 0, got {step}"));
        }
        if stop < start {
            return domain(format!("empty range {start}..{stop}"));
        }
        let span = (stop - start) / step;
        if span > 1e7 {
            return domain(format!("range {start}:{stop}:{step} has too many points"));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    }
}

impl FromStr for Range {
    type Err = DomainError;

    /// `start:stop:step`, or a single number for a one-point range.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| DomainError(format!("invalid number {p:?} in range {s:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Range::single(parse(v)?)),
            [a, b, c] => Range::new(parse(a)?, parse(b)?, parse(c)?),
            _ => domain(format!("expected start:stop:step, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeCell {
    pub x_plus_y: f64,
    pub z: f64,
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

/// Row-major grid over exposure (outer) and horizon (inner).
pub fn risk_landscape_grid(
    x_plus_y: &Range,
    z: &Range,
    params: UrgencyParams,
) -> Result<Vec<LandscapeCell>, DomainError> {
    let xs = x_plus_y.values()?;
    let zs = z.values()?;
    if let Some(bad) = xs.iter().find(|v| **v < 0.0) {
        return domain(format!("x_plus_y values must be >= 0, got {bad}"));
    }
    if let Some(bad) = zs.iter().find(|v| **v <= 0.0) {
        return domain(format!("z values must be > 0, got {bad}"));
    }
    let mut grid = Vec::with_capacity(xs.len() * zs.len());
    for &xy in &xs {
        for &zv in &zs {
            let r = xy / zv;
            grid.push(LandscapeCell {
                x_plus_y: xy,
                z: zv,
                r,
                t: temporal_urgency(r, params)?,
            });
        }
    }
    Ok(grid)
}
