//! Asset inventory, primitive catalog and severity feed ingestion.
//!
//! All three are CSV documents with a required header row. Errors carry the
//! 1-based line number of the offending record.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::MemoryGraph;
use crate::risk_model::SensitivityLevel;

pub const INVENTORY_HEADER: [&str; 7] = [
    "asset_id",
    "name",
    "primitive",
    "classification",
    "shelf_life_years",
    "migration_years",
    "notes",
];

pub const CATALOG_HEADER: [&str; 6] = [
    "canonical_name",
    "family",
    "quantum_class",
    "default_migration_years",
    "default_exploitability",
    "aliases",
];

pub const SEVERITY_HEADER: [&str; 3] = ["component", "severity_0_10", "maturity"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InventoryError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
}

impl InventoryError {
    pub fn line(&self) -> Option<u64> {
        match self {
            InventoryError::Parse { line, .. } | InventoryError::Validation { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> InventoryError {
    InventoryError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(line: u64, message: impl Into<String>) -> InventoryError {
    InventoryError::Validation {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub asset_id: String,
    pub name: String,
    pub primitive_name: String,
    pub classification: SensitivityLevel,
    pub shelf_life_years: f64,
    pub migration_years_override: Option<f64>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Inventory {
    pub assets: Vec<Asset>,
    pub source_path: String,
}

impl Inventory {
    pub fn get(&self, asset_id: &str) -> Option<&Asset> {
        self.assets.iter().find(|a| a.asset_id == asset_id)
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn csv_error(err: &csv::Error) -> InventoryError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => err.to_string(),
    };
    parse_err(line, message)
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), InventoryError> {
    let header = rdr.headers().map_err(|e| csv_error(&e))?;
    if header.is_empty() || (header.len() == 1 && header.get(0) == Some("")) {
        return Err(parse_err(
            1,
            format!("missing header; expected `{}`", expected.join(",")),
        ));
    }
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(parse_err(
            1,
            format!("header must be `{}`, found `{}`", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

fn parse_years(line: u64, column: &str, raw: &str) -> Result<f64, InventoryError> {
    let value: f64 = raw
        .parse()
        .map_err(|_| parse_err(line, format!("{column}: {raw:?} is not a number")))?;
    if !value.is_finite() {
        return Err(invalid(line, format!("{column} must be finite, got {raw:?}")));
    }
    if value < 0.0 {
        return Err(invalid(line, format!("{column} must be >= 0, got {raw}")));
    }
    Ok(value)
}

/// Parses an inventory CSV. Blank `migration_years` means "use catalog default".
pub fn parse_inventory(text: &str) -> Result<Inventory, InventoryError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &INVENTORY_HEADER)?;
    let mut assets = Vec::new();
    let mut seen: BTreeMap<String, u64> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");

        let asset_id = field(0);
        if asset_id.is_empty() {
            return Err(invalid(line, "asset_id must not be empty"));
        }
        if let Some(first) = seen.get(asset_id) {
            return Err(invalid(
                line,
                format!("duplicate asset_id {asset_id:?} (first seen on line {first})"),
            ));
        }
        let primitive = field(2);
        if primitive.is_empty() {
            return Err(invalid(line, format!("asset {asset_id}: primitive must not be empty")));
        }
        let classification = SensitivityLevel::from_str(field(3))
            .map_err(|_| invalid(line, format!("asset {asset_id}: unknown classification {:?}", field(3))))?;
        let shelf_life_years = parse_years(line, "shelf_life_years", field(4))?;
        let migration_years_override = match field(5) {
            "" => None,
            raw => Some(parse_years(line, "migration_years", raw)?),
        };
        seen.insert(asset_id.to_string(), line);
        assets.push(Asset {
            asset_id: asset_id.to_string(),
            name: field(1).to_string(),
            primitive_name: primitive.to_string(),
            classification,
            shelf_life_years,
            migration_years_override,
            notes: field(6).to_string(),
        });
    }
    Ok(Inventory {
        assets,
        source_path: String::new(),
    })
}

/// Writes an inventory back out in the canonical CSV layout.
pub fn inventory_to_csv(inventory: &Inventory) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(INVENTORY_HEADER).expect("write to Vec");
    for a in &inventory.assets {
        let override_cell = a.migration_years_override.map(|v| v.to_string()).unwrap_or_default();
        wtr.write_record([
            a.asset_id.as_str(),
            a.name.as_str(),
            a.primitive_name.as_str(),
            a.classification.as_str(),
            &a.shelf_life_years.to_string(),
            &override_cell,
            a.notes.as_str(),
        ])
        .expect("write to Vec");
    }
    String::from_utf8(wtr.into_inner().expect("flush Vec")).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrimitiveFamily {
    #[serde(rename = "RSA")]
    Rsa,
    #[serde(rename = "ECC")]
    Ecc,
    SymmetricCipher,
    Hash,
    #[serde(rename = "LatticePQC")]
    LatticePqc,
    #[serde(rename = "HashBasedPQC")]
    HashBasedPqc,
    Other,
}

impl PrimitiveFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveFamily::Rsa => "RSA",
            PrimitiveFamily::Ecc => "ECC",
            PrimitiveFamily::SymmetricCipher => "SymmetricCipher",
            PrimitiveFamily::Hash => "Hash",
            PrimitiveFamily::LatticePqc => "LatticePQC",
            PrimitiveFamily::HashBasedPqc => "HashBasedPQC",
            PrimitiveFamily::Other => "Other",
        }
    }
}

impl FromStr for PrimitiveFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            PrimitiveFamily::Rsa,
            PrimitiveFamily::Ecc,
            PrimitiveFamily::SymmetricCipher,
            PrimitiveFamily::Hash,
            PrimitiveFamily::LatticePqc,
            PrimitiveFamily::HashBasedPqc,
            PrimitiveFamily::Other,
        ]
        .into_iter()
        .find(|f| f.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown family {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuantumClass {
    ShorBroken,
    GroverWeakened,
    #[serde(rename = "PQCStandardized")]
    PqcStandardized,
    Unknown,
}

impl QuantumClass {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantumClass::ShorBroken => "ShorBroken",
            QuantumClass::GroverWeakened => "GroverWeakened",
            QuantumClass::PqcStandardized => "PQCStandardized",
            QuantumClass::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for QuantumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantumClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            QuantumClass::ShorBroken,
            QuantumClass::GroverWeakened,
            QuantumClass::PqcStandardized,
            QuantumClass::Unknown,
        ]
        .into_iter()
        .find(|c| c.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown quantum class {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CryptoPrimitive {
    pub canonical_name: String,
    pub family: PrimitiveFamily,
    pub quantum_class: QuantumClass,
    pub default_migration_years: f64,
    pub default_exploitability: f64,
    pub aliases: Vec<String>,
}

/// Immutable primitive catalog with canonical and alias indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    primitives: Vec<CryptoPrimitive>,
    by_name: BTreeMap<String, usize>,
    by_alias: BTreeMap<String, usize>,
}

impl Catalog {
    /// Builds a catalog, enforcing unique canonical names, disjoint aliases
    /// and in-range defaults. `lines` gives the source line of each entry for
    /// error reporting (0 when built programmatically).
    fn build(primitives: Vec<CryptoPrimitive>, lines: &[u64]) -> Result<Self, InventoryError> {
        if primitives.is_empty() {
            return Err(InventoryError::EmptyCatalog);
        }
        let mut by_name = BTreeMap::new();
        for (i, p) in primitives.iter().enumerate() {
            let line = lines.get(i).copied().unwrap_or(0);
            if p.canonical_name.is_empty() {
                return Err(invalid(line, "canonical_name must not be empty"));
            }
            if by_name.insert(p.canonical_name.clone(), i).is_some() {
                return Err(invalid(
                    line,
                    format!("duplicate canonical_name {:?}", p.canonical_name),
                ));
            }
            if !p.default_migration_years.is_finite() || p.default_migration_years < 0.0 {
                return Err(invalid(
                    line,
                    format!("{}: default_migration_years must be >= 0", p.canonical_name),
                ));
            }
            if !p.default_exploitability.is_finite() || !(0.0..=1.0).contains(&p.default_exploitability) {
                return Err(invalid(
                    line,
                    format!("{}: default_exploitability must be in [0,1]", p.canonical_name),
                ));
            }
        }
        let mut by_alias = BTreeMap::new();
        for (i, p) in primitives.iter().enumerate() {
            let line = lines.get(i).copied().unwrap_or(0);
            for alias in &p.aliases {
                if alias.is_empty() {
                    return Err(invalid(line, format!("{}: empty alias", p.canonical_name)));
                }
                if by_name.contains_key(alias) {
                    return Err(invalid(line, format!("alias {alias:?} collides with a canonical name")));
                }
                match by_alias.insert(alias.clone(), i) {
                    Some(prev) if prev != i => {
                        return Err(invalid(
                            line,
                            format!("alias {alias:?} already belongs to {}", primitives[prev].canonical_name),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            primitives,
            by_name,
            by_alias,
        })
    }

    pub fn from_primitives(primitives: Vec<CryptoPrimitive>) -> Result<Self, InventoryError> {
        Self::build(primitives, &[])
    }

    /// Default catalog used when no catalog file is supplied. These values
    /// are configuration defaults, not measurements.
    pub fn builtin() -> Self {
        use PrimitiveFamily::*;
        use QuantumClass::*;
        let entry = |name: &str, family, class, years, e, aliases: &[&str]| CryptoPrimitive {
            canonical_name: name.to_string(),
            family,
            quantum_class: class,
            default_migration_years: years,
            default_exploitability: e,
            aliases: aliases.iter().map(|a| a.to_string()).collect(),
        };
        let primitives = vec![
            entry("RSA-2048", Rsa, ShorBroken, 2.0, 0.1, &[]),
            entry("RSA-3072", Rsa, ShorBroken, 2.0, 0.1, &[]),
            entry("RSA-4096", Rsa, ShorBroken, 2.0, 0.1, &[]),
            entry("ECC-P256", Ecc, ShorBroken, 2.0, 0.1, &[]),
            entry("ECC-P384", Ecc, ShorBroken, 2.0, 0.1, &[]),
            entry("AES-128", SymmetricCipher, GroverWeakened, 1.0, 0.1, &[]),
            entry("AES-256", SymmetricCipher, GroverWeakened, 0.5, 0.05, &[]),
            entry("SHA-256", Hash, GroverWeakened, 0.5, 0.05, &[]),
            entry("SHA-384", Hash, GroverWeakened, 0.5, 0.05, &[]),
            entry("ML-KEM", LatticePqc, PqcStandardized, 0.0, 0.05, &["Kyber"]),
            entry("ML-DSA", LatticePqc, PqcStandardized, 0.0, 0.05, &["Dilithium"]),
            entry("SLH-DSA", HashBasedPqc, PqcStandardized, 0.0, 0.05, &["SPHINCS+"]),
        ];
        Self::build(primitives, &[]).expect("built-in catalog is valid")
    }

    pub fn primitives(&self) -> &[CryptoPrimitive] {
        &self.primitives
    }

    pub fn get(&self, canonical: &str) -> Option<&CryptoPrimitive> {
        self.by_name.get(canonical).map(|&i| &self.primitives[i])
    }

    pub fn by_alias(&self, alias: &str) -> Option<&CryptoPrimitive> {
        self.by_alias.get(alias).map(|&i| &self.primitives[i])
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn load_catalog(text: &str) -> Result<Catalog, InventoryError> {
    if text.trim().is_empty() {
        return Err(InventoryError::EmptyCatalog);
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, &CATALOG_HEADER)?;
    let mut primitives = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let family = field(1).parse().map_err(|m: String| parse_err(line, m))?;
        let quantum_class = field(2).parse().map_err(|m: String| parse_err(line, m))?;
        let default_migration_years = field(3)
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("default_migration_years: {:?} is not a number", field(3))))?;
        let default_exploitability = field(4)
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("default_exploitability: {:?} is not a number", field(4))))?;
        let aliases = field(5)
            .split('|')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(str::to_string)
            .collect();
        primitives.push(CryptoPrimitive {
            canonical_name: field(0).to_string(),
            family,
            quantum_class,
            default_migration_years,
            default_exploitability,
            aliases,
        });
        lines.push(line);
    }
    Catalog::build(primitives, &lines)
}

/// Exact canonical name, then catalog alias, then knowledge-graph alias.
pub fn resolve_primitive<'c>(
    name: &str,
    catalog: &'c Catalog,
    graph: &MemoryGraph,
) -> Result<&'c CryptoPrimitive, InventoryError> {
    if let Some(p) = catalog.get(name) {
        return Ok(p);
    }
    if let Some(p) = catalog.by_alias(name) {
        return Ok(p);
    }
    if let Some(node) = graph.resolve(name) {
        if let Some(p) = catalog
            .get(&node.canonical)
            .or_else(|| catalog.by_alias(&node.canonical))
        {
            return Ok(p);
        }
    }
    Err(InventoryError::UnknownPrimitive(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Maturity {
    Theoretical,
    Poc,
    Weaponized,
}

impl Maturity {
    /// Multiplier applied to the normalized severity.
    pub fn factor(self) -> f64 {
        match self {
            Maturity::Theoretical => 0.5,
            Maturity::Poc => 0.8,
            Maturity::Weaponized => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Maturity::Theoretical => "theoretical",
            Maturity::Poc => "poc",
            Maturity::Weaponized => "weaponized",
        }
    }
}

impl FromStr for Maturity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "theoretical" => Ok(Maturity::Theoretical),
            "poc" => Ok(Maturity::Poc),
            "weaponized" => Ok(Maturity::Weaponized),
            _ => Err(format!(
                "unknown maturity {s:?} (expected theoretical, poc or weaponized)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityRecord {
    pub component: String,
    pub severity: f64,
    pub maturity: Maturity,
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeverityFeed {
    pub records: Vec<SeverityRecord>,
}

impl SeverityFeed {
    /// Records whose component is one of `keys`, in file order.
    pub fn matching<'a>(&'a self, keys: &'a BTreeSet<&str>) -> impl Iterator<Item = &'a SeverityRecord> + 'a {
        self.records.iter().filter(move |r| keys.contains(r.component.as_str()))
    }
}

/// Parses a severity feed. An empty document is an empty feed.
pub fn parse_severity_feed(text: &str) -> Result<SeverityFeed, InventoryError> {
    if text.trim().is_empty() {
        return Ok(SeverityFeed::default());
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, &SEVERITY_HEADER)?;
    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        if field(0).is_empty() {
            return Err(invalid(line, "component must not be empty"));
        }
        let severity: f64 = field(1)
            .parse()
            .map_err(|_| parse_err(line, format!("severity_0_10: {:?} is not a number", field(1))))?;
        if !severity.is_finite() || !(0.0..=10.0).contains(&severity) {
            return Err(invalid(
                line,
                format!("severity_0_10 must be in [0,10], got {}", field(1)),
            ));
        }
        let maturity = field(2).parse().map_err(|m: String| parse_err(line, m))?;
        records.push(SeverityRecord {
            component: field(0).to_string(),
            severity,
            maturity,
            line,
        });
    }
    Ok(SeverityFeed { records })
}
