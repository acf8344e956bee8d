//! Run settings merged from defaults, an optional JSON config file and
//! command-line flags, in increasing order of precedence.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use qars_core::orchestrator::DEFAULT_MAX_RETRIES;
use qars_core::risk_model::{UrgencyParams, WeightProfile};

use crate::{CliError, GlobalArgs, OutputFormat};

pub const CONFIG_ENV: &str = "QARS_CONFIG";

/// On-disk config. Relative paths are taken relative to the file itself.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    alpha: Option<f64>,
    weights: Option<WeightProfile>,
    assessment_date: Option<String>,
    inventory: Option<PathBuf>,
    catalog: Option<PathBuf>,
    policy: Option<PathBuf>,
    severity: Option<PathBuf>,
    memory: Option<PathBuf>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
    max_retries: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub params: UrgencyParams,
    pub weights: WeightProfile,
    pub assessment_date: NaiveDate,
    pub inventory: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub severity: Option<PathBuf>,
    pub memory: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub max_retries: u32,
}

fn load_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: line {}: {e}", path.display(), e.line())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut cfg.inventory,
        &mut cfg.catalog,
        &mut cfg.policy,
        &mut cfg.severity,
        &mut cfg.memory,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

fn parse_date(text: &str, origin: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|e| CliError::invalid(format!("{origin}: expected YYYY-MM-DD, got {text:?} ({e})")))
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let config_path = args.config.clone().or_else(|| {
            std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        });
        let file = match &config_path {
            Some(p) => load_file(p)?,
            None => ConfigFile::default(),
        };
        let config_origin = |field: &str| match &config_path {
            Some(p) => format!("{}: {field}", p.display()),
            None => field.to_string(),
        };

        let alpha = match args.alpha {
            Some(a) => UrgencyParams::new(a).map_err(|e| CliError::invalid(format!("--alpha: {e}")))?,
            None => match file.alpha {
                Some(a) => {
                    UrgencyParams::new(a).map_err(|e| CliError::invalid(format!("{}: {e}", config_origin("alpha"))))?
                }
                None => UrgencyParams::default(),
            },
        };
        let weights = match &args.weights {
            Some(w) => w
                .parse::<WeightProfile>()
                .map_err(|e| CliError::invalid(format!("--weights: {e}")))?,
            None => match file.weights {
                Some(w) => {
                    w.validate()
                        .map_err(|e| CliError::invalid(format!("{}: {e}", config_origin("weights"))))?;
                    w
                }
                None => WeightProfile::DEFAULT,
            },
        };
        let assessment_date = match (&args.assessment_date, &file.assessment_date) {
            (Some(d), _) => parse_date(d, "--assessment-date")?,
            (None, Some(d)) => parse_date(d, &config_origin("assessment_date"))?,
            (None, None) => chrono::Local::now().date_naive(),
        };

        Ok(Self {
            params: alpha,
            weights,
            assessment_date,
            inventory: args.inventory.clone().or(file.inventory),
            catalog: args.catalog.clone().or(file.catalog),
            policy: args.policy.clone().or(file.policy),
            severity: args.severity.clone().or(file.severity),
            memory: args.memory.clone().or(file.memory),
            seed: args.seed.or(file.seed),
            format: args.format.or(file.format).unwrap_or(OutputFormat::Text),
            out: args.out.clone(),
            max_retries: file.max_retries.unwrap_or(DEFAULT_MAX_RETRIES),
        })
    }
}
