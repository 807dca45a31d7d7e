//! Typed hyperparameter space and the unit-interval genome encoding.
//!
//! Every tunable parameter is one gene in `[0, 1]`. Continuous parameters
//! scale linearly, integers scale then round half-up, and categoricals map
//! onto equal-width buckets. Decoding is total: every point of the unit cube
//! decodes to an in-space [`Configuration`].

use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("parameter `{0}`: lower bound exceeds upper bound")]
    InvertedBounds(String),
    #[error("parameter `{0}`: integer bounds must be whole numbers")]
    FractionalIntegerBounds(String),
    #[error("parameter `{0}`: categorical parameter needs at least one category")]
    NoCategories(String),
    #[error("parameter `{0}`: bounds must be finite")]
    NonFiniteBounds(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("genome has {got} genes, space has {expected} parameters")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gene {index} = {value} lies outside [0, 1]")]
    GeneOutOfRange { index: usize, value: f64 },
    #[error("configuration does not fit the space: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Continuous,
    Integer,
    Categorical,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Continuous => "continuous",
            ParamKind::Integer => "integer",
            ParamKind::Categorical => "categorical",
        };
        f.write_str(s)
    }
}

/// One tunable parameter. For categoricals `lower`/`upper` hold the index
/// range `0..=k-1` and are informational only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub unit: String,
}

impl ParamSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64, unit: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Continuous,
            lower,
            upper,
            categories: Vec::new(),
            unit: unit.to_string(),
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64, unit: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
            categories: Vec::new(),
            unit: unit.to_string(),
        }
    }

    pub fn categorical(name: &str, categories: &[&str], unit: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Categorical,
            lower: 0.0,
            upper: categories.len().saturating_sub(1) as f64,
            categories: categories.iter().map(|c| c.to_string()).collect(),
            unit: unit.to_string(),
        }
    }

    fn check(&self) -> Result<(), SpaceError> {
        match self.kind {
            ParamKind::Categorical => {
                if self.categories.is_empty() {
                    return Err(SpaceError::NoCategories(self.name.clone()));
                }
            }
            ParamKind::Continuous | ParamKind::Integer => {
                if !self.lower.is_finite() || !self.upper.is_finite() {
                    return Err(SpaceError::NonFiniteBounds(self.name.clone()));
                }
                if self.lower > self.upper {
                    return Err(SpaceError::InvertedBounds(self.name.clone()));
                }
                if self.kind == ParamKind::Integer
                    && (self.lower.fract() != 0.0 || self.upper.fract() != 0.0)
                {
                    return Err(SpaceError::FractionalIntegerBounds(self.name.clone()));
                }
            }
        }
        Ok(())
    }

    fn span(&self) -> f64 {
        self.upper - self.lower
    }

    /// Maps one gene onto a typed value of this parameter.
    pub fn decode_gene(&self, gene: f64) -> ParamValue {
        match self.kind {
            ParamKind::Continuous => ParamValue::Real(self.lower + gene * self.span()),
            ParamKind::Integer => {
                let scaled = self.lower + gene * self.span();
                let rounded = (scaled + 0.5).floor().clamp(self.lower, self.upper);
                ParamValue::Integer(rounded as i64)
            }
            ParamKind::Categorical => {
                let k = self.categories.len();
                let idx = ((gene * k as f64).floor() as usize).min(k - 1);
                ParamValue::Category(self.categories[idx].clone())
            }
        }
    }

    /// Inverse of [`decode_gene`](Self::decode_gene). Integers and
    /// categoricals land on the midpoint of their gene bucket.
    pub fn encode_value(&self, value: &ParamValue) -> Result<f64, Violation> {
        let value = self.coerce(value)?;
        if let Some(v) = self.bounds_violation(&value) {
            return Err(v);
        }
        let gene = match (&self.kind, &value) {
            (ParamKind::Continuous, ParamValue::Real(v)) => {
                if self.span() == 0.0 {
                    0.0
                } else {
                    (v - self.lower) / self.span()
                }
            }
            (ParamKind::Integer, ParamValue::Integer(v)) => {
                let span = self.span();
                if span == 0.0 {
                    0.5
                } else {
                    let v = *v as f64;
                    let lo = ((v - 0.5 - self.lower) / span).max(0.0);
                    let hi = ((v + 0.5 - self.lower) / span).min(1.0);
                    0.5 * (lo + hi)
                }
            }
            (ParamKind::Categorical, ParamValue::Category(label)) => {
                let k = self.categories.len() as f64;
                let idx = self.categories.iter().position(|c| c == label).unwrap_or(0) as f64;
                (idx + 0.5) / k
            }
            _ => unreachable!("coerce returns the parameter's own kind"),
        };
        Ok(gene.clamp(0.0, 1.0))
    }

    /// Converts a loosely typed value (as read from JSON) into this
    /// parameter's kind when that is lossless.
    pub fn coerce(&self, value: &ParamValue) -> Result<ParamValue, Violation> {
        let wrong = || Violation::WrongKind {
            name: self.name.clone(),
            expected: self.kind,
        };
        match (self.kind, value) {
            (ParamKind::Continuous, ParamValue::Real(v)) => Ok(ParamValue::Real(*v)),
            (ParamKind::Continuous, ParamValue::Integer(v)) => Ok(ParamValue::Real(*v as f64)),
            (ParamKind::Integer, ParamValue::Integer(v)) => Ok(ParamValue::Integer(*v)),
            (ParamKind::Integer, ParamValue::Real(v)) if v.fract() == 0.0 && v.is_finite() => {
                Ok(ParamValue::Integer(*v as i64))
            }
            (ParamKind::Categorical, ParamValue::Category(label)) => {
                Ok(ParamValue::Category(label.clone()))
            }
            (ParamKind::Categorical, ParamValue::Integer(v)) => {
                Ok(ParamValue::Category(v.to_string()))
            }
            _ => Err(wrong()),
        }
    }

    fn bounds_violation(&self, value: &ParamValue) -> Option<Violation> {
        let out = |shown: String| Violation::OutOfBounds {
            name: self.name.clone(),
            value: shown,
        };
        match value {
            ParamValue::Real(v) if !(self.lower..=self.upper).contains(v) => {
                Some(out(format!("{v}")))
            }
            ParamValue::Integer(v) if !(self.lower..=self.upper).contains(&(*v as f64)) => {
                Some(out(v.to_string()))
            }
            ParamValue::Category(label) if !self.categories.contains(label) => {
                Some(out(label.clone()))
            }
            _ => None,
        }
    }
}

/// Ordered list of parameters; the order fixes the genome layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParamSpec>", into = "Vec<ParamSpec>")]
pub struct ConfigSpace {
    params: Vec<ParamSpec>,
}

impl TryFrom<Vec<ParamSpec>> for ConfigSpace {
    type Error = SpaceError;

    fn try_from(params: Vec<ParamSpec>) -> Result<Self, Self::Error> {
        ConfigSpace::new(params)
    }
}

impl From<ConfigSpace> for Vec<ParamSpec> {
    fn from(space: ConfigSpace) -> Self {
        space.params
    }
}

impl ConfigSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self, SpaceError> {
        for (i, p) in params.iter().enumerate() {
            p.check()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
        }
        Ok(ConfigSpace { params })
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn n_vars(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Short content hash of the space, used to detect ledger mismatches.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(&self.params).expect("space serializes");
        short_hash(&text)
    }

    pub fn decode(&self, genome: &[f64]) -> Result<Configuration, SpaceError> {
        if genome.len() != self.n_vars() {
            return Err(SpaceError::DimensionMismatch {
                expected: self.n_vars(),
                got: genome.len(),
            });
        }
        let mut values = IndexMap::with_capacity(genome.len());
        for (index, (p, &g)) in self.params.iter().zip(genome).enumerate() {
            if !(0.0..=1.0).contains(&g) {
                return Err(SpaceError::GeneOutOfRange { index, value: g });
            }
            values.insert(p.name.clone(), p.decode_gene(g));
        }
        Ok(Configuration::from_ordered(values, false))
    }

    pub fn encode(&self, config: &Configuration) -> Result<Vec<f64>, SpaceError> {
        self.params
            .iter()
            .map(|p| {
                let value = config
                    .get(&p.name)
                    .ok_or_else(|| SpaceError::Invalid(Violation::Missing(p.name.clone()).to_string()))?;
                p.encode_value(value)
                    .map_err(|v| SpaceError::Invalid(v.to_string()))
            })
            .collect()
    }

    /// Checks a configuration against the space. Errors are returned as
    /// data; baseline configurations are accepted with their violations
    /// listed.
    pub fn validate(&self, config: &Configuration) -> Validation {
        let mut violations = Vec::new();
        for p in &self.params {
            match config.get(&p.name) {
                None => violations.push(Violation::Missing(p.name.clone())),
                Some(v) => match p.coerce(v) {
                    Err(e) => violations.push(e),
                    Ok(v) => violations.extend(p.bounds_violation(&v)),
                },
            }
        }
        for name in config.values.keys() {
            if self.param(name).is_none() {
                violations.push(Violation::Unknown(name.clone()));
            }
        }
        Validation {
            ok: violations.is_empty() || config.baseline,
            violations,
        }
    }

    /// Builds a configuration from loosely typed values, coercing kinds and
    /// reordering to space order. Unknown names are kept at the end so that
    /// validation can report them.
    pub fn configuration(
        &self,
        raw: &IndexMap<String, ParamValue>,
        baseline: bool,
    ) -> Result<Configuration, SpaceError> {
        let mut values = IndexMap::with_capacity(raw.len());
        for p in &self.params {
            if let Some(v) = raw.get(&p.name) {
                let v = p.coerce(v).map_err(|e| SpaceError::Invalid(e.to_string()))?;
                values.insert(p.name.clone(), v);
            }
        }
        for (name, v) in raw {
            if self.param(name).is_none() {
                values.insert(name.clone(), v.clone());
            }
        }
        let config = Configuration::from_ordered(values, baseline);
        let report = self.validate(&config);
        if !report.ok {
            return Err(SpaceError::Invalid(report.summary()));
        }
        Ok(config)
    }

    pub fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n_vars()).map(|_| rng.gen::<f64>()).collect()
    }

    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let genome = self.random_genome(rng);
        self.decode(&genome).expect("sampled genes lie in [0, 1)")
    }
}

/// The eight-parameter agent space: LLM sampling knobs, agent budgets and
/// the prompt template variant.
pub fn default_space() -> ConfigSpace {
    ConfigSpace::new(vec![
        ParamSpec::continuous(names::TEMPERATURE, 0.0, 1.0, ""),
        ParamSpec::continuous(names::TOP_P, 0.1, 1.0, ""),
        ParamSpec::integer(names::MAX_TOKENS, 512, 4096, "tokens"),
        ParamSpec::integer(names::STEP_LIMIT, 10, 40, "calls"),
        ParamSpec::continuous(names::COST_LIMIT, 3.0, 10.0, "dollars"),
        ParamSpec::integer(names::ENV_TIMEOUT, 40, 60, "seconds"),
        ParamSpec::integer(names::LLM_TIMEOUT, 40, 60, "seconds"),
        ParamSpec::categorical(names::PROMPT_TEMPLATE, &["1", "2", "3"], "variant"),
    ])
    .expect("default space is well formed")
}

/// Parameter names of [`default_space`].
pub mod names {
    pub const TEMPERATURE: &str = "temperature";
    pub const TOP_P: &str = "top_p";
    pub const MAX_TOKENS: &str = "max_tokens";
    pub const STEP_LIMIT: &str = "step_limit";
    pub const COST_LIMIT: &str = "cost_limit";
    pub const ENV_TIMEOUT: &str = "env_timeout";
    pub const LLM_TIMEOUT: &str = "llm_timeout";
    pub const PROMPT_TEMPLATE: &str = "prompt_template";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(i64),
    Real(f64),
    Category(String),
}

impl ParamValue {
    /// Numeric view: categories that parse as numbers yield their ordinal.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Integer(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Category(label) => label.parse().ok(),
        }
    }

    fn canonical(&self) -> String {
        match self {
            ParamValue::Integer(v) => v.to_string(),
            ParamValue::Real(v) => format!("{v:.6}"),
            ParamValue::Category(label) => label.clone(),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Integer(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{}", trim_float(*v)),
            ParamValue::Category(label) => f.write_str(label),
        }
    }
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map(|t| format!("{t}.0")).unwrap_or(s.to_string());
    s
}

/// Content hash of a configuration (16 hex digits of SHA-256 over the
/// canonical rendering). Collisions between distinct configurations are
/// possible in principle at 64 bits but negligible at the run sizes here.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigId(pub String);

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// One concrete assignment of hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub id: ConfigId,
    pub values: IndexMap<String, ParamValue>,
    /// Set for comparison baselines that may lie outside the space.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub baseline: bool,
}

impl Configuration {
    /// Wraps already ordered values and computes the id.
    pub fn from_ordered(values: IndexMap<String, ParamValue>, baseline: bool) -> Self {
        let id = Self::compute_id(&values);
        Configuration {
            id,
            values,
            baseline,
        }
    }

    fn compute_id(values: &IndexMap<String, ParamValue>) -> ConfigId {
        let text = values
            .iter()
            .map(|(k, v)| format!("{k}={}", v.canonical()))
            .collect::<Vec<_>>()
            .join(";");
        ConfigId(short_hash(&text))
    }

    /// True when the stored id matches the values.
    pub fn id_is_consistent(&self) -> bool {
        Self::compute_id(&self.values) == self.id
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(ParamValue::as_f64)
    }
}

/// Configuration as written in input files: the id is optional and kinds
/// are resolved against a space on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<ConfigId>,
    pub values: IndexMap<String, ParamValue>,
    #[serde(default)]
    pub baseline: bool,
}

impl ConfigDocument {
    pub fn resolve(&self, space: &ConfigSpace) -> Result<Configuration, SpaceError> {
        space.configuration(&self.values, self.baseline)
    }
}

impl From<&Configuration> for ConfigDocument {
    fn from(c: &Configuration) -> Self {
        ConfigDocument {
            id: Some(c.id.clone()),
            values: c.values.clone(),
            baseline: c.baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Missing(String),
    WrongKind { name: String, expected: ParamKind },
    OutOfBounds { name: String, value: String },
    Unknown(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing(name) => write!(f, "{name}: missing param"),
            Violation::WrongKind { name, expected } => {
                write!(f, "{name}: wrong kind, expected {expected}")
            }
            Violation::OutOfBounds { name, value } => {
                write!(f, "{name} out of range ({value})")
            }
            Violation::Unknown(name) => write!(f, "{name}: unknown param"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn values(pairs: &[(&str, ParamValue)]) -> IndexMap<String, ParamValue> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn row5() -> IndexMap<String, ParamValue> {
        use ParamValue::*;
        values(&[
            ("temperature", Real(0.692)),
            ("top_p", Real(0.384)),
            ("max_tokens", Integer(2972)),
            ("step_limit", Integer(38)),
            ("cost_limit", Real(6.73)),
            ("env_timeout", Integer(40)),
            ("llm_timeout", Integer(56)),
            ("prompt_template", Integer(3)),
        ])
    }

    #[test]
    fn default_space_matches_table() {
        let s = default_space();
        assert_eq!(s.n_vars(), 8);
        let t = s.param("temperature").unwrap();
        assert_eq!((t.lower, t.upper), (0.0, 1.0));
        let m = s.param("max_tokens").unwrap();
        assert_eq!(m.kind, ParamKind::Integer);
        assert_eq!((m.lower, m.upper), (512.0, 4096.0));
        let c = s.param("cost_limit").unwrap();
        assert_eq!((c.lower, c.upper, c.unit.as_str()), (3.0, 10.0, "dollars"));
        let p = s.param("prompt_template").unwrap();
        assert_eq!(p.categories, vec!["1", "2", "3"]);
    }

    #[test]
    fn decode_corners() {
        let s = default_space();
        let lo = s.decode(&[0.0; 8]).unwrap();
        let shown: Vec<String> = lo.values.values().map(|v| v.to_string()).collect();
        assert_eq!(shown, ["0.0", "0.1", "512", "10", "3.0", "40", "40", "1"]);
        let hi = s.decode(&[1.0; 8]).unwrap();
        let shown: Vec<String> = hi.values.values().map(|v| v.to_string()).collect();
        assert_eq!(shown, ["1.0", "1.0", "4096", "40", "10.0", "60", "60", "3"]);
    }

    #[test]
    fn decode_temperature_and_prompt_bucket() {
        let s = default_space();
        let mut g = vec![0.5; 8];
        g[0] = 0.692;
        g[7] = 0.70;
        let c = s.decode(&g).unwrap();
        assert_eq!(c.get("temperature"), Some(&ParamValue::Real(0.692)));
        assert_eq!(c.get("prompt_template"), Some(&ParamValue::Category("3".into())));
    }

    #[test]
    fn decode_errors() {
        let s = default_space();
        assert_eq!(
            s.decode(&[0.5; 7]).unwrap_err(),
            SpaceError::DimensionMismatch { expected: 8, got: 7 }
        );
        let mut g = vec![0.5; 8];
        g[3] = 1.2;
        assert!(matches!(s.decode(&g), Err(SpaceError::GeneOutOfRange { index: 3, .. })));
    }

    #[test]
    fn encode_lower_bounds() {
        let s = default_space();
        let c = s.decode(&[0.0; 8]).unwrap();
        let g = s.encode(&c).unwrap();
        assert_eq!(g[0], 0.0);
        // first integer bucket of max_tokens is [0, 0.5/3584)
        assert!((g[2] - 0.25 / 3584.0).abs() < 1e-15);
        assert!((g[7] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn table_row_round_trips() {
        let s = default_space();
        let c = s.configuration(&row5(), false).unwrap();
        let g = s.encode(&c).unwrap();
        let back = s.decode(&g).unwrap();
        assert_eq!(back.id, c.id);
        for (name, v) in &c.values {
            let b = back.get(name).unwrap();
            match (v, b) {
                (ParamValue::Real(x), ParamValue::Real(y)) => assert!((x - y).abs() < 1e-12),
                _ => assert_eq!(v, b),
            }
        }
    }

    #[test]
    fn encode_rejects_out_of_bounds() {
        let s = default_space();
        let mut raw = row5();
        raw.insert("step_limit".into(), ParamValue::Integer(240));
        let c = s.configuration(&raw, true).unwrap();
        assert!(s.encode(&c).is_err());
    }

    #[test]
    fn validate_baseline_reports_without_rejecting() {
        let s = default_space();
        let mut raw = row5();
        raw.insert("step_limit".into(), ParamValue::Integer(240));
        raw.shift_remove("prompt_template");
        let c = s.configuration(&raw, true).unwrap();
        let v = s.validate(&c);
        assert!(v.ok);
        assert!(v.summary().contains("step_limit out of range"));
        assert!(s.configuration(&raw, false).is_err());
    }

    #[test]
    fn validate_missing_param() {
        let s = default_space();
        let mut raw = row5();
        raw.shift_remove("env_timeout");
        let c = Configuration::from_ordered(raw, false);
        let v = s.validate(&c);
        assert!(!v.ok);
        assert_eq!(v.violations, vec![Violation::Missing("env_timeout".into())]);
        assert_eq!(v.summary(), "env_timeout: missing param");
    }

    #[test]
    fn validate_in_space_row() {
        let s = default_space();
        let c = s.configuration(&row5(), false).unwrap();
        let v = s.validate(&c);
        assert!(v.ok && v.violations.is_empty());
    }

    #[test]
    fn random_config_is_seeded() {
        let s = default_space();
        let a = s.random_config(&mut ChaCha8Rng::seed_from_u64(7));
        let b = s.random_config(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn random_prompt_is_uniform() {
        let s = default_space();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        for _ in 0..1000 {
            let c = s.random_config(&mut rng);
            assert!(s.validate(&c).violations.is_empty());
            let idx: usize = c.number("prompt_template").unwrap() as usize;
            counts[idx - 1] += 1;
        }
        for n in counts {
            assert!((n as f64 / 1000.0 - 1.0 / 3.0).abs() < 0.05, "{counts:?}");
        }
    }

    #[test]
    fn space_invariants() {
        let dup = vec![
            ParamSpec::continuous("a", 0.0, 1.0, ""),
            ParamSpec::continuous("a", 0.0, 1.0, ""),
        ];
        assert_eq!(ConfigSpace::new(dup).unwrap_err(), SpaceError::DuplicateName("a".into()));
        let inverted = vec![ParamSpec::continuous("a", 2.0, 1.0, "")];
        assert!(ConfigSpace::new(inverted).is_err());
        let frac = vec![ParamSpec {
            lower: 0.5,
            ..ParamSpec::integer("n", 0, 3, "")
        }];
        assert!(ConfigSpace::new(frac).is_err());
        let empty = vec![ParamSpec::categorical("c", &[], "")];
        assert!(ConfigSpace::new(empty).is_err());
    }

    #[test]
    fn space_json_shape() {
        let s = default_space();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with(r#"[{"name":"temperature","kind":"continuous","lower":0.0,"upper":1.0"#));
        let back: ConfigSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"[{"name":"a","kind":"integer","lower":5,"upper":1}]"#;
        assert!(serde_json::from_str::<ConfigSpace>(bad).is_err());
    }

    #[test]
    fn configuration_json_keeps_space_order() {
        let s = default_space();
        let c = s.configuration(&row5(), false).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let t = text.find("temperature").unwrap();
        let p = text.find("prompt_template").unwrap();
        assert!(t < p);
        let back: Configuration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(back.id_is_consistent());
    }

    #[test]
    fn id_depends_on_values() {
        let s = default_space();
        let a = s.configuration(&row5(), false).unwrap();
        let mut raw = row5();
        raw.insert("temperature".into(), ParamValue::Real(0.693));
        let b = s.configuration(&raw, false).unwrap();
        assert_ne!(a.id, b.id);
        assert_eq!(a.id, s.configuration(&row5(), false).unwrap().id);
        assert_eq!(a.id.0.len(), 16);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn decode_is_total(genome in proptest::collection::vec(0.0f64..=1.0, 8)) {
                let s = default_space();
                let c = s.decode(&genome).unwrap();
                prop_assert!(s.validate(&c).violations.is_empty());
            }

            #[test]
            fn encode_decode_round_trip(genome in proptest::collection::vec(0.0f64..=1.0, 8)) {
                let s = default_space();
                let c = s.decode(&genome).unwrap();
                let back = s.decode(&s.encode(&c).unwrap()).unwrap();
                for (name, v) in &c.values {
                    match (v, back.get(name).unwrap()) {
                        (ParamValue::Real(x), ParamValue::Real(y)) => prop_assert!((x - y).abs() < 1e-12),
                        (v, b) => prop_assert_eq!(v, b),
                    }
                }
            }
        }
    }
}
