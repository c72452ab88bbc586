//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! scenario.name = "radial-to-sphere"
//! source.kind = jacobi-geodesic
//! source.metric = schwarzschild
//! source.mass = 1.0
//! source.x0 = (0, 10, 1.5707963267948966, 0)
//! source.v0 = (1, 0, 0, 0)
//! target.kind = constant-curvature
//! target.K = 1.0
//! integration.tau_max = 5
//! ```
//!
//! Values are numbers, bare words, double-quoted strings, or flat lists
//! `(a, b, c)` of those. Every key must be known and used by the chosen
//! kinds; anything else is an error carrying its line number.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("line {line}: invalid value for `{key}`: {msg}")]
    InvalidValue { line: usize, key: String, msg: String },

    #[error("line {line}: key `{key}` is not used by {context}")]
    UnusedKey { line: usize, key: String, context: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A parsed right-hand side.
#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Word(String),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Num(_) => "a number",
            Value::Word(_) => "a bare word",
            Value::Str(_) => "a string",
            Value::List(_) => "a list",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
}

const SIDE_KEYS: &[&str] = &[
    "kind",
    "metric",
    "mass",
    "curvature",
    "entries",
    "x0",
    "v0",
    "congruence",
    "M",
    "K",
    "G",
    "b",
];
const TOLERANCE_KEYS: &[&str] = &["mapping", "ode", "factorization", "drift"];

fn is_known_key(key: &str) -> bool {
    let Some((section, rest)) = key.split_once('.') else {
        return false;
    };
    match section {
        "scenario" => matches!(rest, "name" | "n"),
        "source" | "target" => SIDE_KEYS.contains(&rest),
        "integration" => matches!(rest, "h" | "tau_max"),
        "transfer" => rest == "T0",
        "verify" => rest
            .strip_prefix("state.")
            .is_some_and(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit())),
        "tolerance" => TOLERANCE_KEYS.contains(&rest),
        "output" => matches!(rest, "dir" | "formats"),
        _ => false,
    }
}

fn parse_scalar(tok: &str, line: usize) -> Result<Value, ConfigError> {
    let tok = tok.trim();
    if tok.is_empty() {
        return Err(ConfigError::Syntax {
            line,
            msg: "empty value".into(),
        });
    }
    if let Some(body) = tok.strip_prefix('"') {
        let Some(inner) = body.strip_suffix('"') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("unterminated string {tok}"),
            });
        };
        if inner.contains('"') {
            return Err(ConfigError::Syntax {
                line,
                msg: "strings may not contain quotes".into(),
            });
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if let Ok(v) = tok.parse::<f64>() {
        if !v.is_finite() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("non-finite number {tok}"),
            });
        }
        return Ok(Value::Num(v));
    }
    let word_ok = tok.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    let starts_alpha = tok.as_bytes()[0].is_ascii_alphabetic();
    if word_ok && starts_alpha {
        return Ok(Value::Word(tok.to_string()));
    }
    Err(ConfigError::Syntax {
        line,
        msg: format!("cannot parse value `{tok}`"),
    })
}

/// Splits a list body on commas outside double quotes.
fn split_list(body: &str, line: usize) -> Result<Vec<Value>, ConfigError> {
    if body.trim().is_empty() {
        return Err(ConfigError::Syntax {
            line,
            msg: "empty list".into(),
        });
    }
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut in_str = false;
    for ch in body.chars() {
        match ch {
            '"' => {
                in_str = !in_str;
                cur.push(ch);
            }
            ',' if !in_str => items.push(parse_scalar(&std::mem::take(&mut cur), line)?),
            '(' | ')' if !in_str => {
                return Err(ConfigError::Syntax {
                    line,
                    msg: "nested lists are not allowed".into(),
                })
            }
            _ => cur.push(ch),
        }
    }
    items.push(parse_scalar(&cur, line)?);
    Ok(items)
}

fn parse_value(raw: &str, line: usize) -> Result<Value, ConfigError> {
    let raw = raw.trim();
    if let Some(body) = raw.strip_prefix('(') {
        let Some(body) = body.strip_suffix(')') else {
            return Err(ConfigError::Syntax {
                line,
                msg: "list is missing its closing `)`".into(),
            });
        };
        return Ok(Value::List(split_list(body, line)?));
    }
    parse_scalar(raw, line)
}

fn lex(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: "expected `section.key = value`".into(),
            });
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("malformed key `{key}`"),
            });
        }
        if !is_known_key(key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        let value = parse_value(value, line)?;
        if let Some(prev) = out.get(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
                first: prev.line,
            });
        }
        out.insert(key.to_string(), Entry { line, value });
    }
    Ok(out)
}

/// Consumes keys from the lexed map with typed accessors.
struct Fields {
    map: BTreeMap<String, Entry>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn bad(entry: &Entry, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            line: entry.line,
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    fn require(&mut self, key: &str) -> Result<Entry, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn num(&mut self, key: &str) -> Result<Option<(f64, usize)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        match e.value {
            Value::Num(v) => Ok(Some((v, e.line))),
            ref other => Err(Self::bad(
                &e,
                key,
                format!("expected a number, got {}", other.describe()),
            )),
        }
    }

    fn word(&mut self, key: &str) -> Result<Option<(String, usize)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        match &e.value {
            Value::Word(w) => Ok(Some((w.clone(), e.line))),
            other => Err(Self::bad(
                &e,
                key,
                format!("expected a bare word, got {}", other.describe()),
            )),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        match &e.value {
            Value::Str(s) => Ok(Some(s.clone())),
            other => Err(Self::bad(
                &e,
                key,
                format!("expected a quoted string, got {}", other.describe()),
            )),
        }
    }

    /// A number or a list of numbers.
    fn numbers(&mut self, key: &str) -> Result<Option<(Vec<f64>, bool, usize)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        match &e.value {
            Value::Num(v) => Ok(Some((vec![*v], true, e.line))),
            Value::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    match it {
                        Value::Num(v) => out.push(*v),
                        other => {
                            return Err(Self::bad(
                                &e,
                                key,
                                format!("list items must be numbers, got {}", other.describe()),
                            ))
                        }
                    }
                }
                Ok(Some((out, false, e.line)))
            }
            other => Err(Self::bad(
                &e,
                key,
                format!("expected a number or list, got {}", other.describe()),
            )),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        match self.numbers(key)? {
            None => Ok(None),
            Some((_, true, line)) => Err(ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                msg: "expected a list `(a, b, ...)`".into(),
            }),
            Some((v, false, line)) => Ok(Some((v, line))),
        }
    }

    /// A list whose items may be numbers or quoted expressions.
    fn entries(&mut self, key: &str) -> Result<Option<(Vec<Coef>, usize)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        let items = match &e.value {
            Value::List(items) => items.clone(),
            single @ (Value::Num(_) | Value::Str(_)) => vec![single.clone()],
            other => return Err(Self::bad(&e, key, format!("expected a list, got {}", other.describe()))),
        };
        let mut out = Vec::with_capacity(items.len());
        for it in items {
            out.push(match it {
                Value::Num(v) => Coef::Num(v),
                Value::Str(s) => Coef::Expr(s),
                other => {
                    return Err(Self::bad(
                        &e,
                        key,
                        format!("items must be numbers or quoted expressions, got {}", other.describe()),
                    ))
                }
            });
        }
        Ok(Some((out, e.line)))
    }

    fn words(&mut self, key: &str) -> Result<Option<(Vec<String>, usize)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        let items = match &e.value {
            Value::List(items) => items.clone(),
            w @ Value::Word(_) => vec![w.clone()],
            other => return Err(Self::bad(&e, key, format!("expected words, got {}", other.describe()))),
        };
        let mut out = Vec::new();
        for it in items {
            match it {
                Value::Word(w) => out.push(w),
                other => return Err(Self::bad(&e, key, format!("expected words, got {}", other.describe()))),
            }
        }
        Ok(Some((out, e.line)))
    }

    /// Errors on any key left under `prefix`.
    fn reject_rest(&mut self, prefix: &str, context: &str) -> Result<(), ConfigError> {
        let leftover = self
            .map
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .min_by_key(|(_, e)| e.line)
            .map(|(k, e)| (k.clone(), e.line));
        match leftover {
            Some((key, line)) => Err(ConfigError::UnusedKey {
                line,
                key,
                context: context.to_string(),
            }),
            None => Ok(()),
        }
    }
}

/// A coefficient entry: a number or an expression in `tau`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coef {
    Num(f64),
    Expr(String),
}

impl Coef {
    pub fn is_constant(&self) -> bool {
        matches!(self, Coef::Num(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Minkowski,
    Schwarzschild {
        mass: f64,
    },
    ConstantCurvature {
        curvature: f64,
    },
    /// Diagonal entries as expressions in `x0, x1, …`.
    Diagonal {
        entries: Vec<String>,
    },
}

impl MetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MetricSpec::Minkowski => "minkowski",
            MetricSpec::Schwarzschild { .. } => "schwarzschild",
            MetricSpec::ConstantCurvature { .. } => "constant-curvature",
            MetricSpec::Diagonal { .. } => "diagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CongruenceSpec {
    Zero,
    Rindler,
    SchwarzschildStatic,
}

impl CongruenceSpec {
    pub fn name(self) -> &'static str {
        match self {
            CongruenceSpec::Zero => "zero",
            CongruenceSpec::Rindler => "rindler",
            CongruenceSpec::SchwarzschildStatic => "schwarzschild-static",
        }
    }

    fn parse(w: &str) -> Option<Self> {
        Some(match w {
            "zero" => CongruenceSpec::Zero,
            "rindler" => CongruenceSpec::Rindler,
            "schwarzschild-static" => CongruenceSpec::SchwarzschildStatic,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub metric: MetricSpec,
    pub x0: Vec<f64>,
    /// `None` when the congruence fixes the velocity.
    pub v0: Option<Vec<f64>>,
}

impl CurveSpec {
    pub fn n(&self) -> usize {
        self.x0.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricForm {
    SecondOrder,
    QuadraticForm,
    FirstOrder,
}

/// How one side's quadratic Hamiltonian is built.
#[derive(Debug, Clone, PartialEq)]
pub enum SideSpec {
    JacobiGeodesic {
        curve: CurveSpec,
    },
    JacobiNongeodesic {
        curve: CurveSpec,
        congruence: CongruenceSpec,
    },
    /// `M_AC` row-major, constant.
    JacobiFirstOrder {
        m: Vec<f64>,
    },
    ConstantCurvature {
        k: Vec<f64>,
    },
    /// `G_ij` row-major; entries are numbers or expressions in `tau`.
    Metric {
        form: MetricForm,
        g: Vec<Coef>,
    },
}

impl SideSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SideSpec::JacobiGeodesic { .. } => "jacobi-geodesic",
            SideSpec::JacobiNongeodesic { .. } => "jacobi-nongeodesic",
            SideSpec::JacobiFirstOrder { .. } => "jacobi-first-order",
            SideSpec::ConstantCurvature { .. } => "constant-curvature",
            SideSpec::Metric { form, .. } => match form {
                MetricForm::SecondOrder => "metric-second-order",
                MetricForm::QuadraticForm => "metric-quadratic-form",
                MetricForm::FirstOrder => "metric-first-order",
            },
        }
    }
}

pub const SIDE_KINDS: &[&str] = &[
    "jacobi-geodesic",
    "jacobi-nongeodesic",
    "jacobi-first-order",
    "constant-curvature",
    "metric-second-order",
    "metric-quadratic-form",
    "metric-first-order",
];

pub const METRICS: &[&str] = &["minkowski", "schwarzschild", "constant-curvature", "diagonal"];
pub const CONGRUENCES: &[&str] = &["zero", "rindler", "schwarzschild-static"];
pub const OUTPUT_FORMATS: &[&str] = &["csv", "summary"];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialTransfer {
    Identity,
    /// `(2n)²` entries, row-major.
    Entries(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub mapping: f64,
    pub ode: f64,
    pub factorization: f64,
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mapping: 1e-4,
            ode: 1e-4,
            factorization: 1e-6,
            drift: 1e-8,
        }
    }
}

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub source: SideSpec,
    pub target: SideSpec,
    pub h: f64,
    pub tau_max: f64,
    pub t0: InitialTransfer,
    /// Phase-space initial states for the mapping check; the 2n basis
    /// vectors unless configured.
    pub verify_states: Vec<Vec<f64>>,
    pub tolerances: Tolerances,
    pub output_dir: Option<String>,
    pub formats: Vec<String>,
}

/// Partially parsed side, before `n` is known.
struct RawSide {
    spec: SideSpec,
    /// `n` implied by the side, if any.
    n: Option<usize>,
    /// Scalar K or b awaiting broadcast.
    broadcast: Option<f64>,
    line: usize,
}

fn square_root_len(len: usize) -> Option<usize> {
    let r = (len as f64).sqrt().round() as usize;
    (r * r == len && r > 0).then_some(r)
}

fn parse_side(f: &mut Fields, side: &str) -> Result<RawSide, ConfigError> {
    let key = |k: &str| format!("{side}.{k}");
    let kind_key = key("kind");
    let (kind, kind_line) = match f.word(&kind_key)? {
        Some(k) => k,
        None if side == "target" && f.map.contains_key(&key("K")) => ("constant-curvature".to_string(), 0),
        None => return Err(ConfigError::MissingKey(kind_key)),
    };
    let context = format!("{side}.kind = {kind}");

    let raw = match kind.as_str() {
        "jacobi-geodesic" | "jacobi-nongeodesic" => {
            let (metric, mline) = f
                .word(&key("metric"))?
                .ok_or_else(|| ConfigError::MissingKey(key("metric")))?;
            let metric = match metric.as_str() {
                "minkowski" => MetricSpec::Minkowski,
                "schwarzschild" => {
                    let (mass, line) = f
                        .num(&key("mass"))?
                        .ok_or_else(|| ConfigError::MissingKey(key("mass")))?;
                    if !(mass > 0.0) {
                        return Err(ConfigError::InvalidValue {
                            line,
                            key: key("mass"),
                            msg: "mass must be positive".into(),
                        });
                    }
                    MetricSpec::Schwarzschild { mass }
                }
                "constant-curvature" => {
                    let (curvature, _) = f
                        .num(&key("curvature"))?
                        .ok_or_else(|| ConfigError::MissingKey(key("curvature")))?;
                    MetricSpec::ConstantCurvature { curvature }
                }
                "diagonal" => {
                    let e = f.require(&key("entries"))?;
                    let items = match &e.value {
                        Value::List(items) => items.clone(),
                        other => {
                            return Err(Fields::bad(
                                &e,
                                &key("entries"),
                                format!("expected a list of quoted expressions, got {}", other.describe()),
                            ))
                        }
                    };
                    let mut entries = Vec::new();
                    for it in items {
                        match it {
                            Value::Str(s) => entries.push(s),
                            Value::Num(v) => entries.push(format!("{v:?}")),
                            other => {
                                return Err(Fields::bad(
                                    &e,
                                    &key("entries"),
                                    format!("expected quoted expressions, got {}", other.describe()),
                                ))
                            }
                        }
                    }
                    let names: Vec<String> = (0..entries.len()).map(|i| format!("x{i}")).collect();
                    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
                    for s in &entries {
                        Expr::parse(s, &vars)
                            .map_err(|err| Fields::bad(&e, &key("entries"), format!("`{s}`: {err}")))?;
                    }
                    MetricSpec::Diagonal { entries }
                }
                other => {
                    return Err(ConfigError::InvalidValue {
                        line: mline,
                        key: key("metric"),
                        msg: format!("unknown metric `{other}` (known: {})", METRICS.join(", ")),
                    })
                }
            };
            let (x0, xline) = f.list(&key("x0"))?.ok_or_else(|| ConfigError::MissingKey(key("x0")))?;
            if x0.len() < 2 {
                return Err(ConfigError::InvalidValue {
                    line: xline,
                    key: key("x0"),
                    msg: "need at least two coordinates".into(),
                });
            }
            let dim_expected = match &metric {
                MetricSpec::Schwarzschild { .. } => Some(4),
                MetricSpec::Diagonal { entries } => Some(entries.len()),
                _ => None,
            };
            if let Some(d) = dim_expected {
                if x0.len() != d {
                    return Err(ConfigError::DimensionMismatch(format!(
                        "{side}.x0 has {} coordinates, metric `{}` has dimension {d}",
                        x0.len(),
                        metric.name()
                    )));
                }
            }
            let v0 = f.list(&key("v0"))?;
            if let Some((v, line)) = &v0 {
                if v.len() != x0.len() {
                    return Err(ConfigError::InvalidValue {
                        line: *line,
                        key: key("v0"),
                        msg: format!("expected {} components, got {}", x0.len(), v.len()),
                    });
                }
            }
            let n = x0.len() - 1;
            if kind == "jacobi-geodesic" {
                let Some((v0, _)) = v0 else {
                    return Err(ConfigError::MissingKey(key("v0")));
                };
                RawSide {
                    spec: SideSpec::JacobiGeodesic {
                        curve: CurveSpec {
                            metric,
                            x0,
                            v0: Some(v0),
                        },
                    },
                    n: Some(n),
                    broadcast: None,
                    line: kind_line,
                }
            } else {
                let (cname, cline) = f
                    .word(&key("congruence"))?
                    .ok_or_else(|| ConfigError::MissingKey(key("congruence")))?;
                let congruence = CongruenceSpec::parse(&cname).ok_or_else(|| ConfigError::InvalidValue {
                    line: cline,
                    key: key("congruence"),
                    msg: format!("unknown congruence `{cname}` (known: {})", CONGRUENCES.join(", ")),
                })?;
                let needs = match congruence {
                    CongruenceSpec::Zero => None,
                    CongruenceSpec::Rindler => Some("minkowski"),
                    CongruenceSpec::SchwarzschildStatic => Some("schwarzschild"),
                };
                if let Some(want) = needs {
                    if metric.name() != want {
                        return Err(ConfigError::InvalidValue {
                            line: cline,
                            key: key("congruence"),
                            msg: format!("congruence `{cname}` needs metric `{want}`"),
                        });
                    }
                    if let Some((_, line)) = v0 {
                        return Err(ConfigError::UnusedKey {
                            line,
                            key: key("v0"),
                            context: format!("congruence `{cname}`, which fixes the velocity"),
                        });
                    }
                }
                let v0 = match (congruence, v0) {
                    (CongruenceSpec::Zero, None) => return Err(ConfigError::MissingKey(key("v0"))),
                    (_, v) => v.map(|(v, _)| v),
                };
                RawSide {
                    spec: SideSpec::JacobiNongeodesic {
                        curve: CurveSpec { metric, x0, v0 },
                        congruence,
                    },
                    n: Some(n),
                    broadcast: None,
                    line: kind_line,
                }
            }
        }
        "jacobi-first-order" => {
            let (m, line) = f.list(&key("M"))?.ok_or_else(|| ConfigError::MissingKey(key("M")))?;
            let n = square_root_len(m.len()).ok_or_else(|| ConfigError::InvalidValue {
                line,
                key: key("M"),
                msg: format!("{} entries is not a square matrix", m.len()),
            })?;
            RawSide {
                spec: SideSpec::JacobiFirstOrder { m },
                n: Some(n),
                broadcast: None,
                line: kind_line,
            }
        }
        "constant-curvature" => {
            let (k, scalar, _) = f.numbers(&key("K"))?.ok_or_else(|| ConfigError::MissingKey(key("K")))?;
            RawSide {
                n: (!scalar).then_some(k.len()),
                broadcast: scalar.then_some(k[0]),
                spec: SideSpec::ConstantCurvature { k },
                line: kind_line,
            }
        }
        "metric-second-order" | "metric-quadratic-form" | "metric-first-order" => {
            let form = match kind.as_str() {
                "metric-second-order" => MetricForm::SecondOrder,
                "metric-quadratic-form" => MetricForm::QuadraticForm,
                _ => MetricForm::FirstOrder,
            };
            let g = f.entries(&key("G"))?;
            let b = f.numbers(&key("b"))?;
            match (g, b) {
                (Some(_), Some((_, _, line))) => {
                    return Err(ConfigError::InvalidValue {
                        line,
                        key: key("b"),
                        msg: format!("give either {side}.G or {side}.b, not both"),
                    })
                }
                (None, None) => return Err(ConfigError::MissingKey(key("G"))),
                (Some((g, line)), None) => {
                    let n = square_root_len(g.len()).ok_or_else(|| ConfigError::InvalidValue {
                        line,
                        key: key("G"),
                        msg: format!("{} entries is not a square matrix", g.len()),
                    })?;
                    for c in &g {
                        if let Coef::Expr(s) = c {
                            Expr::parse(s, &["tau"]).map_err(|err| ConfigError::InvalidValue {
                                line,
                                key: key("G"),
                                msg: format!("`{s}`: {err}"),
                            })?;
                        }
                    }
                    RawSide {
                        spec: SideSpec::Metric { form, g },
                        n: Some(n),
                        broadcast: None,
                        line: kind_line,
                    }
                }
                (None, Some((b, scalar, _))) => {
                    // Diagonal G from b values; expanded once n is known.
                    let g = b.iter().map(|v| Coef::Num(*v)).collect();
                    RawSide {
                        spec: SideSpec::Metric { form, g },
                        n: (!scalar).then_some(b.len()),
                        broadcast: scalar.then_some(b[0]),
                        line: kind_line,
                    }
                }
            }
        }
        other => {
            return Err(ConfigError::InvalidValue {
                line: kind_line,
                key: kind_key,
                msg: format!("unknown kind `{other}` (known: {})", SIDE_KINDS.join(", ")),
            })
        }
    };
    f.reject_rest(&format!("{side}."), &context)?;
    Ok(raw)
}

/// Fills in `n` for scalar broadcasts and diagonal `b` values.
fn finish_side(raw: RawSide, n: usize, side: &str, from_b: bool) -> Result<SideSpec, ConfigError> {
    if let Some(rn) = raw.n {
        if rn != n {
            return Err(ConfigError::DimensionMismatch(format!(
                "{side} has n = {rn} (line {}), scenario has n = {n}",
                raw.line
            )));
        }
    }
    Ok(match raw.spec {
        SideSpec::ConstantCurvature { k } => SideSpec::ConstantCurvature {
            k: match raw.broadcast {
                Some(v) => vec![v; n],
                None => k,
            },
        },
        SideSpec::Metric { form, g } if from_b => {
            let diag: Vec<f64> = match raw.broadcast {
                Some(v) => vec![v; n],
                None => g
                    .iter()
                    .map(|c| match c {
                        Coef::Num(v) => *v,
                        Coef::Expr(_) => unreachable!("b values are numbers"),
                    })
                    .collect(),
            };
            let g = (0..n * n)
                .map(|k| Coef::Num(if k / n == k % n { diag[k / n] } else { 0.0 }))
                .collect();
            SideSpec::Metric { form, g }
        }
        other => other,
    })
}

impl ScenarioConfig {
    /// Strict parse; see the module docs for the format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut f = Fields { map: lex(text)? };

        let name = f.string("scenario.name")?.unwrap_or_else(|| "scenario".to_string());
        let declared_n = match f.num("scenario.n")? {
            None => None,
            Some((v, line)) => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(ConfigError::InvalidValue {
                        line,
                        key: "scenario.n".into(),
                        msg: "expected a positive integer".into(),
                    });
                }
                Some(v as usize)
            }
        };

        let source_b = f.map.contains_key("source.b");
        let target_b = f.map.contains_key("target.b");
        let source = parse_side(&mut f, "source")?;
        let target = parse_side(&mut f, "target")?;

        let n = match (declared_n, source.n, target.n) {
            (Some(n), _, _) => n,
            (None, Some(a), Some(b)) if a != b => {
                return Err(ConfigError::DimensionMismatch(format!(
                    "source has n = {a}, target has n = {b}"
                )))
            }
            (None, Some(a), _) | (None, None, Some(a)) => a,
            (None, None, None) => return Err(ConfigError::MissingKey("scenario.n".into())),
        };
        let source = finish_side(source, n, "source", source_b)?;
        let target = finish_side(target, n, "target", target_b)?;

        let h = match f.num("integration.h")? {
            None => DEFAULT_STEP,
            Some((v, _)) if v > 0.0 => v,
            Some((_, line)) => {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "integration.h".into(),
                    msg: "step must be positive".into(),
                })
            }
        };
        let tau_max = match f.num("integration.tau_max")? {
            None => return Err(ConfigError::MissingKey("integration.tau_max".into())),
            Some((v, _)) if v > 0.0 => v,
            Some((_, line)) => {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "integration.tau_max".into(),
                    msg: "tau_max must be positive".into(),
                })
            }
        };

        let t0 = match f.take("transfer.T0") {
            None => InitialTransfer::Identity,
            Some(e) => match &e.value {
                Value::Word(w) if w == "identity" => InitialTransfer::Identity,
                Value::List(_) => {
                    f.map.insert("transfer.T0".into(), e.clone());
                    let (v, line) = f.list("transfer.T0")?.expect("just inserted");
                    if v.len() != 4 * n * n {
                        return Err(ConfigError::InvalidValue {
                            line,
                            key: "transfer.T0".into(),
                            msg: format!("expected {} entries for n = {n}, got {}", 4 * n * n, v.len()),
                        });
                    }
                    InitialTransfer::Entries(v)
                }
                _ => {
                    return Err(Fields::bad(
                        &e,
                        "transfer.T0",
                        "expected `identity` or a list of entries",
                    ))
                }
            },
        };

        let mut state_keys: Vec<(usize, String)> = f
            .map
            .keys()
            .filter_map(|k| {
                k.strip_prefix("verify.state.")
                    .map(|i| (i.parse().unwrap_or(usize::MAX), k.clone()))
            })
            .collect();
        state_keys.sort();
        let mut verify_states = Vec::new();
        for (_, key) in state_keys {
            let (v, line) = f.list(&key)?.expect("key present");
            if v.len() != 2 * n {
                return Err(ConfigError::InvalidValue {
                    line,
                    key,
                    msg: format!("expected {} components, got {}", 2 * n, v.len()),
                });
            }
            verify_states.push(v);
        }
        if verify_states.is_empty() {
            verify_states = (0..2 * n)
                .map(|k| (0..2 * n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
                .collect();
        }

        let mut tolerances = Tolerances::default();
        for (name, slot) in [
            ("mapping", &mut tolerances.mapping),
            ("ode", &mut tolerances.ode),
            ("factorization", &mut tolerances.factorization),
            ("drift", &mut tolerances.drift),
        ] {
            let key = format!("tolerance.{name}");
            if let Some((v, line)) = f.num(&key)? {
                if !(v > 0.0) {
                    return Err(ConfigError::InvalidValue {
                        line,
                        key,
                        msg: "tolerance must be positive".into(),
                    });
                }
                *slot = v;
            }
        }

        let output_dir = f.string("output.dir")?;
        let formats = match f.words("output.formats")? {
            None => OUTPUT_FORMATS.iter().map(|s| s.to_string()).collect(),
            Some((ws, line)) => {
                for w in &ws {
                    if !OUTPUT_FORMATS.contains(&w.as_str()) {
                        return Err(ConfigError::InvalidValue {
                            line,
                            key: "output.formats".into(),
                            msg: format!("unknown format `{w}` (known: {})", OUTPUT_FORMATS.join(", ")),
                        });
                    }
                }
                ws
            }
        };

        debug_assert!(f.map.is_empty(), "unconsumed keys: {:?}", f.map.keys());
        Ok(ScenarioConfig {
            name,
            n,
            source,
            target,
            h,
            tau_max,
            t0,
            verify_states,
            tolerances,
            output_dir,
            formats,
        })
    }

    /// Canonical text form. Every value is explicit, so parsing the result
    /// gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("scenario.name", quote(&self.name));
        line("scenario.n", self.n.to_string());
        for (side, spec) in [("source", &self.source), ("target", &self.target)] {
            write_side(&mut line, side, spec);
        }
        line("integration.h", num(self.h));
        line("integration.tau_max", num(self.tau_max));
        line(
            "transfer.T0",
            match &self.t0 {
                InitialTransfer::Identity => "identity".into(),
                InitialTransfer::Entries(v) => nums(v),
            },
        );
        for (i, s) in self.verify_states.iter().enumerate() {
            line(&format!("verify.state.{i}"), nums(s));
        }
        let t = &self.tolerances;
        line("tolerance.mapping", num(t.mapping));
        line("tolerance.ode", num(t.ode));
        line("tolerance.factorization", num(t.factorization));
        line("tolerance.drift", num(t.drift));
        if let Some(d) = &self.output_dir {
            line("output.dir", quote(d));
        }
        line("output.formats", format!("({})", self.formats.join(", ")));
        out
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn nums(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("({})", items.join(", "))
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn write_side(line: &mut impl FnMut(&str, String), side: &str, spec: &SideSpec) {
    let key = |k: &str| format!("{side}.{k}");
    line(&key("kind"), spec.kind().to_string());
    match spec {
        SideSpec::JacobiGeodesic { curve } | SideSpec::JacobiNongeodesic { curve, .. } => {
            line(&key("metric"), curve.metric.name().to_string());
            match &curve.metric {
                MetricSpec::Minkowski => {}
                MetricSpec::Schwarzschild { mass } => line(&key("mass"), num(*mass)),
                MetricSpec::ConstantCurvature { curvature } => line(&key("curvature"), num(*curvature)),
                MetricSpec::Diagonal { entries } => {
                    let items: Vec<String> = entries.iter().map(|s| quote(s)).collect();
                    line(&key("entries"), format!("({})", items.join(", ")));
                }
            }
            line(&key("x0"), nums(&curve.x0));
            if let Some(v0) = &curve.v0 {
                line(&key("v0"), nums(v0));
            }
            if let SideSpec::JacobiNongeodesic { congruence, .. } = spec {
                line(&key("congruence"), congruence.name().to_string());
            }
        }
        SideSpec::JacobiFirstOrder { m } => line(&key("M"), nums(m)),
        SideSpec::ConstantCurvature { k } => line(&key("K"), nums(k)),
        SideSpec::Metric { g, .. } => {
            let items: Vec<String> = g
                .iter()
                .map(|c| match c {
                    Coef::Num(v) => num(*v),
                    Coef::Expr(s) => quote(s),
                })
                .collect();
            line(&key("G"), format!("({})", items.join(", ")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
source.kind = constant-curvature
source.K = (0, 0)
target.kind = constant-curvature
target.K = (0, 0)
integration.tau_max = 1
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.h, 1e-3);
        assert_eq!(c.t0, InitialTransfer::Identity);
        assert_eq!(c.verify_states.len(), 4);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.formats, vec!["csv", "summary"]);
    }

    #[test]
    fn scalar_k_is_broadcast() {
        let text = "\
source.kind = jacobi-geodesic
source.metric = minkowski
source.x0 = (0, 0, 0, 0)
source.v0 = (1, 0, 0, 0)
target.K = 1.0
integration.tau_max = 1
";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.target, SideSpec::ConstantCurvature { k: vec![1.0; 3] });
    }

    #[test]
    fn scalar_b_is_broadcast_to_diagonal() {
        let text = "\
scenario.n = 2
source.kind = metric-second-order
source.b = 2.5
target.kind = constant-curvature
target.K = 1
integration.tau_max = 1
";
        let c = ScenarioConfig::parse(text).unwrap();
        let SideSpec::Metric { g, .. } = &c.source else {
            panic!()
        };
        assert_eq!(g, &[Coef::Num(2.5), Coef::Num(0.0), Coef::Num(0.0), Coef::Num(2.5)]);
    }

    #[test]
    fn misspelled_key_names_key_and_line() {
        let text = MINIMAL.replace("target.K", "targett.K");
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 4,
                key: "targett.K".into()
            }
        );
        assert!(err.to_string().contains("targett.K") && err.to_string().contains("line 4"));
    }

    #[test]
    fn rejections() {
        let cases: &[(&str, fn(&ConfigError) -> bool)] = &[
            ("integration.tau_max = 1\nintegration.tau_max = 2\n", |e| {
                matches!(e, ConfigError::DuplicateKey { line: 2, first: 1, .. })
            }),
            ("integration.tau_max 1\n", |e| {
                matches!(e, ConfigError::Syntax { line: 1, .. })
            }),
            ("source.x0 = (1, 2\n", |e| matches!(e, ConfigError::Syntax { .. })),
            ("source.x0 = (1, (2))\n", |e| matches!(e, ConfigError::Syntax { .. })),
            ("scenario.name = \"abc\n", |e| matches!(e, ConfigError::Syntax { .. })),
            ("verify.state.x = (1, 0)\n", |e| {
                matches!(e, ConfigError::UnknownKey { .. })
            }),
            (
                "integration.tau_max = 1\n",
                |e| matches!(e, ConfigError::MissingKey(k) if k == "source.kind"),
            ),
        ];
        for (text, ok) in cases {
            let err = ScenarioConfig::parse(text).unwrap_err();
            assert!(ok(&err), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn semantic_rejections() {
        let bad_h = format!("{MINIMAL}integration.h = -1\n");
        assert!(matches!(
            ScenarioConfig::parse(&bad_h),
            Err(ConfigError::InvalidValue { .. })
        ));

        let mismatch = MINIMAL.replace("target.K = (0, 0)", "target.K = (0, 0, 0)");
        assert!(matches!(
            ScenarioConfig::parse(&mismatch),
            Err(ConfigError::DimensionMismatch(_))
        ));

        let unused = format!("{MINIMAL}source.mass = 1\n");
        assert!(matches!(
            ScenarioConfig::parse(&unused),
            Err(ConfigError::UnusedKey { line: 6, .. })
        ));

        let bad_kind = MINIMAL.replace("source.kind = constant-curvature", "source.kind = sphere");
        assert!(matches!(
            ScenarioConfig::parse(&bad_kind),
            Err(ConfigError::InvalidValue { line: 1, .. })
        ));

        let bad_t0 = format!("{MINIMAL}transfer.T0 = (1, 0, 0, 1)\n");
        assert!(matches!(
            ScenarioConfig::parse(&bad_t0),
            Err(ConfigError::InvalidValue { .. })
        ));

        let scalar_only = "source.kind = constant-curvature\nsource.K = 1\ntarget.K = 2\nintegration.tau_max = 1\n";
        assert!(matches!(ScenarioConfig::parse(scalar_only), Err(ConfigError::MissingKey(k)) if k == "scenario.n"));

        let rindler_v0 = "\
source.kind = jacobi-nongeodesic
source.metric = minkowski
source.congruence = rindler
source.x0 = (0, 1, 0, 0)
source.v0 = (1, 0, 0, 0)
target.K = 0
integration.tau_max = 1
";
        assert!(matches!(
            ScenarioConfig::parse(rindler_v0),
            Err(ConfigError::UnusedKey { line: 5, .. })
        ));
    }

    #[test]
    fn echo_round_trips() {
        let text = "\
scenario.name = \"mixed\"
source.kind = jacobi-geodesic
source.metric = schwarzschild
source.mass = 1
source.x0 = (0, 10, 1.5707963267948966, 0)
source.v0 = (1.0, 0, 0, 0)
target.kind = metric-first-order
target.G = (0.1, \"sin(tau)\", 0, 0, 1, 0, 0, 0, \"tau^2\")
integration.h = 0.01
integration.tau_max = 2
transfer.T0 = (1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1)
verify.state.1 = (0, 1, 0, 0, 0, 0)
verify.state.0 = (1, 0, 0, 0, 0, 0.3)
tolerance.mapping = 1e-5
output.dir = \"out/mixed\"
output.formats = csv
";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.verify_states[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.3]);
        let echo = c.to_text();
        let again = ScenarioConfig::parse(&echo).unwrap();
        assert_eq!(c, again);
        assert_eq!(echo, again.to_text());
    }

    #[test]
    fn echo_round_trips_for_congruence_and_diagonal() {
        let text = "\
source.kind = jacobi-nongeodesic
source.metric = schwarzschild
source.mass = 1
source.congruence = schwarzschild-static
source.x0 = (0, 10, 1.5707963267948966, 0)
target.kind = jacobi-geodesic
target.metric = diagonal
target.entries = (\"-1\", \"1\", \"x1^2\", \"x1^2*sin(x2)^2\")
target.x0 = (0, 3, 1, 0)
target.v0 = (1, 0, 0, 0)
integration.tau_max = 1
";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
    }
}
