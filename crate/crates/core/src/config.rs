//! Run configuration in a sectioned `key = value` text format.
//!
//! Each value is a TOML value; unlike TOML, keys such as `atom` and `bump`
//! may repeat within a section and `[measure]` may appear several times (one
//! per time-dependent component).
//!
//! ```text
//! [measure]
//! dim = 1
//! atom = { re = 1.0, im = 0.0, alpha = [-2.0] }
//! atom = { re = -2.0, alpha = [-1.0] }
//!
//! [query]
//! x = [0.2]
//! x0 = [0.0]
//! t = 0.5
//! g = 0.1
//! ```

use num_complex::Complex64;
use std::fmt::Write as _;

use crate::dyson::{Potential, PropagatorQuery, QuadratureSpec};
use crate::error::{Error, Result};
use crate::field::{Bump, TestFunction};
use crate::freeprop::SpacetimePair;
use crate::measure::{Atom, ExponentialMeasure, TimeDependentMeasure, TimeProfile};
use crate::morse::{morse_measure, MorseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySection {
    pub x: Vec<f64>,
    pub x0: Vec<f64>,
    pub t: f64,
    pub t0: f64,
    pub g: Option<Complex64>,
    pub hbar: f64,
    pub mass: f64,
    pub dim: Option<usize>,
}

impl Default for QuerySection {
    fn default() -> Self {
        Self { x: vec![0.0], x0: vec![0.0], t: 1.0, t0: 0.0, g: None, hbar: 1.0, mass: 1.0, dim: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSection {
    pub measure: ExponentialMeasure,
    pub profile: Option<TimeProfile>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub measures: Vec<MeasureSection>,
    pub field: Vec<(usize, Bump)>,
    pub query: QuerySection,
    pub quadrature: QuadratureSpec,
    pub output: OutputSection,
    pub morse: Option<MorseParams>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

struct Entry {
    key: String,
    value: toml::Value,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
            if !matches!(name, "measure" | "field" | "query" | "quadrature" | "output" | "morse") {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            out.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(line, format!("invalid key `{key}`")));
        }
        let table: toml::Table = toml::from_str(&format!("v = {}", value.trim()))
            .map_err(|e| err(line, format!("bad value: {}", e.message())))?;
        let value = table.get("v").cloned().ok_or_else(|| err(line, "missing value"))?;
        let section = out.last_mut().ok_or_else(|| err(line, "entry before any section header"))?;
        section.entries.push(Entry { key: key.to_string(), value, line });
    }
    Ok(out)
}

fn as_f64(v: &toml::Value, line: usize, what: &str) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(err(line, format!("{what} must be a number"))),
    }
}

fn as_usize(v: &toml::Value, line: usize, what: &str) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(err(line, format!("{what} must be a nonnegative integer"))),
    }
}

fn as_vec(v: &toml::Value, line: usize, what: &str) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(a) => a.iter().map(|x| as_f64(x, line, what)).collect(),
        _ => as_f64(v, line, what).map(|x| vec![x]),
    }
}

fn as_complex(v: &toml::Value, line: usize, what: &str) -> Result<Complex64> {
    match v {
        toml::Value::Table(t) => {
            let re = t.get("re").map(|x| as_f64(x, line, what)).transpose()?.unwrap_or(0.0);
            let im = t.get("im").map(|x| as_f64(x, line, what)).transpose()?.unwrap_or(0.0);
            if let Some(k) = t.keys().find(|k| *k != "re" && *k != "im") {
                return Err(err(line, format!("unexpected field `{k}` in {what}")));
            }
            Ok(Complex64::new(re, im))
        }
        _ => as_f64(v, line, what).map(|x| Complex64::new(x, 0.0)),
    }
}

fn table<'a>(v: &'a toml::Value, line: usize, what: &str) -> Result<&'a toml::Table> {
    v.as_table().ok_or_else(|| err(line, format!("{what} must be an inline table")))
}

fn field_f64(t: &toml::Table, key: &str, line: usize, what: &str) -> Result<f64> {
    as_f64(t.get(key).ok_or_else(|| err(line, format!("{what} needs `{key}`")))?, line, &format!("{what}.{key}"))
}

fn parse_profile(v: &toml::Value, line: usize) -> Result<TimeProfile> {
    let t = table(v, line, "profile")?;
    let kind = t.get("kind").and_then(|k| k.as_str()).ok_or_else(|| err(line, "profile needs a string `kind`"))?;
    let p = match kind {
        "constant" => TimeProfile::Constant(field_f64(t, "value", line, "profile")?),
        "polynomial" => TimeProfile::Polynomial(as_vec(
            t.get("coeffs").ok_or_else(|| err(line, "polynomial profile needs `coeffs`"))?,
            line,
            "coeffs",
        )?),
        "gaussian" => TimeProfile::GaussianBump {
            amplitude: field_f64(t, "amplitude", line, "profile")?,
            center: field_f64(t, "center", line, "profile")?,
            width: field_f64(t, "width", line, "profile")?,
        },
        "cosine" => TimeProfile::Cosine {
            amplitude: field_f64(t, "amplitude", line, "profile")?,
            omega: field_f64(t, "omega", line, "profile")?,
            phase: t.get("phase").map(|x| as_f64(x, line, "phase")).transpose()?.unwrap_or(0.0),
        },
        other => return Err(err(line, format!("unknown profile kind `{other}`"))),
    };
    p.validate().map_err(|e| err(line, e.to_string()))?;
    Ok(p)
}

fn unknown(e: &Entry, section: &str) -> Error {
    err(e.line, format!("unknown key `{}` in [{section}]", e.key))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen_query = false;
        for sec in split_sections(text)? {
            match sec.name.as_str() {
                "measure" => {
                    let mut dim = None;
                    let mut atoms = Vec::new();
                    let mut profile = None;
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "dim" => dim = Some(as_usize(&e.value, e.line, "dim")?),
                            "atom" => {
                                let t = table(&e.value, e.line, "atom")?;
                                let re = t.get("re").map(|x| as_f64(x, e.line, "re")).transpose()?.unwrap_or(0.0);
                                let im = t.get("im").map(|x| as_f64(x, e.line, "im")).transpose()?.unwrap_or(0.0);
                                let alpha = as_vec(
                                    t.get("alpha").ok_or_else(|| err(e.line, "atom needs `alpha`"))?,
                                    e.line,
                                    "alpha",
                                )?;
                                atoms.push((Atom::new(Complex64::new(re, im), alpha), e.line));
                            }
                            "profile" => profile = Some(parse_profile(&e.value, e.line)?),
                            _ => return Err(unknown(e, "measure")),
                        }
                    }
                    let dim = dim.ok_or_else(|| err(sec.line, "[measure] needs `dim`"))?;
                    for (a, line) in &atoms {
                        if a.alpha.len() != dim {
                            return Err(err(*line, format!("alpha has length {}, dim is {dim}", a.alpha.len())));
                        }
                    }
                    let measure = ExponentialMeasure::new(dim, atoms.into_iter().map(|(a, _)| a).collect())
                        .map_err(|e| err(sec.line, e.to_string()))?;
                    cfg.measures.push(MeasureSection { measure, profile });
                }
                "field" => {
                    for e in &sec.entries {
                        if e.key != "bump" {
                            return Err(unknown(e, "field"));
                        }
                        let t = table(&e.value, e.line, "bump")?;
                        let component =
                            t.get("component").map(|c| as_usize(c, e.line, "component")).transpose()?.unwrap_or(0);
                        let b = Bump::new(
                            field_f64(t, "c", e.line, "bump")?,
                            field_f64(t, "mu", e.line, "bump")?,
                            field_f64(t, "w", e.line, "bump")?,
                        )
                        .map_err(|x| err(e.line, x.to_string()))?;
                        cfg.field.push((component, b));
                    }
                }
                "query" => {
                    if seen_query {
                        return Err(err(sec.line, "duplicate [query] section"));
                    }
                    seen_query = true;
                    let q = &mut cfg.query;
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "x" => q.x = as_vec(&e.value, e.line, "x")?,
                            "x0" => q.x0 = as_vec(&e.value, e.line, "x0")?,
                            "t" => q.t = as_f64(&e.value, e.line, "t")?,
                            "t0" => q.t0 = as_f64(&e.value, e.line, "t0")?,
                            "g" => q.g = Some(as_complex(&e.value, e.line, "g")?),
                            "hbar" => q.hbar = as_f64(&e.value, e.line, "hbar")?,
                            "mass" => q.mass = as_f64(&e.value, e.line, "mass")?,
                            "dim" => q.dim = Some(as_usize(&e.value, e.line, "dim")?),
                            _ => return Err(unknown(e, "query")),
                        }
                    }
                    if q.x.len() != q.x0.len() {
                        return Err(err(sec.line, "x and x0 must have equal length"));
                    }
                    if let Some(d) = q.dim {
                        if d != q.x.len() {
                            return Err(err(sec.line, format!("dim = {d} but x has length {}", q.x.len())));
                        }
                    }
                }
                "quadrature" => {
                    let qs = &mut cfg.quadrature;
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "points" => qs.points = as_usize(&e.value, e.line, "points")?,
                            "samples" => qs.samples = as_usize(&e.value, e.line, "samples")?,
                            "seed" => qs.seed = as_usize(&e.value, e.line, "seed")? as u64,
                            "switch_order" => qs.switch_order = as_usize(&e.value, e.line, "switch_order")?,
                            "scheme" => {}
                            _ => return Err(unknown(e, "quadrature")),
                        }
                    }
                    qs.validate().map_err(|e| err(sec.line, e.to_string()))?;
                }
                "output" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "format" => {
                                cfg.output.format = match e.value.as_str() {
                                    Some("json") => OutputFormat::Json,
                                    Some("csv") => OutputFormat::Csv,
                                    _ => return Err(err(e.line, "format must be \"json\" or \"csv\"")),
                                }
                            }
                            "path" => {
                                cfg.output.path = Some(
                                    e.value.as_str().ok_or_else(|| err(e.line, "path must be a string"))?.to_string(),
                                )
                            }
                            _ => return Err(unknown(e, "output")),
                        }
                    }
                }
                "morse" => {
                    let mut vals = [None; 3];
                    for e in &sec.entries {
                        let slot = match e.key.as_str() {
                            "g" => 0,
                            "gamma" => 1,
                            "a" => 2,
                            _ => return Err(unknown(e, "morse")),
                        };
                        vals[slot] = Some(as_f64(&e.value, e.line, &e.key)?);
                    }
                    let p = MorseParams::new(vals[0].unwrap_or(1.0), vals[1].unwrap_or(1.0), vals[2].unwrap_or(1.0))
                        .map_err(|e| err(sec.line, e.to_string()))?;
                    cfg.morse = Some(p);
                }
                _ => unreachable!("section names are checked while splitting"),
            }
        }
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.query.x.len()
    }

    /// The potential: the [measure] sections, or the Morse measure when only
    /// [morse] is present.
    pub fn potential(&self) -> Result<Potential> {
        if self.measures.is_empty() {
            return match &self.morse {
                Some(p) => Ok(Potential::Static(morse_measure(p)?)),
                None => Err(Error::InvalidArgument("config has neither [measure] nor [morse]".into())),
            };
        }
        if self.measures.len() == 1 && self.measures[0].profile.is_none() {
            return Ok(Potential::Static(self.measures[0].measure.clone()));
        }
        let comps = self
            .measures
            .iter()
            .map(|m| (m.measure.clone(), m.profile.clone().unwrap_or(TimeProfile::Constant(1.0))))
            .collect();
        Ok(Potential::TimeDependent(TimeDependentMeasure::new(comps)?))
    }

    pub fn theta(&self) -> Result<TestFunction> {
        let mut th = TestFunction::zero(self.dim());
        for (c, b) in &self.field {
            th = th.with_bump(*c, *b)?;
        }
        Ok(th)
    }

    /// Coupling: [query] g, else the Morse g, else 1.
    pub fn coupling(&self) -> Complex64 {
        self.query.g.or(self.morse.map(|m| Complex64::new(m.g, 0.0))).unwrap_or(Complex64::new(1.0, 0.0))
    }

    pub fn pair(&self) -> Result<SpacetimePair> {
        let q = &self.query;
        SpacetimePair::new(q.x.clone(), q.x0.clone(), q.t, q.t0)
    }

    pub fn propagator_query(&self) -> Result<PropagatorQuery> {
        let q = PropagatorQuery {
            pair: self.pair()?,
            g: self.coupling(),
            hbar: self.query.hbar,
            mass: self.query.mass,
            theta: self.theta()?,
            potential: self.potential()?,
        };
        q.validate()?;
        Ok(q)
    }

    /// Serialize back to the text format; `{:?}` keeps every f64 exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let vec = |v: &[f64]| format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "));
        for m in &self.measures {
            let _ = writeln!(s, "[measure]\ndim = {}", m.measure.dim());
            for a in m.measure.atoms() {
                let _ = writeln!(
                    s,
                    "atom = {{ re = {:?}, im = {:?}, alpha = {} }}",
                    a.weight.re,
                    a.weight.im,
                    vec(&a.alpha)
                );
            }
            if let Some(p) = &m.profile {
                let body = match p {
                    TimeProfile::Constant(c) => format!("kind = \"constant\", value = {c:?}"),
                    TimeProfile::Polynomial(c) => format!("kind = \"polynomial\", coeffs = {}", vec(c)),
                    TimeProfile::GaussianBump { amplitude, center, width } => {
                        format!(
                            "kind = \"gaussian\", amplitude = {amplitude:?}, center = {center:?}, width = {width:?}"
                        )
                    }
                    TimeProfile::Cosine { amplitude, omega, phase } => {
                        format!("kind = \"cosine\", amplitude = {amplitude:?}, omega = {omega:?}, phase = {phase:?}")
                    }
                };
                let _ = writeln!(s, "profile = {{ {body} }}");
            }
            s.push('\n');
        }
        if !self.field.is_empty() {
            s.push_str("[field]\n");
            for (c, b) in &self.field {
                let _ = writeln!(s, "bump = {{ component = {c}, c = {:?}, mu = {:?}, w = {:?} }}", b.c, b.mu, b.w);
            }
            s.push('\n');
        }
        let q = &self.query;
        let _ = writeln!(s, "[query]\nx = {}\nx0 = {}\nt = {:?}\nt0 = {:?}", vec(&q.x), vec(&q.x0), q.t, q.t0);
        if let Some(g) = q.g {
            let _ = writeln!(s, "g = {{ re = {:?}, im = {:?} }}", g.re, g.im);
        }
        let _ = writeln!(s, "hbar = {:?}\nmass = {:?}", q.hbar, q.mass);
        if let Some(d) = q.dim {
            let _ = writeln!(s, "dim = {d}");
        }
        let qs = &self.quadrature;
        let _ = writeln!(
            s,
            "\n[quadrature]\npoints = {}\nsamples = {}\nseed = {}\nswitch_order = {}",
            qs.points, qs.samples, qs.seed, qs.switch_order
        );
        let fmt = match self.output.format {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        };
        let _ = writeln!(s, "\n[output]\nformat = \"{fmt}\"");
        if let Some(p) = &self.output.path {
            let _ = writeln!(s, "path = {p:?}");
        }
        if let Some(m) = &self.morse {
            let _ = writeln!(s, "\n[morse]\ng = {:?}\ngamma = {:?}\na = {:?}", m.g, m.gamma, m.a);
        }
        s
    }
}
