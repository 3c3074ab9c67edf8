//! Scenario files.
//!
//! A scenario is a TOML document with the sections `pipe`, `physics`,
//! `numerics`, `initial`, `boundaries` and `outputs`. Parsing does not stop at
//! the first problem: every violation is collected with its `line:column`.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use pfs_core::solver::{anchor_head, build_steady_state, regimes_for_head};
use pfs_core::{
    Anchor, AtildeStrategy, Boundary, CellGeometry, CellState, Hydrograph, PhysicalConstants, PipeGeometry, Regime,
    SimulationConfig,
};
use toml::de::{DeTable, DeValue};
use toml::{Spanned, Table, Value};

const SECTIONS: [&str; 6] = ["pipe", "physics", "numerics", "initial", "boundaries", "outputs"];

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 1-based line and column.
    pub location: Option<(usize, usize)>,
    /// Dotted key path, empty for file-level problems.
    pub key: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ScenarioError {
    pub path: PathBuf,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self.path.display();
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v.location {
                Some((line, col)) => write!(f, "{path}:{line}:{col}: ")?,
                None => write!(f, "{path}: ")?,
            }
            if !v.key.is_empty() {
                write!(f, "{}: ", v.key)?;
            }
            f.write_str(&v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSpec {
    pub length: f64,
    pub cells: usize,
    pub diameter_upstream: f64,
    pub diameter_downstream: f64,
    /// Axis elevation samples `(x, b)`: linear in between, constant outside.
    pub elevation: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Pressurized wherever the still surface would rise above the crown.
    Auto,
    Uniform(Regime),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyAnchor {
    /// Piezometric head (m) at abscissa `x`.
    Piezometric { x: f64, head: f64 },
    /// Total head in metres of water.
    TotalHead(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Steady { anchor: SteadyAnchor, layout: Layout },
    Fields { area: Vec<f64>, discharge: Vec<f64>, regime: Vec<Regime> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub pipe: PipeSpec,
    pub consts: PhysicalConstants,
    /// Run settings; output cadence and profile times included.
    pub config: SimulationConfig,
    pub initial: Initial,
    /// Probe abscissae (m).
    pub probes: Vec<f64>,
}

impl Scenario {
    /// Uniform mesh with diameter and axis elevation interpolated at the cell
    /// centres. `x` is arc length along the axis, so the slope of the
    /// elevation profile is `sin(theta)`.
    pub fn geometry(&self) -> Result<PipeGeometry, String> {
        let p = &self.pipe;
        let dx = p.length / p.cells as f64;
        let cells = (0..p.cells)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                let s = x / p.length;
                let diameter = p.diameter_upstream + s * (p.diameter_downstream - p.diameter_upstream);
                let (b, slope) = elevation_at(&p.elevation, x);
                CellGeometry::new(x, dx, 0.5 * diameter, b, slope)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        PipeGeometry::new(cells).map_err(|e| e.to_string())
    }

    /// Whether the initial condition is a still-water steady state.
    pub fn is_steady(&self) -> bool {
        matches!(self.initial, Initial::Steady { .. })
    }

    pub fn initial_state(&self, pipe: &PipeGeometry) -> Result<Vec<CellState>, String> {
        match &self.initial {
            Initial::Steady { anchor, layout } => {
                let k = &self.consts;
                let head = match *anchor {
                    SteadyAnchor::TotalHead(h) => k.gravity * h,
                    SteadyAnchor::Piezometric { x, head } => {
                        let cell = pipe.locate(x);
                        let layout = vec![Regime::FreeSurface; pipe.len()];
                        anchor_head(pipe, &layout, Anchor::Piezometric { cell, head }, k).map_err(|e| e.to_string())?
                    }
                };
                let regimes = match layout {
                    Layout::Auto => regimes_for_head(pipe, head, k),
                    Layout::Uniform(r) => vec![*r; pipe.len()],
                };
                build_steady_state(pipe, &regimes, Anchor::TotalHead(head), k).map_err(|e| e.to_string())
            }
            Initial::Fields { area, discharge, regime } => Ok(area
                .iter()
                .zip(discharge)
                .zip(regime)
                .map(|((&a, &q), &e)| CellState::new(a, q, e))
                .collect()),
        }
    }
}

/// Elevation and slope of a piecewise-linear profile at `x`.
fn elevation_at(samples: &[(f64, f64)], x: f64) -> (f64, f64) {
    let k = samples.partition_point(|&(s, _)| s <= x);
    if k == 0 {
        return (samples[0].1, 0.0);
    }
    if k == samples.len() {
        return (samples[k - 1].1, 0.0);
    }
    let (x0, b0) = samples[k - 1];
    let (x1, b1) = samples[k];
    let slope = (b1 - b0) / (x1 - x0);
    (b0 + slope * (x - x0), slope)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let fail = |message: String| ScenarioError {
        path: path.to_path_buf(),
        violations: vec![Violation { location: None, key: String::new(), message }],
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("cannot read scenario: {e}")))?;
    let name = path.file_stem().map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned());
    parse_str(&text, &name).map_err(|violations| ScenarioError { path: path.to_path_buf(), violations })
}

/// Parses scenario text, returning every violation found.
pub fn parse_str(text: &str, name: &str) -> Result<Scenario, Vec<Violation>> {
    let root: Table = match toml::from_str(text) {
        Ok(t) => t,
        Err(e) => {
            let location = e.span().map(|s| line_col(text, s.start));
            return Err(vec![Violation { location, key: String::new(), message: e.message().trim().to_string() }]);
        }
    };
    let spans = DeTable::parse(text).ok();
    let mut r = Reader { text, spans, root, errors: Vec::new() };
    for key in r.root.keys().filter(|k| !SECTIONS.contains(&k.as_str())).cloned().collect::<Vec<_>>() {
        r.fail(&[Seg::Key(&key)], format!("unknown section; expected one of {}", SECTIONS.join(", ")));
    }
    for section in SECTIONS {
        match r.root.get(section) {
            None => r.fail(&[], format!("missing section [{section}]")),
            Some(Value::Table(_)) => {}
            Some(v) => r.fail(&[Seg::Key(section)], format!("expected a table, found {}", v.type_str())),
        }
    }
    let pipe = r.pipe();
    let physics = r.physics();
    let numerics = r.numerics();
    let initial = r.initial(pipe.as_ref().map(|p| p.cells));
    let upstream = r.boundary("upstream");
    let downstream = r.boundary("downstream");
    // bounds for the outputs even when a sibling key of pipe or numerics is bad
    let length = r.peek(&[Seg::Key("pipe"), Seg::Key("length")]).filter(|&l| l > 0.0);
    let t_end = r.peek(&[Seg::Key("numerics"), Seg::Key("t_end")]).filter(|&t| t >= 0.0);
    let outputs = r.outputs(length, t_end);
    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    let (Some(pipe), Some((consts, friction)), Some((cfl, strategy, t_end)), Some(initial), Some(up), Some(down), Some(out)) =
        (pipe, physics, numerics, initial, upstream, downstream, outputs)
    else {
        unreachable!("every missing piece records a violation");
    };
    let config = SimulationConfig {
        cfl,
        t_end,
        strategy,
        friction,
        upstream: up,
        downstream: down,
        output_interval: out.interval,
        snapshot_times: out.profiles,
    };
    Ok(Scenario { name: name.to_string(), pipe, consts, config, initial, probes: out.probes })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[derive(Debug, Clone, Copy)]
enum Seg<'k> {
    Key(&'k str),
    Index(usize),
}

fn dotted(path: &[Seg]) -> String {
    let mut s = String::new();
    for seg in path {
        match seg {
            Seg::Key(k) => {
                if !s.is_empty() {
                    s.push('.');
                }
                s.push_str(k);
            }
            Seg::Index(i) => {
                let _ = write!(s, "[{i}]");
            }
        }
    }
    s
}

struct Outputs {
    probes: Vec<f64>,
    interval: Option<f64>,
    profiles: Vec<f64>,
}

struct Reader<'a> {
    text: &'a str,
    spans: Option<Spanned<DeTable<'a>>>,
    root: Table,
    errors: Vec<Violation>,
}

impl Reader<'_> {
    /// Location of the deepest existing prefix of `path`.
    fn locate(&self, path: &[Seg]) -> Option<(usize, usize)> {
        let root = self.spans.as_ref()?;
        let mut span = root.span();
        let mut table = Some(root.get_ref());
        let mut array: Option<&[Spanned<DeValue>]> = None;
        for seg in path {
            let next = match (seg, table, array) {
                (Seg::Key(k), Some(t), _) => t.iter().find(|(key, _)| key.get_ref().as_ref() == *k).map(|(_, v)| v),
                (Seg::Index(i), _, Some(a)) => a.get(*i),
                _ => None,
            };
            let Some(next) = next else { break };
            span = next.span();
            table = next.get_ref().as_table();
            array = next.get_ref().as_array().map(|a| &a[..]);
        }
        Some(line_col(self.text, span.start))
    }

    fn fail(&mut self, path: &[Seg], message: impl Into<String>) {
        let location = self.locate(path);
        self.errors.push(Violation { location, key: dotted(path), message: message.into() });
    }

    fn value(&self, path: &[Seg]) -> Option<Value> {
        let mut v: Option<&Value> = None;
        for seg in path {
            v = match (seg, v) {
                (Seg::Key(k), None) => self.root.get(*k),
                (Seg::Key(k), Some(Value::Table(t))) => t.get(*k),
                (Seg::Index(i), Some(Value::Array(a))) => a.get(*i),
                _ => None,
            };
            v?;
        }
        v.cloned()
    }

    fn section_present(&self, section: &str) -> bool {
        matches!(self.root.get(section), Some(Value::Table(_)))
    }

    fn reject_unknown(&mut self, path: &[Seg], allowed: &[&str]) {
        let Some(Value::Table(t)) = self.value(path) else { return };
        for key in t.keys().filter(|k| !allowed.contains(&k.as_str())) {
            let mut p = path.to_vec();
            p.push(Seg::Key(key));
            self.fail(&p, format!("unknown key; expected one of {}", allowed.join(", ")));
        }
    }

    fn as_number(&mut self, path: &[Seg], v: &Value) -> Option<f64> {
        let x = match v {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            other => {
                self.fail(path, format!("expected a number, found {}", other.type_str()));
                return None;
            }
        };
        if !x.is_finite() {
            self.fail(path, format!("expected a finite number, found {x}"));
            return None;
        }
        Some(x)
    }

    /// A finite number at `path`, without recording anything.
    fn peek(&self, path: &[Seg]) -> Option<f64> {
        match self.value(path)? {
            Value::Float(f) => Some(f).filter(|f| f.is_finite()),
            Value::Integer(i) => Some(i as f64),
            _ => None,
        }
    }

    fn number(&mut self, path: &[Seg]) -> Option<f64> {
        let v = self.value(path)?;
        self.as_number(path, &v)
    }

    fn required_number(&mut self, path: &[Seg]) -> Option<f64> {
        if self.value(path).is_none() {
            self.fail(path, "missing required key");
            return None;
        }
        self.number(path)
    }

    fn check(&mut self, path: &[Seg], x: Option<f64>, ok: impl Fn(f64) -> bool, expected: &str) -> Option<f64> {
        let x = x?;
        if ok(x) {
            Some(x)
        } else {
            self.fail(path, format!("must be {expected}, got {x}"));
            None
        }
    }

    fn string(&mut self, path: &[Seg]) -> Option<String> {
        match self.value(path)? {
            Value::String(s) => Some(s),
            other => {
                self.fail(path, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn boolean(&mut self, path: &[Seg]) -> Option<bool> {
        match self.value(path)? {
            Value::Boolean(b) => Some(b),
            other => {
                self.fail(path, format!("expected a boolean, found {}", other.type_str()));
                None
            }
        }
    }

    /// Array of numbers; `None` if absent or any element is bad.
    fn numbers(&mut self, path: &[Seg]) -> Option<Vec<f64>> {
        let v = self.value(path)?;
        let Value::Array(items) = v else {
            self.fail(path, format!("expected an array of numbers, found {}", v.type_str()));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let mut p = path.to_vec();
            p.push(Seg::Index(i));
            match self.as_number(&p, item) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    /// Two-column table `[[t, v], ...]` with strictly increasing first column.
    fn pairs(&mut self, path: &[Seg], what: &str) -> Option<Vec<(f64, f64)>> {
        let v = self.value(path)?;
        let Value::Array(rows) = v else {
            self.fail(path, format!("expected a table [[{what}, value], ...], found {}", v.type_str()));
            return None;
        };
        if rows.is_empty() {
            self.fail(path, "table needs at least one row");
            return None;
        }
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let mut p = path.to_vec();
            p.push(Seg::Index(i));
            let pair = match row {
                Value::Array(cols) if cols.len() == 2 => {
                    let mut c0 = p.clone();
                    c0.push(Seg::Index(0));
                    let mut c1 = p.clone();
                    c1.push(Seg::Index(1));
                    let a = self.as_number(&c0, &cols[0]);
                    let b = self.as_number(&c1, &cols[1]);
                    a.zip(b)
                }
                _ => {
                    self.fail(&p, format!("expected a row [{what}, value]"));
                    None
                }
            };
            match pair {
                Some((a, b)) => {
                    if let Some(&(prev, _)) = out.last() {
                        if !(a > prev) {
                            self.fail(&p, format!("{what} values must increase strictly ({a} after {prev})"));
                            ok = false;
                        }
                    }
                    out.push((a, b));
                }
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    /// A number or an array of `n` numbers, expanded to `n` values.
    fn field(&mut self, path: &[Seg], n: Option<usize>) -> Option<Vec<f64>> {
        match self.value(path)? {
            Value::Array(_) => {
                let values = self.numbers(path)?;
                match n {
                    Some(n) if values.len() != n => {
                        self.fail(path, format!("has {} values for {n} cells", values.len()));
                        None
                    }
                    _ => Some(values),
                }
            }
            _ => {
                let x = self.number(path)?;
                Some(vec![x; n.unwrap_or(1)])
            }
        }
    }

    fn pipe(&mut self) -> Option<PipeSpec> {
        if !self.section_present("pipe") {
            return None;
        }
        let at = |k| [Seg::Key("pipe"), Seg::Key(k)];
        self.reject_unknown(
            &[Seg::Key("pipe")],
            &["length", "cells", "diameter_upstream", "diameter_downstream", "elevation"],
        );
        let x = self.required_number(&at("length"));
        let length = self.check(&at("length"), x, |x| x > 0.0, "positive");
        let cells = match self.value(&at("cells")) {
            None => {
                self.fail(&at("cells"), "missing required key");
                None
            }
            Some(Value::Integer(n)) if n >= 3 => Some(n as usize),
            Some(Value::Integer(n)) => {
                self.fail(&at("cells"), format!("must be at least 3, got {n}"));
                None
            }
            Some(other) => {
                self.fail(&at("cells"), format!("expected an integer, found {}", other.type_str()));
                None
            }
        };
        let x = self.required_number(&at("diameter_upstream"));
        let d_up = self.check(&at("diameter_upstream"), x, |x| x > 0.0, "positive");
        let x = self.required_number(&at("diameter_downstream"));
        let d_down = self.check(&at("diameter_downstream"), x, |x| x > 0.0, "positive");
        let elevation = match self.value(&at("elevation")) {
            None => Some(vec![(0.0, 0.0)]),
            Some(Value::Array(_)) => {
                let samples = self.pairs(&at("elevation"), "x")?;
                for (i, w) in samples.windows(2).enumerate() {
                    let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    if !(slope.abs() < 1.0) {
                        let p = [Seg::Key("pipe"), Seg::Key("elevation"), Seg::Index(i + 1)];
                        self.fail(&p, format!("axis slope {slope} is not below 1 in magnitude"));
                        return None;
                    }
                }
                Some(samples)
            }
            Some(_) => self.number(&at("elevation")).map(|b| vec![(0.0, b)]),
        };
        Some(PipeSpec {
            length: length?,
            cells: cells?,
            diameter_upstream: d_up?,
            diameter_downstream: d_down?,
            elevation: elevation?,
        })
    }

    fn physics(&mut self) -> Option<(PhysicalConstants, bool)> {
        if !self.section_present("physics") {
            return None;
        }
        let at = |k| [Seg::Key("physics"), Seg::Key(k)];
        self.reject_unknown(
            &[Seg::Key("physics")],
            &["gravity", "sonic_speed", "beta", "rho0", "manning", "friction"],
        );
        let g = self.number(&at("gravity")).or(Some(9.81));
        let gravity = self.check(&at("gravity"), g, |x| x > 0.0, "positive");
        let positive = |r: &mut Self, k| {
            let x = r.number(&at(k));
            r.check(&at(k), x, |x| x > 0.0, "positive")
        };
        let has = |r: &Self, k| r.value(&at(k)).is_some();
        let sonic = match (has(self, "sonic_speed"), has(self, "beta"), has(self, "rho0")) {
            (true, false, false) => positive(self, "sonic_speed"),
            (false, true, true) => {
                let beta = positive(self, "beta");
                let rho0 = positive(self, "rho0");
                beta.zip(rho0).map(|(b, r)| 1.0 / (b * r).sqrt())
            }
            (true, _, _) => {
                self.fail(&at("sonic_speed"), "give either sonic_speed or beta and rho0, not both");
                None
            }
            _ => {
                self.fail(&[Seg::Key("physics")], "needs sonic_speed, or both beta and rho0");
                None
            }
        };
        let manning = if has(self, "manning") { positive(self, "manning").map(Some) } else { Some(None) };
        let friction = match self.boolean(&at("friction")) {
            Some(true) if manning == Some(None) => {
                self.fail(&at("friction"), "friction needs a manning coefficient");
                None
            }
            Some(f) => Some(f),
            None if self.value(&at("friction")).is_some() => None,
            None => manning.map(|m| m.is_some()),
        };
        let strickler = manning?.map_or(PhysicalConstants::default().strickler, |m| 1.0 / m);
        Some((PhysicalConstants::new(gravity?, sonic?, strickler), friction?))
    }

    fn numerics(&mut self) -> Option<(f64, AtildeStrategy, f64)> {
        if !self.section_present("numerics") {
            return None;
        }
        let at = |k| [Seg::Key("numerics"), Seg::Key(k)];
        self.reject_unknown(&[Seg::Key("numerics")], &["cfl", "strategy", "t_end"]);
        let x = self.number(&at("cfl")).or(Some(SimulationConfig::default().cfl));
        let cfl = self.check(&at("cfl"), x, |x| x > 0.0 && x < 1.0, "in (0, 1)");
        let strategy = match self.string(&at("strategy")).as_deref() {
            None if self.value(&at("strategy")).is_some() => None,
            None => Some(AtildeStrategy::Classical),
            Some(s) => match parse_strategy(s) {
                Some(st) => Some(st),
                None => {
                    self.fail(&at("strategy"), format!("expected \"classical\" or \"exact\", got {s:?}"));
                    None
                }
            },
        };
        let x = self.required_number(&at("t_end"));
        let t_end = self.check(&at("t_end"), x, |x| x >= 0.0, "non-negative");
        Some((cfl?, strategy?, t_end?))
    }

    fn initial(&mut self, cells: Option<usize>) -> Option<Initial> {
        if !self.section_present("initial") {
            return None;
        }
        let at = |k| [Seg::Key("initial"), Seg::Key(k)];
        let kind = self.string(&at("kind"));
        match kind.as_deref() {
            Some("steady") => {
                self.reject_unknown(&[Seg::Key("initial")], &["kind", "head", "at", "total_head", "layout"]);
                let has_head = self.value(&at("head")).is_some();
                let has_total = self.value(&at("total_head")).is_some();
                let anchor = match (has_head, has_total) {
                    (true, false) => {
                        let head = self.number(&at("head"));
                        let x = self.number(&at("at")).or(Some(0.0));
                        let x = self.check(&at("at"), x, |x| x >= 0.0, "non-negative");
                        head.zip(x).map(|(head, x)| SteadyAnchor::Piezometric { x, head })
                    }
                    (false, true) => {
                        if self.value(&at("at")).is_some() {
                            self.fail(&at("at"), "only meaningful with a piezometric head");
                        }
                        self.number(&at("total_head")).map(SteadyAnchor::TotalHead)
                    }
                    _ => {
                        self.fail(&at("kind"), "a steady state needs exactly one of head or total_head");
                        None
                    }
                };
                let layout = match self.string(&at("layout")).as_deref() {
                    None if self.value(&at("layout")).is_some() => None,
                    None | Some("auto") => Some(Layout::Auto),
                    Some("free_surface") => Some(Layout::Uniform(Regime::FreeSurface)),
                    Some("pressurized") => Some(Layout::Uniform(Regime::Pressurized)),
                    Some(s) => {
                        self.fail(&at("layout"), format!("expected \"auto\", \"free_surface\" or \"pressurized\", got {s:?}"));
                        None
                    }
                };
                Some(Initial::Steady { anchor: anchor?, layout: layout? })
            }
            Some("fields") => {
                self.reject_unknown(&[Seg::Key("initial")], &["kind", "area", "discharge", "E"]);
                for k in ["area", "discharge"] {
                    if self.value(&at(k)).is_none() {
                        self.fail(&at(k), "missing required key");
                    }
                }
                let area = self.field(&at("area"), cells);
                if let Some(i) = area.as_ref().and_then(|a| a.iter().position(|&a| !(a > 0.0))) {
                    self.fail(&at("area"), format!("wet area must be positive (cell {i})"));
                }
                let discharge = self.field(&at("discharge"), cells);
                let regime = match self.value(&at("E")) {
                    None => Some(vec![Regime::FreeSurface; cells.unwrap_or(1)]),
                    Some(_) => {
                        let e = self.field(&at("E"), cells)?;
                        match e.iter().position(|&e| e != 0.0 && e != 1.0) {
                            Some(i) => {
                                self.fail(&at("E"), format!("E must be 0 or 1 (cell {i})"));
                                None
                            }
                            None => Some(e.iter().map(|&e| if e == 1.0 { Regime::Pressurized } else { Regime::FreeSurface }).collect()),
                        }
                    }
                };
                Some(Initial::Fields { area: area?, discharge: discharge?, regime: regime? })
            }
            Some(other) => {
                self.fail(&at("kind"), format!("expected \"steady\" or \"fields\", got {other:?}"));
                None
            }
            None => {
                if self.value(&at("kind")).is_none() {
                    self.fail(&at("kind"), "missing required key");
                }
                None
            }
        }
    }

    fn boundary(&mut self, end: &'static str) -> Option<Boundary> {
        if !self.section_present("boundaries") {
            return None;
        }
        if end == "upstream" {
            self.reject_unknown(&[Seg::Key("boundaries")], &["upstream", "downstream"]);
        }
        let path = [Seg::Key("boundaries"), Seg::Key(end)];
        match self.value(&path) {
            None => Some(Boundary::closed()),
            Some(Value::String(s)) if s == "closed" => Some(Boundary::closed()),
            Some(Value::Table(t)) => {
                self.reject_unknown(&path, &["head", "discharge"]);
                let kind = match (t.contains_key("head"), t.contains_key("discharge")) {
                    (true, false) => "head",
                    (false, true) => "discharge",
                    _ => {
                        self.fail(&path, "needs exactly one of head or discharge");
                        return None;
                    }
                };
                let p = [Seg::Key("boundaries"), Seg::Key(end), Seg::Key(kind)];
                let samples = match self.value(&p) {
                    Some(Value::Array(_)) => self.pairs(&p, "t")?,
                    _ => vec![(0.0, self.number(&p)?)],
                };
                let hydrograph = Hydrograph::new(samples).ok()?;
                Some(if kind == "head" { Boundary::Head(hydrograph) } else { Boundary::Discharge(hydrograph) })
            }
            Some(other) => {
                self.fail(&path, format!("expected \"closed\" or a table, found {}", other.type_str()));
                None
            }
        }
    }

    fn outputs(&mut self, length: Option<f64>, t_end: Option<f64>) -> Option<Outputs> {
        if !self.section_present("outputs") {
            return None;
        }
        let at = |k| [Seg::Key("outputs"), Seg::Key(k)];
        self.reject_unknown(&[Seg::Key("outputs")], &["probes", "interval", "profiles"]);
        let probes = match self.value(&at("probes")) {
            None => Some(Vec::new()),
            Some(_) => self.numbers(&at("probes")),
        };
        if let (Some(probes), Some(length)) = (&probes, length) {
            for (i, &x) in probes.iter().enumerate() {
                if !(0.0..=length).contains(&x) {
                    self.fail(&[Seg::Key("outputs"), Seg::Key("probes"), Seg::Index(i)], format!("probe {x} outside [0, {length}]"));
                }
            }
        }
        let x = self.number(&at("interval"));
        let interval = self.check(&at("interval"), x, |x| x > 0.0, "positive");
        if self.value(&at("interval")).is_none() && probes.as_ref().is_some_and(|p| !p.is_empty()) {
            self.fail(&at("interval"), "probes need an output interval");
        }
        let profiles = match self.value(&at("profiles")) {
            None => Some(Vec::new()),
            Some(_) => self.numbers(&at("profiles")),
        };
        if let (Some(times), Some(t_end)) = (&profiles, t_end) {
            for (i, &t) in times.iter().enumerate() {
                if !(0.0..=t_end).contains(&t) {
                    self.fail(&[Seg::Key("outputs"), Seg::Key("profiles"), Seg::Index(i)], format!("time {t} outside [0, {t_end}]"));
                }
            }
        }
        if self.value(&at("interval")).is_some() && interval.is_none() {
            return None;
        }
        Some(Outputs { probes: probes?, interval, profiles: profiles? })
    }
}

pub fn parse_strategy(s: &str) -> Option<AtildeStrategy> {
    match s {
        "classical" => Some(AtildeStrategy::Classical),
        "exact" => Some(AtildeStrategy::exact()),
        _ => None,
    }
}
