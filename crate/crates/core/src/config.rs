//! Run configuration: flat `key = value` lines with dotted section names.
//!
//! ```text
//! dim = 2
//! n = 32
//! horizon = 1.0
//! snapshot_every = 10
//! seed = 0
//! output_dir = "output"
//! params.l1 = 0.1
//! params.l2 = 0.0
//! params.l3 = 0.0
//! params.alpha = 0.0
//! params.poincare = "paper"             # or "spectral_gap", or a number
//! scheme.kind = "semi_implicit"         # "minimizing_movement", "approx_flow"
//! scheme.n = 16                         # approx_flow only
//! scheme.tau = 0.001
//! scheme.inner_tol = 1e-10
//! scheme.max_inner = 500
//! scheme.backtrack_factor = 0.5
//! scheme.max_retries = 40
//! scheme.inner_solver = "newton"        # or "forward_backward"
//! initial.kind = "random_bandlimited"   # "zero", "uniform_uniaxial", "near_boundary"
//! initial.kmax = 2
//! initial.margin_min = 0.1
//! gamma.n_list = [4, 16, 64, 256]
//! scan.margin_min = 1e-6
//! scan.margin_max = 0.1
//! scan.margins = 21
//! scan.configurations = 20
//! scan.window_min = 1e-6
//! scan.window_max = 0.01
//! boxdim.epsilons = [0.001, 0.002]
//! boxdim.betas = [0.5, 0.7, 0.9]
//! ```
//!
//! `uniform_uniaxial` takes `initial.s` and `initial.axis_x`, `initial.axis_y`,
//! `initial.axis_z`; `near_boundary` takes `initial.geometry` (`point`, `line`,
//! `plane`), `initial.profile` (`quadratic`) and `initial.floor`. Keys that do
//! not apply are errors. Everything except `dim`, `n`, `horizon`, `params.l1`,
//! `scheme.kind` and `scheme.tau` has a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

use crate::diagnostics::{BlowupScanSpec, DEFAULT_BETAS};
use crate::elastic::{ElasticParams, PoincareConvention};
use crate::error::{Error, Result};
use crate::flow::{InnerSolver, SchemeConfig, SchemeKind};
use crate::grid::SpectralGrid;
use crate::initial::{Geometry, InitialSpec, MarginProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxdimSpec {
    pub epsilons: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub params: ElasticParams,
    pub scheme: SchemeConfig,
    pub horizon: f64,
    pub snapshot_every: usize,
    pub seed: u64,
    pub initial: InitialSpec,
    pub output_dir: PathBuf,
    pub gamma_n_list: Vec<u32>,
    pub scan: BlowupScanSpec,
    pub boxdim: BoxdimSpec,
}

fn cfg_err<T>(m: impl Into<String>) -> Result<T> {
    Err(Error::Config(m.into()))
}

struct Keys(BTreeMap<String, Value>);

impl Keys {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    fn float(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(Value::Float(v)) => Ok(v),
            Some(Value::Integer(v)) => Ok(v as f64),
            Some(v) => cfg_err(format!("{key}: expected a number, got {v}")),
            None => default.ok_or_else(|| Error::Config(format!("missing key {key}"))),
        }
    }

    fn int(&mut self, key: &str, default: Option<i64>) -> Result<i64> {
        match self.take(key) {
            Some(Value::Integer(v)) => Ok(v),
            Some(v) => cfg_err(format!("{key}: expected an integer, got {v}")),
            None => default.ok_or_else(|| Error::Config(format!("missing key {key}"))),
        }
    }

    fn uint(&mut self, key: &str, default: Option<u64>) -> Result<u64> {
        let v = self.int(key, default.map(|d| d as i64))?;
        u64::try_from(v).map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {v}")))
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        match self.take(key) {
            Some(Value::String(s)) => Ok(s),
            Some(v) => cfg_err(format!("{key}: expected a string, got {v}")),
            None => default.map(str::to_string).ok_or_else(|| Error::Config(format!("missing key {key}"))),
        }
    }

    fn floats(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            Some(Value::Array(a)) => a
                .into_iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(f),
                    Value::Integer(i) => Ok(i as f64),
                    v => cfg_err(format!("{key}: expected numbers, got {v}")),
                })
                .collect(),
            Some(v) => cfg_err(format!("{key}: expected an array, got {v}")),
            None => Ok(default.to_vec()),
        }
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            v => {
                if out.insert(key.clone(), v).is_some() {
                    return cfg_err(format!("duplicate key {key}"));
                }
            }
        }
    }
    Ok(())
}

/// Parse `key=value`; the value is read as a TOML value, or as a bare string if
/// it is not one.
fn parse_override(s: &str) -> Result<(String, Value)> {
    let Some((k, v)) = s.split_once('=') else {
        return cfg_err(format!("override {s:?} is not of the form key=value"));
    };
    let (k, v) = (k.trim(), v.trim());
    let value = match format!("v = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => Value::String(v.to_string()),
    };
    Ok((k.to_string(), value))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides::<&str>(text, &[])
    }

    pub fn parse_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut map = BTreeMap::new();
        flatten("", table, &mut map)?;
        for o in overrides {
            let (k, v) = parse_override(o.as_ref())?;
            map.insert(k, v);
        }
        let cfg = Self::from_keys(Keys(map))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_with_overrides(&text, overrides)
    }

    fn from_keys(mut k: Keys) -> Result<Self> {
        let dim = k.uint("dim", None)? as usize;
        let n = k.uint("n", None)? as usize;
        let horizon = k.float("horizon", None)?;
        let snapshot_every = k.uint("snapshot_every", Some(10))? as usize;
        let seed = k.uint("seed", Some(0))?;
        let output_dir = PathBuf::from(k.string("output_dir", Some("output"))?);

        let l1 = k.float("params.l1", None)?;
        let l2 = k.float("params.l2", Some(0.0))?;
        let l3 = k.float("params.l3", Some(0.0))?;
        let alpha = k.float("params.alpha", Some(0.0))?;
        let poincare_constant = match k.take("params.poincare") {
            None => PoincareConvention::Paper.constant(dim),
            Some(Value::String(s)) if s == "spectral_gap" => PoincareConvention::SpectralGap.constant(dim),
            Some(Value::String(s)) if s == "paper" => PoincareConvention::Paper.constant(dim),
            Some(Value::Float(v)) => v,
            Some(Value::Integer(v)) => v as f64,
            Some(v) => return cfg_err(format!("params.poincare: expected \"spectral_gap\", \"paper\" or a number, got {v}")),
        };
        let params = ElasticParams { l1, l2, l3, alpha, poincare_constant };

        let kind = match k.string("scheme.kind", None)?.as_str() {
            "semi_implicit" => SchemeKind::SemiImplicit,
            "minimizing_movement" => SchemeKind::MinimizingMovement,
            "approx_flow" => SchemeKind::ApproxFlow { n: k.uint("scheme.n", None)? as u32 },
            other => return cfg_err(format!("scheme.kind: unknown scheme {other:?}")),
        };
        let mut scheme = SchemeConfig::new(kind, k.float("scheme.tau", None)?);
        scheme.inner_tol = k.float("scheme.inner_tol", Some(scheme.inner_tol))?;
        scheme.max_inner = k.uint("scheme.max_inner", Some(scheme.max_inner as u64))? as usize;
        scheme.backtrack_factor = k.float("scheme.backtrack_factor", Some(scheme.backtrack_factor))?;
        scheme.max_retries = k.uint("scheme.max_retries", Some(scheme.max_retries as u64))? as usize;
        scheme.inner_solver = match k.string("scheme.inner_solver", Some("newton"))?.as_str() {
            "newton" => InnerSolver::Newton,
            "forward_backward" => InnerSolver::ForwardBackward,
            other => return cfg_err(format!("scheme.inner_solver: unknown solver {other:?}")),
        };

        let initial = match k.string("initial.kind", Some("zero"))?.as_str() {
            "zero" => InitialSpec::Zero,
            "uniform_uniaxial" => InitialSpec::UniformUniaxial {
                s: k.float("initial.s", None)?,
                axis: [
                    k.float("initial.axis_x", Some(0.0))?,
                    k.float("initial.axis_y", Some(0.0))?,
                    k.float("initial.axis_z", Some(1.0))?,
                ],
            },
            "random_bandlimited" => InitialSpec::RandomBandlimited {
                kmax: k.uint("initial.kmax", None)? as usize,
                margin_min: k.float("initial.margin_min", None)?,
            },
            "near_boundary" => InitialSpec::NearBoundary {
                geometry: match k.string("initial.geometry", None)?.as_str() {
                    "point" => Geometry::Point,
                    "line" => Geometry::Line,
                    "plane" => Geometry::Plane,
                    other => return cfg_err(format!("initial.geometry: unknown geometry {other:?}")),
                },
                profile: match k.string("initial.profile", Some("quadratic"))?.as_str() {
                    "quadratic" => MarginProfile::Quadratic,
                    other => return cfg_err(format!("initial.profile: unknown profile {other:?}")),
                },
                floor: k.float("initial.floor", None)?,
            },
            other => return cfg_err(format!("initial.kind: unknown initial data {other:?}")),
        };

        let gamma_n_list = match k.take("gamma.n_list") {
            None => vec![4, 16, 64, 256],
            Some(Value::Array(a)) => a
                .into_iter()
                .map(|v| match v {
                    Value::Integer(i) if i > 0 && i <= u32::MAX as i64 => Ok(i as u32),
                    v => cfg_err(format!("gamma.n_list: expected positive integers, got {v}")),
                })
                .collect::<Result<_>>()?,
            Some(v) => return cfg_err(format!("gamma.n_list: expected an array, got {v}")),
        };

        let d = BlowupScanSpec::default();
        let scan = BlowupScanSpec {
            margin_min: k.float("scan.margin_min", Some(d.margin_min))?,
            margin_max: k.float("scan.margin_max", Some(d.margin_max))?,
            margins: k.uint("scan.margins", Some(d.margins as u64))? as usize,
            configurations: k.uint("scan.configurations", Some(d.configurations as u64))? as usize,
            seed,
            window: (k.float("scan.window_min", Some(d.window.0))?, k.float("scan.window_max", Some(d.window.1))?),
        };
        let boxdim = BoxdimSpec {
            epsilons: k.floats("boxdim.epsilons", &[1e-3])?,
            betas: k.floats("boxdim.betas", &DEFAULT_BETAS)?,
        };

        if let Some(key) = k.0.keys().next() {
            return cfg_err(format!("unknown or inapplicable key {key}"));
        }
        Ok(RunConfig { dim, n, params, scheme, horizon, snapshot_every, seed, initial, output_dir, gamma_n_list, scan, boxdim })
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.dim, self.n).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every check that can fail before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        let grid = self.grid()?;
        self.params.validate().map_err(wrap)?;
        self.scheme.validate(&self.params).map_err(wrap)?;
        self.initial.validate(&grid).map_err(wrap)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return cfg_err(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.snapshot_every == 0 {
            return cfg_err("snapshot_every must be at least 1");
        }
        let s = &self.scan;
        if !(s.margin_min > 0.0 && s.margin_min <= s.margin_max && s.margin_max < 1.0 / 3.0) || s.margins == 0 {
            return cfg_err("scan margins must satisfy 0 < margin_min <= margin_max < 1/3");
        }
        if self.boxdim.epsilons.iter().any(|e| !(*e > 0.0)) {
            return cfg_err("boxdim.epsilons must be positive");
        }
        if self.boxdim.betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return cfg_err("boxdim.betas must lie in (0, 1)");
        }
        Ok(())
    }

    /// The configuration in the canonical key order with every key written out.
    pub fn to_canonical_string(&self) -> String {
        let f = |v: f64| format!("{v:?}");
        let list = |v: &[f64]| format!("[{}]", v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(", "));
        let s = |v: &str| Value::String(v.to_string()).to_string();
        let mut lines = vec![
            format!("dim = {}", self.dim),
            format!("n = {}", self.n),
            format!("horizon = {}", f(self.horizon)),
            format!("snapshot_every = {}", self.snapshot_every),
            format!("seed = {}", self.seed),
            format!("output_dir = {}", s(&self.output_dir.to_string_lossy())),
            format!("params.l1 = {}", f(self.params.l1)),
            format!("params.l2 = {}", f(self.params.l2)),
            format!("params.l3 = {}", f(self.params.l3)),
            format!("params.alpha = {}", f(self.params.alpha)),
            format!("params.poincare = {}", f(self.params.poincare_constant)),
        ];
        let c = &self.scheme;
        match c.kind {
            SchemeKind::SemiImplicit => lines.push(format!("scheme.kind = {}", s("semi_implicit"))),
            SchemeKind::MinimizingMovement => lines.push(format!("scheme.kind = {}", s("minimizing_movement"))),
            SchemeKind::ApproxFlow { n } => {
                lines.push(format!("scheme.kind = {}", s("approx_flow")));
                lines.push(format!("scheme.n = {n}"));
            }
        }
        let solver = match c.inner_solver {
            InnerSolver::Newton => "newton",
            InnerSolver::ForwardBackward => "forward_backward",
        };
        lines.extend([
            format!("scheme.tau = {}", f(c.tau)),
            format!("scheme.inner_tol = {}", f(c.inner_tol)),
            format!("scheme.max_inner = {}", c.max_inner),
            format!("scheme.backtrack_factor = {}", f(c.backtrack_factor)),
            format!("scheme.max_retries = {}", c.max_retries),
            format!("scheme.inner_solver = {}", s(solver)),
        ]);
        match self.initial {
            InitialSpec::Zero => lines.push(format!("initial.kind = {}", s("zero"))),
            InitialSpec::UniformUniaxial { s: order, axis } => lines.extend([
                format!("initial.kind = {}", s("uniform_uniaxial")),
                format!("initial.s = {}", f(order)),
                format!("initial.axis_x = {}", f(axis[0])),
                format!("initial.axis_y = {}", f(axis[1])),
                format!("initial.axis_z = {}", f(axis[2])),
            ]),
            InitialSpec::RandomBandlimited { kmax, margin_min } => lines.extend([
                format!("initial.kind = {}", s("random_bandlimited")),
                format!("initial.kmax = {kmax}"),
                format!("initial.margin_min = {}", f(margin_min)),
            ]),
            InitialSpec::NearBoundary { geometry, profile, floor } => {
                let g = match geometry {
                    Geometry::Point => "point",
                    Geometry::Line => "line",
                    Geometry::Plane => "plane",
                };
                let p = match profile {
                    MarginProfile::Quadratic => "quadratic",
                };
                lines.extend([
                    format!("initial.kind = {}", s("near_boundary")),
                    format!("initial.geometry = {}", s(g)),
                    format!("initial.profile = {}", s(p)),
                    format!("initial.floor = {}", f(floor)),
                ]);
            }
        }
        let ns: Vec<String> = self.gamma_n_list.iter().map(|n| n.to_string()).collect();
        lines.extend([
            format!("gamma.n_list = [{}]", ns.join(", ")),
            format!("scan.margin_min = {}", f(self.scan.margin_min)),
            format!("scan.margin_max = {}", f(self.scan.margin_max)),
            format!("scan.margins = {}", self.scan.margins),
            format!("scan.configurations = {}", self.scan.configurations),
            format!("scan.window_min = {}", f(self.scan.window.0)),
            format!("scan.window_max = {}", f(self.scan.window.1)),
            format!("boxdim.epsilons = {}", list(&self.boxdim.epsilons)),
            format!("boxdim.betas = {}", list(&self.boxdim.betas)),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Hex SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_string().as_bytes()))
    }
}
