//! Run configuration assembled from an optional JSON file and command-line
//! flags, flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adia_core::{
    load_sampled, CorrectionControls, CorrectionMethod, EvolveControls, Interpolation, PotentialSpec, Stepper, C64,
};
use clap::Args;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::config(format!("unknown format '{other}' (csv | json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KScale {
    Linear,
    Log,
}

impl FromStr for KScale {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "linear" | "lin" => Ok(KScale::Linear),
            "log" => Ok(KScale::Log),
            other => Err(CliError::config(format!("unknown k scale '{other}' (linear | log)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KGrid {
    Single(f64),
    Range { min: f64, max: f64, count: usize, scale: KScale },
}

impl KGrid {
    /// Grid values in ascending order.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            KGrid::Single(k) => vec![k],
            KGrid::Range { min, count: 1, .. } => vec![min],
            KGrid::Range { min, max, count, scale } => (0..count)
                .map(|i| {
                    if i + 1 == count {
                        return max;
                    }
                    let s = i as f64 / (count - 1) as f64;
                    match scale {
                        KScale::Linear => min + s * (max - min),
                        KScale::Log => (min.ln() + s * (max.ln() - min.ln())).exp(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Semiclassical,
    OrderN(usize),
}

impl Method {
    pub fn order(&self) -> usize {
        match self {
            Method::Exact | Method::Semiclassical => 0,
            Method::OrderN(n) => *n,
        }
    }
}

fn parse_stepper(s: &str) -> CliResult<Stepper> {
    match s {
        "dopri5" | "rk45" => Ok(Stepper::Dopri5),
        "magnus4" | "magnus" => Ok(Stepper::Magnus4),
        other => Err(CliError::config(format!("unknown stepper '{other}' (dopri5 | magnus4)"))),
    }
}

/// Potential name and its raw `key=value` parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialChoice {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

struct Params<'a> {
    name: &'a str,
    raw: &'a BTreeMap<String, String>,
    used: Vec<&'a str>,
}

impl<'a> Params<'a> {
    fn lookup(&mut self, keys: &[&'a str]) -> Option<(&'a str, &'a str)> {
        for &k in keys {
            if let Some(v) = self.raw.get(k) {
                self.used.push(k);
                return Some((k, v.as_str()));
            }
        }
        None
    }

    fn real(&mut self, keys: &[&'a str], default: Option<f64>) -> CliResult<f64> {
        match self.lookup(keys) {
            Some((k, v)) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("{}: parameter {k}='{v}' is not a real number", self.name))),
            None => default.ok_or_else(|| CliError::config(format!("{}: missing parameter {}", self.name, keys[0]))),
        }
    }

    fn complex(&mut self, keys: &[&'a str]) -> CliResult<C64> {
        let Some((k, v)) = self.lookup(keys) else {
            return Err(CliError::config(format!("{}: missing parameter {}", self.name, keys[0])));
        };
        let t: String = v.chars().filter(|c| !c.is_whitespace()).collect();
        C64::from_str(&t)
            .map_err(|_| CliError::config(format!("{}: parameter {k}='{v}' is not a complex number", self.name)))
    }

    fn text(&mut self, keys: &[&'a str]) -> Option<&'a str> {
        self.lookup(keys).map(|(_, v)| v)
    }

    fn finish(self) -> CliResult<()> {
        for k in self.raw.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(CliError::config(format!("{}: unknown parameter '{k}'", self.name)));
            }
        }
        Ok(())
    }
}

impl PotentialChoice {
    /// Builds the potential; relative sample-file paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> CliResult<PotentialSpec> {
        let mut p = Params { name: &self.name, raw: &self.params, used: vec![] };
        let spec = match self.name.as_str() {
            "free" => PotentialSpec::free(),
            "rectangular" | "barrier" => PotentialSpec::rectangular(p.complex(&["v0"])?, p.real(&["length", "L"], None)?)?,
            "gaussian" => PotentialSpec::gaussian(
                p.complex(&["amplitude", "a"])?,
                p.real(&["center", "x0"], Some(0.0))?,
                p.real(&["width", "sigma"], None)?,
            )?,
            "exp-profile" | "exp-pot" => PotentialSpec::exp_profile(
                p.real(&["epsilon", "eps"], None)?,
                p.real(&["K", "wavenumber"], None)?,
                p.real(&["L", "length"], None)?,
            )?,
            "smooth-rectangular" => PotentialSpec::smooth_rectangular(
                p.complex(&["v0"])?,
                p.real(&["length", "L"], None)?,
                p.real(&["ramp"], None)?,
            )?,
            "sampled" => {
                let file = p
                    .text(&["file"])
                    .ok_or_else(|| CliError::config("sampled: missing parameter file"))?;
                let interp = match p.text(&["interpolation"]) {
                    Some(s) => Interpolation::from_str(s)?,
                    None => Interpolation::default(),
                };
                let path = PathBuf::from(file);
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path,
                };
                load_sampled(&path, interp)?
            }
            other => {
                return Err(CliError::config(format!(
                    "unknown potential '{other}' (free | rectangular | gaussian | exp-profile | smooth-rectangular | sampled)"
                )))
            }
        };
        p.finish()?;
        Ok(spec)
    }
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: PotentialChoice,
    pub k: KGrid,
    pub method: Method,
    pub series: CorrectionMethod,
    pub stepper: Stepper,
    pub tol_ode: f64,
    pub tol_quad: f64,
    /// Rows with `|det M − 1|` above this are flagged.
    pub tol_det: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// Directory of the JSON config, for relative sample paths.
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn build_potential(&self) -> CliResult<PotentialSpec> {
        self.potential.build(self.base_dir.as_deref())
    }

    pub fn evolve_controls(&self) -> EvolveControls {
        EvolveControls {
            rtol: self.tol_ode,
            atol: self.tol_ode * 1e-2,
            stepper: self.stepper,
            ..EvolveControls::default()
        }
    }

    pub fn correction_controls(&self) -> CorrectionControls {
        let mut c = CorrectionControls { method: self.series, ..CorrectionControls::default() };
        c.ode.rtol = self.tol_ode;
        c.ode.atol = self.tol_ode * 1e-4;
        c.quad.rel_tol = self.tol_quad;
        c.quad.abs_tol = self.tol_quad * 1e-4;
        c
    }

    /// Label for the `method` column.
    pub fn method_label(&self) -> String {
        match self.method {
            Method::Exact => "exact".into(),
            Method::Semiclassical => "semiclassical".into(),
            Method::OrderN(_) => format!("order-n/{}", self.series.name()),
        }
    }
}

/// Flags shared by `compute`, `sweep` and `converge`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// free | rectangular | gaussian | exp-profile | smooth-rectangular | sampled
    #[arg(long)]
    pub potential: Option<String>,
    /// Potential parameter, repeatable (e.g. --param v0=0.3+0.1i)
    #[arg(long = "param", value_name = "KEY=VAL")]
    pub params: Vec<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub k_count: Option<usize>,
    /// linear | log
    #[arg(long)]
    pub k_scale: Option<String>,
    /// exact | semiclassical | order-n (with --order)
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Route for the correction terms: volterra | nested | ibp
    #[arg(long)]
    pub series_method: Option<String>,
    /// dopri5 | magnus4
    #[arg(long)]
    pub stepper: Option<String>,
    #[arg(long)]
    pub tol_ode: Option<f64>,
    #[arg(long)]
    pub tol_quad: Option<f64>,
    #[arg(long)]
    pub tol_det: Option<f64>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with the same fields; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    potential: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
    k: Option<f64>,
    k_min: Option<f64>,
    k_max: Option<f64>,
    k_count: Option<usize>,
    k_scale: Option<String>,
    method: Option<String>,
    order: Option<usize>,
    series_method: Option<String>,
    stepper: Option<String>,
    tol_ode: Option<f64>,
    tol_quad: Option<f64>,
    tol_det: Option<f64>,
    format: Option<String>,
    out: Option<PathBuf>,
}

fn value_to_string(key: &str, v: &Value) -> CliResult<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(CliError::config(format!("parameter '{key}' must be a number or a string"))),
    }
}

fn tolerance(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive_k(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be positive, got {v}")))
    }
}

impl ConfigArgs {
    /// Merges the JSON file (if any) with the flags and validates the result.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let (file, base_dir) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
                let f: FileConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
                (f, path.parent().map(Path::to_path_buf))
            }
            None => (FileConfig::default(), None),
        };

        let mut params = BTreeMap::new();
        for (k, v) in &file.params {
            params.insert(k.clone(), value_to_string(k, v)?);
        }
        for kv in &self.params {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| CliError::config(format!("--param expects KEY=VAL, got '{kv}'")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let potential = PotentialChoice {
            name: self.potential.clone().or(file.potential).unwrap_or_else(|| "free".into()),
            params,
        };

        let flag_range = self.k_min.is_some() || self.k_max.is_some() || self.k_count.is_some();
        if self.k.is_some() && flag_range {
            return Err(CliError::config("give either --k or a k range, not both"));
        }
        let file_range = file.k_min.is_some() || file.k_max.is_some() || file.k_count.is_some();
        let single = match (self.k, flag_range, file_range) {
            (Some(k), _, _) => Some(k),
            (None, false, false) => file.k,
            _ => None,
        };
        let grid = if let Some(k) = single {
            KGrid::Single(positive_k("k", k)?)
        } else if flag_range || file_range {
            let min = positive_k(
                "k-min",
                self.k_min.or(file.k_min).ok_or_else(|| CliError::config("k range needs --k-min"))?,
            )?;
            let max = positive_k("k-max", self.k_max.or(file.k_max).unwrap_or(min))?;
            let count = self.k_count.or(file.k_count).unwrap_or(1);
            if count == 0 {
                return Err(CliError::config("k-count must be at least 1"));
            }
            if max < min || (count > 1 && max == min) {
                return Err(CliError::config(format!("k range must satisfy k-min < k-max, got [{min}, {max}]")));
            }
            let scale = match self.k_scale.clone().or(file.k_scale) {
                Some(s) => s.parse()?,
                None => KScale::Linear,
            };
            KGrid::Range { min, max, count, scale }
        } else {
            return Err(CliError::config("no wavenumber given (--k or --k-min/--k-max/--k-count)"));
        };

        let order = self.order.or(file.order);
        let method = match self.method.clone().or(file.method).as_deref() {
            None | Some("exact") => Method::Exact,
            Some("semiclassical") | Some("sc") => Method::Semiclassical,
            Some("order-n") => Method::OrderN(order.ok_or_else(|| CliError::config("method order-n needs --order"))?),
            Some(s) if s.starts_with("order-") => {
                let n = s["order-".len()..]
                    .parse::<usize>()
                    .map_err(|_| CliError::config(format!("unknown method '{s}'")))?;
                Method::OrderN(n)
            }
            Some(s) => return Err(CliError::config(format!("unknown method '{s}' (exact | semiclassical | order-n)"))),
        };
        let series = match self.series_method.clone().or(file.series_method) {
            Some(s) => CorrectionMethod::from_str(&s).map_err(|e| CliError::config(e.to_string()))?,
            None => CorrectionMethod::default(),
        };
        if let (Method::OrderN(n), Some(max)) = (method, series.max_order()) {
            if n > max {
                return Err(CliError::config(format!(
                    "series method {} supports orders up to {max}, got {n}",
                    series.name()
                )));
            }
        }
        let stepper = match self.stepper.clone().or(file.stepper) {
            Some(s) => parse_stepper(&s)?,
            None => Stepper::default(),
        };
        let format = match self.format.clone().or(file.format) {
            Some(s) => s.parse()?,
            None => Format::Csv,
        };
        Ok(RunConfig {
            potential,
            k: grid,
            method,
            series,
            stepper,
            tol_ode: tolerance("tol-ode", self.tol_ode.or(file.tol_ode).unwrap_or(1e-10))?,
            tol_quad: tolerance("tol-quad", self.tol_quad.or(file.tol_quad).unwrap_or(1e-10))?,
            tol_det: tolerance("tol-det", self.tol_det.or(file.tol_det).unwrap_or(1e-9))?,
            format,
            out: self.out.clone().or(file.out),
            base_dir,
        })
    }
}
