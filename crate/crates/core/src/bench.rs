//! System and gain files, the benchmark runner and report rendering.
//!
//! A system file is one JSON object:
//!
//! ```json
//! {
//!   "name": "ex1", "n": 2, "m": 1, "m1": 1, "r": 1,
//!   "A": [-1, 0, 0, -2], "B": [1, 0], "B1": [0, 1], "C": [1, 1], "D": [0],
//!   "alpha0": 0.3, "eps": 1e-5
//! }
//! ```
//!
//! Matrices are row-major. Entries are numbers, or one of the strings
//! `"NaN"`, `"inf"`, `"-inf"` (which are then rejected as non-finite).
//! `alpha0` and `eps` are optional per-system overrides.

use std::fmt::Write as _;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Gain, Plant};
use crate::optimizer::{evaluate_f, lqr_initial_gain, synthesize, SynthesisConfig};
use crate::par::Execution;

mod entries {
    use serde::de::{self, Deserializer, SeqAccess, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use std::fmt;

    fn from_text(s: &str) -> Option<f64> {
        match s.to_ascii_lowercase().as_str() {
            "nan" => Some(f64::NAN),
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            _ => None,
        }
    }

    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            if x.is_finite() {
                seq.serialize_element(&x)?;
            } else if x.is_nan() {
                seq.serialize_element("NaN")?;
            } else if x > 0.0 {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element("-inf")?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Vec<f64>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of numbers")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(e) = seq.next_element::<Entry>()? {
                    out.push(match e {
                        Entry::Num(x) => x,
                        Entry::Text(t) => from_text(&t).ok_or_else(|| {
                            de::Error::custom(format!("invalid matrix entry {t:?}"))
                        })?,
                    });
                }
                Ok(out)
            }
        }
        d.deserialize_seq(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub m1: usize,
    pub r: usize,
    #[serde(rename = "A", with = "entries")]
    pub a: Vec<f64>,
    #[serde(rename = "B", with = "entries")]
    pub b: Vec<f64>,
    #[serde(rename = "B1", with = "entries")]
    pub b1: Vec<f64>,
    #[serde(rename = "C", with = "entries")]
    pub c: Vec<f64>,
    #[serde(rename = "D", with = "entries")]
    pub d: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub alpha0: Option<f64>,
    pub eps: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &SynthesisConfig) -> SynthesisConfig {
        let mut out = cfg.clone();
        if let Some(a) = self.alpha0 {
            out.alpha0 = a;
        }
        if let Some(e) = self.eps {
            out.eps = e;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: String,
    pub plant: Plant,
    pub overrides: Overrides,
}

fn reshape(name: &str, data: &[f64], rows: usize, cols: usize, dims: &str) -> Result<Array2<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{name} has {} entries, expected {dims} = {rows}x{cols} = {}",
            data.len(),
            rows * cols
        )));
    }
    Ok(Array2::from_shape_vec((rows, cols), data.to_vec()).expect("length checked"))
}

fn row_major(m: &Array2<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

impl SystemFile {
    pub fn from_plant(name: &str, plant: &Plant, overrides: Overrides) -> Self {
        SystemFile {
            name: name.to_string(),
            n: plant.n(),
            m: plant.m(),
            m1: plant.m1(),
            r: plant.r(),
            a: row_major(plant.a()),
            b: row_major(plant.b()),
            b1: row_major(plant.b1()),
            c: row_major(plant.c()),
            d: row_major(plant.d()),
            alpha0: overrides.alpha0,
            eps: overrides.eps,
        }
    }

    pub fn to_plant(&self) -> Result<Plant> {
        let (n, m, m1, r) = (self.n, self.m, self.m1, self.r);
        Plant::new(
            reshape("A", &self.a, n, n, "n*n")?,
            reshape("B", &self.b, n, m, "n*m")?,
            reshape("B1", &self.b1, n, m1, "n*m1")?,
            reshape("C", &self.c, r, n, "r*n")?,
            reshape("D", &self.d, r, m, "r*m")?,
        )
    }

    pub fn overrides(&self) -> Overrides {
        Overrides {
            alpha0: self.alpha0,
            eps: self.eps,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub fn parse_system(path: &Path, text: &str) -> Result<LoadedSystem> {
    let file: SystemFile = parse_json(path, text)?;
    Ok(LoadedSystem {
        plant: file.to_plant()?,
        overrides: file.overrides(),
        name: file.name,
    })
}

pub fn load_system(path: &Path) -> Result<LoadedSystem> {
    parse_system(path, &read(path)?)
}

/// Serializes with shortest round-trip decimal representation, so loading
/// the file back reproduces every entry bit-exactly.
pub fn system_to_json(name: &str, plant: &Plant, overrides: Overrides) -> String {
    serde_json::to_string_pretty(&SystemFile::from_plant(name, plant, overrides))
        .expect("plain data")
}

pub fn write_system(path: &Path, name: &str, plant: &Plant, overrides: Overrides) -> Result<()> {
    write(path, &system_to_json(name, plant, overrides))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K", with = "entries")]
    pub k: Vec<f64>,
}

pub fn gain_to_json(gain: &Gain) -> String {
    let k = gain.matrix();
    let file = GainFile {
        m: k.nrows(),
        n: k.ncols(),
        k: row_major(k),
    };
    serde_json::to_string_pretty(&file).expect("plain data")
}

pub fn load_gain(path: &Path) -> Result<Gain> {
    let file: GainFile = parse_json(path, &read(path)?)?;
    Gain::new(reshape("K", &file.k, file.m, file.n, "m*n")?)
}

pub fn write_gain(path: &Path, gain: &Gain) -> Result<()> {
    write(path, &gain_to_json(gain))
}

/// One line of the benchmark report. `gamma_star` is `None` when no
/// solution was obtained; `termination` then holds the error category.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub system: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub gamma0: Option<f64>,
    pub gamma_star: Option<f64>,
    pub time_seconds: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub termination: String,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.gamma_star.is_none()
    }

    fn failure(
        system: String,
        n: Option<usize>,
        m: Option<usize>,
        gamma0: Option<f64>,
        reason: &str,
    ) -> Self {
        ReportRow {
            system,
            n,
            m,
            gamma0,
            gamma_star: None,
            time_seconds: None,
            improvement_pct: None,
            termination: reason.to_string(),
        }
    }
}

pub fn improvement_pct(gamma0: f64, gamma_star: f64) -> f64 {
    (gamma0 - gamma_star) / gamma0 * 100.0
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run_one(path: &Path, cfg: &SynthesisConfig) -> ReportRow {
    let sys = match load_system(path) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{}: {e}", path.display());
            return ReportRow::failure(stem(path), None, None, None, e.category());
        }
    };
    let (n, m) = (Some(sys.plant.n()), Some(sys.plant.m()));
    let cfg = sys.overrides.apply(cfg);
    let prepared = lqr_initial_gain(&sys.plant)
        .and_then(|k0| evaluate_f(&sys.plant, &k0, cfg.tol_bis).map(|f| (k0, f.sqrt())));
    let (k0, gamma0) = match prepared {
        Ok(v) => v,
        Err(e) => {
            log::warn!("{}: initialization failed: {e}", sys.name);
            return ReportRow::failure(sys.name, n, m, None, e.category());
        }
    };
    let started = Instant::now();
    let result = synthesize(&sys.plant, &k0, &cfg);
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok(res) => {
            log::info!(
                "{}: gamma0 = {gamma0:.6}, gamma* = {:.6}, {} iterations, {}",
                sys.name,
                res.gamma_star,
                res.trace.len() - 1,
                res.termination.as_str()
            );
            ReportRow {
                system: sys.name,
                n,
                m,
                gamma0: Some(gamma0),
                gamma_star: Some(res.gamma_star),
                time_seconds: Some(elapsed),
                improvement_pct: Some(improvement_pct(gamma0, res.gamma_star)),
                termination: res.termination.as_str().to_string(),
            }
        }
        Err(e) => {
            log::warn!("{}: synthesis failed: {e}", sys.name);
            ReportRow::failure(sys.name, n, m, Some(gamma0), e.category())
        }
    }
}

/// Runs every system independently. Rows come back in input order; an error
/// or panic in one system yields a failed row for it and nothing else.
pub fn run_benchmark(paths: &[PathBuf], cfg: &SynthesisConfig, exec: Execution) -> Vec<ReportRow> {
    exec.map(paths, |path| {
        panic::catch_unwind(AssertUnwindSafe(|| run_one(path, cfg))).unwrap_or_else(|_| {
            log::error!("{}: panicked", path.display());
            ReportRow::failure(stem(path), None, None, None, "panic")
        })
    })
}

/// System files (`*.json`) in `dir`, sorted by file name.
pub fn list_systems(dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |source| Error::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

pub const CSV_HEADER: [&str; 8] = [
    "system",
    "n",
    "m",
    "gamma0",
    "gamma_star",
    "time_seconds",
    "improvement_pct",
    "termination",
];

const MISSING: &str = "x";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| x.to_string())
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| format!("{x:.digits$}"))
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for r in rows {
                w.write_record([
                    r.system.clone(),
                    opt(r.n),
                    opt(r.m),
                    opt(r.gamma0),
                    opt(r.gamma_star),
                    opt(r.time_seconds),
                    opt(r.improvement_pct),
                    r.termination.clone(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
        }
        ReportFormat::Table => {
            let width = rows
                .iter()
                .map(|r| r.system.len())
                .max()
                .unwrap_or(0)
                .max(6);
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>3}  {:>10}  {:>10}  {:>9}  {:>9}  termination",
                "System", "n", "m", "gamma0", "gamma*", "time (s)", "% impr."
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>4}  {:>3}  {:>10}  {:>10}  {:>9}  {:>9}  {}",
                    r.system,
                    opt(r.n),
                    opt(r.m),
                    fixed(r.gamma0, 4),
                    fixed(r.gamma_star, 4),
                    fixed(r.time_seconds, 3),
                    fixed(r.improvement_pct, 2),
                    r.termination
                );
            }
            out
        }
    }
}
