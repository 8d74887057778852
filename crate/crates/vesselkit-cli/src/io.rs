//! JSON file formats: complex numbers as [re, im], matrices as row-major
//! arrays of rows, signals as {grid, values}, series keyed "n1,…,nd".

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vesselkit::linalg::{c, CMat, CVec};
use vesselkit::series::{key, PowerSeriesSolution};
use vesselkit::spectral::{Domain, GridSpec, SampledSignal};
use vesselkit::vessel::{CommutingTuple, PairTable, Vessel};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{path}: line {line} column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, IoError>;

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;
pub type JsonVector = Vec<JsonComplex>;

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// `cols` fixes the width of an empty row list.
pub fn matrix_from_json(rows: &JsonMatrix, cols: usize) -> std::result::Result<CMat, String> {
    let width = rows.first().map_or(cols, |r| r.len());
    if rows.iter().any(|r| r.len() != width) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMat::from_fn(rows.len(), width, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_json(v: &CVec) -> JsonVector {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &JsonVector) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|z| c(z[0], z[1])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBlock {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl GridBlock {
    pub fn spec(&self) -> std::result::Result<GridSpec, String> {
        GridSpec::new(self.n, self.half_width).map_err(|e| e.to_string())
    }
}

impl From<GridSpec> for GridBlock {
    fn from(g: GridSpec) -> Self {
        GridBlock { n: g.n, half_width: g.half_width }
    }
}

/// γ_jk for j < k, one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub j: usize,
    pub k: usize,
    pub value: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselBlock {
    pub dim_e: usize,
    #[serde(rename = "Phi")]
    pub phi: JsonMatrix,
    pub sigma: Vec<JsonMatrix>,
    pub gamma: Vec<PairEntry>,
    pub gamma_star: Vec<PairEntry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vessel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_law: Option<f64>,
}

/// The operator tuple, optionally with a full vessel, a grid and tolerance
/// overrides. Vessel files are problem files whose vessel block is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub d: usize,
    pub dim_h: usize,
    #[serde(rename = "A")]
    pub a: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vessel: Option<VesselBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<ToleranceOverrides>,
}

fn pairs_to_json(t: &PairTable) -> Vec<PairEntry> {
    t.pairs().map(|(j, k)| PairEntry { j: j + 1, k: k + 1, value: matrix_to_json(t.upper(j, k)) }).collect()
}

fn pairs_from_json(entries: &[PairEntry], d: usize, m: usize) -> std::result::Result<PairTable, String> {
    let mut t = PairTable::zeros(d, m);
    let mut seen = vec![false; d * d];
    for e in entries {
        if !(1 <= e.j && e.j < e.k && e.k <= d) {
            return Err(format!("pair ({},{}) is not 1 ≤ j < k ≤ {d}", e.j, e.k));
        }
        let value = matrix_from_json(&e.value, m)?;
        if value.shape() != (m, m) {
            return Err(format!("pair ({},{}) is not {m}×{m}", e.j, e.k));
        }
        seen[(e.j - 1) * d + e.k - 1] = true;
        t.set(e.j - 1, e.k - 1, value);
    }
    if t.pairs().any(|(j, k)| !seen[j * d + k]) {
        return Err("missing pair entries".into());
    }
    Ok(t)
}

impl ProblemFile {
    pub fn from_tuple(tuple: &CommutingTuple) -> Self {
        ProblemFile {
            d: tuple.d(),
            dim_h: tuple.dim_h(),
            a: tuple.a.iter().map(matrix_to_json).collect(),
            vessel: None,
            grid: None,
            tol: None,
        }
    }

    pub fn from_vessel(v: &Vessel) -> Self {
        let block = VesselBlock {
            dim_e: v.dim_e(),
            phi: matrix_to_json(&v.phi),
            sigma: v.sigma.iter().map(matrix_to_json).collect(),
            gamma: pairs_to_json(&v.gamma),
            gamma_star: pairs_to_json(&v.gamma_star),
            degenerate: v.degenerate,
        };
        ProblemFile {
            d: v.d(),
            dim_h: v.dim_h(),
            a: v.a.iter().map(matrix_to_json).collect(),
            vessel: Some(block),
            grid: None,
            tol: None,
        }
    }

    pub fn operators(&self) -> std::result::Result<Vec<CMat>, String> {
        if self.a.len() != self.d {
            return Err(format!("A has {} matrices, d = {}", self.a.len(), self.d));
        }
        self.a
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let a = matrix_from_json(m, self.dim_h)?;
                if a.shape() != (self.dim_h, self.dim_h) {
                    return Err(format!("A[{}] is not {n}×{n}", j + 1, n = self.dim_h));
                }
                Ok(a)
            })
            .collect()
    }

    pub fn tuple(&self) -> std::result::Result<CommutingTuple, String> {
        CommutingTuple::new(self.operators()?).map_err(|e| e.to_string())
    }

    /// The vessel block with A; `None` when the file carries no vessel.
    pub fn to_vessel(&self) -> std::result::Result<Option<Vessel>, String> {
        let Some(b) = &self.vessel else { return Ok(None) };
        let a = self.operators()?;
        let (d, n, m) = (self.d, self.dim_h, b.dim_e);
        let phi = matrix_from_json(&b.phi, n)?;
        if phi.shape() != (m, n) {
            return Err(format!("Phi is not {m}×{n}"));
        }
        if b.sigma.len() != d {
            return Err(format!("sigma has {} matrices, d = {d}", b.sigma.len()));
        }
        let sigma = b
            .sigma
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let s = matrix_from_json(s, m)?;
                if s.shape() != (m, m) {
                    return Err(format!("sigma[{}] is not {m}×{m}", j + 1));
                }
                Ok(s)
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let gamma = pairs_from_json(&b.gamma, d, m).map_err(|e| format!("gamma: {e}"))?;
        let gamma_star = pairs_from_json(&b.gamma_star, d, m).map_err(|e| format!("gamma_star: {e}"))?;
        Ok(Some(Vessel { a, phi, sigma, gamma, gamma_star, degenerate: b.degenerate }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFile {
    pub grid: GridBlock,
    pub values: Vec<JsonVector>,
}

impl SignalFile {
    pub fn from_signal(s: &SampledSignal) -> Self {
        SignalFile { grid: s.grid.into(), values: s.values.iter().map(vector_to_json).collect() }
    }

    pub fn to_signal(&self) -> std::result::Result<SampledSignal, String> {
        let grid = self.grid.spec()?;
        if self.values.len() != grid.n {
            return Err(format!("{} samples for a grid of {} nodes", self.values.len(), grid.n));
        }
        let m = self.values.first().map_or(0, |v| v.len());
        if self.values.iter().any(|v| v.len() != m) {
            return Err("samples of different dimensions".into());
        }
        Ok(SampledSignal { grid, domain: Domain::Time, values: self.values.iter().map(vector_from_json).collect() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFile {
    pub d: usize,
    pub degree: usize,
    pub dim_e: usize,
    pub coefficients: std::collections::BTreeMap<String, JsonVector>,
}

impl SeriesFile {
    pub fn from_solution(s: &PowerSeriesSolution) -> Self {
        SeriesFile {
            d: s.d,
            degree: s.degree,
            dim_e: s.dim_e,
            coefficients: s.coeffs.iter().map(|(n, v)| (key(n), vector_to_json(v))).collect(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::Read { path: name.clone(), source })?;
    parse_json(&text, &name)
}

pub fn parse_json<T: DeserializeOwned>(text: &str, name: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: name.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

pub fn read_problem(path: &Path) -> Result<ProblemFile> {
    read_json(path)
}

/// A vessel file, or a problem file without a vessel block (which is
/// embedded by the caller).
pub fn read_vessel(path: &Path) -> Result<(ProblemFile, Option<Vessel>)> {
    let p = read_problem(path)?;
    let v = p.to_vessel().map_err(|message| IoError::Shape { path: path.display().to_string(), message })?;
    Ok((p, v))
}
