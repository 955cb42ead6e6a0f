//! Instance files and the two built-in examples.
//!
//! An instance is a small TOML document:
//!
//! ```toml
//! W = [[0.8, 0.10, 0.05, 0.05],
//!      [0.3, 0.40, 0.20, 0.10],
//!      [0.1, 0.10, 0.60, 0.20],
//!      [0.1, 0.30, 0.30, 0.30]]
//! sigma_tilde = [0.5, 1, 0.2, 0.1]
//! y0 = [0.20, 0.50, 0.01, 0.29]   # optional
//! sigma_max = 0.05                # optional
//! ```
//!
//! `W` may instead be supplied as `W_csv = "path.csv"`, resolved relative to
//! the instance file.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{self, ImmunityProfile, InfluenceMatrix, OpinionVector, ProfileOptions};
use crate::spectral::{self, GraphPattern};

/// Initial opinions used by both built-in examples.
pub const EX_Y0: [f64; 4] = [0.20, 0.50, 0.01, 0.29];

const EX_SIGMA_TILDE: [f64; 4] = [0.5, 1.0, 0.2, 0.1];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    #[serde(rename = "W", default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(rename = "W_csv", default)]
    pub w_csv: Option<String>,
    pub sigma_tilde: Vec<f64>,
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    pub allow_zero_sigma: bool,
    pub renormalize_sigma_tilde: bool,
}

impl LoadOptions {
    fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            allow_zero: self.allow_zero_sigma,
            ..Default::default()
        }
    }
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub influence: InfluenceMatrix,
    pub sigma_tilde: Vec<f64>,
    pub y0: Option<Vec<f64>>,
    pub sigma_max: Option<f64>,
    pub options: ProfileOptions,
    /// Provenance notes and non-fatal warnings.
    pub notes: Vec<String>,
}

impl Instance {
    pub fn profile(&self, sigma_max: f64) -> Result<ImmunityProfile> {
        ImmunityProfile::with_options(sigma_max, self.sigma_tilde.clone(), self.options)
    }

    pub fn opinions(&self) -> Result<OpinionVector> {
        let y0 = self
            .y0
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("instance {} has no y0", self.name)))?;
        OpinionVector::new(y0)
    }
}

/// Four agents with a positive diagonal (primitive `W`).
pub fn ex1() -> Instance {
    let w = Matrix::from_rows(&[
        [0.8, 0.10, 0.05, 0.05],
        [0.30, 0.40, 0.20, 0.10],
        [0.10, 0.10, 0.60, 0.20],
        [0.10, 0.30, 0.30, 0.30],
    ])
    .expect("ex1 matrix");
    Instance {
        name: "ex1".into(),
        influence: InfluenceMatrix::new(w).expect("ex1 is valid"),
        sigma_tilde: EX_SIGMA_TILDE.to_vec(),
        y0: Some(EX_Y0.to_vec()),
        sigma_max: None,
        options: ProfileOptions::default(),
        notes: Vec::new(),
    }
}

/// Four agents on a path graph: irreducible with period 2.
pub fn ex2() -> Instance {
    let w = Matrix::from_rows(&[
        [0.0, 1.0, 0.0, 0.0],
        [2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0],
        [0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    .expect("ex2 matrix");
    Instance {
        name: "ex2".into(),
        influence: InfluenceMatrix::new(w).expect("ex2 is valid"),
        sigma_tilde: EX_SIGMA_TILDE.to_vec(),
        y0: Some(EX_Y0.to_vec()),
        sigma_max: Some(0.1),
        options: ProfileOptions::default(),
        notes: vec!["y0 borrowed from ex1 (no initial condition published for this example)".into()],
    }
}

pub fn builtin(name: &str) -> Option<Instance> {
    match name {
        "ex1" => Some(ex1()),
        "ex2" => Some(ex2()),
        _ => None,
    }
}

pub fn parse_raw(text: &str) -> Result<RawInstance> {
    toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
}

fn parse_csv_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .enumerate()
                .map(|(j, cell)| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("W_csv line {} entry {}: {:?}", i + 1, j, cell.trim()))
                    })
                })
                .collect()
        })
        .collect()
}

/// Reads and parses an instance file; does not validate the model assumptions.
pub fn read_raw(path: &Path) -> Result<RawInstance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
    let mut raw = parse_raw(&text)?;
    if let Some(csv) = raw.w_csv.take() {
        if raw.w.is_some() {
            return Err(Error::Parse("give either W or W_csv, not both".into()));
        }
        let csv_path = path.parent().unwrap_or(Path::new(".")).join(csv);
        let text = fs::read_to_string(&csv_path)
            .map_err(|e| Error::Parse(format!("{}: {}", csv_path.display(), e)))?;
        raw.w = Some(parse_csv_matrix(&text)?);
    }
    Ok(raw)
}

/// Shape and finiteness checks that make a raw instance a well-formed matrix.
pub fn raw_matrix(raw: &RawInstance) -> Result<Matrix> {
    let rows = raw.w.as_ref().ok_or_else(|| Error::Parse("missing key W".into()))?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("W is empty".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::Parse(format!(
                "W row {} has {} entries, expected {} (W must be square)",
                i,
                r.len(),
                n
            )));
        }
        if let Some(j) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("W[{}][{}] is not finite", i, j)));
        }
    }
    if raw.sigma_tilde.len() != n {
        return Err(Error::Parse(format!(
            "sigma_tilde has {} entries, W is {}x{}",
            raw.sigma_tilde.len(),
            n,
            n
        )));
    }
    if let Some(y0) = &raw.y0 {
        if y0.len() != n {
            return Err(Error::Parse(format!("y0 has {} entries, W is {}x{}", y0.len(), n, n)));
        }
        if let Some(i) = y0.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("y0[{}] is not finite", i)));
        }
    }
    Matrix::from_rows(rows)
}

fn normalized_sigma_tilde(raw: &RawInstance, opts: &LoadOptions, notes: &mut Vec<String>) -> (Vec<f64>, Option<f64>) {
    let top = raw.sigma_tilde.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let needs = (top - 1.0).abs() > model::SIGMA_TILDE_MAX_TOL;
    if opts.renormalize_sigma_tilde && needs && top > 0.0 && top.is_finite() {
        notes.push(format!(
            "warning: sigma_tilde renormalized by its maximum {}; sigma_max scaled to match",
            top
        ));
        (
            raw.sigma_tilde.iter().map(|p| p / top).collect(),
            raw.sigma_max.map(|s| s * top),
        )
    } else {
        (raw.sigma_tilde.clone(), raw.sigma_max)
    }
}

impl Instance {
    pub fn from_raw(name: &str, raw: &RawInstance, opts: LoadOptions) -> Result<Instance> {
        let w = raw_matrix(raw)?;
        let influence = InfluenceMatrix::new(w)?;
        let mut notes = Vec::new();
        let (sigma_tilde, sigma_max) = normalized_sigma_tilde(raw, &opts, &mut notes);
        model::validate_sigma_tilde(&sigma_tilde, opts.allow_zero_sigma)?;
        if let Some(s) = sigma_max {
            ImmunityProfile::with_options(s, sigma_tilde.clone(), opts.profile_options())?;
        }
        if let Some(y0) = &raw.y0 {
            if let Some(w) = OpinionVector::new(y0.clone())?.warning() {
                notes.push(format!("warning: {}", w));
            }
        }
        Ok(Instance {
            name: name.to_string(),
            influence,
            sigma_tilde,
            y0: raw.y0.clone(),
            sigma_max,
            options: opts.profile_options(),
            notes,
        })
    }
}

/// Resolves `ex1` / `ex2` by name, anything else as a path.
pub fn load(source: &str, opts: LoadOptions) -> Result<Instance> {
    if let Some(inst) = builtin(source) {
        return Ok(inst);
    }
    let raw = read_raw(Path::new(source))?;
    Instance::from_raw(source, &raw, opts)
}

/// Raw form of a built-in instance, so built-ins go through the same
/// validation report as files.
pub fn builtin_raw(name: &str) -> Option<RawInstance> {
    builtin(name).map(|inst| RawInstance {
        w: Some(inst.influence.matrix().to_rows()),
        w_csv: None,
        sigma_tilde: inst.sigma_tilde,
        y0: inst.y0,
        sigma_max: inst.sigma_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub check: &'static str,
    pub ok: bool,
    pub detail: String,
}

/// Every assumption check on a parsed instance, plus informational
/// primitivity. `assumptions_hold` ignores the informational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub primitive: Option<bool>,
    pub period: Option<u64>,
}

impl ValidationReport {
    pub fn assumptions_hold(&self) -> bool {
        self.findings.iter().all(|f| f.ok)
    }

    pub fn first_violation(&self) -> Option<&Finding> {
        self.findings.iter().find(|f| !f.ok)
    }
}

pub fn validate(raw: &RawInstance, opts: LoadOptions) -> Result<ValidationReport> {
    let w = raw_matrix(raw)?;
    let n = w.rows();
    let mut findings = Vec::new();

    let negative = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| w[(i, j)] < 0.0);
    findings.push(Finding {
        check: "nonnegativity",
        ok: negative.is_none(),
        detail: negative.map_or("all entries >= 0".into(), |(i, j)| {
            format!("W[{}][{}] = {}", i, j, w[(i, j)])
        }),
    });

    let bad_row = w
        .row_sums()
        .into_iter()
        .enumerate()
        .find(|(_, s)| (s - 1.0).abs() > model::ROW_SUM_TOL);
    findings.push(Finding {
        check: "row stochasticity",
        ok: bad_row.is_none(),
        detail: bad_row.map_or("every row sums to 1".into(), |(i, s)| {
            format!("row {} sums to {}", i, s)
        }),
    });

    let pattern = GraphPattern::from_matrix(&w);
    let irreducible = spectral::is_irreducible(&pattern);
    findings.push(Finding {
        check: "irreducibility",
        ok: irreducible,
        detail: if irreducible {
            "graph of W is strongly connected".into()
        } else {
            "graph of W is not strongly connected".into()
        },
    });

    let mut notes = Vec::new();
    let (sigma_tilde, sigma_max) = normalized_sigma_tilde(raw, &opts, &mut notes);
    let st = model::validate_sigma_tilde(&sigma_tilde, opts.allow_zero_sigma);
    findings.push(Finding {
        check: "sigma_tilde",
        ok: st.is_ok(),
        detail: match st {
            Ok(()) => format!("entries in {} with max 1", if opts.allow_zero_sigma { "[0, 1]" } else { "(0, 1]" }),
            Err(e) => e.to_string(),
        },
    });
    if let Some(s) = sigma_max {
        let eps = model::DEFAULT_EPSILON;
        let ok = s > 0.0 && s <= 1.0 - eps;
        findings.push(Finding {
            check: "sigma_max",
            ok,
            detail: format!("sigma_max = {} (admissible range (0, {}])", s, 1.0 - eps),
        });
    }

    let period = if irreducible { spectral::period(&pattern).ok() } else { None };
    Ok(ValidationReport {
        findings,
        primitive: period.map(|p| p == 1),
        period,
    })
}
