//! Textual model specifications:
//!
//! ```text
//! exponential | uniform | normal
//! pareto:alpha=<real> | bernoulli:p=<real>
//! classical:n=<int> | permutation:n=<int>
//! multiset:file=<path>      newline-separated reals
//! cdf:table=<path>          two-column CSV x,F with F non-decreasing
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::{ModelError, QualityModel};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{model}` is missing parameter `{param}`")]
    MissingParameter { model: String, param: &'static str },
    #[error("model `{model}` does not take parameter `{param}`")]
    UnexpectedParameter { model: String, param: String },
    #[error("malformed parameter list `{0}` (expected key=value[,key=value])")]
    MalformedParameters(String),
    #[error("cannot parse `{value}` as {expected} for `{param}`")]
    BadValue { param: String, value: String, expected: &'static str },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin} line {line}: {message}")]
    Parse { origin: String, line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Params<'a> {
    model: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(model: &'a str, raw: Option<&'a str>) -> Result<Self, SpecError> {
        let mut map = BTreeMap::new();
        if let Some(raw) = raw {
            for item in raw.split(',') {
                let (k, v) = item.split_once('=').ok_or_else(|| SpecError::MalformedParameters(raw.to_string()))?;
                if k.trim().is_empty() || map.insert(k.trim(), v.trim()).is_some() {
                    return Err(SpecError::MalformedParameters(raw.to_string()));
                }
            }
        }
        Ok(Self { model, map })
    }

    fn take(&mut self, param: &'static str) -> Result<&'a str, SpecError> {
        self.map.remove(param).ok_or(SpecError::MissingParameter { model: self.model.to_string(), param })
    }

    fn real(&mut self, param: &'static str) -> Result<f64, SpecError> {
        let raw = self.take(param)?;
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SpecError::BadValue {
            param: param.to_string(),
            value: raw.to_string(),
            expected: "a finite real",
        })
    }

    fn int(&mut self, param: &'static str) -> Result<usize, SpecError> {
        let raw = self.take(param)?;
        raw.parse::<usize>().map_err(|_| SpecError::BadValue {
            param: param.to_string(),
            value: raw.to_string(),
            expected: "a non-negative integer",
        })
    }

    fn finish(self) -> Result<(), SpecError> {
        match self.map.into_keys().next() {
            Some(param) => {
                Err(SpecError::UnexpectedParameter { model: self.model.to_string(), param: param.to_string() })
            }
            None => Ok(()),
        }
    }
}

fn read(path: &str) -> Result<String, SpecError> {
    std::fs::read_to_string(Path::new(path)).map_err(|source| SpecError::Io { path: path.to_string(), source })
}

/// Parses newline-separated reals; blank lines and `#` comments are skipped.
pub fn parse_multiset_text(text: &str, origin: &str) -> Result<Vec<f64>, SpecError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SpecError::Parse {
            origin: origin.to_string(),
            line: i + 1,
            message: format!("`{line}` is not a finite real"),
        })?;
        values.push(v);
    }
    Ok(values)
}

/// Parses a two-column `x,F` CSV. A first line that does not parse as two
/// numbers is treated as a header.
pub fn parse_cdf_table_text(text: &str, origin: &str) -> Result<Vec<(f64, f64)>, SpecError> {
    let mut rows = Vec::new();
    let mut seen_data = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [x, f] => x.parse::<f64>().ok().zip(f.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(row) => {
                rows.push(row);
                seen_data = true;
            }
            None if !seen_data && rows.is_empty() && fields.len() == 2 => {
                // header
                seen_data = true;
            }
            None => {
                return Err(SpecError::Parse {
                    origin: origin.to_string(),
                    line: i + 1,
                    message: format!("expected `x,F`, found `{line}`"),
                })
            }
        }
    }
    Ok(rows)
}

/// Parses a model specification string.
pub fn parse_model_spec(spec: &str) -> Result<QualityModel, SpecError> {
    let spec = spec.trim();
    let (name, raw) = match spec.split_once(':') {
        Some((name, raw)) => (name.trim(), Some(raw)),
        None => (spec, None),
    };
    let mut params = Params::parse(name, raw)?;
    let model = match name {
        "exponential" => QualityModel::exponential(),
        "uniform" => QualityModel::uniform(),
        "normal" => QualityModel::normal(),
        "pareto" => QualityModel::pareto(params.real("alpha")?)?,
        "bernoulli" => QualityModel::bernoulli(params.real("p")?)?,
        "classical" => QualityModel::classical(params.int("n")?)?,
        "permutation" => QualityModel::permutation(params.int("n")?)?,
        "multiset" => {
            let path = params.take("file")?;
            let values = parse_multiset_text(&read(path)?, path)?;
            QualityModel::multiset(&values)?.with_label(spec)
        }
        "cdf" => {
            let path = params.take("table")?;
            let rows = parse_cdf_table_text(&read(path)?, path)?;
            QualityModel::tabulated(rows, spec)?
        }
        other => return Err(SpecError::UnknownModel(other.to_string())),
    };
    params.finish()?;
    Ok(model)
}
