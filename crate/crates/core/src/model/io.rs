//! JSON model files.
//!
//! ```json
//! {
//!   "variables": [{"name": "a", "cardinality": 2}, ...],
//!   "factors": [{"scope": ["a", "b"], "values": [...], "kind": "cpt", "child": "b"}, ...],
//!   "evidence": {"b": 0}
//! }
//! ```
//! Values are row-major with the last scope variable fastest; the scope order
//! in the file is authoritative.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, Evidence, FactorizedModel, ModelFactor, Scope, TableFactor};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// CPT columns read from text are accepted within this tolerance and then renormalized.
const FILE_COLUMN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Cpt,
    Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub scope: Vec<String>,
    pub values: Vec<f64>,
    pub kind: FactorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub variables: Vec<VariableEntry>,
    pub factors: Vec<FactorEntry>,
    #[serde(default)]
    pub evidence: BTreeMap<String, usize>,
}

impl ModelFile {
    pub fn from_model(model: &FactorizedModel, ev: &Evidence) -> Self {
        let d = model.domain();
        let variables = d
            .vars()
            .iter()
            .map(|v| VariableEntry { name: v.name.clone(), cardinality: v.cardinality })
            .collect();
        let factors = model
            .factors()
            .iter()
            .map(|f| FactorEntry {
                scope: f.table.vars().iter().map(|v| d.name(*v).to_string()).collect(),
                values: f.table.values().to_vec(),
                kind: if f.child.is_some() { FactorKind::Cpt } else { FactorKind::Potential },
                child: f.child.map(|c| d.name(c).to_string()),
            })
            .collect();
        let evidence = ev.iter().map(|(v, s)| (d.name(v).to_string(), s)).collect();
        ModelFile { variables, factors, evidence }
    }

    pub fn into_model(self) -> Result<(FactorizedModel, Evidence)> {
        let mut domain = Domain::new();
        for v in &self.variables {
            if v.cardinality < 2 {
                return Err(Error::invalid(format!(
                    "variable {} must have at least 2 states",
                    v.name
                )));
            }
            domain.add(v.name.clone(), v.cardinality)?;
        }
        let mut factors = Vec::with_capacity(self.factors.len());
        for (i, f) in self.factors.iter().enumerate() {
            let vars = f.scope.iter().map(|n| domain.require(n)).collect::<Result<Vec<_>>>()?;
            let scope = Scope::from_domain(&domain, &vars)?;
            let table = TableFactor::new(scope, f.values.clone())
                .map_err(|e| Error::invalid(format!("factor {i}: {e}")))?;
            let mf = match (f.kind, &f.child) {
                (FactorKind::Cpt, Some(c)) => ModelFactor::cpt(domain.require(c)?, table),
                (FactorKind::Cpt, None) => {
                    return Err(Error::invalid(format!("factor {i}: cpt without child")))
                }
                (FactorKind::Potential, _) => ModelFactor::potential(table),
            };
            factors.push(mf);
        }
        let mut ev = Evidence::new();
        for (name, s) in &self.evidence {
            ev.bind(domain.require(name)?, *s);
        }
        ev.validate(&domain)?;
        let model = FactorizedModel::with_tolerance(domain, factors, FILE_COLUMN_TOL)?;
        Ok((model, ev))
    }
}

pub fn read_model(path: &Path) -> Result<(FactorizedModel, Evidence)> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<(FactorizedModel, Evidence)> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.into_model()
}

/// Pretty JSON with a trailing newline; deterministic for a given model.
pub fn model_to_json(model: &FactorizedModel, ev: &Evidence) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model, ev))
        .expect("model file serializes");
    s.push('\n');
    s
}

/// Parses `name=state,name=state` against a domain.
pub fn parse_evidence(domain: &Domain, spec: &str) -> Result<Evidence> {
    let mut ev = Evidence::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, state) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("evidence item '{part}' is not name=state")))?;
        let state: usize = state
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("evidence state '{state}' is not an integer")))?;
        ev.bind(domain.require(name.trim())?, state);
    }
    ev.validate(domain)?;
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
      "variables": [{"name": "a", "cardinality": 2}, {"name": "b", "cardinality": 2}],
      "factors": [
        {"scope": ["a"], "values": [0.3, 0.7], "kind": "cpt", "child": "a"},
        {"scope": ["a", "b"], "values": [0.9, 0.1, 0.2, 0.8], "kind": "cpt", "child": "b"}
      ],
      "evidence": {"b": 1}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let (m, ev) = parse_model(CHAIN).unwrap();
        assert!(m.is_directed());
        assert_eq!(ev.get(m.domain().require("b").unwrap()), Some(1));
        let text = model_to_json(&m, &ev);
        let (m2, ev2) = parse_model(&text).unwrap();
        assert_eq!(m2.factors(), m.factors());
        assert_eq!(ev2, ev);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_card = CHAIN.replace(r#""cardinality": 2}, {"name": "b""#, r#""cardinality": 1}, {"name": "b""#);
        assert!(parse_model(&bad_card).is_err());
        let bad_ev = CHAIN.replace(r#"{"b": 1}"#, r#"{"b": 2}"#);
        assert!(parse_model(&bad_ev).is_err());
        let bad_len = CHAIN.replace("[0.3, 0.7]", "[0.3, 0.7, 0.0]");
        assert!(parse_model(&bad_len).is_err());
        let unknown = CHAIN.replace(r#""child": "a""#, r#""child": "zz""#);
        assert!(parse_model(&unknown).is_err());
    }

    #[test]
    fn evidence_strings() {
        let (m, _) = parse_model(CHAIN).unwrap();
        let ev = parse_evidence(m.domain(), "a=1, b=0").unwrap();
        assert_eq!(ev.len(), 2);
        assert!(parse_evidence(m.domain(), "a").is_err());
        assert!(parse_evidence(m.domain(), "a=5").is_err());
    }
}
