//! JSON persistence of identified models.
//!
//! ```json
//! {
//!   "pset": {"max_delay": 1, "variables": ["y1", "u1"], "functions": ["mul"], "constants": []},
//!   "terms": ["q1(y1)", "u1", "mul(q1(y1),u1)"],
//!   "theta": [0.75, 0.25, -0.2]
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{create_model, Model};
use crate::primitives::PrimitiveSet;

/// Enough of a primitive set to rebuild it from built-in functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsetSpec {
    pub max_delay: usize,
    pub variables: Vec<String>,
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub constants: Vec<(String, f64)>,
}

impl PsetSpec {
    pub fn from_pset(pset: &PrimitiveSet) -> Self {
        Self {
            max_delay: pset.max_delay(),
            variables: pset.variables().to_vec(),
            functions: pset
                .functions()
                .iter()
                .map(|f| f.name().to_string())
                .collect(),
            constants: pset.constants().to_vec(),
        }
    }

    /// Rebuilds the set; only built-in functions can be restored.
    pub fn build(&self) -> Result<PrimitiveSet> {
        let mut pset = PrimitiveSet::new(self.max_delay, self.variables.len())?;
        for name in self.functions.iter().filter(|f| f.as_str() != "mul") {
            let arity = crate::primitives::builtin(name)
                .map(|(a, _)| a)
                .ok_or_else(|| Error::UnknownBuiltin {
                    name: name.clone(),
                    arity: 0,
                })?;
            pset.add_builtin(name, arity)?;
        }
        for (name, value) in &self.constants {
            pset.add_constant(name, *value)?;
        }
        let mapping: Vec<(String, String)> = pset
            .variables()
            .iter()
            .cloned()
            .zip(self.variables.iter().cloned())
            .collect();
        pset.rename_arguments(&mapping)
    }
}

/// Data columns a model was identified on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Columns {
    pub output: String,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub pset: PsetSpec,
    pub terms: Vec<String>,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Columns>,
}

impl ModelRecord {
    pub fn new(pset: &PrimitiveSet, model: &Model, theta: &[f64]) -> Self {
        Self {
            pset: PsetSpec::from_pset(pset),
            terms: model.terms(pset),
            theta: theta.to_vec(),
            data: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
        if rec.terms.len() != rec.theta.len() {
            return Err(Error::ThetaLength {
                expected: rec.terms.len(),
                found: rec.theta.len(),
            });
        }
        Ok(rec)
    }

    /// Rebuilds the primitive set and the model with its parameters.
    pub fn load(&self) -> Result<(PrimitiveSet, Model)> {
        let pset = self.pset.build()?;
        let mut model = create_model(&pset, &self.terms)?;
        model.theta = Some(self.theta.clone());
        Ok((pset, model))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::make_pset;

    #[test]
    fn round_trip() {
        let mut pset = make_pset(2, 2, &[("tanh", 1)])
            .unwrap()
            .rename_arguments(&[("ARG0", "y1"), ("ARG1", "u1")])
            .unwrap();
        pset.add_constant("c", 0.5).unwrap();
        let model = create_model(&pset, &["q2(y1)", "tanh(mul(c,u1))"]).unwrap();
        let rec = ModelRecord::new(&pset, &model, &[0.1, -0.2]);
        let back = ModelRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        let (p2, m2) = back.load().unwrap();
        assert_eq!(p2.variables(), pset.variables());
        assert_eq!(m2.terms(&p2), model.terms(&pset));
        assert_eq!(m2.theta, Some(vec![0.1, -0.2]));
    }

    #[test]
    fn rejects_malformed() {
        assert!(ModelRecord::from_json("{").is_err());
        let bad = r#"{"pset":{"max_delay":1,"variables":["y1","u1"]},"terms":["u1"],"theta":[]}"#;
        assert!(ModelRecord::from_json(bad).is_err());
    }
}
