//! JSON description of a framed quiver network.
//!
//! ```json
//! {
//!   "vertices": ["1", "2", "3"],
//!   "arrows": [{"id": "a1", "tail": "1", "head": "2"}, {"id": "a2", "tail": "2", "head": "3"}],
//!   "d": {"1": 1, "2": 8, "3": 1},
//!   "io": {"inputs": ["1"], "outputs": ["3"]}
//! }
//! ```
//!
//! `n` is optional: it defaults to `d` at input and output vertices and `d + 1` elsewhere.
//! `io.layers` selects a single feed-forward path; without it every output is computed by
//! summing over all incoming arrows of the acyclic quiver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{dag_expr, feedforward_expr, ActivationKind, IoSpec, Network, NetworkError};
use crate::quiver::{ArrowSpec, FramedQuiver, Quiver, QuiverError, QuiverSpec};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed quiver file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoFile {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverFile {
    pub vertices: Vec<String>,
    pub arrows: Vec<ArrowSpec>,
    pub d: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub io: Option<IoFile>,
}

impl QuiverFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn framed_quiver(&self) -> Result<FramedQuiver, IoError> {
        let q = Quiver::new(&QuiverSpec { vertices: self.vertices.clone(), arrows: self.arrows.clone() })?;
        let n = match &self.n {
            Some(n) => n.clone(),
            None => {
                let ends: Vec<&String> = self.io.iter().flat_map(|io| io.inputs.iter().chain(&io.outputs)).collect();
                self.d.iter().map(|(v, &d)| (v.clone(), if ends.contains(&v) { d } else { d + 1 })).collect()
            }
        };
        Ok(FramedQuiver::from_maps(q, &self.d, &n)?)
    }

    /// The network with the given activation at every hidden vertex.
    pub fn network(&self, kind: ActivationKind) -> Result<Network, IoError> {
        let fq = self.framed_quiver()?;
        let io = self.io.as_ref().ok_or_else(|| IoError::Missing("the quiver file has no `io` section".into()))?;
        let q = &fq.quiver;
        let ids = |names: &[String]| names.iter().map(|v| q.vertex(v)).collect::<Result<Vec<_>, _>>();
        let inputs = ids(&io.inputs)?;
        let outputs = ids(&io.outputs)?;
        let exprs = match &io.layers {
            Some(layers) => {
                if outputs.len() != 1 {
                    return Err(IoError::Missing("`layers` requires exactly one output".into()));
                }
                vec![feedforward_expr(q, &ids(layers)?, kind)?]
            }
            None => outputs.iter().map(|&j| dag_expr(q, &inputs, j, kind)).collect::<Result<_, _>>()?,
        };
        Ok(Network::new(fq, IoSpec { inputs, outputs, exprs })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A3: &str = r#"{
        "vertices": ["1", "2", "3"],
        "arrows": [{"id": "a1", "tail": "1", "head": "2"}, {"id": "a2", "tail": "2", "head": "3"}],
        "d": {"1": 1, "2": 8, "3": 1},
        "io": {"inputs": ["1"], "outputs": ["3"]}
    }"#;

    #[test]
    fn default_framing_and_network() {
        let f = QuiverFile::parse(A3).unwrap();
        let fq = f.framed_quiver().unwrap();
        assert_eq!(fq.dims.n, vec![1, 9, 1]);
        let net = f.network(ActivationKind::Psi).unwrap();
        assert_eq!((net.input_dim(), net.output_dim()), (1, 1));
        assert_eq!(net.io.exprs[0].activation_count(), 1);
    }

    #[test]
    fn rejects_unknown_fields_and_vertices() {
        assert!(QuiverFile::parse(r#"{"vertices":[],"arrows":[],"d":{},"extra":1}"#).is_err());
        let bad = A3.replace(r#""head": "3""#, r#""head": "4""#);
        assert!(QuiverFile::parse(&bad).unwrap().framed_quiver().is_err());
    }
}
