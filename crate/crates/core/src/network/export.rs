use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LogEntry, NetworkError, Neuron, NeuronGraph, NeuronId, NeuronKind};

/// Serialized graph: neuron records, the edge list and the creation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub neurons: Vec<Neuron>,
    pub edges: Vec<[NeuronId; 2]>,
    pub creation_log: Vec<LogEntry>,
    pub slot_cursor: usize,
    pub last_bound_slot: Option<usize>,
}

impl GraphDoc {
    pub fn from_graph(g: &NeuronGraph) -> Self {
        Self {
            neurons: g.neurons().to_vec(),
            edges: g.edges().map(|(a, b)| [a, b]).collect(),
            creation_log: g.log().to_vec(),
            slot_cursor: g.slot_cursor,
            last_bound_slot: g.last_bound_slot,
        }
    }

    /// Replays the creation log and checks it reproduces the edge list.
    pub fn into_graph(self) -> Result<NeuronGraph, NetworkError> {
        let mut g = NeuronGraph::replay(&self.neurons, &self.creation_log)?;
        let edges: Vec<[NeuronId; 2]> = g.edges().map(|(a, b)| [a, b]).collect();
        if edges != self.edges {
            return Err(NetworkError::Malformed(
                "edge list disagrees with the creation log".into(),
            ));
        }
        for (a, b) in self.neurons.iter().zip(g.neurons()) {
            if a.name != b.name || a.kind != b.kind || a.threshold.to_bits() != b.threshold.to_bits() {
                return Err(NetworkError::Malformed(format!("neuron {} disagrees with the log", a.id)));
            }
        }
        g.slot_cursor = self.slot_cursor;
        g.last_bound_slot = self.last_bound_slot;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn color(kind: NeuronKind) -> &'static str {
    match kind {
        NeuronKind::Nature => "red",
        NeuronKind::ActionStamp | NeuronKind::SubactionStamp | NeuronKind::EntityStamp => "gray",
        NeuronKind::TimeStamp => "purple",
        NeuronKind::EntityInstance | NeuronKind::ConceptInstance | NeuronKind::ActionInstance => "green",
        NeuronKind::Lexical => "yellow",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering colored by neuron kind.
pub fn to_dot(g: &NeuronGraph) -> String {
    let mut out = String::from("digraph srnn {\n  node [style=filled];\n");
    for n in g.neurons() {
        let _ = writeln!(
            out,
            "  n{} [label={}, fillcolor={}];",
            n.id,
            quote(&n.name),
            color(n.kind)
        );
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}
