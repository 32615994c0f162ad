//! The fire-and-wire neuron graph.
//!
//! Neurons carry a firing threshold and a per-slot accumulator. A neuron that
//! reaches its threshold becomes active and emits a signal of 1 along each of
//! its outgoing edges, once per slot. Stamp neurons are created by the How and
//! What pathways and by temporal binding; every creation is recorded in the
//! creation log so a graph can be replayed from its log alone.

mod export;
mod nature;
mod wire;

pub use export::{to_dot, GraphDoc};
pub use nature::{
    attribute_category, direction_neuron, lemma_lexical, load_nature_design, relation_neuron,
    relation_of_neuron, role_neuron, roles_of, Ablation, AblationTarget, AttributeKind,
    UnknownAblation, ACTION, ATTR, ROLE_NAMES, WERNICKE,
};
pub use wire::{bind_time, fire_wire_how, fire_wire_what, shuffle_time};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relations::RelationKind;

pub type NeuronId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronKind {
    Nature,
    EntityInstance,
    ConceptInstance,
    ActionInstance,
    ActionStamp,
    SubactionStamp,
    EntityStamp,
    TimeStamp,
    Lexical,
}

impl NeuronKind {
    /// Name prefix of created neurons of this kind; the id follows it.
    pub fn prefix(self) -> &'static str {
        match self {
            NeuronKind::Nature => "#",
            NeuronKind::EntityInstance => "ins_entity_",
            NeuronKind::ConceptInstance => "ins_concept_",
            NeuronKind::ActionInstance => "ins_action_",
            NeuronKind::ActionStamp => "stamp_action_",
            NeuronKind::SubactionStamp => "stamp_subaction_",
            NeuronKind::EntityStamp => "stamp_entity_",
            NeuronKind::TimeStamp => "stamp_time_",
            NeuronKind::Lexical => "_",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub name: String,
    pub kind: NeuronKind,
    pub threshold: f64,
    pub accumulated: f64,
    pub active: bool,
    /// Set once the neuron has emitted in the current slot.
    #[serde(default)]
    pub emitted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogItem {
    Neuron { id: NeuronId },
    Edge { from: NeuronId, to: NeuronId },
    Unlink { from: NeuronId, to: NeuronId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// `None` while the nature design is loading.
    pub slot: Option<usize>,
    #[serde(flatten)]
    pub item: LogItem,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("no neuron named `{0}`")]
    UnknownNeuron(String),
    #[error("relation kind `{0}` has no nature neuron")]
    UnknownRelationKind(String),
    #[error("signal propagation exceeded {0} rounds")]
    CycleGuard(usize),
    #[error("time slot {got} bound out of order, expected {expected}")]
    OutOfOrderSlot { expected: usize, got: usize },
    #[error("event for slot {event} fired while slot {cursor} is open")]
    SlotMismatch { cursor: usize, event: usize },
    #[error("no entity instance for track {0}")]
    MissingEntity(u32),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

/// Neurons indexed by id, a deduplicated directed edge set and the
/// creation log.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronGraph {
    neurons: Vec<Neuron>,
    out: Vec<BTreeSet<NeuronId>>,
    inc: Vec<BTreeSet<NeuronId>>,
    by_name: HashMap<String, NeuronId>,
    /// Slot currently open for firing.
    pub slot_cursor: usize,
    /// Slot index of the most recent time stamp, if any.
    pub last_bound_slot: Option<usize>,
    log: Vec<LogEntry>,
    loading: bool,
}

impl Default for NeuronGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl NeuronGraph {
    pub fn new() -> Self {
        Self {
            neurons: Vec::new(),
            out: Vec::new(),
            inc: Vec::new(),
            by_name: HashMap::new(),
            slot_cursor: 0,
            last_bound_slot: None,
            log: Vec::new(),
            loading: true,
        }
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neuron(&self, id: NeuronId) -> &Neuron {
        &self.neurons[id as usize]
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<NeuronId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<NeuronId, NetworkError> {
        self.id_of(name)
            .ok_or_else(|| NetworkError::UnknownNeuron(name.to_string()))
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Edges in ascending `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NeuronId, NeuronId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(from, tos)| tos.iter().map(move |to| (from as NeuronId, *to)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, from: NeuronId, to: NeuronId) -> bool {
        self.out[from as usize].contains(&to)
    }

    pub fn successors(&self, id: NeuronId) -> impl Iterator<Item = NeuronId> + '_ {
        self.out[id as usize].iter().copied()
    }

    pub fn predecessors(&self, id: NeuronId) -> impl Iterator<Item = NeuronId> + '_ {
        self.inc[id as usize].iter().copied()
    }

    pub fn of_kind(&self, kind: NeuronKind) -> impl Iterator<Item = &Neuron> + '_ {
        self.neurons.iter().filter(move |n| n.kind == kind)
    }

    /// Ends nature-design loading; later entries are logged under slots.
    pub fn finish_loading(&mut self) {
        self.loading = false;
    }

    fn record(&mut self, item: LogItem) {
        let slot = (!self.loading).then_some(self.slot_cursor);
        self.log.push(LogEntry { slot, item });
    }

    fn push(&mut self, name: String, kind: NeuronKind, threshold: f64) -> NeuronId {
        let id = self.neurons.len() as NeuronId;
        self.by_name.insert(name.clone(), id);
        self.neurons.push(Neuron {
            id,
            name,
            kind,
            threshold,
            accumulated: 0.0,
            active: false,
            emitted: false,
        });
        self.out.push(BTreeSet::new());
        self.inc.push(BTreeSet::new());
        self.record(LogItem::Neuron { id });
        id
    }

    /// Adds a neuron with a fixed name, or returns the existing one.
    pub fn named(&mut self, name: &str, kind: NeuronKind, threshold: f64) -> NeuronId {
        match self.id_of(name) {
            Some(id) => id,
            None => self.push(name.to_string(), kind, threshold),
        }
    }

    /// Adds a neuron named by its kind prefix and its own id.
    pub fn create(&mut self, kind: NeuronKind, threshold: f64) -> NeuronId {
        let name = format!("{}{}", kind.prefix(), self.neurons.len());
        self.push(name, kind, threshold)
    }

    /// Adds `from -> to`. Self-loops and duplicates are ignored.
    pub fn connect(&mut self, from: NeuronId, to: NeuronId) -> bool {
        if from == to || !self.out[from as usize].insert(to) {
            return false;
        }
        self.inc[to as usize].insert(from);
        self.record(LogItem::Edge { from, to });
        true
    }

    pub fn disconnect(&mut self, from: NeuronId, to: NeuronId) -> bool {
        if !self.out[from as usize].remove(&to) {
            return false;
        }
        self.inc[to as usize].remove(&from);
        self.record(LogItem::Unlink { from, to });
        true
    }

    /// Adds `value` to the accumulator of `to` without propagating.
    pub fn send(&mut self, to: NeuronId, value: f64) {
        self.neurons[to as usize].accumulated += value;
    }

    /// Activates every neuron at or above threshold and lets active neurons
    /// emit once, repeating until nothing changes. Returns the number of
    /// rounds used.
    pub fn step_activation(&mut self) -> Result<usize, NetworkError> {
        let limit = self.neurons.len().max(1);
        for round in 0..=limit {
            let mut firing = Vec::new();
            for n in &mut self.neurons {
                if !n.active && n.accumulated >= n.threshold {
                    n.active = true;
                }
                if n.active && !n.emitted {
                    n.emitted = true;
                    firing.push(n.id);
                }
            }
            if firing.is_empty() {
                return Ok(round);
            }
            for id in firing {
                let targets: Vec<NeuronId> = self.successors(id).collect();
                for t in targets {
                    self.send(t, 1.0);
                }
            }
        }
        Err(NetworkError::CycleGuard(limit))
    }

    /// External input: one signal into `to`, then propagation.
    pub fn stimulate(&mut self, to: NeuronId) -> Result<(), NetworkError> {
        self.send(to, 1.0);
        self.step_activation().map(|_| ())
    }

    /// Resets accumulators and activation for the next slot.
    pub fn close_slot(&mut self) {
        for n in &mut self.neurons {
            n.accumulated = 0.0;
            n.active = false;
            n.emitted = false;
        }
        self.slot_cursor += 1;
    }

    pub fn is_active(&self, id: NeuronId) -> bool {
        self.neurons[id as usize].active
    }

    /// Single successor of `id` whose kind is `kind`.
    pub fn successor_of_kind(&self, id: NeuronId, kind: NeuronKind) -> Option<NeuronId> {
        self.successors(id).find(|s| self.neuron(*s).kind == kind)
    }

    pub fn predecessor_of_kind(&self, id: NeuronId, kind: NeuronKind) -> Option<NeuronId> {
        self.predecessors(id).find(|s| self.neuron(*s).kind == kind)
    }

    /// Time stamps in chain order, starting at the stamp without a
    /// time-stamp predecessor.
    pub fn time_chain(&self) -> Vec<NeuronId> {
        let stamps: Vec<NeuronId> = self.of_kind(NeuronKind::TimeStamp).map(|n| n.id).collect();
        let Some(mut cur) = stamps
            .iter()
            .copied()
            .find(|s| self.predecessor_of_kind(*s, NeuronKind::TimeStamp).is_none())
        else {
            return Vec::new();
        };
        let mut chain = vec![cur];
        while let Some(next) = self.successor_of_kind(cur, NeuronKind::TimeStamp) {
            if chain.contains(&next) {
                break;
            }
            chain.push(next);
            cur = next;
        }
        chain
    }

    /// Action stamps bound to a time stamp, in creation order.
    pub fn actions_of(&self, time_stamp: NeuronId) -> Vec<NeuronId> {
        self.successors(time_stamp)
            .filter(|s| self.neuron(*s).kind == NeuronKind::ActionStamp)
            .collect()
    }

    /// Relation kind of an action stamp, read from its relation neuron.
    pub fn action_kind(&self, stamp: NeuronId) -> Option<RelationKind> {
        self.predecessors(stamp)
            .find_map(|p| nature::relation_of_neuron(&self.neuron(p).name))
    }

    /// Entity-instance neuron of a track, if it exists.
    pub fn entity(&self, track_id: u32) -> Option<NeuronId> {
        self.id_of(&entity_name(track_id))
    }

    /// Rebuilds a graph by replaying a creation log against neuron records.
    pub fn replay(neurons: &[Neuron], log: &[LogEntry]) -> Result<Self, NetworkError> {
        let mut g = NeuronGraph::new();
        for entry in log {
            g.loading = entry.slot.is_none();
            if let Some(s) = entry.slot {
                g.slot_cursor = s;
            }
            match entry.item {
                LogItem::Neuron { id } => {
                    let n = neurons
                        .get(id as usize)
                        .filter(|n| n.id == id)
                        .ok_or_else(|| NetworkError::Malformed(format!("log names unknown neuron {id}")))?;
                    if id as usize != g.neurons.len() || g.by_name.contains_key(&n.name) {
                        return Err(NetworkError::Malformed(format!("neuron {id} out of order or duplicated")));
                    }
                    g.push(n.name.clone(), n.kind, n.threshold);
                }
                LogItem::Edge { from, to } => {
                    g.check_ids(from, to)?;
                    g.connect(from, to);
                }
                LogItem::Unlink { from, to } => {
                    g.check_ids(from, to)?;
                    g.disconnect(from, to);
                }
            }
        }
        if g.neurons.len() != neurons.len() {
            return Err(NetworkError::Malformed(format!(
                "log creates {} neurons, record lists {}",
                g.neurons.len(),
                neurons.len()
            )));
        }
        for (dst, src) in g.neurons.iter_mut().zip(neurons) {
            dst.accumulated = src.accumulated;
            dst.active = src.active;
            dst.emitted = src.emitted;
        }
        g.loading = false;
        Ok(g)
    }

    fn check_ids(&self, from: NeuronId, to: NeuronId) -> Result<(), NetworkError> {
        let n = self.neurons.len() as NeuronId;
        if from >= n || to >= n {
            return Err(NetworkError::Malformed(format!("edge {from}->{to} names a missing neuron")));
        }
        Ok(())
    }

    /// Checks the structural invariants and returns every violation found.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let stamps: Vec<NeuronId> = self.of_kind(NeuronKind::TimeStamp).map(|n| n.id).collect();
        let chain = self.time_chain();
        if chain.len() != stamps.len() {
            out.push(format!(
                "time chain covers {} of {} time stamps",
                chain.len(),
                stamps.len()
            ));
        }
        for s in &stamps {
            let succ = self
                .successors(*s)
                .filter(|t| self.neuron(*t).kind == NeuronKind::TimeStamp)
                .count();
            let pred = self
                .predecessors(*s)
                .filter(|t| self.neuron(*t).kind == NeuronKind::TimeStamp)
                .count();
            if succ > 1 || pred > 1 {
                out.push(format!("time stamp {s} branches"));
            }
        }
        for a in self.of_kind(NeuronKind::ActionStamp) {
            let times = self
                .predecessors(a.id)
                .filter(|t| self.neuron(*t).kind == NeuronKind::TimeStamp)
                .count();
            if times != 1 {
                out.push(format!("{} has {times} time stamps", a.name));
            }
            let arity = self
                .successors(a.id)
                .filter(|t| self.neuron(*t).kind == NeuronKind::EntityInstance)
                .count();
            match self.action_kind(a.id) {
                Some(k) if k.arity() == arity => {}
                Some(k) => out.push(format!("{} binds {arity} entities for {k}", a.name)),
                None => out.push(format!("{} has no relation neuron", a.name)),
            }
        }
        for n in &self.neurons {
            if n.accumulated < 0.0 {
                out.push(format!("{} has negative accumulator", n.name));
            }
        }
        out
    }
}

pub fn entity_name(track_id: u32) -> String {
    format!("{}{track_id}", NeuronKind::EntityInstance.prefix())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> (NeuronGraph, Vec<NeuronId>) {
        let mut g = NeuronGraph::new();
        let ids: Vec<_> = (0..n).map(|i| g.named(&format!("#n{i}"), NeuronKind::Nature, 1.0)).collect();
        for w in ids.windows(2) {
            g.connect(w[0], w[1]);
        }
        (g, ids)
    }

    #[test]
    fn one_signal_activates_threshold_one() {
        let (mut g, ids) = chain(1);
        g.send(ids[0], 1.0);
        g.step_activation().unwrap();
        assert!(g.is_active(ids[0]));
    }

    #[test]
    fn threshold_two_needs_two_signals() {
        let mut g = NeuronGraph::new();
        let a = g.named("#a", NeuronKind::Nature, 1.0);
        let b = g.named("#b", NeuronKind::Nature, 1.0);
        let joint = g.named("#joint", NeuronKind::Nature, 2.0);
        g.connect(a, joint);
        g.connect(b, joint);
        g.stimulate(a).unwrap();
        assert!(!g.is_active(joint));
        assert_eq!(g.neuron(joint).accumulated, 1.0);
        g.stimulate(b).unwrap();
        assert!(g.is_active(joint));
    }

    #[test]
    fn signals_cascade_and_emit_once() {
        let (mut g, ids) = chain(4);
        g.stimulate(ids[0]).unwrap();
        assert!(ids.iter().all(|i| g.is_active(*i)));
        g.stimulate(ids[0]).unwrap();
        assert_eq!(g.neuron(ids[3]).accumulated, 1.0);
    }

    #[test]
    fn cycles_are_bounded() {
        let (mut g, ids) = chain(3);
        g.connect(ids[2], ids[0]);
        g.stimulate(ids[0]).unwrap();
        assert!(ids.iter().all(|i| g.is_active(*i)));
    }

    #[test]
    fn close_slot_resets_state() {
        let (mut g, ids) = chain(2);
        g.stimulate(ids[0]).unwrap();
        g.close_slot();
        assert!(g.neurons().iter().all(|n| !n.active && n.accumulated == 0.0));
        assert_eq!(g.slot_cursor, 1);
    }

    #[test]
    fn duplicate_edges_and_self_loops_collapse() {
        let (mut g, ids) = chain(2);
        assert!(!g.connect(ids[0], ids[1]));
        assert!(!g.connect(ids[0], ids[0]));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn names_are_unique_and_created_names_use_ids() {
        let mut g = NeuronGraph::new();
        let a = g.named("#x", NeuronKind::Nature, 1.0);
        assert_eq!(g.named("#x", NeuronKind::Nature, 1.0), a);
        let s = g.create(NeuronKind::ActionStamp, 1.0);
        assert_eq!(g.neuron(s).name, "stamp_action_1");
    }

    #[test]
    fn replay_rebuilds_the_graph() {
        let (mut g, ids) = chain(3);
        g.finish_loading();
        let s = g.create(NeuronKind::TimeStamp, 1.0);
        g.connect(ids[2], s);
        g.disconnect(ids[0], ids[1]);
        let back = NeuronGraph::replay(g.neurons(), g.log()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn replay_rejects_dangling_edges() {
        let (g, _) = chain(2);
        let mut log = g.log().to_vec();
        log.push(LogEntry {
            slot: Some(0),
            item: LogItem::Edge { from: 0, to: 9 },
        });
        assert!(NeuronGraph::replay(g.neurons(), &log).is_err());
    }
}
