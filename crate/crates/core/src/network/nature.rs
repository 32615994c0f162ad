//! The innate scaffolding loaded before any video: spatial relation neurons,
//! direction attributes, attribute categories, semantic roles and the
//! lexical neurons for relation lemmas.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NeuronGraph, NeuronKind};
use crate::config::EngineConfig;
use crate::relations::{DirectionLabel, RelationKind, UnknownKind};

/// The eight semantic roles. Only the first four are ever bound.
pub const ROLE_NAMES: [&str; 8] = [
    "subject",
    "object",
    "goal",
    "source",
    "reserved_role_5",
    "reserved_role_6",
    "reserved_role_7",
    "reserved_role_8",
];

pub const ACTION: &str = "#action";
pub const WERNICKE: &str = "#wernicke";
pub const ATTR: &str = "#attr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Texture,
    Color,
    Shape,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 3] = [AttributeKind::Texture, AttributeKind::Color, AttributeKind::Shape];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Texture => "texture",
            AttributeKind::Color => "color",
            AttributeKind::Shape => "shape",
        }
    }
}

pub fn attribute_category(kind: AttributeKind) -> String {
    format!("#{}", kind.as_str())
}

pub fn relation_neuron(kind: RelationKind) -> String {
    format!("#{}", kind.as_str())
}

pub fn direction_neuron(label: DirectionLabel) -> String {
    format!("#{}", label.as_str())
}

pub fn role_neuron(role: &str) -> String {
    format!("#{role}")
}

pub fn relation_of_neuron(name: &str) -> Option<RelationKind> {
    name.strip_prefix('#')?.parse().ok()
}

/// Lexical neuron carrying the verb phrase of a relation.
pub fn lemma_lexical(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::Rest => "_rest",
        RelationKind::Move => "_move",
        RelationKind::RestFirstThenMove => "_rest_first_then_move",
        RelationKind::MoveFirstThenRest => "_move_first_then_rest",
        RelationKind::ChangeDirection => "_change_direction",
        RelationKind::GoCloser => "_go_close_to",
        RelationKind::GoFarther => "_go_far_from",
        RelationKind::GoFartherThenCloser => "_go_far_from_then_close_to",
        RelationKind::GoCloserThenFarther => "_go_close_to_then_far_from",
        RelationKind::Touch => "_touch",
        RelationKind::FutureTouch => "_will_touch",
    }
}

/// Roles a relation neuron signals directly.
pub fn roles_of(kind: RelationKind) -> &'static [&'static str] {
    match kind {
        k if k.is_kinematic() => &["subject"],
        RelationKind::ChangeDirection => &["subject", "goal"],
        _ => &["subject", "object"],
    }
}

/// One thing a cognitive ablation can remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AblationTarget {
    Kind(RelationKind),
    /// All four distance trends.
    DistanceChange,
    /// Tracks at rest in every slot, with all their relations.
    RestState,
}

impl AblationTarget {
    pub fn kinds(self) -> Vec<RelationKind> {
        match self {
            AblationTarget::Kind(k) => vec![k],
            AblationTarget::DistanceChange => RelationKind::ALL
                .into_iter()
                .filter(|k| k.is_distance_trend())
                .collect(),
            AblationTarget::RestState => Vec::new(),
        }
    }
}

impl fmt::Display for AblationTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AblationTarget::Kind(k) => f.write_str(k.as_str()),
            AblationTarget::DistanceChange => f.write_str("distance_change"),
            AblationTarget::RestState => f.write_str("rest_state"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown ablation target `{0}`")]
pub struct UnknownAblation(pub String);

impl From<UnknownKind> for UnknownAblation {
    fn from(e: UnknownKind) -> Self {
        UnknownAblation(e.0)
    }
}

impl FromStr for AblationTarget {
    type Err = UnknownAblation;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance_change" => Ok(AblationTarget::DistanceChange),
            "rest_state" => Ok(AblationTarget::RestState),
            "direction_change" => Ok(AblationTarget::Kind(RelationKind::ChangeDirection)),
            other => Ok(AblationTarget::Kind(other.parse()?)),
        }
    }
}

/// A set of ablation targets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ablation {
    targets: BTreeSet<AblationTarget>,
}

impl Ablation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(targets: impl IntoIterator<Item = AblationTarget>) -> Self {
        Self {
            targets: targets.into_iter().collect(),
        }
    }

    pub fn parse_all<S: AsRef<str>>(names: &[S]) -> Result<Self, UnknownAblation> {
        names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<BTreeSet<_>, _>>()
            .map(|targets| Self { targets })
    }

    pub fn targets(&self) -> impl Iterator<Item = AblationTarget> + '_ {
        self.targets.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn removes(&self, kind: RelationKind) -> bool {
        self.targets.iter().any(|t| t.kinds().contains(&kind))
    }

    pub fn drops_stationary(&self) -> bool {
        self.targets.contains(&AblationTarget::RestState)
    }
}

/// Builds the nature design. Relation neurons of ablated kinds are left
/// out, so nothing can fire them.
///
/// `#action`, the role neurons and the direction attributes need two joint
/// signals; every other neuron fires on one.
pub fn load_nature_design(cfg: &EngineConfig, ablation: &Ablation) -> NeuronGraph {
    let base = cfg.neuron_activation_threshold;
    let joint = 2.0 * base;
    let mut g = NeuronGraph::new();

    let action = g.named(ACTION, NeuronKind::Nature, joint);
    let roles: Vec<_> = ROLE_NAMES
        .iter()
        .map(|r| g.named(&role_neuron(r), NeuronKind::Nature, joint))
        .collect();
    for r in &roles {
        g.connect(action, *r);
    }
    let wernicke = g.named(WERNICKE, NeuronKind::Nature, base);
    g.connect(wernicke, action);

    let attr = g.named(ATTR, NeuronKind::Nature, base);
    for kind in AttributeKind::ALL {
        let c = g.named(&attribute_category(kind), NeuronKind::Nature, base);
        g.connect(attr, c);
    }

    for kind in RelationKind::ALL {
        if ablation.removes(kind) {
            continue;
        }
        let rel = g.named(&relation_neuron(kind), NeuronKind::Nature, base);
        g.connect(rel, action);
        for role in roles_of(kind) {
            let r = g.require(&role_neuron(role)).expect("roles are loaded first");
            g.connect(rel, r);
        }
        g.named(lemma_lexical(kind), NeuronKind::Lexical, base);
        if kind == RelationKind::ChangeDirection {
            for label in DirectionLabel::CHANGES {
                let d = g.named(&direction_neuron(label), NeuronKind::Nature, joint);
                g.connect(rel, d);
                let lex = g.named(&format!("_{}", label.as_str()), NeuronKind::Lexical, base);
                g.connect(d, lex);
            }
        }
    }
    g.finish_loading();
    g
}
