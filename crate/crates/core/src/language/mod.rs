//! Semantic networks, sentence generation and the slot-ordered description
//! document.
//!
//! Every sentence is read back from the graph: the action instance and its
//! lemma, the subaction stamps binding roles to entities, and the concept
//! instances bound by each entity's stamp. A graph reloaded from JSON
//! therefore describes itself identically.

mod doc;
mod prompt;

pub use doc::{DescriptionDoc, DocParseError, Segment};
pub use prompt::{assemble_prompt, QType, Question, UnknownQType};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AttributeOrder, EngineConfig};
use crate::network::{
    attribute_category, lemma_lexical, role_neuron, roles_of, AttributeKind,
    NetworkError, NeuronGraph, NeuronId, NeuronKind, WERNICKE,
};
use crate::relations::{RelationEvent, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Subject,
    Object,
    Goal,
    Source,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Subject, Role::Object, Role::Goal, Role::Source];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Subject => "subject",
            Role::Object => "object",
            Role::Goal => "goal",
            Role::Source => "source",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub role: Role,
    /// Entity instance, or the direction concept for a goal.
    pub target: NeuronId,
    pub subaction: NeuronId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticNet {
    pub action_stamp: NeuronId,
    pub action_instance: NeuronId,
    pub kind: RelationKind,
    pub lemma: NeuronId,
    pub bindings: Vec<RoleBinding>,
}

impl SemanticNet {
    pub fn binding(&self, role: Role) -> Option<&RoleBinding> {
        self.bindings.iter().find(|b| b.role == role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LanguageError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("action stamp {0} has no relation neuron")]
    NotAnAction(NeuronId),
    #[error("action stamp {0} has no moving participant to act as subject")]
    NoMovingParticipant(NeuronId),
    #[error("role `{role}` of action stamp {stamp} did not activate")]
    InactiveRole { stamp: NeuronId, role: String },
    #[error("action stamp {0} already has a semantic network")]
    AlreadyBuilt(NeuronId),
}

/// Builds the semantic network of one action stamp.
///
/// `event` is the relation the stamp was wired for; its participants are
/// already in mover-first order, so the first becomes the subject and the
/// second the object. A direction change binds its direction concept as
/// the goal.
pub fn build_semantic_net(
    g: &mut NeuronGraph,
    action_stamp: NeuronId,
    event: &RelationEvent,
    cfg: &EngineConfig,
) -> Result<SemanticNet, LanguageError> {
    let kind = g.action_kind(action_stamp).ok_or(LanguageError::NotAnAction(action_stamp))?;
    if g.successor_of_kind(action_stamp, NeuronKind::ActionInstance).is_some() {
        return Err(LanguageError::AlreadyBuilt(action_stamp));
    }
    let base = cfg.neuron_activation_threshold;
    let wernicke = g.require(WERNICKE)?;
    g.stimulate(wernicke)?;

    let action = g.require(crate::network::ACTION)?;
    let lemma = g.require(lemma_lexical(kind))?;
    let instance = g.create(NeuronKind::ActionInstance, base);
    g.connect(action_stamp, instance);
    g.connect(instance, action);
    g.connect(instance, lemma);
    g.stimulate(instance)?;

    let mut targets = Vec::new();
    for p in &event.participants {
        let e = g
            .entity(*p)
            .ok_or(NetworkError::MissingEntity(*p))?;
        targets.push(e);
    }
    let subject = *targets.first().ok_or(LanguageError::NoMovingParticipant(action_stamp))?;
    let mut plan = vec![(Role::Subject, subject)];
    match kind {
        RelationKind::ChangeDirection => {
            let concept = g
                .successor_of_kind(action_stamp, NeuronKind::ConceptInstance)
                .ok_or_else(|| NetworkError::Malformed("direction change without a concept".into()))?;
            plan.push((Role::Goal, concept));
        }
        k if k.arity() == 2 => plan.push((Role::Object, targets[1])),
        _ => {}
    }
    debug_assert!(plan.iter().all(|(r, _)| roles_of(kind).contains(&r.as_str())));

    let mut bindings = Vec::new();
    for (role, target) in plan {
        let role_id = g.require(&role_neuron(role.as_str()))?;
        if !g.is_active(role_id) {
            return Err(LanguageError::InactiveRole {
                stamp: action_stamp,
                role: role.to_string(),
            });
        }
        let sub = g.create(NeuronKind::SubactionStamp, base);
        g.connect(instance, sub);
        g.connect(sub, role_id);
        g.connect(sub, target);
        g.stimulate(sub)?;
        bindings.push(RoleBinding {
            role,
            target,
            subaction: sub,
        });
    }
    Ok(SemanticNet {
        action_stamp,
        action_instance: instance,
        kind,
        lemma,
        bindings,
    })
}

/// Reads back the semantic network built for an action stamp.
pub fn read_semantic_net(g: &NeuronGraph, action_stamp: NeuronId) -> Option<SemanticNet> {
    let kind = g.action_kind(action_stamp)?;
    let instance = g.successor_of_kind(action_stamp, NeuronKind::ActionInstance)?;
    let lemma = g.successor_of_kind(instance, NeuronKind::Lexical)?;
    let mut bindings = Vec::new();
    for sub in g.successors(instance) {
        if g.neuron(sub).kind != NeuronKind::SubactionStamp {
            continue;
        }
        let role = g.successors(sub).find_map(|s| {
            let n = g.neuron(s);
            (n.kind == NeuronKind::Nature)
                .then(|| n.name.strip_prefix('#')?.parse::<Role>().ok())
                .flatten()
        })?;
        let target = g.successors(sub).find(|s| {
            matches!(
                g.neuron(*s).kind,
                NeuronKind::EntityInstance | NeuronKind::ConceptInstance
            )
        })?;
        bindings.push(RoleBinding {
            role,
            target,
            subaction: sub,
        });
    }
    bindings.sort_by_key(|b| b.role);
    Some(SemanticNet {
        action_stamp,
        action_instance: instance,
        kind,
        lemma,
        bindings,
    })
}

fn word(g: &NeuronGraph, lexical: NeuronId) -> &str {
    let name = &g.neuron(lexical).name;
    name.strip_prefix('_').unwrap_or(name)
}

fn lemma_text(g: &NeuronGraph, lexical: NeuronId) -> String {
    word(g, lexical).replace('_', " ")
}

fn attribute_kinds(order: AttributeOrder) -> [AttributeKind; 3] {
    match order {
        AttributeOrder::TextureColorShape => {
            [AttributeKind::Texture, AttributeKind::Color, AttributeKind::Shape]
        }
        AttributeOrder::ColorTextureShape => {
            [AttributeKind::Color, AttributeKind::Texture, AttributeKind::Shape]
        }
    }
}

/// Attribute words from the entity stamp followed by the instance name.
pub fn entity_phrase(g: &NeuronGraph, entity: NeuronId, order: AttributeOrder) -> String {
    let mut words = Vec::new();
    if let Some(stamp) = g.successor_of_kind(entity, NeuronKind::EntityStamp) {
        for kind in attribute_kinds(order) {
            let category = g.id_of(&attribute_category(kind));
            let concept = g.successors(stamp).find(|c| {
                g.neuron(*c).kind == NeuronKind::ConceptInstance
                    && category.is_some_and(|cat| g.has_edge(cat, *c))
            });
            if let Some(lex) = concept.and_then(|c| g.successor_of_kind(c, NeuronKind::Lexical)) {
                words.push(word(g, lex).to_string());
            }
        }
    }
    words.push(g.neuron(entity).name.clone());
    words.join(" ")
}

fn target_phrase(g: &NeuronGraph, target: NeuronId, order: AttributeOrder) -> String {
    match g.neuron(target).kind {
        NeuronKind::ConceptInstance => {
            let label = g
                .successor_of_kind(target, NeuronKind::Lexical)
                .map_or_else(String::new, |l| word(g, l).to_string());
            format!("its {label}")
        }
        _ => entity_phrase(g, target, order),
    }
}

/// Agent, lemma, patient, then "to" goal and "from" source.
pub fn generate_sentence(g: &NeuronGraph, net: &SemanticNet, order: AttributeOrder) -> String {
    let mut parts = Vec::new();
    if let Some(b) = net.binding(Role::Subject) {
        parts.push(format!("the {}", target_phrase(g, b.target, order)));
    }
    parts.push(lemma_text(g, net.lemma));
    if let Some(b) = net.binding(Role::Object) {
        parts.push(target_phrase(g, b.target, order));
    }
    if let Some(b) = net.binding(Role::Goal) {
        parts.push(format!("to {}", target_phrase(g, b.target, order)));
    }
    if let Some(b) = net.binding(Role::Source) {
        parts.push(format!("from {}", target_phrase(g, b.target, order)));
    }
    format!("{}.", parts.join(" "))
}

/// One segment per time stamp in chain order. Forecast sentences go to the
/// trailing prediction section.
pub fn describe(g: &NeuronGraph, order: AttributeOrder) -> DescriptionDoc {
    let mut doc = DescriptionDoc::default();
    for (pos, t) in g.time_chain().into_iter().enumerate() {
        let mut sentences = Vec::new();
        for a in g.actions_of(t) {
            let Some(net) = read_semantic_net(g, a) else { continue };
            let s = generate_sentence(g, &net, order);
            if net.kind == RelationKind::FutureTouch {
                doc.predictions.push(s);
            } else {
                sentences.push(s);
            }
        }
        doc.segments.push(Segment { slot: pos, sentences });
    }
    doc
}
