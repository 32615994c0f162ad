//! How pathway, What pathway and temporal binding.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nature::{attribute_category, direction_neuron, relation_neuron, AttributeKind, ATTR};
use super::{entity_name, NetworkError, NeuronGraph, NeuronId, NeuronKind};
use crate::config::EngineConfig;
use crate::ingest::ObjectTrack;
use crate::relations::{RelationEvent, RelationKind};

/// Fires the relation neuron and the participants' entity instances and
/// wires a fresh action stamp to them. A direction change also fires its
/// direction attribute and records the label as a concept instance pointed
/// to by both the attribute and the stamp.
pub fn fire_wire_how(
    g: &mut NeuronGraph,
    event: &RelationEvent,
    cfg: &EngineConfig,
) -> Result<NeuronId, NetworkError> {
    if event.slot_index != g.slot_cursor {
        return Err(NetworkError::SlotMismatch {
            cursor: g.slot_cursor,
            event: event.slot_index,
        });
    }
    let base = cfg.neuron_activation_threshold;
    let rel = g
        .id_of(&relation_neuron(event.kind))
        .ok_or_else(|| NetworkError::UnknownRelationKind(event.kind.to_string()))?;
    g.stimulate(rel)?;

    let entities: Vec<NeuronId> = event
        .participants
        .iter()
        .map(|p| g.named(&entity_name(*p), NeuronKind::EntityInstance, base))
        .collect();
    for e in &entities {
        g.stimulate(*e)?;
    }

    let stamp = g.create(NeuronKind::ActionStamp, base);
    g.connect(rel, stamp);
    for e in &entities {
        g.connect(stamp, *e);
    }
    g.stimulate(stamp)?;

    if event.kind == RelationKind::ChangeDirection {
        let label = event
            .direction_label
            .ok_or_else(|| NetworkError::Malformed("change_direction without a label".into()))?;
        let attr = g.require(&direction_neuron(label))?;
        g.stimulate(attr)?;
        let concept = g.create(NeuronKind::ConceptInstance, base);
        g.connect(attr, concept);
        g.connect(stamp, concept);
        let lex = g.named(&format!("_{}", label.as_str()), NeuronKind::Lexical, base);
        g.connect(concept, lex);
        g.stimulate(concept)?;
    }
    Ok(stamp)
}

/// Binds a track's texture, color and shape concept instances under one
/// entity stamp. Calling it again for the same track changes nothing.
pub fn fire_wire_what(
    g: &mut NeuronGraph,
    track: &ObjectTrack,
    cfg: &EngineConfig,
) -> Result<NeuronId, NetworkError> {
    let entity = g
        .entity(track.track_id)
        .ok_or(NetworkError::MissingEntity(track.track_id))?;
    if let Some(stamp) = g.successor_of_kind(entity, NeuronKind::EntityStamp) {
        return Ok(stamp);
    }
    let base = cfg.neuron_activation_threshold;
    let attr = g.require(ATTR)?;
    g.stimulate(attr)?;
    let stamp = g.create(NeuronKind::EntityStamp, base);
    g.connect(entity, stamp);
    for kind in AttributeKind::ALL {
        let value = match kind {
            AttributeKind::Texture => &track.texture_label,
            AttributeKind::Color => &track.color_label,
            AttributeKind::Shape => &track.shape_label,
        };
        let category = g.require(&attribute_category(kind))?;
        let concept = g.create(NeuronKind::ConceptInstance, base);
        g.connect(category, concept);
        g.connect(stamp, concept);
        let lex = g.named(&format!("_{value}"), NeuronKind::Lexical, base);
        g.connect(concept, lex);
        g.stimulate(concept)?;
    }
    g.stimulate(stamp)?;
    Ok(stamp)
}

/// Creates the slot's time stamp, chains it after the previous one and
/// binds the slot's action stamps to it. Slots must be bound in order.
pub fn bind_time(
    g: &mut NeuronGraph,
    slot_index: usize,
    action_stamps: &[NeuronId],
    cfg: &EngineConfig,
) -> Result<NeuronId, NetworkError> {
    let expected = g.last_bound_slot.map_or(0, |s| s + 1);
    if slot_index != expected {
        return Err(NetworkError::OutOfOrderSlot {
            expected,
            got: slot_index,
        });
    }
    let prev = g.time_chain().last().copied();
    let t = g.create(NeuronKind::TimeStamp, cfg.neuron_activation_threshold);
    if let Some(p) = prev {
        g.connect(p, t);
    }
    for a in action_stamps {
        g.connect(t, *a);
    }
    g.stimulate(t)?;
    g.last_bound_slot = Some(slot_index);
    Ok(t)
}

/// Re-links the time-stamp chain in a seeded random order. Action stamps
/// stay with their time stamps.
pub fn shuffle_time(g: &NeuronGraph, seed: u64) -> NeuronGraph {
    let mut out = g.clone();
    let chain = g.time_chain();
    if chain.len() < 2 {
        return out;
    }
    let mut order = chain.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for w in chain.windows(2) {
        out.disconnect(w[0], w[1]);
    }
    for w in order.windows(2) {
        out.connect(w[0], w[1]);
    }
    out
}
