//! End-to-end run over one video: ingest, relations, fire and wire,
//! language and prediction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::ingest::{ingest, IngestDiagnostics, IngestError, ObjectTrack, VideoDocument};
use crate::language::{build_semantic_net, describe, DescriptionDoc, LanguageError};
use crate::network::{
    bind_time, fire_wire_how, fire_wire_what, load_nature_design, shuffle_time, Ablation, NetworkError,
    NeuronGraph,
};
use crate::predict::{forecast_slot, TouchForecast};
use crate::relations::{detect_all, DiagnosticKind, RelationKind, RelationReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Language(#[from] LanguageError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub ablation: Ablation,
    pub shuffle_seed: Option<u64>,
}

/// Per-stage counts for the run manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ingest: IngestDiagnostics,
    pub dropped_stationary_tracks: usize,
    pub slots: usize,
    pub events: BTreeMap<String, usize>,
    pub relation_diagnostics: BTreeMap<String, usize>,
    pub forecasts: usize,
    pub neurons: usize,
    pub edges: usize,
    pub sentences: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// The configuration the run used, with the document's frame rate.
    pub config: EngineConfig,
    pub tracks: Vec<ObjectTrack>,
    /// Detected events after ablation, with forecasts in the last slot.
    pub report: RelationReport,
    pub forecasts: Vec<TouchForecast>,
    pub graph: NeuronGraph,
    pub description: DescriptionDoc,
    pub diagnostics: Diagnostics,
}

fn diagnostic_name(kind: DiagnosticKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{kind:?}"))
}

/// Tracks classified `rest` in every slot they appear in.
fn stationary_tracks(report: &RelationReport) -> BTreeSet<u32> {
    let mut seen = BTreeMap::<u32, bool>::new();
    for e in report.events().filter(|e| e.kind.is_kinematic()) {
        let still = seen.entry(e.participants[0]).or_insert(true);
        *still &= e.kind == RelationKind::Rest;
    }
    seen.into_iter().filter_map(|(id, still)| still.then_some(id)).collect()
}

/// Runs every stage on a video document.
///
/// The document's frame rate replaces `cfg.frames_per_second`.
pub fn run(doc: &VideoDocument, cfg: &EngineConfig, opts: &RunOptions) -> Result<PipelineOutput, PipelineError> {
    let cfg = EngineConfig {
        frames_per_second: doc.fps,
        ..cfg.clone()
    };
    let ingested = ingest(doc, &cfg)?;
    let mut diagnostics = Diagnostics {
        ingest: ingested.diagnostics.clone(),
        ..Diagnostics::default()
    };
    let mut tracks = ingested.tracks;
    let mut report = detect_all(&tracks, ingested.frame_count, &cfg);
    if opts.ablation.drops_stationary() {
        let still = stationary_tracks(&report);
        if !still.is_empty() {
            diagnostics.dropped_stationary_tracks = still.len();
            tracks.retain(|t| !still.contains(&t.track_id));
            report = detect_all(&tracks, ingested.frame_count, &cfg);
        }
    }
    for slot in &mut report.slots {
        slot.events.retain(|e| !opts.ablation.removes(e.kind));
    }

    let mut forecasts = Vec::new();
    if !opts.ablation.removes(RelationKind::FutureTouch) {
        if let Some(last) = report.slots.last_mut() {
            let horizon = cfg.after_video_horizon_slots * cfg.slot_duration_s;
            for (f, ev) in forecast_slot(&tracks, &last.slot, cfg.frames_per_second, horizon, &cfg) {
                forecasts.push(f);
                last.events.push(ev);
            }
        }
    }

    let mut graph = load_nature_design(&cfg, &opts.ablation);
    let by_id: BTreeMap<u32, &ObjectTrack> = tracks.iter().map(|t| (t.track_id, t)).collect();
    for slot in &report.slots {
        let mut stamps = Vec::with_capacity(slot.events.len());
        for ev in &slot.events {
            let stamp = fire_wire_how(&mut graph, ev, &cfg)?;
            for p in &ev.participants {
                let track = by_id.get(p).ok_or(NetworkError::MissingEntity(*p))?;
                fire_wire_what(&mut graph, track, &cfg)?;
            }
            build_semantic_net(&mut graph, stamp, ev, &cfg)?;
            stamps.push(stamp);
        }
        bind_time(&mut graph, slot.slot.slot_index, &stamps, &cfg)?;
        graph.close_slot();
    }
    if let Some(seed) = opts.shuffle_seed {
        graph = shuffle_time(&graph, seed);
    }
    let description = describe(&graph, cfg.attribute_order);

    diagnostics.slots = report.slots.len();
    for e in report.events() {
        *diagnostics.events.entry(e.kind.to_string()).or_default() += 1;
    }
    for d in &report.diagnostics {
        *diagnostics.relation_diagnostics.entry(diagnostic_name(d.kind)).or_default() += 1;
    }
    diagnostics.forecasts = forecasts.len();
    diagnostics.neurons = graph.len();
    diagnostics.edges = graph.edge_count();
    diagnostics.sentences = description.sentences().count();

    Ok(PipelineOutput {
        config: cfg,
        tracks,
        report,
        forecasts,
        graph,
        description,
        diagnostics,
    })
}
