use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PREDICTION_HEADER: &str = "== prediction ==";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Position along the time-stamp chain, from 0.
    pub slot: usize,
    pub sentences: Vec<String>,
}

/// Slot-ordered sentences plus the trailing forecast section.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionDoc {
    pub segments: Vec<Segment>,
    pub predictions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocParseError {
    #[error("line {line}: sentence before any section header")]
    Orphan { line: usize },
    #[error("line {line}: expected slot {expected}, found `{found}`")]
    SlotOrder { line: usize, expected: usize, found: String },
    #[error("line {line}: time slot header after the prediction section")]
    AfterPrediction { line: usize },
    #[error("line {line}: sentence must be non-empty and end with a period")]
    BadSentence { line: usize },
}

fn slot_header(k: usize) -> String {
    format!("== time slot {k} ==")
}

impl DescriptionDoc {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.predictions.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        self.segments
            .iter()
            .flat_map(|s| s.sentences.iter())
            .chain(self.predictions.iter())
            .map(String::as_str)
    }

    /// One sentence per line under `== time slot k ==` headers. The
    /// prediction section appears only when it has sentences.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            let _ = writeln!(out, "{}", slot_header(seg.slot));
            for s in &seg.sentences {
                let _ = writeln!(out, "{s}");
            }
        }
        if !self.predictions.is_empty() {
            let _ = writeln!(out, "{PREDICTION_HEADER}");
            for s in &self.predictions {
                let _ = writeln!(out, "{s}");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DocParseError> {
        enum Section {
            None,
            Slot,
            Prediction,
        }
        let mut doc = DescriptionDoc::default();
        let mut section = Section::None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("== time slot ") {
                if matches!(section, Section::Prediction) {
                    return Err(DocParseError::AfterPrediction { line: line_no });
                }
                let expected = doc.segments.len();
                let k = rest
                    .strip_suffix(" ==")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| *k == expected)
                    .ok_or_else(|| DocParseError::SlotOrder {
                        line: line_no,
                        expected,
                        found: line.to_string(),
                    })?;
                doc.segments.push(Segment { slot: k, sentences: Vec::new() });
                section = Section::Slot;
                continue;
            }
            if line == PREDICTION_HEADER && !matches!(section, Section::Prediction) {
                section = Section::Prediction;
                continue;
            }
            if line.len() < 2 || !line.ends_with('.') || line.starts_with("==") {
                return Err(DocParseError::BadSentence { line: line_no });
            }
            match section {
                Section::None => return Err(DocParseError::Orphan { line: line_no }),
                Section::Slot => doc
                    .segments
                    .last_mut()
                    .expect("slot section has a segment")
                    .sentences
                    .push(line.to_string()),
                Section::Prediction => doc.predictions.push(line.to_string()),
            }
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DescriptionDoc {
        DescriptionDoc {
            segments: vec![
                Segment { slot: 0, sentences: vec!["the cube ins_entity_1 move.".into()] },
                Segment { slot: 1, sentences: vec![] },
            ],
            predictions: vec!["the cube ins_entity_1 will touch ins_entity_2.".into()],
        }
    }

    #[test]
    fn render_layout() {
        assert_eq!(
            sample().render(),
            "== time slot 0 ==\nthe cube ins_entity_1 move.\n== time slot 1 ==\n== prediction ==\nthe cube ins_entity_1 will touch ins_entity_2.\n"
        );
    }

    #[test]
    fn parse_inverts_render() {
        let doc = sample();
        assert_eq!(DescriptionDoc::parse(&doc.render()).unwrap(), doc);
        assert_eq!(DescriptionDoc::parse("").unwrap(), DescriptionDoc::default());
    }

    #[test]
    fn parse_rejects_malformed_text() {
        assert!(matches!(DescriptionDoc::parse("a b."), Err(DocParseError::Orphan { .. })));
        assert!(matches!(
            DescriptionDoc::parse("== time slot 1 ==\n"),
            Err(DocParseError::SlotOrder { .. })
        ));
        assert!(matches!(
            DescriptionDoc::parse("== prediction ==\nx y.\n== time slot 0 ==\n"),
            Err(DocParseError::AfterPrediction { .. })
        ));
        assert!(matches!(
            DescriptionDoc::parse("== time slot 0 ==\nno period\n"),
            Err(DocParseError::BadSentence { .. })
        ));
    }
}
