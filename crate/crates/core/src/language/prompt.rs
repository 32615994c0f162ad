use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DescriptionDoc;

const TASK_DEFINITION: &str = include_str!("../../assets/prompts/task_definition.txt");
const ALIGN_PREDICTIVE: &str = include_str!("../../assets/prompts/alignment_predictive.txt");
const ALIGN_COUNTERFACTUAL: &str = include_str!("../../assets/prompts/alignment_counterfactual.txt");
const ALIGN_DESCRIPTIVE: &str = include_str!("../../assets/prompts/alignment_descriptive.txt");
const ALIGN_EXPLANATORY: &str = include_str!("../../assets/prompts/alignment_explanatory.txt");
const FORMAT_CHOICE: &str = include_str!("../../assets/prompts/format_choice.txt");
const FORMAT_OPEN: &str = include_str!("../../assets/prompts/format_open.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QType {
    Predictive,
    Counterfactual,
    Descriptive,
    Explanatory,
}

impl QType {
    pub const ALL: [QType; 4] = [
        QType::Predictive,
        QType::Counterfactual,
        QType::Descriptive,
        QType::Explanatory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QType::Predictive => "predictive",
            QType::Counterfactual => "counterfactual",
            QType::Descriptive => "descriptive",
            QType::Explanatory => "explanatory",
        }
    }

    pub fn alignments(self) -> &'static str {
        match self {
            QType::Predictive => ALIGN_PREDICTIVE,
            QType::Counterfactual => ALIGN_COUNTERFACTUAL,
            QType::Descriptive => ALIGN_DESCRIPTIVE,
            QType::Explanatory => ALIGN_EXPLANATORY,
        }
    }
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown question type `{0}`")]
pub struct UnknownQType(pub String);

impl FromStr for QType {
    type Err = UnknownQType;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QType::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| UnknownQType(s.to_string()))
    }
}

/// A question as read from `question.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub choices: Vec<String>,
}

impl Question {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn section(out: &mut String, title: &str, body: &str) {
    out.push_str("## ");
    out.push_str(title);
    out.push('\n');
    out.push_str(body.trim_end());
    out.push_str("\n\n");
}

/// Task definition, description, question, choices, alignments and output
/// format, in that order.
pub fn assemble_prompt(doc: &DescriptionDoc, question: &Question, qtype: QType) -> String {
    let mut out = String::new();
    section(&mut out, "Task Definition", TASK_DEFINITION);
    section(&mut out, "Video Description Text", &doc.render());
    section(&mut out, "Question Text", &question.question);
    let choices: Vec<String> = question
        .choices
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}: {c}", i + 1))
        .collect();
    section(&mut out, "Choice Text", &choices.join("\n"));
    section(&mut out, "Critical Alignments", qtype.alignments());
    let format = if question.choices.is_empty() { FORMAT_OPEN } else { FORMAT_CHOICE };
    section(&mut out, "Output Format", format);
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}
