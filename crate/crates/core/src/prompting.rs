//! Prompt construction and free-text answer matching.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::QuestionRecord;
use crate::error::{Error, Result};

/// Prepended when the segmentation overlay is on.
pub const SOM_INSTRUCTION: &str =
    "Focus on the last frame to make your prediction and use the rest of the video to infer the context.";

pub const BASE_QUESTION: &str =
    "What object will the person interact with next, ignoring ongoing interactions?";

/// Appended when the gaze trail is on.
pub const GAZE_INSTRUCTION: &str = "Follow the user's gaze trajectory closely: the red circles indicate where the user has most recently looked, and the connected path shows the sequence of gaze points across the most recent frames. The objects that have just been fixated are very likely to include the one the user will interact with next. Use this visual cue to make your prediction.";

/// Which visual cues are enabled for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StrategyFlags {
    pub som: bool,
    pub gaze: bool,
}

impl StrategyFlags {
    pub const VLLM_ONLY: Self = Self { som: false, gaze: false };
    pub const SOM: Self = Self { som: true, gaze: false };
    pub const GAZE: Self = Self { som: false, gaze: true };
    pub const SOM_GAZE: Self = Self { som: true, gaze: true };

    /// The four strategies in table row order.
    pub const ALL: [Self; 4] = [Self::VLLM_ONLY, Self::SOM, Self::GAZE, Self::SOM_GAZE];

    pub fn slug(self) -> &'static str {
        match (self.som, self.gaze) {
            (false, false) => "vllm_only",
            (true, false) => "som",
            (false, true) => "gaze",
            (true, true) => "som_gaze",
        }
    }

    pub fn label(self) -> &'static str {
        match (self.som, self.gaze) {
            (false, false) => "VLLM only",
            (true, false) => "SoM",
            (false, true) => "Gaze",
            (true, true) => "SoM + Gaze",
        }
    }

    /// Position in [`StrategyFlags::ALL`].
    pub fn row(self) -> usize {
        self.som as usize + 2 * self.gaze as usize
    }
}

impl fmt::Display for StrategyFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for StrategyFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s
            .to_ascii_lowercase()
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|part| !part.is_empty())
            .collect::<Vec<_>>()
            .join("_");
        match key.as_str() {
            "vllm_only" | "vllm" | "none" => Ok(Self::VLLM_ONLY),
            "som" => Ok(Self::SOM),
            "gaze" => Ok(Self::GAZE),
            "som_gaze" => Ok(Self::SOM_GAZE),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?}; expected vllm_only, som, gaze or som_gaze"
            ))),
        }
    }
}

impl TryFrom<String> for StrategyFlags {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyFlags> for String {
    fn from(s: StrategyFlags) -> String {
        s.slug().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub candidate_order: Vec<String>,
}

/// Builds the prompt: optional overlay instruction, the question, one
/// candidate per line in dataset order, optional gaze instruction.
pub fn build_prompt(record: &QuestionRecord, strategy: StrategyFlags) -> PromptBundle {
    let mut blocks = Vec::with_capacity(3);
    if strategy.som {
        blocks.push(SOM_INSTRUCTION.to_string());
    }
    let mut body = record.question_text.clone();
    for candidate in &record.candidates {
        body.push('\n');
        body.push_str(candidate);
    }
    blocks.push(body);
    if strategy.gaze {
        blocks.push(GAZE_INSTRUCTION.to_string());
    }
    PromptBundle {
        text: blocks.join("\n\n"),
        candidate_order: record.candidates.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Choice(usize),
    Abstain,
}

impl Answer {
    pub fn index(self) -> Option<usize> {
        match self {
            Answer::Choice(i) => Some(i),
            Answer::Abstain => None,
        }
    }
}

const ARTICLES: [&str; 3] = ["the", "a", "an"];

/// Lowercase, punctuation to spaces, collapsed whitespace, no leading article.
pub fn normalize(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    let mut words: Vec<&str> = cleaned.split_whitespace().collect();
    if words.len() > 1 && ARTICLES.contains(&words[0]) {
        words.remove(0);
    }
    words.join(" ")
}

/// Maps model output to a candidate index.
///
/// A candidate matches when its normalized form occurs in the normalized text
/// on word boundaries. The longest matching candidate wins; ties go to the
/// lower index.
pub fn parse_answer(raw_text: &str, candidates: &[String]) -> Answer {
    let haystack = format!(" {} ", normalize(raw_text));
    let mut best: Option<(usize, usize)> = None;
    for (i, candidate) in candidates.iter().enumerate() {
        let needle = normalize(candidate);
        if needle.is_empty() || !haystack.contains(&format!(" {needle} ")) {
            continue;
        }
        let len = needle.chars().count();
        if best.is_none_or(|(_, best_len)| len > best_len) {
            best = Some((i, len));
        }
    }
    best.map_or(Answer::Abstain, |(i, _)| Answer::Choice(i))
}
