//! SQuAD v1.1 dataset loading and answer normalization.
//!
//! Adversarial SQuAD files (ADDSENT / ADDONESENT) share the schema and load
//! through the same path.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QADataset {
    #[serde(default)]
    pub version: String,
    #[serde(rename = "data")]
    pub articles: Vec<Article>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    #[serde(default)]
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub context: String,
    pub qas: Vec<QAExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    pub answers: Vec<GoldAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub text: String,
    /// Character (not byte) offset into the paragraph context.
    pub answer_start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DatasetStats {
    pub articles: usize,
    pub paragraphs: usize,
    pub questions: usize,
}

impl QADataset {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::parse(Path::new("<memory>"), text)
    }

    fn parse(path: &Path, text: &str) -> Result<Self> {
        let ds: QADataset = io::parse_json(path, text)?;
        ds.validate()?;
        Ok(ds)
    }

    /// Checks id uniqueness, presence of gold answers and answer offsets.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for para in self.articles.iter().flat_map(|a| &a.paragraphs) {
            // answer_start counts chars; index once per paragraph
            let chars: Vec<char> = para.context.chars().collect();
            for qa in &para.qas {
                if !seen.insert(qa.id.as_str()) {
                    return Err(Error::Validation {
                        id: qa.id.clone(),
                        message: "duplicate question id".into(),
                    });
                }
                if qa.answers.is_empty() {
                    return Err(Error::Validation {
                        id: qa.id.clone(),
                        message: "question has no gold answers".into(),
                    });
                }
                for ans in &qa.answers {
                    let len = ans.text.chars().count();
                    let ok = ans.answer_start + len <= chars.len()
                        && chars[ans.answer_start..ans.answer_start + len]
                            .iter()
                            .copied()
                            .eq(ans.text.chars());
                    if !ok {
                        return Err(Error::Validation {
                            id: qa.id.clone(),
                            message: format!(
                                "answer {:?} not found at character offset {}",
                                ans.text, ans.answer_start
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            articles: self.articles.len(),
            paragraphs: self.articles.iter().map(|a| a.paragraphs.len()).sum(),
            questions: self.questions().count(),
        }
    }

    pub fn questions(&self) -> impl Iterator<Item = &QAExample> {
        self.articles
            .iter()
            .flat_map(|a| &a.paragraphs)
            .flat_map(|p| &p.qas)
    }

    /// Question ids in file order.
    pub fn ids(&self) -> Vec<String> {
        self.questions().map(|q| q.id.clone()).collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes to JSON")
    }
}

pub fn load_squad(path: impl AsRef<Path>) -> Result<QADataset> {
    let path = path.as_ref();
    let text = io::read_to_string(path)?;
    QADataset::parse(path, &text)
}

static ARTICLES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(a|an|the)\b").unwrap());
static PUNCTUATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}!-/:-@\[-`{-~]").unwrap());

/// SQuAD answer normalization: lower-case, strip punctuation, drop the
/// articles a/an/the and collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct = PUNCTUATION.replace_all(&lower, "");
    let no_articles = ARTICLES.replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}
