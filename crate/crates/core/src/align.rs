//! Rule-based alignment between a word-level (student) tokenization and a
//! subword (teacher) tokenization of the same context.
//!
//! Tokens are compared after [`normalize_token`]. The scan walks both
//! sequences left to right. When the current student and teacher strings
//! differ, whichever side is the shorter prefix of the other absorbs its next
//! token, until the two concatenations are equal. Each student token in the
//! resulting group is mapped to the first teacher token of the matched teacher
//! group; the remaining teacher tokens of the group are dropped.
//!
//! ```text
//! student   nuclear  astrophysics        .
//! teacher   nuclear  astro  ##physics    .
//! mapping   0        1                   3
//! ```

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::AlignmentError;
use crate::loss::SpanLogits;
use crate::error::{Error, Result};

/// Maximum tokenized input length used by the teacher model.
pub const DEFAULT_MAX_TOKENS: usize = 384;

const CONTINUATION_PREFIX: &str = "##";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Set when the tokenizer marked this token as a sub-word continuation.
    #[serde(rename = "cont", default)]
    pub is_continuation: bool,
}

impl Token {
    pub fn word(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            is_continuation: false,
        }
    }

    /// Builds a token from WordPiece surface form, reading the `##` marker.
    pub fn from_wordpiece(text: &str) -> Self {
        match text.strip_prefix(CONTINUATION_PREFIX) {
            Some(rest) if !rest.is_empty() => Token {
                text: text.to_string(),
                is_continuation: true,
            },
            _ => Token::word(text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenSource {
    Student,
    Teacher,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    pub source: TokenSource,
}

impl TokenSequence {
    pub fn new(source: TokenSource, tokens: Vec<Token>) -> Result<Self> {
        if let Some(pos) = tokens.iter().position(|t| t.text.is_empty()) {
            return Err(Error::contract(format!("empty token text at position {pos}")));
        }
        if tokens.first().is_some_and(|t| t.is_continuation) {
            return Err(Error::contract("sequence starts with a continuation token"));
        }
        Ok(TokenSequence { tokens, source })
    }

    pub fn student<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        Self::new(
            TokenSource::Student,
            words.iter().map(|w| Token::word(w.as_ref())).collect(),
        )
    }

    /// Teacher sequence from WordPiece strings (`##` marks continuations).
    pub fn teacher<S: AsRef<str>>(pieces: &[S]) -> Result<Self> {
        Self::new(
            TokenSource::Teacher,
            pieces.iter().map(|p| Token::from_wordpiece(p.as_ref())).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn normalized(&self) -> Vec<String> {
        self.tokens.iter().map(normalize_token).collect()
    }
}

/// Comparison key for a token: continuation marker stripped, lower-cased,
/// folded to ASCII (compatibility decomposition, then every non-ASCII
/// character dropped). Whitespace is dropped as well.
pub fn normalize_token(tok: &Token) -> String {
    let text = if tok.is_continuation {
        tok.text.strip_prefix(CONTINUATION_PREFIX).unwrap_or(&tok.text)
    } else {
        tok.text.as_str()
    };
    text.nfkd()
        .filter(|c| c.is_ascii() && !c.is_ascii_whitespace())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Student-to-teacher position map produced by [`align`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMap {
    /// Teacher index for each student position; non-decreasing.
    pub mapping: Vec<usize>,
    /// `false` for student positions that only replicate a group leader's
    /// logits (all but the first student token of a many-to-one group).
    pub leader: Vec<bool>,
    pub teacher_len: usize,
}

impl AlignmentMap {
    pub fn identity(len: usize) -> Self {
        AlignmentMap {
            mapping: (0..len).collect(),
            leader: vec![true; len],
            teacher_len: len,
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Matched groups as (student range, teacher range) pairs.
    pub fn groups(&self) -> Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.mapping.len() {
            let t = self.mapping[start];
            let end = start
                + self.mapping[start..]
                    .iter()
                    .take_while(|&&m| m == t)
                    .count();
            let t_end = self.mapping.get(end).copied().unwrap_or(self.teacher_len);
            out.push((start..end, t..t_end));
            start = end;
        }
        out
    }
}

fn fail(student: usize, teacher: usize, reason: impl Into<String>) -> AlignmentError {
    AlignmentError {
        student,
        teacher,
        reason: reason.into(),
    }
}

/// Aligns `student` onto `teacher`; see the module docs for the procedure.
pub fn align(student: &TokenSequence, teacher: &TokenSequence) -> Result<AlignmentMap, AlignmentError> {
    let s_norm = student.normalized();
    let t_norm = teacher.normalized();
    let (ns, nt) = (s_norm.len(), t_norm.len());
    if ns == 0 || nt == 0 {
        return Err(fail(0, 0, "empty token sequence"));
    }

    let mut mapping = Vec::with_capacity(ns);
    let mut leader = Vec::with_capacity(ns);
    let (mut i, mut j) = (0, 0);

    while i < ns && j < nt {
        // a group never starts on a teacher token with no characters
        if !s_norm[i].is_empty() && t_norm[j].is_empty() {
            j += 1;
            continue;
        }
        let (group_i, group_j) = (i, j);
        let mut s_acc = s_norm[i].clone();
        let mut t_acc = t_norm[j].clone();
        i += 1;
        j += 1;
        while s_acc != t_acc {
            if s_acc.len() < t_acc.len() {
                if !t_acc.starts_with(&s_acc) {
                    return Err(fail(group_i, group_j, format!("{s_acc:?} diverges from {t_acc:?}")));
                }
                if i == ns {
                    return Err(fail(i, j, "student sequence exhausted inside a group"));
                }
                s_acc.push_str(&s_norm[i]);
                i += 1;
            } else {
                if !s_acc.starts_with(&t_acc) {
                    return Err(fail(group_i, group_j, format!("{s_acc:?} diverges from {t_acc:?}")));
                }
                if j == nt {
                    return Err(fail(i, j, "teacher sequence exhausted inside a group"));
                }
                t_acc.push_str(&t_norm[j]);
                j += 1;
            }
        }
        for pos in group_i..i {
            mapping.push(group_j);
            leader.push(pos == group_i);
        }
    }

    // Only tokens that normalize to nothing may be left over.
    if let Some(k) = (j..nt).find(|&k| !t_norm[k].is_empty()) {
        return Err(fail(i, k, "student sequence exhausted before teacher"));
    }
    if i < ns {
        if let Some(k) = (i..ns).find(|&k| !s_norm[k].is_empty()) {
            return Err(fail(k, j, "teacher sequence exhausted before student"));
        }
        let last = *mapping.last().ok_or_else(|| fail(i, j, "no characters to align"))?;
        for _ in i..ns {
            mapping.push(last);
            leader.push(false);
        }
    }

    Ok(AlignmentMap {
        mapping,
        leader,
        teacher_len: nt,
    })
}

/// Rejects sequences longer than the model input cap.
pub fn check_token_cap(seq: &TokenSequence, max_tokens: usize) -> Result<()> {
    if seq.len() > max_tokens {
        return Err(Error::argument(format!(
            "{:?} sequence has {} tokens, above the cap of {max_tokens}",
            seq.source,
            seq.len()
        )));
    }
    Ok(())
}

/// Gathers teacher start/end logits onto student positions.
pub fn project_teacher_logits(map: &AlignmentMap, teacher: &SpanLogits) -> Result<SpanLogits> {
    let n = teacher.len();
    if let Some((pos, &idx)) = map.mapping.iter().enumerate().find(|(_, &idx)| idx >= n) {
        return Err(Error::contract(format!(
            "student position {pos} maps to teacher index {idx}, but teacher logits have length {n}"
        )));
    }
    let gather = |v: &[f64]| map.mapping.iter().map(|&idx| v[idx]).collect::<Vec<_>>();
    SpanLogits::new(gather(teacher.start()), gather(teacher.end()))
}
