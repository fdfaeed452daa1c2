//! Comic-book (CB) data model: frames of simultaneous event labels, the
//! corpus container, validation, and the two line-oriented file formats.
//!
//! A CB is an ordered list of frames; each frame is a nonempty set of
//! event labels. An event label occurs at most once per CB, so every label
//! has a well-defined frame index.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque, case-sensitive event descriptor such as `SuRi` or `X4`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EventLabel(String);

impl EventLabel {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyLabel);
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for EventLabel {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<EventLabel> for String {
    fn from(label: EventLabel) -> Self {
        label.0
    }
}

impl FromStr for EventLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl std::borrow::Borrow<str> for EventLabel {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A nonempty set of simultaneous events, iterated in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame(BTreeSet<EventLabel>);

impl Frame {
    pub fn events(&self) -> impl Iterator<Item = &EventLabel> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }
}

/// Unvalidated CB as it appears on disk (one cb-jsonl record).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComicBook {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub frames: Vec<Vec<String>>,
}

impl RawComicBook {
    pub fn new(id: impl Into<String>, frames: Vec<Vec<String>>) -> Self {
        Self {
            id: Some(id.into()),
            frames,
        }
    }

    /// One single-event frame per label.
    pub fn from_sequence<S: AsRef<str>>(id: impl Into<String>, labels: &[S]) -> Self {
        let frames = labels.iter().map(|l| vec![l.as_ref().to_owned()]).collect();
        Self::new(id, frames)
    }
}

/// A single broken CB invariant, located by frame index where applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyCb,
    EmptyFrame {
        frame: usize,
    },
    BlankLabel {
        frame: usize,
    },
    DuplicateEvent {
        label: String,
        first_frame: usize,
        frame: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyCb => f.write_str("empty CB"),
            Self::EmptyFrame { frame } => write!(f, "frame {frame}: empty frame"),
            Self::BlankLabel { frame } => write!(f, "frame {frame}: blank event label"),
            Self::DuplicateEvent {
                label,
                first_frame,
                frame,
            } => write!(
                f,
                "frame {frame}: duplicate event {label} (first seen in frame {first_frame})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every CB invariant and reports all violations found.
pub fn validate_cb(raw: &RawComicBook) -> ValidationReport {
    let mut violations = Vec::new();
    if raw.frames.is_empty() {
        violations.push(Violation::EmptyCb);
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (frame, labels) in raw.frames.iter().enumerate() {
        if labels.is_empty() {
            violations.push(Violation::EmptyFrame { frame });
        }
        for label in labels {
            if label.trim().is_empty() {
                violations.push(Violation::BlankLabel { frame });
                continue;
            }
            if let Some(&first_frame) = seen.get(label.as_str()) {
                violations.push(Violation::DuplicateEvent {
                    label: label.clone(),
                    first_frame,
                    frame,
                });
            } else {
                seen.insert(label, frame);
            }
        }
    }
    ValidationReport { violations }
}

/// A validated comic book.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComicBook {
    id: String,
    frames: Vec<Frame>,
    index: BTreeMap<EventLabel, usize>,
}

impl ComicBook {
    pub fn new(id: impl Into<String>, frames: Vec<Vec<String>>) -> Result<Self, CorpusError> {
        Self::try_from(RawComicBook::new(id, frames))
    }

    pub fn from_sequence<S: AsRef<str>>(
        id: impl Into<String>,
        labels: &[S],
    ) -> Result<Self, CorpusError> {
        Self::try_from(RawComicBook::from_sequence(id, labels))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Number of distinct events, |E(c)|.
    pub fn event_count(&self) -> usize {
        self.index.len()
    }

    /// E(c): union of all frames.
    pub fn event_set(&self) -> BTreeSet<EventLabel> {
        self.index.keys().cloned().collect()
    }

    pub fn events(&self) -> impl Iterator<Item = (&EventLabel, usize)> {
        self.index.iter().map(|(label, &frame)| (label, frame))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// 0-based index of the frame holding `label`.
    pub fn frame_index(&self, label: &str) -> Result<usize, CorpusError> {
        self.try_frame_index(label)
            .ok_or_else(|| CorpusError::EventNotFound {
                cb: self.id.clone(),
                label: label.to_owned(),
            })
    }

    pub fn try_frame_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Events in chronological order, lexicographic within a frame.
    pub fn chronological(&self) -> impl Iterator<Item = (usize, &EventLabel)> {
        self.frames
            .iter()
            .enumerate()
            .flat_map(|(i, frame)| frame.events().map(move |e| (i, e)))
    }

    pub fn to_raw(&self) -> RawComicBook {
        RawComicBook {
            id: Some(self.id.clone()),
            frames: self
                .frames
                .iter()
                .map(|f| f.events().map(|e| e.as_str().to_owned()).collect())
                .collect(),
        }
    }
}

impl TryFrom<RawComicBook> for ComicBook {
    type Error = CorpusError;

    fn try_from(raw: RawComicBook) -> Result<Self, Self::Error> {
        let report = validate_cb(&raw);
        let id = raw.id.unwrap_or_default();
        if !report.is_ok() {
            return Err(CorpusError::InvalidCb { id, report });
        }
        let mut index = BTreeMap::new();
        let mut frames = Vec::with_capacity(raw.frames.len());
        for (i, labels) in raw.frames.into_iter().enumerate() {
            let mut set = BTreeSet::new();
            for label in labels {
                let label = EventLabel::new(label)?;
                index.insert(label.clone(), i);
                set.insert(label);
            }
            frames.push(Frame(set));
        }
        Ok(Self { id, frames, index })
    }
}

/// Ordered collection of CBs with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    cbs: Vec<ComicBook>,
}

impl Corpus {
    pub fn new(cbs: Vec<ComicBook>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for (record, cb) in cbs.iter().enumerate() {
            if !ids.insert(cb.id()) {
                return Err(CorpusError::DuplicateId {
                    line: record + 1,
                    id: cb.id().to_owned(),
                });
            }
        }
        Ok(Self { cbs })
    }

    pub fn cbs(&self) -> &[ComicBook] {
        &self.cbs
    }

    pub fn len(&self) -> usize {
        self.cbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cbs.is_empty()
    }

    /// Vocabulary size N_e: distinct labels across all CBs.
    pub fn event_vocabulary(&self) -> BTreeSet<&EventLabel> {
        self.cbs.iter().flat_map(|cb| cb.index.keys()).collect()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            cb_count: self.cbs.len(),
            n_events: self.event_vocabulary().len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub cb_count: usize,
    pub n_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CorpusFormat {
    #[serde(rename = "cb-jsonl")]
    CbJsonl,
    #[default]
    #[serde(rename = "ttt-list")]
    TttList,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cb-jsonl" => Ok(Self::CbJsonl),
            "ttt-list" => Ok(Self::TttList),
            other => Err(CorpusError::UnknownFormat(other.to_owned())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CbJsonl => "cb-jsonl",
            Self::TttList => "ttt-list",
        })
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("event label must not be blank")]
    EmptyLabel,
    #[error("CB {id:?}: {report}")]
    InvalidCb {
        id: String,
        report: ValidationReport,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("line {line}: duplicate CB id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("CB {cb:?} has no event {label:?}")]
    EventNotFound { cb: String, label: String },
    #[error("unknown corpus format {0:?} (expected cb-jsonl or ttt-list)")]
    UnknownFormat(String),
    #[error("CB {id:?} has a frame with {len} events; ttt-list needs single-event frames")]
    NotSingleEvent { id: String, len: usize },
    #[error("input is not valid UTF-8 or could not be read: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses one ttt-list record: a bracketed, comma-separated list of
/// single- or double-quoted move strings.
fn parse_move_list(line: &str) -> Result<Vec<String>, String> {
    let body = line
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| "expected a bracketed list".to_owned())?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|item| {
            let item = item.trim();
            let quote = item
                .chars()
                .next()
                .filter(|c| *c == '\'' || *c == '"')
                .ok_or_else(|| format!("expected a quoted move, found {item:?}"))?;
            item[1..]
                .strip_suffix(quote)
                .filter(|inner| !inner.contains(quote))
                .map(str::to_owned)
                .ok_or_else(|| format!("unterminated quoted move {item:?}"))
        })
        .collect()
}

/// Reads a corpus, preserving record order. Blank lines are skipped but
/// still counted for line numbers. Records without an id get their
/// zero-based ordinal.
pub fn parse_corpus(input: impl BufRead, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let mut cbs = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ordinal = cbs.len().to_string();
        let raw = match format {
            CorpusFormat::CbJsonl => {
                let mut raw: RawComicBook =
                    serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                raw.id.get_or_insert(ordinal);
                raw
            }
            CorpusFormat::TttList => {
                let moves = parse_move_list(&line).map_err(|message| CorpusError::Malformed {
                    line: line_no,
                    message,
                })?;
                RawComicBook::from_sequence(ordinal, &moves)
            }
        };
        let cb = ComicBook::try_from(raw).map_err(|e| CorpusError::AtLine {
            line: line_no,
            source: Box::new(e),
        })?;
        if !ids.insert(cb.id().to_owned()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: cb.id().to_owned(),
            });
        }
        cbs.push(cb);
    }
    Ok(Corpus { cbs })
}

pub fn parse_corpus_str(input: &str, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    parse_corpus(input.as_bytes(), format)
}

/// Writes the corpus one record per line. cb-jsonl carries ids and sorted
/// labels; ttt-list writes `['X1', 'O2', ...]` and requires single-event frames.
pub fn write_corpus(
    corpus: &Corpus,
    format: CorpusFormat,
    mut out: impl Write,
) -> Result<(), CorpusError> {
    for cb in corpus.cbs() {
        match format {
            CorpusFormat::CbJsonl => {
                let line = serde_json::to_string(&cb.to_raw())
                    .expect("string-only records always serialize");
                writeln!(out, "{line}")?;
            }
            CorpusFormat::TttList => {
                let mut moves = Vec::with_capacity(cb.frame_count());
                for frame in cb.frames() {
                    if frame.len() != 1 {
                        return Err(CorpusError::NotSingleEvent {
                            id: cb.id().to_owned(),
                            len: frame.len(),
                        });
                    }
                    moves.extend(frame.events().map(|e| format!("'{e}'")));
                }
                writeln!(out, "[{}]", moves.join(", "))?;
            }
        }
    }
    Ok(())
}

pub fn corpus_to_string(corpus: &Corpus, format: CorpusFormat) -> Result<String, CorpusError> {
    let mut buf = Vec::new();
    write_corpus(corpus, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("writer emits UTF-8"))
}
