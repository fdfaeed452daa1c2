//! Per-CB event DAGs, arrow repetition counts over a library, and the
//! high-frequency-arrows DAG obtained by thresholding those counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ComicBook, EventLabel};
use crate::time_order::CbLib;

pub type Arrow = (EventLabel, EventLabel);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DagError {
    #[error("arrow {tail} -> {head} does not go forward in time (internal invariant violated)")]
    BackwardArrow { tail: String, head: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

/// DAG of one CB: every event receives arrows from all events in the
/// `t_mem` frames immediately before its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDag {
    pub cb_id: String,
    /// (label, frame index) in chronological order.
    pub nodes: Vec<(EventLabel, usize)>,
    pub arrows: BTreeSet<Arrow>,
    pub t_mem: usize,
}

/// # Panics
/// If `t_mem` is zero.
pub fn build_event_dag(cb: &ComicBook, t_mem: usize) -> EventDag {
    assert!(t_mem >= 1, "memory time must be at least 1");
    let frames = cb.frames();
    let mut arrows = BTreeSet::new();
    for (i, frame) in frames.iter().enumerate() {
        let window = &frames[i.saturating_sub(t_mem)..i];
        for head in frame.events() {
            for tail in window.iter().flat_map(|f| f.events()) {
                arrows.insert((tail.clone(), head.clone()));
            }
        }
    }
    EventDag {
        cb_id: cb.id().to_owned(),
        nodes: cb.chronological().map(|(i, e)| (e.clone(), i)).collect(),
        arrows,
        t_mem,
    }
}

/// Number of member DAGs containing each arrow (label pairs only).
pub fn count_arrows(lib: &CbLib, t_mem: usize) -> BTreeMap<Arrow, usize> {
    let mut counts = BTreeMap::new();
    for member in lib.members() {
        for arrow in build_event_dag(member, t_mem).arrows {
            *counts.entry(arrow).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArrowCount {
    pub tail: EventLabel,
    pub head: EventLabel,
    pub count: usize,
}

/// High-frequency-arrows DAG of one library. Nodes are the events of the
/// library's maximal CB; arrows are those repeated at least `n_art` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HfaDag {
    pub lib_index: usize,
    /// (label, c_max frame index), sorted by frame then label.
    pub nodes: Vec<(EventLabel, usize)>,
    pub kept_arrows: Vec<ArrowCount>,
    pub n_art: usize,
    pub t_mem: usize,
}

impl HfaDag {
    pub fn frame_of(&self, label: &str) -> Option<usize> {
        self.nodes
            .iter()
            .find(|(l, _)| l.as_str() == label)
            .map(|(_, f)| *f)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.frame_of(label).is_some()
    }

    pub fn node_labels(&self) -> impl Iterator<Item = &EventLabel> {
        self.nodes.iter().map(|(l, _)| l)
    }

    pub fn arrow_set(&self) -> BTreeSet<Arrow> {
        self.kept_arrows
            .iter()
            .map(|a| (a.tail.clone(), a.head.clone()))
            .collect()
    }

    /// Unordered parents of `label`.
    pub fn parents_of(&self, label: &str) -> Vec<&EventLabel> {
        self.kept_arrows
            .iter()
            .filter(|a| a.head.as_str() == label)
            .map(|a| &a.tail)
            .collect()
    }

    pub fn without_incoming(&self, label: &str) -> HfaDag {
        let mut out = self.clone();
        out.kept_arrows.retain(|a| a.head.as_str() != label);
        out
    }
}

/// # Panics
/// If `t_mem` or `n_art` is zero.
pub fn build_hfa(lib: &CbLib, t_mem: usize, n_art: usize) -> HfaDag {
    assert!(n_art >= 1, "arrow repetition threshold must be at least 1");
    let kept_arrows = count_arrows(lib, t_mem)
        .into_iter()
        .filter(|(_, count)| *count >= n_art)
        .map(|((tail, head), count)| ArrowCount { tail, head, count })
        .collect();
    HfaDag {
        lib_index: lib.index(),
        nodes: lib
            .c_max()
            .chronological()
            .map(|(i, e)| (e.clone(), i))
            .collect(),
        kept_arrows,
        n_art,
        t_mem,
    }
}

/// Nodes by c_max frame ascending, lexicographic within a frame. Fails if
/// any arrow would not point forward in that order.
pub fn topo_order(hfa: &HfaDag) -> Result<Vec<EventLabel>, DagError> {
    let mut nodes = hfa.nodes.clone();
    nodes.sort_by(|(la, fa), (lb, fb)| fa.cmp(fb).then_with(|| la.cmp(lb)));
    let position: BTreeMap<&EventLabel, usize> =
        nodes.iter().enumerate().map(|(i, (l, _))| (l, i)).collect();
    for a in &hfa.kept_arrows {
        let tail = position
            .get(&a.tail)
            .ok_or_else(|| DagError::UnknownNode(a.tail.to_string()))?;
        let head = position
            .get(&a.head)
            .ok_or_else(|| DagError::UnknownNode(a.head.to_string()))?;
        let (tf, hf) = (nodes[*tail].1, nodes[*head].1);
        if tf >= hf {
            return Err(DagError::BackwardArrow {
                tail: a.tail.to_string(),
                head: a.head.to_string(),
            });
        }
    }
    Ok(nodes.into_iter().map(|(l, _)| l).collect())
}

fn dot_id(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph with every edge labelled by its repetition count.
pub fn hfa_to_dot(hfa: &HfaDag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph hfa_{} {{", hfa.lib_index);
    let _ = writeln!(out, "  // t_mem={} n_art={}", hfa.t_mem, hfa.n_art);
    for (label, frame) in &hfa.nodes {
        let _ = writeln!(out, "  {} [frame={}];", dot_id(label.as_str()), frame);
    }
    for a in &hfa.kept_arrows {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}\"];",
            dot_id(a.tail.as_str()),
            dot_id(a.head.as_str()),
            a.count
        );
    }
    out.push_str("}\n");
    out
}

pub fn event_dag_to_dot(dag: &EventDag) -> String {
    let mut out = String::from("digraph cb {\n");
    let _ = writeln!(out, "  label={};", dot_id(&dag.cb_id));
    for (label, frame) in &dag.nodes {
        let _ = writeln!(out, "  {} [frame={}];", dot_id(label.as_str()), frame);
    }
    for (tail, head) in &dag.arrows {
        let _ = writeln!(
            out,
            "  {} -> {};",
            dot_id(tail.as_str()),
            dot_id(head.as_str())
        );
    }
    out.push_str("}\n");
    out
}
