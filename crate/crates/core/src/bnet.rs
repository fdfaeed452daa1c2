//! Bayesian networks over Boolean present/absent event nodes.
//!
//! Conditional tables are estimated by counting over the members of a
//! library: for a node with parents `pa` and a presence pattern `π`,
//!
//! ```text
//! P(node present | pa = π) = #{members with pa = π and node present}
//!                            / #{members with pa = π}
//! ```
//!
//! Patterns never observed leave the row undefined. Rows are indexed in
//! ascending binary order with the first parent as the most significant bit,
//! so `(0, 1)` is row 1 and `(1, 0)` is row 2.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ComicBook, EventLabel};
use crate::dag::{topo_order, DagError, HfaDag};
use crate::time_order::CbLib;

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum BnetError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("assignment does not cover node {0:?}")]
    MissingAssignment(String),
    #[error("node {node}: TPM row {pattern} is undefined (pattern never observed)")]
    UndefinedRow { node: String, pattern: Pattern },
    #[error("query needs {needed} enumerated nodes, above the cap of {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error("evidence has probability zero")]
    ZeroEvidence,
    #[error(transparent)]
    Dag(#[from] DagError),
}

/// Presence pattern over a node's ordered parents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern(pub Vec<bool>);

impl Pattern {
    pub fn from_index(index: usize, len: usize) -> Self {
        Self((0..len).map(|i| index >> (len - 1 - i) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Tuple notation: `()`, `(1,)`, `(0, 1)`.
impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: Vec<&str> = self.0.iter().map(|&b| if b { "1" } else { "0" }).collect();
        match bits.len() {
            0 => f.write_str("()"),
            1 => write!(f, "({},)", bits[0]),
            _ => write!(f, "({})", bits.join(", ")),
        }
    }
}

/// Observed support of one row plus the resulting distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpmRow {
    /// Members matching the pattern with the node present.
    pub present: usize,
    /// Members matching the pattern.
    pub total: usize,
    /// `[p_absent, p_present]`, `None` when undefined.
    pub probs: Option<[f64; 2]>,
}

impl TpmRow {
    pub fn p_present(&self) -> Option<f64> {
        self.probs.map(|p| p[1])
    }

    pub fn is_defined(&self) -> bool {
        self.probs.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tpm {
    pub node: EventLabel,
    pub parents: Vec<EventLabel>,
    /// `2^parents.len()` rows in ascending pattern order.
    pub rows: Vec<TpmRow>,
    /// Set when the node was fixed by an intervention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced: Option<bool>,
}

impl Tpm {
    pub fn row(&self, pattern: &Pattern) -> &TpmRow {
        &self.rows[pattern.index()]
    }

    pub fn patterns(&self) -> impl Iterator<Item = (Pattern, &TpmRow)> {
        let n = self.parents.len();
        self.rows
            .iter()
            .enumerate()
            .map(move |(i, r)| (Pattern::from_index(i, n), r))
    }

    pub fn undefined_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_defined()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Add-one smoothing: `(present + 1) / (total + 2)`; every row becomes defined.
    pub laplace: bool,
}

/// An hfa DAG with one table per node, nodes kept in topological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bnet {
    pub hfa: HfaDag,
    pub tpms: Vec<Tpm>,
}

impl Bnet {
    pub fn tpm(&self, node: &str) -> Option<&Tpm> {
        self.tpms.iter().find(|t| t.node.as_str() == node)
    }

    fn position(&self, node: &str) -> Result<usize, BnetError> {
        self.tpms
            .iter()
            .position(|t| t.node.as_str() == node)
            .ok_or_else(|| BnetError::UnknownNode(node.to_owned()))
    }

    pub fn undefined_rows(&self) -> usize {
        self.tpms.iter().map(Tpm::undefined_rows).sum()
    }
}

/// Parents of `node`, most recent c_max frame first, ties broken by label.
pub fn canonical_parents(hfa: &HfaDag, node: &str) -> Result<Vec<EventLabel>, BnetError> {
    if !hfa.contains(node) {
        return Err(BnetError::UnknownNode(node.to_owned()));
    }
    let mut parents: Vec<(usize, EventLabel)> = hfa
        .parents_of(node)
        .into_iter()
        .map(|p| {
            let frame = hfa
                .frame_of(p.as_str())
                .ok_or_else(|| BnetError::UnknownNode(p.to_string()))?;
            Ok((frame, p.clone()))
        })
        .collect::<Result<_, BnetError>>()?;
    parents.sort_by(|(fa, la), (fb, lb)| fb.cmp(fa).then_with(|| la.cmp(lb)));
    Ok(parents.into_iter().map(|(_, l)| l).collect())
}

fn presence(cb: &ComicBook, parents: &[EventLabel]) -> usize {
    parents
        .iter()
        .fold(0, |acc, p| (acc << 1) | cb.contains(p.as_str()) as usize)
}

fn row_from_counts(present: usize, total: usize, opts: EstimateOptions) -> TpmRow {
    let probs = if opts.laplace {
        let p = (present + 1) as f64 / (total + 2) as f64;
        Some([1.0 - p, p])
    } else if total == 0 {
        None
    } else {
        let p = present as f64 / total as f64;
        Some([(total - present) as f64 / total as f64, p])
    };
    TpmRow {
        present,
        total,
        probs,
    }
}

pub fn estimate_tpms(hfa: &HfaDag, lib: &CbLib) -> Result<Bnet, BnetError> {
    estimate_tpms_with(hfa, lib, EstimateOptions::default())
}

pub fn estimate_tpms_with(
    hfa: &HfaDag,
    lib: &CbLib,
    opts: EstimateOptions,
) -> Result<Bnet, BnetError> {
    let order = topo_order(hfa)?;
    let mut tpms = Vec::with_capacity(order.len());
    for node in order {
        let parents = canonical_parents(hfa, node.as_str())?;
        let size = 1usize << parents.len();
        let mut present = vec![0usize; size];
        let mut total = vec![0usize; size];
        for member in lib.members() {
            let row = presence(member, &parents);
            total[row] += 1;
            if member.contains(node.as_str()) {
                present[row] += 1;
            }
        }
        let rows = present
            .into_iter()
            .zip(total)
            .map(|(p, t)| row_from_counts(p, t, opts))
            .collect();
        tpms.push(Tpm {
            node,
            parents,
            rows,
            forced: None,
        });
    }
    Ok(Bnet {
        hfa: hfa.clone(),
        tpms,
    })
}

/// Compiled form used by the enumerators: parents as node positions.
struct Compiled<'a> {
    bnet: &'a Bnet,
    parents: Vec<Vec<usize>>,
}

impl<'a> Compiled<'a> {
    fn new(bnet: &'a Bnet) -> Result<Self, BnetError> {
        let parents = bnet
            .tpms
            .iter()
            .map(|t| {
                t.parents
                    .iter()
                    .map(|p| bnet.position(p.as_str()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { bnet, parents })
    }

    /// Probability of `value` at node `i` given the values of its parents.
    fn factor(&self, i: usize, values: &[bool], value: bool) -> Result<f64, BnetError> {
        let tpm = &self.bnet.tpms[i];
        let row_index = self.parents[i]
            .iter()
            .fold(0, |acc, &p| (acc << 1) | values[p] as usize);
        let probs = tpm.rows[row_index]
            .probs
            .ok_or_else(|| BnetError::UndefinedRow {
                node: tpm.node.to_string(),
                pattern: Pattern::from_index(row_index, tpm.parents.len()),
            })?;
        Ok(probs[value as usize])
    }
}

/// Product of the selected table entries for a full assignment.
pub fn joint_probability(
    bnet: &Bnet,
    assignment: &BTreeMap<EventLabel, bool>,
) -> Result<f64, BnetError> {
    for node in assignment.keys() {
        bnet.position(node.as_str())?;
    }
    let values: Vec<bool> = bnet
        .tpms
        .iter()
        .map(|t| {
            assignment
                .get(&t.node)
                .copied()
                .ok_or_else(|| BnetError::MissingAssignment(t.node.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let compiled = Compiled::new(bnet)?;
    (0..values.len()).try_fold(1.0, |acc, i| {
        Ok(acc * compiled.factor(i, &values, values[i])?)
    })
}

/// `P(target present | evidence)` by exact enumeration over the ancestral
/// closure of the target and evidence nodes; nodes outside that closure
/// sum out. Branches with zero accumulated weight are pruned, so an
/// undefined row is only an error when reached with positive weight.
pub fn marginal(
    bnet: &Bnet,
    target: &str,
    evidence: &BTreeMap<EventLabel, bool>,
    cap: usize,
) -> Result<f64, BnetError> {
    let compiled = Compiled::new(bnet)?;
    let n = bnet.tpms.len();
    let target = bnet.position(target)?;
    let mut fixed: Vec<Option<bool>> = vec![None; n];
    for (node, &value) in evidence {
        fixed[bnet.position(node.as_str())?] = Some(value);
    }

    let mut relevant = vec![false; n];
    let mut stack: Vec<usize> = std::iter::once(target)
        .chain((0..n).filter(|&i| fixed[i].is_some()))
        .collect();
    while let Some(i) = stack.pop() {
        if !std::mem::replace(&mut relevant[i], true) {
            stack.extend(&compiled.parents[i]);
        }
    }
    // tpms are topologically ordered, so parents precede children.
    let nodes: Vec<usize> = (0..n).filter(|&i| relevant[i]).collect();
    let free = nodes.iter().filter(|&&i| fixed[i].is_none()).count();
    if free > cap {
        return Err(BnetError::CapExceeded { needed: free, cap });
    }

    struct Walk<'c, 'b> {
        compiled: &'c Compiled<'b>,
        nodes: Vec<usize>,
        fixed: Vec<Option<bool>>,
        values: Vec<bool>,
        target: usize,
        numerator: f64,
        denominator: f64,
    }

    impl Walk<'_, '_> {
        fn visit(&mut self, depth: usize, weight: f64) -> Result<(), BnetError> {
            let Some(&i) = self.nodes.get(depth) else {
                self.denominator += weight;
                if self.values[self.target] {
                    self.numerator += weight;
                }
                return Ok(());
            };
            let choices: &[bool] = match self.fixed[i] {
                Some(true) => &[true],
                Some(false) => &[false],
                None => &[false, true],
            };
            for &value in choices {
                self.values[i] = value;
                let w = weight * self.compiled.factor(i, &self.values, value)?;
                if w > 0.0 {
                    self.visit(depth + 1, w)?;
                }
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        compiled: &compiled,
        nodes,
        fixed,
        values: vec![false; n],
        target,
        numerator: 0.0,
        denominator: 0.0,
    };
    walk.visit(0, 1.0)?;
    if walk.denominator <= 0.0 {
        return Err(BnetError::ZeroEvidence);
    }
    Ok(walk.numerator / walk.denominator)
}

/// `do(node = value)`: drop every arrow into `node` and replace its table
/// by a point mass. Other tables are untouched.
pub fn do_intervene(bnet: &Bnet, node: &str, value: bool) -> Result<Bnet, BnetError> {
    let i = bnet.position(node)?;
    let mut out = bnet.clone();
    out.hfa = bnet.hfa.without_incoming(node);
    let tpm = &mut out.tpms[i];
    tpm.parents.clear();
    tpm.forced = Some(value);
    tpm.rows = vec![TpmRow {
        present: 0,
        total: 0,
        probs: Some(if value { [0.0, 1.0] } else { [1.0, 0.0] }),
    }];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    /// Print parentless rows as `[inf, inf]` instead of their marginal.
    pub compat_inf_roots: bool,
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.8}")
}

/// Human-readable TPM listing, one block per node in topological order.
pub fn render_tpm_report(bnet: &Bnet, opts: ReportOptions) -> String {
    let mut out = String::new();
    for tpm in &bnet.tpms {
        let parents: Vec<String> = tpm.parents.iter().map(|p| format!("'{p}'")).collect();
        let _ = writeln!(out, "node: {}, parents: [{}]", tpm.node, parents.join(", "));
        for (pattern, row) in tpm.patterns() {
            let pair = match row.probs {
                _ if opts.compat_inf_roots && tpm.parents.is_empty() && tpm.forced.is_none() => {
                    "inf, inf".to_owned()
                }
                None => "nan, nan".to_owned(),
                Some([a, p]) => format!("{}, {}", fmt_prob(a), fmt_prob(p)),
            };
            let _ = writeln!(out, "  {pattern}: [{pair}]");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpmRecordRow {
    pub pattern: Vec<u8>,
    pub present: usize,
    pub total: usize,
    pub p: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpmRecord {
    pub node: EventLabel,
    pub parents: Vec<EventLabel>,
    pub rows: Vec<TpmRecordRow>,
}

/// Machine-readable counterpart of [`render_tpm_report`].
pub fn tpm_records(bnet: &Bnet) -> Vec<TpmRecord> {
    bnet.tpms
        .iter()
        .map(|tpm| TpmRecord {
            node: tpm.node.clone(),
            parents: tpm.parents.clone(),
            rows: tpm
                .patterns()
                .map(|(pattern, row)| TpmRecordRow {
                    pattern: pattern.0.iter().map(|&b| b as u8).collect(),
                    present: row.present,
                    total: row.total,
                    p: row.probs,
                })
                .collect(),
        })
        .collect()
}

/// Nodes whose incoming arrows were removed by interventions.
pub fn forced_nodes(bnet: &Bnet) -> BTreeSet<&EventLabel> {
    bnet.tpms
        .iter()
        .filter(|t| t.forced.is_some())
        .map(|t| &t.node)
        .collect()
}
