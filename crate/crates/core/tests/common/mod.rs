//! Independent oracles and random generators shared by the integration
//! tests. Nothing here calls the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use deft::bnet::Bnet;
use deft::corpus::{ComicBook, EventLabel};
use deft::dag::HfaDag;
use deft::time_order::CbLib;
use rand::seq::SliceRandom;
use rand::Rng;

pub const REFERENCE_GAMES: [(&str, &[&str]); 4] = [
    ("A", &["X2", "O5", "X7", "O1", "X4", "O0", "X8", "O3", "X6"]),
    ("B", &["X2", "O5", "X4", "O3", "X6"]),
    ("C", &["X7", "O1", "X8", "O3", "X6"]),
    ("D", &["X2", "O1", "X4", "O0", "X6"]),
];

pub fn reference_ttt_list() -> String {
    REFERENCE_GAMES
        .iter()
        .map(|(_, moves)| {
            let quoted: Vec<String> = moves.iter().map(|m| format!("'{m}'")).collect();
            format!("[{}]\n", quoted.join(", "))
        })
        .collect()
}

pub fn label(s: &str) -> EventLabel {
    EventLabel::new(s).unwrap()
}

/// Pairwise definition of tc-smaller, checked over every pair of events.
pub fn tc_less_oracle(c1: &ComicBook, c2: &ComicBook) -> bool {
    let e1 = c1.event_set();
    let e2 = c2.event_set();
    if !(e1.is_subset(&e2) && e1.len() < e2.len()) {
        return false;
    }
    for a in &e1 {
        for b in &e1 {
            let d1 = c1.frame_index(a.as_str()).unwrap() as i64
                - c1.frame_index(b.as_str()).unwrap() as i64;
            let d2 = c2.frame_index(a.as_str()).unwrap() as i64
                - c2.frame_index(b.as_str()).unwrap() as i64;
            if d1.signum() != d2.signum() {
                return false;
            }
        }
    }
    true
}

/// Proper-subsequence test by enumerating every index subset of `long`.
pub fn proper_subsequence_oracle(short: &[String], long: &[String]) -> bool {
    if short.len() >= long.len() {
        return false;
    }
    (0u32..1 << long.len())
        .filter(|mask| mask.count_ones() as usize == short.len())
        .any(|mask| {
            let picked: Vec<&String> = (0..long.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| &long[i])
                .collect();
            picked.iter().zip(short).all(|(a, b)| *a == b)
        })
}

/// Arrows of one CB recomputed from pairwise frame distances.
pub fn window_arrows_oracle(cb: &ComicBook, t_mem: usize) -> BTreeSet<(EventLabel, EventLabel)> {
    let mut out = BTreeSet::new();
    for (tail, ft) in cb.events() {
        for (head, fh) in cb.events() {
            if fh > ft && fh - ft <= t_mem {
                out.insert((tail.clone(), head.clone()));
            }
        }
    }
    out
}

pub fn count_oracle(lib: &CbLib, t_mem: usize) -> BTreeMap<(EventLabel, EventLabel), usize> {
    let mut counts = BTreeMap::new();
    for m in lib.members() {
        for a in window_arrows_oracle(m, t_mem) {
            *counts.entry(a).or_insert(0) += 1;
        }
    }
    counts
}

/// Three-colour DFS cycle check.
pub fn is_acyclic<'a>(
    nodes: impl IntoIterator<Item = &'a EventLabel>,
    arrows: impl IntoIterator<Item = (&'a EventLabel, &'a EventLabel)>,
) -> bool {
    let mut adj: BTreeMap<&EventLabel, Vec<&EventLabel>> = BTreeMap::new();
    for n in nodes {
        adj.entry(n).or_default();
    }
    for (t, h) in arrows {
        adj.entry(t).or_default().push(h);
        adj.entry(h).or_default();
    }
    fn visit<'a>(
        n: &'a EventLabel,
        adj: &BTreeMap<&'a EventLabel, Vec<&'a EventLabel>>,
        colour: &mut BTreeMap<&'a EventLabel, u8>,
    ) -> bool {
        match colour.get(n) {
            Some(1) => return false,
            Some(2) => return true,
            _ => {}
        }
        colour.insert(n, 1);
        for &next in &adj[n] {
            if !visit(next, adj, colour) {
                return false;
            }
        }
        colour.insert(n, 2);
        true
    }
    let mut colour = BTreeMap::new();
    adj.keys().all(|&n| visit(n, &adj, &mut colour))
}

pub fn hfa_is_acyclic(hfa: &HfaDag) -> bool {
    is_acyclic(
        hfa.nodes.iter().map(|(l, _)| l),
        hfa.kept_arrows.iter().map(|a| (&a.tail, &a.head)),
    )
}

/// Per-node, per-pattern, per-member tally; parents ordered by descending
/// c_max frame then label.
pub struct OracleRow {
    pub present: usize,
    pub total: usize,
    pub probs: Option<[f64; 2]>,
}

pub fn tpm_oracle(
    hfa: &HfaDag,
    lib: &CbLib,
) -> BTreeMap<EventLabel, (Vec<EventLabel>, Vec<OracleRow>)> {
    let frame: BTreeMap<&EventLabel, usize> = hfa.nodes.iter().map(|(l, f)| (l, *f)).collect();
    let mut out = BTreeMap::new();
    for (node, _) in &hfa.nodes {
        let mut parents: Vec<EventLabel> = hfa
            .kept_arrows
            .iter()
            .filter(|a| &a.head == node)
            .map(|a| a.tail.clone())
            .collect();
        parents.sort_by(|a, b| frame[b].cmp(&frame[a]).then(a.cmp(b)));
        let n = parents.len();
        let mut rows = Vec::new();
        for pattern in 0..1usize << n {
            let bits: Vec<bool> = (0..n).map(|i| pattern >> (n - 1 - i) & 1 == 1).collect();
            let mut total = 0;
            let mut present = 0;
            for m in lib.members() {
                let matches = parents
                    .iter()
                    .zip(&bits)
                    .all(|(p, &b)| m.contains(p.as_str()) == b);
                if matches {
                    total += 1;
                    if m.contains(node.as_str()) {
                        present += 1;
                    }
                }
            }
            let probs = (total > 0).then(|| {
                [
                    (total - present) as f64 / total as f64,
                    present as f64 / total as f64,
                ]
            });
            rows.push(OracleRow {
                present,
                total,
                probs,
            });
        }
        out.insert(node.clone(), (parents, rows));
    }
    out
}

/// Sum of the joint over all 2^N assignments, by explicit enumeration.
pub fn joint_sum(bnet: &Bnet) -> f64 {
    let nodes: Vec<EventLabel> = bnet.tpms.iter().map(|t| t.node.clone()).collect();
    (0u64..1 << nodes.len())
        .map(|mask| {
            let assignment: BTreeMap<EventLabel, bool> = nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), mask >> i & 1 == 1))
                .collect();
            deft::joint_probability(bnet, &assignment).unwrap()
        })
        .sum()
}

/// Random CB over `vocab` with frames of 1..=max_width events.
pub fn random_cb(rng: &mut impl Rng, id: &str, vocab: &[&str], max_width: usize) -> ComicBook {
    let mut labels: Vec<&str> = vocab.to_vec();
    labels.shuffle(rng);
    let keep = rng.random_range(1..=labels.len());
    labels.truncate(keep);
    let mut frames: Vec<Vec<String>> = Vec::new();
    let mut rest = &labels[..];
    while !rest.is_empty() {
        let w = rng.random_range(1..=max_width.min(rest.len()));
        frames.push(rest[..w].iter().map(|s| s.to_string()).collect());
        rest = &rest[w..];
    }
    ComicBook::new(id, frames).unwrap()
}

/// Drops a random subset of events (and any frames left empty).
pub fn random_sub_cb(rng: &mut impl Rng, id: &str, cb: &ComicBook) -> ComicBook {
    let total = cb.event_count();
    let drop_target = rng.random_range(0..=total.saturating_sub(1));
    let mut frames: Vec<Vec<String>> = cb
        .frames()
        .iter()
        .map(|f| f.events().map(|e| e.as_str().to_owned()).collect())
        .collect();
    for _ in 0..drop_target {
        let nonempty: Vec<usize> = (0..frames.len())
            .filter(|&i| !frames[i].is_empty())
            .collect();
        if nonempty.iter().map(|&i| frames[i].len()).sum::<usize>() <= 1 {
            break;
        }
        let f = nonempty[rng.random_range(0..nonempty.len())];
        let k = rng.random_range(0..frames[f].len());
        frames[f].remove(k);
    }
    frames.retain(|f| !f.is_empty());
    ComicBook::new(id, frames).unwrap()
}

pub const VOCAB: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
