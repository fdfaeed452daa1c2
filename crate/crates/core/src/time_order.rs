//! Time-compatibility order between CBs and the greedy construction of
//! time-compatible libraries (cbLib*s).

use serde::{Deserialize, Serialize};

use crate::corpus::{ComicBook, Corpus};

/// True when `shorter`'s events all occur in `longer` with exactly the same
/// pairwise relation: strictly earlier stays strictly earlier and co-frame
/// stays co-frame. Does not compare set sizes.
fn order_embeds(shorter: &ComicBook, longer: &ComicBook) -> bool {
    let mut prev: Option<(usize, usize)> = None;
    for (frame, label) in shorter.chronological() {
        let Some(target) = longer.try_frame_index(label.as_str()) else {
            return false;
        };
        if let Some((prev_frame, prev_target)) = prev {
            let ok = if frame == prev_frame {
                target == prev_target
            } else {
                target > prev_target
            };
            if !ok {
                return false;
            }
        }
        prev = Some((frame, target));
    }
    true
}

/// `c1 < c2`: E(c1) is a proper subset of E(c2) and the chronological
/// relation of every pair in E(c1) is the same in both CBs.
pub fn tc_less(c1: &ComicBook, c2: &ComicBook) -> bool {
    c1.event_count() < c2.event_count() && order_embeds(c1, c2)
}

/// Same event set with the same chronological relation.
pub fn tc_equivalent(c1: &ComicBook, c2: &ComicBook) -> bool {
    c1.event_count() == c2.event_count() && order_embeds(c1, c2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualityPolicy {
    /// Only strictly tc-smaller CBs join a library.
    ProperOnly,
    /// CBs tc-equivalent to the library's maximal CB also join.
    #[default]
    AllowEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollectionOptions {
    pub equality_policy: EqualityPolicy,
    /// Let a CB tc-greater than a library's maximal CB join and replace it.
    pub grow_max: bool,
}

/// One maximal CB and every member time-compatible with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbLib {
    index: usize,
    c_max: usize,
    members: Vec<ComicBook>,
}

impl CbLib {
    pub fn new(index: usize, first: ComicBook) -> Self {
        Self {
            index,
            c_max: 0,
            members: vec![first],
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn c_max(&self) -> &ComicBook {
        &self.members[self.c_max]
    }

    /// Members in insertion order, c_max included.
    pub fn members(&self) -> &[ComicBook] {
        &self.members
    }

    /// N_cb.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn summary(&self) -> LibSummary {
        LibSummary {
            lib_index: self.index,
            n_cb: self.len(),
            c_max_id: self.c_max().id().to_owned(),
            member_ids: self.members.iter().map(|m| m.id().to_owned()).collect(),
        }
    }

    /// Rebuilds a library from explicit members; `c_max` indexes `members`.
    /// Returns `None` when the library invariants do not hold.
    pub fn from_members(index: usize, members: Vec<ComicBook>, c_max: usize) -> Option<Self> {
        let lib = Self {
            index,
            c_max,
            members,
        };
        (c_max < lib.members.len() && lib.check_invariants().is_ok()).then_some(lib)
    }

    /// Every non-maximal member must be tc-smaller than or tc-equivalent
    /// to c_max.
    pub fn check_invariants(&self) -> Result<(), String> {
        let c_max = self.c_max();
        for (i, m) in self.members.iter().enumerate() {
            if i == self.c_max {
                continue;
            }
            if !(tc_less(m, c_max) || tc_equivalent(m, c_max)) {
                return Err(format!(
                    "lib {}: member {:?} is not time compatible with c_max {:?}",
                    self.index,
                    m.id(),
                    c_max.id()
                ));
            }
        }
        Ok(())
    }
}

/// Whether `c` may join `lib` under `opts`.
pub fn is_time_compatible(c: &ComicBook, lib: &CbLib, opts: CollectionOptions) -> bool {
    let c_max = lib.c_max();
    tc_less(c, c_max)
        || (opts.equality_policy == EqualityPolicy::AllowEqual && tc_equivalent(c, c_max))
        || (opts.grow_max && tc_less(c_max, c))
}

/// Ordered sequence of libraries; a CB may belong to several.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Collection {
    pub libs: Vec<CbLib>,
}

impl Collection {
    pub fn len(&self) -> usize {
        self.libs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.libs.is_empty()
    }

    pub fn summaries(&self) -> Vec<LibSummary> {
        self.libs.iter().map(CbLib::summary).collect()
    }
}

/// Greedy arrival-order insertion: each CB joins every compatible library
/// (ascending index) or starts a new one.
pub fn build_collection(corpus: &Corpus, opts: CollectionOptions) -> Collection {
    let mut libs: Vec<CbLib> = Vec::new();
    for cb in corpus.cbs() {
        let mut joined = false;
        for lib in libs.iter_mut() {
            if !is_time_compatible(cb, lib, opts) {
                continue;
            }
            let promote = opts.grow_max && tc_less(lib.c_max(), cb);
            lib.members.push(cb.clone());
            if promote {
                lib.c_max = lib.members.len() - 1;
            }
            joined = true;
        }
        if !joined {
            let index = libs.len();
            libs.push(CbLib::new(index, cb.clone()));
        }
    }
    Collection { libs }
}

/// One record per library for export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibSummary {
    pub lib_index: usize,
    pub n_cb: usize,
    pub c_max_id: String,
    pub member_ids: Vec<String>,
}
