//! Causal DAG atlases mined from chronologically framed event records.
//!
//! The pipeline runs corpus → time-compatible libraries → per-record event
//! DAGs → high-frequency-arrows DAG per library → Bayesian network per
//! library. Randomly played Tic-Tac-Toe games serve as a ready-made corpus.

pub mod atlas;
pub mod bnet;
pub mod corpus;
pub mod dag;
pub mod time_order;
pub mod ttt;

pub use atlas::{build_atlas, Atlas, AtlasConfig};
pub use bnet::{do_intervene, estimate_tpms, joint_probability, marginal, Bnet, Tpm};
pub use corpus::{parse_corpus, ComicBook, Corpus, CorpusFormat, EventLabel};
pub use dag::{build_event_dag, build_hfa, count_arrows, topo_order, EventDag, HfaDag};
pub use time_order::{build_collection, tc_less, CbLib, Collection, CollectionOptions};
