//! The DAG atlas: one hfa DAG and Bayesian network per library, plus the
//! on-disk bundle written by `deft build` and read by `deft query`.
//!
//! Bundle layout (all names fixed, lib indices zero-padded to 4 digits):
//!
//! ```text
//! atlas.json              full machine-readable atlas (summaries, DAGs, TPMs)
//! lib_0000.dot            hfa DAG, edges labelled with repetition counts
//! lib_0000_tpm.txt        TPM listing
//! lib_0000_tpm.json       TPM records
//! lib_0000_member_00.dot  member DAGs, only with emit_member_dags
//! manifest.json           config echo, input digest, file list; written last
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bnet::{
    do_intervene, estimate_tpms_with, marginal, render_tpm_report, tpm_records, Bnet, BnetError,
    EstimateOptions, ReportOptions, DEFAULT_ENUMERATION_CAP,
};
use crate::corpus::{Corpus, EventLabel};
use crate::dag::{build_event_dag, build_hfa, event_dag_to_dot, hfa_to_dot, HfaDag};
use crate::time_order::{build_collection, CollectionOptions, EqualityPolicy, LibSummary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasConfig {
    pub t_mem: usize,
    pub n_art: usize,
    pub equality_policy: EqualityPolicy,
    pub grow_max: bool,
    pub laplace: bool,
    pub emit_member_dags: bool,
    pub compat_inf_roots: bool,
    pub enumeration_cap: usize,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            t_mem: 2,
            n_art: 2,
            equality_policy: EqualityPolicy::AllowEqual,
            grow_max: false,
            laplace: false,
            emit_member_dags: false,
            compat_inf_roots: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl AtlasConfig {
    pub fn validate(&self) -> Result<(), AtlasError> {
        if self.t_mem == 0 {
            return Err(AtlasError::Config("t_mem must be at least 1".into()));
        }
        if self.n_art == 0 {
            return Err(AtlasError::Config("n_art must be at least 1".into()));
        }
        Ok(())
    }

    pub fn collection_options(&self) -> CollectionOptions {
        CollectionOptions {
            equality_policy: self.equality_policy,
            grow_max: self.grow_max,
        }
    }
}

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no library with index {0}")]
    UnknownLib(usize),
    #[error(transparent)]
    Bnet(#[from] BnetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub summary: LibSummary,
    pub bnet: Bnet,
    pub undefined_rows: usize,
    #[serde(skip)]
    pub member_dots: Vec<String>,
}

impl AtlasEntry {
    pub fn hfa(&self) -> &HfaDag {
        &self.bnet.hfa
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub libs: Vec<AtlasEntry>,
}

impl Atlas {
    pub fn lib(&self, index: usize) -> Result<&AtlasEntry, AtlasError> {
        self.libs.get(index).ok_or(AtlasError::UnknownLib(index))
    }
}

pub fn build_atlas(corpus: &Corpus, config: &AtlasConfig) -> Result<Atlas, AtlasError> {
    config.validate()?;
    let collection = build_collection(corpus, config.collection_options());
    let estimate = EstimateOptions {
        laplace: config.laplace,
    };
    let libs = collection
        .libs
        .par_iter()
        .map(|lib| {
            let hfa = build_hfa(lib, config.t_mem, config.n_art);
            let bnet = estimate_tpms_with(&hfa, lib, estimate)?;
            let member_dots = if config.emit_member_dags {
                lib.members()
                    .iter()
                    .map(|m| event_dag_to_dot(&build_event_dag(m, config.t_mem)))
                    .collect()
            } else {
                Vec::new()
            };
            Ok(AtlasEntry {
                summary: lib.summary(),
                undefined_rows: bnet.undefined_rows(),
                bnet,
                member_dots,
            })
        })
        .collect::<Result<Vec<_>, BnetError>>()?;
    Ok(Atlas { libs })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: AtlasConfig,
    pub input_sha256: String,
    pub cb_count: usize,
    pub n_events: usize,
    pub lib_count: usize,
    pub files: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct AtlasFile {
    config: AtlasConfig,
    libs: Vec<AtlasEntry>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), AtlasError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| AtlasError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("atlas types serialize");
    s.push('\n');
    s
}

/// Writes the bundle directory; the manifest goes last.
pub fn write_bundle(
    atlas: &Atlas,
    corpus: &Corpus,
    config: &AtlasConfig,
    input: &[u8],
    dir: &Path,
) -> Result<Manifest, AtlasError> {
    fs::create_dir_all(dir).map_err(|source| AtlasError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let report_opts = ReportOptions {
        compat_inf_roots: config.compat_inf_roots,
    };
    let mut files = vec!["atlas.json".to_owned()];
    write_file(
        dir,
        "atlas.json",
        &to_json(&AtlasFile {
            config: config.clone(),
            libs: atlas.libs.clone(),
        }),
    )?;
    for entry in &atlas.libs {
        let stem = format!("lib_{:04}", entry.summary.lib_index);
        let outputs = [
            (format!("{stem}.dot"), hfa_to_dot(entry.hfa())),
            (
                format!("{stem}_tpm.txt"),
                render_tpm_report(&entry.bnet, report_opts),
            ),
            (
                format!("{stem}_tpm.json"),
                to_json(&tpm_records(&entry.bnet)),
            ),
        ];
        for (name, contents) in outputs {
            write_file(dir, &name, &contents)?;
            files.push(name);
        }
        for (k, dot) in entry.member_dots.iter().enumerate() {
            let name = format!("{stem}_member_{k:02}.dot");
            write_file(dir, &name, dot)?;
            files.push(name);
        }
    }
    let stats = corpus.stats();
    let manifest = Manifest {
        config: config.clone(),
        input_sha256: sha256_hex(input),
        cb_count: stats.cb_count,
        n_events: stats.n_events,
        lib_count: atlas.libs.len(),
        files,
    };
    write_file(dir, "manifest.json", &to_json(&manifest))?;
    Ok(manifest)
}

pub fn read_atlas(dir: &Path) -> Result<(AtlasConfig, Atlas), AtlasError> {
    let path = dir.join("atlas.json");
    let text = fs::read_to_string(&path).map_err(|source| AtlasError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: AtlasFile = serde_json::from_str(&text).map_err(|source| AtlasError::Json {
        path: path.display().to_string(),
        source,
    })?;
    Ok((file.config, Atlas { libs: file.libs }))
}

/// Marginal query with optional interventions applied first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub target: String,
    pub evidence: BTreeMap<EventLabel, bool>,
    pub interventions: Vec<(String, bool)>,
}

pub fn run_query(bnet: &Bnet, query: &Query, cap: usize) -> Result<f64, AtlasError> {
    let mut net = bnet.clone();
    for (node, value) in &query.interventions {
        net = do_intervene(&net, node, *value)?;
    }
    Ok(marginal(&net, &query.target, &query.evidence, cap)?)
}

/// Parses `NODE=1`, `NODE=0`, `NODE=true` or `NODE=false`.
pub fn parse_assignment(text: &str) -> Result<(String, bool), String> {
    let (node, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NODE=VALUE, got {text:?}"))?;
    let value = match value.trim() {
        "1" | "true" => true,
        "0" | "false" => false,
        other => return Err(format!("value must be 0 or 1, got {other:?}")),
    };
    let node = node.trim();
    if node.is_empty() {
        return Err(format!("missing node name in {text:?}"));
    }
    Ok((node.to_owned(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, CorpusFormat};

    const REFERENCE: &str = "['X2', 'O5', 'X7', 'O1', 'X4', 'O0', 'X8', 'O3', 'X6']\n\
                            ['X2', 'O5', 'X4', 'O3', 'X6']\n\
                            ['X7', 'O1', 'X8', 'O3', 'X6']\n\
                            ['X2', 'O1', 'X4', 'O0', 'X6']\n";

    fn reference_atlas(config: &AtlasConfig) -> Atlas {
        let corpus = parse_corpus_str(REFERENCE, CorpusFormat::TttList).unwrap();
        build_atlas(&corpus, config).unwrap()
    }

    #[test]
    fn defaults_reproduce_reference_setting() {
        let config = AtlasConfig::default();
        assert_eq!((config.t_mem, config.n_art), (2, 2));
        let atlas = reference_atlas(&config);
        assert_eq!(atlas.libs.len(), 1);
        assert_eq!(atlas.libs[0].summary.n_cb, 4);
        // X4 (0,0), O0 (0,0), X6 x4
        assert_eq!(atlas.libs[0].undefined_rows, 6);
    }

    #[test]
    fn high_threshold_isolates_all_nodes() {
        let atlas = reference_atlas(&AtlasConfig {
            n_art: 100,
            ..AtlasConfig::default()
        });
        let bnet = &atlas.libs[0].bnet;
        assert!(bnet.hfa.kept_arrows.is_empty());
        assert_eq!(bnet.tpms.len(), 9);
        assert!(bnet
            .tpms
            .iter()
            .all(|t| t.parents.is_empty() && t.rows.len() == 1));
    }

    #[test]
    fn zero_parameters_are_rejected() {
        let corpus = Corpus::default();
        let bad = AtlasConfig {
            t_mem: 0,
            ..AtlasConfig::default()
        };
        assert!(matches!(
            build_atlas(&corpus, &bad),
            Err(AtlasError::Config(_))
        ));
        let bad = AtlasConfig {
            n_art: 0,
            ..AtlasConfig::default()
        };
        assert!(matches!(
            build_atlas(&corpus, &bad),
            Err(AtlasError::Config(_))
        ));
        assert!(build_atlas(&corpus, &AtlasConfig::default())
            .unwrap()
            .libs
            .is_empty());
    }

    #[test]
    fn bundle_round_trip_and_queries() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = parse_corpus_str(REFERENCE, CorpusFormat::TttList).unwrap();
        let config = AtlasConfig {
            emit_member_dags: true,
            ..AtlasConfig::default()
        };
        let atlas = build_atlas(&corpus, &config).unwrap();
        let manifest =
            write_bundle(&atlas, &corpus, &config, REFERENCE.as_bytes(), dir.path()).unwrap();
        assert_eq!(manifest.lib_count, 1);
        assert!(manifest
            .files
            .contains(&"lib_0000_member_03.dot".to_owned()));
        assert_eq!(manifest.input_sha256, sha256_hex(REFERENCE.as_bytes()));

        let (read_config, read) = read_atlas(dir.path()).unwrap();
        assert_eq!(read_config, config);
        assert_eq!(read.libs[0].bnet, atlas.libs[0].bnet);

        let bnet = &read.lib(0).unwrap().bnet;
        let q = Query {
            target: "O5".into(),
            ..Query::default()
        };
        assert!((run_query(bnet, &q, 20).unwrap() - 0.5).abs() < 1e-12);
        let q = Query {
            target: "X4".into(),
            interventions: vec![("X4".into(), true)],
            ..Query::default()
        };
        assert_eq!(run_query(bnet, &q, 20).unwrap(), 1.0);
        assert!(matches!(read.lib(3), Err(AtlasError::UnknownLib(3))));
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("X7=1"), Ok(("X7".into(), true)));
        assert_eq!(parse_assignment("X7=false"), Ok(("X7".into(), false)));
        assert!(parse_assignment("X7").is_err());
        assert!(parse_assignment("X7=2").is_err());
        assert!(parse_assignment("=1").is_err());
    }
}
