use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use deft::atlas::{
    build_atlas, parse_assignment, read_atlas, run_query, write_bundle, AtlasConfig, Query,
};
use deft::corpus::{parse_corpus, write_corpus, CorpusFormat, EventLabel};
use deft::time_order::EqualityPolicy;
use deft::ttt::generate_games;

#[derive(Parser)]
#[command(
    name = "deft",
    version,
    about = "Build causal DAG atlases from event-record corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    CbJsonl,
    TttList,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::CbJsonl => CorpusFormat::CbJsonl,
            FormatArg::TttList => CorpusFormat::TttList,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EqualityArg {
    Proper,
    Equal,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random Tic-Tac-Toe games as a corpus.
    Generate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "ttt-list")]
        format: FormatArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an atlas bundle from a corpus file.
    Build {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "ttt-list")]
        format: FormatArg,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        t_mem: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n_art: u64,
        #[arg(long, value_enum, default_value = "equal")]
        equality: EqualityArg,
        #[arg(long)]
        grow_max: bool,
        #[arg(long)]
        emit_member_dags: bool,
        /// Print parentless TPM rows as `[inf, inf]`.
        #[arg(long = "paper-compat-inf")]
        compat_inf: bool,
        /// Add-one smoothing of TPM rows.
        #[arg(long)]
        laplace: bool,
        #[arg(long, default_value_t = deft::bnet::DEFAULT_ENUMERATION_CAP)]
        enumeration_cap: usize,
        /// Bundle directory.
        #[arg(long, env = "DEFT_OUT_DIR", default_value = "atlas")]
        out: PathBuf,
    },
    /// Query a library's Bayesian network in a built bundle.
    Query {
        #[arg(long, env = "DEFT_OUT_DIR", default_value = "atlas")]
        atlas: PathBuf,
        #[arg(long, default_value_t = 0)]
        lib: usize,
        #[arg(long)]
        target: String,
        /// Observed value, `NODE=0|1`; repeatable.
        #[arg(long, value_parser = parse_assignment)]
        evidence: Vec<(String, bool)>,
        /// Intervention applied before querying, `NODE=0|1`; repeatable.
        #[arg(long = "do", value_parser = parse_assignment)]
        interventions: Vec<(String, bool)>,
        #[arg(long)]
        enumeration_cap: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Generate {
            n,
            seed,
            format,
            out,
        } => {
            let corpus = generate_games(n as usize, seed);
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_corpus(&corpus, format.into(), &mut buf)?;
                    fs::write(&path, buf).map_err(|e| format!("{}: {e}", path.display()))?;
                }
                None => {
                    let stdout = io::stdout().lock();
                    write_corpus(&corpus, format.into(), io::BufWriter::new(stdout))?;
                }
            }
        }
        Command::Build {
            corpus,
            format,
            t_mem,
            n_art,
            equality,
            grow_max,
            emit_member_dags,
            compat_inf,
            laplace,
            enumeration_cap,
            out,
        } => {
            let input = fs::read(&corpus).map_err(|e| format!("{}: {e}", corpus.display()))?;
            let parsed = parse_corpus(input.as_slice(), format.into())
                .map_err(|e| format!("{}: {e}", corpus.display()))?;
            let config = AtlasConfig {
                t_mem: t_mem as usize,
                n_art: n_art as usize,
                equality_policy: match equality {
                    EqualityArg::Proper => EqualityPolicy::ProperOnly,
                    EqualityArg::Equal => EqualityPolicy::AllowEqual,
                },
                grow_max,
                laplace,
                emit_member_dags,
                compat_inf_roots: compat_inf,
                enumeration_cap,
            };
            let atlas = build_atlas(&parsed, &config)?;
            let manifest = write_bundle(&atlas, &parsed, &config, &input, &out)?;
            eprintln!(
                "{} CBs, {} libraries -> {}",
                manifest.cb_count,
                manifest.lib_count,
                out.display()
            );
        }
        Command::Query {
            atlas,
            lib,
            target,
            evidence,
            interventions,
            enumeration_cap,
        } => {
            let (config, loaded) = read_atlas(&atlas)?;
            let entry = loaded.lib(lib)?;
            let evidence = evidence
                .into_iter()
                .map(|(node, v)| Ok((EventLabel::new(node)?, v)))
                .collect::<Result<_, deft::corpus::CorpusError>>()?;
            let query = Query {
                target,
                evidence,
                interventions,
            };
            let cap = enumeration_cap.unwrap_or(config.enumeration_cap);
            let p = run_query(&entry.bnet, &query, cap)?;
            writeln!(io::stdout(), "{p:.8}")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
