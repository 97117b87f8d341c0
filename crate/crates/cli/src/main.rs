use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vcc_core::pipeline::{self, BenchGenArgs, EvalSource, Pipeline};
use vcc_core::validate::prompt_digest;
use vcc_core::{bench, jsonl, Error};

#[derive(Parser)]
#[command(name = "vcc", version, about = "Find clones of known vulnerable functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Overrides detect.threshold_t
    #[arg(long)]
    threshold: Option<f64>,
    /// Overrides llm.runs
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract functions from the configured sources
    Extract(Common),
    /// Embed target functions and vulnerable/fixed pairs
    Embed(Common),
    /// Retrieve and filter candidate clones
    Detect(Common),
    /// Confirm kept candidates with the language model
    Validate {
        #[command(flatten)]
        common: Common,
        /// On replay misses, write the unanswered prompts here as JSON Lines
        #[arg(long)]
        emit_misses: Option<PathBuf>,
    },
    /// Score detections against ground truth
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Ground truth (JSON Lines of queries)
        #[arg(long)]
        truth: PathBuf,
        /// Score hash-baseline matches instead of embedding candidates
        #[arg(long)]
        hash_matches: bool,
    },
    /// Run the abstraction-hash baseline
    Baseline(Common),
    /// Build a synthetic clone benchmark from vulnerable/fixed pairs
    BenchGen {
        #[command(flatten)]
        common: Common,
        /// Pool of function pairs (JSON Lines)
        #[arg(long)]
        pairs: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Write the generation prompts here instead of generating
        #[arg(long)]
        emit_prompts: Option<PathBuf>,
    },
    /// Write a review sheet for a random sample of benchmark clones
    BenchAudit {
        /// Benchmark directory written by bench-gen
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value_t = 100)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble report.json and report.md from candidates and verdicts
    Report(Common),
}

#[derive(Serialize)]
struct PromptLine<'a> {
    id: &'a str,
    prompt_digest: String,
    prompt: &'a str,
}

fn load(common: &Common) -> anyhow::Result<Pipeline> {
    let mut p = Pipeline::load(&common.config)?;
    if let Some(t) = common.threshold {
        p.config.detect.threshold_t = t;
    }
    if let Some(r) = common.runs {
        p.config.llm.runs = r;
    }
    if let Some(s) = common.seed {
        p.config.seed = s;
    }
    p.config.check()?;
    Ok(p)
}

fn write_prompts(path: &Path, prompts: &[(String, String)]) -> anyhow::Result<()> {
    let lines: Vec<PromptLine> = prompts
        .iter()
        .map(|(id, prompt)| PromptLine {
            id,
            prompt_digest: prompt_digest(prompt),
            prompt,
        })
        .collect();
    jsonl::write(path, &lines)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Extract(c) => {
            let n = pipeline::extract(&load(&c)?)?;
            log::info!("extracted {n} functions");
        }
        Command::Embed(c) => {
            let (targets, pairs) = pipeline::embed_stage(&load(&c)?)?;
            log::info!("embedded {targets} targets and {pairs} pairs");
        }
        Command::Detect(c) => {
            let cands = pipeline::detect_stage(&load(&c)?)?;
            let kept = cands.iter().filter(|c| c.kept).count();
            log::info!("{} candidates, {kept} kept", cands.len());
        }
        Command::Validate { common, emit_misses } => {
            let p = load(&common)?;
            match pipeline::validate_stage(&p) {
                Err(Error::FixtureMiss(digests)) => {
                    if let Some(path) = emit_misses {
                        let prompts = pipeline::missing_prompts(&p, &digests)?;
                        write_prompts(&path, &prompts)?;
                        log::info!("wrote {} unanswered prompts to {}", prompts.len(), path.display());
                    }
                    return Err(Error::FixtureMiss(digests).into());
                }
                other => {
                    let verdicts = other?;
                    log::info!("validated {} candidates", verdicts.len());
                }
            }
        }
        Command::Evaluate {
            common,
            truth,
            hash_matches,
        } => {
            let source = if hash_matches {
                EvalSource::HashMatches
            } else {
                EvalSource::Candidates
            };
            let eval = pipeline::evaluate_stage(&load(&common)?, &truth, source)?;
            for m in &eval.methods {
                println!("{}: MAP {:.4}", m.method, m.report.map);
            }
        }
        Command::Baseline(c) => {
            let matches = pipeline::baseline_stage(&load(&c)?)?;
            log::info!("{} hash matches", matches.len());
        }
        Command::BenchGen {
            common,
            pairs,
            out,
            emit_prompts,
        } => {
            let p = load(&common)?;
            if let Some(path) = emit_prompts {
                write_prompts(&path, &pipeline::bench_prompts(&p, &pairs)?)?;
                return Ok(());
            }
            let built = pipeline::bench_gen(
                &p,
                &BenchGenArgs {
                    pool: pairs,
                    out_dir: out,
                },
            )?;
            print!("{}", bench::stats_table(&built.stats));
        }
        Command::BenchAudit {
            archive,
            sample,
            seed,
            out,
        } => {
            let clones = jsonl::read(&archive.join("clones.jsonl"))?;
            let pairs = jsonl::read(&archive.join("pairs.jsonl"))?;
            jsonl::write_atomic(&out, bench::audit_sheet(&clones, &pairs, sample, seed).as_bytes())
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Report(c) => {
            let r = pipeline::report_stage(&load(&c)?)?;
            log::info!("{} confirmed findings", r.summary.confirmed);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}
