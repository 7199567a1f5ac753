//! Command-line interface: join, compare, sweep, generate, oracle.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    performance_profile, run_compare, run_join, run_oracle, run_sweep, summarize_speedups,
    summary_to_csv, write_pairs_csv, write_profile_csv, write_report_json, write_sweep_csv,
    JoinConfig, JoinReport, PhaseTimings, SweepOptions,
};
use crate::corpus::{
    generate_synthetic_with, load_collection_with, sample, Collection, LoadOptions, SynthConfig,
};
use crate::error::Error;
use crate::sim::SimilarityKind;
use crate::verify::MatcherKind;
use crate::Result;

#[derive(Parser)]
#[command(
    name = "fuzzyjoin",
    version,
    about = "Fuzzy set similarity self-join with exact and approximate matching verification"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a self-join and write the result pairs plus a report.
    Join(JoinArgs),
    /// Run several matchers and report accuracy against the exact one.
    Compare(CompareArgs),
    /// Threshold / sample-size sweep with per-cell timings, written as CSV.
    Sweep(SweepArgs),
    /// Write a synthetic corpus with planted near-duplicates.
    Generate(GenerateArgs),
    /// Brute-force exact join (all pairs, no filtering); test fixture.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Corpus file: one set per line, elements separated by the delimiter.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = ';')]
    delimiter: char,
    /// q-gram length.
    #[arg(long, default_value_t = 3)]
    q: usize,
    /// Tokenize each whitespace-separated word separately.
    #[arg(long)]
    per_word: bool,
    /// Elements are whitespace-separated integer token ids.
    #[arg(long)]
    pretokenized: bool,
    /// Random sample fraction in (0, 1].
    #[arg(long)]
    sample: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InputArgs {
    fn load(&self) -> Result<Collection> {
        let opts = LoadOptions {
            q: self.q,
            delimiter: self.delimiter,
            per_word: self.per_word,
            pretokenized: self.pretokenized,
        };
        let col = load_collection_with(&self.input, &opts)?;
        match self.sample {
            Some(f) if f < 1.0 => sample(&col, f, self.seed),
            _ => Ok(col),
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Join threshold.
    #[arg(long, default_value_t = 0.7)]
    delta: f64,
    /// Element similarity: jac or neds.
    #[arg(long, default_value = "jac", value_parser = parse_sim)]
    sim: SimilarityKind,
    /// Streaming matcher slack.
    #[arg(long, default_value_t = 0.001)]
    epsilon: f64,
    /// Refinement filters: pj (positional + joint) or none.
    #[arg(long, default_value = "pj", value_parser = parse_filters)]
    filters: FilterChoice,
    /// Score with matching upper bounds (recall 1 against the exact join).
    #[arg(long)]
    ub_variant: bool,
}

#[derive(Clone, Copy)]
enum FilterChoice {
    PositionalJoint,
    None,
}

fn parse_filters(s: &str) -> std::result::Result<FilterChoice, String> {
    match s.to_ascii_lowercase().as_str() {
        "pj" => Ok(FilterChoice::PositionalJoint),
        "none" => Ok(FilterChoice::None),
        other => Err(format!("unknown filter set '{other}' (expected pj or none)")),
    }
}

fn parse_sim(s: &str) -> std::result::Result<SimilarityKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "jac" => Ok(SimilarityKind::Jac),
        "neds" => Ok(SimilarityKind::Neds),
        other => Err(format!("unknown similarity '{other}' (expected jac or neds)")),
    }
}

fn parse_matcher(s: &str) -> std::result::Result<MatcherKind, String> {
    s.parse::<MatcherKind>().map_err(|e| e.to_string())
}

impl PipelineArgs {
    fn config(&self, kind: MatcherKind) -> JoinConfig {
        let (pos, joint) = match self.filters {
            FilterChoice::PositionalJoint => (true, true),
            FilterChoice::None => (false, false),
        };
        JoinConfig {
            delta: self.delta,
            sim: self.sim,
            kind,
            epsilon: self.epsilon,
            use_positional: pos,
            use_joint: joint,
            ub_variant: self.ub_variant,
        }
    }
}

#[derive(Args)]
struct JoinArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Matching backend: hg, ev, gd, ld or ps.
    #[arg(long, default_value = "hg", value_parser = parse_matcher)]
    matcher: MatcherKind,
    /// Result pairs file (CSV: r_id,s_id,score).
    #[arg(long, default_value = "pairs.csv")]
    output: PathBuf,
    /// Report format next to the pairs file: json or csv.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
}

#[derive(Clone, Copy)]
enum ReportFormat {
    Json,
    Csv,
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(format!("unknown format '{other}' (expected json or csv)")),
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Comma-separated matchers to compare against the exact result.
    #[arg(long, default_value = "hg,ev,gd,ld,ps", value_delimiter = ',', value_parser = parse_matcher)]
    matcher: Vec<MatcherKind>,
    /// Optional CSV output of the comparison table.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "hg,ev,gd,ld,ps", value_delimiter = ',', value_parser = parse_matcher)]
    matcher: Vec<MatcherKind>,
    /// Comma-separated thresholds.
    #[arg(long = "deltas", default_value = "0.7", value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Comma-separated sample fractions.
    #[arg(long = "fractions", default_value = "1.0", value_delimiter = ',')]
    fractions: Vec<f64>,
    /// Timing repeats per cell (median reported).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value = "sweep.csv")]
    output: PathBuf,
    /// Also write a performance profile over the sweep cells.
    #[arg(long)]
    profile_output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    sets: usize,
    #[arg(long, default_value_t = 8)]
    avg_elems: usize,
    #[arg(long, default_value_t = 26)]
    alphabet: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    q: usize,
    #[arg(long, default_value_t = 0.25)]
    planted_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    perturb_prob: f64,
    #[arg(long, default_value = "synthetic.txt")]
    output: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.7)]
    delta: f64,
    #[arg(long, default_value = "jac", value_parser = parse_sim)]
    sim: SimilarityKind,
    #[arg(long, default_value = "oracle_pairs.csv")]
    output: PathBuf,
}

fn report_path(pairs_path: &Path, format: ReportFormat) -> PathBuf {
    let ext = match format {
        ReportFormat::Json => "report.json",
        ReportFormat::Csv => "report.csv",
    };
    pairs_path.with_extension(ext)
}

fn print_summary(report: &JoinReport) {
    let t = &report.timings;
    println!(
        "{} pairs | candidates {} | verified {} | init {:.2} ms | generation {:.2} ms | \
         refinement {:.2} ms | verification {:.2} ms (dedup {:.2}, graph {:.2}, matching {:.2})",
        report.pairs.len(),
        report.counters.candidates_generated,
        report.counters.verified,
        PhaseTimings::ms(t.init_ns),
        PhaseTimings::ms(t.candidate_gen_ns),
        PhaseTimings::ms(t.refinement_ns),
        PhaseTimings::ms(t.verification_ns()),
        PhaseTimings::ms(t.dedup_ns),
        PhaseTimings::ms(t.graph_build_ns),
        PhaseTimings::ms(t.matching_ns),
    );
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Join(args) => {
            let col = args.input.load()?;
            let config = args.pipeline.config(args.matcher);
            let report = run_join(&col, &config)?;
            write_pairs_csv(&args.output, &report.pairs)?;
            let rp = report_path(&args.output, args.format);
            match args.format {
                ReportFormat::Json => write_report_json(&rp, &report)?,
                ReportFormat::Csv => {
                    std::fs::write(&rp, crate::bench::report_to_csv(&report))
                        .map_err(|e| Error::Io { path: rp.clone(), source: e })?;
                }
            }
            print_summary(&report);
            println!("pairs -> {} | report -> {}", args.output.display(), rp.display());
            Ok(())
        }
        Command::Compare(args) => {
            let col = args.input.load()?;
            let base = args.pipeline.config(MatcherKind::Hg);
            let rows = run_compare(&col, &base, &args.matcher, args.pipeline.ub_variant)?;
            let mut table = String::from(
                "version,kind,result_pairs,delta_sets,recall,precision,verification_ms,total_ms\n",
            );
            println!("kind  pairs  d#sets  recall    precision  verify_ms   total_ms");
            for row in &rows {
                let t = &row.report.timings;
                println!(
                    "{:<5} {:<6} {:<7} {:<9.4} {:<10.4} {:<11.3} {:<10.3}",
                    row.kind.to_string(),
                    row.report.pairs.len(),
                    row.accuracy.delta_sets,
                    row.accuracy.recall,
                    row.accuracy.precision,
                    PhaseTimings::ms(t.verification_ns()),
                    PhaseTimings::ms(t.total_ns()),
                );
                table.push_str(&format!(
                    "1,{},{},{},{},{},{},{}\n",
                    row.kind,
                    row.report.pairs.len(),
                    row.accuracy.delta_sets,
                    row.accuracy.recall,
                    row.accuracy.precision,
                    PhaseTimings::ms(t.verification_ns()),
                    PhaseTimings::ms(t.total_ns()),
                ));
            }
            if let Some(path) = &args.output {
                std::fs::write(path, table)
                    .map_err(|e| Error::Io { path: path.clone(), source: e })?;
                println!("table -> {}", path.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let col = args.input.load()?;
            let (pos, joint) = match args.pipeline.filters {
                FilterChoice::PositionalJoint => (true, true),
                FilterChoice::None => (false, false),
            };
            let opts = SweepOptions {
                sim: args.pipeline.sim,
                kinds: args.matcher.clone(),
                deltas: args.deltas.clone(),
                fractions: args.fractions.clone(),
                seed: args.input.seed,
                repeats: args.repeats,
                epsilon: args.pipeline.epsilon,
                use_positional: pos,
                use_joint: joint,
                ub_variant: args.pipeline.ub_variant,
            };
            let rows = run_sweep(&col, &opts)?;
            write_sweep_csv(&args.output, &rows)?;
            println!("{} sweep rows -> {}", rows.len(), args.output.display());
            let summary = summarize_speedups(&rows);
            if !summary.is_empty() {
                print!("{}", summary_to_csv(&summary));
            }
            if let Some(path) = &args.profile_output {
                // one profile instance per (delta, fraction) cell
                let mut instances = Vec::new();
                for &f in &opts.fractions {
                    for &d in &opts.deltas {
                        let cell: Vec<(MatcherKind, f64)> = rows
                            .iter()
                            .filter(|r| r.delta == d && r.fraction == f)
                            .map(|r| (r.kind, r.total_ms / 1e3))
                            .collect();
                        instances.push(cell);
                    }
                }
                let points = performance_profile(&instances);
                write_profile_csv(path, &points)?;
                println!("profile -> {}", path.display());
            }
            Ok(())
        }
        Command::Generate(args) => {
            let cfg = SynthConfig {
                n_sets: args.sets,
                avg_elems: args.avg_elems,
                alphabet: args.alphabet,
                seed: args.seed,
                q: args.q,
                planted_fraction: args.planted_fraction,
                perturb_prob: args.perturb_prob,
            };
            let col = generate_synthetic_with(&cfg)?;
            col.write_text(&args.output, ';')?;
            println!(
                "{} -> {}",
                crate::corpus::describe(&col),
                args.output.display()
            );
            Ok(())
        }
        Command::Oracle(args) => {
            let col = args.input.load()?;
            let report = run_oracle(&col, args.delta, args.sim)?;
            write_pairs_csv(&args.output, &report.pairs)?;
            println!("{} exact pairs -> {}", report.pairs.len(), args.output.display());
            Ok(())
        }
    }
}
