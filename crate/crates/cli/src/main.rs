//! Command-line front end for the merger model: merge and sort stream
//! files, reproduce execution traces, query comparator networks, simulate
//! merge trees, benchmark the sorter, and generate datasets.
//!
//! Exit codes: 0 success, 2 input validation failure, 3 configuration error.

mod render;
mod stream;

use clap::{Parser, Subcommand};
use flims_core::oracle::{gen_dataset, oracle_merge, DatasetSpec, KeyDistribution};
use flims_core::sorter::{bench_csv, bench_sort, SortConfig};
use flims_core::tree::{build_tree, simulate, TreeMode};
use flims_core::{
    build_network, comparator_count, export_network, merge_full, pipeline_latency, sort, Design,
    Direction, ExportFormat, MergeError, MergerConfig, Record, SimulateError, SortRule, Variant,
};
use std::path::PathBuf;
use std::str::FromStr;
use stream::{read_stream, write_stream, StreamHeader};

#[derive(Parser)]
#[command(
    name = "flims",
    version,
    about = "High-throughput 2-way merger model and tools"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "plain" => Ok(Variant::Plain),
        "skew" => Ok(Variant::Skew),
        "stable" => Ok(Variant::Stable),
        "flimsj" => Ok(Variant::Flimsj),
        other => Err(format!("unknown variant '{other}'")),
    }
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s.to_ascii_lowercase().as_str() {
        "descending" | "desc" => Ok(Direction::Descending),
        "ascending" | "asc" => Ok(Direction::Ascending),
        other => Err(format!("unknown direction '{other}'")),
    }
}

/// Comma-separated u64 list argument.
#[derive(Clone, Debug)]
struct U64List(Vec<u64>);

fn parse_values(s: &str) -> Result<U64List, String> {
    if s.trim().is_empty() {
        return Ok(U64List(Vec::new()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<Vec<u64>, String>>()
        .map(U64List)
}

#[derive(Subcommand)]
enum Cmd {
    /// Merge two sorted stream files.
    Merge {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 8)]
        w: usize,
        #[arg(long, value_parser = parse_variant, default_value = "plain")]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full cycle trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sort a stream file with the chunked kernel mergesort.
    Sort {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        chunk: usize,
        #[arg(long, default_value_t = 16)]
        kernel_w: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        stable: bool,
    },
    /// Trace a merge of two inline descending lists, cycle by cycle.
    Trace {
        #[arg(long, default_value_t = 4)]
        w: usize,
        #[arg(long, value_parser = parse_values)]
        a: U64List,
        #[arg(long, value_parser = parse_values)]
        b: U64List,
        #[arg(long, value_parser = parse_variant, default_value = "plain")]
        variant: Variant,
        /// Emit the trace as JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Print the comparator count of a design.
    Count {
        #[arg(long, value_parser = Design::from_str)]
        design: Design,
        #[arg(long)]
        w: usize,
    },
    /// Print the pipeline latency of a design.
    Latency {
        #[arg(long, value_parser = Design::from_str)]
        design: Design,
        #[arg(long)]
        w: usize,
    },
    /// Export a design's comparator network as DOT or JSON.
    Export {
        #[arg(long, value_parser = Design::from_str)]
        design: Design,
        #[arg(long)]
        w: usize,
        #[arg(long, value_parser = ExportFormat::from_str, default_value = "json")]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a parallel merge tree over sorted stream files (one per leaf).
    Simulate {
        #[arg(long)]
        leaves: usize,
        #[arg(long)]
        w_root: usize,
        /// Hybrid mode: each source pre-merges this many leaves.
        #[arg(long)]
        hpmt_k: Option<usize>,
        #[arg(long)]
        skew_variant: bool,
        #[arg(long, default_value_t = 8)]
        fifo_depth: usize,
        /// Write the merged output as a stream file.
        #[arg(long)]
        out: Option<PathBuf>,
        inputs: Vec<PathBuf>,
    },
    /// Benchmark the sorter; prints CSV.
    Bench {
        #[arg(long, value_parser = parse_values, default_value = "65536")]
        sizes: U64List,
        #[arg(long = "w-sweep", value_parser = parse_values, default_value = "16")]
        w_sweep: U64List,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Generate a dataset stream file.
    Gen {
        /// uniform | all-equal:<key> | zipf:<s> | runs:<p>
        #[arg(long, default_value = "uniform")]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sorted: bool,
        #[arg(long, value_parser = parse_direction, default_value = "descending")]
        direction: Direction,
        #[arg(long)]
        kv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference two-finger merge of two sorted stream files.
    OracleMerge {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stable: bool,
    },
}

enum CliError {
    Validation(String),
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Config(m) => m,
        }
    }
}

impl From<stream::StreamError> for CliError {
    fn from(e: stream::StreamError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MergeError> for CliError {
    fn from(e: MergeError) -> Self {
        match e {
            MergeError::Config(c) => CliError::Config(c.to_string()),
            MergeError::Validation(v) => CliError::Validation(v.to_string()),
        }
    }
}

impl From<flims_core::ConfigError> for CliError {
    fn from(e: flims_core::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::Config(c) => CliError::Config(c.to_string()),
            SimulateError::Validation(v) => CliError::Validation(v.to_string()),
        }
    }
}

fn check_sorted(name: &str, data: &[Record], rule: SortRule) -> Result<(), CliError> {
    if let Some(offset) = rule.first_unsorted_offset(data) {
        return Err(CliError::Validation(format!(
            "input {name} is not sorted in the declared direction: first out-of-order element at offset {offset}"
        )));
    }
    Ok(())
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Merge {
            a,
            b,
            w,
            variant,
            out,
            trace,
        } => {
            let (ha, da) = read_stream(&a)?;
            let (hb, db) = read_stream(&b)?;
            if ha != hb {
                return Err(CliError::Validation(format!(
                    "incompatible headers: {} is {:?}/kv={}, {} is {:?}/kv={}",
                    a.display(),
                    ha.direction,
                    ha.kv_mode,
                    b.display(),
                    hb.direction,
                    hb.kv_mode
                )));
            }
            let cfg = MergerConfig {
                w,
                direction: ha.direction,
                variant,
                kv_mode: ha.kv_mode,
            };
            let rule = cfg.rule();
            check_sorted("A", &da, rule)?;
            check_sorted("B", &db, rule)?;
            let (merged, cycle_trace) = merge_full(&da, &db, &cfg)?;
            write_stream(&out, ha, &merged)?;
            if let Some(tp) = trace {
                let json = serde_json::to_string(&cycle_trace).expect("trace serializes");
                write_text(Some(&tp), &json)?;
            }
            Ok(())
        }
        Cmd::Sort {
            input,
            out,
            chunk,
            kernel_w,
            threads,
            stable,
        } => {
            let (h, mut data) = read_stream(&input)?;
            let cfg = SortConfig {
                chunk_size: chunk,
                kernel_w,
                threads,
                direction: h.direction,
                kv_mode: h.kv_mode,
                stable,
            };
            sort(&mut data, &cfg)?;
            write_stream(&out, h, &data)?;
            Ok(())
        }
        Cmd::Trace {
            w,
            a,
            b,
            variant,
            json,
        } => {
            let da: Vec<Record> = a.0.into_iter().map(Record).collect();
            let db: Vec<Record> = b.0.into_iter().map(Record).collect();
            let cfg = MergerConfig::new(w, variant);
            let (_, trace) = merge_full(&da, &db, &cfg)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string(&trace).expect("trace serializes")
                );
            } else {
                print!("{}", render::render_trace(&da, &db, &trace));
            }
            Ok(())
        }
        Cmd::Count { design, w } => {
            println!("{}", comparator_count(design, w)?);
            Ok(())
        }
        Cmd::Latency { design, w } => {
            println!("{}", pipeline_latency(design, w)?);
            Ok(())
        }
        Cmd::Export {
            design,
            w,
            format,
            out,
        } => {
            let net = build_network(design, w)?;
            let doc = export_network(&net, format);
            write_text(out.as_ref(), &doc)
        }
        Cmd::Simulate {
            leaves,
            w_root,
            hpmt_k,
            skew_variant,
            fifo_depth,
            out,
            inputs,
        } => {
            if inputs.len() != leaves {
                return Err(CliError::Validation(format!(
                    "expected {leaves} input files, got {}",
                    inputs.len()
                )));
            }
            let mode = match hpmt_k {
                Some(k) => TreeMode::Hpmt { fan_in: k },
                None => TreeMode::Pmt,
            };
            let mut topo = build_tree(leaves, w_root, mode)?;
            topo.fifo_depth = fifo_depth;
            let mut lists = Vec::with_capacity(inputs.len());
            for p in &inputs {
                let (h, data) = read_stream(p)?;
                if h.direction != Direction::Descending || h.kv_mode {
                    return Err(CliError::Validation(format!(
                        "{}: tree simulation takes plain descending streams",
                        p.display()
                    )));
                }
                lists.push(data);
            }
            let (merged, stats) = simulate(&topo, &lists, skew_variant)?;
            if let Some(p) = out {
                write_stream(&p, StreamHeader::new(Direction::Descending, false), &merged)?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&stats).expect("stats serialize")
            );
            Ok(())
        }
        Cmd::Bench {
            sizes,
            w_sweep,
            threads,
        } => {
            let sizes: Vec<usize> = sizes.0.into_iter().map(|v| v as usize).collect();
            let mut rows = Vec::new();
            for &w in &w_sweep.0 {
                let cfg = SortConfig {
                    kernel_w: w as usize,
                    chunk_size: 512.max(w as usize * 32),
                    threads,
                    ..SortConfig::default()
                };
                rows.extend(bench_sort(&sizes, &cfg)?);
            }
            print!("{}", bench_csv(&rows));
            Ok(())
        }
        Cmd::Gen {
            dist,
            n,
            seed,
            sorted,
            direction,
            kv,
            out,
        } => {
            let distribution = parse_distribution(&dist)?;
            let spec = DatasetSpec {
                length: n,
                distribution,
                seed,
                sorted,
                direction,
                kv_mode: kv,
            };
            let data = gen_dataset(&spec);
            write_stream(&out, StreamHeader::new(direction, kv), &data)?;
            Ok(())
        }
        Cmd::OracleMerge { a, b, out, stable } => {
            let (ha, da) = read_stream(&a)?;
            let (hb, db) = read_stream(&b)?;
            if ha != hb {
                return Err(CliError::Validation("incompatible headers".into()));
            }
            let rule = SortRule::new(ha.direction, ha.kv_mode);
            check_sorted("A", &da, rule)?;
            check_sorted("B", &db, rule)?;
            let merged = oracle_merge(&da, &db, rule, stable);
            write_stream(&out, ha, &merged)?;
            Ok(())
        }
    }
}

fn parse_distribution(s: &str) -> Result<KeyDistribution, CliError> {
    let bad = CliError::Config;
    if s == "uniform" {
        return Ok(KeyDistribution::Uniform);
    }
    if let Some(rest) = s.strip_prefix("all-equal:") {
        return rest
            .parse::<u64>()
            .map(KeyDistribution::AllEqual)
            .map_err(|e| bad(format!("all-equal key: {e}")));
    }
    if let Some(rest) = s.strip_prefix("zipf:") {
        return rest
            .parse::<f64>()
            .map(KeyDistribution::Zipf)
            .map_err(|e| bad(format!("zipf exponent: {e}")));
    }
    if let Some(rest) = s.strip_prefix("runs:") {
        return rest
            .parse::<f64>()
            .map(KeyDistribution::RunsOfDuplicates)
            .map_err(|e| bad(format!("runs probability: {e}")));
    }
    Err(bad(format!(
        "unknown distribution '{s}' (uniform | all-equal:<key> | zipf:<s> | runs:<p>)"
    )))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
