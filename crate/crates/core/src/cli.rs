// SPDX-License-Identifier: Apache-2.0

//! The `sufforge` command line.
//!
//! Generate reads, build their suffix array with in-process store shards,
//! check it against the brute-force oracle, then look at the footprint:
//!
//! ```text
//! $ sufforge gen --count 100 --length 50 --seed 7 --paired --output reads.tsv
//! $ sufforge build --input reads.tsv --input reads.tsv.2 --output sa --embedded-store --prefix-len 13
//! $ sufforge verify --input reads.tsv --input reads.tsv.2 --against sa
//! $ sufforge footprint --normalize sa/report.json --reference output
//! $ sufforge footprint --predict --spills 34.06 --factor 10 --shuffle-units 1.03
//! 1.88
//! $ sufforge build --input reads.tsv --output sa-text --mode materialized --reducers 2
//! ```
//!
//! For networked shards start one server per shard, then point `build` at
//! them in shard order:
//!
//! ```text
//! sufforge serve --shard-index 0 --shard-count 2 --listen 127.0.0.1:7400
//! sufforge serve --shard-index 1 --shard-count 2 --listen 127.0.0.1:7401
//! sufforge build --input reads.tsv --output sa --store 127.0.0.1:7400,127.0.0.1:7401
//! ```
//!
//! Settings can also come from a `key = value` file passed with `--config`;
//! flags given on the command line win.
//!
//! Exit status: 0 success, 2 usage, 3 configuration, 4 input, 5 store
//! transport, 6 verification mismatch, 1 anything else.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::footprint::{normalize_to, Reference};
use crate::model::{plan_merge, spill_count, DEFAULT_MERGE_FACTOR};
use crate::oracle::{gen_reads, paired_reads, sort_suffixes, write_reads_tsv};
use crate::pipeline::{
    build_sa, ingest_files, list_part_files, write_output_line, Mode, PipelineConfig,
    PipelineError, RunReport,
};
use crate::store::{Shard, ShardServer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INGEST: i32 = 4;
pub const EXIT_TRANSPORT: i32 = 5;
pub const EXIT_MISMATCH: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "sufforge", version, about = "Suffix arrays of short reads via an index shuffle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve one read-store shard.
    Serve {
        #[arg(long)]
        shard_index: usize,
        #[arg(long)]
        shard_count: usize,
        #[arg(long, default_value = "127.0.0.1:7400")]
        listen: String,
    },
    /// Write deterministic random reads as `seq<TAB>read` lines.
    Gen {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write reversed mates with seq count..2*count.
        #[arg(long)]
        paired: bool,
        #[arg(long)]
        output: PathBuf,
        /// Mate file; defaults to `<output>.2`.
        #[arg(long)]
        output2: Option<PathBuf>,
    },
    /// Build the suffix array.
    Build(BuildArgs),
    /// Compare a built suffix array with the brute-force oracle.
    Verify {
        #[arg(long = "input", required = true, num_args = 1)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        against: PathBuf,
        #[arg(long)]
        indexes_only: bool,
    },
    /// Merge-cost prediction and counter normalization.
    Footprint(FootprintArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long = "input", num_args = 1)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mappers: Option<usize>,
    #[arg(long)]
    reducers: Option<usize>,
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    prefix_len: Option<usize>,
    /// Suffixes accumulated per reducer batch (accepts 1.6e6).
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sample_per_partition: Option<usize>,
    #[arg(long)]
    map_buffer_bytes: Option<u64>,
    #[arg(long)]
    spill_fraction: Option<f64>,
    #[arg(long)]
    merge_factor: Option<usize>,
    #[arg(long)]
    group_limit: Option<u64>,
    /// Comma-separated shard endpoints, shard 0 first.
    #[arg(long, value_delimiter = ',')]
    store: Vec<String>,
    /// Spawn the store shards in-process.
    #[arg(long)]
    embedded_store: bool,
    /// Write only packed indexes to the part files.
    #[arg(long)]
    indexes_only: bool,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    /// Report path; defaults to `<output>/report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FootprintArgs {
    /// Predict merge units from a spill count or from data and buffer sizes.
    #[arg(long, conflicts_with = "normalize")]
    predict: bool,
    #[arg(long)]
    spills: Option<f64>,
    #[arg(long, requires = "buffer")]
    data: Option<f64>,
    #[arg(long)]
    buffer: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    #[arg(long, default_value_t = DEFAULT_MERGE_FACTOR)]
    factor: usize,
    /// Multiplier for the shuffled data relative to the reference.
    #[arg(long, default_value_t = 1.0)]
    shuffle_units: f64,
    /// Print the merge plan before the units.
    #[arg(long)]
    explain: bool,
    /// Run report to normalize.
    #[arg(long)]
    normalize: Option<PathBuf>,
    #[arg(long, default_value = "input")]
    reference: Reference,
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::Ingest { .. } => EXIT_INGEST,
            PipelineError::Transport(_)
            | PipelineError::StoreRejected(_)
            | PipelineError::StoreCorruption(_) => EXIT_TRANSPORT,
            _ => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(EXIT_OTHER, e.to_string())
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    match dispatch(cli.command, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sufforge: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Serve {
            shard_index,
            shard_count,
            listen,
        } => serve(shard_index, shard_count, &listen, out),
        Command::Gen {
            count,
            length,
            seed,
            paired,
            output,
            output2,
        } => gen(count, length, seed, paired, &output, output2, out),
        Command::Build(args) => build(args, out),
        Command::Verify {
            inputs,
            against,
            indexes_only,
        } => verify(&inputs, &against, indexes_only, out),
        Command::Footprint(args) => footprint(args, out),
    }
}

fn serve(index: usize, count: usize, listen: &str, out: &mut dyn Write) -> Result<(), CliError> {
    if count == 0 || index >= count {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!("shard index {index} out of range for {count} shards"),
        ));
    }
    let server = ShardServer::bind(Shard::new(index, count), listen)
        .map_err(|e| CliError::new(EXIT_TRANSPORT, format!("cannot listen on {listen}: {e}")))?;
    writeln!(out, "shard {index}/{count} listening on {}", server.local_addr())?;
    out.flush()?;
    server.join();
    Ok(())
}

fn gen(
    count: usize,
    length: usize,
    seed: u64,
    paired: bool,
    output: &Path,
    output2: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if count == 0 || !(1..=998).contains(&length) {
        return Err(CliError::new(
            EXIT_CONFIG,
            "need --count >= 1 and --length in 1..=998",
        ));
    }
    let reads = gen_reads(count, length, seed);
    write_reads_tsv(&reads, BufWriter::new(File::create(output)?))?;
    writeln!(out, "wrote {count} reads to {}", output.display())?;
    if paired {
        let mut name = output.as_os_str().to_owned();
        name.push(".2");
        let path = output2.unwrap_or_else(|| PathBuf::from(name));
        write_reads_tsv(&paired_reads(&reads), BufWriter::new(File::create(&path)?))?;
        writeln!(out, "wrote {count} mates to {}", path.display())?;
    }
    Ok(())
}

fn build_config(args: &BuildArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display()))
        })?;
        cfg.apply_text(&text)?;
    }
    if !args.inputs.is_empty() {
        cfg.inputs = args.inputs.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    take!(output, mappers, reducers, shards, prefix_len, mode, seed, sample_per_partition);
    take!(map_buffer_bytes, spill_fraction, merge_factor, group_limit);
    if let Some(t) = &args.threshold {
        cfg.set("threshold", t).map_err(|e| CliError::new(EXIT_CONFIG, e))?;
    }
    if !args.store.is_empty() {
        cfg.store = args.store.clone();
    }
    if args.work_dir.is_some() {
        cfg.work_dir = args.work_dir.clone();
    }
    cfg.embedded_store |= args.embedded_store;
    cfg.indexes_only |= args.indexes_only;
    Ok(cfg)
}

fn build(args: BuildArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = build_config(&args)?;
    let report = build_sa(&cfg)?;
    let path = args
        .report
        .unwrap_or_else(|| cfg.output.join("report.json"));
    fs::write(&path, report.to_json())?;
    writeln!(
        out,
        "{} suffixes from {} reads into {} part files in {:.2}s; shuffled {} bytes; report {}",
        report.suffix_count,
        report.reads,
        report.output_files.len(),
        report.timings.total_s,
        report.footprint.shuffled_bytes(),
        path.display()
    )?;
    Ok(())
}

fn verify(
    inputs: &[PathBuf],
    against: &Path,
    indexes_only: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if inputs.len() > 2 {
        return Err(CliError::new(EXIT_CONFIG, "expected 1 or 2 input files"));
    }
    let ingested = ingest_files(inputs)?;
    let expected = sort_suffixes(ingested.reads.iter().map(|r| (r.seq(), r.text())));
    let parts = list_part_files(against).map_err(|e| {
        CliError::new(EXIT_CONFIG, format!("cannot list {}: {e}", against.display()))
    })?;
    if parts.is_empty() {
        return Err(CliError::new(
            EXIT_MISMATCH,
            format!("no part files in {}", against.display()),
        ));
    }

    let mismatch = |line: u64, part: &Path, want: Option<&[u8]>, got: Option<&[u8]>| {
        let show = |v: Option<&[u8]>| match v {
            Some(b) => format!("{:?}", String::from_utf8_lossy(b.strip_suffix(b"\n").unwrap_or(b))),
            None => "end of output".to_string(),
        };
        CliError::new(
            EXIT_MISMATCH,
            format!(
                "mismatch at line {line} ({}): expected {}, got {}",
                part.display(),
                show(want),
                show(got)
            ),
        )
    };

    let mut want = Vec::new();
    let mut got = Vec::new();
    let mut next = expected.iter();
    let mut line = 0u64;
    for part in &parts {
        let mut reader = BufReader::new(File::open(part)?);
        loop {
            got.clear();
            if reader.read_until(b'\n', &mut got)? == 0 {
                break;
            }
            line += 1;
            let Some(&(suffix, idx)) = next.next() else {
                return Err(mismatch(line, part, None, Some(&got)));
            };
            want.clear();
            write_output_line(&mut want, suffix, idx, indexes_only)?;
            if want != got {
                return Err(mismatch(line, part, Some(&want), Some(&got)));
            }
        }
    }
    if let Some(&(suffix, idx)) = next.next() {
        want.clear();
        write_output_line(&mut want, suffix, idx, indexes_only)?;
        return Err(mismatch(line + 1, parts.last().unwrap(), Some(&want), None));
    }
    writeln!(out, "ok: {line} suffixes match across {} part files", parts.len())?;
    Ok(())
}

fn footprint(args: FootprintArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &args.normalize {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display()))
        })?;
        let report = RunReport::from_json(&text)
            .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
        let table = normalize_to(&report.footprint, args.reference)
            .map_err(|e| CliError::new(EXIT_OTHER, e.to_string()))?;
        write!(out, "{table}")?;
        return Ok(());
    }
    if !args.predict {
        return Err(CliError::new(EXIT_USAGE, "give --predict or --normalize REPORT"));
    }
    let raw = match (args.spills, args.data, args.buffer) {
        (Some(s), None, _) => s,
        (None, Some(d), Some(b)) => spill_count(d, b, args.fraction).0,
        _ => {
            return Err(CliError::new(
                EXIT_USAGE,
                "--predict needs --spills or --data with --buffer",
            ))
        }
    };
    if !(raw > 0.0) || args.factor < 2 {
        return Err(CliError::new(EXIT_CONFIG, "need spills > 0 and --factor >= 2"));
    }
    let plan = plan_merge(raw, args.factor);
    if args.explain {
        writeln!(
            out,
            "spills {:.2} ({} files), {} intermediate merges consuming {} files, \
             final fan-in {}, read {:.3} / write {:.3} units",
            plan.spill_count_raw,
            plan.spill_count_files,
            plan.intermediate_rounds,
            plan.files_consumed,
            plan.final_fan_in(),
            plan.read_units,
            plan.write_units
        )?;
    }
    writeln!(out, "{:.2}", plan.write_units * args.shuffle_units)?;
    Ok(())
}
