//! Command-line interface: corpus and record synthesis, model training,
//! prediction, evaluation, and benchmark reporting. All file outputs are
//! plain JSON/CSV (or the documented text formats) and are byte-stable
//! under a fixed seed; progress chatter goes to stderr.

use clap::{Parser, Subcommand};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;
use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use symskel::bench::{mssp_on_curves, report_to_csv, report_to_json, run_benchmark};
use symskel::config::{
    eval_config_from, mlp_config_from, mst_config_from, pipeline_config_from, resolve_seed,
    FileConfig,
};
use symskel::data::{generate_sets, records_from_string, records_to_string};
use symskel::expr::{parse_prefix, Skeleton};
use symskel::ga::evaluate_skeleton;
use symskel::gen::{generate_corpus, Corpus, GenConfig};
use symskel::mlp::{save_mlp, train_mlp};
use symskel::mst::{encode, greedy_decode, load_model, make_batch, save_model, train_step, MSTModel};

#[derive(Parser)]
#[command(name = "symskel", version, about = "Univariate skeleton prediction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a skeleton corpus file.
    GenCorpus {
        /// Number of distinct skeletons.
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Operator budget per expression.
        #[arg(long = "max-ops")]
        max_ops: Option<usize>,
    },
    /// Synthesize training records (support sets + responses) from a corpus.
    GenRecords {
        #[arg(long)]
        corpus: PathBuf,
        /// Sets per collection.
        #[arg(long = "Ns", default_value_t = 10)]
        ns: usize,
        /// Points per set.
        #[arg(long, default_value_t = 3000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the feed-forward regressor on a CSV of observed samples.
    TrainNn {
        /// CSV rows `x1,...,xt,y`; `#` lines are comments.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the skeleton transformer on a record file.
    TrainMst {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Fixed-step gradient-descent updates over the full record batch.
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decode a skeleton for each collection in a record file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        collection: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an estimated family against a target family.
    Evaluate {
        /// Estimate, prefix tokens (`add c mul c x`).
        #[arg(long)]
        est: String,
        /// Ground-truth family, prefix tokens.
        #[arg(long)]
        target: String,
        /// Sampling domain `lo,hi`; test points use the expanded domain.
        #[arg(long, allow_hyphen_values = true)]
        domain: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the benchmark suite and write JSON + CSV reports.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "out-json", default_value = "bench_report.json")]
        out_json: PathBuf,
        #[arg(long = "out-csv", default_value = "bench_report.csv")]
        out_csv: PathBuf,
        /// Record wall-clock per cell (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Decode one family from response curves (JSON `[[xs, ys], ...]`).
    Curves {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
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

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Box<dyn Error>> {
    Ok(match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    })
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), Box<dyn Error>> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_skeleton(label: &str, tokens: &str) -> Result<Skeleton, Box<dyn Error>> {
    let tree = parse_prefix(tokens).map_err(|e| format!("{label}: {e}"))?;
    Skeleton::new(tree).map_err(|e| format!("{label}: {e}").into())
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::GenCorpus {
            size,
            seed,
            out,
            max_ops,
        } => {
            let mut cfg = GenConfig::default();
            cfg.rng_seed = resolve_seed(seed, None)?;
            if let Some(m) = max_ops {
                cfg.max_operators = m;
            }
            let corpus = generate_corpus(size, &cfg)?;
            std::fs::write(&out, corpus.to_file_string())?;
            eprintln!("wrote {} skeletons to {}", corpus.entries.len(), out.display());
        }
        Command::GenRecords {
            corpus,
            ns,
            n,
            out,
            seed,
        } => {
            let corpus = Corpus::from_file_string(&std::fs::read_to_string(&corpus)?)?;
            let mut rng = ChaCha12Rng::seed_from_u64(resolve_seed(seed, None)?);
            let mut records = Vec::new();
            let mut skipped = 0usize;
            for entry in &corpus.entries {
                let skel = parse_skeleton("corpus entry", entry)?;
                match generate_sets(&skel, ns, n, &mut rng) {
                    Ok(c) => records.push(c),
                    Err(e) => {
                        skipped += 1;
                        eprintln!("skipping {entry}: {e}");
                    }
                }
            }
            if records.is_empty() {
                return Err("no records could be generated".into());
            }
            std::fs::write(&out, records_to_string(&records))?;
            eprintln!(
                "wrote {} records to {} ({skipped} skipped)",
                records.len(),
                out.display()
            );
        }
        Command::TrainNn {
            data,
            config,
            out,
            seed,
        } => {
            let file = load_file_config(config.as_deref())?;
            let mut cfg = mlp_config_from(&file)?;
            cfg.rng_seed = resolve_seed(seed, file.get_u64("seed")?)?;
            let (x, y) = read_csv_data(&data)?;
            let (model, report) = train_mlp(&x, &y, &cfg)?;
            save_mlp(&model, &out)?;
            eprintln!("saved model to {}", out.display());
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::TrainMst {
            records,
            config,
            out,
            steps,
            seed,
        } => {
            let file = load_file_config(config.as_deref())?;
            let mut cfg = mst_config_from(&file)?;
            cfg.rng_seed = resolve_seed(seed, file.get_u64("seed")?)?;
            let recs = records_from_string(&std::fs::read_to_string(&records)?)?;
            let batch = make_batch(&recs);
            let mut model = MSTModel::new(cfg);
            let mut last = f64::NAN;
            for step in 1..=steps {
                last = train_step(&mut model, &batch)?;
                if step % 10 == 0 || step == steps {
                    eprintln!("step {step}: loss {last:.6}");
                }
            }
            save_model(&model, &out)?;
            eprintln!("saved model to {}", out.display());
            println!("{}", json!({ "steps": steps, "final_loss": last }));
        }
        Command::Predict {
            model,
            collection,
            out,
        } => {
            let model = load_model(&model)?;
            let colls = records_from_string(&std::fs::read_to_string(&collection)?)?;
            let mut rows = Vec::new();
            for coll in &colls {
                let row = match encode(&model, coll).and_then(|z| greedy_decode(&model, &z)) {
                    Ok(sk) => json!({ "skeleton": sk.to_string() }),
                    Err(e) => json!({ "diagnostic": e.to_string() }),
                };
                rows.push(row);
            }
            let mut text = serde_json::to_string_pretty(&rows)?;
            text.push('\n');
            write_out(out.as_deref(), &text)?;
        }
        Command::Evaluate {
            est,
            target,
            domain,
            seed,
            out,
            config,
        } => {
            let file = load_file_config(config.as_deref())?;
            let mut cfg = eval_config_from(&file)?;
            cfg.rng_seed = resolve_seed(seed, file.get_u64("seed")?)?;
            let est = parse_skeleton("--est", &est)?;
            let target = parse_skeleton("--target", &target)?;
            let (lo, hi) = parse_domain(&domain)?;
            let result = evaluate_skeleton(&est, &target, (lo, hi), &cfg);
            let mut text = serde_json::to_string_pretty(&result)?;
            text.push('\n');
            write_out(out.as_deref(), &text)?;
        }
        Command::Bench {
            config,
            seed,
            out_json,
            out_csv,
            timings,
        } => {
            let file = load_file_config(config.as_deref())?;
            let mut cfg = pipeline_config_from(&file)?;
            cfg.seed = resolve_seed(seed, file.get_u64("seed")?)?;
            if timings {
                cfg.timings = true;
            }
            let report = run_benchmark(&cfg)?;
            std::fs::write(&out_json, report_to_json(&report))?;
            std::fs::write(&out_csv, report_to_csv(&report))?;
            eprintln!(
                "wrote {} cells to {} and {}",
                report.cells.len(),
                out_json.display(),
                out_csv.display()
            );
        }
        Command::Curves { model, curves, out } => {
            let model = load_model(&model)?;
            let text = std::fs::read_to_string(&curves)?;
            let curves: Vec<(Vec<f64>, Vec<f64>)> = serde_json::from_str(&text)?;
            let skeleton = mssp_on_curves(&curves, &model)?;
            let mut text = serde_json::to_string_pretty(&json!({
                "skeleton": skeleton.to_string()
            }))?;
            text.push('\n');
            write_out(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn parse_domain(s: &str) -> Result<(f64, f64), Box<dyn Error>> {
    let err = || format!("--domain: expected `lo,hi`, got `{s}`");
    let (lo, hi) = s.split_once(',').ok_or_else(err)?;
    let lo: f64 = lo.trim().parse().map_err(|_| err())?;
    let hi: f64 = hi.trim().parse().map_err(|_| err())?;
    if !(lo < hi) {
        return Err(format!("--domain: need lo < hi, got {lo},{hi}").into());
    }
    Ok((lo, hi))
}

/// CSV rows `x1,...,xt,y` with uniform width; `#` lines and blanks skipped.
fn read_csv_data(path: &Path) -> Result<(Array2<f64>, Array1<f64>), Box<dyn Error>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|p| p.trim().parse()).collect();
        let row = row.map_err(|_| format!("{}:{}: bad number", path.display(), i + 1))?;
        if row.len() < 2 {
            return Err(format!("{}:{}: need at least x and y", path.display(), i + 1).into());
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!("{}:{}: ragged row", path.display(), i + 1).into());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format!("{}: no data rows", path.display()).into());
    }
    let t = rows[0].len() - 1;
    let mut x = Array2::zeros((rows.len(), t));
    let mut y = Array1::zeros(rows.len());
    for (i, row) in rows.iter().enumerate() {
        for j in 0..t {
            x[[i, j]] = row[j];
        }
        y[i] = row[t];
    }
    Ok((x, y))
}
