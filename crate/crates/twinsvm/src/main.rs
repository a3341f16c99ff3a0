use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use twinsvm::config::{parse_kernels, parse_model, ExperimentConfig};
use twinsvm::core::dataset::CrossplaneConfig;
use twinsvm::core::evaluation::search::candidates;
use twinsvm::core::evaluation::{auc, Grids};
use twinsvm::core::pipeline::train;
use twinsvm::core::{Hyperparams, KernelFamily, KernelSpec, Label};
use twinsvm::data::{load_dataset, save_dataset};
use twinsvm::experiment::{describe, run_experiment, search, sweep_energy, write_sweep};
use twinsvm::model_io::{load_model, save_model, SavedModel};
use twinsvm::report::{sig6, write_rank_reports, RankReport};

#[derive(Parser)]
#[command(name = "twinsvm", version, about = "Least-squares twin SVM experiments")]
struct Cli {
    /// Worker threads; defaults to TWINSVM_WORKERS, then the CPU count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune and score every model on every dataset of a config.
    Run { config: PathBuf },
    /// Mean CV AUC over an (E1, E2) grid.
    SweepEnergy {
        config: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.6, 0.7, 0.8, 0.9, 1.0])]
        e1: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.6, 0.7, 0.8, 0.9, 1.0])]
        e2: Vec<f64>,
        /// Defaults to `sweep_<model>.csv` in the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank statistics from a results file.
    RankReport {
        results: PathBuf,
        /// Defaults to the results file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a crossplane dataset (`.csv` as CSV, anything else as KEEL).
    GenCrossplane {
        #[arg(long)]
        pos: usize,
        #[arg(long)]
        neg: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "linear")]
        kernel: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c_reg: f64,
        #[arg(long, default_value_t = 1.0)]
        e1: f64,
        #[arg(long, default_value_t = 1.0)]
        e2: f64,
        /// Pick the constants by cross-validated search over the default grids.
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a dataset with a saved model.
    Predict {
        #[arg(long = "model-file")]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Writes `index,predicted` with the file's class tokens.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_reports(reports: &[RankReport]) {
    for r in reports {
        print!("{}", r.stats_text());
    }
}

fn single_kernel(s: &str) -> Result<KernelFamily> {
    match parse_kernels(s)?.as_slice() {
        [k] => Ok(*k),
        _ => bail!("choose one kernel: linear or gaussian"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.workers.or_else(twinsvm::workers_from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            print!("{}", out.results_csv);
            print_reports(&out.reports);
            if let Some(e) = out.report_error {
                eprintln!("rank report skipped: {e}");
            }
            eprintln!("wrote {}", cfg.output_dir.display());
        }
        Command::SweepEnergy {
            config,
            model,
            e1,
            e2,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let kind = parse_model(&model)?;
            let rows = sweep_energy(&cfg, kind, &e1, &e2)?;
            let path = match out {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(&cfg.output_dir)
                        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
                    cfg.output_dir.join(format!("sweep_{}.csv", kind.id()))
                }
            };
            write_sweep(&rows, &path)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::RankReport { results, out } => {
            let text = std::fs::read_to_string(&results).with_context(|| format!("reading {}", results.display()))?;
            let dir = out.unwrap_or_else(|| results.parent().unwrap_or(Path::new(".")).to_path_buf());
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let reports = write_rank_reports(&text, &dir).with_context(|| format!("ranking {}", results.display()))?;
            print_reports(&reports);
        }
        Command::GenCrossplane {
            pos,
            neg,
            noise,
            seed,
            x_min,
            x_max,
            out,
        } => {
            let cfg = CrossplaneConfig {
                x_min,
                x_max,
                ..CrossplaneConfig::new(pos, neg, noise, seed)
            };
            save_dataset(&cfg.generate()?, &out)?;
        }
        Command::Train {
            data,
            model,
            kernel,
            sigma,
            c,
            c_reg,
            e1,
            e2,
            search: tune,
            folds,
            seed,
            out,
        } => {
            let kind = parse_model(&model)?;
            let family = single_kernel(&kernel)?;
            let loaded = load_dataset(&data, None)?;
            let d = &loaded.dataset;
            let grids = if tune { Grids::default() } else { Grids::single(sigma, c, c_reg, e1, e2) };
            let cands = candidates(kind, family, &grids)?;
            let spec = KernelSpec { family, sigma };
            let template = Hyperparams::new(spec, kind.solver_params(c, c_reg, e1, e2));
            let (hp, chosen) = if tune {
                let r = search(kind, d, &cands, folds, seed, &template)?;
                eprintln!("cv auc {}", sig6(100.0 * r.cv_auc));
                (r.best, r.candidate)
            } else {
                (cands[0].hyperparams(kind, &template), cands[0])
            };
            let m = train(kind, d, &hp)?;
            let train_auc = auc(d.labels(), &m.predict(d.features())?)?;
            eprintln!("{kind} {} training auc {}", describe(kind, &chosen), sig6(100.0 * train_auc));
            save_model(
                &SavedModel {
                    model: m,
                    labels: loaded.labels,
                },
                &out,
            )?;
        }
        Command::Predict { model_file, data, out } => {
            let saved = load_model(&model_file)?;
            let loaded = load_dataset(&data, Some(&saved.labels))?;
            let d = &loaded.dataset;
            let pred = saved.model.predict(d.features())?;
            if let Some(path) = out {
                let mut text = String::from("index,predicted\n");
                for (i, l) in pred.iter().enumerate() {
                    let token = match l {
                        Label::Positive => &saved.labels.positive,
                        Label::Negative => &saved.labels.negative,
                    };
                    text.push_str(&format!("{i},{token}\n"));
                }
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            match auc(d.labels(), &pred) {
                Ok(a) => println!("auc {}", sig6(100.0 * a)),
                Err(e) => eprintln!("auc unavailable: {e}"),
            }
        }
    }
    Ok(())
}
