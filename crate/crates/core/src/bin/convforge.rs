use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convforge::harness::{
    ablate, eval_checkpoint, gradcheck_suite, run_train, write_synth, DataSource, Precision, RunConfig, SynthSpec,
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_INPUT_HW,
};
use convforge::model::{InitScheme, ModelKind};
use convforge::nn::gradcheck::DEFAULT_TOLERANCE;
use convforge::optim::{Algorithm, DEFAULT_BASE_LR};

#[derive(Parser)]
#[command(
    name = "convforge",
    version,
    about = "Train and evaluate small VGG-style image classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write the loss curve, checkpoints and test report
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "adamw")]
        optimizer: Algorithm,
        /// Resume from a checkpoint written by an identical run
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a manifest
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
        batch_size: usize,
        /// Also write the key-value report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train once per optimizer and print the comparison table
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Finite-difference check of every layer and a small VGG-mini (f64)
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value = "f64")]
        precision: Precision,
    },
    /// Write a synthetic dataset as PGM files plus manifest.tsv
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        per_class: usize,
        #[arg(long, default_value_t = DEFAULT_INPUT_HW)]
        hw: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "vgg-mini")]
    model: ModelKind,
    #[arg(long, default_value_t = DEFAULT_BASE_LR)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Require an explicit seed
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value = "f32")]
    precision: Precision,
    /// Manifest of PGM images; without it a synthetic set is generated
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    synth_seed: u64,
    #[arg(long, default_value_t = 256)]
    synth_per_class: usize,
    #[arg(long, default_value_t = DEFAULT_INPUT_HW)]
    input_hw: usize,
    #[arg(long, default_value = "he_normal")]
    init: InitScheme,
    /// AdamW decoupled weight decay
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    max_grad_norm: Option<f64>,
    /// Hidden widths of the MLP baseline, comma separated
    #[arg(long, value_delimiter = ',', default_value = "64")]
    mlp_hidden: Vec<usize>,
    /// train,val,test fractions
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.15,0.15")]
    split: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, String> {
        let seed = match (self.seed, self.deterministic) {
            (Some(s), _) => s,
            (None, true) => return Err("--deterministic requires --seed".into()),
            (None, false) => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_nanos() as u64),
        };
        let fractions: [f64; 3] = self
            .split
            .try_into()
            .map_err(|_| "--split needs exactly three fractions".to_string())?;
        let data = match self.manifest {
            Some(p) => DataSource::Manifest(p),
            None => DataSource::Synth(SynthSpec {
                seed: self.synth_seed,
                n_per_class: self.synth_per_class,
                hw: self.input_hw,
            }),
        };
        let mut cfg = RunConfig::new(data);
        cfg.model = self.model;
        cfg.base_lr = self.lr;
        cfg.batch_size = self.batch_size;
        cfg.epochs = self.epochs;
        cfg.seed = seed;
        cfg.deterministic = self.deterministic;
        cfg.precision = self.precision;
        cfg.init = self.init;
        cfg.input_hw = self.input_hw;
        cfg.fractions = fractions;
        cfg.mlp_hidden = self.mlp_hidden;
        cfg.checkpoint_every = self.checkpoint_every;
        cfg.out_dir = self.out;
        if let Some(wd) = self.weight_decay {
            cfg.hyper.weight_decay = wd;
        }
        cfg.hyper.max_grad_norm = self.max_grad_norm;
        log::info!("seed {seed}");
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Train { run, optimizer, resume } => {
            let mut cfg = run.into_config()?;
            cfg.optimizer = optimizer;
            cfg.resume_from = resume;
            let summary = run_train(&cfg).map_err(|e| format!("train: {e}"))?;
            println!("train accuracy {:.4}", summary.train_report.accuracy);
            if let Some(r) = &summary.test_report {
                println!("{r}");
            }
        }
        Command::Eval {
            checkpoint,
            manifest,
            batch_size,
            out,
        } => {
            let report = eval_checkpoint(&checkpoint, &manifest, batch_size).map_err(|e| format!("eval: {e}"))?;
            println!("{report}");
            if let Some(path) = out {
                std::fs::write(&path, report.to_kv()).map_err(|e| format!("eval: writing {}: {e}", path.display()))?;
            }
        }
        Command::Ablate { run } => {
            let cfg = run.into_config()?;
            let table = ablate(&cfg);
            print!("{}", table.render());
            if let Some(dir) = &cfg.out_dir {
                let path = dir.join("ablation.txt");
                std::fs::write(&path, table.render())
                    .map_err(|e| format!("ablate: writing {}: {e}", path.display()))?;
            }
            if table.rows.iter().any(|r| r.result.is_err()) {
                return Err("ablate: at least one optimizer run failed".into());
            }
        }
        Command::Gradcheck {
            seeds,
            tolerance,
            precision,
        } => {
            if precision != Precision::F64 {
                return Err("gradcheck: only f64 precision is supported".into());
            }
            let reports = gradcheck_suite(0..seeds, tolerance).map_err(|e| format!("gradcheck: {e}"))?;
            let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).collect();
            for r in &failed {
                print!("{r}");
            }
            let worst = reports.iter().map(|r| r.max_rel_error()).fold(0.0, f64::max);
            println!(
                "{} checks, {} failed, max relative error {worst:.3e} (tolerance {tolerance:.1e})",
                reports.len(),
                failed.len()
            );
            if !failed.is_empty() {
                return Err("gradcheck: tolerance exceeded".into());
            }
        }
        Command::Synth {
            seed,
            per_class,
            hw,
            out,
        } => {
            let spec = SynthSpec {
                seed,
                n_per_class: per_class,
                hw,
            };
            let manifest = write_synth(&spec, &out).map_err(|e| format!("synth: {e}"))?;
            println!(
                "wrote {} images and {}",
                manifest.len(),
                out.join("manifest.tsv").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
