use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rexgen::center::{CenterModel, CenterVariant};
use rexgen::diffengine::ParamStore;
use rexgen::pipeline::train::gen_config;
use rexgen::pipeline::{
    evaluate, load_dataset, split_records, train_center, train_ranker, CenterSource, EpochStats, Predictor, RankerSource,
    ReactionRecord, RunConfig,
};
use rexgen::ranker::{RankerModel, RankerVariant};
use rexgen::selfcheck;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rexgen", version, about = "Reaction outcome prediction from atom-mapped reactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the reaction-center model.
    TrainCenter(Common),
    /// Train the candidate ranker (recorded centers unless a center model is given).
    TrainRanker(Common),
    /// Predict products for reactant SMILES.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Reactant SMILES or reaction lines; read from --data when omitted.
        inputs: Vec<String>,
        /// Number of products to print per input.
        #[arg(long)]
        top_n: Option<usize>,
    },
    /// Score checkpoints on a dataset.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Which part of the hash split to evaluate.
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
        /// Print key=value lines instead of a table.
        #[arg(long)]
        kv: bool,
    },
    /// Run the gradient and reference-implementation checks.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    All,
    Train,
    Dev,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Local,
    Global,
    Wln,
    Wldn,
}

#[derive(Args)]
struct Common {
    /// Reaction file, one "reactants>reagents>products" line per reaction.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint to load; repeat for a center model and a ranker.
    #[arg(long)]
    model: Vec<PathBuf>,
    /// Where to write the trained checkpoint.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Center pairs handed to candidate generation [default: 6]
    #[arg(long)]
    k: Option<usize>,
    /// WLN depth [default: 3]
    #[arg(long)]
    depth: Option<usize>,
    /// Hidden size [default: 64]
    #[arg(long)]
    hidden: Option<usize>,
    /// Most bond changes per candidate [default: 3]
    #[arg(long)]
    max_changes: Option<usize>,
    /// Training epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Reactions per optimizer step [default: 10]
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    /// Seed for initialization and shuffling [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// local or global (center), wln or wldn (ranker)
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Add the recorded product to candidate lists that miss it.
    #[arg(long)]
    augment_truth: bool,
    /// key=value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p)?;
        }
        let mut set = |key: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                cfg.set(key, &v)?;
            }
            Ok(())
        };
        set("data", self.data.as_ref().map(|p| p.display().to_string()))?;
        set("k", self.k.map(|v| v.to_string()))?;
        set("depth", self.depth.map(|v| v.to_string()))?;
        set("hidden", self.hidden.map(|v| v.to_string()))?;
        set("max_changes", self.max_changes.map(|v| v.to_string()))?;
        set("epochs", self.epochs.map(|v| v.to_string()))?;
        set("batch", self.batch.map(|v| v.to_string()))?;
        set("lr", self.lr.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        if self.augment_truth {
            set("augment_truth", Some("true".into()))?;
        }
        match self.variant {
            Some(VariantArg::Local) => cfg.center_variant = CenterVariant::Local,
            Some(VariantArg::Global) => cfg.center_variant = CenterVariant::Global,
            Some(VariantArg::Wln) => cfg.ranker_variant = RankerVariant::SumPool,
            Some(VariantArg::Wldn) => cfg.ranker_variant = RankerVariant::Wldn,
            None => {}
        }
        Ok(cfg)
    }
}

/// Checkpoints sorted by kind.
struct Models {
    center: Option<(CenterModel, ParamStore)>,
    ranker: Option<(RankerModel, ParamStore)>,
}

fn load_models(paths: &[PathBuf]) -> Result<Models> {
    let mut m = Models { center: None, ranker: None };
    for p in paths {
        let store = ParamStore::load(p).with_context(|| format!("loading {}", p.display()))?;
        match store.meta("kind") {
            Some("center") => {
                let model = CenterModel::from_store(&store).map_err(|e| anyhow!("{}: {e}", p.display()))?;
                if m.center.replace((model, store)).is_some() {
                    bail!("more than one center checkpoint given");
                }
            }
            Some("ranker") => {
                let model = RankerModel::from_store(&store).map_err(|e| anyhow!("{}: {e}", p.display()))?;
                if m.ranker.replace((model, store)).is_some() {
                    bail!("more than one ranker checkpoint given");
                }
            }
            _ => bail!("{}: unrecognized checkpoint kind", p.display()),
        }
    }
    Ok(m)
}

fn load_records(path: &Path, cfg: &RunConfig) -> Result<Vec<ReactionRecord>> {
    let ds = load_dataset(path, cfg.max_atoms)?;
    for (line, err) in &ds.skipped {
        eprintln!("{}:{line}: skipped: {err}", path.display());
    }
    eprintln!("{}: {} reactions, {} skipped", path.display(), ds.records.len(), ds.skipped.len());
    Ok(ds.records)
}

/// Training and dev records: an explicit dev file if configured, else the
/// hash split of the data file.
fn training_data(cfg: &RunConfig) -> Result<(Vec<ReactionRecord>, Vec<ReactionRecord>)> {
    let data = cfg.data.as_ref().ok_or_else(|| anyhow!("--data is required"))?;
    let records = load_records(data, cfg)?;
    if let Some(dev) = &cfg.dev_data {
        return Ok((records, load_records(dev, cfg)?));
    }
    let s = split_records(records, cfg.train_fraction, cfg.dev_fraction);
    eprintln!("split: {} train, {} dev, {} test", s.train.len(), s.dev.len(), s.test.len());
    Ok((s.train, s.dev))
}

fn log_epoch(metric: &str) -> impl FnMut(&EpochStats) + '_ {
    move |s: &EpochStats| {
        let dev = s.dev_metric.map_or(String::new(), |d| format!(" dev {metric} {d:.4}"));
        eprintln!("epoch {:>3}  loss {:>12.4}  train {metric} {:.4}{dev}  lr {:.2e}", s.epoch, s.loss, s.train_metric, s.lr);
    }
}

fn save(store: &ParamStore, out: &Option<PathBuf>, default: &str) -> Result<()> {
    let path = out.clone().unwrap_or_else(|| PathBuf::from(default));
    store.save(&path).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("saved {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::TrainCenter(common) => {
            if matches!(common.variant, Some(VariantArg::Wln | VariantArg::Wldn)) {
                bail!("--variant for the center model is local or global");
            }
            let cfg = common.run_config()?;
            let (train, dev) = training_data(&cfg)?;
            let metric = format!("coverage@{}", cfg.k);
            let out = train_center(&cfg, &train, &dev, &mut log_epoch(&metric))?;
            eprintln!("best epoch {}", out.best_epoch);
            save(&out.store, &common.out, "center.ckpt")?;
        }
        Command::TrainRanker(common) => {
            if matches!(common.variant, Some(VariantArg::Local | VariantArg::Global)) {
                bail!("--variant for the ranker is wln or wldn");
            }
            let cfg = common.run_config()?;
            let models = load_models(&common.model)?;
            let source = match &models.center {
                Some((m, s)) => CenterSource::Model(m, s),
                None => {
                    eprintln!("no center checkpoint: using recorded centers");
                    CenterSource::Oracle
                }
            };
            let (train, dev) = training_data(&cfg)?;
            let out = train_ranker(&cfg, &train, &dev, source, &mut log_epoch("P@1"))?;
            eprintln!("best epoch {}", out.best_epoch);
            save(&out.store, &common.out, "ranker.ckpt")?;
        }
        Command::Predict { common, inputs, top_n } => {
            let cfg = common.run_config()?;
            let models = load_models(&common.model)?;
            let (Some((_, cs)), Some((_, rs))) = (models.center, models.ranker) else {
                bail!("predict needs a center checkpoint and a ranker checkpoint (--model twice)");
            };
            let predictor = Predictor::new(cs, rs, gen_config(&cfg))?;
            let inputs = if inputs.is_empty() {
                let path = cfg.data.as_ref().ok_or_else(|| anyhow!("give reactant SMILES or --data"))?;
                std::fs::read_to_string(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_string)
                    .collect()
            } else {
                inputs
            };
            let mut all_ok = true;
            for input in &inputs {
                println!("> {input}");
                match predictor.predict(input, top_n.unwrap_or(cfg.top_n)) {
                    Ok(p) => {
                        for r in &p.products {
                            println!("{}\t{:.6}\t{}\t{}", r.rank, r.score, r.smiles, r.edits);
                        }
                        if p.truncated {
                            println!("# candidate list truncated at {}", cfg.candidate_cap);
                        }
                    }
                    Err(e) => {
                        all_ok = false;
                        println!("# {e}");
                    }
                }
            }
            return Ok(all_ok);
        }
        Command::Evaluate { common, split, kv } => {
            let cfg = common.run_config()?;
            let models = load_models(&common.model)?;
            let path = cfg.test_data.clone().or_else(|| cfg.data.clone()).ok_or_else(|| anyhow!("--data is required"))?;
            let records = load_records(&path, &cfg)?;
            let records = match split {
                SplitArg::All => records,
                _ => {
                    let s = split_records(records, cfg.train_fraction, cfg.dev_fraction);
                    match split {
                        SplitArg::Train => s.train,
                        SplitArg::Dev => s.dev,
                        _ => s.test,
                    }
                }
            };
            let centers = match &models.center {
                Some((m, s)) => CenterSource::Model(m, s),
                None => CenterSource::Oracle,
            };
            let ranker = match &models.ranker {
                Some((m, s)) => RankerSource::Model(m, s),
                None => RankerSource::Oracle,
            };
            if models.center.is_none() {
                eprintln!("no center checkpoint: using recorded centers");
            }
            if models.ranker.is_none() {
                eprintln!("no ranker checkpoint: precision is the candidate-list upper bound");
            }
            let report = evaluate(&records, centers, ranker, &cfg)?;
            print!("{}", if kv { report.to_key_values() } else { report.to_table() });
        }
        Command::Selfcheck { seed } => {
            let mut ok = true;
            for c in selfcheck::run_all(seed) {
                println!("{c}");
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
