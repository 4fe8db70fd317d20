//! Subcommands of the `owc` binary. Every command is a pure function of its
//! flags, the configuration file and `--seed`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use owc_core::channel::DelayClass;
use owc_core::config::{snr_grid, SystemConfig};
use owc_core::dataset::{generate_dataset, generate_samples, CorpusClass, Dataset};
use owc_core::estimators::CorrelationSet;
use owc_core::experiments::{
    run_ber_vs_snr, run_nmse_vs_snr, run_nmse_vs_time, trace_summary, write_csv, EstimatorKind, EstimatorSet,
};
use owc_core::nn::{EpochStats, Net};
use owc_core::pipeline::{bank_from_nets, build_correlations, load_bank, train_on_dataset};
use owc_core::selector::SelectorBank;
use owc_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "owc",
    version,
    about = "Optical wireless OFDM channel estimation experiments"
)]
pub struct Cli {
    /// TOML file overriding the default scenario, modem and training settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled training corpus.
    GenData {
        /// lds, mds, hds or mixed.
        #[arg(long)]
        class: CorpusClass,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long)]
        snr_min: Option<f64>,
        #[arg(long)]
        snr_max: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the channel correlations used by the MMSE estimator.
    EstimateCorr {
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one network on a corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// NMSE against SNR.
    EvalNmseSnr {
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// NMSE along a cycling LDS, MDS, HDS schedule.
    EvalNmseTime {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        duration: Option<usize>,
        #[arg(long)]
        dwell: Option<usize>,
        /// Channels averaged per time point.
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Uncoded bit error rate against SNR.
    EvalBer {
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Generate corpora, fit correlations, train the three networks and run
    /// all evaluations into one directory.
    Reproduce {
        #[arg(long, default_value_t = 10_000)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 100_000)]
        corr_count: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Network weights as CLASS=PATH; all three classes are needed by the
    /// network estimators.
    #[arg(long = "weights", value_parser = parse_weight)]
    pub weights: Vec<(DelayClass, PathBuf)>,
    /// Correlation file, needed by mmse.
    #[arg(long)]
    pub corr: Option<PathBuf>,
    /// Comma-separated estimators.
    #[arg(long, value_delimiter = ',', default_value = "ls,mmse,hds_only,adaptive,direct")]
    pub estimators: Vec<EstimatorKind>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub snr_min: Option<f64>,
    #[arg(long)]
    pub snr_max: Option<f64>,
    #[arg(long)]
    pub snr_step: Option<f64>,
}

fn parse_weight(s: &str) -> std::result::Result<(DelayClass, PathBuf), String> {
    let (class, path) = s.split_once('=').ok_or("expected CLASS=PATH")?;
    let class = class.parse::<DelayClass>().map_err(|e| e.to_string())?;
    Ok((class, PathBuf::from(path)))
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(p),
        None => Ok(SystemConfig::default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn log_epoch(s: &EpochStats) {
    match s.val_loss {
        Some(v) => eprintln!(
            "epoch {:3}  lr {:.2e}  train {:.4e}  val {:.4e}",
            s.epoch, s.lr, s.train_loss, v
        ),
        None => eprintln!("epoch {:3}  lr {:.2e}  train {:.4e}", s.epoch, s.lr, s.train_loss),
    }
}

struct Models {
    corr: Option<CorrelationSet>,
    bank: Option<SelectorBank<Net<f32>>>,
}

impl Models {
    fn load(cfg: &SystemConfig, eval: &EvalArgs) -> Result<Self> {
        let corr = eval.corr.as_deref().map(CorrelationSet::load).transpose()?;
        let bank = if eval.weights.is_empty() {
            None
        } else {
            let find = |c: DelayClass| {
                eval.weights
                    .iter()
                    .rev()
                    .find(|(k, _)| *k == c)
                    .map(|(_, p)| p.as_path())
                    .ok_or_else(|| Error::Config(format!("missing --weights {c}=PATH")))
            };
            Some(load_bank(
                cfg,
                find(DelayClass::Lds)?,
                find(DelayClass::Mds)?,
                find(DelayClass::Hds)?,
            )?)
        };
        Ok(Self { corr, bank })
    }

    fn set<'a>(&'a self, cfg: &SystemConfig) -> Result<EstimatorSet<'a, Net<f32>>> {
        EstimatorSet::new(cfg, self.corr.as_ref(), self.bank.as_ref())
    }
}

fn grid(cfg: &SystemConfig, g: &GridArgs) -> Result<Vec<f64>> {
    let e = &cfg.experiment;
    snr_grid(
        g.snr_min.unwrap_or(e.snr_min_db),
        g.snr_max.unwrap_or(e.snr_max_db),
        g.snr_step.unwrap_or(e.snr_step_db),
    )
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed;
    match cli.command {
        Command::GenData {
            class,
            count,
            snr_min,
            snr_max,
            out,
        } => {
            let (lo, hi) = cfg.experiment.train_snr_db;
            let h = generate_dataset(
                &cfg,
                class,
                count,
                (snr_min.unwrap_or(lo), snr_max.unwrap_or(hi)),
                seed,
                &out,
            )?;
            eprintln!("wrote {} {} samples to {}", h.count, h.class, out.display());
        }
        Command::EstimateCorr { count, out } => {
            let corr = build_correlations(&cfg, count, seed)?;
            corr.save(&out)?;
            eprintln!("wrote correlations over {count} channels to {}", out.display());
        }
        Command::Train { data, epochs, out } => {
            let ds = Dataset::load(&data)?;
            cfg.train.seed = seed;
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let (net, _) = train_on_dataset(&cfg, &ds, &cfg.train, log_epoch)?;
            net.to_weights().save(&out)?;
        }
        Command::EvalNmseSnr { eval, grid: g } => {
            let models = Models::load(&cfg, &eval)?;
            let rows = run_nmse_vs_snr(
                &cfg,
                &models.set(&cfg)?,
                &eval.estimators,
                &grid(&cfg, &g)?,
                eval.trials.unwrap_or(cfg.experiment.trials),
                seed,
            )?;
            write_csv(output(eval.out.as_deref())?, &rows)?;
        }
        Command::EvalNmseTime {
            eval,
            duration,
            dwell,
            realizations,
            snr,
        } => {
            let e = &cfg.experiment;
            let models = Models::load(&cfg, &eval)?;
            let rows = run_nmse_vs_time(
                &cfg,
                &models.set(&cfg)?,
                &eval.estimators,
                duration.unwrap_or(e.duration_s),
                dwell.unwrap_or(e.dwell_s),
                realizations.unwrap_or(e.realizations_per_point),
                snr.unwrap_or(e.time_snr_db),
                seed,
            )?;
            for (name, mean, var) in trace_summary(&rows) {
                eprintln!("{name:>9}: trace mean {mean:.5e}  variance {var:.3e}");
            }
            write_csv(output(eval.out.as_deref())?, &rows)?;
        }
        Command::EvalBer { eval, grid: g } => {
            let models = Models::load(&cfg, &eval)?;
            let rows = run_ber_vs_snr(
                &cfg,
                &models.set(&cfg)?,
                &eval.estimators,
                &grid(&cfg, &g)?,
                eval.trials.unwrap_or(cfg.experiment.trials),
                seed,
            )?;
            write_csv(output(eval.out.as_deref())?, &rows)?;
        }
        Command::Reproduce {
            samples_per_class,
            corr_count,
            epochs,
            trials,
            out,
        } => reproduce(cfg, seed, samples_per_class, corr_count, epochs, trials, &out)?,
    }
    Ok(())
}

fn reproduce(
    mut cfg: SystemConfig,
    seed: u64,
    per_class: usize,
    corr_count: usize,
    epochs: Option<usize>,
    trials: Option<usize>,
    out: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    cfg.train.seed = seed;
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    let trials = trials.unwrap_or(cfg.experiment.trials);
    let corr = build_correlations(&cfg, corr_count, seed)?;
    corr.save(&out.join("corr.owcw"))?;

    let mut nets = Vec::new();
    for (i, class) in DelayClass::ALL.into_iter().enumerate() {
        eprintln!("training {class} network");
        let ds = generate_samples(
            &cfg,
            CorpusClass::Only(class),
            per_class,
            cfg.experiment.train_snr_db,
            seed.wrapping_add(i as u64 + 1),
        )?;
        let (net, _) = train_on_dataset(&cfg, &ds, &cfg.train, log_epoch)?;
        net.to_weights().save(&out.join(format!("{class}.owcw")))?;
        nets.push(net);
    }
    let nets: [Net<f32>; 3] = nets.try_into().map_err(|_| Error::Empty("network list"))?;
    let bank = bank_from_nets(&cfg, nets)?;
    let set = EstimatorSet::new(&cfg, Some(&corr), Some(&bank))?;
    let kinds = EstimatorKind::ALL;
    let snrs = cfg.experiment.snr_grid()?;
    let eval_seed = seed.wrapping_add(1000);

    eprintln!("nmse vs snr");
    let rows = run_nmse_vs_snr(&cfg, &set, &kinds, &snrs, trials, eval_seed)?;
    write_csv(File::create(out.join("nmse_snr.csv"))?, &rows)?;
    eprintln!("ber vs snr");
    let rows = run_ber_vs_snr(&cfg, &set, &kinds, &snrs, trials, eval_seed)?;
    write_csv(File::create(out.join("ber_snr.csv"))?, &rows)?;
    eprintln!("nmse vs time");
    let e = &cfg.experiment;
    let rows = run_nmse_vs_time(
        &cfg,
        &set,
        &kinds,
        e.duration_s,
        e.dwell_s,
        e.realizations_per_point,
        e.time_snr_db,
        eval_seed,
    )?;
    for (name, mean, var) in trace_summary(&rows) {
        eprintln!("{name:>9}: trace mean {mean:.5e}  variance {var:.3e}");
    }
    write_csv(File::create(out.join("nmse_time.csv"))?, &rows)?;
    Ok(())
}
