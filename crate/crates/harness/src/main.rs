use std::path::PathBuf;

use actsearch_core::synthetic::TwoGaussians;
use actsearch_core::EngineKind;
use actsearch_harness::bench::scaling_bench;
use actsearch_harness::config::{parse_seeds, Bandwidth, DataSource, InitPolicy, RffConfig};
use actsearch_harness::lemma::{lemma_trials, TrialOptions};
use actsearch_harness::probe::{run_pairwise_probe, ProbeOptions};
use actsearch_harness::report::{self, emit_report, format_summary};
use actsearch_harness::{run_experiment, RunConfig};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "actsearch", version, about = "Active-search experiments and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run recall experiments and write curves and a summary.
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare LAS and WNAS on random positive/negative starting pairs.
    Probe {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 100)]
        top: usize,
    },
    /// Check the block-structure bound on random two-block instances.
    Lemma {
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time LAS iterations across dataset sizes.
    Bench {
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long, default_value_t = 50)]
        r: usize,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', default_value = "5000,50000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 60)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regenerate report files from a saved curves.json.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct HyperArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    pi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    engine: Option<EngineKind>,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    budget: Option<usize>,
    /// Seed list such as `0..10` or `1,5,9`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    init_policy: Option<InitPolicy>,
    /// CSV file with one point per row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    /// Label column of the CSV file.
    #[arg(long)]
    label_column: Option<usize>,
    /// Surrogate size when no data file is given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rff_dim: Option<usize>,
    /// RBF bandwidth, a number or `median`; required with --rff-dim.
    #[arg(long)]
    rff_sigma: Option<Bandwidth>,
}

impl HyperArgs {
    fn apply(&self, h: &mut actsearch_core::HyperParams) -> anyhow::Result<()> {
        if let Some(v) = self.lambda {
            h.lambda = v;
        }
        if let Some(v) = self.w0 {
            h.w0 = v;
        }
        if let Some(v) = self.pi {
            h.pi = v;
        }
        if let Some(v) = self.alpha {
            h.alpha = v;
        }
        h.validate()?;
        Ok(())
    }
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?,
            None => RunConfig::surrogate(),
        };
        if let Some(path) = &self.data {
            cfg.data = DataSource::Csv {
                path: path.clone(),
                header: self.header,
                label_column: self.label_column,
                categorical: vec![],
            };
        } else if let Some(n) = self.n {
            match &mut cfg.data {
                DataSource::TwoGaussians(g) => g.n = n,
                _ => cfg.data = DataSource::TwoGaussians(TwoGaussians::new(n, 20, 0.01, 0)),
            }
        }
        if let Some(e) = self.engine {
            cfg.engine = e;
        }
        self.hyper.apply(&mut cfg.h)?;
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = parse_seeds(s)?;
        }
        if let Some(p) = self.init_policy {
            cfg.init_policy = p;
        }
        match (self.rff_dim, self.rff_sigma) {
            (Some(dim), Some(sigma)) => cfg.rff = Some(RffConfig { dim, sigma, seed: 0 }),
            (Some(_), None) => bail!("--rff-dim needs --rff-sigma (a bandwidth or `median`)"),
            (None, Some(_)) => bail!("--rff-sigma needs --rff-dim"),
            (None, None) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { run, out } => {
            let cfg = run.resolve()?;
            let curves = run_experiment(&cfg)?;
            let paths = emit_report(&curves, &out)?;
            for s in report::summaries(&curves)? {
                println!("{}", format_summary(&s));
            }
            println!("wrote {} files to {}", paths.len(), out.display());
        }
        Command::Probe { run, pairs, top } => {
            let cfg = run.resolve()?;
            let d = cfg.load_dataset()?;
            let opts = ProbeOptions {
                pairs,
                top,
                ..ProbeOptions::default()
            };
            let r = run_pairwise_probe(&d, cfg.h, &opts)?;
            println!(
                "{} valid pairs, {} excluded; positives in top {top}: las {:.2}, wnas {:.2}",
                r.valid.len(),
                r.excluded,
                r.las_mean,
                r.wnas_mean
            );
        }
        Command::Lemma {
            hyper,
            trials,
            n,
            eps,
            seed,
        } => {
            let mut h = actsearch_core::HyperParams::default();
            hyper.apply(&mut h)?;
            let opts = TrialOptions {
                trials,
                n,
                eps,
                seed,
                ..TrialOptions::default()
            };
            let reports = lemma_trials(&opts, &h)?;
            let holds = reports.iter().filter(|r| r.holds).count();
            let stieltjes = reports.iter().filter(|r| r.stieltjes).count();
            println!("{}", serde_json::to_string_pretty(&reports.first())?);
            println!("bound holds on {holds}/{trials}, inverse nonnegative on {stieltjes}/{trials}");
            if holds < trials || stieltjes < trials {
                std::process::exit(1);
            }
        }
        Command::Bench {
            hyper,
            r,
            n,
            iters,
            seed,
        } => {
            let mut h = actsearch_core::HyperParams::default();
            hyper.apply(&mut h)?;
            let table = scaling_bench(r, &n, iters, seed, &h)?;
            println!("n,r,init_s,median_iter_s,asg_refused");
            for row in &table.rows {
                println!(
                    "{},{},{:.6},{:.6},{}",
                    row.n, row.r, row.init_seconds, row.median_iter_seconds, row.asg_refused
                );
            }
            println!("# slope {:.3e} s per point", table.seconds_per_point);
        }
        Command::Report { input, out } => {
            let curves = report::load_curves(&input)?;
            let paths = emit_report(&curves, &out)?;
            for s in report::summaries(&curves)? {
                println!("{}", format_summary(&s));
            }
            println!("wrote {} files to {}", paths.len(), out.display());
        }
    }
    Ok(())
}
