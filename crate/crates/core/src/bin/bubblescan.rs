use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bubblescan::evaluation::{
    auto_thresholds, error_diagram, skill_summary, write_error_diagram_csv, write_plot_csv,
};
use bubblescan::extrema::{detect_crashes, detect_rebounds};
use bubblescan::lppl::{
    aggregate_tc_quantiles, fit_window, read_fits_csv, scan, write_fits_csv, write_fits_jsonl,
    ModelKind, SearchConfig,
};
use bubblescan::pattern::{
    alarm_series, eligible_fits, read_alarm_csv, train, write_alarm_csv, AlarmConfig, FeatureSet,
    TrainConfig,
};
use bubblescan::pipeline::{run_pipeline, RunConfig};
use bubblescan::synth::{plant_rebound_course, synth_lppl_series, PlantSpec, SynthSpec};
use bubblescan::timeseries::{date_from_day_number, load_csv, write_csv};
use bubblescan::windows::generate_windows;
use bubblescan::{Error, GridConfig, PriceSeries, Result, Window};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bubblescan",
    version,
    about = "LPPL bubble scans, rebound alarms and error diagrams"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Price CSV
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, default_value = "date")]
    date_col: String,
    #[arg(long, global = true, default_value = "adj_close")]
    price_col: String,
    #[arg(long, global = true)]
    t10: Option<NaiveDate>,
    #[arg(long, global = true)]
    t20: Option<NaiveDate>,
    #[arg(long, global = true)]
    dt1: Option<i64>,
    #[arg(long, global = true)]
    dt2: Option<i64>,
    #[arg(long, global = true)]
    dt_min: Option<i64>,
    #[arg(long, global = true)]
    dt_max: Option<i64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lppl,
    PowerLaw,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every window of the grid
    Scan {
        #[arg(long, value_enum, default_value = "lppl")]
        model: Model,
        /// Fits CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jsonl: Option<PathBuf>,
        /// Critical-time quantile bands to report, e.g. 0.05:0.95,0.2:0.8
        #[arg(long)]
        bands: Option<String>,
    },
    /// Fit a single window given as START,END
    Fit {
        #[arg(long, value_parser = parse_window)]
        window: Window,
        #[arg(long, value_enum, default_value = "lppl")]
        model: Model,
    },
    /// Days that are the lowest price within +-radius trading days
    Rebounds {
        #[arg(long, default_value_t = 200)]
        radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drops larger than `drop` within `horizon` calendar days of a local high
    Crashes {
        #[arg(long, default_value_t = 0.15)]
        drop: f64,
        #[arg(long, default_value_t = 21)]
        horizon: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn Class I / Class II features from fits ending before the split
    Train {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long, default_value = "1975-01-01")]
        split: NaiveDate,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[arg(long, default_value_t = 20.0)]
        delta: f64,
        #[arg(long, default_value_t = 3)]
        bins: usize,
        #[arg(long, default_value_t = 200)]
        radius: usize,
        /// Keep positive-bubble fits as well
        #[arg(long)]
        all_signs: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebound alarm index over a span
    Alarm {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
        #[arg(long, default_value_t = 20.0)]
        delta: f64,
        /// Reject features learned on or after this date
        #[arg(long)]
        split: Option<NaiveDate>,
        #[arg(long)]
        causal: bool,
        #[arg(long)]
        all_signs: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Miss fraction against alarm fraction over thresholds
    ErrorDiagram {
        #[arg(long)]
        alarm: PathBuf,
        #[arg(long, default_value_t = 40)]
        duration: usize,
        #[arg(long, default_value_t = 200)]
        radius: usize,
        /// `auto` or a comma-separated list
        #[arg(long, default_value = "auto")]
        thresholds: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot-ready CSV with the random-predictor diagonal
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Synthetic series with a JSON ground-truth sidecar
    Synth {
        /// JSON SynthSpec; a planted rebound course is generated when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        bubbles: usize,
        #[arg(long, default_value_t = 500)]
        spacing: usize,
        #[arg(long, default_value_t = 0.005)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full protocol into an artifact directory
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// key=value overrides, repeatable
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    let a: NaiveDate = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: NaiveDate = b.trim().parse().map_err(|e| format!("{e}"))?;
    Window::new(a, b).map_err(|e| e.to_string())
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

impl Common {
    fn series(&self) -> Result<PriceSeries> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let (series, report) = load_csv(path, &self.date_col, &self.price_col)?;
        if report.rows_rejected > 0 {
            log::warn!(
                "{} of {} rows rejected",
                report.rows_rejected,
                report.rows_read
            );
        }
        Ok(series)
    }

    fn grid(&self, mut g: GridConfig) -> GridConfig {
        g.t10 = self.t10.unwrap_or(g.t10);
        g.t20 = self.t20.unwrap_or(g.t20);
        g.dt1 = self.dt1.unwrap_or(g.dt1);
        g.dt2 = self.dt2.unwrap_or(g.dt2);
        g.dt_min = self.dt_min.unwrap_or(g.dt_min);
        g.dt_max = self.dt_max.unwrap_or(g.dt_max);
        g
    }

    fn search(&self, model: Model) -> SearchConfig {
        let mut s = SearchConfig {
            model: match model {
                Model::Lppl => ModelKind::Lppl,
                Model::PowerLaw => ModelKind::PowerLaw,
            },
            ..SearchConfig::default()
        };
        s.seed = self.seed.unwrap_or(s.seed);
        s
    }
}

fn read_fits(path: &Path) -> Result<Vec<bubblescan::lppl::FitResult>> {
    read_fits_csv(open(path)?)
}

fn execute(cli: Cli) -> Result<()> {
    let c = &cli.common;
    if c.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(c.workers)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Scan {
            model,
            out,
            jsonl,
            bands,
        } => {
            let series = c.series()?;
            let windows = generate_windows(&c.grid(GridConfig::default()))?;
            log::info!("{} windows", windows.len());
            let report = scan(&series, &windows, &c.search(*model))?;
            write_fits_csv(&report.fits, sink(out)?)?;
            if let Some(p) = jsonl {
                write_fits_jsonl(&report.fits, sink(&Some(p.clone()))?)?;
            }
            if let Some(b) = bands {
                let levels = b
                    .split(',')
                    .map(|pair| {
                        let (lo, hi) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Config(format!("bad band `{pair}`")))?;
                        let p = |s: &str| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Config(format!("bad band `{pair}`")))
                        };
                        Ok((p(lo)?, p(hi)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for band in aggregate_tc_quantiles(&report.fits, &levels)? {
                    eprintln!(
                        "tc {:.2}-{:.2}: {} .. {}",
                        band.lower_level,
                        band.upper_level,
                        date_from_day_number(band.lower),
                        date_from_day_number(band.upper)
                    );
                }
            }
        }
        Command::Fit { window, model } => {
            let series = c.series()?;
            let fit = fit_window(&series, window, &c.search(*model))?;
            let mut w = sink(&None)?;
            serde_json::to_writer_pretty(&mut w, &fit)?;
            writeln!(w).map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Rebounds { radius, out } => {
            detect_rebounds(&c.series()?, *radius).write_csv(sink(out)?)?;
        }
        Command::Crashes { drop, horizon, out } => {
            detect_crashes(&c.series()?, *drop, *horizon).write_csv(sink(out)?)?;
        }
        Command::Train {
            fits,
            split,
            alpha,
            beta,
            delta,
            bins,
            radius,
            all_signs,
            out,
        } => {
            let series = c.series()?;
            let cfg = TrainConfig {
                split: *split,
                delta: *delta,
                bins_per_parameter: *bins,
                alpha: *alpha,
                beta: *beta,
                negative_bubbles_only: !all_signs,
            };
            let (labeled, features) =
                train(&read_fits(fits)?, &detect_rebounds(&series, *radius), &cfg)?;
            log::info!(
                "{} learning fits, {} Class I",
                labeled.len(),
                features.n_class_i
            );
            features.write_json(sink(out)?)?;
        }
        Command::Alarm {
            fits,
            features,
            from,
            to,
            delta,
            split,
            causal,
            all_signs,
            out,
        } => {
            let series = c.series()?;
            let features = FeatureSet::read_json(open(features)?)?;
            let fits = read_fits(fits)?;
            let filter = TrainConfig {
                negative_bubbles_only: !all_signs,
                ..TrainConfig::default()
            };
            let scoring: Vec<_> = eligible_fits(&fits, &filter).cloned().collect();
            let cfg = AlarmConfig {
                from: *from,
                to: *to,
                proximity: *delta,
                split: *split,
                causal: *causal,
            };
            write_alarm_csv(
                &alarm_series(&series, &scoring, &features, &cfg)?,
                sink(out)?,
            )?;
        }
        Command::ErrorDiagram {
            alarm,
            duration,
            radius,
            thresholds,
            out,
            plot,
        } => {
            let series = c.series()?;
            let ri = read_alarm_csv(open(alarm)?, &series)?;
            let th = if thresholds == "auto" {
                auto_thresholds(&ri)
            } else {
                thresholds
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad threshold `{s}`")))
                    })
                    .collect::<Result<_>>()?
            };
            let points = error_diagram(&ri, &detect_rebounds(&series, *radius), &th, *duration)?;
            eprintln!("skill {:.4}", skill_summary(&points)?);
            write_error_diagram_csv(&points, sink(out)?)?;
            if plot.is_some() {
                write_plot_csv(&points, sink(plot)?)?;
            }
        }
        Command::Synth {
            spec,
            bubbles,
            spacing,
            noise,
            out,
        } => {
            let sidecar = out.with_extension("json");
            let (series, truth) = match spec {
                Some(p) => {
                    let spec: SynthSpec = serde_json::from_reader(open(p)?)?;
                    let (s, t) = synth_lppl_series(&spec)?;
                    (s, serde_json::to_value(t)?)
                }
                None => {
                    let mut plant = PlantSpec {
                        n_bubbles: *bubbles,
                        spacing: *spacing,
                        noise_sigma: *noise,
                        ..PlantSpec::default()
                    };
                    plant.seed = c.seed.unwrap_or(plant.seed);
                    let (s, t) = plant_rebound_course(&plant)?;
                    (s, serde_json::to_value(t)?)
                }
            };
            write_csv(
                &series,
                sink(&Some(out.clone()))?,
                &c.date_col,
                &c.price_col,
            )?;
            serde_json::to_writer_pretty(sink(&Some(sidecar))?, &truth)?;
        }
        Command::Run {
            config,
            overrides,
            output,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::from_file(p)?,
                None => RunConfig::default(),
            };
            if let Some(p) = &c.input {
                cfg.input = p.clone();
            }
            cfg.date_col = c.date_col.clone();
            cfg.price_col = c.price_col.clone();
            cfg.grid = c.grid(cfg.grid.clone());
            cfg.search.seed = c.seed.unwrap_or(cfg.search.seed);
            cfg.workers = c.workers;
            for kv in overrides {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
                cfg.set(k, v)?;
            }
            if let Some(o) = output {
                cfg.output = o.clone();
            }
            let summary = run_pipeline(&cfg)?;
            for o in &summary.outcomes {
                println!(
                    "alpha={} beta={}: skill in-sample {:.3}, out-of-sample {:.3}, miss at alarm<=0.3 {:.3}",
                    o.alpha, o.beta, o.in_sample_skill, o.out_of_sample_skill, o.out_of_sample_miss_at_0_3
                );
            }
            println!("artifacts in {}", cfg.output.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = execute(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
