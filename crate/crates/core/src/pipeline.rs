//! End-to-end rebound-prediction run.
//!
//! ingest -> window grid -> scan fits -> rebounds -> train on the learning
//! period -> alarm index (in-sample and out-of-sample) -> error diagrams.
//!
//! Configuration is flat `key = value` text. The canonical form of a config
//! (every key, fixed order, output path and worker count excluded) is written
//! into the artifact directory and hashed into the manifest, so a run can be
//! replayed from its manifest alone. Nothing time-dependent is written.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, StageExt};
use crate::evaluation::{
    auto_thresholds, error_diagram, miss_at_alarm, skill_summary, write_error_diagram_csv,
    write_plot_csv, ErrorDiagramPoint,
};
use crate::extrema::{detect_rebounds, EventSet};
use crate::lppl::{scan, write_fits_csv, write_fits_jsonl, FitResult, ModelKind, SearchConfig};
use crate::pattern::{
    alarm_series, eligible_fits, train, write_alarm_csv, AlarmConfig, AlarmPoint, LabeledFit,
    TrainConfig,
};
use crate::timeseries::{load_csv, PriceSeries};
use crate::windows::{generate_windows, write_windows_csv, GridConfig, GRID_CONVENTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Thresholds {
    /// Every distinct RI value plus sentinels below and above.
    Auto,
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub date_col: String,
    pub price_col: String,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub search: SearchConfig,
    pub radius: usize,
    /// Split, proximity, bins and B-sign filter; `alpha`/`beta` are taken from `alpha_beta`.
    pub train: TrainConfig,
    pub alpha_beta: Vec<(f64, f64)>,
    /// Trading days an alarm lasts after a threshold crossing.
    pub duration: usize,
    pub thresholds: Thresholds,
    /// Score a day only from fits whose window ends on or before it.
    pub causal: bool,
    /// Rayon workers; 0 uses the default pool. Results do not depend on it.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            input: PathBuf::from("prices.csv"),
            date_col: "date".into(),
            price_col: "adj_close".into(),
            output: PathBuf::from("run"),
            grid: GridConfig::default(),
            search: SearchConfig::default(),
            radius: 200,
            alpha_beta: vec![(train.alpha, train.beta)],
            train,
            duration: 40,
            thresholds: Thresholds::Auto,
            causal: false,
            workers: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| Error::Config(format!("`{key}` needs a YYYY-MM-DD date, got `{value}`")))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = PathBuf::from(v),
            "date_col" => self.date_col = v.to_string(),
            "price_col" => self.price_col = v.to_string(),
            "output" => self.output = PathBuf::from(v),
            "t10" => self.grid.t10 = parse_date(key, v)?,
            "t20" => self.grid.t20 = parse_date(key, v)?,
            "dt1" => self.grid.dt1 = parse(key, v)?,
            "dt2" => self.grid.dt2 = parse(key, v)?,
            "dt_min" => self.grid.dt_min = parse(key, v)?,
            "dt_max" => self.grid.dt_max = parse(key, v)?,
            "model" => {
                self.search.model = match v {
                    "lppl" => ModelKind::Lppl,
                    "power_law" => ModelKind::PowerLaw,
                    _ => return Err(Error::Config(format!("unknown model `{v}`"))),
                }
            }
            "m_min" => self.search.m_bounds.0 = parse(key, v)?,
            "m_max" => self.search.m_bounds.1 = parse(key, v)?,
            "omega_min" => self.search.omega_bounds.0 = parse(key, v)?,
            "omega_max" => self.search.omega_bounds.1 = parse(key, v)?,
            "tc_min_gap" => self.search.tc_min_gap = parse(key, v)?,
            "tc_max_fraction" => self.search.tc_max_fraction = parse(key, v)?,
            "n_probes" => self.search.n_probes = parse(key, v)?,
            "n_restarts" => self.search.n_restarts = parse(key, v)?,
            "max_evals" => self.search.max_evals = parse(key, v)?,
            "min_points" => self.search.min_points = parse(key, v)?,
            "seed" => self.search.seed = parse(key, v)?,
            "radius" => self.radius = parse(key, v)?,
            "split" => self.train.split = parse_date(key, v)?,
            "delta" => self.train.delta = parse(key, v)?,
            "bins" => self.train.bins_per_parameter = parse(key, v)?,
            "negative_only" => self.train.negative_bubbles_only = parse(key, v)?,
            "alpha_beta" => {
                self.alpha_beta = v
                    .split(',')
                    .map(|pair| {
                        let (a, b) = pair.trim().split_once(':').ok_or_else(|| {
                            Error::Config(format!(
                                "alpha_beta entries are alpha:beta, got `{pair}`"
                            ))
                        })?;
                        Ok((parse(key, a.trim())?, parse(key, b.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "duration" => self.duration = parse(key, v)?,
            "thresholds" => {
                self.thresholds = if v == "auto" {
                    Thresholds::Auto
                } else {
                    Thresholds::List(
                        v.split(',')
                            .map(|s| parse(key, s.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "causal" => self.causal = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }

    /// Every setting that influences results, one per line, in fixed order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("input", self.input.display().to_string());
        kv("date_col", self.date_col.clone());
        kv("price_col", self.price_col.clone());
        kv("t10", self.grid.t10.to_string());
        kv("t20", self.grid.t20.to_string());
        kv("dt1", self.grid.dt1.to_string());
        kv("dt2", self.grid.dt2.to_string());
        kv("dt_min", self.grid.dt_min.to_string());
        kv("dt_max", self.grid.dt_max.to_string());
        kv(
            "model",
            match self.search.model {
                ModelKind::Lppl => "lppl",
                ModelKind::PowerLaw => "power_law",
            }
            .into(),
        );
        kv("m_min", self.search.m_bounds.0.to_string());
        kv("m_max", self.search.m_bounds.1.to_string());
        kv("omega_min", self.search.omega_bounds.0.to_string());
        kv("omega_max", self.search.omega_bounds.1.to_string());
        kv("tc_min_gap", self.search.tc_min_gap.to_string());
        kv("tc_max_fraction", self.search.tc_max_fraction.to_string());
        kv("n_probes", self.search.n_probes.to_string());
        kv("n_restarts", self.search.n_restarts.to_string());
        kv("max_evals", self.search.max_evals.to_string());
        kv("min_points", self.search.min_points.to_string());
        kv("seed", self.search.seed.to_string());
        kv("radius", self.radius.to_string());
        kv("split", self.train.split.to_string());
        kv("delta", self.train.delta.to_string());
        kv("bins", self.train.bins_per_parameter.to_string());
        kv(
            "negative_only",
            self.train.negative_bubbles_only.to_string(),
        );
        kv(
            "alpha_beta",
            self.alpha_beta
                .iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("duration", self.duration.to_string());
        kv(
            "thresholds",
            match &self.thresholds {
                Thresholds::Auto => "auto".into(),
                Thresholds::List(v) => fmt_list(v),
            },
        );
        kv("causal", self.causal.to_string());
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.search.validate()?;
        if self.alpha_beta.is_empty() {
            return Err(Error::Config(
                "at least one alpha:beta pair is required".into(),
            ));
        }
        if self.radius == 0 {
            return Err(Error::Config("radius must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome for one `(alpha, beta)` qualification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationOutcome {
    pub alpha: f64,
    pub beta: f64,
    pub n_features_i: usize,
    pub n_features_ii: usize,
    pub in_sample_skill: f64,
    pub out_of_sample_skill: f64,
    /// Lowest out-of-sample miss fraction with at most 30% of days in alarm.
    pub out_of_sample_miss_at_0_3: f64,
    pub in_sample: Vec<ErrorDiagramPoint>,
    pub out_of_sample: Vec<ErrorDiagramPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub input_sha256: Option<String>,
    pub grid_convention: String,
    pub n_windows: usize,
    pub n_fits: usize,
    pub n_converged: usize,
    pub n_skipped_windows: usize,
    pub n_rebounds: usize,
    pub n_learning_fits: usize,
    pub n_class_i: usize,
    pub n_class_ii: usize,
    pub outcomes: Vec<ManifestOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestOutcome {
    pub alpha: f64,
    pub beta: f64,
    pub tag: String,
    pub n_features_i: usize,
    pub n_features_ii: usize,
    pub in_sample_skill: f64,
    pub out_of_sample_skill: f64,
    pub out_of_sample_miss_at_0_3: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub outcomes: Vec<QualificationOutcome>,
    pub fits: Vec<FitResult>,
    pub rebounds: EventSet,
}

/// Loads `config.input` and runs the full protocol, writing into `config.output`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    config.validate().stage("config")?;
    let bytes = std::fs::read(&config.input)
        .map_err(|e| Error::io(&config.input, e))
        .stage("ingest")?;
    let input_sha = hex::encode(Sha256::digest(&bytes));
    let (series, report) =
        load_csv(&config.input, &config.date_col, &config.price_col).stage("ingest")?;
    if report.rows_rejected > 0 {
        log::warn!("{} input rows rejected", report.rows_rejected);
    }
    run_on_series(&series, config, Some(input_sha))
}

/// As [`run_pipeline`] on an in-memory series.
pub fn run_on_series(
    series: &PriceSeries,
    config: &RunConfig,
    input_sha256: Option<String>,
) -> Result<RunSummary> {
    config.validate().stage("config")?;
    let split = config.train.split;
    if split <= series.first_date() || split > series.last_date() {
        return Err(Error::Config(format!(
            "split {split} must fall inside the data {}..{}",
            series.first_date(),
            series.last_date()
        )))
        .stage("config");
    }
    let out = &config.output;
    std::fs::create_dir_all(out)
        .map_err(|e| Error::io(out, e))
        .stage("output")?;

    let windows = generate_windows(&config.grid).stage("windows")?;
    log::info!("{} windows", windows.len());
    write_windows_csv(&windows, create(out, "windows.csv")?).stage("windows")?;

    let report =
        with_pool(config.workers, || scan(series, &windows, &config.search)).stage("scan")?;
    let fits = report.fits;
    log::info!(
        "{} fits, {} windows skipped",
        fits.len(),
        report.skipped.len()
    );
    write_fits_csv(&fits, create(out, "fits.csv")?).stage("scan")?;
    write_fits_jsonl(&fits, create(out, "fits.jsonl")?).stage("scan")?;

    let rebounds = detect_rebounds(series, config.radius);
    rebounds
        .write_csv(create(out, "rebounds.csv")?)
        .stage("rebounds")?;

    let mut outcomes = Vec::new();
    let mut learning: Vec<LabeledFit> = Vec::new();
    let scoring: Vec<FitResult> = eligible_fits(&fits, &config.train).cloned().collect();
    let in_span = AlarmConfig {
        from: series.first_date(),
        to: split.pred_opt().expect("split after first date"),
        proximity: config.train.delta,
        split: None,
        causal: config.causal,
    };
    let out_span = AlarmConfig {
        from: split,
        to: series.last_date(),
        proximity: config.train.delta,
        split: Some(split),
        causal: config.causal,
    };
    for &(alpha, beta) in &config.alpha_beta {
        let tc = TrainConfig {
            alpha,
            beta,
            ..config.train.clone()
        };
        let (labeled, features) = train(&fits, &rebounds, &tc).stage("train")?;
        let tag = format!("a{alpha}_b{beta}");
        features
            .write_json(create(out, &format!("features_{tag}.json"))?)
            .stage("train")?;

        let alarm_in = alarm_series(series, &scoring, &features, &in_span).stage("alarm")?;
        let alarm_out = alarm_series(series, &scoring, &features, &out_span).stage("alarm")?;
        write_alarm_csv(&alarm_in, create(out, &format!("alarm_in_{tag}.csv"))?).stage("alarm")?;
        write_alarm_csv(&alarm_out, create(out, &format!("alarm_out_{tag}.csv"))?)
            .stage("alarm")?;

        let diagram = |ri: &[AlarmPoint]| -> Result<Vec<ErrorDiagramPoint>> {
            let th = match &config.thresholds {
                Thresholds::Auto => auto_thresholds(ri),
                Thresholds::List(v) => v.clone(),
            };
            error_diagram(ri, &rebounds, &th, config.duration)
        };
        let ed_in = diagram(&alarm_in).stage("error-diagram")?;
        let ed_out = diagram(&alarm_out).stage("error-diagram")?;
        for (name, pts) in [("in", &ed_in), ("out", &ed_out)] {
            write_error_diagram_csv(pts, create(out, &format!("error_{name}_{tag}.csv"))?)
                .stage("error-diagram")?;
            write_plot_csv(pts, create(out, &format!("plot_{name}_{tag}.csv"))?)
                .stage("error-diagram")?;
        }
        outcomes.push(QualificationOutcome {
            alpha,
            beta,
            n_features_i: features.features_i.len(),
            n_features_ii: features.features_ii.len(),
            in_sample_skill: skill_summary(&ed_in).stage("error-diagram")?,
            out_of_sample_skill: skill_summary(&ed_out).stage("error-diagram")?,
            out_of_sample_miss_at_0_3: miss_at_alarm(&ed_out, 0.3),
            in_sample: ed_in,
            out_of_sample: ed_out,
        });
        learning = labeled;
    }
    write_labels_csv(&learning, create(out, "labels.csv")?).stage("train")?;

    let n_class_i = learning
        .iter()
        .filter(|l| l.label == crate::pattern::ClassLabel::ClassI)
        .count();
    let manifest = Manifest {
        config_hash: config.hash(),
        seed: config.search.seed,
        input_sha256,
        grid_convention: GRID_CONVENTION.to_string(),
        n_windows: windows.len(),
        n_fits: fits.len(),
        n_converged: fits.iter().filter(|f| f.converged).count(),
        n_skipped_windows: report.skipped.len(),
        n_rebounds: rebounds.len(),
        n_learning_fits: learning.len(),
        n_class_i,
        n_class_ii: learning.len() - n_class_i,
        outcomes: outcomes
            .iter()
            .map(|o| ManifestOutcome {
                alpha: o.alpha,
                beta: o.beta,
                tag: format!("a{}_b{}", o.alpha, o.beta),
                n_features_i: o.n_features_i,
                n_features_ii: o.n_features_ii,
                in_sample_skill: o.in_sample_skill,
                out_of_sample_skill: o.out_of_sample_skill,
                out_of_sample_miss_at_0_3: o.out_of_sample_miss_at_0_3,
            })
            .collect(),
    };
    std::fs::write(out.join("config.txt"), config.canonical())
        .map_err(|e| Error::io(out.join("config.txt"), e))?;
    serde_json::to_writer_pretty(create(out, "manifest.json")?, &manifest)?;
    Ok(RunSummary {
        manifest,
        outcomes,
        fits,
        rebounds,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[derive(Serialize)]
struct LabelRecord {
    t1: NaiveDate,
    t2: NaiveDate,
    tc: f64,
    label: &'static str,
    nearest_rebound_distance: f64,
}

fn write_labels_csv(labeled: &[LabeledFit], writer: impl std::io::Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for l in labeled {
        wtr.serialize(LabelRecord {
            t1: l.fit.window.t1,
            t2: l.fit.window.t2,
            tc: l.fit.params.tc,
            label: match l.label {
                crate::pattern::ClassLabel::ClassI => "I",
                crate::pattern::ClassLabel::ClassII => "II",
            },
            nearest_rebound_distance: l.nearest_rebound_distance,
        })?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
