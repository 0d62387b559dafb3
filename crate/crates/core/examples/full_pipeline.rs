// The whole protocol on a planted course, written to a directory.
//
// `cargo run --release --example full_pipeline -- out_dir`

use bubblescan::pipeline::{run_pipeline, RunConfig, RunSummary};
use bubblescan::synth::{plant_rebound_course, PlantSpec};
use bubblescan::timeseries::write_csv;
use bubblescan::GridConfig;
use std::path::Path;

pub fn run_example_in(dir: &Path) -> bubblescan::Result<RunSummary> {
    let (series, truth) = plant_rebound_course(&PlantSpec {
        n_bubbles: 6,
        spacing: 420,
        ..PlantSpec::default()
    })?;
    std::fs::create_dir_all(dir).map_err(|e| bubblescan::Error::io(dir, e))?;
    let input = dir.join("course.csv");
    let file = std::fs::File::create(&input).map_err(|e| bubblescan::Error::io(&input, e))?;
    write_csv(&series, file, "date", "adj_close")?;

    let mut cfg = RunConfig::from_kv_str(
        "dt1 = 45\n\
         dt2 = 45\n\
         dt_max = 450\n\
         n_probes = 48\n\
         n_restarts = 3\n\
         max_evals = 400\n\
         alpha_beta = 0.4:0.3, 0.5:0.2\n",
    )?;
    cfg.input = input;
    cfg.output = dir.join("run");
    cfg.grid = GridConfig {
        t10: series.first_date(),
        t20: series.last_date(),
        ..cfg.grid
    };
    cfg.train.split = truth.bubbles[3].trough.date - chrono::Duration::days(200);

    let summary = run_pipeline(&cfg)?;
    let m = &summary.manifest;
    println!("config hash {}", m.config_hash);
    println!(
        "{} windows, {} converged fits, {} rebounds",
        m.n_windows, m.n_converged, m.n_rebounds
    );
    for o in &summary.outcomes {
        println!(
            "alpha {} beta {}: skill in {:.3} / out {:.3}, miss at alarm <= 0.3: {:.2}",
            o.alpha, o.beta, o.in_sample_skill, o.out_of_sample_skill, o.out_of_sample_miss_at_0_3
        );
    }
    println!("artifacts in {}", cfg.output.display());
    Ok(summary)
}

pub fn run_example() -> bubblescan::Result<RunSummary> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "full_pipeline_out".into());
    run_example_in(Path::new(&dir))
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
