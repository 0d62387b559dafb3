// Learn Class I / Class II features from fits before a split date and
// score the alarm index after it.

use bubblescan::extrema::detect_rebounds;
use bubblescan::lppl::{scan, SearchConfig};
use bubblescan::pattern::{
    alarm_series, eligible_fits, train, AlarmConfig, AlarmPoint, TrainConfig,
};
use bubblescan::synth::{plant_rebound_course, PlantSpec};
use bubblescan::windows::generate_windows;
use bubblescan::GridConfig;

pub fn run_example() -> bubblescan::Result<Vec<AlarmPoint>> {
    let (series, truth) = plant_rebound_course(&PlantSpec {
        n_bubbles: 4,
        spacing: 420,
        ..PlantSpec::default()
    })?;
    let grid = GridConfig {
        t10: series.first_date(),
        t20: series.last_date(),
        dt1: 60,
        dt2: 60,
        dt_min: 110,
        dt_max: 420,
    };
    let search = SearchConfig {
        n_probes: 32,
        n_restarts: 2,
        max_evals: 300,
        ..SearchConfig::default()
    };
    let fits = scan(&series, &generate_windows(&grid)?, &search)?.fits;
    let rebounds = detect_rebounds(&series, 200);

    let split = truth.bubbles[2].trough.date - chrono::Duration::days(200);
    let cfg = TrainConfig {
        split,
        ..TrainConfig::default()
    };
    let (labeled, features) = train(&fits, &rebounds, &cfg)?;
    println!(
        "{} fits, {} learning fits: {} Class I, {} Class II",
        fits.len(),
        labeled.len(),
        features.n_class_i,
        features.n_class_ii
    );
    println!("Class I features:  {:?}", features.features_i);
    println!("Class II features: {:?}", features.features_ii);

    let scoring: Vec<_> = eligible_fits(&fits, &cfg).cloned().collect();
    let span = AlarmConfig {
        from: split,
        to: series.last_date(),
        proximity: cfg.delta,
        split: Some(split),
        causal: false,
    };
    let ri = alarm_series(&series, &scoring, &features, &span)?;
    for r in rebounds.days.iter().filter(|d| d.date >= split) {
        let peak = ri
            .iter()
            .filter(|p| p.day.index.abs_diff(r.index) <= 20)
            .map(|p| p.ri)
            .fold(0.0, f64::max);
        println!("rebound {}: max RI within 20 days {peak:.2}", r.date);
    }
    Ok(ri)
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
