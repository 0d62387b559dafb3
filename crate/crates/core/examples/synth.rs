// Synthetic generators: the finite-time singularity, an LPPL negative
// bubble, and a planted course of rebounds with known truth.

use bubblescan::lppl::LpplParams;
use bubblescan::synth::{
    plant_rebound_course, singularity_trajectory, synth_lppl_series, PlantSpec, SingularityParams,
    SynthModel, SynthSpec,
};
use bubblescan::timeseries::day_number;
use chrono::NaiveDate;

pub fn run_example() -> bubblescan::Result<()> {
    // dx/dt = k x^m blows up at a finite time when m > 1
    let p = SingularityParams {
        x0: 1.0,
        k: 0.01,
        m: 2.0,
    };
    let tc = p.critical_time();
    let grid: Vec<f64> = (0..10).map(|i| tc * i as f64 / 10.0).collect();
    let x = singularity_trajectory(p.x0, p.m, tc, &grid)?;
    println!(
        "singularity at t = {tc}: x = {:?}",
        x.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
    );

    let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    let end = NaiveDate::from_ymd_opt(2010, 12, 31).unwrap();
    let params = LpplParams {
        a: 3.0,
        b: 0.05,
        c: 0.005,
        m: 0.6,
        tc: day_number(end) + 10.0,
        omega: 8.0,
        phi: 0.0,
    };
    let spec = SynthSpec {
        model: SynthModel::Lppl(params),
        start,
        end,
        noise_sigma: 0.005,
        seed: 9,
    };
    let (series, truth) = synth_lppl_series(&spec)?;
    println!(
        "negative bubble: {} days, {:.2} -> {:.2}, {}",
        truth.n_days,
        series.prices()[0],
        series.prices()[series.len() - 1],
        serde_json::to_string(&truth.spec.model)?
    );

    let (course, planted) = plant_rebound_course(&PlantSpec::default())?;
    println!("planted course: {} days, troughs at", course.len());
    for b in &planted.bubbles {
        println!(
            "  {} (m {:.2}, omega {:.2})",
            b.trough.date, b.params.m, b.params.omega
        );
    }
    Ok(())
}

fn main() -> bubblescan::Result<()> {
    run_example()
}
