// Scan nested windows ending at different dates and summarize the
// critical-time estimates as quantile bands.

use bubblescan::lppl::{aggregate_tc_quantiles, scan, LpplParams, SearchConfig, TcBand};
use bubblescan::synth::{synth_lppl_series, SynthModel, SynthSpec};
use bubblescan::timeseries::{date_from_day_number, day_number};
use bubblescan::windows::generate_windows;
use bubblescan::GridConfig;
use chrono::NaiveDate;

pub fn run_example() -> bubblescan::Result<Vec<TcBand>> {
    let start = NaiveDate::from_ymd_opt(2006, 1, 2).unwrap();
    let end = NaiveDate::from_ymd_opt(2008, 6, 30).unwrap();
    let tc = day_number(end) + 20.0;
    // positive bubble, B < 0
    let truth = LpplParams {
        a: 5.0,
        b: -0.06,
        c: 0.006,
        m: 0.45,
        tc,
        omega: 9.0,
        phi: 0.5,
    };
    let spec = SynthSpec {
        model: SynthModel::Lppl(truth),
        start,
        end,
        noise_sigma: 0.01,
        seed: 1,
    };
    let (series, _) = synth_lppl_series(&spec)?;

    let grid = GridConfig {
        t10: start,
        t20: end,
        dt1: 60,
        dt2: 30,
        dt_min: 300,
        dt_max: 900,
    };
    let windows = generate_windows(&grid)?;
    let search = SearchConfig {
        n_probes: 96,
        n_restarts: 4,
        ..SearchConfig::default()
    };
    let report = scan(&series, &windows, &search)?;
    println!(
        "{} windows fitted, {} skipped",
        report.fits.len(),
        report.skipped.len()
    );

    let bands = aggregate_tc_quantiles(&report.fits, &[(0.2, 0.8), (0.05, 0.95)])?;
    println!("true tc {}", date_from_day_number(tc));
    for b in &bands {
        println!(
            "  {:>2.0}%-{:>2.0}%: {} .. {}",
            100.0 * b.lower_level,
            100.0 * b.upper_level,
            date_from_day_number(b.lower),
            date_from_day_number(b.upper)
        );
    }
    Ok(bands)
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
