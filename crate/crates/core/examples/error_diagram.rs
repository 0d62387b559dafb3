// Error diagram of a toy alarm index against known rebounds.

use bubblescan::evaluation::{
    auto_thresholds, error_diagram, miss_at_alarm, skill_summary, write_plot_csv, ErrorDiagramPoint,
};
use bubblescan::extrema::{DetectionRule, EventKind, EventSet};
use bubblescan::pattern::AlarmPoint;
use bubblescan::synth::n_weekdays;
use bubblescan::TradingDay;
use chrono::NaiveDate;

pub fn run_example() -> bubblescan::Result<Vec<ErrorDiagramPoint>> {
    let dates = n_weekdays(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), 2000);
    let days: Vec<TradingDay> = dates
        .into_iter()
        .enumerate()
        .map(|(index, date)| TradingDay { date, index })
        .collect();
    let targets = [300usize, 700, 1100, 1500, 1900];
    let rebounds = EventSet {
        kind: EventKind::Rebound,
        days: targets.iter().map(|&i| days[i]).collect(),
        rule: DetectionRule::Extremum { radius: 200 },
    };
    // index ramps up over the 30 days before each rebound, with a decoy bump
    let ri: Vec<AlarmPoint> = days
        .iter()
        .map(|&day| {
            let lead = targets
                .iter()
                .filter(|&&t| t >= day.index && t - day.index <= 30)
                .map(|&t| 1.0 - (t - day.index) as f64 / 40.0);
            let decoy = if (900..920).contains(&day.index) {
                0.6
            } else {
                0.0
            };
            AlarmPoint {
                day,
                ri: lead.fold(decoy, f64::max),
            }
        })
        .collect();

    let points = error_diagram(&ri, &rebounds, &auto_thresholds(&ri), 40)?;
    println!("{} thresholds", points.len());
    println!("skill {:.3}", skill_summary(&points)?);
    println!(
        "miss fraction with at most 15% of time in alarm: {:.2}",
        miss_at_alarm(&points, 0.15)
    );
    let mut csv = Vec::new();
    write_plot_csv(&points, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(points)
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
