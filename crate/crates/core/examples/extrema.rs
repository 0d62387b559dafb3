// Rebounds, peaks and crashes on a planted course of negative bubbles.

use bubblescan::extrema::{detect_crashes, detect_peaks, detect_rebounds, EventSet};
use bubblescan::synth::{plant_rebound_course, PlantSpec};

pub fn run_example() -> bubblescan::Result<(EventSet, EventSet)> {
    let (series, truth) = plant_rebound_course(&PlantSpec {
        n_bubbles: 4,
        ..PlantSpec::default()
    })?;
    let rebounds = detect_rebounds(&series, 200);
    println!(
        "planted troughs  {:?}",
        truth
            .trough_days()
            .iter()
            .map(|d| d.date.to_string())
            .collect::<Vec<_>>()
    );
    println!(
        "detected rebounds {:?}",
        rebounds
            .days
            .iter()
            .map(|d| d.date.to_string())
            .collect::<Vec<_>>()
    );
    assert!(rebounds.verify(&series));

    let peaks = detect_peaks(&series, 200);
    println!("{} peaks", peaks.len());
    // planted descents take about a year, so look half a year ahead of each high
    let crashes = detect_crashes(&series, 0.10, 180);
    println!(
        "{} crash onsets, first {:?}",
        crashes.len(),
        crashes.days.first().map(|d| d.date)
    );
    Ok((rebounds, crashes))
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
