// The multi-scale window grid: every (t1, t2) pair the scanner will fit.

use bubblescan::windows::{generate_windows, GRID_CONVENTION};
use bubblescan::GridConfig;

pub fn run_example() -> bubblescan::Result<usize> {
    let cfg = GridConfig::default();
    let windows = generate_windows(&cfg)?;
    println!(
        "{} .. {}, steps {}/{} days, lengths {}..={} days",
        cfg.t10, cfg.t20, cfg.dt1, cfg.dt2, cfg.dt_min, cfg.dt_max
    );
    println!("{} windows", windows.len());
    println!("convention: {GRID_CONVENTION}");
    for w in windows.iter().take(3).chain(windows.iter().rev().take(2)) {
        println!("  {} .. {} ({} days)", w.t1, w.t2, w.length_days());
    }

    // a coarser grid for quick experiments
    let coarse = GridConfig {
        dt1: 200,
        dt2: 200,
        ..cfg
    };
    println!("coarse grid: {} windows", generate_windows(&coarse)?.len());
    Ok(windows.len())
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
