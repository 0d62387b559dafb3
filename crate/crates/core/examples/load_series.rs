// Load a daily close CSV, drop bad rows, slice a window and take log prices.

use bubblescan::timeseries::{read_csv, PriceSeries};
use bubblescan::Window;
use chrono::NaiveDate;

const CSV: &str = "\
date,open,adj_close
2001-01-05,10,10.8
2001-01-02,10,10.0
2001-01-03,10,10.4
2001-01-04,10,
2001-01-08,10,-1
2001-01-09,10,11.3
2001-01-10,10,11.1
";

pub fn run_example() -> bubblescan::Result<PriceSeries> {
    let (series, report) = read_csv(CSV.as_bytes(), "date", "adj_close")?;
    println!(
        "read {} rows, rejected {}",
        report.rows_read, report.rows_rejected
    );
    for (day, p) in series.days().iter().zip(series.prices()) {
        println!("  #{} {} {p}", day.index, day.date);
    }

    let w = Window::new(
        NaiveDate::from_ymd_opt(2001, 1, 3).unwrap(),
        NaiveDate::from_ymd_opt(2001, 1, 9).unwrap(),
    )?;
    let sub = series.slice(&w)?;
    println!("window {} .. {}: {} days", w.t1, w.t2, sub.len());
    println!("log prices {:?}", sub.log_prices());
    Ok(series)
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
