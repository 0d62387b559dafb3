// Fit one window of a synthetic negative bubble with both models.

use bubblescan::lppl::{fit_window, FitResult, LpplParams, ModelKind, SearchConfig};
use bubblescan::synth::{synth_lppl_series, SynthModel, SynthSpec};
use bubblescan::timeseries::{date_from_day_number, day_number};
use bubblescan::Window;
use chrono::NaiveDate;

pub fn run_example() -> bubblescan::Result<FitResult> {
    let start = NaiveDate::from_ymd_opt(2008, 1, 2).unwrap();
    let end = NaiveDate::from_ymd_opt(2009, 2, 27).unwrap();
    // B > 0: accelerating decline into tc
    let truth = LpplParams {
        a: 4.0,
        b: 0.03,
        c: 0.004,
        m: 0.5,
        tc: day_number(end) + 25.0,
        omega: 7.5,
        phi: 2.0,
    };
    let spec = SynthSpec {
        model: SynthModel::Lppl(truth),
        start,
        end,
        noise_sigma: 0.01,
        seed: 42,
    };
    let (series, _) = synth_lppl_series(&spec)?;
    let window = Window::new(start, end)?;

    let lppl = fit_window(&series, &window, &SearchConfig::default())?;
    let power = fit_window(
        &series,
        &window,
        &SearchConfig {
            model: ModelKind::PowerLaw,
            ..SearchConfig::default()
        },
    )?;

    println!(
        "true tc {}  m {:.3}  omega {:.2}",
        date_from_day_number(truth.tc),
        truth.m,
        truth.omega
    );
    println!(
        "lppl  tc {}  m {:.3}  omega {:.2}  B {:+.4}  C/B {:+.3}  rmse {:.4}",
        date_from_day_number(lppl.params.tc),
        lppl.params.m,
        lppl.params.omega,
        lppl.params.b,
        lppl.params.c / lppl.params.b,
        lppl.rmse
    );
    println!(
        "power tc {}  m {:.3}  B {:+.4}  rmse {:.4}",
        date_from_day_number(power.params.tc),
        power.params.m,
        power.params.b,
        power.rmse
    );
    Ok(lppl)
}

fn main() -> bubblescan::Result<()> {
    run_example().map(|_| ())
}
