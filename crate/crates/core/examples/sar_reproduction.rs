//! Household survival for one index patient at resonance, compared with the
//! secondary attack rate it was calibrated from.

use std::f64::consts::PI;

use thermal_epidemic::calibration::{gamma_from_sar, sar_from_rate};
use thermal_epidemic::{extract_infection_rate, run_protocol, EpidemicModel, SimulationMode};

fn main() -> thermal_epidemic::Result<()> {
    let model = EpidemicModel::pair(PI, 0.201, PI)?;
    let series = run_protocol(&model, 10.0, SimulationMode::Density)?;
    println!("day  survival");
    for (t, p) in series.times.iter().zip(&series.survival) {
        println!("{t:>3}  {:.5}", p[0]);
    }
    let fit = extract_infection_rate(&series, 0, (0.0, 7.0))?;
    println!("fitted rate   {:.5} per day", fit.rate);
    println!("target rate   {:.5} per day", gamma_from_sar(0.251, 7.0)?);
    println!("implied SAR   {:.4}", sar_from_rate(fit.rate, 7.0));
    Ok(())
}
