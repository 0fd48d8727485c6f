//! Shot-sampled survival curves and their standard errors next to the exact
//! density-mode result.

use std::f64::consts::PI;

use thermal_epidemic::{run_protocol, EpidemicModel, SimulationMode};

fn main() -> thermal_epidemic::Result<()> {
    let model = EpidemicModel::pair(PI, 0.201, PI)?;
    let exact = run_protocol(&model, 7.0, SimulationMode::Density)?;
    let sampled = run_protocol(&model, 7.0, SimulationMode::Shots { shots: 4096, seed: 2022 })?;
    println!("day  exact    sampled  stderr");
    for k in 0..exact.times.len() {
        println!(
            "{:>3}  {:.4}   {:.4}   {:.4}",
            exact.times[k], exact.survival[k][0], sampled.survival[k][0], sampled.stderr[k][0]
        );
    }
    Ok(())
}
