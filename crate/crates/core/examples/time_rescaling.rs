//! Weak couplings simulated on a dilated clock reproduce the reference curve.

use std::f64::consts::PI;

use thermal_epidemic::calibration::{rescale_time, survival_at_physical_time};
use thermal_epidemic::{run_protocol, EpidemicModel, SimulationMode};

fn main() -> thermal_epidemic::Result<()> {
    let reference = run_protocol(&EpidemicModel::pair(PI, 0.201, PI)?, 10.0, SimulationMode::Density)?;
    for lambda in [0.4, 0.05] {
        let a = rescale_time(0.201, lambda);
        let days = (10.0 * a).ceil() + 1.0;
        let run = run_protocol(&EpidemicModel::pair(PI, lambda, PI)?, days, SimulationMode::Density)?;
        println!("lambda = {lambda}, a = {a:.4}");
        for t in [1.0, 4.0, 7.0, 10.0] {
            let p = survival_at_physical_time(&run, 0, t, a)?;
            let k = reference.time_index(t).expect("reference day");
            println!("  day {t:>4}: rescaled {p:.5}, reference {:.5}", reference.survival[k][0]);
        }
    }
    Ok(())
}
