//! Continuous-time RK4 reference against the Trotterized engine on the typical
//! community.

use std::path::Path;

use thermal_epidemic::oracle::rk4_evolve;
use thermal_epidemic::scenario::load_scenario;
use thermal_epidemic::{run_protocol, SimulationMode};

fn main() -> thermal_epidemic::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/omicron_typical.json");
    let model = load_scenario(&path)?.resolve()?.model;
    let trotter = run_protocol(&model, 10.0, SimulationMode::Density)?;
    let rk4 = rk4_evolve(&model, 10.0)?;
    println!("day  site  trotter   rk4");
    for k in [1, 4, 7, 10] {
        for j in 0..model.n_susceptible {
            println!("{k:>3}  {j:>4}  {:.6}  {:.6}", trotter.survival[k][j], rk4.survival[k][j]);
        }
    }
    println!("max |diff| = {:.2e}", trotter.max_abs_diff(&rk4));
    Ok(())
}
