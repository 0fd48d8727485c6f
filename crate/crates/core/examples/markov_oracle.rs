//! Second-order Markov chain next to the Trotterized simulation, plus the
//! closed-form decay rate of a single pair.

use std::f64::consts::PI;

use thermal_epidemic::oracle::{markov_protocol, pair_decay, second_order_matrix};
use thermal_epidemic::{run_protocol, EpidemicModel, SimulationMode};

fn main() -> thermal_epidemic::Result<()> {
    let model = EpidemicModel::new(vec![vec![PI, 2.2, 1.1]], 0.15, PI, 1.0, 0.01, vec![4.0, 40.0, 60.0])?;
    let s = second_order_matrix(&model)?;
    println!("one-interval matrix, columns = from, rows = to");
    for to in 0..s.dim() {
        let row: Vec<String> = (0..s.dim()).map(|from| format!("{:.4}", s.entry(to, from))).collect();
        println!("  {}", row.join(" "));
    }
    let quantum = run_protocol(&model, 10.0, SimulationMode::Density)?;
    let markov = markov_protocol(&model, 10.0)?;
    println!("max |quantum - markov| = {:.2e}", quantum.max_abs_diff(&markov));

    for gamma in [PI, 2.2, 1.1, 1e-4] {
        let d = pair_decay(gamma, PI, 0.15, 1.0);
        println!("gamma {gamma:.4}: rate {:.3e}", d.rate);
    }
    Ok(())
}
