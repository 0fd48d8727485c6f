//! One versus two index patients on the same three communities.

use std::path::Path;

use thermal_epidemic::calibration::run_pruned;
use thermal_epidemic::scenario::load_scenario;
use thermal_epidemic::SimulationMode;

fn main() -> thermal_epidemic::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let one = load_scenario(&dir.join("one_patient_communities.json"))?.resolve()?;
    let two = load_scenario(&dir.join("two_patients.json"))?.resolve()?;
    println!("alpha: one patient {:.4}, two patients {:.4}", one.model.alpha, two.model.alpha);
    let s1 = run_pruned(&one.model, 10.0, SimulationMode::Density)?;
    let s2 = run_pruned(&two.model, 10.0, SimulationMode::Density)?;
    println!("day  site  one      two");
    for k in 1..=10 {
        for (j, id) in one.site_ids.iter().enumerate() {
            println!("{k:>3}  {id:>4}  {:.4}   {:.4}", 1.0 - s1.survival[k][j], 1.0 - s2.survival[k][j]);
        }
    }
    Ok(())
}
