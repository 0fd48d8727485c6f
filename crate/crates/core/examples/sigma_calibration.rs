//! Distance scale of the patient's activity from R0 on the shipped community
//! layout, then a re-simulation at the solved value.

use std::path::Path;

use thermal_epidemic::calibration::{calibrate_sigma, default_sigma_grid, infected_total};
use thermal_epidemic::scenario::load_scenario;

fn main() -> thermal_epidemic::Result<()> {
    let cfg = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/omicron_typical.json"))?;
    let (map, settings, lambda) = (cfg.community_map(), cfg.settings(), cfg.lambda()?);
    let cal = calibrate_sigma(&map, lambda, &cfg.virus, &default_sigma_grid(), &settings)?;
    println!("sigma  infected on day {}", cfg.virus.incubation);
    for p in &cal.grid {
        println!("{:>5}  {:.3}", p.param, p.value);
    }
    println!("sigma* = {:.2} ± {:.2} m", cal.sigma, cal.sigma_stderr);
    let check = infected_total(&map, cal.sigma, lambda, cfg.virus.incubation, &settings)?;
    println!("total at sigma* = {:.3} (target {})", check.value, cal.target);
    for w in &cal.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
