//! Sweep the system/bath coupling, fit the log-log line and solve for the
//! coupling that reproduces the Omicron secondary attack rate.

use thermal_epidemic::calibration::{calibrate_lambda, SimSettings, VirusInputs, DEFAULT_LAMBDA_GRID};

fn main() -> thermal_epidemic::Result<()> {
    let cal = calibrate_lambda(&VirusInputs::omicron(), &DEFAULT_LAMBDA_GRID, &SimSettings::default())?;
    println!("lambda   rate");
    for p in &cal.grid {
        println!("{:.3}   {:.6}", p.param, p.value);
    }
    println!("slope    {:.4} ± {:.4}", cal.fit.slope, cal.fit.slope_stderr);
    println!("Γ_SAR    {:.6}", cal.gamma_sar);
    println!("lambda*  {:.5} ± {:.5}", cal.lambda, cal.lambda_stderr);
    Ok(())
}
