//! Model parameters from epidemiological observables.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{extract_infection_rate, run_protocol, EpidemicModel, SimulationMode, TimeSeries};
use crate::fit::{self, LinearFit};
use crate::geometry::CommunityMap;

fn default_sar_horizon() -> f64 {
    7.0
}

fn default_incubation() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirusInputs {
    /// Secondary attack rate, a fraction in (0, 1).
    #[serde(default)]
    pub sar: Option<f64>,
    #[serde(default = "default_sar_horizon")]
    pub sar_horizon: f64,
    /// Basic reproduction number.
    #[serde(default)]
    pub r0: Option<f64>,
    /// Days after which the infected total is compared with `r0`.
    #[serde(default = "default_incubation")]
    pub incubation: f64,
}

impl Default for VirusInputs {
    fn default() -> Self {
        Self {
            sar: None,
            sar_horizon: default_sar_horizon(),
            r0: None,
            incubation: default_incubation(),
        }
    }
}

impl VirusInputs {
    pub fn omicron() -> Self {
        Self {
            sar: Some(0.251),
            r0: Some(9.5),
            ..Self::default()
        }
    }
}

/// `Γ_SAR = −ln(1 − SAR)/horizon`.
pub fn gamma_from_sar(sar: f64, horizon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&sar) {
        return Err(Error::Domain(format!("sar = {sar} must lie in [0, 1)")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon = {horizon} must be positive")));
    }
    Ok(-(-sar).ln_1p() / horizon)
}

/// Inverse of [`gamma_from_sar`].
pub fn sar_from_rate(rate: f64, horizon: f64) -> f64 {
    -(-rate * horizon).exp_m1()
}

/// `α = π/(|I|·Δt)`.
pub fn auto_alpha(n_index: usize, delta_t: f64) -> f64 {
    PI / (n_index.max(1) as f64 * delta_t)
}

/// Time dilation `(λ_ref/λ)²` that keeps `Γ·a` fixed under the quadratic
/// rate law.
pub fn rescale_time(lambda_ref: f64, lambda: f64) -> f64 {
    rescale_time_with_exponent(lambda_ref, lambda, 2.0)
}

pub fn rescale_time_with_exponent(lambda_ref: f64, lambda: f64, exponent: f64) -> f64 {
    (lambda_ref / lambda).abs().powf(exponent)
}

/// Survival of `site` at physical time `t` from a run whose clock is dilated
/// by `a`: the series is read at computer time `a·t`, interpolating
/// `ln P` linearly between samples.
pub fn survival_at_physical_time(series: &TimeSeries, site: usize, t: f64, a: f64) -> Result<f64> {
    let tc = a * t;
    let times = &series.times;
    let last = *times.last().ok_or_else(|| Error::Argument("empty series".into()))?;
    if tc < times[0] - 1e-12 || tc > last + 1e-9 {
        return Err(Error::Argument(format!(
            "computer time {tc} outside the simulated span [{}, {last}]",
            times[0]
        )));
    }
    let k = times.partition_point(|&x| x < tc - 1e-12).min(times.len() - 1);
    if (times[k] - tc).abs() < 1e-9 || k == 0 {
        return Ok(series.survival[k][site]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let (p0, p1) = (series.survival[k - 1][site], series.survival[k][site]);
    if !(p0 > 0.0 && p1 > 0.0) {
        return Err(Error::Domain("interpolation through zero survival".into()));
    }
    let w = (tc - t0) / (t1 - t0);
    Ok((p0.ln() * (1.0 - w) + p1.ln() * w).exp())
}

/// Simulation knobs shared by the calibration sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub mode: SimulationMode,
    pub delta_t: f64,
    pub trotter_dt: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            mode: SimulationMode::Density,
            delta_t: 1.0,
            trotter_dt: 0.01,
        }
    }
}

/// One evaluated grid point: the swept parameter, the measured quantity and
/// its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub param: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSummary {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub residuals: Vec<f64>,
}

impl From<&LinearFit> for LineSummary {
    fn from(f: &LinearFit) -> Self {
        Self {
            slope: f.slope,
            slope_stderr: f.slope_stderr,
            intercept: f.intercept,
            intercept_stderr: f.intercept_stderr,
            residuals: f.residuals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCalibration {
    pub lambda: f64,
    pub lambda_stderr: f64,
    pub gamma_sar: f64,
    /// Fit of `ln Γ` against `ln λ`.
    pub fit: LineSummary,
    /// `Γ(λ)` per grid point.
    pub grid: Vec<GridPoint>,
}

pub const DEFAULT_LAMBDA_GRID: [f64; 8] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];

/// Accepted range of the log-log slope.
pub const LAMBDA_SLOPE_RANGE: (f64, f64) = (1.5, 2.5);

/// Household rate `Γ(λ)` of the resonant one-patient model.
pub fn household_rate(lambda: f64, days: f64, settings: &SimSettings) -> Result<GridPoint> {
    let alpha = auto_alpha(1, settings.delta_t);
    let model = EpidemicModel::new(
        vec![vec![alpha]],
        lambda,
        alpha,
        settings.delta_t,
        settings.trotter_dt,
        vec![1.0],
    )?;
    let series = run_protocol(&model, days, settings.mode)?;
    let fit = extract_infection_rate(&series, 0, (0.0, days))?;
    Ok(GridPoint {
        param: lambda,
        value: fit.rate,
        stderr: fit.stderr,
    })
}

/// Sweeps `λ`, fits `ln Γ = s·ln λ + b` and solves `Γ(λ*) = Γ_SAR` on the line.
pub fn calibrate_lambda(inputs: &VirusInputs, grid: &[f64], settings: &SimSettings) -> Result<LambdaCalibration> {
    let sar = inputs
        .sar
        .ok_or_else(|| Error::validation("virus.sar", "required for lambda calibration"))?;
    let gamma_sar = gamma_from_sar(sar, inputs.sar_horizon)?;
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 10f64.sqrt() {
        return Err(Error::Argument("the lambda grid must be positive and span half a decade".into()));
    }
    let points = grid
        .iter()
        .map(|&l| household_rate(l, inputs.sar_horizon, settings))
        .collect::<Result<Vec<_>>>()?;
    lambda_from_rates(points, gamma_sar)
}

/// The fitting half of [`calibrate_lambda`] on precomputed `Γ(λ)` points.
pub fn lambda_from_rates(points: Vec<GridPoint>, gamma_sar: f64) -> Result<LambdaCalibration> {
    if let Some(p) = points.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::CalibrationQuality(format!(
            "non-positive rate {} at lambda = {}",
            p.value, p.param
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.param.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let line = fit::linear_fit(&x, &y)?;
    let (lo, hi) = LAMBDA_SLOPE_RANGE;
    if !(lo..=hi).contains(&line.slope) {
        return Err(Error::CalibrationQuality(format!(
            "log-log slope {:.3} outside [{lo}, {hi}]; the rates are not quadratic in lambda",
            line.slope
        )));
    }
    let (ln_lambda, ln_se) = line.solve_for_x(gamma_sar.ln());
    let lambda = ln_lambda.exp();
    Ok(LambdaCalibration {
        lambda,
        lambda_stderr: lambda * ln_se,
        gamma_sar,
        fit: LineSummary::from(&line),
        grid: points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaCalibration {
    pub sigma: f64,
    pub sigma_stderr: f64,
    pub target: f64,
    /// Fit of the infected total against `σ`.
    pub fit: LineSummary,
    /// Infected total at the incubation day per grid point.
    pub grid: Vec<GridPoint>,
    pub warnings: Vec<String>,
}

pub fn default_sigma_grid() -> Vec<f64> {
    (0..=10).map(|k| 40.0 + 5.0 * k as f64).collect()
}

/// Builds the model for a community map at distance scale `σ`.
pub fn community_model(map: &CommunityMap, sigma: f64, lambda: f64, settings: &SimSettings) -> Result<EpidemicModel> {
    let gamma = map.couplings(sigma, settings.delta_t)?;
    let alpha = auto_alpha(map.index_patients.len(), settings.delta_t);
    EpidemicModel::new(
        gamma,
        lambda,
        alpha,
        settings.delta_t,
        settings.trotter_dt,
        map.populations(),
    )
}

/// Runs a model after dropping uncoupled sites; those report survival 1.
pub fn run_pruned(model: &EpidemicModel, days: f64, mode: SimulationMode) -> Result<TimeSeries> {
    run_pruned_with(model, days, |m| run_protocol(m, days, mode))
}

/// As [`run_pruned`] with any engine.
pub fn run_pruned_with<F>(model: &EpidemicModel, days: f64, engine: F) -> Result<TimeSeries>
where
    F: Fn(&EpidemicModel) -> Result<TimeSeries>,
{
    match model.without_uncoupled_sites() {
        Some((reduced, kept)) if kept.len() < model.n_susceptible => {
            Ok(engine(&reduced)?.expand_sites(&kept, &model.populations))
        }
        Some(_) => engine(model),
        None => {
            let steps = (days / model.delta_t).round() as usize;
            let n = model.n_susceptible;
            Ok(TimeSeries {
                times: (0..=steps).map(|k| k as f64 * model.delta_t).collect(),
                survival: vec![vec![1.0; n]; steps + 1],
                stderr: vec![vec![0.0; n]; steps + 1],
                populations: model.populations.clone(),
            })
        }
    }
}

/// Total infected population at day `days`, with its standard error.
pub fn infected_total(map: &CommunityMap, sigma: f64, lambda: f64, days: f64, settings: &SimSettings) -> Result<GridPoint> {
    let model = community_model(map, sigma, lambda, settings)?;
    let series = run_pruned(&model, days, settings.mode)?;
    let k = series.times.len() - 1;
    Ok(GridPoint {
        param: sigma,
        value: series.total_infected(k),
        stderr: series.total_infected_stderr(k),
    })
}

/// Sweeps `σ`, fits the infected total linearly and solves `total(σ*) = R0`.
pub fn calibrate_sigma(
    map: &CommunityMap,
    lambda: f64,
    inputs: &VirusInputs,
    grid: &[f64],
    settings: &SimSettings,
) -> Result<SigmaCalibration> {
    let r0 = inputs
        .r0
        .ok_or_else(|| Error::validation("virus.r0", "required for sigma calibration"))?;
    if grid.len() < 3 {
        return Err(Error::Argument("the sigma grid needs at least three points".into()));
    }
    let points = grid
        .iter()
        .map(|&s| infected_total(map, s, lambda, inputs.incubation, settings))
        .collect::<Result<Vec<_>>>()?;
    sigma_from_totals(points, r0)
}

/// The fitting half of [`calibrate_sigma`].
pub fn sigma_from_totals(points: Vec<GridPoint>, r0: f64) -> Result<SigmaCalibration> {
    for w in points.windows(2) {
        let noise = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        if w[1].value <= w[0].value - noise {
            return Err(Error::CalibrationQuality(format!(
                "infected total decreases from {:.4} at sigma = {} to {:.4} at sigma = {}",
                w[0].value, w[0].param, w[1].value, w[1].param
            )));
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.param).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value).collect();
    let line = fit::linear_fit(&x, &y)?;
    if !(line.slope > 0.0) {
        return Err(Error::CalibrationQuality("infected total does not grow with sigma".into()));
    }
    let (sigma, sigma_stderr) = line.solve_for_x(r0);
    let mut warnings = Vec::new();
    let (lo, hi) = (
        y.iter().copied().fold(f64::INFINITY, f64::min),
        y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    if r0 < lo || r0 > hi {
        warnings.push(format!(
            "R0 = {r0} lies outside the simulated totals [{lo:.3}, {hi:.3}]; sigma = {sigma:.2} is an extrapolation"
        ));
    }
    if !(sigma > 0.0) {
        return Err(Error::CalibrationQuality(format!("solved sigma {sigma:.3} is not positive")));
    }
    Ok(SigmaCalibration {
        sigma,
        sigma_stderr,
        target: r0,
        fit: LineSummary::from(&line),
        grid: points,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincScan {
    /// `Γ(γ)` per grid point.
    pub grid: Vec<GridPoint>,
    pub lambda_hat: f64,
    pub lambda_hat_stderr: f64,
    pub delta_t_hat: f64,
    pub delta_t_hat_stderr: f64,
}

/// Interior of `(0, 2π/Δt)` in steps of `π/8`.
pub fn default_gamma_grid(delta_t: f64) -> Vec<f64> {
    (1..16).map(|k| k as f64 * PI / (8.0 * delta_t)).collect()
}

/// Sweeps the household coupling at fixed `λ` and fits
/// `Γ(γ) = λ̂²Δt̂·sinc²((γ − α)Δt̂)`.
pub fn gamma_scan(lambda: f64, grid: &[f64], days: f64, settings: &SimSettings) -> Result<SincScan> {
    let alpha = auto_alpha(1, settings.delta_t);
    let points = grid
        .iter()
        .map(|&g| {
            let model = EpidemicModel::new(
                vec![vec![g]],
                lambda,
                alpha,
                settings.delta_t,
                settings.trotter_dt,
                vec![1.0],
            )?;
            let series = run_protocol(&model, days, settings.mode)?;
            let fit = extract_infection_rate(&series, 0, (0.0, days))?;
            Ok(GridPoint {
                param: g,
                value: fit.rate,
                stderr: fit.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = |p: &[f64], g: f64| {
        let s = crate::oracle::sinc((g - alpha) * p[1]);
        p[0] * p[0] * p[1] * s * s
    };
    let x: Vec<f64> = points.iter().map(|p| p.param).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value).collect();
    let curve = fit::levenberg_marquardt(model, &x, &y, &[lambda, settings.delta_t])?;
    Ok(SincScan {
        grid: points,
        lambda_hat: curve.params[0].abs(),
        lambda_hat_stderr: curve.stderr[0],
        delta_t_hat: curve.params[1],
        delta_t_hat_stderr: curve.stderr[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sar_rate_examples() {
        assert_abs_diff_eq!(gamma_from_sar(1e-12, 7.0).unwrap(), 1e-12 / 7.0, epsilon = 1e-20);
        let g = gamma_from_sar(0.251, 7.0).unwrap();
        assert_abs_diff_eq!(g, -(0.749f64.ln()) / 7.0, epsilon = 1e-16);
        assert_abs_diff_eq!(g, 0.041289, epsilon = 1.5e-6);
        let sar = 1.0 - (-7.0f64).exp();
        assert_abs_diff_eq!(gamma_from_sar(sar, 7.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(gamma_from_sar(1.0, 7.0).is_err());
        assert!(gamma_from_sar(1.2, 7.0).is_err());
    }

    #[test]
    fn sar_round_trip() {
        let g = gamma_from_sar(0.251, 7.0).unwrap();
        assert_abs_diff_eq!(sar_from_rate(g, 7.0), 0.251, epsilon = 1e-12);
    }

    #[test]
    fn alpha_examples() {
        assert_abs_diff_eq!(auto_alpha(1, 1.0), PI);
        assert_abs_diff_eq!(auto_alpha(2, 1.0), PI / 2.0);
        assert_abs_diff_eq!(auto_alpha(1, 2.0), PI / 2.0);
    }

    #[test]
    fn rescale_examples() {
        assert_abs_diff_eq!(rescale_time(0.201, 0.4), 0.25250625, epsilon = 1e-12);
        assert_eq!(rescale_time(0.201, 0.201), 1.0);
        assert_abs_diff_eq!(rescale_time(0.201, 0.05), 16.1604, epsilon = 1e-10);
    }

    #[test]
    fn exact_quadratic_law_inverts() {
        let points: Vec<GridPoint> = DEFAULT_LAMBDA_GRID
            .iter()
            .map(|&l| GridPoint {
                param: l,
                value: l * l,
                stderr: 0.0,
            })
            .collect();
        let cal = lambda_from_rates(points, 0.04).unwrap();
        assert_abs_diff_eq!(cal.lambda, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(cal.fit.slope, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cubic_law_is_rejected() {
        let points = DEFAULT_LAMBDA_GRID
            .iter()
            .map(|&l| GridPoint {
                param: l,
                value: l.powi(3),
                stderr: 0.0,
            })
            .collect();
        assert!(matches!(lambda_from_rates(points, 0.01), Err(Error::CalibrationQuality(_))));
    }

    #[test]
    fn sigma_fit_paths() {
        let grid = |f: &dyn Fn(f64) -> f64| -> Vec<GridPoint> {
            default_sigma_grid()
                .into_iter()
                .map(|s| GridPoint {
                    param: s,
                    value: f(s),
                    stderr: 0.0,
                })
                .collect()
        };
        let ok = sigma_from_totals(grid(&|s| 0.2 * s - 4.0), 9.5).unwrap();
        assert_abs_diff_eq!(ok.sigma, 67.5, epsilon = 1e-9);
        assert!(ok.warnings.is_empty());

        let low = sigma_from_totals(grid(&|s| 0.1 * s + 6.0), 9.5).unwrap();
        assert_abs_diff_eq!(low.sigma, 35.0, epsilon = 1e-9);
        assert_eq!(low.warnings.len(), 1);

        let bumpy = sigma_from_totals(grid(&|s| (s / 10.0).sin() + 10.0), 9.5);
        assert!(matches!(bumpy, Err(Error::CalibrationQuality(_))));
    }

    #[test]
    fn physical_time_reads_dilated_clock() {
        let series = TimeSeries {
            times: (0..=4).map(|k| k as f64).collect(),
            survival: (0..=4).map(|k| vec![(-0.1 * k as f64).exp()]).collect(),
            stderr: vec![vec![0.0]; 5],
            populations: vec![1.0],
        };
        let p = survival_at_physical_time(&series, 0, 1.0, 2.5).unwrap();
        assert_abs_diff_eq!(p, (-0.25f64).exp(), epsilon = 1e-14);
        assert!(survival_at_physical_time(&series, 0, 3.0, 2.0).is_err());
    }
}
