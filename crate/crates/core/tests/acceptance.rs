//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermal_epidemic::calibration::{
    self, calibrate_lambda, calibrate_sigma, default_gamma_grid, default_sigma_grid, gamma_scan, infected_total,
    rescale_time, rescale_time_with_exponent, survival_at_physical_time, SimSettings, VirusInputs,
    DEFAULT_LAMBDA_GRID,
};
use thermal_epidemic::evolution::{run_protocol_dense, trotter_channel};
use thermal_epidemic::geometry::{invert_sinc, sinc_rate};
use thermal_epidemic::oracle::{self, markov_protocol, reset_matrix, rk4_evolve, second_order_matrix};
use thermal_epidemic::scenario::{load_scenario, ScenarioConfig};
use thermal_epidemic::state::{DensityMatrix, QuantumState, StateVector};
use thermal_epidemic::{run_protocol, EpidemicModel, Result, SimulationMode, TimeSeries};

const LAMBDA_REF: f64 = 0.201;

fn scenario(name: &str) -> ScenarioConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect();
    load_scenario(&path).expect("shipped scenario loads")
}

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn sar_reproduction() -> Result<Outcome> {
    let model = EpidemicModel::pair(PI, LAMBDA_REF, PI)?;
    let series = run_protocol(&model, 7.0, SimulationMode::Density)?;
    let p7 = series.survival[7][0];
    outcome((p7 - 0.749).abs() <= 0.02, format!("P(7) = {p7:.5}, want 0.749 ± 0.02"))
}

fn quadratic_law() -> Result<Outcome> {
    let cal = calibrate_lambda(&VirusInputs::omicron(), &DEFAULT_LAMBDA_GRID, &SimSettings::default())?;
    let s = cal.fit.slope;
    outcome(
        (1.91..=2.00).contains(&s),
        format!("slope = {s:.4} ± {:.4}, want [1.91, 2.00]", cal.fit.slope_stderr),
    )
}

fn lambda_calibration() -> Result<Outcome> {
    let cal = calibrate_lambda(&VirusInputs::omicron(), &DEFAULT_LAMBDA_GRID, &SimSettings::default())?;
    outcome(
        (0.185..=0.217).contains(&cal.lambda),
        format!("λ* = {:.5} ± {:.5}, want [0.185, 0.217]", cal.lambda, cal.lambda_stderr),
    )
}

fn sinc_law() -> Result<Outcome> {
    let settings = SimSettings::default();
    let scan = gamma_scan(LAMBDA_REF, &default_gamma_grid(settings.delta_t), 7.0, &settings)?;
    let ok = (scan.lambda_hat - 0.199).abs() <= 0.01 && (scan.delta_t_hat - 1.014).abs() <= 0.05;
    outcome(
        ok,
        format!(
            "λ̂ = {:.5}, Δt̂ = {:.5}, want 0.199 ± 0.01 and 1.014 ± 0.05",
            scan.lambda_hat, scan.delta_t_hat
        ),
    )
}

fn rescaling() -> Result<Outcome> {
    let a_hi = rescale_time(LAMBDA_REF, 0.400);
    let a_lo = rescale_time(LAMBDA_REF, 0.050);
    let factors_ok = (a_hi / 0.253 - 1.0).abs() <= 0.01 && (a_lo / 16.07 - 1.0).abs() <= 0.01;

    let cal = calibrate_lambda(&VirusInputs::omicron(), &DEFAULT_LAMBDA_GRID, &SimSettings::default())?;
    let p = cal.fit.slope;
    let fitted = (
        rescale_time_with_exponent(LAMBDA_REF, 0.400, p),
        rescale_time_with_exponent(LAMBDA_REF, 0.050, p),
    );

    let horizon = 10.0;
    let reference = run_protocol(&EpidemicModel::pair(PI, LAMBDA_REF, PI)?, horizon, SimulationMode::Density)?;
    let mut worst: f64 = 0.0;
    for lambda in [0.05, 0.1, 0.15, 0.3, 0.4] {
        let a = rescale_time(LAMBDA_REF, lambda);
        let days = (a * horizon).ceil() + 1.0;
        let run = run_protocol(&EpidemicModel::pair(PI, lambda, PI)?, days, SimulationMode::Density)?;
        for (k, &t) in reference.times.iter().enumerate() {
            let p = survival_at_physical_time(&run, 0, t, a)?;
            worst = worst.max((p - reference.survival[k][0]).abs());
        }
    }
    outcome(
        factors_ok && worst <= 0.01,
        format!(
            "a(0.400) = {a_hi:.4}, a(0.050) = {a_lo:.3} (with fitted exponent {p:.4}: {:.4}, {:.3}); \
             max rescaled |ΔP| = {worst:.2e}",
            fitted.0, fitted.1
        ),
    )
}

fn oracle_equivalence() -> Result<Outcome> {
    let cfg = scenario("omicron_typical.json");
    let resolved = cfg.resolve()?;
    let model = &resolved.model;
    let quantum = run_protocol(model, 10.0, SimulationMode::Density)?;
    let rk4 = rk4_evolve(model, 10.0)?;
    let markov = markov_protocol(model, 10.0)?;
    let d_rk4 = quantum.max_abs_diff(&rk4);
    let d_markov = quantum.max_abs_diff(&markov);
    outcome(
        model.n_qubits() == 10 && model.lambda.abs() <= 0.201 + 1e-12 && d_rk4 <= 5e-3 && d_markov <= 0.01,
        format!(
            "{} qubits, |quantum − rk4| = {d_rk4:.2e} (≤ 5e-3), |quantum − markov| = {d_markov:.2e} (≤ 0.01)",
            model.n_qubits()
        ),
    )
}

fn lambda_parity() -> Result<Outcome> {
    let model = scenario("omicron_typical.json").resolve()?.model;
    let plus = run_protocol(&model, 10.0, SimulationMode::Density)?;
    let minus = run_protocol(&model.with_lambda(-model.lambda), 10.0, SimulationMode::Density)?;
    let pair = EpidemicModel::pair(2.3, 0.35, PI)?;
    let d_pair = run_protocol(&pair, 10.0, SimulationMode::Density)?
        .max_abs_diff(&run_protocol(&pair.with_lambda(-0.35), 10.0, SimulationMode::Density)?);
    let d = plus.max_abs_diff(&minus).max(d_pair);
    outcome(d <= 1e-10, format!("max |P(λ) − P(−λ)| = {d:.2e}, want ≤ 1e-10"))
}

fn zero_rate() -> Result<Outcome> {
    let lambda = LAMBDA_REF;
    let model = EpidemicModel::pair(1e-4, lambda, PI)?;
    let s = second_order_matrix(&model)?;
    // index infected (bit 0), household healthy → household infected
    let flip = s.entry(0b11, 0b01);
    let bound = 1e-6 * lambda * lambda;
    outcome(flip < bound, format!("flip probability = {flip:.3e}, want < {bound:.3e}"))
}

fn sigma_self_consistency() -> Result<Outcome> {
    let cfg = scenario("omicron_typical.json");
    let map = cfg.community_map();
    let settings = cfg.settings();
    let lambda = cfg.lambda()?;
    let cal = calibrate_sigma(&map, lambda, &cfg.virus, &default_sigma_grid(), &settings)?;
    let monotone = cal.grid.windows(2).all(|w| w[1].value > w[0].value);
    let check = infected_total(&map, cal.sigma, lambda, cfg.virus.incubation, &settings)?;
    let r0 = cfg.virus.r0.unwrap_or(9.5);
    let rel = check.value / r0 - 1.0;
    outcome(
        monotone && rel.abs() <= 0.02,
        format!(
            "monotone = {monotone}, σ* = {:.2} ± {:.2} m, total(σ*) = {:.3} ({:+.2}% of {r0})",
            cal.sigma,
            cal.sigma_stderr,
            check.value,
            100.0 * rel
        ),
    )
}

fn infection_probabilities(cfg: &ScenarioConfig) -> Result<(Vec<usize>, TimeSeries)> {
    let resolved = cfg.resolve()?;
    let series = calibration::run_pruned(&resolved.model, 10.0, SimulationMode::Density)?;
    Ok((resolved.site_ids, series))
}

fn two_patient_dominance() -> Result<Outcome> {
    let one_cfg = scenario("one_patient_communities.json");
    let two_cfg = scenario("two_patients.json");
    let (ids_one, one) = infection_probabilities(&one_cfg)?;
    let (ids_two, two) = infection_probabilities(&two_cfg)?;
    let alpha_ok = (two_cfg.alpha() - PI / 2.0).abs() < 1e-12 && (one_cfg.alpha() - PI).abs() < 1e-12;
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for (j, id) in ids_one.iter().enumerate() {
        let Some(jj) = ids_two.iter().position(|x| x == id) else {
            violations += 1;
            continue;
        };
        for k in 1..=10 {
            let q1 = 1.0 - one.survival[k][j];
            let q2 = 1.0 - two.survival[k][jj];
            if q2 < q1 {
                violations += 1;
            }
            margin = margin.min(q2 - q1);
        }
    }
    outcome(
        alpha_ok && violations == 0,
        format!("{violations} violations over {} sites × 10 days, min margin {margin:.3e}", ids_one.len()),
    )
}

fn random_gates(rng: &mut ChaCha8Rng, n: usize) -> Vec<(bool, usize, usize, f64)> {
    (0..20)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            (rng.gen_bool(0.5), a, b, rng.gen_range(-2.0 * PI..2.0 * PI))
        })
        .collect()
}

fn property_suite() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // norm, trace and pure/density agreement under random rotations
    let mut worst_norm: f64 = 0.0;
    let mut worst_repr: f64 = 0.0;
    for case in 0..1000 {
        let n = 4;
        let start = case % (1 << n);
        let mut pure = QuantumState::Pure(StateVector::basis(n, start));
        let mut dens = QuantumState::Density(DensityMatrix::basis(n, start));
        for (zz, a, b, theta) in random_gates(&mut rng, n) {
            for s in [&mut pure, &mut dens] {
                if zz {
                    s.apply_zz_rotation(a, b, theta)?;
                } else {
                    s.apply_xx_rotation(a, b, theta)?;
                }
            }
        }
        worst_norm = worst_norm
            .max((pure.total_probability() - 1.0).abs())
            .max((dens.total_probability() - 1.0).abs());
        for (x, y) in pure.probabilities().iter().zip(dens.probabilities()) {
            worst_repr = worst_repr.max((x - y).abs());
        }
    }
    if worst_norm > 1e-12 {
        failures.push(format!("norm/trace drift {worst_norm:.1e}"));
    }
    if worst_repr > 1e-12 {
        failures.push(format!("pure vs density {worst_repr:.1e}"));
    }

    // reduced configuration chain against full density-matrix evolution
    let model = EpidemicModel::new(vec![vec![PI, 2.0]], 0.3, PI, 1.0, 0.01, vec![3.0, 7.0])?;
    let d = run_protocol(&model, 6.0, SimulationMode::Density)?.max_abs_diff(&run_protocol_dense(&model, 6.0)?);
    if d > 1e-10 {
        failures.push(format!("reduced vs dense density {d:.1e}"));
    }

    // sampled trajectories against the exact channel
    let pair = EpidemicModel::pair(PI, 0.3, PI)?;
    let exact = run_protocol(&pair, 5.0, SimulationMode::Density)?;
    let shots = run_protocol(&pair, 5.0, SimulationMode::Shots { shots: 20_000, seed: 11 })?;
    for k in 1..exact.times.len() {
        let z = (shots.survival[k][0] - exact.survival[k][0]).abs() / shots.stderr[k][0].max(1e-12);
        if z > 5.0 {
            failures.push(format!("trajectories deviate by {z:.1}σ on day {k}"));
        }
    }

    // stochastic matrices
    let typical = scenario("omicron_typical.json").resolve()?.model;
    for (name, m, tol) in [
        ("trotter", trotter_channel(&typical)?, 1e-12),
        ("markov", second_order_matrix(&typical)?, 1e-12),
        ("rk4", oracle::rk4_channel(&pair, oracle::RK4_STEP)?, 1e-8),
    ] {
        let dev = m.column_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        if dev > tol || m.min_entry() < -tol {
            failures.push(format!("{name} column sums off by {dev:.1e}"));
        }
    }
    let r = reset_matrix(&typical)?;
    let idem = r.compose(&r).max_abs_diff(&r);
    if idem > 0.0 {
        failures.push(format!("R² − R = {idem:.1e}"));
    }

    // sinc inversion round trip
    let mut worst_trip: f64 = 0.0;
    for k in 1..200 {
        let gamma = PI * k as f64 / 200.0;
        let rate = sinc_rate(gamma, LAMBDA_REF, PI, 1.0);
        let back = invert_sinc(rate, LAMBDA_REF, PI, 1.0)?;
        worst_trip = worst_trip.max((back - gamma).abs());
    }
    if worst_trip > 1e-9 {
        failures.push(format!("sinc round trip {worst_trip:.1e}"));
    }

    let detail = if failures.is_empty() {
        format!("norm {worst_norm:.1e}, reduced/dense {d:.1e}, sinc round trip {worst_trip:.1e}")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("sar reproduction", sar_reproduction),
        ("quadratic law", quadratic_law),
        ("lambda calibration", lambda_calibration),
        ("sinc law", sinc_law),
        ("rescaling factors", rescaling),
        ("oracle equivalence", oracle_equivalence),
        ("lambda parity", lambda_parity),
        ("zero-rate property", zero_rate),
        ("sigma self-consistency", sigma_self_consistency),
        ("two-patient dominance", two_patient_dominance),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
