//! The system/bath Hamiltonian and the reset protocol built on it.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = −Σ_ij γ_ij Z^s_i Z^s_j  −  λ Σ_k X^s_k X^b_k  −  α Σ_ij Z^b_i Z^b_j
//! ```
//!
//! with `i` over index patients and `j` over susceptible sites. A protocol run
//! alternates Trotterized evolution over one reset interval `Δt` with a reset
//! of every bath qubit to `|0⟩` and of every index patient to `|1⟩`.
//!
//! Each coupling term `X^s_k X^b_k` flips a system spin together with its bath
//! partner, so the parities `z^s_k z^b_k` are conserved. Starting from a basis
//! configuration with the bath in `|0…0⟩`, the joint state therefore never
//! mixes different system configurations with the same bath configuration, and
//! tracing out the bath leaves a diagonal system density matrix. The exact
//! density-mode dynamics is then a classical chain whose one-interval
//! transition matrix is obtained by evolving each system configuration as a
//! pure state. [`run_protocol_dense`] evolves the full density matrix instead
//! and serves as the reference for that reduction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::oracle::StochasticMatrix;
use crate::state::{trajectory_stream, DensityMatrix, QuantumState, QubitLayout, StateVector};

/// Couplings below this are treated as absent.
pub const GAMMA_MIN: f64 = 1e-6;

/// Largest register the density representation accepts.
pub const DENSITY_QUBIT_LIMIT: usize = 12;

/// Largest register trajectory sampling accepts.
pub const SHOTS_QUBIT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicModel {
    pub n_index: usize,
    pub n_susceptible: usize,
    /// `gamma[i][j]`, index patient `i` to susceptible site `j`.
    pub gamma: Vec<Vec<f64>>,
    /// System–bath coupling. Only `λ²` enters observables; negative values are
    /// accepted so the sign symmetry can be exercised.
    pub lambda: f64,
    pub alpha: f64,
    /// Reset interval in days.
    pub delta_t: f64,
    /// Trotter step in days.
    pub trotter_dt: f64,
    /// Population of each susceptible site.
    pub populations: Vec<f64>,
}

impl EpidemicModel {
    pub fn new(
        gamma: Vec<Vec<f64>>,
        lambda: f64,
        alpha: f64,
        delta_t: f64,
        trotter_dt: f64,
        populations: Vec<f64>,
    ) -> Result<Self> {
        let n_index = gamma.len();
        let n_susceptible = gamma.first().map_or(0, Vec::len);
        let model = Self {
            n_index,
            n_susceptible,
            gamma,
            lambda,
            alpha,
            delta_t,
            trotter_dt,
            populations,
        };
        model.validate()?;
        Ok(model)
    }

    /// One index patient and one susceptible site with unit population,
    /// `Δt = 1`, `δt = 0.01`.
    pub fn pair(gamma: f64, lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![vec![gamma]], lambda, alpha, 1.0, 0.01, vec![1.0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_index == 0 {
            return Err(Error::Model("at least one index patient is required".into()));
        }
        if self.n_susceptible == 0 {
            return Err(Error::Model("at least one susceptible site is required".into()));
        }
        if self.gamma.len() != self.n_index || self.gamma.iter().any(|row| row.len() != self.n_susceptible) {
            return Err(Error::Model(format!(
                "gamma must be a {}×{} matrix",
                self.n_index, self.n_susceptible
            )));
        }
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::Model(format!("gamma[{i}][{j}] = {g} must be finite and ≥ 0")));
                }
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::Model("lambda must be finite".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Model(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(Error::Model(format!("delta_t = {} must be positive", self.delta_t)));
        }
        if !(self.trotter_dt.is_finite() && self.trotter_dt > 0.0) {
            return Err(Error::Model(format!("trotter_dt = {} must be positive", self.trotter_dt)));
        }
        if self.populations.len() != self.n_susceptible {
            return Err(Error::Model(format!(
                "{} populations given for {} susceptible sites",
                self.populations.len(),
                self.n_susceptible
            )));
        }
        if let Some(p) = self.populations.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Model(format!("population {p} must be positive")));
        }
        Ok(())
    }

    pub fn layout(&self) -> QubitLayout {
        QubitLayout::new(self.n_index, self.n_susceptible)
    }

    pub fn n_sites(&self) -> usize {
        self.n_index + self.n_susceptible
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Number of Trotter steps per reset interval.
    pub fn trotter_steps(&self) -> Result<usize> {
        steps_in(self.delta_t, self.trotter_dt)
    }

    /// Bitmask of the index patients in a system configuration.
    pub fn index_mask(&self) -> usize {
        (1 << self.n_index) - 1
    }

    /// Energy of a system configuration under the Ising system Hamiltonian.
    /// Bit `k` of `config` is site `k`; `|0⟩` has `z = +1`.
    pub fn system_energy(&self, config: usize) -> f64 {
        let z = |site: usize| if (config >> site) & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                e -= g * z(i) * z(self.n_index + j);
            }
        }
        e
    }

    /// Drops susceptible sites whose every coupling is below [`GAMMA_MIN`].
    /// Returns the reduced model and the original indices of the kept sites,
    /// or `None` when nothing would remain.
    pub fn without_uncoupled_sites(&self) -> Option<(Self, Vec<usize>)> {
        let kept: Vec<usize> = (0..self.n_susceptible)
            .filter(|&j| self.gamma.iter().any(|row| row[j] >= GAMMA_MIN))
            .collect();
        if kept.is_empty() {
            return None;
        }
        let gamma = self
            .gamma
            .iter()
            .map(|row| kept.iter().map(|&j| row[j]).collect())
            .collect();
        let populations = kept.iter().map(|&j| self.populations[j]).collect();
        let reduced = Self {
            n_susceptible: kept.len(),
            gamma,
            populations,
            ..self.clone()
        };
        Some((reduced, kept))
    }
}

fn steps_in(span: f64, dt: f64) -> Result<usize> {
    let ratio = span / dt;
    let n = ratio.round();
    if n < 1.0 || (n * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::Config(format!(
            "step {dt} does not divide the interval {span} into a whole number of steps"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    SystemZz,
    CouplingXx,
    BathZz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub kind: TermKind,
    pub qubits: (usize, usize),
    pub coefficient: f64,
}

/// Pauli terms of the Hamiltonian in canonical Trotter order: system ZZ by
/// `(i, j)`, then XX couplings by site, then bath ZZ by `(i, j)`.
pub fn build_terms(model: &EpidemicModel) -> Result<Vec<HamiltonianTerm>> {
    model.validate()?;
    let layout = model.layout();
    let mut terms = Vec::with_capacity(2 * model.n_index * model.n_susceptible + model.n_sites());
    for (i, row) in model.gamma.iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            terms.push(HamiltonianTerm {
                kind: TermKind::SystemZz,
                qubits: (
                    layout.system(layout.index_site(i)),
                    layout.system(layout.susceptible_site(j)),
                ),
                coefficient: -g,
            });
        }
    }
    for site in 0..layout.n_sites() {
        terms.push(HamiltonianTerm {
            kind: TermKind::CouplingXx,
            qubits: (layout.system(site), layout.bath(site)),
            coefficient: -model.lambda,
        });
    }
    for i in 0..model.n_index {
        for j in 0..model.n_susceptible {
            terms.push(HamiltonianTerm {
                kind: TermKind::BathZz,
                qubits: (layout.bath(layout.index_site(i)), layout.bath(layout.susceptible_site(j))),
                coefficient: -model.alpha,
            });
        }
    }
    Ok(terms)
}

/// First-order Trotter evolution over `delta_t` in steps of `dt`. A term
/// `c·P⊗P` is applied as the rotation with angle `2c·dt`.
pub fn trotter_interval(state: &mut QuantumState, terms: &[HamiltonianTerm], delta_t: f64, dt: f64) -> Result<()> {
    let steps = steps_in(delta_t, dt)?;
    for _ in 0..steps {
        for term in terms {
            let theta = 2.0 * term.coefficient * dt;
            let (a, b) = term.qubits;
            match term.kind {
                TermKind::SystemZz | TermKind::BathZz => state.apply_zz_rotation(a, b, theta)?,
                TermKind::CouplingXx => state.apply_xx_rotation(a, b, theta)?,
            }
        }
    }
    Ok(())
}

fn trotter_interval_pure(psi: &mut StateVector, terms: &[HamiltonianTerm], steps: usize, dt: f64) -> Result<()> {
    for _ in 0..steps {
        for term in terms {
            let theta = 2.0 * term.coefficient * dt;
            let (a, b) = term.qubits;
            match term.kind {
                TermKind::SystemZz | TermKind::BathZz => psi.apply_zz_rotation(a, b, theta)?,
                TermKind::CouplingXx => psi.apply_xx_rotation(a, b, theta)?,
            }
        }
    }
    Ok(())
}

/// Per-site survival probabilities sampled at reset boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// `survival[t][j]` for susceptible site `j`.
    pub survival: Vec<Vec<f64>>,
    /// Standard error of each entry; zero for exact engines.
    pub stderr: Vec<Vec<f64>>,
    pub populations: Vec<f64>,
}

impl TimeSeries {
    pub fn n_sites(&self) -> usize {
        self.populations.len()
    }

    pub fn site_curve(&self, site: usize) -> Vec<f64> {
        self.survival.iter().map(|row| row[site]).collect()
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| (x - t).abs() < 1e-9)
    }

    pub fn survival_at(&self, t: f64, site: usize) -> Option<f64> {
        self.time_index(t).map(|k| self.survival[k][site])
    }

    pub fn infected_population(&self, k: usize, site: usize) -> f64 {
        self.populations[site] * (1.0 - self.survival[k][site])
    }

    pub fn total_infected(&self, k: usize) -> f64 {
        (0..self.n_sites()).map(|j| self.infected_population(k, j)).sum()
    }

    /// Binomial-style error on the total infected population.
    pub fn total_infected_stderr(&self, k: usize) -> f64 {
        (0..self.n_sites())
            .map(|j| (self.populations[j] * self.stderr[k][j]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute survival difference over all shared time points.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        let mut worst = 0.0f64;
        for (k, &t) in self.times.iter().enumerate() {
            if let Some(m) = other.time_index(t) {
                for (a, b) in self.survival[k].iter().zip(&other.survival[m]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// Re-inserts sites removed by [`EpidemicModel::without_uncoupled_sites`]
    /// with survival 1.
    pub fn expand_sites(&self, kept: &[usize], populations: &[f64]) -> TimeSeries {
        let n = populations.len();
        let widen = |rows: &Vec<Vec<f64>>, fill: f64| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|row| {
                    let mut full = vec![fill; n];
                    for (pos, &j) in kept.iter().enumerate() {
                        full[j] = row[pos];
                    }
                    full
                })
                .collect()
        };
        TimeSeries {
            times: self.times.clone(),
            survival: widen(&self.survival, 1.0),
            stderr: widen(&self.stderr, 0.0),
            populations: populations.to_vec(),
        }
    }

    /// Builds a series from a distribution over system configurations
    /// recorded at each boundary.
    pub(crate) fn from_distributions(model: &EpidemicModel, times: Vec<f64>, dists: &[Vec<f64>]) -> Self {
        let survival = dists
            .iter()
            .map(|p| (0..model.n_susceptible).map(|j| survival_of(p, model.n_index + j)).collect())
            .collect();
        let stderr = vec![vec![0.0; model.n_susceptible]; times.len()];
        TimeSeries {
            times,
            survival,
            stderr,
            populations: model.populations.clone(),
        }
    }
}

/// Probability that `site` reads `0` under a configuration distribution.
pub fn survival_of(dist: &[f64], site: usize) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(c, _)| (c >> site) & 1 == 0)
        .map(|(_, p)| p)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SimulationMode {
    /// Exact reduced dynamics, no sampling noise.
    Density,
    /// Independent batches of measured trajectories, one batch per recorded
    /// time point.
    Shots { shots: u64, seed: u64 },
}

fn interval_count(model: &EpidemicModel, days: f64) -> Result<usize> {
    let k = (days / model.delta_t).round();
    if !(days > 0.0) || k < 1.0 || (k * model.delta_t - days).abs() > 1e-9 * days.max(1.0) {
        return Err(Error::Config(format!(
            "run length {days} is not a positive multiple of the reset interval {}",
            model.delta_t
        )));
    }
    Ok(k as usize)
}

fn boundary_times(model: &EpidemicModel, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|k| k as f64 * model.delta_t).collect()
}

/// One-interval transition matrix of the system configurations: Trotter
/// evolution from `|n⟩|0…0⟩`, then the bath is traced out. Index resets are
/// not included.
pub fn trotter_channel(model: &EpidemicModel) -> Result<StochasticMatrix> {
    let nq = model.n_qubits();
    if nq > DENSITY_QUBIT_LIMIT {
        return Err(Error::EngineRefusal {
            engine: "quantum-density",
            qubits: nq,
            limit: DENSITY_QUBIT_LIMIT,
        });
    }
    let terms = build_terms(model)?;
    let steps = model.trotter_steps()?;
    let dim = 1usize << model.n_sites();
    let mut matrix = StochasticMatrix::zeros(dim);
    for from in 0..dim {
        let mut psi = StateVector::basis(nq, from);
        trotter_interval_pure(&mut psi, &terms, steps, model.trotter_dt)?;
        for (x, amp) in psi.amplitudes().iter().enumerate() {
            let to = x & (dim - 1);
            *matrix.entry_mut(to, from) += amp.norm_sqr();
        }
    }
    Ok(matrix)
}

/// Moves all probability onto configurations with every index patient set.
pub(crate) fn reset_index_sites(dist: &[f64], index_mask: usize) -> Vec<f64> {
    let mut out = vec![0.0; dist.len()];
    for (c, p) in dist.iter().enumerate() {
        out[c | index_mask] += p;
    }
    out
}

/// Runs the reset protocol for `days` and records survival after every
/// boundary (after the resets). Day 0 is included with survival 1.
pub fn run_protocol(model: &EpidemicModel, days: f64, mode: SimulationMode) -> Result<TimeSeries> {
    model.validate()?;
    let intervals = interval_count(model, days)?;
    match mode {
        SimulationMode::Density => {
            let channel = trotter_channel(model)?;
            Ok(iterate_channel(model, &channel, intervals))
        }
        SimulationMode::Shots { shots, seed } => run_trajectories(model, intervals, shots, seed),
    }
}

/// Applies `channel` followed by the index reset `intervals` times, starting
/// from the initial configuration.
pub(crate) fn iterate_channel(model: &EpidemicModel, channel: &StochasticMatrix, intervals: usize) -> TimeSeries {
    let dim = 1usize << model.n_sites();
    let mut p = vec![0.0; dim];
    p[model.index_mask()] = 1.0;
    let mut dists = vec![p.clone()];
    for _ in 0..intervals {
        p = reset_index_sites(&channel.apply(&p), model.index_mask());
        dists.push(p.clone());
    }
    TimeSeries::from_distributions(model, boundary_times(model, intervals), &dists)
}

/// Evolves the full system+bath density matrix gate by gate, applying the
/// exact reset channels. Slow; intended as a reference for small models.
pub fn run_protocol_dense(model: &EpidemicModel, days: f64) -> Result<TimeSeries> {
    model.validate()?;
    let nq = model.n_qubits();
    if nq > DENSITY_QUBIT_LIMIT {
        return Err(Error::EngineRefusal {
            engine: "quantum-dense",
            qubits: nq,
            limit: DENSITY_QUBIT_LIMIT,
        });
    }
    let intervals = interval_count(model, days)?;
    let layout = model.layout();
    let terms = build_terms(model)?;
    let mut state = QuantumState::Density(DensityMatrix::basis(nq, model.index_mask()));
    let mut unused = trajectory_stream(0, 0);
    let record = |state: &QuantumState| -> Vec<f64> {
        (0..model.n_susceptible)
            .map(|j| ((1.0 + state.expect_z(layout.system(layout.susceptible_site(j)))) / 2.0).clamp(0.0, 1.0))
            .collect()
    };
    let mut survival = vec![record(&state)];
    for _ in 0..intervals {
        trotter_interval(&mut state, &terms, model.delta_t, model.trotter_dt)?;
        for site in 0..layout.n_sites() {
            state.reset_qubit(layout.bath(site), 0, &mut unused)?;
        }
        for i in 0..model.n_index {
            state.reset_qubit(layout.system(layout.index_site(i)), 1, &mut unused)?;
        }
        survival.push(record(&state));
    }
    Ok(TimeSeries {
        times: boundary_times(model, intervals),
        stderr: vec![vec![0.0; model.n_susceptible]; intervals + 1],
        survival,
        populations: model.populations.clone(),
    })
}

fn run_trajectories(model: &EpidemicModel, intervals: usize, shots: u64, seed: u64) -> Result<TimeSeries> {
    if shots == 0 {
        return Err(Error::Argument("shots must be positive".into()));
    }
    let nq = model.n_qubits();
    if nq > SHOTS_QUBIT_LIMIT {
        return Err(Error::EngineRefusal {
            engine: "quantum-shots",
            qubits: nq,
            limit: SHOTS_QUBIT_LIMIT,
        });
    }
    let layout = model.layout();
    let terms = build_terms(model)?;
    let steps = model.trotter_steps()?;
    let measured: Vec<usize> = (0..model.n_susceptible)
        .map(|j| layout.system(layout.susceptible_site(j)))
        .collect();

    // Post-interval states of basis inputs; every reset boundary leaves a
    // trajectory in a basis state, so this covers almost all intervals.
    let mut cache: HashMap<usize, StateVector> = HashMap::new();
    let mut evolve = |psi: &mut StateVector| -> Result<()> {
        if let Some((idx, phase)) = psi.as_basis_index() {
            if !cache.contains_key(&idx) {
                let mut fresh = StateVector::basis(nq, idx);
                trotter_interval_pure(&mut fresh, &terms, steps, model.trotter_dt)?;
                cache.insert(idx, fresh);
            }
            let evolved = &cache[&idx];
            for (dst, src) in psi.amplitudes_mut().iter_mut().zip(evolved.amplitudes()) {
                *dst = src * phase;
            }
            Ok(())
        } else {
            trotter_interval_pure(psi, &terms, steps, model.trotter_dt)
        }
    };

    let mut survival = vec![vec![1.0; model.n_susceptible]];
    let mut stderr = vec![vec![0.0; model.n_susceptible]];
    for k in 1..=intervals {
        let mut zeros = vec![0u64; model.n_susceptible];
        for t in 0..shots {
            let mut rng = trajectory_stream(seed, (k as u64 - 1) * shots + t);
            let mut psi = StateVector::basis(nq, model.index_mask());
            for _ in 0..k {
                evolve(&mut psi)?;
                for site in 0..layout.n_sites() {
                    psi.reset_qubit(layout.bath(site), 0, &mut rng)?;
                }
                for i in 0..model.n_index {
                    psi.reset_qubit(layout.system(layout.index_site(i)), 1, &mut rng)?;
                }
            }
            let shot = QuantumState::Pure(psi).sample_z_with(&measured, 1, &mut rng)?;
            let key = shot.counts.keys().next().expect("one shot recorded");
            for (j, b) in key.bytes().enumerate() {
                if b == b'0' {
                    zeros[j] += 1;
                }
            }
        }
        let p: Vec<f64> = zeros.iter().map(|&z| z as f64 / shots as f64).collect();
        stderr.push(p.iter().map(|q| (q * (1.0 - q) / shots as f64).sqrt()).collect());
        survival.push(p);
    }
    Ok(TimeSeries {
        times: boundary_times(model, intervals),
        survival,
        stderr,
        populations: model.populations.clone(),
    })
}

/// Fitted exponential decay of one site's survival curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub stderr: f64,
    pub reduced_chi2: f64,
    /// Set when the residuals are inconsistent with a single exponential.
    pub non_exponential: bool,
}

/// Reduced χ² above which a fit is flagged as non-exponential.
pub const NON_EXPONENTIAL_CHI2: f64 = 10.0;

/// Nominal uncertainty on `ln P` for exact (zero-stderr) data.
const LOG_SURVIVAL_FLOOR: f64 = 1e-3;

/// Default fit window in days, the secondary-attack-rate horizon.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.0, 7.0);

/// Fits `ln P_j(t) = −Γ t` through the origin over `t ∈ (lo, hi]`.
pub fn extract_infection_rate(series: &TimeSeries, site: usize, window: (f64, f64)) -> Result<RateFit> {
    if site >= series.n_sites() {
        return Err(Error::Argument(format!("site {site} out of range")));
    }
    let (lo, hi) = window;
    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut exact = true;
    for (k, &time) in series.times.iter().enumerate() {
        if time <= lo.max(0.0) + 1e-12 || time > hi + 1e-9 {
            continue;
        }
        let p = series.survival[k][site];
        if !(p > 0.0) {
            return Err(Error::Domain(format!("survival {p} at t = {time} has no logarithm")));
        }
        let e = series.stderr[k][site];
        if e > 0.0 {
            exact = false;
        }
        t.push(time);
        y.push(p.ln());
        sigma.push((e / p).max(LOG_SURVIVAL_FLOOR));
    }
    if t.len() < 2 {
        return Err(Error::Argument(format!(
            "rate fit needs at least two points after t = 0 inside {window:?}"
        )));
    }
    let n = t.len() as f64;
    let dof = (n - 1.0).max(1.0);
    if exact {
        let (slope, _, rss) = fit::fit_through_origin(&t, &y, &vec![1.0; t.len()])?;
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let reduced_chi2 = rss / dof / LOG_SURVIVAL_FLOOR.powi(2);
        Ok(RateFit {
            rate: -slope,
            stderr: (rss / dof / stt).sqrt(),
            reduced_chi2,
            non_exponential: reduced_chi2 > NON_EXPONENTIAL_CHI2,
        })
    } else {
        let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
        let (slope, se, chi2) = fit::fit_through_origin(&t, &y, &w)?;
        let reduced_chi2 = chi2 / dof;
        Ok(RateFit {
            rate: -slope,
            stderr: se * reduced_chi2.max(1.0).sqrt(),
            reduced_chi2,
            non_exponential: reduced_chi2 > NON_EXPONENTIAL_CHI2,
        })
    }
}
