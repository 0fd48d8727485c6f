//! Independent reference engines.
//!
//! * A second-order classical Markov chain over system configurations: the
//!   stochastic matrix `S = 1 + λ² S⁽²⁾(Δt)` followed by the index reset `R`.
//! * A fourth-order Runge–Kutta integrator of `dρ/dt = −i[H, ρ]` with the same
//!   reset channels.
//!
//! Configurations are integers whose bit `k` is system site `k`; index
//! patients occupy the low bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{iterate_channel, EpidemicModel, TimeSeries, DENSITY_QUBIT_LIMIT};

/// Largest number of system sites the dense Markov matrix accepts.
pub const MARKOV_SITE_LIMIT: usize = 12;

/// Default RK4 step in days.
pub const RK4_STEP: f64 = 1e-3;

/// Trace drift that aborts an RK4 run.
pub const RK4_TRACE_TOLERANCE: f64 = 1e-8;

/// Entries this far below zero are treated as rounding noise.
const NEGATIVE_DUST: f64 = 1e-12;

/// Dense column-stochastic matrix; `entry(to, from)` is a transition
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, to: usize, from: usize) -> f64 {
        self.data[to * self.dim + from]
    }

    pub fn entry_mut(&mut self, to: usize, from: usize) -> &mut f64 {
        &mut self.data[to * self.dim + from]
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dim, "distribution length must match the matrix");
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &StochasticMatrix) -> StochasticMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|c| (0..self.dim).map(|r| self.entry(r, c)).sum()).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &StochasticMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Ising energy `−Σ γ_ij z_i z_j` of a configuration, `z = +1` for bit 0.
/// `gamma` is `|I|×|S|`; susceptible site `j` is bit `|I| + j`.
pub fn config_energy(config: usize, gamma: &[Vec<f64>]) -> f64 {
    let n_index = gamma.len();
    let z = |site: usize| if (config >> site) & 1 == 0 { 1.0 } else { -1.0 };
    let mut e = 0.0;
    for (i, row) in gamma.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            e -= g * z(i) * z(n_index + j);
        }
    }
    e
}

/// `(1 − cos ωt)/ω²`, with the removable singularity at `ω = 0` filled by
/// `t²/2`.
pub fn transition_coefficient(omega: f64, t: f64) -> f64 {
    if omega.abs() < 1e-12 {
        return t * t / 2.0;
    }
    let s = (omega * t / 2.0).sin();
    2.0 * s * s / (omega * omega)
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn check_markov_size(model: &EpidemicModel) -> Result<()> {
    if model.n_sites() > MARKOV_SITE_LIMIT {
        return Err(Error::EngineRefusal {
            engine: "markov",
            qubits: model.n_qubits(),
            limit: 2 * MARKOV_SITE_LIMIT,
        });
    }
    Ok(())
}

/// Second-order stochastic matrix over one reset interval.
pub fn second_order_matrix(model: &EpidemicModel) -> Result<StochasticMatrix> {
    second_order_matrix_with(model, true)
}

/// As [`second_order_matrix`]; with `index_flips = false` the `B` terms that
/// flip index patients are dropped.
pub fn second_order_matrix_with(model: &EpidemicModel, index_flips: bool) -> Result<StochasticMatrix> {
    model.validate()?;
    check_markov_size(model)?;
    let n_sites = model.n_sites();
    let dim = 1usize << n_sites;
    let t = model.delta_t;
    let lambda2 = model.lambda * model.lambda;
    // Bath frequency seen by a flip: every bath bond touching the site.
    let shift_susceptible = -2.0 * model.n_index as f64 * model.alpha;
    let shift_index = -2.0 * model.n_susceptible as f64 * model.alpha;

    let energies: Vec<f64> = (0..dim).map(|c| config_energy(c, &model.gamma)).collect();
    let mut s = StochasticMatrix::zeros(dim);
    for n in 0..dim {
        let mut outflow = 0.0;
        for site in 0..n_sites {
            let is_index = site < model.n_index;
            if is_index && !index_flips {
                continue;
            }
            let m = n ^ (1 << site);
            let shift = if is_index { shift_index } else { shift_susceptible };
            let coeff = transition_coefficient(shift + energies[n] - energies[m], t);
            *s.entry_mut(m, n) = 2.0 * lambda2 * coeff;
            outflow += coeff;
        }
        let diag = 1.0 - 2.0 * lambda2 * outflow;
        if diag < -NEGATIVE_DUST {
            return Err(Error::PerturbativeRegime {
                lambda: model.lambda,
                entry: diag,
            });
        }
        *s.entry_mut(n, n) = diag.max(0.0);
    }
    Ok(s)
}

/// Reset of every index patient to `|1⟩` as a 0/1 stochastic matrix.
pub fn reset_matrix(model: &EpidemicModel) -> Result<StochasticMatrix> {
    check_markov_size(model)?;
    let dim = 1usize << model.n_sites();
    let mask = model.index_mask();
    let mut r = StochasticMatrix::zeros(dim);
    for c in 0..dim {
        *r.entry_mut(c | mask, c) = 1.0;
    }
    Ok(r)
}

/// `p(k) = (R·S)^k p0` for `k = 0..=steps`, reported as per-site survival.
pub fn markov_evolve(
    model: &EpidemicModel,
    s: &StochasticMatrix,
    r: &StochasticMatrix,
    p0: &[f64],
    steps: usize,
) -> Result<TimeSeries> {
    let dim = 1usize << model.n_sites();
    if s.dim() != dim || r.dim() != dim || p0.len() != dim {
        return Err(Error::Argument(format!("matrices and distribution must have dimension {dim}")));
    }
    let total: f64 = p0.iter().sum();
    if p0.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-10 {
        return Err(Error::Argument("initial distribution is not a probability vector".into()));
    }
    let mut p = p0.to_vec();
    let mut dists = vec![p.clone()];
    for _ in 0..steps {
        p = r.apply(&s.apply(&p));
        dists.push(p.clone());
    }
    let times = (0..=steps).map(|k| k as f64 * model.delta_t).collect();
    Ok(TimeSeries::from_distributions(model, times, &dists))
}

/// Markov chain run from the standard initial configuration.
pub fn markov_protocol(model: &EpidemicModel, days: f64) -> Result<TimeSeries> {
    let s = second_order_matrix(model)?;
    let r = reset_matrix(model)?;
    let mut p0 = vec![0.0; s.dim()];
    p0[model.index_mask()] = 1.0;
    let steps = whole_intervals(model, days)?;
    markov_evolve(model, &s, &r, &p0, steps)
}

fn whole_intervals(model: &EpidemicModel, days: f64) -> Result<usize> {
    let k = (days / model.delta_t).round();
    if !(days > 0.0) || (k * model.delta_t - days).abs() > 1e-9 * days.max(1.0) {
        return Err(Error::Config(format!(
            "run length {days} is not a positive multiple of the reset interval {}",
            model.delta_t
        )));
    }
    Ok(k as usize)
}

/// Closed-form decay of the one-patient, one-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDecay {
    /// `sin²((γ+α)Δt)/(γ+α)²`
    pub a0: f64,
    /// `sin²((γ−α)Δt)/(γ−α)²`
    pub a1: f64,
    /// Non-trivial eigenvalue `1 − λ²(A0 + A1)` of `R·S`.
    pub eigenvalue: f64,
    /// `ln(1/eigenvalue)/Δt`.
    pub rate: f64,
    /// `A0 = A1`, where the eigenvector matrix of `R·S` degenerates and a
    /// single exponential is not guaranteed.
    pub singular: bool,
}

pub fn pair_decay(gamma: f64, alpha: f64, lambda: f64, delta_t: f64) -> PairDecay {
    let coeff = |w: f64| {
        let x = w * delta_t;
        delta_t * delta_t * sinc(x) * sinc(x)
    };
    let a0 = coeff(gamma + alpha);
    let a1 = coeff(gamma - alpha);
    let eigenvalue = 1.0 - lambda * lambda * (a0 + a1);
    let scale = a0.abs().max(a1.abs()).max(f64::MIN_POSITIVE);
    PairDecay {
        a0,
        a1,
        eigenvalue,
        rate: (1.0 / eigenvalue).ln() / delta_t,
        singular: (a0 - a1).abs() <= 1e-9 * scale,
    }
}

/// Rate of a site driven by several index patients,
/// `λ²Δt·sinc²(Σ_i (γ_i − α_i)Δt)`.
pub fn multi_source_rate(gammas: &[f64], alphas: &[f64], lambda: f64, delta_t: f64) -> Result<f64> {
    if gammas.len() != alphas.len() || gammas.is_empty() {
        return Err(Error::Argument("one bath coupling per source is required".into()));
    }
    let detuning: f64 = gammas.iter().zip(alphas).map(|(g, a)| g - a).sum();
    let s = sinc(detuning * delta_t);
    Ok(lambda * lambda * delta_t * s * s)
}

/// Hamiltonian restricted to the states reachable from one system
/// configuration with the bath in `|0…0⟩`. Basis state `b` is bath
/// configuration `b` with system configuration `n ⊕ b`.
struct Sector {
    diag: Vec<f64>,
    n_sites: usize,
    lambda: f64,
}

impl Sector {
    fn new(model: &EpidemicModel, n: usize) -> Self {
        let dim = 1usize << model.n_sites();
        let bath_gamma: Vec<Vec<f64>> = vec![vec![model.alpha; model.n_susceptible]; model.n_index];
        let diag = (0..dim)
            .map(|b| config_energy(n ^ b, &model.gamma) + config_energy(b, &bath_gamma))
            .collect();
        Self {
            diag,
            n_sites: model.n_sites(),
            lambda: model.lambda,
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out = −i(Hρ − ρH)`; `rho` is row-major, stored as (re, im) pairs.
    fn liouvillian(&self, rho: &[(f64, f64)], out: &mut [(f64, f64)]) {
        let d = self.dim();
        for a in 0..d {
            for c in 0..d {
                let (mut re, mut im) = {
                    let (r, i) = rho[a * d + c];
                    let w = self.diag[a] - self.diag[c];
                    (w * r, w * i)
                };
                for k in 0..self.n_sites {
                    let bit = 1 << k;
                    let (r1, i1) = rho[(a ^ bit) * d + c];
                    let (r2, i2) = rho[a * d + (c ^ bit)];
                    re -= self.lambda * (r1 - r2);
                    im -= self.lambda * (i1 - i2);
                }
                // multiply the commutator by −i
                out[a * d + c] = (im, -re);
            }
        }
    }
}

fn rk4_interval(sector: &Sector, steps: usize, h: f64) -> Result<Vec<f64>> {
    let d = sector.dim();
    let mut rho = vec![(0.0, 0.0); d * d];
    rho[0] = (1.0, 0.0);
    let mut k1 = vec![(0.0, 0.0); d * d];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let axpy = |base: &[(f64, f64)], k: &[(f64, f64)], s: f64, out: &mut [(f64, f64)]| {
        for ((o, b), q) in out.iter_mut().zip(base).zip(k) {
            *o = (b.0 + s * q.0, b.1 + s * q.1);
        }
    };
    for _ in 0..steps {
        sector.liouvillian(&rho, &mut k1);
        axpy(&rho, &k1, h / 2.0, &mut tmp);
        sector.liouvillian(&tmp, &mut k2);
        axpy(&rho, &k2, h / 2.0, &mut tmp);
        sector.liouvillian(&tmp, &mut k3);
        axpy(&rho, &k3, h, &mut tmp);
        sector.liouvillian(&tmp, &mut k4);
        for idx in 0..d * d {
            let s = |k: &[(f64, f64)]| k[idx];
            let (a, b, c, e) = (s(&k1), s(&k2), s(&k3), s(&k4));
            rho[idx].0 += h / 6.0 * (a.0 + 2.0 * b.0 + 2.0 * c.0 + e.0);
            rho[idx].1 += h / 6.0 * (a.1 + 2.0 * b.1 + 2.0 * c.1 + e.1);
        }
    }
    let populations: Vec<f64> = (0..d).map(|b| rho[b * d + b].0).collect();
    let drift = (populations.iter().sum::<f64>() - 1.0).abs();
    if drift > RK4_TRACE_TOLERANCE {
        return Err(Error::StepSize { drift });
    }
    Ok(populations)
}

/// One-interval system transition matrix from RK4 integration with step `h`.
/// Index resets are not included.
pub fn rk4_channel(model: &EpidemicModel, h: f64) -> Result<StochasticMatrix> {
    model.validate()?;
    let nq = model.n_qubits();
    if nq > DENSITY_QUBIT_LIMIT {
        return Err(Error::EngineRefusal {
            engine: "rk4",
            qubits: nq,
            limit: DENSITY_QUBIT_LIMIT,
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Argument(format!("step {h} must be positive")));
    }
    let steps = (model.delta_t / h).round();
    if steps < 1.0 || (steps * h - model.delta_t).abs() > 1e-9 * model.delta_t.max(1.0) {
        return Err(Error::Config(format!(
            "step {h} does not divide the interval {}",
            model.delta_t
        )));
    }
    let dim = 1usize << model.n_sites();
    let mut t = StochasticMatrix::zeros(dim);
    for n in 0..dim {
        let sector = Sector::new(model, n);
        let populations = rk4_interval(&sector, steps as usize, h)?;
        for (b, p) in populations.into_iter().enumerate() {
            *t.entry_mut(n ^ b, n) += p;
        }
    }
    Ok(t)
}

/// RK4 integration of the reset protocol with the default step.
pub fn rk4_evolve(model: &EpidemicModel, days: f64) -> Result<TimeSeries> {
    rk4_evolve_with_step(model, days, RK4_STEP)
}

pub fn rk4_evolve_with_step(model: &EpidemicModel, days: f64, h: f64) -> Result<TimeSeries> {
    let intervals = whole_intervals(model, days)?;
    let channel = rk4_channel(model, h)?;
    Ok(iterate_channel(model, &channel, intervals))
}
