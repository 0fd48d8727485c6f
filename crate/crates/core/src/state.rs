//! Dense multi-qubit state kernel.
//!
//! Basis index bit `k` is qubit `k`. Bitstrings are written with the highest
//! qubit first, so `"01"` on two qubits is qubit 1 in `|0⟩` and qubit 0 in
//! `|1⟩` (basis index 1).
//!
//! Only the operations the epidemic Hamiltonian needs are provided: the two
//! Pauli-product rotations `exp(-i θ/2 ZZ)` and `exp(-i θ/2 XX)`, the reset
//! channel, Z expectations and Z-basis sampling.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random source used for measurement-based resets and shot sampling.
pub type RandomStream = ChaCha8Rng;

/// Independent stream for trajectory `trajectory` under `master_seed`.
///
/// Streams are keyed by position rather than by consumption order, so a batch
/// gives the same result however it is scheduled.
pub fn trajectory_stream(master_seed: u64, trajectory: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory);
    rng
}

/// Fixed qubit layout of a system/bath model.
///
/// System site `k` lives on qubit `k`, its bath partner on qubit `k + n_sites`.
/// Index patients occupy sites `0..n_index`, susceptible sites follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitLayout {
    pub n_index: usize,
    pub n_susceptible: usize,
}

impl QubitLayout {
    pub fn new(n_index: usize, n_susceptible: usize) -> Self {
        Self {
            n_index,
            n_susceptible,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_index + self.n_susceptible
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites()
    }

    pub fn system(&self, site: usize) -> usize {
        site
    }

    pub fn bath(&self, site: usize) -> usize {
        site + self.n_sites()
    }

    /// Site number of index patient `i`.
    pub fn index_site(&self, i: usize) -> usize {
        i
    }

    /// Site number of susceptible site `j` (0-based among susceptible sites).
    pub fn susceptible_site(&self, j: usize) -> usize {
        self.n_index + j
    }
}

/// Which representation a [`QuantumState`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Pure,
    Density,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Row-major `2^n × 2^n` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Density(DensityMatrix),
}

/// Z-basis measurement record. Keys list the sampled qubits in request order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    /// Fraction of shots in which `position` (index into the requested qubit
    /// list) read `0`.
    pub fn zero_fraction(&self, position: usize) -> f64 {
        let zeros: u64 = self
            .counts
            .iter()
            .filter(|(k, _)| k.as_bytes()[position] == b'0')
            .map(|(_, c)| *c)
            .sum();
        zeros as f64 / self.shots as f64
    }
}

fn parse_bits(n_qubits: usize, bits: &str) -> Result<usize> {
    if bits.len() != n_qubits {
        return Err(Error::Config(format!(
            "bitstring has length {} but the register has {} qubits",
            bits.len(),
            n_qubits
        )));
    }
    let mut index = 0usize;
    for (pos, ch) in bits.chars().enumerate() {
        let qubit = n_qubits - 1 - pos;
        match ch {
            '0' => {}
            '1' => index |= 1 << qubit,
            other => {
                return Err(Error::Config(format!(
                    "bitstring contains `{other}`; only 0 and 1 are allowed"
                )))
            }
        }
    }
    Ok(index)
}

/// Computational basis state `|bits⟩`.
pub fn init_basis_state(n_qubits: usize, bits: &str, repr: Representation) -> Result<QuantumState> {
    let index = parse_bits(n_qubits, bits)?;
    Ok(match repr {
        Representation::Pure => QuantumState::Pure(StateVector::basis(n_qubits, index)),
        Representation::Density => QuantumState::Density(DensityMatrix::basis(n_qubits, index)),
    })
}

fn check_pair(n_qubits: usize, a: usize, b: usize) -> Result<()> {
    if a == b {
        return Err(Error::InvalidGate(format!(
            "two-qubit rotation needs distinct qubits, got {a} twice"
        )));
    }
    check_qubit(n_qubits, a)?;
    check_qubit(n_qubits, b)
}

fn check_qubit(n_qubits: usize, q: usize) -> Result<()> {
    if q >= n_qubits {
        return Err(Error::Argument(format!(
            "qubit {q} out of range for a {n_qubits}-qubit register"
        )));
    }
    Ok(())
}

#[inline]
fn zz_sign(x: usize, a: usize, b: usize) -> bool {
    // true when the two bits agree (ZZ eigenvalue +1)
    ((x >> a) ^ (x >> b)) & 1 == 0
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Wraps raw amplitudes. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude vector length {} is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Returns the basis index if the state is a single basis vector up to a
    /// global phase.
    pub fn as_basis_index(&self) -> Option<(usize, Complex64)> {
        let mut found = None;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 1e-24 {
                if found.is_some() || (p - 1.0).abs() > 1e-12 {
                    return None;
                }
                found = Some((i, *a));
            }
        }
        found
    }

    pub fn apply_zz_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        check_pair(self.n_qubits, a, b)?;
        let same = Complex64::from_polar(1.0, -theta / 2.0);
        let diff = same.conj();
        for (x, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if zz_sign(x, a, b) { same } else { diff };
        }
        Ok(())
    }

    pub fn apply_xx_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        check_pair(self.n_qubits, a, b)?;
        let c = (theta / 2.0).cos();
        let ms = Complex64::new(0.0, -(theta / 2.0).sin());
        let mask = (1 << a) | (1 << b);
        for x in 0..self.amps.len() {
            if (x >> a) & 1 == 0 {
                let y = x ^ mask;
                let (u, v) = (self.amps[x], self.amps[y]);
                self.amps[x] = u * c + v * ms;
                self.amps[y] = u * ms + v * c;
            }
        }
        Ok(())
    }

    pub fn probability_one(&self, q: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(x, _)| (x >> q) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Measure `q` in the Z basis, collapse, then flip to `target` if needed.
    /// Returns the raw measurement outcome.
    pub fn reset_qubit<R: Rng + ?Sized>(&mut self, q: usize, target: u8, rng: &mut R) -> Result<u8> {
        check_qubit(self.n_qubits, q)?;
        let p1 = self.probability_one(q).clamp(0.0, 1.0);
        let outcome: u8 = if rng.gen::<f64>() < p1 { 1 } else { 0 };
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        for (x, amp) in self.amps.iter_mut().enumerate() {
            if ((x >> q) & 1) as u8 == outcome {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        if outcome != target {
            let bit = 1 << q;
            for x in 0..self.amps.len() {
                if x & bit == 0 {
                    self.amps.swap(x, x | bit);
                }
            }
        }
        Ok(outcome)
    }

    pub fn expect_z(&self, q: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(x, a)| if (x >> q) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl DensityMatrix {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        data[index * dim + index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, dim, data }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for x in 0..dim {
            for y in 0..dim {
                data.push(psi.amps[x] * psi.amps[y].conj());
            }
        }
        Self {
            n_qubits: psi.n_qubits,
            dim,
            data,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|x| self.data[x * self.dim + x]).sum()
    }

    /// Largest `|ρ_xy − conj(ρ_yx)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.dim {
            for y in x..self.dim {
                let d = (self.get(x, y) - self.get(y, x).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|x| self.data[x * self.dim + x].re).collect()
    }

    pub fn apply_zz_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        check_pair(self.n_qubits, a, b)?;
        // ph(x) conj(ph(y)) is 1 when the signs agree and e^{∓iθ} otherwise.
        let up = Complex64::from_polar(1.0, -theta);
        let down = up.conj();
        let dim = self.dim;
        for x in 0..dim {
            let sx = zz_sign(x, a, b);
            let row = &mut self.data[x * dim..(x + 1) * dim];
            for (y, v) in row.iter_mut().enumerate() {
                let sy = zz_sign(y, a, b);
                if sx != sy {
                    *v *= if sx { up } else { down };
                }
            }
        }
        Ok(())
    }

    pub fn apply_xx_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        check_pair(self.n_qubits, a, b)?;
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        let ms = Complex64::new(0.0, -s);
        let ps = Complex64::new(0.0, s);
        let mask = (1 << a) | (1 << b);
        let dim = self.dim;
        // ρ ← U ρ
        for x in 0..dim {
            if (x >> a) & 1 == 0 {
                let x2 = x ^ mask;
                for y in 0..dim {
                    let (u, v) = (self.data[x * dim + y], self.data[x2 * dim + y]);
                    self.data[x * dim + y] = u * c + v * ms;
                    self.data[x2 * dim + y] = u * ms + v * c;
                }
            }
        }
        // ρ ← ρ U†
        for x in 0..dim {
            let row = &mut self.data[x * dim..(x + 1) * dim];
            for y in 0..dim {
                if (y >> a) & 1 == 0 {
                    let y2 = y ^ mask;
                    let (u, v) = (row[y], row[y2]);
                    row[y] = u * c + v * ps;
                    row[y2] = u * ps + v * c;
                }
            }
        }
        Ok(())
    }

    /// Exact reset channel `ρ → |t⟩⟨t|_q ⊗ Tr_q ρ`.
    pub fn reset_qubit(&mut self, q: usize, target: u8) -> Result<()> {
        check_qubit(self.n_qubits, q)?;
        let bit = 1usize << q;
        let want = if target == 1 { bit } else { 0 };
        let dim = self.dim;
        for x in 0..dim {
            if x & bit != want {
                continue;
            }
            for y in 0..dim {
                if y & bit != want {
                    continue;
                }
                let moved = self.data[(x ^ bit) * dim + (y ^ bit)];
                self.data[x * dim + y] += moved;
            }
        }
        for x in 0..dim {
            for y in 0..dim {
                if x & bit != want || y & bit != want {
                    self.data[x * dim + y] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(())
    }

    pub fn expect_z(&self, q: usize) -> f64 {
        (0..self.dim)
            .map(|x| {
                let p = self.data[x * self.dim + x].re;
                if (x >> q) & 1 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.n_qubits,
            QuantumState::Density(d) => d.n_qubits,
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            QuantumState::Pure(_) => Representation::Pure,
            QuantumState::Density(_) => Representation::Density,
        }
    }

    pub fn apply_zz_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.apply_zz_rotation(a, b, theta),
            QuantumState::Density(d) => d.apply_zz_rotation(a, b, theta),
        }
    }

    pub fn apply_xx_rotation(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.apply_xx_rotation(a, b, theta),
            QuantumState::Density(d) => d.apply_xx_rotation(a, b, theta),
        }
    }

    /// Reset `q` to `target`. The density representation applies the exact
    /// channel and ignores `rng`; the pure representation measures with it.
    pub fn reset_qubit<R: Rng + ?Sized>(&mut self, q: usize, target: u8, rng: &mut R) -> Result<()> {
        if target > 1 {
            return Err(Error::Argument(format!("reset target must be 0 or 1, got {target}")));
        }
        match self {
            QuantumState::Pure(s) => s.reset_qubit(q, target, rng).map(|_| ()),
            QuantumState::Density(d) => d.reset_qubit(q, target),
        }
    }

    pub fn expect_z(&self, q: usize) -> f64 {
        match self {
            QuantumState::Pure(s) => s.expect_z(q),
            QuantumState::Density(d) => d.expect_z(q),
        }
    }

    /// Born probabilities of the full computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(s) => s.probabilities(),
            QuantumState::Density(d) => d.diagonal().into_iter().map(|p| p.max(0.0)).collect(),
        }
    }

    /// Norm (pure) or real trace (density).
    pub fn total_probability(&self) -> f64 {
        match self {
            QuantumState::Pure(s) => s.norm_sqr(),
            QuantumState::Density(d) => d.trace().re,
        }
    }

    pub fn sample_z(&self, qubits: &[usize], shots: u64, seed: u64) -> Result<ShotResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut result = self.sample_z_with(qubits, shots, &mut rng)?;
        result.seed = seed;
        Ok(result)
    }

    /// Like [`QuantumState::sample_z`] but draws from a caller-owned stream.
    /// The returned `seed` field is 0.
    pub fn sample_z_with<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        shots: u64,
        rng: &mut R,
    ) -> Result<ShotResult> {
        if shots == 0 {
            return Err(Error::Argument("shots must be positive".into()));
        }
        for &q in qubits {
            check_qubit(self.n_qubits(), q)?;
        }
        let k = qubits.len();
        let mut marginal = vec![0.0f64; 1 << k];
        for (x, p) in self.probabilities().into_iter().enumerate() {
            let mut key = 0usize;
            for (pos, &q) in qubits.iter().enumerate() {
                key |= ((x >> q) & 1) << pos;
            }
            marginal[key] += p;
        }
        let mut cumulative = Vec::with_capacity(marginal.len());
        let mut acc = 0.0;
        for p in &marginal {
            acc += p;
            cumulative.push(acc);
        }
        let total = acc;
        let mut tallies = vec![0u64; marginal.len()];
        for _ in 0..shots {
            let u = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(marginal.len() - 1);
            tallies[idx] += 1;
        }
        let counts = tallies
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(key, c)| {
                let s: String = (0..k)
                    .map(|pos| if (key >> pos) & 1 == 1 { '1' } else { '0' })
                    .collect();
                (s, c)
            })
            .collect();
        Ok(ShotResult {
            counts,
            shots,
            seed: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    // Basic gates used only as decomposition oracles.
    fn cnot(s: &mut StateVector, control: usize, target: usize) {
        for x in 0..s.amps.len() {
            if (x >> control) & 1 == 1 && (x >> target) & 1 == 0 {
                s.amps.swap(x, x | (1 << target));
            }
        }
    }

    fn rz(s: &mut StateVector, q: usize, theta: f64) {
        for (x, a) in s.amps.iter_mut().enumerate() {
            let sign = if (x >> q) & 1 == 0 { -1.0 } else { 1.0 };
            *a *= Complex64::from_polar(1.0, sign * theta / 2.0);
        }
    }

    fn hadamard(s: &mut StateVector, q: usize) {
        for x in 0..s.amps.len() {
            if (x >> q) & 1 == 0 {
                let y = x | (1 << q);
                let (u, v) = (s.amps[x], s.amps[y]);
                s.amps[x] = (u + v) * FRAC_1_SQRT_2;
                s.amps[y] = (u - v) * FRAC_1_SQRT_2;
            }
        }
    }

    fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
        a.amps
            .iter()
            .zip(&b.amps)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm_sqr()
    }

    #[test]
    fn basis_states() {
        let s = init_basis_state(1, "0", Representation::Pure).unwrap();
        assert_eq!(s.probabilities(), vec![1.0, 0.0]);
        let s = init_basis_state(2, "01", Representation::Pure).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 1.0, 0.0, 0.0]);

        // 1 index + 4 susceptible, bath all zero: only qubit 0 is set.
        let s = init_basis_state(10, "0000000001", Representation::Density).unwrap();
        assert_abs_diff_eq!(s.total_probability(), 1.0, epsilon = 1e-15);
        assert_eq!(s.expect_z(0), -1.0);
        for q in 1..5 {
            assert_eq!(s.expect_z(q), 1.0);
        }
    }

    #[test]
    fn basis_state_length_mismatch() {
        assert!(matches!(
            init_basis_state(3, "01", Representation::Pure),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zz_rotation_examples() {
        let mut s = random_state(3, 1);
        let before = s.clone();
        s.apply_zz_rotation(0, 2, 0.0).unwrap();
        assert_eq!(s, before);

        let theta = 0.731;
        let mut s = StateVector::basis(2, 0);
        s.apply_zz_rotation(0, 1, theta).unwrap();
        let expected = Complex64::from_polar(1.0, -theta / 2.0);
        assert_abs_diff_eq!((s.amps[0] - expected).norm(), 0.0, epsilon = 1e-15);

        assert!(matches!(s.apply_zz_rotation(1, 1, theta), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn zz_matches_cnot_rz_cnot() {
        for seed in 0..5 {
            let theta = 0.3 + seed as f64;
            let mut a = random_state(4, seed);
            let mut b = a.clone();
            a.apply_zz_rotation(1, 3, theta).unwrap();
            cnot(&mut b, 1, 3);
            rz(&mut b, 3, theta);
            cnot(&mut b, 1, 3);
            assert_abs_diff_eq!(fidelity(&a, &b), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn xx_rotation_examples() {
        let mut s = random_state(2, 9);
        let before = s.clone();
        s.apply_xx_rotation(0, 1, 0.0).unwrap();
        assert_eq!(s, before);

        let mut s = StateVector::basis(2, 0);
        s.apply_xx_rotation(0, 1, PI).unwrap();
        assert_abs_diff_eq!(s.amps[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((s.amps[3] - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);

        assert!(matches!(s.apply_xx_rotation(0, 0, 1.0), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn xx_matches_hadamard_conjugated_zz() {
        for seed in 0..5 {
            let theta = -1.1 + 0.7 * seed as f64;
            let mut a = random_state(4, 100 + seed);
            let mut b = a.clone();
            a.apply_xx_rotation(0, 2, theta).unwrap();
            hadamard(&mut b, 0);
            hadamard(&mut b, 2);
            cnot(&mut b, 0, 2);
            rz(&mut b, 2, theta);
            cnot(&mut b, 0, 2);
            hadamard(&mut b, 0);
            hadamard(&mut b, 2);
            assert_abs_diff_eq!(fidelity(&a, &b), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_rotations_track_pure_rotations() {
        let psi = random_state(3, 77);
        let mut pure = QuantumState::Pure(psi.clone());
        let mut dens = QuantumState::Density(DensityMatrix::from_pure(&psi));
        for (k, theta) in [0.4, -1.3, 2.2, 0.9].iter().enumerate() {
            pure.apply_xx_rotation(k % 3, (k + 1) % 3, *theta).unwrap();
            pure.apply_zz_rotation((k + 2) % 3, k % 3, theta * 0.5).unwrap();
            dens.apply_xx_rotation(k % 3, (k + 1) % 3, *theta).unwrap();
            dens.apply_zz_rotation((k + 2) % 3, k % 3, theta * 0.5).unwrap();
        }
        let (QuantumState::Pure(p), QuantumState::Density(d)) = (&pure, &dens) else {
            unreachable!()
        };
        let reference = DensityMatrix::from_pure(p);
        for (x, y) in reference.data.iter().zip(&d.data) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reset_examples() {
        let mut rng = trajectory_stream(5, 0);
        let mut s = init_basis_state(1, "1", Representation::Pure).unwrap();
        s.reset_qubit(0, 1, &mut rng).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 1.0]);

        for repr in [Representation::Pure, Representation::Density] {
            let plus = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
            let mut s = match repr {
                Representation::Pure => QuantumState::Pure(plus),
                Representation::Density => QuantumState::Density(DensityMatrix::from_pure(&plus)),
            };
            s.reset_qubit(0, 1, &mut rng).unwrap();
            let p = s.probabilities();
            assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn reset_bell_state() {
        let bell = StateVector::from_amplitudes(vec![
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();

        let mut d = DensityMatrix::from_pure(&bell);
        d.reset_qubit(0, 0).unwrap();
        // |0⟩⟨0| on qubit 0 tensored with I/2 on qubit 1: indices 0 and 2.
        for x in 0..4 {
            for y in 0..4 {
                let expected = if x == y && (x == 0 || x == 2) { 0.5 } else { 0.0 };
                assert_abs_diff_eq!((d.get(x, y) - c(expected, 0.0)).norm(), 0.0, epsilon = 1e-15);
            }
        }

        let mut tally = [0usize; 4];
        for t in 0..2000 {
            let mut rng = trajectory_stream(11, t);
            let mut s = bell.clone();
            s.reset_qubit(0, 0, &mut rng).unwrap();
            let (idx, _) = s.as_basis_index().unwrap();
            tally[idx] += 1;
        }
        assert_eq!(tally[1] + tally[3], 0);
        assert!((tally[0] as f64 / 2000.0 - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt());
    }

    #[test]
    fn expectation_examples() {
        let zero = init_basis_state(1, "0", Representation::Pure).unwrap();
        let one = init_basis_state(1, "1", Representation::Density).unwrap();
        assert_eq!(zero.expect_z(0), 1.0);
        assert_eq!(one.expect_z(0), -1.0);
        let plus = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        assert_abs_diff_eq!(plus.expect_z(0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_examples() {
        let zero = init_basis_state(1, "0", Representation::Pure).unwrap();
        let r = zero.sample_z(&[0], 4096, 3).unwrap();
        assert_eq!(r.counts.get("0"), Some(&4096));

        let plus = QuantumState::Pure(
            StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap(),
        );
        let r = plus.sample_z(&[0], 4096, 42).unwrap();
        assert_eq!(r.counts.values().sum::<u64>(), 4096);
        assert!((r.zero_fraction(0) - 0.5).abs() < 0.03);
        assert_eq!(r, plus.sample_z(&[0], 4096, 42).unwrap());

        assert!(matches!(plus.sample_z(&[0], 0, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn commuting_zz_terms_in_any_order() {
        let psi = random_state(5, 21);
        let terms = [(0, 2, 0.3), (0, 3, -1.2), (1, 4, 2.5), (0, 4, 0.8)];
        let mut forward = psi.clone();
        for &(a, b, t) in &terms {
            forward.apply_zz_rotation(a, b, t).unwrap();
        }
        let mut backward = psi;
        for &(a, b, t) in terms.iter().rev() {
            backward.apply_zz_rotation(a, b, t).unwrap();
        }
        for (x, y) in forward.amps.iter().zip(&backward.amps) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }
}
