//! Community layouts and the Gaussian contact model.
//!
//! A patient's activity is an isotropic 2-d Gaussian of width `σ` around
//! their home. A susceptible site's infection rate is the household rate
//! `Γ_SAR` scaled by the mean of that Gaussian over the site's area. Rates map
//! to couplings through `Γ = λ²Δt·sinc²((γ − α)Δt)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::sinc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    IndexPatient,
    Household,
    Community,
}

/// Footprint of a site in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Point([f64; 2]),
    /// `[x1, y1, x2, y2]` with `x1 ≤ x2`, `y1 ≤ y2`.
    Rect([f64; 4]),
}

impl Region {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            Region::Point([x, y]) => {
                if !(x.is_finite() && y.is_finite()) {
                    return Err("coordinates must be finite".into());
                }
            }
            Region::Rect([x1, y1, x2, y2]) => {
                if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
                    return Err("coordinates must be finite".into());
                }
                if x1 > x2 || y1 > y2 {
                    return Err(format!("rectangle [{x1}, {y1}, {x2}, {y2}] needs x1 ≤ x2 and y1 ≤ y2"));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Region::Point(p) => p,
            Region::Rect([x1, y1, x2, y2]) => [(x1 + x2) / 2.0, (y1 + y2) / 2.0],
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Point(_) => 0.0,
            Region::Rect([x1, y1, x2, y2]) => (x2 - x1) * (y2 - y1),
        }
    }

    /// Whether two rectangles share interior area. Points never overlap.
    pub fn overlaps(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Rect([a1, b1, a2, b2]), Region::Rect([c1, d1, c2, d2])) => {
                a1 < c2 && c1 < a2 && b1 < d2 && d1 < b2
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactProfile {
    /// Activity distance scale in meters.
    pub sigma: f64,
    /// Household infection rate per day.
    pub gamma_sar: f64,
}

impl ContactProfile {
    pub fn new(sigma: f64, gamma_sar: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!("sigma = {sigma} must be positive")));
        }
        if !(gamma_sar.is_finite() && gamma_sar > 0.0) {
            return Err(Error::Domain(format!("gamma_sar = {gamma_sar} must be positive")));
        }
        Ok(Self { sigma, gamma_sar })
    }
}

/// Mean of `exp(−(x − x0)²/2σ²)` over `[a, b]`; the point value when
/// `a = b`.
fn axis_average(a: f64, b: f64, x0: f64, sigma: f64) -> f64 {
    let width = b - a;
    let scale = FRAC_1_SQRT_2 / sigma;
    let (u, v) = ((a - x0) * scale, (b - x0) * scale);
    if width <= 0.0 || (v - u).abs() < 1e-9 {
        let m = (a + b) / 2.0 - x0;
        return (-m * m / (2.0 * sigma * sigma)).exp();
    }
    // erf(v) − erf(u), using erfc in the tails to avoid cancellation
    let diff = if u >= 0.0 {
        libm::erfc(u) - libm::erfc(v)
    } else if v <= 0.0 {
        libm::erfc(-v) - libm::erfc(-u)
    } else {
        libm::erf(v) - libm::erf(u)
    };
    sigma * (PI / 2.0).sqrt() * diff / width
}

/// Mean of the Gaussian kernel centred at `r0` over `region`, in `(0, 1]`.
pub fn gaussian_overlap(region: &Region, r0: [f64; 2], sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma = {sigma} must be positive")));
    }
    region.validate().map_err(Error::Domain)?;
    Ok(match *region {
        Region::Point([x, y]) => {
            let d2 = (x - r0[0]).powi(2) + (y - r0[1]).powi(2);
            (-d2 / (2.0 * sigma * sigma)).exp()
        }
        Region::Rect([x1, y1, x2, y2]) => axis_average(x1, x2, r0[0], sigma) * axis_average(y1, y2, r0[1], sigma),
    })
}

/// `Γ_j = Γ_SAR · overlap`.
pub fn site_infection_rate(profile: &ContactProfile, region: &Region, r0: [f64; 2]) -> Result<f64> {
    Ok(profile.gamma_sar * gaussian_overlap(region, r0, profile.sigma)?)
}

/// Perturbative rate `λ²Δt·sinc²((γ − α)Δt)`.
pub fn sinc_rate(gamma: f64, lambda: f64, alpha: f64, delta_t: f64) -> f64 {
    let s = sinc((gamma - alpha) * delta_t);
    lambda * lambda * delta_t * s * s
}

/// Solves `sinc_rate(γ) = rate` for `γ ∈ (0, α]` by bisection.
pub fn invert_sinc(rate: f64, lambda: f64, alpha: f64, delta_t: f64) -> Result<f64> {
    if !(alpha > 0.0 && delta_t > 0.0) {
        return Err(Error::Domain("alpha and delta_t must be positive".into()));
    }
    if alpha * delta_t > PI * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "alpha·delta_t = {} exceeds π; the rate is not monotone on (0, α]",
            alpha * delta_t
        )));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate {rate} must be positive")));
    }
    let peak = lambda * lambda * delta_t;
    if rate > peak * (1.0 + 1e-12) {
        return Err(Error::InfeasibleRate { rate, max: peak });
    }
    if rate >= peak {
        return Ok(alpha);
    }
    let floor = sinc_rate(0.0, lambda, alpha, delta_t);
    if rate <= floor {
        return Err(Error::Domain(format!(
            "rate {rate:.3e} is below the zero-coupling rate {floor:.3e}"
        )));
    }
    let (mut lo, mut hi) = (0.0, alpha);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sinc_rate(mid, lambda, alpha, delta_t) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * alpha {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupling whose rate is `ratio` times the resonant rate:
/// `sinc²((γ − α)Δt) = ratio`.
pub fn coupling_for_ratio(ratio: f64, alpha: f64, delta_t: f64) -> Result<f64> {
    invert_sinc(ratio / delta_t, 1.0, alpha, delta_t)
}

/// A susceptible site: household or community with its population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibleSite {
    pub id: usize,
    pub kind: SiteKind,
    pub region: Region,
    pub population: f64,
}

/// Index patient homes and the susceptible sites around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityMap {
    /// `(id, home position)` of every index patient.
    pub index_patients: Vec<(usize, [f64; 2])>,
    pub sites: Vec<SusceptibleSite>,
}

impl CommunityMap {
    pub fn populations(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.population).collect()
    }

    /// `Γ_ij` for every patient `i` and site `j`.
    pub fn rates(&self, profile: &ContactProfile) -> Result<Vec<Vec<f64>>> {
        self.index_patients
            .iter()
            .map(|(_, r0)| {
                self.sites
                    .iter()
                    .map(|s| site_infection_rate(profile, &s.region, *r0))
                    .collect()
            })
            .collect()
    }

    /// Couplings `γ_ij` from the overlap of each site with each patient's
    /// activity area. Each patient is inverted as a lone source with
    /// `α = π/Δt`, so the household of a patient sits at resonance. Overlaps
    /// that underflow give `γ = 0`.
    pub fn couplings(&self, sigma: f64, delta_t: f64) -> Result<Vec<Vec<f64>>> {
        let alpha = PI / delta_t;
        self.index_patients
            .iter()
            .map(|(_, r0)| {
                self.sites
                    .iter()
                    .map(|s| {
                        let ratio = gaussian_overlap(&s.region, *r0, sigma)?;
                        if ratio <= 0.0 {
                            Ok(0.0)
                        } else {
                            coupling_for_ratio(ratio.min(1.0), alpha, delta_t)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn point_overlap_examples() {
        assert_eq!(gaussian_overlap(&Region::Point([3.0, 4.0]), [3.0, 4.0], 10.0).unwrap(), 1.0);
        let far = gaussian_overlap(&Region::Point([3.0, 4.0]), [0.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(far, (-12.5f64).exp(), epsilon = 1e-18);
    }

    #[test]
    fn wide_kernel_is_flat() {
        let rect = Region::Rect([-400.0, 200.0, 600.0, 1000.0]);
        let v = gaussian_overlap(&rect, [0.0, 0.0], 1e9).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn overlap_matches_midpoint_quadrature() {
        let (x1, y1, x2, y2) = (100.0, 100.0, 200.0, 200.0);
        let sigma: f64 = 65.0;
        let n = 1000;
        let (hx, hy) = ((x2 - x1) / n as f64, (y2 - y1) / n as f64);
        let mut sum = 0.0;
        for i in 0..n {
            let x = x1 + (i as f64 + 0.5) * hx;
            for k in 0..n {
                let y = y1 + (k as f64 + 0.5) * hy;
                sum += (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            }
        }
        let quadrature = sum / (n * n) as f64;
        let closed = gaussian_overlap(&Region::Rect([x1, y1, x2, y2]), [0.0, 0.0], sigma).unwrap();
        assert_relative_eq!(closed, quadrature, max_relative = 1e-6);
    }

    #[test]
    fn degenerate_rectangle_is_point() {
        let rect = Region::Rect([10.0, 20.0, 10.0, 20.0]);
        let point = Region::Point([10.0, 20.0]);
        let a = gaussian_overlap(&rect, [1.0, -2.0], 30.0).unwrap();
        let b = gaussian_overlap(&point, [1.0, -2.0], 30.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn rate_examples() {
        let profile = ContactProfile::new(65.0, 0.0413).unwrap();
        let home = site_infection_rate(&profile, &Region::Point([5.0, 5.0]), [5.0, 5.0]).unwrap();
        assert_eq!(home, 0.0413);
        let far = site_infection_rate(&profile, &Region::Rect([5e3, 5e3, 6e3, 6e3]), [0.0, 0.0]).unwrap();
        assert!(far < 1e-100);
    }

    #[test]
    fn invert_at_peak_and_round_trip() {
        let (l, a) = (0.201, PI);
        assert_eq!(invert_sinc(l * l, l, a, 1.0).unwrap(), a);
        let rate = sinc_rate(2.0, l, a, 1.0);
        assert_abs_diff_eq!(invert_sinc(rate, l, a, 1.0).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn half_rate_matches_grid_scan() {
        let (l, a) = (0.201, PI);
        let target = 0.5 * l * l;
        let g = invert_sinc(target, l, a, 1.0).unwrap();
        let n = 1_000_000;
        let best = (1..=n)
            .map(|k| a * k as f64 / n as f64)
            .min_by(|x, y| {
                let fx = (sinc_rate(*x, l, a, 1.0) - target).abs();
                let fy = (sinc_rate(*y, l, a, 1.0) - target).abs();
                fx.total_cmp(&fy)
            })
            .unwrap();
        assert_abs_diff_eq!(g, best, epsilon = 2.0 * a / n as f64);
    }

    #[test]
    fn invert_errors() {
        assert!(matches!(invert_sinc(0.05, 0.2, PI, 1.0), Err(Error::InfeasibleRate { .. })));
        assert!(matches!(invert_sinc(0.0, 0.2, PI, 1.0), Err(Error::Domain(_))));
        assert!(matches!(invert_sinc(-1.0, 0.2, PI, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn chain_recovers_rate() {
        let profile = ContactProfile::new(55.0, 0.041289).unwrap();
        let lambda = 0.25;
        let region = Region::Rect([30.0, -20.0, 90.0, 40.0]);
        let rate = site_infection_rate(&profile, &region, [0.0, 0.0]).unwrap();
        let g = invert_sinc(rate, lambda, PI, 1.0).unwrap();
        assert_relative_eq!(sinc_rate(g, lambda, PI, 1.0), rate, max_relative = 1e-9);
    }

    #[test]
    fn household_couples_at_resonance() {
        let map = CommunityMap {
            index_patients: vec![(0, [0.0, 0.0])],
            sites: vec![
                SusceptibleSite {
                    id: 1,
                    kind: SiteKind::Household,
                    region: Region::Point([0.0, 0.0]),
                    population: 4.0,
                },
                SusceptibleSite {
                    id: 2,
                    kind: SiteKind::Community,
                    region: Region::Rect([50.0, 50.0, 100.0, 100.0]),
                    population: 50.0,
                },
            ],
        };
        let g = map.couplings(65.0, 1.0).unwrap();
        assert_eq!(g[0][0], PI);
        assert!(g[0][1] > 0.0 && g[0][1] < PI);
        let ratio = gaussian_overlap(&map.sites[1].region, [0.0, 0.0], 65.0).unwrap();
        let s = sinc(g[0][1] - PI);
        assert_relative_eq!(s * s, ratio, max_relative = 1e-9);
    }
}
