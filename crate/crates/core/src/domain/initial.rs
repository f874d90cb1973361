use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{PhaseSpaceGrid, RadialGrid};
use super::state::DistributionFunction;
use crate::error::{Error, Result};

/// Time-dependent prescribed value of `E_theta` on one wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryTrace {
    Constant {
        value: f64,
    },
    /// `offset + amplitude * sin(omega t + phase)`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise linear through `(times, values)`, held constant outside.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for BoundaryTrace {
    fn default() -> Self {
        BoundaryTrace::Constant { value: 0.0 }
    }
}

impl BoundaryTrace {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryTrace::Constant { value } => *value,
            BoundaryTrace::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => offset + amplitude * (omega * t + phase).sin(),
            BoundaryTrace::Tabulated { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let k = times.partition_point(|&x| x <= t) - 1;
                let s = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + s * (values[k + 1] - values[k])
            }
        }
    }

    /// `sup_t |E_theta^b(t)|`, exact for every variant.
    pub fn sup_norm(&self) -> f64 {
        match self {
            BoundaryTrace::Constant { value } => value.abs(),
            BoundaryTrace::Sinusoid {
                amplitude, offset, ..
            } => offset.abs() + amplitude.abs(),
            BoundaryTrace::Tabulated { values, .. } => {
                values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
        }
    }

    pub fn violations(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            BoundaryTrace::Constant { value } => {
                if !value.is_finite() {
                    out.push(format!("{label}: constant value must be finite"));
                }
            }
            BoundaryTrace::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => {
                if ![amplitude, omega, phase, offset].iter().all(|v| v.is_finite()) {
                    out.push(format!("{label}: sinusoid parameters must be finite"));
                }
            }
            BoundaryTrace::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    out.push(format!(
                        "{label}: tabulated trace needs equal, nonzero numbers of times and values"
                    ));
                } else if times.windows(2).any(|w| w[1] <= w[0]) {
                    out.push(format!("{label}: tabulated times must be strictly increasing"));
                }
                if !times.iter().chain(values).all(|v| v.is_finite()) {
                    out.push(format!("{label}: tabulated entries must be finite"));
                }
            }
        }
        out
    }
}

/// Traces of `E_theta` prescribed at `r1` and `r2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryTraces {
    #[serde(default)]
    pub inner: BoundaryTrace,
    #[serde(default)]
    pub outer: BoundaryTrace,
}

impl BoundaryTraces {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.inner.eval(t), self.outer.eval(t))
    }

    pub fn sup_norm(&self) -> f64 {
        self.inner.sup_norm().max(self.outer.sup_norm())
    }
}

/// Continuous radial profile for `E_theta(0, r)` or `B(0, r)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldProfile {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * sin(mode * pi * (r - r1) / (r2 - r1))`
    Sine {
        amplitude: f64,
        mode: u32,
    },
}

impl FieldProfile {
    pub fn eval(&self, r: f64, r1: f64, r2: f64) -> f64 {
        match self {
            FieldProfile::Zero => 0.0,
            FieldProfile::Constant { value } => *value,
            FieldProfile::Sine { amplitude, mode } => {
                amplitude * (*mode as f64 * PI * (r - r1) / (r2 - r1)).sin()
            }
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|&r| self.eval(r, grid.r1, grid.r2))
            .collect()
    }
}

/// Ring-shaped initial distribution: a tapered Gaussian in `r` times a
/// tapered isotropic Gaussian in `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct RingProfile {
    pub center_r: f64,
    pub width_r: f64,
    pub temperature: f64,
    pub amplitude: f64,
    pub m0: f64,
    /// Coefficients `a_k` of the radial modulation `1 + sum a_k cos(k pi s)`.
    pub modulation: Vec<f64>,
}

impl RingProfile {
    pub fn new(center_r: f64, width_r: f64, temperature: f64, amplitude: f64, m0: f64) -> Self {
        Self {
            center_r,
            width_r,
            temperature,
            amplitude,
            m0,
            modulation: Vec::new(),
        }
    }

    /// Adds a seeded radial modulation with `sum |a_k| = strength < 1`.
    pub fn with_seeded_modulation(mut self, seed: u64, modes: usize, strength: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let total: f64 = raw.iter().map(|a| a.abs()).sum();
        self.modulation = if total > 0.0 {
            raw.iter().map(|a| strength * a / total).collect()
        } else {
            Vec::new()
        };
        self
    }

    /// Half-width of the radial support, `3 * width_r`.
    pub fn radial_reach(&self) -> f64 {
        3.0 * self.width_r
    }

    pub fn radial_factor(&self, r: f64) -> f64 {
        let d = r - self.center_r;
        let s = d / self.radial_reach();
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let taper = (1.0 - s * s).powi(3);
        let modulation: f64 = 1.0
            + self
                .modulation
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * PI * s).cos())
                .sum::<f64>();
        (-d * d / (2.0 * self.width_r * self.width_r)).exp() * taper * modulation
    }

    pub fn momentum_factor(&self, p_abs: f64) -> f64 {
        let q = p_abs / self.m0;
        if q >= 1.0 {
            return 0.0;
        }
        (-p_abs * p_abs / (2.0 * self.temperature * self.temperature)).exp() * (1.0 - q * q).powi(3)
    }

    pub fn eval(&self, r: f64, pr: f64, pt: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * self.radial_factor(r) * self.momentum_factor(pr.hypot(pt))
    }

    /// Checks the support constraints against the grid.
    pub fn validate(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        let finite = [self.center_r, self.width_r, self.temperature, self.amplitude, self.m0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::SupportViolation("ring parameters must be finite".into()));
        }
        if self.width_r <= 0.0 || self.temperature <= 0.0 || self.m0 <= 0.0 {
            return Err(Error::SupportViolation(
                "width_r, temperature and M0 must be positive".into(),
            ));
        }
        if self.amplitude < 0.0 {
            return Err(Error::SupportViolation("amplitude must be nonnegative".into()));
        }
        if self.modulation.iter().map(|a| a.abs()).sum::<f64>() >= 1.0 {
            return Err(Error::SupportViolation(
                "radial modulation would make f negative".into(),
            ));
        }
        let (lo, hi) = grid.annulus.initial_support();
        let (a, b) = (self.center_r - self.radial_reach(), self.center_r + self.radial_reach());
        if a < lo || b > hi {
            return Err(Error::SupportViolation(format!(
                "radial taper [{a}, {b}] leaves the admissible interval [{lo}, {hi}]"
            )));
        }
        if self.m0 >= grid.p_max {
            return Err(Error::SupportViolation(format!(
                "momentum taper radius M0 = {} reaches the box edge p_max = {}",
                self.m0, grid.p_max
            )));
        }
        Ok(())
    }

    pub fn sample(&self, grid: Arc<PhaseSpaceGrid>) -> Result<DistributionFunction> {
        self.validate(&grid)?;
        Ok(DistributionFunction::from_fn(grid, 0.0, |r, pr, pt| self.eval(r, pr, pt)))
    }
}

/// Samples an unmodulated ring.
pub fn gaussian_ring_ic(
    grid: Arc<PhaseSpaceGrid>,
    center_r: f64,
    width_r: f64,
    temp: f64,
    amplitude: f64,
    m0: f64,
) -> Result<DistributionFunction> {
    RingProfile::new(center_r, width_r, temp, amplitude, m0).sample(grid)
}

/// Everything the evolution needs at `t = 0`.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub f0: DistributionFunction,
    pub etheta0: Vec<f64>,
    pub b0: Vec<f64>,
    pub boundary: BoundaryTraces,
    pub m0: f64,
    pub lambda: f64,
}

impl InitialData {
    pub fn new(
        f0: DistributionFunction,
        etheta0: Vec<f64>,
        b0: Vec<f64>,
        boundary: BoundaryTraces,
        m0: f64,
        lambda: f64,
    ) -> Result<Self> {
        let n = f0.grid.radial.len();
        if etheta0.len() != n || b0.len() != n {
            return Err(Error::Shape(format!(
                "initial field profiles need {n} samples, got {} and {}",
                etheta0.len(),
                b0.len()
            )));
        }
        if f0.min_value() < 0.0 {
            return Err(Error::SupportViolation("f0 has negative values".into()));
        }
        let support = f0.grid.annulus.initial_support();
        if let Some((lo, hi)) = f0.radial_support(0.0) {
            if lo < support.0 - 1e-12 || hi > support.1 + 1e-12 {
                return Err(Error::SupportViolation(format!(
                    "f0 is nonzero on [{lo}, {hi}], outside [{}, {}]",
                    support.0, support.1
                )));
            }
        }
        let mp = f0.momentum_support_radius(0.0);
        if mp > m0 {
            return Err(Error::SupportViolation(format!(
                "f0 is nonzero at |p| = {mp} > M0 = {m0}"
            )));
        }
        Ok(Self {
            f0,
            etheta0,
            b0,
            boundary,
            m0,
            lambda,
        })
    }

    /// Vacuum data with the given fields and traces.
    pub fn vacuum(
        grid: Arc<PhaseSpaceGrid>,
        etheta0: Vec<f64>,
        b0: Vec<f64>,
        boundary: BoundaryTraces,
        lambda: f64,
    ) -> Result<Self> {
        let f0 = DistributionFunction::zeros(grid, 0.0);
        Self::new(f0, etheta0, b0, boundary, 0.0, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid::{build_grid, AnnulusSpec};

    fn grid(nr: usize, np: usize) -> Arc<PhaseSpaceGrid> {
        build_grid(AnnulusSpec::new(1.0, 3.0, 0.5, 0.25).unwrap(), nr, np, 1.2).unwrap()
    }

    #[test]
    fn zero_amplitude_is_zero() {
        let f = gaussian_ring_ic(grid(32, 17), 2.0, 0.1, 0.3, 0.0, 1.0).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ring_is_nonnegative_and_supported() {
        let f = gaussian_ring_ic(grid(64, 33), 2.0, 0.1, 0.3, 1.0, 1.0).unwrap();
        assert!(f.min_value() >= 0.0);
        let (lo, hi) = f.radial_support(0.0).unwrap();
        assert!(lo >= 1.5 && hi <= 2.5, "{lo} {hi}");
        assert!(f.momentum_support_radius(0.0) < 1.0);
        assert_eq!(f.boundary_max(), 0.0);
    }

    #[test]
    fn support_violations_rejected() {
        assert!(gaussian_ring_ic(grid(32, 17), 1.6, 0.1, 0.3, 1.0, 1.0).is_err());
        assert!(gaussian_ring_ic(grid(32, 17), 2.0, 0.1, 0.3, 1.0, 1.2).is_err());
        assert!(gaussian_ring_ic(grid(32, 17), 2.0, -0.1, 0.3, 1.0, 1.0).is_err());
    }

    #[test]
    fn taper_is_continuously_differentiable_at_edges() {
        let ring = RingProfile::new(2.0, 0.1, 0.3, 1.0, 1.0);
        let edge = 2.3;
        let h = 1e-5;
        let inside = (ring.radial_factor(edge) - ring.radial_factor(edge - h)) / h;
        assert!(inside.abs() < 1e-6);
        let pedge = 1.0;
        let pin = (ring.momentum_factor(pedge) - ring.momentum_factor(pedge - h)) / h;
        assert!(pin.abs() < 1e-6);
    }

    #[test]
    fn seeded_modulation_is_reproducible_and_positive() {
        let a = RingProfile::new(2.0, 0.1, 0.3, 1.0, 1.0).with_seeded_modulation(7, 4, 0.3);
        let b = RingProfile::new(2.0, 0.1, 0.3, 1.0, 1.0).with_seeded_modulation(7, 4, 0.3);
        assert_eq!(a, b);
        let total: f64 = a.modulation.iter().map(|x| x.abs()).sum();
        assert!((total - 0.3).abs() < 1e-14);
        let f = a.sample(grid(64, 17)).unwrap();
        assert!(f.min_value() >= 0.0);
    }

    #[test]
    fn traces_evaluate() {
        let s = BoundaryTrace::Sinusoid {
            amplitude: 2.0,
            omega: 1.0,
            phase: 0.0,
            offset: 0.5,
        };
        assert!((s.eval(PI / 2.0) - 2.5).abs() < 1e-15);
        assert_eq!(s.sup_norm(), 2.5);
        let t = BoundaryTrace::Tabulated {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 2.0, -1.0],
        };
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.5), 0.5);
        assert_eq!(t.eval(5.0), -1.0);
        assert_eq!(t.sup_norm(), 2.0);
        let bad = BoundaryTrace::Tabulated {
            times: vec![0.0, 0.0],
            values: vec![1.0, 1.0],
        };
        assert!(!bad.violations("inner").is_empty());
    }

    #[test]
    fn initial_data_checks_support() {
        let g = grid(32, 17);
        let f = DistributionFunction::from_fn(g.clone(), 0.0, |r, _, _| if r < 1.2 { 1.0 } else { 0.0 });
        let n = g.radial.len();
        assert!(InitialData::new(f, vec![0.0; n], vec![0.0; n], BoundaryTraces::zero(), 1.0, 0.0).is_err());
    }
}
