//! Energy identities, a-priori bounds and the per-step record.

use crate::domain::{AnnulusSpec, DistributionFunction, FieldState, RadialGrid};
use crate::potential::{ConfinementBound, ConstantsSnapshot};
use crate::vlasov::Moments;

/// Energy density `e` and radial energy flux `m` per radial node.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyProfiles {
    pub e: Vec<f64>,
    pub m: Vec<f64>,
}

/// `e = (E_r^2 + E_theta^2 + B^2)/2 + ∫ p0 f dp`, `m = ∫ p_r f dp + E_theta B`.
pub fn energy_densities(f: &DistributionFunction, fields: &FieldState) -> EnergyProfiles {
    let g = &f.grid;
    let np = g.np;
    let wp = g.p_weights();
    let p = g.p_nodes();
    let mut e = Vec::with_capacity(g.nr() + 1);
    let mut m = Vec::with_capacity(g.nr() + 1);
    for ir in 0..=g.nr() {
        let s = f.slab(ir);
        let (mut kin, mut flux) = (0.0, 0.0);
        for ipr in 0..np {
            for ipt in 0..np {
                let v = s[ipr * np + ipt];
                if v == 0.0 {
                    continue;
                }
                let w = wp[ipr] * wp[ipt] * v;
                kin += w * (1.0 + p[ipr] * p[ipr] + p[ipt] * p[ipt]).sqrt();
                flux += w * p[ipr];
            }
        }
        let (er, et, b) = (fields.er[ir], fields.etheta[ir], fields.b[ir]);
        e.push(0.5 * (er * er + et * et + b * b) + kin);
        m.push(flux + et * b);
    }
    EnergyProfiles { e, m }
}

/// `∫ r e dr` by the trapezoid rule.
pub fn total_energy(e: &[f64], grid: &RadialGrid) -> f64 {
    grid.integrate_with_r(e)
}

/// Second-order derivative on uniform nodes, one-sided at the ends.
pub fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            d[0] = (v[1] - v[0]) / h;
            d[1] = d[0];
        }
        return d;
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d
}

/// `max_r |(e_next - e_prev)/dt + (1/r) D_r(r m)|` with `m` averaged over
/// the two levels.
pub fn energy_identity_residual(prev: &EnergyProfiles, next: &EnergyProfiles, grid: &RadialGrid, dt: f64) -> f64 {
    let r = grid.nodes();
    let rm: Vec<f64> = (0..r.len())
        .map(|i| r[i] * 0.5 * (prev.m[i] + next.m[i]))
        .collect();
    let d = derivative(&rm, grid.dr);
    (0..r.len())
        .map(|i| ((next.e[i] - prev.e[i]) / dt + d[i] / r[i]).abs())
        .fold(0.0, f64::max)
}

/// `r2 E_theta^b B(r2) - r1 E_theta^b B(r1)`.
pub fn boundary_flux(grid: &RadialGrid, eb: (f64, f64), b: &[f64]) -> f64 {
    grid.r2 * eb.1 * b[b.len() - 1] - grid.r1 * eb.0 * b[0]
}

/// Time series of total energy and the accumulated wall flux.
#[derive(Clone, Debug, Default)]
pub struct EnergyHistory {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub flux: Vec<f64>,
    pub flux_accum: Vec<f64>,
}

impl EnergyHistory {
    pub fn push(&mut self, t: f64, energy: f64, flux: f64) {
        let accum = match (self.times.last(), self.flux.last(), self.flux_accum.last()) {
            (Some(&t0), Some(&f0), Some(&a0)) => a0 + 0.5 * (t - t0) * (f0 + flux),
            _ => 0.0,
        };
        self.times.push(t);
        self.energy.push(energy);
        self.flux.push(flux);
        self.flux_accum.push(accum);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `|E(t) - E(0) + ∫_0^t flux|` at entry `k`.
    pub fn gap(&self, k: usize) -> f64 {
        (self.energy[k] - self.energy[0] + self.flux_accum[k]).abs()
    }

    pub fn max_gap(&self) -> f64 {
        (0..self.len()).map(|k| self.gap(k)).fold(0.0, f64::max)
    }
}

/// Energy-balance gap at the latest entry not after `t`.
pub fn energy_balance_check(history: &EnergyHistory, t: f64) -> f64 {
    match history.times.iter().rposition(|&s| s <= t + 1e-12) {
        Some(k) => history.gap(k),
        None => 0.0,
    }
}

/// `psi(R) = (1/R) ∫_{r_m}^R y B(y) dy` by the trapezoid rule.
pub fn self_consistent_potential(b: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let r = grid.nodes();
    let h = grid.dr;
    let mut cum = vec![0.0; r.len()];
    for i in 1..r.len() {
        cum[i] = cum[i - 1] + 0.5 * h * (r[i - 1] * b[i - 1] + r[i] * b[i]);
    }
    let rm = 0.5 * (grid.r1 + grid.r2);
    let x = (rm - grid.r1) / h;
    let k = (x.floor() as usize).min(r.len() - 2);
    let s = rm - r[k];
    let yb_k = r[k] * b[k];
    let yb_m = yb_k + (r[k + 1] * b[k + 1] - yb_k) * s / h;
    let at_mid = cum[k] + 0.5 * s * (yb_k + yb_m);
    r.iter().zip(&cum).map(|(r, c)| (c - at_mid) / r).collect()
}

/// Inputs for the bound margins that do not change during a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub annulus: AnnulusSpec,
    pub f0_l1: f64,
    pub f0_sup: f64,
    pub lambda: f64,
    pub m0: f64,
    pub support_threshold: f64,
    /// An external confining potential is active.
    pub confined: bool,
}

/// Theoretical bound minus measured value for each estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Margins {
    pub er_field: f64,
    pub etheta_field: f64,
    pub b_field: f64,
    pub momentum_support: f64,
    pub rho_density: f64,
    pub current_density: f64,
    /// Measured distance minus `delta`; only under an external potential.
    pub confinement: Option<f64>,
    /// Measured distance minus the closed-form csc distance.
    pub arcsin: Option<f64>,
}

impl Margins {
    pub fn all(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("er_field", self.er_field),
            ("etheta_field", self.etheta_field),
            ("b_field", self.b_field),
            ("momentum_support", self.momentum_support),
            ("rho_density", self.rho_density),
            ("current_density", self.current_density),
        ];
        if let Some(c) = self.confinement {
            v.push(("confinement", c));
        }
        if let Some(a) = self.arcsin {
            v.push(("arcsin", a));
        }
        v
    }

    pub fn min(&self) -> f64 {
        self.all().iter().map(|x| x.1).fold(f64::INFINITY, f64::min)
    }

    pub fn violated(&self) -> Vec<&'static str> {
        self.all().into_iter().filter(|x| !(x.1 >= 0.0)).map(|x| x.0).collect()
    }
}

/// Measured quantities the margins compare against.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Measured {
    pub er_max: f64,
    pub etheta_max: f64,
    pub b_max: f64,
    pub momentum_radius: f64,
    pub rho_max: f64,
    pub j_max: f64,
    pub support: Option<(f64, f64)>,
    pub distance: f64,
}

pub fn measure(f: &DistributionFunction, fields: &FieldState, mom: &Moments, threshold: f64) -> Measured {
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let a = &f.grid.annulus;
    let support = f.radial_support(threshold);
    let distance = match support {
        Some((lo, hi)) => (lo - a.r1).min(a.r2 - hi),
        None => 0.5 * a.width(),
    };
    Measured {
        er_max: sup(&fields.er),
        etheta_max: sup(&fields.etheta),
        b_max: sup(&fields.b),
        momentum_radius: f.momentum_support_radius(threshold),
        rho_max: sup(&mom.rho),
        j_max: mom
            .j_r
            .iter()
            .zip(&mom.j_theta)
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b))),
        support,
        distance,
    }
}

/// Margins of every a-priori estimate at one snapshot.
///
/// The charge bound is `max(1, 1/r1) ||f0||_1 + |lambda|`, which reduces to
/// `||f0||_1 + lambda` for `r1 >= 1` and `lambda >= 0`.
pub fn bound_checks(
    measured: &Measured,
    constants: &ConstantsSnapshot,
    inputs: &BoundInputs,
    csc_bound: Option<&ConfinementBound>,
) -> Margins {
    let a = &inputs.annulus;
    let field = constants.field_bound();
    let mom = constants.momentum_bound(inputs.m0);
    let density = std::f64::consts::PI * inputs.f0_sup * mom * mom;
    Margins {
        er_field: (1.0f64).max(1.0 / a.r1) * inputs.f0_l1 + inputs.lambda.abs() - measured.er_max,
        etheta_field: field - measured.etheta_max,
        b_field: field - measured.b_max,
        momentum_support: mom - measured.momentum_radius,
        rho_density: density - measured.rho_max,
        current_density: density - measured.j_max,
        confinement: inputs.confined.then(|| measured.distance - a.delta),
        arcsin: csc_bound.map(|b| measured.distance - b.distance(a.r1)),
    }
}

/// One row of the diagnostics stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub total_charge: f64,
    pub charge_drift: f64,
    pub raw_drift: f64,
    pub fixer_factor: f64,
    pub total_energy: f64,
    pub boundary_flux_accum: f64,
    pub energy_gap: f64,
    pub energy_identity_residual: f64,
    pub ampere_residual: f64,
    pub measured: Measured,
    pub margins: Margins,
    pub leaks: usize,
    pub momentum_clips: usize,
    pub f_max: f64,
    pub f_min: f64,
    pub l_bar: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub k: f64,
}

/// Full-precision scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

impl DiagnosticsRecord {
    pub const HEADER: [&'static str; 36] = [
        "step",
        "t",
        "total_charge",
        "charge_drift",
        "raw_drift",
        "fixer_factor",
        "total_energy",
        "boundary_flux_accum",
        "energy_gap",
        "energy_identity_residual",
        "ampere_residual",
        "er_max",
        "etheta_max",
        "b_max",
        "M_t",
        "rho_max",
        "j_max",
        "r_support_lo",
        "r_support_hi",
        "confinement_distance",
        "margin_er_field",
        "margin_etheta_field",
        "margin_b_field",
        "margin_momentum_support",
        "margin_rho_density",
        "margin_current_density",
        "margin_confinement",
        "margin_arcsin",
        "leaks",
        "momentum_clips",
        "f_max",
        "f_min",
        "l_bar",
        "C",
        "C_tilde",
        "K",
    ];

    pub fn row(&self) -> Vec<String> {
        let m = &self.measured;
        let g = &self.margins;
        let (lo, hi) = match m.support {
            Some((a, b)) => (sci(a), sci(b)),
            None => (String::new(), String::new()),
        };
        vec![
            self.step.to_string(),
            sci(self.time),
            sci(self.total_charge),
            sci(self.charge_drift),
            sci(self.raw_drift),
            sci(self.fixer_factor),
            sci(self.total_energy),
            sci(self.boundary_flux_accum),
            sci(self.energy_gap),
            sci(self.energy_identity_residual),
            sci(self.ampere_residual),
            sci(m.er_max),
            sci(m.etheta_max),
            sci(m.b_max),
            sci(m.momentum_radius),
            sci(m.rho_max),
            sci(m.j_max),
            lo,
            hi,
            sci(m.distance),
            sci(g.er_field),
            sci(g.etheta_field),
            sci(g.b_field),
            sci(g.momentum_support),
            sci(g.rho_density),
            sci(g.current_density),
            g.confinement.map(sci).unwrap_or_default(),
            g.arcsin.map(sci).unwrap_or_default(),
            self.leaks.to_string(),
            self.momentum_clips.to_string(),
            sci(self.f_max),
            sci(self.f_min),
            sci(self.l_bar),
            sci(self.c),
            sci(self.c_tilde),
            sci(self.k),
        ]
    }

    pub fn healthy(&self) -> bool {
        self.margins.violated().is_empty() && self.leaks == 0
    }
}
