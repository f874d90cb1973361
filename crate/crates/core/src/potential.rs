//! External confinement potential, the moving bar and the theory constants.
//!
//! The reference profile `psi_base` diverges at the margins. The field the
//! particles feel is the truncated `psi_ext(t, r)`, equal to `psi_base` below
//! the moving bar `L_bar(t)` and flattened to `L_bar(t) + 1` above it, with the
//! cubic Hermite blend `h(u) = u + u^2 - u^3` in between.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{total_charge, AnnulusSpec, DistributionFunction, InitialData};
use crate::error::{Error, Result};

/// Distance from an endpoint below which `psi_base` is reported as `+inf`.
pub const ENDPOINT_GUARD: f64 = 1e-14;

/// Monotone cubic (Fritsch-Carlson) interpolant of tabulated `psi_base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedProfile {
    r: Vec<f64>,
    psi: Vec<f64>,
    slopes: Vec<f64>,
    pub divergence_floor: f64,
}

impl TabulatedProfile {
    pub fn new(r: Vec<f64>, psi: Vec<f64>, divergence_floor: f64) -> Result<Self> {
        if r.len() < 3 || r.len() != psi.len() {
            return Err(Error::InvalidPotential(
                "table needs at least three (r, psi) pairs of equal length".into(),
            ));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential("table radii must be strictly increasing".into()));
        }
        if !r.iter().chain(&psi).all(|v| v.is_finite()) {
            return Err(Error::InvalidPotential("table entries must be finite".into()));
        }
        let n = r.len();
        if psi[0].abs() < divergence_floor || psi[n - 1].abs() < divergence_floor {
            return Err(Error::InvalidPotential(format!(
                "end values {} and {} must reach the divergence floor {divergence_floor}",
                psi[0],
                psi[n - 1]
            )));
        }
        let slopes = pchip_slopes(&r, &psi);
        Ok(Self {
            r,
            psi,
            slopes,
            divergence_floor,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r[0], self.r[self.r.len() - 1])
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.psi
    }

    /// Interpolated value; `None` outside the table.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (a, b) = self.range();
        if x < a || x > b {
            return None;
        }
        let k = (self.r.partition_point(|&v| v <= x).max(1) - 1).min(self.r.len() - 2);
        let h = self.r[k + 1] - self.r[k];
        let s = (x - self.r[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(
            h00 * self.psi[k]
                + h10 * h * self.slopes[k]
                + h01 * self.psi[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `psi_base(r) = csc(pi (r - r1) / (r2 - r1)) - 1`
    ExplicitCsc,
    /// Sampled profile; `+inf` outside the table.
    Tabulated(TabulatedProfile),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub annulus: AnnulusSpec,
}

impl PotentialSpec {
    pub fn explicit_csc(annulus: AnnulusSpec) -> Self {
        Self {
            kind: PotentialKind::ExplicitCsc,
            annulus,
        }
    }

    /// The table must lie in `[r1 + delta, r2 - delta]` and cover the
    /// initial support interval.
    pub fn tabulated(annulus: AnnulusSpec, table: TabulatedProfile) -> Result<Self> {
        let (a, b) = table.range();
        let (lo, hi) = annulus.initial_support();
        let tol = 1e-12 * annulus.width();
        if a < annulus.r1 + annulus.delta - tol || b > annulus.r2 - annulus.delta + tol {
            return Err(Error::InvalidPotential(format!(
                "table range [{a}, {b}] must lie within [r1 + delta, r2 - delta] = [{}, {}]",
                annulus.r1 + annulus.delta,
                annulus.r2 - annulus.delta
            )));
        }
        if a > lo || b < hi {
            return Err(Error::InvalidPotential(format!(
                "table range [{a}, {b}] must cover the initial support [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Tabulated(table),
            annulus,
        })
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.kind, PotentialKind::ExplicitCsc)
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        let AnnulusSpec { r1, r2, .. } = self.annulus;
        if r > r1 && r < r2 {
            Ok(())
        } else {
            Err(Error::Domain { r, r1, r2 })
        }
    }

    /// `max |psi_base|` over the initial support interval.
    pub fn initial_support_max(&self) -> f64 {
        let (lo, hi) = self.annulus.initial_support();
        match &self.kind {
            PotentialKind::ExplicitCsc => {
                let a = psi_base_unchecked(&self.annulus, lo).abs();
                let b = psi_base_unchecked(&self.annulus, hi).abs();
                a.max(b)
            }
            PotentialKind::Tabulated(t) => {
                let n = 4000;
                let mut m = 0.0_f64;
                for i in 0..=n {
                    let x = lo + (hi - lo) * i as f64 / n as f64;
                    m = m.max(t.eval(x).unwrap_or(f64::INFINITY).abs());
                }
                for (&x, &v) in t.radii().iter().zip(t.values()) {
                    if x >= lo && x <= hi {
                        m = m.max(v.abs());
                    }
                }
                m
            }
        }
    }
}

fn psi_base_unchecked(a: &AnnulusSpec, r: f64) -> f64 {
    let near = (r - a.r1).min(a.r2 - r);
    if near < ENDPOINT_GUARD {
        return f64::INFINITY;
    }
    1.0 / (PI * near / a.width()).sin() - 1.0
}

fn dpsi_base_csc(a: &AnnulusSpec, r: f64) -> f64 {
    let k = PI / a.width();
    let near = (r - a.r1).min(a.r2 - r);
    let s = (k * near).sin();
    -k * (k * (r - a.r1)).cos() / (s * s)
}

/// `psi_base(r)`; `+inf` within [`ENDPOINT_GUARD`] of either wall.
pub fn psi_base_eval(spec: &PotentialSpec, r: f64) -> Result<f64> {
    spec.check_domain(r)?;
    Ok(match &spec.kind {
        PotentialKind::ExplicitCsc => psi_base_unchecked(&spec.annulus, r),
        PotentialKind::Tabulated(t) => t.eval(r).unwrap_or(f64::INFINITY),
    })
}

/// Norms of the initial data entering the a-priori constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBundle {
    pub etheta0_sup: f64,
    pub b0_sup: f64,
    pub eb_sup: f64,
    /// `∬ f0 r dr dp`
    pub f0_l1: f64,
    /// `∬ r p0 f0 dr dp`
    pub r_p0_f0_l1: f64,
    pub lambda: f64,
    pub m0: f64,
}

impl NormBundle {
    pub fn from_initial(init: &InitialData) -> Self {
        let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        Self {
            etheta0_sup: sup(&init.etheta0),
            b0_sup: sup(&init.b0),
            eb_sup: init.boundary.sup_norm(),
            f0_l1: total_charge(&init.f0),
            r_p0_f0_l1: weighted_energy_l1(&init.f0),
            lambda: init.lambda,
            m0: init.m0,
        }
    }

    /// Every norm equal to one, `lambda = 0`, `M0 = 1`.
    pub fn unit() -> Self {
        Self {
            etheta0_sup: 1.0,
            b0_sup: 1.0,
            eb_sup: 1.0,
            f0_l1: 1.0,
            r_p0_f0_l1: 1.0,
            lambda: 0.0,
            m0: 1.0,
        }
    }
}

/// `∬ r p0 f dr dp` by the trapezoid rule.
pub fn weighted_energy_l1(f: &DistributionFunction) -> f64 {
    let g = &f.grid;
    let wr = g.radial.trapezoid_weights();
    let wp = g.p_weights();
    let p = g.p_nodes();
    let np = g.np;
    let mut total = 0.0;
    for ir in 0..=g.nr() {
        let s = f.slab(ir);
        let mut acc = 0.0;
        for ipr in 0..np {
            for ipt in 0..np {
                let p0 = (1.0 + p[ipr] * p[ipr] + p[ipt] * p[ipt]).sqrt();
                acc += wp[ipr] * wp[ipt] * p0 * s[ipr * np + ipt];
            }
        }
        total += wr[ir] * g.r_nodes()[ir] * acc;
    }
    total
}

/// `C`, `C~` and `K` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantsSnapshot {
    pub t: f64,
    /// The ceiling `⌈t / (r2 - r1)⌉` used.
    pub ceil: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub k: f64,
}

impl ConstantsSnapshot {
    /// `C~ e^{C t}`, the field bound.
    pub fn field_bound(&self) -> f64 {
        self.c_tilde * (self.c * self.t).exp()
    }

    /// `M0 + 4 C~ e^{C t} / C`, the momentum-support bound.
    pub fn momentum_bound(&self, m0: f64) -> f64 {
        m0 + 4.0 * self.field_bound() / self.c
    }
}

/// The a-priori constants as functions of time.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConstants {
    pub annulus: AnnulusSpec,
    pub norms: NormBundle,
    /// When set, the ceiling is taken at `max(t, freeze)`.
    pub freeze: Option<f64>,
}

/// Relative slack absorbing accumulated roundoff in `t / (r2 - r1)`.
const CEIL_SLACK: f64 = 1e-12;

impl TheoryConstants {
    pub fn new(annulus: AnnulusSpec, norms: NormBundle) -> Self {
        Self {
            annulus,
            norms,
            freeze: None,
        }
    }

    pub fn frozen_at(mut self, t_end: f64) -> Self {
        self.freeze = Some(t_end);
        self
    }

    pub fn ceil_count(&self, t: f64) -> f64 {
        let t_eff = match self.freeze {
            Some(tf) => t.max(tf),
            None => t,
        };
        let x = t_eff / self.annulus.width();
        if x <= 0.0 {
            0.0
        } else {
            (x - CEIL_SLACK * x.max(1.0)).ceil().max(0.0)
        }
    }

    fn c_of(&self, n: f64) -> f64 {
        let a = &self.annulus;
        (1.0 + 4.0 * a.r2 * n * self.norms.eb_sup) / a.r1
    }

    fn c_tilde_of(&self, n: f64) -> f64 {
        let AnnulusSpec { r1, r2, .. } = self.annulus;
        let nb = &self.norms;
        let charge = nb.f0_l1 + nb.lambda.abs();
        let first = (r2 / r1) * (2.0 * nb.etheta0_sup + nb.b0_sup + (4.0 * n + 2.0) * nb.eb_sup);
        let second = (2.0 * r2 * r2 * n
            * (charge * charge + nb.etheta0_sup * nb.etheta0_sup + nb.b0_sup * nb.b0_sup)
            + 2.0 * n * nb.r_p0_f0_l1)
            / (2.0 * r1);
        first + second
    }

    fn k_of(&self, c: f64, ct: f64) -> f64 {
        let AnnulusSpec { r1, r2, .. } = self.annulus;
        let rm = self.annulus.r_m();
        let m0 = self.norms.m0;
        0.5 * ct * (r2 + rm) * (r2 - r1)
            + (2.0 * r2 - r1) * (2.0 * ct / c + m0)
            + r2 * m0
            + ct * rm / c
    }

    pub fn c(&self, t: f64) -> f64 {
        self.c_of(self.ceil_count(t))
    }

    pub fn c_tilde(&self, t: f64) -> f64 {
        self.c_tilde_of(self.ceil_count(t))
    }

    pub fn k(&self, t: f64) -> f64 {
        let n = self.ceil_count(t);
        self.k_of(self.c_of(n), self.c_tilde_of(n))
    }

    pub fn snapshot(&self, t: f64) -> ConstantsSnapshot {
        let n = self.ceil_count(t);
        let c = self.c_of(n);
        let c_tilde = self.c_tilde_of(n);
        ConstantsSnapshot {
            t,
            ceil: n,
            c,
            c_tilde,
            k: self.k_of(c, c_tilde),
        }
    }
}

/// Constants built from the initial data, unfrozen.
pub fn theory_constants(init: &InitialData, annulus: AnnulusSpec, t: f64) -> ConstantsSnapshot {
    TheoryConstants::new(annulus, NormBundle::from_initial(init)).snapshot(t)
}

/// `L_bar(t) = (r2/r1) max_{I0} |psi_base| + (K/r1) e^{C t}`.
pub fn moving_bar(spec: &PotentialSpec, constants: &TheoryConstants, t: f64) -> f64 {
    moving_bar_with(spec.initial_support_max(), &spec.annulus, constants, t)
}

fn moving_bar_with(i0_max: f64, a: &AnnulusSpec, constants: &TheoryConstants, t: f64) -> f64 {
    let s = constants.snapshot(t);
    (a.r2 / a.r1) * i0_max + (s.k / a.r1) * (s.c * t).exp()
}

/// `h(u) = u + u^2 - u^3`, the blend on `[0, 1]`.
#[inline]
pub fn blend(u: f64) -> f64 {
    u + u * u - u * u * u
}

#[inline]
pub fn blend_slope(u: f64) -> f64 {
    1.0 + 2.0 * u - 3.0 * u * u
}

/// The external potential evaluated with a fixed bar level.
#[derive(Clone, Debug)]
pub struct FrozenPotential {
    spec: Arc<PotentialSpec>,
    pub l_bar: f64,
}

impl FrozenPotential {
    pub fn new(spec: Arc<PotentialSpec>, l_bar: f64) -> Self {
        Self { spec, l_bar }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn psi_ext(&self, r: f64) -> Result<f64> {
        let base = psi_base_eval(&self.spec, r)?;
        Ok(self.truncate(base))
    }

    fn truncate(&self, base: f64) -> f64 {
        let l = self.l_bar;
        if base <= l {
            base
        } else if base >= l + 1.0 {
            l + 1.0
        } else {
            l + blend(base - l)
        }
    }

    /// `∂_r psi_ext`.
    pub fn dpsi_ext(&self, r: f64) -> Result<f64> {
        let base = psi_base_eval(&self.spec, r)?;
        let l = self.l_bar;
        if base >= l + 1.0 {
            return Ok(0.0);
        }
        match &self.spec.kind {
            PotentialKind::ExplicitCsc => {
                let d = dpsi_base_csc(&self.spec.annulus, r);
                Ok(if base <= l { d } else { blend_slope(base - l) * d })
            }
            PotentialKind::Tabulated(_) => self.central_difference(r),
        }
    }

    fn central_difference(&self, r: f64) -> Result<f64> {
        let a = &self.spec.annulus;
        let h = (1e-4 * a.width()).min((r - a.r1) / 3.0).min((a.r2 - r) / 3.0);
        let v = |x: f64| self.psi_ext(x);
        Ok((v(r - 2.0 * h)? - 8.0 * v(r - h)? + 8.0 * v(r + h)? - v(r + 2.0 * h)?) / (12.0 * h))
    }

    /// `B_ext = psi_ext / r + ∂_r psi_ext`.
    pub fn b_ext(&self, r: f64) -> Result<f64> {
        Ok(self.psi_ext(r)? / r + self.dpsi_ext(r)?)
    }
}

/// The time-dependent truncated potential.
#[derive(Clone, Debug)]
pub struct ExternalPotential {
    spec: Arc<PotentialSpec>,
    pub constants: TheoryConstants,
    i0_max: f64,
}

impl ExternalPotential {
    pub fn new(spec: PotentialSpec, constants: TheoryConstants) -> Self {
        let i0_max = spec.initial_support_max();
        log::info!(
            "moving bar uses the closed-form threshold (r2/r1) max_I0 |psi_base| + (K/r1) e^(Ct); \
             the sublevel-set maximum equals it because psi_base is continuous and diverges at the margins"
        );
        Self {
            spec: Arc::new(spec),
            constants,
            i0_max,
        }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn initial_support_max(&self) -> f64 {
        self.i0_max
    }

    pub fn moving_bar(&self, t: f64) -> f64 {
        moving_bar_with(self.i0_max, &self.spec.annulus, &self.constants, t)
    }

    pub fn at(&self, t: f64) -> FrozenPotential {
        FrozenPotential::new(self.spec.clone(), self.moving_bar(t))
    }
}

pub fn psi_ext_eval(spec: &PotentialSpec, constants: &TheoryConstants, t: f64, r: f64) -> Result<f64> {
    FrozenPotential::new(Arc::new(spec.clone()), moving_bar(spec, constants, t)).psi_ext(r)
}

pub fn b_ext_eval(spec: &PotentialSpec, constants: &TheoryConstants, t: f64, r: f64) -> Result<f64> {
    FrozenPotential::new(Arc::new(spec.clone()), moving_bar(spec, constants, t)).b_ext(r)
}

/// Radial interval the explicit-csc confinement argument guarantees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfinementBound {
    pub c_s: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl ConfinementBound {
    /// Guaranteed distance from the walls, `r_lo - r1`.
    pub fn distance(&self, r1: f64) -> f64 {
        self.r_lo - r1
    }
}

/// Uses `arcsin(1 / C_s)`.
pub fn confinement_radius_bound(spec: &PotentialSpec, constants: &TheoryConstants, t: f64) -> Result<ConfinementBound> {
    if !spec.is_explicit() {
        return Err(Error::InvalidPotential(
            "the closed-form confinement radius needs the explicit csc profile".into(),
        ));
    }
    let a = &spec.annulus;
    let s = constants.snapshot(t);
    let w = a.width();
    let edge = 1.0 / (PI * (w - a.delta0) / w).sin() - 1.0;
    let c_s = 1.0 + (a.r2 / a.r1) * edge.abs() + (s.k / a.r1) * (s.c * t).exp();
    let reach = (w / PI) * (1.0 / c_s).asin();
    Ok(ConfinementBound {
        c_s,
        r_lo: a.r1 + reach,
        r_hi: a.r2 - reach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn annulus() -> AnnulusSpec {
        AnnulusSpec::new(1.0, 3.0, 0.5, 0.25).unwrap()
    }

    fn csc() -> PotentialSpec {
        PotentialSpec::explicit_csc(annulus())
    }

    #[test]
    fn csc_values() {
        let s = csc();
        assert_eq!(psi_base_eval(&s, 2.0).unwrap(), 0.0);
        assert_relative_eq!(psi_base_eval(&s, 1.5).unwrap(), 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert!(psi_base_eval(&s, 1.0 + 1e-12).unwrap() > 1e10);
        assert_eq!(psi_base_eval(&s, 1.0 + 1e-15).unwrap(), f64::INFINITY);
        assert!(matches!(psi_base_eval(&s, 1.0), Err(Error::Domain { .. })));
        assert!(psi_base_eval(&s, 3.5).is_err());
    }

    #[test]
    fn near_wall_matches_asymptotics() {
        let r = 1.0 + 1e-9;
        let eps = r - 1.0;
        let v = psi_base_eval(&csc(), r).unwrap();
        let x = PI * eps / 2.0;
        let series = 1.0 / x + x / 6.0 - 1.0;
        assert_relative_eq!(v, series, max_relative = 1e-12);
    }

    #[test]
    fn unit_norm_constants() {
        let tc = TheoryConstants::new(annulus(), NormBundle::unit());
        let s = tc.snapshot(1.0);
        assert_eq!(s.c, 13.0);
        assert_eq!(s.c_tilde, 55.0);
        assert_relative_eq!(s.k, 275.0 + 5.0 * (110.0 / 13.0 + 1.0) + 3.0 + 110.0 / 13.0, epsilon = 1e-12);
        assert_eq!(tc.ceil_count(2.0), 1.0);
        assert_eq!(tc.ceil_count(2.0 + 1e-9), 2.0);
        assert_eq!(tc.ceil_count(0.0), 0.0);
    }

    #[test]
    fn frozen_constants_use_end_time() {
        let tc = TheoryConstants::new(annulus(), NormBundle::unit()).frozen_at(5.0);
        assert_eq!(tc.ceil_count(0.1), 3.0);
        assert_eq!(tc.ceil_count(7.0), 4.0);
    }

    #[test]
    fn k_can_drop_at_first_breakpoint() {
        let a = AnnulusSpec::new(3.3470842216387546, 5.551799121561182, 0.5, 0.25).unwrap();
        let norms = NormBundle {
            etheta0_sup: 0.0,
            b0_sup: 0.0,
            eb_sup: 5.011489035231449,
            f0_l1: 0.0,
            r_p0_f0_l1: 0.0,
            lambda: 0.0,
            m0: 1.0,
        };
        let tc = TheoryConstants::new(a, norms);
        assert!(tc.k(1.0) < tc.k(0.0));
        assert!(tc.c(1.0) > tc.c(0.0));
        let ext = ExternalPotential::new(PotentialSpec::explicit_csc(a), tc);
        assert!(ext.moving_bar(1.0) > ext.moving_bar(0.0));
    }

    #[test]
    fn bar_example() {
        let tc = TheoryConstants::new(annulus(), NormBundle::unit());
        let s = csc();
        assert_relative_eq!(s.initial_support_max(), 2f64.sqrt() - 1.0, epsilon = 1e-14);
        let s1 = tc.snapshot(1.0);
        let expected = 3.0 * (2f64.sqrt() - 1.0) + s1.k * (13.0f64).exp();
        assert_relative_eq!(moving_bar(&s, &tc, 1.0), expected, max_relative = 1e-14);
    }

    #[test]
    fn truncation_branches() {
        let spec = Arc::new(csc());
        let p = FrozenPotential::new(spec.clone(), 0.5);
        let base = |r: f64| psi_base_eval(&spec, r).unwrap();
        assert_eq!(p.psi_ext(2.0).unwrap(), 0.0);
        assert_eq!(p.psi_ext(1.01).unwrap(), 1.5);
        let r = find_level(&spec, 1.0);
        assert_relative_eq!(base(r), 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.psi_ext(r).unwrap(), 0.5 + blend(0.5), epsilon = 1e-11);
        assert_relative_eq!(blend(0.5), 0.625, epsilon = 1e-15);
        assert_eq!(blend(0.0), 0.0);
        assert_eq!(blend(1.0), 1.0);
        assert_eq!(blend_slope(1.0), 0.0);
    }

    fn find_level(spec: &PotentialSpec, level: f64) -> f64 {
        let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if psi_base_eval(spec, mid).unwrap() > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn b_ext_matches_finite_difference_on_blend() {
        let spec = Arc::new(csc());
        let p = FrozenPotential::new(spec.clone(), 0.8);
        let r_edge = find_level(&spec, 0.8);
        let r_top = find_level(&spec, 1.8);
        let r = 0.5 * (r_edge + r_top);
        let h = 1e-6;
        let rpsi = |x: f64| x * p.psi_ext(x).unwrap();
        let fd = (rpsi(r + h) - rpsi(r - h)) / (2.0 * h) / r;
        assert_relative_eq!(p.b_ext(r).unwrap(), fd, max_relative = 1e-6);
    }

    #[test]
    fn b_ext_vanishes_at_median() {
        let p = FrozenPotential::new(Arc::new(csc()), 10.0);
        assert!(p.b_ext(2.0).unwrap().abs() < 1e-15);
        let flat = FrozenPotential::new(Arc::new(csc()), 0.1);
        assert_relative_eq!(flat.b_ext(1.01).unwrap(), 1.1 / 1.01, epsilon = 1e-14);
    }

    #[test]
    fn confinement_radius_against_bisection() {
        let tc = TheoryConstants::new(annulus(), NormBundle::unit());
        let b = confinement_radius_bound(&csc(), &tc, 1.0).unwrap();
        let target = b.c_s;
        let g = |r: f64| 1.0 / (PI * (r - 1.0) / 2.0).sin() - target;
        let (mut lo, mut hi) = (1.0 + 1e-300, 2.0);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((b.r_lo - 0.5 * (lo + hi)).abs() < 1e-12);
        assert_relative_eq!(b.r_hi, 4.0 - b.r_lo, epsilon = 1e-15);
    }

    #[test]
    fn confinement_degenerate_floor() {
        let a = annulus();
        let reach = (a.width() / PI) * (1.0f64).asin();
        assert_relative_eq!(a.r1 + reach, a.r_m(), epsilon = 1e-15);
    }

    #[test]
    fn tabulated_profile() {
        let a = annulus();
        let r: Vec<f64> = (0..=30).map(|i| 1.25 + 1.5 * i as f64 / 30.0).collect();
        let psi: Vec<f64> = r.iter().map(|&x| psi_base_unchecked(&a, x)).collect();
        let table = TabulatedProfile::new(r, psi, 1.0).unwrap();
        let spec = PotentialSpec::tabulated(a, table).unwrap();
        assert!((psi_base_eval(&spec, 2.1).unwrap() - psi_base_unchecked(&a, 2.1)).abs() < 1e-3);
        assert_eq!(psi_base_eval(&spec, 1.2).unwrap(), f64::INFINITY);
        let p = FrozenPotential::new(Arc::new(spec), 100.0);
        let exact = FrozenPotential::new(Arc::new(csc()), 100.0);
        assert!((p.b_ext(2.2).unwrap() - exact.b_ext(2.2).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn tabulated_rejects_weak_divergence() {
        let r = vec![1.3, 2.0, 2.7];
        assert!(TabulatedProfile::new(r.clone(), vec![0.5, 0.0, 0.5], 1.0).is_err());
        let t = TabulatedProfile::new(r, vec![2.0, 0.0, 2.0], 1.0).unwrap();
        assert!(PotentialSpec::tabulated(annulus(), t).is_ok());
        let narrow = TabulatedProfile::new(vec![1.6, 2.0, 2.4], vec![2.0, 0.0, 2.0], 1.0).unwrap();
        assert!(PotentialSpec::tabulated(annulus(), narrow).is_err());
    }
}
