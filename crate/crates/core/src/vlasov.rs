//! Characteristics of the cylindrical Vlasov equation, the particle tracer,
//! the backward semi-Lagrangian step and the velocity moments.
//!
//! Along characteristics
//!
//! ```text
//! dR/ds  = P_r / P0
//! dPr/ds = E_r + (P_theta / P0) Bbar + P_theta^2 / (R P0)
//! dPt/ds = E_theta - (P_r / P0) Bbar - P_r P_theta / (R P0)
//! ```
//!
//! with `Bbar = B + B_ext` and `P0 = sqrt(1 + |P|^2)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{total_charge, DistributionFunction, FieldState, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::interp::{cubic_1d, cubic_stencil};
use crate::potential::{ExternalPotential, FrozenPotential};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharState {
    pub r: f64,
    pub pr: f64,
    pub pt: f64,
}

impl CharState {
    pub fn new(r: f64, pr: f64, pt: f64) -> Self {
        Self { r, pr, pt }
    }

    pub fn p0(&self) -> f64 {
        (1.0 + self.pr * self.pr + self.pt * self.pt).sqrt()
    }

    pub fn p_abs(&self) -> f64 {
        self.pr.hypot(self.pt)
    }

    fn axpy(&self, a: f64, d: &CharState) -> CharState {
        CharState {
            r: self.r + a * d.r,
            pr: self.pr + a * d.pr,
            pt: self.pt + a * d.pt,
        }
    }
}

/// Field values seen by a particle at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalFields {
    pub er: f64,
    pub etheta: f64,
    /// Total magnetic field `B + B_ext`.
    pub bbar: f64,
}

#[inline]
fn rhs(s: &CharState, f: &LocalFields) -> CharState {
    let p0 = s.p0();
    let vr = s.pr / p0;
    let vt = s.pt / p0;
    CharState {
        r: vr,
        pr: f.er + vt * f.bbar + s.pt * vt / s.r,
        pt: f.etheta - vr * f.bbar - s.pr * vt / s.r,
    }
}

/// Right-hand side of the characteristic system.
pub fn characteristic_rhs(s: &CharState, fields: &LocalFields, r1: f64, r2: f64) -> Result<CharState> {
    if !(s.r > r1 && s.r < r2) {
        return Err(Error::Domain { r: s.r, r1, r2 });
    }
    Ok(rhs(s, fields))
}

/// Time-dependent fields along a trajectory.
pub trait FieldSampler: Sync {
    fn bounds(&self) -> (f64, f64);
    fn sample(&self, t: f64, r: f64) -> Result<LocalFields>;
}

/// All fields zero.
#[derive(Clone, Copy, Debug)]
pub struct VacuumSampler {
    pub r1: f64,
    pub r2: f64,
}

impl FieldSampler for VacuumSampler {
    fn bounds(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    fn sample(&self, _t: f64, _r: f64) -> Result<LocalFields> {
        Ok(LocalFields::default())
    }
}

/// Only the external field, frozen in time.
#[derive(Clone, Debug)]
pub struct StaticExternalSampler {
    pub potential: FrozenPotential,
}

impl FieldSampler for StaticExternalSampler {
    fn bounds(&self) -> (f64, f64) {
        let a = &self.potential.spec().annulus;
        (a.r1, a.r2)
    }

    fn sample(&self, _t: f64, r: f64) -> Result<LocalFields> {
        Ok(LocalFields {
            bbar: self.potential.b_ext(r)?,
            ..LocalFields::default()
        })
    }
}

/// Only the external field, following the moving bar.
#[derive(Clone, Debug)]
pub struct ExternalSampler {
    pub potential: ExternalPotential,
}

impl FieldSampler for ExternalSampler {
    fn bounds(&self) -> (f64, f64) {
        let a = &self.potential.spec().annulus;
        (a.r1, a.r2)
    }

    fn sample(&self, t: f64, r: f64) -> Result<LocalFields> {
        Ok(LocalFields {
            bbar: self.potential.at(t).b_ext(r)?,
            ..LocalFields::default()
        })
    }
}

/// Gridded self-consistent fields, cubic in `r`, held fixed in time, plus
/// an optional external field.
#[derive(Clone, Debug)]
pub struct SnapshotSampler {
    pub fields: FieldState,
    pub r1: f64,
    pub dr: f64,
    pub r2: f64,
    pub external: Option<ExternalPotential>,
}

impl FieldSampler for SnapshotSampler {
    fn bounds(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    fn sample(&self, t: f64, r: f64) -> Result<LocalFields> {
        let f = &self.fields;
        let b_ext = match &self.external {
            Some(p) => p.at(t).b_ext(r)?,
            None => 0.0,
        };
        Ok(LocalFields {
            er: cubic_1d(&f.er, self.r1, self.dr, r),
            etheta: cubic_1d(&f.etheta, self.r1, self.dr, r),
            bbar: cubic_1d(&f.b, self.r1, self.dr, r) + b_ext,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryContact {
    pub t: f64,
    pub state: CharState,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CharState>,
    pub dt: f64,
    /// Last accepted state before a stage left the annulus.
    pub contact: Option<BoundaryContact>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, CharState) {
        let n = self.times.len() - 1;
        (self.times[n], self.states[n])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Fixed step; derived from `tol` when absent.
    pub dt: Option<f64>,
    pub tol: f64,
    /// Record every `sample_every`-th step (the endpoint is always kept).
    pub sample_every: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            dt: None,
            tol: 1e-12,
            sample_every: 1,
        }
    }
}

impl TraceOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt: Some(dt),
            ..Self::default()
        }
    }
}

/// Classic fourth-order Runge-Kutta from `t0` to `t1` with a fixed step.
///
/// Without an explicit step the step count is `ceil(|t1 - t0| / tol^(1/4))`.
pub fn trace_particle<S: FieldSampler + ?Sized>(
    ic: CharState,
    fields: &S,
    t0: f64,
    t1: f64,
    opts: TraceOptions,
) -> Result<Trajectory> {
    let (r1, r2) = fields.bounds();
    characteristic_rhs(&ic, &LocalFields::default(), r1, r2)?;
    let span = t1 - t0;
    let steps = match opts.dt {
        Some(dt) => {
            if !(dt.abs() > 0.0) || !dt.is_finite() {
                return Err(Error::StepUnderflow(dt));
            }
            (span.abs() / dt.abs()).round().max(1.0) as usize
        }
        None => (span.abs() / opts.tol.max(1e-300).powf(0.25)).ceil().max(1.0) as usize,
    };
    let h = span / steps as f64;
    if span != 0.0 && h.abs() <= f64::EPSILON * t0.abs().max(t1.abs()).max(1.0) {
        return Err(Error::StepUnderflow(h));
    }
    let every = opts.sample_every.max(1);
    let mut times = vec![t0];
    let mut states = vec![ic];
    let mut t = t0;
    let mut z = ic;
    let eval = |t: f64, z: &CharState| -> Option<CharState> {
        if !(z.r > r1 && z.r < r2) {
            return None;
        }
        fields.sample(t, z.r).ok().map(|f| rhs(z, &f))
    };
    for k in 0..steps {
        let stage = (|| {
            let k1 = eval(t, &z)?;
            let k2 = eval(t + 0.5 * h, &z.axpy(0.5 * h, &k1))?;
            let k3 = eval(t + 0.5 * h, &z.axpy(0.5 * h, &k2))?;
            let k4 = eval(t + h, &z.axpy(h, &k3))?;
            let next = CharState {
                r: z.r + h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
                pr: z.pr + h / 6.0 * (k1.pr + 2.0 * k2.pr + 2.0 * k3.pr + k4.pr),
                pt: z.pt + h / 6.0 * (k1.pt + 2.0 * k2.pt + 2.0 * k3.pt + k4.pt),
            };
            (next.r > r1 && next.r < r2).then_some(next)
        })();
        match stage {
            Some(next) => {
                z = next;
                t = t0 + (k + 1) as f64 * h;
                if (k + 1) % every == 0 || k + 1 == steps {
                    times.push(t);
                    states.push(z);
                }
            }
            None => {
                if *times.last().unwrap() != t {
                    times.push(t);
                    states.push(z);
                }
                return Ok(Trajectory {
                    times,
                    states,
                    dt: h,
                    contact: Some(BoundaryContact { t, state: z }),
                });
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        dt: h,
        contact: None,
    })
}

/// Velocity moments per radial node.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub rho: Vec<f64>,
    pub j_r: Vec<f64>,
    pub j_theta: Vec<f64>,
}

/// `rho = ∫ f dp`, `j = ∫ p̂ f dp` by the trapezoid rule.
pub fn moments(f: &DistributionFunction) -> Moments {
    let g = &f.grid;
    let np = g.np;
    let wp = g.p_weights();
    let p = g.p_nodes();
    let per_node: Vec<(f64, f64, f64)> = (0..=g.nr())
        .into_par_iter()
        .map(|ir| {
            let s = f.slab(ir);
            let (mut rho, mut jr, mut jt) = (0.0, 0.0, 0.0);
            for ipr in 0..np {
                for ipt in 0..np {
                    let v = s[ipr * np + ipt];
                    if v == 0.0 {
                        continue;
                    }
                    let w = wp[ipr] * wp[ipt] * v;
                    let p0 = (1.0 + p[ipr] * p[ipr] + p[ipt] * p[ipt]).sqrt();
                    rho += w;
                    jr += w * p[ipr] / p0;
                    jt += w * p[ipt] / p0;
                }
            }
            (rho, jr, jt)
        })
        .collect();
    Moments {
        rho: per_node.iter().map(|m| m.0).collect(),
        j_r: per_node.iter().map(|m| m.1).collect(),
        j_theta: per_node.iter().map(|m| m.2).collect(),
    }
}

/// Self-consistent fields at the two ends of a step.
#[derive(Clone, Copy, Debug)]
pub struct StepFields<'a> {
    pub old: &'a FieldState,
    pub new: &'a FieldState,
}

/// External field at the new and mid times of a step.
#[derive(Clone, Copy, Debug)]
pub struct StepExternal<'a> {
    pub new: &'a FrozenPotential,
    pub mid: &'a FrozenPotential,
}

#[derive(Clone, Copy, Debug)]
pub struct SlOptions {
    /// Nodal values above this count as support when judging leaks.
    pub support_threshold: f64,
}

#[derive(Clone, Debug)]
pub struct SlOutcome {
    pub f: DistributionFunction,
    /// Nodes whose foot left the annulus while carrying mass.
    pub leaks: usize,
    /// Nodes whose foot left the momentum box while carrying mass.
    pub momentum_clips: usize,
    pub charge_before: f64,
    /// Charge of the interpolated values before clamping.
    pub charge_raw: f64,
    /// Factor applied after clamping to restore `charge_before`.
    pub fixer_factor: f64,
}

impl SlOutcome {
    /// `(charge_raw - charge_before) / charge_before`.
    pub fn raw_drift(&self) -> f64 {
        if self.charge_before == 0.0 {
            0.0
        } else {
            (self.charge_raw - self.charge_before) / self.charge_before
        }
    }
}

struct Profiles {
    er: Vec<f64>,
    etheta: Vec<f64>,
    b: Vec<f64>,
}

impl Profiles {
    fn mid(a: &FieldState, b: &FieldState) -> Self {
        let avg = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect();
        Self {
            er: avg(&a.er, &b.er),
            etheta: avg(&a.etheta, &b.etheta),
            b: avg(&a.b, &b.b),
        }
    }

    fn of(a: &FieldState) -> Self {
        Self {
            er: a.er.clone(),
            etheta: a.etheta.clone(),
            b: a.b.clone(),
        }
    }

    #[inline]
    fn at(&self, x: f64, n: usize, ext: Option<&FrozenPotential>, r: f64) -> Option<LocalFields> {
        let (b, w) = cubic_stencil(x, n);
        let dot = |v: &[f64]| w[0] * v[b] + w[1] * v[b + 1] + w[2] * v[b + 2] + w[3] * v[b + 3];
        let b_ext = match ext {
            Some(p) => p.b_ext(r).ok()?,
            None => 0.0,
        };
        Some(LocalFields {
            er: dot(&self.er),
            etheta: dot(&self.etheta),
            bbar: dot(&self.b) + b_ext,
        })
    }
}

#[inline]
fn tricubic(values: &[f64], g: &PhaseSpaceGrid, x: f64, y: f64, z: f64) -> f64 {
    let np = g.np;
    let (br, wr) = cubic_stencil(x, g.nr() + 1);
    let (bp, wp) = cubic_stencil(y, np);
    let (bt, wt) = cubic_stencil(z, np);
    let mut acc = 0.0;
    for (a, wa) in wr.iter().enumerate() {
        let slab = (br + a) * np * np;
        let mut inner = 0.0;
        for (b, wb) in wp.iter().enumerate() {
            let row = slab + (bp + b) * np + bt;
            let v = &values[row..row + 4];
            inner += wb * (wt[0] * v[0] + wt[1] * v[1] + wt[2] * v[2] + wt[3] * v[3]);
        }
        acc += wa * inner;
    }
    acc
}

/// One backward semi-Lagrangian step `f(t + dt, z) = f(t, Z(t; t + dt, z))`.
///
/// Feet are found by the midpoint rule with the new-time fields for the
/// first stage and time-averaged fields for the second. Interpolation is
/// tricubic; negative values are clamped and the total charge is restored.
pub fn semi_lagrangian_step(
    f: &DistributionFunction,
    fields: StepFields<'_>,
    external: Option<StepExternal<'_>>,
    dt: f64,
    opts: SlOptions,
) -> SlOutcome {
    let g: Arc<PhaseSpaceGrid> = f.grid.clone();
    let nr = g.nr();
    let np = g.np;
    let slab = g.slab();
    let (r1, r2) = (g.annulus.r1, g.annulus.r2);
    let dr = g.dr();
    let dp = g.dp;
    let p_max = g.p_max;
    let pn = g.p_nodes();
    let new_prof = Profiles::of(fields.new);
    let mid_prof = Profiles::mid(fields.old, fields.new);
    let ext_new = external.map(|e| e.new);
    let ext_mid = external.map(|e| e.mid);
    let r_idx = |r: f64| (r - r1) / dr;
    let p_idx = |p: f64| (p + p_max) / dp;
    let charge_before = total_charge(f);

    let mut values = vec![0.0; g.len()];
    let (leaks, clips) = values
        .par_chunks_mut(slab)
        .enumerate()
        .map(|(ir, chunk)| {
            if ir == 0 || ir == nr {
                return (0usize, 0usize);
            }
            let r = g.r_nodes()[ir];
            let mut leaks = 0;
            let mut clips = 0;
            let head = new_prof.at(ir as f64, nr + 1, ext_new, r);
            for ipr in 1..np - 1 {
                for ipt in 1..np - 1 {
                    let z = CharState::new(r, pn[ipr], pn[ipt]);
                    let foot = head.and_then(|h| {
                        let k1 = rhs(&z, &h);
                        let zm = z.axpy(-0.5 * dt, &k1);
                        if !(zm.r > r1 && zm.r < r2) {
                            return None;
                        }
                        let m = mid_prof.at(r_idx(zm.r), nr + 1, ext_mid, zm.r)?;
                        let k2 = rhs(&zm, &m);
                        Some(z.axpy(-dt, &k2))
                    });
                    let value = match foot {
                        Some(ft) if ft.r >= r1 && ft.r <= r2 => {
                            if ft.pr.abs() > p_max || ft.pt.abs() > p_max {
                                let (pr, pt) = (ft.pr.clamp(-p_max, p_max), ft.pt.clamp(-p_max, p_max));
                                if tricubic(&f.values, &g, r_idx(ft.r), p_idx(pr), p_idx(pt)) > opts.support_threshold {
                                    clips += 1;
                                }
                                0.0
                            } else {
                                tricubic(&f.values, &g, r_idx(ft.r), p_idx(ft.pr), p_idx(ft.pt))
                            }
                        }
                        other => {
                            let (pr, pt) = match other {
                                Some(ft) => (ft.pr.clamp(-p_max, p_max), ft.pt.clamp(-p_max, p_max)),
                                None => (z.pr, z.pt),
                            };
                            let near = match other {
                                Some(ft) if ft.r > r2 => (nr - 1) as f64,
                                Some(_) => 1.0,
                                None if r > g.annulus.r_m() => (nr - 1) as f64,
                                None => 1.0,
                            };
                            if tricubic(&f.values, &g, near, p_idx(pr), p_idx(pt)) > opts.support_threshold {
                                leaks += 1;
                            }
                            0.0
                        }
                    };
                    chunk[ipr * np + ipt] = value;
                }
            }
            (leaks, clips)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let mut out = DistributionFunction {
        grid: g.clone(),
        values,
        time: f.time + dt,
    };
    let charge_raw = total_charge(&out);
    out.values.par_iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    let clamped = total_charge(&out);
    let fixer_factor = if clamped > 0.0 && charge_before > 0.0 {
        charge_before / clamped
    } else {
        1.0
    };
    if fixer_factor != 1.0 {
        out.values.par_iter_mut().for_each(|v| *v *= fixer_factor);
    }
    SlOutcome {
        f: out,
        leaks,
        momentum_clips: clips,
        charge_before,
        charge_raw,
        fixer_factor,
    }
}

/// Backward foot of a straight line in the plane, in polar components.
///
/// The point sits at angle zero; returns `(R, P_r, P_theta)` at the foot.
pub fn straight_line_foot(r: f64, pr: f64, pt: f64, t: f64) -> (f64, f64, f64) {
    let p0 = (1.0 + pr * pr + pt * pt).sqrt();
    let x = r - t * pr / p0;
    let y = -t * pt / p0;
    let rr = x.hypot(y);
    let (c, s) = (x / rr, y / rr);
    (rr, pr * c + pt * s, -pr * s + pt * c)
}

/// Exact field-free solution `f0(Z_back(z))` sampled on the grid.
///
/// Feet outside the annulus map to zero.
pub fn free_streaming_pushforward<F>(grid: Arc<PhaseSpaceGrid>, f0: F, t: f64) -> DistributionFunction
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let (r1, r2) = (grid.annulus.r1, grid.annulus.r2);
    DistributionFunction::from_fn(grid, t, move |r, pr, pt| {
        let (rr, a, b) = straight_line_foot(r, pr, pt, t);
        if rr <= r1 || rr >= r2 {
            0.0
        } else {
            f0(rr, a, b)
        }
    })
}
