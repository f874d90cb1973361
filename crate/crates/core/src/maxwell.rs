//! Field solve: `E_r` from the Gauss integral, `E_theta` and `B` by
//! characteristic transport of `P± = r (E_theta ± B)`.

use crate::domain::{BoundaryTraces, FieldState, RadialGrid};
use crate::error::{Error, Result};

/// Tolerance on `|dt - dr|` for the unit-CFL update.
pub const CFL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub time: f64,
}

impl WaveState {
    pub fn zeros(n: usize, time: f64) -> Self {
        Self {
            p_plus: vec![0.0; n],
            p_minus: vec![0.0; n],
            time,
        }
    }

    pub fn from_profiles(etheta: &[f64], b: &[f64], r: &[f64], time: f64) -> Self {
        let p_plus = r.iter().zip(etheta.iter().zip(b)).map(|(r, (e, b))| r * (e + b)).collect();
        let p_minus = r.iter().zip(etheta.iter().zip(b)).map(|(r, (e, b))| r * (e - b)).collect();
        Self {
            p_plus,
            p_minus,
            time,
        }
    }

    pub fn from_fields(fields: &FieldState, grid: &RadialGrid) -> Self {
        Self::from_profiles(&fields.etheta, &fields.b, grid.nodes(), fields.time)
    }

    /// `B = (P+ - P-) / (2r)`.
    pub fn b(&self, r: &[f64]) -> Vec<f64> {
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .zip(r)
            .map(|((p, m), r)| (p - m) / (2.0 * r))
            .collect()
    }

    /// `E_theta = (P+ + P-) / (2r)`.
    pub fn etheta(&self, r: &[f64]) -> Vec<f64> {
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .zip(r)
            .map(|((p, m), r)| (p + m) / (2.0 * r))
            .collect()
    }
}

/// `E_theta` and `B` from the wave variables; `E_r` is zero-filled.
pub fn reconstruct_fields(w: &WaveState, grid: &RadialGrid, lambda: f64) -> FieldState {
    let r = grid.nodes();
    FieldState {
        er: vec![0.0; r.len()],
        etheta: w.etheta(r),
        b: w.b(r),
        time: w.time,
        lambda,
    }
}

/// `E_r(R) = (1/R) ∫_{r1}^R r rho dr + r1 lambda / R` by cumulative trapezoid.
pub fn gauss_er(rho: &[f64], lambda: f64, grid: &RadialGrid) -> Vec<f64> {
    let r = grid.nodes();
    let h = grid.dr;
    let mut out = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    out.push(lambda);
    for i in 1..r.len() {
        acc += 0.5 * h * (r[i - 1] * rho[i - 1] + r[i] * rho[i]);
        out.push((acc + grid.r1 * lambda) / r[i]);
    }
    out
}

/// `max_r |(E_r^next - E_r^prev) / dt + j_r|`.
pub fn ampere_consistency(er_prev: &[f64], er_next: &[f64], j_r: &[f64], dt: f64) -> f64 {
    er_prev
        .iter()
        .zip(er_next)
        .zip(j_r)
        .map(|((a, b), j)| ((b - a) / dt + j).abs())
        .fold(0.0, f64::max)
}

/// Source profiles for one wave step.
#[derive(Clone, Copy, Debug)]
pub struct WaveSources<'a> {
    /// `B` at the old time level.
    pub b_old: &'a [f64],
    /// `j_theta` at the old time level.
    pub j_old: &'a [f64],
    /// `j_theta` at the new time level (or a prediction of it).
    pub j_new: &'a [f64],
}

/// Advances `P±` by one step of length `dt = dr`.
///
/// The source `B - r j_theta` is integrated along each ray by the trapezoid
/// rule; `B` at the ray head comes from a predictor pass with `B_old`.
pub fn step_waves(w: &WaveState, src: WaveSources<'_>, eb_new: (f64, f64), grid: &RadialGrid, dt: f64) -> Result<WaveState> {
    if !(dt > 0.0) || (dt - grid.dr).abs() > CFL_TOL {
        return Err(Error::CflViolation { dt, dr: grid.dr });
    }
    Ok(step_waves_unchecked(w, src, eb_new, grid, dt))
}

/// As [`step_waves`] for `0 < dt <= dr`, with linear interpolation at ray
/// feet that fall between nodes. Reduces to the exact shift at `dt = dr`.
pub fn step_waves_unchecked(w: &WaveState, src: WaveSources<'_>, eb_new: (f64, f64), grid: &RadialGrid, dt: f64) -> WaveState {
    let r = grid.nodes();
    let n = r.len();
    let c = (dt / grid.dr).min(1.0);
    let s_old: Vec<f64> = (0..n).map(|i| src.b_old[i] - r[i] * src.j_old[i]).collect();
    let foot_plus = |v: &[f64], i: usize| (1.0 - c) * v[i] + c * v[i - 1];
    let foot_minus = |v: &[f64], i: usize| (1.0 - c) * v[i] + c * v[i + 1];

    let mut b_head = src.b_old.to_vec();
    let mut next = WaveState::zeros(n, w.time + dt);
    for _pass in 0..2 {
        let s_new: Vec<f64> = (0..n).map(|i| b_head[i] - r[i] * src.j_new[i]).collect();
        for i in 1..n {
            next.p_plus[i] = foot_plus(&w.p_plus, i) + 0.5 * dt * (foot_plus(&s_old, i) + s_new[i]);
        }
        for i in 0..n - 1 {
            next.p_minus[i] = foot_minus(&w.p_minus, i) + 0.5 * dt * (foot_minus(&s_old, i) + s_new[i]);
        }
        next.p_plus[0] = -next.p_minus[0] + 2.0 * grid.r1 * eb_new.0;
        next.p_minus[n - 1] = -next.p_plus[n - 1] + 2.0 * grid.r2 * eb_new.1;
        b_head = next.b(r);
    }
    next
}

/// Stored field history for the boundary-recursion reconstruction.
#[derive(Clone, Debug)]
pub struct FieldHistory {
    pub dt: f64,
    r: Vec<f64>,
    pub p_plus0: Vec<f64>,
    pub p_minus0: Vec<f64>,
    pub traces: BoundaryTraces,
    b: Vec<Vec<f64>>,
    j: Vec<Vec<f64>>,
    p_plus_r1: Vec<f64>,
}

impl FieldHistory {
    pub fn new(grid: &RadialGrid, w0: &WaveState, traces: BoundaryTraces, dt: f64) -> Self {
        Self {
            dt,
            r: grid.nodes().to_vec(),
            p_plus0: w0.p_plus.clone(),
            p_minus0: w0.p_minus.clone(),
            traces,
            b: Vec::new(),
            j: Vec::new(),
            p_plus_r1: Vec::new(),
        }
    }

    /// Appends the next time level.
    pub fn push(&mut self, w: &WaveState, j_theta: &[f64]) {
        self.b.push(w.b(&self.r));
        self.j.push(j_theta.to_vec());
        self.p_plus_r1.push(w.p_plus[0]);
    }

    pub fn levels(&self) -> usize {
        self.b.len()
    }

    pub fn nodes(&self) -> usize {
        self.r.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// `B - r j_theta` at a stored level and node.
    pub fn source(&self, level: usize, node: usize) -> f64 {
        self.b[level][node] - self.r[node] * self.j[level][node]
    }

    pub fn solver_p_plus_r1(&self, level: usize) -> f64 {
        self.p_plus_r1[level]
    }

    /// Time level index of `t`, or an error when it is not stored.
    pub fn level_of(&self, t: f64) -> Result<usize> {
        if t < 0.0 {
            return Err(Error::InsufficientHistory(format!("negative time {t}")));
        }
        let x = t / self.dt;
        let n = x.round();
        if (x - n).abs() > 1e-9 * x.max(1.0) {
            return Err(Error::InsufficientHistory(format!(
                "t = {t} is not a stored time level (dt = {})",
                self.dt
            )));
        }
        let n = n as usize;
        if n >= self.levels() {
            return Err(Error::InsufficientHistory(format!(
                "t = {t} needs level {n} but only {} levels are stored",
                self.levels()
            )));
        }
        Ok(n)
    }

    /// Trapezoid integral of the source along a unit-speed ray starting at
    /// `(level, node)` and moving `step` nodes per level for `len` levels.
    pub fn ray_integral(&self, level: usize, node: usize, step: isize, len: usize) -> f64 {
        if len == 0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for s in 0..=len {
            let i = (node as isize + step * s as isize) as usize;
            let w = if s == 0 || s == len { 0.5 } else { 1.0 };
            acc += w * self.source(level + s, i);
        }
        acc * self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecursionCheck {
    pub t: f64,
    pub reflections: usize,
    pub reconstructed: f64,
    pub solver: f64,
    pub gap: f64,
}

impl RecursionCheck {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.solver.abs().max(self.reconstructed.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Reconstructs `P+(t, r1)` from initial data, wall traces and the stored
/// sources by the closed-form sum over `M = ⌊t / (r2 - r1)⌋` reflections.
pub fn boundary_recursion_check(history: &FieldHistory, t: f64) -> Result<RecursionCheck> {
    let n = history.level_of(t)?;
    let nr = history.nodes() - 1;
    let big_m = n / nr;
    let n0 = n % nr;
    let dt = history.dt;
    let r1 = history.r[0];
    let r2 = history.r[nr];
    let eb1 = |level: usize| history.traces.inner.eval(level as f64 * dt);
    let eb2 = |level: usize| history.traces.outer.eval(level as f64 * dt);
    // Level of t - k L.
    let lv = |k: usize| n - k * nr;

    let mut total;
    if big_m % 2 == 0 {
        let half = big_m / 2;
        total = -history.p_minus0[n0] - history.ray_integral(0, n0, -1, n0);
        total += 2.0 * r1 * (0..=half).map(|k| eb1(lv(2 * k))).sum::<f64>();
        total -= 2.0 * r2 * (0..half).map(|k| eb2(lv(2 * k + 1))).sum::<f64>();
        total += (1..=half).map(|k| history.ray_integral(lv(2 * k), 0, 1, nr)).sum::<f64>();
        total -= (0..half).map(|k| history.ray_integral(lv(2 * k + 1), nr, -1, nr)).sum::<f64>();
    } else {
        let half = (big_m - 1) / 2;
        total = history.p_plus0[nr - n0] + history.ray_integral(0, nr - n0, 1, n0);
        total += 2.0 * r1 * (0..=half).map(|k| eb1(lv(2 * k))).sum::<f64>();
        total -= 2.0 * r2 * (0..=half).map(|k| eb2(lv(2 * k + 1))).sum::<f64>();
        total += (1..=half).map(|k| history.ray_integral(lv(2 * k), 0, 1, nr)).sum::<f64>();
        total -= (0..=half).map(|k| history.ray_integral(lv(2 * k + 1), nr, -1, nr)).sum::<f64>();
    }
    let solver = history.solver_p_plus_r1(n);
    Ok(RecursionCheck {
        t,
        reflections: big_m,
        reconstructed: total,
        solver,
        gap: (total - solver).abs(),
    })
}
