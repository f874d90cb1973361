//! Manufactured-solution convergence study of the wave-variable field solver.
//!
//! The vector potential `A(t, r) = sin(r - 0.6 t) + 0.3 cos(0.5 r + 0.4 t)`
//! gives `r E_theta = -A_t` and `r B = A_r`; the matching current and wall
//! data drive the solver, and the error is measured at a fixed final time on
//! a sequence of grids.

use annulus_vm::domain::RadialGrid;
use annulus_vm::maxwell::{step_waves, WaveSources, WaveState};

fn a_t(t: f64, r: f64) -> f64 {
    -0.6 * (r - 0.6 * t).cos() - 0.12 * (0.5 * r + 0.4 * t).sin()
}

fn a_r(t: f64, r: f64) -> f64 {
    (r - 0.6 * t).cos() - 0.15 * (0.5 * r + 0.4 * t).sin()
}

fn a_tt(t: f64, r: f64) -> f64 {
    -0.36 * (r - 0.6 * t).sin() - 0.048 * (0.5 * r + 0.4 * t).cos()
}

fn a_rr(t: f64, r: f64) -> f64 {
    -(r - 0.6 * t).sin() - 0.075 * (0.5 * r + 0.4 * t).cos()
}

fn j_theta(t: f64, r: f64) -> f64 {
    (a_r(t, r) / r + a_tt(t, r) - a_rr(t, r)) / r
}

fn max_error(nr: usize, t_end: f64) -> annulus_vm::Result<f64> {
    let g = RadialGrid::uniform(1.0, 3.0, nr)?;
    let r = g.nodes().to_vec();
    let dt = g.dr;
    let steps = (t_end / dt).round() as usize;
    let mut w = WaveState {
        p_plus: r.iter().map(|&x| -a_t(0.0, x) + a_r(0.0, x)).collect(),
        p_minus: r.iter().map(|&x| -a_t(0.0, x) - a_r(0.0, x)).collect(),
        time: 0.0,
    };
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let j_old: Vec<f64> = r.iter().map(|&x| j_theta(t0, x)).collect();
        let j_new: Vec<f64> = r.iter().map(|&x| j_theta(t1, x)).collect();
        let b_old = w.b(&r);
        let walls = (-a_t(t1, 1.0), -a_t(t1, 3.0) / 3.0);
        let src = WaveSources {
            b_old: &b_old,
            j_old: &j_old,
            j_new: &j_new,
        };
        w = step_waves(&w, src, walls, &g, dt)?;
    }
    let t = steps as f64 * dt;
    Ok(r.iter()
        .enumerate()
        .map(|(i, &x)| {
            let ep = (w.p_plus[i] - (-a_t(t, x) + a_r(t, x))).abs();
            let em = (w.p_minus[i] - (-a_t(t, x) - a_r(t, x))).abs();
            ep.max(em)
        })
        .fold(0.0, f64::max))
}

fn main() -> annulus_vm::Result<()> {
    println!("{:>6} {:>12} {:>8}", "Nr", "max error", "ratio");
    let mut prev: Option<f64> = None;
    for nr in [32, 64, 128, 256, 512] {
        let e = max_error(nr, 0.78125)?;
        let ratio = prev.map(|p| format!("{:.2}", p / e)).unwrap_or_default();
        println!("{nr:>6} {e:>12.4e} {ratio:>8}");
        prev = Some(e);
    }
    Ok(())
}
