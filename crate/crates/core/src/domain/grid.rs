use std::sync::Arc;

use crate::error::{Error, Result};

/// The annulus `r1 < |x| < r2` together with the two support margins.
///
/// `delta0` is the distance of the initial spatial support from the walls and
/// `delta` the distance the plasma must keep for all time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusSpec {
    pub r1: f64,
    pub r2: f64,
    pub delta0: f64,
    pub delta: f64,
}

impl AnnulusSpec {
    pub fn new(r1: f64, r2: f64, delta0: f64, delta: f64) -> Result<Self> {
        let spec = Self {
            r1,
            r2,
            delta0,
            delta,
        };
        let violations = spec.violations();
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidAnnulus(violations.join("; ")))
        }
    }

    /// Every violated invariant, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [self.r1, self.r2, self.delta0, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            out.push("annulus parameters must be finite".to_string());
            return out;
        }
        if self.r1 <= 0.0 {
            out.push(format!("inner radius r1 = {} must be positive", self.r1));
        }
        if self.r2 <= self.r1 {
            out.push(format!(
                "outer radius r2 = {} must exceed inner radius r1 = {}",
                self.r2, self.r1
            ));
        }
        let half = 0.5 * (self.r2 - self.r1);
        if !(self.delta0 > 0.0 && self.delta0 < half) {
            out.push(format!(
                "initial support margin delta0 = {} must satisfy 0 < delta0 < (r2 - r1)/2 = {}",
                self.delta0, half
            ));
        }
        if !(self.delta > 0.0 && self.delta < self.delta0) {
            out.push(format!(
                "confinement margin delta = {} must satisfy 0 < delta < delta0 = {}",
                self.delta, self.delta0
            ));
        }
        out
    }

    /// Median radius `(r1 + r2) / 2`.
    pub fn r_m(&self) -> f64 {
        0.5 * (self.r1 + self.r2)
    }

    pub fn width(&self) -> f64 {
        self.r2 - self.r1
    }

    /// The interval `[r1 + delta0, r2 - delta0]` holding the initial support.
    pub fn initial_support(&self) -> (f64, f64) {
        (self.r1 + self.delta0, self.r2 - self.delta0)
    }

    pub fn contains_open(&self, r: f64) -> bool {
        r > self.r1 && r < self.r2
    }
}

/// Uniform nodes `r1 = r_0 < ... < r_nr = r2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub r1: f64,
    pub r2: f64,
    pub nr: usize,
    pub dr: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(r1: f64, r2: f64, nr: usize) -> Result<Self> {
        if nr < 2 {
            return Err(Error::InvalidGrid(format!(
                "radial cell count {nr} must be at least 2"
            )));
        }
        if !(r1.is_finite() && r2.is_finite() && r2 > r1) {
            return Err(Error::InvalidGrid(format!(
                "radial interval [{r1}, {r2}] must be finite with r1 < r2"
            )));
        }
        let dr = (r2 - r1) / nr as f64;
        if dr <= 0.0 {
            return Err(Error::InvalidGrid(format!("non-positive spacing dr = {dr}")));
        }
        let mut nodes: Vec<f64> = (0..=nr).map(|i| r1 + i as f64 * dr).collect();
        nodes[nr] = r2;
        Ok(Self {
            r1,
            r2,
            nr,
            dr,
            nodes,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Composite trapezoid weights over the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len(), self.dr)
    }

    /// `∫ r v(r) dr` by the trapezoid rule.
    pub fn integrate_with_r(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let w = self.trapezoid_weights();
        self.nodes
            .iter()
            .zip(values)
            .zip(&w)
            .map(|((r, v), w)| w * r * v)
            .sum()
    }

    /// Index of the node nearest to `r`, clamped to the grid.
    pub fn nearest(&self, r: f64) -> usize {
        let x = ((r - self.r1) / self.dr).round();
        x.clamp(0.0, self.nr as f64) as usize
    }
}

/// Trapezoid weights for `n` uniformly spaced nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Momentum nodes `(j - mid) * dp`, closed under `p -> -p`.
pub fn momentum_nodes(np: usize, p_max: f64) -> Result<(Vec<f64>, f64)> {
    if np < 3 || np % 2 == 0 {
        return Err(Error::InvalidGrid(format!(
            "momentum node count {np} must be odd and at least 3"
        )));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "momentum half-width p_max = {p_max} must be positive"
        )));
    }
    let mid = (np - 1) / 2;
    let dp = p_max / mid as f64;
    let mut nodes: Vec<f64> = (0..np)
        .map(|j| (j as f64 - mid as f64) * dp)
        .collect();
    nodes[0] = -p_max;
    nodes[np - 1] = p_max;
    Ok((nodes, dp))
}

/// Uniform tensor grid over `(r, p_r, p_theta)`.
///
/// Values are stored with `p_theta` fastest, then `p_r`, then `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub annulus: AnnulusSpec,
    pub radial: RadialGrid,
    pub np: usize,
    pub p_max: f64,
    pub dp: f64,
    p_nodes: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn nr(&self) -> usize {
        self.radial.nr
    }

    pub fn dr(&self) -> f64 {
        self.radial.dr
    }

    pub fn r_nodes(&self) -> &[f64] {
        self.radial.nodes()
    }

    pub fn p_nodes(&self) -> &[f64] {
        &self.p_nodes
    }

    /// Number of momentum nodes in one radial slab.
    pub fn slab(&self) -> usize {
        self.np * self.np
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.slab()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ir: usize, ipr: usize, ipt: usize) -> usize {
        (ir * self.np + ipr) * self.np + ipt
    }

    pub fn p_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.np, self.dp)
    }

    /// True when `(ipr, ipt)` lies on the edge of the momentum box.
    pub fn on_momentum_edge(&self, ipr: usize, ipt: usize) -> bool {
        ipr == 0 || ipt == 0 || ipr + 1 == self.np || ipt + 1 == self.np
    }
}

/// Builds the phase-space grid.
///
/// Requires `nr >= 8`, `np >= 8` odd and `p_max > 0`.
pub fn build_grid(annulus: AnnulusSpec, nr: usize, np: usize, p_max: f64) -> Result<Arc<PhaseSpaceGrid>> {
    let violations = annulus.violations();
    if !violations.is_empty() {
        return Err(Error::InvalidAnnulus(violations.join("; ")));
    }
    if nr < 8 {
        return Err(Error::InvalidGrid(format!("radial cell count {nr} must be at least 8")));
    }
    if np < 8 {
        return Err(Error::InvalidGrid(format!("momentum node count {np} must be at least 8")));
    }
    let radial = RadialGrid::uniform(annulus.r1, annulus.r2, nr)?;
    let (p_nodes, dp) = momentum_nodes(np, p_max)?;
    Ok(Arc::new(PhaseSpaceGrid {
        annulus,
        radial,
        np,
        p_max,
        dp,
        p_nodes,
    }))
}

/// Compares the box half-width with the provable momentum-support radius.
///
/// With `allow_undersized` the shortfall is only logged.
pub fn check_momentum_box(grid: &PhaseSpaceGrid, support_bound: f64, allow_undersized: bool) -> Result<()> {
    if grid.p_max >= support_bound {
        return Ok(());
    }
    if allow_undersized {
        log::warn!(
            "momentum box half-width {} is below the provable support bound {:.6e}; continuing as requested",
            grid.p_max,
            support_bound
        );
        Ok(())
    } else {
        Err(Error::MomentumBoxTooSmall {
            p_max: grid.p_max,
            bound: support_bound,
        })
    }
}
