use std::sync::Arc;

use rayon::prelude::*;

use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};

/// Nodal values of `f(t, r, p_r, p_theta)` at one time level.
#[derive(Clone, Debug)]
pub struct DistributionFunction {
    pub grid: Arc<PhaseSpaceGrid>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DistributionFunction {
    pub fn zeros(grid: Arc<PhaseSpaceGrid>, time: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            time,
        }
    }

    pub fn from_values(grid: Arc<PhaseSpaceGrid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "distribution has {} values but the grid holds {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `g(r, p_r, p_theta)` at every node.
    pub fn from_fn<G>(grid: Arc<PhaseSpaceGrid>, time: f64, g: G) -> Self
    where
        G: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let slab = grid.slab();
        let np = grid.np;
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(ir, chunk)| {
                let r = grid.r_nodes()[ir];
                for ipr in 0..np {
                    let pr = grid.p_nodes()[ipr];
                    for ipt in 0..np {
                        chunk[ipr * np + ipt] = g(r, pr, grid.p_nodes()[ipt]);
                    }
                }
            });
        Self { grid, values, time }
    }

    #[inline]
    pub fn get(&self, ir: usize, ipr: usize, ipt: usize) -> f64 {
        self.values[self.grid.index(ir, ipr, ipt)]
    }

    pub fn slab(&self, ir: usize) -> &[f64] {
        let s = self.grid.slab();
        &self.values[ir * s..(ir + 1) * s]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|f|` on the radial walls and on the momentum-box edge.
    pub fn boundary_max(&self) -> f64 {
        let g = &self.grid;
        let np = g.np;
        let mut m = 0.0_f64;
        for ir in [0, g.nr()] {
            m = self.slab(ir).iter().fold(m, |a, v| a.max(v.abs()));
        }
        for ir in 0..=g.nr() {
            let s = self.slab(ir);
            for ipr in 0..np {
                for ipt in 0..np {
                    if g.on_momentum_edge(ipr, ipt) {
                        m = m.max(s[ipr * np + ipt].abs());
                    }
                }
            }
        }
        m
    }

    /// Radial interval spanned by nodes with `f > threshold`.
    pub fn radial_support(&self, threshold: f64) -> Option<(f64, f64)> {
        let g = &self.grid;
        let occupied: Vec<usize> = (0..=g.nr())
            .filter(|&ir| self.slab(ir).iter().any(|&v| v > threshold))
            .collect();
        let lo = *occupied.first()?;
        let hi = *occupied.last()?;
        Some((g.r_nodes()[lo], g.r_nodes()[hi]))
    }

    /// Largest `|p|` over nodes with `f > threshold`; zero for empty support.
    pub fn momentum_support_radius(&self, threshold: f64) -> f64 {
        let g = &self.grid;
        let np = g.np;
        let p = g.p_nodes();
        let mut m = 0.0_f64;
        for ir in 0..=g.nr() {
            let s = self.slab(ir);
            for ipr in 0..np {
                for ipt in 0..np {
                    if s[ipr * np + ipt] > threshold {
                        m = m.max(p[ipr].hypot(p[ipt]));
                    }
                }
            }
        }
        m
    }
}

/// `∬ f r dr dp` by the trapezoid rule on every axis.
pub fn total_charge(f: &DistributionFunction) -> f64 {
    let g = &f.grid;
    let wr = g.radial.trapezoid_weights();
    let wp = g.p_weights();
    let np = g.np;
    (0..=g.nr())
        .into_par_iter()
        .map(|ir| {
            let s = f.slab(ir);
            let mut acc = 0.0;
            for ipr in 0..np {
                let row = &s[ipr * np..(ipr + 1) * np];
                let inner: f64 = row.iter().zip(&wp).map(|(v, w)| v * w).sum();
                acc += wp[ipr] * inner;
            }
            wr[ir] * g.r_nodes()[ir] * acc
        })
        .sum()
}

/// Radial profiles of `E_r`, `E_theta`, `B` at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub er: Vec<f64>,
    pub etheta: Vec<f64>,
    pub b: Vec<f64>,
    pub time: f64,
    pub lambda: f64,
}

impl FieldState {
    pub fn zeros(n: usize, lambda: f64, time: f64) -> Self {
        Self {
            er: vec![0.0; n],
            etheta: vec![0.0; n],
            b: vec![0.0; n],
            time,
            lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.er.len()
    }

    pub fn is_empty(&self) -> bool {
        self.er.is_empty()
    }

    pub fn check_shape(&self, n: usize) -> Result<()> {
        if self.er.len() != n || self.etheta.len() != n || self.b.len() != n {
            return Err(Error::Shape(format!(
                "field profiles have lengths ({}, {}, {}) but the grid has {n} nodes",
                self.er.len(),
                self.etheta.len(),
                self.b.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid::{build_grid, AnnulusSpec};

    fn grid() -> Arc<PhaseSpaceGrid> {
        build_grid(AnnulusSpec::new(1.0, 3.0, 0.5, 0.25).unwrap(), 16, 9, 2.0).unwrap()
    }

    #[test]
    fn zero_has_zero_charge() {
        assert_eq!(total_charge(&DistributionFunction::zeros(grid(), 0.0)), 0.0);
    }

    #[test]
    fn constant_box_charge_is_exact() {
        let g = grid();
        let c = 0.75;
        let f = DistributionFunction::from_fn(g.clone(), 0.0, |_, _, _| c);
        let exact = c * 0.5 * (9.0 - 1.0) * 16.0;
        assert!((total_charge(&f) - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn support_scans() {
        let g = grid();
        let f = DistributionFunction::from_fn(g, 0.0, |r, pr, pt| {
            if (1.75..=2.25).contains(&r) && pr.abs() <= 1.0 && pt == 0.0 {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(f.radial_support(0.0), Some((1.75, 2.25)));
        assert_eq!(f.momentum_support_radius(0.0), 1.0);
        assert_eq!(f.boundary_max(), 0.0);
        assert_eq!(DistributionFunction::zeros(grid(), 0.0).radial_support(0.0), None);
    }

    #[test]
    fn shape_checked() {
        assert!(DistributionFunction::from_values(grid(), vec![0.0; 3], 0.0).is_err());
        assert!(FieldState::zeros(5, 0.0, 0.0).check_shape(6).is_err());
    }
}
