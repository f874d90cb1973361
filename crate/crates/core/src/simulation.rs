//! Coupled time stepping: moments, fields, then the distribution.

use std::sync::Arc;

use crate::config::{InitialKind, OracleChoice, PotentialChoice, RunConfig};
use crate::diagnostics::{
    bound_checks, boundary_flux, energy_densities, energy_identity_residual, measure, total_energy, BoundInputs,
    DiagnosticsRecord, EnergyHistory, EnergyProfiles, Margins,
};
use crate::domain::{
    build_grid, check_momentum_box, total_charge, BoundaryTraces, DistributionFunction, FieldState, InitialData,
    PhaseSpaceGrid, RadialGrid, RingProfile,
};
use crate::error::{Error, Result};
use crate::maxwell::{ampere_consistency, gauss_er, step_waves, step_waves_unchecked, FieldHistory, WaveSources, WaveState};
use crate::potential::{
    confinement_radius_bound, ExternalPotential, NormBundle, PotentialSpec, TabulatedProfile,
    TheoryConstants,
};
use crate::vlasov::{free_streaming_pushforward, moments, semi_lagrangian_step, Moments, SlOptions, StepExternal, StepFields};

/// Relative floor separating support from interpolation noise.
pub const SUPPORT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub t_end: f64,
    /// `dt / dr`.
    pub cfl: f64,
    /// Permit `cfl != 1`.
    pub allow_off_unit_cfl: bool,
    /// Self-consistent fields and the external field; off means free streaming.
    pub fields: bool,
    pub freeze_constants: bool,
    pub allow_undersized_box: bool,
    pub record_field_history: bool,
    pub compute_bounds: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            t_end: 0.0,
            cfl: 1.0,
            allow_off_unit_cfl: false,
            fields: true,
            freeze_constants: true,
            allow_undersized_box: false,
            record_field_history: false,
            compute_bounds: true,
        }
    }
}

/// Everything needed to start a run.
#[derive(Clone, Debug)]
pub struct Setup {
    pub init: InitialData,
    /// Analytic initial profile, when there is one.
    pub ring: Option<RingProfile>,
    pub potential: Option<PotentialSpec>,
    pub options: SimOptions,
}

impl Setup {
    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        &self.init.f0.grid
    }
}

/// Builds the run setup described by a configuration.
pub fn setup_from_config(cfg: &RunConfig, allow_off_unit_cfl: bool) -> Result<Setup> {
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(crate::config::ConfigError::Invalid(v).into());
    }
    let annulus = cfg.annulus_spec();
    let grid = build_grid(annulus, cfg.grid.nr, cfg.grid.np, cfg.grid.p_max)?;
    let i = &cfg.initial;
    let (f0, ring, m0) = match i.kind {
        InitialKind::Zero => (DistributionFunction::zeros(grid.clone(), 0.0), None, 0.0),
        InitialKind::Ring => {
            let mut ring = RingProfile::new(i.center_r, i.width_r, i.temperature, i.amplitude, i.m0);
            if i.modulation_modes > 0 && i.modulation_strength > 0.0 {
                ring = ring.with_seeded_modulation(cfg.run.seed, i.modulation_modes, i.modulation_strength);
            }
            (ring.sample(grid.clone())?, Some(ring), i.m0)
        }
    };
    let etheta0 = i.etheta0.sample(&grid.radial);
    let b0 = i.b0.sample(&grid.radial);
    let init = InitialData::new(f0, etheta0, b0, cfg.boundary.clone(), m0, i.lambda)?;
    let potential = match cfg.potential.kind {
        PotentialChoice::None => None,
        PotentialChoice::ExplicitCsc => Some(PotentialSpec::explicit_csc(annulus)),
        PotentialChoice::Tabulated => {
            let table = TabulatedProfile::new(
                cfg.potential.table_r.clone(),
                cfg.potential.table_psi.clone(),
                cfg.potential.divergence_floor,
            )?;
            Some(PotentialSpec::tabulated(annulus, table)?)
        }
    };
    if !allow_off_unit_cfl && cfg.time.cfl != 1.0 {
        return Err(Error::CflViolation {
            dt: cfg.time.cfl * grid.dr(),
            dr: grid.dr(),
        });
    }
    Ok(Setup {
        init,
        ring,
        potential,
        options: SimOptions {
            t_end: cfg.time.t_end,
            cfl: cfg.time.cfl,
            allow_off_unit_cfl,
            fields: cfg.run.fields && !wants_oracle(cfg),
            freeze_constants: cfg.potential.freeze_constants,
            allow_undersized_box: cfg.grid.allow_undersized_box,
            record_field_history: cfg.diagnostics.recursion && cfg.run.fields && !wants_oracle(cfg),
            compute_bounds: cfg.diagnostics.bounds,
        },
    })
}

/// Whether the configuration asks for the free-streaming comparison.
pub fn wants_oracle(cfg: &RunConfig) -> bool {
    cfg.diagnostics.oracle == OracleChoice::FreeStreaming
}

/// Aggregates over a finished run.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub steps: usize,
    pub leaks: usize,
    pub momentum_clips: usize,
    /// Largest per-step relative charge change after the fixer.
    pub max_step_drift: f64,
    /// Sum over steps of the relative charge error before the fixer.
    pub raw_drift_abs_sum: f64,
    /// Net relative charge error before the fixer, summed with sign.
    pub raw_drift_net: f64,
    pub max_fixer_deviation: f64,
    pub min_margin: f64,
    pub min_distance: f64,
    pub max_energy_gap: f64,
    pub max_identity_residual: f64,
    pub violated: Vec<String>,
}

impl RunStats {
    pub fn healthy(&self) -> bool {
        self.violated.is_empty() && self.leaks == 0
    }
}

pub struct Simulation {
    grid: Arc<PhaseSpaceGrid>,
    init: InitialData,
    ring: Option<RingProfile>,
    options: SimOptions,
    constants: TheoryConstants,
    external: Option<ExternalPotential>,
    csc_bound_at: bool,
    bound_inputs: BoundInputs,
    dt: f64,
    n_steps: usize,
    step: usize,
    f: DistributionFunction,
    fields: FieldState,
    waves: WaveState,
    mom: Moments,
    er_prev: Vec<f64>,
    j_theta_prev: Vec<f64>,
    energy_prev: EnergyProfiles,
    energy: EnergyHistory,
    history: Option<FieldHistory>,
    records: Vec<DiagnosticsRecord>,
    stats: RunStats,
    charge0: f64,
}

impl Simulation {
    pub fn new(setup: Setup) -> Result<Self> {
        let Setup {
            init,
            ring,
            potential,
            options,
        } = setup;
        let grid = init.f0.grid.clone();
        let radial = grid.radial.clone();
        let norms = NormBundle::from_initial(&init);
        let mut constants = TheoryConstants::new(grid.annulus, norms);
        if options.freeze_constants {
            constants = constants.frozen_at(options.t_end);
        }
        let end = constants.snapshot(options.t_end);
        check_momentum_box(&grid, end.momentum_bound(init.m0), options.allow_undersized_box)?;

        if !(options.cfl > 0.0 && options.cfl <= 1.0) {
            return Err(Error::CflViolation {
                dt: options.cfl * radial.dr,
                dr: radial.dr,
            });
        }
        if options.cfl != 1.0 && !options.allow_off_unit_cfl {
            return Err(Error::CflViolation {
                dt: options.cfl * radial.dr,
                dr: radial.dr,
            });
        }
        let dt = if options.cfl == 1.0 { radial.dr } else { options.cfl * radial.dr };
        let n_steps = (options.t_end / dt - 1e-9).ceil().max(0.0) as usize;

        let external = match (&potential, options.fields) {
            (Some(spec), true) => Some(ExternalPotential::new(spec.clone(), constants.clone())),
            _ => None,
        };
        let csc_bound_at = external.as_ref().map(|e| e.spec().is_explicit()).unwrap_or(false);

        let f = init.f0.clone();
        let mom = moments(&f);
        let n = radial.len();
        let fields = if options.fields {
            FieldState {
                er: gauss_er(&mom.rho, init.lambda, &radial),
                etheta: init.etheta0.clone(),
                b: init.b0.clone(),
                time: 0.0,
                lambda: init.lambda,
            }
        } else {
            FieldState::zeros(n, 0.0, 0.0)
        };
        let waves = WaveState::from_fields(&fields, &radial);
        let history = if options.record_field_history && options.fields {
            let mut h = FieldHistory::new(&radial, &waves, init.boundary.clone(), dt);
            h.push(&waves, &mom.j_theta);
            Some(h)
        } else {
            None
        };
        let charge0 = total_charge(&f);
        let bound_inputs = BoundInputs {
            annulus: grid.annulus,
            f0_l1: norms.f0_l1,
            f0_sup: init.f0.sup_norm(),
            lambda: init.lambda,
            m0: init.m0,
            support_threshold: SUPPORT_FLOOR * init.f0.sup_norm(),
            confined: external.is_some(),
        };
        let energy_prev = energy_densities(&f, &fields);
        let mut sim = Self {
            grid,
            er_prev: fields.er.clone(),
            j_theta_prev: mom.j_theta.clone(),
            init,
            ring,
            options,
            constants,
            external,
            csc_bound_at,
            bound_inputs,
            dt,
            n_steps,
            step: 0,
            f,
            fields,
            waves,
            mom,
            energy_prev,
            energy: EnergyHistory::default(),
            history,
            records: Vec::new(),
            stats: RunStats {
                min_margin: f64::INFINITY,
                min_distance: f64::INFINITY,
                ..RunStats::default()
            },
            charge0,
        };
        let rec = sim.diagnose(0.0, 1.0, 0, 0, 0.0, 0.0);
        sim.absorb(rec);
        Ok(sim)
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        &self.grid
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.grid.radial
    }

    pub fn initial(&self) -> &InitialData {
        &self.init
    }

    pub fn ring(&self) -> Option<&RingProfile> {
        self.ring.as_ref()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.f.time
    }

    pub fn distribution(&self) -> &DistributionFunction {
        &self.f
    }

    pub fn fields(&self) -> &FieldState {
        &self.fields
    }

    pub fn waves(&self) -> &WaveState {
        &self.waves
    }

    pub fn moments(&self) -> &Moments {
        &self.mom
    }

    pub fn constants(&self) -> &TheoryConstants {
        &self.constants
    }

    pub fn external(&self) -> Option<&ExternalPotential> {
        self.external.as_ref()
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn energy_history(&self) -> &EnergyHistory {
        &self.energy
    }

    pub fn field_history(&self) -> Option<&FieldHistory> {
        self.history.as_ref()
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn boundary(&self) -> &BoundaryTraces {
        &self.init.boundary
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }

    /// Advances one step and returns its diagnostics.
    pub fn step(&mut self) -> Result<&DiagnosticsRecord> {
        let dt = self.dt;
        let t_old = self.f.time;
        let t_new = t_old + dt;
        let radial = self.grid.radial.clone();
        let r = radial.nodes();

        let predicted = if self.options.fields {
            let j_old = &self.mom.j_theta;
            let j_new: Vec<f64> = j_old
                .iter()
                .zip(&self.j_theta_prev)
                .map(|(a, b)| 2.0 * a - b)
                .collect();
            let src = WaveSources {
                b_old: &self.fields.b,
                j_old,
                j_new: &j_new,
            };
            let eb = self.init.boundary.eval(t_new);
            let w = if self.options.cfl == 1.0 {
                step_waves(&self.waves, src, eb, &radial, dt)?
            } else {
                step_waves_unchecked(&self.waves, src, eb, &radial, dt)
            };
            self.waves = w;
            let er_pred: Vec<f64> = self
                .fields
                .er
                .iter()
                .zip(&self.er_prev)
                .map(|(a, b)| 2.0 * a - b)
                .collect();
            FieldState {
                er: er_pred,
                etheta: self.waves.etheta(r),
                b: self.waves.b(r),
                time: t_new,
                lambda: self.init.lambda,
            }
        } else {
            FieldState::zeros(r.len(), 0.0, t_new)
        };

        let ext_new = self.external.as_ref().map(|e| e.at(t_new));
        let ext_mid = self.external.as_ref().map(|e| e.at(t_old + 0.5 * dt));
        let external = match (&ext_new, &ext_mid) {
            (Some(n), Some(m)) => Some(StepExternal { new: n, mid: m }),
            _ => None,
        };
        let out = semi_lagrangian_step(
            &self.f,
            StepFields {
                old: &self.fields,
                new: &predicted,
            },
            external,
            dt,
            SlOptions {
                support_threshold: self.bound_inputs.support_threshold,
            },
        );
        let raw_drift = out.raw_drift();
        let fixer = out.fixer_factor;
        let (leaks, clips) = (out.leaks, out.momentum_clips);
        let charge_before = out.charge_before;
        self.f = out.f;

        let mom_new = moments(&self.f);
        let er_old = std::mem::take(&mut self.fields.er);
        let mut fields_new = predicted;
        if self.options.fields {
            fields_new.er = gauss_er(&mom_new.rho, self.init.lambda, &radial);
        }
        let j_r_mid: Vec<f64> = self.mom.j_r.iter().zip(&mom_new.j_r).map(|(a, b)| 0.5 * (a + b)).collect();
        let ampere = if self.options.fields {
            ampere_consistency(&er_old, &fields_new.er, &j_r_mid, dt)
        } else {
            0.0
        };
        self.er_prev = er_old;
        self.j_theta_prev = std::mem::replace(&mut self.mom, mom_new).j_theta;
        self.fields = fields_new;
        if let Some(h) = self.history.as_mut() {
            h.push(&self.waves, &self.mom.j_theta);
        }
        self.step += 1;
        let step_drift = if charge_before > 0.0 {
            (total_charge(&self.f) - charge_before) / charge_before
        } else {
            0.0
        };
        let rec = self.diagnose(raw_drift, fixer, leaks, clips, ampere, step_drift);
        self.absorb(rec);
        Ok(self.records.last().unwrap())
    }

    fn diagnose(&mut self, raw_drift: f64, fixer: f64, leaks: usize, clips: usize, ampere: f64, step_drift: f64) -> DiagnosticsRecord {
        let t = self.f.time;
        let radial = &self.grid.radial;
        let charge = total_charge(&self.f);
        let ep = energy_densities(&self.f, &self.fields);
        let identity = if self.step > 0 {
            energy_identity_residual(&self.energy_prev, &ep, radial, self.dt)
        } else {
            0.0
        };
        let flux = boundary_flux(radial, self.init.boundary.eval(t), &self.fields.b);
        self.energy.push(t, total_energy(&ep.e, radial), flux);
        self.energy_prev = ep;
        let k = self.energy.len() - 1;

        let snap = self.constants.snapshot(t);
        let measured = measure(&self.f, &self.fields, &self.mom, self.bound_inputs.support_threshold);
        let margins = if self.options.compute_bounds {
            let csc = if self.csc_bound_at {
                self.external
                    .as_ref()
                    .and_then(|e| confinement_radius_bound(e.spec(), &self.constants, t).ok())
            } else {
                None
            };
            bound_checks(&measured, &snap, &self.bound_inputs, csc.as_ref())
        } else {
            Margins::default()
        };
        let _ = step_drift;
        DiagnosticsRecord {
            step: self.step,
            time: t,
            total_charge: charge,
            charge_drift: if self.charge0 > 0.0 {
                (charge - self.charge0) / self.charge0
            } else {
                0.0
            },
            raw_drift,
            fixer_factor: fixer,
            total_energy: self.energy.energy[k],
            boundary_flux_accum: self.energy.flux_accum[k],
            energy_gap: self.energy.gap(k),
            energy_identity_residual: identity,
            ampere_residual: ampere,
            measured,
            margins,
            leaks,
            momentum_clips: clips,
            f_max: self.f.sup_norm(),
            f_min: self.f.min_value(),
            l_bar: self.external.as_ref().map(|e| e.moving_bar(t)).unwrap_or(0.0),
            c: snap.c,
            c_tilde: snap.c_tilde,
            k: snap.k,
        }
    }

    fn absorb(&mut self, rec: DiagnosticsRecord) {
        let s = &mut self.stats;
        if rec.step > 0 {
            s.steps = rec.step;
            s.leaks += rec.leaks;
            s.momentum_clips += rec.momentum_clips;
            let prev = self.records.last().map(|r| r.total_charge).unwrap_or(rec.total_charge);
            if prev > 0.0 {
                s.max_step_drift = s.max_step_drift.max(((rec.total_charge - prev) / prev).abs());
            }
            s.raw_drift_abs_sum += rec.raw_drift.abs();
            s.raw_drift_net += rec.raw_drift;
            s.max_fixer_deviation = s.max_fixer_deviation.max((rec.fixer_factor - 1.0).abs());
            s.max_identity_residual = s.max_identity_residual.max(rec.energy_identity_residual);
        }
        s.max_energy_gap = s.max_energy_gap.max(rec.energy_gap);
        s.min_distance = s.min_distance.min(rec.measured.distance);
        if self.options.compute_bounds {
            s.min_margin = s.min_margin.min(rec.margins.min());
            for name in rec.margins.violated() {
                let tag = format!("{name}@step{}", rec.step);
                if s.violated.len() < 64 {
                    s.violated.push(tag);
                }
            }
        }
        self.records.push(rec);
    }

    /// Runs to the end, calling `observe` after every step.
    pub fn run_with<F>(&mut self, mut observe: F) -> Result<()>
    where
        F: FnMut(&Simulation, &DiagnosticsRecord) -> Result<()>,
    {
        let first = self.records[0].clone();
        observe(self, &first)?;
        while !self.done() {
            let rec = self.step()?.clone();
            observe(self, &rec)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_, _| Ok(()))
    }

    /// Max-norm distance from the exact straight-line pushforward of the
    /// analytic initial profile; `None` without one.
    pub fn free_streaming_error(&self) -> Option<f64> {
        let ring = self.ring.as_ref()?;
        let exact = free_streaming_pushforward(self.grid.clone(), |r, pr, pt| ring.eval(r, pr, pt), self.f.time);
        Some(
            exact
                .values
                .iter()
                .zip(&self.f.values)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
        )
    }
}
