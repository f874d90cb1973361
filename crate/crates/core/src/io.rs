//! CSV artifacts: diagnostics stream, field snapshots, final state and the
//! failure marker.
//!
//! Every numeric cell is written with [`sci`], so identical runs produce
//! byte-identical files.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::diagnostics::{sci, DiagnosticsRecord};
use crate::domain::{DistributionFunction, FieldState, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::maxwell::WaveState;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FIELDS_FILE: &str = "fields.csv";
pub const FINAL_F_FILE: &str = "final_f.csv";
pub const FINAL_FIELDS_FILE: &str = "final_fields.csv";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const CONFIG_ECHO_FILE: &str = "config.toml";
pub const FAILED_MARKER: &str = "FAILED";

pub const FIELDS_HEADER: [&str; 7] = ["t", "r", "E_r", "E_theta", "B", "P_plus", "P_minus"];
pub const FINAL_F_HEADER: [&str; 8] = ["t", "ir", "ipr", "iptheta", "r", "pr", "ptheta", "f"];
pub const ORACLE_HEADER: [&str; 5] = ["t", "max_abs_error", "f0_sup", "relative_error", "grid"];

/// Output directory for one run.
#[derive(Clone, Debug)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        fs::create_dir_all(&path)?;
        let marker = path.join(FAILED_MARKER);
        if marker.exists() {
            fs::remove_file(marker)?;
        }
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Marks the artifacts in this directory as partial.
    pub fn mark_failed(&self, reason: &str) -> Result<()> {
        fs::write(self.file(FAILED_MARKER), format!("{reason}\n"))?;
        Ok(())
    }
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

pub struct DiagnosticsWriter {
    inner: csv::Writer<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            inner: writer(path, &DiagnosticsRecord::HEADER)?,
        })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.inner.write_record(rec.row())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub struct FieldsWriter {
    inner: csv::Writer<File>,
}

impl FieldsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            inner: writer(path, &FIELDS_HEADER)?,
        })
    }

    pub fn write(&mut self, r: &[f64], fields: &FieldState, waves: &WaveState) -> Result<()> {
        write_field_rows(&mut self.inner, r, fields, waves)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn write_field_rows(w: &mut csv::Writer<File>, r: &[f64], fields: &FieldState, waves: &WaveState) -> Result<()> {
    for i in 0..r.len() {
        w.write_record([
            sci(fields.time),
            sci(r[i]),
            sci(fields.er[i]),
            sci(fields.etheta[i]),
            sci(fields.b[i]),
            sci(waves.p_plus[i]),
            sci(waves.p_minus[i]),
        ])?;
    }
    Ok(())
}

/// Writes the nonzero entries of `f`.
pub fn write_final_f(path: &Path, f: &DistributionFunction) -> Result<()> {
    let g = &f.grid;
    let mut w = writer(path, &FINAL_F_HEADER)?;
    let (r, p) = (g.r_nodes(), g.p_nodes());
    for ir in 0..g.radial.len() {
        for ipr in 0..g.np {
            for ipt in 0..g.np {
                let v = f.get(ir, ipr, ipt);
                if v != 0.0 {
                    w.write_record([
                        sci(f.time),
                        ir.to_string(),
                        ipr.to_string(),
                        ipt.to_string(),
                        sci(r[ir]),
                        sci(p[ipr]),
                        sci(p[ipt]),
                        sci(v),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_final_fields(path: &Path, r: &[f64], fields: &FieldState, waves: &WaveState) -> Result<()> {
    let mut w = writer(path, &FIELDS_HEADER)?;
    write_field_rows(&mut w, r, fields, waves)?;
    w.flush()?;
    Ok(())
}

/// Writes one `p_theta` slice of `f` as a matrix with rows over `r` and
/// columns over `p_r`.
pub fn write_f_slice(path: &Path, f: &DistributionFunction, ipt: usize) -> Result<()> {
    let g = &f.grid;
    if ipt >= g.np {
        return Err(Error::Shape(format!("p_theta index {ipt} out of range 0..{}", g.np)));
    }
    let mut header = vec!["r".to_string()];
    header.extend(g.p_nodes().iter().map(|p| format!("pr={}", sci(*p))));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for ir in 0..g.radial.len() {
        let mut row = vec![sci(g.r_nodes()[ir])];
        row.extend((0..g.np).map(|ipr| sci(f.get(ir, ipr, ipt))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line of the free-streaming comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleComparison {
    pub t: f64,
    pub max_abs_error: f64,
    pub f0_sup: f64,
}

impl OracleComparison {
    pub fn relative(&self) -> f64 {
        if self.f0_sup > 0.0 {
            self.max_abs_error / self.f0_sup
        } else {
            self.max_abs_error
        }
    }
}

pub fn write_oracle(path: &Path, cmp: &OracleComparison, grid: &PhaseSpaceGrid) -> Result<()> {
    let mut w = writer(path, &ORACLE_HEADER)?;
    w.write_record([
        sci(cmp.t),
        sci(cmp.max_abs_error),
        sci(cmp.f0_sup),
        sci(cmp.relative()),
        format!("{}x{}x{}", grid.nr(), grid.np, grid.np),
    ])?;
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Snapshot(format!("cannot parse {what} from {s:?}")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Snapshot(format!("cannot parse {what} from {s:?}")))
}

fn check_header(r: &mut csv::Reader<File>, expected: &[&str], path: &Path) -> Result<()> {
    let h = r.headers()?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(Error::Snapshot(format!("{}: unexpected header {:?}", path.display(), h)));
    }
    Ok(())
}

/// Reads a final distribution written by [`write_final_f`] onto `grid`.
pub fn read_final_f(path: &Path, grid: Arc<PhaseSpaceGrid>) -> Result<DistributionFunction> {
    let mut rd = csv::Reader::from_path(path)?;
    check_header(&mut rd, &FINAL_F_HEADER, path)?;
    let mut f = DistributionFunction::zeros(grid.clone(), 0.0);
    let mut time = None;
    for rec in rd.records() {
        let rec = rec?;
        let t = parse_f64(&rec[0], "t")?;
        let (ir, ipr, ipt) = (
            parse_usize(&rec[1], "ir")?,
            parse_usize(&rec[2], "ipr")?,
            parse_usize(&rec[3], "iptheta")?,
        );
        if ir >= grid.radial.len() || ipr >= grid.np || ipt >= grid.np {
            return Err(Error::Snapshot(format!(
                "index ({ir}, {ipr}, {ipt}) outside grid {}x{}x{}",
                grid.nr(),
                grid.np,
                grid.np
            )));
        }
        let r = parse_f64(&rec[4], "r")?;
        if (r - grid.r_nodes()[ir]).abs() > 1e-9 * grid.r_nodes()[ir].abs().max(1.0) {
            return Err(Error::Snapshot(format!("node r = {r} does not match the configured grid")));
        }
        f.values[grid.index(ir, ipr, ipt)] = parse_f64(&rec[7], "f")?;
        time = Some(t);
    }
    f.time = time.unwrap_or(0.0);
    Ok(f)
}

/// Reads final fields and waves written by [`write_final_fields`].
pub fn read_final_fields(path: &Path, n: usize, lambda: f64) -> Result<(FieldState, WaveState)> {
    let mut rd = csv::Reader::from_path(path)?;
    check_header(&mut rd, &FIELDS_HEADER, path)?;
    let mut fields = FieldState::zeros(n, lambda, 0.0);
    let mut waves = WaveState::zeros(n, 0.0);
    let mut count = 0;
    for rec in rd.records() {
        let rec = rec?;
        if count >= n {
            return Err(Error::Snapshot(format!("more than {n} field rows")));
        }
        let t = parse_f64(&rec[0], "t")?;
        fields.time = t;
        waves.time = t;
        fields.er[count] = parse_f64(&rec[2], "E_r")?;
        fields.etheta[count] = parse_f64(&rec[3], "E_theta")?;
        fields.b[count] = parse_f64(&rec[4], "B")?;
        waves.p_plus[count] = parse_f64(&rec[5], "P_plus")?;
        waves.p_minus[count] = parse_f64(&rec[6], "P_minus")?;
        count += 1;
    }
    if count != n {
        return Err(Error::Snapshot(format!("expected {n} field rows, found {count}")));
    }
    Ok((fields, waves))
}

/// Reads the radial columns of a diagnostics or fields CSV into memory.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in rd.records() {
        let rec = rec?;
        for (c, s) in cols.iter_mut().zip(rec.iter()) {
            c.push(s.trim().parse().unwrap_or(f64::NAN));
        }
    }
    Ok((header, cols))
}

/// Result of [`run_to_dir`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub stats: crate::simulation::RunStats,
    pub oracle: Option<OracleComparison>,
    pub final_time: f64,
}

impl RunReport {
    /// Zero exactly when no margin went negative and nothing leaked.
    pub fn exit_code(&self) -> i32 {
        if self.stats.healthy() {
            0
        } else {
            1
        }
    }
}

/// Runs a configuration and writes every artifact into `dir`.
///
/// On error the partial artifacts are kept next to a `FAILED` marker.
pub fn run_to_dir(cfg: &crate::config::RunConfig, dir: &Path, allow_off_unit_cfl: bool) -> Result<RunReport> {
    let out = RunDir::create(dir)?;
    let res = run_inner(cfg, &out, allow_off_unit_cfl);
    if let Err(e) = &res {
        out.mark_failed(&e.to_string())?;
    } else if let Ok(rep) = &res {
        if !rep.stats.healthy() {
            let mut why = rep.stats.violated.join(", ");
            if rep.stats.leaks > 0 {
                why = format!("{} leaks; {why}", rep.stats.leaks);
            }
            out.mark_failed(&why)?;
        }
    }
    res
}

fn run_inner(cfg: &crate::config::RunConfig, out: &RunDir, allow_off_unit_cfl: bool) -> Result<RunReport> {
    use crate::simulation::{setup_from_config, wants_oracle, Simulation};

    fs::write(out.file(CONFIG_ECHO_FILE), cfg.to_toml()?)?;
    let setup = setup_from_config(cfg, allow_off_unit_cfl)?;
    let mut sim = Simulation::new(setup)?;
    let cadence = cfg.output.cadence.max(1);
    let mut diag = DiagnosticsWriter::create(&out.file(DIAGNOSTICS_FILE))?;
    let mut fields = if cfg.output.fields {
        Some(FieldsWriter::create(&out.file(FIELDS_FILE))?)
    } else {
        None
    };
    let n_steps = sim.n_steps();
    let result = sim.run_with(|s, rec| {
        if rec.step % cadence == 0 || rec.step == n_steps {
            diag.write(rec)?;
            if let Some(w) = fields.as_mut() {
                w.write(s.radial().nodes(), s.fields(), s.waves())?;
            }
        }
        Ok(())
    });
    diag.flush()?;
    if let Some(w) = fields.as_mut() {
        w.flush()?;
    }
    result?;
    if cfg.output.final_snapshot {
        write_final_f(&out.file(FINAL_F_FILE), sim.distribution())?;
        write_final_fields(&out.file(FINAL_FIELDS_FILE), sim.radial().nodes(), sim.fields(), sim.waves())?;
    }
    let oracle = if wants_oracle(cfg) {
        sim.free_streaming_error().map(|err| OracleComparison {
            t: sim.time(),
            max_abs_error: err,
            f0_sup: sim.initial().f0.sup_norm(),
        })
    } else {
        None
    };
    if let Some(cmp) = &oracle {
        write_oracle(&out.file(ORACLE_FILE), cmp, sim.grid())?;
    }
    Ok(RunReport {
        stats: sim.stats().clone(),
        oracle,
        final_time: sim.time(),
    })
}

/// Diagnostics recomputed from a stored final snapshot.
#[derive(Clone, Debug)]
pub struct SnapshotCheck {
    pub time: f64,
    pub total_charge: f64,
    pub total_energy: f64,
    pub measured: crate::diagnostics::Measured,
    pub margins: crate::diagnostics::Margins,
}

impl SnapshotCheck {
    pub fn healthy(&self) -> bool {
        self.margins.violated().is_empty()
    }
}

/// Re-runs the snapshot diagnostics on `final_f.csv` and `final_fields.csv`
/// in `dir`, against the grid and initial data of `cfg`.
pub fn check_snapshot(cfg: &crate::config::RunConfig, dir: &Path) -> Result<SnapshotCheck> {
    use crate::diagnostics::{bound_checks, energy_densities, measure, total_energy, BoundInputs};
    use crate::domain::total_charge;
    use crate::potential::{confinement_radius_bound, NormBundle, TheoryConstants};
    use crate::simulation::{setup_from_config, SUPPORT_FLOOR};
    use crate::vlasov::moments;

    let setup = setup_from_config(cfg, true)?;
    let grid = setup.grid().clone();
    let f = read_final_f(&dir.join(FINAL_F_FILE), grid.clone())?;
    let (fields, _) = read_final_fields(&dir.join(FINAL_FIELDS_FILE), grid.radial.len(), setup.init.lambda)?;
    let t = f.time;
    let norms = NormBundle::from_initial(&setup.init);
    let mut constants = TheoryConstants::new(grid.annulus, norms);
    if setup.options.freeze_constants {
        constants = constants.frozen_at(setup.options.t_end);
    }
    let f0_sup = setup.init.f0.sup_norm();
    let inputs = BoundInputs {
        annulus: grid.annulus,
        f0_l1: norms.f0_l1,
        f0_sup,
        lambda: setup.init.lambda,
        m0: setup.init.m0,
        support_threshold: SUPPORT_FLOOR * f0_sup,
        confined: setup.potential.is_some() && setup.options.fields,
    };
    let mom = moments(&f);
    let measured = measure(&f, &fields, &mom, inputs.support_threshold);
    let csc = match (&setup.potential, setup.options.fields) {
        (Some(spec), true) if spec.is_explicit() => confinement_radius_bound(spec, &constants, t).ok(),
        _ => None,
    };
    let margins = bound_checks(&measured, &constants.snapshot(t), &inputs, csc.as_ref());
    let ep = energy_densities(&f, &fields);
    Ok(SnapshotCheck {
        time: t,
        total_charge: total_charge(&f),
        total_energy: total_energy(&ep.e, &grid.radial),
        measured,
        margins,
    })
}
