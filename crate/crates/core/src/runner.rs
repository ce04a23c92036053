//! Configuration-driven runs with on-disk artifacts, and their verification.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::algebra::{norm, Sym2};
use crate::analysis::{battery, lambda_sweep_with, mass_distance, state_digest, ConvexityReport, SweepReport};
use crate::config::SimConfig;
use crate::dynamics::{elastic, kinetic, make_initial, BcMode, Increment, LedgerRow, Problem, Simulation, State};
use crate::error::{Error, Result};
use crate::grid::Label;
use crate::io::{
    file_sha256, ledger_csv_header, ledger_csv_row, parse_hash, read_ledger, Manifest, SnapshotFile, SnapshotHeader,
    SnapshotWriter, CONFIG_FILE, FORMAT_VERSION, LEDGER_FILE, SNAPSHOT_FILE,
};

pub struct RunOutcome {
    pub simulation: Simulation,
    pub manifest: Manifest,
}

fn zero_increment(model_cells: usize, dt: f64) -> Increment {
    Increment { dt, delta_e: vec![Sym2::zero(); model_cells], delta_p: vec![Sym2::zero(); model_cells] }
}

/// Resolves `config`, runs it and writes `config.json`, `snapshots.bin`, `ledger.csv` and
/// `manifest.json` into `dir`.
pub fn run_to_dir(config: &SimConfig, dir: &Path) -> Result<RunOutcome> {
    let eff = config.effective()?;
    let problem = eff.resolve()?;
    run_problem_to_dir(&problem, &eff, dir)
}

/// Runs an already resolved problem; `config` is recorded as its description.
pub fn run_problem_to_dir(problem: &Problem, config: &SimConfig, dir: &Path) -> Result<RunOutcome> {
    let config = config.effective()?;
    if config.bc != problem.mode {
        return Err(Error::Config("problem mode differs from the configuration".into()));
    }
    let hash = config.hash()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(CONFIG_FILE), config.to_json_pretty() + "\n")?;

    let model = &problem.model;
    let header = SnapshotHeader {
        nx: model.grid.nx() as u32,
        ny: model.grid.ny() as u32,
        boundary_nodes: model.partition.nodes.len() as u32,
        config_hash: parse_hash(&hash)?,
    };
    let mut writer = SnapshotWriter::create(&dir.join(SNAPSHOT_FILE), header)?;
    let mut sim = problem.simulation()?;
    writer.write(0, sim.state(), &zero_increment(model.grid.num_cells(), 0.0))?;

    let stride = config.time.snapshot_stride;
    let mut ledger = ledger_csv_header(&hash);
    let mut ledger_rows = 0;
    let mut observer = |k: usize, _: &State, next: &State, inc: &Increment, row: &LedgerRow| -> Result<()> {
        if k % stride == 0 {
            writer.write(k as u64, next, inc)?;
            ledger.push_str(&ledger_csv_row(row));
            ledger_rows += 1;
        }
        Ok(())
    };
    sim.run(problem.steps, &mut observer)?;
    let (records, snapshot_sha256) = writer.finish()?;
    let ledger_path = dir.join(LEDGER_FILE);
    std::fs::write(&ledger_path, &ledger)?;

    let s = sim.state();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        program: "dynplast".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        config,
        steps: problem.steps,
        dt: problem.params.dt,
        snapshot_stride: stride,
        snapshot_records: records,
        snapshot_sha256,
        ledger_rows,
        ledger_sha256: file_sha256(&ledger_path)?,
        initial_energy: sim.ledger().initial_energy(),
        final_digest: state_digest(&s.u, &s.v),
    };
    manifest.write(dir)?;
    Ok(RunOutcome { simulation: sim, manifest })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// Reported checks never fail the verification.
    pub asserted: bool,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, asserted: true, pass: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, asserted: true, pass: value >= threshold }
    }

    fn reported(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, threshold: f64::NAN, asserted: false, pass: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub dir: PathBuf,
    pub config_hash: String,
    pub records: usize,
    pub checks: Vec<Check>,
    pub convexity: ConvexityReport,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.asserted || c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = match (c.asserted, c.pass) {
                (false, _) => "INFO",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            let bound = if c.asserted { format!("{:.3e}", c.threshold) } else { "-".into() };
            s += &format!("{status:<5} {:<28} {:>14.6e}  bound {bound}\n", c.name, c.value);
        }
        s += &format!("{}\n", if self.passed() { "verify: PASS" } else { "verify: FAIL" });
        s
    }
}

fn integrity(dir: &Path) -> Result<(Manifest, SnapshotFile, Vec<LedgerRow>)> {
    let manifest = Manifest::read(dir)?;
    if manifest.config.hash()? != manifest.config_hash {
        return Err(Error::Corrupt("manifest configuration does not match its hash".into()));
    }
    let cfg = SimConfig::from_path(&dir.join(CONFIG_FILE)).map_err(|e| Error::Corrupt(format!("config.json: {e}")))?;
    if cfg.hash()? != manifest.config_hash {
        return Err(Error::Corrupt("config.json does not match the manifest hash".into()));
    }
    let snaps = SnapshotFile::open(&dir.join(SNAPSHOT_FILE))?;
    if snaps.header.config_hash != parse_hash(&manifest.config_hash)? {
        return Err(Error::Corrupt("snapshot header carries a different config hash".into()));
    }
    if snaps.len() != manifest.snapshot_records {
        return Err(Error::Corrupt(format!(
            "snapshot file holds {} records, manifest lists {}",
            snaps.len(),
            manifest.snapshot_records
        )));
    }
    if snaps.sha256() != manifest.snapshot_sha256 {
        return Err(Error::Corrupt("snapshot checksum mismatch".into()));
    }
    if (snaps.header.nx as usize, snaps.header.ny as usize) != (cfg.grid.nx, cfg.grid.ny) {
        return Err(Error::Corrupt("snapshot grid differs from the configuration".into()));
    }
    let ledger_path = dir.join(LEDGER_FILE);
    let (hash, rows) = read_ledger(&ledger_path)?;
    if hash != manifest.config_hash {
        return Err(Error::Corrupt("ledger carries a different config hash".into()));
    }
    if rows.len() != manifest.ledger_rows || file_sha256(&ledger_path)? != manifest.ledger_sha256 {
        return Err(Error::Corrupt("ledger does not match the manifest".into()));
    }
    Ok((manifest, snaps, rows))
}

/// Re-checks a run directory: integrity (hashes, sizes) as hard errors, then the
/// admissibility, flow-rule, convexity and ledger checks as PASS/FAIL entries.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport> {
    let (manifest, snaps, rows) = integrity(dir)?;
    let problem = manifest.config.resolve()?;
    let model = &problem.model;
    let mode = problem.mode;
    let tests = battery(model);
    let mut convexity = ConvexityReport::new(1e-8);

    let mut worst_margin = f64::INFINITY;
    let mut drift: f64 = 0.0;
    let mut ledger_dev: f64 = 0.0;
    let mut neumann_traction: f64 = 0.0;
    let mut last_step = 0;
    let mut ledger_iter = rows.iter();
    for rec in snaps.records() {
        let rec = rec?;
        let s = &rec.state;
        for sig in &s.sigma {
            worst_margin = worst_margin.min(model.set.inner_margin(sig));
        }
        let gu = model.grid.sym_gradient(&s.u)?;
        for ((g, e), p) in gu.iter().zip(&s.e).zip(&s.p) {
            drift = drift.max((*g - *e - *p).norm());
        }
        if rec.step == 0 {
            continue;
        }
        last_step = rec.step;
        convexity.add_step(model, mode, &rec.view(), &tests)?;
        if mode.is_limit() {
            for (b, bn) in model.partition.nodes.iter().enumerate() {
                if bn.label == Label::Neumann {
                    neumann_traction = neumann_traction.max(norm(&s.traction[b]));
                }
            }
        }
        let row = ledger_iter.next().ok_or_else(|| Error::Corrupt("ledger shorter than snapshots".into()))?;
        let (k, el) = (kinetic(model, s), elastic(model, s));
        let scale = (row.kinetic + row.elastic).abs().max(f64::MIN_POSITIVE);
        ledger_dev = ledger_dev.max(((k - row.kinetic).abs() + (el - row.elastic).abs()) / scale);
        if row.t != s.t {
            ledger_dev = f64::INFINITY;
        }
    }

    let max_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let sigma_gap = rows.last().map_or(0.0, |r| r.sigma_gap);
    let mut checks = vec![
        Check::at_least("stress_admissibility", worst_margin.min(0.0), -1e-9),
        Check::at_most("additive_decomposition", drift, 1e-9 * (last_step.max(1) as f64)),
        Check::at_most("complementarity", convexity.max_complementarity, 1e-8),
        Check::at_most("flow_rule_residual", convexity.max_flow_rule_residual, 1e-6),
        Check::at_least("convexity_battery", convexity.worst_relative().min(0.0), -1e-8),
        Check::reported("convexity_constant", convexity.constant.worst_relative),
        Check::reported("convexity_interior", convexity.interior.worst_relative),
        Check::reported("convexity_boundary", convexity.boundary_straddling.worst_relative),
        Check::reported("convexity_sigma_avoiding", convexity.sigma_avoiding.worst_relative),
        Check::at_most("ledger_audit", ledger_dev, 1e-12),
        Check::reported("energy_residual", max_residual),
        Check::reported("sigma_gap", sigma_gap),
    ];
    if mode.is_limit() {
        checks.push(Check::at_most("neumann_traction", neumann_traction, 0.0));
    }
    Ok(VerifyReport { dir: dir.to_path_buf(), config_hash: manifest.config_hash, records: snaps.len(), checks, convexity })
}

fn lambda_dir_name(lambda: Option<f64>) -> String {
    match lambda {
        Some(l) => format!("lambda_{l}"),
        None => "limit".into(),
    }
}

/// Runs one dissipative member per λ plus a limit-model run, each into its own
/// subdirectory of `out`, and writes `sweep_report.{json,txt}` and `sweep.csv`.
pub fn sweep_to_dir(config: &SimConfig, lambdas: &[f64], workers: usize, out: &Path) -> Result<SweepReport> {
    let base_cfg = config.effective()?;
    let base = base_cfg.resolve()?;
    std::fs::create_dir_all(out)?;
    let report = lambda_sweep_with(&base, lambdas, workers, true, |lambda, problem| {
        let mut cfg = base_cfg.clone();
        cfg.bc = problem.mode;
        let dir = out.join(lambda_dir_name(lambda));
        Ok(run_problem_to_dir(problem, &cfg, &dir)?.simulation)
    })?;
    std::fs::write(out.join("sweep_report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(out.join("sweep_report.txt"), report.to_text())?;
    std::fs::write(out.join("sweep.csv"), report.to_csv())?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialReport {
    pub config_hash: String,
    pub lambda: f64,
    pub r_margin: f64,
    pub ez0_max: f64,
    pub ez0_argmax: usize,
    /// Smallest λ for which the lifted stress keeps the margin.
    pub required_lambda: f64,
    pub compatibility_residual: f64,
    /// `‖v0λ - v0‖` in the lumped-mass norm.
    pub velocity_change: f64,
    /// `‖σ0λ - σ0‖` in the cell `L²` norm.
    pub stress_change: f64,
}

impl InitialReport {
    pub fn to_text(&self) -> String {
        format!(
            "lambda                  {}\nr_margin                {:.6e}\nmax |E z0|              {:.6e} (cell {})\n\
             required lambda         {:.6e}\ncompatibility residual  {:.3e}\n|v0l - v0|              {:.6e}\n\
             |s0l - s0|              {:.6e}\n",
            self.lambda,
            self.r_margin,
            self.ez0_max,
            self.ez0_argmax,
            self.required_lambda,
            self.compatibility_residual,
            self.velocity_change,
            self.stress_change
        )
    }
}

/// Builds the compatible initial state at `lambda` and writes `initial_lift.json` and a
/// one-record `initial.bin` into `out`.
pub fn make_initial_to_dir(config: &SimConfig, lambda: f64, out: &Path) -> Result<InitialReport> {
    let mut cfg = config.effective()?;
    cfg.bc = BcMode::Dissipative { lambda };
    let problem = cfg.resolve()?;
    let model = &problem.model;
    let lift = make_initial(model, &problem.data, lambda, problem.r_margin)?;
    let dv: Vec<_> = lift.state.v.iter().zip(&problem.data.v).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    let w = model.grid.cell_weight();
    let ds: f64 = lift.state.sigma.iter().zip(&problem.data.sigma).map(|(a, b)| (*a - *b).norm().powi(2) * w).sum();
    let hash = cfg.hash()?;
    let report = InitialReport {
        config_hash: hash.clone(),
        lambda,
        r_margin: problem.r_margin,
        ez0_max: lift.ez0_max,
        ez0_argmax: lift.ez0_argmax,
        required_lambda: lift.ez0_max / problem.r_margin,
        compatibility_residual: lift.compatibility_residual,
        velocity_change: model.grid.mass_dot(&dv, &dv).sqrt(),
        stress_change: ds.sqrt(),
    };
    std::fs::create_dir_all(out)?;
    let header = SnapshotHeader {
        nx: model.grid.nx() as u32,
        ny: model.grid.ny() as u32,
        boundary_nodes: model.partition.nodes.len() as u32,
        config_hash: parse_hash(&hash)?,
    };
    let mut w = SnapshotWriter::create(&out.join("initial.bin"), header)?;
    w.write(0, &lift.state, &zero_increment(model.grid.num_cells(), 0.0))?;
    w.finish()?;
    std::fs::write(out.join("initial_lift.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// `‖u_a(T) - u_b(T)‖` between the final records of two run directories.
pub fn final_distance(a: &Path, b: &Path) -> Result<f64> {
    let ma = Manifest::read(a)?;
    let model = ma.config.resolve()?.model;
    let fa = SnapshotFile::open(&a.join(SNAPSHOT_FILE))?;
    let fb = SnapshotFile::open(&b.join(SNAPSHOT_FILE))?;
    if fa.header.nx != fb.header.nx || fa.header.ny != fb.header.ny || fa.is_empty() || fb.is_empty() {
        return Err(Error::Precondition("runs are not comparable".into()));
    }
    let ra = fa.record(fa.len() - 1)?;
    let rb = fb.record(fb.len() - 1)?;
    Ok(mass_distance(&model.grid, &ra.state.u, &rb.state.u))
}
