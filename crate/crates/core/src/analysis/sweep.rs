//! Boundary-weight sweeps: a family of dissipative runs with increasing λ and the
//! comparison against the limit model.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::algebra::{vsub, Vec2};
use crate::dynamics::{BcMode, EnergyLedger, Problem, Simulation};
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Clone, Debug, Serialize)]
pub struct SweepMember {
    /// `None` for the limit-model run.
    pub lambda: Option<f64>,
    pub steps: usize,
    /// `Σ dt ds |T|²` over Γ_N.
    pub neumann_flux: f64,
    /// `Σ dt ds ψ` over Γ_D.
    pub dirichlet_psi: f64,
    pub interior_plastic: f64,
    pub dirichlet_slip: f64,
    pub total_dissipation: f64,
    pub max_abs_residual: f64,
    pub final_energy: f64,
    /// SHA-256 of the final `u` and `v` as little-endian `f64`.
    pub final_digest: String,
    #[serde(skip)]
    pub final_u: Vec<Vec2>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MoreauCheck {
    pub limit_total: f64,
    pub dissipative_total: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitComparison {
    pub member: SweepMember,
    /// `‖u_λmax(T) - u_lim(T)‖`.
    pub distance_to_largest: f64,
    pub moreau: MoreauCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub lambdas: Vec<f64>,
    pub members: Vec<SweepMember>,
    /// Least-squares slope of `log neumann_flux` against `log λ`.
    pub neumann_slope: f64,
    /// `‖u_{λ_{i+1}}(T) - u_{λ_i}(T)‖` in the lumped-mass norm.
    pub differences: Vec<f64>,
    pub limit: Option<LimitComparison>,
}

impl SweepReport {
    pub fn differences_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }

    pub fn flux_nonincreasing(&self) -> bool {
        self.members.windows(2).all(|w| w[1].neumann_flux <= w[0].neumann_flux)
    }

    /// Limit run closer to the largest λ than the last successive difference.
    pub fn cauchy_tail_dominated(&self) -> Option<bool> {
        let last = *self.differences.last()?;
        Some(self.limit.as_ref()?.distance_to_largest <= last)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>12} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
            "lambda", "neumann_flux", "dirichlet_psi", "plastic", "dissipation", "diff_next"
        );
        for (i, m) in self.members.iter().enumerate() {
            let diff = self.differences.get(i).map_or("-".to_string(), |d| format!("{d:.6e}"));
            s += &format!(
                "{:>12} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14}\n",
                m.lambda.map_or("limit".into(), |l| format!("{l}")),
                m.neumann_flux,
                m.dirichlet_psi,
                m.interior_plastic,
                m.total_dissipation,
                diff
            );
        }
        s += &format!("neumann slope: {:.4}\n", self.neumann_slope);
        if let Some(l) = &self.limit {
            s += &format!(
                "limit: |u_max - u_lim| = {:.6e}, dissipation {:.6e} <= {:.6e}: {}\n",
                l.distance_to_largest,
                l.moreau.limit_total,
                l.moreau.dissipative_total,
                if l.moreau.holds { "holds" } else { "violated" }
            );
        }
        s
    }

    /// One row per member, limit run last.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,neumann_flux,dirichlet_psi,interior_plastic,dirichlet_slip,total_dissipation,max_abs_residual,final_energy,final_digest\n");
        let rows = self.members.iter().chain(self.limit.as_ref().map(|l| &l.member));
        for m in rows {
            s += &format!(
                "{},{},{},{},{},{},{},{},{}\n",
                m.lambda.map_or("limit".into(), |l| l.to_string()),
                m.neumann_flux,
                m.dirichlet_psi,
                m.interior_plastic,
                m.dirichlet_slip,
                m.total_dissipation,
                m.max_abs_residual,
                m.final_energy,
                m.final_digest
            );
        }
        s
    }
}

pub fn state_digest(u: &[Vec2], v: &[Vec2]) -> String {
    let mut h = Sha256::new();
    for x in u.iter().chain(v) {
        h.update(x[0].to_le_bytes());
        h.update(x[1].to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn mass_distance(grid: &Grid, a: &[Vec2], b: &[Vec2]) -> f64 {
    let d: Vec<Vec2> = a.iter().zip(b).map(|(x, y)| vsub(x, y)).collect();
    grid.mass_dot(&d, &d).sqrt()
}

/// Least-squares slope of `log y` against `log x`; NaN when a value is not positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn member(lambda: Option<f64>, sim: &Simulation) -> SweepMember {
    let l = sim.ledger();
    let s = sim.state();
    SweepMember {
        lambda,
        steps: sim.steps_done(),
        neumann_flux: l.neumann_flux,
        dirichlet_psi: l.dirichlet_psi,
        interior_plastic: l.interior_plastic,
        dirichlet_slip: l.dirichlet_slip,
        total_dissipation: l.total_dissipation(),
        max_abs_residual: l.max_abs_residual(),
        final_energy: l.current().kinetic + l.current().elastic,
        final_digest: state_digest(&s.u, &s.v),
        final_u: s.u.clone(),
    }
}

/// Compares the dissipation of a limit run with that of a dissipative run from the same
/// data: `interior + Γ_D slip` (limit) against `interior + boundary ψ` (dissipative).
pub fn moreau_lower_bound_check(
    dissipative: (&Problem, &EnergyLedger),
    limit: (&Problem, &EnergyLedger),
) -> Result<MoreauCheck> {
    let (pd, ld) = dissipative;
    let (pl, ll) = limit;
    if pd.mode.is_limit() || !pl.mode.is_limit() {
        return Err(Error::Precondition("expected one dissipative and one limit run".into()));
    }
    let g = (&pd.model.grid, &pl.model.grid);
    if g.0.nx() != g.1.nx() || g.0.ny() != g.1.ny() || pd.params != pl.params || pd.steps != pl.steps {
        return Err(Error::Precondition("runs do not share grid and time stepping".into()));
    }
    let limit_total = ll.interior_plastic + ll.dirichlet_slip;
    let dissipative_total = ld.interior_plastic + ld.current().boundary_psi_cum;
    let scale = limit_total.abs().max(dissipative_total.abs()).max(ld.initial_energy()).max(f64::MIN_POSITIVE);
    let tolerance = 1e-6 * scale;
    Ok(MoreauCheck {
        limit_total,
        dissipative_total,
        gap: dissipative_total - limit_total,
        tolerance,
        holds: limit_total <= dissipative_total + tolerance,
    })
}

/// Runs `base` in dissipative mode for every λ (and once in the limit model when
/// `with_limit`), on a pool of `workers` threads. `run` executes one member; `None` marks
/// the limit run.
pub fn lambda_sweep_with<F>(base: &Problem, lambdas: &[f64], workers: usize, with_limit: bool, run: F) -> Result<SweepReport>
where
    F: Fn(Option<f64>, &Problem) -> Result<Simulation> + Sync,
{
    if lambdas.len() < 2 {
        return Err(Error::Sweep("a sweep needs at least two λ values".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Sweep("λ values must be strictly increasing".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::Sweep(format!("λ values must be positive and finite, got {l}")));
    }
    let mut jobs: Vec<Option<f64>> = lambdas.iter().map(|l| Some(*l)).collect();
    if with_limit {
        jobs.push(None);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Sweep(e.to_string()))?;
    let results: Vec<Result<(Problem, Simulation)>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let mode = match job {
                    Some(lambda) => BcMode::Dissipative { lambda: *lambda },
                    None => BcMode::limit(),
                };
                let problem = base.with_mode(mode);
                let sim = run(*job, &problem).map_err(|e| match job {
                    Some(lambda) => Error::SweepMember { lambda: *lambda, source: Box::new(e) },
                    None => Error::SweepMember { lambda: f64::INFINITY, source: Box::new(e) },
                })?;
                Ok((problem, sim))
            })
            .collect()
    });
    let mut finished = Vec::with_capacity(results.len());
    for r in results {
        finished.push(r?);
    }

    let limit_run = if with_limit { finished.pop() } else { None };
    let members: Vec<SweepMember> = finished.iter().map(|(p, s)| member(p.mode_lambda(), s)).collect();
    let grid = &base.model.grid;
    let differences = members.windows(2).map(|w| mass_distance(grid, &w[1].final_u, &w[0].final_u)).collect();
    let fluxes: Vec<f64> = members.iter().map(|m| m.neumann_flux).collect();
    let neumann_slope = loglog_slope(lambdas, &fluxes);
    let limit = match limit_run {
        Some((pl, sl)) => {
            let (pd, sd) = finished.last().expect("at least two members");
            let m = member(None, &sl);
            let distance_to_largest = mass_distance(grid, &m.final_u, &members.last().unwrap().final_u);
            let moreau = moreau_lower_bound_check((pd, sd.ledger()), (&pl, sl.ledger()))?;
            Some(LimitComparison { member: m, distance_to_largest, moreau })
        }
        None => None,
    };
    Ok(SweepReport { lambdas: lambdas.to_vec(), members, neumann_slope, differences, limit })
}

pub fn lambda_sweep(base: &Problem, lambdas: &[f64], workers: usize) -> Result<SweepReport> {
    lambda_sweep_with(base, lambdas, workers, true, |_, p| p.run(&mut ()))
}

impl Problem {
    fn mode_lambda(&self) -> Option<f64> {
        match self.mode {
            BcMode::Dissipative { lambda } => Some(lambda),
            BcMode::Limit { .. } => None,
        }
    }
}
