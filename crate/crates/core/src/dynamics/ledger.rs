use serde::Serialize;

use super::{BcMode, BodyForce, Increment, Model, State};
use crate::algebra::{dot, vadd, vscale, Sym2};
use crate::convex::{boundary_dissipation_density, psi_eval, BoundaryWeight};
use crate::error::Result;
use crate::grid::Label;

pub const LEDGER_COLUMNS: [&str; 9] = [
    "t",
    "kinetic",
    "elastic",
    "plastic_cum",
    "boundary_psi_cum",
    "boundary_flux_cum",
    "work_cum",
    "residual",
    "sigma_gap",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub plastic_cum: f64,
    pub boundary_psi_cum: f64,
    pub boundary_flux_cum: f64,
    pub work_cum: f64,
    pub residual: f64,
    pub sigma_gap: f64,
}

impl LedgerRow {
    pub fn values(&self) -> [f64; 9] {
        [
            self.t,
            self.kinetic,
            self.elastic,
            self.plastic_cum,
            self.boundary_psi_cum,
            self.boundary_flux_cum,
            self.work_cum,
            self.residual,
            self.sigma_gap,
        ]
    }
}

/// Running energy balance:
///
/// ```text
/// kinetic + elastic + plastic_cum + boundary_psi_cum + boundary_flux_cum = E(0) + work_cum
/// ```
///
/// up to `residual`.
#[derive(Clone, Debug)]
pub struct EnergyLedger {
    initial_energy: f64,
    current: LedgerRow,
    rows: Vec<LedgerRow>,
    /// Interior plastic dissipation `Σ h² H(Δp)`.
    pub interior_plastic: f64,
    /// Limiting Dirichlet slip dissipation `Σ ds σ_{-Kν}(dt v⁺)`.
    pub dirichlet_slip: f64,
    /// `Σ dt ds ψ` restricted to Γ_D nodes.
    pub dirichlet_psi: f64,
    /// `Σ dt ds |T|²` over Γ_N nodes: the squared Neumann traction.
    pub neumann_flux: f64,
}

pub(crate) fn kinetic(model: &Model, s: &State) -> f64 {
    0.5 * s.v.iter().enumerate().map(|(n, v)| model.grid.node_mass(n) * dot(v, v)).sum::<f64>()
}

pub(crate) fn elastic(model: &Model, s: &State) -> f64 {
    model.grid.cell_weight() * s.e.iter().map(|e| model.hooke.energy(e)).sum::<f64>()
}

impl EnergyLedger {
    pub fn new(model: &Model, initial: &State) -> Self {
        let kinetic = kinetic(model, initial);
        let elastic = elastic(model, initial);
        let current = LedgerRow { t: initial.t, kinetic, elastic, ..Default::default() };
        Self {
            initial_energy: kinetic + elastic,
            current,
            rows: Vec::new(),
            interior_plastic: 0.0,
            dirichlet_slip: 0.0,
            dirichlet_psi: 0.0,
            neumann_flux: 0.0,
        }
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn current(&self) -> &LedgerRow {
        &self.current
    }

    /// One row per completed step.
    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }

    /// Total dissipation of the run: interior plastic plus every boundary term.
    pub fn total_dissipation(&self) -> f64 {
        self.current.plastic_cum + self.current.boundary_psi_cum + self.current.boundary_flux_cum
    }

    pub fn record(
        &mut self,
        model: &Model,
        mode: BcMode,
        force: &BodyForce,
        prev: &State,
        next: &State,
        inc: &Increment,
    ) -> Result<LedgerRow> {
        let grid = &model.grid;
        let dt = inc.dt;
        let w = grid.cell_weight();
        let plastic: f64 = w * inc.delta_p.iter().map(|dp| model.set.support(dp)).sum::<f64>();
        self.interior_plastic += plastic;
        let mut slip = 0.0;
        let mut psi = 0.0;
        let mut flux = 0.0;
        let mut gap = 0.0;
        for (b, bn) in model.partition.nodes.iter().enumerate() {
            let v = next.v[bn.node];
            if bn.label == Label::Sigma {
                let cells = grid.cells_around(bn.node);
                let avg = cells.iter().fold(Sym2::zero(), |a, &c| a + next.sigma[c]).scale(1.0 / cells.len() as f64);
                gap += dt * bn.ds * dot(&avg.mul_vec(&bn.normal), &v).abs();
                continue;
            }
            if bn.label == Label::Neumann {
                self.neumann_flux += dt * bn.ds * dot(&next.traction[b], &next.traction[b]);
            }
            match mode.weight(bn.label) {
                None => {}
                Some(s) if s.is_finite() => {
                    let p = dt * bn.ds * psi_eval(&model.set, &bn.normal, BoundaryWeight::new(s)?, &v)?;
                    psi += p;
                    if bn.label == Label::Dirichlet {
                        self.dirichlet_psi += p;
                    }
                    flux += dt * bn.ds * dot(&next.traction[b], &next.traction[b]) / (2.0 * s);
                }
                Some(_) => {
                    slip += bn.ds * boundary_dissipation_density(&model.set, &bn.normal, &vscale(dt, &v));
                }
            }
        }
        self.dirichlet_slip += slip;
        let work = if force.is_zero() {
            0.0
        } else {
            let t_mid = prev.t + 0.5 * dt;
            (0..grid.num_nodes())
                .map(|n| {
                    let f = force.eval(grid.node_pos(n), t_mid);
                    let vbar = vscale(0.5, &vadd(&prev.v[n], &next.v[n]));
                    grid.node_mass(n) * dot(&f, &vbar)
                })
                .sum::<f64>()
                * dt
        };

        let c = &mut self.current;
        c.t = next.t;
        c.kinetic = kinetic(model, next);
        c.elastic = elastic(model, next);
        c.plastic_cum += plastic + slip;
        c.boundary_psi_cum += psi;
        c.boundary_flux_cum += flux;
        c.work_cum += work;
        c.sigma_gap += gap;
        c.residual = c.kinetic + c.elastic + c.plastic_cum + c.boundary_psi_cum + c.boundary_flux_cum
            - self.initial_energy
            - c.work_cum;
        self.rows.push(*c);
        Ok(*c)
    }
}
