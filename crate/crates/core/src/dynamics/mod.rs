//! Explicit time stepping for dynamic perfect plasticity with relaxed dissipative
//! boundary conditions, and for the mixed Dirichlet/Neumann limit model.
//!
//! One step of size `dt` is a symplectic Euler predictor for the velocity followed by a
//! return map for the stress:
//!
//! 1. `v* = v + dt M⁻¹(-GᵀWσ) + dt f(t + dt/2)`;
//! 2. boundary traction from a local implicit solve, so that `T = -P_{-Kν}(s v⁺)` holds
//!    exactly at the updated velocity `v⁺ = v* + (dt ds/m) T`;
//! 3. `Δε = dt G v⁺`, `σ_trial = σ + AΔε`, `σ⁺ = P_K(σ_trial)` in the compliance metric,
//!    `Δp = A⁻¹(σ_trial - σ⁺)`, `e⁺ = e + Δε - Δp`;
//! 4. `u⁺ = u + dt v⁺`.

mod initial;
mod ledger;
mod run;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{norm, vadd, vscale, vsub, Hooke, Sym2, Vec2};
use crate::convex::{project_minus_knu, ElasticitySet, Metric};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, Grid, Label, SymField, VectorField};

pub use initial::{harmonic_extension, make_initial, InitialLift};
pub use ledger::{EnergyLedger, LedgerRow, LEDGER_COLUMNS};
pub(crate) use ledger::{elastic, kinetic};
pub use run::{Problem, Simulation, StepObserver};

/// Ratio of `‖v‖_∞` to its initial scale at which a run is declared unstable.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Everything that stays fixed during a run.
#[derive(Clone, Debug)]
pub struct Model {
    pub grid: Grid,
    pub partition: BoundaryPartition,
    pub hooke: Hooke,
    pub set: ElasticitySet<2>,
}

impl Model {
    pub fn new(grid: Grid, partition: BoundaryPartition, hooke: Hooke, set: ElasticitySet<2>) -> Self {
        Self { grid, partition, hooke, set }
    }
}

/// Boundary treatment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BcMode {
    /// `S_λ = λ` on Γ_D and `1/λ` on Γ_N.
    Dissipative { lambda: f64 },
    /// Traction-free Γ_N and the limiting Dirichlet condition on Γ_D. With an infinite
    /// `lambda_ref` the Dirichlet traction is the exact limit of the implicit update;
    /// a finite value uses the weight `lambda_ref` instead.
    Limit {
        #[serde(default = "infinite", with = "lambda_ref_serde")]
        lambda_ref: f64,
    },
}

fn infinite() -> f64 {
    f64::INFINITY
}

mod lambda_ref_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl BcMode {
    pub fn limit() -> Self {
        BcMode::Limit { lambda_ref: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BcMode::Dissipative { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                Err(Error::Config(format!("dissipative λ must be positive, got {lambda}")))
            }
            BcMode::Limit { lambda_ref } if !(lambda_ref > 0.0) => {
                Err(Error::Config(format!("lambda_ref must be positive, got {lambda_ref}")))
            }
            _ => Ok(()),
        }
    }

    /// Boundary weight at a node, `None` where the traction vanishes identically and
    /// `Some(∞)` for the exact limiting Dirichlet condition.
    pub fn weight(&self, label: Label) -> Option<f64> {
        match (*self, label) {
            (_, Label::Sigma) => None,
            (BcMode::Dissipative { lambda }, Label::Dirichlet) => Some(lambda),
            (BcMode::Dissipative { lambda }, Label::Neumann) => Some(1.0 / lambda),
            (BcMode::Limit { lambda_ref }, Label::Dirichlet) => Some(lambda_ref),
            (BcMode::Limit { .. }, Label::Neumann) => None,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, BcMode::Limit { .. })
    }
}

/// Time step data; density is one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub dt: f64,
}

/// `dt = cfl · h / sqrt(λ + 2µ)`.
pub fn cfl_dt(grid: &Grid, hooke: &Hooke, cfl: f64) -> f64 {
    cfl * grid.h() / hooke.p_wave_speed()
}

/// Body force density `f(x, t)`.
#[derive(Clone)]
pub enum BodyForce {
    None,
    /// `amplitude · b(|x - center| / radius) · sin²(π (t - t_on)/(t_off - t_on))` on
    /// `[t_on, t_off]` with the compact bump `b(ρ) = (1 - ρ²)²`.
    Pulse { amplitude: Vec2, center: Vec2, radius: f64, t_on: f64, t_off: f64 },
    Custom(Arc<dyn Fn(Vec2, f64) -> Vec2 + Send + Sync>),
}

impl std::fmt::Debug for BodyForce {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BodyForce::None => write!(f, "None"),
            BodyForce::Pulse { amplitude, center, radius, t_on, t_off } => f
                .debug_struct("Pulse")
                .field("amplitude", amplitude)
                .field("center", center)
                .field("radius", radius)
                .field("t_on", t_on)
                .field("t_off", t_off)
                .finish(),
            BodyForce::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

pub(crate) fn bump(x: Vec2, center: Vec2, radius: f64) -> f64 {
    let dx = (x[0] - center[0]) / radius;
    let dy = (x[1] - center[1]) / radius;
    let r2 = dx * dx + dy * dy;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2) * (1.0 - r2)
    }
}

impl BodyForce {
    pub fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        match self {
            BodyForce::None => [0.0, 0.0],
            BodyForce::Pulse { amplitude, center, radius, t_on, t_off } => {
                if t < *t_on || t > *t_off {
                    return [0.0, 0.0];
                }
                let s = (std::f64::consts::PI * (t - t_on) / (t_off - t_on)).sin();
                vscale(bump(x, *center, *radius) * s * s, amplitude)
            }
            BodyForce::Custom(f) => f(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BodyForce::None)
    }
}

/// Fields at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub v: VectorField,
    pub e: SymField,
    pub p: SymField,
    pub sigma: SymField,
    /// Boundary traction applied in the step that produced this state, per boundary node.
    pub traction: VectorField,
    /// Accumulated Dirichlet slip `Σ dt v⁺` per boundary node (zero off Γ_D).
    pub slip: VectorField,
}

impl State {
    pub fn zero(grid: &Grid, part: &BoundaryPartition) -> Self {
        let nn = grid.num_nodes();
        let nc = grid.num_cells();
        let nb = part.nodes.len();
        Self {
            t: 0.0,
            u: vec![[0.0; 2]; nn],
            v: vec![[0.0; 2]; nn],
            e: vec![Sym2::zero(); nc],
            p: vec![Sym2::zero(); nc],
            sigma: vec![Sym2::zero(); nc],
            traction: vec![[0.0; 2]; nb],
            slip: vec![[0.0; 2]; nb],
        }
    }

    /// State with `e = Gu - p` and `σ = Ae`.
    pub fn from_fields(model: &Model, u: VectorField, v: VectorField, p: SymField) -> Result<Self> {
        let grid = &model.grid;
        let eu = grid.sym_gradient(&u)?;
        if v.len() != grid.num_nodes() {
            return Err(Error::FieldSize { expected: grid.num_nodes(), found: v.len() });
        }
        if p.len() != grid.num_cells() {
            return Err(Error::FieldSize { expected: grid.num_cells(), found: p.len() });
        }
        let e: SymField = eu.iter().zip(&p).map(|(a, b)| *a - *b).collect();
        let sigma = e.iter().map(|x| model.hooke.apply(x)).collect();
        let nb = model.partition.nodes.len();
        Ok(Self { t: 0.0, u, v, e, p, sigma, traction: vec![[0.0; 2]; nb], slip: vec![[0.0; 2]; nb] })
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().map(norm).fold(0.0, f64::max)
    }
}

/// Per-step quantities needed by the energy ledger and the duality checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Increment {
    pub dt: f64,
    pub delta_e: SymField,
    pub delta_p: SymField,
}

/// Advances `state` by one step.
pub fn step(model: &Model, state: &State, params: StepParams, mode: BcMode, force: &BodyForce) -> Result<(State, Increment)> {
    let grid = &model.grid;
    let part = &model.partition;
    let dt = params.dt;
    let t_mid = state.t + 0.5 * dt;

    let internal = grid.gradient_adjoint(&state.sigma)?;
    let mut v: VectorField = (0..grid.num_nodes())
        .map(|n| {
            let m = grid.node_mass(n);
            let f = if force.is_zero() { [0.0; 2] } else { force.eval(grid.node_pos(n), t_mid) };
            [
                state.v[n][0] - dt * internal[n][0] / m + dt * f[0],
                state.v[n][1] - dt * internal[n][1] / m + dt * f[1],
            ]
        })
        .collect();

    let mut traction = vec![[0.0; 2]; part.nodes.len()];
    let mut slip = state.slip.clone();
    for (b, bn) in part.nodes.iter().enumerate() {
        let Some(s) = mode.weight(bn.label) else { continue };
        let alpha = dt * bn.ds / grid.node_mass(bn.node);
        let vstar = v[bn.node];
        let t = if s.is_finite() {
            let s_eff = s / (1.0 + s * alpha);
            let t = vscale(-1.0, &project_minus_knu(&model.set, &bn.normal, &vscale(s_eff, &vstar))?);
            v[bn.node] = vadd(&vstar, &vscale(alpha, &t));
            t
        } else {
            // limit of the weighted update as s → ∞: v⁺ = α (y - P(y)) with y = v*/α
            let y = vscale(1.0 / alpha, &vstar);
            let zeta = project_minus_knu(&model.set, &bn.normal, &y)?;
            v[bn.node] = vscale(alpha, &vsub(&y, &zeta));
            vscale(-1.0, &zeta)
        };
        traction[b] = t;
        if bn.label == Label::Dirichlet {
            slip[b] = vadd(&slip[b], &vscale(dt, &v[bn.node]));
        }
    }

    let metric = Metric::Hooke(model.hooke);
    let mut sigma = Vec::with_capacity(grid.num_cells());
    let mut e = Vec::with_capacity(grid.num_cells());
    let mut p = Vec::with_capacity(grid.num_cells());
    let mut delta_e = Vec::with_capacity(grid.num_cells());
    let mut delta_p = Vec::with_capacity(grid.num_cells());
    for c in 0..grid.num_cells() {
        let deps = grid.sym_gradient_cell(&v, c).scale(dt);
        let trial = state.sigma[c] + model.hooke.apply(&deps);
        let (proj, excess) = model.set.project_split(&trial, &metric)?;
        let dp = model.hooke.inverse(&excess);
        let de = deps - dp;
        sigma.push(proj);
        e.push(state.e[c] + de);
        p.push(state.p[c] + dp);
        delta_e.push(de);
        delta_p.push(dp);
    }

    let u = state.u.iter().zip(&v).map(|(a, b)| vadd(a, &vscale(dt, b))).collect();
    let next = State { t: state.t + dt, u, v, e, p, sigma, traction, slip };
    Ok((next, Increment { dt, delta_e, delta_p }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::SymMat;

    fn model(n: usize, set: ElasticitySet<2>) -> Model {
        let grid = Grid::unit(n).unwrap();
        let partition = BoundaryPartition::uniform(&grid, Label::Neumann).unwrap();
        Model::new(grid, partition, Hooke::new(1.0, 1.0).unwrap(), set)
    }

    #[test]
    fn cfl_examples() {
        let grid = Grid::unit(10).unwrap();
        let dt = cfl_dt(&grid, &Hooke::new(1.0, 1.0).unwrap(), 0.5);
        assert!((dt - 0.5 * 0.1 / 3f64.sqrt()).abs() < 1e-15);
        let fine = Grid::unit(20).unwrap();
        assert!((cfl_dt(&fine, &Hooke::new(1.0, 1.0).unwrap(), 0.5) - 0.5 * dt).abs() < 1e-15);
        let stiff = cfl_dt(&grid, &Hooke::new(1.0, 10.0).unwrap(), 1.0);
        let stiffer = cfl_dt(&grid, &Hooke::new(1.0, 100.0).unwrap(), 1.0);
        assert!(stiffer < stiff);
    }

    #[test]
    fn zero_state_is_fixed() {
        let m = model(4, ElasticitySet::ball(1.0).unwrap());
        let s0 = State::zero(&m.grid, &m.partition);
        let mut s = s0.clone();
        for mode in [BcMode::Dissipative { lambda: 3.0 }, BcMode::limit()] {
            for _ in 0..5 {
                s = step(&m, &s, StepParams { dt: 0.01 }, mode, &BodyForce::None).unwrap().0;
            }
        }
        assert_eq!(s.u, s0.u);
        assert_eq!(s.sigma, s0.sigma);
    }

    #[test]
    fn single_cell_return_map_is_incremental_minimiser() {
        let m = model(1, ElasticitySet::ball(0.5).unwrap());
        let mut s = State::zero(&m.grid, &m.partition);
        s.sigma = vec![Sym2::new(0.3, 0.2, 0.1)];
        s.e = vec![m.hooke.inverse(&s.sigma[0])];
        // velocity stretching the cell
        s.v = (0..4).map(|n| vscale(3.0, &m.grid.node_pos(n))).collect();
        let (next, inc) = step(&m, &s, StepParams { dt: 0.05 }, BcMode::limit(), &BodyForce::None).unwrap();
        let trial_de = next.e[0] + inc.delta_p[0] - s.e[0];
        let trial = s.sigma[0] + m.hooke.apply(&trial_de);
        assert!(trial.norm() > 0.5);
        // brute force over the ball in polar Mandel coordinates
        let mut best = (f64::INFINITY, SymMat::zero());
        let n = 120;
        for a in 0..=n {
            let r = 0.5 * a as f64 / n as f64;
            for b in 0..=n {
                let th = std::f64::consts::PI * b as f64 / n as f64;
                for c in 0..2 * n {
                    let ph = std::f64::consts::PI * c as f64 / n as f64;
                    let x = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()];
                    let tau = Sym2::from_mandel(&x);
                    let d = m.hooke.compliance_norm_sq(&(trial - tau));
                    if d < best.0 {
                        best = (d, tau);
                    }
                }
            }
        }
        assert!((next.sigma[0] - best.1).norm() < 2e-2);
        assert!(m.hooke.compliance_norm_sq(&(trial - next.sigma[0])) <= best.0 + 1e-12);
        let dp = m.hooke.inverse(&(trial - next.sigma[0]));
        assert!((dp - inc.delta_p[0]).norm() < 1e-12);
    }

    #[test]
    fn dissipative_traction_identity() {
        let m = model(6, ElasticitySet::cylinder(0.3).unwrap());
        let mut s = State::zero(&m.grid, &m.partition);
        s.v = (0..m.grid.num_nodes()).map(|n| {
            let x = m.grid.node_pos(n);
            [x[1] - 0.5, 0.2 + x[0] * x[0]]
        }).collect();
        let mode = BcMode::Dissipative { lambda: 50.0 };
        let (next, _) = step(&m, &s, StepParams { dt: 0.02 }, mode, &BodyForce::None).unwrap();
        for (b, bn) in m.partition.nodes.iter().enumerate() {
            let s_w = mode.weight(bn.label).unwrap();
            let z = project_minus_knu(&m.set, &bn.normal, &vscale(s_w, &next.v[bn.node])).unwrap();
            let r = vadd(&next.traction[b], &z);
            assert!(norm(&r) <= 1e-12 * (1.0 + norm(&z)), "{r:?}");
        }
    }

    #[test]
    fn body_force_pulse_support() {
        let f = BodyForce::Pulse { amplitude: [1.0, 0.0], center: [0.5, 0.5], radius: 0.2, t_on: 0.0, t_off: 1.0 };
        assert_eq!(f.eval([0.0, 0.0], 0.5), [0.0, 0.0]);
        assert!((f.eval([0.5, 0.5], 0.5)[0] - 1.0).abs() < 1e-15);
        assert_eq!(f.eval([0.5, 0.5], 1.5), [0.0, 0.0]);
    }

    #[test]
    fn mode_serde() {
        let m: BcMode = serde_json::from_str(r#"{"kind":"limit"}"#).unwrap();
        assert_eq!(m, BcMode::limit());
        let d: BcMode = serde_json::from_str(r#"{"kind":"dissipative","lambda":10}"#).unwrap();
        assert_eq!(d, BcMode::Dissipative { lambda: 10.0 });
        assert_eq!(serde_json::to_string(&BcMode::limit()).unwrap(), r#"{"kind":"limit","lambda_ref":null}"#);
    }
}
