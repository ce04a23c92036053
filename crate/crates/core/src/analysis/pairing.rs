//! Discrete stress/strain duality pairing and the convexity inequality `H(Δp) ≥ [σ:Δp]`.
//!
//! For a nonnegative test function `φ` the pairing of one step is
//!
//! ```text
//! [σ:Δp](φ) = -Σ_c h² φ_c σ:Δe - dt Σ_i m_i φ_i v·div(σ, T) - dt Σ_c h² σ:(G(φv) - φ_c G v)
//!             + dt Σ_{i ∈ data} ds_i φ_i T_i·v_i
//! ```
//!
//! with `div` the discrete divergence built from the run's own traction `T`. The third
//! term is the discrete product-rule defect of `G`, the grid counterpart of `σ:(v⊙∇φ)`;
//! the last term returns the prescribed-data part of the boundary flux (every boundary
//! node in dissipative mode, Γ_N in the limit model).

use serde::Serialize;

use crate::algebra::{dot, norm, vscale, Sym2, Vec2};
use crate::convex::boundary_dissipation_density;
use crate::dynamics::{BcMode, Increment, Model, State};
use crate::error::{Error, Result};
use crate::grid::Label;

/// Nonnegative closed-form test function with analytic gradient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TestFunction {
    One,
    /// `(1 - ρ²)⁴ (1 + ½ tilt·ξ)` with `ξ = (x - center)/radius`, `ρ = |ξ|`, `|tilt| ≤ 1`.
    Bump { center: Vec2, radius: f64, tilt: Vec2 },
}

impl TestFunction {
    pub fn bump(center: Vec2, radius: f64, tilt: Vec2) -> Self {
        let tn = norm(&tilt);
        let tilt = if tn > 1.0 { vscale(1.0 / tn, &tilt) } else { tilt };
        TestFunction::Bump { center, radius, tilt }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Bump { center, radius, tilt } => {
                let xi = [(x[0] - center[0]) / radius, (x[1] - center[1]) / radius];
                let r2 = dot(&xi, &xi);
                if r2 >= 1.0 {
                    return 0.0;
                }
                (1.0 - r2).powi(4) * (1.0 + 0.5 * dot(&tilt, &xi))
            }
        }
    }

    pub fn grad(&self, x: Vec2) -> Vec2 {
        match *self {
            TestFunction::One => [0.0, 0.0],
            TestFunction::Bump { center, radius, tilt } => {
                let xi = [(x[0] - center[0]) / radius, (x[1] - center[1]) / radius];
                let r2 = dot(&xi, &xi);
                if r2 >= 1.0 {
                    return [0.0, 0.0];
                }
                let b = (1.0 - r2).powi(4);
                let db = -8.0 * (1.0 - r2).powi(3);
                let t = 1.0 + 0.5 * dot(&tilt, &xi);
                [
                    (db * xi[0] * t + b * 0.5 * tilt[0]) / radius,
                    (db * xi[1] * t + b * 0.5 * tilt[1]) / radius,
                ]
            }
        }
    }

    /// Axis-aligned box containing the support, `None` for unbounded support.
    pub fn support_box(&self) -> Option<[Vec2; 2]> {
        match *self {
            TestFunction::One => None,
            TestFunction::Bump { center, radius, .. } => {
                Some([[center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius]])
            }
        }
    }
}

/// Which regime of the inequality a test function probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Constant,
    Interior,
    BoundaryStraddling,
    SigmaAvoiding,
}

/// Deterministic battery of 24 test functions: `φ ≡ 1`, 8 bumps with support strictly
/// inside the domain, 8 bumps straddling the boundary and 7 bumps vanishing within `3h`
/// of every Σ node.
pub fn battery(model: &Model) -> Vec<(Group, TestFunction)> {
    let g = &model.grid;
    let (lx, ly, h) = (g.lx(), g.ly(), g.h());
    let short = lx.min(ly);
    let tilts = |k: usize| {
        let a = 0.9 * k as f64;
        [0.8 * a.cos(), 0.8 * a.sin()]
    };
    let mut out = vec![(Group::Constant, TestFunction::One)];

    for k in 0..8 {
        // van der Corput-like points in the middle of the domain
        let fx = [0.5, 0.25, 0.75, 0.375, 0.625, 0.3, 0.7, 0.5][k];
        let fy = [0.5, 0.4, 0.6, 0.7, 0.3, 0.65, 0.35, 0.25][k];
        let c = [fx * lx, fy * ly];
        let room = c[0].min(lx - c[0]).min(c[1]).min(ly - c[1]) - h;
        let r = (0.2 * short).min(room);
        out.push((Group::Interior, TestFunction::bump(c, r, tilts(k))));
    }

    let perimeter = 2.0 * (lx + ly);
    let on_boundary = |s: f64| -> Vec2 {
        let s = s * perimeter;
        if s < lx {
            [s, 0.0]
        } else if s < lx + ly {
            [lx, s - lx]
        } else if s < 2.0 * lx + ly {
            [2.0 * lx + ly - s, ly]
        } else {
            [0.0, perimeter - s]
        }
    };
    for k in 0..8 {
        let c = on_boundary((k as f64 + 0.3) / 8.0);
        out.push((Group::BoundaryStraddling, TestFunction::bump(c, 0.25 * short, tilts(k + 8))));
    }

    let sigma: Vec<Vec2> = model.partition.sigma_nodes().iter().map(|&n| g.node_pos(n)).collect();
    let mut placed = 0;
    let mut k = 0;
    while placed < 7 && k < 200 {
        let c = on_boundary(((k as f64) * 0.618_033_988_75 + 0.11).fract());
        k += 1;
        let dist = sigma.iter().map(|s| norm(&[c[0] - s[0], c[1] - s[1]])).fold(f64::INFINITY, f64::min);
        let r = (0.2 * short).min(dist - 3.0 * h);
        if r >= 2.0 * h {
            out.push((Group::SigmaAvoiding, TestFunction::bump(c, r, tilts(placed + 16))));
            placed += 1;
        }
    }
    out
}

/// One completed step as seen by the pairing: state after the step and its increments.
#[derive(Clone, Copy, Debug)]
pub struct StepView<'a> {
    pub dt: f64,
    pub sigma: &'a [Sym2],
    pub v: &'a [Vec2],
    pub traction: &'a [Vec2],
    pub delta_e: &'a [Sym2],
    pub delta_p: &'a [Sym2],
}

impl<'a> StepView<'a> {
    pub fn new(next: &'a State, inc: &'a Increment) -> Self {
        Self {
            dt: inc.dt,
            sigma: &next.sigma,
            v: &next.v,
            traction: &next.traction,
            delta_e: &inc.delta_e,
            delta_p: &inc.delta_p,
        }
    }
}

fn data_traction(mode: BcMode, label: Label) -> bool {
    match (mode, label) {
        (_, Label::Sigma) => false,
        (BcMode::Dissipative { .. }, _) => true,
        (BcMode::Limit { lambda_ref }, Label::Dirichlet) => lambda_ref.is_finite(),
        (BcMode::Limit { .. }, Label::Neumann) => true,
    }
}

fn check_window(model: &Model, phi: &TestFunction) -> Result<()> {
    if let Some([lo, hi]) = phi.support_box() {
        let g = &model.grid;
        let (lx, ly) = (g.lx(), g.ly());
        let inside = lo[0] >= -lx && lo[1] >= -ly && hi[0] <= 2.0 * lx && hi[1] <= 2.0 * ly;
        if !inside {
            return Err(Error::Precondition("test function support exceeds the computational window".into()));
        }
    }
    Ok(())
}

/// Pairing value together with the magnitude of the summed terms (for tolerances).
pub fn duality_pairing_scaled(model: &Model, mode: BcMode, step: &StepView, phi: &TestFunction) -> Result<(f64, f64)> {
    let div = model.grid.divergence_with_traction(&model.partition, step.sigma, step.traction)?;
    pairing_with_divergence(model, mode, step, &div, phi)
}

fn pairing_with_divergence(
    model: &Model,
    mode: BcMode,
    step: &StepView,
    div: &[Vec2],
    phi: &TestFunction,
) -> Result<(f64, f64)> {
    check_window(model, phi)?;
    let g = &model.grid;
    let part = &model.partition;
    let w = g.cell_weight();
    let dt = step.dt;
    let phi_n: Vec<f64> = (0..g.num_nodes()).map(|n| phi.eval(g.node_pos(n))).collect();
    let phi_c = g.cell_average(&phi_n);
    let phiv: Vec<Vec2> = step.v.iter().zip(&phi_n).map(|(v, f)| vscale(*f, v)).collect();

    let mut total = 0.0;
    let mut scale = 0.0;
    for c in 0..g.num_cells() {
        let s = step.sigma[c];
        let a = -w * phi_c[c] * s.ddot(&step.delta_e[c]);
        let defect = g.sym_gradient_cell(&phiv, c) - g.sym_gradient_cell(step.v, c).scale(phi_c[c]);
        let b = -dt * w * s.ddot(&defect);
        total += a + b;
        scale += a.abs() + b.abs() + w * phi_c[c] * s.norm() * step.delta_p[c].norm();
    }
    for n in 0..g.num_nodes() {
        let term = -dt * g.node_mass(n) * dot(&phiv[n], &div[n]);
        total += term;
        scale += term.abs();
    }
    for (b, bn) in part.nodes.iter().enumerate() {
        if data_traction(mode, bn.label) {
            let term = dt * bn.ds * dot(&step.traction[b], &phiv[bn.node]);
            total += term;
            scale += term.abs();
        }
    }
    Ok((total, scale))
}

pub fn duality_pairing(model: &Model, mode: BcMode, step: &StepView, phi: &TestFunction) -> Result<f64> {
    Ok(duality_pairing_scaled(model, mode, step, phi)?.0)
}

/// `Σ_c h² φ_c H(Δp_c)` plus, in the limit model, the Dirichlet slip term
/// `Σ_{Γ_D} ds φ σ_{-Kν}(dt v)`.
pub fn weighted_dissipation(model: &Model, mode: BcMode, step: &StepView, phi: &TestFunction) -> f64 {
    let g = &model.grid;
    let phi_n: Vec<f64> = (0..g.num_nodes()).map(|n| phi.eval(g.node_pos(n))).collect();
    let phi_c = g.cell_average(&phi_n);
    let mut total: f64 = (0..g.num_cells())
        .filter(|&c| phi_c[c] != 0.0)
        .map(|c| g.cell_weight() * phi_c[c] * model.set.support(&step.delta_p[c]))
        .sum();
    if let BcMode::Limit { lambda_ref } = mode {
        if lambda_ref.is_infinite() {
            for bn in model.partition.nodes.iter().filter(|b| b.label == Label::Dirichlet) {
                let f = phi_n[bn.node];
                if f != 0.0 {
                    let z = vscale(step.dt, &step.v[bn.node]);
                    total += bn.ds * f * boundary_dissipation_density(&model.set, &bn.normal, &z);
                }
            }
        }
    }
    total
}

/// `weighted_dissipation - pairing` and the tolerance scale. Nonnegative for admissible
/// steps.
pub fn convexity_residual(model: &Model, mode: BcMode, step: &StepView, phi: &TestFunction) -> Result<(f64, f64)> {
    let (pairing, scale) = duality_pairing_scaled(model, mode, step, phi)?;
    let diss = weighted_dissipation(model, mode, step, phi);
    Ok((diss - pairing, scale + diss.abs()))
}

/// Worst `(H(Δp) - σ:Δp) / (1 + |Δp|)` over cells.
pub fn complementarity_gap(model: &Model, step: &StepView) -> f64 {
    step.sigma
        .iter()
        .zip(step.delta_p)
        .map(|(s, dp)| {
            if *dp == Sym2::zero() {
                0.0
            } else {
                (model.set.support(dp) - s.ddot(dp)) / (1.0 + dp.norm())
            }
        })
        .fold(0.0, f64::max)
}

/// `|dissipation - [σ:Δp](1)|` normalised by the step's dissipation. The boolean flags an
/// elastic step, where the ratio is reported as 0.
pub fn flow_rule_residual(model: &Model, mode: BcMode, step: &StepView) -> Result<(f64, bool)> {
    let one = TestFunction::One;
    let (pairing, scale) = duality_pairing_scaled(model, mode, step, &one)?;
    let diss = weighted_dissipation(model, mode, step, &one);
    let norm = diss.abs().max(1e-12 * scale);
    if diss == 0.0 && (diss - pairing).abs() <= 1e-14 * (1.0 + scale) {
        return Ok((0.0, true));
    }
    Ok(((diss - pairing).abs() / norm, false))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GroupResult {
    pub worst_relative: f64,
    pub worst_absolute: f64,
    pub evaluations: usize,
}

/// Accumulates convexity residuals over steps and test functions.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    pub tolerance: f64,
    pub constant: GroupResult,
    pub interior: GroupResult,
    pub boundary_straddling: GroupResult,
    pub sigma_avoiding: GroupResult,
    pub max_complementarity: f64,
    pub max_flow_rule_residual: f64,
    pub steps: usize,
}

impl ConvexityReport {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            constant: GroupResult { worst_relative: f64::INFINITY, worst_absolute: f64::INFINITY, evaluations: 0 },
            interior: GroupResult { worst_relative: f64::INFINITY, worst_absolute: f64::INFINITY, evaluations: 0 },
            boundary_straddling: GroupResult {
                worst_relative: f64::INFINITY,
                worst_absolute: f64::INFINITY,
                evaluations: 0,
            },
            sigma_avoiding: GroupResult { worst_relative: f64::INFINITY, worst_absolute: f64::INFINITY, evaluations: 0 },
            max_complementarity: 0.0,
            max_flow_rule_residual: 0.0,
            steps: 0,
        }
    }

    fn group_mut(&mut self, g: Group) -> &mut GroupResult {
        match g {
            Group::Constant => &mut self.constant,
            Group::Interior => &mut self.interior,
            Group::BoundaryStraddling => &mut self.boundary_straddling,
            Group::SigmaAvoiding => &mut self.sigma_avoiding,
        }
    }

    pub fn add_step(&mut self, model: &Model, mode: BcMode, step: &StepView, battery: &[(Group, TestFunction)]) -> Result<()> {
        let div = model.grid.divergence_with_traction(&model.partition, step.sigma, step.traction)?;
        for (group, phi) in battery {
            let (pairing, scale) = pairing_with_divergence(model, mode, step, &div, phi)?;
            let diss = weighted_dissipation(model, mode, step, phi);
            let (r, scale) = (diss - pairing, scale + diss.abs());
            let rel = r / scale.max(f64::MIN_POSITIVE);
            let gr = self.group_mut(*group);
            gr.worst_relative = gr.worst_relative.min(if scale > 0.0 { rel } else { 0.0 });
            gr.worst_absolute = gr.worst_absolute.min(r);
            gr.evaluations += 1;
        }
        self.max_complementarity = self.max_complementarity.max(complementarity_gap(model, step));
        self.max_flow_rule_residual = self.max_flow_rule_residual.max(flow_rule_residual(model, mode, step)?.0);
        self.steps += 1;
        Ok(())
    }

    pub fn worst_relative(&self) -> f64 {
        [&self.constant, &self.interior, &self.boundary_straddling, &self.sigma_avoiding]
            .iter()
            .filter(|g| g.evaluations > 0)
            .map(|g| g.worst_relative)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self) -> bool {
        self.steps == 0 || self.worst_relative() >= -self.tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Hooke;
    use crate::convex::ElasticitySet;
    use crate::grid::{BoundaryPartition, Edge, EdgeSpec, Grid};

    fn model() -> Model {
        let grid = Grid::unit(16).unwrap();
        let part = BoundaryPartition::new(
            &grid,
            &[
                EdgeSpec::uniform(Edge::Bottom, Label::Neumann),
                EdgeSpec::uniform(Edge::Right, Label::Neumann),
                EdgeSpec::uniform(Edge::Top, Label::Neumann),
                EdgeSpec::uniform(Edge::Left, Label::Dirichlet),
            ],
        )
        .unwrap();
        Model::new(grid, part, Hooke::new(1.0, 1.0).unwrap(), ElasticitySet::ball(1.0).unwrap())
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let phi = TestFunction::bump([0.4, 0.5], 0.3, [0.5, -0.3]);
        let h = 1e-6;
        for x in [[0.45, 0.52], [0.3, 0.41], [0.6, 0.6]] {
            let g = phi.grad(x);
            let fd = [
                (phi.eval([x[0] + h, x[1]]) - phi.eval([x[0] - h, x[1]])) / (2.0 * h),
                (phi.eval([x[0], x[1] + h]) - phi.eval([x[0], x[1] - h])) / (2.0 * h),
            ];
            assert!((g[0] - fd[0]).abs() < 1e-8 && (g[1] - fd[1]).abs() < 1e-8, "{g:?} {fd:?}");
            assert!(phi.eval(x) >= 0.0);
        }
    }

    #[test]
    fn battery_shape() {
        let m = model();
        let b = battery(&m);
        assert_eq!(b.len(), 24);
        let count = |g| b.iter().filter(|(k, _)| *k == g).count();
        assert_eq!(count(Group::Interior), 8);
        assert_eq!(count(Group::BoundaryStraddling), 8);
        assert_eq!(count(Group::SigmaAvoiding), 7);
        let h = m.grid.h();
        for (k, phi) in &b {
            if *k == Group::SigmaAvoiding {
                for n in m.partition.sigma_nodes() {
                    let x = m.grid.node_pos(n);
                    for dx in [-3.0, 0.0, 3.0] {
                        for dy in [-3.0, 0.0, 3.0] {
                            assert_eq!(phi.eval([x[0] + dx * h / 1.5, x[1] + dy * h / 1.5]), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_rates_pair_to_zero() {
        let m = model();
        let nc = m.grid.num_cells();
        let nn = m.grid.num_nodes();
        let sigma = vec![Sym2::new(0.1, 0.2, 0.3); nc];
        let zero_c = vec![Sym2::zero(); nc];
        let zero_n = vec![[0.0; 2]; nn];
        let t = vec![[0.0; 2]; m.partition.nodes.len()];
        let step = StepView { dt: 0.1, sigma: &sigma, v: &zero_n, traction: &t, delta_e: &zero_c, delta_p: &zero_c };
        for (_, phi) in battery(&m) {
            assert_eq!(duality_pairing(&m, BcMode::limit(), &step, &phi).unwrap(), 0.0);
        }
    }

    #[test]
    fn interior_pairing_is_direct_quadrature() {
        let m = model();
        let g = &m.grid;
        let dt = 0.01;
        let v: Vec<Vec2> = (0..g.num_nodes())
            .map(|n| {
                let x = g.node_pos(n);
                [(3.0 * x[0]).sin() * x[1], (2.0 * x[1]).cos() + x[0] * x[0]]
            })
            .collect();
        let gv = g.sym_gradient(&v).unwrap();
        let sigma: Vec<Sym2> =
            (0..g.num_cells()).map(|c| { let x = g.cell_center(c); Sym2::new(x[0], x[1] * x[1], x[0] * x[1]) }).collect();
        let dp: Vec<Sym2> =
            (0..g.num_cells()).map(|c| { let x = g.cell_center(c); Sym2::new(0.01 * x[1], -0.02 * x[0], 0.005) }).collect();
        let de: Vec<Sym2> = gv.iter().zip(&dp).map(|(a, b)| a.scale(dt) - *b).collect();
        let t: Vec<Vec2> = m.partition.nodes.iter().map(|b| [b.normal[1], 0.3]).collect();
        let step = StepView { dt, sigma: &sigma, v: &v, traction: &t, delta_e: &de, delta_p: &dp };
        let phi = TestFunction::bump([0.5, 0.5], 0.3, [0.2, 0.1]);
        let pairing = duality_pairing(&m, BcMode::limit(), &step, &phi).unwrap();
        let phi_n: Vec<f64> = (0..g.num_nodes()).map(|n| phi.eval(g.node_pos(n))).collect();
        let phi_c = g.cell_average(&phi_n);
        let direct: f64 = (0..g.num_cells()).map(|c| g.cell_weight() * phi_c[c] * sigma[c].ddot(&dp[c])).sum();
        assert!((pairing - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{pairing} {direct}");
        let far = TestFunction::bump([10.0, 0.5], 0.3, [0.0, 0.0]);
        assert!(duality_pairing(&m, BcMode::limit(), &step, &far).is_err());
    }
}
