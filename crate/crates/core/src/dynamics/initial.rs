//! Initial data compatible with the dissipative boundary condition at a given λ.
//!
//! From data `(u0, v0, e0, p0)` with `v0 = 0` on Γ_D and `σ0ν = 0` on Γ_N, the lift is
//!
//! ```text
//! v0λ = v0 + v̂0/λ,   σ0λ = σ0 + E z0/λ,
//! ```
//!
//! where `v̂0` is the discrete harmonic extension of `-σ0ν` and `z0` solves
//! `z0 - div E z0 = 0` with `E z0 ν = -v0`, in the weak form `(M + GᵀWG) z0 = -B v0`.
//! Then `S_λ v0λ + σ0λν = 0` at every boundary node away from Σ.

use super::{Model, State};
use crate::algebra::{dot, norm, vadd, vscale, Vec2};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, Grid, Label, SymField, VectorField};
use crate::solve::conjugate_gradient;

const CG_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct InitialLift {
    pub lambda: f64,
    pub state: State,
    /// `v̂0`: the velocity correction before division by λ.
    pub v_hat: VectorField,
    pub z0: VectorField,
    /// `E z0` per cell.
    pub ez0: SymField,
    /// `max_c |E z0|`, attained at `ez0_argmax`.
    pub ez0_max: f64,
    pub ez0_argmax: usize,
    /// `max |S_λ v0λ + σ0λν|` over boundary nodes off Σ.
    pub compatibility_residual: f64,
}

/// Solves `-Δ w = 0` (five-point stencil) at interior nodes with `w = g` on the boundary;
/// `g` is indexed like [`BoundaryPartition::nodes`].
pub fn harmonic_extension(grid: &Grid, part: &BoundaryPartition, g: &[Vec2]) -> Result<VectorField> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = vec![[0.0; 2]; grid.num_nodes()];
    for (b, val) in part.nodes.iter().zip(g) {
        out[b.node] = *val;
    }
    if nx < 2 || ny < 2 {
        return Ok(out);
    }
    let (mx, my) = (nx - 1, ny - 1);
    let idx = |i: usize, j: usize| (i - 1) + (j - 1) * mx;
    let apply = |x: &[f64], y: &mut [f64]| {
        for j in 1..ny {
            for i in 1..nx {
                let mut acc = 4.0 * x[idx(i, j)];
                if i > 1 {
                    acc -= x[idx(i - 1, j)];
                }
                if i + 1 < nx {
                    acc -= x[idx(i + 1, j)];
                }
                if j > 1 {
                    acc -= x[idx(i, j - 1)];
                }
                if j + 1 < ny {
                    acc -= x[idx(i, j + 1)];
                }
                y[idx(i, j)] = acc;
            }
        }
    };
    for comp in 0..2 {
        let mut rhs = vec![0.0; mx * my];
        for j in 1..ny {
            for i in 1..nx {
                let mut acc = 0.0;
                for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if grid.is_boundary_node(grid.node(a, b)) {
                        acc += out[grid.node(a, b)][comp];
                    }
                }
                rhs[idx(i, j)] = acc;
            }
        }
        let mut x = vec![0.0; mx * my];
        conjugate_gradient(apply, &rhs, &mut x, CG_TOL, 20 * (mx * my + 10), "harmonic extension")?;
        for j in 1..ny {
            for i in 1..nx {
                out[grid.node(i, j)][comp] = x[idx(i, j)];
            }
        }
    }
    Ok(out)
}

fn unflatten(v: &[f64]) -> VectorField {
    v.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// Builds the λ-compatible initial state from `data` (whose traction and slip are
/// ignored). `r_margin` is the radius with `σ0 + B(0, r_margin) ⊂ K` in every cell.
pub fn make_initial(model: &Model, data: &State, lambda: f64, r_margin: f64) -> Result<InitialLift> {
    let grid = &model.grid;
    let part = &model.partition;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Precondition(format!("λ must be positive, got {lambda}")));
    }
    if !(r_margin > 0.0) {
        return Err(Error::Precondition(format!("r_margin must be positive, got {r_margin}")));
    }

    let eu = grid.sym_gradient(&data.u)?;
    let scale_e = data.e.iter().chain(&data.p).map(|x| x.norm()).fold(1.0, f64::max);
    for (c, ((g, e), p)) in eu.iter().zip(&data.e).zip(&data.p).enumerate() {
        if (*g - *e - *p).norm() > 1e-10 * scale_e {
            return Err(Error::Precondition(format!("additive decomposition fails in cell {c}")));
        }
    }
    let vscale_max = data.v.iter().map(norm).fold(0.0, f64::max);
    let sigma_scale = data.sigma.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let sigma_nu = grid.boundary_normal_stress(part, &data.sigma)?;
    for (b, bn) in part.nodes.iter().enumerate() {
        match bn.label {
            Label::Dirichlet if norm(&data.v[bn.node]) > 1e-12 * (1.0 + vscale_max) => {
                return Err(Error::Precondition(format!("v0 must vanish on Γ_D (node {})", bn.node)));
            }
            Label::Neumann if norm(&sigma_nu[b]) > 1e-10 * (1.0 + sigma_scale) => {
                return Err(Error::Precondition(format!("σ0ν must vanish on Γ_N (node {})", bn.node)));
            }
            _ => {}
        }
    }
    for (c, s) in data.sigma.iter().enumerate() {
        let m = model.set.inner_margin(s);
        if m < r_margin {
            return Err(Error::Precondition(format!(
                "σ0 has margin {m:.3e} < r_margin = {r_margin:.3e} in cell {c}"
            )));
        }
    }

    let g: Vec<Vec2> = sigma_nu.iter().map(|x| vscale(-1.0, x)).collect();
    let v_hat = harmonic_extension(grid, part, &g)?;

    // (M + GᵀWG) z = -B v0
    let mut rhs = vec![0.0; 2 * grid.num_nodes()];
    for bn in &part.nodes {
        rhs[2 * bn.node] = -bn.ds * data.v[bn.node][0];
        rhs[2 * bn.node + 1] = -bn.ds * data.v[bn.node][1];
    }
    let masses = grid.masses();
    let operator = |x: &[f64], y: &mut [f64]| {
        let z = unflatten(x);
        let ez = grid.sym_gradient(&z).expect("field sizes fixed by construction");
        let gt = grid.gradient_adjoint(&ez).expect("field sizes fixed by construction");
        for n in 0..z.len() {
            y[2 * n] = masses[n] * z[n][0] + gt[n][0];
            y[2 * n + 1] = masses[n] * z[n][1] + gt[n][1];
        }
    };
    let mut zf = vec![0.0; rhs.len()];
    conjugate_gradient(operator, &rhs, &mut zf, CG_TOL, 20 * rhs.len() + 100, "initial-data BVP")?;
    let z0 = unflatten(&zf);
    let ez0 = grid.sym_gradient(&z0)?;
    let (ez0_argmax, ez0_max) = ez0
        .iter()
        .enumerate()
        .map(|(c, e)| (c, e.norm()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });

    if lambda * r_margin < ez0_max {
        return Err(Error::MarginViolation { cell: ez0_argmax, lambda, required: ez0_max / r_margin });
    }

    let gt = grid.gradient_adjoint(&ez0)?;
    let v_lift: VectorField = data.v.iter().zip(&v_hat).map(|(a, b)| vadd(a, &vscale(1.0 / lambda, b))).collect();
    let sigma_lift: SymField = data.sigma.iter().zip(&ez0).map(|(s, e)| *s + e.scale(1.0 / lambda)).collect();

    let mut residual: f64 = 0.0;
    for (b, bn) in part.nodes.iter().enumerate() {
        let s = match bn.label {
            Label::Dirichlet => lambda,
            Label::Neumann => 1.0 / lambda,
            Label::Sigma => continue,
        };
        let n = bn.node;
        // weak normal trace of E z0
        let trace = [
            (masses[n] * z0[n][0] + gt[n][0]) / bn.ds,
            (masses[n] * z0[n][1] + gt[n][1]) / bn.ds,
        ];
        let r = vadd(&vadd(&vscale(s, &v_lift[n]), &sigma_nu[b]), &vscale(1.0 / lambda, &trace));
        residual = residual.max(dot(&r, &r).sqrt());
    }

    let e_lift: SymField = sigma_lift.iter().map(|s| model.hooke.inverse(s)).collect();
    let p_lift: SymField = eu.iter().zip(&e_lift).map(|(g, e)| *g - *e).collect();
    let mut state = data.clone();
    state.v = v_lift;
    state.sigma = sigma_lift;
    state.e = e_lift;
    state.p = p_lift;
    Ok(InitialLift {
        lambda,
        state,
        v_hat,
        z0,
        ez0,
        ez0_max,
        ez0_argmax,
        compatibility_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Hooke;
    use crate::convex::ElasticitySet;
    use crate::grid::{Edge, EdgeSpec};

    fn mixed_model(n: usize) -> Model {
        let grid = Grid::unit(n).unwrap();
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
        Model::new(grid, part, Hooke::new(1.0, 1.0).unwrap(), ElasticitySet::cylinder(1.0).unwrap())
    }

    #[test]
    fn harmonic_extension_of_linear_data() {
        let grid = Grid::unit(8).unwrap();
        let part = BoundaryPartition::uniform(&grid, Label::Neumann).unwrap();
        let g: Vec<Vec2> = part.nodes.iter().map(|b| {
            let x = grid.node_pos(b.node);
            [x[0] + 2.0 * x[1], -x[0]]
        }).collect();
        let w = harmonic_extension(&grid, &part, &g).unwrap();
        for (n, val) in w.iter().enumerate() {
            let x = grid.node_pos(n);
            assert!((val[0] - x[0] - 2.0 * x[1]).abs() < 1e-11 && (val[1] + x[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_data_unchanged() {
        let m = mixed_model(6);
        let s = State::zero(&m.grid, &m.partition);
        let lift = make_initial(&m, &s, 10.0, 0.5).unwrap();
        assert_eq!(lift.state.v, s.v);
        assert_eq!(lift.state.sigma, s.sigma);
        assert_eq!(lift.compatibility_residual, 0.0);
    }

    #[test]
    fn compatible_and_margin_error() {
        let m = mixed_model(8);
        let mut s = State::zero(&m.grid, &m.partition);
        s.v = (0..m.grid.num_nodes())
            .map(|n| {
                let x = m.grid.node_pos(n);
                [x[0] * (1.0 - x[1]), 0.3 * x[0]]
            })
            .collect();
        let lift = make_initial(&m, &s, 100.0, 0.5).unwrap();
        assert!(lift.compatibility_residual < 1e-10, "{}", lift.compatibility_residual);
        let need = lift.ez0_max / 0.5;
        match make_initial(&m, &s, 0.99 * need, 0.5) {
            Err(Error::MarginViolation { cell, required, .. }) => {
                assert_eq!(cell, lift.ez0_argmax);
                assert!((required - need).abs() < 1e-12 * need);
            }
            other => panic!("{other:?}"),
        }
        assert!(make_initial(&m, &s, 1.01 * need, 0.5).is_ok());
    }

    #[test]
    fn rejects_dirichlet_velocity() {
        let m = mixed_model(4);
        let mut s = State::zero(&m.grid, &m.partition);
        s.v = vec![[1.0, 0.0]; m.grid.num_nodes()];
        assert!(matches!(make_initial(&m, &s, 10.0, 0.5), Err(Error::Precondition(_))));
    }
}
