//! The traction set `-Kν = {-τν : τ ∈ K}` at a boundary point with unit normal `ν`, the
//! relaxed boundary energy `ψ` and its gradient.
//!
//! Writing `C = -Kν`, the support function of `C` is `σ_C(d) = H(-d⊙ν)` and
//!
//! ```text
//! ψ_s(z) = inf_w ½ s|w|² + σ_C(z - w) = sup_{ζ∈C} ζ·z - |ζ|²/(2s),   ∇ψ_s(z) = P_C(s z).
//! ```

use serde::{Deserialize, Serialize};

use super::{lp, ElasticitySet, Metric, MEMBERSHIP_BAND, TRACE_TOL};
use crate::algebra::{dot, norm, normal_tangential, sym_outer, vadd, vscale, vsub, SymMat, Vector};
use crate::error::{Error, Result};

const PG_TOL: f64 = 1e-10;
const PG_MAX_ITER: usize = 100_000;
const GAP_CHECK_EVERY: usize = 25;

/// Scalar boundary weight `S = s Id`, `s > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    s: f64,
}

impl BoundaryWeight {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidSet(format!("boundary weight must be positive, got {s}")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Outcome of a membership query with a tolerance band around the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Interior,
    /// Within the tolerance band of the boundary; counted as inside.
    Boundary,
    Exterior,
}

impl Membership {
    pub fn is_member(self) -> bool {
        !matches!(self, Membership::Exterior)
    }

    fn from_margin(margin: f64) -> Self {
        if margin > MEMBERSHIP_BAND {
            Membership::Interior
        } else if margin >= -MEMBERSHIP_BAND {
            Membership::Boundary
        } else {
            Membership::Exterior
        }
    }
}

fn check_normal<const N: usize>(nu: &Vector<N>) -> Result<()> {
    if (norm(nu) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("boundary normal must be a unit vector, |ν| = {}", norm(nu))));
    }
    Ok(())
}

/// Orthonormal basis of the tangent space `ν⊥`.
fn tangents<const N: usize>(nu: &Vector<N>) -> Vec<Vector<N>> {
    let mut out: Vec<Vector<N>> = Vec::with_capacity(N - 1);
    for k in 0..N {
        let mut e = [0.0; N];
        e[k] = 1.0;
        let mut t = vsub(&e, &vscale(dot(&e, nu), nu));
        for b in &out {
            t = vsub(&t, &vscale(dot(&t, b), b));
        }
        let len = norm(&t);
        if len > 0.5 {
            out.push(vscale(1.0 / len, &t));
        }
        if out.len() == N - 1 {
            break;
        }
    }
    out
}

/// Minimum-Frobenius-norm `τ` with `-τν = z`.
pub fn minimum_norm_lift<const N: usize>(nu: &Vector<N>, z: &Vector<N>) -> SymMat<N> {
    let zn = dot(z, nu);
    -(sym_outer(z, nu).scale(2.0) - sym_outer(nu, nu).scale(zn))
}

/// Decides whether `z ∈ -Kν`.
pub fn minus_knu_membership<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    z: &Vector<N>,
) -> Result<Membership> {
    check_normal(nu)?;
    let (zn, zt) = normal_tangential(z, nu);
    let margin = match set {
        // the lift is unique up to ν⊥-blocks, and the minimum-norm one is optimal
        ElasticitySet::Ball { radius } => radius - (zn * zn + 2.0 * dot(&zt, &zt)).sqrt(),
        ElasticitySet::DeviatoricCylinder { k } => k - std::f64::consts::SQRT_2 * norm(&zt),
        ElasticitySet::Halfspaces(hs) => {
            // max_{β,t} t  s.t.  N_i:(τ0 + Σ β_j B_j) + t ≤ c_i, with B_j spanning {τ : τν = 0}
            let tau0 = minimum_norm_lift(nu, z);
            let ts = tangents(nu);
            let mut basis = Vec::new();
            for a in 0..ts.len() {
                for b in a..ts.len() {
                    basis.push(sym_outer(&ts[a], &ts[b]));
                }
            }
            let slack: Vec<f64> = hs.iter().map(|h| h.offset - h.normal.ddot(&tau0)).collect();
            let shift = slack.iter().cloned().fold(f64::INFINITY, f64::min);
            let rows: Vec<Vec<f64>> = hs
                .iter()
                .map(|h| {
                    let mut row: Vec<f64> = basis.iter().map(|b| h.normal.ddot(b)).collect();
                    row.push(1.0);
                    row
                })
                .collect();
            let rhs: Vec<f64> = slack.iter().map(|s| s - shift).collect();
            let mut cost = vec![0.0; basis.len()];
            cost.push(1.0);
            match lp::maximize(&cost, &rows, &rhs) {
                lp::LpOutcome::Optimal { value, .. } => shift + value,
                lp::LpOutcome::Unbounded => f64::INFINITY,
            }
        }
    };
    Ok(Membership::from_margin(margin))
}

/// Support function of `-Kν` at `z`: `H(-z⊙ν)`. This is the limiting Dirichlet boundary
/// dissipation density.
pub fn boundary_dissipation_density<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    z: &Vector<N>,
) -> f64 {
    match set {
        ElasticitySet::Ball { radius } => {
            let (zn, zt) = normal_tangential(z, nu);
            radius * (zn * zn + 0.5 * dot(&zt, &zt)).sqrt()
        }
        ElasticitySet::DeviatoricCylinder { k } => {
            let (zn, zt) = normal_tangential(z, nu);
            if zn.abs() > TRACE_TOL * norm(z) {
                f64::INFINITY
            } else {
                k * norm(&zt) / std::f64::consts::SQRT_2
            }
        }
        ElasticitySet::Halfspaces(_) => set.support(&(-sym_outer(z, nu))),
    }
}

/// Euclidean projection of `y` onto `-Kν`.
///
/// Ball and cylinder use closed forms; half-space intersections go through
/// [`project_minus_knu_lifted`].
pub fn project_minus_knu<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    y: &Vector<N>,
) -> Result<Vector<N>> {
    check_normal(nu)?;
    match set {
        ElasticitySet::Ball { radius } => Ok(project_ellipsoid(*radius, nu, y)),
        ElasticitySet::DeviatoricCylinder { k } => {
            let (yn, yt) = normal_tangential(y, nu);
            let cap = k / std::f64::consts::SQRT_2;
            let tn = norm(&yt);
            let yt = if tn > cap { vscale(cap / tn, &yt) } else { yt };
            Ok(vadd(&vscale(yn, nu), &yt))
        }
        ElasticitySet::Halfspaces(hs) => {
            if minus_knu_membership(set, nu, y)?.is_member() {
                return Ok(*y);
            }
            if N == 2 {
                if let Some(poly) = traction_polygon(set, hs, nu) {
                    let p = project_polygon(&poly, &[y[0], y[1]]);
                    let mut out = *y;
                    out[0] = p[0];
                    out[1] = p[1];
                    return Ok(out);
                }
            }
            project_minus_knu_lifted(set, nu, y)
        }
    }
}

/// Vertices of the polygon `-Kν` in counter-clockwise order, for a bounded plane-stress
/// polytope `K`. `None` when `K` is unbounded.
fn traction_polygon<const N: usize>(
    set: &ElasticitySet<N>,
    hs: &[super::Halfspace<N>],
    nu: &Vector<N>,
) -> Option<Vec<[f64; 2]>> {
    for j in 0..3 {
        for sign in [1.0, -1.0] {
            let mut e = [0.0; 6];
            e[j] = sign;
            if !set.support(&SymMat::<N>::from_mandel(&e)).is_finite() {
                return None;
            }
        }
    }
    let rows: Vec<[f64; 3]> = hs.iter().map(|h| {
        let m = h.normal.to_mandel();
        [m[0], m[1], m[2]]
    }).collect();
    let mut points = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            for k in j + 1..rows.len() {
                let Some(x) = solve3([rows[i], rows[j], rows[k]], [hs[i].offset, hs[j].offset, hs[k].offset])
                else {
                    continue;
                };
                let feasible = rows.iter().zip(hs).all(|(r, h)| {
                    r[0] * x[0] + r[1] * x[1] + r[2] * x[2] <= h.offset + 1e-10 * (1.0 + h.offset)
                });
                if feasible {
                    let w = vscale(-1.0, &SymMat::<N>::from_mandel(&[x[0], x[1], x[2], 0.0, 0.0, 0.0]).mul_vec(nu));
                    points.push([w[0], w[1]]);
                }
            }
        }
    }
    if points.is_empty() {
        return None;
    }
    Some(convex_hull(points))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain, counter-clockwise without collinear points.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-14 && (a[1] - b[1]).abs() <= 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

fn project_segment(a: &[f64; 2], b: &[f64; 2], y: &[f64; 2]) -> [f64; 2] {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((y[0] - a[0]) * d[0] + (y[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    [a[0] + t * d[0], a[1] + t * d[1]]
}

fn project_polygon(poly: &[[f64; 2]], y: &[f64; 2]) -> [f64; 2] {
    if poly.len() >= 3 && (0..poly.len()).all(|i| cross(&poly[i], &poly[(i + 1) % poly.len()], y) >= 0.0) {
        return *y;
    }
    let mut best = poly[0];
    let mut best_d = f64::INFINITY;
    for i in 0..poly.len() {
        let q = project_segment(&poly[i], &poly[(i + 1) % poly.len()], y);
        let d = (q[0] - y[0]).powi(2) + (q[1] - y[1]).powi(2);
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// `-Kν` for a ball of radius `r` is the ellipsoid `(z·ν)² + 2|z_t|² ≤ r²`.
fn project_ellipsoid<const N: usize>(r: f64, nu: &Vector<N>, y: &Vector<N>) -> Vector<N> {
    let (yn, yt) = normal_tangential(y, nu);
    let t2 = dot(&yt, &yt);
    if yn * yn + 2.0 * t2 <= r * r {
        return *y;
    }
    // z_n = y_n/(1+γ), z_t = y_t/(1+2γ); f(γ) is convex decreasing, so Newton from γ = 0
    // increases monotonically to the root.
    let f = |g: f64| yn * yn / ((1.0 + g) * (1.0 + g)) + 2.0 * t2 / ((1.0 + 2.0 * g) * (1.0 + 2.0 * g)) - r * r;
    let df = |g: f64| {
        -2.0 * yn * yn / (1.0 + g).powi(3) - 8.0 * t2 / (1.0 + 2.0 * g).powi(3)
    };
    let mut g = 0.0_f64;
    for _ in 0..100 {
        let step = f(g) / df(g);
        let next = g - step;
        if !(next > g) {
            break;
        }
        let done = (next - g) <= 1e-16 * (1.0 + next);
        g = next;
        if done {
            break;
        }
    }
    let zn = yn / (1.0 + g);
    let zt = vscale(1.0 / (1.0 + 2.0 * g), &yt);
    let z = vadd(&vscale(zn, nu), &zt);
    let q = (zn * zn + 2.0 * dot(&zt, &zt)).sqrt();
    if q > r {
        vscale(r / q, &z)
    } else {
        z
    }
}

/// Projection onto `-Kν` for any elasticity set by accelerated projected gradient on the
/// lift: minimise `½|y + τν|²` over `τ ∈ K` and return `-τν`.
///
/// The lift may be non-unique but the returned vector is. Termination uses the duality
/// gap `σ_C(y - w) - (y - w)·w`, which bounds `½|w - P_C y|²`.
pub fn project_minus_knu_lifted<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    y: &Vector<N>,
) -> Result<Vector<N>> {
    check_normal(nu)?;
    let scale = 1.0 + norm(y);
    let traction = |tau: &SymMat<N>| vscale(-1.0, &tau.mul_vec(nu));
    let grad = |tau: &SymMat<N>| sym_outer(&vsub(y, &traction(tau)), nu);

    let mut tau = set.project(&minimum_norm_lift(nu, y), &Metric::Frobenius)?;
    let mut anchor = tau;
    let mut mom = 1.0_f64;
    let mut prev_obj = f64::INFINITY;
    let mut gap = f64::INFINITY;
    for it in 0..PG_MAX_ITER {
        // the map τ ↦ τν has norm at most one, so a unit step is admissible
        let next = set.project(&(anchor - grad(&anchor)), &Metric::Frobenius)?;
        let w = traction(&next);
        let d = vsub(y, &w);
        let obj = 0.5 * dot(&d, &d);
        let mom_next = 0.5 * (1.0 + (1.0 + 4.0 * mom * mom).sqrt());
        if obj > prev_obj {
            // adaptive restart
            anchor = next;
            mom = 1.0;
        } else {
            anchor = next + (next - tau).scale((mom - 1.0) / mom_next);
            mom = mom_next;
        }
        let change = norm(&vsub(&w, &traction(&tau)));
        tau = next;
        prev_obj = obj.min(prev_obj);

        if it % GAP_CHECK_EVERY == 0 || change <= 1e-16 * scale {
            gap = (boundary_dissipation_density(set, nu, &d) - dot(&d, &w)).max(0.0);
            let bound = (2.0 * gap).sqrt();
            let stalled = change <= 1e-16 * scale && bound <= 1e-7 * scale;
            if bound <= PG_TOL * scale || stalled {
                return Ok(w);
            }
        }
    }
    Err(Error::IterationLimit {
        what: "projection onto -Kν",
        iterations: PG_MAX_ITER,
        residual: (2.0 * gap).sqrt(),
    })
}

/// `∇ψ_s(z) = P_{-Kν}(s z)`.
pub fn psi_grad<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    weight: BoundaryWeight,
    z: &Vector<N>,
) -> Result<Vector<N>> {
    project_minus_knu(set, nu, &vscale(weight.s(), z))
}

/// Relaxed boundary energy `ψ_s(z) = inf_w ½ s|w|² + H((w - z)⊙ν)`.
///
/// The minimiser is `w* = P_{-Kν}(s z)/s`. Both the primal value at `w*` and the dual
/// value are computed and must agree.
pub fn psi_eval<const N: usize>(
    set: &ElasticitySet<N>,
    nu: &Vector<N>,
    weight: BoundaryWeight,
    z: &Vector<N>,
) -> Result<f64> {
    let s = weight.s();
    let zeta = psi_grad(set, nu, weight, z)?;
    let dual = dot(&zeta, z) - dot(&zeta, &zeta) / (2.0 * s);
    let mut w = vscale(1.0 / s, &zeta);
    if let ElasticitySet::DeviatoricCylinder { .. } = set {
        // H((w - z)⊙ν) is finite only on the slice (w - z)·ν = 0
        let (wn, _) = normal_tangential(&w, nu);
        let (zn, _) = normal_tangential(z, nu);
        w = vadd(&w, &vscale(zn - wn, nu));
    }
    let slip = vsub(z, &w);
    let primal = 0.5 * s * dot(&w, &w) + boundary_dissipation_density(set, nu, &slip);
    if !((primal - dual).abs() <= 1e-9 * (1.0 + primal.abs())) {
        return Err(Error::MinimizerSearch { what: "relaxed boundary energy", bound: primal - dual });
    }
    Ok(dual.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Sym2, Sym3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const E1: Vector<2> = [1.0, 0.0];

    fn ball(r: f64) -> ElasticitySet<2> {
        ElasticitySet::ball(r).unwrap()
    }

    #[test]
    fn membership_examples() {
        let b = ball(2.0);
        assert_eq!(minus_knu_membership(&b, &E1, &[0.0, 0.0]).unwrap(), Membership::Interior);
        assert_eq!(minus_knu_membership(&b, &E1, &[2.0, 0.0]).unwrap(), Membership::Boundary);
        assert_eq!(minus_knu_membership(&b, &E1, &[2.02, 0.0]).unwrap(), Membership::Exterior);
        let t = 2.0 / std::f64::consts::SQRT_2;
        assert_eq!(minus_knu_membership(&b, &E1, &[0.0, t]).unwrap(), Membership::Boundary);
        assert!(minus_knu_membership(&b, &[1.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn lift_reproduces_traction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let th: f64 = rng.gen_range(0.0..6.3);
            let nu = [th.cos(), th.sin()];
            let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let tau = minimum_norm_lift(&nu, &z);
            let back = vscale(-1.0, &tau.mul_vec(&nu));
            assert!(norm(&vsub(&back, &z)) < 1e-14);
        }
    }

    #[test]
    fn projection_examples() {
        let p = project_minus_knu(&ball(1.0), &E1, &[2.0, 0.0]).unwrap();
        assert!(norm(&vsub(&p, &[1.0, 0.0])) < 1e-15);
        let p = project_minus_knu(&ball(1.0), &E1, &[0.0, 1.0]).unwrap();
        assert!(norm(&vsub(&p, &[0.0, 1.0 / std::f64::consts::SQRT_2])) < 1e-15);
    }

    #[test]
    fn lifted_route_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sets = [ball(1.0), ElasticitySet::cylinder(0.7).unwrap()];
        for set in &sets {
            for _ in 0..50 {
                let th: f64 = rng.gen_range(0.0..6.3);
                let nu = [th.cos(), th.sin()];
                let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let a = project_minus_knu(set, &nu, &y).unwrap();
                let b = project_minus_knu_lifted(set, &nu, &y).unwrap();
                assert!(norm(&vsub(&a, &b)) < 1e-8, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn halfspace_membership_agrees_with_projection() {
        let set = ElasticitySet::<2>::halfspaces(vec![
            (Sym2::new(1.0, 0.0, 0.0), 1.0),
            (Sym2::new(-1.0, 0.0, 0.0), 1.0),
            (Sym2::new(0.0, 1.0, 0.0), 1.5),
            (Sym2::new(0.0, -1.0, 0.0), 1.5),
            (Sym2::new(0.0, 0.0, 1.0), 0.8),
            (Sym2::new(0.0, 0.0, -1.0), 0.8),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let th: f64 = rng.gen_range(0.0..6.3);
            let nu = [th.cos(), th.sin()];
            let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let p = project_minus_knu(&set, &nu, &y).unwrap();
            assert!(minus_knu_membership(&set, &nu, &p).unwrap().is_member());
            let again = project_minus_knu(&set, &nu, &p).unwrap();
            assert_eq!(again, p);
            let lifted = project_minus_knu_lifted(&set, &nu, &y).unwrap();
            assert!(norm(&vsub(&lifted, &p)) < 1e-8, "{lifted:?} vs {p:?}");
        }
    }

    #[test]
    fn three_dimensional_ellipsoid() {
        let nu = [0.0, 0.0, 1.0];
        let set = ElasticitySet::<3>::ball(1.0).unwrap();
        let p = project_minus_knu(&set, &nu, &[1.0, 0.0, 0.0]).unwrap();
        assert!((p[0] - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-15);
        let tau = minimum_norm_lift(&nu, &p);
        assert!((tau.norm() - 1.0).abs() < 1e-14);
        let _ = Sym3::zero();
    }

    #[test]
    fn psi_worked_example() {
        let w = BoundaryWeight::new(1.0).unwrap();
        let v = psi_eval(&ball(1.0), &E1, w, &[3.0, 0.0]).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        let g = psi_grad(&ball(1.0), &E1, w, &[3.0, 0.0]).unwrap();
        assert!(norm(&vsub(&g, &[1.0, 0.0])) < 1e-15);
        assert_eq!(psi_eval(&ball(1.0), &E1, w, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn psi_cylinder_normal_slip() {
        // the normal part of z is never relaxed: ψ(ν) = ½ s
        let cyl = ElasticitySet::<2>::cylinder(0.5).unwrap();
        let w = BoundaryWeight::new(1.0).unwrap();
        assert!((psi_eval(&cyl, &E1, w, &E1).unwrap() - 0.5).abs() < 1e-14);
        // tangential z beyond the cap: ½ c² + c (|z| - c) with c = k/√2
        let c = 0.5 / std::f64::consts::SQRT_2;
        let v = psi_eval(&cyl, &E1, w, &[0.0, 2.0]).unwrap();
        assert!((v - (0.5 * c * c + c * (2.0 - c))).abs() < 1e-14);
    }

    #[test]
    fn dissipation_density_examples() {
        let r = 1.7;
        let b = ball(r);
        assert!((boundary_dissipation_density(&b, &E1, &E1) - r).abs() < 1e-15);
        let d = boundary_dissipation_density(&b, &E1, &[0.0, 1.0]);
        assert!((d - r / std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(boundary_dissipation_density(&b, &E1, &[0.0, 0.0]), 0.0);
        let via_h = b.support(&(-sym_outer(&[0.3, -0.4], &E1)));
        assert!((boundary_dissipation_density(&b, &E1, &[0.3, -0.4]) - via_h).abs() < 1e-15);
    }

    #[test]
    fn invalid_weight() {
        assert!(BoundaryWeight::new(0.0).is_err());
        assert!(BoundaryWeight::new(f64::NAN).is_err());
    }
}
