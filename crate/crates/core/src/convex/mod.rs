//! Elasticity sets, their support functions and metric projections.
//!
//! Boundary-side quantities (the traction set `-Kν`, the relaxed boundary energy and its
//! gradient) live in [`boundary`]; the Moreau–Yosida envelope of the support function in
//! [`envelope`].

pub mod boundary;
pub mod envelope;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::algebra::{Hooke, SymMat};
use crate::error::{Error, Result};

pub use boundary::{
    boundary_dissipation_density, minus_knu_membership, project_minus_knu,
    project_minus_knu_lifted, psi_eval, psi_grad, BoundaryWeight, Membership,
};
pub use envelope::{moreau_yosida, moreau_yosida_generic};

/// Tolerance band used when deciding membership close to the boundary of a set.
pub const MEMBERSHIP_BAND: f64 = 1e-9;

/// Relative tolerance for treating a trace (or normal component) as zero when a support
/// function is infinite off a linear subspace.
pub(crate) const TRACE_TOL: f64 = 1e-10;

const DYKSTRA_TOL: f64 = 1e-13;
const DYKSTRA_MAX_CYCLES: usize = 100_000;
const POLISH_EVERY: usize = 50;

/// One closed half-space `{τ : N:τ ≤ c}` with `|N| = 1` and `c > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace<const N: usize> {
    pub normal: SymMat<N>,
    pub offset: f64,
}

/// Closed convex set of admissible stresses containing a ball around the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum ElasticitySet<const N: usize> {
    /// Frobenius ball `|τ| ≤ radius`.
    Ball { radius: f64 },
    /// `|τ_D| ≤ k`, unbounded along the identity.
    DeviatoricCylinder { k: f64 },
    Halfspaces(Vec<Halfspace<N>>),
}

/// Inner product used by [`ElasticitySet::project`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Frobenius,
    /// `‖τ‖² = A⁻¹τ:τ`, the complementary-energy metric of a Hooke tensor.
    Hooke(Hooke),
}

impl Metric {
    fn norm_sq<const N: usize>(&self, t: &SymMat<N>) -> f64 {
        match self {
            Metric::Frobenius => t.ddot(t),
            Metric::Hooke(a) => a.compliance_norm_sq(t),
        }
    }

    /// Inverse of the metric operator: the metric gradient of `τ ↦ N:τ`.
    fn raise<const N: usize>(&self, n: &SymMat<N>) -> SymMat<N> {
        match self {
            Metric::Frobenius => *n,
            Metric::Hooke(a) => a.apply(n),
        }
    }

    pub fn inner<const N: usize>(&self, a: &SymMat<N>, b: &SymMat<N>) -> f64 {
        match self {
            Metric::Frobenius => a.ddot(b),
            Metric::Hooke(h) => h.inverse(a).ddot(b),
        }
    }
}

impl<const N: usize> ElasticitySet<N> {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { radius })
    }

    pub fn cylinder(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidSet(format!("cylinder radius must be positive, got {k}")));
        }
        Ok(Self::DeviatoricCylinder { k })
    }

    /// Normals are rescaled to unit Frobenius norm (offsets accordingly).
    pub fn halfspaces(planes: Vec<(SymMat<N>, f64)>) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::InvalidSet("half-space intersection needs at least one plane".into()));
        }
        let mut out = Vec::with_capacity(planes.len());
        for (n, c) in planes {
            let len = n.norm();
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidSet("half-space normal must be nonzero".into()));
            }
            let offset = c / len;
            if !(offset.is_finite() && offset > 0.0) {
                return Err(Error::InvalidSet(format!(
                    "half-space offset must be positive so that 0 is interior, got {c}"
                )));
            }
            out.push(Halfspace { normal: n.scale(1.0 / len), offset });
        }
        Ok(Self::Halfspaces(out))
    }

    /// Radius of a Frobenius ball around 0 contained in the set.
    pub fn inradius(&self) -> f64 {
        match self {
            Self::Ball { radius } => *radius,
            Self::DeviatoricCylinder { k } => *k,
            Self::Halfspaces(hs) => hs.iter().map(|h| h.offset).fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest `r` with `σ + B(0, r) ⊂ K` (negative when `σ ∉ K`).
    pub fn inner_margin(&self, sigma: &SymMat<N>) -> f64 {
        match self {
            Self::Ball { radius } => radius - sigma.norm(),
            Self::DeviatoricCylinder { k } => k - sigma.deviator().norm(),
            Self::Halfspaces(hs) => hs
                .iter()
                .map(|h| h.offset - h.normal.ddot(sigma))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, sigma: &SymMat<N>, tol: f64) -> bool {
        self.inner_margin(sigma) >= -tol
    }

    /// Support function `H(q) = sup_{τ∈K} τ:q`, possibly `+∞`.
    pub fn support(&self, q: &SymMat<N>) -> f64 {
        match self {
            Self::Ball { radius } => radius * q.norm(),
            Self::DeviatoricCylinder { k } => {
                let (qd, mean) = q.dev_split();
                let qn = q.norm();
                if (mean * N as f64).abs() > TRACE_TOL * qn {
                    f64::INFINITY
                } else {
                    k * qd.norm()
                }
            }
            Self::Halfspaces(hs) => {
                let d = SymMat::<N>::COMPONENTS;
                let c = q.to_mandel()[..d].to_vec();
                let a: Vec<Vec<f64>> = hs.iter().map(|h| h.normal.to_mandel()[..d].to_vec()).collect();
                let b: Vec<f64> = hs.iter().map(|h| h.offset).collect();
                match lp::maximize(&c, &a, &b) {
                    lp::LpOutcome::Optimal { value, .. } => value.max(0.0),
                    lp::LpOutcome::Unbounded => f64::INFINITY,
                }
            }
        }
    }

    /// Projection onto the set in the given metric. Returns the input unchanged when it
    /// already lies in the set.
    pub fn project(&self, sigma: &SymMat<N>, metric: &Metric) -> Result<SymMat<N>> {
        Ok(self.project_split(sigma, metric)?.0)
    }

    /// Projection together with the residual `σ - P_K σ`, computed without cancellation
    /// where a closed form exists (the cylinder residual is exactly trace-free).
    pub fn project_split(&self, sigma: &SymMat<N>, metric: &Metric) -> Result<(SymMat<N>, SymMat<N>)> {
        let proj = match self {
            Self::Ball { radius } => project_ball(*radius, sigma, metric),
            Self::DeviatoricCylinder { k } => {
                // Isotropic metrics decouple spherical and deviatoric parts, so the
                // Frobenius radial return is the metric projection as well.
                let (dev, mean) = sigma.dev_split();
                let dn = dev.norm();
                if dn <= *k {
                    return Ok((*sigma, SymMat::zero()));
                }
                return Ok((dev.scale(k / dn) + SymMat::scaled_identity(mean), dev.scale(1.0 - k / dn)));
            }
            Self::Halfspaces(hs) => project_halfspaces(hs, sigma, metric)?,
        };
        Ok((proj, *sigma - proj))
    }
}

fn project_ball<const N: usize>(radius: f64, sigma: &SymMat<N>, metric: &Metric) -> SymMat<N> {
    let sn = sigma.norm();
    if sn <= radius {
        return *sigma;
    }
    let hooke = match metric {
        Metric::Frobenius => return sigma.scale(radius / sn),
        Metric::Hooke(a) => a,
    };
    // Stationarity of ½‖σ-τ‖²_{A⁻¹} + (γ/2)(|τ|² - r²) per spherical/deviatoric block:
    // τ_D = a σ_D / (a + γ), τ_m = b σ_m / (b + γ) with a = 1/2µ, b = 1/(nλ+2µ).
    let a = 1.0 / (2.0 * hooke.mu());
    let b = 1.0 / hooke.spherical_modulus(N);
    let (dev, mean) = sigma.dev_split();
    let d2 = dev.ddot(&dev);
    let s2 = N as f64 * mean * mean;
    let g = |gamma: f64| {
        let fd = a / (a + gamma);
        let fs = b / (b + gamma);
        fd * fd * d2 + fs * fs * s2 - radius * radius
    };
    let dg = |gamma: f64| {
        let fd = a / (a + gamma);
        let fs = b / (b + gamma);
        -2.0 * (fd * fd * d2 / (a + gamma) + fs * fs * s2 / (b + gamma))
    };
    let mut lo = 0.0;
    let mut hi = a.max(b) * sn / radius;
    let mut gamma = 0.5 * hi;
    for _ in 0..200 {
        let val = g(gamma);
        if val > 0.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
        let step = val / dg(gamma);
        let mut next = gamma - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - gamma).abs() <= 1e-17 * (1.0 + gamma) || hi - lo <= 1e-16 * hi {
            gamma = next;
            break;
        }
        gamma = next;
    }
    let tau = dev.scale(a / (a + gamma)) + SymMat::scaled_identity(mean * b / (b + gamma));
    let tn = tau.norm();
    if tn > radius {
        tau.scale(radius / tn)
    } else {
        tau
    }
}

fn project_halfspaces<const N: usize>(
    hs: &[Halfspace<N>],
    sigma: &SymMat<N>,
    metric: &Metric,
) -> Result<SymMat<N>> {
    let violation = |x: &SymMat<N>| {
        hs.iter().map(|h| h.normal.ddot(x) - h.offset).fold(f64::NEG_INFINITY, f64::max)
    };
    if violation(sigma) <= 0.0 {
        return Ok(*sigma);
    }
    let raised: Vec<SymMat<N>> = hs.iter().map(|h| metric.raise(&h.normal)).collect();
    let gram_diag: Vec<f64> = hs.iter().zip(&raised).map(|(h, r)| h.normal.ddot(r)).collect();
    let scale = 1.0 + metric.norm_sq(sigma).sqrt();

    // Dykstra's alternating projections with per-plane correction terms, polished on the
    // identified active set every few cycles.
    let mut x = *sigma;
    let mut corr = vec![SymMat::<N>::zero(); hs.len()];
    let mut last_change = f64::INFINITY;
    for cycle in 0..DYKSTRA_MAX_CYCLES {
        let start = x;
        for (i, h) in hs.iter().enumerate() {
            let y = x + corr[i];
            let excess = h.normal.ddot(&y) - h.offset;
            let proj = if excess > 0.0 { y - raised[i].scale(excess / gram_diag[i]) } else { y };
            corr[i] = y - proj;
            x = proj;
        }
        last_change = metric.norm_sq(&(x - start)).sqrt();
        let converged = last_change <= DYKSTRA_TOL * scale && violation(&x) <= 1e-10 * scale;
        if converged || cycle % POLISH_EVERY == POLISH_EVERY - 1 {
            if let Some(tau) = polish_active_set(hs, &raised, sigma, x, metric) {
                return Ok(tau);
            }
        }
        if converged {
            // the stopping test is relative to |σ|, so a far-away σ needs the exact solve
            return Ok(enumerate_active_sets(hs, &raised, sigma).unwrap_or(x));
        }
    }
    enumerate_active_sets(hs, &raised, sigma).ok_or(Error::IterationLimit {
        what: "Dykstra projection",
        iterations: DYKSTRA_MAX_CYCLES,
        residual: last_change,
    })
}

/// KKT point on a given active set: `τ = σ - Σ m_i R n_i` with the active constraints tight.
/// Returns `None` unless the multipliers are nonnegative and `τ` is feasible, in which
/// case `τ` is the projection.
fn kkt_candidate<const N: usize>(
    hs: &[Halfspace<N>],
    raised: &[SymMat<N>],
    sigma: &SymMat<N>,
    active: &[usize],
) -> Option<SymMat<N>> {
    let scale = 1.0 + sigma.norm();
    let k = active.len();
    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            gram[r][c] = hs[i].normal.ddot(&raised[j]);
        }
        rhs[r] = hs[i].normal.ddot(sigma) - hs[i].offset;
    }
    let mult = solve_dense(gram, rhs)?;
    if mult.iter().any(|&m| m < -1e-12 * scale) {
        return None;
    }
    let mut tau = *sigma;
    for (m, &i) in mult.iter().zip(active) {
        tau -= raised[i].scale(*m);
    }
    hs.iter().all(|h| h.normal.ddot(&tau) <= h.offset + 1e-12 * scale).then_some(tau)
}

/// Exhaustive search over active sets of size at most `dim M^N_sym`.
fn enumerate_active_sets<const N: usize>(
    hs: &[Halfspace<N>],
    raised: &[SymMat<N>],
    sigma: &SymMat<N>,
) -> Option<SymMat<N>> {
    fn walk<const N: usize>(
        hs: &[Halfspace<N>],
        raised: &[SymMat<N>],
        sigma: &SymMat<N>,
        from: usize,
        active: &mut Vec<usize>,
    ) -> Option<SymMat<N>> {
        if !active.is_empty() {
            if let Some(tau) = kkt_candidate(hs, raised, sigma, active) {
                return Some(tau);
            }
        }
        if active.len() == SymMat::<N>::COMPONENTS {
            return None;
        }
        for i in from..hs.len() {
            active.push(i);
            let found = walk(hs, raised, sigma, i + 1, active);
            active.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
    walk(hs, raised, sigma, 0, &mut Vec::new())
}

/// Re-solves the projection exactly on the active set identified by Dykstra's iterate.
fn polish_active_set<const N: usize>(
    hs: &[Halfspace<N>],
    raised: &[SymMat<N>],
    sigma: &SymMat<N>,
    approx: SymMat<N>,
    metric: &Metric,
) -> Option<SymMat<N>> {
    let scale = 1.0 + sigma.norm();
    let active: Vec<usize> = (0..hs.len())
        .filter(|&i| hs[i].normal.ddot(&approx) >= hs[i].offset - 1e-8 * scale)
        .collect();
    if active.is_empty() || active.len() > SymMat::<N>::COMPONENTS {
        return None;
    }
    let tau = kkt_candidate(hs, raised, sigma, &active)?;
    (metric.norm_sq(&(tau - approx)).sqrt() <= 1e-6 * scale).then_some(tau)
}

/// Gaussian elimination with partial pivoting for small dense systems.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let amax = a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * amax.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
