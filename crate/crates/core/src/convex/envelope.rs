//! Moreau–Yosida envelope `H_µ(p) = inf_q H(q) + µ|p - q|` of the support function.
//!
//! By conjugacy `H_µ` is the support function of `K ∩ B(0, µ)`; this is how every variant
//! is evaluated.

use super::{ElasticitySet, Metric};
use crate::algebra::SymMat;
use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 200;

/// `H_µ(p)` using closed forms for the ball and the cylinder.
pub fn moreau_yosida<const N: usize>(set: &ElasticitySet<N>, mu: f64, p: &SymMat<N>) -> Result<f64> {
    check_mu(mu)?;
    let pn = p.norm();
    if pn == 0.0 {
        return Ok(0.0);
    }
    match set {
        ElasticitySet::Ball { radius } => Ok(radius.min(mu) * pn),
        ElasticitySet::DeviatoricCylinder { k } => {
            let (dev, mean) = p.dev_split();
            let a = dev.norm();
            let b = (N as f64).sqrt() * mean.abs();
            if mu * a <= k * pn {
                Ok(mu * pn)
            } else {
                Ok(k * a + (mu * mu - k * k).max(0.0).sqrt() * b)
            }
        }
        ElasticitySet::Halfspaces(_) => moreau_yosida_generic(set, mu, p),
    }
}

/// `H_µ(p)` for any set, from the Lagrangian dual of `sup {τ:p : τ ∈ K, |τ| ≤ µ}`:
/// the maximiser for multiplier `γ` is `P_K(p/γ)`, and `γ` is bisected (in `log γ`) until
/// that point has norm `µ`.
pub fn moreau_yosida_generic<const N: usize>(
    set: &ElasticitySet<N>,
    mu: f64,
    p: &SymMat<N>,
) -> Result<f64> {
    check_mu(mu)?;
    let pn = p.norm();
    if pn == 0.0 {
        return Ok(0.0);
    }
    let tau_at = |g: f64| set.project(&p.scale(1.0 / g), &Metric::Frobenius);
    let dual = |g: f64, tau: &SymMat<N>| 0.5 * g * mu * mu + p.ddot(tau) - 0.5 * g * tau.ddot(tau);

    // nonexpansiveness with P_K(0) = 0 gives |P_K(p/γ)| ≤ µ at γ = |p|/µ
    let mut hi = pn / mu;
    if mu <= set.inradius() {
        return Ok(mu * pn);
    }
    let mut lo = hi;
    let mut found = false;
    // far below γ = |p|/µ the projections of p/γ lose absolute accuracy
    for _ in 0..8 {
        lo *= 0.1;
        if tau_at(lo)?.norm() >= mu {
            found = true;
            break;
        }
    }
    if !found {
        // the exposed face of K in direction p lies inside B(0, µ)
        let h = set.support(p);
        if h.is_finite() {
            return Ok(h);
        }
        return Err(Error::MinimizerSearch { what: "Moreau-Yosida multiplier", bound: lo });
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if tau_at(mid)?.norm() >= mu {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= 1e-14 {
            break;
        }
    }
    let t_lo = tau_at(lo)?;
    let t_hi = tau_at(hi)?;
    Ok(dual(lo, &t_lo).min(dual(hi, &t_hi)))
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Precondition(format!("Moreau-Yosida parameter must be positive, got {mu}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Sym2;

    #[test]
    fn ball_closed_form() {
        let set = ElasticitySet::<2>::ball(1.5).unwrap();
        let p = Sym2::new(0.3, -1.0, 0.7);
        for mu in [0.5, 1.5, 4.0] {
            let want = 1.5_f64.min(mu) * p.norm();
            assert!((moreau_yosida(&set, mu, &p).unwrap() - want).abs() < 1e-12);
            assert!((moreau_yosida_generic(&set, mu, &p).unwrap() - want).abs() < 1e-9);
        }
        assert_eq!(moreau_yosida(&set, 1.0, &Sym2::zero()).unwrap(), 0.0);
    }

    #[test]
    fn cylinder_identity_direction() {
        let set = ElasticitySet::<2>::cylinder(1.0).unwrap();
        let p = Sym2::identity();
        let v = moreau_yosida(&set, 1.0, &p).unwrap();
        assert!(v.is_finite() && v <= p.norm() + 1e-15);
        assert!((v - moreau_yosida_generic(&set, 1.0, &p).unwrap()).abs() < 1e-9);
        // dense search over q = a Id + b diag(1,-1) + c offdiag; H finite only for a = 0
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            let b = -1.0 + 2.0 * i as f64 / 400.0;
            for j in 0..=400 {
                let c = -1.0 + 2.0 * j as f64 / 400.0;
                let q = Sym2::new(b, -b, c);
                let val = set.support(&q) + (p - q).norm();
                best = best.min(val);
            }
        }
        assert!((v - best).abs() < 1e-6, "{v} vs {best}");
    }

    #[test]
    fn cylinder_closed_form_matches_generic() {
        let set = ElasticitySet::<2>::cylinder(0.8).unwrap();
        for (mu, p) in [
            (0.5, Sym2::new(1.0, 0.2, 0.3)),
            (2.0, Sym2::new(1.0, 0.2, 0.3)),
            (2.0, Sym2::new(1.0, -1.0, 0.0)),
            (1.2, Sym2::new(3.0, 2.0, -0.5)),
        ] {
            let a = moreau_yosida(&set, mu, &p).unwrap();
            let b = moreau_yosida_generic(&set, mu, &p).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + a), "{a} {b}");
        }
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let set = ElasticitySet::<2>::ball(1.0).unwrap();
        assert!(moreau_yosida(&set, 0.0, &Sym2::identity()).is_err());
    }
}
