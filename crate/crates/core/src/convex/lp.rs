//! Dense tableau simplex for the small linear programs behind support functions of
//! polyhedral elasticity sets.
//!
//! Solves `max cᵀx  s.t.  A x ≤ b` with `x` free and `b ≥ 0`, so the slack basis is
//! feasible from the start and no phase one is needed. Bland's rule prevents cycling.

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
}

/// `a` is row-major with `rows.len() == b.len()` and each row of length `c.len()`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let d = c.len();
    let m = a.len();
    debug_assert!(b.iter().all(|&bi| bi >= 0.0));
    // columns: x⁺ (d), x⁻ (d), slack (m), rhs
    let ncol = 2 * d + m;
    let mut t = vec![vec![0.0; ncol + 1]; m];
    for (i, row) in a.iter().enumerate() {
        for j in 0..d {
            t[i][j] = row[j];
            t[i][d + j] = -row[j];
        }
        t[i][2 * d + i] = 1.0;
        t[i][ncol] = b[i].max(0.0);
    }
    let mut cost = vec![0.0; ncol];
    for j in 0..d {
        cost[j] = c[j];
        cost[d + j] = -c[j];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * d + i).collect();
    let scale = c.iter().fold(1.0_f64, |s, x| s.max(x.abs()));

    for _ in 0..MAX_PIVOTS {
        // reduced costs r_j = c_j - c_Bᵀ column_j
        let entering = (0..ncol).find(|&j| {
            let r = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
            r > PIVOT_EPS * scale
        });
        let Some(j) = entering else {
            let mut x = vec![0.0; d];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < d {
                    x[bv] += t[i][ncol];
                } else if bv < 2 * d {
                    x[bv - d] -= t[i][ncol];
                }
            }
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            return LpOutcome::Optimal { value, x };
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > PIVOT_EPS {
                let ratio = t[i][ncol] / t[i][j];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return LpOutcome::Unbounded;
        };
        let piv = t[r][j];
        t[r].iter_mut().for_each(|x| *x /= piv);
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[j];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= f * p);
                }
            }
        }
        basis[r] = j;
    }
    // Bland's rule terminates; reaching here means numerical trouble. Report the
    // conservative answer.
    LpOutcome::Unbounded
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_maximum() {
        // |x| ≤ 1, |y| ≤ 2
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let b = vec![1.0, 1.0, 2.0, 2.0];
        match maximize(&[3.0, -1.0], &a, &b) {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 5.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        let a = vec![vec![1.0, 0.0]];
        assert_eq!(maximize(&[0.0, 1.0], &a, &[1.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn simplex_triangle() {
        // x ≥ -1, y ≥ -1, x + y ≤ 1
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 1.0, 1.0];
        match maximize(&[1.0, 0.0], &a, &b) {
            LpOutcome::Optimal { value, .. } => assert!((value - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
