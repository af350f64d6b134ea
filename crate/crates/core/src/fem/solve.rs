use super::sparse::{dot, norm2, SparseOperator};
use crate::error::{Error, Result};

pub const LINEAR_TOL: f64 = 1e-12;

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn jacobi(op: &SparseOperator) -> Result<Vec<f64>> {
    op.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d.is_finite() && d != 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Assembly {
                    location: format!("row {i}"),
                    reason: format!("zero or non-finite diagonal {d}"),
                })
            }
        })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients for SPD systems; relative
/// residual `1e-12`, at most `20 n` iterations.
pub fn solve_linear(op: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    cg(op, rhs, None).map(|s| s.x)
}

pub fn cg(op: &SparseOperator, rhs: &[f64], x0: Option<&[f64]>) -> Result<LinearSolution> {
    let n = op.n();
    assert_eq!(rhs.len(), n, "rhs length");
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return Ok(LinearSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let dinv = jacobi(op)?;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = rhs.to_vec();
    if x0.is_some() {
        let ax = op.mul_vec(&x);
        r.iter_mut().zip(&ax).for_each(|(ri, a)| *ri -= a);
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = 20 * n.max(1);
    let mut rel = norm2(&r) / bnorm;
    for it in 0..cap {
        if rel <= LINEAR_TOL {
            return Ok(LinearSolution { x, iterations: it, relative_residual: rel });
        }
        op.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel <= LINEAR_TOL {
        return Ok(LinearSolution { x, iterations: cap, relative_residual: rel });
    }
    Err(Error::LinearSolve { iterations: cap, residual: rel })
}

/// Jacobi-preconditioned BiCGStab for nonsymmetric systems.
pub fn bicgstab(op: &SparseOperator, rhs: &[f64], x0: Option<&[f64]>) -> Result<LinearSolution> {
    let n = op.n();
    assert_eq!(rhs.len(), n, "rhs length");
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return Ok(LinearSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let dinv = jacobi(op)?;
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&dinv).map(|(a, b)| a * b).collect() };
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = op.mul_vec(x);
        rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    };
    let cap = 20 * n.max(1);
    let mut it = 0;
    let mut rel = f64::INFINITY;
    // Restart on breakdown.
    while it < cap {
        let mut r = residual(&x);
        rel = norm2(&r) / bnorm;
        if rel <= LINEAR_TOL {
            return Ok(LinearSolution { x, iterations: it, relative_residual: rel });
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut breakdown = false;
        while it < cap {
            it += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                breakdown = true;
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let ph = precond(&p);
            op.mul_vec_into(&ph, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 || !rv.is_finite() {
                breakdown = true;
                break;
            }
            alpha = rho / rv;
            let s: Vec<f64> = r.iter().zip(&v).map(|(a, b)| a - alpha * b).collect();
            if norm2(&s) / bnorm <= LINEAR_TOL {
                x.iter_mut().zip(&ph).for_each(|(xi, pi)| *xi += alpha * pi);
                break;
            }
            let sh = precond(&s);
            let t = op.mul_vec(&sh);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                breakdown = true;
                break;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm2(&r) / bnorm;
            if rel <= LINEAR_TOL || omega == 0.0 {
                break;
            }
        }
        // Confirm with the true residual before returning.
        let true_rel = norm2(&residual(&x)) / bnorm;
        if true_rel <= LINEAR_TOL * 10.0 {
            return Ok(LinearSolution { x, iterations: it, relative_residual: true_rel });
        }
        rel = true_rel;
        if breakdown && it >= cap {
            break;
        }
    }
    Err(Error::LinearSolve { iterations: it, residual: rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, a: f64, b: f64, c: f64) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, b));
            if i > 0 {
                t.push((i, i - 1, a));
            }
            if i + 1 < n {
                t.push((i, i + 1, c));
            }
        }
        SparseOperator::from_triplets(n, &t)
    }

    #[test]
    fn cg_recovers_forward_product() {
        let op = tridiag(50, -1.0, 2.5, -1.0);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = op.mul_vec(&xs);
        let x = solve_linear(&op, &b).unwrap();
        let err = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let op = tridiag(5, -1.0, 3.0, -1.0);
        assert_eq!(solve_linear(&op, &[0.0; 5]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn bicgstab_nonsymmetric() {
        let op = tridiag(60, -1.3, 3.0, -0.4);
        let xs: Vec<f64> = (0..60).map(|i| 1.0 + (i as f64).cos()).collect();
        let b = op.mul_vec(&xs);
        let sol = bicgstab(&op, &b, None).unwrap();
        let err = sol.x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn cg_reports_indefinite() {
        let op = tridiag(4, 0.0, -1.0, 0.0);
        assert!(matches!(solve_linear(&op, &[1.0; 4]), Err(Error::LinearSolve { .. })));
    }
}
