use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{EppError, Result};

/// Eigenvalues of `Re S` closer than this are diagonalized jointly with `Im S`.
const CLUSTER_GAP: f64 = 1e-6;

/// Cyclic Jacobi eigen-decomposition of a real symmetric `n×n` matrix given
/// row-major. Returns eigenvalues and the row-major matrix whose columns are
/// the corresponding orthonormal eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n, "symmetric_eigen: expected {n}x{n}");
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Eigen-phase shifts `δ_j` of a unitary symmetric matrix, `S v_j = e^{2iδ_j} v_j`,
/// each in `(−π/2, π/2]`, sorted ascending.
///
/// A unitary symmetric `S = A + iB` has commuting real symmetric `A` and `B`,
/// so a real orthogonal basis diagonalizes both. `A` is diagonalized first and
/// `B` is then diagonalized inside each (near-)degenerate eigenspace of `A`.
pub fn eigenphases_symmetric_unitary(s: &ComplexMatrix, tol: f64) -> Result<Vec<f64>> {
    if !s.is_square() {
        return Err(EppError::Shape {
            op: "eigenphases_symmetric_unitary",
            expected: "square matrix".into(),
            found: format!("{}x{}", s.rows(), s.cols()),
        });
    }
    let n = s.rows();
    let unitarity = (s * &s.adjoint()).max_diff(&ComplexMatrix::identity(n));
    if !(unitarity <= tol) {
        return Err(EppError::Contract(format!(
            "S not unitary: max |SS† − I| = {unitarity:e} > {tol:e}"
        )));
    }
    let asym = s.asymmetry();
    if !(asym <= tol) {
        return Err(EppError::Contract(format!(
            "S not symmetric: max |S − Sᵀ| = {asym:e} > {tol:e}"
        )));
    }

    let sym = |f: fn(Complex64) -> f64| -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = 0.5 * (f(s[(i, j)]) + f(s[(j, i)]));
            }
        }
        m
    };
    let re = sym(|z| z.re);
    let im = sym(|z| z.im);

    let (vals, vecs) = symmetric_eigen(&re, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));

    let column = |m: &[f64], j: usize| -> Vec<f64> { (0..n).map(|i| m[i * n + j]).collect() };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[order[end]] - vals[order[end - 1]] <= CLUSTER_GAP {
            end += 1;
        }
        let cluster: Vec<Vec<f64>> = order[start..end].iter().map(|&j| column(&vecs, j)).collect();
        if cluster.len() == 1 {
            basis.extend(cluster);
        } else {
            let m = cluster.len();
            let mut projected = vec![0.0; m * m];
            for (a, va) in cluster.iter().enumerate() {
                let bv: Vec<f64> = (0..n).map(|i| (0..n).map(|k| im[i * n + k] * va[k]).sum()).collect();
                for (b, vb) in cluster.iter().enumerate() {
                    projected[b * m + a] = vb.iter().zip(&bv).map(|(x, y)| x * y).sum();
                }
            }
            let (_, rot) = symmetric_eigen(&projected, m);
            for j in 0..m {
                let v: Vec<f64> = (0..n).map(|i| (0..m).map(|a| cluster[a][i] * rot[a * m + j]).sum()).collect();
                basis.push(v);
            }
        }
        start = end;
    }

    let mut phases: Vec<f64> = basis
        .iter()
        .map(|v| {
            let mut lambda = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    lambda += s[(i, j)] * (v[i] * v[j]);
                }
            }
            let delta = 0.5 * lambda.arg();
            // arg ∈ (−π, π] already; guard the −π/2 endpoint against rounding
            if delta <= -FRAC_PI_2 {
                delta + std::f64::consts::PI
            } else {
                delta
            }
        })
        .collect();
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}
