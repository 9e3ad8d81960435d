//! The uncoupled reference problem: `N` independent copies of the
//! `2a²/sinh²(ar)` potential (l = 0, origin singularity ν = 1), whose Jost and
//! regular solutions are known in closed form. Units ℏ = 2m = 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EppError, Result};
use crate::matrix::ComplexMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this `|x|` the cancellation-prone combinations are summed as series.
const SERIES_CUTOFF: f64 = 0.1;

/// Channel parameters of the uncoupled reference model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    a: Vec<f64>,
    l: Vec<u32>,
    nu: Vec<u32>,
}

impl ChannelModel {
    /// Copies of the sinh⁻² potential with the given inverse ranges `a_j > 0`.
    ///
    /// Any channel count is accepted here; evenness is a property of the
    /// transformation and is enforced when one is constructed.
    pub fn sinh_squared(a: &[f64]) -> Result<Self> {
        if a.is_empty() {
            return Err(EppError::Domain("channel model needs at least one channel".into()));
        }
        if let Some(bad) = a.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(EppError::Domain(format!("channel parameter a = {bad} must be positive")));
        }
        Ok(Self {
            a: a.to_vec(),
            l: vec![0; a.len()],
            nu: vec![1; a.len()],
        })
    }

    pub fn n_channels(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn l(&self) -> &[u32] {
        &self.l
    }

    pub fn nu(&self) -> &[u32] {
        &self.nu
    }

    /// `V₀(r) = diag(v0(r, a_j))`.
    pub fn potential(&self, r: f64) -> Result<ComplexMatrix> {
        assemble_diagonal(self, |a| v0(r, a).map(Complex64::from))
    }

    /// Diagonal Jost solution matrix `f₀(k, r)` and its r-derivative.
    pub fn jost_solution(&self, k: Complex64, r: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        assemble_pair(self, |a| jost_solution(k, r, a))
    }

    /// Diagonal regular solution matrix `φ₀(k, r)` and its r-derivative.
    pub fn regular_solution(&self, k: Complex64, r: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        assemble_pair(self, |a| regular_solution(k, r, a))
    }
}

/// Builds `diag(f(a_1), …, f(a_N))`.
pub fn assemble_diagonal(model: &ChannelModel, f: impl Fn(f64) -> Result<Complex64>) -> Result<ComplexMatrix> {
    let diag = model.a.iter().map(|&a| f(a)).collect::<Result<Vec<_>>>()?;
    Ok(ComplexMatrix::from_diagonal(&diag))
}

fn assemble_pair(
    model: &ChannelModel,
    f: impl Fn(f64) -> Result<(Complex64, Complex64)>,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (vals, ders): (Vec<_>, Vec<_>) = model.a.iter().map(|&a| f(a)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok((ComplexMatrix::from_diagonal(&vals), ComplexMatrix::from_diagonal(&ders)))
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(EppError::Domain(format!("radius r = {r} must be positive")))
    }
}

/// `2a² / sinh²(ar)`.
pub fn v0(r: f64, a: f64) -> Result<f64> {
    check_radius(r)?;
    let s = (a * r).sinh();
    Ok(2.0 * a * a / (s * s))
}

/// `x coth x − 1`.
fn x_coth_x_minus_one(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        x2 * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0)))))
    } else {
        x / x.tanh() - 1.0
    }
}

/// `x² / sinh² x − 1`.
fn x2_csch2_minus_one(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        x2 * (-1.0 / 3.0 + x2 * (1.0 / 15.0 + x2 * (-2.0 / 189.0 + x2 * (1.0 / 675.0 + x2 * (-2.0 / 10395.0)))))
    } else {
        let s = x.sinh();
        x * x / (s * s) - 1.0
    }
}

/// `z cos z − sin z` for complex `z`.
fn z_cos_minus_sin(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ_{n≥1} (−1)ⁿ 2n z^{2n+1} / (2n+1)!
        let z2 = z * z;
        let mut term = z; // z^{2n+1} / (2n+1)!, starting at n = 0
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..=14 {
            let m = (2 * n) as f64;
            term = -term * z2 / (m * (m + 1.0));
            sum += term * m;
        }
        sum
    } else {
        z * z.cos() - z.sin()
    }
}

/// Jost solution `f₀(k, r; a) = e^{ikr} (k + ia coth(ar)) / (k + ia)` and its
/// r-derivative.
pub fn jost_solution(k: Complex64, r: f64, a: f64) -> Result<(Complex64, Complex64)> {
    check_radius(r)?;
    let denom = k + I * a;
    if denom.norm() <= f64::EPSILON * (k.norm() + a) {
        return Err(EppError::Pole(format!("Jost solution at k = -ia (a = {a})")));
    }
    let x = a * r;
    let coth = 1.0 / x.tanh();
    let csch2 = {
        let s = x.sinh();
        1.0 / (s * s)
    };
    let phase = (I * k * r).exp();
    let f = phase * (k + I * a * coth) / denom;
    let df = I * k * f - phase * I * (a * a * csch2) / denom;
    Ok((f, df))
}

/// Regular solution normalized as `φ₀ → r²/3` at the origin,
/// `φ₀(k, r; a) = (a coth(ar) sin kr − k cos kr) / (k (k² + a²))`, and its
/// r-derivative. Even in `k`; finite at `k = 0`.
pub fn regular_solution(k: Complex64, r: f64, a: f64) -> Result<(Complex64, Complex64)> {
    check_radius(r)?;
    let norm = k * k + a * a;
    if norm.norm() <= f64::EPSILON * a * a {
        return Err(EppError::Pole(format!("regular solution at k² = -a² (a = {a})")));
    }
    let x = a * r;
    let z = k * r;
    let g = x_coth_x_minus_one(x);
    let q = x2_csch2_minus_one(x);
    let h = z_cos_minus_sin(z);
    // sin(kr)/k and (kr cos kr − sin kr)/k with their k → 0 limits
    let (sin_k, h_k) = if k.norm() == 0.0 {
        (Complex64::from(r), Complex64::new(0.0, 0.0))
    } else {
        (z.sin() / k, h / k)
    };
    // a coth(ar) = (1 + g)/r,  a²/sinh²(ar) = (1 + q)/r²
    let phi = (g * sin_k - h_k) / (r * norm);
    let dphi = (h_k / (r * r) + k * z.sin() - q * sin_k / (r * r) + g * z.cos() / r) / norm;
    Ok((phi, dphi))
}

/// Jost matrix `F₀(k) = diag(i / (k + i a_j))`, the regularized `r → 0` limit
/// of `f₀(k, r)·r`.
pub fn jost_matrix(k: Complex64, model: &ChannelModel) -> Result<ComplexMatrix> {
    assemble_diagonal(model, |a| {
        let denom = k + I * a;
        if denom.norm() <= f64::EPSILON * (k.norm() + a) {
            Err(EppError::Pole(format!("Jost matrix at k = -ia (a = {a})")))
        } else {
            Ok(I / denom)
        }
    })
}

/// `S₀(k) = diag((a_j − ik) / (a_j + ik))`.
pub fn s0_matrix(k: f64, model: &ChannelModel) -> Result<ComplexMatrix> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(EppError::Domain(format!("wavenumber k = {k} must be positive")));
    }
    assemble_diagonal(model, |a| Ok(Complex64::new(a, -k) / Complex64::new(a, k)))
}

/// `δ₀(k, a_j) = −arctan(k / a_j)`, sorted ascending.
pub fn reference_eigenphases(k: f64, model: &ChannelModel) -> Vec<f64> {
    let mut d: Vec<f64> = model.a.iter().map(|&a| -(k / a).atan()).collect();
    d.sort_by(f64::total_cmp);
    d
}
