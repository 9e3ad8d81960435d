use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::error::{EppError, Result};

/// Absolute tolerance on `max |BᵀB − I|` for entries of order one; scaled by
/// `max |B_ij|²` for matrices with large entries.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// A sign, used both for square-root branches and for `Q = σ i B`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_i32(s: i32) -> Option<Self> {
        match s {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// Complex orthogonal matrix: `BᵀB = BBᵀ = I` (plain transpose, no conjugation).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOrthogonal {
    b: ComplexMatrix,
}

impl ComplexOrthogonal {
    /// Wraps `b` after checking both `BᵀB = I` and `BBᵀ = I`.
    pub fn new(b: ComplexMatrix) -> Result<Self> {
        if !b.is_square() {
            return Err(EppError::Shape {
                op: "ComplexOrthogonal::new",
                expected: "square matrix".into(),
                found: format!("{}x{}", b.rows(), b.cols()),
            });
        }
        let defect = orthogonality_defect(&b);
        let scale = b.max_abs().powi(2).max(1.0);
        if !(defect <= ORTHOGONALITY_TOL * scale) {
            return Err(EppError::NotComplexOrthogonal { defect });
        }
        Ok(Self { b })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            b: ComplexMatrix::identity(m),
        }
    }

    /// Product of planar factors over every index pair `(p, q)`, `p < q`, in
    /// lexicographic order: `m(m−1)/2` complex angles, i.e. `m(m−1)` real
    /// parameters.
    pub fn from_angles(m: usize, angles: &[Complex64]) -> Result<Self> {
        let planes = all_planes(m);
        if angles.len() != planes.len() {
            return Err(EppError::Shape {
                op: "ComplexOrthogonal::from_angles",
                expected: format!("{} angles for m = {m}", planes.len()),
                found: format!("{} angles", angles.len()),
            });
        }
        complex_orthogonal_general(m, angles, &planes)
    }

    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.b
    }

    pub fn defect(&self) -> f64 {
        orthogonality_defect(&self.b)
    }
}

/// `max(‖BᵀB − I‖_max, ‖BBᵀ − I‖_max)`.
pub fn orthogonality_defect(b: &ComplexMatrix) -> f64 {
    let id = ComplexMatrix::identity(b.rows());
    let bt = b.transpose();
    (&bt * b).max_diff(&id).max((b * &bt).max_diff(&id))
}

/// Index pairs `(p, q)` with `p < q < m`, lexicographic.
pub fn all_planes(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|p| (p + 1..m).map(move |q| (p, q))).collect()
}

/// `[[b, s], [−s, b]]` with `s = ±√(1 − b²)` (principal root for `Sign::Plus`).
pub fn complex_orthogonal_2x2(b: Complex64, branch: Sign) -> ComplexOrthogonal {
    let s = (Complex64::new(1.0, 0.0) - b * b).sqrt() * branch.value();
    let m = ComplexMatrix::new(2, 2, vec![b, s, -s, b]).expect("2x2");
    ComplexOrthogonal { b: m }
}

/// Product `G(p₁,q₁,θ₁)·G(p₂,q₂,θ₂)⋯` of complex planar rotations, each acting
/// as `[[cos θ, sin θ], [−sin θ, cos θ]]` in its `(p, q)` plane (0-based).
pub fn complex_orthogonal_general(m: usize, angles: &[Complex64], planes: &[(usize, usize)]) -> Result<ComplexOrthogonal> {
    if m == 0 {
        return Err(EppError::Range("dimension must be positive".into()));
    }
    if angles.len() != planes.len() {
        return Err(EppError::Shape {
            op: "complex_orthogonal_general",
            expected: format!("{} angles", planes.len()),
            found: format!("{} angles", angles.len()),
        });
    }
    let mut b = ComplexMatrix::identity(m);
    for (&theta, &(p, q)) in angles.iter().zip(planes) {
        if p >= q || q >= m {
            return Err(EppError::Range(format!("invalid plane ({p}, {q}) for m = {m}")));
        }
        let (c, s) = (theta.cos(), theta.sin());
        // right-multiply by the planar factor: only columns p and q change
        for i in 0..m {
            let (bp, bq) = (b[(i, p)], b[(i, q)]);
            b[(i, p)] = bp * c - bq * s;
            b[(i, q)] = bp * s + bq * c;
        }
    }
    Ok(ComplexOrthogonal { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn b_equal_one_is_identity() {
        for branch in [Sign::Plus, Sign::Minus] {
            let b = complex_orthogonal_2x2(c(1.0, 0.0), branch);
            assert!(b.matrix().max_diff(&ComplexMatrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn b_zero_is_quarter_rotation() {
        let b = complex_orthogonal_2x2(c(0.0, 0.0), Sign::Plus);
        let expected = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(b.matrix().max_diff(&expected) < 1e-15);
    }

    #[test]
    fn both_branches_are_orthogonal() {
        for branch in [Sign::Plus, Sign::Minus] {
            let b = complex_orthogonal_2x2(c(2.5, 1.3), branch);
            assert!(b.defect() < 1e-12);
            assert!(ComplexOrthogonal::new(b.into_matrix()).is_ok());
        }
    }

    #[test]
    fn single_factor_matches_closed_form() {
        let theta = c(0.4, -0.9);
        let g = complex_orthogonal_general(2, &[theta], &[(0, 1)]).unwrap();
        let b = complex_orthogonal_2x2(theta.cos(), Sign::Plus);
        // sin θ is one of the two roots of 1 − cos²θ
        let alt = complex_orthogonal_2x2(theta.cos(), Sign::Minus);
        let d = g.matrix().max_diff(b.matrix()).min(g.matrix().max_diff(alt.matrix()));
        assert!(d < 1e-14);
    }

    #[test]
    fn trivial_dimension_one() {
        let b = complex_orthogonal_general(1, &[], &[]).unwrap();
        assert_eq!(b.matrix(), &ComplexMatrix::identity(1));
    }

    #[test]
    fn invalid_planes_are_rejected() {
        assert!(matches!(
            complex_orthogonal_general(3, &[c(0.1, 0.0)], &[(1, 1)]),
            Err(EppError::Range(_))
        ));
        assert!(matches!(
            complex_orthogonal_general(3, &[c(0.1, 0.0)], &[(0, 3)]),
            Err(EppError::Range(_))
        ));
        assert!(matches!(
            complex_orthogonal_general(3, &[c(0.1, 0.0)], &[(2, 1)]),
            Err(EppError::Range(_))
        ));
    }

    #[test]
    fn corrupted_matrix_is_rejected() {
        let mut b = complex_orthogonal_2x2(c(2.5, 1.3), Sign::Plus).into_matrix();
        b[(0, 0)] += c(1e-3, 0.0);
        assert!(matches!(
            ComplexOrthogonal::new(b),
            Err(EppError::NotComplexOrthogonal { .. })
        ));
    }

    #[test]
    fn angle_count_matches_planes() {
        assert_eq!(all_planes(4).len(), 6);
        assert!(ComplexOrthogonal::from_angles(3, &[c(0.1, 0.2)]).is_err());
        assert!(ComplexOrthogonal::from_angles(3, &[c(0.1, 0.2), c(-0.3, 0.5), c(1.0, 0.1)]).is_ok());
    }
}
