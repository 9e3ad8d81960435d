//! Independent check of the closed-form S-matrix: integrate the coupled radial
//! equation `Ψ'' = (V(r) − k²) Ψ` through a tabulated potential, match to free
//! waves, and compare eigen-phase shifts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{EppError, Result};
use crate::matrix::{eigenphases_symmetric_unitary, ComplexMatrix};
use crate::transform::EppTransform;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Per-step limit on the step-doubling error estimate (relative).
pub const STEP_ERROR_LIMIT: f64 = 1e-9;

/// `‖V(r_match)‖_max` must be below this for free-wave matching.
pub const ASYMPTOTIC_POTENTIAL_LIMIT: f64 = 1e-10;

/// Integration mesh: steps of `min(step, relative_step · r)` from `r_min`
/// to `r_match`, so the mesh is geometric near the origin and uniform outside.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialGrid {
    r_min: f64,
    r_match: f64,
    step: f64,
    relative_step: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_match: f64, step: f64) -> Result<Self> {
        Self::with_relative_step(r_min, r_match, step, step)
    }

    pub fn with_relative_step(r_min: f64, r_match: f64, step: f64, relative_step: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_match && r_match.is_finite()) {
            return Err(EppError::Domain(format!("need 0 < r_min < r_match, got {r_min}, {r_match}")));
        }
        if !(step > 0.0 && relative_step > 0.0 && relative_step < 1.0) {
            return Err(EppError::Domain(format!("invalid steps {step}, {relative_step}")));
        }
        if (r_match - r_min) / step < 100.0 {
            return Err(EppError::Domain(format!(
                "grid too coarse: (r_match − r_min)/step = {} < 100",
                (r_match - r_min) / step
            )));
        }
        Ok(Self {
            r_min,
            r_match,
            step,
            relative_step,
        })
    }

    /// Grid for verifying a transformation: `r_match = max(30/k_i, 12/min a_j)`
    /// puts both `W₂` and `V₀` far below the matching threshold.
    pub fn for_transform(transform: &EppTransform, r_min: f64, step: f64) -> Result<Self> {
        let a_min = transform.model().a().iter().copied().fold(f64::INFINITY, f64::min);
        let r_match = (30.0 / transform.spec().k_i()).max(12.0 / a_min);
        Self::new(r_min, r_match, step)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_match(&self) -> f64 {
        self.r_match
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn relative_step(&self) -> f64 {
        self.relative_step
    }

    /// Same mesh shape with both steps halved.
    pub fn refined(&self) -> Self {
        Self {
            step: self.step / 2.0,
            relative_step: self.relative_step / 2.0,
            ..self.clone()
        }
    }

    /// Mesh nodes including both endpoints.
    pub fn nodes(&self) -> Vec<f64> {
        let mut nodes = vec![self.r_min];
        let mut r = self.r_min;
        while r < self.r_match {
            let h = self.step.min(self.relative_step * r);
            r = if self.r_match - r < 1.5 * h { self.r_match } else { r + h };
            nodes.push(r);
        }
        nodes
    }

    pub fn points(&self) -> usize {
        self.nodes().len()
    }
}

/// Initial values at `r_min`.
#[derive(Clone, Debug, PartialEq)]
pub enum Seed {
    /// `Ψ = 0`, `Ψ' = I`.
    Vanishing,
    /// `Ψ = diag(r^{ν_j+1})`, `Ψ' = diag((ν_j+1) r^{ν_j})`.
    PowerLaw(Vec<u32>),
}

impl Seed {
    fn initial(&self, n: usize, r: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        match self {
            Seed::Vanishing => Ok((ComplexMatrix::zeros(n, n), ComplexMatrix::identity(n))),
            Seed::PowerLaw(nu) => {
                if nu.len() != n {
                    return Err(EppError::Shape {
                        op: "Seed::PowerLaw",
                        expected: format!("{n} exponents"),
                        found: format!("{}", nu.len()),
                    });
                }
                let psi: Vec<Complex64> = nu.iter().map(|&v| Complex64::from(r.powi(v as i32 + 1))).collect();
                let dpsi: Vec<Complex64> = nu
                    .iter()
                    .map(|&v| Complex64::from((v as f64 + 1.0) * r.powi(v as i32)))
                    .collect();
                Ok((ComplexMatrix::from_diagonal(&psi), ComplexMatrix::from_diagonal(&dpsi)))
            }
        }
    }
}

/// Potential tabulated at the quarter points of every mesh interval, which is
/// everything a step-doubled RK4 sweep needs; one table serves every `k`.
#[derive(Clone, Debug)]
pub struct SampledPotential {
    grid: RadialGrid,
    nodes: Vec<f64>,
    /// `values[4 i + j]` is `V(nodes[i] + j h_i / 4)`.
    values: Vec<ComplexMatrix>,
}

impl SampledPotential {
    pub fn new(grid: &RadialGrid, v: impl Fn(f64) -> Result<ComplexMatrix> + Sync) -> Result<Self> {
        let nodes = grid.nodes();
        let radii: Vec<f64> = nodes
            .windows(2)
            .flat_map(|w| {
                let h = w[1] - w[0];
                (0..4).map(move |j| w[0] + h * j as f64 / 4.0)
            })
            .chain(std::iter::once(grid.r_match))
            .collect();
        let values = radii.par_iter().map(|&r| v(r)).collect::<Result<Vec<_>>>()?;
        let n = values[0].rows();
        if let Some(bad) = values.iter().position(|m| m.rows() != n || !m.is_square() || !m.is_finite()) {
            return Err(EppError::Domain(format!(
                "potential is not a finite {n}x{n} matrix at r = {}",
                radii[bad]
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            nodes,
            values,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn n_channels(&self) -> usize {
        self.values[0].rows()
    }

    /// `V(r_match)`.
    pub fn at_match(&self) -> &ComplexMatrix {
        self.values.last().expect("nonempty table")
    }

    /// Propagates `N` column solutions from `r_min` to `r_match`.
    pub fn integrate(&self, ksq: f64, seed: &Seed) -> Result<RadialSolution> {
        let n = self.n_channels();
        let shift = ComplexMatrix::identity(n).scale_real(ksq);
        let (mut psi, mut dpsi) = seed.initial(n, self.grid.r_min)?;
        let mut max_estimate = 0.0_f64;
        for (i, w) in self.nodes.windows(2).enumerate() {
            let h = w[1] - w[0];
            let v = |j: usize| &self.values[4 * i + j] - &shift;
            let (v0, v1, v2, v3, v4) = (v(0), v(1), v(2), v(3), v(4));
            let full = rk4_step(&psi, &dpsi, h, &v0, &v2, &v4);
            let half = rk4_step(&psi, &dpsi, h / 2.0, &v0, &v1, &v2);
            let half = rk4_step(&half.0, &half.1, h / 2.0, &v2, &v3, &v4);
            let d_psi = &half.0 - &full.0;
            let d_dpsi = &half.1 - &full.1;
            let estimate = (d_psi.max_abs() / half.0.max_abs().max(f64::MIN_POSITIVE))
                .max(d_dpsi.max_abs() / half.1.max_abs().max(f64::MIN_POSITIVE))
                / 15.0;
            if !(estimate <= STEP_ERROR_LIMIT) {
                return Err(EppError::Accuracy {
                    r: w[0],
                    estimate,
                    limit: STEP_ERROR_LIMIT,
                });
            }
            max_estimate = max_estimate.max(estimate);
            psi = &half.0 + &d_psi.scale_real(1.0 / 15.0);
            dpsi = &half.1 + &d_dpsi.scale_real(1.0 / 15.0);
        }
        Ok(RadialSolution {
            r: self.grid.r_match,
            psi,
            dpsi,
            max_step_error: max_estimate,
        })
    }
}

fn rk4_step(
    psi: &ComplexMatrix,
    dpsi: &ComplexMatrix,
    h: f64,
    v_start: &ComplexMatrix,
    v_mid: &ComplexMatrix,
    v_end: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix) {
    let k1p = dpsi.clone();
    let k1d = v_start * psi;
    let p2 = psi + &k1p.scale_real(h / 2.0);
    let d2 = dpsi + &k1d.scale_real(h / 2.0);
    let k2p = d2.clone();
    let k2d = v_mid * &p2;
    let p3 = psi + &k2p.scale_real(h / 2.0);
    let d3 = dpsi + &k2d.scale_real(h / 2.0);
    let k3p = d3.clone();
    let k3d = v_mid * &p3;
    let p4 = psi + &k3p.scale_real(h);
    let d4 = dpsi + &k3d.scale_real(h);
    let k4p = d4;
    let k4d = v_end * &p4;
    let combine = |a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, d: &ComplexMatrix| {
        &(&(a + &b.scale_real(2.0)) + &c.scale_real(2.0)) + d
    };
    (
        psi + &combine(&k1p, &k2p, &k3p, &k4p).scale_real(h / 6.0),
        dpsi + &combine(&k1d, &k2d, &k3d, &k4d).scale_real(h / 6.0),
    )
}

/// Solution matrix and derivative at the matching radius.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub r: f64,
    pub psi: ComplexMatrix,
    pub dpsi: ComplexMatrix,
    pub max_step_error: f64,
}

/// Integrates `Ψ'' = (V − k²)Ψ` over `grid`, evaluating `v` on the mesh.
pub fn integrate_radial(
    v: impl Fn(f64) -> Result<ComplexMatrix> + Sync,
    ksq: f64,
    grid: &RadialGrid,
    seed: &Seed,
) -> Result<RadialSolution> {
    SampledPotential::new(grid, v)?.integrate(ksq, seed)
}

/// Matched S-matrix, symmetrized, with the removed asymmetry.
#[derive(Clone, Debug)]
pub struct ExtractedSMatrix {
    pub s: ComplexMatrix,
    /// `max |S − Sᵀ|` before symmetrization.
    pub asymmetry: f64,
}

impl ExtractedSMatrix {
    pub fn unitarity_defect(&self) -> f64 {
        (&self.s * &self.s.adjoint()).max_diff(&ComplexMatrix::identity(self.s.rows()))
    }
}

/// Writes `Ψ = e^{−ikr} A_in − e^{ikr} A_out` at `r_match` (l = 0) and returns
/// `S = A_out A_in⁻¹`.
pub fn extract_s_matrix(psi: &ComplexMatrix, dpsi: &ComplexMatrix, k: f64, r_match: f64) -> Result<ExtractedSMatrix> {
    if !(k > 0.0) {
        return Err(EppError::Domain(format!("wavenumber k = {k} must be positive")));
    }
    let ik = I * k;
    let a_in = (&psi.scale(ik) - dpsi).scale((ik * r_match).exp() / (2.0 * ik));
    let a_out = (&psi.scale(ik) + dpsi).scale(-(-ik * r_match).exp() / (2.0 * ik));
    let a_in_inv = a_in
        .inverse()
        .map_err(|e| EppError::Matching(format!("incoming amplitude not invertible at k = {k}: {e}")))?;
    let s = &a_out * &a_in_inv;
    let asymmetry = s.asymmetry();
    let s = (&s + &s.transpose()).scale_real(0.5);
    Ok(ExtractedSMatrix { s, asymmetry })
}

/// Largest difference between two eigen-phase sets modulo π, after aligning
/// the sorted lists by the best cyclic shift (a phase near ±π/2 may wrap).
pub fn phase_residual(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "phase sets differ in length");
    let wrap = |d: f64| d - PI * (d / PI).round();
    let n = a.len();
    (0..n.max(1))
        .map(|shift| (0..n).map(|i| wrap(a[i] - b[(i + shift) % n]).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyTolerances {
    /// Eigen-phase residual, radians.
    pub eigenphase: f64,
    pub unitarity: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            eigenphase: 1e-3,
            unitarity: 1e-5,
        }
    }
}

/// Oracle-vs-closed-form comparison at one wavenumber.
#[derive(Clone, Debug, Serialize)]
pub struct KPointResult {
    pub k: f64,
    pub closed_form_phases: Vec<f64>,
    pub oracle_phases: Vec<f64>,
    pub residual: f64,
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    /// `max |S_oracle − S₂|` entrywise.
    pub s_matrix_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatterReport {
    pub k_values: Vec<f64>,
    pub results: Vec<Option<KPointResult>>,
    /// Failure message per k, if any.
    pub errors: Vec<Option<String>>,
    pub max_residual: f64,
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    pub tolerances: VerifyTolerances,
    pub pass: bool,
}

impl ScatterReport {
    fn from_results(k_values: Vec<f64>, outcomes: Vec<Result<KPointResult>>, tolerances: VerifyTolerances) -> Self {
        let mut results = Vec::with_capacity(outcomes.len());
        let mut errors = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            match o {
                Ok(r) => {
                    results.push(Some(r));
                    errors.push(None);
                }
                Err(e) => {
                    results.push(None);
                    errors.push(Some(e.to_string()));
                }
            }
        }
        let ok = results.iter().flatten();
        let max_residual = ok.clone().map(|r| r.residual).fold(0.0, f64::max);
        let unitarity_defect = ok.clone().map(|r| r.unitarity_defect).fold(0.0, f64::max);
        let symmetry_defect = ok.map(|r| r.symmetry_defect).fold(0.0, f64::max);
        let pass = !k_values.is_empty()
            && errors.iter().all(Option::is_none)
            && max_residual <= tolerances.eigenphase
            && unitarity_defect <= tolerances.unitarity;
        Self {
            k_values,
            results,
            errors,
            max_residual,
            unitarity_defect,
            symmetry_defect,
            tolerances,
            pass,
        }
    }
}

/// Oracle S-matrix of an arbitrary tabulated potential at wavenumber `k`.
pub fn oracle_s_matrix(potential: &SampledPotential, k: f64, seed: &Seed) -> Result<ExtractedSMatrix> {
    let sol = potential.integrate(k * k, seed)?;
    extract_s_matrix(&sol.psi, &sol.dpsi, k, sol.r)
}

/// End-to-end check: for each `k`, the eigen-phases of the S-matrix obtained by
/// integrating through `V₂` against those of the closed form `R_S S₀ R_Sᵀ`.
/// Failures at individual `k` are recorded, not propagated.
pub fn verify_epp(
    transform: &EppTransform,
    k_values: &[f64],
    grid: &RadialGrid,
    tolerances: VerifyTolerances,
) -> Result<ScatterReport> {
    let potential = SampledPotential::new(grid, |r| transform.potential(r))?;
    Ok(verify_with_potential(transform, &potential, k_values, tolerances))
}

/// [`verify_epp`] with a pre-tabulated `V₂`.
pub fn verify_with_potential(
    transform: &EppTransform,
    potential: &SampledPotential,
    k_values: &[f64],
    tolerances: VerifyTolerances,
) -> ScatterReport {
    let tail = potential.at_match().max_abs();
    let outcomes: Vec<Result<KPointResult>> = k_values
        .par_iter()
        .map(|&k| {
            if !(tail <= ASYMPTOTIC_POTENTIAL_LIMIT) {
                return Err(EppError::Matching(format!(
                    "|V(r_match)| = {tail:e} exceeds {ASYMPTOTIC_POTENTIAL_LIMIT:e}; increase r_match"
                )));
            }
            let closed = transform.s2_matrix(k)?;
            let closed_form_phases = eigenphases_symmetric_unitary(&closed, 1e-10)?;
            let extracted = oracle_s_matrix(potential, k, &Seed::Vanishing)?;
            let unitarity_defect = extracted.unitarity_defect();
            // the oracle S is only unitary to integration accuracy
            let oracle_phases = eigenphases_symmetric_unitary(&extracted.s, unitarity_defect.max(1e-10) * 10.0)?;
            Ok(KPointResult {
                k,
                residual: phase_residual(&closed_form_phases, &oracle_phases),
                closed_form_phases,
                oracle_phases,
                unitarity_defect,
                symmetry_defect: extracted.asymmetry,
                s_matrix_difference: extracted.s.max_diff(&closed),
            })
        })
        .collect();
    ScatterReport::from_results(k_values.to_vec(), outcomes, tolerances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{reference_eigenphases, s0_matrix, ChannelModel};

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(1e-3, 20.0, 0.005).is_ok());
        assert!(RadialGrid::new(20.0, 1e-3, 0.005).is_err());
        assert!(RadialGrid::new(1e-3, 20.0, 0.0).is_err());
        assert!(RadialGrid::new(1e-3, 1.0, 0.1).is_err());
        let g = RadialGrid::new(1e-3, 20.0, 0.005).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes[0], 1e-3);
        assert_eq!(*nodes.last().unwrap(), 20.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 1.5 * 0.005 + 1e-12));
    }

    #[test]
    fn free_particle() {
        let grid = RadialGrid::new(1e-3, 15.0, 0.005).unwrap();
        let k = 1.3;
        let sol = integrate_radial(|_| Ok(ComplexMatrix::zeros(1, 1)), k * k, &grid, &Seed::Vanishing).unwrap();
        // Ψ(r_min) = 0, Ψ'(r_min) = 1 gives sin(k(r − r_min))/k
        let expected = (k * (15.0 - 1e-3)).sin() / k;
        assert!((sol.psi[(0, 0)].re - expected).abs() < 1e-8);
        let s = extract_s_matrix(&sol.psi, &sol.dpsi, k, sol.r).unwrap();
        // the r_min offset is a phase shift of −k r_min
        let phase = (-2.0 * k * 1e-3_f64).sin();
        assert!((s.s[(0, 0)] - Complex64::new((-2.0 * k * 1e-3_f64).cos(), phase)).norm() < 1e-8);
        let sol = integrate_radial(|_| Ok(ComplexMatrix::zeros(1, 1)), k * k, &grid, &Seed::PowerLaw(vec![0])).unwrap();
        let s = extract_s_matrix(&sol.psi, &sol.dpsi, k, sol.r).unwrap();
        assert!(s.s.max_diff(&ComplexMatrix::identity(1)) < 1e-8);
    }

    #[test]
    fn uncoupled_reference_phases() {
        let model = ChannelModel::sinh_squared(&[1.1, 1.5, 2.1, 2.5]).unwrap();
        let grid = RadialGrid::new(1e-3, 20.0, 0.005).unwrap();
        let v = SampledPotential::new(&grid, |r| model.potential(r)).unwrap();
        for k in [0.5, 1.0, 2.0, 4.0] {
            for seed in [Seed::PowerLaw(model.nu().to_vec()), Seed::Vanishing] {
                let s = oracle_s_matrix(&v, k, &seed).unwrap();
                assert!(s.s.max_diff(&s0_matrix(k, &model).unwrap()) < 1e-6);
                let p = eigenphases_symmetric_unitary(&s.s, 1e-8).unwrap();
                assert!(phase_residual(&p, &reference_eigenphases(k, &model)) < 1e-5);
            }
        }
    }

    #[test]
    fn coarse_steps_trip_the_error_control() {
        let model = ChannelModel::sinh_squared(&[1.1, 2.5]).unwrap();
        let grid = RadialGrid::with_relative_step(1e-3, 20.0, 0.15, 0.3).unwrap();
        let err = integrate_radial(|r| model.potential(r), 16.0, &grid, &Seed::Vanishing).unwrap_err();
        assert!(matches!(err, EppError::Accuracy { .. }));
    }

    #[test]
    fn phase_residual_wraps_modulo_pi() {
        let a = [-1.5, 0.2];
        // −1.5 + π sorts last, so the lists align only after a shift
        let b = [0.2, -1.5 + PI + 1e-4];
        assert!((phase_residual(&a, &b) - 1e-4).abs() < 1e-12);
        assert_eq!(phase_residual(&[0.1, 0.2], &[0.1, 0.2]), 0.0);
    }

    fn example_transform(energy: Complex64) -> EppTransform {
        use crate::matrix::{complex_orthogonal_2x2, Sign};
        use crate::transform::TransformSpec;
        let model = ChannelModel::sinh_squared(&[1.1, 1.5, 2.1, 2.5]).unwrap();
        let b = complex_orthogonal_2x2(Complex64::new(2.5, 1.3), Sign::Plus);
        EppTransform::new(model, TransformSpec::from_energy(energy, b, Sign::Plus).unwrap()).unwrap()
    }

    #[test]
    fn transformed_potential_matches_closed_form() {
        let t = example_transform(Complex64::new(0.0, 4.5));
        let grid = RadialGrid::for_transform(&t, 1e-3, 0.005).unwrap();
        let ks = [0.5, 1.0, 2.0, 4.0];
        let report = verify_epp(&t, &ks, &grid, VerifyTolerances::default()).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.max_residual < 1e-4);
        assert!(report.unitarity_defect < 1e-5 && report.symmetry_defect < 1e-5);
        for r in report.results.iter().flatten() {
            assert!(r.s_matrix_difference < 1e-4);
        }

        let fine = verify_epp(&t, &ks, &grid.refined(), VerifyTolerances::default()).unwrap();
        for (a, b) in report.results.iter().flatten().zip(fine.results.iter().flatten()) {
            assert!(phase_residual(&a.oracle_phases, &b.oracle_phases) < 1e-6);
        }

        let shifted = RadialGrid::new(5e-4, grid.r_match(), 0.005).unwrap();
        let moved = verify_epp(&t, &ks, &shifted, VerifyTolerances::default()).unwrap();
        for (a, b) in report.results.iter().flatten().zip(moved.results.iter().flatten()) {
            assert!(phase_residual(&a.oracle_phases, &b.oracle_phases) < 1e-4);
        }

        let strict = VerifyTolerances {
            eigenphase: 0.0,
            unitarity: 0.0,
        };
        assert!(!verify_epp(&t, &ks, &grid, strict).unwrap().pass);
    }

    #[test]
    fn short_matching_radius_is_reported_per_k() {
        let t = example_transform(Complex64::new(0.0, 4.5));
        let grid = RadialGrid::new(1e-3, 4.0, 0.005).unwrap();
        let report = verify_epp(&t, &[1.0], &grid, VerifyTolerances::default()).unwrap();
        assert!(!report.pass);
        assert!(report.errors[0].as_deref().unwrap().contains("r_match"));
    }

    #[test]
    fn two_channel_transform() {
        use crate::matrix::ComplexOrthogonal;
        use crate::transform::TransformSpec;
        let model = ChannelModel::sinh_squared(&[1.2, 2.0]).unwrap();
        let spec = TransformSpec::new(Complex64::new(0.8, 1.1), ComplexOrthogonal::identity(1), crate::Sign::Minus).unwrap();
        let t = EppTransform::new(model, spec).unwrap();
        let grid = RadialGrid::for_transform(&t, 1e-3, 0.005).unwrap();
        let report = verify_epp(&t, &[0.3, 1.0, 2.5], &grid, VerifyTolerances::default()).unwrap();
        assert!(report.pass && report.max_residual < 1e-4, "{report:?}");
    }
}
