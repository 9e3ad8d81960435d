//! Eigen-phase preserving second-order SUSY transformation of the reference
//! model.
//!
//! A transformation is fixed by a complex wavenumber `K = k_r + i k_i`
//! (factorization energy `ℰ = K²`), an `M×M` complex orthogonal `B` with
//! `N = 2M`, and a sign `σ` selecting `Q = σ i B`. The transformation solution
//!
//! ```text
//! u(r) = (2K/i) φ₀(K,r) F₀⁻¹(K) [[I, 0], [Q, 0]] + f₀(K,r) [[0, −Qᵀ], [0, I]]
//! ```
//!
//! yields the twofold superpotential `W₂ = (ℰ − ℰ*) u* W[u,u*]⁻¹ uᵀ` and the
//! coupled potential `V₂ = V₀ − 2W₂'`, whose S-matrix is `R_S S₀ R_Sᵀ` with a
//! real orthogonal `R_S(k²)`.

use num_complex::Complex64;

use crate::error::{EppError, Result};
use crate::matrix::{ComplexMatrix, ComplexOrthogonal, Sign, MIN_RCOND};
use crate::reference::{jost_matrix, s0_matrix, ChannelModel};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance on `max |QQᵀ + I|` for entries of order one.
pub const Q_TOL: f64 = 1e-12;

/// Parameters of one EPP transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSpec {
    k: Complex64,
    b: ComplexOrthogonal,
    sigma: Sign,
}

impl TransformSpec {
    /// `k` is the factorization wavenumber; requires `Im k > 0` and `Re k ≠ 0`.
    pub fn new(k: Complex64, b: ComplexOrthogonal, sigma: Sign) -> Result<Self> {
        if !(k.im > 0.0 && k.im.is_finite()) {
            return Err(EppError::Domain(format!("k_i = {} must be positive", k.im)));
        }
        if !(k.re.is_finite() && k.re.abs() > 1e-14 * k.norm()) {
            return Err(EppError::Domain(format!(
                "k_r = {} must be nonzero (real factorization energy gives no coupling)",
                k.re
            )));
        }
        Ok(Self { k, b, sigma })
    }

    /// From the factorization energy, taking the root `K` of `K² = ℰ` with `Im K > 0`.
    pub fn from_energy(energy: Complex64, b: ComplexOrthogonal, sigma: Sign) -> Result<Self> {
        let k = energy.sqrt();
        let k = if k.im < 0.0 { -k } else { k };
        Self::new(k, b, sigma)
    }

    /// From the `M(M−1)/2` complex plane angles of `B` (see
    /// [`ComplexOrthogonal::from_angles`]); together with `K` these are the
    /// `M(M−1) + 2` continuous parameters of the family.
    pub fn from_angles(k: Complex64, m: usize, angles: &[Complex64], sigma: Sign) -> Result<Self> {
        Self::new(k, ComplexOrthogonal::from_angles(m, angles)?, sigma)
    }

    /// Number of real continuous parameters for `M×M` blocks.
    pub fn parameter_count(m: usize) -> usize {
        m * (m.saturating_sub(1)) + 2
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn k_r(&self) -> f64 {
        self.k.re
    }

    pub fn k_i(&self) -> f64 {
        self.k.im
    }

    pub fn energy(&self) -> Complex64 {
        self.k * self.k
    }

    pub fn b(&self) -> &ComplexOrthogonal {
        &self.b
    }

    pub fn sigma(&self) -> Sign {
        self.sigma
    }

    pub fn m(&self) -> usize {
        self.b.dim()
    }

    /// `Q = σ i B`.
    pub fn q(&self) -> ComplexMatrix {
        self.b.matrix().scale(I * self.sigma.value())
    }

    /// `σB`: every closed form below depends on `B` and `σ` only through it.
    fn signed_b(&self) -> ComplexMatrix {
        self.b.matrix().scale_real(self.sigma.value())
    }
}

/// Checks that `spec` defines an EPP transformation of `model`.
pub fn validate_spec(model: &ChannelModel, spec: &TransformSpec) -> Result<()> {
    let n = model.n_channels();
    if !n.is_multiple_of(2) {
        return Err(EppError::EppNotExistent { channels: n });
    }
    let m = n / 2;
    if spec.m() != m {
        return Err(EppError::Shape {
            op: "validate_spec",
            expected: format!("B of size {m}x{m} for N = {n}"),
            found: format!("{}x{}", spec.m(), spec.m()),
        });
    }
    if !(spec.k_i() > 0.0) {
        return Err(EppError::Domain(format!("k_i = {} must be positive", spec.k_i())));
    }
    if spec.k_r() == 0.0 {
        return Err(EppError::Domain("k_r must be nonzero".into()));
    }
    let q = spec.q();
    let defect = (&q * &q.transpose()).max_diff(&(-&ComplexMatrix::identity(m)));
    if !(defect <= Q_TOL * q.max_abs().powi(2).max(1.0)) {
        return Err(EppError::NotComplexOrthogonal { defect });
    }
    let re_b = spec.b.matrix() + &spec.b.matrix().conj();
    if re_b.rcond() < MIN_RCOND {
        return Err(EppError::DegenerateB);
    }
    Ok(())
}

/// Coefficients of `u = f₀(−K) C + f₀(K) D` in the canonical gauge.
#[derive(Clone, Debug)]
pub struct CanonicalFactorization {
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
    /// The symmetric block `X` that corresponds to the regular choice `X̃ = 0`.
    pub x: ComplexMatrix,
}

/// Large-distance data of the transformation.
#[derive(Clone, Debug)]
pub struct AsymptoticFrame {
    /// `A = [[I, −Qᵀ], [Q, I]]`.
    pub a: ComplexMatrix,
    /// Signature matrix `diag(I_M, −I_M)`.
    pub sigma: ComplexMatrix,
    /// `W∞ = K* AᵀA* Σ + K Σ AᵀA*`.
    pub w_inf: ComplexMatrix,
    /// Real antisymmetric `Ω` with `ΩᵀΩ = 4k_r²k_i² I`.
    pub omega: ComplexMatrix,
}

impl AsymptoticFrame {
    pub fn rank_a(&self) -> usize {
        self.a.numerical_rank(1e-10)
    }
}

/// `W[u,u*]`, `W₂`, `W₂'` and `W₂w` at one radius.
#[derive(Clone, Debug)]
pub struct TwofoldSuperpotential {
    pub wronskian: ComplexMatrix,
    /// Reciprocal condition of the diagonally equilibrated Wronskian.
    pub rcond: f64,
    pub w2: ComplexMatrix,
    pub dw2: ComplexMatrix,
    /// `W₂ w` with `w = u'u⁻¹`, evaluated as `(ℰ − ℰ*) u* W⁻¹ u'ᵀ` so that `u`
    /// is never inverted.
    pub w2_w: ComplexMatrix,
    equilibration: Vec<f64>,
}

impl TwofoldSuperpotential {
    /// `max |W̃ + W̃†|` of the equilibrated Wronskian `W̃ = D W D`.
    pub fn anti_hermitian_defect(&self) -> f64 {
        let d = &self.equilibration;
        let n = d.len();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let s = self.wronskian[(i, j)] + self.wronskian[(j, i)].conj();
                m = m.max(s.norm() * d[i] * d[j]);
            }
        }
        m
    }

    /// `W₂ (w + w*)/2 = Re(W₂ w)`, the zeroth-order coefficient of `L`.
    pub fn w2_w_re(&self) -> ComplexMatrix {
        self.w2_w.re()
    }
}

/// Computes the twofold superpotential and its exact r-derivative from a
/// transformation solution `u`, `u'` at factorization wavenumber `k`.
///
/// `W' = (ℰ − ℰ*) uᵀ u*` and `(W⁻¹)' = −W⁻¹ W' W⁻¹` give `W₂'` by the product
/// rule. The Wronskian is symmetrically equilibrated before inversion because
/// its column groups grow and decay like `e^{±2k_i r}`.
pub fn w2_and_derivative(u: &ComplexMatrix, du: &ComplexMatrix, k: Complex64, r: f64) -> Result<TwofoldSuperpotential> {
    let energy = k * k;
    let gap = energy - energy.conj();
    let uc = u.conj();
    let duc = du.conj();
    let ut = u.transpose();
    let dut = du.transpose();
    let wronskian = &(&ut * &duc) - &(&dut * &uc);
    let n = wronskian.rows();

    let equilibration: Vec<f64> = (0..n).map(|i| 1.0 / wronskian[(i, i)].norm().sqrt()).collect();
    if equilibration.iter().any(|d| !d.is_finite()) {
        return Err(EppError::SingularWronskian { r, rcond: 0.0 });
    }
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| wronskian[(i, j)] * (equilibration[i] * equilibration[j]));
    let (scaled_inv, rcond) = scaled.inverse_with_rcond(MIN_RCOND).map_err(|e| match e {
        EppError::Singular { rcond } => EppError::SingularWronskian { r, rcond },
        other => other,
    })?;
    let w_inv = ComplexMatrix::from_fn(n, n, |i, j| scaled_inv[(i, j)] * (equilibration[i] * equilibration[j]));

    let dw = (&ut * &uc).scale(gap);
    let a = &uc * &w_inv;
    let w2 = (&a * &ut).scale(gap);
    let dw2 = (&(&(&duc * &w_inv) * &ut) - &(&(&a * &dw) * &(&w_inv * &ut)) + (&a * &dut)).scale(gap);
    let w2_w = (&a * &dut).scale(gap);
    Ok(TwofoldSuperpotential {
        wronskian,
        rcond,
        w2,
        dw2,
        w2_w,
        equilibration,
    })
}

/// Everything known about the transformation at one radius.
#[derive(Clone, Debug)]
pub struct TransformationSolutionSample {
    pub r: f64,
    pub u: ComplexMatrix,
    pub du: ComplexMatrix,
    pub superpotential: TwofoldSuperpotential,
    /// `V₂ = V₀ − 2W₂'` (real symmetric up to rounding).
    pub v2: ComplexMatrix,
}

impl TransformationSolutionSample {
    pub fn wronskian(&self) -> &ComplexMatrix {
        &self.superpotential.wronskian
    }

    pub fn w2(&self) -> &ComplexMatrix {
        &self.superpotential.w2
    }

    pub fn dw2(&self) -> &ComplexMatrix {
        &self.superpotential.dw2
    }

    pub fn rcond(&self) -> f64 {
        self.superpotential.rcond
    }
}

/// A validated EPP transformation of a reference model.
#[derive(Clone, Debug)]
pub struct EppTransform {
    model: ChannelModel,
    spec: TransformSpec,
    /// `(2K/i) F₀⁻¹(K)` as a diagonal.
    regular_weight: ComplexMatrix,
    p_regular: ComplexMatrix,
    p_jost: ComplexMatrix,
    omega: ComplexMatrix,
}

impl EppTransform {
    pub fn new(model: ChannelModel, spec: TransformSpec) -> Result<Self> {
        validate_spec(&model, &spec)?;
        let m = spec.m();
        let k = spec.k();
        let f_inv = jost_matrix(k, &model)?.inverse()?;
        let regular_weight = f_inv.scale(2.0 * k / I);
        let q = spec.q();
        let zero = ComplexMatrix::zeros(m, m);
        let id = ComplexMatrix::identity(m);
        let p_regular = ComplexMatrix::from_blocks(&id, &zero, &q, &zero)?;
        let p_jost = ComplexMatrix::from_blocks(&zero, &(-&q.transpose()), &zero, &id)?;
        let omega = omega(&spec)?;
        Ok(Self {
            model,
            spec,
            regular_weight,
            p_regular,
            p_jost,
            omega,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn n_channels(&self) -> usize {
        self.model.n_channels()
    }

    /// Transformation solution `u(r)` and `u'(r)` for the regular choice `X̃ = 0`.
    pub fn build_u(&self, r: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let k = self.spec.k();
        let (phi, dphi) = self.model.regular_solution(k, r)?;
        let (f, df) = self.model.jost_solution(k, r)?;
        let u = &(&(&phi * &self.regular_weight) * &self.p_regular) + &(&f * &self.p_jost);
        let du = &(&(&dphi * &self.regular_weight) * &self.p_regular) + &(&df * &self.p_jost);
        Ok((u, du))
    }

    pub fn sample(&self, r: f64) -> Result<TransformationSolutionSample> {
        let (u, du) = self.build_u(r)?;
        let superpotential = w2_and_derivative(&u, &du, self.spec.k(), r)?;
        let v2 = &self.model.potential(r)? - &superpotential.dw2.scale_real(2.0);
        Ok(TransformationSolutionSample {
            r,
            u,
            du,
            superpotential,
            v2,
        })
    }

    /// The transformed potential `V₂(r)`.
    pub fn potential(&self, r: f64) -> Result<ComplexMatrix> {
        self.sample(r).map(|s| s.v2)
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn asymptotic_frame(&self) -> Result<AsymptoticFrame> {
        let m = self.spec.m();
        let k = self.spec.k();
        let q = self.spec.q();
        let id = ComplexMatrix::identity(m);
        let a = ComplexMatrix::from_blocks(&id, &(-&q.transpose()), &q, &id)?;
        let sigma = ComplexMatrix::from_blocks(&id, &ComplexMatrix::zeros(m, m), &ComplexMatrix::zeros(m, m), &(-&id))?;
        let ata = &a.transpose() * &a.conj();
        let w_inf = &(&ata * &sigma).scale(k.conj()) + &(&sigma * &ata).scale(k);
        Ok(AsymptoticFrame {
            a,
            sigma,
            w_inf,
            omega: self.omega.clone(),
        })
    }

    /// Scalar part `−k² + k_r² − k_i²` of `U∞(k²)`.
    fn scalar_part(&self, ksq: f64) -> f64 {
        -ksq + self.spec.energy().re
    }

    /// `U∞(k²) = (−k² + k_r² − k_i²) I + Ω`.
    pub fn u_infinity(&self, ksq: f64) -> ComplexMatrix {
        let n = self.n_channels();
        &ComplexMatrix::identity(n).scale_real(self.scalar_part(ksq)) + &self.omega
    }

    /// `U∞ U∞ᵀ = norm² I` with `norm² = (−k² + k_r² − k_i²)² + 4k_r²k_i²`.
    pub fn u_infinity_norm_sq(&self, ksq: f64) -> f64 {
        let (kr, ki) = (self.spec.k_r(), self.spec.k_i());
        self.scalar_part(ksq).powi(2) + 4.0 * kr * kr * ki * ki
    }

    /// Real orthogonal `R_S(k²) = U∞(k²) / √norm²` (l = 0).
    pub fn rs_matrix(&self, ksq: f64) -> ComplexMatrix {
        self.u_infinity(ksq).scale_real(1.0 / self.u_infinity_norm_sq(ksq).sqrt())
    }

    /// `S₂(k) = R_S(k²) S₀(k) R_Sᵀ(k²)`.
    pub fn s2_matrix(&self, k: f64) -> Result<ComplexMatrix> {
        let rs = self.rs_matrix(k * k);
        let s0 = s0_matrix(k, &self.model)?;
        Ok(&(&rs * &s0) * &rs.transpose())
    }

    /// `L f = (−k² + Re ℰ) f + Re(W₂w) f − W₂ f'` for an `H₀` eigen-solution
    /// `f` at energy `k²`.
    pub fn apply_l(
        &self,
        ksq: f64,
        sample: &TransformationSolutionSample,
        f: &ComplexMatrix,
        df: &ComplexMatrix,
    ) -> ComplexMatrix {
        let scalar = f.scale_real(self.scalar_part(ksq));
        let coupling = &sample.superpotential.w2_w_re() * f;
        &(&scalar + &coupling) - &(sample.w2() * df)
    }

    /// Transformed Jost solution `f₂(k, r) = (L f₀)(k, r) U∞⁻¹(k²)`.
    pub fn transformed_jost(&self, k: f64, r: f64) -> Result<ComplexMatrix> {
        let sample = self.sample(r)?;
        let (f, df) = self.model.jost_solution(Complex64::from(k), r)?;
        let lf = self.apply_l(k * k, &sample, &f, &df);
        Ok(&lf * &self.u_infinity(k * k).inverse()?)
    }

    /// Canonical-gauge coefficients `C`, `D` with the `X` that realizes `X̃ = 0`.
    pub fn canonical_factorization(&self) -> Result<CanonicalFactorization> {
        let m = self.spec.m();
        let q = self.spec.q();
        let (s1, s2, s3) = self.small_s_blocks()?;
        let qt = q.transpose();
        let x = -&(&(&(&s1 + &(&s2.transpose() * &q)) + &(&qt * &s2)) + &(&(&qt * &s3) * &q));
        let id = ComplexMatrix::identity(m);
        let zero = ComplexMatrix::zeros(m, m);
        let c = ComplexMatrix::from_blocks(&id, &zero, &q, &zero)?;
        let d = ComplexMatrix::from_blocks(&x, &(-&qt), &zero, &id)?;
        Ok(CanonicalFactorization { c, d, x })
    }

    /// Constant right factor `T` with `u_(φ₀,f₀) = (f₀(−K) C + f₀(K) D) T`.
    pub fn gauge_to_regular_basis(&self) -> Result<ComplexMatrix> {
        let m = self.spec.m();
        let (_, s2, s3) = self.small_s_blocks()?;
        let lower = -&(&s2 + &(&s3 * &self.spec.q()));
        let id = ComplexMatrix::identity(m);
        ComplexMatrix::from_blocks(&id, &ComplexMatrix::zeros(m, m), &lower, &id)
    }

    /// Blocks of `s₀ = F₀(−K) F₀⁻¹(K) = [[s₁, s₂ᵀ], [s₂, s₃]]`.
    fn small_s_blocks(&self) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
        let m = self.spec.m();
        let k = self.spec.k();
        let s0 = &jost_matrix(-k, &self.model)? * &jost_matrix(k, &self.model)?.inverse()?;
        Ok((s0.block(0, 0, m, m), s0.block(m, 0, m, m), s0.block(m, m, m, m)))
    }

    /// Log-spaced evaluation grid `[1e-3, max(40, 30/k_i)]`.
    pub fn default_grid(&self, points: usize) -> Vec<f64> {
        log_grid(1e-3, default_r_max(self.spec.k_i()), points)
    }
}

pub fn default_r_max(k_i: f64) -> f64 {
    (30.0 / k_i).max(40.0)
}

/// `points` log-spaced radii from `r_min` to `r_max` inclusive.
pub fn log_grid(r_min: f64, r_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![r_min],
        _ => {
            let (l0, l1) = (r_min.ln(), r_max.ln());
            (0..points)
                .map(|i| {
                    if i == 0 {
                        r_min
                    } else if i + 1 == points {
                        r_max
                    } else {
                        (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `Ω = 2k_r k_i [[i(Bᵀ − B†), 2I], [−2I, i(B − B*)]] · diag((Bᵀ + B†)⁻¹, (B + B*)⁻¹)`,
/// with `B → σB`. Real and antisymmetric; returned with the (rounding-level)
/// imaginary part dropped.
pub fn omega(spec: &TransformSpec) -> Result<ComplexMatrix> {
    let m = spec.m();
    let b = spec.signed_b();
    let (bt, bh, bc) = (b.transpose(), b.adjoint(), b.conj());
    let id = ComplexMatrix::identity(m);
    let re_b = &b + &bc;
    let inv_lower = re_b.inverse().map_err(|_| EppError::DegenerateB)?;
    let inv_upper = (&bt + &bh).inverse().map_err(|_| EppError::DegenerateB)?;
    let left = ComplexMatrix::from_blocks(
        &(&bt - &bh).scale(I),
        &id.scale_real(2.0),
        &id.scale_real(-2.0),
        &(&b - &bc).scale(I),
    )?;
    let zero = ComplexMatrix::zeros(m, m);
    let right = ComplexMatrix::from_blocks(&inv_upper, &zero, &zero, &inv_lower)?;
    Ok((&left * &right).scale_real(2.0 * spec.k_r() * spec.k_i()).re())
}

/// `U∞(k²)` without constructing the full transformation.
pub fn u_infinity(spec: &TransformSpec, ksq: f64) -> Result<ComplexMatrix> {
    let om = omega(spec)?;
    Ok(&ComplexMatrix::identity(om.rows()).scale_real(-ksq + spec.energy().re) + &om)
}
