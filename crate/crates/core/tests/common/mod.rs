#![allow(dead_code)]

use std::f64::consts::PI;

use epp_core::matrix::complex_orthogonal_2x2;
use epp_core::{ChannelModel, EppTransform, Sign, TransformSpec};
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn example_model() -> ChannelModel {
    ChannelModel::sinh_squared(&[1.1, 1.5, 2.1, 2.5]).unwrap()
}

pub fn example_transform(energy: Complex64) -> EppTransform {
    let b = complex_orthogonal_2x2(c(2.5, 1.3), Sign::Plus);
    EppTransform::new(example_model(), TransformSpec::from_energy(energy, b, Sign::Plus).unwrap()).unwrap()
}

pub fn example_transform_k(k: Complex64) -> EppTransform {
    let b = complex_orthogonal_2x2(c(2.5, 1.3), Sign::Plus);
    EppTransform::new(example_model(), TransformSpec::new(k, b, Sign::Plus).unwrap()).unwrap()
}

pub fn example_energies() -> [Complex64; 3] {
    [c(-2.0, 1.5), c(-1.25, 3.0), c(0.0, 4.5)]
}

/// Random complex angles for an `m x m` complex orthogonal matrix.
pub fn random_angles(rng: &mut impl Rng, m: usize) -> Vec<Complex64> {
    (0..m * m.saturating_sub(1) / 2)
        .map(|_| c(rng.gen_range(-PI..PI), rng.gen_range(-0.8..0.8)))
        .collect()
}

/// Random valid transformation on `n` (even) channels.
pub fn random_transform(rng: &mut impl Rng, n: usize) -> EppTransform {
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    let model = ChannelModel::sinh_squared(&a).unwrap();
    let m = n / 2;
    let kr = rng.gen_range(0.2..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let k = c(kr, rng.gen_range(0.2..2.5));
    let sigma = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let spec = TransformSpec::from_angles(k, m, &random_angles(rng, m), sigma).unwrap();
    EppTransform::new(model, spec).unwrap()
}
