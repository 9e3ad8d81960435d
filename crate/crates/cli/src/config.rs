use std::path::Path;

use epp_core::matrix::{all_planes, complex_orthogonal_2x2, complex_orthogonal_general};
use epp_core::oracle::{RadialGrid, VerifyTolerances};
use epp_core::transform::default_r_max;
use epp_core::{ChannelModel, ComplexMatrix, ComplexOrthogonal, EppError, EppTransform, Sign, TransformSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run parameters. Read from TOML, or from JSON when the file ends in `.json`
/// (the `parameters` object of a previous `summary.json` is accepted as is).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Channel count; optional, must equal `a.len()` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Reference-model ranges `a_j`.
    pub a: Vec<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_im: Option<f64>,

    /// `b = b_r + i b_i` for the 2x2 family `[[b, s], [−s, b]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_i: Option<f64>,
    /// Sign of `s = ±√(1 − b²)`.
    #[serde(default = "plus_one")]
    pub b_branch: i32,
    /// Complex rotation angles `[re, im]`, one per plane.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<[f64; 2]>>,
    /// 0-based index pairs for `angles`; all pairs in lexicographic order if omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planes: Option<Vec<[usize; 2]>>,
    /// Explicit `B` as rows of `[re, im]` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default = "plus_one")]
    pub sigma: i32,

    #[serde(default = "default_r_min")]
    pub r_min: f64,
    /// Defaults to `max(40, 30/k_i)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Wavenumbers for the scattering checks.
    #[serde(default = "default_k_values")]
    pub k_values: Vec<f64>,
    /// Energies at which `U∞` is reported.
    #[serde(default = "default_sample_ksq")]
    pub sample_ksq: Vec<f64>,

    #[serde(default = "default_ksq_min")]
    pub ksq_min: f64,
    #[serde(default = "default_ksq_max")]
    pub ksq_max: f64,
    #[serde(default = "default_ksq_points")]
    pub ksq_points: usize,

    #[serde(default = "default_r_min")]
    pub oracle_r_min: f64,
    #[serde(default = "default_oracle_step")]
    pub oracle_step: f64,
    /// Defaults to `max(30/k_i, 12/min a)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_r_match: Option<f64>,

    #[serde(default = "default_tol_eigenphase")]
    pub tol_eigenphase: f64,
    #[serde(default = "default_tol_unitarity")]
    pub tol_unitarity: f64,
    #[serde(default = "default_tol_invariant")]
    pub tol_invariant: f64,
    #[serde(default = "default_tol_realness")]
    pub tol_realness: f64,
    #[serde(default = "default_tol_asymptotic")]
    pub tol_asymptotic: f64,

    #[serde(default, skip_serializing)]
    pub output_dir: Option<String>,
}

fn plus_one() -> i32 {
    1
}
fn default_r_min() -> f64 {
    1e-3
}
fn default_points() -> usize {
    2000
}
fn default_k_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn default_sample_ksq() -> Vec<f64> {
    vec![1.0]
}
fn default_ksq_min() -> f64 {
    0.01
}
fn default_ksq_max() -> f64 {
    100.0
}
fn default_ksq_points() -> usize {
    400
}
fn default_oracle_step() -> f64 {
    0.005
}
fn default_tol_eigenphase() -> f64 {
    1e-3
}
fn default_tol_unitarity() -> f64 {
    1e-5
}
fn default_tol_invariant() -> f64 {
    1e-10
}
fn default_tol_realness() -> f64 {
    1e-9
}
fn default_tol_asymptotic() -> f64 {
    1e-6
}

/// Command-line overrides applied on top of a file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub grid_points: Option<usize>,
    pub tol_eigenphase: Option<f64>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Epp(EppError::Config(msg.into()))
}

impl RunConfig {
    /// Four-channel example: `a = (1.1, 1.5, 2.1, 2.5)`, `b = 2.5 + 1.3i` at energy `e`.
    pub fn example(e: Complex64) -> Self {
        let mut cfg = Self::example_model();
        cfg.e_re = Some(e.re);
        cfg.e_im = Some(e.im);
        cfg
    }

    /// [`RunConfig::example`] without an energy.
    pub fn example_model() -> Self {
        let mut cfg = Self::minimal(vec![1.1, 1.5, 2.1, 2.5]);
        cfg.b_r = Some(2.5);
        cfg.b_i = Some(1.3);
        cfg
    }

    /// Defaults everywhere except the model; no energy or `B` set.
    pub fn minimal(a: Vec<f64>) -> Self {
        Self {
            n: None,
            a,
            k_r: None,
            k_i: None,
            e_re: None,
            e_im: None,
            b_r: None,
            b_i: None,
            b_branch: 1,
            angles: None,
            planes: None,
            b_matrix: None,
            sigma: 1,
            r_min: default_r_min(),
            r_max: None,
            points: default_points(),
            k_values: default_k_values(),
            sample_ksq: default_sample_ksq(),
            ksq_min: default_ksq_min(),
            ksq_max: default_ksq_max(),
            ksq_points: default_ksq_points(),
            oracle_r_min: default_r_min(),
            oracle_step: default_oracle_step(),
            oracle_r_match: None,
            tol_eigenphase: default_tol_eigenphase(),
            tol_unitarity: default_tol_unitarity(),
            tol_invariant: default_tol_invariant(),
            tol_realness: default_tol_realness(),
            tol_asymptotic: default_tol_asymptotic(),
            output_dir: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, is_json).map_err(|message| CliError::Parse {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        if json {
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            // a whole summary.json is accepted through its parameter echo
            let value = match value.get("parameters") {
                Some(p) if value.get("a").is_none() => p.clone(),
                _ => value,
            };
            serde_json::from_value(value).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(points) = o.grid_points {
            self.points = points;
        }
        if let Some(tol) = o.tol_eigenphase {
            self.tol_eigenphase = tol;
        }
    }

    /// Checks the config, builds the transformation, and returns it together
    /// with the fully resolved config (defaults filled in, energy given as `K`).
    /// Resolving a resolved config is the identity.
    pub fn resolve(&self) -> Result<(ResolvedRun, RunConfig), CliError> {
        let n = self.a.len();
        if let Some(declared) = self.n {
            if declared != n {
                return Err(config_error(format!("n = {declared} but {n} ranges given in a")));
            }
        }
        if n == 0 {
            return Err(config_error("a must list at least one range"));
        }
        if n % 2 == 1 {
            return Err(EppError::EppNotExistent { channels: n }.into());
        }
        let model = ChannelModel::sinh_squared(&self.a)?;

        let k = match (self.k_r, self.k_i, self.e_re, self.e_im) {
            (Some(kr), Some(ki), None, None) => Complex64::new(kr, ki),
            (None, None, Some(er), Some(ei)) => {
                let k = Complex64::new(er, ei).sqrt();
                if k.im < 0.0 {
                    -k
                } else {
                    k
                }
            }
            _ => return Err(config_error("give exactly one of (k_r, k_i) or (e_re, e_im)")),
        };
        let sigma =
            Sign::from_i32(self.sigma).ok_or_else(|| config_error(format!("sigma must be +1 or -1, got {}", self.sigma)))?;
        let b = self.build_b(n / 2)?;
        let spec = TransformSpec::new(k, b, sigma)?;
        let transform = EppTransform::new(model, spec)?;

        for (name, tol) in [
            ("tol_eigenphase", self.tol_eigenphase),
            ("tol_unitarity", self.tol_unitarity),
            ("tol_invariant", self.tol_invariant),
            ("tol_realness", self.tol_realness),
            ("tol_asymptotic", self.tol_asymptotic),
        ] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(config_error(format!("{name} must be positive, got {tol}")));
            }
        }
        let r_max = self.r_max.unwrap_or_else(|| default_r_max(k.im));
        if !(self.r_min > 0.0 && self.r_min < r_max && r_max.is_finite()) {
            return Err(config_error(format!(
                "need 0 < r_min < r_max, got {} and {r_max}",
                self.r_min
            )));
        }
        if self.points < 2 {
            return Err(config_error("points must be at least 2"));
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(config_error("k_values must be a nonempty list of positive numbers"));
        }
        if self.sample_ksq.iter().any(|x| !x.is_finite()) {
            return Err(config_error("sample_ksq must be finite"));
        }
        if !(self.ksq_min > 0.0 && self.ksq_min < self.ksq_max && self.ksq_max.is_finite()) || self.ksq_points < 2 {
            return Err(config_error("need 0 < ksq_min < ksq_max and ksq_points >= 2"));
        }
        let oracle_grid = match self.oracle_r_match {
            Some(r_match) => RadialGrid::new(self.oracle_r_min, r_match, self.oracle_step),
            None => RadialGrid::for_transform(&transform, self.oracle_r_min, self.oracle_step),
        }
        .map_err(|e| config_error(format!("oracle grid: {e}")))?;

        let mut resolved = self.clone();
        resolved.n = Some(n);
        resolved.k_r = Some(k.re);
        resolved.k_i = Some(k.im);
        resolved.e_re = None;
        resolved.e_im = None;
        resolved.r_max = Some(r_max);
        resolved.oracle_r_match = Some(oracle_grid.r_match());
        let run = ResolvedRun {
            transform,
            oracle_grid,
            tolerances: VerifyTolerances {
                eigenphase: self.tol_eigenphase,
                unitarity: self.tol_unitarity,
            },
        };
        Ok((run, resolved))
    }

    fn build_b(&self, m: usize) -> Result<ComplexOrthogonal, CliError> {
        let pair = match (self.b_r, self.b_i) {
            (None, None) => None,
            (Some(r), Some(i)) => Some(Complex64::new(r, i)),
            _ => return Err(config_error("b_r and b_i must be given together")),
        };
        let sources = pair.is_some() as u8 + self.angles.is_some() as u8 + self.b_matrix.is_some() as u8;
        if sources > 1 {
            return Err(config_error("give at most one of (b_r, b_i), angles, b_matrix"));
        }
        if self.planes.is_some() && self.angles.is_none() {
            return Err(config_error("planes requires angles"));
        }
        let branch = Sign::from_i32(self.b_branch)
            .ok_or_else(|| config_error(format!("b_branch must be +1 or -1, got {}", self.b_branch)))?;
        if let Some(b) = pair {
            if m != 2 {
                return Err(config_error(format!("(b_r, b_i) parametrizes 2x2 B, but N/2 = {m}")));
            }
            return Ok(complex_orthogonal_2x2(b, branch));
        }
        if let Some(angles) = &self.angles {
            let angles: Vec<Complex64> = angles.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            let planes: Vec<(usize, usize)> = match &self.planes {
                Some(p) => p.iter().map(|&[p, q]| (p, q)).collect(),
                None => all_planes(m),
            };
            return Ok(complex_orthogonal_general(m, &angles, &planes)?);
        }
        if let Some(rows) = &self.b_matrix {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(config_error(format!("b_matrix must be {m}x{m}")));
            }
            let data = rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
            return Ok(ComplexOrthogonal::new(ComplexMatrix::new(m, m, data)?)?);
        }
        if m == 1 {
            return Ok(ComplexOrthogonal::identity(1));
        }
        Err(config_error("B is required: give (b_r, b_i), angles or b_matrix"))
    }
}

/// A validated configuration ready to run.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub transform: EppTransform,
    pub oracle_grid: RadialGrid,
    pub tolerances: VerifyTolerances,
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
a = [1.1, 1.5, 2.1, 2.5]
e_re = 0.0
e_im = 4.5
b_r = 2.5
b_i = 1.3
"#;

    #[test]
    fn parses_toml_with_defaults() {
        let cfg = RunConfig::parse(EXAMPLE, false).unwrap();
        assert_eq!(cfg.points, 2000);
        assert_eq!(cfg.sigma, 1);
        let (run, resolved) = cfg.resolve().unwrap();
        assert!((run.transform.spec().k() - Complex64::new(1.5, 1.5)).norm() < 1e-15);
        assert_eq!(resolved.r_max, Some(40.0));
        assert_eq!(resolved.resolve().unwrap().1, resolved);
    }

    #[test]
    fn rejects_ambiguous_energy_and_unknown_keys() {
        let both = format!("{EXAMPLE}k_r = 1.0\nk_i = 1.0\n");
        let err = RunConfig::parse(&both, false).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("exactly one"));
        assert!(RunConfig::parse(&format!("{EXAMPLE}bogus = 1\n"), false).is_err());
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let cfg = RunConfig::parse(&format!("{EXAMPLE}tol_unitarity = 0.0\n"), false).unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("tol_unitarity"));
    }

    #[test]
    fn odd_channel_count_is_rejected_first() {
        let cfg = RunConfig::parse("a = [1.0, 2.0, 3.0, 4.0, 5.0]\nk_r = 1.0\nk_i = 1.0\n", false).unwrap();
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("odd channel count"));
    }

    #[test]
    fn two_channels_default_to_identity_b() {
        let cfg = RunConfig::parse("a = [1.2, 2.0]\nk_r = 0.8\nk_i = 1.1\n", false).unwrap();
        let (run, _) = cfg.resolve().unwrap();
        assert_eq!(run.transform.spec().m(), 1);
    }

    #[test]
    fn angles_build_general_b() {
        let cfg = RunConfig::parse(
            "a = [1.0, 1.2, 1.4, 1.6, 1.8, 2.0]\nk_r = 1.0\nk_i = 0.7\nangles = [[0.3, 0.2], [1.1, -0.4], [0.5, 0.1]]\n",
            false,
        )
        .unwrap();
        assert_eq!(cfg.resolve().unwrap().0.transform.spec().m(), 3);
    }

    #[test]
    fn corrupted_b_matrix_is_rejected() {
        let b = complex_orthogonal_2x2(Complex64::new(2.5, 1.3), Sign::Plus).into_matrix();
        let mut rows: Vec<Vec<[f64; 2]>> = (0..2)
            .map(|i| (0..2).map(|j| [b[(i, j)].re, b[(i, j)].im]).collect())
            .collect();
        let mut cfg = RunConfig::minimal(vec![1.1, 1.5, 2.1, 2.5]);
        cfg.k_r = Some(1.5);
        cfg.k_i = Some(1.5);
        cfg.b_matrix = Some(rows.clone());
        assert!(cfg.resolve().is_ok());
        rows[0][0][0] += 1e-3;
        cfg.b_matrix = Some(rows);
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("B not complex-orthogonal"));
    }
}
