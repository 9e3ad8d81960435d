use std::fmt::Write as _;
use std::path::Path;

use epp_core::matrix::eigenphases_symmetric_unitary;
use epp_core::oracle::{phase_residual, verify_epp, ScatterReport};
use epp_core::reference::{reference_eigenphases, s0_matrix};
use epp_core::transform::log_grid;
use epp_core::{ComplexMatrix, EppTransform, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ResolvedRun, RunConfig};
use crate::error::CliError;

/// Files produced by a command, in write order, plus the verdict.
#[derive(Clone, Debug)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub pass: bool,
}

impl Outputs {
    pub fn write_to(&self, dir: &Path) -> std::result::Result<(), CliError> {
        let write_err = |path: &Path, source| CliError::Write {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| write_err(&path, e))?;
        }
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn real_rows(m: &ComplexMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect()).collect()
}

#[derive(Serialize)]
struct ComplexRows {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for ComplexRows {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            re: real_rows(m),
            im: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }
}

/// Per-radius quantities of the transformed potential.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub r: f64,
    pub v2: ComplexMatrix,
    pub rcond: f64,
    pub anti_hermitian_defect: f64,
}

impl GridPoint {
    /// `max |Im V₂| / max(1, max |V₂|)`.
    pub fn imaginary_part(&self) -> f64 {
        self.v2.max_abs_imag() / self.v2.max_abs().max(1.0)
    }

    /// `max |V₂ − V₂ᵀ| / max(1, max |V₂|)`.
    pub fn asymmetry(&self) -> f64 {
        self.v2.asymmetry() / self.v2.max_abs().max(1.0)
    }
}

/// Evaluates the transformation on the configured log grid (in parallel).
pub fn sweep(transform: &EppTransform, cfg: &RunConfig) -> Result<Vec<GridPoint>> {
    let r_max = cfg.r_max.expect("resolved config");
    log_grid(cfg.r_min, r_max, cfg.points)
        .par_iter()
        .map(|&r| {
            let s = transform.sample(r)?;
            Ok(GridPoint {
                r,
                rcond: s.rcond(),
                anti_hermitian_defect: s.superpotential.anti_hermitian_defect(),
                v2: s.v2,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct UInfinitySample {
    ksq: f64,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct GridSummary {
    r_min: f64,
    r_max: f64,
    points: usize,
    min_wronskian_rcond: f64,
    max_offdiagonal_v2: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    parameters: &'a RunConfig,
    n_channels: usize,
    k: [f64; 2],
    energy: [f64; 2],
    omega: Vec<Vec<f64>>,
    omega_over_energy_im: Vec<Vec<f64>>,
    u_infinity: Vec<UInfinitySample>,
    diagnostic_x: ComplexRows,
    grid: GridSummary,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// `v2_grid.csv` and `summary.json`.
pub fn cmd_transform(run: &ResolvedRun, cfg: &RunConfig) -> Result<Outputs> {
    let t = &run.transform;
    let n = t.n_channels();
    let points = sweep(t, cfg)?;

    let mut csv = String::from("r");
    for i in 1..=n {
        for j in i..=n {
            write!(csv, ",V{i}{j}").unwrap();
        }
    }
    csv.push('\n');
    for p in &points {
        csv.push_str(&fmt_num(p.r));
        for i in 0..n {
            for j in i..n {
                csv.push(',');
                csv.push_str(&fmt_num(p.v2[(i, j)].re));
            }
        }
        csv.push('\n');
    }

    let spec = t.spec();
    let e_im = spec.energy().im;
    let summary = Summary {
        parameters: cfg,
        n_channels: n,
        k: [spec.k_r(), spec.k_i()],
        energy: [spec.energy().re, spec.energy().im],
        omega: real_rows(t.omega()),
        omega_over_energy_im: real_rows(&t.omega().scale_real(1.0 / e_im)),
        u_infinity: cfg
            .sample_ksq
            .iter()
            .map(|&ksq| UInfinitySample {
                ksq,
                matrix: real_rows(&t.u_infinity(ksq)),
            })
            .collect(),
        diagnostic_x: (&t.canonical_factorization()?.x).into(),
        grid: GridSummary {
            r_min: cfg.r_min,
            r_max: cfg.r_max.expect("resolved config"),
            points: cfg.points,
            min_wronskian_rcond: points.iter().map(|p| p.rcond).fold(f64::INFINITY, f64::min),
            max_offdiagonal_v2: points.iter().map(|p| p.v2.re().max_off_diagonal()).fold(0.0, f64::max),
        },
    };
    Ok(Outputs {
        files: vec![("v2_grid.csv".into(), csv), ("summary.json".into(), to_json(&summary))],
        pass: true,
    })
}

/// One named check: `value` against `tolerance`, as an upper bound unless
/// `lower_bound` is set.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub lower_bound: bool,
    pub pass: bool,
}

impl InvariantCheck {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            lower_bound: false,
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            lower_bound: true,
            pass: value >= tolerance,
        }
    }
}

/// Smallest equilibrated Wronskian reciprocal condition accepted on the grid.
pub const MIN_WRONSKIAN_RCOND: f64 = 1e-10;

/// Structural checks of the transformation on the configured grid and k list.
pub fn invariant_suite(run: &ResolvedRun, cfg: &RunConfig) -> Result<Vec<InvariantCheck>> {
    let t = &run.transform;
    let spec = t.spec();
    let n = t.n_channels();
    let tol = cfg.tol_invariant;
    let id = ComplexMatrix::identity(n);
    let scale = 4.0 * spec.k_r().powi(2) * spec.k_i().powi(2);

    let b = spec.b();
    let b_scale = b.matrix().max_abs().powi(2).max(1.0);
    let om = t.omega();
    let mut checks = vec![
        InvariantCheck::at_most("b_complex_orthogonal", b.defect() / b_scale, tol),
        InvariantCheck::at_most("omega_antisymmetric", (om + &om.transpose()).max_abs() / scale.sqrt(), tol),
        InvariantCheck::at_most(
            "omega_orthogonal",
            (&om.transpose() * om).max_diff(&id.scale_real(scale)) / scale,
            tol,
        ),
    ];

    let ksq: Vec<f64> = cfg
        .k_values
        .iter()
        .map(|k| k * k)
        .chain(cfg.sample_ksq.iter().copied())
        .collect();
    let u_defect = ksq
        .iter()
        .map(|&ksq| {
            let u = t.u_infinity(ksq);
            let norm = t.u_infinity_norm_sq(ksq);
            (&u * &u.transpose()).max_diff(&id.scale_real(norm)) / norm
        })
        .fold(0.0, f64::max);
    checks.push(InvariantCheck::at_most("u_infinity_orthogonal", u_defect, tol));

    let phase = cfg
        .k_values
        .iter()
        .map(|&k| -> Result<f64> {
            let s2 = t.s2_matrix(k)?;
            let p2 = eigenphases_symmetric_unitary(&s2, 1e-9)?;
            Ok(phase_residual(&p2, &reference_eigenphases(k, t.model())))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(InvariantCheck::at_most("closed_form_eigenphases_preserved", phase, tol));

    let points = sweep(t, cfg)?;
    let fold_max = |f: fn(&GridPoint) -> f64| points.iter().map(f).fold(0.0, f64::max);
    checks.push(InvariantCheck::at_most(
        "wronskian_anti_hermitian",
        fold_max(|p| p.anti_hermitian_defect),
        tol,
    ));
    checks.push(InvariantCheck::at_least(
        "wronskian_rcond",
        points.iter().map(|p| p.rcond).fold(f64::INFINITY, f64::min),
        MIN_WRONSKIAN_RCOND,
    ));
    checks.push(InvariantCheck::at_most(
        "v2_real",
        fold_max(GridPoint::imaginary_part),
        cfg.tol_realness,
    ));
    checks.push(InvariantCheck::at_most(
        "v2_symmetric",
        fold_max(GridPoint::asymmetry),
        cfg.tol_realness,
    ));

    let far = t.sample(30.0 / spec.k_i())?;
    checks.push(InvariantCheck::at_most(
        "w2_vanishes_asymptotically",
        far.w2().max_abs(),
        cfg.tol_asymptotic,
    ));
    Ok(checks)
}

#[derive(Serialize)]
struct Report<'a> {
    parameters: &'a RunConfig,
    invariants: &'a [InvariantCheck],
    scatter: &'a ScatterReport,
    pass: bool,
}

/// `report.json`; `pass` iff every invariant and the oracle comparison pass.
pub fn cmd_verify(run: &ResolvedRun, cfg: &RunConfig) -> Result<Outputs> {
    let invariants = invariant_suite(run, cfg)?;
    let scatter = verify_epp(&run.transform, &cfg.k_values, &run.oracle_grid, run.tolerances)?;
    let pass = scatter.pass && invariants.iter().all(|c| c.pass);
    let report = Report {
        parameters: cfg,
        invariants: &invariants,
        scatter: &scatter,
        pass,
    };
    Ok(Outputs {
        files: vec![("report.json".into(), to_json(&report))],
        pass,
    })
}

/// `rs_columns.csv` and `eigenphases.csv` over the configured k² grid.
pub fn cmd_figures(run: &ResolvedRun, cfg: &RunConfig) -> Result<Outputs> {
    let t = &run.transform;
    let n = t.n_channels();
    let ksq: Vec<f64> = (0..cfg.ksq_points)
        .map(|i| {
            if i + 1 == cfg.ksq_points {
                cfg.ksq_max
            } else {
                cfg.ksq_min + (cfg.ksq_max - cfg.ksq_min) * i as f64 / (cfg.ksq_points - 1) as f64
            }
        })
        .collect();

    let rows: Vec<(ComplexMatrix, Vec<f64>, Vec<f64>)> = ksq
        .par_iter()
        .map(|&ksq| {
            let k = ksq.sqrt();
            let s0 = s0_matrix(k, t.model())?;
            let s2 = t.s2_matrix(k)?;
            Ok((
                t.rs_matrix(ksq),
                eigenphases_symmetric_unitary(&s0, 1e-9)?,
                eigenphases_symmetric_unitary(&s2, 1e-9)?,
            ))
        })
        .collect::<Result<_>>()?;

    let mut rs = String::from("ksq");
    for j in 1..=n {
        for i in 1..=n {
            write!(rs, ",R{j}_{i}").unwrap();
        }
    }
    rs.push('\n');
    let mut phases = String::from("k");
    for set in ["S0", "S2"] {
        for j in 1..=n {
            write!(phases, ",{set}_delta_{j}").unwrap();
        }
    }
    phases.push('\n');

    for (&ksq, (r, p0, p2)) in ksq.iter().zip(&rows) {
        rs.push_str(&fmt_num(ksq));
        for j in 0..n {
            for i in 0..n {
                rs.push(',');
                rs.push_str(&fmt_num(r[(i, j)].re));
            }
        }
        rs.push('\n');
        phases.push_str(&fmt_num(ksq.sqrt()));
        for d in p0.iter().chain(p2) {
            phases.push(',');
            phases.push_str(&fmt_num(*d));
        }
        phases.push('\n');
    }
    Ok(Outputs {
        files: vec![("rs_columns.csv".into(), rs), ("eigenphases.csv".into(), phases)],
        pass: true,
    })
}
