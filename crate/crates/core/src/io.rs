//! File formats shared by the command-line tools: JSON problem and result
//! files (complex entries as `[re, im]` pairs, matrices as row-major nested
//! arrays) and flat CSV tables for plotting.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direct::ScatteringDataset;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::inverse::{InverseDiagnostics, RecoveredModel};
use crate::matrix::CMat;
use crate::potential::HermitianPotential;
use crate::validate::{ConditionReport, RoundtripMetrics};

pub type ComplexDto = [f64; 2];
pub type MatrixDto = Vec<Vec<ComplexDto>>;

pub fn matrix_to_dto(m: &CMat) -> MatrixDto {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_dto(dto: &MatrixDto) -> Result<CMat> {
    let n = dto.len();
    if n == 0 || dto.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| Complex64::new(dto[i][j][0], dto[i][j][1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroParams {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sech2Params {
    pub kappa: f64,
    /// Coefficient matrix; defaults to `-2 kappa^2` times the identity
    /// (the classic reflectionless well) when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpDecayParams {
    pub rate: f64,
    pub matrix: MatrixDto,
}

/// Potential description file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialFile {
    Zero { params: ZeroParams },
    Sech2 { params: Sech2Params },
    ExpDecay { params: ExpDecayParams },
    Sampled { x: Vec<f64>, v: Vec<MatrixDto> },
}

impl PotentialFile {
    pub fn to_potential(&self) -> Result<HermitianPotential> {
        match self {
            PotentialFile::Zero { params } => HermitianPotential::zero(params.n),
            PotentialFile::Sech2 { params } => {
                let coeff = match &params.matrix {
                    Some(dto) => matrix_from_dto(dto)?,
                    None => {
                        let n = params.n.unwrap_or(1);
                        CMat::identity(n, n) * Complex64::new(-2.0 * params.kappa * params.kappa, 0.0)
                    }
                };
                HermitianPotential::sech2(params.kappa, coeff)
            }
            PotentialFile::ExpDecay { params } => {
                HermitianPotential::exp_decay(params.rate, matrix_from_dto(&params.matrix)?)
            }
            PotentialFile::Sampled { x, v } => {
                let mats = v.iter().map(matrix_from_dto).collect::<Result<Vec<_>>>()?;
                HermitianPotential::sampled(x.clone(), mats)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub u: MatrixDto,
}

impl BoundaryFile {
    pub fn to_boundary(&self) -> Result<crate::boundary::BoundaryCondition> {
        crate::boundary::boundary_pair(&matrix_from_dto(&self.u)?)
    }

    pub fn from_matrix(u: &CMat) -> Self {
        BoundaryFile { u: matrix_to_dto(u) }
    }
}

/// Reproducibility header carried by every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunHeader {
    pub tool: String,
    pub command: String,
    pub grid: GridSpec,
    pub kappa_max: f64,
}

impl RunHeader {
    pub fn new(command: &str, grid: &GridSpec, kappa_max: f64) -> Self {
        RunHeader {
            tool: format!("mscat {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            grid: grid.clone(),
            kappa_max,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundStateDto {
    pub k: f64,
    pub c: MatrixDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub header: RunHeader,
    pub n: usize,
    pub k_grid: Vec<f64>,
    pub s: Vec<MatrixDto>,
    pub u0: MatrixDto,
    pub bound_states: Vec<BoundStateDto>,
}

impl DatasetFile {
    pub fn from_dataset(data: &ScatteringDataset, header: RunHeader) -> Self {
        DatasetFile {
            header,
            n: data.n,
            k_grid: data.k_grid.clone(),
            s: data.s.iter().map(matrix_to_dto).collect(),
            u0: matrix_to_dto(&data.u0),
            bound_states: data
                .bound_states
                .iter()
                .map(|(k, c)| BoundStateDto { k: *k, c: matrix_to_dto(c) })
                .collect(),
        }
    }

    pub fn to_dataset(&self) -> Result<ScatteringDataset> {
        if self.s.len() != self.k_grid.len() {
            return Err(Error::InvalidInput("scattering samples and k grid differ in length".into()));
        }
        Ok(ScatteringDataset {
            n: self.n,
            k_grid: self.k_grid.clone(),
            s: self.s.iter().map(matrix_from_dto).collect::<Result<Vec<_>>>()?,
            u0: matrix_from_dto(&self.u0)?,
            bound_states: self
                .bound_states
                .iter()
                .map(|b| Ok((b.k, matrix_from_dto(&b.c)?)))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsDto {
    pub marchenko_residual: f64,
    pub homogeneous_margins: Vec<[f64; 2]>,
    pub kernel_tail_norm: f64,
    pub anti_hermitian_residual: f64,
    pub boundary_spread: Vec<[f64; 2]>,
    pub warnings: Vec<String>,
}

impl DiagnosticsDto {
    pub fn from_diagnostics(d: &InverseDiagnostics) -> Self {
        DiagnosticsDto {
            marchenko_residual: d.marchenko_residual,
            homogeneous_margins: d.margins.iter().map(|&(x, s)| [x, s]).collect(),
            kernel_tail_norm: d.kernel_tail_norm,
            anti_hermitian_residual: d.anti_hermitian_residual,
            boundary_spread: d.boundary_spread.iter().map(|&(k, s)| [k, s]).collect(),
            warnings: d.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub header: RunHeader,
    pub n: usize,
    pub x: Vec<f64>,
    pub v: Vec<MatrixDto>,
    pub u: MatrixDto,
    pub diagnostics: DiagnosticsDto,
}

impl ModelFile {
    pub fn from_model(model: &RecoveredModel, header: RunHeader) -> Self {
        ModelFile {
            header,
            n: model.n(),
            x: model.xs.clone(),
            v: model.v.iter().map(matrix_to_dto).collect(),
            u: matrix_to_dto(&model.u),
            diagnostics: DiagnosticsDto::from_diagnostics(&model.diagnostics),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsDto {
    pub potential_weighted_l1: f64,
    pub potential_norm: f64,
    pub boundary_error: f64,
    pub scattering_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSummaryDto {
    pub condition_i: bool,
    pub condition_ii: bool,
    pub condition_iii: bool,
    pub worst_unitarity: f64,
    pub weighted_derivative_norm: f64,
    pub tail_fraction: f64,
}

impl ConditionSummaryDto {
    pub fn from_report(r: &ConditionReport) -> Self {
        ConditionSummaryDto {
            condition_i: r.condition_i.pass,
            condition_ii: r.condition_ii.pass,
            condition_iii: r.condition_iii.pass,
            worst_unitarity: r.condition_i.worst_unitarity,
            weighted_derivative_norm: r.condition_ii.weighted_derivative_norm,
            tail_fraction: r.condition_ii.tail_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub header: RunHeader,
    pub metrics: MetricsDto,
    pub conditions: ConditionSummaryDto,
}

impl ReportFile {
    pub fn new(header: RunHeader, metrics: &RoundtripMetrics, conditions: &ConditionReport) -> Self {
        ReportFile {
            header,
            metrics: MetricsDto {
                potential_weighted_l1: metrics.potential_error,
                potential_norm: metrics.potential_norm,
                boundary_error: metrics.boundary_error,
                scattering_error: metrics.scattering_error,
            },
            conditions: ConditionSummaryDto::from_report(conditions),
        }
    }
}

/// One row per wavenumber with flattened matrix columns `S_ij_re`, `S_ij_im`.
pub fn write_dataset_csv<W: Write>(mut w: W, data: &ScatteringDataset) -> std::io::Result<()> {
    let n = data.n;
    write!(w, "k")?;
    for i in 0..n {
        for j in 0..n {
            write!(w, ",S_{i}{j}_re,S_{i}{j}_im")?;
        }
    }
    writeln!(w)?;
    for (k, s) in data.k_grid.iter().zip(&data.s) {
        write!(w, "{k:.17e}")?;
        for i in 0..n {
            for j in 0..n {
                write!(w, ",{:.17e},{:.17e}", s[(i, j)].re, s[(i, j)].im)?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One row per position with flattened matrix columns `V_ij_re`, `V_ij_im`.
pub fn write_model_csv<W: Write>(mut w: W, model: &RecoveredModel) -> std::io::Result<()> {
    let n = model.n();
    write!(w, "x")?;
    for i in 0..n {
        for j in 0..n {
            write!(w, ",V_{i}{j}_re,V_{i}{j}_im")?;
        }
    }
    writeln!(w)?;
    for (x, v) in model.xs.iter().zip(&model.v) {
        write!(w, "{x:.17e}")?;
        for i in 0..n {
            for j in 0..n {
                write!(w, ",{:.17e},{:.17e}", v[(i, j)].re, v[(i, j)].im)?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryCondition;
    use crate::direct::scattering_dataset;
    use crate::matrix::mat_norm;

    #[test]
    fn potential_file_round_trips_through_json() {
        let text = r#"{
            "kind": "exp_decay",
            "params": {
                "rate": 1.0,
                "matrix": [[[1.0, 0.0], [0.5, 0.0]], [[0.5, 0.0], [-1.0, 0.0]]]
            }
        }"#;
        let file: PotentialFile = serde_json::from_str(text).unwrap();
        let v = file.to_potential().unwrap();
        assert_eq!(v.n(), 2);
        assert!((v.eval(0.0)[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sech2_defaults_to_reflectionless_well() {
        let text = r#"{"kind": "sech2", "params": {"kappa": 1.0}}"#;
        let file: PotentialFile = serde_json::from_str(text).unwrap();
        let v = file.to_potential().unwrap();
        assert!((v.eval(0.0)[(0, 0)].re + 2.0).abs() < 1e-15);
    }

    #[test]
    fn dataset_file_round_trips() {
        let v = HermitianPotential::zero(1).unwrap();
        let bc = BoundaryCondition::robin(std::f64::consts::FRAC_PI_2);
        let grid = GridSpec { n_k: 50, k_max: 10.0, x_max: 20.0, n_x: 100, ..GridSpec::default() };
        let data = scattering_dataset(&v, &bc, &grid, 4.0).unwrap();
        let file = DatasetFile::from_dataset(&data, RunHeader::new("direct", &grid, 4.0));
        let text = serde_json::to_string_pretty(&file).unwrap();
        let parsed: DatasetFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_dataset().unwrap();
        assert_eq!(back.k_grid, data.k_grid);
        for (a, b) in back.s.iter().zip(&data.s) {
            assert!(mat_norm(&(a - b)) == 0.0);
        }
        assert_eq!(back.bound_states.len(), 1);
    }

    #[test]
    fn csv_has_expected_shape() {
        let v = HermitianPotential::zero(2).unwrap();
        let bc = BoundaryCondition::dirichlet(2);
        let grid = GridSpec { n_k: 5, k_max: 5.0, x_max: 10.0, n_x: 50, ..GridSpec::default() };
        let data = scattering_dataset(&v, &bc, &grid, 2.0).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,S_00_re,S_00_im,S_01_re,S_01_im,S_10_re,S_10_im,S_11_re,S_11_im");
        assert_eq!(text.lines().count(), 6);
    }
}
