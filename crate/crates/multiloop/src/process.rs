//! Dead-time transfer-function plants and steady-state pairing analysis.
//!
//! A plant is a square grid of scalar channels, each a first- or
//! second-order lag with transport delay. The module ships the four
//! classic 2×2 distillation/reactor benchmarks (`wb`, `vl`, `ww`, `or`),
//! computes DC gain matrices, and derives the relative gain array used to
//! justify diagonal loop pairing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative determinant threshold below which a gain matrix is treated as
/// singular: `|det| < 1e-12 * max_entry^n`.
const SINGULARITY_EPS: f64 = 1e-12;

/// Errors from plant construction and pairing analysis.
#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("time constants must be positive, got {0}")]
    NonPositiveTimeConstant(f64),
    #[error("dead time must be nonnegative, got {0}")]
    NegativeDeadTime(f64),
    #[error("a channel needs 1 or 2 time constants, got {0}")]
    BadLagCount(usize),
    #[error("gain and delay must be finite")]
    NonFiniteCoefficient,
    #[error("plant grid must be square with at least 2 loops, got {rows} rows")]
    NotSquare { rows: usize },
    #[error("row {row} has {len} elements, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("unknown benchmark `{0}` (expected one of wb, vl, ww, or)")]
    UnknownBenchmark(String),
    #[error("gain matrix is singular; loop pairing analysis is impossible")]
    SingularGainMatrix,
    #[error("gain matrix must be square, got {rows}x{cols}")]
    NonSquareMatrix { rows: usize, cols: usize },
    #[error("failed to read plant file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse plant file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// One scalar plant channel `K e^{-Ls} / Π (τ_i s + 1)`.
///
/// The gain may be negative; one or two lag time constants are supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferElement {
    pub gain: f64,
    pub time_constants: Vec<f64>,
    pub dead_time: f64,
}

impl TransferElement {
    pub fn new(gain: f64, time_constants: &[f64], dead_time: f64) -> Result<Self, ProcessError> {
        if !gain.is_finite() || !dead_time.is_finite() {
            return Err(ProcessError::NonFiniteCoefficient);
        }
        if time_constants.is_empty() || time_constants.len() > 2 {
            return Err(ProcessError::BadLagCount(time_constants.len()));
        }
        for &tau in time_constants {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(ProcessError::NonPositiveTimeConstant(tau));
            }
        }
        if dead_time < 0.0 {
            return Err(ProcessError::NegativeDeadTime(dead_time));
        }
        Ok(Self {
            gain,
            time_constants: time_constants.to_vec(),
            dead_time,
        })
    }

    /// First-order-plus-dead-time channel.
    pub fn first_order(gain: f64, tau: f64, dead_time: f64) -> Result<Self, ProcessError> {
        Self::new(gain, &[tau], dead_time)
    }

    /// Second-order-plus-dead-time channel (two cascaded lags).
    pub fn second_order(
        gain: f64,
        tau1: f64,
        tau2: f64,
        dead_time: f64,
    ) -> Result<Self, ProcessError> {
        Self::new(gain, &[tau1, tau2], dead_time)
    }
}

/// A named square grid of channels; row = controlled variable, column =
/// manipulated variable. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitoProcess {
    name: String,
    elements: Vec<Vec<TransferElement>>,
}

impl TitoProcess {
    pub fn new(
        name: impl Into<String>,
        elements: Vec<Vec<TransferElement>>,
    ) -> Result<Self, ProcessError> {
        let n = elements.len();
        if n < 2 {
            return Err(ProcessError::NotSquare { rows: n });
        }
        for (row, r) in elements.iter().enumerate() {
            if r.len() != n {
                return Err(ProcessError::RaggedRow {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            elements,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of loops (grid dimension).
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, row: usize, col: usize) -> &TransferElement {
        &self.elements[row][col]
    }

    pub fn elements(&self) -> &[Vec<TransferElement>] {
        &self.elements
    }

    /// Steady-state gain matrix: lags and delays contribute unity at s = 0,
    /// so entry (i, j) is just the channel gain.
    pub fn dc_gain(&self) -> GainMatrix {
        let values = self
            .elements
            .iter()
            .map(|row| row.iter().map(|e| e.gain).collect())
            .collect();
        GainMatrix { values }
    }

    /// Smallest lag time constant over all channels.
    pub fn min_time_constant(&self) -> f64 {
        self.elements
            .iter()
            .flatten()
            .flat_map(|e| e.time_constants.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest nonzero transport delay, if any channel has one.
    pub fn min_nonzero_dead_time(&self) -> Option<f64> {
        self.elements
            .iter()
            .flatten()
            .map(|e| e.dead_time)
            .filter(|&l| l > 0.0)
            .fold(None, |acc, l| Some(acc.map_or(l, |a: f64| a.min(l))))
    }

    /// Look up one of the built-in 2×2 benchmark plants by short name.
    pub fn benchmark(name: &str) -> Result<Self, ProcessError> {
        let key = name.to_ascii_lowercase();
        match key.as_str() {
            "wb" => Self::new(
                "wb",
                vec![
                    vec![
                        TransferElement::first_order(12.8, 16.7, 1.0)?,
                        TransferElement::first_order(-18.9, 21.0, 3.0)?,
                    ],
                    vec![
                        TransferElement::first_order(6.6, 10.9, 7.0)?,
                        TransferElement::first_order(-19.4, 14.4, 3.0)?,
                    ],
                ],
            ),
            "vl" => Self::new(
                "vl",
                vec![
                    vec![
                        TransferElement::first_order(-2.2, 7.0, 1.0)?,
                        TransferElement::first_order(1.3, 7.0, 0.3)?,
                    ],
                    vec![
                        TransferElement::first_order(-2.8, 9.5, 1.8)?,
                        TransferElement::first_order(4.3, 9.2, 0.35)?,
                    ],
                ],
            ),
            "ww" => Self::new(
                "ww",
                vec![
                    vec![
                        TransferElement::first_order(0.126, 60.0, 6.0)?,
                        TransferElement::second_order(-0.101, 48.0, 45.0, 12.0)?,
                    ],
                    vec![
                        TransferElement::first_order(0.094, 38.0, 8.0)?,
                        TransferElement::first_order(-0.12, 35.0, 8.0)?,
                    ],
                ],
            ),
            "or" => Self::new(
                "or",
                vec![
                    vec![
                        TransferElement::first_order(22.89, 4.572, 0.2)?,
                        TransferElement::first_order(-11.64, 1.807, 0.4)?,
                    ],
                    vec![
                        TransferElement::first_order(4.689, 2.174, 0.2)?,
                        TransferElement::first_order(5.8, 1.801, 0.4)?,
                    ],
                ],
            ),
            _ => Err(ProcessError::UnknownBenchmark(name.to_string())),
        }
    }

    /// Short names of the built-in benchmarks.
    pub fn benchmark_names() -> &'static [&'static str] {
        &["wb", "vl", "ww", "or"]
    }

    /// Load a plant from TOML text with keys `name` and `rows`, where each
    /// row is a list of `{gain, time_constants, dead_time}` records.
    pub fn from_toml_str(text: &str) -> Result<Self, ProcessError> {
        #[derive(Deserialize)]
        struct PlantFile {
            name: String,
            rows: Vec<Vec<ElementSpec>>,
        }
        #[derive(Deserialize)]
        struct ElementSpec {
            gain: f64,
            time_constants: Vec<f64>,
            dead_time: f64,
        }
        let raw: PlantFile = toml::from_str(text)?;
        let mut elements = Vec::with_capacity(raw.rows.len());
        for row in &raw.rows {
            let mut out = Vec::with_capacity(row.len());
            for e in row {
                out.push(TransferElement::new(e.gain, &e.time_constants, e.dead_time)?);
            }
            elements.push(out);
        }
        Self::new(raw.name, elements)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ProcessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// An n×n matrix of steady-state gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrix {
    values: Vec<Vec<f64>>,
}

impl GainMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, ProcessError> {
        let n = values.len();
        for (row, r) in values.iter().enumerate() {
            if r.len() != n {
                return Err(ProcessError::NonSquareMatrix {
                    rows: n,
                    cols: r.len(),
                });
            }
            let _ = row;
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Relative gain array `G ⊗ (G⁻¹)ᵀ`.
    ///
    /// Every row and column of the result sums to 1; for a 2×2 matrix the
    /// structure is `[[λ, 1-λ], [1-λ, λ]]`. Fails when the matrix is
    /// singular, which signals that pairing analysis is impossible.
    pub fn rga(&self) -> Result<GainMatrix, ProcessError> {
        let inv = self.inverse()?;
        let n = self.dim();
        // element-by-element product with the transposed inverse
        let values = (0..n)
            .map(|i| (0..n).map(|j| self.values[i][j] * inv[j][i]).collect())
            .collect();
        Ok(GainMatrix { values })
    }

    fn max_abs_entry(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    fn singularity_threshold(&self) -> f64 {
        SINGULARITY_EPS * self.max_abs_entry().powi(self.dim() as i32)
    }

    fn inverse(&self) -> Result<Vec<Vec<f64>>, ProcessError> {
        let n = self.dim();
        if n == 2 {
            // closed-form adjugate
            let [a, b, c, d] = [
                self.values[0][0],
                self.values[0][1],
                self.values[1][0],
                self.values[1][1],
            ];
            let det = a * d - b * c;
            if det.abs() < self.singularity_threshold() || !det.is_finite() {
                return Err(ProcessError::SingularGainMatrix);
            }
            return Ok(vec![
                vec![d / det, -b / det],
                vec![-c / det, a / det],
            ]);
        }
        // Gauss-Jordan with partial pivoting for n > 2
        let mut aug: Vec<Vec<f64>> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        let mut det = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .unwrap();
            if aug[pivot_row][col].abs() < self.singularity_threshold() {
                return Err(ProcessError::SingularGainMatrix);
            }
            if pivot_row != col {
                aug.swap(pivot_row, col);
                det = -det;
            }
            let pivot = aug[col][col];
            det *= pivot;
            for j in 0..2 * n {
                aug[col][j] /= pivot;
            }
            for i in 0..n {
                if i != col {
                    let factor = aug[i][col];
                    for j in 0..2 * n {
                        aug[i][j] -= factor * aug[col][j];
                    }
                }
            }
        }
        if det.abs() < self.singularity_threshold() || !det.is_finite() {
            return Err(ProcessError::SingularGainMatrix);
        }
        Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zero_plant() -> TitoProcess {
        let z = || TransferElement::first_order(0.0, 1.0, 0.0).unwrap();
        TitoProcess::new("zeros", vec![vec![z(), z()], vec![z(), z()]]).unwrap()
    }

    #[test]
    fn dc_gain_matches_benchmark_coefficients() {
        let wb = TitoProcess::benchmark("wb").unwrap().dc_gain();
        assert_eq!(wb.values(), &[vec![12.8, -18.9], vec![6.6, -19.4]]);
        let vl = TitoProcess::benchmark("vl").unwrap().dc_gain();
        assert_eq!(vl.values(), &[vec![-2.2, 1.3], vec![-2.8, 4.3]]);
    }

    #[test]
    fn dc_gain_of_zero_plant_is_zero_matrix() {
        let g = zero_plant().dc_gain();
        assert!(g.values().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rga_reproduces_benchmark_values() {
        // (name, diagonal entry of the published RGA)
        let expected = [
            ("wb", 2.0094),
            ("vl", 1.6254),
            ("ww", 2.6875),
            ("or", 0.7087),
        ];
        for (name, lambda) in expected {
            let rga = TitoProcess::benchmark(name).unwrap().dc_gain().rga().unwrap();
            assert_abs_diff_eq!(rga.get(0, 0), lambda, epsilon = 1e-3);
            assert_abs_diff_eq!(rga.get(1, 1), lambda, epsilon = 1e-3);
            assert_abs_diff_eq!(rga.get(0, 1), 1.0 - lambda, epsilon = 1e-3);
            assert_abs_diff_eq!(rga.get(1, 0), 1.0 - lambda, epsilon = 1e-3);
        }
    }

    #[test]
    fn rga_of_diagonal_matrix_is_identity() {
        let g = GainMatrix::new(vec![vec![3.0, 0.0], vec![0.0, -7.5]]).unwrap();
        let rga = g.rga().unwrap();
        assert_eq!(rga.values(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn rga_rejects_singular_matrix() {
        let g = GainMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(g.rga(), Err(ProcessError::SingularGainMatrix)));
    }

    #[test]
    fn rga_three_by_three_rows_and_columns_sum_to_one() {
        let g = GainMatrix::new(vec![
            vec![1.0, 0.4, -0.2],
            vec![0.3, 2.0, 0.1],
            vec![-0.5, 0.2, 1.5],
        ])
        .unwrap();
        let rga = g.rga().unwrap();
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| rga.get(i, j)).sum();
            let col: f64 = (0..3).map(|j| rga.get(j, i)).sum();
            assert_abs_diff_eq!(row, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(col, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn benchmark_registry_matches_published_channels() {
        let wb = TitoProcess::benchmark("wb").unwrap();
        assert_eq!(
            wb.element(1, 0),
            &TransferElement::first_order(6.6, 10.9, 7.0).unwrap()
        );
        let ww = TitoProcess::benchmark("ww").unwrap();
        assert_eq!(ww.element(0, 1).time_constants, vec![48.0, 45.0]);
        assert_eq!(ww.element(0, 1).dead_time, 12.0);
        let or = TitoProcess::benchmark("or").unwrap();
        assert_eq!(
            or.element(1, 1),
            &TransferElement::first_order(5.8, 1.801, 0.4).unwrap()
        );
    }

    #[test]
    fn benchmark_rejects_unknown_name() {
        assert!(matches!(
            TitoProcess::benchmark("nope"),
            Err(ProcessError::UnknownBenchmark(_))
        ));
    }

    #[test]
    fn element_validation() {
        assert!(TransferElement::first_order(1.0, 0.0, 0.0).is_err());
        assert!(TransferElement::first_order(1.0, -2.0, 0.0).is_err());
        assert!(TransferElement::first_order(1.0, 1.0, -0.1).is_err());
        assert!(TransferElement::new(1.0, &[], 0.0).is_err());
        assert!(TransferElement::new(1.0, &[1.0, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn process_validation() {
        let e = || TransferElement::first_order(1.0, 1.0, 0.0).unwrap();
        assert!(TitoProcess::new("one", vec![vec![e()]]).is_err());
        assert!(TitoProcess::new("ragged", vec![vec![e(), e()], vec![e()]]).is_err());
    }

    #[test]
    fn plant_loads_from_toml() {
        let text = r#"
            name = "custom"
            rows = [
                [{gain = 1.5, time_constants = [2.0], dead_time = 0.5},
                 {gain = -0.5, time_constants = [1.0, 3.0], dead_time = 0.0}],
                [{gain = 0.0, time_constants = [1.0], dead_time = 0.0},
                 {gain = 2.0, time_constants = [4.0], dead_time = 1.0}],
            ]
        "#;
        let plant = TitoProcess::from_toml_str(text).unwrap();
        assert_eq!(plant.name(), "custom");
        assert_eq!(plant.dim(), 2);
        assert_eq!(plant.element(0, 1).time_constants, vec![1.0, 3.0]);
        assert_eq!(plant.min_time_constant(), 1.0);
        assert_eq!(plant.min_nonzero_dead_time(), Some(0.5));
    }

    proptest! {
        #[test]
        fn rga_rows_and_columns_sum_to_one(
            a in 0.5_f64..5.0, b in -5.0_f64..-0.5,
            c in 0.5_f64..5.0, d in 0.5_f64..5.0,
        ) {
            // entries chosen so ad - bc is bounded away from zero
            let g = GainMatrix::new(vec![vec![a, b], vec![c, d]]).unwrap();
            let rga = g.rga().unwrap();
            for i in 0..2 {
                let row: f64 = (0..2).map(|j| rga.get(i, j)).sum();
                let col: f64 = (0..2).map(|j| rga.get(j, i)).sum();
                prop_assert!((row - 1.0).abs() < 1e-9);
                prop_assert!((col - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn rga_is_invariant_to_row_scaling(
            a in 0.5_f64..5.0, b in -5.0_f64..-0.5,
            c in 0.5_f64..5.0, d in 0.5_f64..5.0,
            scale in prop_oneof![0.01_f64..100.0, -100.0_f64..-0.01],
        ) {
            let g = GainMatrix::new(vec![vec![a, b], vec![c, d]]).unwrap();
            let scaled = GainMatrix::new(vec![vec![a * scale, b * scale], vec![c, d]]).unwrap();
            let r1 = g.rga().unwrap();
            let r2 = scaled.rga().unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((r1.get(i, j) - r2.get(i, j)).abs() < 1e-9);
                }
            }
        }
    }
}
