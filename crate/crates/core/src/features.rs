//! Target encoding, z-score standardization, and year alignment of the
//! environmental series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PatientTable;
use crate::linalg::Matrix;

/// Three-class severity target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::Low, RiskLevel::Medium, RiskLevel::High];

    /// Numeric code: Low 1, Medium 2, High 3.
    pub fn code(self) -> u8 {
        match self {
            RiskLevel::Low => 1,
            RiskLevel::Medium => 2,
            RiskLevel::High => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<RiskLevel> {
        match code {
            1 => Some(RiskLevel::Low),
            2 => Some(RiskLevel::Medium),
            3 => Some(RiskLevel::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskLevel::Low => "Low",
            RiskLevel::Medium => "Medium",
            RiskLevel::High => "High",
        }
    }

    /// Case-insensitive, whitespace-tolerant parse.
    pub fn parse(s: &str) -> Option<RiskLevel> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Some(RiskLevel::Low),
            "medium" => Some(RiskLevel::Medium),
            "high" => Some(RiskLevel::High),
            _ => None,
        }
    }
}

impl std::fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Encode a severity label: Low → 1, Medium → 2, High → 3.
pub fn encode_level(label: &str) -> Result<u8> {
    RiskLevel::parse(label)
        .map(RiskLevel::code)
        .ok_or_else(|| Error::invalid(format!("unknown risk level '{label}'")))
}

/// Invert `encode_level`.
pub fn decode_level(code: u8) -> Result<RiskLevel> {
    RiskLevel::from_code(code).ok_or_else(|| Error::invalid(format!("unknown level code {code}")))
}

/// Numeric design matrix plus encoded target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub x: Matrix,
    /// Encoded severity per row (1, 2, 3).
    pub y: Vec<u8>,
    pub standardized: bool,
    pub means: Option<Vec<f64>>,
    pub stds: Option<Vec<f64>>,
}

impl FeatureMatrix {
    /// Build the raw (unstandardized) matrix from a complete patient table.
    pub fn from_patient_table(table: &PatientTable) -> Result<FeatureMatrix> {
        if !table.is_complete() {
            return Err(Error::invalid(
                "patient table has missing cells; impute before building the feature matrix",
            ));
        }
        if table.n() == 0 {
            return Err(Error::invalid("patient table is empty"));
        }
        let d = table.column_names.len();
        let mut x = Matrix::zeros(table.n(), d);
        let mut y = Vec::with_capacity(table.n());
        for (i, row) in table.rows.iter().enumerate() {
            for (j, v) in row.values.iter().enumerate() {
                x.set(i, j, v.expect("complete table") as f64);
            }
            y.push(row.level.code());
        }
        Ok(FeatureMatrix {
            column_names: table.column_names.clone(),
            x,
            y,
            standardized: false,
            means: None,
            stds: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// Case-insensitive column lookup.
    pub fn find_column(&self, name: &str) -> Option<usize> {
        let want = name.trim().to_ascii_lowercase();
        self.column_names
            .iter()
            .position(|c| c.trim().to_ascii_lowercase() == want)
    }

    /// Rows at `indices`, in order, as a new matrix with the same metadata.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_names: self.column_names.clone(),
            x: self.x.take_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            standardized: self.standardized,
            means: self.means.clone(),
            stds: self.stds.clone(),
        }
    }

    /// Standardized copy; see [`standardize`].
    pub fn standardized(&self) -> Result<(FeatureMatrix, Vec<String>)> {
        let (z, means, stds, warnings) = standardize(&self.x)?;
        Ok((
            FeatureMatrix {
                column_names: self.column_names.clone(),
                x: z,
                y: self.y.clone(),
                standardized: true,
                means: Some(means),
                stds: Some(stds),
            },
            warnings,
        ))
    }
}

/// Z-score each column with the sample standard deviation (n − 1 divisor).
///
/// Constant columns cannot be scaled; their std is recorded as 1 and the
/// z-scores come out 0, with a warning naming the column index.
pub fn standardize(x: &Matrix) -> Result<(Matrix, Vec<f64>, Vec<f64>, Vec<String>)> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid("standardize requires at least 2 rows"));
    }
    let d = x.cols();
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    let mut warnings = Vec::new();

    for j in 0..d {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        means.push(mean);
        if std == 0.0 {
            warnings.push(format!("column {j} is constant; z-scores set to 0"));
            stds.push(1.0);
        } else {
            stds.push(std);
        }
    }

    Ok((apply_standardization(x, &means, &stds), means, stds, warnings))
}

/// Apply stored means/stds to new data (e.g. the test split).
pub fn apply_standardization(x: &Matrix, means: &[f64], stds: &[f64]) -> Matrix {
    let mut z = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            z.set(i, j, (x.get(i, j) - means[j]) / stds[j]);
        }
    }
    z
}

/// A named yearly series to be joined with others.
#[derive(Debug, Clone, PartialEq)]
pub struct YearSeries {
    pub name: String,
    pub points: Vec<(i32, f64)>,
}

impl YearSeries {
    pub fn new(name: impl Into<String>, points: Vec<(i32, f64)>) -> Self {
        YearSeries {
            name: name.into(),
            points,
        }
    }
}

/// Yearly series aligned on a common, strictly increasing year axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearJoinedSeries {
    pub years: Vec<i32>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl YearJoinedSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, year) in self.years.iter().enumerate() {
            out.push_str(&year.to_string());
            for (_, vals) in &self.columns {
                out.push_str(&format!(",{}", vals[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Inner-join yearly series on their common years (sorted ascending).
///
/// With `interpolate` set, each series is instead linearly interpolated at
/// the union of observed years restricted to the span covered by every
/// input, which rescues joins between sparse and dense series.
pub fn join_by_year(series: &[YearSeries], interpolate: bool) -> Result<YearJoinedSeries> {
    if series.len() < 2 {
        return Err(Error::invalid("join_by_year needs at least two series"));
    }
    for s in series {
        let mut years: Vec<i32> = s.points.iter().map(|(y, _)| *y).collect();
        years.sort_unstable();
        if years.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!(
                "series '{}' has duplicate years",
                s.name
            )));
        }
    }

    let years: Vec<i32> = if interpolate {
        let lo = series
            .iter()
            .map(|s| s.points.iter().map(|(y, _)| *y).min().unwrap_or(i32::MAX))
            .max()
            .unwrap();
        let hi = series
            .iter()
            .map(|s| s.points.iter().map(|(y, _)| *y).max().unwrap_or(i32::MIN))
            .min()
            .unwrap();
        let mut union: Vec<i32> = series
            .iter()
            .flat_map(|s| s.points.iter().map(|(y, _)| *y))
            .filter(|y| (lo..=hi).contains(y))
            .collect();
        union.sort_unstable();
        union.dedup();
        union
    } else {
        let mut common: Vec<i32> = series[0].points.iter().map(|(y, _)| *y).collect();
        for s in &series[1..] {
            let have: Vec<i32> = s.points.iter().map(|(y, _)| *y).collect();
            common.retain(|y| have.contains(y));
        }
        common.sort_unstable();
        common
    };

    if years.is_empty() {
        return Err(Error::EmptyYearJoin);
    }

    let mut columns = Vec::with_capacity(series.len());
    for s in series {
        let mut pts = s.points.clone();
        pts.sort_by_key(|(y, _)| *y);
        let values: Vec<f64> = years
            .iter()
            .map(|&year| sample_series(&pts, year))
            .collect();
        columns.push((s.name.clone(), values));
    }

    Ok(YearJoinedSeries { years, columns })
}

/// Value of a sorted series at `year`, linearly interpolating between the
/// bracketing observations. Callers guarantee `year` lies inside the span.
fn sample_series(pts: &[(i32, f64)], year: i32) -> f64 {
    match pts.binary_search_by_key(&year, |(y, _)| *y) {
        Ok(i) => pts[i].1,
        Err(i) => {
            let (y0, v0) = pts[i - 1];
            let (y1, v1) = pts[i];
            let t = (year - y0) as f64 / (y1 - y0) as f64;
            v0 + t * (v1 - v0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_level_maps_and_is_case_insensitive() {
        assert_eq!(encode_level("Low").unwrap(), 1);
        assert_eq!(encode_level("medium").unwrap(), 2);
        assert_eq!(encode_level("High").unwrap(), 3);
        assert!(encode_level("severe").is_err());
    }

    #[test]
    fn encode_decode_is_a_bijection() {
        for level in RiskLevel::ALL {
            let code = encode_level(level.name()).unwrap();
            assert_eq!(decode_level(code).unwrap(), level);
        }
    }

    #[test]
    fn standardize_simple_column() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let (z, means, stds, warnings) = standardize(&x).unwrap();
        assert_eq!(means, vec![2.0]);
        assert_eq!(stds, vec![1.0]); // sample std of {1,2,3}
        assert_eq!(z.column(0), vec![-1.0, 0.0, 1.0]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn standardize_is_idempotent() {
        let x = Matrix::from_rows(vec![vec![1.0, 5.0], vec![2.0, 9.0], vec![4.0, 2.0]]);
        let (z1, _, _, _) = standardize(&x).unwrap();
        let (z2, _, _, _) = standardize(&z1).unwrap();
        for i in 0..z1.rows() {
            for j in 0..z1.cols() {
                assert!((z1.get(i, j) - z2.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn standardize_constant_column_yields_zeros() {
        let x = Matrix::from_rows(vec![vec![5.0], vec![5.0], vec![5.0]]);
        let (z, means, stds, warnings) = standardize(&x).unwrap();
        assert_eq!(means, vec![5.0]);
        assert_eq!(stds, vec![1.0]);
        assert_eq!(z.column(0), vec![0.0, 0.0, 0.0]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn stored_parameters_reproduce_z_exactly() {
        let x = Matrix::from_rows(vec![vec![1.0, 4.0], vec![3.0, 8.0], vec![7.0, 1.0]]);
        let (z, means, stds, _) = standardize(&x).unwrap();
        let replayed = apply_standardization(&x, &means, &stds);
        assert_eq!(z, replayed);
    }

    #[test]
    fn join_inner_intersects_years() {
        let a = YearSeries::new("cases", vec![(2000, 1.0), (2012, 2.0), (2018, 3.0), (2020, 4.0), (2022, 5.0)]);
        let b = YearSeries::new("loss", (2001..=2023).map(|y| (y, y as f64)).collect());
        let joined = join_by_year(&[a, b], false).unwrap();
        assert_eq!(joined.years, vec![2012, 2018, 2020, 2022]);
        assert_eq!(joined.column("cases").unwrap(), &[2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn join_identical_year_sets_preserves_rows() {
        let a = YearSeries::new("a", vec![(2001, 1.0), (2002, 2.0)]);
        let b = YearSeries::new("b", vec![(2002, 4.0), (2001, 3.0)]);
        let joined = join_by_year(&[a, b], false).unwrap();
        assert_eq!(joined.years, vec![2001, 2002]);
        assert_eq!(joined.column("b").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn join_disjoint_years_is_an_error() {
        let a = YearSeries::new("a", vec![(2000, 1.0)]);
        let b = YearSeries::new("b", vec![(2010, 2.0)]);
        let err = join_by_year(&[a, b], false).unwrap_err();
        assert!(matches!(err, Error::EmptyYearJoin));
    }

    #[test]
    fn join_interpolates_sparse_series() {
        let a = YearSeries::new("sparse", vec![(2000, 0.0), (2010, 10.0)]);
        let b = YearSeries::new("dense", (2002..=2006).map(|y| (y, 1.0)).collect());
        let joined = join_by_year(&[a, b], true).unwrap();
        assert_eq!(joined.years, vec![2002, 2003, 2004, 2005, 2006]);
        assert_eq!(joined.column("sparse").unwrap(), &[2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn join_output_years_subset_of_inputs() {
        let a = YearSeries::new("a", vec![(2001, 1.0), (2003, 2.0), (2005, 9.0)]);
        let b = YearSeries::new("b", vec![(2003, 4.0), (2005, 3.0), (2007, 1.0)]);
        let joined = join_by_year(&[a.clone(), b.clone()], false).unwrap();
        for y in &joined.years {
            assert!(a.points.iter().any(|(ay, _)| ay == y));
            assert!(b.points.iter().any(|(by, _)| by == y));
        }
    }
}
