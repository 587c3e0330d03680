//! Parsers for the four CSV layouts, numeric cleanup, and imputation.
//!
//! All parsers are header-driven: columns are located by trimmed,
//! case-insensitive name, never by position. Quoted fields (RFC 4180) are
//! accepted because the environmental tables carry thousands separators
//! inside values. Cells that fail to parse in the patient table are routed
//! to the imputation queue instead of aborting the load; the environmental
//! tables are small and strict, so malformed cells there are hard errors.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RiskLevel;

/// One patient row. Numeric cells are aligned to the owning table's
/// `column_names`; `None` marks a cell awaiting imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub values: Vec<Option<i64>>,
    pub level: RiskLevel,
}

/// Patient table: ordinal risk features plus the severity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTable {
    /// Numeric column names in file order (Age and Gender included).
    pub column_names: Vec<String>,
    pub rows: Vec<PatientRecord>,
}

impl PatientTable {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Counts of Low / Medium / High.
    pub fn level_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for row in &self.rows {
            counts[row.level.code() as usize - 1] += 1;
        }
        counts
    }

    /// Case-insensitive, trimmed column lookup.
    pub fn find_column(&self, name: &str) -> Option<usize> {
        let want = name.trim().to_ascii_lowercase();
        self.column_names
            .iter()
            .position(|c| c.trim().to_ascii_lowercase() == want)
    }

    pub fn missing_cells(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.values.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_cells() == 0
    }

    /// Canonical CSV form; missing cells become empty fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Patient Id".to_string()];
        header.extend(self.column_names.iter().cloned());
        header.push("Level".to_string());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.patient_id.clone()];
            rec.extend(
                row.values
                    .iter()
                    .map(|v| v.map_or(String::new(), |x| x.to_string())),
            );
            rec.push(row.level.name().to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

/// Yearly lung-cancer incidence (cases out of all cancer cases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyIncidence {
    pub year: i32,
    pub cases: u64,
    pub total: u64,
    pub rate: f64,
}

/// Forest cover for one year, in thousands of hectares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestStatus {
    pub year: i32,
    pub total_kha: f64,
    pub natural_kha: f64,
    pub planted_kha: f64,
}

/// Annual tree-cover loss and associated gross CO2-equivalent emissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCoverLoss {
    pub iso: String,
    pub year: i32,
    pub loss_ha: f64,
    pub co2e_mg: f64,
}

/// How to fill missing patient cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    #[default]
    Median,
    Mode,
    DropRow,
}

impl std::str::FromStr for ImputeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "median" => Ok(ImputeStrategy::Median),
            "mode" => Ok(ImputeStrategy::Mode),
            "drop_row" | "drop-row" => Ok(ImputeStrategy::DropRow),
            other => Err(Error::invalid(format!(
                "unknown imputation strategy '{other}' (expected median, mode, or drop_row)"
            ))),
        }
    }
}

/// Per-file load outcome, serialized into the load report JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileLoad {
    pub name: String,
    pub kind: String,
    pub rows: usize,
    pub imputed_cells: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub files: Vec<FileLoad>,
}

impl LoadReport {
    pub fn total_imputations(&self) -> usize {
        self.files.iter().map(|f| f.imputed_cells).sum()
    }
}

/// Strip thousands separators (commas) and parse a decimal number.
///
/// Idempotent on anything it has already produced: formatting a parsed value
/// and cleaning it again returns the same value.
pub fn clean_numeric(token: &str) -> Result<f64> {
    let trimmed = token.trim();
    if trimmed.is_empty() {
        return Err(Error::invalid("empty numeric token"));
    }
    let cleaned: String = trimmed.chars().filter(|&c| c != ',').collect();
    let value: f64 = cleaned
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse numeric token '{trimmed}'")))?;
    if !value.is_finite() {
        return Err(Error::invalid(format!("non-finite numeric token '{trimmed}'")));
    }
    Ok(value)
}

/// Parse a year token, tolerating a fractional rendering like "2002.0".
fn parse_year(token: &str) -> Result<i32> {
    let v = clean_numeric(token)?;
    if v.fract() != 0.0 {
        return Err(Error::invalid(format!("year '{token}' is not an integer")));
    }
    let year = v as i32;
    if !(1900..=2100).contains(&year) {
        return Err(Error::invalid(format!("year {year} outside [1900, 2100]")));
    }
    Ok(year)
}

fn parse_count(token: &str) -> Result<u64> {
    let v = clean_numeric(token)?;
    if v.fract() != 0.0 || v < 0.0 {
        return Err(Error::invalid(format!("'{token}' is not a non-negative integer")));
    }
    Ok(v as u64)
}

struct Header {
    names: Vec<String>,
}

impl Header {
    fn read(reader: &mut csv::Reader<impl Read>, file: &str) -> Result<Header> {
        let rec = reader.headers().map_err(|e| Error::Schema {
            file: file.to_string(),
            message: format!("cannot read header row: {e}"),
        })?;
        Ok(Header {
            names: rec.iter().map(|s| s.trim().to_string()).collect(),
        })
    }

    fn find(&self, name: &str) -> Option<usize> {
        let want = name.to_ascii_lowercase();
        self.names
            .iter()
            .position(|c| c.to_ascii_lowercase() == want)
    }

    fn require(&self, name: &str, file: &str) -> Result<usize> {
        self.find(name).ok_or_else(|| Error::Schema {
            file: file.to_string(),
            message: format!("missing required column '{name}'"),
        })
    }
}

fn cell<'a>(record: &'a csv::StringRecord, idx: usize) -> &'a str {
    record.get(idx).unwrap_or("").trim()
}

fn reader_from(source: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source)
}

/// Outcome of parsing the patient CSV. Defective cells are already routed
/// into the table as missing values; `warnings` describes each one.
#[derive(Debug)]
pub struct PatientParse {
    pub table: PatientTable,
    pub warnings: Vec<String>,
}

/// Parse the patient-table layout. Column order in the file is preserved;
/// `Patient Id` and `Level` are lifted out, everything else that is not an
/// index column becomes a numeric column.
pub fn parse_patient_csv(source: impl Read, file: &str) -> Result<PatientParse> {
    let mut rdr = reader_from(source);
    let header = Header::read(&mut rdr, file)?;

    let id_idx = header.require("Patient Id", file)?;
    let level_idx = header.require("Level", file)?;

    let mut numeric_cols: Vec<(usize, String)> = Vec::new();
    for (i, name) in header.names.iter().enumerate() {
        if i == id_idx || i == level_idx {
            continue;
        }
        let lower = name.to_ascii_lowercase();
        if name.is_empty() || lower == "index" {
            continue;
        }
        numeric_cols.push((i, name.clone()));
    }
    if numeric_cols.is_empty() {
        return Err(Error::Schema {
            file: file.to_string(),
            message: "no numeric feature columns found".to_string(),
        });
    }

    let column_names: Vec<String> = numeric_cols.iter().map(|(_, n)| n.clone()).collect();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();

    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_1 = row_no + 1;
        let level_token = cell(&rec, level_idx);
        let level = RiskLevel::parse(level_token).ok_or(Error::UnknownLevel {
            value: level_token.to_string(),
            row: row_1,
        })?;

        let mut values = Vec::with_capacity(numeric_cols.len());
        for (idx, name) in &numeric_cols {
            let token = cell(&rec, *idx);
            if token.is_empty() {
                values.push(None);
                continue;
            }
            match clean_numeric(token) {
                Ok(v) if v.fract() == 0.0 && v >= 1.0 => values.push(Some(v as i64)),
                _ => {
                    warnings.push(format!(
                        "{file}: row {row_1}, column '{name}': cell '{token}' is not a valid ordinal; queued for imputation"
                    ));
                    values.push(None);
                }
            }
        }

        rows.push(PatientRecord {
            patient_id: cell(&rec, id_idx).to_string(),
            values,
            level,
        });
    }

    if rows.is_empty() {
        return Err(Error::Schema {
            file: file.to_string(),
            message: "no data rows (header-only file)".to_string(),
        });
    }

    Ok(PatientParse {
        table: PatientTable { column_names, rows },
        warnings,
    })
}

/// Parse the yearly-incidence layout (Year, Number, Total, Rate). The rate
/// is recomputed from cases/total; a mismatch beyond 1e-4 is recorded as a
/// warning and the file value replaced.
pub fn parse_yearly_incidence(
    source: impl Read,
    file: &str,
) -> Result<(Vec<YearlyIncidence>, Vec<String>)> {
    let mut rdr = reader_from(source);
    let header = Header::read(&mut rdr, file)?;
    let year_idx = header.require("Year", file)?;
    let cases_idx = header.require("Number", file)?;
    let total_idx = header.require("Total", file)?;
    let rate_idx = header.require("Rate", file)?;

    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_1 = row_no + 1;
        let wrap = |col: &str, e: Error| Error::Parse {
            file: file.to_string(),
            row: row_1,
            column: col.to_string(),
            message: e.to_string(),
        };
        let year = parse_year(cell(&rec, year_idx)).map_err(|e| wrap("Year", e))?;
        let cases = parse_count(cell(&rec, cases_idx)).map_err(|e| wrap("Number", e))?;
        let total = parse_count(cell(&rec, total_idx)).map_err(|e| wrap("Total", e))?;
        let rate = clean_numeric(cell(&rec, rate_idx)).map_err(|e| wrap("Rate", e))?;

        if cases > total {
            return Err(wrap(
                "Number",
                Error::invalid(format!("cases ({cases}) exceed total ({total})")),
            ));
        }
        let computed = if total == 0 {
            0.0
        } else {
            cases as f64 / total as f64
        };
        let rate = if (rate - computed).abs() > 1e-4 {
            warnings.push(format!(
                "{file}: row {row_1}: rate {rate} differs from cases/total {computed:.6}; using computed value"
            ));
            computed
        } else {
            rate
        };
        out.push(YearlyIncidence {
            year,
            cases,
            total,
            rate,
        });
    }
    Ok((out, warnings))
}

/// Parse the forest-status layout (year plus total/natural/planted areas in
/// thousands of hectares). The additivity check total = natural + planted
/// is soft: violations beyond 0.5 kha become warnings.
pub fn parse_forest_status(
    source: impl Read,
    file: &str,
) -> Result<(Vec<ForestStatus>, Vec<String>)> {
    let mut rdr = reader_from(source);
    let header = Header::read(&mut rdr, file)?;
    let year_idx = header.require("Year", file)?;
    let total_idx = header.require("Total area of forested land", file)?;
    let natural_idx = header.require("Natural forest", file)?;
    let planted_idx = header.require("Planted forest", file)?;

    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_1 = row_no + 1;
        let wrap = |col: &str, e: Error| Error::Parse {
            file: file.to_string(),
            row: row_1,
            column: col.to_string(),
            message: e.to_string(),
        };
        let area = |idx: usize, col: &str| -> Result<f64> {
            let v = clean_numeric(cell(&rec, idx)).map_err(|e| wrap(col, e))?;
            if v < 0.0 {
                return Err(wrap(col, Error::invalid(format!("negative area {v}"))));
            }
            Ok(v)
        };
        let year = parse_year(cell(&rec, year_idx)).map_err(|e| wrap("Year", e))?;
        let total_kha = area(total_idx, "Total area of forested land")?;
        let natural_kha = area(natural_idx, "Natural forest")?;
        let planted_kha = area(planted_idx, "Planted forest")?;
        if (total_kha - (natural_kha + planted_kha)).abs() > 0.5 {
            warnings.push(format!(
                "{file}: row {row_1}: total {total_kha} differs from natural + planted {}",
                natural_kha + planted_kha
            ));
        }
        out.push(ForestStatus {
            year,
            total_kha,
            natural_kha,
            planted_kha,
        });
    }
    Ok((out, warnings))
}

/// Parse the tree-cover-loss layout, keeping only rows for `iso` (compared
/// case-insensitively), sorted ascending by year. A duplicated year for the
/// same ISO code is an error.
pub fn parse_tree_cover_loss(
    source: impl Read,
    file: &str,
    iso: &str,
) -> Result<Vec<TreeCoverLoss>> {
    let mut rdr = reader_from(source);
    let header = Header::read(&mut rdr, file)?;
    let iso_idx = header.require("iso", file)?;
    let year_idx = header.require("umd_tree_cover_loss_year", file)?;
    let loss_idx = header.require("umd_tree_cover_loss_ha", file)?;
    let co2_idx = header.require("gfw_gross_emissions_co2e_all_gases_Mg", file)?;

    let want = iso.trim().to_ascii_uppercase();
    let mut out = Vec::new();
    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_1 = row_no + 1;
        let code = cell(&rec, iso_idx).to_ascii_uppercase();
        if code != want {
            continue;
        }
        let wrap = |col: &str, e: Error| Error::Parse {
            file: file.to_string(),
            row: row_1,
            column: col.to_string(),
            message: e.to_string(),
        };
        let year = parse_year(cell(&rec, year_idx)).map_err(|e| wrap("umd_tree_cover_loss_year", e))?;
        let loss_ha =
            clean_numeric(cell(&rec, loss_idx)).map_err(|e| wrap("umd_tree_cover_loss_ha", e))?;
        let co2e_mg = clean_numeric(cell(&rec, co2_idx))
            .map_err(|e| wrap("gfw_gross_emissions_co2e_all_gases_Mg", e))?;
        if loss_ha < 0.0 || co2e_mg < 0.0 {
            return Err(wrap(
                "umd_tree_cover_loss_ha",
                Error::invalid("negative loss or emissions"),
            ));
        }
        out.push(TreeCoverLoss {
            iso: code,
            year,
            loss_ha,
            co2e_mg,
        });
    }

    out.sort_by_key(|r| r.year);
    let dups: Vec<i32> = out
        .windows(2)
        .filter(|w| w[0].year == w[1].year)
        .map(|w| w[0].year)
        .collect();
    if !dups.is_empty() {
        return Err(Error::Schema {
            file: file.to_string(),
            message: format!("duplicate years for ISO {want}: {dups:?}"),
        });
    }
    Ok(out)
}

/// Fill missing cells. Returns the completed table and the number of cells
/// imputed (for `DropRow`, the number of rows removed).
pub fn impute_missing(
    table: &PatientTable,
    strategy: ImputeStrategy,
) -> Result<(PatientTable, usize)> {
    match strategy {
        ImputeStrategy::DropRow => {
            let rows: Vec<PatientRecord> = table
                .rows
                .iter()
                .filter(|r| r.values.iter().all(Option::is_some))
                .cloned()
                .collect();
            if rows.is_empty() {
                return Err(Error::invalid("drop_row imputation removed every row"));
            }
            let dropped = table.rows.len() - rows.len();
            Ok((
                PatientTable {
                    column_names: table.column_names.clone(),
                    rows,
                },
                dropped,
            ))
        }
        ImputeStrategy::Median | ImputeStrategy::Mode => {
            let mut fills = Vec::with_capacity(table.column_names.len());
            for (j, name) in table.column_names.iter().enumerate() {
                let mut present: Vec<i64> =
                    table.rows.iter().filter_map(|r| r.values[j]).collect();
                let has_missing = present.len() < table.rows.len();
                if !has_missing {
                    fills.push(0); // unused
                    continue;
                }
                if present.is_empty() {
                    return Err(Error::EmptyColumn {
                        column: name.clone(),
                    });
                }
                present.sort_unstable();
                let fill = match strategy {
                    ImputeStrategy::Median => {
                        let m = present.len();
                        let median = if m % 2 == 1 {
                            present[m / 2] as f64
                        } else {
                            (present[m / 2 - 1] + present[m / 2]) as f64 / 2.0
                        };
                        // round half up, clamp back into the ordinal domain
                        (median.round() as i64).max(1)
                    }
                    ImputeStrategy::Mode => {
                        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                        for v in &present {
                            *counts.entry(*v).or_insert(0) += 1;
                        }
                        // highest count, smallest value on ties
                        let best = counts.iter().max_by(|a, b| {
                            a.1.cmp(b.1).then(b.0.cmp(a.0))
                        });
                        *best.expect("non-empty").0
                    }
                    ImputeStrategy::DropRow => unreachable!(),
                };
                fills.push(fill);
            }

            let mut imputed = 0usize;
            let rows: Vec<PatientRecord> = table
                .rows
                .iter()
                .map(|r| {
                    let values = r
                        .values
                        .iter()
                        .enumerate()
                        .map(|(j, v)| match v {
                            Some(x) => Some(*x),
                            None => {
                                imputed += 1;
                                Some(fills[j])
                            }
                        })
                        .collect();
                    PatientRecord {
                        patient_id: r.patient_id.clone(),
                        values,
                        level: r.level,
                    }
                })
                .collect();
            Ok((
                PatientTable {
                    column_names: table.column_names.clone(),
                    rows,
                },
                imputed,
            ))
        }
    }
}

/// Canonical CSV form for the incidence table.
pub fn incidence_to_csv(rows: &[YearlyIncidence]) -> String {
    let mut out = String::from("Year,Number,Total,Rate\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.year, r.cases, r.total, r.rate));
    }
    out
}

/// Canonical CSV form for the forest table.
pub fn forest_to_csv(rows: &[ForestStatus]) -> String {
    let mut out = String::from("Year,Total area of forested land,Natural forest,Planted forest\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.year, r.total_kha, r.natural_kha, r.planted_kha
        ));
    }
    out
}

/// Canonical CSV form for the tree-cover-loss table.
pub fn tree_loss_to_csv(rows: &[TreeCoverLoss]) -> String {
    let mut out = String::from(
        "iso,umd_tree_cover_loss_year,umd_tree_cover_loss_ha,gfw_gross_emissions_co2e_all_gases_Mg\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iso, r.year, r.loss_ha, r.co2e_mg
        ));
    }
    out
}
