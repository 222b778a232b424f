//! Feature table ingestion and serialization.
//!
//! The on-disk format is a delimited text file with a header row: one sample
//! identifier column, a metadata block (group indicator, total reads,
//! optional covariates), and one column per feature. Metadata column names
//! are configurable so exported abundance tables can be used directly.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Tsv,
    Csv,
}

impl TableFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            TableFormat::Tsv => b'\t',
            TableFormat::Csv => b',',
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(TableFormat::Tsv),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::Argument(format!("unknown table format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    /// All observed values are 0 or 1; passed through unchanged.
    Binary,
    /// Standardized to mean 0, sd 1 (N-1 denominator) by `build_design`.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub values: Vec<f64>,
    pub kind: CovariateKind,
}

impl Covariate {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        let kind = if values.iter().all(|&v| v == 0.0 || v == 1.0) {
            CovariateKind::Binary
        } else {
            CovariateKind::Continuous
        };
        Covariate {
            name: name.into(),
            values,
            kind,
        }
    }
}

/// Sample-by-feature observation matrix with per-sample metadata.
///
/// Counts may be sequencing reads or relative abundances; presence is
/// derived from strict positivity either way. `total_reads` must always be
/// supplied and strictly positive since sequencing depth enters the model
/// as a covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub sample_ids: Vec<String>,
    pub feature_ids: Vec<String>,
    /// N x K, non-negative.
    pub counts: Array2<f64>,
    pub total_reads: Vec<f64>,
    /// 0 = control, 1 = case.
    pub group: Vec<u8>,
    pub covariates: Vec<Covariate>,
}

impl FeatureTable {
    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    /// Checks the structural invariants; every constructor routes through
    /// this.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_samples();
        let k = self.n_features();
        if self.counts.dim() != (n, k) {
            return Err(Error::Validation(format!(
                "counts matrix is {:?}, expected ({n}, {k})",
                self.counts.dim()
            )));
        }
        if self.total_reads.len() != n || self.group.len() != n {
            return Err(Error::Validation(
                "total_reads/group length does not match sample count".into(),
            ));
        }
        if let Some(i) = self.total_reads.iter().position(|&r| !(r > 0.0)) {
            return Err(Error::Validation(format!(
                "total_reads must be strictly positive; sample '{}' has {}",
                self.sample_ids[i], self.total_reads[i]
            )));
        }
        if let Some(i) = self.group.iter().position(|&g| g > 1) {
            return Err(Error::Validation(format!(
                "group must be 0/1; sample '{}' has {}",
                self.sample_ids[i], self.group[i]
            )));
        }
        let mut seen = HashSet::new();
        for id in &self.feature_ids {
            if !seen.insert(id) {
                return Err(Error::Validation(format!("duplicate feature id '{id}'")));
            }
        }
        for ((i, j), &c) in self.counts.indexed_iter() {
            if !(c >= 0.0) {
                return Err(Error::Validation(format!(
                    "negative or non-finite count {c} at sample '{}', feature '{}'",
                    self.sample_ids[i], self.feature_ids[j]
                )));
            }
        }
        for cov in &self.covariates {
            if cov.values.len() != n {
                return Err(Error::Validation(format!(
                    "covariate '{}' length does not match sample count",
                    cov.name
                )));
            }
        }
        Ok(())
    }

    /// Restricts the table to a subset of samples (rows), preserving order.
    pub fn select_samples(&self, indices: &[usize]) -> FeatureTable {
        let k = self.n_features();
        let mut counts = Array2::zeros((indices.len(), k));
        for (row, &i) in indices.iter().enumerate() {
            counts.row_mut(row).assign(&self.counts.row(i));
        }
        FeatureTable {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            feature_ids: self.feature_ids.clone(),
            counts,
            total_reads: indices.iter().map(|&i| self.total_reads[i]).collect(),
            group: indices.iter().map(|&i| self.group[i]).collect(),
            covariates: self
                .covariates
                .iter()
                .map(|c| Covariate {
                    name: c.name.clone(),
                    values: indices.iter().map(|&i| c.values[i]).collect(),
                    kind: c.kind,
                })
                .collect(),
        }
    }

    /// Restricts the table to a subset of features (columns), preserving order.
    pub fn select_features(&self, indices: &[usize]) -> FeatureTable {
        let n = self.n_samples();
        let mut counts = Array2::zeros((n, indices.len()));
        for (col, &j) in indices.iter().enumerate() {
            counts.column_mut(col).assign(&self.counts.column(j));
        }
        FeatureTable {
            sample_ids: self.sample_ids.clone(),
            feature_ids: indices.iter().map(|&j| self.feature_ids[j].clone()).collect(),
            counts,
            total_reads: self.total_reads.clone(),
            group: self.group.clone(),
            covariates: self.covariates.clone(),
        }
    }
}

/// Column naming for ingestion. All columns other than the sample id and the
/// named metadata columns are treated as features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestOptions {
    pub group_col: String,
    pub reads_col: String,
    pub covariate_cols: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            group_col: "group".into(),
            reads_col: "total_reads".into(),
            covariate_cols: Vec::new(),
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("'{raw}' is not a number"),
    })
}

/// Reads a delimited table from `path`.
///
/// The header row names features; the designated metadata columns carry the
/// group indicator, total read counts, and covariates. The first column is
/// the sample identifier.
pub fn ingest_table(path: impl AsRef<Path>, format: TableFormat, opts: &IngestOptions) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(true)
        .flexible(false)
        .from_path(path.as_ref())?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::Schema("header must contain a sample id column and data columns".into()));
    }

    let find = |name: &str| headers.iter().position(|h| h == name);
    let group_idx = find(&opts.group_col)
        .ok_or_else(|| Error::Schema(format!("missing group column '{}'", opts.group_col)))?;
    let reads_idx = find(&opts.reads_col)
        .ok_or_else(|| Error::Schema(format!("missing total-reads column '{}'", opts.reads_col)))?;
    let mut cov_idx = Vec::with_capacity(opts.covariate_cols.len());
    for name in &opts.covariate_cols {
        cov_idx.push(
            find(name).ok_or_else(|| Error::Schema(format!("missing covariate column '{name}'")))?,
        );
    }

    let mut meta: HashSet<usize> = HashSet::from([0, group_idx, reads_idx]);
    meta.extend(cov_idx.iter().copied());
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|c| !meta.contains(c)).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns remain after metadata columns".into()));
    }
    let feature_ids: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();

    let mut sample_ids = Vec::new();
    let mut group = Vec::new();
    let mut total_reads = Vec::new();
    let mut cov_values: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
    let mut rows: Vec<f64> = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        sample_ids.push(record[0].trim().to_string());

        let g = parse_cell(&record[group_idx], row, &headers[group_idx])?;
        if g != 0.0 && g != 1.0 {
            return Err(Error::Validation(format!(
                "group value {g} at row {row} is not 0/1"
            )));
        }
        group.push(g as u8);

        let reads = parse_cell(&record[reads_idx], row, &headers[reads_idx])?;
        if !(reads > 0.0) {
            return Err(Error::Validation(format!(
                "non-positive total_reads {reads} at row {row}"
            )));
        }
        total_reads.push(reads);

        for (k, &c) in cov_idx.iter().enumerate() {
            cov_values[k].push(parse_cell(&record[c], row, &headers[c])?);
        }

        for &c in &feature_cols {
            let v = parse_cell(&record[c], row, &headers[c])?;
            if !(v >= 0.0) {
                return Err(Error::Validation(format!(
                    "negative count {v} at row {row}, column '{}'",
                    headers[c]
                )));
            }
            rows.push(v);
        }
    }

    if sample_ids.is_empty() {
        return Err(Error::Schema("table contains no data rows".into()));
    }

    let n = sample_ids.len();
    let k = feature_ids.len();
    let counts = Array2::from_shape_vec((n, k), rows)
        .expect("row-major count buffer matches dimensions");

    let covariates = opts
        .covariate_cols
        .iter()
        .zip(cov_values)
        .map(|(name, values)| Covariate::new(name.clone(), values))
        .collect();

    let table = FeatureTable {
        sample_ids,
        feature_ids,
        counts,
        total_reads,
        group,
        covariates,
    };
    table.validate()?;
    Ok(table)
}

fn fmt_num(v: f64) -> String {
    // Shortest round-trip representation keeps serialized tables bit-stable.
    format!("{v}")
}

/// Writes a table in the ingestion format (inverse of [`ingest_table`]).
pub fn write_table<W: Write>(mut w: W, table: &FeatureTable, format: TableFormat, opts: &IngestOptions) -> Result<()> {
    table.validate()?;
    let d = char::from(format.delimiter());
    let mut header = vec!["sample_id".to_string(), opts.group_col.clone(), opts.reads_col.clone()];
    for cov in &table.covariates {
        header.push(cov.name.clone());
    }
    header.extend(table.feature_ids.iter().cloned());
    writeln!(w, "{}", header.join(&d.to_string()))?;

    for i in 0..table.n_samples() {
        let mut fields = vec![
            table.sample_ids[i].clone(),
            table.group[i].to_string(),
            fmt_num(table.total_reads[i]),
        ];
        for cov in &table.covariates {
            fields.push(fmt_num(cov.values[i]));
        }
        for j in 0..table.n_features() {
            fields.push(fmt_num(table.counts[(i, j)]));
        }
        writeln!(w, "{}", fields.join(&d.to_string()))?;
    }
    Ok(())
}

/// Convenience wrapper writing to a file path.
pub fn write_table_to_path(path: impl AsRef<Path>, table: &FeatureTable, format: TableFormat, opts: &IngestOptions) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table(std::io::BufWriter::new(file), table, format, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn demo_tsv() -> &'static str {
        "sample_id\tgroup\ttotal_reads\tfA\tfB\tfC\n\
         s1\t0\t1000\t0\t3.5\t1\n\
         s2\t0\t2000\t1\t0\t2\n\
         s3\t1\t1500\t0\t0\t3\n\
         s4\t1\t900\t4\t1\t0\n\
         s5\t1\t1100\t2\t2\t5\n"
    }

    fn write_and_ingest(content: &str) -> crate::Result<FeatureTable> {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        std::fs::write(&path, content).unwrap();
        ingest_table(&path, TableFormat::Tsv, &IngestOptions::default())
    }

    #[test]
    fn ingests_well_formed_table() {
        let t = write_and_ingest(demo_tsv()).unwrap();
        assert_eq!(t.n_samples(), 5);
        assert_eq!(t.n_features(), 3);
        assert_eq!(t.feature_ids, vec!["fA", "fB", "fC"]);
        assert_eq!(t.group, vec![0, 0, 1, 1, 1]);
        assert_eq!(t.counts[(0, 1)], 3.5);
    }

    #[test]
    fn negative_count_names_the_cell() {
        let bad = demo_tsv().replace("s4\t1\t900\t4", "s4\t1\t900\t-2");
        let err = write_and_ingest(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("-2") && msg.contains("row 4") && msg.contains("fA"), "{msg}");
    }

    #[test]
    fn malformed_numeric_cell_reports_location() {
        let bad = demo_tsv().replace("\t3.5\t", "\tx.y\t");
        let err = write_and_ingest(&bad).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "fB");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn missing_group_column_is_schema_error() {
        let bad = demo_tsv().replace("group", "grp");
        let err = write_and_ingest(&bad).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn non_positive_reads_rejected() {
        let bad = demo_tsv().replace("s2\t0\t2000", "s2\t0\t0");
        let err = write_and_ingest(&bad).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn serialize_then_reingest_roundtrips() {
        // Round-trip oracle: write the ingested table back out, ingest the
        // serialization, and compare field-wise.
        let t = write_and_ingest(demo_tsv()).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.tsv");
        write_table_to_path(&path, &t, TableFormat::Tsv, &IngestOptions::default()).unwrap();
        let t2 = ingest_table(&path, TableFormat::Tsv, &IngestOptions::default()).unwrap();
        assert_eq!(t.sample_ids, t2.sample_ids);
        assert_eq!(t.feature_ids, t2.feature_ids);
        assert_eq!(t.counts, t2.counts);
        assert_eq!(t.total_reads, t2.total_reads);
        assert_eq!(t.group, t2.group);
        assert_eq!(t.covariates, t2.covariates);
    }

    #[test]
    fn csv_format_and_covariates() {
        let content = "sample_id,group,total_reads,age,fA\n\
                       s1,0,100,31.5,2\n\
                       s2,1,200,48,0\n";
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, content).unwrap();
        let opts = IngestOptions {
            covariate_cols: vec!["age".into()],
            ..IngestOptions::default()
        };
        let t = ingest_table(&path, TableFormat::Csv, &opts).unwrap();
        assert_eq!(t.feature_ids, vec!["fA"]);
        assert_eq!(t.covariates.len(), 1);
        assert_eq!(t.covariates[0].kind, CovariateKind::Continuous);
    }

    #[test]
    fn binary_covariate_detected() {
        let c = Covariate::new("sex", vec![0.0, 1.0, 1.0]);
        assert_eq!(c.kind, CovariateKind::Binary);
        let c = Covariate::new("age", vec![0.0, 1.0, 2.0]);
        assert_eq!(c.kind, CovariateKind::Continuous);
    }
}
