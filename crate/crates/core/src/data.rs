//! Role-tagged observational datasets and CSV ingestion.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediatorKind {
    Binary,
    Continuous,
}

impl MediatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediatorKind::Binary => "binary",
            MediatorKind::Continuous => "continuous",
        }
    }
}

impl fmt::Display for MediatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MediatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" | "bin" | "b" => Ok(MediatorKind::Binary),
            "continuous" | "cont" | "c" => Ok(MediatorKind::Continuous),
            other => Err(format!("unknown mediator kind '{other}' (expected binary or continuous)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Outcome,
    Exposure,
    Mediator(MediatorKind),
    Covariate,
}

impl Role {
    fn is_binary(self) -> bool {
        matches!(
            self,
            Role::Outcome | Role::Exposure | Role::Mediator(MediatorKind::Binary)
        )
    }

    fn describe(self) -> &'static str {
        match self {
            Role::Outcome => "outcome",
            Role::Exposure => "exposure",
            Role::Mediator(_) => "mediator",
            Role::Covariate => "covariate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Which CSV columns play which role. Mediator order is significant: the
/// first listed mediator is M₁.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub outcome: String,
    pub exposure: String,
    pub mediators: Vec<(String, MediatorKind)>,
    pub covariates: Vec<String>,
}

impl RoleSpec {
    pub fn new(outcome: &str, exposure: &str) -> Self {
        RoleSpec {
            outcome: outcome.to_string(),
            exposure: exposure.to_string(),
            ..Default::default()
        }
    }

    pub fn mediator(mut self, name: &str, kind: MediatorKind) -> Self {
        self.mediators.push((name.to_string(), kind));
        self
    }

    pub fn covariate(mut self, name: &str) -> Self {
        self.covariates.push(name.to_string());
        self
    }

    fn assignments(&self) -> Vec<(String, Role)> {
        let mut out = vec![
            (self.outcome.clone(), Role::Outcome),
            (self.exposure.clone(), Role::Exposure),
        ];
        out.extend(
            self.mediators
                .iter()
                .map(|(n, k)| (n.clone(), Role::Mediator(*k))),
        );
        out.extend(self.covariates.iter().map(|n| (n.clone(), Role::Covariate)));
        out
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("column '{0}' is assigned more than one role")]
    DuplicateRole(String),

    #[error("non-numeric value '{value}' in column '{column}' at data row {row}")]
    Malformed {
        column: String,
        row: usize,
        value: String,
    },

    #[error("non-binary {role} '{column}': value {value} at data row {row}")]
    NonBinary {
        role: &'static str,
        column: String,
        value: f64,
        row: usize,
    },

    #[error("no usable rows ({dropped} dropped for missing values)")]
    NoUsableRows { dropped: usize },

    #[error("invalid dataset: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A dataset invariant that does not hold.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoRows,
    OutcomeCount(usize),
    ExposureCount(usize),
    NoMediators,
    UnknownColumn(String),
    DuplicateRole(String),
    LengthMismatch { column: String, len: usize },
    NonFinite { column: String },
    NonBinary { column: String, role: &'static str },
    NoExposureVariation,
    NoOutcomeVariation,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoRows => write!(f, "dataset has no rows"),
            Violation::OutcomeCount(n) => write!(f, "exactly one outcome required, found {n}"),
            Violation::ExposureCount(n) => write!(f, "exactly one exposure required, found {n}"),
            Violation::NoMediators => write!(f, "at least one mediator required"),
            Violation::UnknownColumn(c) => write!(f, "role refers to unknown column '{c}'"),
            Violation::DuplicateRole(c) => write!(f, "column '{c}' has more than one role"),
            Violation::LengthMismatch { column, len } => {
                write!(f, "column '{column}' has {len} values, expected n_rows")
            }
            Violation::NonFinite { column } => write!(f, "column '{column}' has missing or non-finite values"),
            Violation::NonBinary { column, role } => write!(f, "non-binary {role} '{column}'"),
            Violation::NoExposureVariation => write!(f, "exposure has no variation"),
            Violation::NoOutcomeVariation => write!(f, "outcome has no variation"),
        }
    }
}

/// Columnar observations with role-tagged variables. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    columns: Vec<Column>,
    roles: Vec<(String, Role)>,
    dropped_rows: usize,
}

/// Resolved, role-ordered borrow of a valid dataset.
#[derive(Clone, Debug)]
pub struct RoleView<'a> {
    pub outcome: &'a [f64],
    pub exposure: &'a [f64],
    pub mediators: Vec<MediatorColumn<'a>>,
    pub covariates: Vec<&'a [f64]>,
}

#[derive(Clone, Debug)]
pub struct MediatorColumn<'a> {
    pub name: &'a str,
    pub kind: MediatorKind,
    pub values: &'a [f64],
}

impl<'a> RoleView<'a> {
    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    /// Covariate values of one row, in declaration order.
    pub fn covariate_row(&self, i: usize) -> Vec<f64> {
        self.covariates.iter().map(|c| c[i]).collect()
    }

    pub fn covariate_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.covariate_row(i)).collect()
    }
}

impl Dataset {
    /// Assembles a dataset without checking invariants; see [`validate`] and
    /// [`Dataset::try_new`].
    pub fn new(columns: Vec<Column>, roles: Vec<(String, Role)>) -> Self {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        Dataset {
            n_rows,
            columns,
            roles,
            dropped_rows: 0,
        }
    }

    pub fn try_new(columns: Vec<Column>, roles: Vec<(String, Role)>) -> Result<Self, DataError> {
        let ds = Dataset::new(columns, roles);
        let violations = validate(&ds);
        if violations.is_empty() {
            Ok(ds)
        } else {
            Err(DataError::Invalid(violations))
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Rows removed during ingestion because of missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn roles(&self) -> &[(String, Role)] {
        &self.roles
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn role_of(&self, name: &str) -> Option<Role> {
        self.roles.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }

    pub fn mediator_names(&self) -> Vec<&str> {
        self.roles
            .iter()
            .filter(|(_, r)| matches!(r, Role::Mediator(_)))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn n_mediators(&self) -> usize {
        self.mediator_names().len()
    }

    /// Resolves roles to column slices, failing if any invariant is violated.
    pub fn view(&self) -> Result<RoleView<'_>, DataError> {
        let violations = validate(self);
        if !violations.is_empty() {
            return Err(DataError::Invalid(violations));
        }
        let col = |name: &str| self.column(name).expect("validated");
        let mut view = RoleView {
            outcome: &[],
            exposure: &[],
            mediators: Vec::new(),
            covariates: Vec::new(),
        };
        for (name, role) in &self.roles {
            match role {
                Role::Outcome => view.outcome = col(name),
                Role::Exposure => view.exposure = col(name),
                Role::Mediator(kind) => view.mediators.push(MediatorColumn {
                    name,
                    kind: *kind,
                    values: col(name),
                }),
                Role::Covariate => view.covariates.push(col(name)),
            }
        }
        Ok(view)
    }

    /// New dataset made of the given rows (repeats allowed), in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: rows.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        Dataset {
            n_rows: rows.len(),
            columns,
            roles: self.roles.clone(),
            dropped_rows: 0,
        }
    }

    /// Same rows sorted lexicographically by content (column order as
    /// stored). Two row permutations of one dataset share a canonical order.
    pub fn canonical_order(&self) -> Dataset {
        let mut idx: Vec<usize> = (0..self.n_rows).collect();
        idx.sort_by(|&a, &b| {
            self.columns
                .iter()
                .map(|c| c.values[a].total_cmp(&c.values[b]))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        let mut out = self.select_rows(&idx);
        out.dropped_rows = self.dropped_rows;
        out
    }

    /// Writes the dataset as CSV with a header row. Values use the shortest
    /// representation that parses back to the identical f64.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for i in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| c.values[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.trim(),
        "" | "NA" | "na" | "N/A" | "NaN" | "nan" | "."
    )
}

/// Reads a CSV file and assigns roles. Rows with a missing value in any
/// role-tagged column are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, roles: &RoleSpec) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), roles)
}

pub fn read_csv<R: Read>(reader: R, spec: &RoleSpec) -> Result<Dataset, DataError> {
    let assignments = spec.assignments();
    for (i, (name, _)) in assignments.iter().enumerate() {
        if assignments[..i].iter().any(|(n, _)| n == name) {
            return Err(DataError::DuplicateRole(name.clone()));
        }
    }

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let positions = assignments
        .iter()
        .map(|(name, _)| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DataError::MissingColumn(name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); assignments.len()];
    let mut dropped = 0usize;
    let mut row_buf = vec![0.0; assignments.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut missing = false;
        for (j, &pos) in positions.iter().enumerate() {
            let field = record.get(pos).unwrap_or("");
            if is_missing(field) {
                missing = true;
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| DataError::Malformed {
                column: assignments[j].0.clone(),
                row: row + 1,
                value: field.to_string(),
            })?;
            let role = assignments[j].1;
            if role.is_binary() && v != 0.0 && v != 1.0 {
                return Err(DataError::NonBinary {
                    role: role.describe(),
                    column: assignments[j].0.clone(),
                    value: v,
                    row: row + 1,
                });
            }
            row_buf[j] = v;
        }
        if missing {
            dropped += 1;
        } else {
            for (col, v) in values.iter_mut().zip(&row_buf) {
                col.push(*v);
            }
        }
    }
    if values[0].is_empty() {
        return Err(DataError::NoUsableRows { dropped });
    }

    let columns = assignments
        .iter()
        .zip(values)
        .map(|((name, _), values)| Column {
            name: name.clone(),
            values,
        })
        .collect();
    let mut ds = Dataset::try_new(columns, assignments)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// Lists every violated dataset invariant; empty when the dataset is usable.
pub fn validate(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if ds.n_rows == 0 {
        out.push(Violation::NoRows);
    }
    let count = |pred: fn(&Role) -> bool| ds.roles.iter().filter(|(_, r)| pred(r)).count();
    let n_out = count(|r| *r == Role::Outcome);
    let n_exp = count(|r| *r == Role::Exposure);
    if n_out != 1 {
        out.push(Violation::OutcomeCount(n_out));
    }
    if n_exp != 1 {
        out.push(Violation::ExposureCount(n_exp));
    }
    if count(|r| matches!(r, Role::Mediator(_))) == 0 {
        out.push(Violation::NoMediators);
    }
    for c in &ds.columns {
        if c.values.len() != ds.n_rows {
            out.push(Violation::LengthMismatch {
                column: c.name.clone(),
                len: c.values.len(),
            });
        }
    }
    for (i, (name, role)) in ds.roles.iter().enumerate() {
        if ds.roles[..i].iter().any(|(n, _)| n == name) {
            out.push(Violation::DuplicateRole(name.clone()));
            continue;
        }
        let Some(values) = ds.column(name) else {
            out.push(Violation::UnknownColumn(name.clone()));
            continue;
        };
        if values.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFinite {
                column: name.clone(),
            });
        } else if role.is_binary() && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            out.push(Violation::NonBinary {
                column: name.clone(),
                role: role.describe(),
            });
        }
    }
    let no_variation = |role: Role| {
        ds.roles
            .iter()
            .find(|(_, r)| *r == role)
            .and_then(|(n, _)| ds.column(n))
            .filter(|v| !v.is_empty() && v.len() == ds.n_rows)
            .is_some_and(|v| v.iter().all(|x| *x == v[0]))
    };
    if n_exp == 1 && no_variation(Role::Exposure) {
        out.push(Violation::NoExposureVariation);
    }
    if n_out == 1 && no_variation(Role::Outcome) {
        out.push(Violation::NoOutcomeVariation);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> RoleSpec {
        RoleSpec::new("Y", "X")
            .mediator("M1", MediatorKind::Binary)
            .covariate("C")
    }

    #[test]
    fn loads_small_file() {
        let csv = "Y,X,M1,C\n0,0,1,0\n1,1,0,1\n1,0,1,1\n0,1,1,0\n";
        let ds = read_csv(csv.as_bytes(), &spec()).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.dropped_rows(), 0);
        assert_eq!(ds.column("M1").unwrap(), &[1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_non_binary_mediator() {
        let csv = "Y,X,M1,C\n0,0,2,0\n1,1,0,1\n";
        let err = read_csv(csv.as_bytes(), &spec()).unwrap_err();
        assert!(err.to_string().contains("non-binary mediator"), "{err}");
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let mut csv = String::from("Y,X,M1,C\n");
        for i in 0..100 {
            let c = if i == 37 { String::new() } else { (i % 2).to_string() };
            csv.push_str(&format!("{},{},{},{}\n", i % 2, (i / 2) % 2, (i / 3) % 2, c));
        }
        let ds = read_csv(csv.as_bytes(), &spec()).unwrap();
        assert_eq!(ds.n_rows(), 99);
        assert_eq!(ds.dropped_rows(), 1);
    }

    #[test]
    fn rejects_duplicate_roles_and_missing_columns() {
        let csv = "Y,X,M1,C\n0,0,1,0\n1,1,0,1\n";
        let dup = RoleSpec::new("Y", "X").mediator("X", MediatorKind::Binary);
        assert!(matches!(
            read_csv(csv.as_bytes(), &dup),
            Err(DataError::DuplicateRole(_))
        ));
        let missing = RoleSpec::new("Y", "X").mediator("M9", MediatorKind::Binary);
        assert!(matches!(
            read_csv(csv.as_bytes(), &missing),
            Err(DataError::MissingColumn(_))
        ));
    }

    #[test]
    fn zero_usable_rows_is_an_error() {
        let csv = "Y,X,M1,C\n0,,1,0\nNA,1,0,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &spec()),
            Err(DataError::NoUsableRows { dropped: 2 })
        ));
    }

    #[test]
    fn malformed_value_is_reported() {
        let csv = "Y,X,M1,C\n0,1,abc,0\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &spec()),
            Err(DataError::Malformed { .. })
        ));
    }

    fn columns(x: Vec<f64>) -> Vec<Column> {
        vec![
            Column { name: "Y".into(), values: vec![0.0, 1.0, 1.0] },
            Column { name: "X".into(), values: x },
            Column { name: "M".into(), values: vec![0.3, 1.2, -0.4] },
        ]
    }

    #[test]
    fn validate_reports_violations() {
        let roles = vec![
            ("Y".to_string(), Role::Outcome),
            ("X".to_string(), Role::Exposure),
            ("M".to_string(), Role::Mediator(MediatorKind::Continuous)),
        ];
        let ok = Dataset::new(columns(vec![0.0, 1.0, 0.0]), roles.clone());
        assert!(validate(&ok).is_empty());

        let flat = Dataset::new(columns(vec![1.0, 1.0, 1.0]), roles.clone());
        let v = validate(&flat);
        assert_eq!(v, vec![Violation::NoExposureVariation]);
        assert_eq!(v[0].to_string(), "exposure has no variation");
        assert_eq!(validate(&flat), v);

        let no_med = Dataset::new(columns(vec![0.0, 1.0, 0.0]), roles[..2].to_vec());
        let v = validate(&no_med);
        assert!(v.contains(&Violation::NoMediators));
        assert!(v.iter().any(|x| x.to_string() == "at least one mediator required"));
    }

    #[test]
    fn canonical_order_is_permutation_invariant() {
        let csv = "Y,X,M1,C\n0,0,1,0\n1,1,0,1\n1,0,1,1\n0,1,1,0\n";
        let ds = read_csv(csv.as_bytes(), &spec()).unwrap();
        let shuffled = ds.select_rows(&[2, 0, 3, 1]);
        assert_eq!(ds.canonical_order(), shuffled.canonical_order());
    }
}
