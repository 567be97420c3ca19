use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Diagnostic value, no acceptance decision attached.
    Info,
    Pass,
    Inconclusive,
    Fail,
}

/// One numerical check: an observed value against a bound or target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The statement being checked.
    pub provenance: String,
    pub observed: f64,
    pub target: f64,
    pub standard_error: Option<f64>,
    pub status: Status,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, provenance: impl Into<String>, observed: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            provenance: provenance.into(),
            observed,
            target,
            standard_error: None,
            status: Status::Info,
            seeds: Vec::new(),
            note: None,
        }
    }

    pub fn se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    pub fn seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    /// Pass iff `observed - slack_se * se <= target`.
    pub fn at_most(self, slack_se: f64) -> Self {
        let slack = slack_se * self.standard_error.unwrap_or(0.0);
        let ok = self.observed - slack <= self.target;
        self.status(if ok { Status::Pass } else { Status::Fail })
    }

    /// Pass iff `|observed - target| <= slack_se * se`.
    pub fn within(self, slack_se: f64) -> Self {
        let slack = slack_se * self.standard_error.unwrap_or(0.0);
        let ok = (self.observed - self.target).abs() <= slack;
        self.status(if ok { Status::Pass } else { Status::Fail })
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// A small named table, e.g. a quantity against volume radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Per-realization window counts, for CSV export.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountTable {
    pub windows: Vec<[f64; 2]>,
    /// `(realization seed, counts per window)`.
    pub rows: Vec<(u64, Vec<usize>)>,
}

/// Bulky outputs kept out of the JSON report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifacts {
    pub counts: Option<CountTable>,
    /// `(bin center, density)`.
    pub dos_histogram: Option<Vec<(f64, f64)>>,
    /// `(gap, rescaled position of the left atom)`.
    pub gaps: Option<Vec<(f64, f64)>>,
}

/// Results of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub experiment: String,
    pub realizations: usize,
    pub records: Vec<CheckRecord>,
    pub series: Vec<Series>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl EnsembleReport {
    pub fn new(experiment: impl Into<String>, realizations: usize) -> Self {
        Self {
            experiment: experiment.into(),
            realizations,
            records: Vec::new(),
            series: Vec::new(),
            artifacts: Artifacts::default(),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Worst status over all decision records; `Pass` when there are none.
    pub fn status(&self) -> Status {
        self.records
            .iter()
            .map(|r| r.status)
            .filter(|s| *s != Status::Info)
            .max()
            .unwrap_or(Status::Pass)
    }
}
