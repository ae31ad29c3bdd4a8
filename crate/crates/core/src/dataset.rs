//! CSV ingestion, the sequential train/test split and case-base persistence.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::case::{
    validate_case, Case, Target, ValidationMode, ValidationWarning, ATTRIBUTE_NAMES,
    NUM_ATTRIBUTES, TARGET_NAME,
};
use crate::error::{Error, Result};

/// Stable identifier of a stored case. Assigned in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(pub u64);

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A solved case together with its identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCase {
    pub id: CaseId,
    pub case: Case,
}

impl StoredCase {
    /// Stored cases always carry a target.
    pub fn target(&self) -> Target {
        self.case.target.expect("stored case without target")
    }
}

/// The CBR memory: solved cases in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseBase {
    entries: Vec<StoredCase>,
    next_id: u64,
}

impl CaseBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a base from solved cases, numbering them from 0.
    pub fn from_cases(cases: impl IntoIterator<Item = Case>) -> Result<Self> {
        let mut cb = CaseBase::new();
        for case in cases {
            cb.push(case)?;
        }
        Ok(cb)
    }

    /// Rebuilds a base from explicit identifiers, which must be strictly
    /// increasing.
    pub fn from_entries(entries: Vec<StoredCase>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.case.target.is_none() {
                return Err(Error::MissingTarget(i));
            }
            if i > 0 && e.id <= entries[i - 1].id {
                return Err(Error::MalformedCaseBase(format!(
                    "case_id {} does not follow {} (ids must be unique and increasing)",
                    e.id,
                    entries[i - 1].id
                )));
            }
        }
        let next_id = entries.last().map_or(0, |e| e.id.0 + 1);
        Ok(CaseBase { entries, next_id })
    }

    /// Appends a solved case under a fresh id.
    pub fn push(&mut self, case: Case) -> Result<CaseId> {
        if case.target.is_none() {
            return Err(Error::MissingTarget(self.entries.len()));
        }
        let id = CaseId(self.next_id);
        self.next_id += 1;
        self.entries.push(StoredCase { id, case });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoredCase] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredCase> {
        self.entries.iter()
    }

    pub fn cases(&self) -> impl Iterator<Item = &Case> {
        self.entries.iter().map(|e| &e.case)
    }

    pub fn get(&self, id: CaseId) -> Option<&StoredCase> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Result of [`parse_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub cases: Vec<Case>,
    /// Lenient-mode findings with their 1-based row number.
    pub warnings: Vec<(usize, ValidationWarning)>,
}

fn canonical_column(name: &str) -> Option<&'static str> {
    let lower = name.trim().to_ascii_lowercase();
    let canonical = match lower.as_str() {
        "gender" => "sex",
        "resttbps" => "trestbps",
        "num" => TARGET_NAME,
        other => other,
    };
    ATTRIBUTE_NAMES
        .iter()
        .copied()
        .chain(std::iter::once(TARGET_NAME))
        .find(|&c| c == canonical)
}

/// Maps header positions to canonical names; `target` may be absent.
fn resolve_header(headers: &csv::StringRecord) -> Result<Vec<&'static str>> {
    let mut columns = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let name = canonical_column(h).ok_or_else(|| Error::UnknownColumn(h.to_string()))?;
        if columns.contains(&name) {
            return Err(Error::DuplicateColumn(name.to_string()));
        }
        columns.push(name);
    }
    for name in ATTRIBUTE_NAMES {
        if !columns.contains(&name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    Ok(columns)
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source)
}

/// Reads the heart-disease CSV: a header row followed by one record per line.
///
/// Header names match case-insensitively; `gender` is accepted for `sex`,
/// `resttbps` for `trestbps` and `num` for `target`.
pub fn parse_csv<R: Read>(source: R, mode: ValidationMode) -> Result<ParsedDataset> {
    let mut rdr = reader(source);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::Empty("no header row"));
    }
    let columns = resolve_header(&headers)?;

    let mut cases = Vec::new();
    let mut warnings = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw: HashMap<String, String> = columns
            .iter()
            .zip(record.iter())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let validated =
            validate_case(&raw, mode).map_err(|source| Error::Row { row, source })?;
        warnings.extend(validated.warnings.into_iter().map(|w| (row, w)));
        cases.push(validated.case);
    }
    Ok(ParsedDataset { cases, warnings })
}

fn canonical_header(with_target: bool) -> Vec<&'static str> {
    let mut h: Vec<&'static str> = ATTRIBUTE_NAMES.to_vec();
    if with_target {
        h.push(TARGET_NAME);
    }
    h
}

/// Writes cases in the input format. The target column is present when every
/// case has a target.
pub fn write_cases<W: Write>(cases: &[Case], sink: W) -> Result<()> {
    let with_target = cases.iter().all(|c| c.target.is_some());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(canonical_header(with_target))?;
    for c in cases {
        let fields = c.to_fields();
        w.write_record(fields.iter().take(NUM_ATTRIBUTES + usize::from(with_target)).map(|(_, v)| v))?;
    }
    w.flush()?;
    Ok(())
}

/// A sequential train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: CaseBase,
    /// Held-out cases in file order. Targets stay attached for scoring.
    pub test: Vec<Case>,
}

/// Number of training cases for `n` rows: `floor(n * fraction)`.
pub fn train_count(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).floor() as usize
}

/// Splits without shuffling: the first `floor(n * fraction)` cases train, the
/// rest (the most recent records) test.
pub fn split_sequential(cases: &[Case], train_fraction: f64) -> Result<SplitResult> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    if cases.is_empty() {
        return Err(Error::Empty("no cases to split"));
    }
    let n = cases.len();
    let k = train_count(n, train_fraction);
    if k == 0 || k >= n {
        return Err(Error::DegenerateSplit {
            n,
            fraction: train_fraction,
            train: k,
            test: n - k.min(n),
        });
    }
    let train = CaseBase::from_cases(cases[..k].iter().cloned())?;
    Ok(SplitResult {
        train,
        test: cases[k..].to_vec(),
    })
}

const CASE_ID: &str = "case_id";

/// Persists a case base as CSV: `case_id` followed by the canonical columns.
pub fn write_case_base<W: Write>(cb: &CaseBase, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![CASE_ID];
    header.extend(canonical_header(true));
    w.write_record(&header)?;
    for e in cb.iter() {
        let mut rec = vec![e.id.to_string()];
        rec.extend(e.case.to_fields().into_iter().map(|(_, v)| v));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_case_base`]. Domain checks are lenient so
/// that anything the pipeline stored can be reloaded.
pub fn read_case_base<R: Read>(source: R) -> Result<CaseBase> {
    let mut rdr = reader(source);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once(CASE_ID).chain(canonical_header(true)).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedCaseBase(format!(
            "expected header {:?}, found {:?}",
            expected,
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut entries = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let id: u64 = record[0].parse().map_err(|_| {
            Error::MalformedCaseBase(format!("row {row}: bad case_id `{}`", &record[0]))
        })?;
        let raw: HashMap<String, String> = expected[1..]
            .iter()
            .zip(record.iter().skip(1))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let case = validate_case(&raw, ValidationMode::Lenient)
            .map_err(|source| Error::Row { row, source })?
            .case;
        if case.target.is_none() {
            return Err(Error::MissingTarget(i));
        }
        entries.push(StoredCase { id: CaseId(id), case });
    }
    CaseBase::from_entries(entries)
}
