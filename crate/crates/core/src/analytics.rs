//! Accuracy, descriptive tables and the attribute correlation matrix.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::case::{Case, Target, ATTRIBUTE_NAMES, NUM_ATTRIBUTES, TARGET_NAME};
use crate::dataset::CaseId;
use crate::error::{Error, Result};

/// Fraction of positions where `predictions` and `truths` agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions to score"));
    }
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Binary confusion counts with "disease present" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(predictions: &[Target], truths: &[Target]) -> Result<Self> {
        if predictions.len() != truths.len() {
            return Err(Error::LengthMismatch {
                left: predictions.len(),
                right: truths.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predictions.iter().zip(truths) {
            match (p, t) {
                (Target::Present, Target::Present) => c.tp += 1,
                (Target::Absent, Target::Absent) => c.tn += 1,
                (Target::Present, Target::Absent) => c.fp += 1,
                (Target::Absent, Target::Present) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Outcome for one test case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    /// Position in the test set.
    pub index: usize,
    pub true_target: Target,
    pub predicted_target: Target,
    pub best_similarity: f64,
    pub best_case_id: CaseId,
}

/// Result of running the whole test split through the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub train_size: usize,
    pub test_size: usize,
    pub weights: Vec<f64>,
    pub incremental_retain: bool,
    /// Accuracy over the test split only.
    pub test_accuracy: f64,
    /// Accuracy of training cases retrieved against the frozen base.
    pub train_self_accuracy: f64,
    /// Accuracy over train and test together.
    pub merged_accuracy: f64,
    pub merged_correct: usize,
    pub merged_total: usize,
    pub confusion: Confusion,
    pub records: Vec<CaseRecord>,
    /// Descriptive tables over train and test with predicted labels.
    pub stats: StatsTables,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-case CSV: index, true/predicted target, best similarity and id.
    pub fn write_records_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_records_csv<R: Read>(source: R) -> Result<Vec<CaseRecord>> {
        let mut rdr = csv::Reader::from_reader(source);
        rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenderCounts {
    pub male: usize,
    pub female: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiseaseCounts {
    pub positive: usize,
    pub negative: usize,
}

/// Positive cases split by sex, with each share of all positives in percent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PositivesByGender {
    pub male: usize,
    pub female: usize,
    pub male_pct: f64,
    pub female_pct: f64,
}

impl PositivesByGender {
    fn from_counts(male: usize, female: usize) -> Self {
        let total = male + female;
        let pct = |k: usize| {
            if total == 0 {
                0.0
            } else {
                100.0 * k as f64 / total as f64
            }
        };
        Self {
            male,
            female,
            male_pct: pct(male),
            female_pct: pct(female),
        }
    }
}

pub const CHEST_PAIN_LABELS: [&str; 4] = [
    "typical angina",
    "atypical angina",
    "non-anginal pain",
    "asymptomatic",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChestPainRow {
    pub cp: i32,
    pub label: String,
    pub positives: usize,
    pub total: usize,
}

/// Descriptive tables over a labelled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTables {
    pub gender_counts: GenderCounts,
    pub disease_counts: DiseaseCounts,
    pub positives_by_gender: PositivesByGender,
    /// Age to number of positive cases (ages with none are listed as 0).
    pub disease_by_age: BTreeMap<i32, usize>,
    /// Age to highest `thalach` observed.
    pub max_heart_rate_by_age: BTreeMap<i32, i32>,
    pub chest_pain_table: Vec<ChestPainRow>,
}

impl StatsTables {
    /// Age with the most positives; the youngest such age on ties.
    pub fn peak_disease_age(&self) -> Option<(i32, usize)> {
        self.disease_by_age
            .iter()
            .fold(None, |best: Option<(i32, usize)>, (&age, &n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((age, n)),
            })
    }

    /// Age with the highest recorded maximum heart rate.
    pub fn peak_heart_rate_age(&self) -> Option<(i32, i32)> {
        self.max_heart_rate_by_age
            .iter()
            .fold(None, |best: Option<(i32, i32)>, (&age, &hr)| match best {
                Some((_, m)) if m >= hr => best,
                _ => Some((age, hr)),
            })
    }

    /// Long-format CSV: `table,key,value`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["table", "key", "value"])?;
        let mut row = |t: &str, k: &str, v: String| w.write_record([t, k, v.as_str()]);
        row("gender", "male", self.gender_counts.male.to_string())?;
        row("gender", "female", self.gender_counts.female.to_string())?;
        row("disease", "positive", self.disease_counts.positive.to_string())?;
        row("disease", "negative", self.disease_counts.negative.to_string())?;
        let pbg = &self.positives_by_gender;
        row("positives_by_gender", "male", pbg.male.to_string())?;
        row("positives_by_gender", "female", pbg.female.to_string())?;
        row("positives_by_gender_pct", "male", format!("{:?}", pbg.male_pct))?;
        row("positives_by_gender_pct", "female", format!("{:?}", pbg.female_pct))?;
        for (age, n) in &self.disease_by_age {
            row("disease_by_age", &age.to_string(), n.to_string())?;
        }
        for (age, hr) in &self.max_heart_rate_by_age {
            row("max_heart_rate_by_age", &age.to_string(), hr.to_string())?;
        }
        for r in &self.chest_pain_table {
            row("chest_pain_positives", &r.cp.to_string(), r.positives.to_string())?;
            row("chest_pain_total", &r.cp.to_string(), r.total.to_string())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(source);
        let bad = |msg: String| Error::Malformed(format!("stats csv: {msg}"));
        let mut gender = GenderCounts::default();
        let mut disease = DiseaseCounts::default();
        let (mut pos_m, mut pos_f) = (0usize, 0usize);
        let mut by_age = BTreeMap::new();
        let mut hr_by_age = BTreeMap::new();
        let mut cp_pos = [0usize; 4];
        let mut cp_total = [0usize; 4];
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", rec.len())));
            }
            let (table, key, value) = (&rec[0], &rec[1], &rec[2]);
            let count = || value.parse::<usize>().map_err(|_| bad(format!("bad count `{value}`")));
            let int_key = || key.parse::<i32>().map_err(|_| bad(format!("bad key `{key}`")));
            match (table, key) {
                ("gender", "male") => gender.male = count()?,
                ("gender", "female") => gender.female = count()?,
                ("disease", "positive") => disease.positive = count()?,
                ("disease", "negative") => disease.negative = count()?,
                ("positives_by_gender", "male") => pos_m = count()?,
                ("positives_by_gender", "female") => pos_f = count()?,
                ("positives_by_gender_pct", _) => {}
                ("disease_by_age", _) => {
                    by_age.insert(int_key()?, count()?);
                }
                ("max_heart_rate_by_age", _) => {
                    let hr = value.parse::<i32>().map_err(|_| bad(format!("bad rate `{value}`")))?;
                    hr_by_age.insert(int_key()?, hr);
                }
                ("chest_pain_positives" | "chest_pain_total", _) => {
                    let cp = int_key()?;
                    let slot = usize::try_from(cp)
                        .ok()
                        .filter(|&i| i < 4)
                        .ok_or_else(|| bad(format!("bad chest pain code {cp}")))?;
                    if table == "chest_pain_positives" {
                        cp_pos[slot] = count()?;
                    } else {
                        cp_total[slot] = count()?;
                    }
                }
                _ => return Err(bad(format!("unknown row {table}/{key}"))),
            }
        }
        Ok(StatsTables {
            gender_counts: gender,
            disease_counts: disease,
            positives_by_gender: PositivesByGender::from_counts(pos_m, pos_f),
            disease_by_age: by_age,
            max_heart_rate_by_age: hr_by_age,
            chest_pain_table: chest_pain_rows(&cp_pos, &cp_total),
        })
    }
}

fn chest_pain_rows(positives: &[usize; 4], totals: &[usize; 4]) -> Vec<ChestPainRow> {
    (0..4)
        .map(|i| ChestPainRow {
            cp: i as i32,
            label: CHEST_PAIN_LABELS[i].to_string(),
            positives: positives[i],
            total: totals[i],
        })
        .collect()
}

/// Descriptive tables for `cases` labelled by `labels`, which may be ground
/// truth or predictions. Percentages are among label-positive cases.
pub fn dataset_stats(cases: &[Case], labels: &[Target]) -> Result<StatsTables> {
    if cases.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: cases.len(),
            right: labels.len(),
        });
    }
    let mut gender = GenderCounts::default();
    let mut disease = DiseaseCounts::default();
    let (mut pos_m, mut pos_f) = (0, 0);
    let mut by_age = BTreeMap::new();
    let mut hr_by_age: BTreeMap<i32, i32> = BTreeMap::new();
    let mut cp_pos = [0usize; 4];
    let mut cp_total = [0usize; 4];

    for (c, &label) in cases.iter().zip(labels) {
        let positive = label.is_present();
        if c.is_male() {
            gender.male += 1;
        } else {
            gender.female += 1;
        }
        if positive {
            disease.positive += 1;
            if c.is_male() {
                pos_m += 1;
            } else {
                pos_f += 1;
            }
        } else {
            disease.negative += 1;
        }
        *by_age.entry(c.age).or_insert(0) += usize::from(positive);
        hr_by_age
            .entry(c.age)
            .and_modify(|hr| *hr = (*hr).max(c.thalach))
            .or_insert(c.thalach);
        if let Some(slot) = usize::try_from(c.cp).ok().filter(|&i| i < 4) {
            cp_total[slot] += 1;
            cp_pos[slot] += usize::from(positive);
        }
    }

    Ok(StatsTables {
        gender_counts: gender,
        disease_counts: disease,
        positives_by_gender: PositivesByGender::from_counts(pos_m, pos_f),
        disease_by_age: by_age,
        max_heart_rate_by_age: hr_by_age,
        chest_pain_table: chest_pain_rows(&cp_pos, &cp_total),
    })
}

/// Ground-truth labels of cases that all carry a target.
pub fn true_labels(cases: &[Case]) -> Result<Vec<Target>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| c.target.ok_or(Error::MissingTarget(i)))
        .collect()
}

/// Square matrix of product-moment coefficients. `None` marks an entry
/// involving a zero-variance column.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub const UNDEFINED: &str = "undefined";

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| match v {
                Some(x) => format!("{x:?}"),
                None => UNDEFINED.to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(source);
        let names: Vec<String> = rdr.headers()?.iter().skip(1).map(String::from).collect();
        let mut values = Vec::with_capacity(names.len());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() + 1 || rec.get(0) != names.get(i).map(String::as_str) {
                return Err(Error::Malformed(format!("correlation row {i} is malformed")));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    if s == UNDEFINED {
                        Ok(None)
                    } else {
                        s.parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::Malformed(format!("bad coefficient `{s}`")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        if values.len() != names.len() {
            return Err(Error::Malformed(format!(
                "correlation matrix has {} rows for {} columns",
                values.len(),
                names.len()
            )));
        }
        Ok(Self { names, values })
    }
}

/// Product-moment correlation between every pair of equally long columns.
pub fn pearson_matrix(names: &[&str], columns: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if names.len() != columns.len() {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: columns.len(),
        });
    }
    let n = columns.first().map_or(0, Vec::len);
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: c.len(),
        });
    }
    if n < 2 {
        return Err(Error::Empty("correlation needs at least two rows"));
    }

    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|x| x - mean).collect()
        })
        .collect();
    let sum_sq: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .collect();

    let k = columns.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        if sum_sq[i] == 0.0 {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in (i + 1)..k {
            if sum_sq[j] == 0.0 {
                continue;
            }
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (sum_sq[i] * sum_sq[j]).sqrt()).clamp(-1.0, 1.0);
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix {
        names: names.iter().map(|s| s.to_string()).collect(),
        values,
    })
}

/// 14x14 correlation over the 13 attributes and the target.
pub fn pearson_correlation(cases: &[Case]) -> Result<CorrelationMatrix> {
    let targets = true_labels(cases)?;
    let mut columns: Vec<Vec<f64>> = (0..=NUM_ATTRIBUTES).map(|_| Vec::with_capacity(cases.len())).collect();
    for (c, t) in cases.iter().zip(&targets) {
        for (i, x) in c.to_feature_vector().0.iter().enumerate() {
            columns[i].push(*x);
        }
        columns[NUM_ATTRIBUTES].push(f64::from(t.as_u8()));
    }
    let names: Vec<&str> = ATTRIBUTE_NAMES
        .iter()
        .copied()
        .chain(std::iter::once(TARGET_NAME))
        .collect();
    pearson_matrix(&names, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::FeatureVector;

    fn patient(age: i32, sex: i32, cp: i32, thalach: i32, target: u8) -> Case {
        let mut v = [54.0, 1.0, 0.0, 130.0, 250.0, 0.0, 1.0, 150.0, 0.0, 1.0, 1.0, 0.0, 2.0];
        v[0] = age as f64;
        v[1] = sex as f64;
        v[2] = cp as f64;
        v[7] = thalach as f64;
        Case::from_features(&FeatureVector(v), Some(Target::try_from(target).unwrap())).unwrap()
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[0, 0]).unwrap(), 0.0);
        let truths = vec![1u8; 1025];
        let mut preds = truths.clone();
        preds.iter_mut().take(21).for_each(|p| *p = 0);
        let a = accuracy(&preds, &truths).unwrap();
        assert!((a - 0.979512).abs() < 5e-7);
        assert!(matches!(accuracy(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(accuracy::<u8>(&[], &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn merged_headline_ratio_is_unique() {
        // only one k/1025 rounds to 97.95 %
        let hits: Vec<usize> = (0..=1025)
            .filter(|&k| ((k as f64 / 1025.0) * 10000.0).round() == 9795.0)
            .collect();
        assert_eq!(hits, vec![1004]);
        // no k/410 does
        assert!((0..=410).all(|k| ((k as f64 / 410.0) * 10000.0).round() != 9795.0));
    }

    #[test]
    fn confusion_counts() {
        use Target::*;
        let c = Confusion::from_labels(
            &[Present, Present, Absent, Absent, Present],
            &[Present, Absent, Absent, Present, Present],
        )
        .unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (2, 1, 1, 1));
        assert_eq!(c.total(), 5);
        assert!((c.accuracy() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn stats_tables() {
        let cases = vec![
            patient(54, 1, 0, 150, 1),
            patient(54, 0, 2, 160, 1),
            patient(29, 1, 1, 202, 0),
            patient(60, 1, 3, 120, 1),
            patient(54, 1, 0, 140, 0),
        ];
        let labels = true_labels(&cases).unwrap();
        let s = dataset_stats(&cases, &labels).unwrap();
        assert_eq!(s.gender_counts, GenderCounts { male: 4, female: 1 });
        assert_eq!(s.disease_counts, DiseaseCounts { positive: 3, negative: 2 });
        assert_eq!((s.positives_by_gender.male, s.positives_by_gender.female), (2, 1));
        assert!((s.positives_by_gender.male_pct - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.peak_disease_age(), Some((54, 2)));
        assert_eq!(s.disease_by_age[&29], 0);
        assert_eq!(s.peak_heart_rate_age(), Some((29, 202)));
        assert_eq!(s.max_heart_rate_by_age[&54], 160);
        let totals: Vec<usize> = s.chest_pain_table.iter().map(|r| r.total).collect();
        let positives: Vec<usize> = s.chest_pain_table.iter().map(|r| r.positives).collect();
        assert_eq!(totals, vec![2, 1, 1, 1]);
        assert_eq!(positives, vec![1, 0, 1, 1]);

        // predicted labels give a different view
        let flipped: Vec<Target> = labels
            .iter()
            .map(|t| if t.is_present() { Target::Absent } else { Target::Present })
            .collect();
        let f = dataset_stats(&cases, &flipped).unwrap();
        assert_eq!(f.disease_counts.positive, 2);
        assert!(dataset_stats(&cases, &labels[..2]).is_err());
    }

    #[test]
    fn stats_csv_round_trip() {
        let cases = vec![patient(54, 1, 0, 150, 1), patient(41, 0, 2, 170, 0)];
        let s = dataset_stats(&cases, &true_labels(&cases).unwrap()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(StatsTables::read_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn correlation_small_columns() {
        let m = pearson_matrix(
            &["x", "y", "z", "w"],
            &[
                vec![1.0, 2.0, 3.0],
                vec![2.0, 4.0, 6.0],
                vec![1.0, 2.0, 4.0],
                vec![-1.0, -2.0, -3.0],
            ],
        )
        .unwrap();
        assert_eq!(m.get(0, 1), Some(1.0));
        assert_eq!(m.get(0, 3), Some(-1.0));
        // direct evaluation: x-mean = (-1,0,1), z-mean = (-4/3,-1/3,5/3)
        // r = 3 / (sqrt(2) * sqrt(42/9))
        let expected = 3.0 / (2f64.sqrt() * (42.0f64 / 9.0).sqrt());
        assert!((m.get(0, 2).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.981980506).abs() < 1e-9);
    }

    #[test]
    fn constant_column_is_undefined() {
        let m = pearson_matrix(&["x", "c"], &[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]).unwrap();
        assert_eq!(m.get(0, 0), Some(1.0));
        assert_eq!(m.get(1, 1), None);
        assert_eq!(m.get(0, 1), None);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains(UNDEFINED));
        assert_eq!(CorrelationMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn correlation_needs_two_rows() {
        assert!(pearson_matrix(&["x"], &[vec![1.0]]).is_err());
        assert!(pearson_correlation(&[patient(50, 1, 0, 150, 1)]).is_err());
    }

    #[test]
    fn case_correlation_is_14_by_14() {
        let cases = vec![
            patient(54, 1, 0, 150, 1),
            patient(41, 0, 2, 170, 0),
            patient(63, 1, 3, 130, 1),
        ];
        let m = pearson_correlation(&cases).unwrap();
        assert_eq!(m.dim(), 14);
        assert_eq!(m.names[13], "target");
        assert_eq!(m.get(0, 0), Some(1.0));
        // trestbps is constant here
        assert_eq!(m.get(3, 3), None);
    }
}
