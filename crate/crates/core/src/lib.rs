//! Case-based reasoning for heart disease prediction.
//!
//! Patient records ([`Case`]) follow the 14-column Cleveland layout. A
//! training split becomes the [`CaseBase`]; queries are answered by scoring
//! every stored case with a weighted mean of range-normalized local
//! similarities and copying the solution of the best match.
//!
//! ```
//! use heartcbr::{parse_csv, split_sequential, fit_minmax, evaluate, SimilarityConfig, ValidationMode};
//!
//! let csv = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,target\n\
//!            52,1,0,125,212,0,1,168,0,1.0,2,2,3,0\n\
//!            58,0,0,100,248,0,0,122,0,1.0,1,0,2,1\n\
//!            53,1,0,140,203,1,0,155,1,3.1,0,0,3,0\n\
//!            57,0,0,120,354,0,1,163,1,0.6,2,0,2,1\n\
//!            51,1,0,128,204,1,1,156,1,1.0,1,0,2,0\n";
//! let cases = parse_csv(csv.as_bytes(), ValidationMode::Lenient).unwrap().cases;
//! let split = split_sequential(&cases, 0.6).unwrap();
//! let params = fit_minmax(&split.train).unwrap();
//! let report = evaluate(&split.test, &split.train, &SimilarityConfig::default(), &params).unwrap();
//! assert_eq!(report.records.len(), 2);
//! ```

pub mod analytics;
pub mod baselines;
pub mod case;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod preprocess;

pub use analytics::{
    accuracy, dataset_stats, pearson_correlation, pearson_matrix, CaseRecord, Confusion,
    CorrelationMatrix, EvaluationReport, StatsTables,
};
pub use case::{
    validate_case, Case, FeatureVector, Target, ValidationMode, ValidationWarning,
    ATTRIBUTE_NAMES, NUM_ATTRIBUTES,
};
pub use dataset::{
    parse_csv, read_case_base, split_sequential, write_case_base, write_cases, CaseBase, CaseId,
    SplitResult,
};
pub use engine::{
    evaluate, evaluate_parallel, global_similarity, local_similarity, predict, retain, retrieve,
    reuse, run_cycle, Prediction, RankedCase, SimilarityConfig,
};
pub use error::{Error, Result};
pub use preprocess::{fit_minmax, normalize, NormalizationParams};
