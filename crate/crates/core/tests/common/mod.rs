#![allow(dead_code)]

use std::path::PathBuf;

use heartcbr::{Case, FeatureVector, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A plausible patient with every field inside its documented domain.
pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let v = [
        rng.random_range(29..=77) as f64,
        rng.random_range(0..=1) as f64,
        rng.random_range(0..=3) as f64,
        rng.random_range(94..=200) as f64,
        rng.random_range(126..=564) as f64,
        rng.random_range(0..=1) as f64,
        rng.random_range(0..=2) as f64,
        rng.random_range(71..=202) as f64,
        rng.random_range(0..=1) as f64,
        (rng.random_range(0..=62) as f64) / 10.0,
        rng.random_range(0..=2) as f64,
        rng.random_range(0..=3) as f64,
        rng.random_range(1..=3) as f64,
    ];
    let target = if rng.random_bool(0.5) {
        Target::Present
    } else {
        Target::Absent
    };
    Case::from_features(&FeatureVector(v), Some(target)).unwrap()
}

pub fn random_cases(n: usize, seed: u64) -> Vec<Case> {
    let mut r = rng(seed);
    (0..n).map(|_| random_case(&mut r)).collect()
}

/// Location of the public 1025-row file: `$HEART_CSV`, else `data/heart.csv`
/// at the workspace root.
pub fn dataset_path() -> PathBuf {
    std::env::var_os("HEART_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("../../data/heart.csv")
        })
}
