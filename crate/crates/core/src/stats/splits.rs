use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One train/test split of the repeated stratified evaluation protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    /// 1-based repeat index.
    pub repeat: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Independent stratified random splits (not a partition across repeats).
/// Per repeat and class, a fresh seeded shuffle assigns
/// `round(n_class * test_fraction)` samples to the test set.
pub fn make_splits(
    labels: &[(String, bool)],
    n_repeats: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Vec<SplitPlan>> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::Argument(format!(
            "test_fraction {test_fraction} not in (0,1)"
        )));
    }
    let mut pos: Vec<&str> = labels
        .iter()
        .filter(|(_, l)| *l)
        .map(|(s, _)| s.as_str())
        .collect();
    let mut neg: Vec<&str> = labels
        .iter()
        .filter(|(_, l)| !*l)
        .map(|(s, _)| s.as_str())
        .collect();
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < 3 {
            return Err(Error::Argument(format!(
                "{name} class has {} samples; at least 3 are required",
                class.len()
            )));
        }
    }
    // content-deterministic regardless of the caller's ordering
    pos.sort_unstable();
    neg.sort_unstable();

    let mut plans = Vec::with_capacity(n_repeats);
    for repeat in 1..=n_repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(repeat as u64);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [&pos, &neg] {
            let mut ids = class.clone();
            ids.shuffle(&mut rng);
            let n_test = ((ids.len() as f64) * test_fraction).round() as usize;
            let n_test = n_test.clamp(1, ids.len() - 1);
            for (i, id) in ids.iter().enumerate() {
                if i < n_test {
                    test.push(id.to_string());
                } else {
                    train.push(id.to_string());
                }
            }
        }
        train.sort_unstable();
        test.sort_unstable();
        plans.push(SplitPlan {
            repeat,
            train,
            test,
            seed,
        });
    }
    Ok(plans)
}
