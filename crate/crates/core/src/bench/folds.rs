//! Bootstrap learning samples with out-of-bag test sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LoretError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Bootstrap draw of size N (with repetitions).
    pub in_bag: Vec<usize>,
    /// Rows never drawn, ascending.
    pub oob: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub master_seed: u64,
    pub folds: Vec<Fold>,
}

/// Independent RNG stream for `(master_seed, fold, attempt)`.
pub(crate) fn fold_rng(master_seed: u64, fold: usize, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((fold as u64) << 1) | attempt);
    rng
}

fn draw(n: usize, rng: &mut ChaCha8Rng) -> Fold {
    let in_bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut seen = vec![false; n];
    for &i in &in_bag {
        seen[i] = true;
    }
    let oob = (0..n).filter(|&i| !seen[i]).collect();
    Fold { in_bag, oob }
}

/// `folds` bootstrap samples of `n` rows. A fold whose out-of-bag set is
/// empty is redrawn once from a second stream before giving up.
pub fn make_folds(n: usize, folds: usize, master_seed: u64) -> Result<FoldPlan> {
    if n == 0 || folds == 0 {
        return Err(LoretError::InvalidArgument("need at least one row and one fold".into()));
    }
    let mut out = Vec::with_capacity(folds);
    for f in 0..folds {
        let mut fold = draw(n, &mut fold_rng(master_seed, f, 0));
        if fold.oob.is_empty() {
            fold = draw(n, &mut fold_rng(master_seed, f, 1));
        }
        if fold.oob.is_empty() {
            return Err(LoretError::EmptyOob { fold: f });
        }
        out.push(fold);
    }
    Ok(FoldPlan {
        n,
        master_seed,
        folds: out,
    })
}
