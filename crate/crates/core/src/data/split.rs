use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::set::TrialSet;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const NUM_BLOCKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    WithinSubjectBlocks,
    LeaveOneSubjectOut,
}

/// Fold assignment for one cross-validation protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitPlan {
    /// Block index in `0..5` for every trial; blocks are per subject.
    WithinSubjectBlocks { blocks: Vec<usize> },
    LeaveOneSubjectOut { test_subject: u32 },
}

/// Trial indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FoldIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    pub fn kind(&self) -> SplitKind {
        match self {
            SplitPlan::WithinSubjectBlocks { .. } => SplitKind::WithinSubjectBlocks,
            SplitPlan::LeaveOneSubjectOut { .. } => SplitKind::LeaveOneSubjectOut,
        }
    }

    /// Indices of fold `fold` of a within-subject plan: block `fold` is the
    /// test block, block `fold + 1 (mod 5)` validates, the rest train.
    pub fn within_fold(&self, fold: usize) -> Result<FoldIndices> {
        let SplitPlan::WithinSubjectBlocks { blocks } = self else {
            return Err(Error::invalid("within_fold on a leave-one-subject-out plan"));
        };
        if fold >= NUM_BLOCKS {
            return Err(Error::invalid(format!("fold {fold} out of range")));
        }
        let val_block = (fold + 1) % NUM_BLOCKS;
        let mut out = FoldIndices::default();
        for (i, &b) in blocks.iter().enumerate() {
            if b == fold {
                out.test.push(i);
            } else if b == val_block {
                out.val.push(i);
            } else {
                out.train.push(i);
            }
        }
        Ok(out)
    }
}

/// Sizes of `n` items split into 5 contiguous blocks, remainder on the first blocks.
pub fn block_sizes(n: usize) -> [usize; NUM_BLOCKS] {
    let mut sizes = [n / NUM_BLOCKS; NUM_BLOCKS];
    for s in sizes.iter_mut().take(n % NUM_BLOCKS) {
        *s += 1;
    }
    sizes
}

/// Partitions every subject's trials, in recorded order, into 5 contiguous blocks.
pub fn within_subject_blocks(set: &TrialSet) -> Result<SplitPlan> {
    let mut blocks = vec![0; set.len()];
    for subject in set.subject_ids() {
        let idx: Vec<usize> = (0..set.len()).filter(|&i| set.subjects()[i] == subject).collect();
        if idx.len() < NUM_BLOCKS {
            return Err(Error::invalid(format!(
                "subject {subject} has {} trials, at least {NUM_BLOCKS} needed",
                idx.len()
            )));
        }
        let mut pos = 0;
        for (b, size) in block_sizes(idx.len()).into_iter().enumerate() {
            for &i in &idx[pos..pos + size] {
                blocks[i] = b;
            }
            pos += size;
        }
    }
    Ok(SplitPlan::WithinSubjectBlocks { blocks })
}

/// Leave-one-subject-out indices: the held-out subject is the test set; the
/// remaining trials are shuffled and cut 75/25 into train/validation (the
/// validation share is rounded down).
pub fn loso_indices(set: &TrialSet, test_subject: u32, seed: u64) -> Result<FoldIndices> {
    let ids = set.subject_ids();
    if ids.len() < 2 {
        return Err(Error::invalid("leave-one-subject-out needs at least 2 subjects"));
    }
    if !ids.contains(&test_subject) {
        return Err(Error::invalid(format!("unknown subject id {test_subject}")));
    }
    let (test, mut rest): (Vec<usize>, Vec<usize>) =
        (0..set.len()).partition(|&i| set.subjects()[i] == test_subject);
    rest.shuffle(&mut seeded(seed));
    let n_val = rest.len() / 4;
    let val = rest.split_off(rest.len() - n_val);
    Ok(FoldIndices {
        train: rest,
        val,
        test,
    })
}

pub fn loso_split(
    set: &TrialSet,
    test_subject: u32,
    seed: u64,
) -> Result<(TrialSet, TrialSet, TrialSet)> {
    let f = loso_indices(set, test_subject, seed)?;
    Ok((set.subset(&f.train), set.subset(&f.val), set.subset(&f.test)))
}
