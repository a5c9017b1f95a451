//! Trial sets: synthetic generation, normalization, splits and file I/O.

mod io;
mod normalize;
mod set;
mod split;
mod synth;

pub use io::{
    decode_trials, encode_sidecar, encode_trials, read_trials, sidecar_path, write_trials,
    TRIAL_MAGIC, TRIAL_VERSION,
};
pub use normalize::{normalize, Normalization};
pub use set::TrialSet;
pub use split::{
    block_sizes, loso_indices, loso_split, within_subject_blocks, FoldIndices, SplitKind,
    SplitPlan, NUM_BLOCKS,
};
pub use synth::{gen_synthetic, SynthConfig};
