use crate::diffmodel::TrialMatrix;
use crate::error::{Error, Result};

/// Ordered trials sharing one `C x T` shape, with labels and subject ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    channels: usize,
    samples: usize,
    trials: Vec<TrialMatrix>,
    labels: Vec<usize>,
    subjects: Vec<u32>,
    class_names: Vec<String>,
}

impl TrialSet {
    pub fn new(
        channels: usize,
        samples: usize,
        trials: Vec<TrialMatrix>,
        labels: Vec<usize>,
        subjects: Vec<u32>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if channels == 0 || samples == 0 {
            return Err(Error::shape("trial set dimensions must be positive"));
        }
        if trials.len() != labels.len() || trials.len() != subjects.len() {
            return Err(Error::shape(format!(
                "{} trials, {} labels, {} subjects",
                trials.len(),
                labels.len(),
                subjects.len()
            )));
        }
        if let Some(t) = trials.iter().find(|t| t.shape() != (channels, samples)) {
            return Err(Error::shape(format!(
                "trial of shape {:?} in a {channels}x{samples} set",
                t.shape()
            )));
        }
        let k = class_names.len();
        if let Some(&y) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::invalid(format!("label {y} out of range for {k} classes")));
        }
        Ok(Self {
            channels,
            samples,
            trials,
            labels,
            subjects,
            class_names,
        })
    }

    /// Names `class0`, `class1`, ...
    pub fn default_class_names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("class{i}")).collect()
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.samples)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn trials(&self) -> &[TrialMatrix] {
        &self.trials
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subjects(&self) -> &[u32] {
        &self.subjects
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Distinct subject ids in ascending order.
    pub fn subject_ids(&self) -> Vec<u32> {
        let mut ids = self.subjects.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// New set holding the trials at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TrialSet {
        TrialSet {
            channels: self.channels,
            samples: self.samples,
            trials: indices.iter().map(|&i| self.trials[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subjects: indices.iter().map(|&i| self.subjects[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same labels and subjects with trials replaced by `f(trial)`.
    pub fn map_trials(&self, mut f: impl FnMut(&TrialMatrix) -> TrialMatrix) -> TrialSet {
        TrialSet {
            trials: self.trials.iter().map(&mut f).collect(),
            ..self.clone()
        }
    }

    /// Standard deviation over every entry of every trial.
    pub fn value_std(&self) -> f64 {
        let n = (self.len() * self.channels * self.samples) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let values = || self.trials.iter().flat_map(|t| t.as_slice().iter().copied());
        let mean = values().sum::<f64>() / n;
        (values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
    }
}
