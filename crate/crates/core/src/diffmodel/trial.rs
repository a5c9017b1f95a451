use crate::error::{Error, Result};

/// One `C x T` trial stored channel-major (time contiguous within a channel).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMatrix {
    channels: usize,
    samples: usize,
    values: Vec<f64>,
}

impl TrialMatrix {
    pub fn new(channels: usize, samples: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || samples == 0 {
            return Err(Error::shape(format!(
                "trial dimensions must be positive, got {channels}x{samples}"
            )));
        }
        if values.len() != channels * samples {
            return Err(Error::shape(format!(
                "trial {channels}x{samples} needs {} values, got {}",
                channels * samples,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite trial value at index {i}")));
        }
        Ok(Self {
            channels,
            samples,
            values,
        })
    }

    pub fn zeros(channels: usize, samples: usize) -> Self {
        Self {
            channels,
            samples,
            values: vec![0.0; channels * samples],
        }
    }

    /// Builds from rows, one per channel.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let samples = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != samples) {
            return Err(Error::shape("ragged channel rows"));
        }
        Self::new(rows.len(), samples, rows.concat())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.samples)
    }

    pub fn get(&self, channel: usize, sample: usize) -> f64 {
        self.values[channel * self.samples + sample]
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.samples..(channel + 1) * self.samples]
    }

    /// Row-major (channel-major) vectorization.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Sum of squared entries.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub(crate) fn from_raw(channels: usize, samples: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), channels * samples);
        Self {
            channels,
            samples,
            values,
        }
    }
}
