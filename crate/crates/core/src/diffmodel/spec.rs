use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Architecture of a victim or substitute classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `softmax(W x + b)` over the vectorized trial.
    Affine,
    /// Temporal convolution, spatial filter across all channels, squaring,
    /// mean pooling, log activation, dense softmax.
    SmallCnn {
        temporal_filters: usize,
        temporal_kernel_len: usize,
        pool_len: usize,
        pool_stride: usize,
        log_epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub input_channels: usize,
    pub input_samples: usize,
    pub num_classes: usize,
}

/// Derived layer sizes of a [`ModelKind::SmallCnn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnDims {
    pub channels: usize,
    pub samples: usize,
    pub filters: usize,
    pub kernel_len: usize,
    /// Output length of the valid temporal convolution.
    pub conv_len: usize,
    pub pool_len: usize,
    pub pool_stride: usize,
    /// Number of pooled positions per filter.
    pub pooled_len: usize,
    pub classes: usize,
}

impl CnnDims {
    pub fn features(&self) -> usize {
        self.filters * self.pooled_len
    }
}

impl ModelSpec {
    pub fn affine(channels: usize, samples: usize, classes: usize) -> Self {
        Self {
            kind: ModelKind::Affine,
            input_channels: channels,
            input_samples: samples,
            num_classes: classes,
        }
    }

    /// 8 temporal filters of length `min(13, T)` and a pooling window of a
    /// 4 temporal filters of length `min(13, T)` and a pooling window of a
    /// quarter of the convolution output with two-thirds stride.
    pub fn small_cnn(channels: usize, samples: usize, classes: usize) -> Self {
        let kernel = samples.min(13);
        let conv_len = samples - kernel + 1;
        let pool_len = (conv_len / 4).max(1);
        let pool_stride = (pool_len * 2 / 3).max(1);
        Self {
            kind: ModelKind::SmallCnn {
                temporal_filters: 8,
                temporal_kernel_len: kernel,
                pool_len,
                pool_stride,
                log_epsilon: 1e-6,
            },
            input_channels: channels,
            input_samples: samples,
            num_classes: classes,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_samples
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.input_samples == 0 {
            return Err(Error::shape("input channels and samples must be positive"));
        }
        if self.num_classes < 2 {
            return Err(Error::shape(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            )));
        }
        if let ModelKind::SmallCnn {
            temporal_filters,
            temporal_kernel_len,
            pool_len,
            pool_stride,
            log_epsilon,
        } = self.kind
        {
            if temporal_filters == 0 || temporal_kernel_len == 0 || pool_len == 0 || pool_stride == 0 {
                return Err(Error::shape("small_cnn counts must be positive"));
            }
            if temporal_kernel_len > self.input_samples {
                return Err(Error::shape(format!(
                    "temporal kernel length {temporal_kernel_len} exceeds {} samples",
                    self.input_samples
                )));
            }
            if pool_len > self.input_samples - temporal_kernel_len + 1 {
                return Err(Error::shape("pooling window longer than convolution output"));
            }
            if !(log_epsilon > 0.0) {
                return Err(Error::shape("log_epsilon must be positive"));
            }
        }
        Ok(())
    }

    /// Layer sizes for a small CNN; `None` for affine specs.
    pub fn cnn_dims(&self) -> Option<CnnDims> {
        match self.kind {
            ModelKind::Affine => None,
            ModelKind::SmallCnn {
                temporal_filters,
                temporal_kernel_len,
                pool_len,
                pool_stride,
                ..
            } => {
                let conv_len = self.input_samples + 1 - temporal_kernel_len;
                Some(CnnDims {
                    channels: self.input_channels,
                    samples: self.input_samples,
                    filters: temporal_filters,
                    kernel_len: temporal_kernel_len,
                    conv_len,
                    pool_len,
                    pool_stride,
                    pooled_len: (conv_len - pool_len) / pool_stride + 1,
                    classes: self.num_classes,
                })
            }
        }
    }

    /// Ordered parameter arrays as `(name, shape)`.
    pub fn layout(&self) -> Vec<(&'static str, Vec<usize>)> {
        let k = self.num_classes;
        match self.cnn_dims() {
            None => vec![("weight", vec![k, self.input_len()]), ("bias", vec![k])],
            Some(d) => vec![
                ("temporal_weight", vec![d.filters, d.kernel_len]),
                ("temporal_bias", vec![d.filters]),
                ("spatial_weight", vec![d.filters, d.filters, d.channels]),
                ("spatial_bias", vec![d.filters]),
                ("dense_weight", vec![k, d.features()]),
                ("dense_bias", vec![k]),
            ],
        }
    }
}

/// All weights of one classifier, stored as flat arrays in [`ModelSpec::layout`] order.
///
/// The same type doubles as the gradient container returned by
/// [`crate::diffmodel::grad_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    spec: ModelSpec,
    arrays: Vec<Vec<f64>>,
}

impl ModelParams {
    /// Uniform `[-s, s]` weights with `s = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(seed);
        let arrays = spec
            .layout()
            .into_iter()
            .map(|(name, shape)| {
                let len: usize = shape.iter().product();
                if name.ends_with("bias") {
                    return vec![0.0; len];
                }
                let fan_out = shape[0];
                let fan_in = len / fan_out;
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..len).map(|_| rng.random_range(-s..=s)).collect()
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            arrays,
        })
    }

    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let arrays = spec
            .layout()
            .into_iter()
            .map(|(_, shape)| vec![0.0; shape.iter().product()])
            .collect();
        Ok(Self {
            spec: spec.clone(),
            arrays,
        })
    }

    /// Builds parameters from named arrays, checking every shape against the spec.
    pub fn from_named(spec: &ModelSpec, mut named: Vec<(String, Vec<f64>)>) -> Result<Self> {
        spec.validate()?;
        let mut arrays = Vec::new();
        for (name, shape) in spec.layout() {
            let pos = named
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| Error::shape(format!("missing array `{name}`")))?;
            let (_, values) = named.swap_remove(pos);
            let want: usize = shape.iter().product();
            if values.len() != want {
                return Err(Error::shape(format!(
                    "array `{name}` has {} values, expected {want} for shape {shape:?}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("array `{name}` has non-finite values")));
            }
            arrays.push(values);
        }
        if let Some((extra, _)) = named.first() {
            return Err(Error::shape(format!("unexpected array `{extra}`")));
        }
        Ok(Self {
            spec: spec.clone(),
            arrays,
        })
    }

    /// Affine model from a `K x CT` weight matrix (row-major) and `K` biases.
    pub fn affine(channels: usize, samples: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let spec = ModelSpec::affine(channels, samples, bias.len());
        Self::from_named(
            &spec,
            vec![("weight".into(), weight), ("bias".into(), bias)],
        )
    }

    /// Binary affine model whose class-1 margin is `w.x + b`.
    ///
    /// Row 0 of the weight matrix is zero, so `logit_1 - logit_0 = w.x + b` and
    /// the predicted class is 1 exactly when that margin is positive.
    pub fn affine_binary(channels: usize, samples: usize, w: &[f64], b: f64) -> Result<Self> {
        let mut weight = vec![0.0; w.len()];
        weight.extend_from_slice(w);
        Self::affine(channels, samples, weight, vec![0.0, b])
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn arrays(&self) -> &[Vec<f64>] {
        &self.arrays
    }

    pub fn arrays_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.arrays
    }

    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.spec
            .layout()
            .iter()
            .position(|(n, _)| *n == name)
            .map(|i| self.arrays[i].as_slice())
    }

    /// `(name, values)` pairs in layout order.
    pub fn named(&self) -> Vec<(&'static str, &[f64])> {
        self.spec
            .layout()
            .into_iter()
            .zip(&self.arrays)
            .map(|((n, _), a)| (n, a.as_slice()))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.arrays.iter().map(Vec::len).sum()
    }

    /// Zeroed container with the same layout.
    pub fn zeros_like(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            arrays: self.arrays.iter().map(|a| vec![0.0; a.len()]).collect(),
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.arrays.iter().flatten().copied()
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.arrays.iter_mut().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_init_respects_the_glorot_bound() {
        let p = ModelParams::init(&ModelSpec::affine(2, 2, 2), 7).unwrap();
        let w = p.array("weight").unwrap();
        assert_eq!(w.len(), 8);
        assert!(w.iter().all(|v| v.abs() <= 1.0));
        assert_eq!(p.array("bias").unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = ModelSpec::small_cnn(3, 20, 3);
        assert_eq!(ModelParams::init(&spec, 5).unwrap(), ModelParams::init(&spec, 5).unwrap());
        assert_ne!(ModelParams::init(&spec, 5).unwrap(), ModelParams::init(&spec, 6).unwrap());
    }

    #[test]
    fn small_cnn_shapes_match_hand_formula() {
        let spec = ModelSpec {
            kind: ModelKind::SmallCnn {
                temporal_filters: 4,
                temporal_kernel_len: 13,
                pool_len: 13,
                pool_stride: 8,
                log_epsilon: 1e-6,
            },
            input_channels: 8,
            input_samples: 64,
            num_classes: 2,
        };
        let p = ModelParams::init(&spec, 3).unwrap();
        let output_len = 64 - 13 + 1;
        let pooled = (output_len - 13) / 8 + 1;
        let expect = [
            ("temporal_weight", 4 * 13),
            ("temporal_bias", 4),
            ("spatial_weight", 4 * 4 * 8),
            ("spatial_bias", 4),
            ("dense_weight", 2 * 4 * pooled),
            ("dense_bias", 2),
        ];
        for (name, len) in expect {
            assert_eq!(p.array(name).unwrap().len(), len, "{name}");
        }
        assert_eq!(spec.cnn_dims().unwrap().pooled_len, pooled);
        assert_eq!(p.num_params(), expect.iter().map(|e| e.1).sum::<usize>());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ModelParams::init(&ModelSpec::affine(0, 2, 2), 0).is_err());
        assert!(ModelParams::init(&ModelSpec::affine(1, 2, 1), 0).is_err());
        let mut spec = ModelSpec::small_cnn(2, 10, 2);
        if let ModelKind::SmallCnn { temporal_kernel_len, .. } = &mut spec.kind {
            *temporal_kernel_len = 11;
        }
        assert!(matches!(ModelParams::init(&spec, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn from_named_checks_names_and_lengths() {
        let spec = ModelSpec::affine(1, 2, 2);
        let ok = vec![("weight".to_string(), vec![0.0; 4]), ("bias".to_string(), vec![0.0; 2])];
        assert!(ModelParams::from_named(&spec, ok).is_ok());
        let short = vec![("weight".to_string(), vec![0.0; 3]), ("bias".to_string(), vec![0.0; 2])];
        let err = ModelParams::from_named(&spec, short).unwrap_err().to_string();
        assert!(err.contains("weight"), "{err}");
        assert!(ModelParams::from_named(&spec, vec![("weight".to_string(), vec![0.0; 4])]).is_err());
    }
}
