//! Forward pass and reverse-mode gradients for the two model kinds.

use super::spec::{CnnDims, ModelKind, ModelParams};
use super::trial::TrialMatrix;
use crate::error::{Error, Result};

/// Intermediate values kept for the backward pass.
pub(crate) enum Cache {
    Affine {
        input: Vec<f64>,
    },
    Cnn {
        dims: CnnDims,
        log_epsilon: f64,
        input: Vec<f64>,
        /// `[filter][channel][t]`, temporal convolution output.
        conv: Vec<f64>,
        /// `[filter][t]`, spatially filtered signal (pre-square).
        spatial: Vec<f64>,
        /// `[filter][pool]`, mean of squares.
        pooled: Vec<f64>,
        /// `[filter][pool]`, floored log of `pooled`.
        features: Vec<f64>,
    },
}

pub(crate) struct Pass {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub cache: Cache,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_finite(layer: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Numerical {
            layer,
            detail: format!("non-finite value {} at index {i}", values[i]),
        }),
    }
}

impl ModelParams {
    fn check_input(&self, x: &[f64]) -> Result<()> {
        let spec = self.spec();
        if x.len() != spec.input_len() {
            return Err(Error::shape(format!(
                "model expects {}x{} input ({} values), got {}",
                spec.input_channels,
                spec.input_samples,
                spec.input_len(),
                x.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn run_trial(&self, trial: &TrialMatrix) -> Result<Pass> {
        let spec = self.spec();
        if trial.shape() != (spec.input_channels, spec.input_samples) {
            return Err(Error::shape(format!(
                "model expects {}x{} trials, got {}x{}",
                spec.input_channels,
                spec.input_samples,
                trial.channels(),
                trial.samples()
            )));
        }
        self.run(trial.as_slice())
    }

    pub(crate) fn run(&self, x: &[f64]) -> Result<Pass> {
        self.check_input(x)?;
        let (logits, cache) = match self.spec().kind {
            ModelKind::Affine => (self.affine_logits(x), Cache::Affine { input: x.to_vec() }),
            ModelKind::SmallCnn { log_epsilon, .. } => self.cnn_forward(x, log_epsilon)?,
        };
        check_finite("logits", &logits)?;
        let probs = softmax(&logits);
        check_finite("softmax", &probs)?;
        Ok(Pass {
            logits,
            probs,
            cache,
        })
    }

    fn affine_logits(&self, x: &[f64]) -> Vec<f64> {
        let arrays = self.arrays();
        let (w, b) = (&arrays[0], &arrays[1]);
        let d = x.len();
        b.iter()
            .enumerate()
            .map(|(j, bj)| bj + dot(&w[j * d..(j + 1) * d], x))
            .collect()
    }

    fn cnn_forward(&self, x: &[f64], log_epsilon: f64) -> Result<(Vec<f64>, Cache)> {
        let d = self.spec().cnn_dims().expect("cnn spec");
        let a = self.arrays();
        let (tw, tb, sw, sb, dw, db) = (&a[0], &a[1], &a[2], &a[3], &a[4], &a[5]);
        let (nf, nc, nt, nl, tc) = (d.filters, d.channels, d.samples, d.kernel_len, d.conv_len);

        let mut conv = vec![0.0; nf * nc * tc];
        for f in 0..nf {
            let kernel = &tw[f * nl..(f + 1) * nl];
            for c in 0..nc {
                let row = &x[c * nt..(c + 1) * nt];
                let out = &mut conv[(f * nc + c) * tc..(f * nc + c + 1) * tc];
                for (t, o) in out.iter_mut().enumerate() {
                    *o = tb[f] + dot(kernel, &row[t..t + nl]);
                }
            }
        }
        check_finite("temporal_conv", &conv)?;

        let mut spatial = vec![0.0; nf * tc];
        for g in 0..nf {
            let out = &mut spatial[g * tc..(g + 1) * tc];
            out.iter_mut().for_each(|o| *o = sb[g]);
            for f in 0..nf {
                for c in 0..nc {
                    let w = sw[(g * nf + f) * nc + c];
                    let src = &conv[(f * nc + c) * tc..(f * nc + c + 1) * tc];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
            }
        }
        check_finite("spatial_filter", &spatial)?;

        let np = d.pooled_len;
        let mut pooled = vec![0.0; nf * np];
        for g in 0..nf {
            for p in 0..np {
                let start = g * tc + p * d.pool_stride;
                let window = &spatial[start..start + d.pool_len];
                pooled[g * np + p] = window.iter().map(|z| z * z).sum::<f64>() / d.pool_len as f64;
            }
        }
        check_finite("mean_pool", &pooled)?;

        let features: Vec<f64> = pooled.iter().map(|u| u.max(log_epsilon).ln()).collect();
        check_finite("log", &features)?;

        let nq = features.len();
        let logits = db
            .iter()
            .enumerate()
            .map(|(j, b)| b + dot(&dw[j * nq..(j + 1) * nq], &features))
            .collect();

        Ok((
            logits,
            Cache::Cnn {
                dims: d,
                log_epsilon,
                input: x.to_vec(),
                conv,
                spatial,
                pooled,
                features,
            },
        ))
    }

    /// Back-propagates `dlogits` through the cached pass.
    ///
    /// Parameter gradients are accumulated into `dparams` and the input
    /// gradient into `dinput` when those are given.
    pub(crate) fn backward(
        &self,
        cache: &Cache,
        dlogits: &[f64],
        dparams: Option<&mut ModelParams>,
        dinput: Option<&mut [f64]>,
    ) {
        match cache {
            Cache::Affine { input } => self.affine_backward(input, dlogits, dparams, dinput),
            Cache::Cnn { .. } => self.cnn_backward(cache, dlogits, dparams, dinput),
        }
    }

    fn affine_backward(
        &self,
        x: &[f64],
        dlogits: &[f64],
        dparams: Option<&mut ModelParams>,
        dinput: Option<&mut [f64]>,
    ) {
        let w = &self.arrays()[0];
        let d = x.len();
        if let Some(g) = dparams {
            let ga = g.arrays_mut();
            for (j, &dl) in dlogits.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                for (gw, xi) in ga[0][j * d..(j + 1) * d].iter_mut().zip(x) {
                    *gw += dl * xi;
                }
                ga[1][j] += dl;
            }
        }
        if let Some(dx) = dinput {
            for (j, &dl) in dlogits.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                for (o, wj) in dx.iter_mut().zip(&w[j * d..(j + 1) * d]) {
                    *o += dl * wj;
                }
            }
        }
    }

    fn cnn_backward(
        &self,
        cache: &Cache,
        dlogits: &[f64],
        mut dparams: Option<&mut ModelParams>,
        dinput: Option<&mut [f64]>,
    ) {
        let Cache::Cnn {
            dims: d,
            log_epsilon,
            input,
            conv,
            spatial,
            pooled,
            features,
        } = cache
        else {
            unreachable!("cnn cache expected");
        };
        let a = self.arrays();
        let (tw, sw, dw) = (&a[0], &a[2], &a[4]);
        let (nf, nc, nt, nl, tc, np) = (
            d.filters,
            d.channels,
            d.samples,
            d.kernel_len,
            d.conv_len,
            d.pooled_len,
        );
        let nq = features.len();

        // dense
        let mut dfeat = vec![0.0; nq];
        for (j, &dl) in dlogits.iter().enumerate() {
            if dl == 0.0 {
                continue;
            }
            let row = &dw[j * nq..(j + 1) * nq];
            for (o, w) in dfeat.iter_mut().zip(row) {
                *o += dl * w;
            }
            if let Some(g) = dparams.as_deref_mut() {
                let ga = g.arrays_mut();
                for (o, f) in ga[4][j * nq..(j + 1) * nq].iter_mut().zip(features) {
                    *o += dl * f;
                }
                ga[5][j] += dl;
            }
        }

        // log floor, mean pool, square
        let mut dspatial = vec![0.0; nf * tc];
        for g in 0..nf {
            for p in 0..np {
                let u = pooled[g * np + p];
                if u <= *log_epsilon {
                    continue;
                }
                let du = dfeat[g * np + p] / u / d.pool_len as f64;
                let start = g * tc + p * d.pool_stride;
                for t in start..start + d.pool_len {
                    dspatial[t] += 2.0 * spatial[t] * du;
                }
            }
        }

        // spatial filter
        let mut dconv = vec![0.0; nf * nc * tc];
        for g in 0..nf {
            let dz = &dspatial[g * tc..(g + 1) * tc];
            for f in 0..nf {
                for c in 0..nc {
                    let widx = (g * nf + f) * nc + c;
                    let w = sw[widx];
                    let base = (f * nc + c) * tc;
                    for (o, dzt) in dconv[base..base + tc].iter_mut().zip(dz) {
                        *o += w * dzt;
                    }
                    if let Some(gp) = dparams.as_deref_mut() {
                        gp.arrays_mut()[2][widx] += dot(dz, &conv[base..base + tc]);
                    }
                }
            }
            if let Some(gp) = dparams.as_deref_mut() {
                gp.arrays_mut()[3][g] += dz.iter().sum::<f64>();
            }
        }

        // temporal convolution
        if let Some(gp) = dparams.as_deref_mut() {
            let ga = gp.arrays_mut();
            for f in 0..nf {
                for c in 0..nc {
                    let dz = &dconv[(f * nc + c) * tc..(f * nc + c + 1) * tc];
                    let row = &input[c * nt..(c + 1) * nt];
                    for l in 0..nl {
                        ga[0][f * nl + l] += dot(dz, &row[l..l + tc]);
                    }
                    ga[1][f] += dz.iter().sum::<f64>();
                }
            }
        }
        if let Some(dx) = dinput {
            for f in 0..nf {
                let kernel = &tw[f * nl..(f + 1) * nl];
                for c in 0..nc {
                    let dz = &dconv[(f * nc + c) * tc..(f * nc + c + 1) * tc];
                    let out = &mut dx[c * nt..(c + 1) * nt];
                    for (t, &g) in dz.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        for (o, k) in out[t..t + nl].iter_mut().zip(kernel) {
                            *o += g * k;
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
