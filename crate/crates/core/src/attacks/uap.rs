use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffmodel::TrialMatrix;
use crate::error::{Error, Result};

/// Shape family of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UapMode {
    /// One value per trial entry (`C x T`).
    Full,
    /// A single `1 x T` row added to every channel.
    ChannelInvariant,
    /// A `C_m x T_m` template added at some [`Placement`].
    Mini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    L2,
    Inf,
}

impl NormOrder {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormOrder::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormOrder::Inf => v.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        }
    }
}

/// Offset of a mini template inside a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Placement {
    pub channel_offset: usize,
    pub time_offset: usize,
}

impl Placement {
    pub fn new(channel_offset: usize, time_offset: usize) -> Self {
        Self {
            channel_offset,
            time_offset,
        }
    }

    /// Uniform placement of a `rows x cols` template inside a `channels x samples` trial.
    pub fn sample(
        rng: &mut impl Rng,
        (rows, cols): (usize, usize),
        (channels, samples): (usize, usize),
    ) -> Self {
        Self {
            channel_offset: rng.random_range(0..=channels - rows),
            time_offset: rng.random_range(0..=samples - cols),
        }
    }
}

/// A universal perturbation with its norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Uap {
    mode: UapMode,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub xi: f64,
    pub norm: NormOrder,
}

impl Uap {
    pub fn new(
        mode: UapMode,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        xi: f64,
        norm: NormOrder,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("perturbation dimensions must be positive"));
        }
        if mode == UapMode::ChannelInvariant && rows != 1 {
            return Err(Error::shape("channel-invariant perturbation must have exactly one row"));
        }
        if values.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} perturbation needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if !(xi > 0.0) {
            return Err(Error::invalid("xi must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite perturbation value"));
        }
        Ok(Self {
            mode,
            rows,
            cols,
            values,
            xi,
            norm,
        })
    }

    pub fn zeros(mode: UapMode, rows: usize, cols: usize, xi: f64, norm: NormOrder) -> Result<Self> {
        Self::new(mode, rows, cols, vec![0.0; rows * cols], xi, norm)
    }

    /// Zero perturbation of the shape `mode` needs for `channels x samples` trials.
    pub fn zeros_for(mode: UapMode, channels: usize, samples: usize, xi: f64, norm: NormOrder) -> Result<Self> {
        let rows = if mode == UapMode::ChannelInvariant { 1 } else { channels };
        Self::zeros(mode, rows, samples, xi, norm)
    }

    pub fn mode(&self) -> UapMode {
        self.mode
    }

    /// `(rows, cols)` of the stored values.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn norm_value(&self) -> f64 {
        self.norm.norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    /// Checks that the perturbation can be added to `channels x samples` trials.
    pub fn check_fits(&self, channels: usize, samples: usize, placement: Option<Placement>) -> Result<()> {
        let fits = match self.mode {
            UapMode::Full => (self.rows, self.cols) == (channels, samples),
            UapMode::ChannelInvariant => self.cols == samples,
            UapMode::Mini => {
                let p = placement.ok_or_else(|| Error::invalid("mini perturbation needs a placement"))?;
                if self.rows > channels || self.cols > samples {
                    return Err(Error::shape(format!(
                        "template {}x{} larger than trial {channels}x{samples}",
                        self.rows, self.cols
                    )));
                }
                if p.channel_offset + self.rows > channels || p.time_offset + self.cols > samples {
                    return Err(Error::invalid(format!(
                        "placement ({}, {}) puts the {}x{} template outside a {channels}x{samples} trial",
                        p.channel_offset, p.time_offset, self.rows, self.cols
                    )));
                }
                true
            }
        };
        if fits {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{:?} perturbation {}x{} does not fit {channels}x{samples} trials",
                self.mode, self.rows, self.cols
            )))
        }
    }

    /// The additive `channels x samples` perturbation actually applied to a trial.
    pub fn effective(&self, channels: usize, samples: usize, placement: Option<Placement>) -> Result<TrialMatrix> {
        let mut out = TrialMatrix::zeros(channels, samples);
        self.add_into(out.as_mut_slice(), channels, samples, placement)?;
        Ok(out)
    }

    fn add_into(&self, target: &mut [f64], channels: usize, samples: usize, placement: Option<Placement>) -> Result<()> {
        self.check_fits(channels, samples, placement)?;
        match self.mode {
            UapMode::Full => target.iter_mut().zip(&self.values).for_each(|(t, v)| *t += v),
            UapMode::ChannelInvariant => {
                for row in target.chunks_mut(samples) {
                    row.iter_mut().zip(&self.values).for_each(|(t, v)| *t += v);
                }
            }
            UapMode::Mini => {
                let p = placement.expect("checked");
                for r in 0..self.rows {
                    let start = (p.channel_offset + r) * samples + p.time_offset;
                    target[start..start + self.cols]
                        .iter_mut()
                        .zip(self.row(r))
                        .for_each(|(t, v)| *t += v);
                }
            }
        }
        Ok(())
    }

    /// Gradient with respect to the stored values, given the gradient with
    /// respect to the perturbed trial.
    pub(crate) fn pullback(&self, input_grad: &[f64], samples: usize, placement: Option<Placement>, out: &mut [f64]) {
        match self.mode {
            UapMode::Full => out.iter_mut().zip(input_grad).for_each(|(o, g)| *o += g),
            UapMode::ChannelInvariant => {
                for row in input_grad.chunks(samples) {
                    out.iter_mut().zip(row).for_each(|(o, g)| *o += g);
                }
            }
            UapMode::Mini => {
                let p = placement.unwrap_or_default();
                for r in 0..self.rows {
                    let start = (p.channel_offset + r) * samples + p.time_offset;
                    out[r * self.cols..(r + 1) * self.cols]
                        .iter_mut()
                        .zip(&input_grad[start..start + self.cols])
                        .for_each(|(o, g)| *o += g);
                }
            }
        }
    }
}

/// `x + v`, broadcasting or placing `v` according to its mode.
pub fn apply_uap(trial: &TrialMatrix, uap: &Uap, placement: Option<Placement>) -> Result<TrialMatrix> {
    let mut out = trial.clone();
    uap.add_into(out.as_mut_slice(), trial.channels(), trial.samples(), placement)?;
    Ok(out)
}

/// Euclidean projection onto the `l_p` ball of radius `xi`.
///
/// `l_inf` clips every entry to `[-xi, xi]`; `l_2` rescales radially when the
/// norm exceeds `xi`.
pub fn project(v: &[f64], norm: NormOrder, xi: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    project_in_place(&mut out, norm, xi);
    out
}

pub(crate) fn project_in_place(v: &mut [f64], norm: NormOrder, xi: f64) {
    match norm {
        NormOrder::Inf => v.iter_mut().for_each(|x| *x = x.clamp(-xi, xi)),
        NormOrder::L2 => {
            let n = NormOrder::L2.norm(v);
            if n > xi {
                let s = xi / n;
                v.iter_mut().for_each(|x| *x *= s);
                // rounding can leave the rescaled norm a hair above xi
                while NormOrder::L2.norm(v) > xi {
                    v.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
                }
            }
        }
    }
}

/// Regularizer added to the TLM objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    #[default]
    None,
    L1,
    L2,
}

pub fn constraint_penalty(v: &[f64], kind: Constraint) -> f64 {
    match kind {
        Constraint::None => 0.0,
        Constraint::L1 => v.iter().map(|x| x.abs()).sum(),
        Constraint::L2 => v.iter().map(|x| x * x).sum(),
    }
}

/// Gradient of [`constraint_penalty`] (the L1 subgradient is 0 at 0).
pub fn constraint_gradient(v: &[f64], kind: Constraint) -> Vec<f64> {
    match kind {
        Constraint::None => vec![0.0; v.len()],
        Constraint::L1 => v
            .iter()
            .map(|&x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 })
            .collect(),
        Constraint::L2 => v.iter().map(|x| 2.0 * x).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linf_clip() {
        assert_eq!(project(&[0.5, -0.1, 0.3], NormOrder::Inf, 0.2), vec![0.2, -0.1, 0.2]);
    }

    #[test]
    fn l2_radial_scale() {
        let v = [0.24, 0.32]; // norm 0.4
        let p = project(&v, NormOrder::L2, 0.2);
        assert!((p[0] - 0.12).abs() < 1e-15 && (p[1] - 0.16).abs() < 1e-15);
        assert!(NormOrder::L2.norm(&p) <= 0.2);
    }

    #[test]
    fn inside_ball_unchanged() {
        let v = [0.05, -0.1];
        assert_eq!(project(&v, NormOrder::Inf, 0.2), v.to_vec());
        assert_eq!(project(&v, NormOrder::L2, 0.2), v.to_vec());
    }

    #[test]
    fn penalties() {
        let v = [0.1, -0.2];
        assert!((constraint_penalty(&v, Constraint::L1) - 0.3).abs() < 1e-15);
        assert!((constraint_penalty(&v, Constraint::L2) - 0.05).abs() < 1e-15);
        for k in [Constraint::None, Constraint::L1, Constraint::L2] {
            assert_eq!(constraint_penalty(&[0.0; 3], k), 0.0);
        }
        assert_eq!(constraint_gradient(&v, Constraint::L1), vec![1.0, -1.0]);
    }

    fn trial() -> TrialMatrix {
        TrialMatrix::new(3, 8, (0..24).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn zero_uap_is_identity() {
        let u = Uap::zeros(UapMode::Full, 3, 8, 0.2, NormOrder::Inf).unwrap();
        assert_eq!(apply_uap(&trial(), &u, None).unwrap(), trial());
    }

    #[test]
    fn channel_invariant_broadcast() {
        let row: Vec<f64> = (0..8).map(|i| 0.01 * i as f64).collect();
        let u = Uap::new(UapMode::ChannelInvariant, 1, 8, row.clone(), 0.2, NormOrder::Inf).unwrap();
        let out = apply_uap(&trial(), &u, None).unwrap();
        for c in 0..3 {
            for t in 0..8 {
                assert!((out.get(c, t) - trial().get(c, t) - row[t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mini_block_support() {
        let u = Uap::new(UapMode::Mini, 2, 4, vec![0.1; 8], 0.2, NormOrder::Inf).unwrap();
        let out = apply_uap(&trial(), &u, Some(Placement::new(1, 3))).unwrap();
        let changed = out.as_slice().iter().zip(trial().as_slice()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 8);
        assert!(out.get(1, 3) != trial().get(1, 3) && out.get(2, 6) != trial().get(2, 6));
        assert!(apply_uap(&trial(), &u, Some(Placement::new(2, 0))).is_err());
        assert!(apply_uap(&trial(), &u, None).is_err());
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_bounded(
            v in prop::collection::vec(-5.0f64..5.0, 1..30),
            xi in 0.01f64..2.0,
        ) {
            for norm in [NormOrder::Inf, NormOrder::L2] {
                let p = project(&v, norm, xi);
                prop_assert!(norm.norm(&p) <= xi + 1e-9);
                prop_assert_eq!(project(&p, norm, xi), p);
            }
        }

        #[test]
        fn penalty_even(v in prop::collection::vec(-3.0f64..3.0, 1..20)) {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            for k in [Constraint::None, Constraint::L1, Constraint::L2] {
                prop_assert_eq!(constraint_penalty(&v, k), constraint_penalty(&neg, k));
            }
        }

        #[test]
        fn full_mode_commutes_with_vectorization(
            x in prop::collection::vec(-3.0f64..3.0, 12),
            v in prop::collection::vec(-0.2f64..0.2, 12),
        ) {
            let t = TrialMatrix::new(3, 4, x.clone()).unwrap();
            let u = Uap::new(UapMode::Full, 3, 4, v.clone(), 0.2, NormOrder::Inf).unwrap();
            let out = apply_uap(&t, &u, None).unwrap();
            let expect: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert_eq!(out.as_slice(), expect.as_slice());
        }
    }
}
