//! Random-feature mean embeddings of observational samples.
//!
//! For each bandwidth the featurizer holds three banks sharing one phase
//! vector `b`: a marginal bank for the first coordinate (`w^x`), one for the
//! second (`w^y`), and a joint bank whose frequency columns are the stacked
//! marginal frequencies (plus a fresh block for the context coordinate in the
//! trivariate case). A sample maps to the concatenation, over bandwidths, of
//!
//! ```text
//! mean_i cos(w^x_k x_i + b_k),  mean_i cos(w^y_k y_i + b_k),  mean_i cos(⟨w_k, p_i⟩ + b_k)
//! ```
//!
//! The embeddings are bare cosine means, without the `sqrt(2/m)` factor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Error, Result};
use crate::rff::{sample_bank, FeatureBank};
use crate::seed;
use crate::synth::ObservationalSample;

/// Bandwidths used when none are configured.
pub const DEFAULT_BANDWIDTHS: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];
/// Features per block used when none is configured.
pub const DEFAULT_BLOCK_SIZE: usize = 500;

/// Parameters that fully determine a [`FeaturizerBank`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerSpec {
    pub block_size: usize,
    pub bandwidths: Vec<f64>,
    pub seed: u64,
    /// Columns per sample: 2 for pairs, 3 for triples.
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthBlock {
    pub bank_x: FeatureBank,
    pub bank_y: FeatureBank,
    pub bank_joint: FeatureBank,
}

/// Frozen random banks for every bandwidth. Serialized by its
/// [`FeaturizerSpec`] and rebuilt from the seed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeaturizerSpec", into = "FeaturizerSpec")]
pub struct FeaturizerBank {
    spec: FeaturizerSpec,
    blocks: Vec<BandwidthBlock>,
}

impl TryFrom<FeaturizerSpec> for FeaturizerBank {
    type Error = Error;

    fn try_from(spec: FeaturizerSpec) -> Result<Self> {
        FeaturizerBank::build(spec)
    }
}

impl From<FeaturizerBank> for FeaturizerSpec {
    fn from(fb: FeaturizerBank) -> Self {
        fb.spec
    }
}

fn with_phases(bank: FeatureBank, phases: &DVector<f64>) -> Result<FeatureBank> {
    let (bw, s) = (bank.bandwidth(), bank.seed());
    FeatureBank::from_parts(bank.frequencies().clone(), phases.clone(), bw, s)
}

impl FeaturizerBank {
    pub fn build(spec: FeaturizerSpec) -> Result<Self> {
        if spec.block_size == 0 {
            return Err(arg_err("block size must be positive"));
        }
        if spec.bandwidths.is_empty() {
            return Err(arg_err("featurizer needs at least one bandwidth"));
        }
        if let Some(g) = spec.bandwidths.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(arg_err(format!("bandwidths must be positive, got {g}")));
        }
        if !(2..=3).contains(&spec.arity) {
            return Err(Error::UnsupportedArity(format!("featurizer arity must be 2 or 3, got {}", spec.arity)));
        }
        let m = spec.block_size;
        let mut blocks = Vec::with_capacity(spec.bandwidths.len());
        for (i, &gamma) in spec.bandwidths.iter().enumerate() {
            let base = 4 * i as u64;
            let bank_x = sample_bank(1, m, gamma, seed::derive(spec.seed, base))?;
            let phases = bank_x.phases().clone();
            let bank_y = with_phases(sample_bank(1, m, gamma, seed::derive(spec.seed, base + 1))?, &phases)?;
            let mut stacked = DMatrix::zeros(spec.arity, m);
            stacked.row_mut(0).copy_from(&bank_x.frequencies().row(0));
            stacked.row_mut(1).copy_from(&bank_y.frequencies().row(0));
            if spec.arity == 3 {
                let ctx = sample_bank(1, m, gamma, seed::derive(spec.seed, base + 2))?;
                stacked.row_mut(2).copy_from(&ctx.frequencies().row(0));
            }
            let bank_joint = FeatureBank::from_parts(stacked, phases, gamma, seed::derive(spec.seed, base + 3))?;
            blocks.push(BandwidthBlock { bank_x, bank_y, bank_joint });
        }
        Ok(Self { spec, blocks })
    }

    pub fn spec(&self) -> &FeaturizerSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[BandwidthBlock] {
        &self.blocks
    }

    pub fn arity(&self) -> usize {
        self.spec.arity
    }

    pub fn block_size(&self) -> usize {
        self.spec.block_size
    }

    /// Length of a feature vector: `3 · m · |bandwidths|`.
    pub fn output_dim(&self) -> usize {
        3 * self.spec.block_size * self.blocks.len()
    }

    /// The bank with the two marginal frequency sets exchanged (bivariate only).
    pub fn swapped(&self) -> Result<Self> {
        if self.arity() != 2 {
            return Err(Error::UnsupportedArity("only bivariate featurizers can be swapped".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let joint = b.bank_joint.frequencies().select_rows([1usize, 0].iter());
                let bank_joint =
                    FeatureBank::from_parts(joint, b.bank_joint.phases().clone(), b.bank_joint.bandwidth(), b.bank_joint.seed())?;
                Ok(BandwidthBlock { bank_x: b.bank_y.clone(), bank_y: b.bank_x.clone(), bank_joint })
            })
            .collect::<Result<_>>()?;
        Ok(Self { spec: self.spec.clone(), blocks })
    }

    /// Marginal embedding of one column through whichever marginal bank
    /// `which` selects (0 for `w^x`, 1 for `w^y`), concatenated over bandwidths.
    fn marginal(&self, column: &[f64], which: usize) -> Vec<f64> {
        let m = self.spec.block_size;
        let mut out = Vec::with_capacity(m * self.blocks.len());
        for block in &self.blocks {
            let bank = if which == 0 { &block.bank_x } else { &block.bank_y };
            let w = bank.frequencies().row(0);
            let b = bank.phases();
            out.extend((0..m).map(|k| cos_mean(column, |x| w[k] * x + b[k])));
        }
        out
    }

    fn joint(&self, points: &DMatrix<f64>) -> Vec<f64> {
        let m = self.spec.block_size;
        let n = points.nrows();
        let d = points.ncols();
        let mut out = Vec::with_capacity(m * self.blocks.len());
        for block in &self.blocks {
            let proj = points * block.bank_joint.frequencies();
            let b = block.bank_joint.phases();
            for k in 0..m {
                let col = proj.column(k);
                out.push(col.iter().map(|v| (v + b[k]).cos()).sum::<f64>() / n as f64);
            }
            debug_assert_eq!(block.bank_joint.input_dim(), d);
        }
        out
    }

    /// Assembles `[x-block, y-block, joint-block]` per bandwidth from
    /// precomputed marginal embeddings.
    fn assemble(&self, ex: &[f64], ey: &[f64], joint: &[f64]) -> Vec<f64> {
        let m = self.spec.block_size;
        let mut out = Vec::with_capacity(self.output_dim());
        for i in 0..self.blocks.len() {
            let r = i * m..(i + 1) * m;
            out.extend_from_slice(&ex[r.clone()]);
            out.extend_from_slice(&ey[r.clone()]);
            out.extend_from_slice(&joint[r]);
        }
        out
    }

    /// Features of raw points in the featurizer's column layout. No
    /// standardization check.
    pub fn embed_points(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        if points.ncols() != self.arity() {
            return Err(shape_err(format!("sample has {} columns, featurizer expects {}", points.ncols(), self.arity())));
        }
        if points.nrows() == 0 {
            return Err(arg_err("cannot featurize an empty sample"));
        }
        let ex = self.marginal(points.column(0).as_slice(), 0);
        let ey = self.marginal(points.column(1).as_slice(), 1);
        Ok(self.assemble(&ex, &ey, &self.joint(points)))
    }

    /// Features of `points` when the marginal embeddings of its first two
    /// columns are already known (the trivariate scorer reuses them).
    pub(crate) fn embed_with_marginals(&self, ex: &[f64], ey: &[f64], points: &DMatrix<f64>) -> Vec<f64> {
        self.assemble(ex, ey, &self.joint(points))
    }

    /// Marginal embedding of `column` placed in slot `which` (0 or 1).
    pub(crate) fn marginal_embedding(&self, column: &[f64], which: usize) -> Vec<f64> {
        self.marginal(column, which)
    }
}

fn cos_mean(column: &[f64], arg: impl Fn(f64) -> f64) -> f64 {
    column.iter().map(|x| arg(*x).cos()).sum::<f64>() / column.len() as f64
}

/// Bivariate featurizer with `block_size` features per block.
pub fn build_featurizer(block_size: usize, bandwidths: &[f64], seed: u64) -> Result<FeaturizerBank> {
    FeaturizerBank::build(FeaturizerSpec { block_size, bandwidths: bandwidths.to_vec(), seed, arity: 2 })
}

/// Trivariate featurizer: marginal blocks for the first two coordinates and a
/// joint block over all three.
pub fn build_trivariate_featurizer(block_size: usize, bandwidths: &[f64], seed: u64) -> Result<FeaturizerBank> {
    FeaturizerBank::build(FeaturizerSpec { block_size, bandwidths: bandwidths.to_vec(), seed, arity: 3 })
}

/// Feature vector of a standardized sample.
pub fn featurize(sample: &ObservationalSample, fb: &FeaturizerBank) -> Result<Vec<f64>> {
    if sample.points.ncols() != fb.arity() {
        return Err(shape_err(format!("sample has {} columns, featurizer expects {}", sample.points.ncols(), fb.arity())));
    }
    if !sample.is_standardized() {
        return Err(Error::Contract("sample must be standardized before featurization".into()));
    }
    fb.embed_points(&sample.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_pair, SampleLabel};

    #[test]
    fn default_dimension() {
        let fb = build_featurizer(DEFAULT_BLOCK_SIZE, &DEFAULT_BANDWIDTHS, 0).unwrap();
        assert_eq!(fb.output_dim(), 7500);
        let f = featurize(&random_pair(20, 1).unwrap(), &fb).unwrap();
        assert_eq!(f.len(), 7500);
        assert!(f.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn shared_phases_and_stacked_frequencies() {
        let fb = build_featurizer(16, &[0.1, 1.0], 3).unwrap();
        for b in fb.blocks() {
            assert_eq!(b.bank_x.phases(), b.bank_y.phases());
            assert_eq!(b.bank_x.phases(), b.bank_joint.phases());
            assert_eq!(b.bank_joint.frequencies().row(0), b.bank_x.frequencies().row(0));
            assert_eq!(b.bank_joint.frequencies().row(1), b.bank_y.frequencies().row(0));
        }
        assert_eq!(fb, build_featurizer(16, &[0.1, 1.0], 3).unwrap());
        let tri = build_trivariate_featurizer(16, &[0.1], 3).unwrap();
        assert_eq!(tri.blocks()[0].bank_joint.input_dim(), 3);
    }

    #[test]
    fn zero_point_gives_cosine_of_phase() {
        let fb = build_featurizer(8, &[1.0], 5).unwrap();
        let points = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let f = fb.embed_points(&points).unwrap();
        let b = fb.blocks()[0].bank_x.phases();
        for k in 0..8 {
            assert_eq!(f[k], b[k].cos());
        }
    }

    #[test]
    fn swap_permutes_blocks() {
        let fb = build_featurizer(12, &[0.5, 2.0], 8).unwrap();
        let s = random_pair(40, 2).unwrap();
        let f = featurize(&s, &fb).unwrap();
        let g = featurize(&s.swap().unwrap(), &fb.swapped().unwrap()).unwrap();
        for blk in 0..2 {
            let o = blk * 36;
            assert_eq!(&g[o..o + 12], &f[o + 12..o + 24]);
            assert_eq!(&g[o + 12..o + 24], &f[o..o + 12]);
            for k in 24..36 {
                assert!((g[o + k] - f[o + k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicating_points_leaves_features_unchanged() {
        let fb = build_featurizer(10, &[1.0], 1).unwrap();
        let s = random_pair(30, 4).unwrap();
        let doubled = DMatrix::from_fn(60, 2, |i, j| s.points[(i % 30, j)]);
        let d = ObservationalSample::new(doubled, SampleLabel::Unlabeled).unwrap();
        let a = featurize(&s, &fb).unwrap();
        let b = featurize(&d, &fb).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn unstandardized_input_is_refused() {
        let fb = build_featurizer(4, &[1.0], 1).unwrap();
        let raw = ObservationalSample::raw(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 5.0]), SampleLabel::Unlabeled);
        assert!(matches!(featurize(&raw, &fb), Err(Error::Contract(_))));
    }

    #[test]
    fn spec_round_trip_rebuilds_banks() {
        let fb = build_featurizer(6, &[0.3], 11).unwrap();
        let json = serde_json::to_string(&fb).unwrap();
        let back: FeaturizerBank = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fb);
    }
}
