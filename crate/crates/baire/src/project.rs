//! Seeded random projection of d-dimensional records to scalars.
//!
//! Multidimensional data enters the (unidimensional) digit encoding through a
//! dot product with random unit axes; with several axes the scalar is the
//! mean of the per-axis dot products. Axis components are drawn from a
//! ChaCha8 stream (`rand_chacha`, seeded via `seed_from_u64`) shaped by
//! `rand_distr`'s `StandardNormal` and then normalized, so a seed pins the
//! axes down exactly. The spec file additionally records every axis component
//! to 17 significant digits, which is what other implementations should
//! consume instead of re-deriving the generator.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::NormalizationBounds;
use crate::error::{Error, Result};

const MAGIC: &str = "PROJ1";

/// Seeded projection axes plus the normalization bounds fitted on projected
/// training values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    dim: usize,
    seed: u64,
    axes: Vec<Vec<f64>>,
    bounds: Option<NormalizationBounds>,
}

impl ProjectionSpec {
    /// Draws `axis_count` random unit axes of dimension `dim` from the seed.
    pub fn random(dim: usize, axis_count: usize, seed: u64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::ParameterTooSmall("dimension"));
        }
        if axis_count < 1 {
            return Err(Error::ParameterTooSmall("axis count"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes = (0..axis_count)
            .map(|_| loop {
                let axis: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 0.0 {
                    break axis.iter().map(|c| c / norm).collect();
                }
            })
            .collect();
        Ok(Self {
            dim,
            seed,
            axes,
            bounds: None,
        })
    }

    /// The identity projection for 1-dimensional records: a single `+1` axis,
    /// under which the pipeline reduces to plain scalar encoding.
    pub fn identity(seed: u64) -> Self {
        Self {
            dim: 1,
            seed,
            axes: vec![vec![1.0]],
            bounds: None,
        }
    }

    /// Wraps explicit axes (all of one dimension, unit norm).
    pub fn from_axes(axes: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let dim = axes.first().map(Vec::len).unwrap_or(0);
        if dim < 1 || axes.is_empty() {
            return Err(Error::ParameterTooSmall("axis count"));
        }
        for axis in &axes {
            if axis.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: axis.len(),
                });
            }
            let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::NonFinite(norm));
            }
        }
        Ok(Self {
            dim,
            seed,
            axes,
            bounds: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis_count(&self) -> usize {
        self.axes.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn bounds(&self) -> Option<&NormalizationBounds> {
        self.bounds.as_ref()
    }

    /// Projects one record: the mean over axes of `axis . record`.
    pub fn project(&self, record: &[f64]) -> Result<f64> {
        if record.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: record.len(),
            });
        }
        let sum: f64 = self
            .axes
            .iter()
            .map(|axis| axis.iter().zip(record).map(|(a, r)| a * r).sum::<f64>())
            .sum();
        Ok(sum / self.axes.len() as f64)
    }

    /// Fits normalization bounds as the min/max of `values`. Refitting on the
    /// same values is a no-op.
    pub fn fit_bounds(&mut self, values: &[f64]) -> Result<()> {
        self.bounds = Some(NormalizationBounds::fit(values)?);
        Ok(())
    }

    /// Installs explicit bounds, e.g. the identity map over `[0, 1]` for
    /// data that already lives in the unit interval.
    pub fn set_bounds(&mut self, bounds: NormalizationBounds) {
        self.bounds = Some(bounds);
    }

    fn fitted_bounds(&self) -> Result<&NormalizationBounds> {
        self.bounds.as_ref().ok_or(Error::BoundsNotFitted)
    }

    /// Projects and normalizes a record into `[0, 1]`, clamping to the fitted
    /// bounds; the flag reports whether clamping occurred.
    pub fn unit_scalar(&self, record: &[f64]) -> Result<(f64, bool)> {
        let projected = self.project(record)?;
        self.fitted_bounds()?.apply_clamped(projected)
    }

    /// Serializes to the v1 text format: a header
    /// `PROJ1 <d> <axis_count> <seed> <lo> <hi>` followed by one line of `d`
    /// components per axis, every float to 17 significant digits.
    pub fn to_file_string(&self) -> Result<String> {
        let bounds = self.fitted_bounds()?;
        let mut text = String::new();
        let _ = writeln!(
            text,
            "{MAGIC} {} {} {} {:.16e} {:.16e}",
            self.dim,
            self.axes.len(),
            self.seed,
            bounds.lo(),
            bounds.hi()
        );
        for axis in &self.axes {
            let line: Vec<String> = axis.iter().map(|c| format!("{c:.16e}")).collect();
            let _ = writeln!(text, "{}", line.join(" "));
        }
        Ok(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_file_string()?)?;
        Ok(())
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Corrupt("empty projection file".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.first().copied() != Some(MAGIC) {
            return Err(Error::FormatVersion {
                expected: MAGIC,
                found: fields.first().unwrap_or(&"").to_string(),
            });
        }
        let [_, dim, axis_count, seed, lo, hi] = fields[..] else {
            return Err(Error::Corrupt(format!("malformed header {header:?}")));
        };
        let parse_err = |what: &str, token: &str| Error::Corrupt(format!("bad {what} {token:?}"));
        let dim: usize = dim.parse().map_err(|_| parse_err("dimension", dim))?;
        let axis_count: usize = axis_count
            .parse()
            .map_err(|_| parse_err("axis count", axis_count))?;
        let seed: u64 = seed.parse().map_err(|_| parse_err("seed", seed))?;
        let lo: f64 = lo.parse().map_err(|_| parse_err("lower bound", lo))?;
        let hi: f64 = hi.parse().map_err(|_| parse_err("upper bound", hi))?;
        if dim < 1 || axis_count < 1 {
            return Err(Error::Corrupt(format!("unusable header {header:?}")));
        }
        let mut axes = Vec::with_capacity(axis_count);
        for _ in 0..axis_count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Corrupt("missing axis line".into()))?;
            let axis = line
                .split(' ')
                .map(|token| {
                    token
                        .parse::<f64>()
                        .map_err(|_| parse_err("axis component", token))
                })
                .collect::<Result<Vec<f64>>>()?;
            if axis.len() != dim {
                return Err(Error::Corrupt(format!(
                    "axis has {} components, expected {dim}",
                    axis.len()
                )));
            }
            axes.push(axis);
        }
        Ok(Self {
            dim,
            seed,
            axes,
            bounds: Some(
                NormalizationBounds::new(lo, hi)
                    .map_err(|e| Error::Corrupt(format!("unusable bounds: {e}")))?,
            ),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Corrupt("file is not valid UTF-8".into()))?;
        Self::from_file_string(&text)
    }
}
