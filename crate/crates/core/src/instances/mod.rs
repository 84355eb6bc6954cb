//! Instance construction: synthetic random-square images with ℓ1 pixel
//! costs, MNIST ingestion, and the uniform counterexample instance.
//!
//! Every generator is a pure function of (seed, parameters); pixel
//! flattening is row-major everywhere so histograms and the cost matrix
//! index the same grid.

pub mod idx;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::rng::{Rng, GENERATOR_NAME};
use crate::types::{CostMatrix, Histogram};

pub use idx::{load_idx_images, load_idx_labels};

/// Noise floor added to zero MNIST pixels before normalization.
pub const MNIST_NOISE_FLOOR: f64 = 1e-6;

/// Square grayscale image with nonnegative intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    side: usize,
    intensities: Vec<f64>,
}

impl GrayImage {
    pub fn new(side: usize, intensities: Vec<f64>) -> Result<Self> {
        if side == 0 || intensities.len() != side * side {
            return Err(OtError::DimensionMismatch(format!(
                "image: {} intensities for side {side}",
                intensities.len()
            )));
        }
        if intensities.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(OtError::invalid(
                "image",
                "negative or non-finite intensity",
            ));
        }
        Ok(GrayImage { side, intensities })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }
}

/// Random image: background ~ U[0, 1), a uniformly placed axis-aligned
/// foreground square ~ U[0, 50) whose side is round(side·√fg_fraction).
///
/// Stream semantics (xoshiro256++ seeded with `seed`): two `below` draws for
/// the square's top-left corner (row, then column), then one uniform draw per
/// pixel in row-major order.
pub fn gen_synthetic_image(seed: u64, side: usize, fg_fraction: f64) -> Result<GrayImage> {
    if side < 2 {
        return Err(OtError::Domain(format!(
            "gen_synthetic_image: side = {side}, need at least 2"
        )));
    }
    if fg_fraction.is_nan() || fg_fraction <= 0.0 || fg_fraction > 1.0 {
        return Err(OtError::Domain(format!(
            "gen_synthetic_image: fg_fraction = {fg_fraction}, need (0, 1]"
        )));
    }
    let fg_side = ((side as f64) * fg_fraction.sqrt()).round() as usize;
    let fg_side = fg_side.clamp(1, side);
    let mut rng = Rng::seed_from_u64(seed);
    let row0 = rng.below(side - fg_side + 1);
    let col0 = rng.below(side - fg_side + 1);
    let mut intensities = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let in_fg = i >= row0 && i < row0 + fg_side && j >= col0 && j < col0 + fg_side;
            let hi = if in_fg { 50.0 } else { 1.0 };
            intensities.push(rng.uniform(0.0, hi));
        }
    }
    GrayImage::new(side, intensities)
}

/// Flattens row-major and normalizes to unit mass.
pub fn image_to_histogram(img: &GrayImage) -> Result<Histogram> {
    Histogram::normalized(img.intensities().to_vec())
}

/// MNIST preprocessing: zero pixels become 1e-6, then normalize; every
/// output entry is strictly positive.
pub fn mnist_histogram(img: &GrayImage) -> Result<Histogram> {
    let mass: Vec<f64> = img
        .intensities()
        .iter()
        .map(|&x| if x == 0.0 { MNIST_NOISE_FLOOR } else { x })
        .collect();
    Histogram::normalized(mass)
}

/// ℓ1 distances between pixel locations of a side×side grid, row-major:
/// C[(i₁,j₁),(i₂,j₂)] = |i₁−i₂| + |j₁−j₂|; ‖C‖_∞ = 2(side − 1).
pub fn l1_cost_matrix(side: usize) -> Result<CostMatrix> {
    if side == 0 {
        return Err(OtError::Domain("l1_cost_matrix: side = 0".into()));
    }
    let n = side * side;
    let mut entries = vec![0.0; n * n];
    for p in 0..n {
        let (i1, j1) = (p / side, p % side);
        for q in 0..n {
            let (i2, j2) = (q / side, q % side);
            entries[p * n + q] = (i1 as f64 - i2 as f64).abs() + (j1 as f64 - j2 as f64).abs();
        }
    }
    CostMatrix::new(entries, n)
}

/// What to build; `seed` semantics for pairs: image A uses child stream 0 of
/// the seed, image B child stream 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    SyntheticPair {
        side: usize,
        fg_fraction: f64,
        seed: u64,
    },
    MnistPair {
        images_path: String,
        index_a: usize,
        index_b: usize,
    },
    Uniform {
        n: usize,
    },
}

impl InstanceSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InstanceSpec::SyntheticPair { .. } => "synthetic_pair",
            InstanceSpec::MnistPair { .. } => "mnist_pair",
            InstanceSpec::Uniform { .. } => "uniform",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InstanceSpec::SyntheticPair { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Same spec with the seed replaced (used by benchmark seed sweeps).
    pub fn with_seed(&self, new_seed: u64) -> InstanceSpec {
        match self {
            InstanceSpec::SyntheticPair {
                side, fg_fraction, ..
            } => InstanceSpec::SyntheticPair {
                side: *side,
                fg_fraction: *fg_fraction,
                seed: new_seed,
            },
            other => other.clone(),
        }
    }
}

/// A fully built instance: (C, r, c) plus the spec that produced it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cost: CostMatrix,
    pub r: Histogram,
    pub c: Histogram,
    pub spec: InstanceSpec,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.cost.n()
    }
}

/// The Proposition-4.1 instance: C = 1·1ᵀ with uniform marginals.
pub fn uniform_instance(n: usize) -> Result<Instance> {
    if n < 2 {
        return Err(OtError::Domain(format!(
            "uniform_instance: n = {n}, need at least 2"
        )));
    }
    Ok(Instance {
        cost: CostMatrix::new(vec![1.0; n * n], n)?,
        r: Histogram::uniform(n),
        c: Histogram::uniform(n),
        spec: InstanceSpec::Uniform { n },
    })
}

/// Builds (C, r, c) from a spec; file-backed specs read from disk.
pub fn build_instance(spec: &InstanceSpec) -> Result<Instance> {
    match spec {
        InstanceSpec::SyntheticPair {
            side,
            fg_fraction,
            seed,
        } => {
            let img_a = gen_synthetic_image(Rng::child_seed(*seed, 0), *side, *fg_fraction)?;
            let img_b = gen_synthetic_image(Rng::child_seed(*seed, 1), *side, *fg_fraction)?;
            Ok(Instance {
                cost: l1_cost_matrix(*side)?,
                r: image_to_histogram(&img_a)?,
                c: image_to_histogram(&img_b)?,
                spec: spec.clone(),
            })
        }
        InstanceSpec::MnistPair {
            images_path,
            index_a,
            index_b,
        } => {
            let images = load_idx_images(images_path)?;
            let fetch = |idx: usize| -> Result<&GrayImage> {
                images.get(idx).ok_or_else(|| {
                    OtError::Domain(format!(
                        "mnist index {idx} out of range ({} images in {images_path})",
                        images.len()
                    ))
                })
            };
            let a = fetch(*index_a)?;
            let b = fetch(*index_b)?;
            Ok(Instance {
                cost: l1_cost_matrix(a.side())?,
                r: mnist_histogram(a)?,
                c: mnist_histogram(b)?,
                spec: spec.clone(),
            })
        }
        InstanceSpec::Uniform { n } => uniform_instance(*n),
    }
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    /// Row-major n×n cost entries.
    pub cost: Vec<f64>,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub meta: InstanceMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub generator: String,
}

impl Instance {
    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n(),
            cost: self.cost.as_slice().to_vec(),
            r: self.r.weights().to_vec(),
            c: self.c.weights().to_vec(),
            meta: InstanceMeta {
                kind: self.spec.kind_name().to_string(),
                seed: self.spec.seed(),
                params: serde_json::to_value(&self.spec).unwrap_or_default(),
                generator: GENERATOR_NAME.to_string(),
            },
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Instance> {
        let spec = serde_json::from_value::<InstanceSpec>(file.meta.params.clone())
            .unwrap_or(InstanceSpec::Uniform { n: file.n });
        Ok(Instance {
            cost: CostMatrix::new(file.cost, file.n)?,
            r: Histogram::new(file.r)?,
            c: Histogram::new(file.c)?,
            spec,
        })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(&self.to_file()).map_err(|e| OtError::Parse {
            offset: 0,
            message: e.to_string(),
        })?;
        std::fs::write(path, body).map_err(|e| OtError::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Instance> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| OtError::io(path, e))?;
        let file: InstanceFile = serde_json::from_str(&body).map_err(|e| OtError::Parse {
            offset: e.column(),
            message: format!("{path:?}: {e}"),
        })?;
        Instance::from_file(file)
    }
}
