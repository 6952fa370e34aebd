//! Datasets: MNIST IDX ingestion, deterministic splits and synthetic sets.

pub mod idx;
pub mod manifest;
mod synthetic;

use std::path::Path;

use ndarray::{s, Array2, ArrayView2};

pub use idx::{
    encode_idx_images, encode_idx_labels, load_idx_images, load_idx_labels, parse_idx_images,
    parse_idx_labels, IdxImages,
};
pub use synthetic::{synthetic, SyntheticKind};

use crate::error::{Error, Result};

/// Standard MNIST file names inside a data directory.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// Inputs in `[0, 1]` with integer labels in `[0, classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::Dimension("dataset has no rows".into()));
        }
        if inputs.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} input rows vs {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        if let Some(row) = labels.iter().position(|l| *l >= classes) {
            return Err(Error::LabelRange {
                row,
                label: labels[row],
                classes,
            });
        }
        if let Some(v) = inputs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("input value {v} outside [0, 1]")));
        }
        Ok(Self {
            inputs,
            labels,
            classes,
        })
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.inputs.ncols()
    }

    /// Rows `[start, end)` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Dimension(format!(
                "slice {start}..{end} of {} rows",
                self.len()
            )));
        }
        Ok(Self {
            inputs: self.inputs.slice(s![start..end, ..]).to_owned(),
            labels: self.labels[start..end].to_vec(),
            classes: self.classes,
        })
    }
}

/// Disjoint train, validation and test sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn new(train: Dataset, validation: Dataset, test: Dataset) -> Result<Self> {
        let (f, c) = (train.features(), train.classes());
        for (name, ds) in [("validation", &validation), ("test", &test)] {
            if ds.features() != f || ds.classes() != c {
                return Err(Error::Dimension(format!(
                    "{name} split has {} features / {} classes, train has {f} / {c}",
                    ds.features(),
                    ds.classes()
                )));
            }
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }

    /// Carves `validation` and `test` rows off the end of `data`, in that
    /// order, leaving the leading rows for training.
    pub fn from_tail(data: &Dataset, validation: usize, test: usize) -> Result<Self> {
        let n = data.len();
        if validation == 0 || test == 0 || validation + test >= n {
            return Err(Error::Config(format!(
                "cannot split {n} rows into validation {validation} and test {test} with a nonempty train set"
            )));
        }
        let train_end = n - validation - test;
        Self::new(
            data.slice(0, train_end)?,
            data.slice(train_end, n - test)?,
            data.slice(n - test, n)?,
        )
    }
}

fn to_dataset(images: &IdxImages, labels: &[u8], range: std::ops::Range<usize>) -> Result<Dataset> {
    let width = images.pixels_per_image();
    let pixels = &images.pixels[range.start * width..range.end * width];
    let inputs = Array2::from_shape_vec(
        (range.len(), width),
        pixels.iter().map(|p| f64::from(*p) / 255.0).collect(),
    )
    .map_err(|e| Error::Dimension(e.to_string()))?;
    let labels = labels[range].iter().map(|l| usize::from(*l)).collect();
    Dataset::new(inputs, labels, 10)
}

/// MNIST splits: the last `validation_count` training rows (file order)
/// become the validation set. Pixels are divided by 255.
pub fn mnist_splits(
    train_images: &IdxImages,
    train_labels: &[u8],
    test_images: &IdxImages,
    test_labels: &[u8],
    validation_count: usize,
) -> Result<Splits> {
    for (name, images, labels) in [
        ("training", train_images, train_labels),
        ("test", test_images, test_labels),
    ] {
        if images.count != labels.len() {
            return Err(Error::Dimension(format!(
                "{name} set has {} images but {} labels",
                images.count,
                labels.len()
            )));
        }
    }
    let n = train_images.count;
    if validation_count == 0 || validation_count >= n {
        return Err(Error::Config(format!(
            "validation_count must be in 1..{n}, got {validation_count}"
        )));
    }
    let cut = n - validation_count;
    Splits::new(
        to_dataset(train_images, train_labels, 0..cut)?,
        to_dataset(train_images, train_labels, cut..n)?,
        to_dataset(test_images, test_labels, 0..test_images.count)?,
    )
}

/// Loads the four standard MNIST files from `dir` and splits them.
pub fn load_mnist_dir(dir: &Path, validation_count: usize) -> Result<Splits> {
    let [ti, tl, si, sl] = MNIST_FILES.map(|f| dir.join(f));
    mnist_splits(
        &load_idx_images(&ti)?,
        &load_idx_labels(&tl)?,
        &load_idx_images(&si)?,
        &load_idx_labels(&sl)?,
        validation_count,
    )
}
