use crate::binarize::BitImage;
use crate::error::{Error, Result};

/// Labelled binary images sharing one geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    width: usize,
    height: usize,
    layers: usize,
    images: Vec<BitImage>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(width: usize, height: usize, layers: usize, images: Vec<BitImage>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if let Some(bad) = images.iter().find(|i| i.dims() != (width, height, layers)) {
            return Err(Error::DimensionMismatch {
                expected: (width, height, layers),
                found: bad.dims(),
            });
        }
        Ok(Self {
            width,
            height,
            layers,
            images,
            labels,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.layers)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[BitImage] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitImage, &usize)> {
        self.images.iter().zip(&self.labels)
    }

    /// One more than the largest label; 0 for an empty set.
    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    /// First `n` examples (or all of them).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            width: self.width,
            height: self.height,
            layers: self.layers,
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Applies `f` to every image, e.g. to append constant bits.
    pub fn map_images(&self, f: impl Fn(&BitImage) -> BitImage) -> Result<Dataset> {
        let images: Vec<BitImage> = self.images.iter().map(f).collect();
        let dims = images.first().map_or(self.dims(), BitImage::dims);
        Dataset::new(dims.0, dims.1, dims.2, images, self.labels.clone())
    }
}
