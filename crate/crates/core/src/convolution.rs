//! Patch enumeration, position encoding and convolutional clause evaluation.
//!
//! A `W x W` filter visits `B_X * B_Y` patches, `B_X = ceil((X - W) / d) + 1`.
//! Each patch becomes a variable vector of its pixels (x fastest, then y,
//! then layer) followed by `B_X - 1` thermometer bits for its x origin and
//! `B_Y - 1` bits for its y origin. Position bit `t` is 1 iff the origin is
//! `<=` the `t`-th origin of that axis. The last origin is not a threshold:
//! its bit would always be 1.
//!
//! Patches are numbered row-major: `b = by * B_X + bx`.

use rand::Rng;

use crate::automata::{clause_eval, write_literals, EvalMode, LiteralVector};
use crate::binarize::BitImage;
use crate::bits;
use crate::error::{Error, Result};

/// Geometry of the patches a clause is evaluated on.
///
/// The classic (non-convolutional) machine is the special case of a single
/// patch covering the image with no position bits; see
/// [`PatchLayout::whole_image`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLayout {
    width: usize,
    height: usize,
    layers: usize,
    filter_width: usize,
    filter_height: usize,
    stride: usize,
    origins_x: Vec<usize>,
    origins_y: Vec<usize>,
    position_bits: bool,
}

/// Origins along one axis: `0, d, 2d, ...` with the last one clamped to
/// `len - filter`.
pub fn axis_origins(len: usize, filter: usize, stride: usize) -> Vec<usize> {
    assert!(filter <= len && stride >= 1 && filter >= 1);
    let span = len - filter;
    let count = span.div_ceil(stride) + 1;
    (0..count).map(|i| (i * stride).min(span)).collect()
}

impl PatchLayout {
    /// `W x W` filter with stride `d` over an `X x Y x Z` image.
    pub fn convolutional(width: usize, height: usize, layers: usize, filter: usize, stride: usize) -> Result<Self> {
        if width == 0 || height == 0 || layers == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be positive, got {width}x{height}x{layers}"
            )));
        }
        if filter == 0 || filter > width.min(height) {
            return Err(Error::InvalidConfig(format!(
                "filter size {filter} does not fit a {width}x{height} image"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidConfig("stride must be at least 1".into()));
        }
        Ok(Self {
            width,
            height,
            layers,
            filter_width: filter,
            filter_height: filter,
            stride,
            origins_x: axis_origins(width, filter, stride),
            origins_y: axis_origins(height, filter, stride),
            position_bits: true,
        })
    }

    /// One patch spanning the whole image, no position bits.
    pub fn whole_image(width: usize, height: usize, layers: usize) -> Result<Self> {
        if width == 0 || height == 0 || layers == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be positive, got {width}x{height}x{layers}"
            )));
        }
        Ok(Self {
            width,
            height,
            layers,
            filter_width: width,
            filter_height: height,
            stride: 1,
            origins_x: vec![0],
            origins_y: vec![0],
            position_bits: false,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn filter_width(&self) -> usize {
        self.filter_width
    }

    pub fn filter_height(&self) -> usize {
        self.filter_height
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn has_position_bits(&self) -> bool {
        self.position_bits
    }

    /// `B_X`.
    pub fn patches_x(&self) -> usize {
        self.origins_x.len()
    }

    /// `B_Y`.
    pub fn patches_y(&self) -> usize {
        self.origins_y.len()
    }

    /// `B = B_X * B_Y`.
    pub fn patch_count(&self) -> usize {
        self.origins_x.len() * self.origins_y.len()
    }

    pub fn origins_x(&self) -> &[usize] {
        &self.origins_x
    }

    pub fn origins_y(&self) -> &[usize] {
        &self.origins_y
    }

    /// Thresholds of the x position bits: every x origin but the last.
    pub fn thresholds_x(&self) -> &[usize] {
        thresholds(&self.origins_x, self.position_bits)
    }

    pub fn thresholds_y(&self) -> &[usize] {
        thresholds(&self.origins_y, self.position_bits)
    }

    pub fn pixel_variables(&self) -> usize {
        self.filter_width * self.filter_height * self.layers
    }

    pub fn position_variables(&self) -> usize {
        if self.position_bits {
            self.patches_x() + self.patches_y() - 2
        } else {
            0
        }
    }

    /// `o`, the number of input variables per patch.
    pub fn variables(&self) -> usize {
        self.pixel_variables() + self.position_variables()
    }

    pub fn literals(&self) -> usize {
        2 * self.variables()
    }

    pub fn words(&self) -> usize {
        bits::word_count(self.literals())
    }

    /// `(x, y)` origin of patch `b`.
    pub fn origin(&self, b: usize) -> (usize, usize) {
        assert!(b < self.patch_count(), "patch {b} out of range");
        let bx = self.patches_x();
        (self.origins_x[b % bx], self.origins_y[b / bx])
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.layers)
    }

    pub fn check_image(&self, image: &BitImage) -> Result<()> {
        if image.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: image.dims(),
            });
        }
        Ok(())
    }
}

fn thresholds(origins: &[usize], enabled: bool) -> &[usize] {
    if enabled {
        &origins[..origins.len() - 1]
    } else {
        &[]
    }
}

/// Thermometer code of `coord`: bit `t` is 1 iff `coord <= thresholds[t]`.
pub fn encode_position(coord: usize, thresholds: &[usize]) -> Vec<bool> {
    thresholds.iter().map(|&t| coord <= t).collect()
}

/// Input variables of one patch together with the patch it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedPatch {
    pub patch: usize,
    pub variables: Vec<bool>,
}

impl AugmentedPatch {
    pub fn literals(&self) -> LiteralVector {
        LiteralVector::from_variables(&self.variables)
    }
}

/// Appends the variables of patch `b` to `out`.
fn push_patch_variables(image: &BitImage, layout: &PatchLayout, b: usize, out: &mut Vec<bool>) {
    let (ox, oy) = layout.origin(b);
    for z in 0..layout.layers {
        for y in 0..layout.filter_height {
            for x in 0..layout.filter_width {
                out.push(image.get(ox + x, oy + y, z));
            }
        }
    }
    out.extend(layout.thresholds_x().iter().map(|&t| ox <= t));
    out.extend(layout.thresholds_y().iter().map(|&t| oy <= t));
}

/// Variables of patch `b` of `image`.
///
/// Panics if `b` is out of range or the image does not match the layout.
pub fn extract_patch(image: &BitImage, layout: &PatchLayout, b: usize) -> AugmentedPatch {
    assert_eq!(image.dims(), layout.dims(), "image does not match layout");
    assert!(b < layout.patch_count(), "patch {b} out of range");
    let mut variables = Vec::with_capacity(layout.variables());
    push_patch_variables(image, layout, b, &mut variables);
    AugmentedPatch { patch: b, variables }
}

/// Packed literal vectors of every patch of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchedImage {
    words: usize,
    patches: usize,
    data: Vec<u64>,
}

impl PatchedImage {
    pub fn new(image: &BitImage, layout: &PatchLayout) -> Result<Self> {
        layout.check_image(image)?;
        let words = layout.words();
        let patches = layout.patch_count();
        let mut data = vec![0u64; words * patches];
        let mut vars = Vec::with_capacity(layout.variables());
        for (b, chunk) in data.chunks_exact_mut(words).enumerate() {
            vars.clear();
            push_patch_variables(image, layout, b, &mut vars);
            write_literals(&vars, chunk);
        }
        Ok(Self { words, patches, data })
    }

    pub fn patch_count(&self) -> usize {
        self.patches
    }

    pub fn words(&self) -> usize {
        self.words
    }

    /// Packed literals of patch `b`.
    pub fn patch(&self, b: usize) -> &[u64] {
        &self.data[b * self.words..(b + 1) * self.words]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, u64> {
        self.data.chunks_exact(self.words)
    }
}

/// OR of the clause over all patches, stopping at the first match.
pub fn conv_clause_fires(include: &[u64], image: &PatchedImage, mode: EvalMode) -> bool {
    image.iter().any(|lits| clause_eval(include, lits, mode))
}

/// Clause output (OR over patches) and every patch that made it fire.
pub fn conv_clause_eval(include: &[u64], image: &PatchedImage, mode: EvalMode) -> (bool, Vec<usize>) {
    let mut matching = Vec::new();
    matching_patches_into(include, image, mode, &mut matching);
    (!matching.is_empty(), matching)
}

/// As [`conv_clause_eval`], reusing `out` for the matching patch list.
pub fn matching_patches_into(include: &[u64], image: &PatchedImage, mode: EvalMode, out: &mut Vec<usize>) {
    out.clear();
    out.extend(
        image
            .iter()
            .enumerate()
            .filter(|(_, lits)| clause_eval(include, lits, mode))
            .map(|(b, _)| b),
    );
}

/// Uniform pick among the patches that made a clause fire.
pub fn select_update_patch<R: Rng + ?Sized>(matching: &[usize], rng: &mut R) -> Option<usize> {
    if matching.is_empty() {
        None
    } else {
        Some(matching[rng.gen_range(0..matching.len())])
    }
}
