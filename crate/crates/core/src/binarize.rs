//! Grey-scale and binary images, adaptive Gaussian binarization, and the
//! 2D Noisy XOR generator.

use rand::seq::index;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// 8-bit grey-scale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Binary image of `layers` planes; bit `(x, y, z)` is stored at
/// `z * width * height + y * width + x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitImage {
    width: usize,
    height: usize,
    layers: usize,
    bits: Vec<bool>,
}

impl BitImage {
    pub fn new(width: usize, height: usize, layers: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || layers == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if bits.len() != width * height * layers {
            return Err(Error::InvalidConfig(format!(
                "{} bits for a {width}x{height}x{layers} image",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            layers,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, layers: usize, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height * layers);
        for z in 0..layers {
            for y in 0..height {
                for x in 0..width {
                    bits.push(f(x, y, z));
                }
            }
        }
        Self::new(width, height, layers, bits).expect("positive dimensions")
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

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.layers)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        debug_assert!(x < self.width && y < self.height && z < self.layers);
        self.bits[(z * self.height + y) * self.width + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Appends constant bits after the existing ones, turning the image into
    /// a single `1 x (n + extra)` row. Handy for feeding a classic machine.
    pub fn flatten_with(&self, extra: &[bool]) -> BitImage {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(extra);
        let n = bits.len();
        BitImage::new(n, 1, 1, bits).expect("non-empty")
    }
}

/// Standard deviation used for a `window`-wide Gaussian when none is given.
pub fn gaussian_sigma(window: usize) -> f64 {
    0.3 * ((window as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalised 1-D Gaussian kernel of odd length `window`.
pub fn gaussian_kernel(window: usize) -> Vec<f64> {
    let sigma = gaussian_sigma(window);
    let half = (window / 2) as f64;
    let raw: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|g| g / sum).collect()
}

/// Gaussian-weighted local mean of every pixel with edge replication.
pub fn gaussian_local_mean(img: &GrayImage, window: usize) -> Vec<f64> {
    let kernel = gaussian_kernel(window);
    let half = (window / 2) as isize;
    let (w, h) = (img.width as isize, img.height as isize);
    let clamp = |v: isize, hi: isize| v.clamp(0, hi - 1) as usize;

    let mut horizontal = vec![0f64; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, g) in kernel.iter().enumerate() {
                let sx = clamp(x + i as isize - half, w);
                acc += g * f64::from(img.pixels[y as usize * img.width + sx]);
            }
            horizontal[y as usize * img.width + x as usize] = acc;
        }
    }
    let mut out = vec![0f64; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, g) in kernel.iter().enumerate() {
                let sy = clamp(y + i as isize - half, h);
                acc += g * horizontal[sy * img.width + x as usize];
            }
            out[y as usize * img.width + x as usize] = acc;
        }
    }
    out
}

/// Pixel becomes 1 iff its intensity exceeds the Gaussian-weighted mean of
/// its `window x window` neighbourhood minus `offset`.
pub fn adaptive_gaussian_binarize(img: &GrayImage, window: usize, offset: i32) -> Result<BitImage> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "binarization window must be odd and >= 3, got {window}"
        )));
    }
    let mean = gaussian_local_mean(img, window);
    let bits = img
        .pixels
        .iter()
        .zip(&mean)
        .map(|(&p, &m)| f64::from(p) > m - f64::from(offset))
        .collect();
    BitImage::new(img.width, img.height, 1, bits)
}

/// Side of the Noisy XOR images.
pub const XOR_SIDE: usize = 4;

/// Upper-right 2x2 patterns, read row-major, that mean class 1.
pub const XOR_DIAGONALS: [[bool; 4]; 2] = [[true, false, false, true], [false, true, true, false]];

/// Horizontal and vertical line patterns that mean class 0.
pub const XOR_LINES: [[bool; 4]; 4] = [
    [true, true, false, false],
    [false, false, true, true],
    [true, false, true, false],
    [false, true, false, true],
];

/// Label implied by the upper-right 2x2 patch, if it holds a valid pattern.
pub fn xor_patch_label(image: &BitImage) -> Option<usize> {
    let s = image.width();
    let patch = [
        image.get(s - 2, 0, 0),
        image.get(s - 1, 0, 0),
        image.get(s - 2, 1, 0),
        image.get(s - 1, 1, 0),
    ];
    if XOR_DIAGONALS.contains(&patch) {
        Some(1)
    } else if XOR_LINES.contains(&patch) {
        Some(0)
    } else {
        None
    }
}

fn xor_example<R: Rng + ?Sized>(rng: &mut R) -> (BitImage, usize) {
    let mut bits: Vec<bool> = (0..XOR_SIDE * XOR_SIDE).map(|_| rng.gen()).collect();
    let label = usize::from(rng.gen::<bool>());
    let pattern = if label == 1 {
        XOR_DIAGONALS[rng.gen_range(0..XOR_DIAGONALS.len())]
    } else {
        XOR_LINES[rng.gen_range(0..XOR_LINES.len())]
    };
    let s = XOR_SIDE;
    bits[s - 2] = pattern[0];
    bits[s - 1] = pattern[1];
    bits[s + s - 2] = pattern[2];
    bits[s + s - 1] = pattern[3];
    (BitImage::new(s, s, 1, bits).expect("valid dims"), label)
}

/// Train / test split of the 2D Noisy XOR problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyXor {
    pub train: Dataset,
    pub test: Dataset,
}

/// 4x4 random images whose upper-right 2x2 patch decides the class: a
/// diagonal means 1, a horizontal or vertical line means 0. Classes are
/// drawn with equal probability. Exactly `round(noise_rate * n_train)`
/// training labels are inverted; test labels are clean.
pub fn generate_noisy_xor(n_train: usize, n_test: usize, noise_rate: f64, seed: u64) -> Result<NoisyXor> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(Error::InvalidConfig(format!("noise rate {noise_rate} outside [0, 1]")));
    }
    let mut rng = seeded_rng(seed);
    let (train_images, mut train_labels): (Vec<_>, Vec<_>) = (0..n_train).map(|_| xor_example(&mut rng)).unzip();
    let flips = (noise_rate * n_train as f64).round() as usize;
    for i in index::sample(&mut rng, n_train, flips.min(n_train)) {
        train_labels[i] = 1 - train_labels[i];
    }
    let (test_images, test_labels): (Vec<_>, Vec<_>) = (0..n_test).map(|_| xor_example(&mut rng)).unzip();
    Ok(NoisyXor {
        train: Dataset::new(XOR_SIDE, XOR_SIDE, 1, train_images, train_labels)?,
        test: Dataset::new(XOR_SIDE, XOR_SIDE, 1, test_images, test_labels)?,
    })
}
