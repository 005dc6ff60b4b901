//! Toy-scale feature pyramid: an FPN top-down pass (`C2..C5 → P2..P5`) and
//! the PA-FPN bottom-up augmentation (`P2..P5 → N2..N5`).
//!
//! Every operator is an explicit linear map so outputs can be checked exactly:
//! lateral 1×1 convs, 3×3 smoothing convs (padding 1), 3×3 stride-2
//! downsampling convs (padding 1), nearest-neighbour ×2 upsampling and
//! elementwise addition for fusion. No biases. Activation defaults to identity.
//!
//! ```text
//! top-down:   M5 = lat5(C5)            P5 = smooth5(M5)
//!             Mi = lati(Ci) + up(Mi+1) Pi = smoothi(Mi)      i = 4, 3, 2
//! bottom-up:  N2 = P2
//!             Ni+1 = bu_smoothi+1(down_i(Ni) + Pi+1)         i = 2, 3, 4
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pyramid levels handled, finest first.
pub const LEVELS: [u8; 4] = [2, 3, 4, 5];

#[derive(Debug, Error)]
pub enum PyramidError {
    #[error("shape mismatch at level {level}: {dimension} expected {expected}, found {found}")]
    ShapeMismatch {
        level: u8,
        dimension: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid pyramid: {0}")]
    Invalid(String),
    #[error("dump I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad dump header: {0}")]
    Header(String),
}

fn mismatch(level: u8, dimension: &'static str, expected: usize, found: usize) -> PyramidError {
    PyramidError::ShapeMismatch {
        level,
        dimension,
        expected,
        found,
    }
}

/// Dense `channels × height × width` tensor tagged with its pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub level: u8,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(level: u8, channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, PyramidError> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(PyramidError::Invalid(format!(
                "level {level}: dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(mismatch(level, "data length", expected, data.len()));
        }
        Ok(FeatureMap {
            level,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(level: u8, channels: usize, height: usize, width: usize) -> Self {
        FeatureMap {
            level,
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    fn add_assign(&mut self, other: &FeatureMap) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn with_level(mut self, level: u8) -> Self {
        self.level = level;
        self
    }

    /// Nearest-neighbour ×2 upsampling.
    pub fn upsample2(&self) -> FeatureMap {
        let (h, w) = (self.height * 2, self.width * 2);
        let mut out = FeatureMap::zeros(self.level.saturating_sub(1), self.channels, h, w);
        for c in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    out.data[(c * h + y) * w + x] = self.at(c, y / 2, x / 2);
                }
            }
        }
        out
    }

    fn apply(&mut self, act: Activation) {
        if act == Activation::Relu {
            for v in &mut self.data {
                *v = v.max(0.0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
}

/// Square-kernel 2-D convolution without bias; weights laid out
/// `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weights: Vec<f64>,
}

impl Conv2d {
    pub fn zeros(out_channels: usize, in_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Conv2d {
            out_channels,
            in_channels,
            kernel,
            stride,
            padding,
            weights: vec![0.0; out_channels * in_channels * kernel * kernel],
        }
    }

    fn seeded(
        rng: &mut impl Rng,
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let mut conv = Conv2d::zeros(out_channels, in_channels, kernel, stride, padding);
        for w in &mut conv.weights {
            *w = rng.gen_range(-0.1..=0.1);
        }
        conv
    }

    /// Kernel that copies channel `c` to channel `c` unchanged.
    pub fn identity(channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        let mut conv = Conv2d::zeros(channels, channels, kernel, stride, padding);
        let center = kernel / 2;
        for c in 0..channels {
            let idx = conv.index(c, c, center, center);
            conv.weights[idx] = 1.0;
        }
        conv
    }

    #[inline]
    pub fn index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * self.kernel + ky) * self.kernel + kx
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        let f = |n: usize| (n + 2 * self.padding - self.kernel) / self.stride + 1;
        (f(h), f(w))
    }

    /// Applies the convolution. Each output channel is computed by sliding
    /// every kernel tap over the valid output window and accumulating.
    pub fn forward(&self, input: &FeatureMap) -> FeatureMap {
        assert_eq!(input.channels, self.in_channels, "conv input channels");
        let (oh, ow) = self.output_size(input.height, input.width);
        let plane = oh * ow;
        let mut data = vec![0.0; self.out_channels * plane];
        let (ih, iw) = (input.height as isize, input.width as isize);
        let (s, p) = (self.stride as isize, self.padding as isize);

        data.par_chunks_mut(plane).enumerate().for_each(|(o, out)| {
            for i in 0..self.in_channels {
                let src = &input.data[i * input.height * input.width..(i + 1) * input.height * input.width];
                for ky in 0..self.kernel {
                    for kx in 0..self.kernel {
                        let w = self.weights[self.index(o, i, ky, kx)];
                        if w == 0.0 {
                            continue;
                        }
                        for oy in 0..oh {
                            let iy = oy as isize * s + ky as isize - p;
                            if iy < 0 || iy >= ih {
                                continue;
                            }
                            let row = &src[iy as usize * input.width..(iy as usize + 1) * input.width];
                            let dst = &mut out[oy * ow..(oy + 1) * ow];
                            for (ox, d) in dst.iter_mut().enumerate() {
                                let ix = ox as isize * s + kx as isize - p;
                                if ix >= 0 && ix < iw {
                                    *d += w * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        });
        FeatureMap {
            level: input.level,
            channels: self.out_channels,
            height: oh,
            width: ow,
            data,
        }
    }
}

/// All pyramid kernels. Indices run over levels 2..5 (`lateral`, `smooth`)
/// or over the three bottom-up steps 2→3, 3→4, 4→5 (`downsample`,
/// `bottom_up_smooth`).
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidWeights {
    pub seed: Option<u64>,
    pub in_channels: [usize; 4],
    pub width: usize,
    pub lateral: Vec<Conv2d>,
    pub smooth: Vec<Conv2d>,
    pub downsample: Vec<Conv2d>,
    pub bottom_up_smooth: Vec<Conv2d>,
    pub activation: Activation,
}

impl PyramidWeights {
    /// Uniform `[-0.1, 0.1]` kernels drawn from a ChaCha8 stream seeded with
    /// `seed`, in the order lateral, smooth, downsample, bottom-up smooth.
    pub fn seeded(seed: u64, in_channels: [usize; 4], width: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lateral = in_channels
            .iter()
            .map(|&c| Conv2d::seeded(&mut rng, width, c, 1, 1, 0))
            .collect();
        let smooth = (0..4)
            .map(|_| Conv2d::seeded(&mut rng, width, width, 3, 1, 1))
            .collect();
        let downsample = (0..3)
            .map(|_| Conv2d::seeded(&mut rng, width, width, 3, 2, 1))
            .collect();
        let bottom_up_smooth = (0..3)
            .map(|_| Conv2d::seeded(&mut rng, width, width, 3, 1, 1))
            .collect();
        PyramidWeights {
            seed: Some(seed),
            in_channels,
            width,
            lateral,
            smooth,
            downsample,
            bottom_up_smooth,
            activation: Activation::Identity,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Lateral convs become identities (needs `in_channels == width`).
    pub fn with_identity_lateral(mut self) -> Result<Self, PyramidError> {
        if self.in_channels.iter().any(|&c| c != self.width) {
            return Err(PyramidError::Invalid(
                "identity lateral needs in_channels == width".into(),
            ));
        }
        self.lateral = (0..4).map(|_| Conv2d::identity(self.width, 1, 1, 0)).collect();
        Ok(self)
    }

    pub fn with_identity_smoothing(mut self) -> Self {
        self.smooth = (0..4).map(|_| Conv2d::identity(self.width, 3, 1, 1)).collect();
        self
    }

    /// Zero downsampling and identity bottom-up smoothing, so that the
    /// bottom-up pass returns its input unchanged.
    pub fn with_severed_bottom_up(mut self) -> Self {
        self.downsample = (0..3).map(|_| Conv2d::zeros(self.width, self.width, 3, 2, 1)).collect();
        self.bottom_up_smooth = (0..3).map(|_| Conv2d::identity(self.width, 3, 1, 1)).collect();
        self
    }
}

/// Checks levels 2..5 are present in order, channels match, and each level is
/// exactly half the spatial size of the one below.
fn check_levels(maps: &[FeatureMap], channels: &[usize; 4]) -> Result<(), PyramidError> {
    if maps.len() != 4 {
        return Err(PyramidError::Invalid(format!(
            "expected 4 levels (2..5), got {}",
            maps.len()
        )));
    }
    for (k, m) in maps.iter().enumerate() {
        let level = LEVELS[k];
        if m.level != level {
            return Err(mismatch(level, "level tag", level as usize, m.level as usize));
        }
        if m.channels != channels[k] {
            return Err(mismatch(level, "channels", channels[k], m.channels));
        }
        if m.data.len() != m.channels * m.height * m.width {
            return Err(mismatch(
                level,
                "data length",
                m.channels * m.height * m.width,
                m.data.len(),
            ));
        }
        if k > 0 {
            let below = &maps[k - 1];
            if !below.height.is_multiple_of(2) || m.height * 2 != below.height {
                return Err(mismatch(level, "height", below.height / 2, m.height));
            }
            if !below.width.is_multiple_of(2) || m.width * 2 != below.width {
                return Err(mismatch(level, "width", below.width / 2, m.width));
            }
        }
    }
    Ok(())
}

/// Top-down FPN pass producing `P2..P5`.
pub fn fpn_forward(inputs: &[FeatureMap], w: &PyramidWeights) -> Result<Vec<FeatureMap>, PyramidError> {
    check_levels(inputs, &w.in_channels)?;
    let mut merged: Vec<Option<FeatureMap>> = vec![None; 4];
    for k in (0..4).rev() {
        let mut m = w.lateral[k].forward(&inputs[k]);
        if k < 3 {
            let up = merged[k + 1].as_ref().expect("coarser level computed").upsample2();
            m.add_assign(&up);
        }
        merged[k] = Some(m.with_level(LEVELS[k]));
    }
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut p = w.smooth[k].forward(&m.expect("all levels computed"));
            p.apply(w.activation);
            p
        })
        .collect())
}

/// Bottom-up PA-FPN pass producing `N2..N5` from `P2..P5`.
pub fn pafpn_forward(p: &[FeatureMap], w: &PyramidWeights) -> Result<Vec<FeatureMap>, PyramidError> {
    check_levels(p, &[w.width; 4])?;
    let mut out = Vec::with_capacity(4);
    out.push(p[0].clone());
    for k in 0..3 {
        let mut fused = w.downsample[k].forward(&out[k]).with_level(LEVELS[k + 1]);
        fused.add_assign(&p[k + 1]);
        let mut n = w.bottom_up_smooth[k].forward(&fused);
        n.apply(w.activation);
        out.push(n);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PyramidMode {
    Fpn,
    Pafpn,
}

impl std::str::FromStr for PyramidMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fpn" => Ok(PyramidMode::Fpn),
            "pafpn" | "pa-fpn" => Ok(PyramidMode::Pafpn),
            other => Err(format!("unknown pyramid mode '{other}' (expected fpn or pafpn)")),
        }
    }
}

impl PyramidMode {
    /// Prefix of the output level names (`P` or `N`).
    pub fn prefix(&self) -> char {
        match self {
            PyramidMode::Fpn => 'P',
            PyramidMode::Pafpn => 'N',
        }
    }
}

pub fn pyramid_pipeline(
    inputs: &[FeatureMap],
    w: &PyramidWeights,
    mode: PyramidMode,
) -> Result<Vec<FeatureMap>, PyramidError> {
    let p = fpn_forward(inputs, w)?;
    match mode {
        PyramidMode::Fpn => Ok(p),
        PyramidMode::Pafpn => pafpn_forward(&p, w),
    }
}

/// Seeded uniform `[-1, 1]` backbone features for levels 2..5 of an image
/// `base_size` pixels square; level ℓ is `base_size / 2^ℓ` wide.
pub fn seeded_inputs(seed: u64, base_size: usize, in_channels: [usize; 4]) -> Result<Vec<FeatureMap>, PyramidError> {
    if base_size == 0 || !base_size.is_multiple_of(32) {
        return Err(PyramidError::Invalid(format!(
            "base size must be a positive multiple of 32, got {base_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LEVELS
        .iter()
        .zip(in_channels)
        .map(|(&level, c)| {
            let s = base_size >> level;
            let data = (0..c * s * s).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            FeatureMap {
                level,
                channels: c,
                height: s,
                width: s,
                data,
            }
        })
        .collect())
}

/// One line per level: `level <l>: <C>x<H>x<W>`.
pub fn shape_summary(levels: &[FeatureMap]) -> String {
    levels
        .iter()
        .map(|m| format!("level {}: {}x{}x{}\n", m.level, m.channels, m.height, m.width))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpLevel {
    pub name: String,
    pub level: u8,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Offset into the data section, in elements.
    pub offset: usize,
    pub len: usize,
}

/// Header of a tensor dump. The file is this header as one line of JSON,
/// a newline, then every level's data as little-endian `f64`, back to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub format: String,
    pub mode: PyramidMode,
    pub seed: u64,
    pub size: usize,
    pub levels: Vec<DumpLevel>,
}

pub fn write_dump(
    path: &Path,
    mode: PyramidMode,
    seed: u64,
    size: usize,
    levels: &[FeatureMap],
) -> Result<(), PyramidError> {
    let mut offset = 0;
    let header = DumpHeader {
        format: "f64-le".into(),
        mode,
        seed,
        size,
        levels: levels
            .iter()
            .map(|m| {
                let d = DumpLevel {
                    name: format!("{}{}", mode.prefix(), m.level),
                    level: m.level,
                    channels: m.channels,
                    height: m.height,
                    width: m.width,
                    offset,
                    len: m.data.len(),
                };
                offset += m.data.len();
                d
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    for m in levels {
        for v in &m.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<(DumpHeader, Vec<FeatureMap>), PyramidError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: DumpHeader = serde_json::from_str(line.trim_end()).map_err(|e| PyramidError::Header(e.to_string()))?;
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut maps = Vec::with_capacity(header.levels.len());
    for l in &header.levels {
        let end = l.offset + l.len;
        if end > values.len() {
            return Err(PyramidError::Header(format!(
                "level {} extends past the data section",
                l.name
            )));
        }
        maps.push(FeatureMap::new(
            l.level,
            l.channels,
            l.height,
            l.width,
            values[l.offset..end].to_vec(),
        )?);
    }
    Ok((header, maps))
}
