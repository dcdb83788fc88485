//! Regional class voting over a one-hot pseudo label.
//!
//! For every pixel and class, the vote is the number of pixels of that class inside the
//! `h_v × w_v` window centered on the pixel, divided by the window cardinality. Counting
//! is done in integers and each vote is produced by one final division, so the direct
//! scan ([`vote_naive`]) and the summed-area-table path ([`vote_integral`]) agree bit
//! for bit.
//!
//! The output keeps the input size. Under [`Border::Zero`] out-of-bounds cells count as
//! empty and the denominator stays `h_v·w_v`; under [`Border::Clip`] the window is
//! clipped to the image and the denominator is the clipped window size, so every vote
//! row is an exact distribution. Void pixels cast no vote but still count towards the
//! denominator.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::OneHotMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Border {
    /// Zero padding, fixed denominator `h_v·w_v`.
    Zero,
    /// Window clipped to the image, denominator is the in-bounds size.
    #[default]
    Clip,
}

impl fmt::Display for Border {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Border::Zero => "zero",
            Border::Clip => "clip",
        })
    }
}

impl FromStr for Border {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Border::Zero),
            "clip" => Ok(Border::Clip),
            other => Err(Error::InvalidArgument(format!(
                "unknown border mode {other:?} (expected zero or clip)"
            ))),
        }
    }
}

/// A centered `height × width` voting window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VicinitySpec {
    height: usize,
    width: usize,
    border: Border,
}

impl Default for VicinitySpec {
    fn default() -> Self {
        Self {
            height: 5,
            width: 5,
            border: Border::Clip,
        }
    }
}

impl VicinitySpec {
    /// Both sides must be odd so the window centers on the pixel.
    pub fn new(height: usize, width: usize, border: Border) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::InvalidVicinity { height, width });
        }
        Ok(Self {
            height,
            width,
            border,
        })
    }

    pub fn square(side: usize, border: Border) -> Result<Self> {
        Self::new(side, side, border)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn border(&self) -> Border {
        self.border
    }

    pub fn cardinality(&self) -> usize {
        self.height * self.width
    }

    /// Inclusive in-bounds row and column ranges of the window centered at `(row, col)`.
    fn window(&self, row: usize, col: usize, height: usize, width: usize) -> Window {
        let (rh, rw) = (self.height / 2, self.width / 2);
        Window {
            row0: row.saturating_sub(rh),
            row1: (row + rh).min(height - 1),
            col0: col.saturating_sub(rw),
            col1: (col + rw).min(width - 1),
        }
    }

    fn denominator(&self, window: &Window) -> u32 {
        match self.border {
            Border::Zero => self.cardinality() as u32,
            Border::Clip => window.area() as u32,
        }
    }
}

impl fmt::Display for VicinitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.height == self.width {
            write!(f, "{}", self.height)
        } else {
            write!(f, "{}x{}", self.height, self.width)
        }
    }
}

struct Window {
    row0: usize,
    row1: usize,
    col0: usize,
    col1: usize,
}

impl Window {
    fn area(&self) -> usize {
        (self.row1 - self.row0 + 1) * (self.col1 - self.col0 + 1)
    }
}

/// The single division shared by both voting paths.
#[inline]
fn fraction(count: u32, denominator: u32) -> f32 {
    (f64::from(count) / f64::from(denominator)) as f32
}

/// Per-pixel, per-class vote fractions, `H×W×K`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMap {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f32>,
}

impl VoteMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, index: usize) -> &[f32] {
        &self.data[index * self.classes..(index + 1) * self.classes]
    }

    /// Little-endian bytes of the vote values, for bitwise comparisons.
    pub fn to_bits(&self) -> Vec<u32> {
        self.data.iter().map(|v| v.to_bits()).collect()
    }
}

/// Work done by [`vote_integral_counted`]: table accumulations plus table lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VoteOps {
    pub table_adds: u64,
    pub table_lookups: u64,
}

impl VoteOps {
    pub fn total(&self) -> u64 {
        self.table_adds + self.table_lookups
    }
}

/// Direct window scan: sums the one-hot map over every window, one class plane at a time.
pub fn vote_naive(p_oh: &OneHotMap, v: &VicinitySpec) -> Result<VoteMap> {
    let v = VicinitySpec::new(v.height, v.width, v.border)?;
    let (h, w, k) = (p_oh.height(), p_oh.width(), p_oh.classes());
    let mut data = vec![0f32; h * w * k];
    let mut counts = vec![0u32; k];
    for row in 0..h {
        for col in 0..w {
            let win = v.window(row, col, h, w);
            counts.iter_mut().for_each(|c| *c = 0);
            for r in win.row0..=win.row1 {
                for c in win.col0..=win.col1 {
                    for (count, &hot) in counts.iter_mut().zip(p_oh.pixel(r * w + c)) {
                        *count += u32::from(hot);
                    }
                }
            }
            let denom = v.denominator(&win);
            let out = &mut data[(row * w + col) * k..(row * w + col + 1) * k];
            for (o, &count) in out.iter_mut().zip(&counts) {
                *o = fraction(count, denom);
            }
        }
    }
    Ok(VoteMap {
        height: h,
        width: w,
        classes: k,
        data,
    })
}

/// Summed-area-table voting; output is identical to [`vote_naive`].
pub fn vote_integral(p_oh: &OneHotMap, v: &VicinitySpec) -> Result<VoteMap> {
    vote_integral_counted(p_oh, v).map(|(votes, _)| votes)
}

/// [`vote_integral`] that also reports how many table operations it performed.
///
/// The count depends only on `H×W×K`, never on the window size.
pub fn vote_integral_counted(p_oh: &OneHotMap, v: &VicinitySpec) -> Result<(VoteMap, VoteOps)> {
    let v = VicinitySpec::new(v.height, v.width, v.border)?;
    let (h, w, k) = (p_oh.height(), p_oh.width(), p_oh.classes());
    let stride = w + 1;
    // table[(r * stride + c) * k + class] = count of `class` in rows < r, cols < c.
    let mut table = vec![0u32; (h + 1) * stride * k];
    let mut adds = 0u64;
    let mut running = vec![0u32; k];
    for r in 0..h {
        running.iter_mut().for_each(|x| *x = 0);
        for c in 0..w {
            if let Some(hot) = p_oh.hot_index(r * w + c) {
                running[hot] += 1;
            }
            let above = (r * stride + c + 1) * k;
            let here = ((r + 1) * stride + c + 1) * k;
            for class in 0..k {
                table[here + class] = table[above + class] + running[class];
            }
            adds += k as u64;
        }
    }

    let mut data = vec![0f32; h * w * k];
    let row_len = (w * k).max(1);
    let table = &table;
    let lookups: u64 = data
        .par_chunks_mut(row_len)
        .take(h)
        .enumerate()
        .map(|(row, out)| {
            let mut lookups = 0u64;
            for col in 0..w {
                let win = v.window(row, col, h, w);
                let denom = v.denominator(&win);
                let a = (win.row0 * stride + win.col0) * k;
                let b = (win.row0 * stride + win.col1 + 1) * k;
                let c = ((win.row1 + 1) * stride + win.col0) * k;
                let d = ((win.row1 + 1) * stride + win.col1 + 1) * k;
                for class in 0..k {
                    let count =
                        (table[d + class] + table[a + class]) - table[b + class] - table[c + class];
                    out[col * k + class] = fraction(count, denom);
                }
                lookups += 4 * k as u64;
            }
            lookups
        })
        .sum();

    Ok((
        VoteMap {
            height: h,
            width: w,
            classes: k,
            data,
        },
        VoteOps {
            table_adds: adds,
            table_lookups: lookups,
        },
    ))
}

/// Region-agnostic booster distribution: `1/K` for every class at every pixel.
pub fn vote_uniform(p_oh: &OneHotMap) -> VoteMap {
    let k = p_oh.classes();
    VoteMap {
        height: p_oh.height(),
        width: p_oh.width(),
        classes: k,
        data: vec![1.0 / k as f32; p_oh.pixels() * k],
    }
}

/// Number of in-bounds cells in the window at `pixel`, over `h_v·w_v`.
pub fn in_bounds_fraction(v: &VicinitySpec, height: usize, width: usize, pixel: usize) -> f64 {
    let win = v.window(pixel / width, pixel % width, height, width);
    win.area() as f64 / v.cardinality() as f64
}
