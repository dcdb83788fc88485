//! Binary PGM (`P5`) export of label maps.

use std::fmt;
use std::str::FromStr;

use ubm_core::{LabelMap, IGNORE};

/// Gray level written for [`IGNORE`] pixels.
pub const IGNORE_GRAY: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Palette {
    /// Labels spread evenly over `0..=254`.
    #[default]
    Spread,
    /// Label `l` is written as gray level `l`.
    Identity,
}

impl fmt::Display for Palette {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Palette::Spread => "spread",
            Palette::Identity => "identity",
        })
    }
}

impl FromStr for Palette {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spread" => Ok(Palette::Spread),
            "identity" => Ok(Palette::Identity),
            other => Err(format!(
                "unknown palette {other:?} (expected spread or identity)"
            )),
        }
    }
}

impl Palette {
    /// Gray level of `label` for a map with `classes` classes.
    pub fn encode(self, label: u16, classes: usize) -> Result<u8, String> {
        if label == IGNORE {
            return Ok(IGNORE_GRAY);
        }
        if usize::from(label) >= classes {
            return Err(format!("label {label} out of range for {classes} classes"));
        }
        match self {
            Palette::Spread if classes > 255 => Err(format!(
                "the spread palette holds at most 255 classes, got {classes}"
            )),
            Palette::Spread if classes == 1 => Ok(0),
            Palette::Spread => {
                let step = 254.0 / (classes - 1) as f64;
                Ok((f64::from(label) * step).round() as u8)
            }
            Palette::Identity if label > 255 => {
                Err(format!("label {label} does not fit the identity palette"))
            }
            Palette::Identity => Ok(label as u8),
        }
    }

    /// Inverse of [`Palette::encode`]. Level 255 decodes to [`IGNORE`] except under the
    /// identity palette with 256 classes.
    pub fn decode(self, gray: u8, classes: usize) -> u16 {
        match self {
            Palette::Identity if classes > 255 => u16::from(gray),
            _ if gray == IGNORE_GRAY => IGNORE,
            Palette::Identity => u16::from(gray),
            Palette::Spread if classes <= 1 => 0,
            Palette::Spread => (f64::from(gray) * (classes - 1) as f64 / 254.0).round() as u16,
        }
    }
}

/// Encodes `labels` as a binary PGM image.
pub fn encode_pgm(labels: &LabelMap, classes: usize, palette: Palette) -> Result<Vec<u8>, String> {
    let has_ignore = labels.data().contains(&IGNORE);
    if palette == Palette::Identity && has_ignore && classes > 255 {
        return Err("label 255 and ignored pixels would share gray level 255".into());
    }
    let mut out = format!("P5\n{} {}\n255\n", labels.width(), labels.height()).into_bytes();
    out.reserve(labels.pixels());
    for &label in labels.data() {
        out.push(palette.encode(label, classes)?);
    }
    Ok(out)
}

/// Parses a binary PGM written by [`encode_pgm`] back into labels.
pub fn decode_pgm(bytes: &[u8], classes: usize, palette: Palette) -> Result<LabelMap, String> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(format!("unsupported PGM header {:?}", fields));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| format!("bad PGM dimension {s:?}: {e}"))
    };
    let (width, height) = (parse(&fields[1])?, parse(&fields[2])?);
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != width * height {
        return Err(format!(
            "PGM raster holds {} bytes, expected {}",
            raster.len(),
            width * height
        ));
    }
    let labels = raster.iter().map(|&g| palette.decode(g, classes)).collect();
    LabelMap::new(height, width, labels).map_err(|e| e.to_string())
}
