//! Canonical JSON form of constellations and other records.
//!
//! ```json
//! { "scheme": "gb-hr", "n": 4, "power": 1.0, "index_base": 0,
//!   "points": [[re, im], ...], "probs": [0.25, ...] }
//! ```
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! write/read cycle bit for bit.

use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::constellation::{Constellation, IndexBase, Scheme};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstellationFile {
    scheme: Scheme,
    n: usize,
    power: f64,
    index_base: u64,
    points: Vec<[f64; 2]>,
    probs: Vec<f64>,
}

/// Pretty formatter that prints floats as `d.dddddddddddddddde±x`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any record as pretty JSON with full-precision floats.
///
/// Non-finite floats have no JSON form and are written as `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // route through Value so NaN/inf become null rather than invalid tokens
    let v = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    v.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

pub fn constellation_to_json(c: &Constellation) -> Result<String> {
    let file = ConstellationFile {
        scheme: c.scheme(),
        n: c.len(),
        power: c.target_power(),
        index_base: c.index_base().offset(),
        points: c.points().iter().map(|p| [p.re, p.im]).collect(),
        probs: c.probs().to_vec(),
    };
    to_json_string(&file)
}

pub fn constellation_from_json(s: &str) -> Result<Constellation> {
    let file: ConstellationFile = serde_json::from_str(s)?;
    if file.n != file.points.len() {
        return Err(Error::Format(format!(
            "n = {} but {} points",
            file.n,
            file.points.len()
        )));
    }
    let points: Vec<Complex64> = file.points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    if file.scheme.is_gam() {
        let radii: Vec<f64> = points.iter().map(|p| p.norm()).collect();
        if radii.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
            return Err(Error::Format("GAM radii must be nondecreasing".into()));
        }
    }
    Constellation::from_parts(
        file.scheme,
        points,
        file.probs,
        file.power,
        IndexBase::from_offset(file.index_base)?,
    )
}

pub fn save_constellation(c: &Constellation, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, constellation_to_json(c)?)?;
    Ok(())
}

pub fn load_constellation(path: impl AsRef<Path>) -> Result<Constellation> {
    constellation_from_json(&fs::read_to_string(path)?)
}
