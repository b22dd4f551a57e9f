//! Constellation construction.
//!
//! A [`Constellation`] is an ordered list of complex points with equal
//! probabilities, the name of the rule that produced it and the average power
//! it was normalized to. Constellations are immutable once built.
//!
//! GAM constellations put point `n` at radius `r_n` and phase `2πφn`, with
//! `φ` the fractional golden turn. Disc-GAM uses `r_n ∝ √n` over indices
//! `1..=N`. Bell-shaped GAM (high-rate) inverts the Rayleigh radial CDF at
//! `n/N` over indices `0..N`, which keeps the outermost radius finite.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::golden::golden_angle_phase;

/// A constellation point in amplitude units.
pub type ComplexPoint = Complex64;

/// Relative tolerance on the average-power contract.
pub const POWER_RTOL: f64 = 1e-9;

/// Construction rule of a constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "disc")]
    DiscGam,
    #[serde(rename = "gb-hr")]
    GbGamHr,
    #[serde(rename = "gb-g1")]
    GbGamG1,
    #[serde(rename = "qam")]
    Qam,
    #[serde(rename = "psk")]
    Psk,
    #[serde(rename = "custom")]
    Custom,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::DiscGam,
        Scheme::GbGamHr,
        Scheme::GbGamG1,
        Scheme::Qam,
        Scheme::Psk,
        Scheme::Custom,
    ];

    /// Short name used in files and on the command line.
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::DiscGam => "disc",
            Scheme::GbGamHr => "gb-hr",
            Scheme::GbGamG1 => "gb-g1",
            Scheme::Qam => "qam",
            Scheme::Psk => "psk",
            Scheme::Custom => "custom",
        }
    }

    /// Whether points follow the golden-angle phase rule.
    pub fn is_gam(self) -> bool {
        matches!(self, Scheme::DiscGam | Scheme::GbGamHr | Scheme::GbGamG1)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown scheme '{s}'")))
    }
}

/// First spiral index of a GAM constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    pub fn offset(self) -> u64 {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }

    pub(crate) fn from_offset(v: u64) -> Result<Self> {
        match v {
            0 => Ok(IndexBase::Zero),
            1 => Ok(IndexBase::One),
            _ => Err(Error::Format(format!("index_base must be 0 or 1, got {v}"))),
        }
    }
}

/// Equiprobable constellation with its construction metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<ComplexPoint>,
    probs: Vec<f64>,
    scheme: Scheme,
    target_power: f64,
    index_base: IndexBase,
}

fn check_power(p_bar: f64) -> Result<()> {
    if !(p_bar.is_finite() && p_bar > 0.0) {
        return Err(invalid(format!("average power must be positive, got {p_bar}")));
    }
    Ok(())
}

fn gam_points(radii: &[f64], base: IndexBase) -> Vec<ComplexPoint> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| Complex64::from_polar(r, golden_angle_phase(i as u64 + base.offset())))
        .collect()
}

impl Constellation {
    fn equiprobable(
        points: Vec<ComplexPoint>,
        scheme: Scheme,
        target_power: f64,
        index_base: IndexBase,
    ) -> Self {
        let n = points.len();
        Constellation {
            probs: vec![1.0 / n as f64; n],
            points,
            scheme,
            target_power,
            index_base,
        }
    }

    /// Disc-GAM: `r_n = c·√n` for `n = 1..=N` with `c = √(2·P̄/(N+1))`.
    pub fn disc_gam(n: usize, p_bar: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("disc-GAM needs N >= 1"));
        }
        check_power(p_bar)?;
        let c = (2.0 * p_bar / (n as f64 + 1.0)).sqrt();
        let radii: Vec<f64> = (1..=n).map(|k| c * (k as f64).sqrt()).collect();
        Ok(Self::equiprobable(
            gam_points(&radii, IndexBase::One),
            Scheme::DiscGam,
            p_bar,
            IndexBase::One,
        ))
    }

    /// Bell-shaped GAM from the high-rate inverse-sampling rule:
    /// `r_n = c·√ln(N/(N−n))` for `n = 0..N` with
    /// `c = √(N·P̄/(N·ln N − ln N!))`.
    pub fn gb_gam_hr(n: usize, p_bar: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("bell GAM (HR) needs N >= 2"));
        }
        check_power(p_bar)?;
        let nf = n as f64;
        let denom = nf * nf.ln() - ln_gamma(nf + 1.0);
        let c = (nf * p_bar / denom).sqrt();
        let radii: Vec<f64> = (0..n)
            .map(|k| c * (nf / (nf - k as f64)).ln().sqrt())
            .collect();
        Ok(Self::equiprobable(
            gam_points(&radii, IndexBase::Zero),
            Scheme::GbGamHr,
            p_bar,
            IndexBase::Zero,
        ))
    }

    /// Square QAM on the odd-integer grid, scaled to average power `p_bar`.
    ///
    /// `N` must be a perfect square with an even side (4, 16, 64, ...).
    pub fn qam(n: usize, p_bar: f64) -> Result<Self> {
        let side = (n as f64).sqrt().round() as usize;
        if n < 4 || side * side != n || !side.is_multiple_of(2) {
            return Err(invalid(format!("QAM size {n} is not an even-side square")));
        }
        check_power(p_bar)?;
        // mean of (a^2 + b^2) over odd a, b in [-(side-1), side-1]
        let grid_power = 2.0 * ((side * side) as f64 - 1.0) / 3.0;
        let scale = (p_bar / grid_power).sqrt();
        let coord = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;
        let points = (0..side)
            .flat_map(|i| (0..side).map(move |j| Complex64::new(coord(i), coord(j))))
            .collect();
        Ok(Self::equiprobable(points, Scheme::Qam, p_bar, IndexBase::Zero))
    }

    /// `N`-PSK on the circle of radius `√p_bar`, first point on the real axis.
    pub fn psk(n: usize, p_bar: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("PSK needs N >= 2"));
        }
        check_power(p_bar)?;
        let r = p_bar.sqrt();
        let points = (0..n)
            .map(|k| Complex64::from_polar(r, TAU * k as f64 / n as f64))
            .collect();
        Ok(Self::equiprobable(points, Scheme::Psk, p_bar, IndexBase::Zero))
    }

    /// Builds a constellation of any scheme with default parameters.
    pub fn build(scheme: Scheme, n: usize, p_bar: f64) -> Result<Self> {
        match scheme {
            Scheme::DiscGam => Self::disc_gam(n, p_bar),
            Scheme::GbGamHr => Self::gb_gam_hr(n, p_bar),
            Scheme::Qam => Self::qam(n, p_bar),
            Scheme::Psk => Self::psk(n, p_bar),
            Scheme::GbGamG1 | Scheme::Custom => Err(invalid(format!(
                "scheme '{scheme}' has no closed-form builder"
            ))),
        }
    }

    /// GAM-phased constellation with the given radius profile, rescaled to
    /// average power `p_bar`.
    ///
    /// Radii must be finite, nonnegative, nondecreasing and not all zero.
    pub fn from_radii(radii: &[f64], p_bar: f64, index_base: IndexBase) -> Result<Self> {
        if radii.is_empty() {
            return Err(invalid("radius list is empty"));
        }
        check_power(p_bar)?;
        if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(invalid("radii must be finite and nonnegative"));
        }
        if let Some(k) = radii.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid(format!("radii decrease at index {}", k + 1)));
        }
        let mean_sq = radii.iter().map(|r| r * r).sum::<f64>() / radii.len() as f64;
        if mean_sq <= 0.0 {
            return Err(invalid("all radii are zero"));
        }
        let scale = (p_bar / mean_sq).sqrt();
        let scaled: Vec<f64> = radii.iter().map(|r| r * scale).collect();
        Ok(Self::equiprobable(
            gam_points(&scaled, index_base),
            Scheme::Custom,
            p_bar,
            index_base,
        ))
    }

    /// Arbitrary equiprobable points; the target power is their mean power.
    pub fn custom(points: Vec<ComplexPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("constellation needs at least one point"));
        }
        if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(invalid("points must be finite"));
        }
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        Ok(Self::equiprobable(points, Scheme::Custom, power, IndexBase::Zero))
    }

    /// Reassembles a constellation from stored parts, checking every
    /// invariant that can be checked without knowing the construction rule.
    pub(crate) fn from_parts(
        scheme: Scheme,
        points: Vec<ComplexPoint>,
        probs: Vec<f64>,
        target_power: f64,
        index_base: IndexBase,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 || probs.len() != n {
            return Err(Error::Format(format!(
                "{n} points but {} probabilities",
                probs.len()
            )));
        }
        if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::Format("non-finite point".into()));
        }
        let uniform = 1.0 / n as f64;
        if probs.iter().any(|p| (p - uniform).abs() > 1e-12) {
            return Err(Error::Format("only equiprobable constellations are supported".into()));
        }
        if !(target_power.is_finite() && target_power > 0.0) {
            return Err(Error::Format(format!("bad power {target_power}")));
        }
        let c = Constellation {
            points,
            probs,
            scheme,
            target_power,
            index_base,
        };
        let rel = (c.mean_power() - target_power).abs() / target_power;
        if rel > POWER_RTOL {
            return Err(Error::Format(format!(
                "mean power {} does not match declared power {target_power}",
                c.mean_power()
            )));
        }
        Ok(c)
    }

    pub(crate) fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn points(&self) -> &[ComplexPoint] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn target_power(&self) -> f64 {
        self.target_power
    }

    pub fn index_base(&self) -> IndexBase {
        self.index_base
    }

    /// `Σ p_n |x_n|²`.
    pub fn mean_power(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.norm_sqr())
            .sum()
    }

    /// Largest `|x_n|²`.
    pub fn peak_power(&self) -> f64 {
        self.points.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(|x| x.norm()).collect()
    }

    /// The same constellation rotated by `theta` radians.
    ///
    /// The result is tagged as custom since the spiral phase rule no longer
    /// holds.
    pub fn rotated(&self, theta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        Constellation {
            points: self.points.iter().map(|x| x * rot).collect(),
            scheme: Scheme::Custom,
            ..self.clone()
        }
    }

    /// Mean point `Σ p_n x_n`.
    pub fn dc_offset(&self) -> ComplexPoint {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    /// Subtracts the DC component from every point and restores the target
    /// average power.
    pub fn remove_dc(&self) -> Self {
        let dc = self.dc_offset();
        let centered: Vec<ComplexPoint> = self.points.iter().map(|x| x - dc).collect();
        let power: f64 = centered
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.norm_sqr())
            .sum();
        // a single point (or all points equal) has nothing left to rescale
        let scale = if power > 0.0 {
            (self.target_power / power).sqrt()
        } else {
            1.0
        };
        let scheme = if self.scheme.is_gam() {
            Scheme::Custom
        } else {
            self.scheme
        };
        Constellation {
            points: centered.into_iter().map(|x| x * scale).collect(),
            probs: self.probs.clone(),
            scheme,
            target_power: self.target_power,
            index_base: self.index_base,
        }
    }
}
