//! Mutual information of an equiprobable constellation over complex AWGN.
//!
//! The channel is `y = x + w` with `w` circularly symmetric Gaussian of total
//! variance `σ²` (each real dimension carries `σ²/2`), so
//!
//! ```text
//! f(y|x_n) = exp(−|y − x_n|²/σ²) / (πσ²)
//! f_Y(y)   = Σ p_n f(y|x_n)
//! I(Y;X)   = h(Y) − h(W),   h(W) = log2(πeσ²)
//! ```
//!
//! Mixture densities are evaluated in the log domain with a max-shifted
//! log-sum-exp; components more than [`LSE_CUTOFF`] nats below the dominant
//! one are skipped, which keeps the cost near `O(N)` distance evaluations and
//! a handful of exponentials per output sample at high SNR.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::{ComplexPoint, Constellation};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

/// Components this many nats below the largest are dropped from a
/// log-sum-exp (their total relative weight is below `N·e^-60`).
pub const LSE_CUTOFF: f64 = 60.0;

/// Monte Carlo samples per RNG substream.
pub const MC_CHUNK: usize = 4096;

/// Noise level of an AWGN channel relative to a signal power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Total complex noise variance `σ²`.
    pub noise_variance: f64,
    /// `P̄ / σ²`.
    pub snr_linear: f64,
}

impl ChannelSpec {
    pub fn from_snr_linear(signal_power: f64, snr_linear: f64) -> Result<Self> {
        if !(snr_linear.is_finite() && snr_linear > 0.0) {
            return Err(invalid(format!("SNR must be positive, got {snr_linear}")));
        }
        if !(signal_power.is_finite() && signal_power > 0.0) {
            return Err(invalid(format!("signal power must be positive, got {signal_power}")));
        }
        Ok(ChannelSpec {
            noise_variance: signal_power / snr_linear,
            snr_linear,
        })
    }

    pub fn from_snr_db(signal_power: f64, snr_db: f64) -> Result<Self> {
        Self::from_snr_linear(signal_power, crate::db_to_linear(snr_db))
    }

    pub fn from_noise_variance(signal_power: f64, noise_variance: f64) -> Result<Self> {
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(invalid(format!("noise variance must be positive, got {noise_variance}")));
        }
        Self::from_snr_linear(signal_power, signal_power / noise_variance)
    }

    /// Channel at the given SNR for the constellation's target power.
    pub fn for_constellation(c: &Constellation, snr_db: f64) -> Result<Self> {
        Self::from_snr_db(c.target_power(), snr_db)
    }

    pub fn snr_db(&self) -> f64 {
        crate::linear_to_db(self.snr_linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    GridQuadrature,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "mc",
            Method::GridQuadrature => "grid",
        }
    }
}

/// A mutual information value in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    pub method: Method,
    /// Monte Carlo sample count, or total quadrature nodes.
    pub samples_or_nodes: usize,
    /// Standard error in bits; zero for quadrature.
    pub std_error: f64,
}

/// Monte Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McControls {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for McControls {
    fn default() -> Self {
        McControls {
            samples: 1_000_000,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// Grid quadrature controls.
///
/// The integration box is the bounding box of the constellation widened by
/// `half_width_sigmas·σ` on every side and cut into `nodes_per_axis` cells
/// per axis, each sampled at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridControls {
    pub half_width_sigmas: f64,
    pub nodes_per_axis: usize,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for GridControls {
    fn default() -> Self {
        GridControls {
            half_width_sigmas: 10.0,
            nodes_per_axis: 512,
            exec: Exec::default(),
        }
    }
}

impl GridControls {
    fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 16 {
            return Err(invalid(format!(
                "grid quadrature needs at least 16 nodes per axis, got {}",
                self.nodes_per_axis
            )));
        }
        if self.half_width_sigmas.is_nan() || self.half_width_sigmas < 6.0 {
            return Err(invalid(format!(
                "grid half width must be at least 6 sigma, got {}",
                self.half_width_sigmas
            )));
        }
        Ok(())
    }
}

/// Choice of estimator for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Estimator {
    MonteCarlo(McControls),
    Grid(GridControls),
}

impl Estimator {
    pub fn method(&self) -> Method {
        match self {
            Estimator::MonteCarlo(_) => Method::MonteCarlo,
            Estimator::Grid(_) => Method::GridQuadrature,
        }
    }

    pub fn estimate(&self, c: &Constellation, sigma2: f64) -> Result<MiEstimate> {
        match self {
            Estimator::MonteCarlo(ctl) => mi_monte_carlo(c, sigma2, ctl),
            Estimator::Grid(ctl) => mi_grid(c, sigma2, ctl),
        }
    }

    /// Same estimator with its Monte Carlo seed replaced.
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            Estimator::MonteCarlo(ctl) => Estimator::MonteCarlo(McControls { seed, ..ctl }),
            grid => grid,
        }
    }
}

/// Gaussian mixture `f_Y` with precomputed constants.
pub(crate) struct Mixture<'a> {
    points: &'a [ComplexPoint],
    log_probs: Vec<f64>,
    inv_sigma2: f64,
    log_norm: f64,
}

impl<'a> Mixture<'a> {
    pub(crate) fn new(points: &'a [ComplexPoint], probs: &[f64], sigma2: f64) -> Self {
        Mixture {
            points,
            log_probs: probs.iter().map(|p| p.ln()).collect(),
            inv_sigma2: 1.0 / sigma2,
            log_norm: (PI * sigma2).ln(),
        }
    }

    #[inline]
    fn exponent(&self, y: Complex64, k: usize) -> f64 {
        (y - self.points[k]).norm_sqr() * self.inv_sigma2 - self.log_probs[k]
    }

    #[inline]
    fn min_exponent(&self, y: Complex64) -> f64 {
        (0..self.points.len())
            .map(|k| self.exponent(y, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Natural log of `f_Y(y)`.
    #[inline]
    pub(crate) fn ln_density(&self, y: Complex64) -> f64 {
        let m = self.min_exponent(y);
        let mut s = 0.0;
        for k in 0..self.points.len() {
            let d = self.exponent(y, k) - m;
            if d < LSE_CUTOFF {
                s += (-d).exp();
            }
        }
        -m + s.ln() - self.log_norm
    }
}

/// Mixture density `f_Y(y)` of the channel output.
pub fn output_density(y: ComplexPoint, c: &Constellation, sigma2: f64) -> f64 {
    Mixture::new(c.points(), c.probs(), sigma2).ln_density(y).exp()
}

/// Streaming mean and variance (Chan et al. pairwise merge).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// RNG for substream `stream` of a seeded run.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Complex Gaussian sample of total variance `sigma2`.
#[inline]
pub(crate) fn complex_noise<R: Rng>(rng: &mut R, sigma2: f64) -> Complex64 {
    let s = (0.5 * sigma2).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Monte Carlo estimate of `I(Y;X)`.
///
/// Draws a symbol uniformly and a noise sample, and averages
/// `log2 f(y|x) − log2 f_Y(y)`. The expectation of the first term is exactly
/// `−h(W)`, so this is `h(Y) − h(W)` with the analytic `h(W)` replaced by its
/// paired sample estimate, which removes the noise-energy fluctuation from
/// the variance. Samples are drawn in chunks of [`MC_CHUNK`], each from its
/// own substream of `seed`, so the result is independent of the thread count.
pub fn mi_monte_carlo(c: &Constellation, sigma2: f64, ctl: &McControls) -> Result<MiEstimate> {
    if ctl.samples < 1 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    check_sigma2(sigma2)?;
    let mix = Mixture::new(c.points(), c.probs(), sigma2);
    let n = c.len();
    let chunks = ctl.samples.div_ceil(MC_CHUNK);
    let per_chunk = ctl.exec.map(chunks, |k| {
        let mut rng = substream(ctl.seed, k as u64);
        let len = MC_CHUNK.min(ctl.samples - k * MC_CHUNK);
        let mut m = Moments::default();
        for _ in 0..len {
            let idx = rng.random_range(0..n);
            let w = complex_noise(&mut rng, sigma2);
            let y = c.points()[idx] + w;
            let ln_cond = -w.norm_sqr() / sigma2 - mix.log_norm;
            m.push((ln_cond - mix.ln_density(y)) / LN_2);
        }
        m
    });
    let m = per_chunk.into_iter().fold(Moments::default(), Moments::merge);
    if !m.mean.is_finite() {
        return Err(Error::Numerical("Monte Carlo MI is not finite".into()));
    }
    let var = if m.count > 1.0 { m.m2 / (m.count - 1.0) } else { 0.0 };
    let entropy = (n as f64).log2();
    Ok(MiEstimate {
        bits: m.mean.clamp(0.0, entropy),
        method: Method::MonteCarlo,
        samples_or_nodes: ctl.samples,
        std_error: (var / m.count).sqrt(),
    })
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Integration box: `(x0, y0, hx, hy)` with midpoints at `x0 + (i + 1/2)·hx`.
fn grid_box(points: &[ComplexPoint], sigma2: f64, ctl: &GridControls) -> (f64, f64, f64, f64) {
    let pad = ctl.half_width_sigmas * sigma2.sqrt();
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo_re = lo_re.min(p.re);
        hi_re = hi_re.max(p.re);
        lo_im = lo_im.min(p.im);
        hi_im = hi_im.max(p.im);
    }
    let m = ctl.nodes_per_axis as f64;
    (
        lo_re - pad,
        lo_im - pad,
        (hi_re - lo_re + 2.0 * pad) / m,
        (hi_im - lo_im + 2.0 * pad) / m,
    )
}

/// Raw quadrature value of `I` (not clamped), shared with the optimizer.
pub(crate) fn grid_mi_raw(c: &Constellation, sigma2: f64, ctl: &GridControls) -> f64 {
    let mix = Mixture::new(c.points(), c.probs(), sigma2);
    let m = ctl.nodes_per_axis;
    let (x0, y0, hx, hy) = grid_box(c.points(), sigma2, ctl);
    let rows = ctl.exec.map(m, |i| {
        let re = x0 + (i as f64 + 0.5) * hx;
        let mut acc = 0.0;
        for j in 0..m {
            let y = Complex64::new(re, y0 + (j as f64 + 0.5) * hy);
            let lf = mix.ln_density(y);
            acc += lf.exp() * lf;
        }
        acc
    });
    let sum: f64 = rows.iter().sum();
    let h_y = -sum * hx * hy / LN_2;
    h_y - noise_entropy_bits(sigma2)
}

/// `h(W) = log2(πeσ²)`.
pub fn noise_entropy_bits(sigma2: f64) -> f64 {
    (PI * std::f64::consts::E * sigma2).log2()
}

/// Deterministic estimate of `I(Y;X)` by 2-D midpoint quadrature of
/// `−f_Y log2 f_Y`.
///
/// The midpoint rule converges geometrically for this smooth, rapidly
/// decaying integrand once the node spacing is below about one noise
/// standard deviation. Cost is `nodes² · N`; for `N` in the thousands prefer
/// [`mi_monte_carlo`].
pub fn mi_grid(c: &Constellation, sigma2: f64, ctl: &GridControls) -> Result<MiEstimate> {
    ctl.validate()?;
    check_sigma2(sigma2)?;
    let raw = grid_mi_raw(c, sigma2, ctl);
    if !raw.is_finite() {
        return Err(Error::Numerical("grid MI is not finite".into()));
    }
    Ok(MiEstimate {
        bits: raw.max(0.0),
        method: Method::GridQuadrature,
        samples_or_nodes: ctl.nodes_per_axis * ctl.nodes_per_axis,
        std_error: 0.0,
    })
}

/// Quadrature MI of the GAM-style constellation `x_n = r_n·u_n` together
/// with its gradient with respect to the radii `r_n`.
///
/// `phasors` are the unit directions `u_n`. The gradient is the exact
/// derivative of the discretized objective on a fixed grid:
///
/// ```text
/// ∂I/∂r_k = −Σ_nodes w · ∂f/∂r_k · (log2 f + 1/ln 2)
/// ∂f/∂r_k = f · γ_k(y) · (2/σ²) · Re((y − x_k)·conj(u_k))
/// ```
///
/// with `γ_k` the posterior weight of component `k`.
pub fn grid_mi_radius_gradient(
    radii: &[f64],
    phasors: &[Complex64],
    sigma2: f64,
    ctl: &GridControls,
) -> Result<(f64, Vec<f64>)> {
    ctl.validate()?;
    check_sigma2(sigma2)?;
    if radii.len() != phasors.len() || radii.is_empty() {
        return Err(invalid("radii and phasors must be nonempty and of equal length"));
    }
    let n = radii.len();
    let points: Vec<Complex64> = radii.iter().zip(phasors).map(|(r, u)| u * r).collect();
    let probs = vec![1.0 / n as f64; n];
    let mix = Mixture::new(&points, &probs, sigma2);
    let m = ctl.nodes_per_axis;
    let (x0, y0, hx, hy) = grid_box(&points, sigma2, ctl);
    let rows = ctl.exec.map(m, |i| {
        let re = x0 + (i as f64 + 0.5) * hx;
        let mut acc = 0.0;
        let mut grad = vec![0.0; n];
        let mut resp = vec![0.0; n];
        for j in 0..m {
            let y = Complex64::new(re, y0 + (j as f64 + 0.5) * hy);
            let mn = mix.min_exponent(y);
            let mut s = 0.0;
            for (k, g) in resp.iter_mut().enumerate() {
                let d = mix.exponent(y, k) - mn;
                *g = if d < LSE_CUTOFF { (-d).exp() } else { 0.0 };
                s += *g;
            }
            let lf = -mn + s.ln() - mix.log_norm;
            let f = lf.exp();
            acc += f * lf;
            // common factor −f·(log2 f + 1/ln2)·(2/σ²)/s
            let common = -f * (lf + 1.0) / LN_2 * 2.0 * mix.inv_sigma2 / s;
            for k in 0..n {
                if resp[k] > 0.0 {
                    let diff = y - points[k];
                    let proj = diff.re * phasors[k].re + diff.im * phasors[k].im;
                    grad[k] += common * resp[k] * proj;
                }
            }
        }
        (acc, grad)
    });
    let mut sum = 0.0;
    let mut grad = vec![0.0; n];
    for (acc, g) in rows {
        sum += acc;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let area = hx * hy;
    let mi = -sum * area / LN_2 - noise_entropy_bits(sigma2);
    grad.iter_mut().for_each(|g| *g *= area);
    if !mi.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("grid MI gradient is not finite".into()));
    }
    Ok((mi, grad))
}

/// AWGN Shannon capacity `log2(1 + S)` in bits per channel use.
pub fn shannon_capacity(snr_linear: f64) -> f64 {
    (1.0 + snr_linear).log2()
}

/// SNR in dB at which capacity equals `bits`.
pub fn capacity_snr_db(bits: f64) -> f64 {
    crate::linear_to_db(bits.exp2() - 1.0)
}
