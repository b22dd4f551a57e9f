//! Symbol-level AWGN link simulation with minimum-distance detection.
//!
//! Symbols are drawn uniformly and disturbed by complex Gaussian noise of
//! total variance `σ² = P̄/S`, the same convention as the MI estimators.
//! The stream is produced in blocks of [`SYMBOL_BLOCK`] symbols, each from its
//! own RNG substream, so SER counts are identical whether blocks are processed
//! sequentially or in parallel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{ComplexPoint, Constellation};
use crate::error::{invalid, Result};
use crate::mi::{complex_noise, substream, ChannelSpec};
use crate::par::Exec;

pub const SYMBOL_BLOCK: u64 = 8192;

/// One simulation run.
#[derive(Debug, Clone, Copy)]
pub struct SimRun<'a> {
    pub constellation: &'a Constellation,
    pub snr_db: f64,
    pub n_symbols: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerResult {
    pub errors: u64,
    pub trials: u64,
    pub ser: f64,
    /// Half-width of the Wilson 95% interval.
    pub ci95_halfwidth: f64,
}

impl SimRun<'_> {
    fn validate(&self) -> Result<ChannelSpec> {
        if self.n_symbols < 1 {
            return Err(invalid("simulation needs at least one symbol"));
        }
        ChannelSpec::for_constellation(self.constellation, self.snr_db)
    }

    fn blocks(&self) -> u64 {
        self.n_symbols.div_ceil(SYMBOL_BLOCK)
    }

    fn block(&self, b: u64, sigma2: f64) -> impl Iterator<Item = (usize, ComplexPoint)> + '_ {
        let mut rng = substream(self.seed, b);
        let len = SYMBOL_BLOCK.min(self.n_symbols - b * SYMBOL_BLOCK);
        let pts = self.constellation.points();
        (0..len).map(move |_| {
            let k = rng.random_range(0..pts.len());
            (k, pts[k] + complex_noise(&mut rng, sigma2))
        })
    }
}

/// The transmitted indices and received samples of a run, in order.
pub fn transmit<'a>(
    run: &'a SimRun<'a>,
) -> Result<impl Iterator<Item = (usize, ComplexPoint)> + 'a> {
    let sigma2 = run.validate()?.noise_variance;
    Ok((0..run.blocks()).flat_map(move |b| run.block(b, sigma2)))
}

/// Index of the nearest point; ties go to the smaller index.
pub fn ml_detect(y: ComplexPoint, c: &Constellation) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, x) in c.points().iter().enumerate() {
        let d = (y - x).norm_sqr();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// Wilson score interval half-width at 95% confidence.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Symbol error rate of minimum-distance detection.
pub fn measure_ser(run: &SimRun<'_>, exec: Exec) -> Result<SerResult> {
    let sigma2 = run.validate()?.noise_variance;
    let c = run.constellation;
    let per_block = exec.map(run.blocks() as usize, |b| {
        run.block(b as u64, sigma2)
            .filter(|&(k, y)| ml_detect(y, c) != k)
            .count() as u64
    });
    let errors: u64 = per_block.iter().sum();
    let trials = run.n_symbols;
    Ok(SerResult {
        errors,
        trials,
        ser: errors as f64 / trials as f64,
        ci95_halfwidth: wilson_halfwidth(errors, trials),
    })
}
