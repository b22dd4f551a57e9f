//! Scalar figures of merit for a constellation.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{invalid, Result};

/// Power, PAPR, entropy, packing and DC summary of a constellation.
///
/// PAPR is symbol-level: peak point power over mean point power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scheme: String,
    pub n: usize,
    pub mean_power: f64,
    pub peak_power: f64,
    pub papr_linear: f64,
    pub papr_db: f64,
    pub entropy_bits: f64,
    /// `None` for a single-point constellation.
    pub min_distance: Option<f64>,
    /// Two or more points coincide.
    pub degenerate: bool,
    pub dc_magnitude: f64,
}

/// Smallest pairwise distance and whether it is a coincidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinDistance {
    pub value: f64,
    pub degenerate: bool,
}

pub fn report(c: &Constellation) -> MetricReport {
    let mean_power = c.mean_power();
    let peak_power = c.peak_power();
    let papr_linear = peak_power / mean_power;
    let md = min_distance(c).ok();
    MetricReport {
        scheme: c.scheme().to_string(),
        n: c.len(),
        mean_power,
        peak_power,
        papr_linear,
        papr_db: 10.0 * papr_linear.log10(),
        entropy_bits: entropy_bits(c),
        min_distance: md.map(|m| m.value),
        degenerate: md.is_some_and(|m| m.degenerate),
        dc_magnitude: c.dc_offset().norm(),
    }
}

/// `−Σ p_n log2 p_n`.
pub fn entropy_bits(c: &Constellation) -> f64 {
    let h: f64 = c
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // -1·log2(1) is -0.0
    h.max(0.0)
}

/// Minimum pairwise Euclidean distance, brute force.
///
/// Quadratic in `N`, which is fine up to a few thousand points. Beyond that a
/// cell grid would be the obvious accelerator.
pub fn min_distance(c: &Constellation) -> Result<MinDistance> {
    let pts = c.points();
    if pts.len() < 2 {
        return Err(invalid("minimum distance needs at least two points"));
    }
    let mut best = f64::INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.min((a - b).norm_sqr());
        }
    }
    Ok(MinDistance {
        value: best.sqrt(),
        degenerate: best == 0.0,
    })
}

/// Disc-GAM PAPR, `2N/(N+1)`.
pub fn disc_papr(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 + 1.0)
}

/// High-rate bell GAM PAPR, `c²·ln N / P̄ = 1 / (1 − ln N! / (N ln N))`,
/// which grows like `ln N`.
pub fn gb_hr_papr(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (1.0 - statrs::function::gamma::ln_gamma(nf + 1.0) / (nf * nf.ln()))
}

/// Renders a report as an aligned two-column table.
pub fn render_table(r: &MetricReport) -> String {
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    let rows = [
        ("scheme", r.scheme.clone()),
        ("points", r.n.to_string()),
        ("mean power", format!("{:.6}", r.mean_power)),
        ("peak power", format!("{:.6}", r.peak_power)),
        ("PAPR", format!("{:.6}", r.papr_linear)),
        ("PAPR [dB]", format!("{:.4}", r.papr_db)),
        ("entropy [bit]", format!("{:.6}", r.entropy_bits)),
        (
            "min distance",
            if r.degenerate {
                format!("{} (degenerate)", fmt_opt(r.min_distance))
            } else {
                fmt_opt(r.min_distance)
            },
        ),
        ("|DC|", format!("{:.3e}", r.dc_magnitude)),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}
