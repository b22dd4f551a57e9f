//! Required-SNR interpolation and SNR gaps between schemes.
//!
//! A scheme's MI-vs-SNR(dB) sweep is made monotone by a running maximum and
//! then inverted by piecewise-linear interpolation. Gaps are differences of
//! required SNRs in dB; positive means the first scheme needs more power.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mi::capacity_snr_db;
use crate::sweep::MiRow;

/// Required SNR of one scheme at the target MI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredSnr {
    pub scheme: String,
    pub n: usize,
    /// `None` when the sweep never reaches the target.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub scheme: String,
    pub reference: String,
    /// `snr(scheme) − snr(reference)` in dB.
    pub gap_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub target_mi_bits: f64,
    pub capacity_snr_db: f64,
    pub schemes: Vec<RequiredSnr>,
    /// Gap of every scheme to capacity.
    pub to_capacity: Vec<PairGap>,
    /// Gap of every ordered pair of distinct schemes.
    pub pairwise: Vec<PairGap>,
}

/// SNR (dB) at which a sweep first reaches `target` bits.
///
/// `points` are `(snr_db, mi_bits)` pairs in any order. Returns `None` if the
/// target lies above every value, or above `max_bits` when given (for
/// instance the constellation entropy).
pub fn required_snr_db(points: &[(f64, f64)], target: f64, max_bits: Option<f64>) -> Option<f64> {
    if points.is_empty() || max_bits.is_some_and(|h| target > h) {
        return None;
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = f64::NEG_INFINITY;
    for p in &mut pts {
        running = running.max(p.1);
        p.1 = running;
    }
    if target <= pts[0].1 {
        return (target == pts[0].1).then_some(pts[0].0);
    }
    pts.windows(2).find_map(|w| {
        let ((s0, m0), (s1, m1)) = (w[0], w[1]);
        (m0 < target && target <= m1).then(|| s0 + (target - m0) / (m1 - m0) * (s1 - s0))
    })
}

/// Builds a gap report at `target` bits from sweep rows.
///
/// Rows are grouped by `(scheme, n)`; capacity rows are ignored since the
/// capacity SNR is known in closed form. A scheme whose entropy `log2 n` is
/// below the target is marked unreachable.
pub fn compare(rows: &[MiRow], target: f64) -> Result<GapReport> {
    if !(target.is_finite() && target > 0.0) {
        return Err(invalid(format!("target MI must be positive, got {target}")));
    }
    type Group = ((String, usize), Vec<(f64, f64)>);
    let mut groups: Vec<Group> = Vec::new();
    for r in rows.iter().filter(|r| r.scheme != "capacity") {
        let key = (r.scheme.clone(), r.n);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push((r.snr_db, r.mi_bits)),
            None => groups.push((key, vec![(r.snr_db, r.mi_bits)])),
        }
    }
    let cap = capacity_snr_db(target);
    let schemes: Vec<RequiredSnr> = groups
        .iter()
        .map(|((scheme, n), pts)| RequiredSnr {
            scheme: scheme.clone(),
            n: *n,
            snr_db: required_snr_db(pts, target, Some((*n as f64).log2())),
        })
        .collect();
    let label = |s: &RequiredSnr| format!("{}-{}", s.scheme, s.n);
    let to_capacity = schemes
        .iter()
        .map(|s| PairGap {
            scheme: label(s),
            reference: "capacity".into(),
            gap_db: s.snr_db.map(|v| v - cap),
        })
        .collect();
    let mut pairwise = Vec::new();
    for a in &schemes {
        for b in &schemes {
            if a != b {
                pairwise.push(PairGap {
                    scheme: label(a),
                    reference: label(b),
                    gap_db: a.snr_db.zip(b.snr_db).map(|(x, y)| x - y),
                });
            }
        }
    }
    Ok(GapReport {
        target_mi_bits: target,
        capacity_snr_db: cap,
        schemes,
        to_capacity,
        pairwise,
    })
}

/// Plain-text rendering of a gap report.
pub fn render_report(r: &GapReport) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "unreachable".to_string(), |x| format!("{x:.3}"));
    let mut s = format!(
        "target MI {:.3} bit, capacity SNR {:.3} dB\n",
        r.target_mi_bits, r.capacity_snr_db
    );
    for (req, gap) in r.schemes.iter().zip(&r.to_capacity) {
        s += &format!(
            "{:<12} required {:>12} dB   gap to capacity {:>12} dB\n",
            gap.scheme,
            fmt(req.snr_db),
            fmt(gap.gap_db)
        );
    }
    for g in &r.pairwise {
        s += &format!("{} vs {}: {} dB\n", g.scheme, g.reference, fmt(g.gap_db));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: &str, n: usize, snr_db: f64, mi: f64) -> MiRow {
        MiRow {
            snr_db,
            scheme: scheme.into(),
            n,
            mi_bits: mi,
            std_err: 0.0,
            method: "mc".into(),
        }
    }

    #[test]
    fn linear_interpolation() {
        let pts = [(0.0, 1.0), (10.0, 3.0)];
        assert_eq!(required_snr_db(&pts, 2.0, None), Some(5.0));
        assert_eq!(required_snr_db(&pts, 1.0, None), Some(0.0));
        assert_eq!(required_snr_db(&pts, 3.5, None), None);
        assert_eq!(required_snr_db(&pts, 0.5, None), None);
        assert_eq!(required_snr_db(&pts, 2.0, Some(1.5)), None);
    }

    #[test]
    fn noisy_dip_is_flattened() {
        // 2.1 then 2.05: the running max keeps the first crossing
        let pts = [(0.0, 1.0), (1.0, 2.1), (2.0, 2.05), (3.0, 3.0)];
        let s = required_snr_db(&pts, 2.0, None).unwrap();
        assert!((s - (1.0 - 0.1 / 1.1)).abs() < 1e-12);
    }

    #[test]
    fn self_gap_is_zero() {
        let rows = vec![row("qam", 16, 0.0, 1.0), row("qam", 16, 10.0, 3.0)];
        let rep = compare(&rows, 2.0).unwrap();
        assert!(rep.pairwise.is_empty());
        let doubled: Vec<MiRow> = rows
            .iter()
            .cloned()
            .chain(rows.iter().map(|r| MiRow { scheme: "copy".into(), ..r.clone() }))
            .collect();
        let rep = compare(&doubled, 2.0).unwrap();
        assert_eq!(rep.pairwise[0].gap_db, Some(0.0));
    }

    #[test]
    fn above_entropy_is_unreachable() {
        let rows = vec![row("qam", 4, 0.0, 1.0), row("qam", 4, 30.0, 2.0)];
        let rep = compare(&rows, 2.5).unwrap();
        assert_eq!(rep.schemes[0].snr_db, None);
        assert!(render_report(&rep).contains("unreachable"));
    }
}
