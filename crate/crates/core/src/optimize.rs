//! MI-maximizing radius profiles for GAM (formulation G1).
//!
//! Maximize `I(Y;X)` over radii `r_1 ≤ r_2 ≤ … ≤ r_N`, `r_1 ≥ 0`, with the
//! average SNR fixed, `Σ r_n² / (N σ²) = S`, and optionally the PAPR capped,
//! `r_N² / mean(r²) ≤ PAPR₀`. Phases stay on the golden-angle spiral.
//!
//! The monotone cone is handled by writing `r = cumsum(δ)` with `δ ≥ 0`, and
//! the power equality by rescaling onto the sphere after every step, which
//! leaves a bound-constrained problem in `δ`. That problem is solved with a
//! projected L-BFGS iteration (active-set masking plus projected Armijo
//! backtracking). The PAPR cap enters through an augmented-Lagrangian outer
//! loop and a final exact projection. The objective is the deterministic grid
//! quadrature of [`crate::mi`], never Monte Carlo.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, IndexBase, Scheme};
use crate::error::{invalid, Error, Result};
use crate::golden::golden_angle_phase;
use crate::mi::{grid_mi_radius_gradient, GridControls};

/// Starting radius profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    FromHr,
    FromDisc,
    Custom(Vec<f64>),
}

impl Init {
    /// Spiral index of the first point for this start.
    pub fn index_base(&self) -> IndexBase {
        match self {
            Init::FromDisc => IndexBase::One,
            Init::FromHr | Init::Custom(_) => IndexBase::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverControls {
    /// Inner quasi-Newton iterations summed over all outer rounds.
    pub max_iterations: usize,
    /// Stop once the objective improves by less than this (bits) over
    /// three consecutive iterations.
    pub tolerance_bits: f64,
    /// Stop once the projected gradient's largest entry drops below this.
    pub gradient_tolerance: f64,
    /// L-BFGS memory.
    pub memory: usize,
    /// Augmented-Lagrangian penalty for the PAPR cap.
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub max_outer: usize,
    pub grid: GridControls,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            max_iterations: 500,
            tolerance_bits: 1e-6,
            gradient_tolerance: 1e-7,
            memory: 8,
            penalty_initial: 1.0,
            penalty_growth: 10.0,
            max_outer: 8,
            grid: GridControls {
                nodes_per_axis: 192,
                ..GridControls::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G1Problem {
    pub n_points: usize,
    pub snr_linear: f64,
    /// Noise variance; the signal power is carried by the radii.
    pub sigma2: f64,
    pub papr_cap: Option<f64>,
    pub init: Init,
    pub controls: SolverControls,
}

impl G1Problem {
    pub fn new(n_points: usize, snr_linear: f64) -> Self {
        G1Problem {
            n_points,
            snr_linear,
            sigma2: 1.0,
            papr_cap: None,
            init: Init::FromHr,
            controls: SolverControls::default(),
        }
    }

    /// Average power `S·σ²` the radii must carry.
    pub fn power(&self) -> f64 {
        self.snr_linear * self.sigma2
    }

    fn validate(&self) -> Result<()> {
        if self.n_points < 1 {
            return Err(invalid("G1 needs at least one point"));
        }
        if !(self.snr_linear.is_finite() && self.snr_linear > 0.0) {
            return Err(invalid(format!("SNR must be positive, got {}", self.snr_linear)));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(invalid(format!("noise variance must be positive, got {}", self.sigma2)));
        }
        if let Some(cap) = self.papr_cap {
            if !(cap.is_finite() && cap > 1.0) {
                return Err(invalid(format!("PAPR cap must exceed 1, got {cap}")));
            }
        }
        if self.n_points == 1 && matches!(self.init, Init::FromHr) {
            return Err(invalid("HR start needs at least two points"));
        }
        Ok(())
    }

    fn initial_radii(&self) -> Result<Vec<f64>> {
        let n = self.n_points;
        let p = self.power();
        match &self.init {
            Init::FromHr => Ok(Constellation::gb_gam_hr(n, p)?.radii()),
            Init::FromDisc => Ok(Constellation::disc_gam(n, p)?.radii()),
            Init::Custom(r) => {
                if r.len() != n {
                    return Err(invalid(format!("custom start has {} radii, expected {n}", r.len())));
                }
                radii_to_increments(r)?;
                Ok(r.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `Σ r²/(Nσ²) − S`.
    pub power_eq: f64,
    /// Largest `r_n − r_{n+1}` (or `−r_1`) that is positive, else 0.
    pub monotonic_violation: f64,
    /// `PAPR₀ − PAPR`; `None` without a cap.
    pub papr_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G1Result {
    pub radii: Vec<f64>,
    pub mi_bits: f64,
    pub init_radii: Vec<f64>,
    pub init_mi_bits: f64,
    pub papr: f64,
    pub constraint_residuals: ConstraintResiduals,
    pub iterations: usize,
    pub converged: bool,
    pub index_base: u64,
}

impl G1Result {
    /// Optimized constellation at average power `p_bar`.
    pub fn constellation(&self, p_bar: f64) -> Result<Constellation> {
        let base = IndexBase::from_offset(self.index_base)?;
        Ok(Constellation::from_radii(&self.radii, p_bar, base)?.with_scheme(Scheme::GbGamG1))
    }
}

/// Increments `δ_1 = r_1`, `δ_n = r_n − r_{n−1}` of a monotone profile.
pub fn radii_to_increments(radii: &[f64]) -> Result<Vec<f64>> {
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(invalid("radii must be finite and nonnegative"));
    }
    if let Some(k) = radii.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid(format!("radii decrease at index {}", k + 1)));
    }
    let mut prev = 0.0;
    Ok(radii
        .iter()
        .map(|&r| {
            let d = r - prev;
            prev = r;
            d
        })
        .collect())
}

/// Running sums of nonnegative increments.
pub fn increments_to_radii(deltas: &[f64]) -> Result<Vec<f64>> {
    if deltas.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(invalid("increments must be finite and nonnegative"));
    }
    Ok(deltas
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect())
}

fn phasors(n: usize, base: IndexBase) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, golden_angle_phase(k as u64 + base.offset())))
        .collect()
}

/// Gradient of the grid-quadrature MI with respect to the radii of a GAM
/// constellation, with the radii used as given (no power rescaling).
pub fn objective_gradient(
    radii: &[f64],
    index_base: IndexBase,
    sigma2: f64,
    grid: &GridControls,
) -> Result<Vec<f64>> {
    let u = phasors(radii.len(), index_base);
    Ok(grid_mi_radius_gradient(radii, &u, sigma2, grid)?.1)
}

/// Grid-quadrature MI of radii used as given.
pub fn objective(radii: &[f64], index_base: IndexBase, sigma2: f64, grid: &GridControls) -> Result<f64> {
    let u = phasors(radii.len(), index_base);
    Ok(grid_mi_radius_gradient(radii, &u, sigma2, grid)?.0)
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residuals of a radius profile.
pub fn residuals(radii: &[f64], p: &G1Problem) -> ConstraintResiduals {
    let n = radii.len() as f64;
    let mean = sum_sq(radii) / n;
    let mut viol = (-radii[0]).max(0.0);
    for w in radii.windows(2) {
        viol = viol.max(w[0] - w[1]);
    }
    let papr = radii.last().map_or(0.0, |r| r * r) / mean;
    ConstraintResiduals {
        power_eq: mean / p.sigma2 - p.snr_linear,
        monotonic_violation: viol,
        papr_slack: p.papr_cap.map(|cap| cap - papr),
    }
}

/// Projects a monotone profile onto `{mean(r²) = P, r ≤ √(cap·P)}` by
/// rescaling and clipping: `r ← min(α·r, √(cap·P))` with `α` chosen by
/// bisection. Monotonicity is preserved.
fn project_papr(radii: &[f64], power: f64, cap: f64) -> Vec<f64> {
    let n = radii.len() as f64;
    let limit = (cap * power).sqrt();
    let mean_at = |alpha: f64| radii.iter().map(|r| (alpha * r).min(limit).powi(2)).sum::<f64>() / n;
    let mut lo = 0.0;
    let mut hi = (power / (sum_sq(radii) / n)).sqrt();
    // mean_at(hi) ≤ power; grow until it brackets (clipping reduces it)
    while mean_at(hi) < power {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let clipped: Vec<f64> = radii.iter().map(|r| (hi * r).min(limit)).collect();
    let scale = (power / (sum_sq(&clipped) / n)).sqrt();
    clipped.into_iter().map(|r| (r * scale).min(limit)).collect()
}

/// Working state of one evaluation in increment space.
struct Eval {
    deltas: Vec<f64>,
    radii: Vec<f64>,
    value: f64,
    mi: f64,
    grad: Vec<f64>,
}

struct Objective<'a> {
    problem: &'a G1Problem,
    phasors: Vec<Complex64>,
    target_sq: f64,
    multiplier: f64,
    penalty: f64,
}

impl Objective<'_> {
    /// Rescales `deltas` onto the power sphere and evaluates
    /// `−MI + AL(PAPR)` and its gradient in increment space.
    fn eval(&self, mut deltas: Vec<f64>) -> Result<Eval> {
        let u = increments_to_radii(&deltas)?;
        let norm_sq = sum_sq(&u);
        if norm_sq <= 0.0 {
            return Err(Error::Numerical("radius profile collapsed to zero".into()));
        }
        let k = (self.target_sq / norm_sq).sqrt();
        deltas.iter_mut().for_each(|d| *d *= k);
        let radii: Vec<f64> = u.iter().map(|r| r * k).collect();
        let p = self.problem;
        let (mi, mi_grad) = grid_mi_radius_gradient(&radii, &self.phasors, p.sigma2, &p.controls.grid)?;
        let mut value = -mi;
        let mut g_r: Vec<f64> = mi_grad.iter().map(|g| -g).collect();
        if let Some(cap) = p.papr_cap {
            let power = p.power();
            let last = radii.len() - 1;
            let c = radii[last] * radii[last] / power - cap;
            let shifted = (self.multiplier + self.penalty * c).max(0.0);
            value += (shifted * shifted - self.multiplier * self.multiplier) / (2.0 * self.penalty);
            g_r[last] += shifted * 2.0 * radii[last] / power;
        }
        // radii sit on the sphere, so dr/du = I − r̂r̂ᵀ
        let r_norm_sq = sum_sq(&radii);
        let radial = dot(&g_r, &radii) / r_norm_sq;
        let g_u: Vec<f64> = g_r.iter().zip(&radii).map(|(g, r)| g - radial * r).collect();
        let mut grad = vec![0.0; g_u.len()];
        let mut acc = 0.0;
        for j in (0..g_u.len()).rev() {
            acc += g_u[j];
            grad[j] = acc;
        }
        Ok(Eval {
            deltas,
            radii,
            value,
            mi,
            grad,
        })
    }
}

/// Bound-constrained L-BFGS with active-set masking.
struct Lbfgs {
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl Lbfgs {
    fn direction(&self, grad: &[f64], free: &[bool]) -> Vec<f64> {
        let mask = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect()
        };
        let mut q = mask(grad);
        let masked: Vec<(Vec<f64>, Vec<f64>)> =
            self.pairs.iter().map(|(s, y)| (mask(s), mask(y))).collect();
        let mut alphas = Vec::with_capacity(masked.len());
        for (s, y) in masked.iter().rev() {
            let sy = dot(s, y);
            if sy <= 0.0 {
                alphas.push(0.0);
                continue;
            }
            let a = dot(s, &q) / sy;
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y)) = masked.last() {
            let (sy, yy) = (dot(s, y), dot(y, y));
            if sy > 0.0 && yy > 0.0 {
                q.iter_mut().for_each(|qi| *qi *= sy / yy);
            }
        }
        for ((s, y), a) in masked.iter().zip(alphas.iter().rev()) {
            let sy = dot(s, y);
            if sy <= 0.0 {
                continue;
            }
            let b = dot(y, &q) / sy;
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter().zip(free).map(|(x, &f)| if f { -x } else { 0.0 }).collect()
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy > 1e-12 * sum_sq(&s).sqrt() * sum_sq(&y).sqrt() && sy > 0.0 {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y));
        }
    }
}

/// Runs projected L-BFGS from `start`; returns the final point, iterations
/// used and whether a stopping test (rather than the budget) ended it.
fn minimize(obj: &Objective<'_>, start: Eval, budget: usize) -> Result<(Eval, usize, bool)> {
    let ctl = &obj.problem.controls;
    let mut lbfgs = Lbfgs {
        memory: ctl.memory.max(1),
        pairs: VecDeque::new(),
    };
    let mut cur = start;
    let mut small_steps = 0;
    for it in 0..budget {
        let free: Vec<bool> = cur
            .deltas
            .iter()
            .zip(&cur.grad)
            .map(|(d, g)| *d > 0.0 || *g < 0.0)
            .collect();
        let pg_max = cur
            .grad
            .iter()
            .zip(&free)
            .filter(|(_, f)| **f)
            .map(|(g, _)| g.abs())
            .fold(0.0, f64::max);
        if pg_max < ctl.gradient_tolerance {
            return Ok((cur, it, true));
        }
        let mut dir = lbfgs.direction(&cur.grad, &free);
        if dot(&dir, &cur.grad) >= 0.0 {
            lbfgs.pairs.clear();
            dir = cur.grad.iter().zip(&free).map(|(g, &f)| if f { -g } else { 0.0 }).collect();
        }
        let scale = cur.deltas.iter().sum::<f64>().max(1e-12);
        let dir_max = dir.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let mut t = if lbfgs.pairs.is_empty() {
            (0.1 * scale / dir_max).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = cur
                .deltas
                .iter()
                .zip(&dir)
                .map(|(d, s)| (d + t * s).max(0.0))
                .collect();
            if trial.iter().any(|d| *d > 0.0) {
                let step: Vec<f64> = trial.iter().zip(&cur.deltas).map(|(a, b)| a - b).collect();
                let decrease = dot(&cur.grad, &step);
                let cand = obj.eval(trial)?;
                if cand.value <= cur.value + 1e-4 * decrease {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            if lbfgs.pairs.is_empty() {
                // no descent along the projected gradient either
                return Ok((cur, it, true));
            }
            lbfgs.pairs.clear();
            continue;
        };
        let s: Vec<f64> = next.deltas.iter().zip(&cur.deltas).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        lbfgs.push(s, y);
        let improvement = cur.value - next.value;
        cur = next;
        if improvement < ctl.tolerance_bits {
            small_steps += 1;
            if small_steps >= 3 {
                return Ok((cur, it + 1, true));
            }
        } else {
            small_steps = 0;
        }
    }
    Ok((cur, budget, false))
}

/// Solves formulation G1.
///
/// The result is feasible (power equality to rounding, monotone radii, PAPR
/// within the cap) and never has lower MI than the feasible version of its
/// starting point. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn solve_g1(p: &G1Problem) -> Result<G1Result> {
    p.validate()?;
    let n = p.n_points;
    let power = p.power();
    let base = p.init.index_base();
    let mut init = p.initial_radii()?;
    let target_sq = n as f64 * power;
    let init_norm = sum_sq(&init);
    if init_norm <= 0.0 {
        return Err(invalid("starting radii are all zero"));
    }
    init.iter_mut().for_each(|r| *r *= (target_sq / init_norm).sqrt());
    if let Some(cap) = p.papr_cap {
        init = project_papr(&init, power, cap);
    }
    let u = phasors(n, base);
    let grid = &p.controls.grid;
    let init_mi = grid_mi_radius_gradient(&init, &u, p.sigma2, grid)?.0;

    let mut obj = Objective {
        problem: p,
        phasors: u.clone(),
        target_sq,
        multiplier: 0.0,
        penalty: p.controls.penalty_initial,
    };
    let mut cur = obj.eval(radii_to_increments(&init)?)?;
    let mut used = 0;
    let mut converged = false;
    let outer = if p.papr_cap.is_some() { p.controls.max_outer.max(1) } else { 1 };
    let mut last_violation = f64::INFINITY;
    for _ in 0..outer {
        let budget = p.controls.max_iterations.saturating_sub(used);
        if budget == 0 {
            break;
        }
        // re-evaluate under the current multiplier before descending
        cur = obj.eval(cur.deltas)?;
        let (next, its, conv) = minimize(&obj, cur, budget)?;
        used += its;
        cur = next;
        converged = conv;
        let Some(cap) = p.papr_cap else { break };
        let last = cur.radii[n - 1];
        let c = last * last / power - cap;
        obj.multiplier = (obj.multiplier + obj.penalty * c).max(0.0);
        if c <= 1e-9 * cap {
            break;
        }
        if c > 0.25 * last_violation {
            obj.penalty *= p.controls.penalty_growth;
        }
        last_violation = c;
    }

    let mut radii = cur.radii;
    let mut mi = cur.mi;
    if let Some(cap) = p.papr_cap {
        let projected = project_papr(&radii, power, cap);
        if projected != radii {
            mi = grid_mi_radius_gradient(&projected, &u, p.sigma2, grid)?.0;
            radii = projected;
        }
    } else {
        let k = (target_sq / sum_sq(&radii)).sqrt();
        radii.iter_mut().for_each(|r| *r *= k);
    }
    if mi < init_mi {
        radii = init.clone();
        mi = init_mi;
    }
    let mean = sum_sq(&radii) / n as f64;
    Ok(G1Result {
        constraint_residuals: residuals(&radii, p),
        papr: radii[n - 1] * radii[n - 1] / mean,
        radii,
        mi_bits: mi,
        init_radii: init,
        init_mi_bits: init_mi,
        iterations: used,
        converged,
        index_base: base.offset(),
    })
}
