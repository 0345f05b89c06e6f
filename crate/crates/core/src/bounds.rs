//! Constants of the polynomial total-variation bound and its optimisation
//! over the threshold `R`.
//!
//! With `Theta = E zeta^2 / E zeta`, `pi_R = 1 - Theta / R`,
//! `P_R = pi_R (1 - F(R))`, `kappa_R = inf_{a in [0, R]} kappa(F_a, F)` and
//! `q_R = 1 - kappa_R P_R`:
//!
//! ```text
//! K1 = sum_{n>=1} (n+2)^(alpha-1) q_R^(n-1)
//! K2 = sum_{n>=1} (n+2)^alpha     q_R^(n-1)
//! E tau^alpha <= K1 (E theta_1^alpha(b1) + E theta_1^alpha(b2)) + K2 E zeta^alpha
//! K(alpha, b1) = K1 E theta_1^alpha(b1) + K2 E zeta^alpha
//!              + K1 E zeta^(alpha+1) / ((alpha+1) E zeta)
//! ```
//!
//! and the distance to stationarity at time `t` is at most
//! `min(2, 2 K(alpha, b1) / t^alpha)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{common_part, Law, LifetimeLaw};
use crate::error::{Error, Result};

pub const DEFAULT_KAPPA_GRID: usize = 257;
pub const DEFAULT_R_GRID: usize = 64;
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
/// Bounded laws keep `F(R)` at most this far below one.
pub const SUPPORT_MARGIN: f64 = 1e-9;

const GOLDEN_STEPS: usize = 48;

pub fn lorden_theta(law: &LifetimeLaw) -> Result<f64> {
    Ok(law.moment(2.0)? / law.moment(1.0)?)
}

/// `kappa(F_a, F)` less its quadrature error estimate.
fn kappa_at(law: &LifetimeLaw, a: f64) -> Result<f64> {
    let residual = law.residual(a)?;
    let cp = common_part(&residual, law);
    Ok((cp.kappa - cp.error).clamp(0.0, 1.0))
}

/// Lower bound on `inf_{a in [0, R]} kappa(F_a, F)`: a grid scan over
/// `grid` ages followed by golden-section refinement around the smallest
/// grid value.
pub fn kappa_r(law: &LifetimeLaw, r: f64, grid: usize) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("R must be finite and nonnegative, got {r}")));
    }
    if !(law.sf(r) > 0.0) {
        return Err(Error::Infeasible(format!("F(R) = 1 at R = {r}")));
    }
    if law.is_memoryless() {
        return Ok(1.0);
    }
    if r == 0.0 {
        return kappa_at(law, 0.0);
    }
    let n = grid.max(2);
    let ages: Vec<f64> = (0..n).map(|i| r * i as f64 / (n - 1) as f64).collect();
    let values = ages
        .par_iter()
        .map(|&a| kappa_at(law, a))
        .collect::<Result<Vec<_>>>()?;
    let (imin, &vmin) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let lo = ages[imin.saturating_sub(1)];
    let hi = ages[(imin + 1).min(n - 1)];
    Ok(vmin.min(golden_min(|a| kappa_at(law, a), lo, hi)?))
}

fn golden_min<G: Fn(f64) -> Result<f64>>(g: G, mut lo: f64, mut hi: f64) -> Result<f64> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1)?, g(x2)?);
    let mut best = g1.min(g2);
    for _ in 0..GOLDEN_STEPS {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - phi * (hi - lo);
            g1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + phi * (hi - lo);
            g2 = g(x2)?;
        }
        best = best.min(g1).min(g2);
    }
    Ok(best)
}

/// `(K1, K2)` at `(alpha, q)`, each a partial sum plus a certified bound on
/// the remaining tail that is below `tol` times the sum.
pub fn series_constants(alpha: f64, q: f64, tol: f64) -> Result<(f64, f64)> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be at least 1, got {alpha}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("series tolerance must be positive, got {tol}")));
    }
    Ok((power_series(alpha - 1.0, q, tol), power_series(alpha, q, tol)))
}

/// `sum_{n>=1} (n+2)^p q^(n-1)`.
fn power_series(p: f64, q: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1u64;
    loop {
        let m = (n + 2) as f64;
        let term = m.powf(p) * q.powi((n - 1) as i32);
        let term = if term.is_finite() {
            term
        } else {
            ((n - 1) as f64 * q.ln() + p * m.ln()).exp()
        };
        sum += term;
        // ratio of consecutive terms, decreasing in n
        let r = (1.0 + 1.0 / m).powf(p) * q;
        if r < 1.0 {
            let tail = term * r / (1.0 - r);
            if tail < tol * sum || term == 0.0 {
                return sum + tail;
            }
        }
        n += 1;
    }
}

/// Rejects `alpha < 1` and `alpha > kappa_max - 1`.
pub fn check_alpha(law: &LifetimeLaw, alpha: f64) -> Result<()> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::Infeasible(format!("alpha must be at least 1, got {alpha}")));
    }
    let cap = law.kappa_max() - 1.0;
    if alpha > cap {
        return Err(Error::Infeasible(format!(
            "alpha = {alpha} exceeds {cap} allowed by the moments of {law}"
        )));
    }
    Ok(())
}

fn check_r(law: &LifetimeLaw, r: f64, theta: f64) -> Result<()> {
    if !(r > theta && r.is_finite()) {
        return Err(Error::Infeasible(format!("R = {r} must exceed Theta = {theta}")));
    }
    if !(law.sf(r) > 0.0) {
        return Err(Error::Infeasible(format!("F(R) = 1 at R = {r}")));
    }
    Ok(())
}

/// Every constant of the bound at one `(alpha, R, b1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSet {
    pub law: String,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: f64,
    #[serde(rename = "pi_R")]
    pub pi_r: f64,
    #[serde(rename = "P_R")]
    pub p_r: f64,
    #[serde(rename = "kappa_R")]
    pub kappa_r: f64,
    #[serde(rename = "q_R")]
    pub q_r: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    /// `E theta_1^alpha` started from age `b1`.
    pub delay_moment: f64,
    /// `E zeta^alpha`.
    pub zeta_moment: f64,
    /// `E zeta^(alpha+1) / ((alpha+1) E zeta)`.
    pub stationary_delay_moment: f64,
    #[serde(rename = "K_alpha_b1")]
    pub k_of_alpha_b1: f64,
    pub b1: f64,
    pub series_tolerance: f64,
}

impl BoundSet {
    pub fn compute(law: &LifetimeLaw, alpha: f64, r: f64, b1: f64) -> Result<Self> {
        check_alpha(law, alpha)?;
        let theta = lorden_theta(law)?;
        check_r(law, r, theta)?;
        let kr = kappa_r(law, r, DEFAULT_KAPPA_GRID)?;
        Self::with_kappa(law, alpha, r, b1, kr, DEFAULT_SERIES_TOL)
    }

    /// Assembles the set from a precomputed `kappa_R`.
    pub fn with_kappa(law: &LifetimeLaw, alpha: f64, r: f64, b1: f64, kappa_r: f64, tol: f64) -> Result<Self> {
        check_alpha(law, alpha)?;
        let theta = lorden_theta(law)?;
        check_r(law, r, theta)?;
        let pi_r = 1.0 - theta / r;
        let p_r = pi_r * law.sf(r);
        let q_r = 1.0 - kappa_r * p_r;
        if !(q_r < 1.0) {
            return Err(Error::Infeasible(format!(
                "no coupling guarantee at R = {r}: kappa_R * P_R = {}",
                kappa_r * p_r
            )));
        }
        let (k1, k2) = series_constants(alpha, q_r, tol)?;
        let delay_moment = law.residual(b1)?.moment(alpha)?;
        let zeta_moment = law.moment(alpha)?;
        let stationary_delay_moment = law.stationary_backward()?.moment(alpha)?;
        Ok(Self {
            law: law.to_string(),
            alpha,
            r,
            theta,
            pi_r,
            p_r,
            kappa_r,
            q_r,
            k1,
            k2,
            delay_moment,
            zeta_moment,
            stationary_delay_moment,
            k_of_alpha_b1: k1 * delay_moment + k2 * zeta_moment + k1 * stationary_delay_moment,
            b1,
            series_tolerance: tol,
        })
    }

    /// `min(2, 2 K / t^alpha)`.
    pub fn tv_bound(&self, t: f64) -> f64 {
        (2.0 * self.k_of_alpha_b1 / t.powf(self.alpha)).min(2.0)
    }

    /// Aligned `name = value` lines.
    pub fn to_text(&self) -> String {
        let rows: [(&str, String); 16] = [
            ("law", self.law.clone()),
            ("alpha", self.alpha.to_string()),
            ("b1", self.b1.to_string()),
            ("R", self.r.to_string()),
            ("Theta", self.theta.to_string()),
            ("pi_R", self.pi_r.to_string()),
            ("P_R", self.p_r.to_string()),
            ("kappa_R", self.kappa_r.to_string()),
            ("q_R", self.q_r.to_string()),
            ("K1", self.k1.to_string()),
            ("K2", self.k2.to_string()),
            ("E theta1^alpha", self.delay_moment.to_string()),
            ("E zeta^alpha", self.zeta_moment.to_string()),
            ("stationary term", self.stationary_delay_moment.to_string()),
            ("K(alpha,b1)", self.k_of_alpha_b1.to_string()),
            ("series_tol", self.series_tolerance.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k:<16}= {v}\n")).collect()
    }
}

/// `E tau^alpha` bound for the pair started at ages `(b1, b2)`.
pub fn tau_moment_bound(law: &LifetimeLaw, alpha: f64, r: f64, b1: f64, b2: f64) -> Result<f64> {
    let set = BoundSet::compute(law, alpha, r, b1)?;
    tau_moment_bound_from(&set, law, b2)
}

/// As [`tau_moment_bound`], reusing the constants of `set`.
pub fn tau_moment_bound_from(set: &BoundSet, law: &LifetimeLaw, b2: f64) -> Result<f64> {
    let m2 = law.residual(b2)?.moment(set.alpha)?;
    Ok(set.k1 * (set.delay_moment + m2) + set.k2 * set.zeta_moment)
}

/// `K(alpha, b1)`: the bound averaged over a stationary second start.
pub fn stationary_averaged_k(law: &LifetimeLaw, alpha: f64, r: f64, b1: f64) -> Result<f64> {
    Ok(BoundSet::compute(law, alpha, r, b1)?.k_of_alpha_b1)
}

pub fn tv_bound_curve(set: &BoundSet, ts: &[f64]) -> Vec<(f64, f64)> {
    ts.iter().map(|&t| (t, set.tv_bound(t))).collect()
}

pub fn write_curve_csv<W: Write>(curve: &[(f64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "t,bound")?;
    for (t, b) in curve {
        writeln!(w, "{t},{b}")?;
    }
    Ok(())
}

/// Range searched by [`optimize_r`] when none is given: from just above
/// `Theta` to the `1e-4` upper quantile of `F`.
pub fn default_r_range(law: &LifetimeLaw) -> Result<(f64, f64)> {
    let theta = lorden_theta(law)?;
    Ok((theta * 1.01, law.quantile_sf(1e-4)))
}

#[derive(Debug, Clone, Serialize)]
pub struct ROptimum {
    pub r_star: f64,
    pub k_star: f64,
    pub bound: BoundSet,
}

/// Minimises `K(alpha, b1)` over `grid` log-spaced values of `R` in
/// `range`, skipping values with `R <= Theta` or `F(R) >= 1 - 1e-9`.
pub fn optimize_r(law: &LifetimeLaw, alpha: f64, b1: f64, range: Option<(f64, f64)>, grid: usize) -> Result<ROptimum> {
    check_alpha(law, alpha)?;
    let theta = lorden_theta(law)?;
    let (lo, hi) = match range {
        Some(r) => r,
        None => default_r_range(law)?,
    };
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Infeasible(format!("empty R range [{lo}, {hi}]")));
    }
    let n = grid.max(1);
    let rs: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .filter(|&r| r > theta && law.cdf(r) < 1.0 - SUPPORT_MARGIN)
        .collect();
    if rs.is_empty() {
        return Err(Error::Infeasible(format!(
            "no R in [{lo}, {hi}] satisfies R > Theta = {theta} and F(R) < 1"
        )));
    }
    let kappas = nested_kappa_r(law, &rs)?;
    // K >= 3^(alpha-1) / (1-q) (E theta^alpha + stationary term) + 3^alpha / (1-q) E zeta^alpha,
    // which lets most of the grid be discarded before summing any series
    let delay = law.residual(b1)?.moment(alpha)?;
    let stat = law.stationary_backward()?.moment(alpha)?;
    let zeta = law.moment(alpha)?;
    let mut order: Vec<(f64, f64, f64)> = rs
        .iter()
        .zip(&kappas)
        .map(|(&r, &k)| {
            let q = 1.0 - k * (1.0 - theta / r) * law.sf(r);
            let lb = (3f64.powf(alpha - 1.0) * (delay + stat) + 3f64.powf(alpha) * zeta) / (1.0 - q);
            (lb, r, k)
        })
        .filter(|c| c.0.is_finite())
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut best: Option<BoundSet> = None;
    for (lb, r, k) in order {
        if best.as_ref().is_some_and(|b| lb >= b.k_of_alpha_b1) {
            break;
        }
        let Ok(set) = BoundSet::with_kappa(law, alpha, r, b1, k, DEFAULT_SERIES_TOL) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => set.k_of_alpha_b1 < b.k_of_alpha_b1 || (set.k_of_alpha_b1 == b.k_of_alpha_b1 && set.r < b.r),
        };
        if better {
            best = Some(set);
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no R in range yields a finite bound".into()))?;
    Ok(ROptimum {
        r_star: best.r,
        k_star: best.k_of_alpha_b1,
        bound: best,
    })
}

/// `kappa_R` at increasing `rs`. The infimum runs over nested intervals, so
/// each value is the running minimum of a scan of `[0, R_k]` at the
/// resolution [`kappa_r`] would use, sharing work across the grid.
fn nested_kappa_r(law: &LifetimeLaw, rs: &[f64]) -> Result<Vec<f64>> {
    if law.is_memoryless() {
        return Ok(vec![1.0; rs.len()]);
    }
    let r_max = rs[rs.len() - 1];
    let step = rs[0] / (DEFAULT_KAPPA_GRID - 1) as f64;
    let n = (r_max / step).ceil() as usize + 1;
    let ages: Vec<f64> = (0..n).map(|i| (i as f64 * step).min(r_max)).collect();
    let values = ages
        .par_iter()
        .map(|&a| kappa_at(law, a))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(rs.len());
    for &r in rs {
        let last = ages.partition_point(|&a| a <= r);
        let (imin, &vmin) = values[..last]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("age 0 is always scanned");
        let lo = ages[imin.saturating_sub(1)];
        let hi = if imin + 1 < last { ages[imin + 1] } else { r };
        let refined = golden_min(|a| kappa_at(law, a), lo, hi.max(lo))?;
        let tail = kappa_at(law, r)?;
        out.push(vmin.min(refined).min(tail));
    }
    // monotone by construction of the infimum
    for i in 1..out.len() {
        out[i] = out[i].min(out[i - 1]);
    }
    Ok(out)
}
