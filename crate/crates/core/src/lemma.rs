//! Decomposition of two laws into a common part and two residual parts,
//! and the coupled sampler built on it.
//!
//! With `kappa = int min(psi_1, psi_2)`, the common law has cdf
//! `M(s) / kappa` where `M(s) = int_{-inf}^s min(psi_1, psi_2)`, and the
//! residual law `j` has cdf `(Psi_j(s) - M(s)) / (1 - kappa)`. Given three
//! independent uniforms the sampler returns the same draw from the common
//! law for both coordinates when `u1 < kappa`, and independent-looking
//! residual draws (sharing `u3`) otherwise. Each coordinate then has its
//! original law and the two agree with probability exactly `kappa`.
//!
//! Both laws are represented lazily: cdfs and quantiles integrate the
//! relevant density between precomputed breakpoints on demand.

use rayon::prelude::*;

use crate::dist::{common_part_with, CommonPart, CommonPartOptions, Law, Support};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::rng::{Stream, UniformSource};

/// Within this distance of one the residual branch is never taken.
pub const DEGENERATE_KAPPA: f64 = 1e-12;

const INNER_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-12,
    max_intervals: 200,
};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CoupledPair {
    pub value1: f64,
    pub value2: f64,
    pub coupled: bool,
}

/// Piecewise-integrated density with cumulative masses at breakpoints.
#[derive(Debug, Clone)]
struct Tabulated {
    breaks: Vec<f64>,
    cum: Vec<f64>,
}

impl Tabulated {
    fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    fn mass_to<D: Fn(f64) -> f64>(&self, density: D, s: f64) -> f64 {
        if self.breaks.is_empty() || s <= self.breaks[0] {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= s);
        if i >= self.breaks.len() {
            return self.total();
        }
        let left = self.breaks[i - 1];
        self.cum[i - 1] + quad::integrate(density, left, s, INNER_TOL).value
    }

    /// `inf { s : mass_to(s) >= target }`.
    fn invert<D: Fn(f64) -> f64 + Copy>(&self, density: D, target: f64) -> f64 {
        let n = self.breaks.len();
        let i = self.cum.partition_point(|&c| c < target).clamp(1, n - 1);
        let (a, b) = (self.breaks[i - 1], self.breaks[i]);
        invert_mass(density, a, b, target - self.cum[i - 1])
    }
}

impl Tabulated {
    /// Splits the segments at `points` and re-integrates each piece, so
    /// that inversion only ever searches a short interval.
    fn refined<D: Fn(f64) -> f64 + Copy>(&self, density: D, points: &[f64]) -> Tabulated {
        let (lo, hi) = match (self.breaks.first(), self.breaks.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return self.clone(),
        };
        let mut breaks: Vec<f64> = self
            .breaks
            .iter()
            .copied()
            .chain(points.iter().copied().filter(|&x| x.is_finite() && x > lo && x < hi))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut cum = vec![0.0];
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            acc += if w[1].is_infinite() {
                quad::integrate_to_infinity(density, w[0], INNER_TOL).value
            } else {
                quad::integrate(density, w[0], w[1], INNER_TOL).value
            };
            cum.push(acc);
        }
        Tabulated { breaks, cum }
    }
}

/// Incremental root search for the point where the mass from `a` reaches
/// `target`; `b` may be infinite.
fn invert_mass<D: Fn(f64) -> f64 + Copy>(density: D, a: f64, b: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return a;
    }
    let mut left = a;
    let mut acc = 0.0;
    let mut right = b;
    if b.is_infinite() {
        let mut step = a.abs().max(1.0);
        loop {
            let r = left + step;
            let m = quad::integrate(density, left, r, INNER_TOL).value;
            if acc + m >= target || !r.is_finite() {
                right = r;
                break;
            }
            acc += m;
            left = r;
            step *= 2.0;
        }
    }
    // safeguarded Newton on the accumulated mass
    let mut x = 0.5 * (left + right);
    for _ in 0..400 {
        let m = quad::integrate(density, left, x, INNER_TOL).value;
        let g = acc + m - target;
        // mass is only known to a few ulps of the target
        if g.abs() <= 4.0 * f64::EPSILON * target {
            return x;
        }
        if g < 0.0 {
            acc += m;
            left = x;
        } else {
            right = x;
        }
        if right - left <= 1e-12 {
            return right;
        }
        let mut next = x - g / density(x);
        if (next - x).abs() <= 1e-14 * x.abs().max(1.0) {
            return next.clamp(left, right);
        }
        if !(next > left && next < right) {
            next = 0.5 * (left + right);
            if next <= left || next >= right {
                return right;
            }
        }
        x = next;
    }
    right
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Common/residual decomposition of two laws.
#[derive(Clone)]
pub struct CommonDecomposition<'a> {
    psi: [&'a dyn Law; 2],
    common: CommonPart,
    table: Tabulated,
    residual: Option<[Tabulated; 2]>,
}

impl std::fmt::Debug for CommonDecomposition<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommonDecomposition")
            .field("kappa", &self.common.kappa)
            .field("error", &self.common.error)
            .field("residuals_used", &self.residual.is_some())
            .finish()
    }
}

/// Decomposes `psi1` and `psi2`; fails when they have no common part.
pub fn decompose<'a>(psi1: &'a dyn Law, psi2: &'a dyn Law) -> Result<CommonDecomposition<'a>> {
    CommonDecomposition::with_options(psi1, psi2, CommonPartOptions::default())
}

/// Coupled draw from three uniforms.
pub fn sample_coupled(dec: &CommonDecomposition<'_>, u1: f64, u2: f64, u3: f64) -> CoupledPair {
    dec.sample(u1, u2, u3)
}

impl<'a> CommonDecomposition<'a> {
    pub fn with_options(psi1: &'a dyn Law, psi2: &'a dyn Law, opts: CommonPartOptions) -> Result<Self> {
        let common = common_part_with(psi1, psi2, opts);
        if !(common.kappa > 0.0) {
            return Err(Error::NoOverlap);
        }
        let mut cum = Vec::with_capacity(common.breaks.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for m in &common.segment_mass {
            acc += m;
            cum.push(acc);
        }
        let table = Tabulated {
            breaks: common.breaks.clone(),
            cum,
        };
        let mut dec = Self {
            psi: [psi1, psi2],
            common,
            table,
            residual: None,
        };
        if !dec.is_degenerate() {
            dec.residual = Some([dec.residual_table(0, opts.tol), dec.residual_table(1, opts.tol)]);
        }
        Ok(dec)
    }

    fn residual_table(&self, j: usize, tol: Tolerance) -> Tabulated {
        let s = self.psi[j].support();
        let mut breaks: Vec<f64> = self
            .psi[j]
            .kinks()
            .into_iter()
            .chain(self.common.breaks.iter().copied().filter(|b| b.is_finite()))
            .chain([s.lo, s.hi])
            .filter(|&b| b >= s.lo && b <= s.hi)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut cum = vec![0.0];
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let est = if w[1].is_infinite() {
                quad::integrate_to_infinity(|x| self.residual_density(j, x), w[0], tol)
            } else {
                quad::integrate(|x| self.residual_density(j, x), w[0], w[1], tol)
            };
            acc += est.value;
            cum.push(acc);
        }
        Tabulated { breaks, cum }
    }

    pub fn kappa(&self) -> f64 {
        if self.is_degenerate() {
            1.0
        } else {
            self.common.kappa
        }
    }

    /// Quadrature error estimate of `kappa`.
    pub fn kappa_error(&self) -> f64 {
        self.common.error
    }

    /// True when `kappa` is within [`DEGENERATE_KAPPA`] of one; the residual
    /// laws are then not constructed.
    pub fn is_degenerate(&self) -> bool {
        self.common.kappa >= 1.0 - DEGENERATE_KAPPA
    }

    fn min_density(&self, x: f64) -> f64 {
        finite_or_zero(self.psi[0].density(x).min(self.psi[1].density(x)))
    }

    fn residual_density(&self, j: usize, x: f64) -> f64 {
        let own = self.psi[j].density(x);
        let other = self.psi[1 - j].density(x);
        finite_or_zero(own - own.min(other)).max(0.0)
    }

    /// Density of the common law.
    pub fn common_density(&self, s: f64) -> f64 {
        if self.is_degenerate() {
            return self.psi[1].density(s);
        }
        self.min_density(s) / self.common.kappa
    }

    /// Cdf of the common law.
    pub fn common_cdf(&self, s: f64) -> f64 {
        if self.is_degenerate() {
            return self.psi[1].cdf(s);
        }
        (self.table.mass_to(|x| self.min_density(x), s) / self.common.kappa).clamp(0.0, 1.0)
    }

    /// Generalized inverse of the common cdf.
    pub fn common_quantile(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            // min(psi1, psi2) = psi2 almost everywhere
            return self.psi[1].quantile(u);
        }
        self.table.invert(|x| self.min_density(x), u * self.common.kappa)
    }

    /// Cdf of residual law `j` (0 or 1); `None` when degenerate.
    pub fn residual_cdf(&self, j: usize, s: f64) -> Option<f64> {
        let tab = &self.residual.as_ref()?[j];
        let mass = tab.mass_to(|x| self.residual_density(j, x), s);
        Some((mass / (1.0 - self.common.kappa)).clamp(0.0, 1.0))
    }

    /// Generalized inverse of residual cdf `j`; `None` when degenerate.
    pub fn residual_quantile(&self, j: usize, u: f64) -> Option<f64> {
        let tab = &self.residual.as_ref()?[j];
        let target = (u * (1.0 - self.common.kappa)).min(tab.total());
        Some(tab.invert(|x| self.residual_density(j, x), target))
    }

    /// Copy with inversion tables split at quantiles of both laws. Costs a
    /// few thousand quadratures up front and makes each draw much cheaper,
    /// which pays off for bulk sampling.
    pub fn refined(&self) -> Self {
        let mut points = Vec::new();
        for psi in self.psi {
            points.extend((1..REFINE_POINTS).map(|i| psi.quantile(i as f64 / REFINE_POINTS as f64)));
            points.extend((8..64).map(|k| psi.quantile_sf((-(k as f64)).exp2())));
        }
        let mut out = self.clone();
        if self.is_degenerate() {
            return out;
        }
        out.table = self.table.refined(|x| self.min_density(x), &points);
        if let Some(res) = &self.residual {
            out.residual = Some([
                res[0].refined(|x| self.residual_density(0, x), &points),
                res[1].refined(|x| self.residual_density(1, x), &points),
            ]);
        }
        out
    }

    /// Draw a coupled pair from three uniforms on `[0, 1)`.
    pub fn sample(&self, u1: f64, u2: f64, u3: f64) -> CoupledPair {
        if u1 < self.kappa() {
            let v = self.common_quantile(u2);
            return CoupledPair {
                value1: v,
                value2: v,
                coupled: true,
            };
        }
        let residual = |j| {
            self.residual_quantile(j, u3)
                .expect("residual branch is unreachable when kappa rounds to one")
        };
        CoupledPair {
            value1: residual(0),
            value2: residual(1),
            coupled: false,
        }
    }

    /// The common law as a [`Law`].
    pub fn common_law(&self) -> CommonLaw<'_, 'a> {
        CommonLaw(self)
    }

    /// Residual law `j` as a [`Law`]; `None` when degenerate.
    pub fn residual_law(&self, j: usize) -> Option<ResidualPart<'_, 'a>> {
        self.residual.as_ref().map(|_| ResidualPart(self, j))
    }
}

/// Draws per stream in [`sample_many`].
pub const DRAWS_PER_STREAM: usize = 4096;

const REFINE_POINTS: usize = 256;

/// `n` coupled draws; block `k` of [`DRAWS_PER_STREAM`] draws uses stream
/// `(seed, label, k)`, so the result does not depend on thread count.
pub fn sample_many(dec: &CommonDecomposition<'_>, n: usize, seed: u64, label: &str) -> Vec<CoupledPair> {
    let blocks = n.div_ceil(DRAWS_PER_STREAM);
    let dec = &dec.refined();
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let len = DRAWS_PER_STREAM.min(n - k * DRAWS_PER_STREAM);
            let mut src = Stream::new(seed, label, k as u64, 0);
            (0..len)
                .map(|_| {
                    let (u1, u2, u3) = (src.next_uniform(), src.next_uniform(), src.next_uniform());
                    dec.sample(u1, u2, u3)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub struct CommonLaw<'d, 'a>(&'d CommonDecomposition<'a>);

impl Law for CommonLaw<'_, '_> {
    fn cdf(&self, s: f64) -> f64 {
        self.0.common_cdf(s)
    }

    fn density(&self, s: f64) -> f64 {
        self.0.common_density(s)
    }

    fn support(&self) -> Support {
        let b = &self.0.common.breaks;
        Support {
            lo: b[0],
            hi: *b.last().unwrap(),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        self.0.common_quantile(u)
    }
}

pub struct ResidualPart<'d, 'a>(&'d CommonDecomposition<'a>, usize);

impl Law for ResidualPart<'_, '_> {
    fn cdf(&self, s: f64) -> f64 {
        self.0.residual_cdf(self.1, s).unwrap_or(0.0)
    }

    fn density(&self, s: f64) -> f64 {
        self.0.residual_density(self.1, s) / (1.0 - self.0.common.kappa)
    }

    fn support(&self) -> Support {
        self.0.psi[self.1].support()
    }

    fn quantile(&self, u: f64) -> f64 {
        self.0.residual_quantile(self.1, u).unwrap_or(f64::NAN)
    }
}
