//! Monte Carlo estimates that the bounds must dominate: the mean forward
//! time, the binned total-variation distance of `B_t` from its stationary
//! law, and the coupling-tail upper estimate `2 P(tau > t)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::lorden_theta;
use crate::chain::{run_coupling_with_streams, CouplingConfig, RunStreams};
use crate::dist::{Law, LifetimeLaw};
use crate::error::{Error, Result};
use crate::renewal::sample_readouts;
use crate::rng::{Stream, UniformSource};
use crate::stats::{isotonic_nonincreasing, mean_ci, wilson_interval, Z95};

pub const DEFAULT_BINS: usize = 128;
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Upper quantile of the stationary law where the regular cells end.
pub const BIN_QUANTILE: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMethod {
    BinnedL1,
    CouplingTail,
}

/// `bins` equal cells on `[0, upper)` plus one tail cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    pub bins: usize,
    pub upper: f64,
}

impl BinSpec {
    fn cell(&self, x: f64) -> usize {
        if x >= self.upper {
            self.bins
        } else {
            ((x / self.upper * self.bins as f64) as usize).min(self.bins - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TVCurveEstimate {
    pub t_grid: Vec<f64>,
    pub tv_hat: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub method: TvMethod,
    pub n_paths: usize,
    pub bins: Option<BinSpec>,
}

impl TVCurveEstimate {
    /// Nonincreasing least-squares projection of `tv_hat`.
    pub fn isotonic(&self) -> Vec<f64> {
        isotonic_nonincreasing(&self.tv_hat)
    }
}

/// Binned L1 distance between the law of `B_t` (from age `b1`) and the
/// stationary backward law at every `t` in `ts`, one set of paths for all
/// times. The interval half-width is the bootstrap half-width plus
/// `sum_cells sqrt(p (1 - p) / n)`, which bounds the upward bias of the
/// plug-in L1 distance.
pub fn tv_binned_curve(
    law: &LifetimeLaw,
    b1: f64,
    ts: &[f64],
    n_paths: usize,
    bins: usize,
    seed: u64,
) -> Result<TVCurveEstimate> {
    if bins == 0 || n_paths == 0 {
        return Err(Error::InvalidParameter("bins and n_paths must be positive".into()));
    }
    if ts.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::Domain("times must be finite and nonnegative".into()));
    }
    let stationary = law.stationary_backward()?;
    let spec = BinSpec {
        bins,
        upper: stationary.quantile(BIN_QUANTILE),
    };
    let target: Vec<f64> = (0..=bins)
        .map(|k| {
            let lo = spec.upper * k as f64 / bins as f64;
            if k == bins {
                stationary.sf(spec.upper)
            } else {
                let hi = spec.upper * (k + 1) as f64 / bins as f64;
                stationary.cdf(hi) - stationary.cdf(lo)
            }
        })
        .collect();
    let reads = sample_readouts(law, b1, ts, n_paths, seed, "tv-binned")?;
    let mut tv_hat = Vec::with_capacity(ts.len());
    let mut ci = Vec::with_capacity(ts.len());
    for (ti, r) in reads.iter().enumerate() {
        let cells: Vec<u16> = r.iter().map(|x| spec.cell(x.backward) as u16).collect();
        let counts = count_cells(&cells, bins + 1);
        let tv = l1(&counts, &target, n_paths);
        let boots: Vec<f64> = (0..DEFAULT_BOOTSTRAP)
            .into_par_iter()
            .map(|rep| {
                let mut src = Stream::new(seed, "tv-bootstrap", ti as u64, rep as u64);
                let mut c = vec![0u32; bins + 1];
                for _ in 0..n_paths {
                    let i = ((src.next_uniform() * n_paths as f64) as usize).min(n_paths - 1);
                    c[cells[i] as usize] += 1;
                }
                l1(&c, &target, n_paths)
            })
            .collect();
        let (lo, hi) = percentile_interval(boots);
        let bias: f64 = counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n_paths as f64;
                (p * (1.0 - p) / n_paths as f64).sqrt()
            })
            .sum();
        tv_hat.push(tv);
        ci.push((hi - lo) / 2.0 + bias);
    }
    Ok(TVCurveEstimate {
        t_grid: ts.to_vec(),
        tv_hat,
        ci_halfwidth: ci,
        method: TvMethod::BinnedL1,
        n_paths,
        bins: Some(spec),
    })
}

/// Single-time [`tv_binned_curve`]; returns `(estimate, ci_halfwidth)`.
pub fn tv_binned(law: &LifetimeLaw, b1: f64, t: f64, n_paths: usize, bins: usize, seed: u64) -> Result<(f64, f64)> {
    let c = tv_binned_curve(law, b1, &[t], n_paths, bins, seed)?;
    Ok((c.tv_hat[0], c.ci_halfwidth[0]))
}

fn count_cells(cells: &[u16], n: usize) -> Vec<u32> {
    let mut c = vec![0u32; n];
    for &k in cells {
        c[k as usize] += 1;
    }
    c
}

fn l1(counts: &[u32], target: &[f64], n: usize) -> f64 {
    counts
        .iter()
        .zip(target)
        .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
        .sum::<f64>()
        .min(2.0)
}

fn percentile_interval(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
    (at(0.025), at(0.975))
}

/// `2 P(tau > t)` with the second start drawn from the stationary backward
/// law for every run; `cfg.b2` is ignored. Runs that exhaust the attempt
/// budget count as `tau = inf`. Half-widths are the larger side of the
/// 95% Wilson interval, doubled.
pub fn tv_coupling_tail(cfg: &CouplingConfig, ts: &[f64], n_runs: usize) -> Result<TVCurveEstimate> {
    if n_runs == 0 {
        return Err(Error::InvalidParameter("n_runs must be positive".into()));
    }
    let taus = coupling_times_stationary(cfg, n_runs, "tv-tail")?;
    let mut tv_hat = Vec::with_capacity(ts.len());
    let mut ci = Vec::with_capacity(ts.len());
    for &t in ts {
        let k = taus.iter().filter(|tau| tau.is_none_or(|x| x > t)).count();
        let p = k as f64 / n_runs as f64;
        let (lo, hi) = wilson_interval(k, n_runs, Z95);
        tv_hat.push(2.0 * p);
        ci.push(2.0 * (p - lo).max(hi - p));
    }
    Ok(TVCurveEstimate {
        t_grid: ts.to_vec(),
        tv_hat,
        ci_halfwidth: ci,
        method: TvMethod::CouplingTail,
        n_paths: n_runs,
        bins: None,
    })
}

/// Coupling times with `b2` drawn from the stationary backward law per run.
pub fn coupling_times_stationary(cfg: &CouplingConfig, n_runs: usize, label: &str) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    let stationary = cfg.law.stationary_backward()?;
    let hi = cfg.law.support().hi;
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut start = Stream::new(cfg.seed, label, i as u64, 3);
            let b2 = stationary.quantile(start.next_uniform()).min(hi.next_down());
            let mut run_cfg = cfg.clone();
            run_cfg.b2 = b2;
            let run = run_coupling_with_streams(&run_cfg, RunStreams::for_run(cfg.seed, label, i as u64), None)?;
            Ok(run.tau)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LordenReport {
    pub law: String,
    pub t: f64,
    pub n_paths: usize,
    pub mean_forward: f64,
    /// 95% half-width of `mean_forward`.
    pub ci_halfwidth: f64,
    pub std_err: f64,
    pub theta: f64,
    /// `E zeta^2 / (2 E zeta)`.
    pub equilibrium_mean: f64,
    /// `mean_forward <= theta + 3 std_err`.
    pub within_bound: bool,
}

impl LordenReport {
    /// Whether the estimate is within `k` half-widths of the equilibrium mean.
    pub fn matches_equilibrium(&self, k: f64) -> bool {
        (self.mean_forward - self.equilibrium_mean).abs() <= k * self.ci_halfwidth
    }
}

pub fn lorden_check(law: &LifetimeLaw, b1: f64, t: f64, n_paths: usize, seed: u64) -> Result<LordenReport> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let theta = lorden_theta(law)?;
    let reads = sample_readouts(law, b1, &[t], n_paths, seed, "lorden")?;
    let forward: Vec<f64> = reads[0].iter().map(|r| r.forward).collect();
    let m = mean_ci(&forward);
    Ok(LordenReport {
        law: law.to_string(),
        t,
        n_paths,
        mean_forward: m.mean,
        ci_halfwidth: m.half_width,
        std_err: m.std_err,
        theta,
        equilibrium_mean: theta / 2.0,
        within_bound: m.mean <= theta + 3.0 * m.std_err,
    })
}

/// CSV with header `t,tv_binned,ci,tv_coupling,ci,bound`.
#[allow(clippy::needless_range_loop)]
pub fn write_tv_csv<W: Write>(
    binned: &TVCurveEstimate,
    tail: &TVCurveEstimate,
    bound: &[f64],
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "t,tv_binned,ci,tv_coupling,ci,bound")?;
    for i in 0..binned.t_grid.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            binned.t_grid[i], binned.tv_hat[i], binned.ci_halfwidth[i], tail.tv_hat[i], tail.ci_halfwidth[i], bound[i]
        )?;
    }
    Ok(())
}
