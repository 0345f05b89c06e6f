//! Coupled pair of backward renewal processes.
//!
//! Both processes are first grown independently past `T1`, the larger of
//! the two first epochs. From then on every renewal of either process is an
//! examination epoch; the process renewing there is the leader, the other
//! one lags. At epoch `T` with leader interval `zeta` and lagging forward
//! time `D`, the window holds when `D <= R` and the leader is still alive at
//! `T + D`. Both processes are then stopped at `T + D`, where the lagging
//! backward time is 0 and the leader's is `beta = D`, and their next
//! intervals are drawn jointly from the decomposition of `(F_beta, F)`. A
//! common draw makes the next epochs coincide; that epoch is `tau` and the
//! paths are merged from there on.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::lorden_theta;
use crate::dist::{Law, LifetimeLaw};
use crate::error::{Error, Result};
use crate::lemma::{CommonDecomposition, CoupledPair};
use crate::rng::{Stream, UniformSource};

pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct CouplingConfig {
    pub law: LifetimeLaw,
    pub b1: f64,
    pub b2: f64,
    pub r: f64,
    pub max_attempts: u64,
    pub seed: u64,
}

impl CouplingConfig {
    pub fn new(law: LifetimeLaw, b1: f64, b2: f64, r: f64) -> Result<Self> {
        let cfg = Self {
            law,
            b1,
            b2,
            r,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let theta = lorden_theta(&self.law)?;
        if !(self.r > theta && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "R must exceed Theta = {theta}, got {}",
                self.r
            )));
        }
        if !(self.law.sf(self.r) > 0.0) {
            return Err(Error::InvalidParameter(format!("F(R) must be below 1 at R = {}", self.r)));
        }
        for b in [self.b1, self.b2] {
            if !(b >= 0.0 && b.is_finite() && self.law.sf(b) > 0.0) {
                return Err(Error::UnsupportedAge {
                    age: b,
                    law: self.law.to_string(),
                });
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidParameter("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// One examined leader epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttemptRecord {
    /// 1 or 2.
    pub leader: u8,
    pub epoch: f64,
    /// Forward time of the lagging process at `epoch`.
    pub lag_forward: f64,
    /// Interval the leader drew at `epoch`.
    pub leader_interval: f64,
    pub window: bool,
    /// Present exactly when `window` holds.
    pub lemma_coupled: Option<bool>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CouplingRun {
    pub tau: Option<f64>,
    pub attempts: u64,
    pub attempt_log: Vec<AttemptRecord>,
    pub coupled: bool,
    /// Renewal epochs of both processes. After `tau` both carry the same
    /// merged continuation.
    pub epochs: [Vec<f64>; 2],
    initial_ages: [f64; 2],
    known_until: [f64; 2],
}

impl CouplingRun {
    /// Backward time of process `j` (0 or 1) at `t`, or `None` past the
    /// simulated stretch.
    pub fn backward_at(&self, j: usize, t: f64) -> Option<f64> {
        if !(t >= 0.0) || t > self.known_until[j] {
            return None;
        }
        let e = &self.epochs[j];
        let n = e.partition_point(|&x| x <= t);
        Some(if n == 0 { self.initial_ages[j] + t } else { t - e[n - 1] })
    }

    /// Whether the epoch sequences agree bit for bit from `tau` on.
    pub fn merged_suffix_identical(&self) -> bool {
        let Some(tau) = self.tau else {
            return false;
        };
        let start = |e: &[f64]| e.iter().position(|&x| x.to_bits() == tau.to_bits());
        match (start(&self.epochs[0]), start(&self.epochs[1])) {
            (Some(i), Some(k)) => {
                let (a, b) = (&self.epochs[0][i..], &self.epochs[1][k..]);
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }

    /// Trace CSV with header
    /// `attempt,leader,epoch,lag_forward,leader_interval,window,lemma_coupled,beta`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "attempt,leader,epoch,lag_forward,leader_interval,window,lemma_coupled,beta")?;
        for (k, a) in self.attempt_log.iter().enumerate() {
            let lemma = a.lemma_coupled.map(|c| c.to_string()).unwrap_or_default();
            let beta = a.beta.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                k + 1,
                a.leader,
                a.epoch,
                a.lag_forward,
                a.leader_interval,
                a.window,
                lemma,
                beta
            )?;
        }
        Ok(())
    }
}

/// Uniform sources for one run: one per process and one for the lemma.
pub struct RunStreams<S> {
    pub process: [S; 2],
    pub lemma: S,
}

impl RunStreams<Stream> {
    pub fn for_run(seed: u64, label: &str, index: u64) -> Self {
        Self {
            process: [Stream::new(seed, label, index, 0), Stream::new(seed, label, index, 1)],
            lemma: Stream::new(seed, label, index, 2),
        }
    }
}

pub fn run_coupling(cfg: &CouplingConfig) -> Result<CouplingRun> {
    run_coupling_with_streams(cfg, RunStreams::for_run(cfg.seed, "couple", 0), None)
}

/// Runs the construction with the given sources. With a `horizon` the
/// merged continuation after `tau` is grown past it.
pub fn run_coupling_with_streams<S: UniformSource>(
    cfg: &CouplingConfig,
    mut streams: RunStreams<S>,
    horizon: Option<f64>,
) -> Result<CouplingRun> {
    let law = &cfg.law;
    let delays = [law.residual(cfg.b1)?, law.residual(cfg.b2)?];
    let mut epochs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut next = [
        delays[0].quantile(streams.process[0].next_uniform()),
        delays[1].quantile(streams.process[1].next_uniform()),
    ];
    let mut log = Vec::new();
    let mut attempts = 0u64;

    let tau = 'search: {
        if next[0] == next[1] {
            break 'search Some(next[0]);
        }
        let leader = if next[0] > next[1] { 0 } else { 1 };
        let lag = 1 - leader;
        let t1 = next[leader];
        while next[lag] < t1 {
            epochs[lag].push(next[lag]);
            next[lag] += law.quantile(streams.process[lag].next_uniform());
        }
        if next[lag] == t1 {
            break 'search Some(t1);
        }
        epochs[leader].push(t1);
        let (mut t, mut l) = (t1, leader);
        loop {
            if attempts == cfg.max_attempts {
                break 'search None;
            }
            attempts += 1;
            let g = 1 - l;
            let zeta = law.quantile(streams.process[l].next_uniform());
            let d = next[g] - t;
            let window = d <= cfg.r && zeta > d;
            let mut record = AttemptRecord {
                leader: l as u8 + 1,
                epoch: t,
                lag_forward: d,
                leader_interval: zeta,
                window,
                lemma_coupled: None,
                beta: None,
            };
            if window {
                let s = next[g];
                epochs[g].push(s);
                let u = [
                    streams.lemma.next_uniform(),
                    streams.lemma.next_uniform(),
                    streams.lemma.next_uniform(),
                ];
                let pair = lemma_draw(law, d, u)?;
                record.lemma_coupled = Some(pair.coupled);
                record.beta = Some(d);
                log.push(record);
                next[l] = s + pair.value1;
                next[g] = s + pair.value2;
                if pair.coupled {
                    break 'search Some(next[l]);
                }
            } else {
                log.push(record);
                next[l] = t + zeta;
            }
            if next[0] == next[1] {
                break 'search Some(next[0]);
            }
            l = if next[0] < next[1] { 0 } else { 1 };
            t = next[l];
            epochs[l].push(t);
        }
    };

    let known_until = match tau {
        Some(tau) => {
            for e in epochs.iter_mut() {
                e.push(tau);
            }
            let mut last = tau;
            if let Some(h) = horizon {
                while last <= h {
                    let zeta = law.quantile(streams.process[0].next_uniform());
                    if !(zeta > 0.0) {
                        return Err(Error::Domain(format!("zero-length renewal interval after {last}")));
                    }
                    last += zeta;
                    for e in epochs.iter_mut() {
                        e.push(last);
                    }
                }
            }
            [last, last]
        }
        // the pending epochs have not happened yet
        None => [next[0].next_down(), next[1].next_down()],
    };
    Ok(CouplingRun {
        tau,
        attempts,
        attempt_log: log,
        coupled: tau.is_some(),
        epochs,
        initial_ages: [cfg.b1, cfg.b2],
        known_until,
    })
}

/// Joint draw of the leader's remaining lifetime at age `beta` and the
/// lagging process's fresh interval.
fn lemma_draw(law: &LifetimeLaw, beta: f64, u: [f64; 3]) -> Result<CoupledPair> {
    if law.is_memoryless() {
        // F_beta = F, the common part is everything
        let v = law.quantile(u[1]);
        return Ok(CoupledPair {
            value1: v,
            value2: v,
            coupled: true,
        });
    }
    let residual = law.residual(beta)?;
    match CommonDecomposition::with_options(&residual, law, Default::default()) {
        Ok(dec) => Ok(dec.sample(u[0], u[1], u[2])),
        Err(Error::NoOverlap) => Ok(CoupledPair {
            value1: residual.quantile(u[2]),
            value2: law.quantile(u[2]),
            coupled: false,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauSample {
    /// `None` for runs that exhausted `max_attempts`.
    pub taus: Vec<Option<f64>>,
    pub attempts: Vec<u64>,
    pub non_coupled: usize,
}

impl TauSample {
    pub fn coupled_taus(&self) -> Vec<f64> {
        self.taus.iter().flatten().copied().collect()
    }

    /// CSV with header `run,tau,attempts,coupled`; `tau` is empty for
    /// non-coupled runs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "run,tau,attempts,coupled")?;
        for (i, (tau, a)) in self.taus.iter().zip(&self.attempts).enumerate() {
            match tau {
                Some(t) => writeln!(w, "{},{},{},true", i + 1, t, a)?,
                None => writeln!(w, "{},,{},false", i + 1, a)?,
            }
        }
        Ok(())
    }
}

/// `n_runs` independent runs; run `i` uses streams `(seed, label, i)`.
/// `summarize` maps each run to what the caller keeps, so memory stays flat.
pub fn map_runs<T, F>(cfg: &CouplingConfig, n_runs: usize, label: &str, horizon: Option<f64>, summarize: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &CouplingRun) -> T + Sync,
{
    cfg.validate()?;
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let run = run_coupling_with_streams(cfg, RunStreams::for_run(cfg.seed, label, i as u64), horizon)?;
            Ok(summarize(i, &run))
        })
        .collect()
}

pub fn sample_tau(cfg: &CouplingConfig, n_runs: usize) -> Result<TauSample> {
    let rows = map_runs(cfg, n_runs, "couple", None, |_, run| (run.tau, run.attempts))?;
    let (taus, attempts): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let non_coupled = taus.iter().filter(|t| t.is_none()).count();
    Ok(TauSample {
        taus,
        attempts,
        non_coupled,
    })
}
