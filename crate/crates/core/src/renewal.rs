//! Exact simulation of a delayed renewal process.
//!
//! The delay `theta_1` is drawn from the residual law `F_b` of an interval
//! of initial age `b`; later intervals are i.i.d. `F`. Epochs are stored in
//! a flat sorted vector and the recurrence times are read off by binary
//! search, so there is no time discretisation anywhere.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dist::{Law, LifetimeLaw};
use crate::error::{Error, Result};
use crate::rng::{Stream, UniformSource};
use crate::stats::{mean_ci, MeanCi};

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPath {
    initial_age: f64,
    epochs: Vec<f64>,
    horizon: f64,
}

/// Backward time `B_t`, forward time `D_t` and renewal count `R_t` at `t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RecurrenceReadout {
    pub t: f64,
    pub backward: f64,
    pub forward: f64,
    pub count: usize,
}

/// Builds epochs by cumulative inverse-cdf draws until the first epoch past
/// `horizon`, consuming one uniform per epoch.
pub fn generate_path<S: UniformSource>(
    initial_age: f64,
    law: &LifetimeLaw,
    horizon: f64,
    src: &mut S,
) -> Result<RenewalPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    let delay = law.residual(initial_age)?;
    let mut epochs = Vec::new();
    let mut t = delay.quantile(src.next_uniform());
    epochs.push(t);
    while t <= horizon {
        let zeta = law.quantile(src.next_uniform());
        if !(zeta > 0.0) {
            return Err(Error::Domain(format!("zero-length renewal interval after epoch {t}")));
        }
        t += zeta;
        epochs.push(t);
    }
    Ok(RenewalPath {
        initial_age,
        epochs,
        horizon,
    })
}

impl RenewalPath {
    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn initial_age(&self) -> f64 {
        self.initial_age
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn readout(&self, t: f64) -> Result<RecurrenceReadout> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfHorizon(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let count = self.epochs.partition_point(|&e| e <= t);
        let backward = if count == 0 {
            self.initial_age + t
        } else {
            t - self.epochs[count - 1]
        };
        Ok(RecurrenceReadout {
            t,
            backward,
            forward: self.epochs[count] - t,
            count,
        })
    }

    /// CSV with header `index,epoch`; indices start at 1.
    pub fn write_epochs_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,epoch")?;
        for (i, e) in self.epochs.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, e)?;
        }
        Ok(())
    }

    /// CSV with header `t,B,D,R` at each query time.
    pub fn write_readout_csv<W: Write>(&self, ts: &[f64], mut w: W) -> io::Result<()> {
        writeln!(w, "t,B,D,R")?;
        for &t in ts {
            let r = self
                .readout(t)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
            writeln!(w, "{},{},{},{}", r.t, r.backward, r.forward, r.count)?;
        }
        Ok(())
    }
}

/// Readouts of `n_paths` independent paths at every time in `ts`.
/// Path `i` uses stream `(seed, label, i)`; the result is indexed
/// `[time][path]`.
pub fn sample_readouts(
    law: &LifetimeLaw,
    initial_age: f64,
    ts: &[f64],
    n_paths: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<Vec<RecurrenceReadout>>> {
    let horizon = ts.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let per_path: Vec<Vec<RecurrenceReadout>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut src = Stream::new(seed, label, i as u64, 0);
            let path = generate_path(initial_age, law, horizon, &mut src)?;
            ts.iter().map(|&t| path.readout(t)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..ts.len())
        .map(|k| per_path.iter().map(|p| p[k]).collect())
        .collect())
}

/// Monte Carlo mean of the forward time `D_t` with a 95% interval.
pub fn estimate_forward_mean(law: &LifetimeLaw, initial_age: f64, t: f64, n_paths: usize, seed: u64) -> Result<MeanCi> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let reads = sample_readouts(law, initial_age, &[t], n_paths, seed, "forward-mean")?;
    let forward: Vec<f64> = reads[0].iter().map(|r| r.forward).collect();
    Ok(mean_ci(&forward))
}
