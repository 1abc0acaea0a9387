use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::kernels::MarkovKernel;
use crate::error::{Error, Result};
use crate::linalg::{dist, uniform_radius_point};
use crate::rng::{derive_seed, rng_from, rng_from_seed, streams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// Scalar summary of the state after the step (radius, correlation, ...).
    pub summary: f64,
    pub accepted: bool,
    pub step_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "step", rename_all = "kebab-case")]
pub enum HittingTime {
    /// First step index at which the state lies in the stop region (0 = initial point).
    Hit(usize),
    /// No entry within the budget; the value is the budget.
    Censored(usize),
}

impl HittingTime {
    pub fn steps(&self) -> usize {
        match *self {
            HittingTime::Hit(k) | HittingTime::Censored(k) => k,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, HittingTime::Censored(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainTrace {
    pub initial: Vec<f64>,
    pub initial_summary: f64,
    /// One record per executed step.
    pub records: Vec<StepRecord>,
    /// `(step index, state)` every `thin` steps, when requested.
    pub states: Vec<(usize, Vec<f64>)>,
    pub hitting_time: Option<HittingTime>,
    pub final_state: Vec<f64>,
    pub budget: usize,
}

impl ChainTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.accepted).count() as f64 / self.records.len() as f64
    }

    pub fn summaries(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_summary).chain(self.records.iter().map(|r| r.summary))
    }

    /// CSV `k,radius,accepted,step_norm`; row 0 is the initial point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["k", "radius", "accepted", "step_norm"])?;
        wr.write_record(["0".to_string(), format!("{:e}", self.initial_summary), "0".into(), "0e0".into()])?;
        for (k, r) in self.records.iter().enumerate() {
            wr.write_record([
                (k + 1).to_string(),
                format!("{:e}", r.summary),
                (r.accepted as u8).to_string(),
                format!("{:e}", r.step_norm),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub radius: f64,
    pub accepted: bool,
    pub step_norm: f64,
}

/// Read a trace written by [`ChainTrace::write_csv`].
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("trace CSV lacks column '{name}'")))
    };
    let (ck, cr, ca, cs) = (col("k")?, col("radius")?, col("accepted")?, col("step_norm")?);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |c: usize| -> Result<f64> {
            rec.get(c)
                .ok_or_else(|| Error::Format("short trace row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("bad trace value: {e}")))
        };
        rows.push(TraceRow { k: f(ck)? as usize, radius: f(cr)?, accepted: f(ca)? != 0.0, step_norm: f(cs)? });
    }
    Ok(rows)
}

/// Run `iterations` steps from `initial`.
///
/// With a stop predicate the chain halts at the first state inside the
/// region and records its step index; otherwise, or without entry, the
/// hitting time is censored at the budget. `thin > 0` stores every
/// `thin`-th state.
pub fn run_chain<K: MarkovKernel + ?Sized>(
    kernel: &K,
    initial: Vec<f64>,
    iterations: usize,
    seed: u64,
    stop: Option<&(dyn Fn(&[f64]) -> bool + Sync)>,
    summary: &(dyn Fn(&[f64]) -> f64 + Sync),
    thin: usize,
) -> Result<ChainTrace> {
    if iterations == 0 {
        return Err(Error::Domain("iterations must be >= 1".into()));
    }
    let mut rng = rng_from(seed, streams::CHAIN, 0);
    let mut state = kernel.init(initial.clone())?;
    let initial_summary = summary(&state.x);
    let mut trace = ChainTrace {
        initial,
        initial_summary,
        records: Vec::with_capacity(iterations.min(1 << 20)),
        states: Vec::new(),
        hitting_time: stop.map(|_| HittingTime::Censored(iterations)),
        final_state: Vec::new(),
        budget: iterations,
    };
    if thin > 0 {
        trace.states.push((0, state.x.clone()));
    }
    if let Some(stop) = stop {
        if stop(&state.x) {
            trace.hitting_time = Some(HittingTime::Hit(0));
            trace.final_state = state.x;
            return Ok(trace);
        }
    }
    for k in 1..=iterations {
        let tr = kernel.step(&state, &mut rng)?;
        state = tr.state;
        trace.records.push(StepRecord { summary: summary(&state.x), accepted: tr.accepted, step_norm: tr.step_norm });
        if thin > 0 && k % thin == 0 {
            trace.states.push((k, state.x.clone()));
        }
        if let Some(stop) = stop {
            if stop(&state.x) {
                trace.hitting_time = Some(HittingTime::Hit(k));
                break;
            }
        }
    }
    trace.final_state = state.x;
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepAssumptionReport {
    /// Largest per-probe frequency of a one-step move of norm `>= η/2`.
    pub max_exceed_freq: f64,
    pub mean_exceed_freq: f64,
    /// Radius of the probe attaining the maximum.
    pub argmax_radius: f64,
    pub n_probe: usize,
    pub n_inner: usize,
}

/// Estimate `sup_{θ in B_L} P(θ, {|ϑ - θ| >= η/2})` from `n_probe` states
/// (uniform radius in `[0, L]`, uniform direction) with `n_inner` one-step
/// replications each. This is an estimate over finitely many probes, not a
/// certificate.
pub fn step_assumption_estimate<K: MarkovKernel + ?Sized>(
    kernel: &K,
    l_radius: f64,
    eta: f64,
    n_probe: usize,
    n_inner: usize,
    seed: u64,
) -> Result<StepAssumptionReport> {
    if !(l_radius > 0.0 && eta > 0.0) || n_probe == 0 || n_inner == 0 {
        return Err(Error::Domain("need L, eta > 0 and n_probe, n_inner >= 1".into()));
    }
    let dim = kernel.dim();
    let per_probe: Result<Vec<(f64, f64)>> = (0..n_probe)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, streams::PROBE, i as u64));
            let x = uniform_radius_point(dim, 0.0, l_radius, &mut rng);
            let r = crate::linalg::norm(&x);
            let state = kernel.init(x)?;
            let mut hits = 0usize;
            for _ in 0..n_inner {
                let tr = kernel.step(&state, &mut rng)?;
                if dist(&tr.state.x, &state.x) >= eta / 2.0 {
                    hits += 1;
                }
            }
            Ok((hits as f64 / n_inner as f64, r))
        })
        .collect();
    let per_probe = per_probe?;
    let (mut best, mut arg) = (-1.0, 0.0);
    for &(f, r) in &per_probe {
        if f > best {
            best = f;
            arg = r;
        }
    }
    let mean = per_probe.iter().map(|p| p.0).sum::<f64>() / n_probe as f64;
    Ok(StepAssumptionReport { max_exceed_freq: best, mean_exceed_freq: mean, argmax_radius: arg, n_probe, n_inner })
}
