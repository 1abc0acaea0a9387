use serde::Serialize;

use crate::samplers::TraceRow;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub steps: usize,
    /// Transitions from outside `B_s` into `B_s`.
    pub entries: usize,
    /// Entries made by a step of norm `>= η/2`.
    pub step_attributed: usize,
    /// Entries of small step from the barrier `Θ_{s,η}`.
    pub barrier_attributed: usize,
    pub unattributed: usize,
    /// Transitions from `B_L` to its complement.
    pub exits_beyond_l: usize,
    /// Steps of norm `>= η/2`.
    pub large_steps: usize,
    /// Fraction of steps of norm `< η/2`.
    pub premise_frequency: f64,
    pub started_inside: bool,
    pub consistent: bool,
}

/// Check on a recorded radius trace that every entry into `B_s` came either
/// through `Θ_{s,η}` or by a step of norm at least `η/2`.
pub fn barrier_reduction_audit(trace: &[TraceRow], s: f64, eta: f64, l: f64) -> AuditReport {
    let mut rep = AuditReport { started_inside: trace.first().is_some_and(|r| r.radius <= s), ..Default::default() };
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        rep.steps += 1;
        let large = cur.step_norm >= 0.5 * eta;
        if large {
            rep.large_steps += 1;
        }
        if prev.radius > s && cur.radius <= s {
            rep.entries += 1;
            if large {
                rep.step_attributed += 1;
            } else if prev.radius < s + eta {
                rep.barrier_attributed += 1;
            } else {
                rep.unattributed += 1;
            }
        }
        if prev.radius <= l && cur.radius > l {
            rep.exits_beyond_l += 1;
        }
    }
    rep.premise_frequency = if rep.steps == 0 { 1.0 } else { (rep.steps - rep.large_steps) as f64 / rep.steps as f64 };
    rep.consistent = rep.unattributed == 0;
    rep
}
