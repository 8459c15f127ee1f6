// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Time-stepped execution.
//!
//! An epoch is one victim sending one transaction. Every hop takes exactly
//! one step: copies sent at step `t` are processed at step `t + 1`, and
//! nothing is processed after step `ttl`. Within a step, deliveries are
//! handled in send order and Dandelion++ timers are checked afterwards.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{filter_decision, place_sybils, AdversaryConfig, AdversaryError, SybilSet};
use crate::metrics::{aggregate, fingerprint, MetricsError, SweepResult};
use crate::num::Scalar;
use crate::protocol::{
    on_originate, on_receive, on_timer_expiry, ForwardDecision, Message, MessageId, NodeState,
    NodeView, ProtocolConfig, ProtocolError, ProtocolKind, Step,
};
use crate::seed::{derive_seed, rng_from_seed, stream, SimRng};
use crate::topology::{Graph, NodeId};

pub const DEFAULT_TTL: Step = 16;
pub const DEFAULT_TOTAL_STEPS: u32 = 5000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("victim {0} is a Sybil")]
    VictimIsSybil(NodeId),
    #[error("victim {victim} is not a node of a {nodes}-node graph")]
    VictimOutOfRange { victim: NodeId, nodes: usize },
    #[error("ttl must be at least 1")]
    ZeroTtl,
    #[error("dandelion_pp needs ttl ({ttl}) greater than failsafe_wait ({wait})")]
    TtlNotAboveFailsafe { ttl: Step, wait: Step },
    #[error("total_steps ({total}) is shorter than one epoch of {ttl} steps")]
    NoEpochs { total: u32, ttl: Step },
    #[error("no honest node is left to act as victim")]
    NoHonestNodes,
    #[error("sweep needs at least one attacker fraction")]
    EmptyFractions,
    #[error("sweep fractions must lie in (0, 1) and strictly increase; got {0}")]
    BadFraction(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochConfig {
    pub ttl: Step,
    pub victim: NodeId,
    pub epoch_index: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochResult {
    pub victim: NodeId,
    /// Sorted honest nodes holding the message at epoch end, victim included.
    pub reached: Vec<NodeId>,
    pub steps_elapsed: Step,
    pub fail_safe_activations: usize,
}

/// Observable events of one epoch, for tests and debugging.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Delivered {
        step: Step,
        to: NodeId,
        from: NodeId,
        message: Message,
    },
    /// A node handed a nonempty send list to the network at `step`.
    Emitted {
        step: Step,
        node: NodeId,
        targets: Vec<NodeId>,
        failsafe: bool,
    },
}

#[derive(Clone, Copy, Debug)]
struct Delivery {
    to: NodeId,
    from: NodeId,
    message: Message,
}

fn check_ttl(cfg: &ProtocolConfig, ttl: Step) -> Result<(), EngineError> {
    cfg.validate()?;
    if ttl == 0 {
        return Err(EngineError::ZeroTtl);
    }
    if cfg.kind == ProtocolKind::DandelionPlusPlus && ttl <= cfg.failsafe_wait {
        return Err(EngineError::TtlNotAboveFailsafe {
            ttl,
            wait: cfg.failsafe_wait,
        });
    }
    Ok(())
}

struct Epoch<'a> {
    states: Vec<NodeState>,
    in_flight: Vec<Delivery>,
    timers: BTreeMap<Step, Vec<NodeId>>,
    trace: Option<&'a mut Vec<TraceEvent>>,
}

impl Epoch<'_> {
    fn apply(&mut self, node: NodeId, now: Step, decision: ForwardDecision, failsafe: bool) {
        if let Some(request) = decision.timer {
            self.states[node].arm(request);
            self.timers.entry(request.expiry).or_default().push(node);
        }
        if decision.sends.is_empty() {
            return;
        }
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.push(TraceEvent::Emitted {
                step: now,
                node,
                targets: decision.targets(),
                failsafe,
            });
        }
        self.in_flight
            .extend(decision.sends.into_iter().map(|(to, message)| Delivery {
                to,
                from: node,
                message,
            }));
    }
}

pub fn run_epoch<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &ProtocolConfig,
    sybils: &SybilSet,
    ecfg: &EpochConfig,
    rng: &mut R,
) -> Result<EpochResult, EngineError> {
    run_epoch_traced(g, cfg, sybils, ecfg, rng, None)
}

/// [`run_epoch`], optionally recording every delivery and emission.
pub fn run_epoch_traced<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &ProtocolConfig,
    sybils: &SybilSet,
    ecfg: &EpochConfig,
    rng: &mut R,
    trace: Option<&mut Vec<TraceEvent>>,
) -> Result<EpochResult, EngineError> {
    check_ttl(cfg, ecfg.ttl)?;
    let n = g.node_count();
    let victim = ecfg.victim;
    if victim >= n {
        return Err(EngineError::VictimOutOfRange { victim, nodes: n });
    }
    if sybils.contains(victim) {
        return Err(EngineError::VictimIsSybil(victim));
    }

    let mut epoch = Epoch {
        states: vec![NodeState::default(); n],
        in_flight: Vec::new(),
        timers: BTreeMap::new(),
        trace,
    };
    let mut reached = vec![false; n];
    reached[victim] = true;
    let message = Message::originate(MessageId(ecfg.epoch_index), victim, ecfg.ttl);

    let view = NodeView {
        id: victim,
        neighbors: g.neighbors(victim),
        now: 0,
    };
    let first = on_originate(view, &message, cfg, &mut epoch.states[victim], rng);
    epoch.apply(victim, 0, first, false);

    let mut steps_elapsed = 0;
    let mut fail_safe_activations = 0;
    for now in 1..=ecfg.ttl {
        let timers_due = epoch.timers.range(..=ecfg.ttl).next().is_some();
        if epoch.in_flight.is_empty() && !timers_due {
            break;
        }
        steps_elapsed = now;
        for delivery in std::mem::take(&mut epoch.in_flight) {
            let to = delivery.to;
            if let Some(trace) = epoch.trace.as_deref_mut() {
                trace.push(TraceEvent::Delivered {
                    step: now,
                    to,
                    from: delivery.from,
                    message: delivery.message,
                });
            }
            if !sybils.contains(to) {
                reached[to] = true;
            }
            let view = NodeView {
                id: to,
                neighbors: g.neighbors(to),
                now,
            };
            let decision = on_receive(
                view,
                &delivery.message,
                delivery.from,
                cfg,
                &mut epoch.states[to],
                rng,
            );
            epoch.apply(to, now, filter_decision(to, sybils, decision), false);
        }
        for node in epoch.timers.remove(&now).unwrap_or_default() {
            let view = NodeView {
                id: node,
                neighbors: g.neighbors(node),
                now,
            };
            let decision = filter_decision(
                node,
                sybils,
                on_timer_expiry(view, message.id, &mut epoch.states[node]),
            );
            if !decision.sends.is_empty() {
                fail_safe_activations += 1;
            }
            epoch.apply(node, now, decision, true);
        }
    }

    Ok(EpochResult {
        victim,
        reached: (0..n).filter(|&v| reached[v]).collect(),
        steps_elapsed,
        fail_safe_activations,
    })
}

/// One attacker fraction: one Sybil placement, many epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRun {
    pub ttl: Step,
    pub total_steps: u32,
    pub attacker_fraction: f64,
    pub master_seed: u64,
}

impl SimulationRun {
    pub fn new(attacker_fraction: f64, master_seed: u64) -> Self {
        SimulationRun {
            ttl: DEFAULT_TTL,
            total_steps: DEFAULT_TOTAL_STEPS,
            attacker_fraction,
            master_seed,
        }
    }

    /// `floor(total_steps / ttl)`; trailing steps are discarded.
    pub fn epoch_count(&self) -> usize {
        if self.ttl == 0 {
            return 0;
        }
        (self.total_steps / self.ttl) as usize
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub sybils: SybilSet,
    pub epochs: Vec<EpochResult>,
}

impl RunResult {
    pub fn honest_count(&self) -> usize {
        self.sybils.honest_count()
    }
}

/// Everything one epoch needs besides the graph and protocol.
#[derive(Clone, Debug)]
pub struct EpochPlan {
    pub config: EpochConfig,
    /// The epoch's own random stream, positioned after victim selection.
    pub rng: SimRng,
}

/// Places the Sybils for `run` and prepares every epoch.
///
/// Victims come from a seeded permutation of the honest nodes, so each epoch
/// has its own victim until they run out; later epochs draw uniformly. Each
/// epoch owns a random stream derived from `(master_seed, epoch_index)`,
/// which makes results independent of the order epochs execute in.
pub fn plan_epochs(
    g: &Graph,
    run: &SimulationRun,
) -> Result<(SybilSet, Vec<EpochPlan>), EngineError> {
    if run.ttl == 0 {
        return Err(EngineError::ZeroTtl);
    }
    if run.epoch_count() == 0 {
        return Err(EngineError::NoEpochs {
            total: run.total_steps,
            ttl: run.ttl,
        });
    }
    let adversary = AdversaryConfig::new(
        run.attacker_fraction,
        derive_seed(run.master_seed, stream::SYBILS, 0),
    );
    let sybils = place_sybils(g, &adversary)?;
    let honest = sybils.honest();
    if honest.is_empty() {
        return Err(EngineError::NoHonestNodes);
    }
    let mut order = honest.clone();
    order.shuffle(&mut rng_from_seed(derive_seed(
        run.master_seed,
        stream::VICTIMS,
        0,
    )));
    let plans = (0..run.epoch_count())
        .map(|index| {
            let mut rng = rng_from_seed(derive_seed(run.master_seed, stream::EPOCH, index as u64));
            let victim = match order.get(index) {
                Some(&v) => v,
                None => honest[rng.gen_range(0..honest.len())],
            };
            let config = EpochConfig {
                ttl: run.ttl,
                victim,
                epoch_index: index as u64,
            };
            EpochPlan { config, rng }
        })
        .collect();
    Ok((sybils, plans))
}

/// Runs every epoch of one attacker fraction, in parallel, results in epoch
/// order.
pub fn run_simulation(
    g: &Graph,
    cfg: &ProtocolConfig,
    run: &SimulationRun,
) -> Result<RunResult, EngineError> {
    check_ttl(cfg, run.ttl)?;
    let (sybils, plans) = plan_epochs(g, run)?;
    let epochs = plans
        .into_par_iter()
        .map(|mut plan| run_epoch(g, cfg, &sybils, &plan.config, &mut plan.rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunResult { sybils, epochs })
}

/// A sweep plus the Sybil count actually placed at each point.
#[derive(Clone, Debug)]
pub struct SweepOutcome<T> {
    pub result: SweepResult<T>,
    pub sybil_counts: Vec<usize>,
}

/// Seed used for the run at `fraction`. Depends on the fraction value, not
/// its position, so grids that share a point share its outcome.
pub fn fraction_seed(master_seed: u64, fraction: f64) -> u64 {
    derive_seed(master_seed, stream::FRACTION, fraction.to_bits())
}

/// Runs one simulation per attacker fraction and aggregates each into a
/// coverage point. Points run in parallel; output order follows `fractions`.
pub fn run_sweep<T: Scalar>(
    g: &Graph,
    topology: &str,
    cfg: &ProtocolConfig,
    template: &SimulationRun,
    fractions: &[f64],
) -> Result<SweepOutcome<T>, EngineError> {
    if fractions.is_empty() {
        return Err(EngineError::EmptyFractions);
    }
    let mut previous = 0.0;
    for &f in fractions {
        if !(f > previous && f < 1.0) {
            return Err(EngineError::BadFraction(f));
        }
        previous = f;
    }

    let points = fractions
        .par_iter()
        .map(|&fraction| {
            let run = SimulationRun {
                attacker_fraction: fraction,
                master_seed: fraction_seed(template.master_seed, fraction),
                ..template.clone()
            };
            let outcome = run_simulation(g, cfg, &run)?;
            let point = aggregate(
                T::from_f64(fraction).unwrap_or_else(T::nan),
                &outcome.epochs,
                outcome.honest_count(),
            )?;
            Ok((point, outcome.sybils.len()))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;

    let identity = format!(
        "{topology}|{cfg:?}|ttl={}|steps={}|seed={}|fractions={fractions:?}",
        template.ttl, template.total_steps, template.master_seed
    );
    let (points, sybil_counts) = points.into_iter().unzip();
    Ok(SweepOutcome {
        result: SweepResult {
            protocol: cfg.kind.as_str().to_string(),
            topology: topology.to_string(),
            points,
            fingerprint: Some(fingerprint(&identity)),
            seed: template.master_seed,
        },
        sybil_counts,
    })
}
