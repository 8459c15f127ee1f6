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

//! Per-node dissemination rules.
//!
//! Handlers are pure functions of their inputs, the node's own state and a
//! random stream. They never see the graph or other nodes; the engine hands
//! them a [`NodeView`] and applies the returned [`ForwardDecision`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::topology::NodeId;

/// Discrete simulation time.
pub type Step = u32;

pub const DEFAULT_FORWARD_PROBABILITY: f64 = 0.7;
pub const DEFAULT_FLUFF_PROBABILITY: f64 = 0.1;
pub const DEFAULT_FAILSAFE_WAIT: Step = 6;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("{name} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("dandelion_pp requires a positive failsafe_wait")]
    ZeroFailsafeWait,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Stem,
    Fluff,
}

/// One copy of a disseminated transaction.
///
/// `hop_count + ttl_remaining` is the same for every copy in a lineage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub id: MessageId,
    pub origin: NodeId,
    pub hop_count: Step,
    pub ttl_remaining: Step,
    pub phase: Phase,
}

impl Message {
    pub fn originate(id: MessageId, origin: NodeId, ttl: Step) -> Self {
        Message {
            id,
            origin,
            hop_count: 0,
            ttl_remaining: ttl,
            phase: Phase::Stem,
        }
    }

    /// The copy handed to the next hop, or `None` once the TTL is spent.
    pub fn next_hop(&self) -> Option<Message> {
        (self.ttl_remaining > 0).then(|| Message {
            hop_count: self.hop_count + 1,
            ttl_remaining: self.ttl_remaining - 1,
            ..*self
        })
    }

    fn in_phase(self, phase: Phase) -> Message {
        Message { phase, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Broadcast,
    FixedProbability,
    ProbabilisticBroadcast,
    Dandelion,
    DandelionPlusPlus,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Broadcast,
        ProtocolKind::FixedProbability,
        ProtocolKind::ProbabilisticBroadcast,
        ProtocolKind::Dandelion,
        ProtocolKind::DandelionPlusPlus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Broadcast => "broadcast",
            ProtocolKind::FixedProbability => "fixed_probability",
            ProtocolKind::ProbabilisticBroadcast => "probabilistic_broadcast",
            ProtocolKind::Dandelion => "dandelion",
            ProtocolKind::DandelionPlusPlus => "dandelion_pp",
        }
    }

    pub fn is_dandelion(self) -> bool {
        matches!(
            self,
            ProtocolKind::Dandelion | ProtocolKind::DandelionPlusPlus
        )
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ProtocolKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown protocol `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Per-neighbor (fixed probability) or per-node (probabilistic
    /// broadcast) chance of forwarding.
    pub forward_probability: f64,
    /// Per-hop chance that a stem relay switches to fluff.
    pub fluff_probability: f64,
    /// Steps a Dandelion++ stem node waits for a fluff copy.
    pub failsafe_wait: Step,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind) -> Self {
        ProtocolConfig {
            kind,
            forward_probability: DEFAULT_FORWARD_PROBABILITY,
            fluff_probability: DEFAULT_FLUFF_PROBABILITY,
            failsafe_wait: DEFAULT_FAILSAFE_WAIT,
        }
    }

    pub fn with_forward_probability(mut self, p: f64) -> Self {
        self.forward_probability = p;
        self
    }

    pub fn with_fluff_probability(mut self, p: f64) -> Self {
        self.fluff_probability = p;
        self
    }

    pub fn with_failsafe_wait(mut self, wait: Step) -> Self {
        self.failsafe_wait = wait;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        for (name, value) in [
            ("forward_probability", self.forward_probability),
            ("fluff_probability", self.fluff_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ProtocolError::ProbabilityOutOfRange { name, value });
            }
        }
        if self.kind == ProtocolKind::DandelionPlusPlus && self.failsafe_wait == 0 {
            return Err(ProtocolError::ZeroFailsafeWait);
        }
        Ok(())
    }
}

/// Request to start a Dandelion++ fail-safe timer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimerRequest {
    /// The stem copy as this node received (or created) it.
    pub message: Message,
    pub armed_at: Step,
    pub expiry: Step,
}

/// What a node sends at the next step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForwardDecision {
    pub sends: Vec<(NodeId, Message)>,
    pub timer: Option<TimerRequest>,
}

impl ForwardDecision {
    pub fn empty() -> Self {
        ForwardDecision::default()
    }

    pub fn is_empty(&self) -> bool {
        self.sends.is_empty() && self.timer.is_none()
    }

    pub fn targets(&self) -> Vec<NodeId> {
        self.sends.iter().map(|&(t, _)| t).collect()
    }

    fn to_all<I: IntoIterator<Item = NodeId>>(targets: I, msg: &Message) -> Self {
        let sends = match msg.next_hop() {
            Some(copy) => targets.into_iter().map(|t| (t, copy)).collect(),
            None => Vec::new(),
        };
        ForwardDecision { sends, timer: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FailsafeTimer {
    pub request: TimerRequest,
    /// Set once any fluff copy of the message has been observed.
    pub satisfied: bool,
}

/// Protocol state owned by one node for one epoch.
#[derive(Clone, Debug, Default)]
pub struct NodeState {
    seen: HashSet<MessageId>,
    timers: BTreeMap<MessageId, FailsafeTimer>,
}

impl NodeState {
    pub fn has_seen(&self, id: MessageId) -> bool {
        self.seen.contains(&id)
    }

    /// Returns `true` if the id was not cached before.
    pub fn mark_seen(&mut self, id: MessageId) -> bool {
        self.seen.insert(id)
    }

    pub fn arm(&mut self, request: TimerRequest) {
        self.timers
            .entry(request.message.id)
            .or_insert(FailsafeTimer {
                request,
                satisfied: false,
            });
    }

    pub fn timer(&self, id: MessageId) -> Option<&FailsafeTimer> {
        self.timers.get(&id)
    }

    fn observe_fluff(&mut self, id: MessageId) {
        if let Some(timer) = self.timers.get_mut(&id) {
            timer.satisfied = true;
        }
    }
}

/// The slice of the world a handler may look at.
#[derive(Clone, Copy, Debug)]
pub struct NodeView<'a> {
    pub id: NodeId,
    pub neighbors: &'a [NodeId],
    pub now: Step,
}

fn except(neighbors: &[NodeId], from: NodeId) -> impl Iterator<Item = NodeId> + '_ {
    neighbors.iter().copied().filter(move |&v| v != from)
}

fn stem_decision<R: Rng + ?Sized>(
    view: NodeView<'_>,
    msg: &Message,
    from: Option<NodeId>,
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> ForwardDecision {
    let eligible: Vec<NodeId> = match from {
        Some(f) => except(view.neighbors, f).collect(),
        None => view.neighbors.to_vec(),
    };
    let sends = match (eligible.choose(rng), msg.next_hop()) {
        (Some(&target), Some(copy)) => vec![(target, copy.in_phase(Phase::Stem))],
        _ => Vec::new(),
    };
    let timer = (cfg.kind == ProtocolKind::DandelionPlusPlus).then(|| TimerRequest {
        message: *msg,
        armed_at: view.now,
        expiry: view.now + cfg.failsafe_wait,
    });
    ForwardDecision { sends, timer }
}

/// First transmission by the message's creator.
///
/// Broadcast-family protocols always flood the first hop; Dandelion variants
/// start a stem through one uniformly chosen neighbor.
pub fn on_originate<R: Rng + ?Sized>(
    view: NodeView<'_>,
    msg: &Message,
    cfg: &ProtocolConfig,
    state: &mut NodeState,
    rng: &mut R,
) -> ForwardDecision {
    state.mark_seen(msg.id);
    if view.neighbors.is_empty() {
        return ForwardDecision::empty();
    }
    match cfg.kind {
        ProtocolKind::Broadcast
        | ProtocolKind::FixedProbability
        | ProtocolKind::ProbabilisticBroadcast => {
            ForwardDecision::to_all(view.neighbors.iter().copied(), msg)
        }
        ProtocolKind::Dandelion | ProtocolKind::DandelionPlusPlus => {
            stem_decision(view, &msg.in_phase(Phase::Stem), None, cfg, rng)
        }
    }
}

/// Handles a copy of `msg` delivered by `from`.
pub fn on_receive<R: Rng + ?Sized>(
    view: NodeView<'_>,
    msg: &Message,
    from: NodeId,
    cfg: &ProtocolConfig,
    state: &mut NodeState,
    rng: &mut R,
) -> ForwardDecision {
    if cfg.kind == ProtocolKind::DandelionPlusPlus && msg.phase == Phase::Fluff {
        state.observe_fluff(msg.id);
    }
    if msg.ttl_remaining == 0 || !state.mark_seen(msg.id) {
        return ForwardDecision::empty();
    }
    let rest = except(view.neighbors, from);
    match cfg.kind {
        ProtocolKind::Broadcast => ForwardDecision::to_all(rest, msg),
        ProtocolKind::FixedProbability => {
            let p = cfg.forward_probability;
            let chosen: Vec<NodeId> = rest.filter(|_| rng.gen::<f64>() < p).collect();
            ForwardDecision::to_all(chosen, msg)
        }
        ProtocolKind::ProbabilisticBroadcast => {
            if rng.gen::<f64>() < cfg.forward_probability {
                ForwardDecision::to_all(rest, msg)
            } else {
                ForwardDecision::empty()
            }
        }
        ProtocolKind::Dandelion | ProtocolKind::DandelionPlusPlus => match msg.phase {
            Phase::Fluff => ForwardDecision::to_all(rest, msg),
            Phase::Stem if rng.gen::<f64>() < cfg.fluff_probability => {
                ForwardDecision::to_all(rest, &msg.in_phase(Phase::Fluff))
            }
            Phase::Stem => stem_decision(view, msg, Some(from), cfg, rng),
        },
    }
}

/// Fires the Dandelion++ fail-safe for `id` if no fluff copy was observed.
///
/// The fluff restarts from this node to every neighbor, carrying the TTL
/// the lineage has left at `view.now`. The timer is consumed either way.
pub fn on_timer_expiry(
    view: NodeView<'_>,
    id: MessageId,
    state: &mut NodeState,
) -> ForwardDecision {
    let Some(timer) = state.timers.remove(&id) else {
        return ForwardDecision::empty();
    };
    if timer.satisfied {
        return ForwardDecision::empty();
    }
    let held = timer.request.message;
    let elapsed = view.now.saturating_sub(timer.request.armed_at);
    let restart = Message {
        hop_count: held.hop_count + elapsed.min(held.ttl_remaining),
        ttl_remaining: held.ttl_remaining.saturating_sub(elapsed),
        phase: Phase::Fluff,
        ..held
    };
    ForwardDecision::to_all(view.neighbors.iter().copied(), &restart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    const ID: MessageId = MessageId(1);

    fn view(id: NodeId, neighbors: &[NodeId]) -> NodeView<'_> {
        NodeView {
            id,
            neighbors,
            now: 1,
        }
    }

    fn relayed(phase: Phase) -> Message {
        Message {
            id: ID,
            origin: 99,
            hop_count: 1,
            ttl_remaining: 15,
            phase,
        }
    }

    fn sorted(mut v: Vec<NodeId>) -> Vec<NodeId> {
        v.sort_unstable();
        v
    }

    #[test]
    fn originate_broadcast_family_floods() {
        let mut rng = rng_from_seed(0);
        let msg = Message::originate(ID, 0, 16);
        for kind in [
            ProtocolKind::Broadcast,
            ProtocolKind::FixedProbability,
            ProtocolKind::ProbabilisticBroadcast,
        ] {
            let cfg = ProtocolConfig::new(kind).with_forward_probability(0.0);
            let d = on_originate(
                view(0, &[1, 2, 3]),
                &msg,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            assert_eq!(d.targets(), vec![1, 2, 3], "{kind}");
            assert!(d
                .sends
                .iter()
                .all(|(_, m)| m.hop_count == 1 && m.ttl_remaining == 15));
        }
    }

    #[test]
    fn originate_without_neighbors_is_empty() {
        let mut rng = rng_from_seed(0);
        let msg = Message::originate(ID, 0, 16);
        for kind in ProtocolKind::ALL {
            let d = on_originate(
                view(0, &[]),
                &msg,
                &ProtocolConfig::new(kind),
                &mut NodeState::default(),
                &mut rng,
            );
            assert!(d.is_empty());
        }
    }

    #[test]
    fn dandelion_origin_picks_uniform_single_neighbor() {
        let mut rng = rng_from_seed(17);
        let cfg = ProtocolConfig::new(ProtocolKind::Dandelion);
        let msg = Message::originate(ID, 0, 16);
        let neighbors = [1, 2, 3, 4];
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let d = on_originate(
                view(0, &neighbors),
                &msg,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            assert_eq!(d.sends.len(), 1);
            assert_eq!(d.sends[0].1.phase, Phase::Stem);
            counts[d.sends[0].0 - 1] += 1;
        }
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 16.27, "chi-square {chi2}, counts {counts:?}");
        for c in counts {
            assert!((c as f64 / trials as f64 - 0.25).abs() <= 0.01);
        }
    }

    #[test]
    fn dandelion_pp_origin_arms_timer() {
        let mut rng = rng_from_seed(1);
        let cfg = ProtocolConfig::new(ProtocolKind::DandelionPlusPlus);
        let msg = Message::originate(ID, 0, 16);
        let v = NodeView {
            id: 0,
            neighbors: &[1, 2],
            now: 0,
        };
        let d = on_originate(v, &msg, &cfg, &mut NodeState::default(), &mut rng);
        let timer = d.timer.expect("timer requested");
        assert_eq!(timer.expiry, 6);
        assert_eq!(timer.armed_at, 0);
    }

    #[test]
    fn broadcast_excludes_forwarder() {
        let mut rng = rng_from_seed(0);
        let cfg = ProtocolConfig::new(ProtocolKind::Broadcast);
        let mut state = NodeState::default();
        let d = on_receive(
            view(5, &[1, 2, 3]),
            &relayed(Phase::Fluff),
            1,
            &cfg,
            &mut state,
            &mut rng,
        );
        assert_eq!(d.targets(), vec![2, 3]);
        assert!(d
            .sends
            .iter()
            .all(|(_, m)| m.hop_count == 2 && m.ttl_remaining == 14));
        // Second copy is absorbed by the cache.
        let again = on_receive(
            view(5, &[1, 2, 3]),
            &relayed(Phase::Fluff),
            2,
            &cfg,
            &mut state,
            &mut rng,
        );
        assert!(again.is_empty());
    }

    #[test]
    fn expired_message_is_dropped() {
        let mut rng = rng_from_seed(0);
        let cfg = ProtocolConfig::new(ProtocolKind::Broadcast);
        let msg = Message {
            hop_count: 16,
            ttl_remaining: 0,
            ..relayed(Phase::Fluff)
        };
        let d = on_receive(
            view(5, &[1, 2]),
            &msg,
            1,
            &cfg,
            &mut NodeState::default(),
            &mut rng,
        );
        assert!(d.is_empty());
    }

    #[test]
    fn probabilistic_broadcast_zero_never_sends() {
        let mut rng = rng_from_seed(3);
        let cfg =
            ProtocolConfig::new(ProtocolKind::ProbabilisticBroadcast).with_forward_probability(0.0);
        for _ in 0..1000 {
            let d = on_receive(
                view(5, &[1, 2, 3]),
                &relayed(Phase::Fluff),
                1,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            assert!(d.is_empty());
        }
    }

    #[test]
    fn dandelion_stem_without_fluff_splits_uniformly() {
        let mut rng = rng_from_seed(23);
        let cfg = ProtocolConfig::new(ProtocolKind::Dandelion).with_fluff_probability(0.0);
        let trials = 20_000;
        let mut to_b = 0;
        for _ in 0..trials {
            let d = on_receive(
                view(9, &[1, 2, 3]),
                &relayed(Phase::Stem),
                1,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            assert_eq!(d.sends.len(), 1);
            let (target, copy) = d.sends[0];
            assert!(target == 2 || target == 3);
            assert_eq!(copy.phase, Phase::Stem);
            to_b += usize::from(target == 2);
        }
        let share = to_b as f64 / trials as f64;
        // 3 sigma for a fair coin over 20k trials is about 0.0106.
        assert!((share - 0.5).abs() < 0.0106, "share {share}");
    }

    #[test]
    fn stem_dies_when_forwarder_is_only_neighbor() {
        let mut rng = rng_from_seed(0);
        let cfg = ProtocolConfig::new(ProtocolKind::Dandelion).with_fluff_probability(0.0);
        let d = on_receive(
            view(9, &[1]),
            &relayed(Phase::Stem),
            1,
            &cfg,
            &mut NodeState::default(),
            &mut rng,
        );
        assert!(d.is_empty());
        let pp = ProtocolConfig::new(ProtocolKind::DandelionPlusPlus).with_fluff_probability(0.0);
        let d = on_receive(
            view(9, &[1]),
            &relayed(Phase::Stem),
            1,
            &pp,
            &mut NodeState::default(),
            &mut rng,
        );
        assert!(d.sends.is_empty());
        assert!(d.timer.is_some(), "dead-end stem still arms the fail-safe");
    }

    #[test]
    fn failsafe_fires_when_unsatisfied() {
        let mut rng = rng_from_seed(0);
        let cfg = ProtocolConfig::new(ProtocolKind::DandelionPlusPlus).with_fluff_probability(0.0);
        let mut state = NodeState::default();
        let d = on_receive(
            view(9, &[1, 2]),
            &relayed(Phase::Stem),
            1,
            &cfg,
            &mut state,
            &mut rng,
        );
        state.arm(d.timer.unwrap());
        let at_expiry = NodeView {
            id: 9,
            neighbors: &[1, 2],
            now: 7,
        };
        let fired = on_timer_expiry(at_expiry, ID, &mut state);
        assert_eq!(fired.targets(), vec![1, 2], "no forwarder exclusion");
        let copy = fired.sends[0].1;
        assert_eq!(copy.phase, Phase::Fluff);
        assert_eq!(copy.hop_count, 8);
        assert_eq!(copy.ttl_remaining, 8);
        assert!(
            on_timer_expiry(at_expiry, ID, &mut state).is_empty(),
            "timer consumed"
        );
    }

    #[test]
    fn failsafe_satisfied_by_fluff_copy() {
        let mut rng = rng_from_seed(0);
        let cfg = ProtocolConfig::new(ProtocolKind::DandelionPlusPlus).with_fluff_probability(0.0);
        let mut state = NodeState::default();
        let d = on_receive(
            view(9, &[1, 2]),
            &relayed(Phase::Stem),
            1,
            &cfg,
            &mut state,
            &mut rng,
        );
        state.arm(d.timer.unwrap());
        let fluff = Message {
            hop_count: 5,
            ttl_remaining: 11,
            ..relayed(Phase::Fluff)
        };
        let late = on_receive(view(9, &[1, 2]), &fluff, 2, &cfg, &mut state, &mut rng);
        assert!(late.is_empty(), "already cached");
        assert!(state.timer(ID).unwrap().satisfied);
        let at_expiry = NodeView {
            id: 9,
            neighbors: &[1, 2],
            now: 7,
        };
        assert!(on_timer_expiry(at_expiry, ID, &mut state).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(ProtocolKind::FixedProbability)
            .with_forward_probability(1.2)
            .validate()
            .is_err());
        assert_eq!(
            ProtocolConfig::new(ProtocolKind::DandelionPlusPlus)
                .with_failsafe_wait(0)
                .validate(),
            Err(ProtocolError::ZeroFailsafeWait)
        );
        assert!(ProtocolConfig::new(ProtocolKind::Dandelion)
            .with_failsafe_wait(0)
            .validate()
            .is_ok());
        assert_eq!(
            "dandelion_pp".parse::<ProtocolKind>(),
            Ok(ProtocolKind::DandelionPlusPlus)
        );
        assert!("flood".parse::<ProtocolKind>().is_err());
    }

    fn small_neighbor_sets() -> impl Strategy<Value = (Vec<NodeId>, usize)> {
        proptest::sample::subsequence((0usize..8).collect::<Vec<_>>(), 1..=8).prop_flat_map(|ns| {
            let len = ns.len();
            (Just(ns), 0..len)
        })
    }

    proptest! {
        #[test]
        fn degenerate_probabilities_match_broadcast(
            (neighbors, from_idx) in small_neighbor_sets(),
            seed: u64,
            phase_fluff: bool,
        ) {
            let from = neighbors[from_idx];
            let mut rng = rng_from_seed(seed);
            let base = on_receive(
                view(100, &neighbors), &relayed(Phase::Fluff), from,
                &ProtocolConfig::new(ProtocolKind::Broadcast), &mut NodeState::default(), &mut rng,
            );
            let phase = if phase_fluff { Phase::Fluff } else { Phase::Stem };
            for cfg in [
                ProtocolConfig::new(ProtocolKind::FixedProbability).with_forward_probability(1.0),
                ProtocolConfig::new(ProtocolKind::ProbabilisticBroadcast).with_forward_probability(1.0),
                ProtocolConfig::new(ProtocolKind::Dandelion).with_fluff_probability(1.0),
            ] {
                let d = on_receive(view(100, &neighbors), &relayed(phase), from, &cfg, &mut NodeState::default(), &mut rng);
                prop_assert_eq!(sorted(d.targets()), sorted(base.targets()));
                prop_assert!(!d.targets().contains(&from));
            }
        }

        #[test]
        fn lineage_budget_is_conserved(ttl in 1u32..40, hops in 0u32..40) {
            let mut msg = Message::originate(ID, 0, ttl);
            for _ in 0..hops {
                match msg.next_hop() {
                    Some(next) => {
                        prop_assert_eq!(next.hop_count + next.ttl_remaining, ttl);
                        msg = next;
                    }
                    None => prop_assert_eq!(msg.ttl_remaining, 0),
                }
            }
        }
    }

    #[test]
    fn fixed_probability_frequency_within_three_sigma() {
        let p = 0.3;
        let cfg = ProtocolConfig::new(ProtocolKind::FixedProbability).with_forward_probability(p);
        let neighbors = [1, 2, 3, 4, 5];
        let trials = 20_000;
        let mut rng = rng_from_seed(41);
        let mut counts = [0usize; 6];
        for _ in 0..trials {
            let d = on_receive(
                view(0, &neighbors),
                &relayed(Phase::Fluff),
                1,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            assert!(!d.targets().contains(&1));
            for t in d.targets() {
                counts[t] += 1;
            }
        }
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for &c in &counts[2..] {
            let freq = c as f64 / trials as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn probabilistic_broadcast_is_all_or_nothing() {
        let p = 0.6;
        let cfg =
            ProtocolConfig::new(ProtocolKind::ProbabilisticBroadcast).with_forward_probability(p);
        let neighbors = [1, 2, 3, 4];
        let trials = 20_000;
        let mut rng = rng_from_seed(43);
        let mut all = 0;
        for _ in 0..trials {
            let d = on_receive(
                view(0, &neighbors),
                &relayed(Phase::Fluff),
                4,
                &cfg,
                &mut NodeState::default(),
                &mut rng,
            );
            match d.sends.len() {
                0 => {}
                3 => all += 1,
                n => panic!("partial broadcast of {n}"),
            }
        }
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = all as f64 / trials as f64;
        assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq}");
    }
}
