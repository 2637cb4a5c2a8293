//! Constructors and validators for the eight laundering pattern shapes.
//!
//! A pattern instance is planned as a set of timed steps over member
//! accounts: fan-out/fan-in stars, gather-scatter and scatter-gather relays,
//! cycles, random walks, bipartite layers, and three-layer stacks. Planning
//! is pure (accounts, amounts, a span, and a stream in; steps out), and
//! [`validate`] re-checks every structural rule from the emitted
//! transactions so it can serve as an independent test oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SizeBin;
use crate::model::{AccountIdx, PatternKind};
use crate::rng::RngStream;

/// Hard ceiling on accounts per instance (the node-count histogram is zero
/// from 18 up).
pub const MAX_PATTERN_NODES: u32 = 17;

/// Chance that an instance repeats its edge set in a second tranche, tuned
/// per kind so mean transactions per instance land on the reference ratios.
pub fn extra_tranche_p(kind: PatternKind) -> f64 {
    match kind {
        PatternKind::FanOut => 0.086,
        PatternKind::FanIn => 0.072,
        PatternKind::GatherScatter => 0.359,
        PatternKind::ScatterGather => 0.147,
        PatternKind::Cycle => 0.109,
        PatternKind::Random => 0.0,
        PatternKind::Bipartite => 0.0,
        PatternKind::Stack => 0.056,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Source,
    Middle,
    Sink,
}

/// Node layout of one planned instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    /// source + `k` sinks.
    FanOut { k: u32 },
    /// `k` sources + sink.
    FanIn { k: u32 },
    /// `a` sources -> hub -> `b` sinks.
    GatherScatter { a: u32, b: u32 },
    /// source -> `k` intermediates -> sink.
    ScatterGather { k: u32 },
    /// Ring of `n` accounts.
    Cycle { n: u32 },
    /// Walk from an origin over `n - 1` other accounts.
    Random { n: u32 },
    /// `k` sources x `m` sinks with `e` edges.
    Bipartite { k: u32, m: u32, e: u32 },
    /// Complete bicliques `k x m` and `m x n`.
    Stack { k: u32, m: u32, n: u32 },
}

impl Shape {
    /// Derive the layout for a drawn size. Clamps keep fan degrees at two
    /// or more and total nodes at or below [`MAX_PATTERN_NODES`].
    pub fn for_size(kind: PatternKind, size: SizeDraw) -> Shape {
        let s = size.primary;
        match kind {
            PatternKind::FanOut => Shape::FanOut {
                k: s.clamp(2, 16),
            },
            PatternKind::FanIn => Shape::FanIn {
                k: s.clamp(2, 16),
            },
            PatternKind::GatherScatter => Shape::GatherScatter {
                a: s.clamp(2, 8),
                b: size.secondary.unwrap_or(s).clamp(2, 8),
            },
            PatternKind::ScatterGather => Shape::ScatterGather {
                k: s.clamp(2, 15),
            },
            PatternKind::Cycle => Shape::Cycle { n: s.clamp(3, 17) },
            PatternKind::Random => Shape::Random { n: s.clamp(3, 17) },
            PatternKind::Bipartite => {
                let total = s.clamp(4, 17);
                let k = total.div_ceil(2);
                let m = total - k;
                Shape::Bipartite {
                    k,
                    m,
                    e: s.clamp(2, 17).max(k.max(m)),
                }
            }
            PatternKind::Stack => {
                let (k, m, n) = match s {
                    0..=6 => (2, 2, 2),
                    7 => (3, 2, 2),
                    8 => (3, 3, 2),
                    _ => (3, 3, 3),
                };
                Shape::Stack { k, m, n }
            }
        }
    }

    pub fn kind(&self) -> PatternKind {
        match self {
            Shape::FanOut { .. } => PatternKind::FanOut,
            Shape::FanIn { .. } => PatternKind::FanIn,
            Shape::GatherScatter { .. } => PatternKind::GatherScatter,
            Shape::ScatterGather { .. } => PatternKind::ScatterGather,
            Shape::Cycle { .. } => PatternKind::Cycle,
            Shape::Random { .. } => PatternKind::Random,
            Shape::Bipartite { .. } => PatternKind::Bipartite,
            Shape::Stack { .. } => PatternKind::Stack,
        }
    }

    pub fn node_count(&self) -> u32 {
        match *self {
            Shape::FanOut { k } | Shape::FanIn { k } => k + 1,
            Shape::GatherScatter { a, b } => a + b + 1,
            Shape::ScatterGather { k } => k + 2,
            Shape::Cycle { n } | Shape::Random { n } => n,
            Shape::Bipartite { k, m, .. } => k + m,
            Shape::Stack { k, m, n } => k + m + n,
        }
    }

    /// How many funded source accounts the instance needs.
    pub fn source_count(&self) -> u32 {
        match *self {
            Shape::FanIn { k } => k,
            Shape::GatherScatter { a, .. } => a,
            Shape::Bipartite { k, .. } => k,
            Shape::Stack { k, .. } => k,
            _ => 1,
        }
    }

    /// Reduce the number of sources to what the planner can fund. Only
    /// meaningful for multi-source kinds; `new_k >= 2`.
    pub fn with_sources(&self, new_k: u32) -> Shape {
        debug_assert!(new_k >= 2);
        match *self {
            Shape::FanIn { .. } => Shape::FanIn { k: new_k },
            Shape::GatherScatter { b, .. } => Shape::GatherScatter { a: new_k, b },
            Shape::Bipartite { m, e, .. } => Shape::Bipartite {
                k: new_k,
                m,
                e: e.min(new_k * m).max(new_k.max(m)),
            },
            Shape::Stack { m, n, .. } => Shape::Stack { k: new_k, m, n },
            ref other => other.clone(),
        }
    }
}

/// A node count drawn from the size histogram; gather-scatter draws the
/// source-side and sink-side counts independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeDraw {
    pub primary: u32,
    pub secondary: Option<u32>,
}

fn draw_one(histogram: &[SizeBin], stream: &mut RngStream) -> u32 {
    let mut cum = Vec::with_capacity(histogram.len());
    let mut acc = 0.0;
    for bin in histogram {
        acc += bin.p.max(0.0);
        cum.push(acc);
    }
    let bin = &histogram[stream.pick_cumulative(&cum)];
    let hi = bin.max.unwrap_or(bin.min + 1).max(bin.min + 1);
    let value = if hi - bin.min <= 1 {
        bin.min
    } else {
        stream.range_u64(u64::from(bin.min), u64::from(hi)) as u32
    };
    debug_assert!(value < 18, "size histogram produced {value}");
    value
}

/// Draw the node count(s) for one instance of `kind`.
pub fn sample_size(kind: PatternKind, histogram: &[SizeBin], stream: &mut RngStream) -> SizeDraw {
    let primary = draw_one(histogram, stream);
    let secondary = if kind == PatternKind::GatherScatter {
        Some(draw_one(histogram, stream))
    } else {
        None
    };
    SizeDraw { primary, secondary }
}

/// One planned transfer; `from`/`to` index into the instance account list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedStep {
    pub offset_minutes: u32,
    pub from: u16,
    pub to: u16,
    pub amount: i64,
}

/// A fully planned laundering pattern instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternInstance {
    pub pattern_id: u32,
    pub kind: PatternKind,
    pub accounts: Vec<AccountIdx>,
    pub roles: Vec<Role>,
    pub steps: Vec<PlannedStep>,
    pub span_minutes: u32,
    /// Total planned at the sources, minor units of the instance currency.
    pub total_amount: i64,
    /// Whether any member account also serves in another instance.
    pub reused_accounts: bool,
}

impl PatternInstance {
    /// Amount each source account must hold before execution starts.
    pub fn source_requirements(&self) -> Vec<(AccountIdx, i64)> {
        let mut out = Vec::new();
        for (i, (&acct, role)) in self.accounts.iter().zip(&self.roles).enumerate() {
            if *role == Role::Source {
                let need: i64 = self
                    .steps
                    .iter()
                    .filter(|s| s.from as usize == i)
                    .map(|s| s.amount)
                    .sum();
                out.push((acct, need));
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("shape wants {expected} accounts, got {got}")]
    WrongAccountCount { expected: u32, got: usize },
    #[error("shape wants {expected} source amounts, got {got}")]
    WrongSourceCount { expected: u32, got: usize },
    #[error("source amounts must cover at least 1 minor unit per outgoing step")]
    AmountTooSmall,
    #[error("span of {0} minutes is too short for {1} phases")]
    SpanTooShort(u32, u32),
}

/// Split `total` over `parts` branches, each at least 1 minor unit.
fn split_min_one(stream: &mut RngStream, total: i64, parts: usize) -> Result<Vec<i64>, PatternError> {
    if total < parts as i64 {
        return Err(PatternError::AmountTooSmall);
    }
    let mut v = stream.simplex_split(total - parts as i64, parts);
    for x in &mut v {
        *x += 1;
    }
    Ok(v)
}

/// What an intermediary forwards after keeping its cut.
fn attenuate(amount: i64, retention: f64) -> i64 {
    ((amount as f64 * (1.0 - retention)).round_ties_even() as i64).clamp(1, amount.max(1))
}

/// A strictly increasing sequence of `count` minutes within `[1, span)`.
fn sequential_minutes(stream: &mut RngStream, count: u32, span: u32) -> Result<Vec<u32>, PatternError> {
    if span <= count + 2 {
        return Err(PatternError::SpanTooShort(span, count));
    }
    let mut t: Vec<u32> = (0..count)
        .map(|_| stream.range_u64(1, u64::from(span - count)) as u32)
        .collect();
    t.sort_unstable();
    for (i, x) in t.iter_mut().enumerate() {
        *x += i as u32;
    }
    Ok(t)
}

/// A minute inside phase `i` of `n`; phases are disjoint windows, so any
/// later-phase step is strictly after any earlier-phase step.
fn phase_minute(stream: &mut RngStream, phase: u32, phases: u32, span: u32) -> Result<u32, PatternError> {
    let w = span / phases;
    if w < 3 {
        return Err(PatternError::SpanTooShort(span, phases));
    }
    let lo = phase * w + 1;
    let hi = (phase + 1) * w - 1;
    Ok(stream.range_u64(u64::from(lo), u64::from(hi)) as u32)
}

/// Edge list covering every left node as a sender and every right node as a
/// receiver, padded with random extra pairs up to `e` edges.
fn bipartite_edges(stream: &mut RngStream, k: u32, m: u32, e: u32) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(e as usize);
    for i in 0..k.max(m) {
        edges.push((i % k, i % m));
    }
    while (edges.len() as u32) < e {
        edges.push((
            stream.range_u64(0, u64::from(k)) as u32,
            stream.range_u64(0, u64::from(m)) as u32,
        ));
    }
    edges
}

/// Plan one instance. `accounts` must have exactly `shape.node_count()`
/// entries, ordered sources, then middles, then sinks (ring/walk order for
/// cycle and random). `source_amounts` gives the planned outgoing total per
/// source account; single-source kinds take one entry. `rounds` is 1 or 2
/// (a second tranche repeats the edge set later in the span). `retention`
/// is the cut each intermediary keeps when forwarding.
#[allow(clippy::too_many_arguments)]
pub fn instantiate(
    pattern_id: u32,
    shape: &Shape,
    accounts: &[AccountIdx],
    source_amounts: &[i64],
    span_minutes: u32,
    rounds: u32,
    retention: f64,
    reused_accounts: bool,
    stream: &mut RngStream,
) -> Result<PatternInstance, PatternError> {
    let expected = shape.node_count();
    if accounts.len() != expected as usize {
        return Err(PatternError::WrongAccountCount {
            expected,
            got: accounts.len(),
        });
    }
    let n_sources = shape.source_count();
    if source_amounts.len() != n_sources as usize {
        return Err(PatternError::WrongSourceCount {
            expected: n_sources,
            got: source_amounts.len(),
        });
    }
    if source_amounts.iter().any(|&a| a <= 0) {
        return Err(PatternError::AmountTooSmall);
    }
    let rounds = rounds.clamp(1, 2);
    let total: i64 = source_amounts.iter().sum();

    let mut roles = Vec::with_capacity(accounts.len());
    let mut steps: Vec<PlannedStep> = Vec::new();
    let push = |steps: &mut Vec<PlannedStep>, offset: u32, from: u32, to: u32, amount: i64| {
        steps.push(PlannedStep {
            offset_minutes: offset,
            from: from as u16,
            to: to as u16,
            amount,
        });
    };

    match *shape {
        Shape::FanOut { k } => {
            roles.push(Role::Source);
            roles.extend(std::iter::repeat_n(Role::Sink, k as usize));
            let round_totals = split_min_one(stream, total, rounds as usize)?;
            for (r, rt) in round_totals.iter().enumerate() {
                let shares = split_min_one(stream, *rt, k as usize)?;
                for (i, share) in shares.iter().enumerate() {
                    let t = phase_minute(stream, r as u32, rounds, span_minutes)?;
                    push(&mut steps, t, 0, 1 + i as u32, *share);
                }
            }
        }
        Shape::FanIn { k } => {
            roles.extend(std::iter::repeat_n(Role::Source, k as usize));
            roles.push(Role::Sink);
            for (i, amt) in source_amounts.iter().enumerate() {
                let round_shares = split_min_one(stream, *amt, rounds as usize)?;
                for (r, share) in round_shares.iter().enumerate() {
                    let t = phase_minute(stream, r as u32, rounds, span_minutes)?;
                    push(&mut steps, t, i as u32, k, *share);
                }
            }
        }
        Shape::GatherScatter { a, b } => {
            roles.extend(std::iter::repeat_n(Role::Source, a as usize));
            roles.push(Role::Middle);
            roles.extend(std::iter::repeat_n(Role::Sink, b as usize));
            let hub = a;
            let phases = 2 * rounds;
            // Per-source totals split over rounds up front so both rounds
            // stay funded.
            let mut round_in: Vec<Vec<i64>> = Vec::new();
            for amt in source_amounts {
                round_in.push(split_min_one(stream, *amt, rounds as usize)?);
            }
            for r in 0..rounds {
                let mut gathered = 0i64;
                for (i, shares) in round_in.iter().enumerate() {
                    let t = phase_minute(stream, 2 * r, phases, span_minutes)?;
                    push(&mut steps, t, i as u32, hub, shares[r as usize]);
                    gathered += shares[r as usize];
                }
                let out_total = attenuate(gathered, retention);
                let shares = split_min_one(stream, out_total, b as usize)?;
                for (j, share) in shares.iter().enumerate() {
                    let t = phase_minute(stream, 2 * r + 1, phases, span_minutes)?;
                    push(&mut steps, t, hub, a + 1 + j as u32, *share);
                }
            }
        }
        Shape::ScatterGather { k } => {
            roles.push(Role::Source);
            roles.extend(std::iter::repeat_n(Role::Middle, k as usize));
            roles.push(Role::Sink);
            let sink = k + 1;
            let phases = 2 * rounds;
            let round_totals = split_min_one(stream, total, rounds as usize)?;
            for (r, rt) in round_totals.iter().enumerate() {
                let shares = split_min_one(stream, *rt, k as usize)?;
                for (i, share) in shares.iter().enumerate() {
                    let t_out = phase_minute(stream, 2 * r as u32, phases, span_minutes)?;
                    push(&mut steps, t_out, 0, 1 + i as u32, *share);
                    let t_in = phase_minute(stream, 2 * r as u32 + 1, phases, span_minutes)?;
                    push(&mut steps, t_in, 1 + i as u32, sink, attenuate(*share, retention));
                }
            }
        }
        Shape::Cycle { n } => {
            roles.push(Role::Source);
            roles.extend(std::iter::repeat_n(Role::Middle, n as usize - 1));
            let loop_totals = split_min_one(stream, total, rounds as usize)?;
            let times = sequential_minutes(stream, n * rounds, span_minutes)?;
            let mut ti = 0;
            for lt in &loop_totals {
                let mut carry = *lt;
                for i in 0..n {
                    push(&mut steps, times[ti], i, (i + 1) % n, carry);
                    ti += 1;
                    carry = attenuate(carry, retention);
                }
            }
        }
        Shape::Random { n } => {
            roles.push(Role::Source);
            roles.extend(std::iter::repeat_n(Role::Middle, n as usize - 1));
            // Visit the other nodes in a random order, then one extra hop
            // between non-origin nodes (never back to the origin).
            let mut order: Vec<u32> = (1..n).collect();
            for i in (1..order.len()).rev() {
                let j = stream.range_usize(0, i + 1);
                order.swap(i, j);
            }
            let mut path: Vec<u32> = Vec::with_capacity(n as usize + 1);
            path.push(0);
            path.extend(&order);
            if n >= 3 {
                let last = *path.last().unwrap();
                let mut extra = order[stream.range_usize(0, order.len())];
                if extra == last {
                    extra = order[(order.iter().position(|&x| x == extra).unwrap() + 1) % order.len()];
                }
                path.push(extra);
            }
            let hops = path.len() - 1;
            let times = sequential_minutes(stream, hops as u32, span_minutes)?;
            let mut carry = total;
            for h in 0..hops {
                push(&mut steps, times[h], path[h], path[h + 1], carry);
                carry = attenuate(carry, retention);
            }
        }
        Shape::Bipartite { k, m, e } => {
            roles.extend(std::iter::repeat_n(Role::Source, k as usize));
            roles.extend(std::iter::repeat_n(Role::Sink, m as usize));
            let edges = bipartite_edges(stream, k, m, e);
            // Group edges per source, then split that source's amount.
            for i in 0..k {
                let mine: Vec<u32> = edges
                    .iter()
                    .filter(|(s, _)| *s == i)
                    .map(|&(_, t)| t)
                    .collect();
                if mine.is_empty() {
                    continue;
                }
                let shares = split_min_one(stream, source_amounts[i as usize], mine.len())?;
                for (t_node, share) in mine.iter().zip(&shares) {
                    let t = phase_minute(stream, 0, 1, span_minutes)?;
                    push(&mut steps, t, i, k + t_node, *share);
                }
            }
        }
        Shape::Stack { k, m, n } => {
            roles.extend(std::iter::repeat_n(Role::Source, k as usize));
            roles.extend(std::iter::repeat_n(Role::Middle, m as usize));
            roles.extend(std::iter::repeat_n(Role::Sink, n as usize));
            let phases = 2 * rounds;
            let mut round_in: Vec<Vec<i64>> = Vec::new();
            for amt in source_amounts {
                round_in.push(split_min_one(stream, *amt, rounds as usize)?);
            }
            for r in 0..rounds {
                // Layer 1: complete k x m biclique.
                let mut received = vec![0i64; m as usize];
                for (i, shares_by_round) in round_in.iter().enumerate() {
                    let shares = split_min_one(stream, shares_by_round[r as usize], m as usize)?;
                    for (j, share) in shares.iter().enumerate() {
                        let t = phase_minute(stream, 2 * r, phases, span_minutes)?;
                        push(&mut steps, t, i as u32, k + j as u32, *share);
                        received[j] += share;
                    }
                }
                // Layer 2: complete m x n biclique of the forwarded funds.
                for (j, got) in received.iter().enumerate() {
                    let fwd = attenuate(*got, retention);
                    let shares = split_min_one(stream, fwd, n as usize)?;
                    for (l, share) in shares.iter().enumerate() {
                        let t = phase_minute(stream, 2 * r + 1, phases, span_minutes)?;
                        push(&mut steps, t, k + j as u32, k + m + l as u32, *share);
                    }
                }
            }
        }
    }

    Ok(PatternInstance {
        pattern_id,
        kind: shape.kind(),
        accounts: accounts.to_vec(),
        roles,
        steps,
        span_minutes,
        total_amount: total,
        reused_accounts,
    })
}

/// One emitted transfer belonging to an instance, as read back from output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmittedStep {
    pub minute: u32,
    pub from: AccountIdx,
    pub to: AccountIdx,
    pub amount: i64,
}

/// Structural checks over a completed instance. Returns human-readable
/// violations; empty means pass.
pub fn validate(instance: &PatternInstance, emitted: &[EmittedStep]) -> Vec<String> {
    let mut v = Vec::new();
    let accounts = &instance.accounts;
    let idx_of = |a: AccountIdx| accounts.iter().position(|&x| x == a);

    let mut nodes: Vec<AccountIdx> = emitted.iter().flat_map(|e| [e.from, e.to]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() >= 18 {
        v.push(format!("instance touches {} accounts (max 17)", nodes.len()));
    }
    if emitted.is_empty() {
        v.push("instance emitted no transactions".into());
        return v;
    }
    if emitted.len() != instance.steps.len() {
        v.push(format!(
            "emitted {} steps, planned {}",
            emitted.len(),
            instance.steps.len()
        ));
    }
    for e in emitted {
        if idx_of(e.from).is_none() || idx_of(e.to).is_none() {
            v.push(format!("step touches account outside the instance: {e:?}"));
            return v;
        }
        if e.amount <= 0 {
            v.push(format!("non-positive step amount {}", e.amount));
        }
        if e.from == e.to {
            v.push("self-transfer inside a pattern".into());
        }
    }

    let role_of = |a: AccountIdx| instance.roles[idx_of(a).unwrap()];
    let sources: Vec<AccountIdx> = accounts
        .iter()
        .zip(&instance.roles)
        .filter(|(_, r)| **r == Role::Source)
        .map(|(a, _)| *a)
        .collect();
    let sinks: Vec<AccountIdx> = accounts
        .iter()
        .zip(&instance.roles)
        .filter(|(_, r)| **r == Role::Sink)
        .map(|(a, _)| *a)
        .collect();
    let middles: Vec<AccountIdx> = accounts
        .iter()
        .zip(&instance.roles)
        .filter(|(_, r)| **r == Role::Middle)
        .map(|(a, _)| *a)
        .collect();

    // Every receiver of funds must forward them no earlier than they
    // arrive; checked pairwise per middle account via order statistics.
    let check_relay = |account: AccountIdx, label: &str| -> Option<String> {
        let mut ins: Vec<u32> = emitted.iter().filter(|e| e.to == account).map(|e| e.minute).collect();
        let mut outs: Vec<u32> = emitted.iter().filter(|e| e.from == account).map(|e| e.minute).collect();
        ins.sort_unstable();
        outs.sort_unstable();
        if outs.is_empty() || ins.is_empty() {
            return None;
        }
        for (i, out) in outs.iter().enumerate() {
            if i < ins.len() && *out <= ins[i] {
                return Some(format!(
                    "{label} {account} forwards at {out} before its matching inflow"
                ));
            }
        }
        None
    };

    match instance.kind {
        PatternKind::FanOut => {
            let src = sources[0];
            if sinks.len() < 2 {
                v.push(format!("fan-out needs at least 2 sinks, has {}", sinks.len()));
            }
            for e in emitted {
                if e.from != src {
                    v.push(format!("fan-out edge not from the source: {e:?}"));
                }
                if role_of(e.to) != Role::Sink {
                    v.push(format!("fan-out edge into a non-sink: {e:?}"));
                }
            }
            for s in &sinks {
                if !emitted.iter().any(|e| e.to == *s) {
                    v.push(format!("fan-out sink {s} never receives"));
                }
            }
        }
        PatternKind::FanIn => {
            let sink = sinks[0];
            if sources.len() < 2 {
                v.push(format!("fan-in needs at least 2 sources, has {}", sources.len()));
            }
            for e in emitted {
                if e.to != sink {
                    v.push(format!("fan-in edge not into the sink: {e:?}"));
                }
                if role_of(e.from) != Role::Source {
                    v.push(format!("fan-in edge from a non-source: {e:?}"));
                }
            }
            for s in &sources {
                if !emitted.iter().any(|e| e.from == *s) {
                    v.push(format!("fan-in source {s} never sends"));
                }
            }
        }
        PatternKind::GatherScatter => {
            let hub = middles[0];
            if sources.len() < 2 || sinks.len() < 2 {
                v.push("gather-scatter needs at least 2 sources and 2 sinks".into());
            }
            for e in emitted {
                let ok = (role_of(e.from) == Role::Source && e.to == hub)
                    || (e.from == hub && role_of(e.to) == Role::Sink);
                if !ok {
                    v.push(format!("gather-scatter edge outside sources->hub->sinks: {e:?}"));
                }
            }
            for s in &sources {
                if !emitted.iter().any(|e| e.from == *s) {
                    v.push(format!("gather-scatter source {s} never sends"));
                }
            }
            for s in &sinks {
                if !emitted.iter().any(|e| e.to == *s) {
                    v.push(format!("gather-scatter sink {s} never receives"));
                }
            }
            v.extend(check_relay(hub, "gather-scatter hub"));
        }
        PatternKind::ScatterGather => {
            let src = sources[0];
            let sink = sinks[0];
            if src == sink {
                v.push("scatter-gather source equals sink".into());
            }
            for e in emitted {
                let ok = (e.from == src && role_of(e.to) == Role::Middle)
                    || (role_of(e.from) == Role::Middle && e.to == sink);
                if !ok {
                    v.push(format!("scatter-gather edge outside source->mid->sink: {e:?}"));
                }
            }
            let mut out_set: Vec<AccountIdx> =
                emitted.iter().filter(|e| e.from == src).map(|e| e.to).collect();
            let mut in_set: Vec<AccountIdx> =
                emitted.iter().filter(|e| e.to == sink).map(|e| e.from).collect();
            out_set.sort_unstable();
            out_set.dedup();
            in_set.sort_unstable();
            in_set.dedup();
            if out_set != in_set {
                v.push("intermediate set mismatch between scatter and gather phases".into());
            }
            for m in &middles {
                v.extend(check_relay(*m, "scatter-gather intermediate"));
            }
        }
        PatternKind::Cycle => {
            let mut ordered: Vec<&EmittedStep> = emitted.iter().collect();
            ordered.sort_by_key(|e| e.minute);
            let origin = ordered[0].from;
            for w in ordered.windows(2) {
                if w[1].from != w[0].to {
                    v.push("cycle steps do not chain".into());
                }
                if w[1].minute <= w[0].minute {
                    v.push("cycle timestamps not strictly increasing".into());
                }
            }
            if ordered.last().unwrap().to != origin {
                v.push("cycle not closed".into());
            }
            // Within one loop, non-origin accounts are visited at most once.
            let n = nodes.len();
            if n >= 2 && !emitted.len().is_multiple_of(n) {
                v.push(format!("cycle of {n} nodes emitted {} steps", emitted.len()));
            }
        }
        PatternKind::Random => {
            let mut ordered: Vec<&EmittedStep> = emitted.iter().collect();
            ordered.sort_by_key(|e| e.minute);
            let origin = ordered[0].from;
            for w in ordered.windows(2) {
                if w[1].from != w[0].to {
                    v.push("random walk steps do not chain".into());
                }
                if w[1].minute <= w[0].minute {
                    v.push("random walk timestamps not strictly increasing".into());
                }
            }
            if ordered.iter().any(|e| e.to == origin) {
                v.push("random walk returns funds to the origin".into());
            }
        }
        PatternKind::Bipartite => {
            if sources.len() < 2 || sinks.len() < 2 {
                v.push("bipartite needs at least 2 nodes per side".into());
            }
            for e in emitted {
                if role_of(e.from) != Role::Source || role_of(e.to) != Role::Sink {
                    v.push(format!("bipartite edge outside source->sink layers: {e:?}"));
                }
            }
            for s in &sources {
                if !emitted.iter().any(|e| e.from == *s) {
                    v.push(format!("bipartite source {s} never sends"));
                }
            }
            for s in &sinks {
                if !emitted.iter().any(|e| e.to == *s) {
                    v.push(format!("bipartite sink {s} never receives"));
                }
            }
        }
        PatternKind::Stack => {
            if sources.len() < 2 || middles.len() < 2 || sinks.len() < 2 {
                v.push("stack needs at least 2 nodes per layer".into());
            }
            for e in emitted {
                let ok = (role_of(e.from) == Role::Source && role_of(e.to) == Role::Middle)
                    || (role_of(e.from) == Role::Middle && role_of(e.to) == Role::Sink);
                if !ok {
                    v.push(format!("stack edge outside its two layers: {e:?}"));
                }
            }
            for m in &middles {
                v.extend(check_relay(*m, "stack middle"));
            }
        }
    }
    v
}

/// Expected emitted transactions per instance of `kind` under `histogram`,
/// including clamps and the extra-tranche chance. Drives budget derivation.
pub fn expected_tx_per_instance(kind: PatternKind, histogram: &[SizeBin]) -> f64 {
    let mut total_p = 0.0;
    let mut acc = 0.0;
    for bin in histogram {
        if bin.p <= 0.0 {
            continue;
        }
        let hi = bin.max.unwrap_or(bin.min + 1).max(bin.min + 1);
        let values: Vec<u32> = (bin.min..hi).collect();
        let per = bin.p / values.len() as f64;
        for s in values {
            acc += per * edges_for_size(kind, s);
            total_p += per;
        }
    }
    let base = if total_p > 0.0 { acc / total_p } else { 0.0 };
    base * (1.0 + extra_tranche_p(kind))
}

fn edges_for_size(kind: PatternKind, s: u32) -> f64 {
    let shape = Shape::for_size(
        kind,
        SizeDraw {
            primary: s,
            // Same-size sides in expectation; additivity makes this exact
            // for the mean because both draws share the distribution.
            secondary: Some(s),
        },
    );
    match shape {
        Shape::FanOut { k } | Shape::FanIn { k } => f64::from(k),
        Shape::GatherScatter { a, b } => f64::from(a + b),
        Shape::ScatterGather { k } => 2.0 * f64::from(k),
        Shape::Cycle { n } => f64::from(n),
        Shape::Random { n } => {
            if s >= 3 {
                f64::from(n)
            } else {
                2.0
            }
        }
        Shape::Bipartite { e, .. } => f64::from(e),
        Shape::Stack { k, m, n } => f64::from(k * m + m * n),
    }
}
