//! A single Monte Carlo trial.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EngineError, FailureModel, MeetingQueue, TrialConfig};
use crate::coding::{FilePayload, LtEncoder, LtSymbol, PeelingDecoder, RlncDecoder, RlncPacket};
use crate::graph::{ContactGraph, NodeId};
use crate::idset::IdSet;
use crate::metrics::{NodeTally, TrialMetrics};
use crate::seeding::{build_plan, SeedingPlan, SeedingScheme};
use crate::strategies::{select_transfer, Content, NodeState, StrategyKind, Transfer};

/// What one side sends during a meeting.
enum Outgoing {
    Nothing,
    Packet(Transfer),
    /// A coded packet whose sender's span is known to lie inside the
    /// receiver's, so it is non-innovative whatever the coefficients.
    Redundant,
}

enum Spread {
    Ids(IdSet),
    Rank(RlncDecoder),
}

/// Watches one most-central user until it has spread enough of its seeds.
struct McuWatch {
    node: NodeId,
    threshold: usize,
    seeded: Option<IdSet>,
    spread: Spread,
}

impl McuWatch {
    fn record(&mut self, t: &Transfer) {
        match (&mut self.spread, t) {
            (Spread::Ids(s), &Transfer::Plain(id)) | (Spread::Ids(s), &Transfer::Symbol(id)) => {
                if self.seeded.as_ref().is_some_and(|seeded| seeded.contains(id)) {
                    s.insert(id);
                }
            }
            (Spread::Rank(d), Transfer::Coded(p)) => {
                let bare = RlncPacket {
                    coeffs: p.coeffs.clone(),
                    payload: Vec::new(),
                };
                d.ingest(&bare).expect("coefficient-only packet matches decoder");
            }
            _ => {}
        }
    }

    fn spread(&self) -> usize {
        match &self.spread {
            Spread::Ids(s) => s.len(),
            Spread::Rank(d) => d.rank(),
        }
    }
}

struct Sim<'a, 'g, 'w> {
    cfg: &'a TrialConfig<'g>,
    g: &'g ContactGraph,
    file: FilePayload,
    nodes: Vec<NodeState>,
    pool: Vec<LtSymbol>,
    metrics: TrialMetrics,
    unfinished_alive: usize,
    alive: usize,
    /// Bumped whenever a node's coded span changes.
    version: Vec<u32>,
    /// `(a, b) -> versions` at which span(a) was verified to lie in span(b).
    subset: HashMap<(NodeId, NodeId), (u32, u32)>,
    watches: Vec<McuWatch>,
    log: Option<&'w mut dyn Write>,
}

fn pair_mut(v: &mut [NodeState], a: usize, b: usize) -> (&mut NodeState, &mut NodeState) {
    assert_ne!(a, b);
    if a < b {
        let (l, r) = v.split_at_mut(b);
        (&mut l[a], &mut r[0])
    } else {
        let (l, r) = v.split_at_mut(a);
        (&mut r[0], &mut l[b])
    }
}

fn empty_content(kind: StrategyKind, k: usize, packet_size: usize, symbols: usize) -> Content {
    match kind {
        StrategyKind::NetworkCoding => Content::Coded(RlncDecoder::new(k, packet_size)),
        StrategyKind::Erasure => Content::Symbols {
            held: IdSet::new(symbols),
            decoder: PeelingDecoder::new(k, packet_size),
        },
        _ => Content::Plain(IdSet::new(k)),
    }
}

impl<'a, 'g, 'w> Sim<'a, 'g, 'w> {
    fn new<R: Rng + ?Sized>(
        cfg: &'a TrialConfig<'g>,
        plan: &SeedingPlan,
        file: FilePayload,
        rng: &mut R,
        log: Option<&'w mut dyn Write>,
    ) -> Result<Self, EngineError> {
        let g = cfg.graph;
        let (n, k) = (g.n(), cfg.k);
        let kind = cfg.strategy;
        let symbols = plan.placements.len();
        let mut nodes: Vec<NodeState> = (0..n)
            .map(|v| NodeState::new(v, empty_content(kind, k, cfg.packet_size, symbols)))
            .collect();
        let mut pool = Vec::new();
        let mut seeded_ids: Vec<IdSet> = Vec::new();
        match kind {
            StrategyKind::NetworkCoding => {
                // schemes that hand every community the whole file use unit
                // vectors for the first copy; everything else is a random
                // combination of all packets
                let full = match plan.scheme {
                    SeedingScheme::CommunityPct(p) => p >= 1.0,
                    SeedingScheme::RandomNetwork => false,
                    SeedingScheme::S1(_) | SeedingScheme::S2Mcu => true,
                };
                for p in &plan.placements {
                    let Content::Coded(d) = &mut nodes[p.node].content else { unreachable!() };
                    if full && p.copy == 0 {
                        d.ingest(&RlncPacket::unit(&file, p.packet))?;
                    } else if !d.is_complete() {
                        loop {
                            let q = RlncPacket::random(&file, rng);
                            if d.ingest(&q)? {
                                break;
                            }
                        }
                    }
                }
            }
            StrategyKind::Erasure => {
                let mut enc = LtEncoder::new(&cfg.soliton()?)?;
                seeded_ids = vec![IdSet::new(symbols); n];
                for p in &plan.placements {
                    let s = enc.encode(&file, rng);
                    let Content::Symbols { held, decoder } = &mut nodes[p.node].content else { unreachable!() };
                    held.insert(s.id);
                    decoder.add(&s)?;
                    seeded_ids[p.node].insert(s.id);
                    pool.push(s);
                }
            }
            _ => {
                seeded_ids = vec![IdSet::new(k); n];
                for p in &plan.placements {
                    let Content::Plain(s) = &mut nodes[p.node].content else { unreachable!() };
                    s.insert(p.packet);
                    seeded_ids[p.node].insert(p.packet);
                }
            }
        }

        let mut watches = Vec::new();
        if let FailureModel::McuPartial { fraction } = cfg.failure {
            let threshold = (fraction * k as f64).ceil() as usize;
            for &m in &plan.mcu {
                let spread = match kind {
                    StrategyKind::NetworkCoding => Spread::Rank(RlncDecoder::new(k, 0)),
                    _ => Spread::Ids(IdSet::new(seeded_ids[m].universe())),
                };
                watches.push(McuWatch {
                    node: m,
                    threshold,
                    seeded: seeded_ids.get(m).cloned(),
                    spread,
                });
            }
        }

        let seeded_per_node = nodes
            .iter()
            .map(|s| match &s.content {
                Content::Plain(ids) => ids.len(),
                Content::Coded(d) => d.rank(),
                Content::Symbols { held, .. } => held.len(),
            })
            .collect();
        let mut sim = Sim {
            cfg,
            g,
            file,
            nodes,
            pool,
            metrics: TrialMetrics {
                seed: cfg.seed,
                finish_times: vec![None; n],
                per_node: vec![NodeTally::default(); n],
                seeded_per_node,
                ..TrialMetrics::default()
            },
            unfinished_alive: n,
            alive: n,
            version: vec![0; n],
            subset: HashMap::new(),
            watches,
            log,
        };
        for v in 0..n {
            if sim.nodes[v].is_complete() {
                sim.finish(v, 0.0)?;
            }
        }
        Ok(sim)
    }

    fn emit(&mut self, line: std::fmt::Arguments<'_>) -> Result<(), EngineError> {
        if let Some(w) = self.log.as_mut() {
            w.write_fmt(line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn finish(&mut self, v: NodeId, t: f64) -> Result<(), EngineError> {
        self.nodes[v].finish_time = Some(t);
        self.metrics.finish_times[v] = Some(t);
        self.unfinished_alive -= 1;
        self.verify(v)?;
        self.emit(format_args!("t={t} ev=finish node={v}"))
    }

    /// A finished node must reproduce the original file.
    fn verify(&self, v: NodeId) -> Result<(), EngineError> {
        let ok = match &self.nodes[v].content {
            Content::Plain(_) => true,
            Content::Coded(d) => d.decoded().as_ref() == Some(&self.file),
            Content::Symbols { decoder, .. } => decoder.decoded().as_ref() == Some(&self.file),
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::Coding(crate::coding::CodingError::Integrity(format!(
                "node {v} decoded a file that differs from the source"
            ))))
        }
    }

    fn kill(&mut self, v: NodeId, t: f64) -> Result<(), EngineError> {
        let node = &mut self.nodes[v];
        if !node.alive {
            return Ok(());
        }
        node.alive = false;
        node.wipe();
        if node.finish_time.take().is_none() {
            self.unfinished_alive -= 1;
        }
        self.metrics.finish_times[v] = None;
        self.version[v] += 1;
        self.alive -= 1;
        self.metrics.failures.push((t, v));
        self.emit(format_args!("t={t} ev=fail node={v}"))
    }

    fn outgoing<R: Rng + ?Sized>(&mut self, a: NodeId, b: NodeId, rng: &mut R) -> Outgoing {
        let kind = self.cfg.strategy;
        let watched = self.watches.iter().any(|w| w.node == a);
        if kind == StrategyKind::NetworkCoding && !watched && !self.nodes[b].is_complete() && !self.nodes[a].is_empty() {
            if let Some(&(va, vb)) = self.subset.get(&(a, b)) {
                if va == self.version[a] && vb == self.version[b] {
                    return Outgoing::Redundant;
                }
            }
        }
        let (na, nb) = pair_mut(&mut self.nodes, a, b);
        match select_transfer(kind, na, nb, rng) {
            Some(t) => Outgoing::Packet(t),
            None => Outgoing::Nothing,
        }
    }

    /// Delivers `out` from `a` to `b`; returns whether `b` gained content.
    fn deliver(&mut self, a: NodeId, b: NodeId, out: &Outgoing) -> Result<bool, EngineError> {
        let innovative = match out {
            Outgoing::Nothing => return Ok(false),
            Outgoing::Redundant => false,
            Outgoing::Packet(t) => {
                for w in self.watches.iter_mut().filter(|w| w.node == a) {
                    w.record(t);
                }
                let pool = &self.pool;
                self.nodes[b].receive(a, t, pool)?
            }
        };
        self.metrics.transmissions_total += 1;
        self.metrics.per_node[a].sent += 1;
        self.metrics.per_node[b].received += 1;
        if innovative {
            self.metrics.innovative_total += 1;
            if self.cfg.strategy == StrategyKind::NetworkCoding {
                self.version[b] += 1;
            }
        } else {
            self.metrics.noninnovative_total += 1;
            self.metrics.per_node[b].noninnovative_received += 1;
        }
        Ok(innovative)
    }

    /// Exact test of span(a) within span(b), cached by version.
    fn refresh_subset(&mut self, a: NodeId, b: NodeId) -> Result<(), EngineError> {
        let (Content::Coded(da), Content::Coded(db)) = (&self.nodes[a].content, &self.nodes[b].content) else {
            return Ok(());
        };
        if da.rank() > db.rank() {
            return Ok(());
        }
        for row in da.rows() {
            if db.is_innovative(&row.coeffs)? {
                return Ok(());
            }
        }
        self.subset.insert((a, b), (self.version[a], self.version[b]));
        Ok(())
    }

    fn meet<R: Rng + ?Sized>(&mut self, u: NodeId, v: NodeId, t: f64, rng: &mut R) -> Result<(), EngineError> {
        self.metrics.meetings_total += 1;
        let uv = self.outgoing(u, v, rng);
        let vu = self.outgoing(v, u, rng);
        let gain_v = self.deliver(u, v, &uv)?;
        let gain_u = self.deliver(v, u, &vu)?;
        if self.log.is_some() {
            let tag = |o: &Outgoing| match o {
                Outgoing::Nothing => "-".to_string(),
                Outgoing::Redundant => "c".to_string(),
                Outgoing::Packet(Transfer::Plain(p)) => format!("p{p}"),
                Outgoing::Packet(Transfer::Symbol(s)) => format!("s{s}"),
                Outgoing::Packet(Transfer::Coded(_)) => "c".to_string(),
            };
            let (a, b) = (tag(&uv), tag(&vu));
            self.emit(format_args!("t={t} ev=meet u={u} v={v} uv={a} vu={b}"))?;
        }
        if self.cfg.strategy == StrategyKind::NetworkCoding {
            if matches!(uv, Outgoing::Packet(_)) && !gain_v {
                self.refresh_subset(u, v)?;
            }
            if matches!(vu, Outgoing::Packet(_)) && !gain_u {
                self.refresh_subset(v, u)?;
            }
        }
        if self.cfg.strategy.uses_rarity() {
            let (nu, nv) = pair_mut(&mut self.nodes, u, v);
            if let Some(sv) = nv.ids() {
                nu.update_summary(v, sv);
            }
            if let Some(su) = nu.ids() {
                nv.update_summary(u, su);
            }
        }
        for (x, gained) in [(v, gain_v), (u, gain_u)] {
            if gained && self.nodes[x].finish_time.is_none() && self.nodes[x].is_complete() {
                self.finish(x, t)?;
            }
        }
        let due: Vec<NodeId> = self
            .watches
            .iter()
            .filter(|w| w.spread() >= w.threshold && self.nodes[w.node].alive)
            .map(|w| w.node)
            .collect();
        if !due.is_empty() {
            for m in due {
                self.kill(m, t)?;
            }
            self.watches.retain(|w| self.nodes[w.node].alive);
        }
        Ok(())
    }

    /// Whether no unfinished alive node can ever complete: every one of them
    /// sits in an alive component whose pooled content is insufficient.
    fn stalled(&self) -> bool {
        let n = self.g.n();
        let mut comp = vec![usize::MAX; n];
        for s in 0..n {
            if !self.nodes[s].alive || comp[s] != usize::MAX {
                continue;
            }
            let mut members = vec![s];
            comp[s] = s;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &(y, _) in self.g.neighbors(x) {
                    if self.nodes[y].alive && comp[y] == usize::MAX {
                        comp[y] = s;
                        members.push(y);
                        q.push_back(y);
                    }
                }
            }
            let needs_work = members.iter().any(|&m| self.nodes[m].finish_time.is_none());
            if needs_work && self.can_complete(&members) {
                return false;
            }
        }
        true
    }

    fn can_complete(&self, members: &[NodeId]) -> bool {
        if members.iter().any(|&m| self.nodes[m].is_complete()) {
            return true;
        }
        let k = self.cfg.k;
        match self.cfg.strategy {
            StrategyKind::NetworkCoding => {
                let mut d = RlncDecoder::new(k, 0);
                for &m in members {
                    let Content::Coded(dm) = &self.nodes[m].content else { unreachable!() };
                    for row in dm.rows() {
                        let bare = RlncPacket {
                            coeffs: row.coeffs.clone(),
                            payload: Vec::new(),
                        };
                        d.ingest(&bare).expect("coefficient-only rows");
                        if d.is_complete() {
                            return true;
                        }
                    }
                }
                false
            }
            StrategyKind::Erasure => {
                let mut union = IdSet::new(self.pool.len());
                for &m in members {
                    union.union_with(self.nodes[m].ids().expect("symbol content"));
                }
                let mut d = PeelingDecoder::new(k, self.cfg.packet_size);
                for id in union.iter() {
                    d.add(&self.pool[id]).expect("seeded symbols are consistent");
                }
                d.is_complete()
            }
            _ => {
                let mut union = IdSet::new(k);
                for &m in members {
                    union.union_with(self.nodes[m].ids().expect("plain content"));
                }
                union.len() == k
            }
        }
    }
}

/// Marks one uniformly random alive node dead. Returns the victim, or `None`
/// when nobody is left.
pub fn apply_failure<R: Rng + ?Sized>(nodes: &mut [NodeState], rng: &mut R) -> Option<NodeId> {
    let alive: Vec<NodeId> = nodes.iter().filter(|s| s.alive).map(|s| s.id).collect();
    if alive.is_empty() {
        return None;
    }
    let v = alive[rng.random_range(0..alive.len())];
    nodes[v].alive = false;
    nodes[v].wipe();
    nodes[v].finish_time = None;
    Some(v)
}

pub fn run_trial(cfg: &TrialConfig<'_>) -> Result<TrialMetrics, EngineError> {
    run_trial_logged(cfg, None)
}

/// Runs one trial, optionally writing `t=<time> ev=<meet|fail|finish> ...`
/// lines to `log`.
/// The seeding plan a trial with this config starts from.
pub fn trial_plan(cfg: &TrialConfig<'_>) -> Result<SeedingPlan, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    FilePayload::random(cfg.k, cfg.packet_size, &mut rng)?;
    Ok(build_plan(cfg.graph, cfg.k, cfg.seeding, &mut rng)?)
}

pub fn run_trial_logged(cfg: &TrialConfig<'_>, log: Option<&mut dyn Write>) -> Result<TrialMetrics, EngineError> {
    cfg.validate()?;
    let g = cfg.graph;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let file = FilePayload::random(cfg.k, cfg.packet_size, &mut rng)?;
    let plan = build_plan(g, cfg.k, cfg.seeding, &mut rng)?;
    let mut sim = Sim::new(cfg, &plan, file, &mut rng, log)?;
    let mut queue = MeetingQueue::new(g, &mut rng)?;
    let interval = match cfg.failure {
        FailureModel::Periodic { interval } => Some(interval),
        _ => None,
    };
    let mut failures_done = 0u64;
    let mut now = 0.0;
    let periodic = interval.is_some();
    let mut stalled = sim.unfinished_alive > 0 && sim.stalled();

    loop {
        if sim.alive == 0 {
            sim.metrics.truncated = true;
            break;
        }
        if sim.unfinished_alive == 0 {
            break;
        }
        if stalled && !periodic {
            sim.metrics.truncated = true;
            break;
        }
        let next_fail = interval.map(|i| i * (failures_done + 1) as f64);
        let next_meet = if stalled { None } else { queue.peek_time() };
        let next = match (next_fail, next_meet) {
            (Some(f), Some(m)) => f.min(m),
            (Some(f), None) => f,
            (None, Some(m)) => m,
            (None, None) => {
                sim.metrics.truncated = true;
                break;
            }
        };
        if next > cfg.max_sim_time {
            sim.metrics.truncated = true;
            now = cfg.max_sim_time;
            break;
        }
        now = next;
        if next_fail == Some(next) {
            failures_done += 1;
            let alive: Vec<NodeId> = sim.nodes.iter().filter(|s| s.alive).map(|s| s.id).collect();
            let v = alive[rng.random_range(0..alive.len())];
            sim.kill(v, now)?;
            stalled = sim.unfinished_alive > 0 && sim.stalled();
            continue;
        }
        let ev = queue.pop().expect("peeked");
        let (u, v) = (ev.u, ev.v);
        if !sim.nodes[u].alive || !sim.nodes[v].alive {
            // the edge is gone for good
            continue;
        }
        queue.schedule(ev, g.edges()[ev.edge].w, &mut rng)?;
        let failures_before = sim.metrics.failures.len();
        sim.meet(u, v, now, &mut rng)?;
        if sim.metrics.failures.len() != failures_before {
            stalled = sim.unfinished_alive > 0 && sim.stalled();
        }
    }
    sim.metrics.end_time = now;
    Ok(sim.metrics)
}
