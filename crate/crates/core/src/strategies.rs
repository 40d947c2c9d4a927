//! Per-meeting packet selection for flooding, epidemic routing, random linear
//! network coding and LT erasure coding. Each side of a meeting sends at most
//! one packet.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{rlnc_recombine, CodingError, LtSymbol, PeelingDecoder, RlncDecoder, RlncPacket};
use crate::graph::NodeId;
use crate::idset::IdSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Flooding,
    EpidemicRandom,
    EpidemicLocalRarest,
    NetworkCoding,
    Erasure,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::NetworkCoding,
        StrategyKind::EpidemicLocalRarest,
        StrategyKind::EpidemicRandom,
        StrategyKind::Erasure,
        StrategyKind::Flooding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Flooding => "flooding",
            StrategyKind::EpidemicRandom => "epidemic_random",
            StrategyKind::EpidemicLocalRarest => "epidemic_local_rarest",
            StrategyKind::NetworkCoding => "network_coding",
            StrategyKind::Erasure => "erasure",
        }
    }

    /// Whether receivers keep neighbor summaries for rarity estimates.
    pub fn uses_rarity(self) -> bool {
        matches!(self, StrategyKind::EpidemicLocalRarest | StrategyKind::Erasure)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "flooding" | "fd" => StrategyKind::Flooding,
            "epidemic_random" | "ep_r" => StrategyKind::EpidemicRandom,
            "epidemic_local_rarest" | "ep_lr" => StrategyKind::EpidemicLocalRarest,
            "network_coding" | "nc" => StrategyKind::NetworkCoding,
            "erasure" | "er" => StrategyKind::Erasure,
            other => return Err(format!("unknown strategy {other:?}")),
        })
    }
}

/// What a node holds.
#[derive(Clone, Debug)]
pub enum Content {
    /// Original packet indices.
    Plain(IdSet),
    Coded(RlncDecoder),
    /// Symbol ids into a trial-wide pool, plus the peeling state they feed.
    Symbols { held: IdSet, decoder: PeelingDecoder },
}

/// A packet in flight.
#[derive(Clone, Debug, PartialEq)]
pub enum Transfer {
    Plain(usize),
    Coded(RlncPacket),
    Symbol(usize),
}

#[derive(Clone, Debug)]
pub struct NodeState {
    pub id: NodeId,
    pub alive: bool,
    pub finish_time: Option<f64>,
    pub content: Content,
    /// Flooding: packets already sent to (or received from) each peer.
    pub forwarded: HashMap<NodeId, IdSet>,
    /// Local rarest: last-known id set of each neighbor met so far.
    pub summaries: HashMap<NodeId, IdSet>,
    /// Per-id copy counts over `summaries`.
    rarity: Vec<u32>,
}

impl NodeState {
    pub fn new(id: NodeId, content: Content) -> Self {
        let universe = match &content {
            Content::Plain(s) => s.universe(),
            Content::Symbols { held, .. } => held.universe(),
            Content::Coded(_) => 0,
        };
        Self {
            id,
            alive: true,
            finish_time: None,
            content,
            forwarded: HashMap::new(),
            summaries: HashMap::new(),
            rarity: vec![0; universe],
        }
    }

    /// Identifier set for id-based strategies.
    pub fn ids(&self) -> Option<&IdSet> {
        match &self.content {
            Content::Plain(s) => Some(s),
            Content::Symbols { held, .. } => Some(held),
            Content::Coded(_) => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        match &self.content {
            Content::Plain(s) => s.len() == s.universe(),
            Content::Coded(d) => d.is_complete(),
            Content::Symbols { decoder, .. } => decoder.is_complete(),
        }
    }

    /// Amount of useful content: packets held, rank, or packets recovered.
    pub fn progress(&self) -> usize {
        match &self.content {
            Content::Plain(s) => s.len(),
            Content::Coded(d) => d.rank(),
            Content::Symbols { decoder, .. } => decoder.recovered_count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.content {
            Content::Plain(s) => s.is_empty(),
            Content::Coded(d) => d.rank() == 0,
            Content::Symbols { held, .. } => held.is_empty(),
        }
    }

    pub fn rarity_view(&self) -> RarityView<'_> {
        RarityView {
            counts: &self.rarity,
            own: self.ids(),
        }
    }

    /// Replace the stored summary of `peer`, keeping rarity counts in sync.
    pub fn update_summary(&mut self, peer: NodeId, ids: &IdSet) {
        match self.summaries.get_mut(&peer) {
            Some(old) => {
                if old == ids {
                    return;
                }
                for id in old.difference_iter(ids) {
                    self.rarity[id] -= 1;
                }
                for id in ids.difference_iter(old) {
                    self.rarity[id] += 1;
                }
                old.clone_from(ids);
            }
            None => {
                for id in ids.iter() {
                    self.rarity[id] += 1;
                }
                self.summaries.insert(peer, ids.clone());
            }
        }
    }

    /// Drop all held content (node failure).
    pub fn wipe(&mut self) {
        match &mut self.content {
            Content::Plain(s) => s.clear(),
            Content::Coded(d) => d.clear(),
            Content::Symbols { held, decoder } => {
                held.clear();
                decoder.clear();
            }
        }
        self.forwarded.clear();
        self.summaries.clear();
        self.rarity.iter_mut().for_each(|c| *c = 0);
    }

    /// Apply a reception from `from`. Returns whether it was innovative:
    /// new packet, rank growth, or a symbol not already held.
    pub fn receive(&mut self, from: NodeId, t: &Transfer, pool: &[LtSymbol]) -> Result<bool, CodingError> {
        match (&mut self.content, t) {
            (Content::Plain(s), &Transfer::Plain(p)) => {
                let fresh = s.insert(p);
                let universe = s.universe();
                // flooding never sends a packet back to where it came from
                self.forwarded
                    .entry(from)
                    .or_insert_with(|| IdSet::new(universe))
                    .insert(p);
                Ok(fresh)
            }
            (Content::Coded(d), Transfer::Coded(p)) => d.ingest(p),
            (Content::Symbols { held, decoder }, &Transfer::Symbol(id)) => {
                if !held.insert(id) {
                    return Ok(false);
                }
                decoder.add(&pool[id])?;
                Ok(true)
            }
            _ => panic!("transfer kind does not match node content"),
        }
    }
}

/// Copy counts seen from a receiver: its neighbor summaries plus its own buffer.
#[derive(Clone, Copy, Debug)]
pub struct RarityView<'a> {
    pub counts: &'a [u32],
    pub own: Option<&'a IdSet>,
}

impl RarityView<'_> {
    pub fn count(&self, id: usize) -> u32 {
        self.counts.get(id).copied().unwrap_or(0) + self.own.is_some_and(|s| s.contains(id)) as u32
    }
}

/// Flooding: a random packet `a` has not yet forwarded to `b`, which is then
/// logged as forwarded. The receiver's buffer is not consulted.
pub fn flooding_select<R: Rng + ?Sized>(a: &mut NodeState, b: NodeId, rng: &mut R) -> Option<usize> {
    let Content::Plain(buf) = &a.content else {
        return None;
    };
    let universe = buf.universe();
    let log = a.forwarded.entry(b).or_insert_with(|| IdSet::new(universe));
    let p = buf.choose_difference(log, rng)?;
    log.insert(p);
    Some(p)
}

/// Epidemic routing, random policy: uniform over `S_A - S_B`.
pub fn epidemic_select_random<R: Rng + ?Sized>(sa: &IdSet, sb: &IdSet, rng: &mut R) -> Option<usize> {
    sa.choose_difference(sb, rng)
}

/// Epidemic routing, local rarest: the receiver asks for the id in
/// `S_A - S_B` with the fewest known copies around it; ties are uniform.
pub fn epidemic_select_local_rarest<R: Rng + ?Sized>(
    sa: &IdSet,
    sb: &IdSet,
    view: RarityView<'_>,
    rng: &mut R,
) -> Option<usize> {
    let mut best = u32::MAX;
    let mut ties = 0u32;
    let mut pick = None;
    for id in sa.difference_iter(sb) {
        let c = view.count(id);
        if c < best {
            best = c;
            ties = 1;
            pick = Some(id);
        } else if c == best {
            // reservoir sampling keeps the tie choice uniform
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                pick = Some(id);
            }
        }
    }
    pick
}

/// Network coding: a random combination of `a`'s buffer, unless `a` holds
/// nothing or `b` has already announced completion.
pub fn nc_exchange<R: Rng + ?Sized>(a: &NodeState, b: &NodeState, rng: &mut R) -> Option<RlncPacket> {
    let Content::Coded(dec) = &a.content else {
        return None;
    };
    if dec.rank() == 0 || b.is_complete() {
        return None;
    }
    rlnc_recombine(dec.rows(), rng).ok()
}

/// Erasure coding: local-rarest choice over symbol ids; symbols travel as is.
pub fn erasure_select<R: Rng + ?Sized>(
    sa: &IdSet,
    sb: &IdSet,
    view: RarityView<'_>,
    rng: &mut R,
) -> Option<usize> {
    epidemic_select_local_rarest(sa, sb, view, rng)
}

/// What `a` sends to `b` under `kind`, computed from the current state.
/// Completed receivers get nothing.
pub fn select_transfer<R: Rng + ?Sized>(
    kind: StrategyKind,
    a: &mut NodeState,
    b: &NodeState,
    rng: &mut R,
) -> Option<Transfer> {
    if b.is_complete() {
        return None;
    }
    match kind {
        StrategyKind::Flooding => flooding_select(a, b.id, rng).map(Transfer::Plain),
        StrategyKind::EpidemicRandom => epidemic_select_random(a.ids()?, b.ids()?, rng).map(Transfer::Plain),
        StrategyKind::EpidemicLocalRarest => {
            epidemic_select_local_rarest(a.ids()?, b.ids()?, b.rarity_view(), rng).map(Transfer::Plain)
        }
        StrategyKind::NetworkCoding => nc_exchange(a, b, rng).map(Transfer::Coded),
        StrategyKind::Erasure => erasure_select(a.ids()?, b.ids()?, b.rarity_view(), rng).map(Transfer::Symbol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::FilePayload;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plain(id: NodeId, k: usize, ids: &[usize]) -> NodeState {
        NodeState::new(id, Content::Plain(IdSet::from_ids(k, ids.iter().copied())))
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn flooding_empty_and_exhausted() {
        let mut a = plain(0, 4, &[]);
        assert_eq!(flooding_select(&mut a, 1, &mut rng()), None);
        let mut a = plain(0, 4, &[1]);
        a.forwarded.insert(1, IdSet::from_ids(4, [1]));
        assert_eq!(flooding_select(&mut a, 1, &mut rng()), None);
    }

    #[test]
    fn flooding_sends_redundant_packets() {
        let mut a = plain(0, 4, &[1]);
        let mut b = plain(1, 4, &[1]);
        let p = flooding_select(&mut a, 1, &mut rng()).unwrap();
        assert_eq!(p, 1);
        assert!(!b.receive(0, &Transfer::Plain(p), &[]).unwrap());
        assert_eq!(flooding_select(&mut a, 1, &mut rng()), None);
    }

    #[test]
    fn flooding_does_not_relay_back() {
        let mut a = plain(0, 4, &[]);
        a.receive(1, &Transfer::Plain(2), &[]).unwrap();
        assert_eq!(flooding_select(&mut a, 1, &mut rng()), None);
        assert_eq!(flooding_select(&mut a, 5, &mut rng()), Some(2));
    }

    #[test]
    fn epidemic_basic_cases() {
        let s = |ids: &[usize]| IdSet::from_ids(8, ids.iter().copied());
        assert_eq!(epidemic_select_random(&s(&[1, 2]), &s(&[1, 2]), &mut rng()), None);
        assert_eq!(epidemic_select_random(&s(&[1, 2]), &s(&[2]), &mut rng()), Some(1));
    }

    fn chi_square(counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        let e = total as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn epidemic_random_is_uniform() {
        let sa = IdSet::from_ids(8, [1, 2, 3]);
        let sb = IdSet::new(8);
        let mut r = rng();
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[epidemic_select_random(&sa, &sb, &mut r).unwrap() - 1] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e4 - 1.0 / 3.0).abs() < 0.05);
        }
        // chi-square with 2 dof, 0.999 quantile
        assert!(chi_square(&counts) < 13.82, "{counts:?}");
    }

    #[test]
    fn local_rarest_ties_are_uniform() {
        let sa = IdSet::from_ids(8, [1, 2, 3]);
        let sb = IdSet::new(8);
        let counts = vec![4u32; 8];
        let view = RarityView {
            counts: &counts,
            own: Some(&sb),
        };
        let mut r = rng();
        let mut hist = [0usize; 3];
        for _ in 0..10_000 {
            hist[epidemic_select_local_rarest(&sa, &sb, view, &mut r).unwrap() - 1] += 1;
        }
        assert!(chi_square(&hist) < 13.82, "{hist:?}");
    }

    #[test]
    fn local_rarest_takes_strict_minimum() {
        let sa = IdSet::from_ids(3, [1, 2]);
        let sb = IdSet::new(3);
        let counts = [0u32, 5, 0];
        let view = RarityView {
            counts: &counts,
            own: None,
        };
        for seed in 0..50 {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(epidemic_select_local_rarest(&sa, &sb, view, &mut r), Some(2));
        }
        assert_eq!(epidemic_select_local_rarest(&sa, &sa, view, &mut rng()), None);
    }

    #[test]
    fn summaries_drive_rarity() {
        let mut b = plain(1, 4, &[]);
        b.update_summary(2, &IdSet::from_ids(4, [0, 1]));
        b.update_summary(3, &IdSet::from_ids(4, [0]));
        assert_eq!(b.rarity_view().count(0), 2);
        b.update_summary(3, &IdSet::from_ids(4, [3]));
        assert_eq!(b.rarity_view().count(0), 1);
        assert_eq!(b.rarity_view().count(3), 1);
        let a = plain(0, 4, &[0, 1, 2, 3]);
        assert_eq!(
            epidemic_select_local_rarest(a.ids().unwrap(), b.ids().unwrap(), b.rarity_view(), &mut rng()),
            Some(2)
        );
    }

    fn coded(id: NodeId, file: &FilePayload, packets: &[RlncPacket]) -> NodeState {
        let mut d = RlncDecoder::new(file.k(), file.packet_size());
        for p in packets {
            d.ingest(p).unwrap();
        }
        NodeState::new(id, Content::Coded(d))
    }

    #[test]
    fn nc_respects_empty_and_complete() {
        let f = FilePayload::random(3, 4, &mut rng()).unwrap();
        let empty = coded(0, &f, &[]);
        let full = coded(1, &f, &(0..3).map(|i| RlncPacket::unit(&f, i)).collect::<Vec<_>>());
        assert!(nc_exchange(&empty, &full, &mut rng()).is_none());
        assert!(nc_exchange(&full, &full, &mut rng()).is_none());
        assert!(nc_exchange(&full, &empty, &mut rng()).is_some());
    }

    #[test]
    fn nc_last_rank_completes_decode() {
        let f = FilePayload::random(4, 8, &mut rng()).unwrap();
        let mut r = rng();
        let mut b = coded(1, &f, &(0..3).map(|i| RlncPacket::unit(&f, i)).collect::<Vec<_>>());
        let a = coded(0, &f, &[RlncPacket::unit(&f, 3)]);
        let p = nc_exchange(&a, &b, &mut r).unwrap();
        assert!(b.receive(0, &Transfer::Coded(p), &[]).unwrap());
        assert!(b.is_complete());
        let Content::Coded(d) = &b.content else { unreachable!() };
        assert_eq!(d.decoded().unwrap(), f);
    }

    #[test]
    fn erasure_overhead_and_ripple() {
        let f = FilePayload::random(3, 4, &mut rng()).unwrap();
        let pool = vec![
            LtSymbol::from_neighbors(0, &f, vec![0]),
            LtSymbol::from_neighbors(1, &f, vec![0, 1]),
            LtSymbol::from_neighbors(2, &f, vec![1]),
        ];
        let mut b = NodeState::new(
            1,
            Content::Symbols {
                held: IdSet::new(3),
                decoder: PeelingDecoder::new(3, 4),
            },
        );
        b.receive(0, &Transfer::Symbol(0), &pool).unwrap();
        b.receive(0, &Transfer::Symbol(1), &pool).unwrap();
        assert_eq!(b.progress(), 2);
        // symbol 2 only covers packets already recovered
        assert!(b.receive(0, &Transfer::Symbol(2), &pool).unwrap());
        assert_eq!(b.progress(), 2);
        let held = IdSet::from_ids(3, [0, 1, 2]);
        assert_eq!(erasure_select(&held, b.ids().unwrap(), b.rarity_view(), &mut rng()), None);
    }

    #[test]
    fn completed_receiver_gets_nothing() {
        let mut a = plain(0, 2, &[0, 1]);
        let b = plain(1, 2, &[0, 1]);
        for kind in [StrategyKind::Flooding, StrategyKind::EpidemicRandom] {
            assert!(select_transfer(kind, &mut a, &b, &mut rng()).is_none());
        }
    }

    #[test]
    fn names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
    }
}
