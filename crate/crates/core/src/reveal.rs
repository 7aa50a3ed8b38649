//! Iterated auctions: multibidders reveal their bids one at a time.
//!
//! Each multibidder owns a sequence of bidders sharing one priority. A
//! [`Configuration`] holds the revealed prefix of every sequence together
//! with a greedy MWM of the revealed auction, maintained incrementally. The
//! reveal loop ([`to_uap`]) keeps revealing the next bidder of any
//! multibidder that currently has nothing matched, until none is left.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{AssignmentEngine, Bidder, BidderId, EngineError, ItemId, ScalarBounds, Uap, UapMatching};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RevealError {
    #[error("bidder {0} is not ready")]
    NotReady(BidderId),
    #[error("invalid iterated auction: {0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A sequence of bidders with one common priority.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multibidder {
    priority: u64,
    bidders: Vec<Bidder>,
}

impl Multibidder {
    /// Builds a multibidder; each bidder's priority is overwritten with `priority`.
    pub fn new(priority: u64, bidders: Vec<Bidder>) -> Result<Self, RevealError> {
        let mut seen = HashSet::new();
        let mut bidders = bidders;
        for b in &mut bidders {
            if !seen.insert(b.id) {
                return Err(RevealError::Invalid(format!("bidder id {} repeated within a multibidder", b.id)));
            }
            b.priority = priority;
        }
        Ok(Multibidder { priority, bidders })
    }

    pub fn priority(&self) -> u64 {
        self.priority
    }

    pub fn bidders(&self) -> &[Bidder] {
        &self.bidders
    }
}

/// Multibidders with pairwise distinct priorities over the items `0..num_items`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iuap {
    multibidders: Vec<Multibidder>,
    num_items: usize,
}

impl Iuap {
    pub fn new(num_items: usize, multibidders: Vec<Multibidder>) -> Result<Self, RevealError> {
        let mut priorities = HashSet::new();
        let mut ids = HashSet::new();
        for t in &multibidders {
            if t.priority == 0 {
                return Err(RevealError::Engine(EngineError::ZeroPriority(t.bidders.first().map_or(0, |b| b.id))));
            }
            if !priorities.insert(t.priority) {
                return Err(RevealError::Invalid(format!("priority {} shared by two multibidders", t.priority)));
            }
            for b in &t.bidders {
                if !ids.insert(b.id) {
                    return Err(RevealError::Invalid(format!("bidder id {} used twice", b.id)));
                }
                if let Some(&item) = b.bid.keys().find(|&&v| v >= num_items) {
                    return Err(RevealError::Engine(EngineError::UnknownItem { bidder: b.id, item }));
                }
            }
        }
        Ok(Iuap { multibidders, num_items })
    }

    pub fn multibidders(&self) -> &[Multibidder] {
        &self.multibidders
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn total_bidders(&self) -> usize {
        self.multibidders.iter().map(|t| t.bidders.len()).sum()
    }
}

/// One reveal step, as emitted by the trace mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealRecord {
    pub step: usize,
    pub multibidder: usize,
    /// Position of the revealed bidder within its multibidder (0-based).
    pub tier: usize,
    pub bidder: BidderId,
    pub matched_after: bool,
    pub displaced: Option<Displaced>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Displaced {
    pub multibidder: usize,
    pub tier: usize,
    pub bidder: BidderId,
}

/// Revealed prefixes of an [`Iuap`] plus a maintained greedy MWM.
#[derive(Clone, Debug)]
pub struct Configuration<'a> {
    source: &'a Iuap,
    reveal_count: Vec<usize>,
    /// Engine slot of the last revealed bidder of each multibidder.
    last_slot: Vec<Option<usize>>,
    /// Engine slot -> (multibidder, position).
    origin: Vec<(usize, usize)>,
    engine: AssignmentEngine,
    steps: usize,
}

impl<'a> Configuration<'a> {
    /// Nothing revealed yet.
    pub fn initial(source: &'a Iuap) -> Result<Self, RevealError> {
        let bounds = ScalarBounds::of(source.multibidders.iter().flat_map(|t| t.bidders.iter()));
        Ok(Configuration {
            source,
            reveal_count: vec![0; source.multibidders.len()],
            last_slot: vec![None; source.multibidders.len()],
            origin: Vec::new(),
            engine: AssignmentEngine::with_bounds(source.num_items, bounds)?,
            steps: 0,
        })
    }

    /// Reveals the given prefix lengths unconditionally (bypassing readiness),
    /// in multibidder order then sequence order.
    pub fn from_prefixes(source: &'a Iuap, counts: &[usize]) -> Result<Self, RevealError> {
        let mut c = Self::initial(source)?;
        if counts.len() != source.multibidders.len() {
            return Err(RevealError::Invalid("one prefix length per multibidder required".into()));
        }
        for (t, &k) in counts.iter().enumerate() {
            if k > source.multibidders[t].bidders.len() {
                return Err(RevealError::Invalid(format!("prefix {k} longer than multibidder {t}")));
            }
            for _ in 0..k {
                c.push_next(t)?;
            }
        }
        Ok(c)
    }

    pub fn source(&self) -> &'a Iuap {
        self.source
    }

    pub fn reveal_counts(&self) -> &[usize] {
        &self.reveal_count
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The revealed auction.
    pub fn revealed(&self) -> Uap {
        self.engine.uap()
    }

    /// The maintained greedy MWM of the revealed auction.
    pub fn matching(&self) -> UapMatching {
        self.engine.matching()
    }

    /// Item matched to multibidder `t`'s last revealed bidder.
    pub fn last_mate(&self, t: usize) -> Option<ItemId> {
        self.last_slot[t].and_then(|s| self.engine.mate(s))
    }

    fn has_next(&self, t: usize) -> bool {
        self.reveal_count[t] < self.source.multibidders[t].bidders.len()
    }

    /// Number of revealed bidders of `t` matched in the maintained matching.
    fn matched_count(&self, t: usize) -> usize {
        (0..self.engine.len()).filter(|&s| self.origin[s].0 == t && self.engine.mate(s).is_some()).count()
    }

    fn is_ready(&self, t: usize) -> bool {
        self.has_next(t) && self.matched_count(t) == 0
    }

    /// Multibidders whose next bidder is ready, in index order.
    pub fn ready_multibidders(&self) -> Vec<usize> {
        (0..self.source.multibidders.len()).filter(|&t| self.is_ready(t)).collect()
    }

    /// Bidders that may be revealed next.
    pub fn ready_set(&self) -> Vec<&'a Bidder> {
        self.ready_multibidders()
            .into_iter()
            .map(|t| &self.source.multibidders[t].bidders[self.reveal_count[t]])
            .collect()
    }

    /// Reveals the bidder with id `bidder`, which must be ready.
    pub fn reveal(&mut self, bidder: BidderId) -> Result<RevealRecord, RevealError> {
        let t = (0..self.source.multibidders.len())
            .find(|&t| self.has_next(t) && self.source.multibidders[t].bidders[self.reveal_count[t]].id == bidder)
            .ok_or(RevealError::NotReady(bidder))?;
        if !self.is_ready(t) {
            return Err(RevealError::NotReady(bidder));
        }
        self.push_next(t)
    }

    fn push_next(&mut self, t: usize) -> Result<RevealRecord, RevealError> {
        let tier = self.reveal_count[t];
        let bidder = self.source.multibidders[t].bidders[tier].clone();
        let id = bidder.id;
        let out = self.engine.insert(bidder)?;
        self.origin.push((t, tier));
        self.reveal_count[t] += 1;
        self.last_slot[t] = Some(out.slot);
        self.steps += 1;
        let displaced = out.displaced.map(|s| {
            let (mt, pos) = self.origin[s];
            Displaced { multibidder: mt, tier: pos, bidder: self.engine.bidder(s).id }
        });
        Ok(RevealRecord { step: self.steps, multibidder: t, tier, bidder: id, matched_after: out.matched, displaced })
    }

    /// Every matched bidder is the last revealed bidder of its multibidder.
    pub fn tail_holds(&self) -> bool {
        (0..self.engine.len()).all(|s| self.engine.mate(s).is_none() || self.last_slot[self.origin[s].0] == Some(s))
    }

    /// Runs the reveal loop to its fixed point. Returns the records of the
    /// reveals performed.
    pub fn run(&mut self, policy: RevealPolicy) -> Result<Vec<RevealRecord>, RevealError> {
        let mut queue: VecDeque<usize> = self.ready_multibidders().into();
        let mut rng = match policy {
            RevealPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let mut records = Vec::new();
        while !queue.is_empty() {
            let pick = match policy {
                RevealPolicy::Fifo => 0,
                RevealPolicy::Reverse => {
                    let (k, _) = queue.iter().enumerate().max_by_key(|&(_, &t)| t).expect("queue nonempty");
                    k
                }
                RevealPolicy::Random { .. } => rng.as_mut().expect("seeded").gen_range(0..queue.len()),
            };
            let t = queue.remove(pick).expect("index in range");
            debug_assert!(self.is_ready(t));
            let rec = self.push_next(t)?;
            if !rec.matched_after && self.has_next(t) {
                queue.push_back(t);
            }
            if let Some(d) = &rec.displaced {
                if self.has_next(d.multibidder) && self.matched_count(d.multibidder) == 0 {
                    queue.push_back(d.multibidder);
                }
            }
            records.push(rec);
        }
        Ok(records)
    }
}

/// Which ready multibidder the reveal loop serves next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RevealPolicy {
    /// First come, first served, starting in multibidder index order.
    Fifo,
    /// Highest multibidder index first.
    Reverse,
    /// Uniformly random among the ready multibidders.
    Random { seed: u64 },
}

/// The auction reached when no bidder is ready any more.
pub fn to_uap(iuap: &Iuap, policy: RevealPolicy) -> Result<Uap, RevealError> {
    let mut c = Configuration::initial(iuap)?;
    c.run(policy)?;
    Ok(c.revealed())
}
