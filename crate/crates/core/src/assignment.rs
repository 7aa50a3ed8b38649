//! Unit-demand auctions with priorities.
//!
//! A [`Uap`] is a weighted bipartite graph between bidders and items. A
//! greedy MWM maximizes total bid weight, then cardinality, then the sum of
//! matched bidders' priorities. The engine folds those three objectives into
//! one integer weight per edge (see [`Scalarization`]) and maintains a
//! maximum-weight matching with Hungarian dual potentials, so a new bidder is
//! absorbed by a single augmentation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ItemId = usize;
pub type BidderId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("scalarized weights overflow 128-bit integers")]
    Overflow,
    #[error("bidder id {0} is already present")]
    DuplicateBidder(BidderId),
    #[error("bidder {bidder} bids on unknown item {item}")]
    UnknownItem { bidder: BidderId, item: ItemId },
    #[error("bidder {0} has priority 0; priorities must be at least 1")]
    ZeroPriority(BidderId),
    #[error("instance too large for enumeration: {vertices} vertices (limit {limit})")]
    SizeLimit { vertices: usize, limit: usize },
    #[error("bidder exceeds the engine's scalarization bounds")]
    BoundsExceeded,
}

/// A bidder: unique id, a partial map from items to integer weights, and a priority.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bidder {
    pub id: BidderId,
    pub bid: BTreeMap<ItemId, i64>,
    pub priority: u64,
}

impl Bidder {
    pub fn new(id: BidderId, priority: u64, bid: impl IntoIterator<Item = (ItemId, i64)>) -> Self {
        Bidder { id, bid: bid.into_iter().collect(), priority }
    }
}

/// A set of bidders over the items `0..num_items`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uap {
    bidders: Vec<Bidder>,
    num_items: usize,
}

impl Uap {
    pub fn new(num_items: usize, bidders: Vec<Bidder>) -> Result<Self, EngineError> {
        let mut uap = Uap { bidders: Vec::with_capacity(bidders.len()), num_items };
        for b in bidders {
            uap.push(b)?;
        }
        Ok(uap)
    }

    pub fn empty(num_items: usize) -> Self {
        Uap { bidders: Vec::new(), num_items }
    }

    pub fn push(&mut self, b: Bidder) -> Result<(), EngineError> {
        check_bidder(&b, self.num_items)?;
        if self.bidders.iter().any(|x| x.id == b.id) {
            return Err(EngineError::DuplicateBidder(b.id));
        }
        self.bidders.push(b);
        Ok(())
    }

    pub fn bidders(&self) -> &[Bidder] {
        &self.bidders
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn bidder(&self, id: BidderId) -> Option<&Bidder> {
        self.bidders.iter().find(|b| b.id == id)
    }

    /// Bid weight of edge `(bidder, item)`, if the edge exists.
    pub fn weight(&self, id: BidderId, item: ItemId) -> Option<i64> {
        self.bidder(id).and_then(|b| b.bid.get(&item).copied())
    }
}

fn check_bidder(b: &Bidder, num_items: usize) -> Result<(), EngineError> {
    if b.priority == 0 {
        return Err(EngineError::ZeroPriority(b.id));
    }
    if let Some((&item, _)) = b.bid.iter().find(|(&v, _)| v >= num_items) {
        return Err(EngineError::UnknownItem { bidder: b.id, item });
    }
    Ok(())
}

/// Hungarian dual potentials certifying optimality for one scalarization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub scalarization: Scalarization,
    pub bidder: BTreeMap<BidderId, i128>,
    pub item: Vec<i128>,
}

/// Matched `(bidder, item)` pairs, sorted by bidder id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UapMatching {
    pub edges: Vec<(BidderId, ItemId)>,
    pub potentials: Option<DualCertificate>,
}

impl UapMatching {
    pub fn item_of(&self, bidder: BidderId) -> Option<ItemId> {
        self.edges.iter().find(|(b, _)| *b == bidder).map(|&(_, v)| v)
    }

    pub fn matched_bidders(&self) -> BTreeSet<BidderId> {
        self.edges.iter().map(|&(b, _)| b).collect()
    }

    /// Sorted priorities of the matched bidders.
    pub fn priority_multiset(&self, uap: &Uap) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .edges
            .iter()
            .map(|&(b, _)| uap.bidder(b).expect("matched bidder exists").priority)
            .collect();
        out.sort_unstable();
        out
    }

    /// Lexicographic objective of a greedy MWM: weight, then size, then priority.
    pub fn score(&self, uap: &Uap) -> MatchingScore {
        let mut score = MatchingScore::default();
        for &(b, v) in &self.edges {
            let bidder = uap.bidder(b).expect("matched bidder exists");
            score.weight += i128::from(bidder.bid[&v]);
            score.cardinality += 1;
            score.priority += u128::from(bidder.priority);
        }
        score
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchingScore {
    pub weight: i128,
    pub cardinality: usize,
    pub priority: u128,
}

/// Folds `(weight, cardinality, priority)` into one integer:
/// `W(u, v) = w(u, v) * weight_scale + cardinality_bonus + priority(u)`.
///
/// With `cardinality_bonus > Σ priorities` and
/// `weight_scale > n * (cardinality_bonus + max priority)` over `n` bidders,
/// comparing total `W` compares matchings lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scalarization {
    pub weight_scale: i128,
    pub cardinality_bonus: i128,
}

/// Size bounds a scalarization must cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScalarBounds {
    pub bidders: u64,
    pub priority_sum: u128,
    pub max_priority: u64,
    pub max_abs_weight: u64,
}

impl ScalarBounds {
    pub fn of<'a>(bidders: impl IntoIterator<Item = &'a Bidder>) -> Self {
        let mut b = ScalarBounds::default();
        for x in bidders {
            b.bidders += 1;
            b.priority_sum += u128::from(x.priority);
            b.max_priority = b.max_priority.max(x.priority);
            for &w in x.bid.values() {
                b.max_abs_weight = b.max_abs_weight.max(w.unsigned_abs());
            }
        }
        b
    }

    fn join(&self, other: &ScalarBounds) -> ScalarBounds {
        ScalarBounds {
            bidders: self.bidders.max(other.bidders),
            priority_sum: self.priority_sum.max(other.priority_sum),
            max_priority: self.max_priority.max(other.max_priority),
            max_abs_weight: self.max_abs_weight.max(other.max_abs_weight),
        }
    }
}

impl Scalarization {
    /// Smallest admissible constants for the given bounds.
    pub fn minimal(bounds: &ScalarBounds) -> Result<Self, EngineError> {
        let bonus = i128::try_from(bounds.priority_sum).ok().and_then(|s| s.checked_add(1)).ok_or(EngineError::Overflow)?;
        let scale = bonus
            .checked_add(i128::from(bounds.max_priority))
            .and_then(|x| x.checked_mul(i128::from(bounds.bidders)))
            .and_then(|x| x.checked_add(1))
            .ok_or(EngineError::Overflow)?;
        Ok(Scalarization { weight_scale: scale, cardinality_bonus: bonus })
    }

    pub fn combine(&self, weight: i64, priority: u64) -> Option<i128> {
        i128::from(weight)
            .checked_mul(self.weight_scale)?
            .checked_add(self.cardinality_bonus)?
            .checked_add(i128::from(priority))
    }

    /// Largest |W| over any bidder within `bounds`.
    fn max_combined(&self, bounds: &ScalarBounds) -> Option<i128> {
        i128::from(bounds.max_abs_weight)
            .checked_mul(self.weight_scale)?
            .checked_add(self.cardinality_bonus)?
            .checked_add(i128::from(bounds.max_priority))
    }
}

/// Scalarized weight of every edge of `uap`, with minimal constants.
pub fn scalarize(uap: &Uap) -> Result<(Scalarization, BTreeMap<(BidderId, ItemId), i128>), EngineError> {
    let s = Scalarization::minimal(&ScalarBounds::of(&uap.bidders))?;
    let mut out = BTreeMap::new();
    for b in &uap.bidders {
        for (&v, &w) in &b.bid {
            out.insert((b.id, v), s.combine(w, b.priority).ok_or(EngineError::Overflow)?);
        }
    }
    Ok((s, out))
}

/// Integer type used for potentials in one engine instance.
pub trait Potential: Copy + Ord + Debug + Add<Output = Self> + Sub<Output = Self> + Send + Sync {
    const ZERO: Self;
    const MAX: Self;
    fn from_wide(x: i128) -> Option<Self>;
    fn widen(self) -> i128;
}

impl Potential for i64 {
    const ZERO: Self = 0;
    const MAX: Self = i64::MAX;
    fn from_wide(x: i128) -> Option<Self> {
        i64::try_from(x).ok()
    }
    fn widen(self) -> i128 {
        i128::from(self)
    }
}

impl Potential for i128 {
    const ZERO: Self = 0;
    const MAX: Self = i128::MAX;
    fn from_wide(x: i128) -> Option<Self> {
        Some(x)
    }
    fn widen(self) -> i128 {
        self
    }
}

/// What happened when a bidder was inserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsertOutcome {
    /// Engine slot of the new bidder (insertion order).
    pub slot: usize,
    pub matched: bool,
    /// Slot of a previously matched bidder left unmatched by the augmentation.
    pub displaced: Option<usize>,
}

/// Maximum-weight matching with dual potentials, grown one bidder at a time.
///
/// Invariants after every insertion: `y(u) + p(v) >= W(u, v)` on every edge,
/// equality on matched edges, `y(u) = 0` on unmatched bidders and `p(v) = 0`
/// on unmatched items.
#[derive(Clone, Debug)]
struct Auction<W> {
    scal: Scalarization,
    bounds: ScalarBounds,
    ids: Vec<BidderId>,
    priority: Vec<u64>,
    /// Positive-weight edges only, sorted by item.
    edges: Vec<Vec<(ItemId, W)>>,
    bidder_pot: Vec<W>,
    item_pot: Vec<W>,
    bidder_mate: Vec<Option<ItemId>>,
    item_mate: Vec<Option<usize>>,
    // search scratch
    slack: Vec<Option<W>>,
    slack_src: Vec<usize>,
    in_tree: Vec<bool>,
}

impl<W: Potential> Auction<W> {
    fn new(num_items: usize, scal: Scalarization, bounds: ScalarBounds) -> Self {
        Auction {
            scal,
            bounds,
            ids: Vec::new(),
            priority: Vec::new(),
            edges: Vec::new(),
            bidder_pot: Vec::new(),
            item_pot: vec![W::ZERO; num_items],
            bidder_mate: Vec::new(),
            item_mate: vec![None; num_items],
            slack: vec![None; num_items],
            slack_src: vec![0; num_items],
            in_tree: vec![false; num_items],
        }
    }

    fn convert_edges(&self, b: &Bidder) -> Result<Vec<(ItemId, W)>, EngineError> {
        let mut out = Vec::with_capacity(b.bid.len());
        for (&v, &w) in &b.bid {
            let c = self.scal.combine(w, b.priority).ok_or(EngineError::Overflow)?;
            if c > 0 {
                out.push((v, W::from_wide(c).ok_or(EngineError::BoundsExceeded)?));
            }
        }
        Ok(out)
    }

    fn admits(&self, b: &Bidder) -> bool {
        let extra = ScalarBounds::of(std::iter::once(b));
        self.bounds.bidders > self.ids.len() as u64
            && self.bounds.max_priority >= b.priority
            && self.bounds.max_abs_weight >= extra.max_abs_weight
            && self.bounds.priority_sum
                >= self.priority.iter().map(|&p| u128::from(p)).sum::<u128>() + u128::from(b.priority)
    }

    fn insert(&mut self, b: &Bidder) -> Result<InsertOutcome, EngineError> {
        if !self.admits(b) {
            return Err(EngineError::BoundsExceeded);
        }
        let edges = self.convert_edges(b)?;
        let root = self.ids.len();
        let mut y = W::ZERO;
        for &(v, w) in &edges {
            if w > self.item_pot[v] {
                y = y.max(w - self.item_pot[v]);
            }
        }
        self.ids.push(b.id);
        self.priority.push(b.priority);
        self.edges.push(edges);
        self.bidder_pot.push(y);
        self.bidder_mate.push(None);
        if y == W::ZERO {
            return Ok(InsertOutcome { slot: root, matched: false, displaced: None });
        }
        Ok(self.search(root))
    }

    /// Primal-dual search from the unmatched `root` with positive potential.
    fn search(&mut self, root: usize) -> InsertOutcome {
        let num_items = self.item_pot.len();
        for v in 0..num_items {
            self.slack[v] = None;
            self.in_tree[v] = false;
        }
        let mut tree: Vec<usize> = vec![root];
        let mut tree_items: Vec<ItemId> = Vec::new();
        self.relax(root);
        loop {
            let mut best_item: Option<(W, ItemId)> = None;
            for v in 0..num_items {
                if self.in_tree[v] {
                    continue;
                }
                if let Some(s) = self.slack[v] {
                    if best_item.is_none_or(|(bs, _)| s < bs) {
                        best_item = Some((s, v));
                    }
                }
            }
            let mut best_bidder: Option<(W, BidderId, usize)> = None;
            for &u in &tree {
                let key = (self.bidder_pot[u], self.ids[u]);
                if best_bidder.is_none_or(|(p, id, _)| key < (p, id)) {
                    best_bidder = Some((key.0, key.1, u));
                }
            }
            let (bidder_delta, _, bidder_slot) = best_bidder.expect("tree contains the root");
            match best_item {
                Some((delta, v)) if delta <= bidder_delta => {
                    self.shift(delta, &tree, &tree_items);
                    self.in_tree[v] = true;
                    tree_items.push(v);
                    match self.item_mate[v] {
                        None => {
                            self.augment(root, v);
                            return InsertOutcome { slot: root, matched: true, displaced: None };
                        }
                        Some(u) => {
                            tree.push(u);
                            self.relax(u);
                        }
                    }
                }
                _ => {
                    let u = bidder_slot;
                    self.shift(bidder_delta, &tree, &tree_items);
                    if u == root {
                        return InsertOutcome { slot: root, matched: false, displaced: None };
                    }
                    let v = self.bidder_mate[u].take().expect("tree bidders other than the root are matched");
                    self.item_mate[v] = None;
                    self.augment(root, v);
                    return InsertOutcome { slot: root, matched: true, displaced: Some(u) };
                }
            }
        }
    }

    fn relax(&mut self, u: usize) {
        let y = self.bidder_pot[u];
        for &(v, w) in &self.edges[u] {
            if self.in_tree[v] {
                continue;
            }
            let s = y + self.item_pot[v] - w;
            if self.slack[v].is_none_or(|cur| s < cur) {
                self.slack[v] = Some(s);
                self.slack_src[v] = u;
            }
        }
    }

    fn shift(&mut self, delta: W, tree: &[usize], tree_items: &[ItemId]) {
        if delta == W::ZERO {
            return;
        }
        for &u in tree {
            self.bidder_pot[u] = self.bidder_pot[u] - delta;
        }
        for &v in tree_items {
            self.item_pot[v] = self.item_pot[v] + delta;
        }
        for v in 0..self.slack.len() {
            if !self.in_tree[v] {
                if let Some(s) = self.slack[v] {
                    self.slack[v] = Some(s - delta);
                }
            }
        }
    }

    /// Flips the alternating path that reaches the free item `v`.
    fn augment(&mut self, root: usize, mut v: ItemId) {
        loop {
            let u = self.slack_src[v];
            let prev = self.bidder_mate[u];
            self.bidder_mate[u] = Some(v);
            self.item_mate[v] = Some(u);
            if u == root {
                break;
            }
            v = prev.expect("non-root tree bidder is matched");
        }
    }

    fn matching(&self) -> UapMatching {
        let mut edges: Vec<(BidderId, ItemId)> = self
            .bidder_mate
            .iter()
            .enumerate()
            .filter_map(|(u, m)| m.map(|v| (self.ids[u], v)))
            .collect();
        edges.sort_unstable();
        UapMatching {
            edges,
            potentials: Some(DualCertificate {
                scalarization: self.scal,
                bidder: self.ids.iter().zip(&self.bidder_pot).map(|(&id, y)| (id, y.widen())).collect(),
                item: self.item_pot.iter().map(|p| p.widen()).collect(),
            }),
        }
    }

    /// Rebuilds engine state from a certified matching.
    fn restore(uap: &Uap, m: &UapMatching, cert: &DualCertificate, bounds: ScalarBounds) -> Option<Self> {
        if cert.item.len() != uap.num_items {
            return None;
        }
        let mut a = Auction::<W>::new(uap.num_items, cert.scalarization, bounds);
        for (v, &p) in cert.item.iter().enumerate() {
            *a.item_pot.get_mut(v)? = W::from_wide(p)?;
        }
        for b in &uap.bidders {
            let slot = a.ids.len();
            a.ids.push(b.id);
            a.priority.push(b.priority);
            a.edges.push(a.convert_edges(b).ok()?);
            a.bidder_pot.push(W::from_wide(*cert.bidder.get(&b.id)?)?);
            a.bidder_mate.push(None);
            if let Some(v) = m.item_of(b.id) {
                a.bidder_mate[slot] = Some(v);
                a.item_mate[v] = Some(slot);
            }
        }
        Some(a)
    }
}

#[derive(Clone, Debug)]
enum Width {
    Narrow(Auction<i64>),
    Wide(Auction<i128>),
}

/// Incremental greedy-MWM engine; picks 64-bit potentials when the
/// scalarized weights leave enough headroom and 128-bit ones otherwise.
#[derive(Clone, Debug)]
pub struct AssignmentEngine {
    inner: Width,
    bidders: Vec<Bidder>,
    num_items: usize,
}

impl AssignmentEngine {
    /// Engine able to absorb any bidders within `bounds`.
    pub fn with_bounds(num_items: usize, bounds: ScalarBounds) -> Result<Self, EngineError> {
        let scal = Scalarization::minimal(&bounds)?;
        let top = scal.max_combined(&bounds).ok_or(EngineError::Overflow)?;
        let inner = if top <= i128::from(i64::MAX / 4) {
            Width::Narrow(Auction::new(num_items, scal, bounds))
        } else if top <= i128::MAX / 4 {
            Width::Wide(Auction::new(num_items, scal, bounds))
        } else {
            return Err(EngineError::Overflow);
        };
        Ok(AssignmentEngine { inner, bidders: Vec::new(), num_items })
    }

    pub fn is_wide(&self) -> bool {
        matches!(self.inner, Width::Wide(_))
    }

    pub fn scalarization(&self) -> Scalarization {
        match &self.inner {
            Width::Narrow(a) => a.scal,
            Width::Wide(a) => a.scal,
        }
    }

    /// Adds a bidder and restores a greedy MWM with one augmentation.
    /// If the bidder falls outside the current bounds, the engine is rebuilt
    /// with enlarged bounds (which may also switch to wide integers).
    pub fn insert(&mut self, b: Bidder) -> Result<InsertOutcome, EngineError> {
        check_bidder(&b, self.num_items)?;
        if self.bidders.iter().any(|x| x.id == b.id) {
            return Err(EngineError::DuplicateBidder(b.id));
        }
        let res = match &mut self.inner {
            Width::Narrow(a) => a.insert(&b),
            Width::Wide(a) => a.insert(&b),
        };
        match res {
            Ok(out) => {
                self.bidders.push(b);
                Ok(out)
            }
            Err(EngineError::BoundsExceeded) => {
                let before: Vec<Option<ItemId>> = (0..self.bidders.len()).map(|s| self.mate(s)).collect();
                self.bidders.push(b);
                let bounds = self.bounds();
                let mut grown = ScalarBounds::of(&self.bidders).join(&bounds);
                grown.bidders = grown.bidders.max(1) * 2;
                grown.priority_sum *= 2;
                let mut fresh = AssignmentEngine::with_bounds(self.num_items, grown)?;
                for x in &self.bidders {
                    let x = x.clone();
                    fresh.insert_unchecked(x)?;
                }
                *self = fresh;
                let slot = self.bidders.len() - 1;
                let displaced = before.iter().enumerate().find(|(s, m)| m.is_some() && self.mate(*s).is_none()).map(|(s, _)| s);
                Ok(InsertOutcome { slot, matched: self.mate(slot).is_some(), displaced })
            }
            Err(e) => Err(e),
        }
    }

    fn insert_unchecked(&mut self, b: Bidder) -> Result<InsertOutcome, EngineError> {
        let out = match &mut self.inner {
            Width::Narrow(a) => a.insert(&b),
            Width::Wide(a) => a.insert(&b),
        }?;
        self.bidders.push(b);
        Ok(out)
    }

    fn bounds(&self) -> ScalarBounds {
        match &self.inner {
            Width::Narrow(a) => a.bounds,
            Width::Wide(a) => a.bounds,
        }
    }

    /// Item matched to the bidder in `slot`, if any.
    pub fn mate(&self, slot: usize) -> Option<ItemId> {
        match &self.inner {
            Width::Narrow(a) => a.bidder_mate[slot],
            Width::Wide(a) => a.bidder_mate[slot],
        }
    }

    pub fn bidder(&self, slot: usize) -> &Bidder {
        &self.bidders[slot]
    }

    pub fn len(&self) -> usize {
        self.bidders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bidders.is_empty()
    }

    pub fn uap(&self) -> Uap {
        Uap { bidders: self.bidders.clone(), num_items: self.num_items }
    }

    pub fn matching(&self) -> UapMatching {
        match &self.inner {
            Width::Narrow(a) => a.matching(),
            Width::Wide(a) => a.matching(),
        }
    }
}

/// A greedy MWM of `uap`, with dual potentials as an optimality certificate.
pub fn greedy_mwm(uap: &Uap) -> UapMatching {
    build_engine(uap).expect("bidders of a valid Uap fit the scalarization").matching()
}

fn build_engine(uap: &Uap) -> Result<AssignmentEngine, EngineError> {
    let mut engine = AssignmentEngine::with_bounds(uap.num_items, ScalarBounds::of(&uap.bidders))?;
    for b in &uap.bidders {
        engine.insert_unchecked(b.clone())?;
    }
    Ok(engine)
}

/// Adds `b` to `uap` and updates the greedy MWM `matching` with one
/// augmentation, reusing its certificate. Falls back to a fresh solve when
/// the certificate is missing or its scalarization cannot cover `b`.
pub fn add_bidder(uap: Uap, matching: UapMatching, b: Bidder) -> Result<(Uap, UapMatching), EngineError> {
    let mut next = uap.clone();
    next.push(b.clone())?;
    let bounds = ScalarBounds::of(&next.bidders);
    if let Some(cert) = &matching.potentials {
        let scal = Scalarization::minimal(&bounds)?;
        // Any scalarization with constants at least the minimal ones is admissible.
        if cert.scalarization.cardinality_bonus >= scal.cardinality_bonus
            && cert.scalarization.weight_scale
                > i128::from(bounds.bidders) * (cert.scalarization.cardinality_bonus + i128::from(bounds.max_priority))
        {
            let top = cert.scalarization.max_combined(&bounds).ok_or(EngineError::Overflow)?;
            let relaxed = ScalarBounds { bidders: u64::MAX, priority_sum: u128::MAX, ..bounds };
            let restored = if top <= i128::from(i64::MAX / 4) {
                Auction::<i64>::restore(&uap, &matching, cert, relaxed).map(Width::Narrow)
            } else if top <= i128::MAX / 4 {
                Auction::<i128>::restore(&uap, &matching, cert, relaxed).map(Width::Wide)
            } else {
                None
            };
            if let Some(inner) = restored {
                let mut engine = AssignmentEngine { inner, bidders: uap.bidders.clone(), num_items: uap.num_items };
                engine.insert_unchecked(b)?;
                return Ok((next, engine.matching()));
            }
        }
    }
    let m = build_engine(&next)?.matching();
    Ok((next, m))
}

/// Number of matched bidders with the given priority in a greedy MWM.
pub fn greedy_count(uap: &Uap, priority: u64) -> usize {
    let m = greedy_mwm(uap);
    m.edges.iter().filter(|(b, _)| uap.bidder(*b).map(|x| x.priority) == Some(priority)).count()
}

/// True when `m`'s potentials certify it as a maximum-weight matching of
/// `uap` under the certificate's scalarization.
pub fn certificate_holds(uap: &Uap, m: &UapMatching) -> bool {
    let Some(cert) = &m.potentials else { return false };
    if cert.item.len() != uap.num_items || cert.item.iter().any(|&p| p < 0) {
        return false;
    }
    let mut item_used = vec![false; uap.num_items];
    for &(b, v) in &m.edges {
        if v >= uap.num_items || std::mem::replace(&mut item_used[v], true) {
            return false;
        }
        if uap.weight(b, v).is_none() {
            return false;
        }
    }
    for (v, &used) in item_used.iter().enumerate() {
        if !used && cert.item[v] != 0 {
            return false;
        }
    }
    for b in &uap.bidders {
        let Some(&y) = cert.bidder.get(&b.id) else { return false };
        if y < 0 {
            return false;
        }
        let mate = m.item_of(b.id);
        if mate.is_none() && y != 0 {
            return false;
        }
        for (&v, &w) in &b.bid {
            let Some(c) = cert.scalarization.combine(w, b.priority) else { return false };
            let total = y + cert.item[v];
            if total < c || (mate == Some(v) && total != c) {
                return false;
            }
        }
    }
    true
}

/// Vertex cap for exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// Every matching of `uap` (no edge-weight filtering).
pub fn all_matchings(uap: &Uap) -> Vec<Vec<(BidderId, ItemId)>> {
    fn rec(
        uap: &Uap,
        k: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(BidderId, ItemId)>,
        out: &mut Vec<Vec<(BidderId, ItemId)>>,
    ) {
        if k == uap.bidders.len() {
            let mut m = cur.clone();
            m.sort_unstable();
            out.push(m);
            return;
        }
        rec(uap, k + 1, used, cur, out);
        let b = &uap.bidders[k];
        for &v in b.bid.keys() {
            if !used[v] {
                used[v] = true;
                cur.push((b.id, v));
                rec(uap, k + 1, used, cur, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(uap, 0, &mut vec![false; uap.num_items], &mut Vec::new(), &mut out);
    out
}

/// All greedy MWMs by exhaustive enumeration, ranked by [`MatchingScore`].
pub fn all_greedy_mwms(uap: &Uap) -> Result<Vec<UapMatching>, EngineError> {
    let vertices = uap.bidders.len() + uap.num_items;
    if vertices > ENUMERATION_LIMIT {
        return Err(EngineError::SizeLimit { vertices, limit: ENUMERATION_LIMIT });
    }
    let mut best: Option<MatchingScore> = None;
    let mut out = Vec::new();
    for edges in all_matchings(uap) {
        let m = UapMatching { edges, potentials: None };
        let s = m.score(uap);
        match best {
            Some(b) if s < b => {}
            Some(b) if s == b => out.push(m),
            _ => {
                best = Some(s);
                out.clear();
                out.push(m);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tied_first_tiers() -> Uap {
        Uap::new(2, vec![Bidder::new(1, 2, [(0, 2), (1, 2)]), Bidder::new(2, 1, [(0, 2)])]).unwrap()
    }

    #[test]
    fn minimal_constants() {
        let uap = Uap::new(1, vec![Bidder::new(1, 1, [(0, 5)]), Bidder::new(2, 2, [(0, 3)])]).unwrap();
        let (s, w) = scalarize(&uap).unwrap();
        assert_eq!(s, Scalarization { weight_scale: 13, cardinality_bonus: 4 });
        assert_eq!(w[&(1, 0)], 5 * 13 + 4 + 1);
        assert_eq!(w[&(2, 0)], 3 * 13 + 4 + 2);
    }

    #[test]
    fn scalarization_preserves_lexicographic_order() {
        let uap = Uap::new(2, vec![Bidder::new(1, 1, [(0, 5), (1, 4)]), Bidder::new(2, 2, [(0, 5), (1, 0)])]).unwrap();
        let (_, w) = scalarize(&uap).unwrap();
        let all = all_matchings(&uap);
        for x in &all {
            for y in &all {
                let mx = UapMatching { edges: x.clone(), potentials: None };
                let my = UapMatching { edges: y.clone(), potentials: None };
                let wx: i128 = x.iter().map(|e| w[e]).sum();
                let wy: i128 = y.iter().map(|e| w[e]).sum();
                assert_eq!(mx.score(&uap).cmp(&my.score(&uap)), wx.cmp(&wy), "{x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn empty_uap() {
        let uap = Uap::empty(3);
        assert!(scalarize(&uap).unwrap().1.is_empty());
        let m = greedy_mwm(&uap);
        assert!(m.edges.is_empty());
        assert!(certificate_holds(&uap, &m));
        assert_eq!(greedy_count(&uap, 1), 0);
        assert_eq!(all_greedy_mwms(&uap).unwrap(), vec![UapMatching { edges: vec![], potentials: None }]);
    }

    #[test]
    fn zero_weight_edge_still_matched() {
        let uap = Uap::new(1, vec![Bidder::new(7, 1, [(0, 0)])]).unwrap();
        let (s, w) = scalarize(&uap).unwrap();
        assert_eq!(w[&(7, 0)], s.cardinality_bonus + 1);
        assert_eq!(greedy_mwm(&uap).edges, vec![(7, 0)]);
    }

    #[test]
    fn priority_breaks_weight_tie() {
        let uap = Uap::new(1, vec![Bidder::new(1, 1, [(0, 5)]), Bidder::new(2, 2, [(0, 5)])]).unwrap();
        let m = greedy_mwm(&uap);
        assert_eq!(m.edges, vec![(2, 0)]);
        assert!(certificate_holds(&uap, &m));
        let all = all_greedy_mwms(&uap).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].edges, m.edges);
    }

    #[test]
    fn tied_first_tier_auction() {
        let uap = tied_first_tiers();
        let m = greedy_mwm(&uap);
        assert_eq!(m.edges, vec![(1, 1), (2, 0)]);
        assert_eq!(m.score(&uap).weight, 4);
        assert!(certificate_holds(&uap, &m));
        assert_eq!(all_matchings(&uap).len(), 5);
        assert_eq!(greedy_count(&uap, 2), 1);
    }

    #[test]
    fn symmetric_items_give_two_greedy_mwms() {
        let uap = Uap::new(2, vec![Bidder::new(1, 1, [(0, 3), (1, 3)])]).unwrap();
        let all = all_greedy_mwms(&uap).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].priority_multiset(&uap), all[1].priority_multiset(&uap));
    }

    #[test]
    fn enumeration_size_limit() {
        let bidders = (0..7).map(|k| Bidder::new(k, 1, [(0, 1)])).collect();
        let uap = Uap::new(6, bidders).unwrap();
        assert!(matches!(all_greedy_mwms(&uap), Err(EngineError::SizeLimit { vertices: 13, .. })));
    }

    #[test]
    fn invalid_bidders_rejected() {
        assert_eq!(Uap::new(1, vec![Bidder::new(1, 0, [(0, 1)])]), Err(EngineError::ZeroPriority(1)));
        assert_eq!(Uap::new(1, vec![Bidder::new(1, 1, [(3, 1)])]), Err(EngineError::UnknownItem { bidder: 1, item: 3 }));
        assert_eq!(
            Uap::new(1, vec![Bidder::new(1, 1, [(0, 1)]), Bidder::new(1, 2, [])]),
            Err(EngineError::DuplicateBidder(1))
        );
    }

    #[test]
    fn add_losing_bidder_leaves_matching() {
        let uap = Uap::new(1, vec![Bidder::new(1, 2, [(0, 5)])]).unwrap();
        let m = greedy_mwm(&uap);
        let (uap2, m2) = add_bidder(uap, m.clone(), Bidder::new(2, 1, [(0, 5)])).unwrap();
        assert_eq!(m2.edges, m.edges);
        assert!(certificate_holds(&uap2, &m2));
    }

    #[test]
    fn add_higher_priority_bidder_displaces() {
        let uap = Uap::new(1, vec![Bidder::new(1, 1, [(0, 5)])]).unwrap();
        let m = greedy_mwm(&uap);
        let (uap2, m2) = add_bidder(uap, m, Bidder::new(2, 2, [(0, 5)])).unwrap();
        assert_eq!(m2.edges, vec![(2, 0)]);
        assert_eq!(m2.score(&uap2), greedy_mwm(&uap2).score(&uap2));
        assert!(certificate_holds(&uap2, &m2));
    }

    #[test]
    fn add_bidder_on_fresh_item() {
        let uap = Uap::new(2, vec![Bidder::new(1, 1, [(0, 5)])]).unwrap();
        let m = greedy_mwm(&uap);
        let (uap2, m2) = add_bidder(uap, m, Bidder::new(2, 2, [(1, 0)])).unwrap();
        assert_eq!(m2.edges, vec![(1, 0), (2, 1)]);
        assert!(certificate_holds(&uap2, &m2));
    }

    #[test]
    fn engine_grows_bounds_on_demand() {
        let mut engine = AssignmentEngine::with_bounds(2, ScalarBounds { bidders: 1, priority_sum: 1, max_priority: 1, max_abs_weight: 1 }).unwrap();
        engine.insert(Bidder::new(1, 1, [(0, 1)])).unwrap();
        let out = engine.insert(Bidder::new(2, 3, [(0, 9), (1, 1)])).unwrap();
        assert!(out.matched);
        let uap = engine.uap();
        let m = engine.matching();
        assert!(certificate_holds(&uap, &m));
        assert_eq!(m.score(&uap), all_greedy_mwms(&uap).unwrap()[0].score(&uap));
    }

    #[test]
    fn wide_promotion() {
        let big = i64::MAX / 8;
        let uap = Uap::new(2, vec![Bidder::new(1, 1, [(0, big), (1, 1)]), Bidder::new(2, 2, [(0, big)])]).unwrap();
        let engine = build_engine(&uap).unwrap();
        assert!(engine.is_wide());
        let m = engine.matching();
        assert!(certificate_holds(&uap, &m));
        assert_eq!(m.edges, vec![(1, 1), (2, 0)]);
    }

    #[test]
    fn negative_edges_never_used() {
        let uap = Uap::new(1, vec![Bidder::new(1, 1, [(0, -1)])]).unwrap();
        let m = greedy_mwm(&uap);
        assert!(m.edges.is_empty());
        assert!(certificate_holds(&uap, &m));
    }
}
