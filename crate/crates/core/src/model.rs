//! Stable-marriage instances with weak (tied) preferences and incomplete lists.
//!
//! Every agent ranks the opposite side together with the distinguished
//! [`Entry::Unmatched`] position as an ordered list of tie-groups. Opposite-side
//! agents that do not appear in the list are unacceptable: they sit in an
//! implicit bottom tier, strictly below every listed tier and below the
//! unmatched position.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Token that stands for "being unmatched" inside an instance document.
pub const UNMATCHED_TOKEN: &str = "@unmatched";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Man,
    Woman,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Man => Side::Woman,
            Side::Woman => Side::Man,
        }
    }
}

/// An agent on one side of the market, identified by its input position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl AgentId {
    pub fn man(index: usize) -> Self {
        AgentId { side: Side::Man, index }
    }

    pub fn woman(index: usize) -> Self {
        AgentId { side: Side::Woman, index }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Man => write!(f, "man#{}", self.index),
            Side::Woman => write!(f, "woman#{}", self.index),
        }
    }
}

/// One position in a preference list: an opposite-side agent or being unmatched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entry {
    Agent(usize),
    Unmatched,
}

impl Entry {
    pub fn agent(self) -> Option<usize> {
        match self {
            Entry::Agent(k) => Some(k),
            Entry::Unmatched => None,
        }
    }
}

impl From<Option<usize>> for Entry {
    fn from(partner: Option<usize>) -> Self {
        partner.map_or(Entry::Unmatched, Entry::Agent)
    }
}

/// A weak order given as tie-groups in strictly decreasing preference.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferenceOrder {
    tiers: Vec<Vec<Entry>>,
}

impl PreferenceOrder {
    /// Wraps raw tiers without checking them; see [`validate`].
    pub fn new(tiers: Vec<Vec<Entry>>) -> Self {
        PreferenceOrder { tiers }
    }

    /// Strict order over the given agents followed by the unmatched position.
    pub fn strict(agents: &[usize]) -> Self {
        let mut tiers: Vec<Vec<Entry>> = agents.iter().map(|&k| vec![Entry::Agent(k)]).collect();
        tiers.push(vec![Entry::Unmatched]);
        PreferenceOrder { tiers }
    }

    pub fn tiers(&self) -> &[Vec<Entry>] {
        &self.tiers
    }

    pub fn unmatched_tier(&self) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(&Entry::Unmatched))
    }

    /// Appends an explicit unmatched tier when the token is absent.
    /// An empty list becomes the single tier `[Unmatched]`.
    pub fn normalized(mut self) -> Self {
        if self.unmatched_tier().is_none() {
            self.tiers.push(vec![Entry::Unmatched]);
        }
        self
    }

    /// Tier index of an entry (0 is best). Unlisted agents share the bottom tier.
    pub fn rank(&self, entry: Entry) -> usize {
        if let Some(k) = self.tiers.iter().position(|t| t.contains(&entry)) {
            return k;
        }
        match entry {
            Entry::Unmatched => self.tiers.len(),
            Entry::Agent(_) => self.tiers.len() + usize::from(self.unmatched_tier().is_none()),
        }
    }

    /// Tier index for every opposite agent `0..opposite`, followed by the
    /// unmatched position at index `opposite`.
    pub fn rank_table(&self, opposite: usize) -> Vec<u32> {
        let unmatched = self.unmatched_tier();
        let bottom = self.tiers.len() + usize::from(unmatched.is_none());
        let mut table = vec![bottom as u32; opposite + 1];
        table[opposite] = unmatched.unwrap_or(self.tiers.len()) as u32;
        for (k, tier) in self.tiers.iter().enumerate() {
            for entry in tier {
                if let Entry::Agent(a) = *entry {
                    if a < opposite {
                        table[a] = k as u32;
                    }
                }
            }
        }
        table
    }

    /// Canonical form of the induced weak order over `opposite` agents plus
    /// unmatched: two orders induce the same relation iff their keys agree.
    pub fn relation_key(&self, opposite: usize) -> Vec<u32> {
        let table = self.rank_table(opposite);
        let mut levels: Vec<u32> = table.clone();
        levels.sort_unstable();
        levels.dedup();
        table
            .iter()
            .map(|r| levels.binary_search(r).expect("rank present") as u32)
            .collect()
    }

    /// Builds an order from a rank table (as produced by [`rank_table`]),
    /// listing every agent explicitly.
    ///
    /// [`rank_table`]: PreferenceOrder::rank_table
    pub fn from_rank_table(table: &[u32]) -> Self {
        let opposite = table.len() - 1;
        let mut levels: Vec<u32> = table.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let tiers = levels
            .iter()
            .map(|&lvl| {
                let mut tier: Vec<Entry> = (0..opposite).filter(|&k| table[k] == lvl).map(Entry::Agent).collect();
                if table[opposite] == lvl {
                    tier.push(Entry::Unmatched);
                }
                tier
            })
            .collect();
        PreferenceOrder { tiers }
    }
}

/// A rule broken by raw preference data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    EmptyTier { agent: AgentId, tier: usize },
    UnknownAgent { agent: AgentId, entry: usize },
    DuplicateEntry { agent: AgentId, entry: Entry },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTier { agent, tier } => write!(f, "{agent}: tier {tier} is empty"),
            Violation::UnknownAgent { agent, entry } => {
                write!(f, "{agent}: references nonexistent opposite agent {entry}")
            }
            Violation::DuplicateEntry { agent, entry } => write!(f, "{agent}: {entry:?} listed twice"),
        }
    }
}

/// Checks raw preference lists; an empty result means they form a valid instance.
pub fn validate(men: &[PreferenceOrder], women: &[PreferenceOrder]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, pref) in men.iter().enumerate() {
        validate_order(AgentId::man(index), pref, women.len(), &mut out);
    }
    for (index, pref) in women.iter().enumerate() {
        validate_order(AgentId::woman(index), pref, men.len(), &mut out);
    }
    out
}

fn validate_order(agent: AgentId, pref: &PreferenceOrder, opposite: usize, out: &mut Vec<Violation>) {
    let mut seen = std::collections::HashSet::new();
    for (t, tier) in pref.tiers.iter().enumerate() {
        if tier.is_empty() {
            out.push(Violation::EmptyTier { agent, tier: t });
        }
        for &entry in tier {
            if let Entry::Agent(k) = entry {
                if k >= opposite {
                    out.push(Violation::UnknownAgent { agent, entry: k });
                    continue;
                }
            }
            if !seen.insert(entry) {
                out.push(Violation::DuplicateEntry { agent, entry });
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("{agent} lists `{entry}` more than once")]
    DuplicateEntry { agent: String, entry: String },
    #[error("{agent} references unknown agent `{name}`")]
    UnknownAgent { agent: String, name: String },
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("invalid preferences: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("college `{0}` must have capacity at least 1")]
    ZeroCapacity(String),
}

/// A validated stable-marriage market.
///
/// Preference lists are stored normalized (explicit unmatched tier, no empty
/// lists) together with precomputed rank tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    men: Vec<PreferenceOrder>,
    women: Vec<PreferenceOrder>,
    man_labels: Vec<String>,
    woman_labels: Vec<String>,
    man_ranks: Vec<Vec<u32>>,
    woman_ranks: Vec<Vec<u32>>,
}

impl Instance {
    /// Validates and normalizes the lists; agents are labelled `m1..`, `w1..`.
    pub fn new(men: Vec<PreferenceOrder>, women: Vec<PreferenceOrder>) -> Result<Self, ModelError> {
        let man_labels = (1..=men.len()).map(|k| format!("m{k}")).collect();
        let woman_labels = (1..=women.len()).map(|k| format!("w{k}")).collect();
        Self::with_labels(men, women, man_labels, woman_labels)
    }

    pub fn with_labels(
        men: Vec<PreferenceOrder>,
        women: Vec<PreferenceOrder>,
        man_labels: Vec<String>,
        woman_labels: Vec<String>,
    ) -> Result<Self, ModelError> {
        if man_labels.len() != men.len() || woman_labels.len() != women.len() {
            return Err(ModelError::MalformedDocument("label count does not match agent count".into()));
        }
        let violations = validate(&men, &women);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let men: Vec<_> = men.into_iter().map(PreferenceOrder::normalized).collect();
        let women: Vec<_> = women.into_iter().map(PreferenceOrder::normalized).collect();
        let man_ranks = men.iter().map(|p| p.rank_table(women.len())).collect();
        let woman_ranks = women.iter().map(|p| p.rank_table(men.len())).collect();
        Ok(Instance { men, women, man_labels, woman_labels, man_ranks, woman_ranks })
    }

    pub fn num_men(&self) -> usize {
        self.men.len()
    }

    pub fn num_women(&self) -> usize {
        self.women.len()
    }

    pub fn men(&self) -> &[PreferenceOrder] {
        &self.men
    }

    pub fn women(&self) -> &[PreferenceOrder] {
        &self.women
    }

    pub fn man_labels(&self) -> &[String] {
        &self.man_labels
    }

    pub fn woman_labels(&self) -> &[String] {
        &self.woman_labels
    }

    /// Copy of this instance with man `i` reporting `pref` instead.
    pub fn with_man_preference(&self, i: usize, pref: PreferenceOrder) -> Result<Self, ModelError> {
        let mut own = Vec::new();
        validate_order(AgentId::man(i), &pref, self.women.len(), &mut own);
        if !own.is_empty() {
            return Err(ModelError::Invalid(own));
        }
        let mut next = self.clone();
        let pref = pref.normalized();
        next.man_ranks[i] = pref.rank_table(self.women.len());
        next.men[i] = pref;
        Ok(next)
    }

    /// Tier of `partner` in man `i`'s list (0 best); `None` is unmatched.
    #[inline]
    pub fn man_rank(&self, i: usize, partner: Option<usize>) -> u32 {
        self.man_ranks[i][partner.unwrap_or(self.women.len())]
    }

    /// Tier of `partner` in woman `j`'s list (0 best); `None` is unmatched.
    #[inline]
    pub fn woman_rank(&self, j: usize, partner: Option<usize>) -> u32 {
        self.woman_ranks[j][partner.unwrap_or(self.men.len())]
    }

    pub fn man_rank_table(&self, i: usize) -> &[u32] {
        &self.man_ranks[i]
    }

    pub fn woman_rank_table(&self, j: usize) -> &[u32] {
        &self.woman_ranks[j]
    }

    /// `x ⪰_i y` for man `i`.
    #[inline]
    pub fn man_weakly_prefers(&self, i: usize, x: Option<usize>, y: Option<usize>) -> bool {
        self.man_rank(i, x) <= self.man_rank(i, y)
    }

    /// `x ⪰_j y` for woman `j`.
    #[inline]
    pub fn woman_weakly_prefers(&self, j: usize, x: Option<usize>, y: Option<usize>) -> bool {
        self.woman_rank(j, x) <= self.woman_rank(j, y)
    }

    pub fn man_acceptable(&self, i: usize, j: usize) -> bool {
        self.man_weakly_prefers(i, Some(j), None)
    }

    pub fn woman_acceptable(&self, j: usize, i: usize) -> bool {
        self.woman_weakly_prefers(j, Some(i), None)
    }

    /// True when no agent has two opposite-side agents (or an agent and the
    /// unmatched position) in one tie-group.
    pub fn is_strict(&self) -> bool {
        self.men.iter().chain(&self.women).all(|p| p.tiers.iter().all(|t| t.len() == 1))
    }

    /// Renders the instance as an instance document.
    pub fn to_document(&self) -> Value {
        fn side(prefs: &[PreferenceOrder], labels: &[String], other: &[String]) -> Value {
            let map: Map<String, Value> =
                prefs.iter().zip(labels).map(|(pref, label)| (label.clone(), order_to_value(pref, other))).collect();
            Value::Object(map)
        }
        let mut doc = Map::new();
        doc.insert("men".into(), side(&self.men, &self.man_labels, &self.woman_labels));
        doc.insert("women".into(), side(&self.women, &self.woman_labels, &self.man_labels));
        Value::Object(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("instance serializes")
    }
}

pub(crate) fn order_to_value(pref: &PreferenceOrder, other: &[String]) -> Value {
    pref.tiers
        .iter()
        .map(|tier| {
            tier.iter()
                .map(|e| match e {
                    Entry::Agent(k) => Value::String(other[*k].clone()),
                    Entry::Unmatched => Value::String(UNMATCHED_TOKEN.into()),
                })
                .collect::<Vec<_>>()
                .into()
        })
        .collect::<Vec<Value>>()
        .into()
}

/// Parses an instance document:
/// `{"men": {"<name>": [["<woman>" | "@unmatched", ...], ...]}, "women": {...}}`.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    instance_from_document(&doc)
}

pub fn instance_from_document(doc: &Value) -> Result<Instance, ModelError> {
    let obj = doc.as_object().ok_or_else(|| ModelError::MalformedDocument("top level must be an object".into()))?;
    let men = side_map(obj, "men")?;
    let women = side_map(obj, "women")?;
    let man_labels: Vec<String> = men.keys().cloned().collect();
    let woman_labels: Vec<String> = women.keys().cloned().collect();
    let men_prefs = side_preferences(men, &woman_labels)?;
    let women_prefs = side_preferences(women, &man_labels)?;
    Instance::with_labels(men_prefs, women_prefs, man_labels, woman_labels)
}

pub(crate) fn side_map<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Map<String, Value>, ModelError> {
    match obj.get(key) {
        Some(Value::Object(m)) => Ok(m),
        Some(_) => Err(ModelError::MalformedDocument(format!("`{key}` must be an object"))),
        None => Err(ModelError::MalformedDocument(format!("missing `{key}`"))),
    }
}

pub(crate) fn side_preferences(
    side: &Map<String, Value>,
    opposite_labels: &[String],
) -> Result<Vec<PreferenceOrder>, ModelError> {
    let index: HashMap<&str, usize> = opposite_labels.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    side.iter()
        .map(|(name, tiers)| parse_tiers(name, tiers, &index))
        .collect()
}

pub(crate) fn parse_tiers(name: &str, tiers: &Value, index: &HashMap<&str, usize>) -> Result<PreferenceOrder, ModelError> {
    let malformed = || ModelError::MalformedDocument(format!("preferences of `{name}` must be an array of arrays of strings"));
    let outer = tiers.as_array().ok_or_else(malformed)?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(outer.len());
    for tier in outer {
        let inner = tier.as_array().ok_or_else(malformed)?;
        if inner.is_empty() {
            return Err(ModelError::MalformedDocument(format!("`{name}` has an empty tie-group")));
        }
        let mut group = Vec::with_capacity(inner.len());
        for item in inner {
            let s = item.as_str().ok_or_else(malformed)?;
            let entry = if s == UNMATCHED_TOKEN {
                Entry::Unmatched
            } else {
                let k = index.get(s).ok_or_else(|| ModelError::UnknownAgent { agent: name.into(), name: s.into() })?;
                Entry::Agent(*k)
            };
            if !seen.insert(entry) {
                return Err(ModelError::DuplicateEntry { agent: name.into(), entry: s.into() });
            }
            group.push(entry);
        }
        out.push(group);
    }
    Ok(PreferenceOrder::new(out))
}

/// Integer utilities obtained by counting: `a[i][x]` is the number of
/// elements of `J ∪ {0}` that man `i` ranks weakly below `x`, and `b[y][j]`
/// the number of elements of `I ∪ {0}` that woman `j` ranks weakly below `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankUtilities {
    /// Row per man, columns `0..|J|` then unmatched at `|J|`.
    man: Vec<Vec<i64>>,
    /// Row per woman, columns `0..|I|` then unmatched at `|I|`.
    woman: Vec<Vec<i64>>,
}

impl RankUtilities {
    /// `a[i][partner]`.
    #[inline]
    pub fn a(&self, i: usize, partner: Option<usize>) -> i64 {
        let row = &self.man[i];
        row[partner.unwrap_or(row.len() - 1)]
    }

    /// `b[partner][j]`.
    #[inline]
    pub fn b(&self, partner: Option<usize>, j: usize) -> i64 {
        let row = &self.woman[j];
        row[partner.unwrap_or(row.len() - 1)]
    }

    pub fn man_row(&self, i: usize) -> &[i64] {
        &self.man[i]
    }

    pub fn woman_row(&self, j: usize) -> &[i64] {
        &self.woman[j]
    }
}

/// Number of entries whose tier is at or below each entry's tier.
pub(crate) fn count_utilities(ranks: &[u32]) -> Vec<i64> {
    ranks
        .iter()
        .map(|&r| ranks.iter().filter(|&&other| other >= r).count() as i64)
        .collect()
}

pub fn rank_utilities(inst: &Instance) -> RankUtilities {
    RankUtilities {
        man: inst.man_ranks.iter().map(|r| count_utilities(r)).collect(),
        woman: inst.woman_ranks.iter().map(|r| count_utilities(r)).collect(),
    }
}
