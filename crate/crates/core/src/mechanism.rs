//! The matching mechanism: each man becomes a multibidder with one bidder per
//! acceptable tier, the iterated auction is run to its fixed point, and every
//! man is matched to the woman his last revealed bidder wins.
//!
//! Many-to-one markets are handled by splitting each college into tied
//! single-capacity slots.

use std::collections::HashSet;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::assignment::Bidder;
use crate::model::{
    order_to_value, parse_tiers, rank_utilities, side_map, validate, Entry, Instance, ModelError, PreferenceOrder,
};
use crate::reveal::{Configuration, Iuap, Multibidder, RevealPolicy, RevealRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("woman {0} is matched to more than one man")]
    WomanTwice(usize),
    #[error("partner index {0} out of range")]
    OutOfRange(usize),
    #[error("expected {expected} entries, got {got}")]
    WrongSize { expected: usize, got: usize },
    #[error("college {college} admits {admitted} students but has capacity {capacity}")]
    OverCapacity { college: usize, admitted: usize, capacity: usize },
    #[error("malformed matching document: {0}")]
    Document(String),
}

/// A one-to-one matching between men and women.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    men: Vec<Option<usize>>,
    women: Vec<Option<usize>>,
}

impl Matching {
    pub fn new(num_women: usize, men: Vec<Option<usize>>) -> Result<Self, MatchingError> {
        let mut women = vec![None; num_women];
        for (i, m) in men.iter().enumerate() {
            if let Some(j) = *m {
                let slot = women.get_mut(j).ok_or(MatchingError::OutOfRange(j))?;
                if slot.is_some() {
                    return Err(MatchingError::WomanTwice(j));
                }
                *slot = Some(i);
            }
        }
        Ok(Matching { men, women })
    }

    pub fn empty(num_men: usize, num_women: usize) -> Self {
        Matching { men: vec![None; num_men], women: vec![None; num_women] }
    }

    pub fn from_pairs(num_men: usize, num_women: usize, pairs: &[(usize, usize)]) -> Result<Self, MatchingError> {
        let mut men = vec![None; num_men];
        for &(i, j) in pairs {
            *men.get_mut(i).ok_or(MatchingError::OutOfRange(i))? = Some(j);
        }
        Self::new(num_women, men)
    }

    #[inline]
    pub fn man(&self, i: usize) -> Option<usize> {
        self.men[i]
    }

    #[inline]
    pub fn woman(&self, j: usize) -> Option<usize> {
        self.women[j]
    }

    pub fn num_men(&self) -> usize {
        self.men.len()
    }

    pub fn num_women(&self) -> usize {
        self.women.len()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.men
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.men.iter().enumerate().filter_map(|(i, m)| m.map(|j| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        self.men.iter().all(Option::is_none)
    }

    /// `{"<man>": "<woman>" | null, ...}` keyed by the instance's labels.
    pub fn to_value(&self, inst: &Instance) -> Value {
        let map: Map<String, Value> = self
            .men
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let v = m.map_or(Value::Null, |j| Value::String(inst.woman_labels()[j].clone()));
                (inst.man_labels()[i].clone(), v)
            })
            .collect();
        Value::Object(map)
    }

    /// The output document `{"matching": {...}}`.
    pub fn to_document(&self, inst: &Instance) -> Value {
        let mut doc = Map::new();
        doc.insert("matching".into(), self.to_value(inst));
        Value::Object(doc)
    }

    /// Reads either a bare `{"<man>": ...}` object or a document with a
    /// `matching` field. Men that are absent are unmatched.
    pub fn from_document(inst: &Instance, doc: &Value) -> Result<Self, MatchingError> {
        let obj = doc.as_object().ok_or_else(|| MatchingError::Document("expected an object".into()))?;
        let obj = match obj.get("matching") {
            Some(Value::Object(inner)) => inner,
            _ => obj,
        };
        let mut men = vec![None; inst.num_men()];
        for (name, v) in obj {
            let i = inst
                .man_labels()
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| MatchingError::Document(format!("unknown man `{name}`")))?;
            men[i] = match v {
                Value::Null => None,
                Value::String(w) => Some(
                    inst.woman_labels()
                        .iter()
                        .position(|l| l == w)
                        .ok_or_else(|| MatchingError::Document(format!("unknown woman `{w}`")))?,
                ),
                _ => return Err(MatchingError::Document(format!("partner of `{name}` must be a string or null"))),
            };
        }
        Self::new(inst.num_women(), men)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("priorities must be a permutation of 1..={0}")]
pub struct PriorityError(pub usize);

/// Distinct priorities `1..=|I|`, one per man.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityAssignment {
    pi: Vec<u64>,
}

impl PriorityAssignment {
    pub fn from_permutation(pi: Vec<u64>) -> Result<Self, PriorityError> {
        let n = pi.len();
        let distinct: HashSet<u64> = pi.iter().copied().collect();
        if distinct.len() != n || pi.iter().any(|&p| p == 0 || p > n as u64) {
            return Err(PriorityError(n));
        }
        Ok(PriorityAssignment { pi })
    }

    /// Parses a comma-separated list such as `2,1,3`.
    pub fn parse(text: &str, num_men: usize) -> Result<Self, PriorityError> {
        let pi: Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse::<u64>()).collect();
        match pi {
            Ok(pi) if pi.len() == num_men => Self::from_permutation(pi),
            _ => Err(PriorityError(num_men)),
        }
    }

    pub fn get(&self, i: usize) -> u64 {
        self.pi[i]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.pi
    }
}

/// The first man in input order gets priority `|I|`, the last gets 1.
pub fn assign_priorities(inst: &Instance) -> PriorityAssignment {
    let n = inst.num_men() as u64;
    PriorityAssignment { pi: (0..n).map(|k| n - k).collect() }
}

/// Items `0..|J|` are the women and item `|J| + i` is man `i`'s dummy.
/// Multibidder `i` is man `i`; his `k`-th bidder bids on his `k`-th tier.
pub fn build_iuap(inst: &Instance, pr: &PriorityAssignment) -> Iuap {
    let nw = inst.num_women();
    let util = rank_utilities(inst);
    let mut next_id = 0u64;
    let mut multibidders = Vec::with_capacity(inst.num_men());
    for (i, pref) in inst.men().iter().enumerate() {
        let priority = pr.get(i);
        let cutoff = pref.unmatched_tier().expect("normalized lists contain the unmatched position");
        let mut bidders = Vec::with_capacity(cutoff + 1);
        for tier in &pref.tiers()[..=cutoff] {
            let bid = tier.iter().map(|e| match *e {
                Entry::Agent(j) => (j, util.b(Some(i), j) - util.b(None, j)),
                Entry::Unmatched => (nw + i, 0),
            });
            bidders.push(Bidder::new(next_id, priority, bid));
            next_id += 1;
        }
        multibidders.push(Multibidder::new(priority, bidders).expect("ids are fresh"));
    }
    Iuap::new(nw + inst.num_men(), multibidders).expect("priorities form a permutation")
}

fn extract(inst: &Instance, c: &Configuration) -> Matching {
    let nw = inst.num_women();
    let men = (0..inst.num_men()).map(|i| c.last_mate(i).filter(|&item| item < nw)).collect();
    Matching::new(nw, men).expect("a matching of the auction is injective")
}

/// Runs the mechanism with the default priorities.
pub fn solve(inst: &Instance) -> Matching {
    solve_with(inst, &assign_priorities(inst))
}

pub fn solve_with(inst: &Instance, pr: &PriorityAssignment) -> Matching {
    solve_traced(inst, pr, RevealPolicy::Fifo).0
}

/// Runs the mechanism and also returns every reveal step.
pub fn solve_traced(inst: &Instance, pr: &PriorityAssignment, policy: RevealPolicy) -> (Matching, Vec<RevealRecord>) {
    let iuap = build_iuap(inst, pr);
    let mut c = Configuration::initial(&iuap).expect("scalarized weights fit in 128 bits");
    let trace = c.run(policy).expect("revealed bidders are valid");
    (extract(inst, &c), trace)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct College {
    pub preference: PreferenceOrder,
    pub capacity: usize,
}

/// A many-to-one market: students on one side, capacitated colleges on the other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollegeInstance {
    students: Vec<PreferenceOrder>,
    colleges: Vec<College>,
    student_labels: Vec<String>,
    college_labels: Vec<String>,
}

impl CollegeInstance {
    /// Students are labelled `s1..`, colleges `c1..`.
    pub fn new(students: Vec<PreferenceOrder>, colleges: Vec<College>) -> Result<Self, ModelError> {
        let student_labels = (1..=students.len()).map(|k| format!("s{k}")).collect();
        let college_labels = (1..=colleges.len()).map(|k| format!("c{k}")).collect();
        Self::with_labels(students, colleges, student_labels, college_labels)
    }

    pub fn with_labels(
        students: Vec<PreferenceOrder>,
        colleges: Vec<College>,
        student_labels: Vec<String>,
        college_labels: Vec<String>,
    ) -> Result<Self, ModelError> {
        if student_labels.len() != students.len() || college_labels.len() != colleges.len() {
            return Err(ModelError::MalformedDocument("label count does not match agent count".into()));
        }
        if let Some(k) = colleges.iter().position(|c| c.capacity == 0) {
            return Err(ModelError::ZeroCapacity(college_labels[k].clone()));
        }
        let college_prefs: Vec<_> = colleges.iter().map(|c| c.preference.clone()).collect();
        let violations = validate(&students, &college_prefs);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let students = students.into_iter().map(PreferenceOrder::normalized).collect();
        let colleges = colleges
            .into_iter()
            .map(|c| College { preference: c.preference.normalized(), capacity: c.capacity })
            .collect();
        Ok(CollegeInstance { students, colleges, student_labels, college_labels })
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn num_colleges(&self) -> usize {
        self.colleges.len()
    }

    pub fn students(&self) -> &[PreferenceOrder] {
        &self.students
    }

    pub fn colleges(&self) -> &[College] {
        &self.colleges
    }

    pub fn student_labels(&self) -> &[String] {
        &self.student_labels
    }

    pub fn college_labels(&self) -> &[String] {
        &self.college_labels
    }

    /// `{"students": {"<s>": [[...]]}, "colleges": {"<c>": {"capacity": n, "preferences": [[...]]}}}`
    pub fn to_document(&self) -> Value {
        let students: Map<String, Value> = self
            .students
            .iter()
            .zip(&self.student_labels)
            .map(|(p, l)| (l.clone(), order_to_value(p, &self.college_labels)))
            .collect();
        let colleges: Map<String, Value> = self
            .colleges
            .iter()
            .zip(&self.college_labels)
            .map(|(c, l)| {
                let mut obj = Map::new();
                obj.insert("capacity".into(), Value::from(c.capacity));
                obj.insert("preferences".into(), order_to_value(&c.preference, &self.student_labels));
                (l.clone(), Value::Object(obj))
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("students".into(), Value::Object(students));
        doc.insert("colleges".into(), Value::Object(colleges));
        Value::Object(doc)
    }
}

pub fn parse_college_instance(text: &str) -> Result<CollegeInstance, ModelError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    college_instance_from_document(&doc)
}

pub fn college_instance_from_document(doc: &Value) -> Result<CollegeInstance, ModelError> {
    let obj = doc.as_object().ok_or_else(|| ModelError::MalformedDocument("top level must be an object".into()))?;
    let students = side_map(obj, "students")?;
    let colleges = side_map(obj, "colleges")?;
    let student_labels: Vec<String> = students.keys().cloned().collect();
    let college_labels: Vec<String> = colleges.keys().cloned().collect();
    let college_index = college_labels.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let student_index = student_labels.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let student_prefs = students
        .iter()
        .map(|(name, tiers)| parse_tiers(name, tiers, &college_index))
        .collect::<Result<Vec<_>, _>>()?;
    let mut college_list = Vec::with_capacity(colleges.len());
    for (name, v) in colleges {
        let bad = || ModelError::MalformedDocument(format!("college `{name}` needs `capacity` and `preferences`"));
        let entry = v.as_object().ok_or_else(bad)?;
        let capacity = entry.get("capacity").and_then(Value::as_u64).ok_or_else(bad)? as usize;
        let preference = parse_tiers(name, entry.get("preferences").ok_or_else(bad)?, &student_index)?;
        college_list.push(College { preference, capacity });
    }
    CollegeInstance::with_labels(student_prefs, college_list, student_labels, college_labels)
}

/// Correspondence between the slots of an expanded instance and colleges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotMap {
    slot_college: Vec<usize>,
    first_slot: Vec<usize>,
}

impl SlotMap {
    pub fn college_of(&self, slot: usize) -> usize {
        self.slot_college[slot]
    }

    pub fn slots_of(&self, college: usize) -> std::ops::Range<usize> {
        let end = self.first_slot.get(college + 1).copied().unwrap_or(self.slot_college.len());
        self.first_slot[college]..end
    }

    pub fn num_slots(&self) -> usize {
        self.slot_college.len()
    }
}

/// Replaces every college by `capacity` slots that students rank in the
/// college's tie-group and that rank students as the college does.
pub fn expand_college(ci: &CollegeInstance) -> (Instance, SlotMap) {
    let mut slot_college = Vec::new();
    let mut first_slot = Vec::with_capacity(ci.num_colleges());
    let mut slot_labels = Vec::new();
    for (j, c) in ci.colleges.iter().enumerate() {
        first_slot.push(slot_college.len());
        for k in 0..c.capacity {
            slot_college.push(j);
            slot_labels.push(if c.capacity == 1 {
                ci.college_labels[j].clone()
            } else {
                format!("{}#{}", ci.college_labels[j], k + 1)
            });
        }
    }
    let map = SlotMap { slot_college, first_slot };
    let men = ci
        .students
        .iter()
        .map(|p| {
            let tiers = p
                .tiers()
                .iter()
                .map(|tier| {
                    tier.iter()
                        .flat_map(|e| match *e {
                            Entry::Agent(j) => map.slots_of(j).map(Entry::Agent).collect::<Vec<_>>(),
                            Entry::Unmatched => vec![Entry::Unmatched],
                        })
                        .collect()
                })
                .collect();
            PreferenceOrder::new(tiers)
        })
        .collect();
    let women = map.slot_college.iter().map(|&j| ci.colleges[j].preference.clone()).collect();
    let inst = Instance::with_labels(men, women, ci.student_labels.clone(), slot_labels)
        .expect("expansion of a valid college instance is valid");
    (inst, map)
}

/// A many-to-one assignment respecting capacities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CollegeMatching {
    assignment: Vec<Option<usize>>,
}

impl CollegeMatching {
    pub fn new(ci: &CollegeInstance, assignment: Vec<Option<usize>>) -> Result<Self, MatchingError> {
        if assignment.len() != ci.num_students() {
            return Err(MatchingError::WrongSize { expected: ci.num_students(), got: assignment.len() });
        }
        let mut load = vec![0usize; ci.num_colleges()];
        for &j in assignment.iter().flatten() {
            *load.get_mut(j).ok_or(MatchingError::OutOfRange(j))? += 1;
        }
        for (j, c) in ci.colleges.iter().enumerate() {
            if load[j] > c.capacity {
                return Err(MatchingError::OverCapacity { college: j, admitted: load[j], capacity: c.capacity });
            }
        }
        Ok(CollegeMatching { assignment })
    }

    pub fn student(&self, i: usize) -> Option<usize> {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Students admitted by college `j`, in index order.
    pub fn admitted(&self, j: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == Some(j)).collect()
    }

    /// `{"matching": {"<student>": "<college>" | null}, "admitted": {"<college>": [...]}}`
    pub fn to_document(&self, ci: &CollegeInstance) -> Value {
        let matching: Map<String, Value> = self
            .assignment
            .iter()
            .enumerate()
            .map(|(i, a)| {
                (ci.student_labels[i].clone(), a.map_or(Value::Null, |j| Value::String(ci.college_labels[j].clone())))
            })
            .collect();
        let admitted: Map<String, Value> = (0..ci.num_colleges())
            .map(|j| {
                let names = self.admitted(j).into_iter().map(|i| Value::String(ci.student_labels[i].clone())).collect();
                (ci.college_labels[j].clone(), Value::Array(names))
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("matching".into(), Value::Object(matching));
        doc.insert("admitted".into(), Value::Object(admitted));
        Value::Object(doc)
    }
}

pub fn project(map: &SlotMap, m: &Matching) -> Vec<Option<usize>> {
    m.assignment().iter().map(|s| s.map(|slot| map.college_of(slot))).collect()
}

pub fn solve_college(ci: &CollegeInstance) -> CollegeMatching {
    let (inst, map) = expand_college(ci);
    let m = solve(&inst);
    CollegeMatching::new(ci, project(&map, &m)).expect("slots never exceed capacity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;

    fn tied() -> Instance {
        parse_instance(
            r#"{"men": {"m1": [["w1","w2"]], "m2": [["w1"],["w2"]]},
                "women": {"w1": [["m1","m2"]], "w2": [["m1"],["m2"]]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn priorities_follow_input_order() {
        let pr = assign_priorities(&tied());
        assert_eq!(pr.as_slice(), &[2, 1]);
        assert!(PriorityAssignment::from_permutation(vec![1, 1]).is_err());
        assert!(PriorityAssignment::from_permutation(vec![0, 1]).is_err());
        assert!(PriorityAssignment::parse("1,3", 2).is_err());
        assert_eq!(PriorityAssignment::parse("1, 2", 2).unwrap().as_slice(), &[1, 2]);
    }

    #[test]
    fn tied_iuap_weights() {
        let inst = tied();
        let iuap = build_iuap(&inst, &assign_priorities(&inst));
        let bids: Vec<Vec<Vec<(usize, i64)>>> = iuap
            .multibidders()
            .iter()
            .map(|t| t.bidders().iter().map(|b| b.bid.iter().map(|(&k, &w)| (k, w)).collect()).collect())
            .collect();
        assert_eq!(bids[0], vec![vec![(0, 2), (1, 2)], vec![(2, 0)]]);
        assert_eq!(bids[1], vec![vec![(0, 2)], vec![(1, 1)], vec![(3, 0)]]);
    }

    #[test]
    fn tied_solution() {
        let inst = tied();
        let m = solve(&inst);
        assert_eq!(m.assignment(), &[Some(1), Some(0)]);
        assert_eq!(m.to_document(&inst), serde_json::json!({"matching": {"m1": "w2", "m2": "w1"}}));
    }

    #[test]
    fn everyone_unacceptable() {
        let inst = parse_instance(r#"{"men": {"m1": [], "m2": []}, "women": {"w1": [], "w2": []}}"#).unwrap();
        assert!(solve(&inst).is_empty());
    }

    #[test]
    fn matching_document_round_trip() {
        let inst = tied();
        let m = Matching::from_pairs(2, 2, &[(0, 0)]).unwrap();
        let back = Matching::from_document(&inst, &m.to_document(&inst)).unwrap();
        assert_eq!(back, m);
        assert_eq!(Matching::from_pairs(2, 2, &[(0, 0), (1, 0)]), Err(MatchingError::WomanTwice(0)));
    }

    fn one_college(cap: usize, accept: bool) -> CollegeInstance {
        let s = if accept { PreferenceOrder::strict(&[0]) } else { PreferenceOrder::new(vec![]) };
        CollegeInstance::new(vec![s.clone(), s], vec![College { preference: PreferenceOrder::strict(&[0, 1]), capacity: cap }])
            .unwrap()
    }

    #[test]
    fn college_expansion_ties_slots() {
        let (inst, map) = expand_college(&one_college(2, true));
        assert_eq!(inst.num_women(), 2);
        assert_eq!(inst.men()[0].tiers()[0], vec![Entry::Agent(0), Entry::Agent(1)]);
        assert_eq!(inst.women()[0], inst.women()[1]);
        assert_eq!(map.slots_of(0), 0..2);
        assert_eq!(inst.woman_labels(), &["c1#1".to_string(), "c1#2".to_string()]);
    }

    #[test]
    fn college_admits_both() {
        let ci = one_college(2, true);
        let m = solve_college(&ci);
        assert_eq!(m.assignment(), &[Some(0), Some(0)]);
        assert_eq!(m.admitted(0), vec![0, 1]);
        let m = solve_college(&one_college(2, false));
        assert_eq!(m.assignment(), &[None, None]);
    }

    #[test]
    fn capacity_checked() {
        let ci = one_college(1, true);
        assert!(matches!(CollegeMatching::new(&ci, vec![Some(0), Some(0)]), Err(MatchingError::OverCapacity { .. })));
        assert!(CollegeInstance::new(vec![], vec![College { preference: PreferenceOrder::new(vec![]), capacity: 0 }]).is_err());
    }

    #[test]
    fn college_document_round_trip() {
        let ci = one_college(2, true);
        let back = college_instance_from_document(&ci.to_document()).unwrap();
        assert_eq!(back, ci);
    }
}
