//! Brute-force checks of stability, Pareto-stability and strategyproofness.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::mechanism::{CollegeInstance, CollegeMatching, Matching};
use crate::model::{order_to_value, Instance, PreferenceOrder, Side};

/// Largest `|I| + |J|` for which matchings are enumerated.
pub const PARETO_LIMIT: usize = 12;
/// Largest number of students (and of students plus colleges) handled by the
/// group-preference closure.
pub const COLLEGE_LIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("instance has {agents} agents, brute force is limited to {limit}")]
    SizeLimit { agents: usize, limit: usize },
    #[error("coalition size must be 1 or 2, got {0}")]
    Coalition(usize),
    #[error("student sets exceed the capacity {0}")]
    OverCapacity(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    IR,
    WeakStability,
    ParetoStability,
    Strategyproofness,
    CollegeParetoStability,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// An agent matched to a partner it ranks below being unmatched.
    Unacceptable { side: Side, agent: String, partner: String },
    BlockingPair { man: String, woman: String },
    /// A matching that Pareto-dominates the audited one.
    Dominated { by: BTreeMap<String, Option<String>> },
    Misreport {
        coalition: Vec<String>,
        reports: BTreeMap<String, Value>,
        truthful: BTreeMap<String, Option<String>>,
        misreported: BTreeMap<String, Option<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub property: Property,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
    pub profiles_checked: u64,
    pub seed: Option<u64>,
}

impl AuditReport {
    fn new(property: Property, witnesses: Vec<Witness>, profiles_checked: u64, seed: Option<u64>) -> Self {
        AuditReport { property, passed: witnesses.is_empty(), witnesses, profiles_checked, seed }
    }
}

fn label(labels: &[String], k: Option<usize>) -> Option<String> {
    k.map(|k| labels[k].clone())
}

fn labelled(inst: &Instance, m: &Matching) -> BTreeMap<String, Option<String>> {
    (0..inst.num_men()).map(|i| (inst.man_labels()[i].clone(), label(inst.woman_labels(), m.man(i)))).collect()
}

/// Pairs `(man, woman)` that strictly prefer each other to their assignment.
pub fn strongly_blocking_pairs(inst: &Instance, mu: &Matching) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..inst.num_men() {
        let own = inst.man_rank(i, mu.man(i));
        for j in 0..inst.num_women() {
            if inst.man_rank(i, Some(j)) < own && inst.woman_rank(j, Some(i)) < inst.woman_rank(j, mu.woman(j)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Matched agents whose partner is strictly worse than being unmatched.
pub fn ir_violations(inst: &Instance, mu: &Matching) -> Vec<(Side, usize)> {
    let mut out = Vec::new();
    for (i, j) in mu.pairs() {
        if !inst.man_acceptable(i, j) {
            out.push((Side::Man, i));
        }
    }
    for (i, j) in mu.pairs() {
        if !inst.woman_acceptable(j, i) {
            out.push((Side::Woman, j));
        }
    }
    out
}

pub fn is_weakly_stable(inst: &Instance, mu: &Matching) -> bool {
    ir_violations(inst, mu).is_empty() && strongly_blocking_pairs(inst, mu).is_empty()
}

fn ir_witnesses(inst: &Instance, mu: &Matching) -> Vec<Witness> {
    ir_violations(inst, mu)
        .into_iter()
        .map(|(side, k)| match side {
            Side::Man => Witness::Unacceptable {
                side,
                agent: inst.man_labels()[k].clone(),
                partner: inst.woman_labels()[mu.man(k).expect("matched")].clone(),
            },
            Side::Woman => Witness::Unacceptable {
                side,
                agent: inst.woman_labels()[k].clone(),
                partner: inst.man_labels()[mu.woman(k).expect("matched")].clone(),
            },
        })
        .collect()
}

fn blocking_witnesses(inst: &Instance, mu: &Matching) -> Vec<Witness> {
    strongly_blocking_pairs(inst, mu)
        .into_iter()
        .map(|(i, j)| Witness::BlockingPair { man: inst.man_labels()[i].clone(), woman: inst.woman_labels()[j].clone() })
        .collect()
}

pub fn check_individual_rationality(inst: &Instance, mu: &Matching) -> AuditReport {
    AuditReport::new(Property::IR, ir_witnesses(inst, mu), 1, None)
}

/// Individual rationality plus absence of strongly blocking pairs.
pub fn check_weak_stability(inst: &Instance, mu: &Matching) -> AuditReport {
    let mut w = ir_witnesses(inst, mu);
    w.extend(blocking_witnesses(inst, mu));
    AuditReport::new(Property::WeakStability, w, 1, None)
}

/// Every agent weakly prefers `mu2` to `mu`.
pub fn weakly_prefers(inst: &Instance, mu2: &Matching, mu: &Matching) -> bool {
    (0..inst.num_men()).all(|i| inst.man_weakly_prefers(i, mu2.man(i), mu.man(i)))
        && (0..inst.num_women()).all(|j| inst.woman_weakly_prefers(j, mu2.woman(j), mu.woman(j)))
}

/// `mu2` Pareto-dominates `mu`.
pub fn pareto_dominates(inst: &Instance, mu2: &Matching, mu: &Matching) -> bool {
    weakly_prefers(inst, mu2, mu) && !weakly_prefers(inst, mu, mu2)
}

/// Every matching between `num_men` men and `num_women` women.
pub fn all_matchings(num_men: usize, num_women: usize) -> Vec<Matching> {
    fn rec(i: usize, men: &mut Vec<Option<usize>>, used: &mut [bool], out: &mut Vec<Matching>) {
        if i == men.len() {
            out.push(Matching::new(used.len(), men.clone()).expect("injective by construction"));
            return;
        }
        men[i] = None;
        rec(i + 1, men, used, out);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                men[i] = Some(j);
                rec(i + 1, men, used, out);
                used[j] = false;
            }
        }
        men[i] = None;
    }
    let mut out = Vec::new();
    rec(0, &mut vec![None; num_men], &mut vec![false; num_women], &mut out);
    out
}

fn check_size(inst: &Instance) -> Result<(), VerifyError> {
    let agents = inst.num_men() + inst.num_women();
    if agents > PARETO_LIMIT {
        return Err(VerifyError::SizeLimit { agents, limit: PARETO_LIMIT });
    }
    Ok(())
}

/// Searches the matchings every agent weakly prefers to `mu` for one that
/// some agent strictly prefers. Returns it together with the number of
/// candidate matchings visited.
pub fn find_dominating(inst: &Instance, mu: &Matching) -> (Option<Matching>, u64) {
    struct Search<'a> {
        inst: &'a Instance,
        mu: &'a Matching,
        men: Vec<Option<usize>>,
        used: Vec<bool>,
        visited: u64,
    }
    impl Search<'_> {
        fn rec(&mut self, i: usize, strict: bool) -> Option<Matching> {
            let inst = self.inst;
            if i == self.men.len() {
                self.visited += 1;
                let mut strict = strict;
                for j in 0..inst.num_women() {
                    if !self.used[j] {
                        let (new, old) = (inst.woman_rank(j, None), inst.woman_rank(j, self.mu.woman(j)));
                        if new > old {
                            return None;
                        }
                        strict |= new < old;
                    }
                }
                return strict.then(|| Matching::new(inst.num_women(), self.men.clone()).expect("injective"));
            }
            let own = inst.man_rank(i, self.mu.man(i));
            for j in 0..inst.num_women() {
                if self.used[j] || inst.man_rank(i, Some(j)) > own {
                    continue;
                }
                let (new, old) = (inst.woman_rank(j, Some(i)), inst.woman_rank(j, self.mu.woman(j)));
                if new > old {
                    continue;
                }
                self.used[j] = true;
                self.men[i] = Some(j);
                let s = strict || inst.man_rank(i, Some(j)) < own || new < old;
                let found = self.rec(i + 1, s);
                self.used[j] = false;
                self.men[i] = None;
                if found.is_some() {
                    return found;
                }
            }
            let none = inst.man_rank(i, None);
            if none <= own {
                return self.rec(i + 1, strict || none < own);
            }
            None
        }
    }
    let mut s = Search { inst, mu, men: vec![None; inst.num_men()], used: vec![false; inst.num_women()], visited: 0 };
    let found = s.rec(0, false);
    (found, s.visited)
}

/// Weak stability and absence of any Pareto-dominating matching.
pub fn is_pareto_stable(inst: &Instance, mu: &Matching) -> Result<AuditReport, VerifyError> {
    check_size(inst)?;
    let mut w = ir_witnesses(inst, mu);
    w.extend(blocking_witnesses(inst, mu));
    let (dominating, visited) = find_dominating(inst, mu);
    if let Some(d) = dominating {
        w.push(Witness::Dominated { by: labelled(inst, &d) });
    }
    Ok(AuditReport::new(Property::ParetoStability, w, visited, None))
}

/// Every weak order over `k` elements, as rank tables with levels `0..`.
pub fn weak_orders(k: usize) -> Vec<Vec<u32>> {
    fn rec(pos: usize, table: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == table.len() {
            let mut levels: Vec<u32> = table.clone();
            levels.sort_unstable();
            levels.dedup();
            if levels.iter().enumerate().all(|(k, &l)| l == k as u32) {
                out.push(table.clone());
            }
            return;
        }
        for l in 0..table.len() as u32 {
            table[pos] = l;
            rec(pos + 1, table, out);
        }
    }
    let mut out = Vec::new();
    rec(0, &mut vec![0; k], &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuditConfig {
    /// Largest coalition of misreporting men (1 or 2).
    pub max_coalition: usize,
    /// Largest number of misreport profiles examined.
    pub budget: u64,
    /// Seed for sampled audits.
    pub seed: u64,
    /// Count a profile as a violation when every member is weakly better and
    /// one is strictly better, instead of requiring all to be strictly better.
    pub strong: bool,
    pub parallel: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { max_coalition: 1, budget: 1_000_000, seed: 0, strong: false, parallel: false }
    }
}

/// Largest `|J|` for which misreports are enumerated exhaustively.
pub const EXHAUSTIVE_WOMEN: usize = 3;

type Profile = Vec<(usize, Vec<u32>)>;

fn coalitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    if max >= 2 {
        for a in 0..n {
            for b in a + 1..n {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

fn exhaustive_profiles(inst: &Instance, cfg: &AuditConfig) -> Vec<Profile> {
    let nw = inst.num_women();
    let orders = weak_orders(nw + 1);
    let lies: Vec<Vec<&Vec<u32>>> = (0..inst.num_men())
        .map(|i| {
            let truth = inst.men()[i].relation_key(nw);
            orders.iter().filter(|o| **o != truth).collect()
        })
        .collect();
    let mut out = Vec::new();
    for c in coalitions(inst.num_men(), cfg.max_coalition) {
        let mut partial: Vec<Profile> = vec![Vec::new()];
        for &i in &c {
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    lies[i].iter().map(move |o| {
                        let mut p = p.clone();
                        p.push((i, (*o).clone()));
                        p
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

fn sampled_profiles(inst: &Instance, cfg: &AuditConfig) -> Vec<Profile> {
    let nw = inst.num_women();
    let n = inst.num_men();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let max = cfg.max_coalition.min(n);
    for _ in 0..cfg.budget {
        let size = rng.gen_range(1..=max);
        let mut members = sample(&mut rng, n, size).into_vec();
        members.sort_unstable();
        let mut profile = Vec::with_capacity(size);
        for i in members {
            let truth = inst.men()[i].relation_key(nw);
            let lie = loop {
                let raw: Vec<u32> = (0..=nw).map(|_| rng.gen_range(0..=nw as u32)).collect();
                let key = PreferenceOrder::from_rank_table(&raw).relation_key(nw);
                if key != truth {
                    break key;
                }
            };
            profile.push((i, lie));
        }
        out.push(profile);
    }
    out
}

/// Re-runs `mechanism` on misreport profiles of single men (and pairs of men
/// when `max_coalition` is 2), judging outcomes by true preferences.
///
/// Misreports are enumerated exhaustively when there are at most
/// [`EXHAUSTIVE_WOMEN`] women and the profile count fits the budget; otherwise
/// `budget` profiles are sampled from `seed`.
pub fn audit_strategyproofness<F>(inst: &Instance, mechanism: F, cfg: &AuditConfig) -> Result<AuditReport, VerifyError>
where
    F: Fn(&Instance) -> Matching + Sync,
{
    if !(1..=2).contains(&cfg.max_coalition) {
        return Err(VerifyError::Coalition(cfg.max_coalition));
    }
    let nw = inst.num_women();
    let truthful = mechanism(inst);
    // A single weak order exists over one element: nobody can lie.
    if nw == 0 {
        return Ok(AuditReport::new(Property::Strategyproofness, Vec::new(), 0, None));
    }
    let mut seed = None;
    let mut profiles = Vec::new();
    if nw <= EXHAUSTIVE_WOMEN {
        profiles = exhaustive_profiles(inst, cfg);
    }
    if nw > EXHAUSTIVE_WOMEN || profiles.len() as u64 > cfg.budget {
        profiles = sampled_profiles(inst, cfg);
        seed = Some(cfg.seed);
    }
    let check = |p: &Profile| -> Option<Witness> {
        let mut lied = inst.clone();
        for (i, table) in p {
            lied = lied.with_man_preference(*i, PreferenceOrder::from_rank_table(table)).expect("complete order is valid");
        }
        let out = mechanism(&lied);
        let gains: Vec<(bool, bool)> = p
            .iter()
            .map(|&(i, _)| {
                let (new, old) = (inst.man_rank(i, out.man(i)), inst.man_rank(i, truthful.man(i)));
                (new < old, new <= old)
            })
            .collect();
        let violation = if cfg.strong {
            gains.iter().all(|g| g.1) && gains.iter().any(|g| g.0)
        } else {
            gains.iter().all(|g| g.0)
        };
        violation.then(|| Witness::Misreport {
            coalition: p.iter().map(|(i, _)| inst.man_labels()[*i].clone()).collect(),
            reports: p
                .iter()
                .map(|(i, t)| {
                    (inst.man_labels()[*i].clone(), order_to_value(&PreferenceOrder::from_rank_table(t), inst.woman_labels()))
                })
                .collect(),
            truthful: labelled(inst, &truthful),
            misreported: labelled(inst, &out),
        })
    };
    let witnesses: Vec<Witness> = if cfg.parallel {
        profiles.par_iter().filter_map(check).collect()
    } else {
        profiles.iter().filter_map(check).collect()
    };
    Ok(AuditReport::new(Property::Strategyproofness, witnesses, profiles.len() as u64, seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupVerdict {
    Better,
    Worse,
    Equivalent,
    Incomparable,
}

/// Closure of the responsiveness generators for one college over subsets of
/// `0..n` students, encoded as bitmasks.
struct GroupOrder<'a> {
    ranks: &'a [u32],
    n: usize,
    cache: HashMap<u32, Vec<bool>>,
}

impl<'a> GroupOrder<'a> {
    fn new(ranks: &'a [u32]) -> Self {
        GroupOrder { ranks, n: ranks.len() - 1, cache: HashMap::new() }
    }

    /// `weakly(x ⪰ y)` for student `x`, `y`; `None` is the unmatched position.
    fn weakly(&self, x: Option<usize>, y: Option<usize>) -> bool {
        self.ranks[x.unwrap_or(self.n)] <= self.ranks[y.unwrap_or(self.n)]
    }

    /// Sets weakly preferred to `from`.
    fn above(&mut self, from: u32) -> &Vec<bool> {
        if !self.cache.contains_key(&from) {
            let mut seen = vec![false; 1 << self.n];
            let mut queue = VecDeque::from([from]);
            seen[from as usize] = true;
            while let Some(s) = queue.pop_front() {
                let mut push = |t: u32| {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        queue.push_back(t);
                    }
                };
                for a in 0..self.n {
                    let abit = 1u32 << a;
                    if s & abit == 0 {
                        if self.weakly(Some(a), None) {
                            push(s | abit);
                        }
                        for b in 0..self.n {
                            if s & (1 << b) != 0 && self.weakly(Some(a), Some(b)) {
                                push((s & !(1 << b)) | abit);
                            }
                        }
                    } else if self.weakly(None, Some(a)) {
                        push(s & !abit);
                    }
                }
            }
            self.cache.insert(from, seen);
        }
        &self.cache[&from]
    }

    fn prefers(&mut self, x: u32, y: u32) -> bool {
        self.above(y)[x as usize]
    }
}

fn mask(students: &[usize]) -> u32 {
    students.iter().fold(0, |m, &i| m | (1 << i))
}

/// Compares two sets of students under the minimally responsive extension of
/// `college`'s preference over `num_students` students.
pub fn college_group_prefers(
    college: &PreferenceOrder,
    capacity: usize,
    num_students: usize,
    s1: &[usize],
    s2: &[usize],
) -> Result<GroupVerdict, VerifyError> {
    if num_students > COLLEGE_LIMIT {
        return Err(VerifyError::SizeLimit { agents: num_students, limit: COLLEGE_LIMIT });
    }
    if s1.len() > capacity || s2.len() > capacity {
        return Err(VerifyError::OverCapacity(capacity));
    }
    let ranks = college.rank_table(num_students);
    let mut g = GroupOrder::new(&ranks);
    let (a, b) = (mask(s1), mask(s2));
    Ok(match (g.prefers(a, b), g.prefers(b, a)) {
        (true, true) => GroupVerdict::Equivalent,
        (true, false) => GroupVerdict::Better,
        (false, true) => GroupVerdict::Worse,
        (false, false) => GroupVerdict::Incomparable,
    })
}

fn college_labelled(ci: &CollegeInstance, a: &[Option<usize>]) -> BTreeMap<String, Option<String>> {
    a.iter().enumerate().map(|(i, c)| (ci.student_labels()[i].clone(), label(ci.college_labels(), *c))).collect()
}

/// Student-college pairs violating the weak-stability conditions of a
/// capacitated matching.
pub fn college_blocking_pairs(ci: &CollegeInstance, mu: &CollegeMatching) -> Vec<(usize, usize)> {
    let ns = ci.num_students();
    let mut out = Vec::new();
    for i in 0..ns {
        let sr = ci.students()[i].rank_table(ci.num_colleges());
        let own = sr[mu.student(i).unwrap_or(ci.num_colleges())];
        for (j, c) in ci.colleges().iter().enumerate() {
            if sr[j] >= own {
                continue;
            }
            let cr = c.preference.rank_table(ns);
            let admitted = mu.admitted(j);
            let displaces = admitted.iter().any(|&k| cr[i] < cr[k]);
            let has_room = admitted.len() < c.capacity && cr[i] < cr[ns];
            if displaces || has_room {
                out.push((i, j));
            }
        }
    }
    out
}

/// Capacitated matchings are enumerated; colleges compare student sets by
/// [`college_group_prefers`].
pub fn is_college_pareto_stable(ci: &CollegeInstance, mu: &CollegeMatching) -> Result<AuditReport, VerifyError> {
    let ns = ci.num_students();
    let agents = ns + ci.num_colleges();
    if agents > COLLEGE_LIMIT {
        return Err(VerifyError::SizeLimit { agents, limit: COLLEGE_LIMIT });
    }
    let nc = ci.num_colleges();
    let student_ranks: Vec<Vec<u32>> = ci.students().iter().map(|p| p.rank_table(nc)).collect();
    let college_ranks: Vec<Vec<u32>> = ci.colleges().iter().map(|c| c.preference.rank_table(ns)).collect();
    let mut witnesses = Vec::new();
    for i in 0..ns {
        if let Some(j) = mu.student(i) {
            if student_ranks[i][j] > student_ranks[i][nc] {
                witnesses.push(Witness::Unacceptable {
                    side: Side::Man,
                    agent: ci.student_labels()[i].clone(),
                    partner: ci.college_labels()[j].clone(),
                });
            }
            if college_ranks[j][i] > college_ranks[j][ns] {
                witnesses.push(Witness::Unacceptable {
                    side: Side::Woman,
                    agent: ci.college_labels()[j].clone(),
                    partner: ci.student_labels()[i].clone(),
                });
            }
        }
    }
    for (i, j) in college_blocking_pairs(ci, mu) {
        witnesses.push(Witness::BlockingPair {
            man: ci.student_labels()[i].clone(),
            woman: ci.college_labels()[j].clone(),
        });
    }
    let mut orders: Vec<GroupOrder> = college_ranks.iter().map(|r| GroupOrder::new(r)).collect();
    let current: Vec<u32> = (0..nc).map(|j| mask(&mu.admitted(j))).collect();
    let mut visited = 0u64;
    let mut candidate = vec![None; ns];
    let mut load = vec![0usize; nc];
    let mut found = None;
    enumerate_capacitated(ci, 0, &mut candidate, &mut load, &mut |a: &[Option<usize>]| {
        visited += 1;
        let students_weak = (0..ns).all(|i| student_ranks[i][a[i].unwrap_or(nc)] <= student_ranks[i][mu.student(i).unwrap_or(nc)]);
        if !students_weak {
            return false;
        }
        let sets: Vec<u32> = (0..nc)
            .map(|j| (0..ns).filter(|&i| a[i] == Some(j)).fold(0, |m, i| m | (1 << i)))
            .collect();
        if !(0..nc).all(|j| orders[j].prefers(sets[j], current[j])) {
            return false;
        }
        let students_back = (0..ns).all(|i| student_ranks[i][mu.student(i).unwrap_or(nc)] <= student_ranks[i][a[i].unwrap_or(nc)]);
        let back = students_back && (0..nc).all(|j| orders[j].prefers(current[j], sets[j]));
        if !back {
            found = Some(a.to_vec());
            return true;
        }
        false
    });
    if let Some(a) = found {
        witnesses.push(Witness::Dominated { by: college_labelled(ci, &a) });
    }
    Ok(AuditReport::new(Property::CollegeParetoStability, witnesses, visited, None))
}

/// Calls `f` on every capacitated assignment until it returns true.
fn enumerate_capacitated(
    ci: &CollegeInstance,
    i: usize,
    a: &mut Vec<Option<usize>>,
    load: &mut Vec<usize>,
    f: &mut dyn FnMut(&[Option<usize>]) -> bool,
) -> bool {
    if i == a.len() {
        return f(a);
    }
    a[i] = None;
    if enumerate_capacitated(ci, i + 1, a, load, f) {
        return true;
    }
    for (j, c) in ci.colleges().iter().enumerate() {
        if load[j] < c.capacity {
            load[j] += 1;
            a[i] = Some(j);
            let stop = enumerate_capacitated(ci, i + 1, a, load, f);
            load[j] -= 1;
            a[i] = None;
            if stop {
                return true;
            }
        }
    }
    false
}

/// Every capacitated matching of a college instance.
pub fn all_college_matchings(ci: &CollegeInstance) -> Vec<CollegeMatching> {
    let mut out = Vec::new();
    enumerate_capacitated(ci, 0, &mut vec![None; ci.num_students()], &mut vec![0; ci.num_colleges()], &mut |a| {
        out.push(CollegeMatching::new(ci, a.to_vec()).expect("capacities respected"));
        false
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{solve, College};
    use crate::model::parse_instance;

    fn tied() -> Instance {
        parse_instance(
            r#"{"men": {"m1": [["w1","w2"]], "m2": [["w1"],["w2"]]},
                "women": {"w1": [["m1","m2"]], "w2": [["m1"],["m2"]]}}"#,
        )
        .unwrap()
    }

    fn m(pairs: &[(usize, usize)]) -> Matching {
        Matching::from_pairs(2, 2, pairs).unwrap()
    }

    #[test]
    fn blocking_pairs_tied() {
        let inst = tied();
        assert!(strongly_blocking_pairs(&inst, &m(&[(0, 1), (1, 0)])).is_empty());
        assert_eq!(strongly_blocking_pairs(&inst, &m(&[(0, 0)])), vec![(1, 1)]);
    }

    #[test]
    fn domination_tied() {
        let inst = tied();
        let good = m(&[(0, 1), (1, 0)]);
        let bad = m(&[(0, 0), (1, 1)]);
        assert!(pareto_dominates(&inst, &good, &bad));
        assert!(!pareto_dominates(&inst, &bad, &good));
        assert!(!pareto_dominates(&inst, &good, &good));
        let report = is_pareto_stable(&inst, &bad).unwrap();
        assert!(!report.passed);
        let expected: BTreeMap<String, Option<String>> =
            [("m1".to_string(), Some("w2".to_string())), ("m2".to_string(), Some("w1".to_string()))].into();
        assert_eq!(report.witnesses, vec![Witness::Dominated { by: expected }]);
        assert!(is_pareto_stable(&inst, &good).unwrap().passed);
    }

    #[test]
    fn strict_trade_off_incomparable() {
        let inst = parse_instance(
            r#"{"men": {"m1": [["w1"],["w2"]], "m2": [["w2"],["w1"]]},
                "women": {"w1": [["m2"],["m1"]], "w2": [["m1"],["m2"]]}}"#,
        )
        .unwrap();
        let a = m(&[(0, 0), (1, 1)]);
        let b = m(&[(0, 1), (1, 0)]);
        assert!(!pareto_dominates(&inst, &a, &b) && !pareto_dominates(&inst, &b, &a));
    }

    #[test]
    fn matching_counts() {
        assert_eq!(all_matchings(2, 2).len(), 7);
        assert_eq!(all_matchings(5, 5).len(), 1546);
        assert_eq!(all_matchings(0, 3).len(), 1);
    }

    #[test]
    fn weak_order_counts() {
        assert_eq!(weak_orders(1).len(), 1);
        assert_eq!(weak_orders(3).len(), 13);
        assert_eq!(weak_orders(4).len(), 75);
    }

    #[test]
    fn size_limit() {
        let men = vec![PreferenceOrder::new(vec![]); 7];
        let women = vec![PreferenceOrder::new(vec![]); 6];
        let inst = Instance::new(men, women).unwrap();
        let mu = Matching::empty(7, 6);
        assert_eq!(is_pareto_stable(&inst, &mu), Err(VerifyError::SizeLimit { agents: 13, limit: 12 }));
    }

    #[test]
    fn audit_tied_single_men() {
        let inst = tied();
        let r = audit_strategyproofness(&inst, solve, &AuditConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.seed, None);
        // 13 weak orders per man, one of which is the truth.
        assert_eq!(r.profiles_checked, 24);
    }

    #[test]
    fn audit_rejects_bad_coalition() {
        let cfg = AuditConfig { max_coalition: 3, ..AuditConfig::default() };
        assert_eq!(audit_strategyproofness(&tied(), solve, &cfg), Err(VerifyError::Coalition(3)));
    }

    #[test]
    fn group_preference_closure() {
        let college = PreferenceOrder::strict(&[0, 1, 2]);
        assert_eq!(college_group_prefers(&college, 2, 3, &[0, 2], &[1]), Ok(GroupVerdict::Better));
        assert_eq!(college_group_prefers(&college, 2, 3, &[1], &[0, 2]), Ok(GroupVerdict::Worse));
        assert_eq!(college_group_prefers(&college, 2, 3, &[1, 2], &[1, 2]), Ok(GroupVerdict::Equivalent));
        assert_eq!(college_group_prefers(&college, 2, 3, &[0], &[1, 2]), Ok(GroupVerdict::Incomparable));
        assert_eq!(college_group_prefers(&college, 1, 3, &[0, 1], &[]), Err(VerifyError::OverCapacity(1)));
    }

    #[test]
    fn college_two_conditions() {
        let s = PreferenceOrder::strict(&[0]);
        let ci = CollegeInstance::new(vec![s.clone(), s], vec![College { preference: PreferenceOrder::strict(&[0, 1]), capacity: 2 }])
            .unwrap();
        assert_eq!(all_college_matchings(&ci).len(), 4);
        let both = CollegeMatching::new(&ci, vec![Some(0), Some(0)]).unwrap();
        assert!(is_college_pareto_stable(&ci, &both).unwrap().passed);
        let one = CollegeMatching::new(&ci, vec![Some(0), None]).unwrap();
        assert_eq!(college_blocking_pairs(&ci, &one), vec![(1, 0)]);
        assert!(!is_college_pareto_stable(&ci, &one).unwrap().passed);
    }
}
