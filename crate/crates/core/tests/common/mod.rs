//! Reference implementations and corpora shared by the integration tests.
#![allow(dead_code)]

use pareto_match::gen::{generate_with, GenParams};
use pareto_match::mechanism::Matching;
use pareto_match::model::{Instance, PreferenceOrder};
use pareto_match::verifier::weak_orders;
use rand::Rng;

/// Textbook man-proposing deferred acceptance for strict preferences.
pub fn gale_shapley(inst: &Instance) -> Matching {
    let (nm, nw) = (inst.num_men(), inst.num_women());
    let lists: Vec<Vec<usize>> = (0..nm)
        .map(|i| {
            let mut l: Vec<usize> = (0..nw).filter(|&j| inst.man_acceptable(i, j)).collect();
            l.sort_by_key(|&j| inst.man_rank(i, Some(j)));
            l
        })
        .collect();
    let mut next = vec![0usize; nm];
    let mut holds: Vec<Option<usize>> = vec![None; nw];
    let mut free: Vec<usize> = (0..nm).rev().collect();
    while let Some(i) = free.pop() {
        let Some(&j) = lists[i].get(next[i]) else { continue };
        next[i] += 1;
        if !inst.woman_acceptable(j, i) {
            free.push(i);
            continue;
        }
        match holds[j] {
            None => holds[j] = Some(i),
            Some(k) if inst.woman_rank(j, Some(i)) < inst.woman_rank(j, Some(k)) => {
                holds[j] = Some(i);
                free.push(k);
            }
            Some(_) => free.push(i),
        }
    }
    let mut men = vec![None; nm];
    for (j, h) in holds.iter().enumerate() {
        if let Some(i) = *h {
            men[i] = Some(j);
        }
    }
    Matching::new(nw, men).unwrap()
}

/// Deliberately flawed control: woman-proposing deferred acceptance with
/// ties broken by index and no improvement phase.
pub fn broken_control(inst: &Instance) -> Matching {
    let (nm, nw) = (inst.num_men(), inst.num_women());
    let lists: Vec<Vec<usize>> = (0..nw)
        .map(|j| {
            let mut l: Vec<usize> = (0..nm).filter(|&i| inst.woman_acceptable(j, i)).collect();
            l.sort_by_key(|&i| (inst.woman_rank(j, Some(i)), i));
            l
        })
        .collect();
    let key = |i: usize, j: usize| (inst.man_rank(i, Some(j)), j);
    let mut next = vec![0usize; nw];
    let mut holds: Vec<Option<usize>> = vec![None; nm];
    let mut free: Vec<usize> = (0..nw).rev().collect();
    while let Some(j) = free.pop() {
        let Some(&i) = lists[j].get(next[j]) else { continue };
        next[j] += 1;
        if !inst.man_acceptable(i, j) {
            free.push(j);
            continue;
        }
        match holds[i] {
            None => holds[i] = Some(j),
            Some(k) if key(i, j) < key(i, k) => {
                holds[i] = Some(j);
                free.push(k);
            }
            Some(_) => free.push(j),
        }
    }
    Matching::new(nw, holds).unwrap()
}

/// Every 2 × 2 profile: each of the four agents picks one of the 13 weak
/// orders over the two opposite agents and the unmatched position.
pub fn two_by_two_corpus() -> impl Iterator<Item = Instance> {
    let orders: Vec<PreferenceOrder> = weak_orders(3).iter().map(|t| PreferenceOrder::from_rank_table(t)).collect();
    let n = orders.len();
    (0..n.pow(4)).map(move |mut k| {
        let mut pick = || {
            let o = orders[k % n].clone();
            k /= n;
            o
        };
        let men = vec![pick(), pick()];
        let women = vec![pick(), pick()];
        Instance::new(men, women).unwrap()
    })
}

/// An instance with random sizes in `min..=max` per side and random tie
/// density and incompleteness.
pub fn random_instance<R: Rng>(rng: &mut R, min: usize, max: usize) -> Instance {
    let men = rng.gen_range(min..=max);
    let women = rng.gen_range(min..=max);
    let tie = rng.gen_range(0.0..=1.0);
    let inc = rng.gen_range(0.0..=0.7);
    generate_with(rng, &GenParams::new(men, women, tie, inc).unwrap())
}

/// Classical stability for strict preferences: no pair prefers each other
/// to their partners and nobody holds an unacceptable partner.
pub fn textbook_stable(inst: &Instance, mu: &Matching) -> bool {
    for (i, j) in mu.pairs() {
        if !inst.man_acceptable(i, j) || !inst.woman_acceptable(j, i) {
            return false;
        }
    }
    for i in 0..inst.num_men() {
        for j in 0..inst.num_women() {
            let man_wants = match mu.man(i) {
                Some(k) => inst.man_rank(i, Some(j)) < inst.man_rank(i, Some(k)),
                None => inst.man_acceptable(i, j),
            };
            let woman_wants = match mu.woman(j) {
                Some(k) => inst.woman_rank(j, Some(i)) < inst.woman_rank(j, Some(k)),
                None => inst.woman_acceptable(j, i),
            };
            if man_wants && woman_wants {
                return false;
            }
        }
    }
    true
}
