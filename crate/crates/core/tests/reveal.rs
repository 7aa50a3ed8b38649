mod common;

use std::collections::BTreeSet;

use common::random_instance;
use pareto_match::assignment::greedy_mwm;
use pareto_match::mechanism::{assign_priorities, build_iuap};
use pareto_match::model::parse_instance;
use pareto_match::reveal::{to_uap, Configuration, Iuap, RevealPolicy};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tied_iuap() -> Iuap {
    let inst = parse_instance(
        r#"{"men": {"m1": [["w1","w2"]], "m2": [["w1"],["w2"]]},
            "women": {"w1": [["m1","m2"]], "w2": [["m1"],["m2"]]}}"#,
    )
    .unwrap();
    build_iuap(&inst, &assign_priorities(&inst))
}

#[test]
fn tied_trace() {
    let iuap = tied_iuap();
    let mut c = Configuration::initial(&iuap).unwrap();
    let steps = c.run(RevealPolicy::Fifo).unwrap();
    assert_eq!(steps.len(), 2);
    assert_eq!((steps[0].multibidder, steps[0].tier, steps[0].matched_after), (0, 0, true));
    assert_eq!((steps[1].multibidder, steps[1].tier, steps[1].matched_after), (1, 0, true));
    // m1's first-tier bidder moves to w2 and m2's takes w1.
    assert_eq!(c.matching().edges, vec![(0, 1), (2, 0)]);
}

#[test]
fn tied_after_first_reveal() {
    let iuap = tied_iuap();
    let mut c = Configuration::initial(&iuap).unwrap();
    c.reveal(0).unwrap();
    assert_eq!(c.matching().edges, vec![(0, 0)]);
    assert_eq!(c.ready_set().iter().map(|b| b.id).collect::<Vec<_>>(), vec![2]);
}

/// Reveals random ready bidders one at a time, checking the tail invariant
/// and readiness bookkeeping after each step.
#[test]
fn tail_invariant_along_random_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let inst = random_instance(&mut rng, 1, 6);
        let iuap = build_iuap(&inst, &assign_priorities(&inst));
        let mut c = Configuration::initial(&iuap).unwrap();
        assert!(c.tail_holds());
        loop {
            let ready: Vec<u64> = c.ready_set().iter().map(|b| b.id).collect();
            let Some(&pick) = ready.choose(&mut rng) else { break };
            c.reveal(pick).unwrap();
            assert!(c.tail_holds());
        }
        let final_uap = c.revealed();
        assert_eq!(greedy_mwm(&final_uap).score(&final_uap), c.matching().score(&final_uap));
        let ids: BTreeSet<u64> = final_uap.bidders().iter().map(|b| b.id).collect();
        let reference: BTreeSet<u64> = to_uap(&iuap, RevealPolicy::Fifo).unwrap().bidders().iter().map(|b| b.id).collect();
        assert_eq!(ids, reference);
    }
}

/// Every reveal order of a small instance, explored exhaustively.
#[test]
fn confluence_over_all_orders() {
    fn explore(c: &Configuration, finals: &mut BTreeSet<Vec<u64>>) {
        let ready = c.ready_set();
        if ready.is_empty() {
            let mut ids: Vec<u64> = c.revealed().bidders().iter().map(|b| b.id).collect();
            ids.sort_unstable();
            finals.insert(ids);
            return;
        }
        for b in ready {
            let mut next = c.clone();
            next.reveal(b.id).unwrap();
            explore(&next, finals);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 2, 4);
        let iuap = build_iuap(&inst, &assign_priorities(&inst));
        let mut finals = BTreeSet::new();
        explore(&Configuration::initial(&iuap).unwrap(), &mut finals);
        assert_eq!(finals.len(), 1);
    }
}

#[test]
fn trace_records_serialize_as_json_lines() {
    let iuap = tied_iuap();
    let mut c = Configuration::initial(&iuap).unwrap();
    for rec in c.run(RevealPolicy::Reverse).unwrap() {
        let line = serde_json::to_string(&rec).unwrap();
        assert!(!line.contains('\n'));
        let back: pareto_match::reveal::RevealRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
    }
}
