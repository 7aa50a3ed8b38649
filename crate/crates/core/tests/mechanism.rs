mod common;

use common::{gale_shapley, random_instance};
use pareto_match::gen::{generate, GenParams};
use pareto_match::mechanism::{
    assign_priorities, build_iuap, expand_college, solve, solve_college, solve_traced, solve_with, College,
    CollegeInstance, Matching, PriorityAssignment,
};
use pareto_match::model::{parse_instance, Entry, Instance, PreferenceOrder};
use pareto_match::reveal::RevealPolicy;
use pareto_match::verifier::{is_pareto_stable, strongly_blocking_pairs};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn tied() -> Instance {
    parse_instance(
        r#"{"men": {"m1": [["w1","w2"]], "m2": [["w1"],["w2"]]},
            "women": {"w1": [["m1","m2"]], "w2": [["m1"],["m2"]]}}"#,
    )
    .unwrap()
}

#[test]
fn tied_output() {
    assert_eq!(solve(&tied()).assignment(), &[Some(1), Some(0)]);
}

#[test]
fn tied_output_is_the_only_pareto_stable_matching() {
    let inst = tied();
    let stable: Vec<Matching> = pareto_match::verifier::all_matchings(2, 2)
        .into_iter()
        .filter(|m| is_pareto_stable(&inst, m).unwrap().passed)
        .collect();
    assert_eq!(stable, vec![solve(&inst)]);
}

#[test]
fn priorities_ignore_preferences() {
    let inst = tied();
    let swapped = inst.with_man_preference(0, PreferenceOrder::strict(&[1, 0])).unwrap();
    assert_eq!(assign_priorities(&inst), assign_priorities(&swapped));
    let single = parse_instance(r#"{"men": {"m": [["w"]]}, "women": {"w": [["m"]]}}"#).unwrap();
    assert_eq!(assign_priorities(&single).as_slice(), &[1]);
}

#[test]
fn unmatched_only_man_bids_on_his_dummy() {
    let inst = parse_instance(r#"{"men": {"m1": [["@unmatched"]]}, "women": {"w1": [["m1"]]}}"#).unwrap();
    let iuap = build_iuap(&inst, &assign_priorities(&inst));
    let bidders = iuap.multibidders()[0].bidders();
    assert_eq!(bidders.len(), 1);
    assert_eq!(bidders[0].bid.iter().map(|(&k, &w)| (k, w)).collect::<Vec<_>>(), vec![(1, 0)]);
    assert_eq!(solve(&inst).man(0), None);
}

#[test]
fn dummy_bids_are_zero_and_unacceptable_tiers_omitted() {
    for seed in 0..30 {
        let inst = generate(seed, &GenParams::new(4, 4, 0.3, 0.4).unwrap());
        let iuap = build_iuap(&inst, &assign_priorities(&inst));
        for (i, t) in iuap.multibidders().iter().enumerate() {
            let cutoff = inst.men()[i].unmatched_tier().unwrap();
            assert_eq!(t.bidders().len(), cutoff + 1);
            let last = t.bidders().last().unwrap();
            assert_eq!(last.bid.get(&(inst.num_women() + i)), Some(&0));
        }
    }
}

#[test]
fn explicit_priorities_are_respected() {
    // Both men want only w1 and w1 is indifferent: priority decides.
    let inst = parse_instance(r#"{"men": {"a": [["w"]], "b": [["w"]]}, "women": {"w": [["a","b"]]}}"#).unwrap();
    assert_eq!(solve(&inst).man(0), Some(0));
    let flipped = PriorityAssignment::from_permutation(vec![1, 2]).unwrap();
    assert_eq!(solve_with(&inst, &flipped).man(1), Some(0));
}

#[test]
fn strict_instances_match_deferred_acceptance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let men = rand::Rng::gen_range(&mut rng, 1..=6);
        let women = rand::Rng::gen_range(&mut rng, 1..=6);
        let inst = pareto_match::gen::generate_with(&mut rng, &GenParams::new(men, women, 0.0, 0.3).unwrap());
        assert_eq!(solve(&inst), gale_shapley(&inst));
    }
}

#[test]
fn output_is_weakly_stable_on_larger_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 5, 30);
        assert!(strongly_blocking_pairs(&inst, &solve(&inst)).is_empty());
    }
}

#[test]
fn deterministic_across_threads() {
    let instances: Vec<Instance> = (0..40).map(|s| generate(s, &GenParams::new(7, 7, 0.5, 0.2).unwrap())).collect();
    let serial: Vec<Matching> = instances.iter().map(solve).collect();
    let parallel: Vec<Matching> = instances.par_iter().map(solve).collect();
    assert_eq!(serial, parallel);
}

#[test]
fn reveal_policy_does_not_change_the_matching_partners_tiers() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 1, 5);
        let pr = assign_priorities(&inst);
        let (a, _) = solve_traced(&inst, &pr, RevealPolicy::Fifo);
        let (b, _) = solve_traced(&inst, &pr, RevealPolicy::Random { seed: 5 });
        for i in 0..inst.num_men() {
            assert_eq!(inst.man_rank(i, a.man(i)), inst.man_rank(i, b.man(i)));
        }
    }
}

fn two_students_one_college(capacity: usize) -> CollegeInstance {
    let s = PreferenceOrder::strict(&[0]);
    CollegeInstance::new(vec![s.clone(), s], vec![College { preference: PreferenceOrder::strict(&[0, 1]), capacity }])
        .unwrap()
}

#[test]
fn college_with_room_admits_both() {
    let m = solve_college(&two_students_one_college(2));
    assert_eq!(m.admitted(0), vec![0, 1]);
    let m = solve_college(&two_students_one_college(1));
    assert_eq!(m.admitted(0), vec![0]);
}

#[test]
fn tied_colleges_expand_to_one_tier_of_slots() {
    let student = PreferenceOrder::new(vec![vec![Entry::Agent(0), Entry::Agent(1)], vec![Entry::Unmatched]]);
    let colleges = vec![
        College { preference: PreferenceOrder::strict(&[0]), capacity: 2 },
        College { preference: PreferenceOrder::strict(&[0]), capacity: 1 },
    ];
    let ci = CollegeInstance::new(vec![student], colleges).unwrap();
    let (inst, map) = expand_college(&ci);
    assert_eq!(inst.men()[0].tiers()[0], vec![Entry::Agent(0), Entry::Agent(1), Entry::Agent(2)]);
    assert_eq!((map.college_of(0), map.college_of(1), map.college_of(2)), (0, 0, 1));
}

#[test]
fn student_rejecting_every_college_stays_out() {
    let ci = CollegeInstance::new(
        vec![PreferenceOrder::new(vec![])],
        vec![College { preference: PreferenceOrder::strict(&[0]), capacity: 3 }],
    )
    .unwrap();
    assert_eq!(solve_college(&ci).student(0), None);
}

#[test]
fn college_output_document() {
    let ci = two_students_one_college(2);
    let doc = solve_college(&ci).to_document(&ci);
    assert_eq!(doc, serde_json::json!({"matching": {"s1": "c1", "s2": "c1"}, "admitted": {"c1": ["s1", "s2"]}}));
}

#[test]
fn matching_document_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 0, 6);
        let m = solve(&inst);
        let text = serde_json::to_string(&m.to_document(&inst)).unwrap();
        let back = Matching::from_document(&inst, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
