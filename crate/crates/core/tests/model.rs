use pareto_match::gen::{generate, GenParams};
use pareto_match::model::{parse_instance, rank_utilities, validate, AgentId, Entry, Instance, PreferenceOrder, Violation};
use proptest::prelude::*;

fn tied() -> Instance {
    parse_instance(
        r#"{"men": {"m1": [["w1","w2"]], "m2": [["w1"],["w2"]]},
            "women": {"w1": [["m1","m2"]], "w2": [["m1"],["m2"]]}}"#,
    )
    .unwrap()
}

#[test]
fn tied_counting_utilities() {
    let u = rank_utilities(&tied());
    assert_eq!(u.man_row(0), &[3, 3, 1]);
    assert_eq!(u.man_row(1), &[3, 2, 1]);
    assert_eq!(u.woman_row(0), &[3, 3, 1]);
    assert_eq!(u.woman_row(1), &[3, 2, 1]);
}

/// `a[i][x]` counts the elements of `J ∪ {0}` that `x` is weakly preferred to.
fn direct_count(inst: &Instance, i: usize, x: Option<usize>) -> i64 {
    (0..inst.num_women()).map(Some).chain([None]).filter(|&y| inst.man_weakly_prefers(i, x, y)).count() as i64
}

#[test]
fn counting_rule_matches_definition() {
    for seed in 0..50 {
        let inst = generate(seed, &GenParams::new(4, 5, 0.4, 0.3).unwrap());
        let u = rank_utilities(&inst);
        for i in 0..inst.num_men() {
            for x in (0..inst.num_women()).map(Some).chain([None]) {
                assert_eq!(u.a(i, x), direct_count(&inst, i, x));
                for y in (0..inst.num_women()).map(Some).chain([None]) {
                    assert_eq!(inst.man_weakly_prefers(i, x, y), u.a(i, x) >= u.a(i, y));
                }
            }
        }
        for j in 0..inst.num_women() {
            for x in (0..inst.num_men()).map(Some).chain([None]) {
                for y in (0..inst.num_men()).map(Some).chain([None]) {
                    assert_eq!(inst.woman_weakly_prefers(j, x, y), u.b(x, j) >= u.b(y, j));
                }
            }
        }
    }
}

#[test]
fn validation_reports_every_rule() {
    let men = vec![PreferenceOrder::new(vec![vec![Entry::Agent(0)], vec![]])];
    let women = vec![PreferenceOrder::new(vec![vec![Entry::Agent(3)], vec![Entry::Unmatched, Entry::Unmatched]])];
    let v = validate(&men, &women);
    assert!(v.contains(&Violation::EmptyTier { agent: AgentId::man(0), tier: 1 }));
    assert!(v.contains(&Violation::UnknownAgent { agent: AgentId::woman(0), entry: 3 }));
    assert!(v.contains(&Violation::DuplicateEntry { agent: AgentId::woman(0), entry: Entry::Unmatched }));
    assert!(Instance::new(men, women).is_err());
}

#[test]
fn unlisted_agents_rank_below_unmatched() {
    let inst = parse_instance(r#"{"men": {"m1": [["w2"]]}, "women": {"w1": [], "w2": [["m1"]]}}"#).unwrap();
    assert!(inst.man_acceptable(0, 1));
    assert!(!inst.man_acceptable(0, 0));
    assert!(!inst.woman_acceptable(0, 0));
    assert_eq!(inst.women()[0].tiers(), &[vec![Entry::Unmatched]]);
}

#[test]
fn relation_key_ignores_order_within_tie() {
    let a = PreferenceOrder::new(vec![vec![Entry::Agent(0), Entry::Agent(1)], vec![Entry::Unmatched]]);
    let b = PreferenceOrder::new(vec![vec![Entry::Agent(1), Entry::Agent(0)], vec![Entry::Unmatched]]);
    assert_eq!(a.relation_key(2), b.relation_key(2));
    assert_eq!(PreferenceOrder::from_rank_table(&a.rank_table(2)).relation_key(2), a.relation_key(2));
}

proptest! {
    #[test]
    fn document_round_trip(seed in any::<u64>(), men in 0usize..6, women in 0usize..6, tie in 0.0f64..=1.0, inc in 0.0f64..=1.0) {
        let inst = generate(seed, &GenParams::new(men, women, tie, inc).unwrap());
        let back = parse_instance(&inst.to_json()).unwrap();
        prop_assert_eq!(back, inst);
    }
}
