use cellgrid::ShipHistory;
use proptest::prelude::*;

fn ports() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["A", "B", "C", "D"]), 1..150)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reported_port_is_in_the_window(seq in ports(), cap in 1usize..70, k in 1usize..4) {
        let mut h = ShipHistory::new("S", cap);
        for raw in &seq {
            let out = h.filter_prediction(raw, k);
            prop_assert!(h.window().any(|p| p == out));
            prop_assert!(h.len() <= cap);
        }
    }

    #[test]
    fn consensus_is_reported(seq in ports(), v in "[A-D]", cap in 1usize..70) {
        let mut h = ShipHistory::new("S", cap);
        for raw in &seq {
            h.filter_prediction(raw, 1);
        }
        for _ in 0..cap {
            h.filter_prediction(&v, 1);
        }
        prop_assert!(h.window().all(|p| p == v));
        prop_assert_eq!(h.filter_prediction(&v, 1), v);
    }

    #[test]
    fn constant_streak_converges_within_window(seq in ports(), v in "[A-D]", cap in 1usize..70) {
        let mut h = ShipHistory::new("S", cap);
        for raw in &seq {
            h.filter_prediction(raw, 1);
        }
        let mut last = String::new();
        for _ in 0..cap {
            last = h.filter_prediction(&v, 1);
        }
        prop_assert_eq!(last, v);
    }

    #[test]
    fn k_at_capacity_passes_through(seq in ports(), cap in 1usize..20) {
        let mut h = ShipHistory::new("S", cap);
        for raw in &seq {
            prop_assert_eq!(&h.filter_prediction(raw, cap), raw);
        }
    }
}

#[test]
fn examples() {
    let mut h = ShipHistory::new("S", 64);
    for p in ["A", "A", "A"] {
        h.filter_prediction(p, 1);
    }
    assert_eq!(h.filter_prediction("B", 1), "A");

    let mut h = ShipHistory::new("S", 64);
    for p in ["A", "B", "B"] {
        h.filter_prediction(p, 1);
    }
    assert_eq!(h.filter_prediction("B", 1), "B");
    assert_eq!(ShipHistory::new("S", 64).filter_prediction("X", 1), "X");
}
