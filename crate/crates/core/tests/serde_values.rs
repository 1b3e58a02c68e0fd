use gibbslab_core::weak_gibbs::Certified;
use gibbslab_core::ProbValue;

#[test]
fn rationals_round_trip_as_strings() {
    let v = ProbValue::ratio(3, 12);
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(text, "\"1/4\"");
    assert_eq!(serde_json::from_str::<ProbValue>(&text).unwrap(), v);
}

#[test]
fn json_integers_are_exact() {
    let v: ProbValue = serde_json::from_str("0").unwrap();
    assert_eq!(v, ProbValue::ratio(0, 1));
    assert!(v.as_rational().is_some());
}

#[test]
fn floats_round_trip_as_numbers() {
    let v = ProbValue::float(0.1);
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(text, "0.1");
    assert_eq!(serde_json::from_str::<ProbValue>(&text).unwrap(), v);
}

#[test]
fn certified_values_serialise_field_by_field() {
    let c = Certified { value: 0.5, radius: 1e-15 };
    let v: serde_json::Value = serde_json::to_value(c).unwrap();
    assert_eq!(v["value"], 0.5);
    assert_eq!(serde_json::from_value::<Certified>(v).unwrap(), c);
}
