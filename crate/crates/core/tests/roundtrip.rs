use pmcgd_core::textio::{parse_region, serialize_model, serialize_region};
use pmcgd_core::{generate_synthetic, parse_model, preprocess, GeneratorSpec, Region};
use proptest::prelude::*;

fn round_trip(spec: &GeneratorSpec, seed: u64) {
    let (pmc, _) = generate_synthetic(spec, seed).unwrap();
    let text = serialize_model(&pmc);
    let raw = parse_model(&text).unwrap();
    let again = preprocess(&raw, &raw.targets).unwrap();
    assert_eq!(again, pmc);
    assert_eq!(serialize_model(&again), text);
}

#[test]
fn generated_models_round_trip() {
    for seed in 0..30 {
        let spec = GeneratorSpec {
            sink_density: if seed % 2 == 0 { 0.0 } else { 0.1 },
            branching: 2 + seed as usize % 3,
            ..GeneratorSpec::new(20 + seed as usize, 5)
        };
        round_trip(&spec, seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_generated_model_round_trips(
        states in 3usize..80,
        params in 0usize..6,
        branching in 2usize..5,
        sink in prop::bool::ANY,
        seed in any::<u64>(),
    ) {
        let spec = GeneratorSpec {
            sink_density: if sink { 0.2 } else { 0.0 },
            branching,
            ..GeneratorSpec::new(states, params.min(states - 2))
        };
        round_trip(&spec, seed);
    }

    #[test]
    fn regions_round_trip(lbs in prop::collection::vec(-1e3f64..1e3, 1..6), widths in prop::collection::vec(1e-9f64..1e3, 6)) {
        let ps = pmcgd_core::ParameterSet::new((0..lbs.len()).map(|i| format!("x{i}"))).unwrap();
        let bounds = lbs.iter().zip(&widths).map(|(&l, &w)| pmcgd_core::Interval::new(l, l + w)).collect();
        let r = Region::new(&ps, bounds).unwrap();
        prop_assert_eq!(parse_region(&serialize_region(&r), &ps).unwrap(), r);
    }
}
