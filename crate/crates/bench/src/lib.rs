//! Shared inputs for the criterion benchmarks in `benches/`.

use pmcgd_core::{generate_synthetic, GeneratorSpec, Pmc, Region};

/// A seeded synthetic model, its region and an interior point.
pub fn synthetic(states: usize, params: usize, seed: u64) -> (Pmc, Region, Vec<f64>) {
    let (pmc, region) = generate_synthetic(&GeneratorSpec::new(states, params), seed)
        .expect("valid generator settings");
    let u = (0..params)
        .map(|i| 0.2 + 0.6 * (i as f64 + 0.5) / params as f64)
        .collect();
    (pmc, region, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_is_inside() {
        let (pmc, region, u) = synthetic(50, 5, 1);
        assert_eq!(pmc.num_states(), 50);
        assert!(region.contains(&u));
    }
}
