//! Seeded random instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Entry, Instance, PreferenceOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    pub men: usize,
    pub women: usize,
    /// Probability that two adjacent positions of a list share a tie-group.
    pub tie_density: f64,
    /// Probability that an agent is left off a list (ranked unacceptable).
    pub incompleteness: f64,
}

impl GenParams {
    pub fn new(men: usize, women: usize, tie_density: f64, incompleteness: f64) -> Result<Self, GenError> {
        for (name, value) in [("tie density", tie_density), ("incompleteness", incompleteness)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GenError::OutOfRange { name, value });
            }
        }
        Ok(GenParams { men, women, tie_density, incompleteness })
    }
}

/// A random weak order over `0..opposite` plus the unmatched position.
pub fn random_order<R: Rng>(rng: &mut R, opposite: usize, tie_density: f64, incompleteness: f64) -> PreferenceOrder {
    let mut agents: Vec<usize> = (0..opposite).collect();
    agents.shuffle(rng);
    let mut listed: Vec<Entry> = agents.into_iter().filter(|_| !rng.gen_bool(incompleteness)).map(Entry::Agent).collect();
    listed.push(Entry::Unmatched);
    let mut tiers: Vec<Vec<Entry>> = Vec::new();
    for e in listed {
        match tiers.last_mut() {
            Some(last) if rng.gen_bool(tie_density) => last.push(e),
            _ => tiers.push(vec![e]),
        }
    }
    PreferenceOrder::new(tiers)
}

pub fn generate_with<R: Rng>(rng: &mut R, p: &GenParams) -> Instance {
    let men = (0..p.men).map(|_| random_order(rng, p.women, p.tie_density, p.incompleteness)).collect();
    let women = (0..p.women).map(|_| random_order(rng, p.men, p.tie_density, p.incompleteness)).collect();
    Instance::new(men, women).expect("generated lists are valid")
}

/// The same seed and parameters always give the same instance.
pub fn generate(seed: u64, p: &GenParams) -> Instance {
    generate_with(&mut ChaCha8Rng::seed_from_u64(seed), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let p = GenParams::new(4, 4, 0.5, 0.2).unwrap();
        assert_eq!(generate(7, &p), generate(7, &p));
        assert_ne!(generate(7, &p).to_json(), generate(8, &p).to_json());
    }

    #[test]
    fn no_ties_is_strict() {
        let p = GenParams::new(5, 6, 0.0, 0.3).unwrap();
        for seed in 0..20 {
            assert!(generate(seed, &p).is_strict());
        }
    }

    #[test]
    fn full_incompleteness_leaves_only_unmatched() {
        let p = GenParams::new(3, 3, 0.5, 1.0).unwrap();
        let inst = generate(1, &p);
        for pref in inst.men().iter().chain(inst.women()) {
            assert_eq!(pref.tiers(), &[vec![Entry::Unmatched]]);
        }
    }

    #[test]
    fn parameters_checked() {
        assert!(GenParams::new(1, 1, 1.5, 0.0).is_err());
        assert!(GenParams::new(1, 1, 0.0, -0.1).is_err());
        assert!(GenParams::new(1, 1, f64::NAN, 0.0).is_err());
    }
}
