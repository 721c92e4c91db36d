//! Seeded random generation of well-conditioned three-peakon states.
//!
//! The verification suites need states of a prescribed sign pattern that
//! stay away from every numerical cliff at once: near-degenerate spectral
//! polynomials, clustered or anti-resonant eigenvalues, and rates so large
//! that trajectories leave the comfortable range of double precision.
//! `random_state` rejection-samples until all the enabled conditions hold.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::Signature;
use crate::dynamics::invariants;
use crate::error::{Error, Result};
use crate::polycalc::DEFAULT_CLUSTER_TOL;
use crate::spectral::{eigenvalues, PeakonState};

/// Acceptance conditions for sampled states. The defaults keep every suite
/// in this crate comfortably inside double precision.
#[derive(Clone, Debug)]
pub struct SampleOptions {
    /// Positions are drawn uniformly from this interval and sorted.
    pub position_range: (f64, f64),
    /// Minimum gap between adjacent positions after sorting.
    pub min_position_gap: f64,
    /// Mass magnitudes are drawn uniformly from this interval.
    pub mass_magnitude_range: (f64, f64),
    /// Lower bound on |M2|, the quadratic invariant.
    pub min_m2: f64,
    /// Lower bound on |M3|, the cubic invariant.
    pub min_m3: f64,
    /// Pairwise eigenvalue separation, relative to the largest modulus.
    pub min_eigenvalue_gap: f64,
    /// Lower bound on |lambda_i + lambda_j| for i < j, relative to the
    /// largest modulus. Keeps the residue coupling identities and the
    /// exponential quadratures away from anti-resonant cancellation.
    pub min_anti_resonance: f64,
    /// Upper bound on every |1/lambda|, the speed scale of the flow.
    pub max_rate: f64,
    /// When set, adjacent gaps of the sorted real rate parts must be at
    /// least this large. Only satisfiable for sign patterns with real
    /// spectrum; used by the asymptotic velocity suites so that the
    /// exponential corrections at |t| = 30 are far below the tolerance.
    pub min_velocity_gap: Option<f64>,
    /// When set, the spread of the real rate parts must not exceed this.
    /// Bounds how fast peakons separate, which keeps the closed-form
    /// middle position recoverable over the comparison window.
    pub max_rate_spread: Option<f64>,
    /// Give up after this many rejected draws.
    pub max_attempts: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            position_range: (-2.0, 2.0),
            min_position_gap: 0.1,
            mass_magnitude_range: (0.2, 3.0),
            min_m2: 0.05,
            min_m3: 0.02,
            min_eigenvalue_gap: 1e-3,
            min_anti_resonance: 1e-4,
            max_rate: 6.0,
            min_velocity_gap: None,
            max_rate_spread: None,
            max_attempts: 10_000,
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed from the DP_PEAKON_SEED environment variable, default 42.
pub fn env_seed() -> u64 {
    std::env::var("DP_PEAKON_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(42)
}

/// Draws a three-peakon state with the given sign pattern satisfying every
/// enabled condition in `opts`.
pub fn random_state(
    signature: Signature,
    opts: &SampleOptions,
    rng: &mut ChaCha8Rng,
) -> Result<PeakonState> {
    for _ in 0..opts.max_attempts {
        let mut x: Vec<f64> = (0..3)
            .map(|_| rng.random_range(opts.position_range.0..opts.position_range.1))
            .collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m: Vec<f64> = signature
            .0
            .iter()
            .map(|&s| {
                s as f64
                    * rng.random_range(opts.mass_magnitude_range.0..opts.mass_magnitude_range.1)
            })
            .collect();
        if x.windows(2).any(|w| w[1] - w[0] < opts.min_position_gap) {
            continue;
        }
        let state = PeakonState { x, m };
        if accepts(&state, opts) {
            return Ok(state);
        }
    }
    Err(Error::Internal(format!(
        "no acceptable {signature} state in {} attempts",
        opts.max_attempts
    )))
}

fn accepts(state: &PeakonState, opts: &SampleOptions) -> bool {
    let inv = invariants(state);
    if inv[1].abs() < opts.min_m2 || inv[2].abs() < opts.min_m3 {
        return false;
    }
    let lams = match eigenvalues(state, DEFAULT_CLUSTER_TOL) {
        Ok(r) => r.expanded(),
        Err(_) => return false,
    };
    let scale = lams.iter().map(|l| l.norm()).fold(0.0, f64::max);
    for i in 0..lams.len() {
        if lams[i].norm() * opts.max_rate < 1.0 {
            return false;
        }
        for j in (i + 1)..lams.len() {
            if (lams[i] - lams[j]).norm() < opts.min_eigenvalue_gap * scale {
                return false;
            }
            if (lams[i] + lams[j]).norm() < opts.min_anti_resonance * scale {
                return false;
            }
        }
    }
    let mut rates: Vec<f64> = lams.iter().map(|l| (1.0 / l).re).collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(gap) = opts.min_velocity_gap {
        if rates.windows(2).any(|w| w[1] - w[0] < gap) {
            return false;
        }
    }
    if let Some(spread) = opts.max_rate_spread {
        if rates[rates.len() - 1] - rates[0] > spread {
            return false;
        }
    }
    true
}

/// All eight sign patterns, in binary order with + first.
pub fn all_signatures() -> [Signature; 8] {
    [
        Signature([1, 1, 1]),
        Signature([1, 1, -1]),
        Signature([1, -1, 1]),
        Signature([1, -1, -1]),
        Signature([-1, 1, 1]),
        Signature([-1, 1, -1]),
        Signature([-1, -1, 1]),
        Signature([-1, -1, -1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_states_satisfy_every_condition() {
        let opts = SampleOptions::default();
        let mut rng = rng_from_seed(7);
        for sig in all_signatures() {
            for _ in 0..5 {
                let state = random_state(sig, &opts, &mut rng).unwrap();
                assert_eq!(Signature::of_state(&state).unwrap(), sig);
                let inv = invariants(&state);
                assert!(inv[1].abs() >= opts.min_m2);
                assert!(inv[2].abs() >= opts.min_m3);
                let lams = eigenvalues(&state, DEFAULT_CLUSTER_TOL).unwrap().expanded();
                let scale = lams.iter().map(|l| l.norm()).fold(0.0, f64::max);
                for i in 0..3 {
                    assert!(1.0 / lams[i].norm() <= opts.max_rate);
                    for j in (i + 1)..3 {
                        assert!((lams[i] - lams[j]).norm() >= opts.min_eigenvalue_gap * scale);
                        assert!((lams[i] + lams[j]).norm() >= opts.min_anti_resonance * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_same_state() {
        let opts = SampleOptions::default();
        let sig = Signature([1, -1, 1]);
        let a = random_state(sig, &opts, &mut rng_from_seed(99)).unwrap();
        let b = random_state(sig, &opts, &mut rng_from_seed(99)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.m, b.m);
    }

    #[test]
    fn velocity_gap_option_separates_the_rates() {
        let opts = SampleOptions {
            min_velocity_gap: Some(0.4),
            ..SampleOptions::default()
        };
        let mut rng = rng_from_seed(11);
        for sig in [Signature([1, 1, 1]), Signature([-1, -1, -1])] {
            let state = random_state(sig, &opts, &mut rng).unwrap();
            let mut rates: Vec<f64> = eigenvalues(&state, DEFAULT_CLUSTER_TOL)
                .unwrap()
                .expanded()
                .iter()
                .map(|l| (1.0 / l).re)
                .collect();
            rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in rates.windows(2) {
                assert!(w[1] - w[0] >= 0.4);
            }
        }
    }

    #[test]
    fn rate_spread_option_caps_the_spread() {
        let opts = SampleOptions {
            max_rate_spread: Some(3.0),
            ..SampleOptions::default()
        };
        let mut rng = rng_from_seed(13);
        for sig in all_signatures() {
            let state = random_state(sig, &opts, &mut rng).unwrap();
            let rates: Vec<f64> = eigenvalues(&state, DEFAULT_CLUSTER_TOL)
                .unwrap()
                .expanded()
                .iter()
                .map(|l| (1.0 / l).re)
                .collect();
            let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(hi - lo <= 3.0);
        }
    }

    #[test]
    fn seed_comes_from_the_environment_with_a_default() {
        std::env::remove_var("DP_PEAKON_SEED");
        assert_eq!(env_seed(), 42);
        std::env::set_var("DP_PEAKON_SEED", "1234");
        assert_eq!(env_seed(), 1234);
        std::env::set_var("DP_PEAKON_SEED", "not a number");
        assert_eq!(env_seed(), 42);
        std::env::remove_var("DP_PEAKON_SEED");
    }
}
