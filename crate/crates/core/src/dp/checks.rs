//! Indistinguishability and differential privacy as exact finite sums.
//!
//! Two output distributions P, Q are (epsilon, delta)-indistinguishable when
//! for every transcript set S: P[S] <= e^eps Q[S] + delta and symmetrically.
//! Over a finite alphabet, the worst S in each direction is exactly the set
//! of transcripts where one density exceeds e^eps times the other, giving
//! the closed form sum_t max(P[t] - e^eps Q[t], 0) <= delta.

use crate::error::{Error, Result};

use super::{Mechanism, CHECK_SLACK};

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "distributions over different alphabets ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// sum_t max(P[t] - e^eps Q[t], 0): the worst-case one-direction DP excess.
pub fn one_sided_dp_excess(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let scale = epsilon.exp();
    p.iter().zip(q).map(|(&a, &b)| (a - scale * b).max(0.0)).sum()
}

/// Both directions of the closed form, with 1e-12 slack on the comparison.
pub fn indistinguishability_check(p: &[f64], q: &[f64], epsilon: f64, delta: f64) -> Result<bool> {
    check_pair(p, q)?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(one_sided_dp_excess(p, q, epsilon) <= delta + CHECK_SLACK
        && one_sided_dp_excess(q, p, epsilon) <= delta + CHECK_SLACK)
}

/// (epsilon, delta)-DP over the whole space: every pair of databases at
/// Hamming distance one must be indistinguishable.
pub fn dp_check(mech: &Mechanism, epsilon: f64, delta: f64) -> Result<bool> {
    for (a, b) in mech.space.neighbor_pairs() {
        if !indistinguishability_check(mech.row(a), mech.row(b), epsilon, delta)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Total variation distance: (1/2) sum_t |P[t] - Q[t]|. Equals the largest
/// advantage any event gives a distinguisher.
pub fn statistical_difference(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{
        exact_count, publish_random_record, randomized_response, randomized_response_epsilon,
        truncated_geometric_counter, DatabaseSpace,
    };

    #[test]
    fn statistical_difference_of_opposed_coins_is_half() {
        let sd = statistical_difference(&[0.75, 0.25], &[0.25, 0.75]).unwrap();
        assert!((sd - 0.5).abs() < 1e-15);
        assert_eq!(statistical_difference(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn rr_two_rows_passes_its_analytic_epsilon_and_fails_below() {
        let s = DatabaseSpace::binary(2).unwrap();
        let m = randomized_response(&s, 0.25).unwrap();
        assert!(dp_check(&m, 3.0f64.ln(), 0.0).unwrap());
        assert!(!dp_check(&m, 2.9f64.ln(), 0.0).unwrap());
    }

    #[test]
    fn geometric_counter_passes_its_analytic_epsilon() {
        let s = DatabaseSpace::binary(2).unwrap();
        let m = truncated_geometric_counter(&s, 2.0f64.ln()).unwrap();
        assert!(dp_check(&m, 2.0f64.ln(), 0.0).unwrap());
        assert!(!dp_check(&m, 1.9f64.ln(), 0.0).unwrap());
    }

    #[test]
    fn exact_count_is_never_dp() {
        let s = DatabaseSpace::binary(2).unwrap();
        let m = exact_count(&s).unwrap();
        assert!(!dp_check(&m, 10.0, 0.0).unwrap());
        // deterministic distinct outputs need delta = 1 to mask
        assert!(!dp_check(&m, 10.0, 0.5).unwrap());
    }

    #[test]
    fn publish_random_record_fails_whenever_delta_below_one_over_n() {
        for n in [2usize, 3, 4] {
            let s = DatabaseSpace::binary(n).unwrap();
            let m = publish_random_record(&s).unwrap();
            let just_below = 1.0 / n as f64 - 1e-6;
            for eps in [0.1, 1.0, 5.0, 20.0] {
                assert!(
                    !dp_check(&m, eps, just_below).unwrap(),
                    "n={n} eps={eps}: a revealed row cannot be masked by delta < 1/n"
                );
            }
            // at delta >= 1/n the single revealed coordinate is absorbed
            assert!(dp_check(&m, 0.0, 1.0 / n as f64 + 1e-12).unwrap());
        }
    }

    #[test]
    fn excess_matches_brute_force_over_all_events() {
        // Exhaustive subset check on a small alphabet: the closed form must
        // equal max over events S of P[S] - e^eps Q[S].
        let p = [0.5, 0.2, 0.2, 0.1];
        let q = [0.25, 0.25, 0.25, 0.25];
        for eps in [0.0f64, 0.1, 1.0] {
            let scale = eps.exp();
            let mut worst: f64 = 0.0;
            for mask in 0u32..16 {
                let (mut ps, mut qs) = (0.0, 0.0);
                for t in 0..4 {
                    if mask & (1 << t) != 0 {
                        ps += p[t];
                        qs += q[t];
                    }
                }
                worst = worst.max(ps - scale * qs);
            }
            assert!((one_sided_dp_excess(&p, &q, eps) - worst).abs() < 1e-12);
        }
    }

    #[test]
    fn rr_epsilon_is_tight_for_single_bit() {
        let s = DatabaseSpace::binary(1).unwrap();
        for flip in [0.1, 0.25, 0.4] {
            let m = randomized_response(&s, flip).unwrap();
            let eps = randomized_response_epsilon(flip);
            assert!(dp_check(&m, eps, 0.0).unwrap());
            assert!(!dp_check(&m, eps - 1e-6, 0.0).unwrap());
        }
    }
}
