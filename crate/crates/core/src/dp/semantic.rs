//! Bayesian semantics of differential privacy, evaluated exhaustively.
//!
//! The adversary holds a prior over databases and sees a transcript. Their
//! posterior in the real world is compared, per individual i, against the
//! posterior of a counterfactual game where row i was replaced by the default
//! row before the mechanism ran. Semantic privacy bounds the statistical
//! difference between those two posteriors on all but a small probability of
//! (database, transcript) pairs.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{
    indistinguishability_check, statistical_difference, Belief, Mechanism, CHECK_SLACK,
};

/// Bayes update of `belief` after observing transcript `t`.
pub fn posterior(belief: &Belief, mech: &Mechanism, t: usize) -> Result<Belief> {
    posterior_with(belief, mech, t, |db| mech.prob(db, t))
}

/// Bayes update in the counterfactual game where coordinate `coord` of the
/// true database is replaced by the space's default row before the mechanism
/// runs. The likelihood of D is therefore Pr[A(D with coord defaulted) = t].
pub fn posterior_game(belief: &Belief, mech: &Mechanism, coord: usize, t: usize) -> Result<Belief> {
    if coord >= mech.space.n() {
        return Err(Error::InvalidArgument(format!(
            "coordinate {coord} out of range for n = {}",
            mech.space.n()
        )));
    }
    posterior_with(belief, mech, t, |db| {
        mech.prob(mech.space.with_defaulted_coordinate(db, coord), t)
    })
}

fn posterior_with(
    belief: &Belief,
    mech: &Mechanism,
    t: usize,
    likelihood: impl Fn(usize) -> f64,
) -> Result<Belief> {
    if belief.len() != mech.space.database_count() {
        return Err(Error::InvalidArgument(format!(
            "prior over {} databases, mechanism over {}",
            belief.len(),
            mech.space.database_count()
        )));
    }
    if t >= mech.transcript_count() {
        return Err(Error::InvalidArgument(format!("transcript index {t} out of range")));
    }
    let joint: Vec<f64> = belief
        .as_slice()
        .iter()
        .enumerate()
        .map(|(db, &b)| b * likelihood(db))
        .collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability(format!(
            "transcript {:?} has zero probability under this prior",
            mech.transcripts()[t]
        )));
    }
    Belief::new(joint.into_iter().map(|j| j / total).collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SdWitness {
    /// A database with positive prior mass producing the transcript.
    pub database: usize,
    pub transcript: usize,
    /// The individual whose counterfactual posterior diverges most.
    pub coordinate: usize,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemanticPrivacyReport {
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    /// Max over positive-probability (database, transcript) pairs of the
    /// per-individual posterior divergence.
    pub worst_case_sd: f64,
    pub worst_witness: Option<SdWitness>,
    /// e^(3 eps) - 1 + 2 sqrt(delta): the semantic bound that epsilon-
    /// indistinguishability buys.
    pub eps_prime: f64,
    /// Probability mass of pairs whose divergence exceeds eps_prime.
    pub exceedance_mass_eps_prime: f64,
    /// n sqrt(delta): the order of the failure mass the bound allows.
    pub delta_prime_budget: f64,
    /// exceedance mass / budget; None when delta = 0 (budget is exactly 0
    /// and the mass itself must vanish).
    pub exceedance_ratio: Option<f64>,
    /// e^eps - 1: the tight bound for the delta = 0 case.
    pub dm_bound: f64,
    pub exceedance_mass_dm: f64,
    /// exceedance_mass_eps_prime <= delta_prime_budget (with slack).
    pub meets_eps_prime_budget: bool,
    /// worst_case_sd <= dm_bound (with slack); meaningful when delta = 0.
    pub within_dm_bound: bool,
}

/// Enumerates every transcript with positive probability under the prior and
/// measures, for each individual, how far the real posterior sits from the
/// individual's counterfactual posterior. A transcript that is impossible in
/// the counterfactual game while possible in the real world is maximal
/// evidence that the individual's data was used: it scores sd = 1.
pub fn semantic_privacy_eval(
    mech: &Mechanism,
    belief: &Belief,
    epsilon: f64,
    delta: f64,
) -> Result<SemanticPrivacyReport> {
    if belief.len() != mech.space.database_count() {
        return Err(Error::InvalidArgument(format!(
            "prior over {} databases, mechanism over {}",
            belief.len(),
            mech.space.database_count()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1], got {delta}")));
    }

    let n = mech.space.n();
    let eps_prime = (3.0 * epsilon).exp() - 1.0 + 2.0 * delta.sqrt();
    let dm_bound = epsilon.exp() - 1.0;
    let prior = belief.as_slice();

    let mut worst_case_sd = 0.0f64;
    let mut worst_witness: Option<SdWitness> = None;
    let mut exceed_prime = 0.0f64;
    let mut exceed_dm = 0.0f64;

    for t in 0..mech.transcript_count() {
        let mass: f64 = (0..prior.len()).map(|db| prior[db] * mech.prob(db, t)).sum();
        if mass <= 0.0 {
            continue;
        }
        let real = posterior(belief, mech, t)?;
        let mut sd_max = 0.0f64;
        let mut arg_i = 0usize;
        for coord in 0..n {
            let game_mass: f64 = (0..prior.len())
                .map(|db| {
                    prior[db] * mech.prob(mech.space.with_defaulted_coordinate(db, coord), t)
                })
                .sum();
            let sd = if game_mass <= 0.0 {
                1.0
            } else {
                let game = posterior_game(belief, mech, coord, t)?;
                statistical_difference(real.as_slice(), game.as_slice())?
            };
            if sd > sd_max {
                sd_max = sd;
                arg_i = coord;
            }
        }
        if sd_max > worst_case_sd || worst_witness.is_none() {
            worst_case_sd = sd_max;
            let db = (0..prior.len())
                .find(|&db| prior[db] * mech.prob(db, t) > 0.0)
                .expect("positive mass implies a positive term");
            worst_witness = Some(SdWitness { database: db, transcript: t, coordinate: arg_i, sd: sd_max });
        }
        if sd_max > eps_prime + CHECK_SLACK {
            exceed_prime += mass;
        }
        if sd_max > dm_bound + CHECK_SLACK {
            exceed_dm += mass;
        }
    }

    let budget = n as f64 * delta.sqrt();
    Ok(SemanticPrivacyReport {
        epsilon,
        delta,
        n,
        worst_case_sd,
        worst_witness,
        eps_prime,
        exceedance_mass_eps_prime: exceed_prime,
        delta_prime_budget: budget,
        exceedance_ratio: if delta > 0.0 { Some(exceed_prime / budget) } else { None },
        dm_bound,
        exceedance_mass_dm: exceed_dm,
        meets_eps_prime_budget: exceed_prime <= budget + CHECK_SLACK,
        within_dm_bound: worst_case_sd <= dm_bound + CHECK_SLACK,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GoodSetReport {
    /// Databases all of whose neighbors are (epsilon, delta)-indistinguishable.
    pub good_set_size: usize,
    pub good_set_mass: f64,
    /// Whether the prior puts at least 1 - delta on the good set, the
    /// hypothesis under which the semantic guarantee applies.
    pub condition_met: bool,
    pub semantic: Option<SemanticPrivacyReport>,
}

/// Relaxation for mechanisms that are only indistinguishable on typical
/// inputs: finds the good set, weighs it under the prior, and runs the
/// semantic evaluation when the prior mostly lives there.
pub fn good_set_semantic_eval(
    mech: &Mechanism,
    belief: &Belief,
    epsilon: f64,
    delta: f64,
) -> Result<GoodSetReport> {
    if belief.len() != mech.space.database_count() {
        return Err(Error::InvalidArgument(format!(
            "prior over {} databases, mechanism over {}",
            belief.len(),
            mech.space.database_count()
        )));
    }
    let count = mech.space.database_count();
    let mut good = vec![true; count];
    for (a, b) in mech.space.neighbor_pairs() {
        if !indistinguishability_check(mech.row(a), mech.row(b), epsilon, delta)? {
            good[a] = false;
            good[b] = false;
        }
    }
    let good_set_size = good.iter().filter(|&&g| g).count();
    let good_set_mass: f64 = belief
        .as_slice()
        .iter()
        .zip(&good)
        .filter(|(_, &g)| g)
        .map(|(&b, _)| b)
        .sum();
    let condition_met = good_set_mass + CHECK_SLACK >= 1.0 - delta;
    let semantic = if condition_met {
        Some(semantic_privacy_eval(mech, belief, epsilon, delta)?)
    } else {
        None
    };
    Ok(GoodSetReport { good_set_size, good_set_mass, condition_met, semantic })
}
