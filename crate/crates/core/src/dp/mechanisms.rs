//! Reference mechanisms, materialized as explicit probability matrices.

use crate::error::{Error, Result};

use super::{DatabaseSpace, Mechanism};

fn require_binary(space: &DatabaseSpace) -> Result<()> {
    if space.domain_size() != 2 {
        return Err(Error::InvalidArgument(format!(
            "mechanism requires a binary row domain, got {} values",
            space.domain_size()
        )));
    }
    Ok(())
}

/// Per-row randomized response: each bit is kept with probability 1 - flip
/// and inverted with probability flip; the transcript is the full output
/// vector. Satisfies epsilon-DP with epsilon = ln((1-flip)/flip) and delta 0.
pub fn randomized_response(space: &DatabaseSpace, flip: f64) -> Result<Mechanism> {
    require_binary(space)?;
    if !(flip > 0.0 && flip <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "flip probability must lie in (0, 0.5], got {flip}"
        )));
    }
    let count = space.database_count();
    let transcripts: Vec<String> = (0..count)
        .map(|t| space.decode(t).iter().map(|r| r.to_string()).collect::<String>())
        .collect();
    let prob = (0..count)
        .map(|db| {
            let rows = space.decode(db);
            (0..count)
                .map(|t| {
                    let out = space.decode(t);
                    rows.iter()
                        .zip(&out)
                        .map(|(&a, &b)| if a == b { 1.0 - flip } else { flip })
                        .product()
                })
                .collect()
        })
        .collect();
    Mechanism::new(space.clone(), transcripts, prob)
}

/// The epsilon that randomized response with this flip probability attains.
pub fn randomized_response_epsilon(flip: f64) -> f64 {
    ((1.0 - flip) / flip).ln()
}

/// Noisy population count: true count of 1-rows plus two-sided geometric
/// noise with ratio exp(-epsilon), with all mass outside [0, n] clamped to
/// the nearest endpoint. Output alphabet is {0, ..., n}.
pub fn truncated_geometric_counter(space: &DatabaseSpace, epsilon: f64) -> Result<Mechanism> {
    require_binary(space)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = space.n();
    let alpha = (-epsilon).exp();
    // Interior: Pr[noise = z] = (1-a)/(1+a) a^|z|. Clamped tails:
    // Pr[noise <= -m] = Pr[noise >= m] = a^m / (1+a) for m >= 1.
    let interior = |z: i64| (1.0 - alpha) / (1.0 + alpha) * alpha.powi(z.unsigned_abs() as i32);
    let tail = |m: i64| {
        debug_assert!(m >= 0);
        if m == 0 {
            // everything at or below the point itself
            1.0 / (1.0 + alpha)
        } else {
            alpha.powi(m as i32) / (1.0 + alpha)
        }
    };
    let transcripts: Vec<String> = (0..=n).map(|j| j.to_string()).collect();
    let prob = (0..space.database_count())
        .map(|db| {
            let c = space.decode(db).iter().filter(|&&r| r == 1).count() as i64;
            (0..=n as i64)
                .map(|j| {
                    if j == 0 {
                        tail(c)
                    } else if j == n as i64 {
                        tail(n as i64 - c)
                    } else {
                        interior(j - c)
                    }
                })
                .collect()
        })
        .collect();
    Mechanism::new(space.clone(), transcripts, prob)
}

/// Deterministic exact count of 1-rows. Not differentially private for any
/// finite parameters: a negative control.
pub fn exact_count(space: &DatabaseSpace) -> Result<Mechanism> {
    require_binary(space)?;
    let n = space.n();
    let transcripts: Vec<String> = (0..=n).map(|j| j.to_string()).collect();
    let prob = (0..space.database_count())
        .map(|db| {
            let c = space.decode(db).iter().filter(|&&r| r == 1).count();
            (0..=n).map(|j| if j == c { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    Mechanism::new(space.clone(), transcripts, prob)
}

/// Publishes one uniformly chosen row together with its position: the
/// canonical mechanism that leaks a random individual outright. Fails
/// (epsilon, delta)-DP for every epsilon whenever delta < 1/n.
pub fn publish_random_record(space: &DatabaseSpace) -> Result<Mechanism> {
    let n = space.n();
    let d = space.domain_size();
    let transcripts: Vec<String> = (0..n)
        .flat_map(|i| space.domain().iter().map(move |l| format!("row {i} = {l}")))
        .collect();
    let prob = (0..space.database_count())
        .map(|db| {
            let rows = space.decode(db);
            (0..n)
                .flat_map(|i| {
                    let row = rows[i];
                    (0..d).map(move |v| if v == row { 1.0 / n as f64 } else { 0.0 })
                })
                .collect()
        })
        .collect();
    Mechanism::new(space.clone(), transcripts, prob)
}
