//! The acceptance gate. Each test is one criterion and prints a single
//! verdict line (run with `-- --nocapture` to see them alongside the harness
//! output). Criterion 6 needs external census extracts and reports SKIP when
//! they are not present.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use releak::anonymizer::{
    check_entropy_l_diversity, check_k_anonymity, check_t_closeness, microaggregate,
    mondrian_anonymize, GeneralizedValue, Release, Scheme,
};
use releak::attack::{intersection_attack, population_from_table, pvp, AttackReport};
use releak::dataset::{sample_overlapping_subsets, OverlapDesign, Schema, Table};
use releak::dp::{
    dp_check, indistinguishability_check, publish_random_record, randomized_response,
    randomized_response_epsilon, semantic_privacy_eval, statistical_difference,
    truncated_geometric_counter, Belief, DatabaseSpace,
};
use releak::experiment::{run_entropy_study, ExperimentConfig, SyntheticSpec};

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn verdict(criterion: usize, what: &str) {
    println!("[acceptance] criterion {criterion:2}: PASS  ({what})");
}

fn skip(criterion: usize, why: &str) {
    println!("[acceptance] criterion {criterion:2}: SKIP  ({why})");
}

fn hospital_tables() -> (Table, Table) {
    let schema = Arc::new(Schema::from_file(fixture("hospital.schema")).unwrap());
    let t1 = Table::load_csv(fixture("hospital1.csv"), Arc::clone(&schema)).unwrap();
    let t2 = Table::load_csv(fixture("hospital2.csv"), schema).unwrap();
    (t1, t2)
}

/// Laws every attack report must satisfy, regardless of how it was produced.
fn assert_metric_laws(report: &AttackReport) {
    for o in &report.outcomes {
        if !o.located_in_all {
            assert!(o.sensitive_sets.is_empty() && o.intersection.is_empty());
            assert_eq!(o.anonymity_drop, 0);
            continue;
        }
        // The intersection is contained in every per-release set.
        for set in &o.sensitive_sets {
            let set: BTreeSet<&String> = set.iter().collect();
            for v in &o.intersection {
                assert!(set.contains(v), "intersection escapes a per-release set");
            }
        }
        assert_eq!(o.posterior_ea, o.intersection.len());
        let min_prior = o.prior_ea.iter().min().copied().unwrap();
        assert!(o.posterior_ea <= min_prior);
        assert_eq!(o.anonymity_drop, min_prior - o.posterior_ea);
        if o.posterior_ea > 0 {
            assert!((o.confidence - 1.0 / o.posterior_ea as f64).abs() < 1e-12);
        } else {
            assert_eq!(o.confidence, 0.0);
        }
    }
    // PVP is non-increasing in the confidence threshold.
    let mut sorted = report.aggregates.pvp.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        if let (Some(lo), Some(hi)) = (w[0].1, w[1].1) {
            assert!(lo >= hi - 1e-9, "pvp increased with the threshold");
        }
    }
}

#[test]
fn criterion_01_two_hospital_releases_pin_down_the_target() {
    let start = Instant::now();
    let (t1, t2) = hospital_tables();
    let r1 = mondrian_anonymize(&t1, 4, None, None).unwrap();
    let r2 = mondrian_anonymize(&t2, 6, None, None).unwrap();

    let age_intervals = |r: &Release| -> Vec<(i64, i64)> {
        r.classes
            .iter()
            .map(|c| match c.recoded_qi[1] {
                GeneralizedValue::Interval { lo, hi } => (lo, hi),
                ref other => panic!("age recoded as {other:?}"),
            })
            .collect()
    };
    assert_eq!(r1.classes.len(), 3);
    assert!(r1.classes.iter().all(|c| c.size() == 4));
    assert_eq!(age_intervals(&r1), vec![(25, 29), (31, 31), (42, 49)]);
    assert_eq!(r2.classes.len(), 2);
    assert!(r2.classes.iter().all(|c| c.size() == 6));
    assert_eq!(age_intervals(&r2), vec![(26, 34), (36, 47)]);

    // The target: zip 13012, age 28, nationality "*" (record 3 in both files).
    let star = 0i64;
    let population = vec![(3u64, vec![13012, 28, star])];
    let report = intersection_attack(
        &[r1, r2],
        &population,
        &releak::attack::DEFAULT_CONFIDENCE_GRID,
    )
    .unwrap();
    assert_metric_laws(&report);

    let o = &report.outcomes[0];
    assert!(o.located_in_all && !o.ambiguous_in_any);
    let as_set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
    assert_eq!(
        as_set(&o.sensitive_sets[0]),
        ["AIDS", "Heart Disease", "Viral Infection"].iter().map(|s| s.to_string()).collect()
    );
    assert_eq!(
        as_set(&o.sensitive_sets[1]),
        ["AIDS", "Cancer", "Flu", "Tuberculosis"].iter().map(|s| s.to_string()).collect()
    );
    assert_eq!(o.intersection, vec!["AIDS".to_string()]);
    assert_eq!(o.prior_ea, vec![3, 4]);
    assert_eq!(o.posterior_ea, 1);
    assert_eq!(o.anonymity_drop, 2);
    assert_eq!(o.confidence, 1.0);
    assert_eq!(pvp(&report, 1.0).unwrap(), 100.0);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1s");
    verdict(1, "both hospital releases intersect to the single condition, in time");
}

fn random_spec(rng: &mut ChaCha8Rng, max_records: usize) -> SyntheticSpec {
    let qi_count = rng.random_range(1..=5);
    let sensitive_domain = rng.random_range(2..=12);
    let max_h = (sensitive_domain as f64).ln();
    SyntheticSpec {
        records: rng.random_range(10..=max_records),
        qi_domains: (0..qi_count).map(|_| rng.random_range(2..=32)).collect(),
        sensitive_domain,
        entropy: rng.random_range(0.0..max_h * 0.95),
        correlation: rng.random_range(0.0..1.0),
    }
}

#[test]
fn criterion_02_constraints_hold_on_random_tables() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for case in 0..100 {
        let spec = random_spec(&mut rng, 500);
        let table = releak::experiment::generate_synthetic(
            &spec,
            rng.random::<u64>(),
            rng.random::<u64>(),
        )
        .unwrap();
        let k = rng.random_range(2..=10.min(table.len()));

        let release = mondrian_anonymize(&table, k, None, None).unwrap();
        assert!(check_k_anonymity(&release, k), "case {case}: k-anonymity broken");

        // Feasible entropy floor: at most the whole-table sensitive entropy.
        let h = table.attribute_entropy(&table.schema.sensitive().name).unwrap();
        if h > 0.05 {
            let ell = (h * rng.random_range(0.2..0.9)).exp();
            let rl = mondrian_anonymize(&table, k, Some(ell), None).unwrap();
            assert!(check_k_anonymity(&rl, k));
            assert!(
                check_entropy_l_diversity(&rl, ell).unwrap(),
                "case {case}: diversity floor broken"
            );
        }
        let t = rng.random_range(0.2..1.0);
        let rt = mondrian_anonymize(&table, k, None, Some(t)).unwrap();
        assert!(check_k_anonymity(&rt, k));
        assert!(check_t_closeness(&rt, t).unwrap(), "case {case}: closeness ceiling broken");

        if table.len() >= k {
            let rm = microaggregate(&table, k).unwrap();
            for class in &rm.classes {
                assert!(
                    class.size() >= k && class.size() <= 2 * k - 1,
                    "case {case}: cluster of size {} for k = {k}",
                    class.size()
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30s");
    verdict(2, "100 random tables: declared guarantees verified, cluster sizes in range");
}

/// Brute-force attack oracle: locates by definition (full scan), materializes
/// explicit sensitive sets, and intersects them. Shares no code with the
/// library's per-individual pipeline.
mod oracle {
    use super::*;

    pub struct Row {
        pub located: bool,
        pub classes: Vec<Option<usize>>,
        pub sets: Vec<BTreeSet<i64>>,
        pub intersection: BTreeSet<i64>,
    }

    fn covers(g: &GeneralizedValue, v: i64) -> bool {
        match g {
            GeneralizedValue::Interval { lo, hi } => *lo <= v && v <= *hi,
            GeneralizedValue::ValueSet { values } => values.contains(&v),
            GeneralizedValue::Suppressed => true,
            GeneralizedValue::Centroid { .. } => false,
        }
    }

    fn locate(release: &Release, qi: &[i64]) -> Option<usize> {
        match release.scheme {
            Scheme::Mondrian => (0..release.classes.len()).find(|&i| {
                release.classes[i].recoded_qi.iter().zip(qi).all(|(g, &v)| covers(g, v))
            }),
            Scheme::Microaggregation => {
                let nz = release.normalization.as_ref().unwrap();
                let mut best: Option<(f64, usize)> = None;
                for (i, class) in release.classes.iter().enumerate() {
                    let mut d2 = 0.0;
                    for ((g, &v), z) in class.recoded_qi.iter().zip(qi).zip(nz) {
                        let c = match g {
                            GeneralizedValue::Centroid { value } => *value,
                            _ => unreachable!(),
                        };
                        if z.std_dev > 0.0 {
                            d2 += ((v as f64 - c) / z.std_dev).powi(2);
                        }
                    }
                    match best {
                        Some((bd, _)) if d2 >= bd => {}
                        _ => best = Some((d2, i)),
                    }
                }
                best.map(|(_, i)| i)
            }
        }
    }

    pub fn attack(releases: &[Release], population: &[(u64, Vec<i64>)]) -> Vec<Row> {
        population
            .iter()
            .map(|(_, qi)| {
                let classes: Vec<Option<usize>> =
                    releases.iter().map(|r| locate(r, qi)).collect();
                let located = classes.iter().all(|c| c.is_some());
                if !located {
                    return Row {
                        located,
                        classes,
                        sets: Vec::new(),
                        intersection: BTreeSet::new(),
                    };
                }
                let sets: Vec<BTreeSet<i64>> = classes
                    .iter()
                    .zip(releases)
                    .map(|(c, r)| {
                        r.classes[c.unwrap()].sensitive_values.iter().copied().collect()
                    })
                    .collect();
                let intersection = sets
                    .iter()
                    .skip(1)
                    .fold(sets[0].clone(), |acc, s| acc.intersection(s).copied().collect());
                Row { located, classes, sets, intersection }
            })
            .collect()
    }
}

#[test]
fn criterion_03_attack_agrees_with_the_brute_force_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for case in 0..50 {
        let sensitive_domain = rng.random_range(3..=6);
        let spec = SyntheticSpec {
            records: rng.random_range(16..=30),
            qi_domains: vec![rng.random_range(3..=10), rng.random_range(3..=10)],
            sensitive_domain,
            entropy: rng.random_range(0.3..0.95) * (sensitive_domain as f64).ln(),
            correlation: rng.random_range(0.0..1.0),
        };
        let table = releak::experiment::generate_synthetic(
            &spec,
            rng.random::<u64>(),
            rng.random::<u64>(),
        )
        .unwrap();
        let n_releases = rng.random_range(2..=4);
        let overlap = rng.random_range(4..=8).min(table.len() / 2);
        let sizes: Vec<usize> = (0..n_releases)
            .map(|_| rng.random_range(overlap..=table.len()))
            .collect();
        let design =
            OverlapDesign { subset_sizes: sizes, overlap_size: overlap, seed: rng.random() };
        let sample = sample_overlapping_subsets(&table, &design).unwrap();
        let k = rng.random_range(2..=3);
        let releases: Vec<Release> = sample
            .subsets
            .iter()
            .map(|s| {
                if rng.random_bool(0.5) {
                    mondrian_anonymize(s, k, None, None).unwrap()
                } else {
                    microaggregate(s, k).unwrap()
                }
            })
            .collect();
        let population = population_from_table(&table, &sample.overlap_ids).unwrap();

        let report = intersection_attack(&releases, &population, &[1.0, 0.5]).unwrap();
        assert_metric_laws(&report);
        let expected = oracle::attack(&releases, &population);

        assert_eq!(report.outcomes.len(), expected.len());
        let sensitive = table.schema.sensitive().clone();
        for (o, e) in report.outcomes.iter().zip(&expected) {
            assert_eq!(o.located_in_all, e.located, "case {case}");
            assert_eq!(o.class_indices, e.classes, "case {case}");
            let labels = |s: &BTreeSet<i64>| {
                s.iter().map(|&v| sensitive.label_for(v)).collect::<Vec<_>>()
            };
            assert_eq!(
                o.sensitive_sets,
                e.sets.iter().map(labels).collect::<Vec<_>>(),
                "case {case}"
            );
            assert_eq!(o.intersection, labels(&e.intersection), "case {case}");
            assert_eq!(o.posterior_ea, e.intersection.len(), "case {case}");
        }
        // Aggregates recomputed naively from the oracle rows.
        let located: Vec<&oracle::Row> = expected.iter().filter(|r| r.located).collect();
        assert_eq!(report.aggregates.located, located.len());
        if !located.is_empty() {
            let hits = located.iter().filter(|r| r.intersection.len() == 1).count();
            let expected_pvp = 100.0 * hits as f64 / located.len() as f64;
            assert!((pvp(&report, 1.0).unwrap() - expected_pvp).abs() < 1e-9, "case {case}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    verdict(3, "50 random instances match the explicit-set oracle exactly");
}

#[test]
fn criterion_04_metric_laws_and_release_count_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let spec = SyntheticSpec {
        records: 400,
        qi_domains: vec![16, 12],
        sensitive_domain: 10,
        entropy: 1.8,
        correlation: 0.4,
    };
    for round in 0..5 {
        let table = releak::experiment::generate_synthetic(
            &spec,
            rng.random::<u64>(),
            rng.random::<u64>(),
        )
        .unwrap();
        let design = OverlapDesign {
            subset_sizes: vec![160; 4],
            overlap_size: 80,
            seed: rng.random(),
        };
        let sample = sample_overlapping_subsets(&table, &design).unwrap();
        let releases: Vec<Release> = sample
            .subsets
            .iter()
            .map(|s| mondrian_anonymize(s, 4, None, None).unwrap())
            .collect();
        let population = population_from_table(&table, &sample.overlap_ids).unwrap();

        let mut last: Option<AttackReport> = None;
        for n in 2..=4 {
            let report =
                intersection_attack(&releases[..n], &population, &[1.0, 0.5, 0.25]).unwrap();
            assert_metric_laws(&report);
            // Partition recoding always locates its own members.
            assert_eq!(report.aggregates.located, population.len(), "round {round}");
            if let Some(prev) = &last {
                for (a, b) in prev.outcomes.iter().zip(&report.outcomes) {
                    assert!(
                        b.posterior_ea <= a.posterior_ea,
                        "round {round}: posterior anonymity grew from n = {} to {n}",
                        n - 1
                    );
                }
                for ((c_prev, p_prev), (c_now, p_now)) in
                    prev.aggregates.pvp.iter().zip(&report.aggregates.pvp)
                {
                    assert_eq!(c_prev, c_now);
                    assert!(
                        p_now.unwrap() >= p_prev.unwrap() - 1e-9,
                        "round {round}: pvp at {c_now} fell as releases grew"
                    );
                }
                assert!(
                    report.aggregates.avg_posterior_ea.unwrap()
                        <= prev.aggregates.avg_posterior_ea.unwrap() + 1e-12
                );
            }
            last = Some(report);
        }
    }
    verdict(4, "set containment, non-negative drop, and n = 2..4 monotonicity hold");
}

#[test]
fn criterion_05_pinning_rate_decays_with_k() {
    let start = Instant::now();
    let ks = [2usize, 5, 10, 15];
    let seeds = 5u64;
    let spec = SyntheticSpec {
        records: 2000,
        qi_domains: vec![32, 16, 8],
        sensitive_domain: 12,
        entropy: (12f64).ln() * 0.9,
        correlation: 0.3,
    };
    let mut avg = vec![0.0f64; ks.len()];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005 ^ seed);
        let table = releak::experiment::generate_synthetic(
            &spec,
            rng.random::<u64>(),
            rng.random::<u64>(),
        )
        .unwrap();
        let design = OverlapDesign {
            subset_sizes: vec![800, 800],
            overlap_size: 400,
            seed: rng.random(),
        };
        let sample = sample_overlapping_subsets(&table, &design).unwrap();
        let population = population_from_table(&table, &sample.overlap_ids).unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let releases: Vec<Release> = sample
                .subsets
                .iter()
                .map(|s| mondrian_anonymize(s, k, None, None).unwrap())
                .collect();
            let report =
                intersection_attack(&releases, &population, &[1.0, 0.5, 0.25]).unwrap();
            assert_metric_laws(&report);
            // Thresholds loosen monotonically within one cell.
            let p100 = pvp(&report, 1.0).unwrap();
            let p50 = pvp(&report, 0.5).unwrap();
            let p25 = pvp(&report, 0.25).unwrap();
            assert!(p25 >= p50 - 1e-9 && p50 >= p100 - 1e-9, "seed {seed} k {k}");
            avg[i] += p100 / seeds as f64;
        }
    }
    for w in avg.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "average pinning rate rose with k: {avg:?}");
    }
    assert!(
        avg[ks.len() - 1] < avg[0],
        "no overall decay across the k grid: {avg:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}, budget 2min");
    verdict(5, "five-seed average pinning rate decays over the k grid");
}

#[test]
fn criterion_06_external_census_extracts() {
    let base = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/external");
    let adult = (base.join("adult.csv"), base.join("adult.schema"));
    let ipums = (base.join("ipums.csv"), base.join("ipums.schema"));
    if !(adult.0.exists() && adult.1.exists()) && !(ipums.0.exists() && ipums.1.exists()) {
        skip(6, "no census extracts under data/external");
        return;
    }

    let run = |csv: &std::path::Path, schema: &std::path::Path, seed: u64| -> AttackReport {
        let schema = Arc::new(Schema::from_file(schema).unwrap());
        let table = Table::load_csv(csv, schema).unwrap();
        let half = (table.len() / 2).min(5000 + (table.len() - 5000) / 2);
        let design = OverlapDesign {
            subset_sizes: vec![half, half],
            overlap_size: 5000,
            seed,
        };
        let sample = sample_overlapping_subsets(&table, &design).unwrap();
        let releases: Vec<Release> = sample
            .subsets
            .iter()
            .map(|s| mondrian_anonymize(s, 5, None, None).unwrap())
            .collect();
        let population = population_from_table(&table, &sample.overlap_ids).unwrap();
        intersection_attack(&releases, &population, &[1.0, 0.5, 0.25]).unwrap()
    };

    if adult.0.exists() && adult.1.exists() {
        let report = run(&adult.0, &adult.1, 60);
        assert_metric_laws(&report);
        let p100 = pvp(&report, 1.0).unwrap();
        assert!((5.0..=25.0).contains(&p100), "adult pinning rate {p100}");
    }
    if ipums.0.exists() && ipums.1.exists() {
        let report = run(&ipums.0, &ipums.1, 61);
        assert_metric_laws(&report);
        let p100 = pvp(&report, 1.0).unwrap();
        let p25 = pvp(&report, 0.25).unwrap();
        assert!((40.0..=75.0).contains(&p100), "ipums pinning rate {p100}");
        assert!(p25 >= 85.0, "ipums quarter-confidence rate {p25}");
        // Entropy spot checks; tolerance covers the log-base ambiguity.
        let schema = Arc::new(Schema::from_file(&ipums.1).unwrap());
        let table = Table::load_csv(&ipums.0, schema).unwrap();
        for (name, expect) in [("occupation", 4.30), ("industry", 4.35), ("income", 5.56)] {
            if table.schema.attribute_index(name).is_some() {
                let h = table.attribute_entropy(name).unwrap();
                let h2 = h / 2f64.ln();
                assert!(
                    (h - expect).abs() <= 0.05 || (h2 - expect).abs() <= 0.05,
                    "{name}: entropy {h} nats / {h2} bits vs {expect}"
                );
            }
        }
    }
    verdict(6, "census extracts fall in the published ranges");
}

#[test]
fn criterion_07_checkers_match_subset_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    for case in 0..200 {
        let m = rng.random_range(2..=12);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().ln()).collect();
            // Occasional hard zeros exercise the support edge cases.
            if rng.random_bool(0.3) {
                let i = rng.random_range(0..m);
                v[i] = 0.0;
            }
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let eps: f64 = rng.random_range(0.0..2.0);
        let delta: f64 = rng.random_range(0.0..0.3);

        // Event-wise oracles over all 2^m subsets.
        let mut worst_pq = 0.0f64;
        let mut worst_qp = 0.0f64;
        let mut worst_abs = 0.0f64;
        for mask in 0u32..(1 << m) {
            let (mut ps, mut qs) = (0.0, 0.0);
            for t in 0..m {
                if mask & (1 << t) != 0 {
                    ps += p[t];
                    qs += q[t];
                }
            }
            worst_pq = worst_pq.max(ps - eps.exp() * qs);
            worst_qp = worst_qp.max(qs - eps.exp() * ps);
            worst_abs = worst_abs.max((ps - qs).abs());
        }
        let expect_pass = worst_pq <= delta + 1e-9 && worst_qp <= delta + 1e-9;
        assert_eq!(
            indistinguishability_check(&p, &q, eps, delta).unwrap(),
            expect_pass,
            "case {case}: verdict diverges from subset enumeration"
        );
        let sd = statistical_difference(&p, &q).unwrap();
        assert!(
            (sd - worst_abs).abs() < 1e-9,
            "case {case}: sd {sd} vs enumerated {worst_abs}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    verdict(7, "200 distribution pairs agree with 2^|T| event enumeration");
}

#[test]
fn criterion_08_posterior_divergence_stays_under_the_bound() {
    let start = Instant::now();
    let mut combos: Vec<(String, DatabaseSpace, f64)> = Vec::new();
    for n in [1usize, 2, 3] {
        for flip in [0.1, 0.25, 0.4] {
            combos.push((
                format!("rr n={n} p={flip}"),
                DatabaseSpace::binary(n).unwrap(),
                flip,
            ));
        }
    }
    let mut checked = 0usize;
    for (desc, space, flip) in combos {
        let eps = randomized_response_epsilon(flip);
        run_theorem_battery(&desc, |default_row| {
            let space = space.with_default_row(default_row).unwrap();
            (randomized_response(&space, flip).unwrap(), eps)
        });
        checked += 1;
        let _ = eps;
    }
    for n in [2usize, 3] {
        for eps in [2f64.ln(), 3f64.ln()] {
            let space = DatabaseSpace::binary(n).unwrap();
            run_theorem_battery(&format!("geometric n={n} eps={eps:.3}"), |default_row| {
                let space = space.with_default_row(default_row).unwrap();
                (truncated_geometric_counter(&space, eps).unwrap(), eps)
            });
            checked += 1;
        }
    }
    assert_eq!(checked, 13);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 1min");
    verdict(8, "13 mechanism instances x 3 priors x 2 default rows stay within e^eps - 1");
}

/// Shared battery for criterion 8: both default rows, three priors each.
fn run_theorem_battery<F>(desc: &str, build: F)
where
    F: Fn(usize) -> (releak::dp::Mechanism, f64),
{
    let mut verdicts = Vec::new();
    for default_row in [0usize, 1] {
        let (mech, eps) = build(default_row);
        assert!(
            dp_check(&mech, eps, 0.0).unwrap(),
            "{desc}: fails its analytic epsilon"
        );
        let priors = [
            ("uniform", Belief::uniform(&mech.space)),
            ("seeded", Belief::seeded_random(&mech.space, 0xbead)),
            (
                "mixture",
                Belief::point_mass_mixture(&mech.space, mech.space.database_count() - 1, 0.9)
                    .unwrap(),
            ),
        ];
        for (pname, prior) in priors {
            let report = semantic_privacy_eval(&mech, &prior, eps, 0.0).unwrap();
            let bound = eps.exp() - 1.0;
            assert!(
                report.worst_case_sd <= bound + 1e-9,
                "{desc} prior {pname} default {default_row}: sd {} > {bound}",
                report.worst_case_sd
            );
            assert!(report.within_dm_bound);
            assert!(
                report.exceedance_mass_dm <= 1e-12,
                "{desc} prior {pname}: exceedance mass {}",
                report.exceedance_mass_dm
            );
            verdicts.push((pname, report.within_dm_bound));
        }
    }
    // The verdict battery must not depend on the default-row choice.
    let half = verdicts.len() / 2;
    assert_eq!(&verdicts[..half], &verdicts[half..], "{desc}: default row changed a verdict");
}

#[test]
fn criterion_09_publishing_a_record_is_not_private() {
    let space = DatabaseSpace::binary(3).unwrap();
    let mech = publish_random_record(&space).unwrap();
    for eps in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
        assert!(
            !dp_check(&mech, eps, 0.1).unwrap(),
            "passed at eps = {eps}, delta = 0.1"
        );
    }
    let report =
        semantic_privacy_eval(&mech, &Belief::uniform(&mech.space), 5.0, 0.1).unwrap();
    assert_eq!(report.worst_case_sd, 1.0);
    let w = report.worst_witness.expect("a witness must accompany the worst case");
    assert_eq!(w.sd, 1.0);
    // The witness transcript names a row value the defaulted game cannot emit.
    let label = &mech.transcripts()[w.transcript];
    assert!(label.ends_with("= 1"), "witness transcript {label:?}");
    verdict(9, "record-publishing fails every eps <= 5 at delta 0.1 with a full-divergence witness");
}

#[test]
fn criterion_10_drop_rises_with_sensitive_entropy() {
    let cfg = ExperimentConfig {
        records: 800,
        qi_domains: vec![16, 12],
        sensitive_domain: 12,
        correlation: 0.3,
        k: vec![5],
        overlap: 200,
        entropy_levels: vec![0.0, 1.0, 2.0],
        seed: 0x5eed_0010,
        seed_count: 5,
        ..Default::default()
    };
    let out = run_entropy_study(&cfg).unwrap();
    assert_eq!(out.error_cells(), 0, "study cells failed");
    let mean_drop = |level: f64| -> f64 {
        let vals: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.entropy == Some(level) && r.metric == "avg_anonymity_drop")
            .map(|r| r.value.unwrap())
            .collect();
        assert_eq!(vals.len(), 5, "expected one row per replicate at level {level}");
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let d0 = mean_drop(0.0);
    let d1 = mean_drop(1.0);
    let d2 = mean_drop(2.0);
    assert_eq!(d0, 0.0, "constant sensitive column cannot lose anonymity");
    assert!(d1 >= d0 && d2 >= d1 - 1e-9, "drop not monotone: {d0} {d1} {d2}");
    verdict(10, "five-seed average anonymity drop is 0 at entropy 0 and non-decreasing");
}
