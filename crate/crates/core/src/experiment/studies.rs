//! The study runners behind the CLI subcommands. Each expands its config
//! grid into cells, runs them in parallel, and folds the results into one
//! StudyOutput. A cell that errors contributes a single row with
//! metric = "error" instead of aborting the study; cell seeds depend only on
//! grid position, so neither worker count nor failures elsewhere change any
//! result.

use std::sync::Arc;

use rayon::prelude::*;

use crate::anonymizer::{microaggregate, mondrian_anonymize, Release, Scheme};
use crate::attack::{intersection_attack, population_from_table, AttackReport};
use crate::dataset::{sample_overlapping_subsets, OverlapDesign, Table};
use crate::dp::{
    dp_check, good_set_semantic_eval, publish_random_record, randomized_response,
    randomized_response_epsilon, semantic_privacy_eval, truncated_geometric_counter, Belief,
    DatabaseSpace, Mechanism,
};
use crate::error::{Error, Result};

use super::config::{config_hash, ExperimentConfig};
use super::report::{ReportRow, StudyOutput};
use super::synth::generate_synthetic;
use super::cell_seed;

fn parse_scenario(s: &str) -> Result<Vec<Scheme>> {
    let mut schemes = Vec::new();
    for token in s.split('+') {
        match token.trim() {
            "mondrian" => schemes.push(Scheme::Mondrian),
            "micro" | "microaggregation" | "mdav" => schemes.push(Scheme::Microaggregation),
            other => {
                return Err(Error::Config(format!(
                    "unknown scheme {other:?} in scenario {s:?}"
                )))
            }
        }
    }
    if schemes.is_empty() {
        return Err(Error::Config(format!("empty scenario {s:?}")));
    }
    Ok(schemes)
}

fn anonymize_one(table: &Table, scheme: Scheme, k: usize, ell: Option<f64>, t: Option<f64>) -> Result<Release> {
    match scheme {
        Scheme::Mondrian => mondrian_anonymize(table, k, ell, t),
        // Microaggregation carries no diversity/closeness knobs.
        Scheme::Microaggregation => microaggregate(table, k),
    }
}

/// Samples the subsets for one cell and anonymizes each, cycling through the
/// scenario's schemes. Returns the releases and the attacked population.
fn build_attack_inputs(
    source: &Table,
    schemes: &[Scheme],
    n_releases: usize,
    cfg: &ExperimentConfig,
    design_seed: u64,
    k: usize,
    ell: Option<f64>,
    t: Option<f64>,
) -> Result<(Vec<Release>, Vec<(u64, Vec<i64>)>)> {
    let sizes: Vec<usize> = (0..n_releases).map(|j| cfg.subset_size(j)).collect();
    let design = OverlapDesign { subset_sizes: sizes, overlap_size: cfg.overlap, seed: design_seed };
    let sample = sample_overlapping_subsets(source, &design)?;
    let mut releases = Vec::with_capacity(sample.subsets.len());
    for (j, subset) in sample.subsets.iter().enumerate() {
        releases.push(anonymize_one(subset, schemes[j % schemes.len()], k, ell, t)?);
    }
    let population = population_from_table(source, &sample.overlap_ids)?;
    Ok((releases, population))
}

/// The standard metric rows every attack-based study reports. `base` carries
/// the cell coordinates already filled in.
fn attack_rows(base: &ReportRow, report: &AttackReport) -> Vec<ReportRow> {
    let agg = &report.aggregates;
    let mut rows = vec![
        base.clone().metric("population", agg.population as f64),
        base.clone().metric("located", agg.located as f64),
        base.clone().metric("not_located", agg.not_located as f64),
        base.clone().metric("ambiguous", agg.ambiguous as f64),
        base.clone().metric("vulnerable", agg.vulnerable as f64),
    ];
    for &(level, value) in &agg.pvp {
        if let Some(v) = value {
            let mut r = base.clone().metric("pvp", v);
            r.confidence = Some(level);
            rows.push(r);
        }
    }
    if let Some(v) = agg.avg_posterior_ea {
        rows.push(base.clone().metric("avg_posterior_ea", v));
    }
    if let Some(v) = agg.avg_anonymity_drop {
        rows.push(base.clone().metric("avg_anonymity_drop", v));
    }
    for (j, v) in agg.avg_prior_ea.iter().enumerate() {
        if let Some(v) = v {
            let mut r = base.clone().metric("avg_prior_ea", *v);
            r.release = Some(j);
            rows.push(r);
        }
    }
    for (j, v) in agg.avg_class_size.iter().enumerate() {
        if let Some(v) = v {
            let mut r = base.clone().metric("avg_class_size", *v);
            r.release = Some(j);
            rows.push(r);
        }
    }
    for (j, v) in agg.locator_hit_rate.iter().enumerate() {
        if let Some(v) = v {
            let mut r = base.clone().metric("locator_hit_rate", *v);
            r.release = Some(j);
            rows.push(r);
        }
    }
    rows
}

/// Runs `f` over the cells in parallel, mapping each error to a single
/// metric = "error" row for that cell.
fn run_cells<C, F>(cells: &[(u64, C)], f: F) -> Vec<ReportRow>
where
    C: Sync,
    F: Fn(u64, &C) -> (ReportRow, Result<Vec<ReportRow>>) + Sync,
{
    let nested: Vec<Vec<ReportRow>> = cells
        .par_iter()
        .map(|(idx, cell)| {
            let (base, result) = f(*idx, cell);
            result.unwrap_or_else(|e| vec![base.error(&e.to_string())])
        })
        .collect();
    nested.into_iter().flatten().collect()
}

/// One source table per replicate. File-backed sources are identical across
/// replicates; synthetic sources are redrawn from the replicate seed.
fn source_tables(cfg: &ExperimentConfig, study: &str) -> Result<Vec<Arc<Table>>> {
    let mut tables = Vec::with_capacity(cfg.seed_count.max(1));
    for rep in 0..cfg.seed_count.max(1) as u64 {
        let qi_seed = cell_seed(cfg.seed, study, u64::MAX, rep);
        let s_seed = cell_seed(cfg.seed, study, u64::MAX - 1, rep);
        tables.push(Arc::new(cfg.source_table(qi_seed, s_seed)?));
    }
    Ok(tables)
}

/// Breach study: scenario x k grid, replicated. Measures how often combining
/// independently anonymized overlapping releases pins down sensitive values
/// that each release alone kept ambiguous.
pub fn run_breach_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let hash = config_hash(cfg);
    if cfg.k.is_empty() {
        return Err(Error::Config("k grid is empty".into()));
    }
    if cfg.scenarios.is_empty() {
        return Err(Error::Config("no scenarios given".into()));
    }
    let scenario_schemes: Vec<(String, Vec<Scheme>)> = cfg
        .scenarios
        .iter()
        .map(|s| parse_scenario(s).map(|v| (s.clone(), v)))
        .collect::<Result<_>>()?;
    let tables = source_tables(cfg, "breach")?;

    let mut cells = Vec::new();
    let mut idx = 0u64;
    for rep in 0..tables.len() {
        for (scenario, schemes) in &scenario_schemes {
            for &k in &cfg.k {
                cells.push((idx, (rep, scenario.clone(), schemes.clone(), k)));
                idx += 1;
            }
        }
    }

    let rows = run_cells(&cells, |idx, (rep, scenario, schemes, k)| {
        let seed = cell_seed(cfg.seed, "breach", idx, *rep as u64);
        let mut base = ReportRow::blank(&hash, "breach", idx, *rep as u64, seed);
        base.scenario = scenario.clone();
        base.k = Some(*k);
        base.n = Some(cfg.releases);
        let run = || {
            let (releases, population) = build_attack_inputs(
                &tables[*rep], schemes, cfg.releases, cfg, seed, *k, None, None,
            )?;
            let report = intersection_attack(&releases, &population, &cfg.confidence)?;
            Ok(attack_rows(&base, &report))
        };
        let result = run();
        (base, result)
    });

    Ok(StudyOutput { study: "breach".into(), config_hash: hash, cells: cells.len(), rows })
}

/// Anonymity-drop study: for the first scenario, sweeps k crossed with a
/// constraint variant (none, each entropy floor, each closeness ceiling) and
/// reports how much anonymity the intersection removes under each.
pub fn run_anonymity_drop_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let hash = config_hash(cfg);
    if cfg.k.is_empty() {
        return Err(Error::Config("k grid is empty".into()));
    }
    let scenario = cfg
        .scenarios
        .first()
        .ok_or_else(|| Error::Config("no scenarios given".into()))?;
    let schemes = parse_scenario(scenario)?;
    let tables = source_tables(cfg, "drop")?;

    // (ell, t) variants; the plain variant leaves both off.
    let mut variants: Vec<(Option<f64>, Option<f64>)> = vec![(None, None)];
    variants.extend(cfg.ell.iter().map(|&l| (Some(l), None)));
    variants.extend(cfg.t.iter().map(|&t| (None, Some(t))));

    let mut cells = Vec::new();
    let mut idx = 0u64;
    for rep in 0..tables.len() {
        for &k in &cfg.k {
            for &(ell, t) in &variants {
                cells.push((idx, (rep, k, ell, t)));
                idx += 1;
            }
        }
    }

    let rows = run_cells(&cells, |idx, (rep, k, ell, t)| {
        let seed = cell_seed(cfg.seed, "drop", idx, *rep as u64);
        let mut base = ReportRow::blank(&hash, "drop", idx, *rep as u64, seed);
        base.scenario = scenario.clone();
        base.k = Some(*k);
        base.ell = *ell;
        base.t = *t;
        base.n = Some(cfg.releases);
        let run = || {
            let (releases, population) = build_attack_inputs(
                &tables[*rep], &schemes, cfg.releases, cfg, seed, *k, *ell, *t,
            )?;
            let report = intersection_attack(&releases, &population, &cfg.confidence)?;
            Ok(attack_rows(&base, &report))
        };
        let result = run();
        (base, result)
    });

    Ok(StudyOutput { study: "drop".into(), config_hash: hash, cells: cells.len(), rows })
}

/// Entropy study: synthetic-only sweep over the sensitive attribute's
/// entropy. QI columns and the sensitive sampling stream are held fixed per
/// replicate so the entropy level is the only moving part.
pub fn run_entropy_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let hash = config_hash(cfg);
    if cfg.dataset.is_some() {
        return Err(Error::Config(
            "the entropy study controls the sensitive distribution and only runs on synthetic data".into(),
        ));
    }
    if cfg.entropy_levels.is_empty() {
        return Err(Error::Config("entropy_levels is empty".into()));
    }
    let k = *cfg.k.first().ok_or_else(|| Error::Config("k grid is empty".into()))?;
    let scenario = cfg
        .scenarios
        .first()
        .ok_or_else(|| Error::Config("no scenarios given".into()))?;
    let schemes = parse_scenario(scenario)?;
    let reps = cfg.seed_count.max(1);

    let mut cells = Vec::new();
    let mut idx = 0u64;
    for rep in 0..reps {
        for &level in &cfg.entropy_levels {
            cells.push((idx, (rep, level)));
            idx += 1;
        }
    }

    let rows = run_cells(&cells, |idx, (rep, level)| {
        let rep = *rep as u64;
        let seed = cell_seed(cfg.seed, "entropy", idx, rep);
        let mut base = ReportRow::blank(&hash, "entropy", idx, rep, seed);
        base.scenario = scenario.clone();
        base.k = Some(k);
        base.n = Some(cfg.releases);
        base.entropy = Some(*level);
        let run = || {
            // Seeds keyed by replicate only: every level sees the same QI
            // population and the same underlying uniform draws.
            let qi_seed = cell_seed(cfg.seed, "entropy-qi", 0, rep);
            let s_seed = cell_seed(cfg.seed, "entropy-s", 0, rep);
            let table = generate_synthetic(&cfg.synthetic_spec(*level), qi_seed, s_seed)?;
            let realized = table.attribute_entropy(&table.schema.sensitive().name)?;
            let (releases, population) =
                build_attack_inputs(&table, &schemes, cfg.releases, cfg, seed, k, None, None)?;
            let report = intersection_attack(&releases, &population, &cfg.confidence)?;
            let mut rows = attack_rows(&base, &report);
            rows.push(base.clone().metric("realized_entropy", realized));
            Ok(rows)
        };
        let result = run();
        (base, result)
    });

    Ok(StudyOutput { study: "entropy".into(), config_hash: hash, cells: cells.len(), rows })
}

/// Multi-release study: anonymizes max(n_grid) overlapping subsets once per
/// replicate, then attacks each prefix of that fixed sequence, so the n-axis
/// isolates the effect of seeing more releases of the same individuals.
pub fn run_multi_release_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let hash = config_hash(cfg);
    if cfg.n_grid.is_empty() {
        return Err(Error::Config("n_grid is empty".into()));
    }
    if cfg.n_grid.iter().any(|&n| n < 2) {
        return Err(Error::Config("n_grid entries must be at least 2".into()));
    }
    let k = *cfg.k.first().ok_or_else(|| Error::Config("k grid is empty".into()))?;
    let scenario = cfg
        .scenarios
        .first()
        .ok_or_else(|| Error::Config("no scenarios given".into()))?;
    let schemes = parse_scenario(scenario)?;
    let max_n = *cfg.n_grid.iter().max().unwrap();
    let tables = source_tables(cfg, "multi")?;

    // Shared per-replicate work: one sample, max_n releases.
    type RepInputs = (Vec<Release>, Vec<(u64, Vec<i64>)>);
    let prepared: Vec<Result<RepInputs>> = (0..tables.len())
        .into_par_iter()
        .map(|rep| {
            let seed = cell_seed(cfg.seed, "multi-sample", 0, rep as u64);
            build_attack_inputs(&tables[rep], &schemes, max_n, cfg, seed, k, None, None)
        })
        .collect();

    let mut cells = Vec::new();
    let mut idx = 0u64;
    for rep in 0..tables.len() {
        for &n in &cfg.n_grid {
            cells.push((idx, (rep, n)));
            idx += 1;
        }
    }

    let rows = run_cells(&cells, |idx, (rep, n)| {
        let seed = cell_seed(cfg.seed, "multi", idx, *rep as u64);
        let mut base = ReportRow::blank(&hash, "multi", idx, *rep as u64, seed);
        base.scenario = scenario.clone();
        base.k = Some(k);
        base.n = Some(*n);
        let run = || {
            let (releases, population) = match &prepared[*rep] {
                Ok(v) => v,
                Err(e) => return Err(Error::Config(e.to_string())),
            };
            let report = intersection_attack(&releases[..*n], population, &cfg.confidence)?;
            Ok(attack_rows(&base, &report))
        };
        let result = run();
        (base, result)
    });

    Ok(StudyOutput { study: "multi".into(), config_hash: hash, cells: cells.len(), rows })
}

// ---------------------------------------------------------------------------
// dp suite

#[derive(Clone)]
struct DpCell {
    mechanism: String,
    build: DpBuild,
    n: usize,
    epsilon: f64,
    delta: f64,
    prior: String,
    default_row: usize,
}

#[derive(Clone, Copy)]
enum DpBuild {
    RandomizedResponse { flip: f64 },
    GeometricCounter,
    PublishRandomRecord,
}

fn build_mechanism(cell: &DpCell) -> Result<Mechanism> {
    let space = DatabaseSpace::binary(cell.n)?.with_default_row(cell.default_row)?;
    match cell.build {
        DpBuild::RandomizedResponse { flip } => randomized_response(&space, flip),
        DpBuild::GeometricCounter => truncated_geometric_counter(&space, cell.epsilon),
        DpBuild::PublishRandomRecord => publish_random_record(&space),
    }
}

fn build_prior(name: &str, space: &DatabaseSpace, seed: u64) -> Result<Belief> {
    match name {
        "uniform" => Ok(Belief::uniform(space)),
        "seeded-random" => Ok(Belief::seeded_random(space, seed)),
        "point-mass-mixture" => {
            Belief::point_mass_mixture(space, space.database_count() - 1, 0.9)
        }
        other => Err(Error::Config(format!("unknown prior {other:?}"))),
    }
}

/// dp suite: crosses each configured mechanism instance with the prior list
/// and both extreme default rows, then reports the indistinguishability
/// verdict, the worst posterior divergence, and how it sits against the
/// bounds implied by epsilon and delta.
pub fn run_dp_suite(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    let hash = config_hash(cfg);
    if cfg.dp_mechanisms.is_empty() {
        return Err(Error::Config("dp_mechanisms is empty".into()));
    }
    if cfg.priors.is_empty() {
        return Err(Error::Config("priors is empty".into()));
    }
    if cfg.dp_n.is_empty() {
        return Err(Error::Config("dp_n is empty".into()));
    }

    // (mechanism description, build, n, (epsilon, delta) pairs to check).
    let mut instances: Vec<(String, DpBuild, usize, Vec<(f64, f64)>)> = Vec::new();
    for name in &cfg.dp_mechanisms {
        match name.as_str() {
            "randomized-response" => {
                if cfg.rr_flip.is_empty() {
                    return Err(Error::Config("rr_flip is empty".into()));
                }
                for &n in &cfg.dp_n {
                    for &flip in &cfg.rr_flip {
                        instances.push((
                            format!("randomized-response(n={n},flip={flip})"),
                            DpBuild::RandomizedResponse { flip },
                            n,
                            vec![(randomized_response_epsilon(flip), 0.0)],
                        ));
                    }
                }
            }
            "geometric-counter" => {
                if cfg.dp_epsilon.is_empty() {
                    return Err(Error::Config("dp_epsilon is empty".into()));
                }
                for &n in &cfg.dp_n {
                    for &eps in &cfg.dp_epsilon {
                        instances.push((
                            format!("geometric-counter(n={n},eps={eps:.4})"),
                            DpBuild::GeometricCounter,
                            n,
                            vec![(eps, 0.0)],
                        ));
                    }
                }
            }
            "publish-random-record" => {
                if cfg.dp_epsilon.is_empty() || cfg.dp_delta.is_empty() {
                    return Err(Error::Config(
                        "publish-random-record needs dp_epsilon and dp_delta".into(),
                    ));
                }
                for &n in &cfg.dp_n {
                    let pairs = cfg
                        .dp_epsilon
                        .iter()
                        .flat_map(|&e| cfg.dp_delta.iter().map(move |&d| (e, d)))
                        .collect();
                    instances.push((
                        format!("publish-random-record(n={n})"),
                        DpBuild::PublishRandomRecord,
                        n,
                        pairs,
                    ));
                }
            }
            other => return Err(Error::Config(format!("unknown mechanism {other:?}"))),
        }
    }

    let mut cells: Vec<(u64, DpCell)> = Vec::new();
    let mut idx = 0u64;
    for (desc, build, n, pairs) in &instances {
        for &(eps, delta) in pairs {
            for prior in &cfg.priors {
                for default_row in [0usize, 1] {
                    cells.push((
                        idx,
                        DpCell {
                            mechanism: desc.clone(),
                            build: *build,
                            n: *n,
                            epsilon: eps,
                            delta,
                            prior: prior.clone(),
                            default_row,
                        },
                    ));
                    idx += 1;
                }
            }
        }
    }

    let rows = run_cells(&cells, |idx, cell| {
        let seed = cell_seed(cfg.seed, "dp", idx, 0);
        let mut base = ReportRow::blank(&hash, "dp", idx, 0, seed);
        base.scenario = cell.mechanism.clone();
        base.n = Some(cell.n);
        base.epsilon = Some(cell.epsilon);
        base.delta = Some(cell.delta);
        base.prior = cell.prior.clone();
        base.default_row = Some(cell.default_row);
        let run = || {
            let mech = build_mechanism(cell)?;
            let prior = build_prior(&cell.prior, &mech.space, seed)?;
            let mut rows = Vec::new();

            let passes = dp_check(&mech, cell.epsilon, cell.delta)?;
            rows.push(base.clone().metric("dp_check", if passes { 1.0 } else { 0.0 }));

            let sem = semantic_privacy_eval(&mech, &prior, cell.epsilon, cell.delta)?;
            let mut sd_row = base.clone().metric("worst_case_sd", sem.worst_case_sd);
            if let Some(w) = &sem.worst_witness {
                sd_row.note = format!(
                    "db={} t={:?} coord={}",
                    mech.space.database_label(w.database),
                    mech.transcripts()[w.transcript],
                    w.coordinate
                );
            }
            rows.push(sd_row);
            rows.push(base.clone().metric("dm_bound", sem.dm_bound));
            rows.push(base.clone().metric("exceedance_mass_dm", sem.exceedance_mass_dm));
            rows.push(base.clone().metric(
                "within_dm_bound",
                if sem.within_dm_bound { 1.0 } else { 0.0 },
            ));
            rows.push(base.clone().metric("eps_prime", sem.eps_prime));
            rows.push(base.clone().metric(
                "exceedance_mass_eps_prime",
                sem.exceedance_mass_eps_prime,
            ));
            rows.push(base.clone().metric("delta_prime_budget", sem.delta_prime_budget));
            if let Some(r) = sem.exceedance_ratio {
                rows.push(base.clone().metric("exceedance_ratio", r));
            }
            rows.push(base.clone().metric(
                "meets_eps_prime_budget",
                if sem.meets_eps_prime_budget { 1.0 } else { 0.0 },
            ));

            let good = good_set_semantic_eval(&mech, &prior, cell.epsilon, cell.delta)?;
            rows.push(base.clone().metric("good_set_mass", good.good_set_mass));
            rows.push(base.clone().metric(
                "good_set_condition_met",
                if good.condition_met { 1.0 } else { 0.0 },
            ));
            Ok(rows)
        };
        let result = run();
        (base, result)
    });

    Ok(StudyOutput { study: "dp".into(), config_hash: hash, cells: cells.len(), rows })
}

// ---------------------------------------------------------------------------
// one-shot subcommands

/// Anonymizes the configured table once and writes release.json plus the
/// recoded rows next to it. Returns the output paths.
pub fn run_anonymize(cfg: &ExperimentConfig) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let scheme = match cfg.scheme.as_str() {
        "mondrian" => Scheme::Mondrian,
        "micro" | "microaggregation" | "mdav" => Scheme::Microaggregation,
        other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
    };
    let k = *cfg.k.first().ok_or_else(|| Error::Config("k grid is empty".into()))?;
    let qi_seed = cell_seed(cfg.seed, "anonymize-qi", 0, 0);
    let s_seed = cell_seed(cfg.seed, "anonymize-s", 0, 0);
    let table = cfg.source_table(qi_seed, s_seed)?;
    let release = anonymize_one(&table, scheme, k, cfg.ell.first().copied(), cfg.t.first().copied())?;
    std::fs::create_dir_all(&cfg.out)?;
    let json_path = cfg.out.join("release.json");
    let csv_path = cfg.out.join("anonymized.csv");
    release.write_json(&json_path)?;
    release.write_anonymized_csv(&csv_path)?;
    Ok((json_path, csv_path))
}

/// Attacks previously written releases with the configured table as the
/// population. Writes the full report and a summary CSV; returns their paths
/// and the report itself.
pub fn run_attack(
    cfg: &ExperimentConfig,
) -> Result<(std::path::PathBuf, std::path::PathBuf, AttackReport)> {
    if cfg.release_files.len() < 2 {
        return Err(Error::Config(
            "attack needs at least two entries in release_files".into(),
        ));
    }
    let (dataset, schema) = match (&cfg.dataset, &cfg.schema) {
        (Some(d), Some(s)) => (d, s),
        _ => {
            return Err(Error::Config(
                "attack needs dataset and schema for the population's true tuples".into(),
            ))
        }
    };
    let schema = Arc::new(crate::dataset::Schema::from_file(schema)?);
    let table = Table::load_csv(dataset, schema)?;
    let releases: Vec<Release> = cfg
        .release_files
        .iter()
        .map(Release::from_json_file)
        .collect::<Result<_>>()?;
    let ids: Vec<u64> = table.records.iter().map(|r| r.id).collect();
    let population = population_from_table(&table, &ids)?;
    let report = intersection_attack(&releases, &population, &cfg.confidence)?;
    std::fs::create_dir_all(&cfg.out)?;
    let json_path = cfg.out.join("attack_report.json");
    let csv_path = cfg.out.join("attack_summary.csv");
    report.write_json(&json_path)?;
    report.write_summary_csv(&csv_path)?;
    Ok((json_path, csv_path, report))
}
