//! Experiment dispatch, artifact persistence and the run manifest.
//!
//! Artifacts are built in memory and written together once the experiment
//! has succeeded, so a failing run leaves no partial CSV/JSON behind. The
//! manifest echoes the full effective config (defaults included) and records
//! a SHA-256 digest per artifact; re-running the same config and seed
//! reproduces byte-identical artifacts for any worker count.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use strassen_kit::grid::GridFunction;
use strassen_kit::mdp::{self, EventSpec};
use strassen_kit::ratefn;
use strassen_kit::sampler;
use strassen_kit::strassen;

use crate::config::{Config, EventKind, Experiment};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: Config,
    pub artifacts: Vec<ArtifactDigest>,
    pub wall_clock_seconds: f64,
    pub version: String,
    pub seed: u64,
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts { files: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Validation(format!("report serialization failed: {e}")))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }
}

/// Runs the configured experiment, writes its artifacts plus `manifest.json`
/// into `config.output_dir`, and returns the manifest.
pub fn run(config: &Config) -> Result<RunManifest> {
    let experiment = config.experiment.ok_or_else(|| {
        CliError::Validation("config has no experiment selected".into())
    })?;
    let started = Instant::now();
    let artifacts = match experiment {
        Experiment::Simulate => run_simulate(config)?,
        Experiment::Conditions => run_conditions(config)?,
        Experiment::Rate => run_rate(config)?,
        Experiment::Duality => run_duality(config)?,
        Experiment::Mdp => run_mdp(config)?,
        Experiment::Strassen => run_strassen(config)?,
        Experiment::Lil => run_lil(config)?,
    };

    let dir = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut digests = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
        digests.push(ArtifactDigest {
            name: name.clone(),
            sha256: hex_digest(bytes),
        });
    }

    let manifest = RunManifest {
        config: config.clone(),
        artifacts: digests,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::Validation(format!("manifest serialization failed: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn run_simulate(config: &Config) -> Result<Artifacts> {
    let spec = config.process.to_spec()?;
    let section = &config.simulate;
    let path = sampler::sample_path(&spec, section.horizon, section.step, config.seed)?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        label: &'a str,
        horizon: f64,
        step: f64,
        seed: u64,
        points: usize,
        terminal: f64,
    }
    let mut artifacts = Artifacts::new();
    artifacts.add("path.csv", csv);
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "simulate",
            label: &spec.label,
            horizon: section.horizon,
            step: section.step,
            seed: config.seed,
            points: path.times().len(),
            terminal: *path.values().last().unwrap(),
        },
    )?;
    Ok(artifacts)
}

fn run_conditions(config: &Config) -> Result<Artifacts> {
    let spec = config.process.to_spec()?;
    let scaling = config.scaling.to_scaling()?;
    let report = spec.check_growth_conditions(&scaling);

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        label: &'a str,
        report: &'a strassen_kit::characteristics::ConditionReport,
    }
    let mut csv = Vec::new();
    writeln!(csv, "# schema=conditions-v1 (floor deviation probed at t + 0.5)")?;
    writeln!(
        csv,
        "t,scaling_diverges,scaling_vanishes,floor_deviation,schedule_growth,max_jump_decay"
    )?;
    for (k, (t, r1)) in report.scaling_diverges.trajectory.iter().enumerate() {
        writeln!(
            csv,
            "{t},{r1},{},{},{},{}",
            report.scaling_vanishes.trajectory[k].1,
            report.integer_floor_stable.trajectory[k].1,
            report.schedule_growth.trajectory[k].1,
            report.max_jump_decay.trajectory[k].1
        )?;
    }
    let mut artifacts = Artifacts::new();
    artifacts.add("trajectories.csv", csv);
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "conditions",
            label: &spec.label,
            report: &report,
        },
    )?;
    Ok(artifacts)
}

fn load_grid_function(path: &str) -> Result<GridFunction> {
    let file = std::fs::File::open(path)?;
    Ok(GridFunction::read_csv(std::io::BufReader::new(file))?)
}

fn run_rate(config: &Config) -> Result<Artifacts> {
    let params = config.rate_params.to_params()?;
    let section = &config.rate;
    let f = if section.input_csv.is_empty() {
        GridFunction::from_profile(section.knots, |s| section.coeff * s.powf(section.exponent))?
    } else {
        load_grid_function(&section.input_csv)?
    };
    let i = ratefn::rate_i(&f, &params);
    let (j, maximizer) = ratefn::rate_j_discrete(&f, &params)?;
    let tube = if section.delta > 0.0 {
        Some(ratefn::inf_rate_over_ball(&f, section.delta, &params)?)
    } else {
        None
    };

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        knots: usize,
        rate_i: Option<f64>,
        rate_i_infinite: bool,
        rate_j: f64,
        duality_gap: Option<f64>,
        tube_delta: Option<f64>,
        tube_infimum: Option<f64>,
        seed: u64,
    }
    let mut artifacts = Artifacts::new();
    let mut fcsv = Vec::new();
    f.write_csv(&mut fcsv)?;
    artifacts.add("function.csv", fcsv);
    let mut mcsv = Vec::new();
    writeln!(mcsv, "# schema=stepfn-v1 levels on [breakpoint, next) with value 0 at 1")?;
    writeln!(mcsv, "breakpoint,level")?;
    for (k, level) in maximizer.levels().iter().enumerate() {
        writeln!(mcsv, "{},{level}", maximizer.breakpoints()[k])?;
    }
    artifacts.add("maximizer.csv", mcsv);
    if let Some((_, argmin)) = &tube {
        let mut acsv = Vec::new();
        argmin.write_csv(&mut acsv)?;
        artifacts.add("tube_argmin.csv", acsv);
    }
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "rate",
            knots: f.segments(),
            rate_i: i.is_finite().then_some(i),
            rate_i_infinite: i.is_infinite(),
            rate_j: j,
            duality_gap: i.is_finite().then_some(i - j),
            tube_delta: (section.delta > 0.0).then_some(section.delta),
            tube_infimum: tube.as_ref().map(|(v, _)| *v),
            seed: config.seed,
        },
    )?;
    Ok(artifacts)
}

fn run_duality(config: &Config) -> Result<Artifacts> {
    let params = config.rate_params.to_params()?;
    let section = &config.duality;
    let profile = |s: f64| section.coeff * s.powf(section.exponent);
    let mut grids = Vec::new();
    let mut n = 2usize;
    while n <= section.max_knots {
        grids.push(n);
        n *= 2;
    }
    let finest = *grids.last().unwrap();
    let i_ref = ratefn::rate_i(&GridFunction::from_profile(finest, profile)?, &params);
    let mut csv = Vec::new();
    writeln!(csv, "# schema=duality-v1 i evaluated on the finest grid")?;
    writeln!(csv, "n,j_n,i,gap")?;
    let mut rows = Vec::new();
    for &n in &grids {
        let f = GridFunction::from_profile(n, profile)?;
        let (j, _) = ratefn::rate_j_discrete(&f, &params)?;
        let gap = i_ref - j;
        writeln!(csv, "{n},{j},{i_ref},{gap}")?;
        rows.push((n, j, gap));
    }
    let gap_monotone = rows.windows(2).all(|w| w[1].2 <= w[0].2 + 1e-12);

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        grids: &'a [usize],
        rate_i: f64,
        rate_j_final: f64,
        gap_final: f64,
        gap_monotone_decreasing: bool,
        seed: u64,
    }
    let mut artifacts = Artifacts::new();
    artifacts.add("duality.csv", csv);
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "duality",
            grids: &grids,
            rate_i: i_ref,
            rate_j_final: rows.last().unwrap().1,
            gap_final: rows.last().unwrap().2,
            gap_monotone_decreasing: gap_monotone,
            seed: config.seed,
        },
    )?;
    Ok(artifacts)
}

fn run_mdp(config: &Config) -> Result<Artifacts> {
    let spec = config.process.to_spec()?;
    let scaling = config.scaling.to_scaling()?;
    let params = config.rate_params.to_params()?;
    let section = &config.mdp;
    let event = section.to_event()?;
    let estimate = mdp::tail_probability(
        &spec,
        &scaling,
        section.t,
        &event,
        section.to_method(),
        section.n_reps,
        config.seed,
    )?;
    let gap = mdp::rate_gap(&estimate, &event, &params)?;

    #[derive(Serialize)]
    struct EventEcho<'a> {
        kind: &'a EventKind,
        c: Option<f64>,
        delta: Option<f64>,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        event: EventEcho<'a>,
        t: f64,
        method: &'a strassen_kit::mdp::Method,
        probability: f64,
        ci: [f64; 2],
        n_reps: u64,
        ess: Option<f64>,
        zero_hits: bool,
        empirical_rate: Option<f64>,
        theoretical_rate: f64,
        gap: Option<f64>,
        seed: u64,
    }
    let mut artifacts = Artifacts::new();
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "mdp",
            event: EventEcho {
                kind: &section.event,
                c: matches!(event, EventSpec::Endpoint { .. } | EventSpec::SupAbs { .. })
                    .then_some(section.c),
                delta: matches!(event, EventSpec::Ball { .. }).then_some(section.delta),
            },
            t: section.t,
            method: &estimate.method,
            probability: estimate.probability,
            ci: [estimate.ci_low, estimate.ci_high],
            n_reps: estimate.n_reps,
            ess: estimate.ess,
            zero_hits: estimate.zero_hits,
            empirical_rate: estimate.empirical_rate,
            theoretical_rate: gap.theoretical_rate,
            gap: gap.gap,
            seed: config.seed,
        },
    )?;
    Ok(artifacts)
}

fn run_strassen(config: &Config) -> Result<Artifacts> {
    let spec = config.process.to_spec()?;
    let scaling = config.scaling.to_scaling()?;
    let params = config.rate_params.to_params()?;
    let section = &config.strassen;
    let schedule = strassen::snapshot_schedule(section.q, section.t0, section.snapshots)?;
    let targets = strassen::default_targets(&params, section.knots);
    let report = strassen::cluster_stats(
        &spec,
        &scaling,
        &schedule,
        &targets,
        &params,
        section.knots,
        config.seed,
    )?;

    let mut csv = Vec::new();
    writeln!(csv, "# schema=strassen-v1 targets: zero, power(rate 0.405), sine(rate 0.4)")?;
    let target_cols: Vec<String> = (0..targets.len()).map(|i| format!("target_{i}")).collect();
    writeln!(csv, "t,dist_bound,running_sup,{},lil", target_cols.join(","))?;
    for row in &report.rows {
        let dists: Vec<String> = row.target_distances.iter().map(|d| d.to_string()).collect();
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.t,
            row.dist_bound,
            row.running_sup_dist,
            dists.join(","),
            row.lil
        )?;
    }

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        label: &'a str,
        report: &'a strassen_kit::strassen::StrassenReport,
    }
    let mut artifacts = Artifacts::new();
    artifacts.add("snapshots.csv", csv);
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "strassen",
            label: &spec.label,
            report: &report,
        },
    )?;
    Ok(artifacts)
}

fn run_lil(config: &Config) -> Result<Artifacts> {
    let spec = config.process.to_spec()?;
    let scaling = config.scaling.to_scaling()?;
    let section = &config.lil;
    let schedule = strassen::snapshot_schedule(section.q, section.t0, section.snapshots)?;
    let (running_max, trajectory) =
        strassen::lil_statistic(&spec, &scaling, &schedule, config.seed)?;

    let mut csv = Vec::new();
    writeln!(csv, "# schema=lil-v1")?;
    writeln!(csv, "t,lil")?;
    for (t, v) in &trajectory {
        writeln!(csv, "{t},{v}")?;
    }

    #[derive(Serialize)]
    struct Report<'a> {
        experiment: &'a str,
        label: &'a str,
        running_max: f64,
        snapshots: usize,
        q: f64,
        t0: f64,
        seed: u64,
    }
    let mut artifacts = Artifacts::new();
    artifacts.add("lil.csv", csv);
    artifacts.add_json(
        "report.json",
        &Report {
            experiment: "lil",
            label: &spec.label,
            running_max,
            snapshots: section.snapshots,
            q: section.q,
            t0: section.t0,
            seed: config.seed,
        },
    )?;
    Ok(artifacts)
}
