use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use walkbound::boundary::{
    act_on_ray, default_probes, empirical_hitting_measure, kth_return_sampler, stationarity_residual,
    track_convergence, CylinderDistribution, HittingOptions,
};
use walkbound::harmonic::{harmonicity_residual, poisson_eval, BoundarySamples, CylinderFunction};
use walkbound::morphisms::classify_growth_with;
use walkbound::tree::{liminf_observers, strip_exit_points, strip_growth_profile, InnerTree, TreePoint};
use walkbound::walk::{
    asymptotic_entropy_estimate, drift_estimate, moment_summary, path_rng, sample_paths, Walker,
};
use walkbound::{Error, ReducedWord, Storage};

use crate::config::{element, ConfigError, Format, Model, RunConfig};
use crate::{AppError, Command};

type RowWriter<'a> = Box<dyn FnOnce(&mut dyn Write) -> io::Result<()> + 'a>;

/// A finished result, or rows produced while writing.
pub enum Artifact<'a> {
    Bytes(Vec<u8>),
    Stream(RowWriter<'a>),
}

impl Artifact<'_> {
    pub fn write(self, w: &mut dyn Write) -> io::Result<()> {
        match self {
            Artifact::Bytes(b) => w.write_all(&b),
            Artifact::Stream(f) => f(w),
        }
    }
}

fn json_artifact<T: Serialize>(value: &T) -> Artifact<'static> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    Artifact::Bytes(text.into_bytes())
}

fn csv_artifact(text: String) -> Artifact<'static> {
    Artifact::Bytes(text.into_bytes())
}

fn missing(section: &str) -> AppError {
    ConfigError::Invalid(format!("this command needs a [{section}] section")).into()
}

pub fn execute<'a>(
    command: Command,
    cfg: &'a RunConfig,
    model: &'a Model,
    format: Format,
) -> Result<Artifact<'a>, AppError> {
    match command {
        Command::Walk => walk(cfg, model, format),
        Command::Hitting => hitting(cfg, model, format),
        Command::Stationarity => stationarity(cfg, model, format),
        Command::Track => track(cfg, model, format),
        Command::Growth => growth(cfg, model, format),
        Command::Moments => moments(model, format),
        Command::EntropyRate => entropy_rate(cfg, model, format),
        Command::FirstReturn => first_return(cfg, model, format),
        Command::TreeLiminf => tree_liminf(cfg, format),
        Command::TreeStrips => tree_strips(cfg, format),
        Command::Poisson => poisson(cfg, model, format),
        Command::Config => Ok(Artifact::Bytes(cfg.to_toml().into_bytes())),
    }
}

/// Paths rendered per chunk, so memory stays bounded by the chunk.
const WALK_CHUNK: usize = 64;

fn walk<'a>(cfg: &'a RunConfig, model: &'a Model, format: Format) -> Result<Artifact<'a>, AppError> {
    let r = &cfg.run;
    match format {
        Format::Json => {
            let batch = sample_paths(
                &model.group,
                &model.measure,
                r.seed,
                r.n_paths,
                r.n_steps,
                Storage::Streaming,
            );
            let drift = drift_estimate(&batch)?;
            let m = moment_summary(&model.measure);
            Ok(json_artifact(&json!({
                "n_paths": r.n_paths,
                "n_steps": r.n_steps,
                "seed": r.seed,
                "drift": drift.value,
                "drift_stderr": drift.stderr,
                "entropy": m.entropy,
                "log_moment": m.log_moment,
                "first_moment": m.first_moment,
            })))
        }
        Format::Csv => Ok(Artifact::Stream(Box::new(move |w: &mut dyn Write| {
            writeln!(w, "path_id,step,w,p,gauge_length")?;
            let ids: Vec<u64> = (0..r.n_paths as u64).collect();
            for chunk in ids.chunks(WALK_CHUNK) {
                let rendered: Vec<String> = chunk
                    .par_iter()
                    .map_init(
                        || Walker::new(&model.group, &model.measure),
                        |walker, &i| {
                            let mut s = String::new();
                            walker.walk(r.seed, i, r.n_steps, |n, x| {
                                writeln!(s, "{i},{n},{},{},{}", x.w, x.p, x.gauge_length())
                                    .expect("string write");
                                true
                            });
                            s
                        },
                    )
                    .collect();
                for s in rendered {
                    w.write_all(s.as_bytes())?;
                }
            }
            Ok(())
        }))),
    }
}

fn hitting_options(cfg: &RunConfig, model: &Model, lattice: bool) -> HittingOptions {
    let mut opts = HittingOptions::new(model.group.rank());
    opts.unresolved_ceiling = cfg.run.unresolved_ceiling;
    if lattice {
        opts.return_lattice = model.lattice.clone();
    }
    opts
}

fn hitting_measure(cfg: &RunConfig, model: &Model, depth: usize) -> Result<CylinderDistribution, AppError> {
    let r = &cfg.run;
    Ok(empirical_hitting_measure(
        &model.group,
        &model.measure,
        r.seed,
        r.n_paths,
        r.n_steps,
        depth,
        &hitting_options(cfg, model, true),
    )?)
}

fn distribution_csv(d: &CylinderDistribution) -> String {
    let mut s = String::from("cylinder,frequency\n");
    for (w, p) in &d.table {
        writeln!(s, "{w},{p}").expect("string write");
    }
    s
}

fn hitting(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let d = hitting_measure(cfg, model, cfg.run.depth)?;
    Ok(match format {
        Format::Csv => csv_artifact(distribution_csv(&d)),
        Format::Json => json_artifact(&d),
    })
}

/// Checks the truncated-prefix route against the exact action for the
/// configured margin on `n` draws from `λ̂`.
fn audit_margin(
    cfg: &RunConfig,
    model: &Model,
    lambda: &CylinderDistribution,
    margin: usize,
) -> Result<usize, AppError> {
    let sampler = lambda.sampler()?;
    let n = cfg.run.samples.min(1000) as u64;
    let checked: Vec<Result<(), Error>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.run.seed ^ 0x6d61_7267_696e, i);
            let xi = sampler.sample_ray(&mut rng);
            let g = model.measure.sample(&mut rng);
            act_on_ray(&model.group, g, &xi, cfg.run.depth, margin).map(|_| ())
        })
        .collect();
    checked.into_iter().collect::<Result<Vec<()>, Error>>()?;
    Ok(n as usize)
}

fn stationarity(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let r = &cfg.run;
    let lambda = hitting_measure(cfg, model, r.table_depth())?;
    let tv = stationarity_residual(
        &model.group,
        &lambda,
        &model.measure,
        r.seed.wrapping_add(1),
        r.samples,
        r.depth,
    )?;
    let audited = match r.margin {
        Some(m) => Some(audit_margin(cfg, model, &lambda, m)?),
        None => None,
    };
    Ok(match format {
        Format::Json => json_artifact(&json!({
            "tv_residual": tv,
            "unresolved_fraction": lambda.unresolved_fraction,
            "depth": r.depth,
            "table_depth": r.table_depth(),
            "samples": r.samples,
            "margin_checks": audited,
        })),
        Format::Csv => csv_artifact(format!(
            "metric,value\ntv_residual,{tv}\nunresolved_fraction,{}\n",
            lambda.unresolved_fraction
        )),
    })
}

fn track(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let r = &cfg.run;
    let trace = track_convergence(
        &model.group,
        &model.measure,
        r.seed,
        r.n_paths,
        r.n_steps,
        &default_probes(model.group.rank()),
        r.depth,
        model.lattice.as_ref(),
    )?;
    let summary = trace.summary(r.burn_in);
    if summary.unresolved_fraction > r.unresolved_ceiling {
        return Err(Error::ConvergenceFailure {
            fraction: summary.unresolved_fraction,
            ceiling: r.unresolved_ceiling,
        }
        .into());
    }
    Ok(match format {
        Format::Json => json_artifact(&summary),
        Format::Csv => {
            let mut s = String::from("path_id,final_length,monotone_after_burn_in\n");
            for (i, p) in trace.paths.iter().enumerate() {
                writeln!(s, "{i},{},{}", p.final_length(), p.monotone_after(r.burn_in))
                    .expect("string write");
            }
            csv_artifact(s)
        }
    })
}

fn growth(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    if model.automorphisms.is_empty() {
        return Err(missing("auto.<name>"));
    }
    let opts = walkbound::morphisms::GrowthOptions::default();
    let mut reports = Vec::new();
    for (name, phi) in &model.automorphisms {
        let rep = classify_growth_with(phi, cfg.run.max_iter, &opts)?;
        reports.push(json!({
            "name": name,
            "kind": rep.kind,
            "degree": rep.degree_estimate,
            "rate": rep.rate_estimate,
            "iterations_used": rep.iterations_used,
            "polynomial_fit": rep.polynomial_fit,
            "exponential_fit": rep.exponential_fit,
        }));
    }
    Ok(match format {
        Format::Json => json_artifact(&reports),
        Format::Csv => {
            let mut s = String::from("name,kind,degree,rate,iterations_used\n");
            for r in &reports {
                let field = |k: &str| match &r[k] {
                    serde_json::Value::Null => String::new(),
                    serde_json::Value::String(v) => v.clone(),
                    v => v.to_string(),
                };
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    field("name"),
                    field("kind"),
                    field("degree"),
                    field("rate"),
                    field("iterations_used")
                )
                .expect("string write");
            }
            csv_artifact(s)
        }
    })
}

fn moments(model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let m = moment_summary(&model.measure);
    Ok(match format {
        Format::Json => json_artifact(&m),
        Format::Csv => csv_artifact(format!(
            "metric,value\nfirst_moment,{}\nlog_moment,{}\nentropy,{}\natoms,{}\n",
            m.first_moment, m.log_moment, m.entropy, m.atoms
        )),
    })
}

fn entropy_rate(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let r = &cfg.run;
    let est =
        asymptotic_entropy_estimate(&model.group, &model.measure, r.seed, r.samples, &r.entropy_depths)?;
    Ok(match format {
        Format::Json => json_artifact(&est),
        Format::Csv => {
            let mut s = String::from("n,samples,plug_in,miller_madow,distinct,coverage,biased\n");
            for d in &est.diagnostics {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    d.n, d.samples, d.plug_in, d.miller_madow, d.distinct, d.coverage, d.biased
                )
                .expect("string write");
            }
            csv_artifact(s)
        }
    })
}

fn first_return(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let r = &cfg.run;
    let lattice = model.lattice.as_ref().ok_or_else(|| missing("sublattice"))?;
    let batch = kth_return_sampler(
        &model.group,
        &model.measure,
        lattice,
        r.seed,
        r.samples,
        r.return_index,
        r.step_budget,
        r.exhausted_ceiling,
    )?;
    Ok(match format {
        Format::Json => json_artifact(&json!({
            "samples": batch.samples.len(),
            "return_index": r.return_index,
            "mean_return_time": batch.mean_return_time,
            "mean_gauge_length": batch.mean_gauge_length,
            "exhausted_fraction": batch.exhausted_fraction(),
        })),
        Format::Csv => {
            let mut s = String::from("sample_id,time,w,p,gauge_length\n");
            for (i, x) in batch.samples.iter().enumerate() {
                writeln!(
                    s,
                    "{i},{},{},{},{}",
                    x.time,
                    x.position.w,
                    x.position.p,
                    x.position.gauge_length()
                )
                .expect("string write");
            }
            csv_artifact(s)
        }
    })
}

fn tree_liminf(cfg: &RunConfig, format: Format) -> Result<Artifact<'static>, AppError> {
    let tc = cfg.tree.as_ref().ok_or_else(|| missing("tree"))?;
    let tree = InnerTree::new(tc.rank)?;
    let base = tree.parse_vertex(&tc.base)?;
    let seq = tc
        .sequence
        .iter()
        .map(|s| tree.parse_vertex(s))
        .collect::<Result<Vec<_>, Error>>()?;
    let point = liminf_observers(&tree, &base, &seq, cfg.run.horizon)?;
    Ok(match format {
        Format::Json => json_artifact(&point),
        Format::Csv => {
            let mut s = String::from("kind,index,vertex\n");
            match &point {
                TreePoint::Vertex(v) => writeln!(s, "vertex,0,{v}").expect("string write"),
                TreePoint::Ray { stable_path } => {
                    for (i, v) in stable_path.iter().enumerate() {
                        writeln!(s, "ray,{i},{v}").expect("string write");
                    }
                }
            }
            csv_artifact(s)
        }
    })
}

fn tree_strips(cfg: &RunConfig, format: Format) -> Result<Artifact<'static>, AppError> {
    let tc = cfg.tree.as_ref().ok_or_else(|| missing("tree"))?;
    let tree = InnerTree::new(tc.rank)?;
    let endpoint = |s: &Option<String>, key: &str| -> Result<TreePoint, AppError> {
        let s = s
            .as_ref()
            .ok_or_else(|| AppError::from(ConfigError::Invalid(format!("tree.{key} is required"))))?;
        Ok(TreePoint::Vertex(tree.parse_vertex(s)?))
    };
    let (b1, b2) = (endpoint(&tc.b1, "b1")?, endpoint(&tc.b2, "b2")?);
    let strip = strip_exit_points(&tree, &b1, &b2, cfg.run.horizon)?;
    let profile = strip_growth_profile(&strip, tc.k_max);
    Ok(match format {
        Format::Csv => csv_artifact(profile.to_csv()),
        Format::Json => json_artifact(&json!({
            "strip": strip,
            "profile": profile,
            "exactly_linear": profile.is_exactly_linear(),
        })),
    })
}

fn poisson(cfg: &RunConfig, model: &Model, format: Format) -> Result<Artifact<'static>, AppError> {
    let hc = cfg.harmonic.as_ref().ok_or_else(|| missing("harmonic"))?;
    let rank = model.group.rank();
    let f = match (&hc.cylinder, &hc.csv) {
        (Some(c), None) => CylinderFunction::indicator(&ReducedWord::parse(rank, c)?),
        (None, Some(path)) => {
            let file = std::fs::File::open(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            CylinderFunction::from_csv(rank, file)?
        }
        _ => {
            return Err(ConfigError::Invalid("harmonic needs exactly one of cylinder or csv".into()).into());
        }
    };
    let lambda = hitting_measure(cfg, model, cfg.run.table_depth())?;
    let samples = BoundarySamples::from_distribution(&lambda);
    let mut values = Vec::new();
    for p in &hc.points {
        let g = element(&model.group, &p.w, &p.p)?;
        let v = poisson_eval(&model.group, &f, &g, &samples)?;
        values.push((g, v));
    }
    let ball = model.group.ball(hc.test_radius);
    let report = harmonicity_residual(&model.group, &model.measure, &f, &samples, &ball)?;
    Ok(match format {
        Format::Json => json_artifact(&json!({
            "values": values
                .iter()
                .map(|(g, v)| json!({ "element": g, "value": v.value, "stderr": v.stderr }))
                .collect::<Vec<_>>(),
            "test_radius": hc.test_radius,
            "test_set_size": ball.len(),
            "max_residual": report.max_residual,
            "max_z": report.max_z,
            "unresolved_fraction": lambda.unresolved_fraction,
        })),
        Format::Csv => {
            let mut s = String::from("w,p,value,stderr\n");
            for (g, v) in &values {
                writeln!(s, "{},{},{},{}", g.w, g.p, v.value, v.stderr).expect("string write");
            }
            csv_artifact(s)
        }
    })
}
