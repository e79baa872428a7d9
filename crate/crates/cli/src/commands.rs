use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use metricgraph_core::density::{density_map, ConcentrationReport};
use metricgraph_core::io::{
    read_corpus_file, read_entity_table_file, read_matrix_file, LabeledMatrix,
};
use metricgraph_core::{
    influence, nearest_in_subset, neighbors, spectral_classes, validate_semimetric, DataSource,
    Error, SemimetricReport,
};
use serde_json::{json, Map, Value};

use crate::config::{BuilderName, PipelineConfig};
use crate::error::{CliError, CliResult, ExitClass};
use crate::output::{self, report_number, to_value, DirLock, OutputDir};
use crate::{Command, Format, Query};

/// Runs one command; `Ok(Some(text))` is printed on standard output.
pub fn execute(cmd: &Command) -> CliResult<Option<String>> {
    match cmd {
        Command::Build {
            input,
            config,
            out,
            meta,
        } => build(input, config.as_deref(), out, meta.as_deref()).map(|_| None),
        Command::Analyze {
            matrix,
            config,
            out,
            format,
        } => analyze(matrix, config.as_deref(), out, *format).map(|_| None),
        Command::Query { query } => query_cmd(query).map(|v| Some(output::render(v))),
        Command::Validate { matrix, config, tol } => {
            let cfg = PipelineConfig::load(config.as_deref())?;
            let m = read_matrix_file(matrix)?;
            let tol = tol.unwrap_or(cfg.tolerances.validation);
            if !(tol >= 0.0) {
                return Err(CliError::new(ExitClass::Input, "--tol must be non-negative"));
            }
            let report = validate_semimetric(&m.matrix, tol);
            Ok(Some(output::render(validation_value(&m.ids, &report, tol)?)))
        }
    }
}

const CORPUS_HEADER: &str = "entity_id,doc_id,count";

/// Reads `input` in the shape the configured builder consumes.
pub fn load_source(input: &Path, meta: Option<&Path>, cfg: &PipelineConfig) -> CliResult<DataSource> {
    if cfg.builder == BuilderName::Matrix {
        let m = read_matrix_file(input)?;
        return Ok(DataSource::Matrix {
            ids: m.ids,
            matrix: m.matrix,
        });
    }
    if first_line(input)? == CORPUS_HEADER {
        if meta.is_some() {
            return Err(CliError::new(ExitClass::Input, "--meta applies to entity tables only"));
        }
        Ok(DataSource::Corpus(read_corpus_file(input)?))
    } else {
        Ok(DataSource::Table(read_entity_table_file(input, meta)?))
    }
}

fn first_line(path: &Path) -> CliResult<String> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::from(Error::Io(format!("{}: {e}", path.display()))))?;
    let mut line = String::new();
    BufReader::new(f)
        .read_line(&mut line)
        .map_err(|e| CliError::from(Error::Io(format!("{}: {e}", path.display()))))?;
    Ok(line.trim().trim_start_matches('\u{feff}').replace(' ', ""))
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

fn config_digest(cfg: &PipelineConfig) -> CliResult<String> {
    let text = serde_json::to_string(&to_value(cfg)?).expect("values serialize");
    Ok(output::digest_bytes(text.as_bytes()))
}

struct Stages {
    started_ms: u128,
    last: Instant,
    durations: Map<String, Value>,
}

impl Stages {
    fn start() -> Self {
        Stages {
            started_ms: now_ms(),
            last: Instant::now(),
            durations: Map::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
        self.durations.insert(name.to_string(), json!(ms));
        self.last = now;
    }
}

fn write_manifest(
    out: &mut OutputDir,
    command: &str,
    cfg: &PipelineConfig,
    inputs: &[&Path],
    stages: Stages,
) -> CliResult<()> {
    let mut input_digests = Map::new();
    for p in inputs {
        input_digests.insert(p.display().to_string(), json!(output::digest_file(p)?));
    }
    let outputs: Map<String, Value> = out
        .digests()
        .iter()
        .map(|(name, d)| (name.clone(), json!(d)))
        .collect();
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": to_value(cfg)?,
        "config_digest": config_digest(cfg)?,
        "inputs": input_digests,
        "outputs": outputs,
        "started_at_ms": stages.started_ms as u64,
        "finished_at_ms": now_ms() as u64,
        "durations_ms": stages.durations,
    });
    out.write_json("manifest.json", manifest)
}

fn validation_value(ids: &[String], r: &SemimetricReport, tol: f64) -> CliResult<Value> {
    let mut v = to_value(r)?;
    v["tolerance"] = json!(tol);
    v["is_pseudo_metric"] = json!(r.is_pseudo_metric());
    v["entities"] = json!(ids.len());
    Ok(v)
}

fn build(input: &Path, config: Option<&Path>, out_dir: &Path, meta: Option<&Path>) -> CliResult<()> {
    let mut stages = Stages::start();
    let cfg = PipelineConfig::load(config)?;
    let source = load_source(input, meta, &cfg)?;
    stages.lap("read");
    let result = cfg.pipeline().run(&source)?;
    stages.lap("pipeline");

    let _lock = DirLock::acquire(out_dir)?;
    let mut out = OutputDir::new(out_dir);
    let ids = &result.ids;
    out.write_matrix("phi.csv", ids, &result.phi)?;
    out.write_matrix("dphi.csv", ids, &result.gauge.distances)?;
    if let Some(de) = &result.d_e {
        out.write_matrix("de.csv", ids, de)?;
    }
    out.write_matrix("d.csv", ids, &result.d)?;
    if let Some(corr) = &result.corr {
        out.write_matrix("corr.csv", ids, corr)?;
    }

    let tol = cfg.tolerances.validation;
    let merges: Vec<Value> = result
        .merges
        .iter()
        .map(|m| json!({"kept": m.kept, "absorbed": m.absorbed}))
        .collect();
    let validation = json!({
        "builder": cfg.builder,
        "phi": validation_value(ids, &validate_semimetric(&result.phi, tol), tol)?,
        "dphi": validation_value(ids, &result.gauge.triangle_report, metricgraph_core::matrix::DEFAULT_TOL)?,
        "d": validation_value(ids, &validate_semimetric(&result.d, tol), tol)?,
        "gauge": {
            "order_used": to_value(&result.gauge.order_used)?,
            "converged": result.gauge.converged,
            "max_change": result.gauge.max_change,
        },
        "merges": merges,
        "warnings": result.warnings,
    });
    out.write_json("validation.json", validation)?;
    stages.lap("write");

    let mut inputs = vec![input];
    if let Some(p) = config {
        inputs.push(p);
    }
    if let Some(p) = meta {
        inputs.push(p);
    }
    write_manifest(&mut out, "build", &cfg, &inputs, stages)
}

fn density_value(ids: &[String], rep: &ConcentrationReport) -> CliResult<Value> {
    let entities: Vec<Value> = rep
        .entities
        .iter()
        .map(|e| {
            Ok(json!({
                "id": ids[e.entity],
                "c_r": e.c_r,
                "r_max": e.r_max,
                "z": e.z,
                "robust_z": e.robust_z,
                "flag": to_value(&e.flag)?,
            }))
        })
        .collect::<CliResult<_>>()?;
    Ok(json!({
        "r": rep.r,
        "mean": rep.mean,
        "std": rep.std,
        "median": rep.median,
        "mad": rep.mad,
        "entities": entities,
    }))
}

fn flag_name(v: &Value) -> String {
    v.as_str().unwrap_or_default().to_string()
}

fn analyze(matrix: &Path, config: Option<&Path>, out_dir: &Path, format: Format) -> CliResult<()> {
    let mut stages = Stages::start();
    let cfg = PipelineConfig::load(config)?;
    let request = cfg.density_request()?;
    let m = read_matrix_file(matrix)?;
    stages.lap("read");

    let tol = cfg.tolerances.validation;
    let report = validate_semimetric(&m.matrix, tol);
    if !report.is_semimetric_shape() {
        return Err(CliError::from(Error::Validation(format!(
            "{} is not a distance matrix (symmetric: {}, zero diagonal: {}, non-negative: {})",
            matrix.display(),
            report.symmetric,
            report.zero_diagonal,
            report.non_negative
        ))));
    }
    let density = density_map(&m.matrix, None, &request)?;
    stages.lap("density");

    let _lock = DirLock::acquire(out_dir)?;
    let mut out = OutputDir::new(out_dir);
    let dv = density_value(&m.ids, &density)?;
    match format {
        Format::Json => out.write_json("density.json", dv)?,
        Format::Csv => {
            let mut text = String::from("id,c_r,r_max,z,robust_z,flag\n");
            for (e, v) in density.entities.iter().zip(dv["entities"].as_array().expect("array")) {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    m.ids[e.entity],
                    report_number(e.c_r),
                    report_number(e.r_max),
                    report_number(e.z),
                    report_number(e.robust_z),
                    flag_name(&v["flag"])
                ));
            }
            out.write_text("density.csv", &text)?;
        }
    }
    let mut rmax = String::from("id,r_max\n");
    for e in &density.entities {
        rmax.push_str(&format!("{},{}\n", m.ids[e.entity], report_number(e.r_max)));
    }
    out.write_text("rmax.csv", &rmax)?;

    let mut v = validation_value(&m.ids, &report, tol)?;
    let mut warnings = Vec::new();
    if report.triangle_violation_count > 0 {
        warnings.push(format!(
            "{} triangle violations in the input matrix",
            report.triangle_violation_count
        ));
    }
    v["warnings"] = json!(warnings);
    out.write_json("validation.json", v)?;
    stages.lap("write");

    let mut inputs = vec![matrix];
    if let Some(p) = config {
        inputs.push(p);
    }
    write_manifest(&mut out, "analyze", &cfg, &inputs, stages)
}

fn lookup_all(m: &LabeledMatrix, ids: &[String]) -> CliResult<Vec<usize>> {
    ids.iter().map(|id| Ok(m.lookup(id)?)).collect()
}

fn query_cmd(q: &Query) -> CliResult<Value> {
    match q {
        Query::Neighbors { matrix, id, eps } => {
            let m = read_matrix_file(matrix)?;
            let a = m.lookup(id)?;
            let hits = neighbors(&m.matrix, a, *eps)?;
            Ok(Value::Array(
                hits.into_iter()
                    .map(|(b, d)| json!({"id": m.ids[b], "distance": d}))
                    .collect(),
            ))
        }
        Query::Nearest { matrix, id, subset } => {
            let m = read_matrix_file(matrix)?;
            let a = m.lookup(id)?;
            let s = lookup_all(&m, subset)?;
            let hits = nearest_in_subset(&m.matrix, a, &s)?;
            Ok(json!(hits.into_iter().map(|b| m.ids[b].clone()).collect::<Vec<_>>()))
        }
        Query::Influence {
            input,
            id,
            config,
            meta,
        } => {
            let cfg = PipelineConfig::load(config.as_deref())?;
            let source = load_source(input, meta.as_deref(), &cfg)?;
            let r = influence(&cfg.pipeline(), &source, id)?;
            Ok(json!({
                "id": r.id,
                "influence": r.influence,
                "order": to_value(&r.recompute_order)?,
            }))
        }
        Query::Spectral {
            corr,
            config,
            eps,
            delta,
        } => {
            let cfg = PipelineConfig::load(config.as_deref())?;
            let eps = eps.unwrap_or(cfg.tolerances.spectral_eps);
            let delta = delta.unwrap_or(cfg.tolerances.spectral_delta);
            let m = read_matrix_file(corr)?;
            let s = spectral_classes(&m.matrix, eps, delta)?;
            let name = |i: &usize| m.ids[*i].clone();
            let classes: Vec<Vec<String>> = s.classes.iter().map(|c| c.iter().map(name).collect()).collect();
            let residuals: Vec<Value> = s
                .residuals
                .iter()
                .enumerate()
                .map(|(i, r)| json!({"id": m.ids[i], "residual": r}))
                .collect();
            Ok(json!({
                "eigenvalues": s.eigenvalues,
                "subspace_dim": s.subspace_dim,
                "classes": classes,
                "redundant": s.redundant.iter().map(name).collect::<Vec<_>>(),
                "residuals": residuals,
            }))
        }
    }
}
