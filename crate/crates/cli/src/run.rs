//! Executes one configured run and writes its outputs.

use std::fs;
use std::path::PathBuf;

use bloch_nitsche::assembly::AssemblyError;
use bloch_nitsche::geometry::{honeycomb_inclusions, GeometryError, Vec2};
use bloch_nitsche::mesh::{assumption_check, build_cylinder_mesh, build_torus_mesh, MeshError, Violation};
use bloch_nitsche::workflows::{
    bulk_band_sweep, convergence_study, cylinder_discretization, dual_cell_boundary_path, edge_band_sweep,
    high_symmetry_path, honeycomb_model, kpar_samples, spectral_band_sweep, EdgeOptions, EdgeSweep, KSample, ModeTag,
    Problem, Settings, WorkflowError,
};
use bloch_nitsche::HexLattice64;
use thiserror::Error;

use crate::config::{ConfigError, KPath, KPoint, Mode, RunConfig};
use crate::output::{
    bands_csv, convergence_csv, dump_mode_field, edge_modes_csv, envelope_csv, render_bands_svg, write_text,
    OutputError, SvgLayers,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("interface assumption violated: {0}")]
    Assumption(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    /// 2 config or I/O, 3 assumption violation, 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<WorkflowError<f64>> for CliError {
    fn from(e: WorkflowError<f64>) -> Self {
        let geometric = matches!(
            &e,
            WorkflowError::Geometry(GeometryError::AssumptionViolation { .. })
                | WorkflowError::Mesh(MeshError::Geometry(GeometryError::AssumptionViolation { .. }))
                | WorkflowError::Assembly(AssemblyError::Geometry(GeometryError::AssumptionViolation { .. }))
                | WorkflowError::Assembly(AssemblyError::Mesh(MeshError::Geometry(
                    GeometryError::AssumptionViolation { .. }
                )))
        );
        if geometric {
            CliError::Assumption(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

/// Files written and a human-readable summary.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// Non-fatal diagnostics (strict assumption violations in sweeps).
    pub warnings: Vec<String>,
}

fn settings(cfg: &RunConfig) -> Settings<f64> {
    Settings {
        radius: cfg.radius,
        lambda_hat: cfg.lambda_hat,
        m_arc: cfg.m_arc,
        ..Settings::default()
    }
}

/// Runs `cfg` on a pool of `cfg.threads` workers (rayon default otherwise).
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Solver(format!("cannot start thread pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    if cfg.mode == Mode::Check {
        return check(cfg, out);
    }
    fs::create_dir_all(&cfg.out).map_err(|source| OutputError::Io {
        path: cfg.out.display().to_string(),
        source,
    })?;
    out.warnings = strict_violations(cfg)?;
    match cfg.mode {
        Mode::BulkBands => bulk(cfg, &mut out)?,
        Mode::SpectralBands => spectral(cfg, &mut out)?,
        Mode::EdgeBands => edge(cfg, &mut out)?,
        Mode::Modes => modes(cfg, &mut out)?,
        Mode::Convergence => convergence(cfg, &mut out)?,
        Mode::Check => unreachable!(),
    }
    Ok(out)
}

fn emit(out: &mut Outcome, path: PathBuf, text: &str) -> Result<(), CliError> {
    write_text(&path, text)?;
    out.files.push(path);
    Ok(())
}

fn path_for(cfg: &RunConfig) -> Vec<KSample<f64>> {
    let lat = HexLattice64::honeycomb();
    match cfg.kpath {
        KPath::Gkmg => high_symmetry_path(&lat, cfg.samples_per_leg),
        KPath::DualBoundary => dual_cell_boundary_path(&lat, cfg.samples_per_leg),
    }
}

fn bulk(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let bs = bulk_band_sweep(cfg.material(), cfg.n, &path_for(cfg), cfg.bulk_nev(), &settings(cfg))?;
    emit(out, cfg.out.join("bands.csv"), &bands_csv(&bs))?;
    let title = format!("bulk bands, J = {}, gamma = {}, N = {}", cfg.j, cfg.gamma, cfg.n);
    let svg = render_bands_svg(
        &bs,
        &SvgLayers {
            title: &title,
            ..Default::default()
        },
    );
    emit(out, cfg.out.join("bands.svg"), &svg)?;
    out.summary
        .push(format!("{} samples, {} bands", bs.samples.len(), bs.nev()));
    Ok(())
}

fn spectral(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let bs = spectral_band_sweep(
        cfg.material(),
        cfg.spectral_m,
        &path_for(cfg),
        cfg.bulk_nev(),
        cfg.radius,
    )?;
    emit(out, cfg.out.join("spectral_bands.csv"), &bands_csv(&bs))?;
    let title = format!(
        "plane-wave bands, J = {}, gamma = {}, M = {}",
        cfg.j, cfg.gamma, cfg.spectral_m
    );
    let svg = render_bands_svg(
        &bs,
        &SvgLayers {
            title: &title,
            ..Default::default()
        },
    );
    emit(out, cfg.out.join("spectral_bands.svg"), &svg)?;
    out.summary
        .push(format!("{} samples, {} bands", bs.samples.len(), bs.nev()));
    Ok(())
}

fn edge_options(cfg: &RunConfig, keep_vectors: bool) -> EdgeOptions<f64> {
    EdgeOptions {
        nev: cfg.nev,
        envelope_bands: cfg.envelope_bands,
        lambda_samples: cfg.lambda_samples,
        thresholds: None,
        keep_vectors,
    }
}

fn edge_marks(sw: &EdgeSweep<f64>) -> Vec<(f64, f64)> {
    sw.modes
        .iter()
        .flatten()
        .filter(|m| m.tag == ModeTag::Edge && m.in_gap)
        .map(|m| (sw.bands.samples[m.sample].arc, m.eigenvalue))
        .collect()
}

fn edge(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let samples = kpar_samples(cfg.kpar_samples);
    let sw = edge_band_sweep(
        cfg.material(),
        cfg.n,
        cfg.l,
        &samples,
        &edge_options(cfg, false),
        &settings(cfg),
    )?;
    emit(out, cfg.out.join("edge_bands.csv"), &bands_csv(&sw.bands))?;
    emit(out, cfg.out.join("edge_modes.csv"), &edge_modes_csv(&sw))?;
    emit(out, cfg.out.join("envelope.csv"), &envelope_csv(&sw))?;
    let env: Vec<_> = sw.envelopes.iter().map(|e| e.union.clone()).collect();
    let marks = edge_marks(&sw);
    let title = format!(
        "edge bands, J = {}, delta = {}, N = {}, L = {}",
        cfg.j, cfg.delta, cfg.n, cfg.l
    );
    let svg = render_bands_svg(
        &sw.bands,
        &SvgLayers {
            envelope: (env.len() == samples.len()).then_some(env.as_slice()),
            edge_marks: &marks,
            title: &title,
        },
    );
    emit(out, cfg.out.join("edge_bands.svg"), &svg)?;
    out.summary.push(format!(
        "{} samples, {} modes per sample, {} in-gap edge modes",
        samples.len(),
        sw.bands.nev(),
        marks.len()
    ));
    Ok(())
}

fn modes(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let samples = [KSample {
        coords: vec![cfg.kpar],
        arc: cfg.kpar,
        label: String::new(),
    }];
    let s = settings(cfg);
    let sw = edge_band_sweep(cfg.material(), cfg.n, cfg.l, &samples, &edge_options(cfg, true), &s)?;
    emit(out, cfg.out.join("modes.csv"), &edge_modes_csv(&sw))?;
    let fields = &sw.modes[0];
    let selected: Vec<usize> = if !cfg.dump_modes.is_empty() {
        cfg.dump_modes.iter().map(|m| m - 1).collect()
    } else {
        let in_gap: Vec<usize> = fields.iter().filter(|m| m.in_gap).map(|m| m.mode).collect();
        if in_gap.is_empty() {
            vec![0]
        } else {
            in_gap
        }
    };
    let disc = cylinder_discretization(
        honeycomb_model(cfg.material(), cfg.radius).map_err(WorkflowError::from)?,
        cfg.n,
        cfg.l,
        cfg.m_arc,
    )?;
    for m in selected {
        let Some(field) = fields.get(m) else {
            return Err(ConfigError::OutOfRange {
                key: "dump_modes".into(),
                value: (m + 1).to_string(),
                range: format!("1..={}", fields.len()),
            }
            .into());
        };
        let v = field.vector.as_ref().expect("vectors kept");
        let path = cfg.out.join(format!("mode_{:03}.csv", m + 1));
        dump_mode_field(&disc, v, cfg.grid_res, &path)?;
        out.files.push(path);
        out.summary.push(format!(
            "mode {}: E = {}, tag {}, center {:.3}, boundary {:.3}{}",
            m + 1,
            field.eigenvalue,
            field.tag.as_str(),
            field.localization.center,
            field.localization.boundary,
            if field.in_gap { ", in gap" } else { "" }
        ));
    }
    if let Some((lo, hi)) = sw.gaps[0] {
        out.summary.push(format!("continuous-spectrum gap ({lo}, {hi})"));
    }
    Ok(())
}

fn convergence(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let lat = HexLattice64::honeycomb();
    let hs = lat.high_symmetry_points();
    let problem = if cfg.cylinder {
        Problem::Cylinder {
            k_par: cfg.kpar,
            l: cfg.l,
        }
    } else {
        Problem::Torus {
            k: match cfg.k {
                KPoint::Gamma => hs.gamma,
                KPoint::K => hs.k,
                KPoint::M => hs.m,
                KPoint::Custom(x, y) => Vec2::new(x, y),
            },
        }
    };
    let t = convergence_study(cfg.material(), problem, &cfg.n_list, cfg.bulk_nev(), &settings(cfg))?;
    emit(out, cfg.out.join("convergence.csv"), &convergence_csv(&t))?;
    let slopes: Vec<String> = t.slopes.iter().map(|s| format!("{s:.3}")).collect();
    out.summary.push(format!("slopes: {}", slopes.join(" ")));
    Ok(())
}

fn describe(label: &str, v: &[Violation]) -> String {
    let first = v
        .first()
        .map(|x| format!("; element {}: {}", x.element, x.reason))
        .unwrap_or_default();
    format!(
        "{label}: {} elements violate the strict interface assumption{first}",
        v.len()
    )
}

/// Strict assumption check on the meshes a run uses.
fn strict_violations(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let lat = HexLattice64::honeycomb();
    let incs = honeycomb_inclusions(&lat, cfg.radius).map_err(|e| CliError::Assumption(e.to_string()))?;
    let mut meshes = Vec::new();
    let cylinder = cfg.mode.is_edge() || (cfg.mode == Mode::Convergence && cfg.cylinder) || cfg.mode == Mode::Check;
    let torus = !cylinder || cfg.mode == Mode::EdgeBands || cfg.mode == Mode::Check;
    let ns: Vec<usize> = if cfg.mode == Mode::Convergence {
        cfg.n_list.clone()
    } else {
        vec![cfg.n]
    };
    for &n in &ns {
        if cfg.mode == Mode::SpectralBands {
            break;
        }
        if torus {
            let m = build_torus_mesh(&lat, n).map_err(|e| CliError::Solver(e.to_string()))?;
            meshes.push((format!("torus N = {n}"), m));
        }
        if cylinder {
            let m = build_cylinder_mesh(&lat, n, cfg.l).map_err(|e| CliError::Solver(e.to_string()))?;
            meshes.push((format!("cylinder N = {n}, L = {}", cfg.l), m));
        }
    }
    Ok(meshes
        .iter()
        .filter_map(|(label, m)| assumption_check(m, &incs).err().map(|v| describe(label, &v)))
        .collect())
}

fn check(cfg: &RunConfig, mut out: Outcome) -> Result<Outcome, CliError> {
    let problems = strict_violations(cfg)?;
    if !problems.is_empty() {
        return Err(CliError::Assumption(problems.join("\n")));
    }
    out.summary.push(format!(
        "material elliptic; interface assumption holds on torus N = {} and cylinder N = {}, L = {}",
        cfg.n, cfg.n, cfg.l
    ));
    Ok(out)
}
