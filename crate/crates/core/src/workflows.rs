//! Band sweeps, continuous-spectrum envelopes, edge-mode classification and
//! convergence studies.
//!
//! Independent samples run on the rayon pool; results are collected in sample
//! order and every solve is single-threaded, so outputs are bitwise
//! reproducible regardless of the worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{AssemblyError, BlochParams, Discretization, DEFAULT_LAMBDA_HAT, DEFAULT_M_ARC};
use crate::eigensolve::{count_below, solve_smallest, EigenError, EigenOptions, EigenResult};
use crate::geometry::{honeycomb_inclusions, GeometryError, HexLattice, Vec2};
use crate::material::{MaterialModel, MaterialParams};
use crate::mesh::{build_cylinder_mesh, build_torus_mesh, MeshError};
use crate::scalar::{Cx, Real};
use crate::spectral::{default_grid, fourier_coefficients_w, spectral_bands_with, PlaneWaveBasis, SpectralError};

#[derive(Clone, Debug, Error)]
pub enum WorkflowError<T: Real> {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError<T>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spectral(#[from] SpectralError<T>),
    #[error("invalid input: {0}")]
    BadInput(String),
}

impl<T: Real> From<crate::linalg::LinalgError> for WorkflowError<T> {
    fn from(e: crate::linalg::LinalgError) -> Self {
        WorkflowError::Eigen(EigenError::Linalg(e))
    }
}

/// Shared discretization settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings<T> {
    pub radius: T,
    pub lambda_hat: T,
    pub m_arc: usize,
    pub eigen: EigenOptions<T>,
}

impl<T: Real> Default for Settings<T> {
    fn default() -> Self {
        Self {
            radius: T::lit(0.2),
            lambda_hat: T::lit(DEFAULT_LAMBDA_HAT),
            m_arc: DEFAULT_M_ARC,
            eigen: EigenOptions::default(),
        }
    }
}

/// Material model on the honeycomb lattice with discs of radius `settings.radius`.
pub fn honeycomb_model<T: Real>(params: MaterialParams<T>, radius: T) -> Result<MaterialModel<T>, GeometryError> {
    let lat = HexLattice::honeycomb();
    let incs = honeycomb_inclusions(&lat, radius)?.to_vec();
    Ok(MaterialModel::new(params, lat, incs))
}

pub fn torus_discretization<T: Real>(
    model: MaterialModel<T>,
    n: usize,
    m_arc: usize,
) -> Result<Discretization<T>, WorkflowError<T>> {
    let mesh = build_torus_mesh(&model.lattice, n)?;
    Ok(Discretization::new(mesh, model, m_arc)?)
}

pub fn cylinder_discretization<T: Real>(
    model: MaterialModel<T>,
    n: usize,
    l: usize,
    m_arc: usize,
) -> Result<Discretization<T>, WorkflowError<T>> {
    let mesh = build_cylinder_mesh(&model.lattice, n, l)?;
    Ok(Discretization::new(mesh, model, m_arc)?)
}

/// One sample of a sweep: `[kx, ky]` for torus paths, `[k_par]` for cylinders.
#[derive(Clone, Debug, PartialEq)]
pub struct KSample<T> {
    pub coords: Vec<T>,
    /// Cumulative path length (or `k_par` itself for cylinder sweeps).
    pub arc: T,
    pub label: String,
}

impl<T: Real> KSample<T> {
    pub fn k(&self) -> Vec2<T> {
        Vec2::new(self.coords[0], self.coords[1])
    }
}

/// Sample-by-mode eigenvalue table.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure<T> {
    pub samples: Vec<KSample<T>>,
    /// `bands[s][m]`, ascending in `m`.
    pub bands: Vec<Vec<T>>,
    /// `key=value` description of the run.
    pub metadata: Vec<(String, String)>,
}

impl<T: Real> BandStructure<T> {
    pub fn nev(&self) -> usize {
        self.bands.first().map_or(0, |b| b.len())
    }
}

fn polyline<T: Real>(corners: &[(Vec2<T>, &str)], per_leg: usize) -> Vec<KSample<T>> {
    let mut out = Vec::new();
    let mut arc = T::zero();
    for w in corners.windows(2) {
        let (a, la) = w[0];
        let (b, _) = w[1];
        let len = (b - a).norm();
        for j in 0..per_leg {
            let t = T::from_usize_lossy(j) / T::from_usize_lossy(per_leg);
            let k = a.lerp(b, t);
            out.push(KSample {
                coords: vec![k.x, k.y],
                arc: arc + len * t,
                label: if j == 0 { la.to_string() } else { String::new() },
            });
        }
        arc += len;
    }
    let (last, ll) = corners[corners.len() - 1];
    out.push(KSample {
        coords: vec![last.x, last.y],
        arc,
        label: ll.to_string(),
    });
    out
}

/// `Gamma -> K -> M -> Gamma` with `per_leg` uniform samples per leg (`3 per_leg + 1` total).
pub fn high_symmetry_path<T: Real>(lattice: &HexLattice<T>, per_leg: usize) -> Vec<KSample<T>> {
    let hs = lattice.high_symmetry_points();
    polyline(
        &[(hs.gamma, "G"), (hs.k, "K"), (hs.m, "M"), (hs.gamma, "G")],
        per_leg.max(1),
    )
}

/// Closed loop around the boundary of the hexagonal dual cell, starting at `K`.
pub fn dual_cell_boundary_path<T: Real>(lattice: &HexLattice<T>, per_leg: usize) -> Vec<KSample<T>> {
    let k = lattice.high_symmetry_points().k;
    let (s, c) = (T::PI() / T::lit(3.0)).sin_cos();
    let mut corners = Vec::with_capacity(7);
    let mut p = k;
    for i in 0..7 {
        corners.push((p, if i % 2 == 0 { "K" } else { "K'" }));
        p = Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y);
    }
    polyline(&corners, per_leg.max(1))
}

/// Uniform `k_par` samples in `[0, 2 pi]`.
pub fn kpar_samples<T: Real>(count: usize) -> Vec<KSample<T>> {
    let count = count.max(1);
    (0..count)
        .map(|i| {
            let kp = if count == 1 {
                T::zero()
            } else {
                T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1)
            };
            KSample {
                coords: vec![kp],
                arc: kp,
                label: String::new(),
            }
        })
        .collect()
}

/// Solves the bulk problem at every `k` (parallel over samples).
pub fn bulk_solves<T: Real>(
    disc: &Discretization<T>,
    ks: &[Vec2<T>],
    nev: usize,
    settings: &Settings<T>,
) -> Result<Vec<EigenResult<T>>, WorkflowError<T>> {
    ks.par_iter()
        .map(|&k| {
            let sys = disc.assemble(BlochParams::Torus { k }, settings.lambda_hat)?;
            Ok(solve_smallest(&sys.a, &sys.b, nev, &settings.eigen)?)
        })
        .collect()
}

/// Bulk dispersion along `path` on an `n`-mesh.
pub fn bulk_band_sweep<T: Real>(
    params: MaterialParams<T>,
    n: usize,
    path: &[KSample<T>],
    nev: usize,
    settings: &Settings<T>,
) -> Result<BandStructure<T>, WorkflowError<T>> {
    let disc = torus_discretization(honeycomb_model(params, settings.radius)?, n, settings.m_arc)?;
    let ks: Vec<Vec2<T>> = path.iter().map(|s| s.k()).collect();
    let results = bulk_solves(&disc, &ks, nev, settings)?;
    Ok(BandStructure {
        samples: path.to_vec(),
        bands: results.into_iter().map(|r| r.eigenvalues).collect(),
        metadata: metadata(&params, n, None, settings),
    })
}

/// Plane-wave reference dispersion along `path` with basis order `m`.
pub fn spectral_band_sweep<T: Real>(
    params: MaterialParams<T>,
    m: usize,
    path: &[KSample<T>],
    nev: usize,
    radius: T,
) -> Result<BandStructure<T>, WorkflowError<T>> {
    let model = honeycomb_model(params, radius)?;
    let basis = PlaneWaveBasis::new(&model.lattice, m)?;
    let coeffs = fourier_coefficients_w(&model, default_grid(m), m)?;
    let bands = path
        .par_iter()
        .map(|s| Ok(spectral_bands_with(&coeffs, &basis, s.k(), nev)?.eigenvalues))
        .collect::<Result<_, WorkflowError<T>>>()?;
    let mut metadata = vec![
        ("eps_a".into(), format!("{}", params.eps_a.to_f64_lossy())),
        ("eps_b".into(), format!("{}", params.eps_b.to_f64_lossy())),
        ("eps0".into(), format!("{}", params.eps0.to_f64_lossy())),
        ("coupling".into(), format!("{:?}", params.coupling)),
    ];
    metadata.push(("M".into(), m.to_string()));
    metadata.push(("radius".into(), format!("{}", radius.to_f64_lossy())));
    Ok(BandStructure {
        samples: path.to_vec(),
        bands,
        metadata,
    })
}

fn metadata<T: Real>(
    params: &MaterialParams<T>,
    n: usize,
    l: Option<usize>,
    settings: &Settings<T>,
) -> Vec<(String, String)> {
    let mut m = vec![
        ("eps_a".into(), format!("{}", params.eps_a.to_f64_lossy())),
        ("eps_b".into(), format!("{}", params.eps_b.to_f64_lossy())),
        ("eps0".into(), format!("{}", params.eps0.to_f64_lossy())),
        ("coupling".into(), format!("{:?}", params.coupling)),
        ("N".into(), n.to_string()),
    ];
    if let Some(l) = l {
        m.push(("L".into(), l.to_string()));
    }
    m.push(("lambda_hat".into(), format!("{}", settings.lambda_hat.to_f64_lossy())));
    m.push(("m_arc".into(), settings.m_arc.to_string()));
    m.push(("radius".into(), format!("{}", settings.radius.to_f64_lossy())));
    m
}

/// Closed interval `[min, max]` swept by one band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandInterval<T> {
    pub min: T,
    pub max: T,
}

/// Per-band `[inf, sup]` of `E_m(lambda k2 + (k_par / 2 pi) k1)` over
/// `lambda` in `[-1/2, 1/2]` for one bulk material.
pub fn band_envelope<T: Real>(
    disc: &Discretization<T>,
    k_par: T,
    nev: usize,
    lambda_samples: usize,
    settings: &Settings<T>,
) -> Result<Vec<BandInterval<T>>, WorkflowError<T>> {
    let lat = &disc.mesh.lattice;
    let s = lambda_samples.max(2);
    let ks: Vec<Vec2<T>> = (0..s)
        .map(|i| {
            let lam = T::from_usize_lossy(i) / T::from_usize_lossy(s - 1) - T::lit(0.5);
            lat.k2 * lam + lat.k1 * (k_par / T::TAU())
        })
        .collect();
    let results = bulk_solves(disc, &ks, nev, settings)?;
    let mut out = vec![
        BandInterval {
            min: T::infinity(),
            max: T::neg_infinity(),
        };
        nev
    ];
    for r in &results {
        for (iv, &e) in out.iter_mut().zip(&r.eigenvalues) {
            iv.min = iv.min.min(e);
            iv.max = iv.max.max(e);
        }
    }
    Ok(out)
}

/// Envelopes of both wall asymptotes of an edge material and their union.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope<T> {
    pub plus: Vec<BandInterval<T>>,
    pub minus: Vec<BandInterval<T>>,
    pub union: Vec<BandInterval<T>>,
}

impl<T: Real> Envelope<T> {
    /// First gap `(band_below, lower_edge, upper_edge)` of the union.
    pub fn first_gap(&self) -> Option<(usize, T, T)> {
        first_gap(&self.union)
    }
}

/// First `m` with `sup E_m < inf E_{m+1}`; bands are 1-based.
pub fn first_gap<T: Real>(intervals: &[BandInterval<T>]) -> Option<(usize, T, T)> {
    let mut top = T::neg_infinity();
    for (m, w) in intervals.windows(2).enumerate() {
        top = top.max(w[0].max);
        if top < w[1].min {
            return Some((m + 1, top, w[1].min));
        }
    }
    None
}

/// Continuous-spectrum envelope of the edge problem at `k_par` from the two
/// bulk materials reached far from the wall.
pub fn continuous_spectrum_envelope<T: Real>(
    params: MaterialParams<T>,
    k_par: T,
    n: usize,
    nev: usize,
    lambda_samples: usize,
    settings: &Settings<T>,
) -> Result<Envelope<T>, WorkflowError<T>> {
    let side = |sign: T| -> Result<Vec<BandInterval<T>>, WorkflowError<T>> {
        let p = params
            .wall_asymptote(sign)
            .ok_or_else(|| WorkflowError::BadInput("envelope needs an edge material".into()))?;
        let disc = torus_discretization(honeycomb_model(p, settings.radius)?, n, settings.m_arc)?;
        band_envelope(&disc, k_par, nev, lambda_samples, settings)
    };
    let plus = side(T::one())?;
    let minus = side(-T::one())?;
    let union = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| BandInterval {
            min: a.min.min(b.min),
            max: a.max.max(b.max),
        })
        .collect();
    Ok(Envelope { plus, minus, union })
}

/// Squared-mass fractions of a cylinder mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Localization<T> {
    /// `|tau2| <= c_band`.
    pub center: T,
    /// `|tau2| >= L - c_band`.
    pub boundary: T,
    pub middle: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeTag {
    Bulk,
    Edge,
    PseudoEdge,
}

impl ModeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeTag::Bulk => "bulk",
            ModeTag::Edge => "edge",
            ModeTag::PseudoEdge => "pseudo-edge",
        }
    }
}

/// Band half-width (in cells) and the mass threshold for a tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds<T> {
    pub c_band: T,
    pub threshold: T,
}

impl<T: Real> Thresholds<T> {
    /// `c_band = L / 8`, threshold 0.6.
    pub fn for_length(l: usize) -> Self {
        Self {
            c_band: T::from_usize_lossy(l) / T::lit(8.0),
            threshold: T::lit(0.6),
        }
    }
}

/// Mass fractions of `v` by the `tau2` coordinate of each element centroid.
pub fn localization<T: Real>(disc: &Discretization<T>, v: &[Cx<T>], c_band: T) -> Localization<T> {
    let l = match disc.mesh.topology {
        crate::mesh::Topology::Cylinder { l } => T::from_usize_lossy(l),
        crate::mesh::Topology::Torus => T::one(),
    };
    let masses = disc.element_masses(v);
    let (mut c, mut b, mut total) = (T::zero(), T::zero(), T::zero());
    for (e, m) in masses.iter().enumerate() {
        let (_, t2) = disc.mesh.lattice.to_fractional(disc.mesh.centroid(e));
        let a = t2.abs();
        total += *m;
        if a <= c_band {
            c += *m;
        } else if a >= l - c_band {
            b += *m;
        }
    }
    if !(total > T::zero()) {
        return Localization {
            center: T::zero(),
            boundary: T::zero(),
            middle: T::one(),
        };
    }
    let center = c / total;
    let boundary = b / total;
    Localization {
        center,
        boundary,
        middle: T::one() - center - boundary,
    }
}

/// `Edge` if the center fraction reaches the threshold, `PseudoEdge` if the
/// boundary fraction does, otherwise `Bulk`.
pub fn classify_mode<T: Real>(loc: &Localization<T>, threshold: T) -> ModeTag {
    if loc.center >= threshold {
        ModeTag::Edge
    } else if loc.boundary >= threshold {
        ModeTag::PseudoEdge
    } else {
        ModeTag::Bulk
    }
}

/// One classified cylinder mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField<T> {
    pub sample: usize,
    pub mode: usize,
    pub eigenvalue: T,
    pub localization: Localization<T>,
    pub tag: ModeTag,
    /// Inside the continuous-spectrum gap, when a gap is known.
    pub in_gap: bool,
    pub vector: Option<Vec<Cx<T>>>,
}

/// Result of an edge sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSweep<T> {
    pub bands: BandStructure<T>,
    pub modes: Vec<Vec<ModeField<T>>>,
    /// First continuous-spectrum gap at each sample.
    pub gaps: Vec<Option<(T, T)>>,
    pub envelopes: Vec<Envelope<T>>,
}

/// Options of an edge sweep beyond the shared settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeOptions<T> {
    /// Eigenpairs per sample; estimated from the envelope when absent.
    pub nev: Option<usize>,
    /// Bulk bands used for the envelope.
    pub envelope_bands: usize,
    pub lambda_samples: usize,
    pub thresholds: Option<Thresholds<T>>,
    pub keep_vectors: bool,
}

impl<T: Real> Default for EdgeOptions<T> {
    fn default() -> Self {
        Self {
            nev: None,
            envelope_bands: 4,
            lambda_samples: 21,
            thresholds: None,
            keep_vectors: false,
        }
    }
}

/// Eigenvalue count needed to cover the first gap: inertia below the upper gap
/// edge plus five (falls back to `bands_below * 2L + 5`).
pub fn edge_nev_estimate<T: Real>(
    disc: &Discretization<T>,
    k_par: T,
    gap: Option<(usize, T, T)>,
    settings: &Settings<T>,
) -> Result<usize, WorkflowError<T>> {
    let l = match disc.mesh.topology {
        crate::mesh::Topology::Cylinder { l } => l,
        crate::mesh::Topology::Torus => 1,
    };
    let Some((below, _, top)) = gap else {
        return Ok((2 * l + 5).min(disc.n_dofs()));
    };
    let sys = disc.assemble(BlochParams::Cylinder { k_par }, settings.lambda_hat)?;
    let count = count_below(&sys.a, &sys.b, top).unwrap_or(below * 2 * l);
    Ok((count + 5).min(disc.n_dofs()))
}

/// Cylinder sweep over `k_par` samples with mode localization.
pub fn edge_band_sweep<T: Real>(
    params: MaterialParams<T>,
    n: usize,
    l: usize,
    samples: &[KSample<T>],
    opts: &EdgeOptions<T>,
    settings: &Settings<T>,
) -> Result<EdgeSweep<T>, WorkflowError<T>> {
    let model = honeycomb_model(params, settings.radius)?;
    let disc = cylinder_discretization(model, n, l, settings.m_arc)?;
    let thresholds = opts.thresholds.unwrap_or(Thresholds::for_length(l));
    let has_wall = params.wall_asymptote(T::one()).is_some();
    let per_sample: Vec<_> = samples
        .iter()
        .map(|s| -> Result<_, WorkflowError<T>> {
            let k_par = s.coords[0];
            let env = if has_wall {
                Some(continuous_spectrum_envelope(
                    params,
                    k_par,
                    n,
                    opts.envelope_bands,
                    opts.lambda_samples,
                    settings,
                )?)
            } else {
                None
            };
            Ok((k_par, env))
        })
        .collect::<Result<_, _>>()?;
    let nevs: Vec<usize> = per_sample
        .par_iter()
        .map(|(k_par, env)| match opts.nev {
            Some(v) => Ok(v.min(disc.n_dofs())),
            None => edge_nev_estimate(&disc, *k_par, env.as_ref().and_then(|e| e.first_gap()), settings),
        })
        .collect::<Result<_, _>>()?;
    // Same row length for every sample.
    let nev = nevs.iter().copied().max().unwrap_or(1);
    let solved: Vec<EigenResult<T>> = per_sample
        .par_iter()
        .map(|(k_par, _)| {
            let sys = disc.assemble(BlochParams::Cylinder { k_par: *k_par }, settings.lambda_hat)?;
            Ok(solve_smallest(&sys.a, &sys.b, nev, &settings.eigen)?)
        })
        .collect::<Result<_, WorkflowError<T>>>()?;
    let mut modes = Vec::with_capacity(samples.len());
    let mut gaps = Vec::with_capacity(samples.len());
    let mut envelopes = Vec::new();
    for (si, (r, (_, env))) in solved.iter().zip(&per_sample).enumerate() {
        let gap = env.as_ref().and_then(|e| e.first_gap()).map(|(_, lo, hi)| (lo, hi));
        let fields: Vec<ModeField<T>> = r
            .eigenvalues
            .par_iter()
            .zip(&r.eigenvectors)
            .enumerate()
            .map(|(mi, (&e, x))| {
                let loc = localization(&disc, x, thresholds.c_band);
                ModeField {
                    sample: si,
                    mode: mi,
                    eigenvalue: e,
                    localization: loc,
                    tag: classify_mode(&loc, thresholds.threshold),
                    in_gap: gap.is_some_and(|(lo, hi)| e > lo && e < hi),
                    vector: if opts.keep_vectors { Some(x.clone()) } else { None },
                }
            })
            .collect();
        modes.push(fields);
        gaps.push(gap);
        if let Some(env) = env {
            envelopes.push(env.clone());
        }
    }
    let bands = BandStructure {
        samples: samples.to_vec(),
        bands: solved.into_iter().map(|r| r.eigenvalues).collect(),
        metadata: metadata(&params, n, Some(l), settings),
    };
    Ok(EdgeSweep {
        bands,
        modes,
        gaps,
        envelopes,
    })
}

/// Torus at `k` or truncated cylinder of half-length `l` at `k_par`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem<T> {
    Torus { k: Vec2<T> },
    Cylinder { k_par: T, l: usize },
}

/// Eigenvalues per mesh, successive relative differences and fitted slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable<T> {
    pub n_list: Vec<usize>,
    /// `eigenvalues[j][i]`: mode `i` on mesh `n_list[j]`.
    pub eigenvalues: Vec<Vec<T>>,
    /// `errors[j][i] = |E_i(h_j) - E_i(h_{j+1})| / E_i(h_{j+1})`.
    pub errors: Vec<Vec<T>>,
    /// Least-squares slope of `log e_i` against `log h_j` per mode.
    pub slopes: Vec<T>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope<T: Real>(x: &[T], y: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let sxy = lx.iter().zip(&ly).map(|(a, b)| (*a - mx) * (*b - my)).sum::<T>();
    let sxx = lx.iter().map(|a| (*a - mx) * (*a - mx)).sum::<T>();
    sxy / sxx
}

/// Successive-refinement errors and slopes for the first `nev` eigenvalues.
pub fn convergence_study<T: Real>(
    params: MaterialParams<T>,
    problem: Problem<T>,
    n_list: &[usize],
    nev: usize,
    settings: &Settings<T>,
) -> Result<ConvergenceTable<T>, WorkflowError<T>> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WorkflowError::BadInput(
            "mesh list must be strictly increasing with at least three entries".into(),
        ));
    }
    let model = honeycomb_model(params, settings.radius)?;
    let eigenvalues: Vec<Vec<T>> = n_list
        .par_iter()
        .map(|&n| -> Result<Vec<T>, WorkflowError<T>> {
            let (disc, bloch) = match problem {
                Problem::Torus { k } => (
                    torus_discretization(model.clone(), n, settings.m_arc)?,
                    BlochParams::Torus { k },
                ),
                Problem::Cylinder { k_par, l } => (
                    cylinder_discretization(model.clone(), n, l, settings.m_arc)?,
                    BlochParams::Cylinder { k_par },
                ),
            };
            let sys = disc.assemble(bloch, settings.lambda_hat)?;
            Ok(solve_smallest(&sys.a, &sys.b, nev, &settings.eigen)?.eigenvalues)
        })
        .collect::<Result<_, _>>()?;
    let errors: Vec<Vec<T>> = eigenvalues
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (*a - *b).abs() / *b).collect())
        .collect();
    let h: Vec<T> = n_list[..n_list.len() - 1]
        .iter()
        .map(|&n| T::one() / T::from_usize_lossy(n))
        .collect();
    let slopes = (0..nev)
        .map(|i| {
            let e: Vec<T> = errors.iter().map(|row| row[i]).collect();
            fit_loglog_slope(&h, &e)
        })
        .collect();
    Ok(ConvergenceTable {
        n_list: n_list.to_vec(),
        eigenvalues,
        errors,
        slopes,
    })
}

/// Sorted `|k + G|^2` over dual-lattice vectors with `|m_i| <= reach`.
pub fn free_spectrum<T: Real>(lattice: &HexLattice<T>, k: Vec2<T>, reach: i64, count: usize) -> Vec<T> {
    let mut v: Vec<T> = (-reach..=reach)
        .flat_map(|a| (-reach..=reach).map(move |b| (a, b)))
        .map(|(a, b)| (k + lattice.dual_point(a, b)).norm2())
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.truncate(count);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{WallKind, WeightForm};

    #[test]
    fn path_has_labelled_corners() {
        let lat = HexLattice::<f64>::honeycomb();
        let p = high_symmetry_path(&lat, 10);
        assert_eq!(p.len(), 31);
        let labels: Vec<&str> = p
            .iter()
            .filter(|s| !s.label.is_empty())
            .map(|s| s.label.as_str())
            .collect();
        assert_eq!(labels, ["G", "K", "M", "G"]);
        assert!(p.windows(2).all(|w| w[1].arc > w[0].arc));
        let b = dual_cell_boundary_path(&lat, 4);
        assert_eq!(b.len(), 25);
        assert!((b[0].k() - b[24].k()).norm() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((fit_loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_detection() {
        let iv = |a: f64, b: f64| BandInterval { min: a, max: b };
        assert_eq!(
            first_gap(&[iv(1.0, 3.0), iv(2.0, 4.0), iv(5.0, 6.0)]),
            Some((2, 4.0, 5.0))
        );
        assert_eq!(first_gap(&[iv(1.0, 3.0), iv(2.0, 4.0)]), None);
    }

    #[test]
    fn classification_rules() {
        let loc = |c: f64, b: f64| Localization {
            center: c,
            boundary: b,
            middle: 1.0 - c - b,
        };
        assert_eq!(classify_mode(&loc(1.0, 0.0), 0.6), ModeTag::Edge);
        assert_eq!(classify_mode(&loc(0.0, 1.0), 0.6), ModeTag::PseudoEdge);
        assert_eq!(classify_mode(&loc(0.125, 0.125), 0.6), ModeTag::Bulk);
    }

    #[test]
    fn localization_of_synthetic_vectors() {
        let lat = HexLattice::<f64>::honeycomb();
        let l = 4;
        let disc = cylinder_discretization(MaterialModel::homogeneous(lat), 4, l, 4).unwrap();
        let c_band = l as f64 / 8.0 * 2.0;
        let n = disc.n_dofs();
        let uniform = vec![Cx::new(1.0, 0.0); n];
        let u = localization(&disc, &uniform, c_band);
        assert!((u.center + u.boundary + u.middle - 1.0).abs() < 1e-12);
        assert!((u.center - c_band / l as f64).abs() < 0.05, "{u:?}");
        assert_eq!(classify_mode(&u, 0.6), ModeTag::Bulk);

        let support = |pred: &dyn Fn(f64) -> bool| -> Vec<Cx<f64>> {
            let mut v = vec![Cx::new(0.0, 0.0); n];
            for (vx, p) in disc.mesh.vertices.iter().enumerate() {
                let (_, t2) = lat.to_fractional(*p);
                if pred(t2) {
                    for side in 1..=2 {
                        if let Some(d) = disc.dofmap.dof(vx, side) {
                            v[d] = Cx::new(1.0, 0.0);
                        }
                    }
                }
            }
            v
        };
        let center = localization(&disc, &support(&|t| t.abs() < 0.5), c_band);
        assert_eq!(classify_mode(&center, 0.6), ModeTag::Edge);
        let end = localization(&disc, &support(&|t| t > l as f64 - 0.6), c_band);
        assert_eq!(classify_mode(&end, 0.6), ModeTag::PseudoEdge);
    }

    #[test]
    fn homogeneous_band_sweep_matches_free_spectrum() {
        let lat = HexLattice::<f64>::honeycomb();
        let params = MaterialParams::bulk(0.0, 0.0, WeightForm::FirstOrder).unwrap();
        let path = high_symmetry_path(&lat, 2);
        let bs = bulk_band_sweep(params, 24, &path, 4, &Settings::default()).unwrap();
        for (s, row) in path.iter().zip(&bs.bands) {
            let exact = free_spectrum(&lat, s.k(), 4, 4);
            for (a, b) in row.iter().zip(&exact) {
                // P1 error on |k+G|^2 ~ 13 at h = 1/24 is about 2%.
                assert!((a - b).abs() < 0.04 * b.max(1.0), "{a} vs {b} at {:?}", s.coords);
            }
        }
    }

    #[test]
    fn envelope_symmetric_between_asymptotes() {
        let p = MaterialParams::edge(2.0, 0.6, 1.0, WallKind::Step).unwrap();
        let env = continuous_spectrum_envelope::<f64>(p, 2.0, 8, 3, 5, &Settings::default()).unwrap();
        for (a, b) in env.plus.iter().zip(&env.minus) {
            assert!((a.min - b.min).abs() < 1e-8 * a.min && (a.max - b.max).abs() < 1e-8 * a.max);
        }
        let fine = continuous_spectrum_envelope(p, 2.0, 8, 3, 9, &Settings::default()).unwrap();
        for (a, b) in env.union.iter().zip(&fine.union) {
            assert!(b.min <= a.min && b.max >= a.max);
        }
    }

    #[test]
    fn convergence_rejects_short_lists() {
        let p = MaterialParams::bulk(2.0, 0.0, WeightForm::FirstOrder).unwrap();
        let r = convergence_study(p, Problem::Torus { k: Vec2::zero() }, &[8, 16], 2, &Settings::default());
        assert!(matches!(r, Err(WorkflowError::BadInput(_))));
    }
}
