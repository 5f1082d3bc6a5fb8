use bloch_nitsche::geometry::{HexLattice, Vec2};
use bloch_nitsche::material::{MaterialModel, MaterialParams, WallKind, WeightForm};
use bloch_nitsche::workflows::{
    band_envelope, bulk_band_sweep, bulk_solves, edge_band_sweep, free_spectrum, high_symmetry_path, kpar_samples,
    torus_discretization, EdgeOptions, KSample, ModeTag, Settings,
};

fn lattice() -> HexLattice<f64> {
    HexLattice::honeycomb()
}

#[test]
fn homogeneous_envelope_matches_free_projection() {
    let lat = lattice();
    let s = Settings::default();
    let disc = torus_discretization(MaterialModel::homogeneous(lat), 24, s.m_arc).unwrap();
    let k_par = 0.7;
    let samples = 9;
    let env = band_envelope(&disc, k_par, 3, samples, &s).unwrap();
    // Same lambda samples through the enumeration oracle.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for i in 0..samples {
        let lam = i as f64 / (samples - 1) as f64 - 0.5;
        let k = lat.k2 * lam + lat.k1 * (k_par / std::f64::consts::TAU);
        for (m, e) in free_spectrum(&lat, k, 4, 3).into_iter().enumerate() {
            lo[m] = lo[m].min(e);
            hi[m] = hi[m].max(e);
        }
    }
    for m in 0..3 {
        assert!(
            (env[m].min - lo[m]).abs() < 0.03 * lo[m].max(1.0),
            "band {m}: {:?} vs {}",
            env[m],
            lo[m]
        );
        assert!(
            (env[m].max - hi[m]).abs() < 0.03 * hi[m].max(1.0),
            "band {m}: {:?} vs {}",
            env[m],
            hi[m]
        );
    }
}

#[test]
fn no_edge_modes_without_a_wall() {
    let p = MaterialParams::<f64>::edge(2.0, 0.0, 1.0, WallKind::Step).unwrap();
    let opts = EdgeOptions {
        nev: Some(10),
        ..EdgeOptions::default()
    };
    let sw = edge_band_sweep(p, 8, 4, &kpar_samples(3), &opts, &Settings::default()).unwrap();
    for modes in &sw.modes {
        for m in modes {
            assert_ne!(m.tag, ModeTag::Edge, "{m:?}");
            let l = m.localization;
            assert!((l.center + l.boundary + l.middle - 1.0).abs() < 1e-12);
            assert!([l.center, l.boundary, l.middle]
                .iter()
                .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        }
    }
}

#[test]
fn bands_symmetric_under_k_reversal_without_gamma() {
    let s = Settings::default();
    let p = MaterialParams::<f64>::bulk(10.0, 0.0, WeightForm::FirstOrder).unwrap();
    let disc = torus_discretization(bloch_nitsche::workflows::honeycomb_model(p, 0.2).unwrap(), 12, 4).unwrap();
    let k = Vec2::new(1.3, -0.4);
    let r = bulk_solves(&disc, &[k, -k], 4, &s).unwrap();
    for (a, b) in r[0].eigenvalues.iter().zip(&r[1].eigenvalues) {
        assert!((a - b).abs() < 1e-10 * a.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn sweep_is_bitwise_deterministic_across_thread_counts() {
    let p = MaterialParams::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
    let path = high_symmetry_path(&lattice(), 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bulk_band_sweep(p, 8, &path, 3, &Settings::default()).unwrap())
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn refinement_never_raises_eigenvalues() {
    let s = Settings::default();
    let p = MaterialParams::bulk(100.0, 0.1, WeightForm::FirstOrder).unwrap();
    let ks = [KSample {
        coords: vec![0.9, 2.1],
        arc: 0.0,
        label: String::new(),
    }];
    let coarse = bulk_band_sweep(p, 8, &ks, 4, &s).unwrap();
    let fine = bulk_band_sweep(p, 16, &ks, 4, &s).unwrap();
    for (c, f) in coarse.bands[0].iter().zip(&fine.bands[0]) {
        assert!(f <= &(c + 1e-8), "{f} > {c}");
    }
}

#[test]
fn band_rows_are_ascending() {
    let p = MaterialParams::bulk(2.0, 0.0, WeightForm::ExactInverse).unwrap();
    let bs = bulk_band_sweep(p, 8, &high_symmetry_path(&lattice(), 2), 5, &Settings::default()).unwrap();
    assert_eq!(bs.samples.len(), 7);
    for row in &bs.bands {
        assert_eq!(row.len(), 5);
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn single_precision_matches_double() {
    let path = [KSample {
        coords: vec![1.0, 0.5],
        arc: 0.0,
        label: String::new(),
    }];
    let path32 = [KSample {
        coords: vec![1.0f32, 0.5],
        arc: 0.0,
        label: String::new(),
    }];
    let p = MaterialParams::<f64>::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
    let p32 = MaterialParams::<f32>::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
    let a = bulk_band_sweep(p, 8, &path, 3, &Settings::default()).unwrap();
    let b = bulk_band_sweep(p32, 8, &path32, 3, &Settings::default()).unwrap();
    for (x, y) in a.bands[0].iter().zip(&b.bands[0]) {
        assert!((x - *y as f64).abs() < 1e-3 * x.max(1.0), "{x} vs {y}");
    }
}
