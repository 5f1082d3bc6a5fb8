use bloch_nitsche::material::{MaterialParams, WeightForm};
use bloch_nitsche::workflows::{
    bulk_band_sweep, bulk_solves, high_symmetry_path, honeycomb_model, torus_discretization, BandInterval, KSample,
    Settings,
};
use bloch_nitsche::{BandStructure64, Cx, HexLattice64};
use bloch_nitsche_cli::output::{
    bands_csv, dump_mode_field, mode_field_cell_area, mode_field_samples, parse_bands_csv, read_bands_csv,
    render_bands_svg, write_bands_csv, SvgLayers,
};
use proptest::prelude::*;

fn small_sweep() -> BandStructure64 {
    let p = MaterialParams::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
    bulk_band_sweep(
        p,
        8,
        &high_symmetry_path(&HexLattice64::honeycomb(), 2),
        3,
        &Settings::default(),
    )
    .unwrap()
}

#[test]
fn bands_csv_round_trips_through_a_file() {
    let bs = small_sweep();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bands.csv");
    write_bands_csv(&bs, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("sample,kx,ky,label,E1,E2,E3\n"));
    assert!(!text.contains('\r'));
    let back = read_bands_csv(&path).unwrap();
    assert_eq!(back.bands, bs.bands);
    for (a, b) in back.samples.iter().zip(&bs.samples) {
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.label, b.label);
        assert!((a.arc - b.arc).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn cylinder_tables_round_trip_exactly(
        rows in prop::collection::vec((-10.0f64..10.0, prop::collection::vec(-1e6f64..1e6, 4)), 1..8)
    ) {
        let bs = BandStructure64 {
            samples: rows.iter().map(|(k, _)| KSample { coords: vec![*k], arc: *k, label: String::new() }).collect(),
            bands: rows.iter().map(|(_, e)| e.clone()).collect(),
            metadata: Vec::new(),
        };
        let back = parse_bands_csv(&bands_csv(&bs)).unwrap();
        prop_assert_eq!(back.samples, bs.samples);
        prop_assert_eq!(back.bands, bs.bands);
    }
}

#[test]
fn svg_is_deterministic_and_structured() {
    let bs = small_sweep();
    let env: Vec<Vec<BandInterval<f64>>> = bs
        .bands
        .iter()
        .map(|r| {
            vec![
                BandInterval {
                    min: r[0] - 0.1,
                    max: r[0] + 0.1,
                },
                BandInterval {
                    min: r[2],
                    max: r[2] + 1.0,
                },
            ]
        })
        .collect();
    let marks = [(bs.samples[1].arc, bs.bands[1][1])];
    let layers = SvgLayers {
        envelope: Some(&env),
        edge_marks: &marks,
        title: "test",
    };
    let a = render_bands_svg(&bs, &layers);
    let b = render_bands_svg(&bs, &layers);
    assert_eq!(a, b);
    assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
    assert_eq!(a.matches("<polyline class=\"band\"").count(), 3);
    assert_eq!(a.matches("<polygon class=\"envelope\"").count(), 2);
    assert_eq!(a.matches("<circle class=\"edge-mode\"").count(), 1);
    for label in ["G", "K", "M"] {
        assert!(a.contains(&format!(">{label}</text>")), "missing tick {label}");
    }
    // Numeric y ticks exist.
    assert!(a.matches("text-anchor=\"end\"").count() >= 3);
}

#[test]
fn constant_vector_dumps_a_constant_column() {
    let p = MaterialParams::bulk(2.0, 0.0, WeightForm::FirstOrder).unwrap();
    let disc = torus_discretization(honeycomb_model(p, 0.2).unwrap(), 8, 4).unwrap();
    let ones = vec![Cx::new(1.0, 0.0); disc.n_dofs()];
    let rows = mode_field_samples(&disc, &ones, 20);
    assert_eq!(rows.len(), 400);
    for (_, _, v) in &rows {
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mode.csv");
    dump_mode_field(&disc, &ones, 20, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,abs_psi");
    assert_eq!(lines.len(), 401);
}

#[test]
fn dumped_mass_matches_the_mass_matrix() {
    let p = MaterialParams::bulk(2.0, 0.1, WeightForm::FirstOrder).unwrap();
    let s = Settings::default();
    let disc = torus_discretization(honeycomb_model(p, 0.2).unwrap(), 16, 4).unwrap();
    let k = HexLattice64::honeycomb().high_symmetry_points().k;
    let r = bulk_solves(&disc, &[k], 3, &s).unwrap();
    let sys = disc
        .assemble(bloch_nitsche::assembly::BlochParams::Torus { k }, s.lambda_hat)
        .unwrap();
    let grid = 256;
    let da = mode_field_cell_area(&disc, grid);
    for x in &r[0].eigenvectors {
        let exact = sys.b.quadratic_form(x).re;
        let dumped: f64 = mode_field_samples(&disc, x, grid)
            .iter()
            .map(|(_, _, v)| v * v * da)
            .sum();
        assert!((dumped - exact).abs() < 0.05 * exact, "{dumped} vs {exact}");
    }
}
