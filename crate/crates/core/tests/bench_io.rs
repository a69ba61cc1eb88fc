use std::path::PathBuf;

use hinfgrad::bench::{
    emit_report, load_system, run_benchmark, system_to_json, write_system, Overrides, ReportFormat,
};
use hinfgrad::{synthetic, Execution, Plant, SynthesisConfig};
use ndarray::{array, Array2};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(f64::MIN_POSITIVE / 3.0),
        Just(-0.0),
    ]
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(finite(), rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact(
        (a, b, b1, c, d) in (1usize..5, 1usize..3, 1usize..3, 1usize..4).prop_flat_map(|(n, m, m1, r)| {
            (matrix(n, n), matrix(n, m), matrix(n, m1), matrix(r, n), matrix(r, m))
        })
    ) {
        let plant = Plant::new(a, b, b1, c, d).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_system(&path, "p", &plant, Overrides { alpha0: Some(0.5), eps: None }).unwrap();
        let back = load_system(&path).unwrap();
        for (x, y) in [
            (plant.a(), back.plant.a()),
            (plant.b(), back.plant.b()),
            (plant.b1(), back.plant.b1()),
            (plant.c(), back.plant.c()),
            (plant.d(), back.plant.d()),
        ] {
            prop_assert_eq!(x.shape(), y.shape());
            for (u, v) in x.iter().zip(y.iter()) {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        prop_assert_eq!(back.overrides, Overrides { alpha0: Some(0.5), eps: None });
    }
}

fn unstabilizable() -> Plant {
    Plant::new(
        array![[1.0, 0.0], [0.0, -1.0]],
        array![[0.0], [1.0]],
        array![[1.0], [1.0]],
        array![[1.0, 1.0], [0.0, 0.0]],
        array![[0.0], [1.0]],
    )
    .unwrap()
}

#[test]
fn benchmark_rows_isolated_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths: Vec<PathBuf> = Vec::new();
    let mut add = |name: &str, plant: &Plant| {
        let p = dir.path().join(format!("{name}.json"));
        write_system(&p, name, plant, Overrides::default()).unwrap();
        paths.push(p);
    };
    add("example1", &synthetic::example1_plant());
    add("unstab", &unstabilizable());
    add("scalar", &synthetic::scalar_plant());
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    paths.push(garbage);
    paths.push(dir.path().join("missing.json"));

    let rows = run_benchmark(&paths, &SynthesisConfig::default(), Execution::Parallel);
    let names: Vec<_> = rows.iter().map(|r| r.system.as_str()).collect();
    assert_eq!(
        names,
        ["example1", "unstab", "scalar", "garbage", "missing"]
    );
    let failed: Vec<_> = rows.iter().map(|r| r.failed()).collect();
    assert_eq!(failed, [false, true, false, true, true]);
    assert_eq!(rows[1].termination, "not_stabilizable");
    assert_eq!(rows[3].termination, "parse");
    assert_eq!(rows[4].termination, "io");

    let ex = &rows[0];
    let (g0, gs) = (ex.gamma0.unwrap(), ex.gamma_star.unwrap());
    assert!(gs < g0);
    assert!((2.55..=2.75).contains(&gs));

    let csv = emit_report(&rows, ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    for rec in reader.records() {
        let rec = rec.unwrap();
        if &rec[4] == "x" {
            continue;
        }
        let g0: f64 = rec[3].parse().unwrap();
        let gs: f64 = rec[4].parse().unwrap();
        let pct: f64 = rec[6].parse().unwrap();
        assert!((pct - (g0 - gs) / g0 * 100.0).abs() <= 1e-12);
    }

    let seq = run_benchmark(&paths, &SynthesisConfig::default(), Execution::Sequential);
    for (a, b) in rows.iter().zip(&seq) {
        assert_eq!(
            (a.gamma0, a.gamma_star, &a.termination),
            (b.gamma0, b.gamma_star, &b.termination)
        );
    }
}

#[test]
fn system_json_is_self_describing() {
    let text = system_to_json("ex1", &synthetic::example1_plant(), Overrides::default());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 2);
    assert_eq!(v["r"], 4);
    assert_eq!(v["A"][1], 0.5637);
    assert!(v.get("alpha0").is_none());
}
