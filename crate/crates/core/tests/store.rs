use instance_delta::store::{
    ensemble_per_pretrain, flatten_runs, read_csv, write_csv, CheckpointPolicy, CsvSchema, Manifest, PredictionTensor,
    ValueKind,
};
use instance_delta::Error;
use proptest::prelude::*;

fn tensor_strategy() -> impl Strategy<Value = PredictionTensor> {
    (1usize..=2, 1usize..=3, 1usize..=3, 1usize..=2, 1usize..=5, any::<bool>()).prop_flat_map(|(s, p, f, e, n, bits)| {
        let cells = p * f * e * n;
        let values = if bits {
            proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], cells * s).boxed()
        } else {
            proptest::collection::vec(0.0f64..=1.0, cells * s).boxed()
        };
        values.prop_map(move |v| {
            let kind = if bits { ValueKind::Correctness } else { ValueKind::Probability };
            let sizes = (0..s).map(|k| (format!("size{k}"), p, v[k * cells..(k + 1) * cells].to_vec())).collect();
            PredictionTensor::new(kind, (0..n).map(|i| format!("q{i}")).collect(), f, e, sizes).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(t in tensor_strategy()) {
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        prop_assert_eq!(&back, &t);
        // emission is byte-stable
        let mut again = Vec::new();
        write_csv(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn manifest_round_trip(t in tensor_strategy()) {
        let json = serde_json::to_string(&Manifest::from_tensor(&t)).unwrap();
        let m: Manifest = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(m.into_tensor().unwrap(), t);
    }

    #[test]
    fn flatten_preserves_values(t in tensor_strategy()) {
        let view = flatten_runs(&t, "size0", CheckpointPolicy::All).unwrap();
        let mut flat: Vec<f64> = view.slices.iter().flatten().copied().collect();
        let mut raw = t.block(0).values.clone();
        flat.sort_by(f64::total_cmp);
        raw.sort_by(f64::total_cmp);
        prop_assert_eq!(flat, raw);
    }
}

fn small_csv() -> String {
    let mut s = String::from("size,pretrain_seed,finetune_seed,checkpoint,instance_id,correct\n");
    for size in ["small", "large"] {
        for p in 0..2 {
            for f in 0..2 {
                for (i, id) in ["a", "b", "c"].iter().enumerate() {
                    s.push_str(&format!("{size},{p},{f},0,{id},{}\n", (p + f + i) % 2));
                }
            }
        }
    }
    s
}

#[test]
fn complete_file_ingests() {
    let t = read_csv(small_csv().as_bytes(), &CsvSchema::default()).unwrap();
    assert_eq!(t.dims(), (2, 2, 2, 1, 3));
    assert_eq!(t.value_kind(), ValueKind::Correctness);
}

#[test]
fn missing_row_names_the_coordinate() {
    let text = small_csv();
    let kept: Vec<&str> = text.lines().filter(|l| *l != "large,1,0,0,b,0").collect();
    assert_eq!(kept.len(), text.lines().count() - 1);
    let err = read_csv(kept.join("\n").as_bytes(), &CsvSchema::default()).unwrap_err();
    match err {
        Error::MissingCell { size, pretrain_seed, finetune_seed, checkpoint, instance } => {
            assert_eq!((size.as_str(), pretrain_seed, finetune_seed, checkpoint, instance.as_str()), ("large", 1, 0, 0, "b"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn flatten_mean_matches_raw_cells() {
    let (p, f, e, n) = (3, 4, 2, 6);
    let values: Vec<f64> = (0..p * f * e * n).map(|k| ((k * 7919) % 101) as f64 / 100.0).collect();
    let t = PredictionTensor::new(ValueKind::Probability, (0..n).map(|i| i.to_string()).collect(), f, e, vec![("s".into(), p, values)]).unwrap();
    let view = flatten_runs(&t, "s", CheckpointPolicy::Last).unwrap();
    assert_eq!(view.slice_count(), p * f);
    for i in 0..n {
        let flat = view.slices.iter().map(|s| s[i]).sum::<f64>() / view.slice_count() as f64;
        let mut raw = 0.0;
        for pp in 0..p {
            for ff in 0..f {
                raw += t.value(0, pp, ff, e - 1, i);
            }
        }
        assert!((flat - raw / (p * f) as f64).abs() <= 1e-15);
    }
}

#[test]
fn ensemble_is_invariant_to_finetune_order() {
    let (p, f, n) = (2, 5, 4);
    let bits: Vec<f64> = (0..p * f * n).map(|k| ((k * 31 + 7) % 3 == 0) as u8 as f64).collect();
    let t = PredictionTensor::new(ValueKind::Correctness, (0..n).map(|i| i.to_string()).collect(), f, 1, vec![("s".into(), p, bits.clone())]).unwrap();
    // reverse the finetune axis
    let mut rev = vec![0.0; bits.len()];
    for pp in 0..p {
        for ff in 0..f {
            for i in 0..n {
                rev[(pp * f + (f - 1 - ff)) * n + i] = bits[(pp * f + ff) * n + i];
            }
        }
    }
    let u = PredictionTensor::new(ValueKind::Correctness, (0..n).map(|i| i.to_string()).collect(), f, 1, vec![("s".into(), p, rev)]).unwrap();
    let a = ensemble_per_pretrain(&t, "s", CheckpointPolicy::Last).unwrap();
    let b = ensemble_per_pretrain(&u, "s", CheckpointPolicy::Last).unwrap();
    assert_eq!(a.slices, b.slices);
    assert_eq!(a.slice_count(), p);
}

#[test]
fn files_round_trip_by_extension() {
    use instance_delta::store::{emit_csv, load_tensor, write_manifest};
    let dir = tempfile::tempdir().unwrap();
    let t = read_csv(small_csv().as_bytes(), &CsvSchema::default()).unwrap();
    let (csv_path, json_path) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    emit_csv(&t, &csv_path).unwrap();
    write_manifest(&t, &json_path).unwrap();
    assert_eq!(load_tensor(&csv_path).unwrap(), t);
    assert_eq!(load_tensor(&json_path).unwrap(), t);
    assert!(matches!(load_tensor(dir.path().join("absent.csv")), Err(Error::Io { .. })));
}
