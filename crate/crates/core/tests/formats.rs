use std::fs;
use std::path::Path;

use manloc_core::pipeline::{parse_manifest_str, to_manifest_string, ManifestRecord};
use manloc_core::raster::{load_heatmap, load_labelmap, load_mask, save_heatmap, save_labelmap, save_mask, HeatmapFormat};
use manloc_core::{BinaryMask, Heatmap, LabelMap};
use proptest::prelude::*;

fn heatmap_strategy() -> impl Strategy<Value = Heatmap> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(0.0f32..=1.0, w * h).prop_map(move |v| Heatmap::new(w, h, v).unwrap())
    })
}

fn id_strategy() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_-]{1,12}".prop_filter("reserved", |s| s != "." && s != "..")
}

fn record_strategy() -> impl Strategy<Value = ManifestRecord> {
    (
        id_strategy(),
        proptest::collection::vec("[a-z0-9_]{1,8}\\.png", 1..5),
        "[a-z0-9_]{1,8}\\.png",
        proptest::option::of("[a-z0-9_]{1,8}\\.png"),
        proptest::option::of("[a-z0-9_]{1,8}\\.jpg"),
    )
        .prop_map(|(image_id, acts, seg, gt, src)| ManifestRecord {
            image_id,
            activation_paths: acts.into_iter().map(|a| Path::new("/data").join(a)).collect(),
            labelmap_path: Path::new("/data").join(seg),
            gt_path: gt.map(|g| Path::new("/data").join(g)),
            source_image_path: src.map(|s| Path::new("/data").join(s)),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f32raw_round_trip_is_bit_exact(map in heatmap_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.f32");
        save_heatmap(&map, &path, HeatmapFormat::F32raw).unwrap();
        let back = load_heatmap(&path).unwrap();
        prop_assert_eq!(back.dims(), map.dims());
        for (a, b) in map.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn png16_round_trip_within_one_step(map in heatmap_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        save_heatmap(&map, &path, HeatmapFormat::Png16).unwrap();
        let back = load_heatmap(&path).unwrap();
        for (a, b) in map.values().iter().zip(back.values()) {
            prop_assert!((f64::from(*a) - f64::from(*b)).abs() <= 1.0 / 65535.0);
        }
    }

    #[test]
    fn label_and_mask_round_trips(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let labels = LabelMap::from_fn(w, h, |x, y| ((x * 7919 + y * 104_729) as u64 ^ seed) as u32 % 65536).unwrap();
        save_labelmap(&labels, dir.path().join("l.png")).unwrap();
        prop_assert_eq!(load_labelmap(dir.path().join("l.png")).unwrap(), labels);
        let mask = BinaryMask::from_fn(w, h, |x, y| (x + y + seed as usize).is_multiple_of(3)).unwrap();
        save_mask(&mask, dir.path().join("m.png")).unwrap();
        prop_assert_eq!(load_mask(dir.path().join("m.png")).unwrap(), mask);
    }

    #[test]
    fn manifest_round_trip(records in proptest::collection::vec(record_strategy(), 0..6)) {
        let mut seen = std::collections::HashSet::new();
        let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.image_id.clone())).collect();
        let text = to_manifest_string(&records);
        let back = parse_manifest_str(&text, Path::new("/elsewhere")).unwrap();
        prop_assert_eq!(back, records);
    }
}

#[test]
fn f32raw_layout_matches_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.f32");
    let map = Heatmap::new(3, 2, vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.125]).unwrap();
    save_heatmap(&map, &path, HeatmapFormat::F32raw).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 4 + 4 + 4 + 6 * 4);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
    assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), 0.25);
}

#[test]
fn relative_manifest_paths_resolve_against_the_manifest_directory() {
    let text = "{\"manifest_version\":1}\n{\"image_id\":\"a\",\"activation_paths\":[\"x.png\"],\"labelmap_path\":\"sub/s.png\"}\n";
    let recs = parse_manifest_str(text, Path::new("/base")).unwrap();
    assert_eq!(recs[0].activation_paths[0], Path::new("/base/x.png"));
    assert_eq!(recs[0].labelmap_path, Path::new("/base/sub/s.png"));
    assert_eq!(recs[0].gt_path, None);
}
