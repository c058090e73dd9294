use aiou_core::container::{read_container, write_container, ContainerIndex, MapRecord, RecordKind};
use aiou_core::map::Map;
use aiou_core::Error;
use proptest::prelude::*;

/// Maps whose values are exactly representable as f32.
fn record(i: usize) -> impl Strategy<Value = MapRecord> {
    (1..=12usize, 1..=12usize, any::<bool>(), "[a-z]{1,8}")
        .prop_flat_map(move |(h, w, mask, feature)| {
            (
                prop::collection::vec(0.0f32..1.0, h * w),
                Just((h, w, mask, feature)),
            )
        })
        .prop_map(move |(data, (h, w, mask, feature))| {
            let map = Map::new(h, w, data.into_iter().map(f64::from).collect()).unwrap();
            let kind = if mask { RecordKind::Mask } else { RecordKind::Attention };
            MapRecord::new(&format!("img{i:03}"), &feature, kind, map).unwrap()
        })
}

fn records() -> impl Strategy<Value = Vec<MapRecord>> {
    (0usize..12).prop_flat_map(|n| (0..n).map(record).collect::<Vec<_>>())
}

fn bytes_of(records: &[MapRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    let written = write_container(records, &mut buf).unwrap();
    assert_eq!(written as usize, buf.len());
    buf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn round_trip_is_bit_exact(recs in records()) {
        let buf = bytes_of(&recs);
        let back = read_container(buf.as_slice()).unwrap();
        prop_assert_eq!(back.version, 1);
        prop_assert_eq!(back.records.len(), recs.len());
        for (a, b) in recs.iter().zip(&back.records) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.kind, b.kind);
            prop_assert_eq!(a.map.shape(), b.map.shape());
            let bits = |m: &Map| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.map), bits(&b.map));
        }
        prop_assert_eq!(bytes_of(&back.records), buf.clone());

        let index = ContainerIndex::scan(buf.as_slice()).unwrap();
        prop_assert_eq!(index.decode_all(&buf).unwrap(), back.records);
    }

    #[test]
    fn every_truncation_is_an_error(recs in records(), frac in 0.0..1.0f64) {
        let buf = bytes_of(&recs);
        let cut = ((buf.len() as f64) * frac) as usize;
        prop_assume!(cut < buf.len());
        let err = read_container(&buf[..cut]).unwrap_err();
        match err {
            Error::BadMagic(_) => prop_assert_eq!(cut, 0),
            Error::TruncatedHeader => prop_assert!(cut > 0 && cut < 13),
            Error::TruncatedRecord { .. } => prop_assert!(cut >= 13),
            other => prop_assert!(false, "unexpected {other}"),
        }
    }
}

#[test]
fn corrupted_headers() {
    let map = Map::from_rows(&[[0.25, 0.5]]).unwrap();
    let rec = MapRecord::new("a", "Male", RecordKind::Attention, map).unwrap();
    let good = bytes_of(&[rec]);

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(read_container(bad.as_slice()), Err(Error::BadMagic(m)) if m == b"XIOU"));

    let mut bad = good.clone();
    bad[4] = 2;
    assert!(matches!(read_container(bad.as_slice()), Err(Error::UnsupportedVersion(2))));

    // record count larger than the records present
    let mut bad = good.clone();
    bad[5] = 2;
    assert!(matches!(
        read_container(bad.as_slice()),
        Err(Error::TruncatedRecord { index: 1, .. })
    ));

    // count smaller than the records present
    let mut bad = good.clone();
    bad[5] = 0;
    assert!(matches!(read_container(bad.as_slice()), Err(Error::TrailingData(_))));

    // invalid kind byte: header(13) + name len(2) + "a/Male"(6)
    let mut bad = good.clone();
    bad[21] = 7;
    assert!(matches!(read_container(bad.as_slice()), Err(Error::BadRecordKind(7))));

    // negative payload value
    let mut bad = good.clone();
    let n = bad.len();
    bad[n - 4..].copy_from_slice(&(-1.0f32).to_le_bytes());
    assert!(matches!(read_container(bad.as_slice()), Err(Error::InvalidMap(_))));

    assert!(matches!(read_container(&b""[..]), Err(Error::BadMagic(_))));
    assert!(matches!(read_container(&b"AIOU\x01"[..]), Err(Error::TruncatedHeader)));
}
