use std::collections::BTreeMap;

use fiberpair::records::{read_records, sidecar_path, write_records, RecordWriter};
use fiberpair_core::counting::{ChannelLayout, PulseRecord};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip(raw in prop::collection::btree_map(any::<u64>(), 1u32..8, 0..200), seed in any::<u64>()) {
        let raw: BTreeMap<u64, u32> = raw;
        let records: Vec<PulseRecord> = raw.iter().map(|(&i, &w)| PulseRecord::new(i, w)).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        let layout = ChannelLayout::g2();
        let pulses = records.last().map_or(0, |r| r.pulse_index.saturating_add(1));
        write_records(&path, &records, &layout, pulses, seed).unwrap();
        let (back, sidecar) = read_records(&path).unwrap();
        prop_assert_eq!(back, records);
        prop_assert_eq!(sidecar.layout(), layout);
        prop_assert_eq!(sidecar.seed, seed);
    }
}

#[test]
fn writer_rejects_out_of_order_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = RecordWriter::create(&dir.path().join("r.bin")).unwrap();
    w.push(PulseRecord::new(5, 1)).unwrap();
    assert!(w.push(PulseRecord::new(5, 2)).is_err());
}

#[test]
fn undeclared_channel_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.bin");
    let two = ChannelLayout::new(&["signal", "idler_a"]);
    write_records(&path, &[PulseRecord::new(0, 0b100)], &two, 1, 0).unwrap();
    assert!(read_records(&path).is_err());
    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(read_records(&path).is_err());
}
