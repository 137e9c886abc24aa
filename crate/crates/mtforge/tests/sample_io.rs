use mtforge::io::{read_sample, sidecar_path, write_sample, write_sample_to};
use mtforge::Error;
use mtforge_core::femsolver::{Channel, ResponseVolume};
use mtforge_core::geomodel::{Provenance, ResistivityModel};
use mtforge_core::pipeline::{encode_sample, SampleRecord};
use proptest::prelude::*;

fn record(dims: [usize; 4], seed: u64, values: &[f64]) -> SampleRecord {
    let [nx, ny, nz, nf] = dims;
    let mut it = values.iter().cycle();
    let log10_rho = (0..nx * ny * nz).map(|_| *it.next().unwrap()).collect();
    let mut model = ResistivityModel::new([nx, ny, nz], [100.0, 120.0, 80.0], log10_rho).unwrap();
    model.provenance = Some(Provenance {
        seed,
        alpha: 7.5,
        rho_bounds: [1.0, 1.0e4],
    });
    let freqs = (0..nf).map(|f| 0.01 * 3f64.powi(f as i32)).collect();
    let mut response = ResponseVolume::zeros([nx, ny, nf], freqs);
    for c in Channel::ALL {
        for v in response.channel_mut(c) {
            let x = it.next().unwrap().abs();
            *v = if c.is_phase() {
                1.0 + 88.0 * x.fract()
            } else {
                10f64.powf(x)
            };
        }
    }
    SampleRecord::new(format!("s{seed}"), model, response).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn write_then_read_is_identity(
        nx in 1usize..6, ny in 1usize..6, nz in 1usize..6, nf in 1usize..5,
        seed in any::<u64>(),
        values in prop::collection::vec(-1.0f64..4.0, 1..50),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let r = record([nx, ny, nz, nf], seed, &values);
        let path = write_sample(dir.path(), &r).unwrap();
        let back = read_sample(&path).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(encode_sample(&back), std::fs::read(&path).unwrap());
    }
}

#[test]
fn missing_sidecar_and_corrupt_payload_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let r = record([2, 2, 2, 2], 3, &[0.5, 1.5, 2.5]);
    let path = dir.path().join("x.mts");
    write_sample_to(&path, &r).unwrap();

    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 4);
    std::fs::write(&path, &bytes).unwrap();
    let err = read_sample(&path).unwrap_err();
    assert!(
        matches!(err, Error::Core(mtforge_core::Error::Format { .. })),
        "{err}"
    );

    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(read_sample(&path), Err(Error::Io { .. })));
}
