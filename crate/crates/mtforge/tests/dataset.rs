use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mtforge::dataset::{build_dataset, BuildConfig, MANIFEST_FILE};
use mtforge::forward::thread_pool;
use mtforge::io::{read_json, read_sample};
use mtforge_core::mesh::GridSpec;
use mtforge_core::pipeline::{DatasetManifest, FrequencySweep};

fn small_config() -> BuildConfig {
    let grid = GridSpec {
        core: [4, 4, 4],
        spacing_m: [500.0; 3],
        n_pad: 2,
        expansion: 1.5,
        n_air: 2,
    };
    let sweep = FrequencySweep::new(vec![0.1, 1.0, 10.0, 100.0]).unwrap();
    BuildConfig::new(11, vec![6.0, 10.0], 2, grid, sweep)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn smoke_build_writes_samples_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config();
    let manifest = build_dataset(&config, dir.path()).unwrap();
    let files = snapshot(dir.path());
    // 4 samples, each with a sidecar, plus the manifest.
    assert_eq!(files.len(), 9, "{:?}", files.keys().collect::<Vec<_>>());
    assert_eq!(manifest.samples.len(), 4);
    assert!(manifest.failed.is_empty());
    manifest.validate().unwrap();

    let on_disk: DatasetManifest = read_json(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(on_disk, manifest);

    // Normalization maxima are the maxima over the stored samples.
    let mut rho_max = f64::MIN;
    for s in &manifest.samples {
        let r = read_sample(&dir.path().join(format!("{}.mts", s.id))).unwrap();
        assert_eq!(r.meta.seed, Some(s.seed));
        for v in r.response.rho_xy.iter().chain(&r.response.rho_yx) {
            rho_max = rho_max.max(v.log10());
        }
    }
    assert_eq!(manifest.normalization.rho_max_log10, rho_max);
}

#[test]
fn resume_regenerates_only_missing_and_stale_samples() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config();
    build_dataset(&config, dir.path()).unwrap();
    let before = snapshot(dir.path());

    let victim = dir.path().join("a6_00001.mts");
    fs::remove_file(&victim).unwrap();
    // Corrupt another sample's binary: it must be detected and rebuilt.
    let corrupt = dir.path().join("a10_00000.mts");
    fs::write(&corrupt, b"MTS1").unwrap();
    // An intact sample must not be rewritten.
    let kept = dir.path().join("a6_00000.mts");
    let kept_time = fs::metadata(&kept).unwrap().modified().unwrap();

    build_dataset(&config, dir.path()).unwrap();
    assert_eq!(snapshot(dir.path()), before);
    assert_eq!(fs::metadata(&kept).unwrap().modified().unwrap(), kept_time);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let config = small_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    thread_pool(Some(1))
        .unwrap()
        .install(|| build_dataset(&config, a.path()))
        .unwrap();
    thread_pool(Some(3))
        .unwrap()
        .install(|| build_dataset(&config, b.path()))
        .unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}

#[test]
fn changing_the_config_invalidates_existing_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config();
    build_dataset(&config, dir.path()).unwrap();
    let first = read_sample(&dir.path().join("a6_00000.mts")).unwrap();
    config.rho_bounds = [10.0, 1000.0];
    build_dataset(&config, dir.path()).unwrap();
    let second = read_sample(&dir.path().join("a6_00000.mts")).unwrap();
    assert_eq!(second.meta.rho_bounds, Some([10.0, 1000.0]));
    assert_ne!(first.model.log10_rho, second.model.log10_rho);
}

#[test]
fn empty_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config();
    config.n_per_alpha = 0;
    assert!(build_dataset(&config, dir.path()).is_err());
}
