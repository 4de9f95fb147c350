use std::io::Write;

use proptest::prelude::*;
use qlight_core::io::{load_series, normalize_minmax01, Config, Normalization, SeriesFormat, TimeSeries};
use qlight_core::Error;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalization_ignores_values_outside_the_fit(
        head in prop::collection::vec(-50.0f64..50.0, 4..40),
        tail in prop::collection::vec(-1e3f64..1e3, 1..40),
        other in prop::collection::vec(-1e3f64..1e3, 1..40),
    ) {
        let lo = head.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = head.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 1e-6);
        let fit = 0..head.len();
        let a = normalize_minmax01(&TimeSeries::from_values([head.clone(), tail].concat()).unwrap(), fit.clone()).unwrap();
        let b = normalize_minmax01(&TimeSeries::from_values([head.clone(), other].concat()).unwrap(), fit.clone()).unwrap();
        prop_assert_eq!(a.normalization, Normalization::Minmax01 { min: lo, max: hi });
        prop_assert_eq!(&a.values[fit.clone()], &b.values[fit.clone()]);
        prop_assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
        for (v, raw) in a.values[fit].iter().zip(&head) {
            prop_assert!((a.denormalize(*v) - raw).abs() <= 1e-9 * (1.0 + raw.abs()));
        }
    }

    #[test]
    fn plain_file_round_trips(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# generated").unwrap();
        for v in &values {
            writeln!(f, "{v:?}").unwrap();
        }
        f.flush().unwrap();
        let s = load_series(f.path(), &SeriesFormat::Plain).unwrap();
        prop_assert_eq!(&s.values, &values);
        let bytes = std::fs::read(f.path()).unwrap();
        let digest: String = <sha2::Sha256 as sha2::Digest>::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        prop_assert_eq!(s.sha256, digest);
    }
}

#[test]
fn parse_error_names_the_line() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "1.0\n2.0\n\n# note\nabc\n3.0\n").unwrap();
    f.flush().unwrap();
    match load_series(f.path(), &SeriesFormat::Plain) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn config_survives_toml_round_trip() {
    let text = "[qrc]\nmodes = 6\ncavity_squeezing = [0.0, 0.3]\n\n[qam]\nn = 3\nm = 4\neta = 13.0\n";
    let cfg = Config::from_toml_str(text).unwrap();
    let again = Config::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.qrc.modes, 6);
    assert!(Config::from_toml_str("[qrc]\nmodez = 6\n").is_err());
}
