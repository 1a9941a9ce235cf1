//! Configuration parsing, path sampling, output formats and determinism.

use bloch_series::pipeline::*;
use std::f64::consts::PI;

const DISK: &str = r#"
contrast = 1e4
[[inclusions]]
kind = "disk"
center = [0.5, 0.5]
a = 0.3
b = 0.45
"#;

fn small(points: &str) -> CrystalConfig {
    let text = format!("{DISK}\n[path]\npoints = {points}\n[resolution]\npreset = \"coarse\"\n");
    CrystalConfig::from_toml_str(&text).unwrap()
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    for (text, key) in [
        (format!("{DISK}\ncolour = 3\n"), "colour"),
        (format!("{DISK}\n[path]\nsample_per_leg = 4\n"), "sample_per_leg"),
        (
            "[[inclusions]]\nkind = \"disk\"\ncenter = [0.5, 0.5]\na = 0.3\nradius = 0.4\n".to_string(),
            "radius",
        ),
        (format!("{DISK}\n[resolution]\nnodes = 12\n"), "nodes"),
    ] {
        let err = CrystalConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains(key), "{err}");
    }
}

#[test]
fn invalid_values_are_rejected() {
    let mut c = CrystalConfig::from_toml_str(DISK).unwrap();
    c.order = 0;
    assert!(c.problem().is_err());
    let both = format!("z_list = [1e-3]\n{DISK}");
    assert!(CrystalConfig::from_toml_str(&both).unwrap().problem().is_err());
    let outside = "[[inclusions]]\nkind = \"disk\"\ncenter = [0.5, 0.5]\na = 0.6\n";
    assert!(CrystalConfig::from_toml_str(outside).unwrap().problem().is_err());
    assert!("medium".parse::<Preset>().is_err());
}

#[test]
fn default_path_has_48_samples_starting_at_gamma() {
    let c = CrystalConfig::from_toml_str(DISK).unwrap();
    let p = c.problem().unwrap();
    assert_eq!(p.alphas.len(), 48);
    assert!(p.alphas[0].is_zero());
    assert!((p.alphas[16].x() - PI).abs() < 1e-15 && p.alphas[16].y() == 0.0);
    assert!((p.alphas[32].x() - PI).abs() < 1e-15 && (p.alphas[32].y() - PI).abs() < 1e-15);
    assert_eq!(p.zs, vec![1e-4]);
}

#[test]
fn overrides_and_round_trip() {
    let mut c = CrystalConfig::from_toml_str(&format!("z_list = [1e-3]\n{DISK}")).unwrap();
    c.apply(&Overrides {
        order: Some(2),
        contrast: Some(500.0),
        out: Some("results".into()),
        resolution: Some(Preset::Fine),
    });
    assert_eq!(c.order, 2);
    assert_eq!(c.z_list, None);
    assert_eq!(c.resolution().nodes_per_inclusion, 128);
    let back = CrystalConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.problem().unwrap().zs, vec![1.0 / 500.0]);
}

#[test]
fn band_output_is_deterministic_across_thread_counts() {
    let c = small("[[1.0, 0.0], [0.5, 0.25], [1.0, 1.0]]");
    let one = run_band(&c, Some(1)).unwrap();
    let two = run_band(&c, Some(2)).unwrap();
    let csv1 = band_csv(&one.rows);
    assert_eq!(csv1, band_csv(&two.rows));
    assert_eq!(series_json(&one.expansions).unwrap(), series_json(&two.expansions).unwrap());
    assert_eq!(one.rows.len(), 3);
    assert!(one.rows.iter().all(|r| r.certified && r.lambda_oracle.is_nan()));

    let mut lines = csv1.lines();
    assert_eq!(lines.next().unwrap(), BAND_COLUMNS.join(","));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), BAND_COLUMNS.len());
        for f in fields {
            if f == "NaN" || f == "true" || f == "false" || f.parse::<u64>().is_ok() {
                continue;
            }
            let mantissa = f.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.replace('.', "").len(), 17, "{f}");
        }
    }
}

#[test]
fn float_format_round_trips() {
    for x in [PI, -1e-300, 123456.789, 0.1, f64::MIN_POSITIVE] {
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
    assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    assert_eq!(fmt_f64(f64::NAN), "NaN");
}

#[test]
fn plot_scripts_embed_data_and_warn_when_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_file(dir.path(), "band.csv", &band_csv(&[])).unwrap();
    let script = std::fs::read_to_string(emit_plots(&csv).unwrap()).unwrap();
    assert!(script.contains("warning: the CSV has no data rows"));
    assert!(dir.path().join("band_plot.py").exists());

    let c = small("[[1.0, 0.0]]");
    let result = run_band(&c, Some(1)).unwrap();
    let files = write_band(&result, dir.path()).unwrap();
    let script = std::fs::read_to_string(&files.plot).unwrap();
    assert!(!script.contains("warning"));
    assert!(script.contains(&fmt_f64(result.rows[0].lambda_series)));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files.json).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);

    let other = write_file(dir.path(), "limit.csv", &limit_csv(&[])).unwrap();
    assert!(emit_plots(&other).is_err());
}

#[test]
fn certify_and_limit_along_a_path() {
    let c = small("[[0.0, 0.0], [1.0, 0.0]]");
    let an = run_certify(&c, None).unwrap();
    assert_eq!(an.len(), 2);
    let table = certificate_table(&an);
    assert!(table.lines().count() >= 3);
    let json: serde_json::Value = serde_json::from_str(&certificates_json(&an).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    let lim = run_limit(&c, None).unwrap();
    assert_eq!(lim[0].values[0].provenance.label(), "spectral_root_1");
    assert_eq!(lim[1].values[0].provenance.label(), "dirichlet");
    let text = limit_csv(&lim);
    assert_eq!(text.lines().next().unwrap(), LIMIT_COLUMNS.join(","));
}

#[test]
fn polygon_configs_support_limit_and_oracle() {
    let text = r#"
contrast = 1e4
[[inclusions]]
kind = "polygon"
vertices = [[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7]]
[path]
points = [[1.0, 1.0]]
[resolution]
preset = "coarse"
[oracle]
richardson = false
"#;
    let c = CrystalConfig::from_toml_str(text).unwrap();
    let lim = run_limit(&c, None).unwrap();
    let dirichlet = 2.0 * PI * PI / 0.16;
    assert!((1.0 / lim[0].values[0].value - dirichlet).abs() < 0.02 * dirichlet);
    let res = run_oracle(&c, None, 2).unwrap();
    assert_eq!(res[0].omega2.len(), 2);
    assert!(oracle_csv(&res).lines().count() == 3);
    assert!(run_band(&c, None).is_err());
}
