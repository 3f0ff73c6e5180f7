//! CSV and JSON emission for measurement records. Floats are rounded to 12
//! significant digits before formatting so identical runs produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::elements::{MeasureData, MeasurementRecord};
use crate::error::Result;
use crate::program::BenchProgram;

pub const CSV_HEADER: &str = "label,time_us,n,population";

/// What the simulation deliberately leaves out; echoed into run metadata.
pub const NOT_MODELED: [&str; 3] = [
    "readout infidelity",
    "ionization-shortened lifetime at high n",
    "hardware confirmation protocols",
];

pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (x * factor).round() / factor
}

/// Shortest decimal form of the value rounded to 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{:?}", round_sig(x, 12))
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    /// Populations below this are dropped from the table.
    pub min_population: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { min_population: 1e-12 }
    }
}

pub fn csv_string(records: &[MeasurementRecord], opts: &CsvOptions) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in records {
        if let MeasureData::Populations(pops) = &rec.data {
            let t = fmt_sig(rec.time_us);
            for (n, &p) in pops.iter().enumerate() {
                if p >= opts.min_population {
                    out.push_str(&format!("{},{},{},{}\n", rec.label, t, n, fmt_sig(p)));
                }
            }
        }
    }
    out
}

/// Writes via a sibling temp file and rename, so concurrent sweep points
/// never expose half-written output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn emit_csv(path: &Path, records: &[MeasurementRecord], opts: &CsvOptions) -> Result<()> {
    write_atomic(path, &csv_string(records, opts))
}

fn record_value(rec: &MeasurementRecord, opts: &CsvOptions) -> Value {
    let mut v = json!({
        "label": rec.label,
        "time_us": round_sig(rec.time_us, 12),
        "norm": round_sig(rec.norm, 12),
    });
    let obj = v.as_object_mut().unwrap();
    match &rec.data {
        MeasureData::Populations(pops) => {
            let mut ns = Vec::new();
            let mut ps = Vec::new();
            for (n, &p) in pops.iter().enumerate() {
                if p >= opts.min_population {
                    ns.push(json!(n));
                    ps.push(json!(round_sig(p, 12)));
                }
            }
            obj.insert("kind".into(), json!("populations"));
            obj.insert("n".into(), Value::Array(ns));
            obj.insert("population".into(), Value::Array(ps));
        }
        MeasureData::Moments { mean, variance } => {
            obj.insert("kind".into(), json!("moments"));
            obj.insert("mean".into(), json!(round_sig(*mean, 12)));
            obj.insert("variance".into(), json!(round_sig(*variance, 12)));
        }
    }
    v
}

/// Run metadata plus records. serde_json keeps maps sorted by key, so the
/// output is deterministic.
pub fn json_string(
    program: &BenchProgram,
    seed: u64,
    records: &[MeasurementRecord],
    caveats: &[String],
    opts: &CsvOptions,
) -> String {
    let norms: Vec<f64> = records.iter().map(|r| r.norm).collect();
    let audit = if norms.is_empty() {
        json!({ "min": Value::Null, "max": Value::Null })
    } else {
        let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        json!({ "min": round_sig(min, 12), "max": round_sig(max, 12) })
    };
    let params = &program.params;
    let mut pmap = json!({
        "k4": format!("{:?}{}", params.k4.value, unit_name(params.k4.unit)),
        "k6": format!("{:?}{}", params.k6.value, unit_name(params.k6.unit)),
        "chi": format!("{:?}{}", params.chi.value, unit_name(params.chi.unit)),
        "ke": format!("{:?}{}", params.ke.value, unit_name(params.ke.unit)),
    });
    if let Some(kappa) = params.kappa {
        pmap.as_object_mut()
            .unwrap()
            .insert("kappa_per_us".into(), json!(kappa));
    }
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "dim": program.dim,
        "params": pmap,
        "norm_audit": audit,
        "not_modeled": NOT_MODELED,
        "caveats": caveats,
        "records": records.iter().map(|r| record_value(r, opts)).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("static schema");
    s.push('\n');
    s
}

fn unit_name(u: crate::program::FreqUnit) -> &'static str {
    match u {
        crate::program::FreqUnit::Hz => "Hz",
        crate::program::FreqUnit::KHz => "kHz",
        crate::program::FreqUnit::MHz => "MHz",
    }
}

pub fn emit_json(
    path: &Path,
    program: &BenchProgram,
    seed: u64,
    records: &[MeasurementRecord],
    caveats: &[String],
    opts: &CsvOptions,
) -> Result<()> {
    write_atomic(path, &json_string(program, seed, records, caveats, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PropagatorConfig;
    use crate::program::parse_bench;

    fn vacuum_records() -> (BenchProgram, Vec<MeasurementRecord>) {
        let text = "dim 4\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=0\nmeasure pn label=m0\n";
        let p = parse_bench(text).unwrap();
        let (_, records) = p.run(&PropagatorConfig::default()).unwrap();
        (p, records)
    }

    #[test]
    fn vacuum_measurement_emits_single_row() {
        let (_, records) = vacuum_records();
        let csv = csv_string(&records, &CsvOptions::default());
        assert_eq!(csv, "label,time_us,n,population\nm0,0.0,0,1.0\n");
    }

    #[test]
    fn population_filter_threshold_is_configurable() {
        let rec = MeasurementRecord {
            label: "x".into(),
            time_us: 0.5,
            data: MeasureData::Populations(vec![1.0 - 1e-13, 1e-13]),
            norm: 1.0,
        };
        let strict = csv_string(std::slice::from_ref(&rec), &CsvOptions::default());
        assert_eq!(strict.lines().count(), 2);
        let all = csv_string(
            std::slice::from_ref(&rec),
            &CsvOptions { min_population: 0.0 },
        );
        assert_eq!(all.lines().count(), 3);
        assert!(all.lines().last().unwrap().starts_with("x,0.5,1,1e-13"));
    }

    #[test]
    fn twelve_digit_rounding() {
        assert_eq!(fmt_sig(0.0), "0.0");
        assert_eq!(fmt_sig(1.0), "1.0");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_sig(123456.7890123456), "123456.789012");
        assert_eq!(fmt_sig(0.9999999999996), "1.0");
        assert_eq!(fmt_sig(1.23456789012345e-13), "1.23456789012e-13");
    }

    #[test]
    fn json_carries_audit_params_and_exclusions() {
        let (p, records) = vacuum_records();
        let s = json_string(&p, 42, &records, &["demo".into()], &CsvOptions::default());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["dim"], 4);
        assert_eq!(v["params"]["chi"], "0.596MHz");
        assert_eq!(v["not_modeled"].as_array().unwrap().len(), 3);
        assert_eq!(v["caveats"][0], "demo");
        let min = v["norm_audit"]["min"].as_f64().unwrap();
        let max = v["norm_audit"]["max"].as_f64().unwrap();
        assert!(min > 1.0 - 1e-9 && max < 1.0 + 1e-9);
        assert_eq!(v["records"][0]["kind"], "populations");
        assert!(!s.contains('\u{0}'));
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let (_, r1) = vacuum_records();
        let (_, r2) = vacuum_records();
        assert_eq!(
            csv_string(&r1, &CsvOptions::default()),
            csv_string(&r2, &CsvOptions::default())
        );
    }

    #[test]
    fn atomic_write_round_trips() {
        let dir = std::env::temp_dir().join("fockbench-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        let (_, records) = vacuum_records();
        emit_csv(&path, &records, &CsvOptions::default()).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body, csv_string(&records, &CsvOptions::default()));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
