//! CSV reading and writing.
//!
//! Header layout: `f_<name>` columns for features, then `time_<event>` and
//! `event_<event>` pairs. Floats are written with 17 significant digits so a
//! write/load round trip is bit-exact; missing cells are empty.

use std::path::Path;

use ndarray::Array2;

use super::{DataError, FeatureColumn, FeatureKind, FeatureSpec, MultiEventDataset};
use crate::kv::fmt_f64;

struct HeaderLayout {
    /// (column index, feature name)
    features: Vec<(usize, String)>,
    /// (time column index, event column index, event name)
    events: Vec<(usize, usize, String)>,
}

fn parse_header(header: &csv::StringRecord) -> Result<HeaderLayout, DataError> {
    let mut features = Vec::new();
    let mut time_cols: Vec<(usize, String)> = Vec::new();
    let mut event_cols: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in header.iter().enumerate() {
        let checked = |name: &str| -> Result<String, DataError> {
            if name.is_empty() || name.contains(',') || name.contains('\n') {
                return Err(DataError::Header(format!(
                    "column name `{name}` must be non-empty and free of commas/newlines"
                )));
            }
            Ok(name.to_string())
        };
        if let Some(name) = raw.strip_prefix("f_") {
            features.push((idx, checked(name)?));
        } else if let Some(name) = raw.strip_prefix("time_") {
            time_cols.push((idx, checked(name)?));
        } else if let Some(name) = raw.strip_prefix("event_") {
            event_cols.push((idx, checked(name)?));
        } else {
            return Err(DataError::Header(format!(
                "column `{raw}` must start with f_, time_ or event_"
            )));
        }
    }
    if time_cols.is_empty() {
        return Err(DataError::Header("no time_<event> columns found".into()));
    }
    let mut events = Vec::new();
    for (tcol, name) in &time_cols {
        let ecol = event_cols
            .iter()
            .find(|(_, n)| n == name)
            .map(|(c, _)| *c)
            .ok_or_else(|| DataError::Header(format!("time_{name} has no matching event_{name}")))?;
        events.push((*tcol, ecol, name.clone()));
    }
    if event_cols.len() != events.len() {
        let extra: Vec<&str> = event_cols
            .iter()
            .filter(|(_, n)| !events.iter().any(|(_, _, en)| en == n))
            .map(|(_, n)| n.as_str())
            .collect();
        return Err(DataError::Header(format!(
            "event columns without time columns: {extra:?}"
        )));
    }
    Ok(HeaderLayout { features, events })
}

fn read_records(path: &Path) -> Result<(HeaderLayout, Vec<csv::StringRecord>), DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let layout = parse_header(reader.headers()?)?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok((layout, records))
}

fn build_dataset(
    layout: &HeaderLayout,
    records: &[csv::StringRecord],
    kinds: &[FeatureKind],
) -> Result<MultiEventDataset, DataError> {
    let n = records.len();
    let k = layout.events.len();

    let mut features = Vec::with_capacity(layout.features.len());
    for ((col, name), kind) in layout.features.iter().zip(kinds) {
        match kind {
            FeatureKind::Numeric => {
                let mut values = Vec::with_capacity(n);
                for (i, rec) in records.iter().enumerate() {
                    let cell = rec.get(*col).unwrap_or("").trim();
                    if cell.is_empty() {
                        values.push(f64::NAN);
                    } else {
                        let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                            line: i + 2,
                            msg: format!("cannot parse `{cell}` in f_{name} as a number"),
                        })?;
                        if !v.is_finite() {
                            return Err(DataError::Parse {
                                line: i + 2,
                                msg: format!("non-finite value in f_{name}"),
                            });
                        }
                        values.push(v);
                    }
                }
                features.push(FeatureColumn::Numeric {
                    name: name.clone(),
                    values,
                });
            }
            FeatureKind::Categorical => {
                let values = records
                    .iter()
                    .map(|rec| {
                        let cell = rec.get(*col).unwrap_or("").trim();
                        if cell.is_empty() {
                            None
                        } else {
                            Some(cell.to_string())
                        }
                    })
                    .collect();
                features.push(FeatureColumn::Categorical {
                    name: name.clone(),
                    values,
                });
            }
        }
    }

    let mut times = Array2::zeros((n, k));
    let mut observed = Array2::from_elem((n, k), false);
    for (i, rec) in records.iter().enumerate() {
        let line = i + 2;
        for (j, (tcol, ecol, name)) in layout.events.iter().enumerate() {
            let tcell = rec.get(*tcol).unwrap_or("").trim();
            let t: f64 = tcell.parse().map_err(|_| DataError::Parse {
                line,
                msg: format!("cannot parse `{tcell}` in time_{name}"),
            })?;
            if !t.is_finite() || t < 0.0 {
                return Err(DataError::BadTime { line, value: t });
            }
            times[(i, j)] = t;
            let ecell = rec.get(*ecol).unwrap_or("").trim();
            observed[(i, j)] = match ecell {
                "0" => false,
                "1" => true,
                other => {
                    return Err(DataError::BadIndicator {
                        line,
                        value: other.to_string(),
                    })
                }
            };
        }
    }

    let event_names = layout.events.iter().map(|(_, _, n)| n.clone()).collect();
    MultiEventDataset::new(features, times, observed, event_names)
}

/// Load a dataset, checking the file's feature columns against an explicit
/// schema (names, kinds and order must match).
pub fn load_csv(path: &Path, schema: &[FeatureSpec]) -> Result<MultiEventDataset, DataError> {
    let (layout, records) = read_records(path)?;
    if layout.features.len() != schema.len() {
        return Err(DataError::SchemaMismatch(format!(
            "file has {} feature columns, schema expects {}",
            layout.features.len(),
            schema.len()
        )));
    }
    for ((_, name), spec) in layout.features.iter().zip(schema) {
        if *name != spec.name {
            return Err(DataError::SchemaMismatch(format!(
                "feature column `{name}` where schema expects `{}`",
                spec.name
            )));
        }
    }
    let kinds: Vec<FeatureKind> = schema.iter().map(|s| s.kind).collect();
    build_dataset(&layout, &records, &kinds)
}

/// Load a dataset, inferring feature kinds: a column where every non-empty
/// cell parses as a float is numeric, anything else is categorical.
pub fn load_csv_auto(path: &Path) -> Result<MultiEventDataset, DataError> {
    let (layout, records) = read_records(path)?;
    let kinds: Vec<FeatureKind> = layout
        .features
        .iter()
        .map(|(col, _)| {
            let all_numeric = records.iter().all(|rec| {
                let cell = rec.get(*col).unwrap_or("").trim();
                cell.is_empty() || cell.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false)
            });
            if all_numeric {
                FeatureKind::Numeric
            } else {
                FeatureKind::Categorical
            }
        })
        .collect();
    build_dataset(&layout, &records, &kinds)
}

pub fn save_csv(ds: &MultiEventDataset, path: &Path) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = Vec::new();
    for col in &ds.features {
        header.push(format!("f_{}", col.name()));
    }
    for name in &ds.event_names {
        header.push(format!("time_{name}"));
        header.push(format!("event_{name}"));
    }
    writer.write_record(&header)?;

    for i in 0..ds.n() {
        let mut row = Vec::with_capacity(header.len());
        for col in &ds.features {
            match col {
                FeatureColumn::Numeric { values, .. } => {
                    let v = values[i];
                    row.push(if v.is_nan() { String::new() } else { fmt_f64(v) });
                }
                FeatureColumn::Categorical { values, .. } => {
                    row.push(values[i].clone().unwrap_or_default());
                }
            }
        }
        for j in 0..ds.k() {
            row.push(fmt_f64(ds.times[(i, j)]));
            row.push(if ds.observed[(i, j)] { "1" } else { "0" }.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_row_two_event_file() {
        let f = write_tmp(
            "f_age,f_sex,time_a,event_a,time_b,event_b\n\
             63,m,10,1,20,0\n\
             41,f,5.5,0,5.5,0\n\
             70,m,1,1,2,1\n",
        );
        let ds = load_csv_auto(f.path()).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.features.len(), 2);
        assert_eq!(ds.event_names, vec!["a", "b"]);
        assert_eq!(ds.features[0].kind(), FeatureKind::Numeric);
        assert_eq!(ds.features[1].kind(), FeatureKind::Categorical);
        assert_eq!(ds.times[(1, 0)], 5.5);
        assert!(ds.observed[(2, 1)]);
    }

    #[test]
    fn rejects_out_of_domain_indicator() {
        let f = write_tmp("f_x,time_a,event_a\n1,2,2\n");
        match load_csv_auto(f.path()) {
            Err(DataError::BadIndicator { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "2");
            }
            other => panic!("expected indicator error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("f_x,time_a,event_a\n1,2,1\n1,abc,1\n");
        match load_csv_auto(f.path()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_bits() {
        let ds = MultiEventDataset::new(
            vec![
                FeatureColumn::Numeric {
                    name: "x".into(),
                    values: vec![std::f64::consts::PI, f64::NAN, -1.0e-17],
                },
                FeatureColumn::Categorical {
                    name: "c".into(),
                    values: vec![Some("red".into()), None, Some("blue".into())],
                },
            ],
            array![[0.1], [2.0f64.sqrt()], [3.0]],
            array![[true], [false], [true]],
            vec!["death".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path, &ds.schema()).unwrap();
        for (a, b) in ds.features.iter().zip(&back.features) {
            match (a, b) {
                (
                    FeatureColumn::Numeric { values: va, .. },
                    FeatureColumn::Numeric { values: vb, .. },
                ) => {
                    for (x, y) in va.iter().zip(vb) {
                        if x.is_nan() {
                            assert!(y.is_nan());
                        } else {
                            assert_eq!(x.to_bits(), y.to_bits());
                        }
                    }
                }
                (
                    FeatureColumn::Categorical { values: va, .. },
                    FeatureColumn::Categorical { values: vb, .. },
                ) => assert_eq!(va, vb),
                _ => panic!("column kind changed in round trip"),
            }
        }
        for (a, b) in ds.times.iter().zip(back.times.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(ds.observed, back.observed);
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let f = write_tmp("f_x,time_a,event_a\n1,2,1\n");
        let schema = vec![FeatureSpec {
            name: "y".into(),
            kind: FeatureKind::Numeric,
        }];
        assert!(matches!(
            load_csv(f.path(), &schema),
            Err(DataError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn unknown_header_prefix_rejected() {
        let f = write_tmp("age,time_a,event_a\n1,2,1\n");
        assert!(matches!(load_csv_auto(f.path()), Err(DataError::Header(_))));
    }
}
