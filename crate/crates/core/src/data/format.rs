//! MIL-CSV reader and writer.
//!
//! Header `bag_id,bag_label,instance_label,f0,...,f{d-1}`, one row per
//! instance. `bag_label` is `-1` or `1`; `instance_label` is `-1`, `1` or `?`
//! (unknown). Rows belonging to a bag need not be contiguous; bags keep the
//! order of their first row. Lines starting with `#` are comments.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Bag, Instance, Label, MilDataset};
use crate::error::{Error, Result};

fn parse_label(field: &str, line: usize, allow_unknown: bool) -> Result<Option<Label>> {
    match field.trim() {
        "-1" => Ok(Some(Label::Negative)),
        "1" | "+1" => Ok(Some(Label::Positive)),
        "?" if allow_unknown => Ok(None),
        other => Err(Error::Parse {
            line,
            message: format!("invalid label `{other}`"),
        }),
    }
}

/// Reads a MIL-CSV stream. With `strict`, a dataset violating the standard
/// MIL assumption is rejected.
pub fn read_mil_csv<R: Read>(reader: R, name: &str, strict: bool) -> Result<MilDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 4
        || &headers[0] != "bag_id"
        || &headers[1] != "bag_label"
        || &headers[2] != "instance_label"
    {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with bag_id,bag_label,instance_label and list at least one feature".into(),
        });
    }
    for (k, h) in headers.iter().skip(3).enumerate() {
        if h != format!("f{k}") {
            return Err(Error::Parse {
                line: 1,
                message: format!("feature column {k} must be named `f{k}`, found `{h}`"),
            });
        }
    }
    let dim = headers.len() - 3;

    let mut bags: Vec<Bag> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut record = csv::StringRecord::new();
    let mut previous_line = 1;
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map_or(previous_line + 1, |p| p.line() as usize);
                return Err(Error::Parse {
                    line,
                    message: e.to_string(),
                });
            }
        }
        let line = record.position().map_or(previous_line + 1, |p| p.line() as usize);
        previous_line = line;
        if record.len() != dim + 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", dim + 3, record.len()),
            });
        }
        let bag_id = &record[0];
        if bag_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty bag id".into(),
            });
        }
        let bag_label = parse_label(&record[1], line, false)?.unwrap();
        let inst_label = parse_label(&record[2], line, true)?;
        let features = record
            .iter()
            .skip(3)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("invalid feature value `{f}`"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let slot = *index.entry(bag_id.to_string()).or_insert_with(|| {
            bags.push(Bag::new(bag_id, bag_label, Vec::new()));
            bags.len() - 1
        });
        if bags[slot].label != bag_label {
            return Err(Error::Parse {
                line,
                message: format!("bag `{bag_id}` has conflicting bag labels"),
            });
        }
        bags[slot].instances.push(Instance::new(features, inst_label));
    }

    let dataset = MilDataset::new(name, bags)?;
    if strict {
        let report = dataset.validate();
        if !report.is_empty() {
            return Err(Error::Validation(report));
        }
    }
    Ok(dataset)
}

/// Loads a MIL-CSV file; the dataset is named after the file stem.
pub fn load_dataset(path: impl AsRef<Path>, strict: bool) -> Result<MilDataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_mil_csv(BufReader::new(File::open(path)?), &name, strict)
}

pub fn write_mil_csv<W: Write>(dataset: &MilDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Serialization(e.to_string());
    let mut header = vec![
        "bag_id".to_string(),
        "bag_label".to_string(),
        "instance_label".to_string(),
    ];
    header.extend((0..dataset.feature_dim()).map(|k| format!("f{k}")));
    wtr.write_record(&header).map_err(csv_err)?;
    for bag in dataset.bags() {
        for inst in &bag.instances {
            let mut row = Vec::with_capacity(dataset.feature_dim() + 3);
            row.push(bag.id.clone());
            row.push(bag.label.to_string());
            row.push(inst.label.map_or_else(|| "?".to_string(), |l| l.to_string()));
            row.extend(inst.features.iter().map(|v| v.to_string()));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &MilDataset, path: impl AsRef<Path>) -> Result<()> {
    write_mil_csv(dataset, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_interleaved_rows() {
        let text = "bag_id,bag_label,instance_label,f0,f1\n\
                    a,1,1,0.5,1\n\
                    b,-1,-1,0,0\n\
                    a,1,-1,2.5,-1e-3\n";
        let ds = read_mil_csv(text.as_bytes(), "t", true).unwrap();
        assert_eq!(ds.bag_count(), 2);
        assert_eq!(ds.bags()[0].id, "a");
        assert_eq!(ds.bags()[0].len(), 2);
        assert_eq!(ds.bags()[0].instances[1].features, vec![2.5, -1e-3]);
        assert_eq!(ds.feature_dim(), 2);
    }

    #[test]
    fn unknown_labels_are_allowed() {
        let text = "bag_id,bag_label,instance_label,f0\np,1,?,1\nn,-1,?,0\n";
        let ds = read_mil_csv(text.as_bytes(), "t", true).unwrap();
        assert!(!ds.has_ground_truth());
    }

    #[test]
    fn strict_mode_rejects_positive_in_negative_bag() {
        let text = "bag_id,bag_label,instance_label,f0\np,1,1,1\nn,-1,1,0\n";
        assert!(matches!(
            read_mil_csv(text.as_bytes(), "t", true),
            Err(Error::Validation(r)) if r.violations.len() == 1
        ));
        let ds = read_mil_csv(text.as_bytes(), "t", false).unwrap();
        assert_eq!(ds.validate().violations.len(), 1);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let short = "bag_id,bag_label,instance_label,f0,f1\np,1,1,1,2\nn,-1,-1,0\n";
        assert!(matches!(
            read_mil_csv(short.as_bytes(), "t", true),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_label = "bag_id,bag_label,instance_label,f0\np,2,1,1\n";
        assert!(matches!(
            read_mil_csv(bad_label.as_bytes(), "t", true),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_float = "bag_id,bag_label,instance_label,f0\np,1,1,x\n";
        assert!(matches!(
            read_mil_csv(bad_float.as_bytes(), "t", true),
            Err(Error::Parse { line: 2, .. })
        ));
        let conflicting = "bag_id,bag_label,instance_label,f0\np,1,1,1\np,-1,-1,1\n";
        assert!(matches!(
            read_mil_csv(conflicting.as_bytes(), "t", false),
            Err(Error::Parse { line: 3, .. })
        ));
        let header = "id,label,inst,f0\np,1,1,1\n";
        assert!(matches!(
            read_mil_csv(header.as_bytes(), "t", false),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn comment_lines_are_skipped() {
        let text = "# seed: 7\nbag_id,bag_label,instance_label,f0\n# note\np,1,1,1\nn,-1,-1,x\n";
        assert!(matches!(
            read_mil_csv(text.as_bytes(), "t", true),
            Err(Error::Parse { line: 5, .. })
        ));
        let ok = "# seed: 7\nbag_id,bag_label,instance_label,f0\np,1,1,1\nn,-1,-1,0\n";
        assert_eq!(read_mil_csv(ok.as_bytes(), "t", true).unwrap().bag_count(), 2);
    }

    #[test]
    fn write_then_read_preserves_dataset() {
        let text = "bag_id,bag_label,instance_label,f0\np,1,1,0.1\np,1,?,0.30000000000000004\nn,-1,-1,-7\n";
        let ds = read_mil_csv(text.as_bytes(), "t", true).unwrap();
        let mut out = Vec::new();
        write_mil_csv(&ds, &mut out).unwrap();
        let back = read_mil_csv(out.as_slice(), "t", true).unwrap();
        assert_eq!(ds, back);
    }
}
