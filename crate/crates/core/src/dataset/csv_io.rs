use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{CategoricalDataset, Schema, Variable};
use crate::error::{Error, Result};

/// How category indices are assigned during ingestion.
#[derive(Clone, Debug)]
pub enum SchemaMode {
    /// Columns and categories must match the given schema; indices follow its
    /// order.
    Declared(Schema),
    /// Categories are indexed by first appearance in the file.
    Infer { target: Option<String> },
}

pub fn load_csv(path: impl AsRef<Path>, mode: &SchemaMode) -> Result<CategoricalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), mode)
}

/// Parse a headed CSV table. `label` names the source in error messages.
pub fn read_csv<R: Read>(reader: R, label: &str, mode: &SchemaMode) -> Result<CategoricalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Data(format!("{label}: empty file")));
    }

    // `order[c]` is the schema index receiving CSV column `c`.
    let (mut variables, order, target) = match mode {
        SchemaMode::Declared(schema) => {
            let mut order = Vec::with_capacity(header.len());
            for name in &header {
                let idx = schema
                    .index_of(name)
                    .ok_or_else(|| Error::Data(format!("{label}: column `{name}` is not in the declared schema")))?;
                if order.contains(&idx) {
                    return Err(Error::Data(format!("{label}: column `{name}` appears twice")));
                }
                order.push(idx);
            }
            if order.len() != schema.len() {
                let missing: Vec<_> = schema
                    .variables()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !order.contains(i))
                    .map(|(_, v)| v.name.as_str())
                    .collect();
                return Err(Error::Data(format!(
                    "{label}: missing schema columns {}",
                    missing.join(", ")
                )));
            }
            (schema.variables().to_vec(), order, schema.target().map(str::to_owned))
        }
        SchemaMode::Infer { target } => {
            let vars = header
                .iter()
                .map(|h| Variable::new(h.clone(), Vec::<String>::new()))
                .collect();
            (vars, (0..header.len()).collect(), target.clone())
        }
    };
    let declared = matches!(mode, SchemaMode::Declared(_));
    let q = header.len();

    let mut codes: Vec<u32> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    while rdr.read_record(&mut record)? {
        row += 1;
        if record.len() != q {
            return Err(Error::Data(format!(
                "{label}: row {row} has {} fields, header has {q}",
                record.len()
            )));
        }
        let start = codes.len();
        codes.resize(start + q, 0);
        for (c, field) in record.iter().enumerate() {
            let var = &mut variables[order[c]];
            if field.is_empty() {
                return Err(cell(
                    label,
                    row,
                    &header[c],
                    "blank field (missing values are not supported)".into(),
                ));
            }
            let code = match var.category_index(field) {
                Some(i) => i,
                None if declared => {
                    return Err(cell(label, row, &header[c], format!("unknown category `{field}`")));
                }
                None => {
                    var.categories.push(field.to_owned());
                    var.categories.len() - 1
                }
            };
            codes[start + order[c]] = code as u32;
        }
    }
    if row == 0 {
        return Err(Error::Data(format!("{label}: no data rows")));
    }
    let schema = match mode {
        SchemaMode::Declared(s) => s.clone(),
        SchemaMode::Infer { .. } => Schema::new(variables, target)?,
    };
    CategoricalDataset::new(schema, codes)
}

fn cell(label: &str, row: usize, column: &str, message: String) -> Error {
    Error::Cell {
        path: label.to_owned(),
        row,
        column: column.to_owned(),
        message,
    }
}

/// Write category labels with a header row, in schema column order.
pub fn write_csv<W: Write>(ds: &CategoricalDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let vars = ds.schema().variables();
    wtr.write_record(vars.iter().map(|v| v.name.as_str()))?;
    for row in ds.rows() {
        wtr.write_record(vars.iter().zip(row).map(|(v, &c)| v.categories[c as usize].as_str()))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, mode: &SchemaMode) -> Result<CategoricalDataset> {
        read_csv(text.as_bytes(), "test.csv", mode)
    }

    fn infer() -> SchemaMode {
        SchemaMode::Infer { target: None }
    }

    fn declared() -> SchemaMode {
        SchemaMode::Declared(
            Schema::new(
                vec![
                    Variable::new("Weather", ["Clear", "Rain"]),
                    Variable::new("Light", ["Day", "Dark"]),
                ],
                None,
            )
            .unwrap(),
        )
    }

    #[test]
    fn three_rows_two_variables() {
        let ds = parse("Weather,Light\nClear,Day\nRain,Dark\nClear,Dark\n", &infer()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_vars(), 2);
        let j: usize = ds.schema().variables().iter().map(|v| v.categories.len()).sum();
        assert_eq!(j, 4);
        assert_eq!(ds.row(2), &[0, 1]);
    }

    #[test]
    fn infer_uses_first_appearance() {
        let ds = parse("Weather,Light\nRain,Dark\nClear,Day\n", &infer()).unwrap();
        assert_eq!(ds.schema().variables()[0].categories, vec!["Rain", "Clear"]);
        let ds = parse("Weather,Light\nRain,Dark\nClear,Day\n", &declared()).unwrap();
        assert_eq!(ds.row(0), &[1, 1]);
    }

    #[test]
    fn declared_columns_may_be_permuted() {
        let ds = parse("Light,Weather\nDark,Rain\n", &declared()).unwrap();
        assert_eq!(ds.row(0), &[1, 1]);
        assert_eq!(ds.schema().variables()[0].name, "Weather");
    }

    #[test]
    fn unknown_category_names_row_column_value() {
        let err = parse("Weather,Light\nClear,Day\nSleet,Day\n", &declared()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("Weather"), "{msg}");
        assert!(msg.contains("Sleet"), "{msg}");
    }

    #[test]
    fn contract_errors() {
        assert!(parse("", &infer()).is_err());
        assert!(parse("Weather,Light\n", &infer()).is_err());
        assert!(parse("Weather,Light\nClear\n", &infer()).is_err());
        assert!(parse("Weather,Light\nClear,\nRain,Day\n", &infer()).is_err());
        assert!(parse("Weather,Fog\nClear,Day\n", &declared()).is_err());
        assert!(load_csv("/definitely/not/here.csv", &infer()).is_err());
    }

    #[test]
    fn rfc4180_quoting_and_exact_bytes() {
        let ds = parse(
            "\"Crash, type\",B\n\"Angle, left\",x\nangle,y\n\"Angle, left\",y\n",
            &infer(),
        )
        .unwrap();
        assert_eq!(ds.schema().variables()[0].name, "Crash, type");
        // no case folding
        assert_eq!(ds.schema().variables()[0].categories, vec!["Angle, left", "angle"]);
    }

    #[test]
    fn target_must_exist() {
        let mode = SchemaMode::Infer {
            target: Some("Severity".into()),
        };
        assert!(parse("Weather,Light\nClear,Day\nRain,Dark\n", &mode).is_err());
    }

    proptest! {
        #[test]
        fn write_then_load_round_trips(rows in proptest::collection::vec((0u32..3, 0u32..2, 0u32..4), 1..40)) {
            let schema = Schema::new(
                vec![
                    Variable::new("A", ["a0", "a1", "a,2"]),
                    Variable::new("B", ["b0", "b \"1\""]),
                    Variable::new("Sev", ["KA", "BC", "O", "X"]),
                ],
                Some("Sev".into()),
            ).unwrap();
            let codes: Vec<u32> = rows.iter().flat_map(|&(a, b, c)| [a, b, c]).collect();
            let ds = CategoricalDataset::new(schema.clone(), codes).unwrap();
            let mut buf = Vec::new();
            write_csv(&ds, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), "rt", &SchemaMode::Declared(schema)).unwrap();
            prop_assert_eq!(&back, &ds);

            let inferred = read_csv(buf.as_slice(), "rt", &SchemaMode::Infer { target: Some("Sev".into()) });
            if let Ok(inferred) = inferred {
                let mut again = Vec::new();
                write_csv(&inferred, &mut again).unwrap();
                prop_assert_eq!(&again, &buf);
                let twice = read_csv(again.as_slice(), "rt", &SchemaMode::Infer { target: Some("Sev".into()) }).unwrap();
                prop_assert_eq!(twice, inferred);
            }
        }
    }
}
