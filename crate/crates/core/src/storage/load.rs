use std::path::{Path, PathBuf};

use super::{AnnotationSpec, DatabaseInstance};
use crate::error::{Error, Result};
use crate::qmodel::Schema;
use crate::value::Const;

/// Rows of one CSV file: header plus `(line, values)` per data row.
pub type CsvRows = (Vec<String>, Vec<(u64, Vec<Const>)>);

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn data_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Data {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Parses CSV bytes (RFC 4180, header required). `origin` only labels
/// errors.
pub fn read_relation_csv(bytes: &[u8], origin: &Path) -> Result<CsvRows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(origin, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(data_err(origin, 1, "missing header row"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            let message = match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    format!("expected {expected_len} fields, found {len}")
                }
                _ => e.to_string(),
            };
            data_err(origin, line, message)
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record.iter().map(Const::parse).collect()));
    }
    Ok((header, rows))
}

/// Parses a Why-No candidates file: one `Relation,v1,...,vk` row per
/// tuple, no header, `#` starts a comment line. Every candidate is
/// endogenous; repeated rows are kept once.
pub fn read_candidates_csv(bytes: &[u8], origin: &Path, schema: &Schema) -> Result<DatabaseInstance> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut db = DatabaseInstance::new(schema.clone());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            data_err(origin, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut fields = record.iter();
        let relation = match fields.next() {
            Some(r) if !r.is_empty() => r,
            _ => continue,
        };
        let arity = schema
            .arity(relation)
            .ok_or_else(|| data_err(origin, line, format!("unknown relation `{relation}`")))?;
        let values: Vec<Const> = fields.map(Const::parse).collect();
        if values.len() != arity {
            return Err(data_err(
                origin,
                line,
                format!("`{relation}` has arity {arity}, found {} values", values.len()),
            ));
        }
        if db.find(relation, &values).is_none() {
            db.insert(relation, values, true)?;
        }
    }
    Ok(db)
}

/// Loads one CSV per relation against a known schema. Ids follow source
/// order, then row order.
pub fn load(schema: &Schema, sources: &[(String, PathBuf)], annotations: &AnnotationSpec) -> Result<DatabaseInstance> {
    annotations.check(schema)?;
    let mut db = DatabaseInstance::new(schema.clone());
    for (relation, path) in sources {
        let rel = schema
            .get(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.clone()))?;
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        let (header, rows) = read_relation_csv(&bytes, path)?;
        if header != rel.columns {
            return Err(data_err(
                path,
                1,
                format!(
                    "header {:?} does not match the columns of `{relation}` {:?}",
                    header, rel.columns
                ),
            ));
        }
        for (i, (line, values)) in rows.into_iter().enumerate() {
            let endo = rel
                .default_endo
                .or_else(|| annotations.flag_for(schema, relation, i + 1, &values))
                .unwrap_or(true);
            db.insert(relation, values, endo).map_err(|e| match e {
                Error::ConflictingFlags(t) => data_err(
                    path,
                    line,
                    format!("tuple {t} is flagged both endogenous and exogenous"),
                ),
                other => other,
            })?;
        }
    }
    Ok(db)
}

/// Loads every `*.csv` file of a directory; the file stem names the
/// relation and the header row gives its columns.
pub fn load_dir(dir: &Path, annotations: &AnnotationSpec) -> Result<DatabaseInstance> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    let mut schema = Schema::new();
    let mut sources = Vec::new();
    for path in files {
        let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
        let (header, _) = read_relation_csv(&bytes, &path)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| data_err(&path, 0, "file name is not valid UTF-8"))?
            .to_string();
        schema.add(&name, header)?;
        sources.push((name, path));
    }
    load(&schema, &sources, annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_a_directory_and_applies_annotations() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "X,Y\na1,a5\na2,a1\na3,a3\na4,a3\na4,a2\na4,a2\n");
        write(dir.path(), "S.csv", "Y\na1\na2\na3\na4\na6\n");
        write(dir.path(), "notes.txt", "ignored");
        let spec = AnnotationSpec::parse("exo R where X=a4").unwrap();
        let db = load_dir(dir.path(), &spec).unwrap();
        assert_eq!(db.len(), 10);
        assert_eq!(db.exo_ids().count(), 2);
        let t = db.find("R", &["a4".into(), "a3".into()]).unwrap();
        assert!(!db.is_endo(t));
        // ids follow file then row order
        assert_eq!(db.reference(crate::storage::TupleId(0)), "R(a1,a5)");
    }

    #[test]
    fn header_only_file_gives_an_empty_relation() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "X,Y\n");
        let db = load_dir(dir.path(), &AnnotationSpec::default()).unwrap();
        assert!(db.is_empty());
        assert_eq!(db.schema().arity("R"), Some(2));
    }

    #[test]
    fn row_errors_report_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "X,Y\na,b\nc\n");
        match load_dir(dir.path(), &AnnotationSpec::default()) {
            Err(Error::Data { file, line, .. }) => {
                assert!(file.ends_with("R.csv"));
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conflicting_flags_for_identical_rows() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "X\na\na\n");
        let spec = AnnotationSpec::parse("exo R rows 2").unwrap();
        match load_dir(dir.path(), &spec) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_schema_checks_headers_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "R.csv", "A,B\n1,2\n");
        let mut schema = Schema::new();
        schema.add("R", vec!["X".into(), "Y".into()]).unwrap();
        let spec = AnnotationSpec::default();
        assert!(matches!(
            load(&schema, &[("R".into(), p)], &spec),
            Err(Error::Data { line: 1, .. })
        ));
        assert!(matches!(
            load(&schema, &[("R".into(), dir.path().join("missing.csv"))], &spec),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn candidates_file() {
        let mut schema = Schema::new();
        schema.add("R", vec!["X".into(), "Y".into()]).unwrap();
        let origin = Path::new("cands.csv");
        let db = read_candidates_csv(b"# missing\nR,a,b\nR, a , b\n\nR,'c d',e\n", origin, &schema).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.endo_ids().count(), 2);
        assert!(matches!(
            read_candidates_csv(b"S,a\n", origin, &schema),
            Err(Error::Data { line: 1, .. })
        ));
        assert!(matches!(
            read_candidates_csv(b"R,a,b\nR,a\n", origin, &schema),
            Err(Error::Data { line: 2, .. })
        ));
    }

    #[test]
    fn schema_default_beats_annotation_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "R.csv", "X\na\nb\n");
        let mut schema = Schema::new();
        schema.add("R", vec!["X".into()]).unwrap();
        schema.set_default("R", Some(false)).unwrap();
        let spec = AnnotationSpec::parse("endo R *").unwrap();
        let db = load(&schema, &[("R".into(), p)], &spec).unwrap();
        assert_eq!(db.endo_ids().count(), 0);
    }

    #[test]
    fn loading_twice_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "X,Y\n1,2\n'a b',3\n1,2\n");
        let spec = AnnotationSpec::default();
        let a = load_dir(dir.path(), &spec).unwrap();
        let b = load_dir(dir.path(), &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }
}
