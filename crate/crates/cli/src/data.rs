//! CSV ingestion of positive observations.

use std::path::Path;

use crate::error::CliError;

/// Reads one column of positive values. The header is optional and is
/// detected by the selected field failing to parse as a number; `column`
/// selects a named column and therefore requires a header.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((i + 1, rec));
    }
    let Some((_, first)) = rows.first() else {
        return Err(CliError::Data(format!("{}: no observations", path.display())));
    };
    let has_header = match column {
        Some(_) => true,
        None => first.get(0).is_some_and(|f| f.parse::<f64>().is_err()),
    };
    let index = match column {
        Some(name) => first.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!("{}: no column named {name:?}", path.display()))
        })?,
        None => 0,
    };
    let body = if has_header { &rows[1..] } else { &rows[..] };
    let mut values = Vec::with_capacity(body.len());
    let (mut unparsable, mut nonpositive) = (Vec::new(), Vec::new());
    for (line, rec) in body {
        match rec.get(index).map(str::parse::<f64>) {
            Some(Ok(v)) if v.is_finite() && v > 0.0 => values.push(v),
            Some(Ok(_)) => nonpositive.push(*line),
            _ => unparsable.push(*line),
        }
    }
    if !unparsable.is_empty() {
        return Err(CliError::Data(format!(
            "{}: unreadable values on lines {unparsable:?}",
            path.display()
        )));
    }
    if !nonpositive.is_empty() {
        return Err(CliError::Data(format!(
            "{}: non-positive or non-finite values on lines {nonpositive:?}",
            path.display()
        )));
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no observations", path.display())));
    }
    Ok(values)
}

/// Removes the k smallest observations, keeping the original order.
pub fn drop_smallest(values: Vec<f64>, k: usize) -> Result<Vec<f64>, CliError> {
    if k == 0 {
        return Ok(values);
    }
    if k >= values.len() {
        return Err(CliError::Data(format!(
            "cannot drop {k} of {} observations",
            values.len()
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut keep = vec![true; values.len()];
    for &i in &order[..k] {
        keep[i] = false;
    }
    Ok(values
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(read_column(file("1.5\n2\n").path(), None).unwrap(), vec![1.5, 2.0]);
        assert_eq!(read_column(file("value\n1.5\n2\n").path(), None).unwrap(), vec![1.5, 2.0]);
        let named = file("a,b\n1,10\n2,20\n");
        assert_eq!(read_column(named.path(), Some("b")).unwrap(), vec![10.0, 20.0]);
        assert!(read_column(named.path(), Some("c")).is_err());
    }

    #[test]
    fn bad_lines_are_listed() {
        let err = read_column(file("value\n1\n-2\n3\n0\n").path(), None).unwrap_err();
        assert!(err.to_string().contains("[3, 5]"), "{err}");
    }

    #[test]
    fn drops_the_smallest() {
        assert_eq!(drop_smallest(vec![3.0, 1.0, 2.0, 0.5], 2).unwrap(), vec![3.0, 2.0]);
        assert!(drop_smallest(vec![1.0], 1).is_err());
    }
}
