//! Series CSV files: a header row, an optional leading time column and one
//! numeric column per series. Empty cells and `NA` mark missing values;
//! lines starting with `#` are comments.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::SeriesData;

const TIME_HEADERS: [&str; 4] = ["t", "time", "date", "timestamp"];

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

pub fn read_csv(path: &Path) -> Result<SeriesData> {
    let file = std::fs::File::open(path)?;
    read_csv_from(file, &path.display().to_string())
}

/// Parse series data from any reader; `label` prefixes error messages.
pub fn read_csv_from<R: Read>(reader: R, label: &str) -> Result<SeriesData> {
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: label.to_string(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let header_line = headers.position().map_or(1, |p| p.line());
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(parse_err(header_line, "missing header row".into()));
    }
    let has_time = TIME_HEADERS.contains(&headers[0].to_ascii_lowercase().as_str());
    let first = usize::from(has_time);
    let names: Vec<String> = headers.iter().skip(first).map(str::to_string).collect();
    let n = names.len();
    if n == 0 {
        return Err(parse_err(header_line, "no series columns".into()));
    }

    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut time = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n + first {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", n + first, record.len()),
            ));
        }
        if has_time {
            time.push(record[0].to_string());
        }
        for (col, cell) in record.iter().skip(first).enumerate() {
            if is_missing(cell) {
                values.push(f64::NAN);
                mask.push(false);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("column `{}`: cannot parse `{cell}` as a number", names[col])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column `{}`: non-finite value `{cell}`", names[col])));
            }
            values.push(v);
            mask.push(true);
        }
    }
    let t_len = mask.len() / n;
    if t_len == 0 {
        return Err(parse_err(header_line, "no data rows".into()));
    }
    let y = DMatrix::from_row_slice(t_len, n, &values);
    let data = SeriesData::new(y, mask).map_err(|e| parse_err(header_line, e.to_string()))?;
    let data = data.with_names(names)?;
    if has_time {
        data.with_time(time)
    } else {
        Ok(data)
    }
}

/// Shortest round-trip decimal form of an observed value.
fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_csv(data: &SeriesData, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv_to(data, &mut f, &[])?;
    f.flush()?;
    Ok(())
}

/// Write series data, preceded by `# `-prefixed comment lines.
pub fn write_csv_to<W: Write>(data: &SeriesData, out: W, comments: &[String]) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let time = data.time();
    let mut header: Vec<&str> = Vec::new();
    if time.is_some() {
        header.push("time");
    }
    header.extend(data.names().iter().map(String::as_str));
    w.write_record(&header).map_err(csv_io)?;
    for t in 0..data.len() {
        let mut row = Vec::with_capacity(header.len());
        if let Some(time) = time {
            row.push(time[t].clone());
        }
        row.extend((0..data.n()).map(|i| cell(data.value(t, i))));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
