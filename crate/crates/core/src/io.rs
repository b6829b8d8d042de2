//! Reading and writing streams, estimates and accelerometer recordings.
//!
//! All numbers are written with Rust's shortest round-trip formatting, which
//! uses a `.` decimal point, no grouping, and parses back to the same `f64`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One accelerometer reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelerometerRecord {
    pub user: String,
    pub activity: String,
    pub timestamp: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowPolicy {
    /// Stop at the first malformed row.
    #[default]
    Fail,
    /// Skip malformed rows and report them.
    Skip,
}

/// All records of one user in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecording {
    pub user: String,
    pub records: Vec<AccelerometerRecord>,
}

impl UserRecording {
    /// Timestamps at which the activity label differs from the previous row.
    pub fn change_timestamps(&self) -> Vec<i64> {
        self.records
            .windows(2)
            .filter(|w| w[0].activity != w[1].activity)
            .map(|w| w[1].timestamp)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedRecordings {
    pub users: Vec<UserRecording>,
    /// Rows dropped under [`RowPolicy::Skip`].
    pub skipped: Vec<Error>,
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{}'", s.trim()),
    })
}

fn parse_record(raw: &str, line: usize) -> Result<Option<AccelerometerRecord>> {
    let body = raw.trim().trim_end_matches(';').trim();
    if body.is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = body.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::Parse {
            line,
            message: format!("expected 6 fields (user, activity, timestamp, x, y, z), got {}", fields.len()),
        });
    }
    let value = |i: usize, what: &str| -> Result<f64> {
        let v: f64 = parse_field(fields[i], what, line)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse {
                line,
                message: format!("non-finite {what}"),
            })
        }
    };
    Ok(Some(AccelerometerRecord {
        user: fields[0].trim().to_string(),
        activity: fields[1].trim().to_string(),
        timestamp: parse_field(fields[2], "timestamp", line)?,
        ax: value(3, "x acceleration")?,
        ay: value(4, "y acceleration")?,
        az: value(5, "z acceleration")?,
    }))
}

/// Parses `user,activity,timestamp,x,y,z` rows. Trailing semicolons, blank
/// lines and lines starting with `#` are ignored. Records are grouped by
/// user (in order of first appearance) and sorted by timestamp, keeping
/// file order among equal timestamps.
pub fn parse_accelerometer_csv(reader: impl BufRead, policy: RowPolicy) -> Result<ParsedRecordings> {
    let mut order: Vec<String> = Vec::new();
    let mut by_user: BTreeMap<String, Vec<AccelerometerRecord>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim_start().starts_with('#') {
            continue;
        }
        // some exports pack several `;`-terminated rows on one line
        for chunk in line.split(';') {
            match parse_record(chunk, line_no) {
                Ok(Some(rec)) => {
                    if !by_user.contains_key(&rec.user) {
                        order.push(rec.user.clone());
                    }
                    by_user.entry(rec.user.clone()).or_default().push(rec);
                }
                Ok(None) => {}
                Err(e) => match policy {
                    RowPolicy::Fail => return Err(e),
                    RowPolicy::Skip => skipped.push(e),
                },
            }
        }
    }
    let users = order
        .into_iter()
        .map(|user| {
            let mut records = by_user.remove(&user).unwrap_or_default();
            records.sort_by_key(|r| r.timestamp);
            UserRecording { user, records }
        })
        .collect();
    Ok(ParsedRecordings { users, skipped })
}

/// A stream read back from CSV: sample indices, values and any extra
/// columns (such as true quantiles).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamTable {
    pub index: Vec<u64>,
    pub values: Vec<f64>,
    pub extra_headers: Vec<String>,
    pub extra: Vec<Vec<f64>>,
}

/// Writes `n,x[,extra...]` rows preceded by `#` metadata lines.
pub fn write_stream_csv(
    mut out: impl Write,
    metadata: &[(String, String)],
    extra_headers: &[String],
    rows: impl IntoIterator<Item = (u64, f64, Vec<f64>)>,
) -> Result<()> {
    write_metadata(&mut out, metadata)?;
    write!(out, "n,x")?;
    for h in extra_headers {
        write!(out, ",{h}")?;
    }
    writeln!(out)?;
    for (n, x, extra) in rows {
        write!(out, "{n},{x}")?;
        for v in extra {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_metadata(mut out: impl Write, metadata: &[(String, String)]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// Reads a stream CSV. The header may name the value column `x`; a single
/// unnamed column of numbers is also accepted, in which case indices start
/// at 1.
pub fn read_stream_csv(reader: impl BufRead) -> Result<StreamTable> {
    let mut table = StreamTable::default();
    let mut layout: Option<(Option<usize>, usize, Vec<usize>)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if layout.is_none() {
            if fields.iter().all(|f| f.parse::<f64>().is_err()) {
                let n_col = fields.iter().position(|f| *f == "n");
                let x_col = fields.iter().position(|f| *f == "x").ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "header has no 'x' column".into(),
                })?;
                let extra: Vec<usize> = (0..fields.len())
                    .filter(|&j| Some(j) != n_col && j != x_col)
                    .collect();
                table.extra_headers = extra.iter().map(|&j| fields[j].to_string()).collect();
                table.extra = vec![Vec::new(); extra.len()];
                layout = Some((n_col, x_col, extra));
                continue;
            }
            layout = Some((None, 0, Vec::new()));
        }
        let (n_col, x_col, extra) = layout.as_ref().expect("layout set");
        let width = 1 + extra.len() + usize::from(n_col.is_some());
        if fields.len() != width {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        let x: f64 = parse_field(fields[*x_col], "value", line_no)?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        let n = match n_col {
            Some(j) => parse_field(fields[*j], "index", line_no)?,
            None => table.values.len() as u64 + 1,
        };
        table.index.push(n);
        table.values.push(x);
        for (col, &j) in table.extra.iter_mut().zip(extra) {
            col.push(parse_field(fields[j], "column value", line_no)?);
        }
    }
    Ok(table)
}

/// Column name for a probability, e.g. `q0.2`.
pub fn quantile_header(p: f64) -> String {
    format!("q{p}")
}

/// A time, optionally tagged with the user it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub time: f64,
}

/// Reads event times for scoring. Each line is either a JSON object with a
/// `time` field (and optionally `user`; objects without `time`, such as
/// metadata records, are skipped) or a CSV row `time` or `user,time`. Blank
/// lines, `#` lines and a leading header row are ignored.
pub fn read_events(reader: impl BufRead) -> Result<Vec<TimedEvent>> {
    #[derive(Deserialize)]
    struct Raw {
        user: Option<serde_json::Value>,
        time: Option<f64>,
    }
    let mut out = Vec::new();
    let mut seen_row = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let first_row = !seen_row;
        seen_row = true;
        if t.starts_with('{') {
            let raw: Raw = serde_json::from_str(t).map_err(|e| Error::Parse {
                line: line_no,
                message: format!("invalid JSON: {e}"),
            })?;
            if let Some(time) = raw.time {
                let user = raw.user.map(|u| match u {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                });
                out.push(TimedEvent { user, time });
            }
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        let (user, time) = match fields.as_slice() {
            [time] => (None, *time),
            [user, time] => (Some(user.to_string()), *time),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 'time' or 'user,time', got {} fields", fields.len()),
                })
            }
        };
        match time.parse::<f64>() {
            Ok(time) if time.is_finite() => out.push(TimedEvent { user, time }),
            Err(_) if first_row => {}
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("invalid time '{time}'"),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_transition_marks_change() {
        let csv = "33,Walking,100,0.1,9.8,0.2;\n33,Walking,150,0.2,9.7,0.1;\n33,Jogging,200,1.5,12.0,-0.4;\n";
        let parsed = parse_accelerometer_csv(csv.as_bytes(), RowPolicy::Fail).unwrap();
        assert_eq!(parsed.users.len(), 1);
        assert_eq!(parsed.users[0].change_timestamps(), vec![200]);
    }

    #[test]
    fn rows_sorted_per_user() {
        let csv = "1,Sitting,30,0,0,0\n2,Walking,5,1,1,1\n\n1,Sitting,10,0,0,0;\n1,Sitting,20,0,0,0\n";
        let parsed = parse_accelerometer_csv(csv.as_bytes(), RowPolicy::Fail).unwrap();
        let users: Vec<&str> = parsed.users.iter().map(|u| u.user.as_str()).collect();
        assert_eq!(users, vec!["1", "2"]);
        let ts: Vec<i64> = parsed.users[0].records.iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![10, 20, 30]);
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = "1,Walking,10,0,0,0;\n1,Walking,20,0,0;\n";
        match parse_accelerometer_csv(csv.as_bytes(), RowPolicy::Fail) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let parsed = parse_accelerometer_csv(csv.as_bytes(), RowPolicy::Skip).unwrap();
        assert_eq!(parsed.users[0].records.len(), 1);
        assert_eq!(parsed.skipped.len(), 1);
        let bad = "1,Walking,10,0,abc,0\n";
        let err = parse_accelerometer_csv(bad.as_bytes(), RowPolicy::Fail).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn stream_round_trip() {
        let values = [0.1, -2.5e-7, 1.0 / 3.0, 12345.678901234567];
        let mut buf = Vec::new();
        write_stream_csv(
            &mut buf,
            &[("seed".into(), "7".into())],
            &[quantile_header(0.5)],
            values.iter().enumerate().map(|(i, &x)| (i as u64 + 1, x, vec![x * 2.0])),
        )
        .unwrap();
        let table = read_stream_csv(buf.as_slice()).unwrap();
        assert_eq!(table.values, values);
        assert_eq!(table.index, vec![1, 2, 3, 4]);
        assert_eq!(table.extra_headers, vec!["q0.5".to_string()]);
        assert_eq!(table.extra[0][2], 2.0 / 3.0);
    }

    #[test]
    fn bare_value_column() {
        let table = read_stream_csv("1.5\n2.5\n\n# note\n3\n".as_bytes()).unwrap();
        assert_eq!(table.values, vec![1.5, 2.5, 3.0]);
        assert_eq!(table.index, vec![1, 2, 3]);
        assert!(read_stream_csv("1.5\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn events_from_csv_and_json() {
        let e = read_events("time\n3.5\n1.0\n".as_bytes()).unwrap();
        assert_eq!(e.iter().map(|e| e.time).collect::<Vec<_>>(), vec![3.5, 1.0]);
        let e = read_events("user,time\n7,2.5\n".as_bytes()).unwrap();
        assert_eq!(e[0], TimedEvent { user: Some("7".into()), time: 2.5 });
        let json = "{\"meta\": {}}\n{\"time\": 2.0, \"user\": 33}\n{\"time\": 1.0}\n";
        let e = read_events(json.as_bytes()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].user.as_deref(), Some("33"));
        assert_eq!(e[1].user, None);
        let err = read_events("1.0\nfoo\n".as_bytes()).unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, message: "invalid time 'foo'".into() });
    }
}
