//! CSV rows and JSON summaries.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "experiment_id",
    "N",
    "re",
    "im",
    "abs",
    "sup",
    "t_star",
    "seminorm",
    "clamped",
];

/// One data row; absent fields are written as empty cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub experiment_id: String,
    pub n: u64,
    pub re: Option<f64>,
    pub im: Option<f64>,
    pub abs: Option<f64>,
    pub sup: Option<f64>,
    pub t_star: Option<f64>,
    pub seminorm: Option<f64>,
    pub clamped: Option<bool>,
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl Row {
    pub fn fields(&self) -> [String; 9] {
        [
            self.experiment_id.clone(),
            self.n.to_string(),
            fmt_f64(self.re),
            fmt_f64(self.im),
            fmt_f64(self.abs),
            fmt_f64(self.sup),
            fmt_f64(self.t_star),
            fmt_f64(self.seminorm),
            self.clamped.map(|c| c.to_string()).unwrap_or_default(),
        ]
    }

    pub fn from_fields<S: AsRef<str>>(f: &[S]) -> Result<Row> {
        if f.len() != CSV_HEADER.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} fields, expected {}",
                f.len(),
                CSV_HEADER.len()
            )));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::InvalidParameter(format!("bad number `{s}`")))
            }
        };
        let f: Vec<&str> = f.iter().map(|s| s.as_ref()).collect();
        Ok(Row {
            experiment_id: f[0].to_string(),
            n: f[1]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad N `{}`", f[1])))?,
            re: num(f[2])?,
            im: num(f[3])?,
            abs: num(f[4])?,
            sup: num(f[5])?,
            t_star: num(f[6])?,
            seminorm: num(f[7])?,
            clamped: match f[8] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                s => return Err(Error::InvalidParameter(format!("bad flag `{s}`"))),
            },
        })
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidParameter("unexpected CSV header".into()));
    }
    r.records()
        .map(|rec| Row::from_fields(&rec?.iter().collect::<Vec<_>>()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub assertion: String,
    pub series: String,
    pub observed: Option<f64>,
    pub pass: bool,
}
