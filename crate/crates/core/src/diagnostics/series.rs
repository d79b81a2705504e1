use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One diagnostic row of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub l2_u: f64,
    pub l2_grad_u: f64,
    pub l2_ut: f64,
    pub linf_u: f64,
    pub energy: f64,
    pub weighted_energy: Option<f64>,
    pub boundary_mass: f64,
}

impl Record {
    pub fn zero(t: f64) -> Self {
        Record {
            t,
            l2_u: 0.0,
            l2_grad_u: 0.0,
            l2_ut: 0.0,
            linf_u: 0.0,
            energy: 0.0,
            weighted_energy: Some(0.0),
            boundary_mass: 0.0,
        }
    }

    pub fn get(&self, column: Column) -> Option<f64> {
        match column {
            Column::L2U => Some(self.l2_u),
            Column::L2GradU => Some(self.l2_grad_u),
            Column::L2Ut => Some(self.l2_ut),
            Column::LinfU => Some(self.linf_u),
            Column::Energy => Some(self.energy),
            Column::WeightedEnergy => self.weighted_energy,
            Column::BoundaryMass => Some(self.boundary_mass),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    L2U,
    L2GradU,
    L2Ut,
    LinfU,
    Energy,
    WeightedEnergy,
    BoundaryMass,
}

impl Column {
    pub const ALL: [Column; 7] = [
        Column::L2U,
        Column::L2GradU,
        Column::L2Ut,
        Column::LinfU,
        Column::Energy,
        Column::WeightedEnergy,
        Column::BoundaryMass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::L2U => "l2_u",
            Column::L2GradU => "l2_grad_u",
            Column::L2Ut => "l2_ut",
            Column::LinfU => "linf_u",
            Column::Energy => "energy",
            Column::WeightedEnergy => "weighted_energy",
            Column::BoundaryMass => "boundary_mass",
        }
    }
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown column `{s}`")))
    }
}

/// Rows with strictly increasing `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    rows: Vec<Record>,
}

impl TimeSeries {
    pub fn new() -> Self {
        TimeSeries::default()
    }

    pub fn from_rows(rows: Vec<Record>) -> Result<Self> {
        let mut s = TimeSeries::new();
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: Record) -> Result<()> {
        if !row.t.is_finite() {
            return Err(Error::invalid(format!("row time {} is not finite", row.t)));
        }
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::invalid(format!(
                    "row time {} does not follow {}",
                    row.t, last.t
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first(&self) -> Option<&Record> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&Record> {
        self.rows.last()
    }

    /// `None` when any row lacks the column.
    pub fn column(&self, column: Column) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.get(column)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// CSV with header `t,l2_u,...,boundary_mass`; an absent weighted
    /// energy is an empty field.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            out.write_record(HEADER).map_err(csv_err)?;
        }
        for r in &self.rows {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().ne(HEADER) {
            return Err(Error::Format(format!(
                "unexpected series header {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut s = TimeSeries::new();
        for (i, row) in rdr.deserialize::<Record>().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("series row {}: {e}", i + 1)))?;
            s.push(row)?;
        }
        Ok(s)
    }
}

pub const HEADER: [&str; 8] = [
    "t",
    "l2_u",
    "l2_grad_u",
    "l2_ut",
    "linf_u",
    "energy",
    "weighted_energy",
    "boundary_mass",
];

pub(crate) fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("{other:?}")),
        }
    } else {
        Error::Format(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> Record {
        Record {
            t,
            l2_u: 1.0 / (1.0 + t),
            weighted_energy: if t > 1.0 { None } else { Some(0.5) },
            ..Record::zero(t)
        }
    }

    #[test]
    fn rejects_non_increasing_time() {
        let mut s = TimeSeries::new();
        s.push(row(0.0)).unwrap();
        assert!(s.push(row(0.0)).is_err());
        assert!(s.push(row(f64::NAN)).is_err());
    }

    #[test]
    fn csv_roundtrip_with_missing_weighted_energy() {
        let s = TimeSeries::from_rows(vec![row(0.0), row(0.5), row(2.0)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,l2_u,l2_grad_u,l2_ut,linf_u,energy,weighted_energy,boundary_mass\n"));
        assert!(text.lines().nth(3).unwrap().contains(",,"));
        let back = TimeSeries::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(back.column(Column::WeightedEnergy).is_none());
        assert_eq!(back.column(Column::L2U).unwrap()[1], 1.0 / 1.5);
    }

    #[test]
    fn empty_series_still_has_header() {
        let mut buf = Vec::new();
        TimeSeries::new().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), HEADER.join(","));
    }

    #[test]
    fn column_names_parse() {
        for c in Column::ALL {
            assert_eq!(c.name().parse::<Column>().unwrap(), c);
        }
        assert!("l3_u".parse::<Column>().is_err());
    }
}
