//! Long-format result rows.

use std::io::Write;

use serde::Serialize;

use crate::stats::BatchMeans;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub scenario: String,
    pub basis: Option<String>,
    pub estimator: Option<String>,
    pub m: Option<usize>,
    pub alpha_db: Option<f64>,
    pub eta: Option<f64>,
    /// Abscissa for curves: spectrum index (1-based) or angle in degrees.
    pub x: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub std_err: Option<f64>,
    pub note: Option<String>,
    pub seed: u64,
    pub config_hash: String,
}

/// Cell coordinates shared by the rows of one result.
#[derive(Debug, Clone, Default)]
pub struct Cell {
    pub scenario: String,
    pub basis: Option<String>,
    pub estimator: Option<String>,
    pub m: Option<usize>,
    pub alpha_db: Option<f64>,
    pub eta: Option<f64>,
    pub x: Option<f64>,
}

impl Cell {
    pub fn scenario(label: &str) -> Self {
        Self {
            scenario: label.to_string(),
            ..Self::default()
        }
    }
    pub fn basis(mut self, b: impl Into<String>) -> Self {
        self.basis = Some(b.into());
        self
    }
    pub fn estimator(mut self, e: &str) -> Self {
        self.estimator = Some(e.to_string());
        self
    }
    pub fn m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }
    pub fn alpha_db(mut self, a: f64) -> Self {
        self.alpha_db = Some(a);
        self
    }
    pub fn eta(mut self, e: f64) -> Self {
        self.eta = Some(e);
        self
    }
    pub fn x(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn new(experiment: &str, seed: u64, config_hash: String) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            config_hash,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cell: &Cell, metric: &str, value: f64, std_err: Option<f64>) {
        self.push_noted(cell, metric, value, std_err, None);
    }

    pub fn push_noted(
        &mut self,
        cell: &Cell,
        metric: &str,
        value: f64,
        std_err: Option<f64>,
        note: Option<String>,
    ) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            scenario: cell.scenario.clone(),
            basis: cell.basis.clone(),
            estimator: cell.estimator.clone(),
            m: cell.m,
            alpha_db: cell.alpha_db,
            eta: cell.eta,
            x: cell.x,
            metric: metric.to_string(),
            value,
            std_err,
            note,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        });
    }

    pub fn push_mean(&mut self, cell: &Cell, metric: &str, stats: &BatchMeans) {
        self.push(cell, metric, stats.mean(), stats.std_err());
    }

    pub fn rows_where<'a>(
        &'a self,
        pred: impl Fn(&Row) -> bool + 'a,
    ) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| pred(r))
    }

    /// The single row matching `pred`, if exactly one does.
    pub fn find(&self, pred: impl Fn(&Row) -> bool) -> Option<&Row> {
        let mut it = self.rows.iter().filter(|r| pred(r));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "experiment",
                "scenario",
                "basis",
                "estimator",
                "m",
                "alpha_db",
                "eta",
                "x",
                "metric",
                "value",
                "std_err",
                "note",
                "seed",
                "config_hash",
            ])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
