//! CSV and JSON emitters for trajectories, tables, samples and reports.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::LaxPath;
use crate::grsk::TrianglePath;
use crate::stochastic::SamplePair;
use crate::tau::TauTable;

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |k| format!("{prefix}_{k}"))
}

fn write_rows<W: Write>(out: W, header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Invalid(format!("row has {} fields, header {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, x_m_i` in row-major triangle order.
pub fn write_triangle_path<W: Write>(out: W, path: &TrianglePath) -> Result<()> {
    let n = path.states.first().map_or(0, |s| s.n());
    let mut header = vec!["t".to_string()];
    for m in 1..=n {
        header.extend((1..=m).map(|i| format!("x_{m}_{i}")));
    }
    let rows = path.times.iter().zip(&path.states).map(|(t, s)| {
        let mut row = vec![*t];
        row.extend_from_slice(s.as_slice());
        row
    });
    write_rows(out, header, rows)
}

/// Columns `t, x_1..x_n` with the bottom row of every state.
pub fn write_bottom_rows<W: Write>(out: W, path: &TrianglePath) -> Result<()> {
    let rows: Vec<Vec<f64>> = path.states.iter().map(|s| s.bottom().to_vec()).collect();
    write_solution(out, &path.times, &rows)
}

/// Columns `t, x_1..x_n`.
pub fn write_solution<W: Write>(out: W, times: &[f64], rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.first().map_or(0, Vec::len);
    let header = std::iter::once("t".to_string()).chain(numbered("x", n)).collect();
    write_rows(out, header, times.iter().zip(rows).map(|(t, r)| [&[*t][..], r].concat()))
}

/// Columns `t, p_1..p_n, q_1..q_{n−1}`.
pub fn write_lax_path<W: Write>(out: W, path: &LaxPath) -> Result<()> {
    let n = path.states.first().map_or(0, |s| s.n());
    let header = std::iter::once("t".to_string())
        .chain(numbered("p", n))
        .chain(numbered("q", n.saturating_sub(1)))
        .collect();
    let rows = path.times.iter().zip(&path.states).map(|(t, s)| [&[*t][..], &s.p, &s.q].concat());
    write_rows(out, header, rows)
}

/// Columns `t, tau_1..tau_n`.
pub fn write_tau_table<W: Write>(out: W, table: &TauTable) -> Result<()> {
    let n = table.tau.first().map_or(0, Vec::len);
    let header = std::iter::once("t".to_string()).chain(numbered("tau", n)).collect();
    write_rows(out, header, table.times.iter().zip(&table.tau).map(|(t, r)| [&[*t][..], r].concat()))
}

/// Columns `replica, x_1..x_n`.
pub fn write_samples<W: Write>(out: W, samples: &[Vec<f64>]) -> Result<()> {
    let n = samples.first().map_or(0, Vec::len);
    let header = std::iter::once("replica".to_string()).chain(numbered("x", n)).collect();
    write_rows(out, header, samples.iter().enumerate().map(|(k, r)| [&[k as f64][..], r].concat()))
}

/// Columns `set, replica, x_1..x_n`, with `set` 0 for the first sample and
/// 1 for the second.
pub fn write_sample_pair<W: Write>(out: W, pair: &SamplePair) -> Result<()> {
    let n = pair.first.first().map_or(0, Vec::len);
    let header = ["set".to_string(), "replica".to_string()].into_iter().chain(numbered("x", n)).collect();
    let rows = [&pair.first, &pair.second].into_iter().enumerate().flat_map(|(set, rows)| {
        rows.iter().enumerate().map(move |(k, r)| [&[set as f64, k as f64][..], r].concat())
    });
    write_rows(out, header, rows)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write>(mut out: W, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangle::{LaxMatrix, Triangle};

    #[test]
    fn triangle_csv_layout() {
        let s = Triangle::from_rows(&[vec![1.0], vec![2.0, 3.0]]).unwrap();
        let path = TrianglePath { times: vec![0.0, 0.5], states: vec![s.clone(), s] };
        let mut buf = vec![];
        write_triangle_path(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x_1_1,x_2_1,x_2_2"));
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn lax_csv_header() {
        let m = LaxMatrix::new(vec![0.0, 1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let path = LaxPath { times: vec![0.0], states: vec![m] };
        let mut buf = vec![];
        write_lax_path(&mut buf, &path).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,p_1,p_2,p_3,q_1,q_2\n"));
    }

    #[test]
    fn values_round_trip() {
        let v = 0.1f64 + 0.2;
        let mut buf = vec![];
        write_solution(&mut buf, &[v], &[vec![-v / 3.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(row, vec![v, -v / 3.0]);
    }
}
