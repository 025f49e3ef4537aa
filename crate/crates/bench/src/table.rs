//! Result tables: an aligned text rendering for the terminal and a CSV
//! export, both ordered deterministically by system, target, and method.

use std::path::Path;

use crate::error::BenchError;
use crate::record::{LedgerRow, ResultRecord};
use crate::systems::{MethodId, SystemId, TargetId};

/// One line of the comparison table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    pub mse: f64,
    pub wall_s: f64,
    pub forward_solves: usize,
    pub backward_solves: usize,
}

impl TableRow {
    pub fn from_record(record: &ResultRecord) -> Self {
        Self {
            system: record.system,
            method: record.method,
            target: record.target,
            mse: record.mse,
            wall_s: record.wall_s,
            forward_solves: record.forward_solves,
            backward_solves: record.backward_solves,
        }
    }

    pub fn from_ledger(row: &LedgerRow) -> Self {
        Self {
            system: row.system,
            method: row.method,
            target: row.target,
            mse: row.mse,
            wall_s: row.wall_s,
            forward_solves: row.forward_solves,
            backward_solves: row.backward_solves,
        }
    }
}

const HEADERS: [&str; 7] = [
    "system",
    "target",
    "method",
    "mse",
    "wall_s",
    "forward",
    "backward",
];

fn cells(row: &TableRow) -> [String; 7] {
    [
        row.system.to_string(),
        row.target.to_string(),
        row.method.to_string(),
        format!("{:.3e}", row.mse),
        format!("{:.3}", row.wall_s),
        row.forward_solves.to_string(),
        row.backward_solves.to_string(),
    ]
}

fn sort_key(row: &TableRow) -> (String, String, String) {
    (
        row.system.to_string(),
        row.target.to_string(),
        row.method.to_string(),
    )
}

/// Renders the rows as an aligned text table. An empty slice renders just
/// the header, which is still a valid (if silent) report.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut rows: Vec<&TableRow> = rows.iter().collect();
    rows.sort_by_key(|r| sort_key(r));
    let body: Vec<[String; 7]> = rows.iter().map(|r| cells(r)).collect();

    let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line.iter()) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let mut push_line = |cells: &[String]| {
        let mut first = true;
        for (cell, width) in cells.iter().zip(&widths) {
            if !first {
                out.push_str("  ");
            }
            first = false;
            out.push_str(cell);
            for _ in cell.len()..*width {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };

    let header: Vec<String> = HEADERS.iter().map(|h| h.to_string()).collect();
    push_line(&header);
    for line in &body {
        push_line(line);
    }
    out
}

/// Writes the same table as CSV, one row per experiment.
pub fn write_table_csv(path: &Path, rows: &[TableRow]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut rows: Vec<&TableRow> = rows.iter().collect();
    rows.sort_by_key(|r| sort_key(r));
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(HEADERS)?;
    for row in rows {
        writer.write_record(cells(row))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(system: SystemId, method: MethodId, target: TargetId, mse: f64) -> TableRow {
        TableRow {
            system,
            method,
            target,
            mse,
            wall_s: 1.25,
            forward_solves: 12,
            backward_solves: 3,
        }
    }

    #[test]
    fn empty_table_is_just_the_header() {
        let text = render_table(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("system"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn rows_are_sorted_and_aligned() {
        let rows = vec![
            row(SystemId::Voltage, MethodId::Direct, TargetId::Sine, 7.5e-3),
            row(SystemId::Heat, MethodId::Lmpc, TargetId::Sine, 3.5e-4),
        ];
        let text = render_table(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        // heat sorts before voltage regardless of insertion order
        assert!(lines[1].starts_with("heat"));
        assert!(lines[2].starts_with("voltage"));
        // every row carries the same column offsets as the header
        let method_col = lines[0].find("method").unwrap();
        assert_eq!(&lines[1][method_col..method_col + 4], "lmpc");
    }

    #[test]
    fn csv_round_trips_through_a_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        let rows = vec![row(
            SystemId::Burgers,
            MethodId::Nmpc,
            TargetId::Parabola,
            6.0e-5,
        )];
        write_table_csv(&path, &rows).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(reader.headers().unwrap().len(), 7);
        let record = reader.records().next().unwrap().unwrap();
        assert_eq!(&record[0], "burgers");
        assert_eq!(&record[2], "nmpc");
        assert_eq!(&record[3], "6.000e-5");
    }
}
