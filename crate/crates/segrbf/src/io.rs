//! CSV/JSON artifact readers and writers (`f64` pipeline).
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::assignment::FinalPartition;
use crate::benchfuncs::BenchCase;
use crate::blowup::TraceEvent;
use crate::error::{Error, Result};
use crate::evaluation::GridRow;
use crate::geometry::{Point, PointId, PointSet};
use crate::locality::LocalityScores;
use crate::splitting::ComponentLabeling;

/// Reads sites from a CSV with header `x,y[,f]`; ids follow row order.
pub fn read_points_csv(path: &Path) -> Result<(PointSet<f64, 2>, Option<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::CsvInput(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::CsvInput(e.to_string()))?
        .clone();
    let cols: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if cols.len() < 2 || cols[0] != "x" || cols[1] != "y" {
        return Err(Error::CsvInput(format!(
            "expected header x,y[,f], got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let has_values = cols.len() >= 3 && cols[2] == "f";

    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::CsvInput(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::CsvInput(format!("row {}: missing column {i}", row + 2)))?
                .parse::<f64>()
                .map_err(|e| Error::CsvInput(format!("row {}: {e}", row + 2)))
        };
        pts.push(Point::xy(field(0)?, field(1)?));
        if has_values {
            vals.push(field(2)?);
        }
    }
    Ok((PointSet::new(pts)?, has_values.then_some(vals)))
}

/// `id,sigma,good` sorted ascending by `(sigma, id)`.
pub fn write_sigma_csv<W: Write>(mut w: W, scores: &LocalityScores<f64>) -> Result<()> {
    writeln!(w, "id,sigma,good")?;
    let mut order: Vec<usize> = (0..scores.sigma.len()).collect();
    order.sort_by(|&a, &b| {
        scores.sigma[a]
            .partial_cmp(&scores.sigma[b])
            .expect("finite indicators")
            .then(a.cmp(&b))
    });
    for i in order {
        writeln!(
            w,
            "{},{},{}",
            PointId::from_idx(i),
            scores.sigma[i],
            scores.good[i]
        )?;
    }
    Ok(())
}

/// `id,component` for the seed sets, ascending by id.
pub fn write_seeds_csv<W: Write>(mut w: W, labeling: &ComponentLabeling) -> Result<()> {
    writeln!(w, "id,component")?;
    for (i, label) in labeling.label.iter().enumerate() {
        if let Some(c) = label {
            writeln!(w, "{},{c}", PointId::from_idx(i))?;
        }
    }
    Ok(())
}

/// `id,x,y,class,provenance`; unlabeled points get an empty class field.
pub fn write_classes_csv<W: Write>(
    mut w: W,
    ps: &PointSet<f64, 2>,
    partition: &FinalPartition,
) -> Result<()> {
    writeln!(w, "id,x,y,class,provenance")?;
    for id in ps.ids() {
        let p = ps.point(id);
        let class = match partition.class_of[id.idx()] {
            Some(c) => c.to_string(),
            None => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            id,
            p.x(),
            p.y(),
            class,
            partition.provenance[id.idx()]
        )?;
    }
    Ok(())
}

/// JSON lines, one object per examined unsure point.
pub fn write_blowup_trace<W: Write>(mut w: W, trace: &[TraceEvent<f64>]) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        sweep: usize,
        point: usize,
        chosen_class: Option<usize>,
        quotients: &'a [(usize, f64)],
    }
    for event in trace {
        let line = Line {
            sweep: event.sweep,
            point: event.point.0,
            chosen_class: event.chosen,
            quotients: &event.quotients,
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

/// `x,y,class,u,f,abs_err,safe` over the evaluation grid.
pub fn write_grid_errors_csv<W: Write>(mut w: W, rows: &[GridRow<f64>]) -> Result<()> {
    writeln!(w, "x,y,class,u,f,abs_err,safe")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.x, r.y, r.class, r.u, r.f, r.abs_err, r.safe
        )?;
    }
    Ok(())
}

/// `x,y,f,true_class` for a benchmark case over the given sites.
pub fn write_case_csv<W: Write>(mut w: W, ps: &PointSet<f64, 2>, case: BenchCase) -> Result<()> {
    writeln!(w, "x,y,f,true_class")?;
    for p in ps.points() {
        writeln!(
            w,
            "{},{},{},{}",
            p.x(),
            p.y(),
            case.eval(p),
            case.true_class(p)
        )?;
    }
    Ok(())
}

/// Pretty-printed JSON report.
pub fn write_report_json<W: Write, R: Serialize>(mut w: W, report: &R) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report).map_err(std::io::Error::other)?;
    writeln!(w)?;
    Ok(())
}
