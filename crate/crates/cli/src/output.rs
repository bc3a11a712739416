use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::spec::Format;
use crate::study::Report;

#[derive(Serialize)]
struct VerifyRow {
    p: usize,
    q: usize,
    nx: Option<usize>,
    rellich_value: f64,
    rellich_gradient: f64,
    rellich_edge: f64,
    split_re: f64,
    split_im: f64,
    min_imaginary: f64,
    symmetry: f64,
    nesting: f64,
    coercivity: f64,
    consistency: f64,
    orthogonality: f64,
    passed: bool,
}

#[derive(Serialize)]
struct C0Row {
    p: usize,
    c: f64,
    k: f64,
    nx: usize,
    energy_ratio: f64,
    l2_ratio: f64,
    c0: f64,
}

pub fn write_report<W: Write>(report: &Report, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        Format::Csv => write_csv(report, out)?,
    }
    Ok(())
}

fn write_csv<W: Write>(report: &Report, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match report {
        Report::Table { runs, .. } => {
            for r in runs {
                w.serialize(&r.row)?;
            }
        }
        Report::Verify { runs, .. } => {
            for r in runs {
                let id = &r.identities;
                w.serialize(VerifyRow {
                    p: id.degree,
                    q: id.q,
                    nx: r.nx,
                    rellich_value: id.rellich[0],
                    rellich_gradient: id.rellich[1],
                    rellich_edge: id.rellich[2],
                    split_re: id.split_re,
                    split_im: id.split_im,
                    min_imaginary: id.min_imaginary,
                    symmetry: id.symmetry,
                    nesting: id.nesting,
                    coercivity: id.coercivity,
                    consistency: r.consistency,
                    orthogonality: r.orthogonality,
                    passed: r.passed,
                })?;
            }
        }
        Report::C0 { points, estimates } => {
            for pt in points {
                let c0 = estimates.iter().find(|e| e.p == pt.p).map_or(f64::NAN, |e| e.c0);
                w.serialize(C0Row { p: pt.p, c: pt.c, k: pt.k, nx: pt.nx, energy_ratio: pt.energy_ratio, l2_ratio: pt.l2_ratio, c0 })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Mode, StudySpec};
    use crate::study::run;

    #[test]
    fn csv_header_is_fixed() {
        let spec = StudySpec { mode: Mode::Solve, k: vec![2.0], p: vec![1], nx: vec![2], ..Default::default() };
        let mut buf = Vec::new();
        write_report(&run(&spec).unwrap(), Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,p,q,h,dofs,err_l2,err_1hq,eoc_l2,eoc_1hq,csta_ratio,residual,seconds");
        assert_eq!(lines.count(), 1);
    }
}
