//! CSV and JSON emission. CSV files start with one `#` comment line naming
//! the schema and version; JSON documents carry the same records plus a
//! config echo.

use std::io::{self, Write};

use serde::Serialize;

use crate::experiments::{CltReport, ConvergenceRow};
use crate::landscape::LandscapeReport;
use crate::model::MarginalTable;
use crate::phase::CriticalPoint;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub const CONVERGENCE_HEADER: &str = "n,k,seed,j_index,kl,tv";
pub const PHASE_HEADER: &str = "h,beta_crit,order";
pub const LANDSCAPE_HEADER: &str = "location,value,degeneracy_n,leading_derivative,curvature_eta";
pub const MARGINAL_HEADER: &str = "word,mu,rho";
pub const CLT_HEADER: &str = "n,replicas,y0,mean,variance,target_variance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn schema_line(w: &mut dyn Write, schema: &str, notes: &[String]) -> io::Result<()> {
    write!(w, "# rfcw {VERSION} schema={schema}/1")?;
    for n in notes {
        write!(w, " {n}")?;
    }
    writeln!(w)
}

pub fn write_convergence_csv(
    w: &mut dyn Write,
    rows: &[ConvergenceRow],
    notes: &[String],
) -> io::Result<()> {
    schema_line(w, "convergence", notes)?;
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.n, r.k, r.seed, r.j_index, r.kl, r.tv
        )?;
    }
    Ok(())
}

pub fn write_phase_csv(w: &mut dyn Write, line: &[CriticalPoint]) -> io::Result<()> {
    schema_line(w, "phase-diagram", &[])?;
    writeln!(w, "{PHASE_HEADER}")?;
    for p in line {
        writeln!(w, "{},{},{}", p.h_field, p.beta_crit, p.order.as_str())?;
    }
    Ok(())
}

pub fn write_landscape_csv(w: &mut dyn Write, report: &LandscapeReport) -> io::Result<()> {
    schema_line(
        w,
        "landscape",
        &[format!("tail_radius={}", report.tail_radius)],
    )?;
    writeln!(w, "{LANDSCAPE_HEADER}")?;
    for m in &report.maxima {
        writeln!(
            w,
            "{},{},{},{},{}",
            m.location, m.value, m.degeneracy_n, m.leading_derivative, m.curvature_eta
        )?;
    }
    Ok(())
}

pub fn write_marginal_csv(
    w: &mut dyn Write,
    mu: &MarginalTable,
    rho: &MarginalTable,
    notes: &[String],
) -> io::Result<()> {
    schema_line(w, "marginal", notes)?;
    writeln!(w, "{MARGINAL_HEADER}")?;
    for ((word, p), q) in mu.words().zip(rho.probs()) {
        writeln!(w, "{word},{p},{q}")?;
    }
    Ok(())
}

pub fn write_clt_csv(w: &mut dyn Write, r: &CltReport) -> io::Result<()> {
    schema_line(w, "clt", &[])?;
    writeln!(w, "{CLT_HEADER}")?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        r.n, r.replicas, r.y0, r.mean, r.variance, r.target_variance
    )
}

pub fn write_samples_csv(
    w: &mut dyn Write,
    samples: &[Vec<i8>],
    notes: &[String],
) -> io::Result<()> {
    schema_line(w, "samples", notes)?;
    let n = samples.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let row: Vec<&str> = s.iter().map(|&v| if v == 1 { "1" } else { "-1" }).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a C,
    records: &'a R,
}

pub fn write_json<C: Serialize, R: Serialize>(
    w: &mut dyn Write,
    command: &str,
    config: &C,
    records: &R,
) -> io::Result<()> {
    let doc = Document {
        version: VERSION,
        command,
        config,
        records,
    };
    serde_json::to_writer_pretty(&mut *w, &doc).map_err(io::Error::other)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::TransitionOrder;

    #[test]
    fn convergence_csv_layout() {
        let rows = [ConvergenceRow {
            n: 10,
            k: 2,
            seed: 5,
            j_index: 1,
            kl: 0.5,
            tv: 0.25,
        }];
        let mut out = Vec::new();
        write_convergence_csv(&mut out, &rows, &[]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# rfcw v"));
        assert_eq!(lines[1], "n,k,seed,j_index,kl,tv");
        assert_eq!(lines[2], "10,2,5,1,0.5,0.25");
    }

    #[test]
    fn phase_csv_layout() {
        let line = [CriticalPoint {
            h_field: 0.0,
            beta_crit: 1.0,
            order: TransitionOrder::Second,
        }];
        let mut out = Vec::new();
        write_phase_csv(&mut out, &line).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(1), Some("h,beta_crit,order"));
        assert_eq!(text.lines().nth(2), Some("0,1,second"));
    }

    #[test]
    fn json_document_has_version_and_config() {
        let mut out = Vec::new();
        write_json(
            &mut out,
            "demo",
            &serde_json::json!({"beta": 1.0}),
            &vec![1, 2],
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config"]["beta"], 1.0);
        assert_eq!(v["records"][1], 2);
    }
}
