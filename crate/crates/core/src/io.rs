//! File formats for the pipeline artifacts.
//!
//! Everything is plain CSV or JSON, written deterministically: floats
//! go out with 17 significant digits (`{:.16e}`), which round-trips
//! every f64 exactly, and JSON field order follows the struct
//! declarations. Identical inputs produce byte-identical files.
//!
//! Writers take open handles and report plain io errors; readers
//! validate and return [`Error::InvalidInput`] with a line or parse
//! context, and hand the values to the owning type's constructor so a
//! file can never smuggle in an invalid grid.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dimension::{AssouadReport, Verdict};
use crate::error::{Error, Result};
use crate::excursion::{ExcursionGrid, Provenance};
use crate::metric::MetricKind;
use crate::snake::MapMetric;
use crate::stars::StarCertificate;
use crate::treemetric::TreeMetric;

/// Rows `t,f`, one per grid point, no header: a 16-cell grid writes
/// exactly 17 rows.
pub fn write_excursion_csv<W: Write>(grid: &ExcursionGrid, mut w: W) -> io::Result<()> {
    let n = grid.n_cells() as f64;
    for (i, &v) in grid.values().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", i as f64 / n, v)?;
    }
    Ok(())
}

/// Reads an excursion written by [`write_excursion_csv`].
///
/// The time column must be exactly i/n for row i; anything else (a
/// resampled or truncated file) is rejected rather than silently
/// reinterpreted.
pub fn read_excursion_csv<R: BufRead>(r: R) -> Result<ExcursionGrid> {
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (t, f) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(f), None) => (t, f),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected two comma-separated fields",
                    lineno + 1
                )))
            }
        };
        let parse = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad {what} value {s:?}", lineno + 1))
            })
        };
        times.push(parse(t, "time")?);
        values.push(parse(f, "excursion")?);
    }
    if values.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 3 rows, found {}",
            values.len()
        )));
    }
    let n = (values.len() - 1) as f64;
    for (i, &t) in times.iter().enumerate() {
        if t != i as f64 / n {
            return Err(Error::InvalidInput(format!(
                "row {i}: time {t} is not {i}/{n}; the grid must be uniform",
            )));
        }
    }
    ExcursionGrid::new(values, Provenance::File)
}

/// Rows `i,j,d` over all unordered pairs of `indices` in the tree
/// metric, no header.
pub fn write_tree_pairs_csv<W: Write>(
    tm: &TreeMetric,
    indices: &[usize],
    mut w: W,
) -> io::Result<()> {
    debug_assert!(indices.iter().all(|&i| i <= tm.grid().n_cells()));
    for (a, &i) in indices.iter().enumerate() {
        for &j in &indices[a + 1..] {
            writeln!(w, "{i},{j},{:.16e}", tm.dist_unchecked(i, j))?;
        }
    }
    Ok(())
}

/// Rows `i,j,d_circ,d_map` over all unordered subsample pairs, indexed
/// by grid position, no header.
pub fn write_map_csv<W: Write>(mm: &MapMetric, mut w: W) -> io::Result<()> {
    let idx = mm.sample_indices();
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e}",
                idx[a],
                idx[b],
                mm.d_circ_at(a, b),
                mm.d_map_at(a, b)
            )?;
        }
    }
    Ok(())
}

/// Covering samples with the `center,R,r,N,exponent` header.
pub fn write_assouad_csv<W: Write>(report: &AssouadReport, mut w: W) -> io::Result<()> {
    writeln!(w, "center,R,r,N,exponent")?;
    for s in &report.samples {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{},{:.16e}",
            s.center,
            s.r_outer,
            s.r_inner,
            s.count,
            s.exponent()
        )?;
    }
    Ok(())
}

/// Distances recorded alongside a star, for audit without re-running.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarDistances {
    /// Center-to-satellite distances, in satellite order.
    pub center: Vec<f64>,
    /// Full symmetric satellite-pair matrix, zero diagonal.
    pub pairs: Vec<Vec<f64>>,
}

/// JSON form of a star certificate. Positions are reported as
/// t-coordinates (grid index over grid size), so reports from different
/// resolutions compare directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub metric: String,
    pub n: usize,
    pub center_t: f64,
    pub satellite_ts: Vec<f64>,
    pub a: f64,
    pub eta: f64,
    pub rho: f64,
    pub distances: StarDistances,
}

impl StarReport {
    /// Builds the report, re-querying every recorded distance through
    /// `dist` (grid indices).
    pub fn build<F>(cert: &StarCertificate, n_cells: usize, dist: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64>,
    {
        let nf = n_cells as f64;
        let sats = cert.satellites();
        let center: Vec<f64> = sats
            .iter()
            .map(|&s| dist(cert.center(), s))
            .collect::<Result<_>>()?;
        let pairs: Vec<Vec<f64>> = sats
            .iter()
            .map(|&s| sats.iter().map(|&t| dist(s, t)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        Ok(Self {
            metric: cert.metric().as_str().to_string(),
            n: cert.n(),
            center_t: cert.center() as f64 / nf,
            satellite_ts: sats.iter().map(|&s| s as f64 / nf).collect(),
            a: cert.a(),
            eta: cert.eta(),
            rho: cert.rho(),
            distances: StarDistances { center, pairs },
        })
    }

    /// Reconstructs a certificate carrying this report's parameters.
    ///
    /// Only the shape data (n, a, eta, rho, metric) survives the round
    /// trip; grid indices are replaced by placeholders, which is all the
    /// obstruction arithmetic needs.
    pub fn to_certificate(&self) -> Result<StarCertificate> {
        let kind = match self.metric.as_str() {
            "tree" => MetricKind::Tree,
            "map" => MetricKind::Map,
            "generic" => MetricKind::Generic,
            other => {
                return Err(Error::InvalidInput(format!("unknown metric kind {other:?}")))
            }
        };
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "star report claims {} satellites, need at least 2",
                self.n
            )));
        }
        for (name, v) in [("a", self.a), ("eta", self.eta), ("rho", self.rho)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("star report field {name} = {v}")));
            }
        }
        if !(self.a > 1.0 && self.eta > 0.0 && self.eta < (self.a - 1.0) / 2.0 && self.rho > 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "star report parameters out of range: a = {}, eta = {}, rho = {}",
                self.a, self.eta, self.rho
            )));
        }
        Ok(StarCertificate::from_parts(
            kind,
            0,
            (1..=self.n).collect(),
            self.a,
            self.eta,
            self.rho,
        ))
    }
}

/// Writes reports as a pretty-printed JSON array.
pub fn write_star_reports<W: Write>(reports: &[StarReport], mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, reports)?;
    writeln!(w)
}

pub fn read_star_reports<R: BufRead>(r: R) -> Result<Vec<StarReport>> {
    serde_json::from_reader(r).map_err(|e| Error::InvalidInput(format!("star report JSON: {e}")))
}

/// JSON form of an obstruction verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub verdict: String,
    pub n: usize,
    pub threshold: f64,
    pub psi1: f64,
    pub psi1eta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub required_n: Option<usize>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        Self {
            verdict: v.kind.as_str().to_string(),
            n: v.n,
            threshold: v.threshold,
            psi1: v.psi1,
            psi1eta: v.psi1eta,
            c: v.c,
            s: v.s,
            required_n: v.required_n,
        }
    }
}

pub fn write_verdict_json<W: Write>(verdict: &Verdict, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, &VerdictJson::from(verdict))?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{qs_obstruction, QsProfile, VerdictKind};
    use crate::excursion::brownian_excursion;
    use crate::metric::{DenseMetric, MetricOracle};
    use crate::snake::{map_metric, simulate_labels, SampleStrategy};
    use crate::stars::verify_star;

    #[test]
    fn excursion_csv_round_trips_bitwise() {
        let grid = brownian_excursion(64, 9).unwrap();
        let mut buf = Vec::new();
        write_excursion_csv(&grid, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 65);
        let back = read_excursion_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), grid.values());
        assert_eq!(*back.provenance(), Provenance::File);
    }

    #[test]
    fn excursion_reader_rejects_malformed_input() {
        let cases: &[&str] = &[
            "0,0\n0.5,abc\n1,0\n",
            "0,0\nnot a row\n1,0\n",
            "0,0\n1,0\n",
            "0,0,9\n0.5,1\n1,0\n",
            "0,0\n0.4,1\n1,0\n",   // non-uniform time column
            "0,0\n0.5,-1\n1,0\n",  // negative value caught by the grid type
            "0,0.5\n0.5,1\n1,0\n", // nonzero start
        ];
        for case in cases {
            assert!(
                read_excursion_csv(case.as_bytes()).is_err(),
                "accepted {case:?}"
            );
        }
        assert!(read_excursion_csv("0,0\n0.5,1\n1,0\n".as_bytes()).is_ok());
    }

    #[test]
    fn pair_and_map_csv_have_one_row_per_pair() {
        let tm = TreeMetric::build(brownian_excursion(128, 3).unwrap());
        let mut buf = Vec::new();
        write_tree_pairs_csv(&tm, &[0, 17, 64, 100], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("0,17,"));
        let d: f64 = first.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(d, tm.dist(0, 17).unwrap());

        let sl = simulate_labels(&tm, 3);
        let mm = map_metric(&sl, 8, SampleStrategy::UniformStride).unwrap();
        let mut buf = Vec::new();
        write_map_csv(&mm, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8 * 7 / 2);
        for line in text.lines() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 4);
            let dc: f64 = fields[2].parse().unwrap();
            let dm: f64 = fields[3].parse().unwrap();
            assert!(dm <= dc);
        }
    }

    #[test]
    fn star_report_round_trips_through_json() {
        let d = DenseMetric::from_fn(4, |i, j| {
            if i == j {
                0.0
            } else if i == 0 || j == 0 {
                1.0
            } else {
                1.9
            }
        });
        let cert = verify_star(&d, 0, &[1, 2, 3], 2.0, 0.3).unwrap().unwrap();
        let report = StarReport::build(&cert, 4, |i, j| Ok(d.dist(i, j))).unwrap();
        assert_eq!(report.distances.center, vec![1.0; 3]);
        assert_eq!(report.distances.pairs[1][2], 1.9);
        assert_eq!(report.distances.pairs[1][1], 0.0);

        let mut buf = Vec::new();
        write_star_reports(&[report.clone()], &mut buf).unwrap();
        let back = read_star_reports(buf.as_slice()).unwrap();
        assert_eq!(back, vec![report.clone()]);

        let cert2 = back[0].to_certificate().unwrap();
        assert_eq!(cert2.n(), cert.n());
        assert_eq!(cert2.eta(), cert.eta());
        assert_eq!(cert2.rho(), cert.rho());

        let mut bad = report;
        bad.metric = "fractal".to_string();
        assert!(bad.to_certificate().is_err());
        assert!(read_star_reports(b"[{\"metric\": 3}]".as_slice()).is_err());
    }

    #[test]
    fn verdict_json_shape() {
        let d = DenseMetric::from_fn(46, |i, j| {
            if i == j {
                0.0
            } else if i == 0 || j == 0 {
                1.0
            } else {
                2.5
            }
        });
        let sats: Vec<usize> = (1..=45).collect();
        let star = verify_star(&d, 0, &sats, 3.0, 2.0 / 3.0).unwrap().unwrap();
        let v = qs_obstruction(&star, &QsProfile::Linear, 1.0, 2.0).unwrap();
        assert_eq!(v.kind, VerdictKind::Contradicts);
        let mut buf = Vec::new();
        write_verdict_json(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"verdict\": \"CONTRADICTS\""));
        assert!(text.contains("\"C\": 1.0"));
        assert!(!text.contains("required_n"));

        let parsed: VerdictJson = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.n, 45);
    }

    #[test]
    fn assouad_csv_has_header_and_samples() {
        use crate::dimension::assouad_estimate;
        use crate::metric::UniformGrid1d;
        let g = UniformGrid1d::new(128);
        let pts: Vec<usize> = (0..g.len()).collect();
        let pairs: Vec<(f64, f64)> =
            (0..10).map(|k| (0.25, 0.25 / (4 << k) as f64)).collect();
        let report = assouad_estimate(&pts, &g, &pairs).unwrap();
        let mut buf = Vec::new();
        write_assouad_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("center,R,r,N,exponent"));
        assert_eq!(lines.count(), report.samples.len());
    }
}
