//! `E`-versus-`ε` sweeps over admittivity pairs on a shared mesh.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dtn::{difference_norm, dtn_matrix, local_dtn};
use crate::forward::Admittivity;
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Boundary data available to the sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSupport {
    Full,
    /// Contiguous arc of trace positions; see [`crate::dtn::local_dtn`].
    Local(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub scenario_id: usize,
    pub regions: usize,
    /// `max_j |γ_j¹ − γ_j²|`.
    pub e: f64,
    /// `‖Λ₁ − Λ₂‖` in the `H^{1/2} → H^{−1/2}` norm.
    pub eps: f64,
    /// `E/ε`, defined when `ε > 0`.
    pub ratio: Option<f64>,
    pub h: f64,
}

/// `E`, `ε` and `E/ε` for each pair. Pairs run in parallel.
pub fn stability_sweep(
    mesh: Arc<Mesh>,
    pairs: &[(Admittivity, Admittivity)],
    support: &DataSupport,
) -> Result<Vec<SweepRecord>> {
    pairs
        .par_iter()
        .enumerate()
        .map(|(id, (a, b))| {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch(format!(
                    "pair {id}: {} vs {} regions",
                    a.len(),
                    b.len()
                )));
            }
            let (mut d1, mut d2) = (dtn_matrix(mesh.clone(), a)?, dtn_matrix(mesh.clone(), b)?);
            if let DataSupport::Local(arc) = support {
                d1 = local_dtn(&d1, arc)?;
                d2 = local_dtn(&d2, arc)?;
            }
            let e = a.max_difference(b);
            let eps = difference_norm(&d1, &d2)?;
            Ok(SweepRecord {
                scenario_id: id,
                regions: a.len(),
                e,
                eps,
                ratio: (eps > 0.0).then(|| e / eps),
                h: mesh.h,
            })
        })
        .collect()
}

/// Largest defined ratio per region count.
pub fn max_ratio_by_regions(records: &[SweepRecord]) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for r in records {
        if let Some(q) = r.ratio {
            let e = out.entry(r.regions).or_insert(q);
            *e = f64::max(*e, q);
        }
    }
    out
}

/// CSV `scenario_id,N,E,eps,ratio,h`; an undefined ratio is left empty.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["scenario_id", "N", "E", "eps", "ratio", "h"])?;
    for r in records {
        w.write_record([
            r.scenario_id.to_string(),
            r.regions.to_string(),
            format!("{:e}", r.e),
            format!("{:e}", r.eps),
            r.ratio.map(|q| format!("{q:e}")).unwrap_or_default(),
            format!("{:e}", r.h),
        ])?;
    }
    w.flush()?;
    Ok(())
}
