//! Text serialization of spectra: one JSON header line, then
//! `index,eigenvalue,multiplicity_block_id` records with 17 significant digits.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Domain, SpectraError, Spectrum};
use crate::weyl_constants::BoundaryCondition;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    bc: BoundaryCondition,
    domain: Domain,
    complete_below: f64,
    exact: bool,
}

/// Block ids group eigenvalues equal to within 1e-12 relative (numerical multiplicity).
pub fn multiplicity_blocks(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(values.len());
    let mut block = 0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            let prev = values[i - 1];
            if (v - prev).abs() > 1e-12 * v.abs().max(prev.abs()) {
                block += 1;
            }
        }
        out.push(block);
    }
    out
}

pub fn write_spectrum<W: Write>(spec: &Spectrum, mut w: W) -> Result<(), SpectraError> {
    let header = Header {
        bc: spec.bc(),
        domain: spec.domain().clone(),
        complete_below: spec.complete_below(),
        exact: spec.exact(),
    };
    let line = serde_json::to_string(&header).map_err(|e| SpectraError::Format(e.to_string()))?;
    writeln!(w, "{line}")?;
    let blocks = multiplicity_blocks(spec.eigenvalues());
    for (i, (v, b)) in spec.eigenvalues().iter().zip(blocks).enumerate() {
        writeln!(w, "{i},{v:.16e},{b}")?;
    }
    Ok(())
}

pub fn read_spectrum<R: BufRead>(r: R) -> Result<Spectrum, SpectraError> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| SpectraError::Format("empty input".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| SpectraError::Format(format!("header: {e}")))?;
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| SpectraError::Format(format!("record {}: bad index", lineno + 1)))?;
        if idx != values.len() {
            return Err(SpectraError::Format(format!("record {}: index {idx} out of sequence", lineno + 1)));
        }
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| SpectraError::Format(format!("record {}: bad eigenvalue", lineno + 1)))?;
        values.push(v);
    }
    Spectrum::new(values, header.bc, header.complete_below, header.domain, header.exact)
}
