//! CSV and JSON output. Every CSV starts with the version line [`CSV_VERSION`].

use std::io::Write;

use serde::Serialize;

use crate::bubbles::SweepRow;
use crate::continuation::ContinuationTrace;
use crate::error::Result;
use crate::radial::RadialProfile;

pub const CSV_VERSION: &str = "# sigmak-lab v1";

/// One row of the radial profile schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    /// `σ_k(λ(A^u)) − rhs` at the node.
    pub sigma_residual: f64,
    pub cone_margin: f64,
}

pub fn profile_rows(profile: &RadialProfile, rhs: f64) -> Result<Vec<ProfileRow>> {
    (0..profile.mesh.len())
        .map(|i| {
            let pair = profile.eigenpair(i)?;
            Ok(ProfileRow {
                r: profile.mesh[i],
                u: profile.values[i],
                du: profile.derivs[i],
                sigma_residual: pair.sigma(profile.n, profile.k) - rhs,
                cone_margin: pair.margin(profile.n, profile.k),
            })
        })
        .collect()
}

/// Versioned CSV with a header row from the field names of `T`.
pub fn write_csv<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> Result<()> {
    writeln!(out, "{CSV_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Columns `n,k,a,R,maxBR,min2BR,product_scaled`.
pub fn write_harnack_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_csv(out, rows)
}

pub fn write_harnack_json<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_json(out, rows)
}

/// Columns `r,u,du,sigma_residual,cone_margin`.
pub fn write_profile_csv<W: Write>(out: W, profile: &RadialProfile, rhs: f64) -> Result<()> {
    write_csv(out, &profile_rows(profile, rhs)?)
}

pub fn write_profile_json<W: Write>(out: W, profile: &RadialProfile, rhs: f64) -> Result<()> {
    write_json(out, &profile_rows(profile, rhs)?)
}

/// Array of `{t, converged, iters, residual, cone_margin, ellipticity, bisections}`.
pub fn write_trace_json<W: Write>(out: W, trace: &ContinuationTrace) -> Result<()> {
    write_json(out, trace)
}
