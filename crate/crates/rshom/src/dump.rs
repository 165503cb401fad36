//! Raw field dumps: little-endian `f64` blobs with a TOML sidecar describing the layout.

use std::fs;
use std::path::Path;

use rshom_core::expansion::ExpansionBundle;
use rshom_core::finesolve::FineSolution;
use serde::Serialize;

use crate::config::DomainChoice;
use crate::error::HarnessError;

#[derive(Serialize)]
struct Sidecar<'a> {
    eps: f64,
    domain: DomainChoice,
    dim: usize,
    points: usize,
    dtype: &'static str,
    /// Node order within each field.
    order: &'static str,
    fields: Vec<Entry<'a>>,
}

#[derive(Serialize)]
struct Entry<'a> {
    name: &'a str,
    /// Offset in values, not bytes.
    offset: usize,
    len: usize,
}

/// Write `fields/eps_<index>.bin` and `fields/eps_<index>.toml` under `dir`.
pub fn dump_fields(
    dir: &Path,
    index: usize,
    domain: DomainChoice,
    fine: &FineSolution,
    homog: &FineSolution,
    b: &ExpansionBundle,
) -> Result<(), HarnessError> {
    let out = dir.join("fields");
    fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let n = fine.domain.dim();
    let mut named: Vec<(String, &[f64])> = Vec::new();
    for c in 0..n {
        named.push((format!("u_eps_{c}"), &fine.velocity[c]));
    }
    for c in 0..n {
        named.push((format!("u0_{c}"), &homog.velocity[c]));
    }
    for c in 0..n {
        named.push((format!("phi_{c}"), &b.corrector.values[c]));
    }
    for c in 0..n {
        named.push((format!("w_{c}"), &b.w[c]));
    }
    named.push(("p_eps".into(), &fine.pressure));
    named.push(("p0".into(), &homog.pressure));
    named.push(("pi_tilde".into(), &b.pi_tilde));
    named.push(("z".into(), &b.z));

    let mut bytes = Vec::with_capacity(named.iter().map(|f| f.1.len() * 8).sum());
    let mut fields = Vec::new();
    let mut offset = 0;
    for (name, f) in &named {
        for v in f.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fields.push(Entry { name, offset, len: f.len() });
        offset += f.len();
    }
    let bin = out.join(format!("eps_{index}.bin"));
    fs::write(&bin, bytes).map_err(|e| HarnessError::io(&bin, e))?;
    let side = Sidecar {
        eps: b.eps,
        domain,
        dim: n,
        points: fine.domain.points(),
        dtype: "f64-le",
        order: "row-major, last axis fastest",
        fields,
    };
    let meta = out.join(format!("eps_{index}.toml"));
    fs::write(&meta, toml::to_string(&side).expect("sidecar serializes")).map_err(|e| HarnessError::io(&meta, e))?;
    Ok(())
}
