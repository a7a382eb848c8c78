use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ESManifold, EquilibriumPoint, LatticeSpec};
use crate::dynamics::{TireParams, VehicleParams};
use crate::error::{Error, Result};

const FORMAT: &str = "driftplan-esm/1";

/// SHA-256 over the exact bit patterns of every model parameter.
pub fn param_hash(params: &VehicleParams, tires: &TireParams) -> String {
    let fields = [
        params.m, params.jz, params.lf, params.lr, params.h_cog, params.g, params.v_eps, tires.b, tires.c,
        tires.d, tires.e,
    ];
    let mut h = Sha256::new();
    for f in fields {
        h.update(f.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct Layers {
    v: String,
    delta: String,
    lambda: String,
}

#[derive(Serialize, Deserialize)]
struct ManifoldFile {
    format: String,
    param_hash: String,
    lattice: LatticeSpec,
    radii: Vec<f64>,
    /// Little-endian f64, row-major over ψ̇ then β.
    layers: Layers,
    /// One byte per vertex.
    mask: String,
    points: Vec<EquilibriumPoint>,
}

fn enc(xs: &[f64]) -> String {
    let bytes: Vec<u8> = xs.iter().flat_map(|x| x.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn dec(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(s)
        .map_err(|e| Error::ManifoldFormat(format!("layer {what}: {e}")))?;
    if bytes.len() != 8 * n {
        return Err(Error::ManifoldFormat(format!(
            "layer {what} has {} bytes, expected {}",
            bytes.len(),
            8 * n
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

impl ESManifold {
    pub fn to_json(&self) -> Result<String> {
        let file = ManifoldFile {
            format: FORMAT.into(),
            param_hash: self.param_hash.clone(),
            lattice: self.lattice,
            radii: self.radii.clone(),
            layers: Layers { v: enc(&self.v), delta: enc(&self.delta), lambda: enc(&self.lambda) },
            mask: B64.encode(self.mask.iter().map(|m| *m as u8).collect::<Vec<_>>()),
            points: self.points.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses a manifold file; the stored parameter hash must match the
    /// hash of `params`/`tires` when they are given.
    pub fn from_json(text: &str, expect: Option<(&VehicleParams, &TireParams)>) -> Result<Self> {
        let f: ManifoldFile = serde_json::from_str(text)?;
        if f.format != FORMAT {
            return Err(Error::ManifoldFormat(format!("unknown format tag `{}`", f.format)));
        }
        f.lattice.validate()?;
        if let Some((p, t)) = expect {
            let expected = param_hash(p, t);
            if expected != f.param_hash {
                return Err(Error::HashMismatch { found: f.param_hash, expected });
            }
        }
        let n = f.lattice.len();
        let mask_bytes = B64
            .decode(&f.mask)
            .map_err(|e| Error::ManifoldFormat(format!("mask: {e}")))?;
        if mask_bytes.len() != n {
            return Err(Error::ManifoldFormat(format!("mask has {} entries, expected {n}", mask_bytes.len())));
        }
        Ok(Self {
            lattice: f.lattice,
            v: dec(&f.layers.v, n, "v")?,
            delta: dec(&f.layers.delta, n, "delta")?,
            lambda: dec(&f.layers.lambda, n, "lambda")?,
            mask: mask_bytes.iter().map(|b| *b != 0).collect(),
            points: f.points,
            param_hash: f.param_hash,
            radii: f.radii,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path, expect: Option<(&VehicleParams, &TireParams)>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, expect)
    }

    /// CSV dump of every solved point: beta,psidot,v,delta,lambda,rc.
    pub fn points_csv(&self) -> String {
        let mut out = String::from("beta,psidot,v,delta,lambda,rc\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{},{}\n", p.beta, p.psidot, p.v, p.delta, p.lambda, p.rc));
        }
        out
    }
}
