//! Grid dump format.
//!
//! A grid function is written as a one-line ASCII header
//! `EPLGRID v1 dim=<n> extents=<e1,...,en> h=<h> origin=<o1,...,on> components=<N>`
//! followed by the row-major float64 values in little-endian binary. The
//! interior mask goes into a companion file at `<path>.mask`, one byte per
//! node, 0 or 1.

use super::{GridDomain, GridFunction};
use crate::error::{Error, Result};
use crate::report::fmt_f64;
use std::fs;
use std::io::Write;
use std::path::Path;

fn mask_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".mask");
    std::path::PathBuf::from(os)
}

pub fn write_grid_function(u: &GridFunction, path: &Path) -> Result<()> {
    let dom = u.domain();
    let extents: Vec<String> = dom.extents().iter().map(|e| e.to_string()).collect();
    let origin: Vec<String> = dom.origin().iter().map(|&o| fmt_f64(o)).collect();
    let header = format!(
        "EPLGRID v1 dim={} extents={} h={} origin={} components={}\n",
        dom.dim(),
        extents.join(","),
        fmt_f64(dom.spacing()),
        origin.join(","),
        u.components()
    );
    let mut buf = Vec::with_capacity(header.len() + u.values().len() * 8);
    buf.extend_from_slice(header.as_bytes());
    for &v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;

    let mask: Vec<u8> = (0..dom.n_nodes())
        .map(|n| u8::from(dom.is_interior(n)))
        .collect();
    let mut mf = fs::File::create(mask_path(path))?;
    mf.write_all(&mask)?;
    Ok(())
}

pub fn read_grid_function(path: &Path) -> Result<GridFunction> {
    let data = fs::read(path)?;
    let newline = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidParameter("missing EPLGRID header line".into()))?;
    let header = std::str::from_utf8(&data[..newline])
        .map_err(|_| Error::InvalidParameter("non-UTF8 EPLGRID header".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("EPLGRID") || parts.next() != Some("v1") {
        return Err(Error::InvalidParameter(format!("bad EPLGRID magic in {:?}", header)));
    }
    let mut dim = 0usize;
    let mut extents: Vec<usize> = Vec::new();
    let mut h = 0.0f64;
    let mut origin: Vec<f64> = Vec::new();
    let mut components = 0usize;
    for field in parts {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("bad header field {:?}", field)))?;
        match key {
            "dim" => dim = value.parse().map_err(|_| bad_field(field))?,
            "extents" => {
                extents = value
                    .split(',')
                    .map(|s| s.parse().map_err(|_| bad_field(field)))
                    .collect::<Result<_>>()?
            }
            "h" => h = value.parse().map_err(|_| bad_field(field))?,
            "origin" => {
                origin = value
                    .split(',')
                    .map(|s| s.parse().map_err(|_| bad_field(field)))
                    .collect::<Result<_>>()?
            }
            "components" => components = value.parse().map_err(|_| bad_field(field))?,
            _ => return Err(Error::InvalidParameter(format!("unknown header field {:?}", key))),
        }
    }
    if extents.len() != dim {
        return Err(Error::ShapeMismatch(format!(
            "header dim {} does not match {} extents",
            dim,
            extents.len()
        )));
    }
    let n_nodes: usize = extents.iter().product();

    let mask_bytes = fs::read(mask_path(path))?;
    if mask_bytes.len() != n_nodes {
        return Err(Error::ShapeMismatch(format!(
            "mask file has {} bytes for {} nodes",
            mask_bytes.len(),
            n_nodes
        )));
    }
    let mask: Vec<bool> = mask_bytes.iter().map(|&b| b != 0).collect();
    let dom = GridDomain::from_mask(extents, h, origin, mask)?;

    let payload = &data[newline + 1..];
    if payload.len() != n_nodes * components * 8 {
        return Err(Error::ShapeMismatch(format!(
            "payload has {} bytes for {} values",
            payload.len(),
            n_nodes * components
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::from_values(dom, components, values)
}

fn bad_field(field: &str) -> Error {
    Error::InvalidParameter(format!("unparsable header field {:?}", field))
}
