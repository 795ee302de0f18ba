//! `PARAFREE-FIELD v1` binary files and CSV export.
//!
//! A file is one ASCII header line
//!
//! ```text
//! PARAFREE-FIELD v1; n=1; nx=257; nt=65; L=1; t0=-0.25; t1=0;
//! ```
//!
//! terminated by `\n`, followed by `nx^n · nt` little-endian `f64` values in
//! time-major, then row-major spatial order. Numbers in the header use the
//! shortest representation that round-trips, so write → read is bit-exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{ScalarField, SpaceTimeGrid};
use crate::error::{Error, Result};

const MAGIC: &str = "PARAFREE-FIELD v1";

pub fn header(grid: &SpaceTimeGrid) -> String {
    format!(
        "{MAGIC}; n={}; nx={}; nt={}; L={}; t0={}; t1={};",
        grid.dim(),
        grid.nx(),
        grid.nt(),
        grid.half_width(),
        grid.t_start(),
        grid.t_end()
    )
}

pub fn write_field(mut w: impl Write, field: &ScalarField) -> Result<()> {
    writeln!(w, "{}", header(field.grid()))?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field(r: impl Read) -> Result<ScalarField> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let grid = parse_header(line.trim_end_matches(['\n', '\r']))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != grid.len() * 8 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", grid.len() * 8, bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    ScalarField::new(grid, values)
}

pub fn parse_header(line: &str) -> Result<SpaceTimeGrid> {
    let mut parts = line.split(';').map(str::trim);
    if parts.next() != Some(MAGIC) {
        return Err(Error::Format(format!("missing '{MAGIC}' magic")));
    }
    let mut fields = std::collections::HashMap::new();
    for p in parts.filter(|p| !p.is_empty()) {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::Format(format!("malformed header entry '{p}'")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Format(format!("header lacks '{k}'")));
    let int = |k: &str| get(k)?.parse::<usize>().map_err(|e| Error::Format(format!("{k}: {e}")));
    let real = |k: &str| get(k)?.parse::<f64>().map_err(|e| Error::Format(format!("{k}: {e}")));
    SpaceTimeGrid::from_levels(int("n")?, int("nx")?, real("L")?, real("t0")?, real("t1")?, int("nt")?)
}

pub fn save_field(path: &Path, field: &ScalarField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    read_field(std::fs::File::open(path)?)
}

/// Plain-text export: columns `t,x1[,x2],u`.
pub fn write_csv(mut w: impl Write, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    if g.dim() == 1 {
        writeln!(w, "t,x1,u")?;
    } else {
        writeln!(w, "t,x1,x2,u")?;
    }
    for m in 0..g.nt() {
        let t = g.time(m);
        for s in 0..g.spatial_len() {
            let x = g.position(s);
            let u = field.at(m, s);
            if g.dim() == 1 {
                writeln!(w, "{t},{},{u}", x[0])?;
            } else {
                writeln!(w, "{t},{},{},{u}", x[0], x[1])?;
            }
        }
    }
    Ok(())
}
