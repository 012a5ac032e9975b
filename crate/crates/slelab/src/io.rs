//! CSV exports and the `SLELAB01` binary cache.
//!
//! The binary layout is a 32-byte little-endian header
//! `magic(8) | scheme u32 | kappa f64 | dt f64 | N u32` followed by `N`
//! little-endian f64 values.

use std::io::{BufRead, BufReader, Read, Write};

use crate::conformal::WhitneyDecomposition;
use crate::error::{Error, Result};
use crate::loewner::{DrivingFunction, Scheme, Trace};
use crate::stochastic::SamplePath;

pub const MAGIC: &[u8; 8] = b"SLELAB01";

/// Scheme id used for field rasters in the binary header.
pub const FIELD_ID: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub scheme: u32,
    pub kappa: f64,
    pub dt: f64,
    pub n: u32,
}

pub fn write_binary(mut w: impl Write, h: Header, data: &[f64]) -> Result<()> {
    if data.len() != h.n as usize {
        return Err(Error::InvalidParameter(format!("header says {} values, got {}", h.n, data.len())));
    }
    let mut buf = Vec::with_capacity(32 + 8 * data.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&h.scheme.to_le_bytes());
    buf.extend_from_slice(&h.kappa.to_le_bytes());
    buf.extend_from_slice(&h.dt.to_le_bytes());
    buf.extend_from_slice(&h.n.to_le_bytes());
    for x in data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<(Header, Vec<f64>)> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head).map_err(|e| Error::Parse(format!("short header: {e}")))?;
    if &head[..8] != MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let h = Header { scheme: u32_at(8), kappa: f64_at(12), dt: f64_at(20), n: u32_at(28) };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * h.n as usize {
        return Err(Error::Parse(format!("expected {} payload bytes, found {}", 8 * h.n as usize, body.len())));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((h, data))
}

/// Payload: `t0`, then `w`, then `o` when present.
pub fn write_driving_binary(w: impl Write, d: &DrivingFunction) -> Result<()> {
    let mut data = vec![d.t0];
    data.extend_from_slice(&d.w);
    if let Some(o) = &d.o {
        data.extend_from_slice(o);
    }
    let h = Header { scheme: d.scheme.id(), kappa: d.kappa, dt: d.dt, n: data.len() as u32 };
    write_binary(w, h, &data)
}

pub fn read_driving_binary(r: impl Read) -> Result<DrivingFunction> {
    let (h, data) = read_binary(r)?;
    let scheme = Scheme::from_id(h.scheme).ok_or_else(|| Error::Parse(format!("unknown scheme id {}", h.scheme)))?;
    if data.len() < 3 {
        return Err(Error::Parse("driving payload too short".into()));
    }
    let t0 = data[0];
    let rest = &data[1..];
    if scheme == Scheme::WholePlaneRho {
        if rest.len() % 2 != 0 {
            return Err(Error::Parse("whole-plane payload must hold w and o of equal length".into()));
        }
        let m = rest.len() / 2;
        return Ok(DrivingFunction::whole_plane_from_angles(h.kappa, t0, h.dt, rest[..m].to_vec(), rest[m..].to_vec()));
    }
    let mut d = DrivingFunction::from_values(scheme, h.kappa, h.dt, rest.to_vec());
    d.t0 = t0;
    Ok(d)
}

/// Field raster payload: `nx, ny`, then `nx*ny` rows of `x, y, value`.
pub fn write_field_binary(w: impl Write, nx: usize, ny: usize, dx: f64, samples: &[(f64, f64, f64)]) -> Result<()> {
    let mut data = vec![nx as f64, ny as f64];
    for &(x, y, v) in samples {
        data.extend_from_slice(&[x, y, v]);
    }
    write_binary(w, Header { scheme: FIELD_ID, kappa: 0.0, dt: dx, n: data.len() as u32 }, &data)
}

pub fn read_field_binary(r: impl Read) -> Result<(usize, usize, Vec<(f64, f64, f64)>)> {
    let (h, data) = read_binary(r)?;
    if h.scheme != FIELD_ID || data.len() < 2 {
        return Err(Error::Parse("not a field raster".into()));
    }
    let (nx, ny) = (data[0] as usize, data[1] as usize);
    if data.len() != 2 + 3 * nx * ny {
        return Err(Error::Parse("field payload size mismatch".into()));
    }
    Ok((nx, ny, data[2..].chunks_exact(3).map(|c| (c[0], c[1], c[2])).collect()))
}

fn row(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    let s: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    writeln!(w, "{}", s.join(","))?;
    Ok(())
}

pub fn write_trace_csv(mut w: impl Write, t: &Trace) -> Result<()> {
    writeln!(w, "t,re,im")?;
    for (p, s) in t.points.iter().zip(&t.times) {
        row(&mut w, &[*s, p.re, p.im])?;
    }
    Ok(())
}

pub fn write_path_csv(mut w: impl Write, p: &SamplePath) -> Result<()> {
    match &p.values_im {
        Some(im) => {
            writeln!(w, "t,value,value_im")?;
            for i in 0..p.len() {
                row(&mut w, &[p.times[i], p.values[i], im[i]])?;
            }
        }
        None => {
            writeln!(w, "t,value")?;
            for i in 0..p.len() {
                row(&mut w, &[p.times[i], p.values[i]])?;
            }
        }
    }
    Ok(())
}

pub fn write_density_csv(mut w: impl Write, xs: &[f64], f: impl Fn(f64) -> f64) -> Result<()> {
    writeln!(w, "x,density")?;
    for &x in xs {
        row(&mut w, &[x, f(x)])?;
    }
    Ok(())
}

/// `t,w` plus `o_re,o_im` for whole-plane records and one column per force point.
pub fn write_driving_csv(mut w: impl Write, d: &DrivingFunction) -> Result<()> {
    let mut head = vec!["t".to_string(), "w".to_string()];
    if d.o.is_some() {
        head.push("o_re".into());
        head.push("o_im".into());
    }
    for k in 0..d.v.len() {
        head.push(format!("v{}", k + 1));
    }
    writeln!(w, "{}", head.join(","))?;
    for i in 0..d.w.len() {
        let mut r = vec![d.time(i), d.w[i]];
        if let Some(o) = d.o_unit(i) {
            r.push(o.re);
            r.push(o.im);
        }
        r.extend(d.v.iter().map(|v| v[i]));
        row(&mut w, &r)?;
    }
    Ok(())
}

pub fn write_field_csv(mut w: impl Write, samples: &[(f64, f64, f64)]) -> Result<()> {
    writeln!(w, "x,y,value")?;
    for &(x, y, v) in samples {
        row(&mut w, &[x, y, v])?;
    }
    Ok(())
}

pub fn write_decomposition_csv(mut w: impl Write, dec: &WhitneyDecomposition) -> Result<()> {
    writeln!(w, "cx,cy,level,shadow_diam")?;
    for c in &dec.cells {
        writeln!(w, "{:?},{:?},{},{:?}", c.center.re, c.center.im, c.level, c.shadow_diam)?;
    }
    Ok(())
}

/// Reads a numeric CSV with a header line; returns (header, rows).
pub fn read_csv(r: impl Read) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(r).lines();
    let head = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))??;
    let head: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let r = r.map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
        if r.len() != head.len() {
            return Err(Error::Parse(format!("line {}: {} fields, header has {}", k + 2, r.len(), head.len())));
        }
        rows.push(r);
    }
    Ok((head, rows))
}
