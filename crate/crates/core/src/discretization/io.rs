//! Field containers on disk: a small text header followed by the samples in
//! either binary (bit-exact) or text form.

use super::field::{Field, VectorField};
use super::grid::{GridSpec, Region};
use crate::error::{CoreError, Result};
use crate::scalar::Real;
use std::io::{BufRead, Write};

const MAGIC: &str = "slabflow-field v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Binary,
    Text,
}

fn write_header<R: Real, W: Write>(
    w: &mut W,
    grid: &GridSpec<R>,
    region: Region,
    rank: usize,
    staggered: bool,
    enc: Encoding,
) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "region {}", region.name())?;
    writeln!(w, "rank {rank}")?;
    let nz = if staggered {
        grid.n_vertical
    } else {
        grid.n_vertical + 1
    };
    writeln!(w, "dims {} {} {}", grid.n_horizontal, grid.n_horizontal, nz)?;
    // The hex form is authoritative so the geometry survives bit-exactly.
    writeln!(
        w,
        "layer_width_top {:e} {:016x}",
        grid.layer_width_top,
        grid.layer_width_top.as_f64().to_bits()
    )?;
    writeln!(w, "staggered {}", if staggered { 1 } else { 0 })?;
    writeln!(
        w,
        "format {}",
        match enc {
            Encoding::Binary => "binary",
            Encoding::Text => "text",
        }
    )?;
    writeln!(w, "data")?;
    Ok(())
}

struct Header {
    region: Region,
    rank: usize,
    n_horizontal: usize,
    n_vertical: usize,
    layer_width_top: f64,
    staggered: bool,
    enc: Encoding,
}

fn read_header<W: BufRead>(r: &mut W) -> Result<Header> {
    let mut line = String::new();
    let next = |r: &mut W, line: &mut String| -> Result<String> {
        line.clear();
        if r.read_line(line)? == 0 {
            return Err(CoreError::Data("truncated header".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next(r, &mut line)? != MAGIC {
        return Err(CoreError::Data("missing container magic".into()));
    }
    let mut region = None;
    let mut rank = None;
    let mut dims = None;
    let mut width = None;
    let mut staggered = false;
    let mut enc = None;
    loop {
        let l = next(r, &mut line)?;
        if l == "data" {
            break;
        }
        let mut parts = l.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match key {
            "region" => region = Some(Region::from_name(rest.first().copied().unwrap_or(""))?),
            "rank" => {
                rank = Some(rest.first().and_then(|s| s.parse().ok()).ok_or_else(|| {
                    CoreError::Data("bad rank line".into())
                })?)
            }
            "dims" => {
                if rest.len() != 3 {
                    return Err(CoreError::Data("bad dims line".into()));
                }
                let nx: usize = rest[0]
                    .parse()
                    .map_err(|_| CoreError::Data("bad dims line".into()))?;
                let ny: usize = rest[1]
                    .parse()
                    .map_err(|_| CoreError::Data("bad dims line".into()))?;
                let nz: usize = rest[2]
                    .parse()
                    .map_err(|_| CoreError::Data("bad dims line".into()))?;
                if nx != ny {
                    return Err(CoreError::Data("horizontal dims differ".into()));
                }
                dims = Some((nx, nz));
            }
            "layer_width_top" => {
                let bits = rest
                    .get(1)
                    .and_then(|s| u64::from_str_radix(s, 16).ok())
                    .ok_or_else(|| CoreError::Data("bad layer_width_top line".into()))?;
                width = Some(f64::from_bits(bits));
            }
            "staggered" => staggered = rest.first() == Some(&"1"),
            "format" => {
                enc = Some(match rest.first().copied() {
                    Some("binary") => Encoding::Binary,
                    Some("text") => Encoding::Text,
                    _ => return Err(CoreError::Data("bad format line".into())),
                })
            }
            other => return Err(CoreError::Data(format!("unknown header key `{other}`"))),
        }
    }
    let (nx, nz) = dims.ok_or_else(|| CoreError::Data("missing dims".into()))?;
    let staggered_nv = if staggered { nz } else { nz - 1 };
    Ok(Header {
        region: region.ok_or_else(|| CoreError::Data("missing region".into()))?,
        rank: rank.ok_or_else(|| CoreError::Data("missing rank".into()))?,
        n_horizontal: nx,
        n_vertical: staggered_nv,
        layer_width_top: width.ok_or_else(|| CoreError::Data("missing layer_width_top".into()))?,
        staggered,
        enc: enc.ok_or_else(|| CoreError::Data("missing format".into()))?,
    })
}

fn write_samples<R: Real, W: Write>(w: &mut W, data: &[R], enc: Encoding) -> Result<()> {
    match enc {
        Encoding::Binary => {
            for v in data {
                w.write_all(&v.as_f64().to_bits().to_le_bytes())?;
            }
        }
        Encoding::Text => {
            for v in data {
                writeln!(w, "{:e}", v.as_f64())?;
            }
        }
    }
    Ok(())
}

fn read_samples<R: Real, Rd: BufRead>(r: &mut Rd, n: usize, enc: Encoding) -> Result<Vec<R>> {
    let mut out = Vec::with_capacity(n);
    match enc {
        Encoding::Binary => {
            let mut buf = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut buf)?;
                out.push(R::of(f64::from_bits(u64::from_le_bytes(buf))));
            }
        }
        Encoding::Text => {
            let mut line = String::new();
            for _ in 0..n {
                line.clear();
                if r.read_line(&mut line)? == 0 {
                    return Err(CoreError::Data("truncated sample block".into()));
                }
                let v: f64 = line
                    .trim()
                    .parse()
                    .map_err(|_| CoreError::Data(format!("bad sample `{}`", line.trim())))?;
                out.push(R::of(v));
            }
        }
    }
    Ok(out)
}

pub fn write_field<R: Real, W: Write>(w: &mut W, f: &Field<R>, enc: Encoding) -> Result<()> {
    write_header(w, &f.grid, f.region, 0, f.staggered, enc)?;
    write_samples(w, f.raw(), enc)
}

pub fn read_field<R: Real, Rd: BufRead>(r: &mut Rd) -> Result<Field<R>> {
    let h = read_header(r)?;
    if h.rank != 0 {
        return Err(CoreError::Data(format!("expected rank 0, found {}", h.rank)));
    }
    let grid = GridSpec::new(h.n_horizontal, h.n_vertical, R::of(h.layer_width_top))?;
    let mut f = if h.staggered {
        Field::zeros_staggered(grid, h.region)
    } else {
        Field::zeros(grid, h.region)
    };
    let n = f.raw().len();
    let data = read_samples(r, n, h.enc)?;
    f.raw_mut().copy_from_slice(&data);
    Ok(f)
}

pub fn write_vector_field<R: Real, W: Write>(
    w: &mut W,
    f: &VectorField<R>,
    enc: Encoding,
) -> Result<()> {
    write_header(w, &f.grid(), f.region(), 1, f.comps[0].staggered, enc)?;
    for c in &f.comps {
        write_samples(w, c.raw(), enc)?;
    }
    Ok(())
}

pub fn read_vector_field<R: Real, Rd: BufRead>(r: &mut Rd) -> Result<VectorField<R>> {
    let h = read_header(r)?;
    if h.rank != 1 {
        return Err(CoreError::Data(format!("expected rank 1, found {}", h.rank)));
    }
    let grid = GridSpec::new(h.n_horizontal, h.n_vertical, R::of(h.layer_width_top))?;
    let mut out = VectorField::zeros(grid, h.region);
    for c in out.comps.iter_mut() {
        let n = c.raw().len();
        let data = read_samples(r, n, h.enc)?;
        c.raw_mut().copy_from_slice(&data);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let grid = GridSpec::new(4, 4, 0.3f64).unwrap();
        let f = Field::from_fn(grid, Region::FluidTop, |x1, x2, x3| {
            (x1 * 17.0 + x2 * 3.0).sin() * x3.exp() + 1.0e-17
        });
        let mut buf = Vec::new();
        write_field(&mut buf, &f, Encoding::Binary).unwrap();
        let back: Field<f64> = read_field(&mut BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.region, f.region);
        assert_eq!(back.grid.layer_width_top.to_bits(), f.grid.layer_width_top.to_bits());
        for (a, b) in back.raw().iter().zip(f.raw()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn text_round_trip_is_close() {
        let grid = GridSpec::new(4, 4, 1.0f64).unwrap();
        let f = Field::from_fn(grid, Region::Elastic, |x1, _, x3| x1 * 0.1 + x3);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, Encoding::Text).unwrap();
        let back: Field<f64> = read_field(&mut BufReader::new(&buf[..])).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_input() {
        let r = read_field::<f64, _>(&mut BufReader::new(&b"not a container"[..]));
        assert!(r.is_err());
    }
}
