//! Plain-text field snapshots.
//!
//! ```text
//! HKFIELD v1
//! n 32
//! twist -1
//! form form01
//! <re> <im>        # N*N lines, x index outermost
//! ```
//!
//! Real exponents use the same layout with header `HKREAL v1`, a `degree`
//! line instead of `twist`/`form`, and one value per line. Floats are written
//! in shortest round-trip form, so a write/read cycle is bit-exact. Lines
//! starting with `#` are ignored by the readers.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::{ConformalExponent, FieldError, FormType, TorusGrid, TwistedField};

pub const FIELD_MAGIC: &str = "HKFIELD v1";
pub const REAL_MAGIC: &str = "HKREAL v1";

pub fn write_field(w: &mut impl Write, f: &TwistedField) -> Result<(), FieldError> {
    let mut s = String::with_capacity(f.values.len() * 40);
    writeln!(s, "{FIELD_MAGIC}").unwrap();
    writeln!(s, "n {}", f.grid.n()).unwrap();
    writeln!(s, "twist {}", f.twist).unwrap();
    writeln!(s, "form {}", f.form.tag()).unwrap();
    for z in &f.values {
        writeln!(s, "{:?} {:?}", z.re, z.im).unwrap();
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_exponent(w: &mut impl Write, u: &ConformalExponent) -> Result<(), FieldError> {
    let mut s = String::with_capacity(u.values.len() * 24);
    writeln!(s, "{REAL_MAGIC}").unwrap();
    writeln!(s, "n {}", u.grid.n()).unwrap();
    writeln!(s, "degree {}", u.degree).unwrap();
    for v in &u.values {
        writeln!(s, "{v:?}").unwrap();
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, FieldError> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.starts_with('#') {
                        return Ok(l);
                    }
                }
                None => return Err(FieldError::Snapshot(format!("unexpected end of input at line {}", self.line))),
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String, FieldError> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
            _ => Err(FieldError::Snapshot(format!("line {}: expected `{key} <value>`", self.line))),
        }
    }

    fn float(&self, tok: Option<&str>) -> Result<f64, FieldError> {
        tok.and_then(|t| t.parse().ok())
            .ok_or_else(|| FieldError::Snapshot(format!("line {}: bad number", self.line)))
    }
}

fn header<R: BufRead>(r: R, magic: &str) -> Result<(Lines<R>, TorusGrid), FieldError> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let first = lines.next()?;
    if first.trim_end() != magic {
        return Err(FieldError::Snapshot(format!("expected header `{magic}`, found `{first}`")));
    }
    let n: usize = lines
        .keyed("n")?
        .parse()
        .map_err(|_| FieldError::Snapshot("bad grid size".into()))?;
    Ok((lines, TorusGrid::new(n)?))
}

pub fn read_field(r: impl BufRead) -> Result<TwistedField, FieldError> {
    let (mut lines, grid) = header(r, FIELD_MAGIC)?;
    let twist: i64 = lines.keyed("twist")?.parse().map_err(|_| FieldError::Snapshot("bad twist".into()))?;
    let tag = lines.keyed("form")?;
    let form = FormType::from_tag(&tag).ok_or_else(|| FieldError::Snapshot(format!("unknown form `{tag}`")))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let l = lines.next()?;
        let mut parts = l.split_whitespace();
        let re = lines.float(parts.next())?;
        let im = lines.float(parts.next())?;
        values.push(Complex64::new(re, im));
    }
    TwistedField::from_values(grid, twist, form, values)
}

pub fn read_exponent(r: impl BufRead) -> Result<ConformalExponent, FieldError> {
    let (mut lines, grid) = header(r, REAL_MAGIC)?;
    let degree: i64 = lines.keyed("degree")?.parse().map_err(|_| FieldError::Snapshot("bad degree".into()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let l = lines.next()?;
        values.push(lines.float(Some(l.trim()))?);
    }
    Ok(ConformalExponent { grid, degree, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let g = TorusGrid::new(16).unwrap();
        let f = TwistedField::from_fn(g, -2, FormType::ZeroOneForm, |x, y| {
            Complex64::new((x * 7.1).sin() / 3.0, 1e-300 + y.exp())
        });
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn exponent_round_trip_is_exact() {
        let g = TorusGrid::new(16).unwrap();
        let u = ConformalExponent::from_fn(g, 3, |x, y| (x - y) / 3.0);
        let mut buf = Vec::new();
        write_exponent(&mut buf, &u).unwrap();
        assert_eq!(read_exponent(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn comment_lines_are_skipped() {
        let g = TorusGrid::new(16).unwrap();
        let u = ConformalExponent::from_fn(g, -1, |x, _| x);
        let mut buf = b"# manifest abc\n".to_vec();
        write_exponent(&mut buf, &u).unwrap();
        assert_eq!(read_exponent(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn rejects_bad_header_and_truncation() {
        assert!(matches!(read_field("HKFIELD v2\n".as_bytes()), Err(FieldError::Snapshot(_))));
        let short = "HKFIELD v1\nn 16\ntwist 0\nform function\n0 0\n";
        assert!(matches!(read_field(short.as_bytes()), Err(FieldError::Snapshot(_))));
    }
}
