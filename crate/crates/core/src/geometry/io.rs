//! Plain-text mesh format.
//!
//! ```text
//! PERIODICITY lateral            | PERIODICITY vertical <period>
//! H <target element size>
//! VERTICES <n>
//! <x> <y>                        (n lines)
//! TRIANGLES <m>
//! <a> <b> <c>                    (m lines, counter-clockwise, zero based)
//! EDGES <k>
//! <a> <b> <tag>                  (domain to the left of a -> b)
//! PAIRS <p>
//! <master> <slave>
//! FIELD <n>                      (optional nodal values)
//! <value>
//! ```
//!
//! Numbers are written in Rust's shortest round-trip notation, so reading a
//! file back reproduces the mesh bit for bit.

use std::fmt::Write as _;

use super::mesh::{BoundaryEdge, EdgeTag, Mesh, Periodicity};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh, field: Option<&[f64]>) -> String {
    let mut s = String::new();
    match mesh.periodicity {
        Periodicity::Lateral => s.push_str("PERIODICITY lateral\n"),
        Periodicity::Vertical { period } => writeln!(s, "PERIODICITY vertical {period}").unwrap(),
    }
    writeln!(s, "H {}", mesh.h).unwrap();
    writeln!(s, "VERTICES {}", mesh.vertices.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{} {}", p[0], p[1]).unwrap();
    }
    writeln!(s, "TRIANGLES {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "EDGES {}", mesh.edges.len()).unwrap();
    for e in &mesh.edges {
        writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag.name()).unwrap();
    }
    writeln!(s, "PAIRS {}", mesh.pairs.len()).unwrap();
    for (m, sl) in &mesh.pairs {
        writeln!(s, "{m} {sl}").unwrap();
    }
    if let Some(f) = field {
        writeln!(s, "FIELD {}", f.len()).unwrap();
        for v in f {
            writeln!(s, "{v}").unwrap();
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok(l.split_whitespace().collect());
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let f = self.next()?;
        if f.len() != 2 || f[0] != name {
            return Err(self.err(format!("expected `{name} <count>`")));
        }
        self.num(f[1])
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }
}

/// Parses a mesh and its optional field section.
pub fn read_mesh(text: &str) -> Result<(Mesh, Option<Vec<f64>>)> {
    let mut r = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let f = r.next()?;
    let periodicity = match f.as_slice() {
        ["PERIODICITY", "lateral"] => Periodicity::Lateral,
        ["PERIODICITY", "vertical", p] => Periodicity::Vertical { period: r.num(p)? },
        _ => return Err(r.err("expected PERIODICITY line")),
    };
    let f = r.next()?;
    if f.len() != 2 || f[0] != "H" {
        return Err(r.err("expected `H <size>`"));
    }
    let h: f64 = r.num(f[1])?;

    let n = r.header("VERTICES")?;
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let f = r.next()?;
        if f.len() != 2 {
            return Err(r.err("vertex needs two coordinates"));
        }
        vertices.push([r.num(f[0])?, r.num(f[1])?]);
    }
    let index = |r: &Lines, s: &str| -> Result<usize> {
        let i: usize = r.num(s)?;
        if i >= n {
            return Err(r.err(format!("vertex index {i} out of range")));
        }
        Ok(i)
    };
    let m = r.header("TRIANGLES")?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let f = r.next()?;
        if f.len() != 3 {
            return Err(r.err("triangle needs three indices"));
        }
        triangles.push([index(&r, f[0])?, index(&r, f[1])?, index(&r, f[2])?]);
    }
    let k = r.header("EDGES")?;
    let mut edges = Vec::with_capacity(k);
    for _ in 0..k {
        let f = r.next()?;
        if f.len() != 3 {
            return Err(r.err("edge needs two indices and a tag"));
        }
        let tag = EdgeTag::parse(f[2]).ok_or_else(|| r.err(format!("unknown tag `{}`", f[2])))?;
        edges.push(BoundaryEdge {
            v: [index(&r, f[0])?, index(&r, f[1])?],
            tag,
        });
    }
    let p = r.header("PAIRS")?;
    let mut pairs = Vec::with_capacity(p);
    for _ in 0..p {
        let f = r.next()?;
        if f.len() != 2 {
            return Err(r.err("pair needs two indices"));
        }
        pairs.push((index(&r, f[0])?, index(&r, f[1])?));
    }
    let field = match r.next() {
        Ok(f) if f.len() == 2 && f[0] == "FIELD" => {
            let c: usize = r.num(f[1])?;
            let mut v = Vec::with_capacity(c);
            for _ in 0..c {
                let f = r.next()?;
                v.push(r.num(f[0])?);
            }
            Some(v)
        }
        Ok(_) => return Err(r.err("trailing content after PAIRS")),
        Err(_) => None,
    };
    Ok((
        Mesh {
            vertices,
            triangles,
            edges,
            pairs,
            periodicity,
            h,
        },
        field,
    ))
}
