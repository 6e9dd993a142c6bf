//! Plain-text mesh format.
//!
//! ```text
//! file      := header dim vertices section* cells cellcoords? markers? "end"
//! header    := "relmaxwell-mesh 1"
//! dim       := "dim" D
//! vertices  := "vertices" N  (N lines: x y z)
//! section   := "simplices" P COUNT  (COUNT lines: v0 .. vP), for 1 <= P < D
//! cells     := "cells" COUNT  (COUNT lines: tag v0 .. vD)
//! cellcoords:= "cellcoords" COUNT  (COUNT lines: 3(D+1) floats, in cell vertex order)
//! markers   := "markers" COUNT  (COUNT lines: outer|obstacle v0 .. v(D-1))
//! ```
//!
//! Blank lines and text after `#` are ignored. Cells are listed with a
//! positive orientation; neighbouring cells must induce opposite orientations
//! on shared facets. Every face of a listed simplex must itself be listed.
//! Files written by [`write_complex`] are canonical and round-trip exactly.

use super::{Marker, SimplicialComplex};
use crate::forms::whitney::CellGeometry;
use crate::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

const HEADER: &str = "relmaxwell-mesh 1";

struct Lines<'a> {
    inner: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("").trim();
                (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
            })
            .collect();
        Lines { inner, pos: 0 }
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let r = self
            .inner
            .get(self.pos)
            .cloned()
            .ok_or(Error::Parse { line: self.inner.last().map_or(0, |l| l.0), msg: "unexpected end of file".into() })?;
        self.pos += 1;
        Ok(r)
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.inner.get(self.pos).map(|l| l.1[0])
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| perr(line, format!("cannot parse '{s}'")))
}

fn expect_section(lines: &mut Lines, key: &str, nargs: usize) -> Result<(usize, Vec<usize>)> {
    let (ln, toks) = lines.next()?;
    if toks[0] != key || toks.len() != nargs + 1 {
        return Err(perr(ln, format!("expected '{key}' with {nargs} argument(s)")));
    }
    let args = toks[1..].iter().map(|t| parse_num(ln, t)).collect::<Result<Vec<usize>>>()?;
    Ok((ln, args))
}

fn parse_verts(ln: usize, toks: &[&str], n: usize, nverts: usize) -> Result<Vec<usize>> {
    if toks.len() != n {
        return Err(perr(ln, format!("expected {n} vertex ids")));
    }
    let v = toks.iter().map(|t| parse_num(ln, t)).collect::<Result<Vec<usize>>>()?;
    if let Some(&bad) = v.iter().find(|&&x| x >= nverts) {
        return Err(perr(ln, format!("vertex {bad} out of range")));
    }
    let mut s = v.clone();
    s.sort();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(perr(ln, "repeated vertex in simplex"));
    }
    Ok(v)
}

pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    let mut lines = Lines::new(text);
    let (ln, head) = lines.next()?;
    if head.join(" ") != HEADER {
        return Err(perr(ln, format!("expected header '{HEADER}'")));
    }
    let (ln, a) = expect_section(&mut lines, "dim", 1)?;
    let d = a[0];
    if !(1..=3).contains(&d) {
        return Err(perr(ln, "dim must be 1, 2 or 3"));
    }
    let (_, a) = expect_section(&mut lines, "vertices", 1)?;
    let mut coords = Vec::with_capacity(a[0]);
    for _ in 0..a[0] {
        let (ln, t) = lines.next()?;
        if t.len() != 3 {
            return Err(perr(ln, "vertex needs three coordinates"));
        }
        coords.push([parse_num(ln, t[0])?, parse_num(ln, t[1])?, parse_num(ln, t[2])?]);
    }
    let nv = coords.len();
    let mut lists: Vec<Vec<Vec<usize>>> = vec![Vec::new(); d + 1];
    lists[0] = (0..nv).map(|v| vec![v]).collect();
    let mut line_of: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); d + 1];
    for p in 1..d {
        let (ln, a) = expect_section(&mut lines, "simplices", 2)?;
        if a[0] != p {
            return Err(perr(ln, format!("expected simplices of degree {p}")));
        }
        for _ in 0..a[1] {
            let (ln, t) = lines.next()?;
            let mut v = parse_verts(ln, &t, p + 1, nv)?;
            v.sort();
            if line_of[p].insert(v.clone(), ln).is_some() {
                return Err(Error::Orientation(format!("line {ln}: simplex {v:?} listed twice")));
            }
            lists[p].push(v);
        }
    }
    let (_, a) = expect_section(&mut lines, "cells", 1)?;
    let mut cells = Vec::with_capacity(a[0]);
    let mut tags = Vec::with_capacity(a[0]);
    for _ in 0..a[0] {
        let (ln, t) = lines.next()?;
        if t.is_empty() {
            return Err(perr(ln, "empty cell line"));
        }
        let tag: u32 = parse_num(ln, t[0])?;
        let v = parse_verts(ln, &t[1..], d + 1, nv)?;
        cells.push((ln, v));
        tags.push(tag);
    }
    let mut cell_coords: Option<Vec<Vec<[f64; 3]>>> = None;
    if lines.peek_keyword() == Some("cellcoords") {
        let (ln, a) = expect_section(&mut lines, "cellcoords", 1)?;
        if a[0] != cells.len() {
            return Err(perr(ln, "cellcoords count must equal cells count"));
        }
        let mut all = Vec::with_capacity(a[0]);
        for _ in 0..a[0] {
            let (ln, t) = lines.next()?;
            if t.len() != 3 * (d + 1) {
                return Err(perr(ln, format!("expected {} coordinates", 3 * (d + 1))));
            }
            let f = t.iter().map(|x| parse_num(ln, x)).collect::<Result<Vec<f64>>>()?;
            all.push(f.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
        }
        cell_coords = Some(all);
    }
    let mut marker_list: Vec<(usize, Vec<usize>, Marker)> = Vec::new();
    if lines.peek_keyword() == Some("markers") {
        let (_, a) = expect_section(&mut lines, "markers", 1)?;
        for _ in 0..a[0] {
            let (ln, t) = lines.next()?;
            let m = match t.first().copied() {
                Some("outer") => Marker::Outer,
                Some("obstacle") => Marker::Obstacle,
                _ => return Err(perr(ln, "marker must be 'outer' or 'obstacle'")),
            };
            let mut v = parse_verts(ln, &t[1..], d, nv)?;
            v.sort();
            marker_list.push((ln, v, m));
        }
    }
    let (ln, t) = lines.next()?;
    if t != ["end"] {
        return Err(perr(ln, "expected 'end'"));
    }

    // orientation: neighbouring cells induce opposite facet orientations
    let mut induced: HashMap<Vec<usize>, (usize, i32)> = HashMap::new();
    for (ln, v) in &cells {
        let parity = if SimplicialComplex::orientation_of(v) == 0 { 1 } else { -1 };
        let mut s = v.clone();
        s.sort();
        if line_of[d].insert(s.clone(), *ln).is_some() {
            return Err(Error::Orientation(format!("line {ln}: cell {s:?} listed twice")));
        }
        for k in 0..=d {
            let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
            let sign = parity * if k % 2 == 0 { 1 } else { -1 };
            if let Some(&(other, osign)) = induced.get(&face) {
                if osign == sign {
                    return Err(Error::Orientation(format!(
                        "cells at lines {other} and {ln} induce the same orientation on {face:?}"
                    )));
                }
            } else {
                induced.insert(face, (*ln, sign));
            }
        }
        lists[d].push(s);
    }
    for p in 1..=d {
        for s in &lists[p] {
            for k in 0..=p {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
                if p > 1 && !line_of[p - 1].contains_key(&face) {
                    let ln = line_of[p][s];
                    return Err(Error::DanglingFace(format!(
                        "line {ln}: face {face:?} of {s:?} is not listed"
                    )));
                }
            }
        }
    }
    // canonical order of cells with their tags and coordinates
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| lists[d][a].cmp(&lists[d][b]));
    let mut sorted_lists = lists.clone();
    for l in sorted_lists.iter_mut().take(d) {
        l.sort();
    }
    sorted_lists[d] = order.iter().map(|&i| lists[d][i].clone()).collect();
    let sorted_tags: Vec<u32> = order.iter().map(|&i| tags[i]).collect();
    let cc_flat = cell_coords.map(|cc| {
        let mut flat = Vec::new();
        for &i in &order {
            let v = &cells[i].1;
            let mut idx: Vec<usize> = (0..=d).collect();
            idx.sort_by_key(|&j| v[j]);
            flat.extend(idx.iter().map(|&j| cc[i][j]));
        }
        flat
    });
    let mut cx = SimplicialComplex::assemble(d, coords, sorted_lists, sorted_tags, cc_flat, None)?;
    if !marker_list.is_empty() {
        let mut m: Vec<Option<Marker>> = cx.markers().to_vec();
        for (ln, v, mk) in marker_list {
            let i = cx.find(d - 1, &v).ok_or_else(|| perr(ln, format!("marker on unknown facet {v:?}")))?;
            if m[i].is_none() {
                return Err(perr(ln, format!("marker on interior facet {v:?}")));
            }
            m[i] = Some(mk);
        }
        cx.set_markers(m);
    }
    Ok(cx)
}

/// Reads a mesh file in the native format, or Gmsh 2.2 ASCII when the file
/// extension is `.msh`.
pub fn load_complex(path: &std::path::Path) -> Result<SimplicialComplex> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if path.extension().and_then(|e| e.to_str()) == Some("msh") {
        parse_gmsh(&text)
    } else {
        parse_complex(&text)
    }
}

pub fn save_complex(cx: &SimplicialComplex, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_complex(cx)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Signed orientation of the cell as listed in sorted vertex order.
fn cell_sign(cx: &SimplicialComplex, t: usize) -> f64 {
    CellGeometry::new(&cx.cell_vertices(t)).orientation()
}

pub fn write_complex(cx: &SimplicialComplex) -> String {
    let d = cx.dim();
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "dim {d}").unwrap();
    writeln!(s, "vertices {}", cx.count(0)).unwrap();
    for c in cx.coords() {
        writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
    }
    for p in 1..d {
        writeln!(s, "simplices {p} {}", cx.count(p)).unwrap();
        for i in 0..cx.count(p) {
            writeln!(s, "{}", join(cx.simplex(p, i))).unwrap();
        }
    }
    writeln!(s, "cells {}", cx.count(d)).unwrap();
    let mut orders = Vec::with_capacity(cx.count(d));
    for t in 0..cx.count(d) {
        let mut idx: Vec<usize> = (0..=d).collect();
        if cell_sign(cx, t) < 0.0 {
            idx.swap(d - 1, d);
        }
        let v: Vec<usize> = idx.iter().map(|&j| cx.simplex(d, t)[j]).collect();
        writeln!(s, "{} {}", cx.tags()[t], join(&v)).unwrap();
        orders.push(idx);
    }
    if cx.has_cell_coords() {
        writeln!(s, "cellcoords {}", cx.count(d)).unwrap();
        for (t, idx) in orders.iter().enumerate() {
            let cv = cx.cell_vertices(t);
            let parts: Vec<String> = idx.iter().flat_map(|&j| cv[j].iter().map(|x| x.to_string())).collect();
            writeln!(s, "{}", parts.join(" ")).unwrap();
        }
    }
    let marked: Vec<usize> = (0..cx.markers().len()).filter(|&i| cx.markers()[i].is_some()).collect();
    writeln!(s, "markers {}", marked.len()).unwrap();
    for i in marked {
        writeln!(s, "{} {}", cx.markers()[i].unwrap().as_str(), join(cx.simplex(d - 1, i))).unwrap();
    }
    writeln!(s, "end").unwrap();
    s
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Gmsh 2.2 ASCII: tetrahedra (or triangles when no tetrahedra exist) become
/// cells, tagged with their physical group.
pub fn parse_gmsh(text: &str) -> Result<SimplicialComplex> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).collect();
    let find = |key: &str| lines.iter().position(|(_, l)| *l == key);
    let fmt = find("$MeshFormat").ok_or_else(|| perr(1, "missing $MeshFormat"))?;
    let version = lines.get(fmt + 1).map(|l| l.1).unwrap_or("");
    if !version.starts_with("2.") {
        return Err(perr(fmt + 2, "only Gmsh 2.x ASCII is supported"));
    }
    let nodes = find("$Nodes").ok_or_else(|| perr(1, "missing $Nodes"))?;
    let n: usize = parse_num(lines[nodes + 1].0, lines[nodes + 1].1)?;
    let mut ids = HashMap::new();
    let mut coords = Vec::with_capacity(n);
    for k in 0..n {
        let (ln, l) = lines.get(nodes + 2 + k).copied().ok_or_else(|| perr(0, "truncated $Nodes"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 4 {
            return Err(perr(ln, "node needs id and three coordinates"));
        }
        ids.insert(parse_num::<usize>(ln, t[0])?, coords.len());
        coords.push([parse_num(ln, t[1])?, parse_num(ln, t[2])?, parse_num(ln, t[3])?]);
    }
    let el = find("$Elements").ok_or_else(|| perr(1, "missing $Elements"))?;
    let m: usize = parse_num(lines[el + 1].0, lines[el + 1].1)?;
    let mut by_dim: [Vec<(Vec<usize>, u32)>; 4] = Default::default();
    for k in 0..m {
        let (ln, l) = lines.get(el + 2 + k).copied().ok_or_else(|| perr(0, "truncated $Elements"))?;
        let t: Vec<usize> = l.split_whitespace().map(|x| parse_num(ln, x)).collect::<Result<_>>()?;
        if t.len() < 3 {
            return Err(perr(ln, "short element line"));
        }
        let (ty, ntags) = (t[1], t[2]);
        let dim = match ty {
            1 => 1,
            2 => 2,
            4 => 3,
            _ => continue,
        };
        let tag = if ntags > 0 { t[3] as u32 } else { 0 };
        let verts = t[3 + ntags..]
            .iter()
            .map(|v| ids.get(v).copied().ok_or_else(|| perr(ln, format!("unknown node {v}"))))
            .collect::<Result<Vec<usize>>>()?;
        if verts.len() != dim + 1 {
            return Err(perr(ln, "wrong node count for element type"));
        }
        by_dim[dim].push((verts, tag));
    }
    let d = (1..=3).rev().find(|&d| !by_dim[d].is_empty()).ok_or_else(|| perr(0, "no elements"))?;
    let (tops, tags): (Vec<_>, Vec<_>) = std::mem::take(&mut by_dim[d]).into_iter().unzip();
    SimplicialComplex::from_top(d, coords, tops, tags, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "relmaxwell-mesh 1
dim 2
vertices 3
0 0 0
1 0 0
0 1 0
simplices 1 3
0 1
0 2
1 2
cells 1
0 0 1 2
end
";

    #[test]
    fn round_trip_canonical() {
        let cx = parse_complex(TRI).unwrap();
        let out = write_complex(&cx);
        let again = parse_complex(&out).unwrap();
        assert_eq!(cx, again);
        assert_eq!(write_complex(&again), out);
    }

    #[test]
    fn missing_edge_is_dangling() {
        let text = TRI.replace("simplices 1 3\n0 1\n0 2\n1 2\n", "simplices 1 2\n0 1\n0 2\n");
        match parse_complex(&text) {
            Err(Error::DanglingFace(m)) => assert!(m.contains("[1, 2]")),
            other => panic!("expected dangling face, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let text = "relmaxwell-mesh 1\ndim 2\nvertices 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n\
            simplices 1 5\n0 1\n0 2\n0 3\n1 2\n2 3\ncells 2\n0 0 1 2\n0 0 2 3\nend\n";
        assert!(parse_complex(text).is_ok());
        let bad = text.replace("0 0 2 3", "0 0 3 2");
        assert!(matches!(parse_complex(&bad), Err(Error::Orientation(_))));
    }

    #[test]
    fn parse_error_has_line() {
        let text = TRI.replace("1 0 0", "1 zero 0");
        match parse_complex(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gmsh_import() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n\
            $Elements\n2\n1 2 2 5 1 1 2 3\n2 4 2 7 1 1 2 3 4\n$EndElements\n";
        let cx = parse_gmsh(text).unwrap();
        assert_eq!(cx.counts(), vec![4, 6, 4, 1]);
        assert_eq!(cx.tags(), &[7]);
    }
}
