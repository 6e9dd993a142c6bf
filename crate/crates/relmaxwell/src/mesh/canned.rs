//! Built-in voxel geometries.
//!
//! Each voxel is split into six tetrahedra around one of its main
//! diagonals. The diagonal direction may be mirrored per axis index; as long
//! as the mirroring depends only on the index along that axis, neighbouring
//! voxels induce identical triangulations on shared faces.

use super::SimplicialComplex;
use crate::{Error, Result};

pub const OBSTACLE_TAG: u32 = 1;

/// Voxel bookkeeping for cells of a voxel-built complex.
#[derive(Debug, Clone)]
pub struct VoxelInfo {
    /// edge length of one voxel
    pub h: f64,
    pub dims: [usize; 3],
    /// voxel index of every top cell
    pub cell_voxel: Vec<[usize; 3]>,
}

#[derive(Debug, Clone)]
pub struct CannedGeometry {
    pub name: String,
    pub reference: SimplicialComplex,
    pub obstacle_tags: Vec<u32>,
    pub voxels: Option<VoxelInfo>,
    /// dimensions of relative cohomology in degrees 1 and 2 after carving
    pub expected_cohomology: Option<[usize; 2]>,
}

pub fn catalogue() -> Vec<(&'static str, &'static str)> {
    vec![
        ("box:r", "unit-voxel box of 4x4x4 voxels, no obstacle"),
        ("balls(N):r", "row of N separated cube obstacles"),
        ("ball:r", "6x6x6 box with a central 2x2x2 cube obstacle"),
        ("slab:r", "6x3x3 box with a single voxel obstacle near one end"),
        ("solid_torus:r", "square ring of voxels inside a 7x7x5 box"),
        ("hopf_link", "two linked voxel rings inside a 9x7x7 box"),
        ("wormhole", "box with two cube holes glued by a reflection"),
        ("wormhole_obstacle", "wormhole box plus a cube obstacle"),
        ("concentric_spheres:r", "ball of radius 4 with a unit ball obstacle on a 12^3 grid"),
    ]
}

/// Parses `name`, `name:r`, `name(N)` or `name(N):r`; `balls:N` means
/// `balls(N)`.
pub fn build(name_arg: &str) -> Result<CannedGeometry> {
    let (head, refine) = match name_arg.split_once(':') {
        Some((h, r)) => {
            let r: usize = r
                .trim()
                .parse()
                .map_err(|_| Error::config("/geometry", format!("bad refinement in '{name_arg}'")))?;
            (h.trim(), r)
        }
        None => (name_arg.trim(), 1),
    };
    if refine == 0 || refine > 8 {
        return Err(Error::config("/geometry", "refinement must be in 1..=8"));
    }
    let (name, arg) = match head.split_once('(') {
        Some((n, rest)) => {
            let a = rest.strip_suffix(')').ok_or_else(|| Error::config("/geometry", "unclosed '('"))?;
            let a: usize = a.trim().parse().map_err(|_| Error::config("/geometry", "bad count"))?;
            (n, Some(a))
        }
        None => (head, None),
    };
    // `balls:N` is shorthand for `balls(N)`
    let (arg, refine) = if name == "balls" && arg.is_none() && name_arg.contains(':') { (Some(refine), 1) } else { (arg, refine) };
    let g = match (name, arg) {
        ("box", None) => box_geometry(refine)?,
        ("balls", Some(n)) if (1..=8).contains(&n) => balls(n, refine)?,
        ("balls", _) => return Err(Error::config("/geometry", "balls(N) needs 1 <= N <= 8")),
        ("ball", None) => ball(refine)?,
        ("slab", None) => slab(refine)?,
        ("solid_torus", None) => solid_torus(refine)?,
        ("hopf_link", None) => hopf_link(refine)?,
        ("wormhole", None) => wormhole(false, refine)?,
        ("wormhole_obstacle", None) => wormhole(true, refine)?,
        ("concentric_spheres", None) => concentric_spheres(refine)?,
        _ => return Err(Error::config("/geometry", format!("unknown geometry '{name_arg}'"))),
    };
    Ok(g)
}

/// Corner offsets of the six tetrahedra of a unit voxel.
fn kuhn_corners(flip: [bool; 3]) -> [[[usize; 3]; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = [[[0; 3]; 4]; 6];
    for (t, p) in PERMS.iter().enumerate() {
        let mut c = [0usize; 3];
        out[t][0] = c;
        for (s, &axis) in p.iter().enumerate() {
            c[axis] = 1;
            out[t][s + 1] = c;
        }
        for corner in out[t].iter_mut() {
            for a in 0..3 {
                if flip[a] {
                    corner[a] = 1 - corner[a];
                }
            }
        }
    }
    out
}

struct VoxelMesh {
    coords: Vec<[f64; 3]>,
    tops: Vec<Vec<usize>>,
    tags: Vec<u32>,
    voxel: Vec<[usize; 3]>,
    dims: [usize; 3],
}

/// Fine grid with `refine` sub-voxels per coarse voxel; `region` sees coarse
/// voxel indices and returns `None` for voxels that are left out.
fn voxel_mesh(
    coarse: [usize; 3],
    refine: usize,
    region: impl Fn([usize; 3]) -> Option<u32>,
    flip: impl Fn(usize, usize) -> bool,
) -> VoxelMesh {
    let dims = [coarse[0] * refine, coarse[1] * refine, coarse[2] * refine];
    let h = 1.0 / refine as f64;
    let vid = |i: usize, j: usize, k: usize| i + (dims[0] + 1) * (j + (dims[1] + 1) * k);
    let mut coords = Vec::with_capacity((dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1));
    for k in 0..=dims[2] {
        for j in 0..=dims[1] {
            for i in 0..=dims[0] {
                coords.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut tops = Vec::new();
    let mut tags = Vec::new();
    let mut voxel = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let Some(tag) = region([i / refine, j / refine, k / refine]) else { continue };
                let f = [flip(0, i), flip(1, j), flip(2, k)];
                for tet in kuhn_corners(f) {
                    tops.push(tet.iter().map(|c| vid(i + c[0], j + c[1], k + c[2])).collect());
                    tags.push(tag);
                    voxel.push([i, j, k]);
                }
            }
        }
    }
    VoxelMesh { coords, tops, tags, voxel, dims }
}

fn finish(
    name: &str,
    m: VoxelMesh,
    refine: usize,
    obstacle: bool,
    expected: Option<[usize; 2]>,
) -> Result<CannedGeometry> {
    let VoxelMesh { coords, tops, tags, voxel, dims } = m;
    let sorted: Vec<Vec<usize>> = tops
        .iter()
        .map(|t| {
            let mut s = t.clone();
            s.sort();
            s
        })
        .collect();
    let used: Vec<usize> = {
        let mut u = vec![false; coords.len()];
        for t in &tops {
            for &v in t {
                u[v] = true;
            }
        }
        let mut map = vec![usize::MAX; coords.len()];
        let mut c = 0;
        for v in 0..coords.len() {
            if u[v] {
                map[v] = c;
                c += 1;
            }
        }
        map
    };
    let cx = SimplicialComplex::from_top(3, coords, tops, tags, None)?;
    let mut cell_voxel = vec![[0; 3]; cx.count(3)];
    for (s, v) in sorted.iter().zip(voxel) {
        let r: Vec<usize> = s.iter().map(|&x| used[x]).collect();
        cell_voxel[cx.find(3, &r).expect("cell present")] = v;
    }
    Ok(CannedGeometry {
        name: name.to_string(),
        reference: cx,
        obstacle_tags: if obstacle { vec![OBSTACLE_TAG] } else { Vec::new() },
        voxels: Some(VoxelInfo { h: 1.0 / refine as f64, dims, cell_voxel }),
        expected_cohomology: expected,
    })
}

fn tag_if(b: bool) -> Option<u32> {
    Some(if b { OBSTACLE_TAG } else { 0 })
}

fn no_flip(_: usize, _: usize) -> bool {
    false
}

fn box_geometry(r: usize) -> Result<CannedGeometry> {
    finish("box", voxel_mesh([4, 4, 4], r, |_| Some(0), no_flip), r, false, Some([0, 0]))
}

fn balls(n: usize, r: usize) -> Result<CannedGeometry> {
    let m = voxel_mesh([3 * n + 2, 5, 5], r, |[i, j, k]| tag_if(j == 2 && k == 2 && i >= 2 && (i - 2) % 3 == 0), no_flip);
    finish(&format!("balls({n})"), m, r, true, Some([n, 0]))
}

fn ball(r: usize) -> Result<CannedGeometry> {
    let inside = |x: usize| (2..=3).contains(&x);
    let m = voxel_mesh([6, 6, 6], r, |[i, j, k]| tag_if(inside(i) && inside(j) && inside(k)), no_flip);
    finish("ball", m, r, true, Some([1, 0]))
}

fn slab(r: usize) -> Result<CannedGeometry> {
    let m = voxel_mesh([6, 3, 3], r, |v| tag_if(v == [1, 1, 1]), no_flip);
    finish("slab", m, r, true, Some([1, 0]))
}

fn ring(i: usize, j: usize, lo: usize, hi: usize) -> bool {
    (lo..=hi).contains(&i) && (lo..=hi).contains(&j) && (i == lo || i == hi || j == lo || j == hi)
}

fn solid_torus(r: usize) -> Result<CannedGeometry> {
    let m = voxel_mesh([7, 7, 5], r, |[i, j, k]| tag_if(k == 2 && ring(i, j, 1, 5)), no_flip);
    finish("solid_torus", m, r, true, Some([1, 1]))
}

fn hopf_link(r: usize) -> Result<CannedGeometry> {
    let region = |[i, j, k]: [usize; 3]| {
        let a = k == 3 && ring(i, j, 1, 5);
        let b = j == 3 && (3..=7).contains(&i) && (1..=5).contains(&k) && (i == 3 || i == 7 || k == 1 || k == 5);
        tag_if(a || b)
    };
    finish("hopf_link", voxel_mesh([9, 7, 7], r, region, no_flip), r, true, Some([2, 2]))
}

/// Two cube holes mirrored across x = 5 are removed and their surfaces are
/// identified by the reflection x -> 10 - x. Cells keep their own
/// coordinates, so the glued complex is flat away from the seam.
fn wormhole(with_obstacle: bool, r: usize) -> Result<CannedGeometry> {
    let hole = |[i, j, k]: [usize; 3]| j == 1 && k == 2 && (i == 2 || i == 7);
    let region = |v: [usize; 3]| {
        if hole(v) {
            None
        } else {
            tag_if(with_obstacle && v == [4, 4, 2])
        }
    };
    // mirror the diagonals in the right half so both hole surfaces match
    let flip = move |axis: usize, idx: usize| axis == 0 && idx >= 5 * r;
    let m = voxel_mesh([10, 6, 5], r, region, flip);
    let n = [m.dims[0] + 1, m.dims[1] + 1];
    let vid = |i: usize, j: usize, k: usize| i + n[0] * (j + n[1] * k);
    let on_hole = |lo: usize, i: usize, j: usize, k: usize| {
        let inside = |x: usize, a: usize| x >= a * r && x <= (a + 1) * r;
        inside(i, lo) && inside(j, 1) && inside(k, 2) && (i == lo * r || i == (lo + 1) * r || j == r || j == 2 * r || k == 2 * r || k == 3 * r)
    };
    let mut glue: Vec<usize> = (0..m.coords.len()).collect();
    for k in 0..=m.dims[2] {
        for j in 0..=m.dims[1] {
            for i in 0..=m.dims[0] {
                if on_hole(7, i, j, k) {
                    let mi = 10 * r - i;
                    debug_assert!(on_hole(2, mi, j, k));
                    glue[vid(i, j, k)] = vid(mi, j, k);
                }
            }
        }
    }
    let cell_coords: Vec<Vec<[f64; 3]>> =
        m.tops.iter().map(|t| t.iter().map(|&v| m.coords[v]).collect()).collect();
    let tops: Vec<Vec<usize>> = m.tops.iter().map(|t| t.iter().map(|&v| glue[v]).collect()).collect();
    let keys: Vec<Vec<usize>> = tops
        .iter()
        .map(|t| {
            let mut s = t.clone();
            s.sort();
            s
        })
        .collect();
    let mut used = vec![false; m.coords.len()];
    for t in &tops {
        for &v in t {
            used[v] = true;
        }
    }
    let mut relabel = vec![usize::MAX; used.len()];
    let mut c = 0;
    for v in 0..used.len() {
        if used[v] {
            relabel[v] = c;
            c += 1;
        }
    }
    let cx = SimplicialComplex::from_top(3, m.coords.clone(), tops, m.tags.clone(), Some(cell_coords))?;
    let mut cell_voxel = vec![[0; 3]; cx.count(3)];
    for (s, v) in keys.iter().zip(&m.voxel) {
        let q: Vec<usize> = s.iter().map(|&x| relabel[x]).collect();
        cell_voxel[cx.find(3, &q).expect("cell present")] = *v;
    }
    Ok(CannedGeometry {
        name: if with_obstacle { "wormhole_obstacle" } else { "wormhole" }.into(),
        reference: cx,
        obstacle_tags: if with_obstacle { vec![OBSTACLE_TAG] } else { Vec::new() },
        voxels: Some(VoxelInfo { h: 1.0 / r as f64, dims: m.dims, cell_voxel }),
        expected_cohomology: Some(if with_obstacle { [2, 1] } else { [1, 1] }),
    })
}

/// Radial image of a cube grid: the inner cube maps onto the unit ball
/// (the obstacle) and the shell onto radii 1..4 with geometric grading.
fn concentric_spheres(r: usize) -> Result<CannedGeometry> {
    // inner half-width A voxels, shell B voxels thick
    const A: usize = 2;
    const B: usize = 4;
    const N: usize = 2 * (A + B);
    let region = |[i, j, k]: [usize; 3]| {
        let c = |x: usize| (B..B + 2 * A).contains(&x);
        tag_if(c(i) && c(j) && c(k))
    };
    let mut m = voxel_mesh([N, N, N], r, region, no_flip);
    let (r_in, r_out) = (1.0f64, 4.0f64);
    let half = (A + B) as f64;
    for p in m.coords.iter_mut() {
        let x = [p[0] - half, p[1] - half, p[2] - half];
        let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) / A as f64;
        let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if norm == 0.0 {
            *p = [0.0; 3];
            continue;
        }
        let rad = if s <= 1.0 {
            r_in * s
        } else {
            r_in * (r_out / r_in).powf((s - 1.0) * A as f64 / B as f64)
        };
        *p = [x[0] / norm * rad, x[1] / norm * rad, x[2] / norm * rad];
    }
    finish("concentric_spheres", m, r, true, Some([1, 0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_voxel_volume() {
        let m = voxel_mesh([1, 1, 1], 1, |_| Some(0), no_flip);
        let cx = SimplicialComplex::from_top(3, m.coords, m.tops, m.tags, None).unwrap();
        assert_eq!(cx.counts(), vec![8, 19, 18, 6]);
        assert!((cx.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flipped_grid_is_conforming() {
        let m = voxel_mesh([4, 2, 2], 1, |_| Some(0), |a, i| a == 0 && i >= 2);
        let cx = SimplicialComplex::from_top(3, m.coords, m.tops, m.tags, None).unwrap();
        let chi: i64 = cx.counts().iter().enumerate().map(|(p, &c)| if p % 2 == 0 { c as i64 } else { -(c as i64) }).sum();
        assert_eq!(chi, 1);
        assert_eq!(cx.boundary_components().len(), 1);
    }

    #[test]
    fn spec_parsing() {
        assert!(build("balls(2)").is_ok());
        assert_eq!(build("balls:2").unwrap().expected_cohomology, Some([2, 0]));
        assert!(build("nope").is_err());
        assert!(build("balls(0)").is_err());
        assert!(build("ball:0").is_err());
    }
}
