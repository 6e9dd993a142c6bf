//! Oriented simplicial complexes with region tags and boundary markers.
//!
//! Every simplex is stored by its sorted vertex ids, which fixes its
//! orientation. The face of a q-simplex obtained by dropping vertex k
//! carries incidence sign (-1)^k.

pub mod canned;
pub mod format;
mod scenario;

pub use scenario::ObstacleScenario;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Marker {
    Outer,
    Obstacle,
}

impl Marker {
    pub fn as_str(self) -> &'static str {
        match self {
            Marker::Outer => "outer",
            Marker::Obstacle => "obstacle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialComplex {
    dim: usize,
    coords: Vec<[f64; 3]>,
    /// flat vertex lists per degree, stride p+1, lexicographically sorted
    simplices: Vec<Vec<usize>>,
    /// flat face indices per degree q >= 1, stride q+1, face k drops vertex k
    faces: Vec<Vec<usize>>,
    tags: Vec<u32>,
    /// optional per-cell geometry (stride d+1), overrides vertex coordinates
    cell_coords: Option<Vec<[f64; 3]>>,
    markers: Vec<Option<Marker>>,
}

#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub marker: Marker,
    pub facets: Vec<usize>,
}

fn combinations(verts: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(v: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..v.len() {
            cur.push(v[i]);
            rec(v, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(verts, k, 0, &mut Vec::with_capacity(k), out);
}

fn permutation_parity(v: &[usize]) -> usize {
    let mut inv = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

impl SimplicialComplex {
    /// Builds the closure of a list of top simplices. Vertex order inside each
    /// top simplex is irrelevant; per-cell coordinates follow the given order.
    pub fn from_top(
        dim: usize,
        coords: Vec<[f64; 3]>,
        tops: Vec<Vec<usize>>,
        tags: Vec<u32>,
        cell_coords: Option<Vec<Vec<[f64; 3]>>>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(format!("unsupported dimension {dim}")));
        }
        if tags.len() != tops.len() {
            return Err(Error::Mesh("one tag per top simplex required".into()));
        }
        let mut order: Vec<(Vec<usize>, u32, Option<Vec<[f64; 3]>>)> = Vec::with_capacity(tops.len());
        for (t, top) in tops.into_iter().enumerate() {
            if top.len() != dim + 1 {
                return Err(Error::Mesh(format!("top simplex {t} has {} vertices", top.len())));
            }
            if let Some(&v) = top.iter().find(|&&v| v >= coords.len()) {
                return Err(Error::Mesh(format!("top simplex {t} references vertex {v}")));
            }
            let mut idx: Vec<usize> = (0..=dim).collect();
            idx.sort_by_key(|&i| top[i]);
            let sorted: Vec<usize> = idx.iter().map(|&i| top[i]).collect();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Mesh(format!("top simplex {t} is degenerate")));
            }
            let cc = match &cell_coords {
                Some(all) => {
                    let c = &all[t];
                    if c.len() != dim + 1 {
                        return Err(Error::Mesh(format!("cell coordinates of {t} have wrong length")));
                    }
                    Some(idx.iter().map(|&i| c[i]).collect())
                }
                None => None,
            };
            order.push((sorted, tags[t], cc));
        }
        order.sort_by(|a, b| a.0.cmp(&b.0));
        if order.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Orientation("top simplex listed twice".into()));
        }
        // drop unused vertices; the relabelling is monotone so orientations survive
        let mut used = vec![false; coords.len()];
        for (s, _, _) in &order {
            for &v in s {
                used[v] = true;
            }
        }
        let mut relabel = vec![usize::MAX; coords.len()];
        let mut kept_coords = Vec::with_capacity(coords.len());
        for (v, &u) in used.iter().enumerate() {
            if u {
                relabel[v] = kept_coords.len();
                kept_coords.push(coords[v]);
            }
        }
        let coords = kept_coords;
        for (s, _, _) in order.iter_mut() {
            for v in s.iter_mut() {
                *v = relabel[*v];
            }
        }
        let has_cc = cell_coords.is_some();
        let mut lists: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        let mut top_tags = Vec::with_capacity(order.len());
        let mut cc_flat = Vec::new();
        for (s, tag, cc) in order {
            for p in 0..dim {
                combinations(&s, p + 1, &mut lists[p]);
            }
            lists[dim].push(s);
            top_tags.push(tag);
            if let Some(c) = cc {
                cc_flat.extend(c);
            }
        }
        for l in lists.iter_mut().take(dim) {
            l.sort();
            l.dedup();
        }
        Self::assemble(dim, coords, lists, top_tags, has_cc.then_some(cc_flat), None)
    }

    /// Assembles from complete, canonical simplex lists. Checks closure.
    pub(crate) fn assemble(
        dim: usize,
        coords: Vec<[f64; 3]>,
        lists: Vec<Vec<Vec<usize>>>,
        tags: Vec<u32>,
        cell_coords: Option<Vec<[f64; 3]>>,
        markers: Option<Vec<Option<Marker>>>,
    ) -> Result<Self> {
        let simplices: Vec<Vec<usize>> = lists.iter().map(|l| l.concat()).collect();
        let mut cx = SimplicialComplex {
            dim,
            coords,
            simplices,
            faces: vec![Vec::new(); dim + 1],
            tags,
            cell_coords,
            markers: Vec::new(),
        };
        for q in 1..=dim {
            let n = cx.count(q);
            let mut f = Vec::with_capacity(n * (q + 1));
            let mut buf = Vec::with_capacity(q);
            for i in 0..n {
                let s = cx.simplex(q, i).to_vec();
                for k in 0..=q {
                    buf.clear();
                    buf.extend(s.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &v)| v));
                    match cx.find(q - 1, &buf) {
                        Some(j) => f.push(j),
                        None => {
                            return Err(Error::DanglingFace(format!(
                                "face {buf:?} of {q}-simplex {s:?} is not stored"
                            )))
                        }
                    }
                }
            }
            cx.faces[q] = f;
        }
        let cof = cx.facet_coface_counts();
        if let Some(i) = cof.iter().position(|&c| c > 2) {
            return Err(Error::Mesh(format!(
                "facet {:?} has {} cofaces",
                cx.simplex(dim - 1, i),
                cof[i]
            )));
        }
        let default: Vec<Option<Marker>> =
            cof.iter().map(|&c| (c == 1).then_some(Marker::Outer)).collect();
        cx.markers = match markers {
            Some(m) => {
                if m.len() != default.len() {
                    return Err(Error::Mesh("marker list length mismatch".into()));
                }
                for (i, (a, b)) in m.iter().zip(&default).enumerate() {
                    if a.is_some() != b.is_some() {
                        return Err(Error::Mesh(format!(
                            "marker on facet {:?} disagrees with boundary",
                            cx.simplex(dim - 1, i)
                        )));
                    }
                }
                m
            }
            None => default,
        };
        for t in 0..cx.count(dim) {
            if cx.cell_volume(t) <= 0.0 {
                return Err(Error::Mesh(format!("cell {t} has zero volume")));
            }
        }
        Ok(cx)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn count(&self, p: usize) -> usize {
        if p > self.dim {
            0
        } else {
            self.simplices[p].len() / (p + 1)
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..=self.dim).map(|p| self.count(p)).collect()
    }

    pub fn simplex(&self, p: usize, i: usize) -> &[usize] {
        &self.simplices[p][i * (p + 1)..(i + 1) * (p + 1)]
    }

    /// Index of the p-simplex with the given sorted vertex list.
    pub fn find(&self, p: usize, verts: &[usize]) -> Option<usize> {
        let n = self.count(p);
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.simplex(p, mid).cmp(verts) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Face indices of a q-simplex; entry k has incidence sign (-1)^k.
    pub fn faces(&self, q: usize, i: usize) -> &[usize] {
        &self.faces[q][i * (q + 1)..(i + 1) * (q + 1)]
    }

    pub fn tags(&self) -> &[u32] {
        &self.tags
    }

    pub fn markers(&self) -> &[Option<Marker>] {
        &self.markers
    }

    pub fn has_cell_coords(&self) -> bool {
        self.cell_coords.is_some()
    }

    pub(crate) fn set_markers(&mut self, m: Vec<Option<Marker>>) {
        self.markers = m;
    }

    /// Vertex positions of a top simplex in sorted vertex order.
    pub fn cell_vertices(&self, t: usize) -> Vec<[f64; 3]> {
        let d = self.dim;
        match &self.cell_coords {
            Some(cc) => cc[t * (d + 1)..(t + 1) * (d + 1)].to_vec(),
            None => self.simplex(d, t).iter().map(|&v| self.coords[v]).collect(),
        }
    }

    pub fn cell_volume(&self, t: usize) -> f64 {
        crate::forms::whitney::CellGeometry::new(&self.cell_vertices(t)).volume
    }

    pub fn cell_centroid(&self, t: usize) -> [f64; 3] {
        let v = self.cell_vertices(t);
        let mut c = [0.0; 3];
        for x in &v {
            for a in 0..3 {
                c[a] += x[a] / v.len() as f64;
            }
        }
        c
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.count(self.dim)).map(|t| self.cell_volume(t)).sum()
    }

    /// Number of top simplices adjacent to each facet.
    pub fn facet_coface_counts(&self) -> Vec<usize> {
        let d = self.dim;
        let mut c = vec![0usize; self.count(d - 1)];
        for &f in &self.faces[d] {
            c[f] += 1;
        }
        c
    }

    /// For each p-simplex, the top simplices containing it.
    pub fn top_cofaces(&self, p: usize) -> Vec<Vec<usize>> {
        let d = self.dim;
        let mut out = vec![Vec::new(); self.count(p)];
        let mut buf = Vec::new();
        for t in 0..self.count(d) {
            let s = self.simplex(d, t);
            buf.clear();
            combinations(s, p + 1, &mut buf);
            for f in &buf {
                if let Some(i) = self.find(p, f) {
                    out[i].push(t);
                }
            }
        }
        out
    }

    /// p-simplex indices of a top simplex, in lexicographic order of the
    /// sorted local vertex subsets.
    pub fn cell_subsimplices(&self, t: usize, p: usize) -> Vec<usize> {
        let s = self.simplex(self.dim, t);
        let mut buf = Vec::new();
        combinations(s, p + 1, &mut buf);
        buf.iter().map(|f| self.find(p, f).expect("closed complex")).collect()
    }

    /// Which p-simplices lie in a boundary facet carrying the given marker
    /// (any marker when `None`).
    pub fn on_boundary(&self, p: usize, which: Option<Marker>) -> Vec<bool> {
        let d = self.dim;
        let mut flags: Vec<bool> = self
            .markers
            .iter()
            .map(|m| match (m, which) {
                (Some(_), None) => true,
                (Some(a), Some(b)) => *a == b,
                _ => false,
            })
            .collect();
        if p >= d {
            return vec![false; self.count(p)];
        }
        let mut q = d - 1;
        while q > p {
            let mut next = vec![false; self.count(q - 1)];
            for (i, &b) in flags.iter().enumerate() {
                if b {
                    for &f in self.faces(q, i) {
                        next[f] = true;
                    }
                }
            }
            flags = next;
            q -= 1;
        }
        flags
    }

    pub fn boundary_facets(&self) -> Vec<usize> {
        (0..self.markers.len()).filter(|&i| self.markers[i].is_some()).collect()
    }

    /// Connected components of the boundary (facets sharing a ridge), each
    /// with a single marker. Sorted by smallest facet index.
    pub fn boundary_components(&self) -> Vec<BoundaryComponent> {
        let d = self.dim;
        let facets = self.boundary_facets();
        let mut parent: Vec<usize> = (0..facets.len()).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        if d >= 2 {
            let mut seen: std::collections::HashMap<usize, Vec<usize>> = Default::default();
            for (k, &f) in facets.iter().enumerate() {
                for &r in self.faces(d - 1, f) {
                    seen.entry(r).or_default().push(k);
                }
            }
            for ks in seen.values() {
                for w in ks.windows(2) {
                    if self.markers[facets[w[0]]] == self.markers[facets[w[1]]] {
                        let (a, b) = (root(&mut parent, w[0]), root(&mut parent, w[1]));
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut comps: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for k in 0..facets.len() {
            let r = root(&mut parent, k);
            comps.entry(r).or_default().push(facets[k]);
        }
        comps
            .into_values()
            .map(|fs| BoundaryComponent { marker: self.markers[fs[0]].unwrap(), facets: fs })
            .collect()
    }

    /// Whether the 1-skeleton is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.count(0);
        if n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for e in 0..self.count(1) {
            let s = self.simplex(1, e);
            adj[s[0]].push(s[1]);
            adj[s[1]].push(s[0]);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&b| b)
    }

    /// Canonical metadata used for determinism checks and dumps.
    pub fn metadata(&self) -> serde_json::Value {
        let comps = self.boundary_components();
        let mut tag_counts: std::collections::BTreeMap<u32, usize> = Default::default();
        for &t in &self.tags {
            *tag_counts.entry(t).or_default() += 1;
        }
        serde_json::json!({
            "dim": self.dim,
            "counts": self.counts(),
            "euler_characteristic": self.counts().iter().enumerate()
                .map(|(p, &c)| if p % 2 == 0 { c as i64 } else { -(c as i64) }).sum::<i64>(),
            "tags": tag_counts.iter().map(|(t, c)| serde_json::json!({"tag": t, "cells": c})).collect::<Vec<_>>(),
            "boundary_components": comps.iter().map(|c| serde_json::json!({
                "marker": c.marker.as_str(), "facets": c.facets.len()
            })).collect::<Vec<_>>(),
            "volume": self.total_volume(),
            "glued": self.cell_coords.is_some(),
        })
    }

    /// Parity of a vertex ordering relative to sorted order.
    pub fn orientation_of(verts: &[usize]) -> usize {
        permutation_parity(verts)
    }
}
