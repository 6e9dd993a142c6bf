use super::{Marker, SimplicialComplex};
use crate::{Error, Result};
use std::collections::HashMap;

/// A reference complex together with the complex obtained by removing the
/// cells of an obstacle. Both share vertex ordering, so every simplex of the
/// carved complex is a simplex of the reference with identical orientation.
#[derive(Debug, Clone)]
pub struct ObstacleScenario {
    pub reference: SimplicialComplex,
    pub carved: SimplicialComplex,
    pub obstacle_tags: Vec<u32>,
    injection: Vec<Vec<usize>>,
}

impl ObstacleScenario {
    pub fn without_obstacle(reference: SimplicialComplex) -> Self {
        let injection = (0..=reference.dim()).map(|p| (0..reference.count(p)).collect()).collect();
        ObstacleScenario { carved: reference.clone(), reference, obstacle_tags: Vec::new(), injection }
    }

    pub fn carve(reference: SimplicialComplex, obstacle_tags: &[u32]) -> Result<Self> {
        if obstacle_tags.is_empty() {
            return Ok(Self::without_obstacle(reference));
        }
        let d = reference.dim();
        let n_top = reference.count(d);
        let keep: Vec<bool> = (0..n_top).map(|t| !obstacle_tags.contains(&reference.tags()[t])).collect();
        if keep.iter().all(|&k| k) {
            return Err(Error::Mesh(format!("no cells carry obstacle tags {obstacle_tags:?}")));
        }
        let mut used = vec![false; reference.count(0)];
        for t in (0..n_top).filter(|&t| keep[t]) {
            for &v in reference.simplex(d, t) {
                used[v] = true;
            }
        }
        let mut new_id = vec![usize::MAX; used.len()];
        let mut coords = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                new_id[v] = coords.len();
                coords.push(reference.coords()[v]);
            }
        }
        let mut tops = Vec::new();
        let mut tags = Vec::new();
        let mut cc = Vec::new();
        for t in (0..n_top).filter(|&t| keep[t]) {
            tops.push(reference.simplex(d, t).iter().map(|&v| new_id[v]).collect());
            tags.push(reference.tags()[t]);
            cc.push(reference.cell_vertices(t));
        }
        let cell_coords = reference.has_cell_coords().then_some(cc);
        let mut carved = SimplicialComplex::from_top(d, coords, tops, tags, cell_coords)?;

        let old_id: Vec<usize> = (0..used.len()).filter(|&v| used[v]).collect();
        let map_back = |verts: &[usize]| -> Vec<usize> { verts.iter().map(|&v| old_id[v]).collect() };
        let mut injection = Vec::with_capacity(d + 1);
        for p in 0..=d {
            let inj: Vec<usize> = (0..carved.count(p))
                .map(|i| reference.find(p, &map_back(carved.simplex(p, i))).expect("carved simplex exists in reference"))
                .collect();
            injection.push(inj);
        }
        let markers: Vec<Option<Marker>> = carved
            .markers()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.map(|_| reference.markers()[injection[d - 1][i]].unwrap_or(Marker::Obstacle))
            })
            .collect();
        carved.set_markers(markers);
        check_obstacle_boundary(&carved)?;
        Ok(ObstacleScenario { reference, carved, obstacle_tags: obstacle_tags.to_vec(), injection })
    }

    pub fn has_obstacle(&self) -> bool {
        !self.obstacle_tags.is_empty()
    }

    /// Map from carved simplex index to reference simplex index.
    pub fn injection(&self, p: usize) -> &[usize] {
        &self.injection[p]
    }

    /// Reference simplices that are not in the carved complex.
    pub fn removed(&self, p: usize) -> Vec<usize> {
        let mut present = vec![false; self.reference.count(p)];
        for &j in &self.injection[p] {
            present[j] = true;
        }
        (0..present.len()).filter(|&j| !present[j]).collect()
    }
}

fn check_obstacle_boundary(cx: &SimplicialComplex) -> Result<()> {
    let d = cx.dim();
    if d < 2 {
        return Ok(());
    }
    let obs = cx.on_boundary(0, Some(Marker::Obstacle));
    let out = cx.on_boundary(0, Some(Marker::Outer));
    if let Some(v) = (0..obs.len()).find(|&v| obs[v] && out[v]) {
        return Err(Error::NonManifold(format!("obstacle touches the outer boundary at vertex {v}")));
    }
    let facets: Vec<usize> = (0..cx.markers().len())
        .filter(|&i| cx.markers()[i] == Some(Marker::Obstacle))
        .collect();
    // every ridge of the obstacle surface bounds exactly two surface facets
    let mut ridge_count: HashMap<usize, usize> = HashMap::new();
    for &f in &facets {
        for &r in cx.faces(d - 1, f) {
            *ridge_count.entry(r).or_default() += 1;
        }
    }
    if let Some((&r, &c)) = ridge_count.iter().filter(|(_, &c)| c != 2).min_by_key(|(&r, _)| r) {
        return Err(Error::NonManifold(format!(
            "ridge {:?} lies in {c} obstacle facets",
            cx.simplex(d - 2, r)
        )));
    }
    if d == 3 {
        // the surface star of every vertex is a single fan
        let mut star: HashMap<usize, Vec<usize>> = HashMap::new();
        for &f in &facets {
            for &v in cx.simplex(2, f) {
                star.entry(v).or_default().push(f);
            }
        }
        let mut verts: Vec<_> = star.keys().copied().collect();
        verts.sort();
        for v in verts {
            let fs = &star[&v];
            let mut seen = vec![false; fs.len()];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..fs.len() {
                    if !seen[j] && shares_edge_through(cx, fs[i], fs[j], v) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if seen.iter().any(|&s| !s) {
                return Err(Error::NonManifold(format!("obstacle surface is pinched at vertex {v}")));
            }
        }
    }
    Ok(())
}

fn shares_edge_through(cx: &SimplicialComplex, a: usize, b: usize, v: usize) -> bool {
    let sa = cx.simplex(2, a);
    let sb = cx.simplex(2, b);
    sa.iter().filter(|&&x| x != v && sb.contains(&x)).count() == 1
}
