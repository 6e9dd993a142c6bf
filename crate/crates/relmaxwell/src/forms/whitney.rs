//! Element integrals of lowest-order Whitney forms on a single simplex.
//!
//! Local p-simplices are enumerated as sorted subsets of the local vertex
//! indices in lexicographic order.

/// Affine geometry of an n-simplex embedded in R^3.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub n: usize,
    pub volume: f64,
    /// gradients of the barycentric coordinates
    pub grads: Vec<[f64; 3]>,
    jac: Vec<[f64; 3]>,
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Determinant of a small square matrix by elimination.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => {
            let mut a = m.to_vec();
            let mut d = 1.0;
            for c in 0..n {
                let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
                if a[p][c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    a.swap(p, c);
                    d = -d;
                }
                d *= a[c][c];
                for r in c + 1..n {
                    let f = a[r][c] / a[c][c];
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
            d
        }
    }
}

fn inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(p, c);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl CellGeometry {
    pub fn new(verts: &[[f64; 3]]) -> Self {
        let n = verts.len() - 1;
        let jac: Vec<[f64; 3]> = (1..=n)
            .map(|i| [verts[i][0] - verts[0][0], verts[i][1] - verts[0][1], verts[i][2] - verts[0][2]])
            .collect();
        let g: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dot3(&jac[i], &jac[j])).collect()).collect();
        let dg = det(&g);
        let volume = dg.max(0.0).sqrt() / factorial(n);
        let mut grads = vec![[0.0; 3]; n + 1];
        if dg > 0.0 {
            let gi = inverse(&g);
            for i in 0..n {
                let mut v = [0.0; 3];
                for k in 0..n {
                    for a in 0..3 {
                        v[a] += jac[k][a] * gi[k][i];
                    }
                }
                grads[i + 1] = v;
                for a in 0..3 {
                    grads[0][a] -= v[a];
                }
            }
        }
        CellGeometry { n, volume, grads, jac }
    }

    /// Sign of the orientation of the vertex order relative to the ambient
    /// frame: the xyz determinant for tetrahedra, the z normal for triangles.
    pub fn orientation(&self) -> f64 {
        let j = &self.jac;
        let s = match self.n {
            3 => dot3(&cross(&j[0], &j[1]), &j[2]),
            2 => {
                let c = cross(&j[0], &j[1]);
                if c[2] != 0.0 {
                    c[2]
                } else if c[1] != 0.0 {
                    c[1]
                } else {
                    c[0]
                }
            }
            1 => {
                if j[0][0] != 0.0 {
                    j[0][0]
                } else if j[0][1] != 0.0 {
                    j[0][1]
                } else {
                    j[0][2]
                }
            }
            _ => 1.0,
        };
        if s < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Integral of lambda_i lambda_j over the cell.
    pub fn moment(&self, i: usize, j: usize) -> f64 {
        let n = self.n as f64;
        self.volume * if i == j { 2.0 } else { 1.0 } / ((n + 1.0) * (n + 2.0))
    }

    pub fn gram(&self, a: usize, b: usize) -> f64 {
        dot3(&self.grads[a], &self.grads[b])
    }
}

/// Sorted local index subsets of size p+1.
pub fn local_simplices(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, p + 1, 0, &mut cur, &mut out);
    out
}

/// Whitney mass matrix of degree p (row-major, k x k), unit material.
pub fn mass_element(g: &CellGeometry, p: usize) -> Vec<f64> {
    let loc = local_simplices(g.n, p);
    let k = loc.len();
    let pf = factorial(p);
    let mut m = vec![0.0; k * k];
    for (a, s) in loc.iter().enumerate() {
        for (b, r) in loc.iter().enumerate().skip(a) {
            let mut acc = 0.0;
            for (ka, &va) in s.iter().enumerate() {
                let sa: Vec<usize> = s.iter().copied().filter(|&x| x != va).collect();
                for (kb, &vb) in r.iter().enumerate() {
                    let rb: Vec<usize> = r.iter().copied().filter(|&x| x != vb).collect();
                    let gm: Vec<Vec<f64>> =
                        sa.iter().map(|&i| rb.iter().map(|&j| g.gram(i, j)).collect()).collect();
                    let sign = if (ka + kb) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * g.moment(va, vb) * det(&gm);
                }
            }
            m[a * k + b] = pf * pf * acc;
            m[b * k + a] = pf * pf * acc;
        }
    }
    m
}

/// Vector proxy of a Whitney 1- or 2-form in R^3 as sum_m lambda_m c_m.
pub fn proxy_coefficients(g: &CellGeometry, s: &[usize]) -> Vec<(usize, [f64; 3])> {
    let gr = &g.grads;
    match s.len() {
        2 => vec![(s[0], gr[s[1]]), (s[1], neg(gr[s[0]]))],
        3 => {
            let (i, j, k) = (s[0], s[1], s[2]);
            vec![
                (i, scale(2.0, cross(&gr[j], &gr[k]))),
                (j, scale(-2.0, cross(&gr[i], &gr[k]))),
                (k, scale(2.0, cross(&gr[i], &gr[j]))),
            ]
        }
        _ => panic!("vector proxies exist for degrees 1 and 2 only"),
    }
}

fn neg(v: [f64; 3]) -> [f64; 3] {
    [-v[0], -v[1], -v[2]]
}

fn scale(a: f64, v: [f64; 3]) -> [f64; 3] {
    [a * v[0], a * v[1], a * v[2]]
}

/// Integrals of W_a (x) W_b for degree p in {1, 2} on a tetrahedron.
pub fn tensor_element(g: &CellGeometry, p: usize) -> Vec<[[f64; 3]; 3]> {
    let loc = local_simplices(g.n, p);
    let coef: Vec<_> = loc.iter().map(|s| proxy_coefficients(g, s)).collect();
    let k = loc.len();
    let mut out = vec![[[0.0; 3]; 3]; k * k];
    for a in 0..k {
        for b in 0..k {
            let mut t = [[0.0; 3]; 3];
            for (m, ca) in &coef[a] {
                for (n, cb) in &coef[b] {
                    let w = g.moment(*m, *n);
                    for i in 0..3 {
                        for j in 0..3 {
                            t[i][j] += w * ca[i] * cb[j];
                        }
                    }
                }
            }
            out[a * k + b] = t;
        }
    }
    out
}

/// Integrals of W1_a x W2_b on a tetrahedron (k1 x k2, row-major).
pub fn cross_element(g: &CellGeometry) -> Vec<[f64; 3]> {
    let e = local_simplices(3, 1);
    let f = local_simplices(3, 2);
    let ce: Vec<_> = e.iter().map(|s| proxy_coefficients(g, s)).collect();
    let cf: Vec<_> = f.iter().map(|s| proxy_coefficients(g, s)).collect();
    let mut out = vec![[0.0; 3]; e.len() * f.len()];
    for a in 0..e.len() {
        for b in 0..f.len() {
            let mut v = [0.0; 3];
            for (m, ca) in &ce[a] {
                for (n, cb) in &cf[b] {
                    let c = cross(ca, cb);
                    let w = g.moment(*m, *n);
                    for i in 0..3 {
                        v[i] += w * c[i];
                    }
                }
            }
            out[a * f.len() + b] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tet() -> CellGeometry {
        CellGeometry::new(&[[0.1, 0.0, 0.0], [1.2, 0.1, 0.0], [0.2, 0.9, 0.1], [0.0, 0.3, 1.1]])
    }

    #[test]
    fn scalar_mass_sums_to_volume() {
        let g = tet();
        let m = mass_element(&g, 0);
        assert!((m.iter().sum::<f64>() - g.volume).abs() < 1e-14);
    }

    #[test]
    fn top_mass_is_inverse_volume() {
        let g = tet();
        let m = mass_element(&g, 3);
        assert!((m[0] - 1.0 / g.volume).abs() < 1e-10 / g.volume);
    }

    #[test]
    fn tensor_trace_matches_mass() {
        let g = tet();
        for p in [1, 2] {
            let m = mass_element(&g, p);
            let t = tensor_element(&g, p);
            for (x, y) in m.iter().zip(&t) {
                assert!((x - (y[0][0] + y[1][1] + y[2][2])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_sum_to_zero() {
        let g = tet();
        for a in 0..3 {
            let s: f64 = g.grads.iter().map(|v| v[a]).sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
