#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relmaxwell::forms::{DecOperators, Material};
use relmaxwell::mesh::{canned, format, ObstacleScenario, SimplicialComplex};

pub fn scenario(name: &str) -> ObstacleScenario {
    let g = canned::build(name).unwrap();
    ObstacleScenario::carve(g.reference, &g.obstacle_tags).unwrap()
}

pub fn carved_ops(name: &str) -> (ObstacleScenario, DecOperators) {
    let sc = scenario(name);
    let ops = DecOperators::new(&sc.carved, &Material::vacuum()).unwrap();
    (sc, ops)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Copy of `cx` whose cells get the tag chosen from their centroid. Goes
/// through the text format, which lists cells in index order.
pub fn retag(cx: &SimplicialComplex, tag: impl Fn([f64; 3], u32) -> u32) -> SimplicialComplex {
    let text = format::write_complex(cx);
    let mut out = String::new();
    let mut lines = text.lines();
    while let Some(l) = lines.next() {
        out.push_str(l);
        out.push('\n');
        if let Some(n) = l.strip_prefix("cells ") {
            let n: usize = n.trim().parse().unwrap();
            for t in 0..n {
                let row = lines.next().unwrap();
                let mut toks = row.split_whitespace();
                let old: u32 = toks.next().unwrap().parse().unwrap();
                let rest: Vec<&str> = toks.collect();
                out.push_str(&format!("{} {}\n", tag(cx.cell_centroid(t), old), rest.join(" ")));
            }
        }
    }
    format::parse_complex(&out).unwrap()
}

/// Trapezoid rule on [a, b] with n panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..=n).map(|i| {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        w * f(a + h * i as f64)
    }).sum::<f64>() * h
}
