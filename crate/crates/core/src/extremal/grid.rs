//! Nested polar grids over the polydisk.
//!
//! Radial and angular nodes come from prefix-stable sequences, so the node
//! set at resolution `R` contains the node set at every smaller resolution.
//! Each node carries the smallest resolution (its *level*) at which it
//! appears; a grid point (a multiset of nodes, one per zero) belongs to the
//! shell given by its largest node level.

use std::f64::consts::TAU;

use crate::matrix::C64;

/// Base-2 radical inverse.
fn van_der_corput(mut i: usize) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            x += base;
        }
        i >>= 1;
        base *= 0.5;
    }
    x
}

/// Angular node count paired with `radial` radial nodes (24 -> 32, 12 -> 16).
pub(crate) fn angular_count(radial: usize) -> usize {
    (4 * radial).div_ceil(3)
}

fn angular_level(j: usize) -> usize {
    let mut r = 1;
    while angular_count(r) <= j {
        r += 1;
    }
    r
}

/// Radius of radial node `i >= 1`, biased towards the boundary.
fn radius(i: usize, max_modulus: f64) -> f64 {
    let u = van_der_corput(i);
    max_modulus * u * (2.0 - u)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub w: C64,
    pub level: usize,
}

/// Nodes at resolution `radial`, ordered by level then radial then angular index.
pub(crate) fn nodes(radial: usize, max_modulus: f64) -> Vec<Node> {
    let ang = angular_count(radial);
    let mut out: Vec<(usize, usize, usize, Node)> = vec![(1, 0, 0, Node { w: C64::new(0.0, 0.0), level: 1 })];
    for i in 1..radial {
        let r = radius(i, max_modulus);
        for j in 0..ang {
            let level = (i + 1).max(angular_level(j));
            let w = C64::from_polar(r, TAU * van_der_corput(j));
            out.push((level, i, j, Node { w, level }));
        }
    }
    out.sort_by_key(|&(level, i, j, _)| (level, i, j));
    out.into_iter().map(|t| t.3).collect()
}

pub(crate) fn node_count(radial: usize) -> usize {
    1 + radial.saturating_sub(1) * angular_count(radial)
}

/// Number of multisets of size `d` from `k` items, saturating.
pub(crate) fn multiset_count(k: usize, d: usize) -> usize {
    // C(k + d - 1, d)
    let mut acc: u128 = 1;
    for i in 0..d {
        acc = acc * (k + i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// All non-decreasing index tuples of length `d` over `0..k`, in
/// lexicographic order.
pub(crate) fn multisets(k: usize, d: usize) -> Vec<Vec<u32>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::with_capacity(multiset_count(k, d));
    let mut cur = vec![0u32; d];
    loop {
        out.push(cur.clone());
        // advance
        let mut pos = d;
        while pos > 0 {
            pos -= 1;
            if (cur[pos] as usize) + 1 < k {
                let v = cur[pos] + 1;
                for c in cur.iter_mut().skip(pos) {
                    *c = v;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}
