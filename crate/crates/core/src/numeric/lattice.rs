//! Layered lattice for left-invariant metrics on `R^k ⋊_D R`.
//!
//! Layer `j` sits at height `t_j = j·h_t`. Within a layer, nilradical
//! coordinate `i` is sampled at spacing `s_i(j) = h·e^{δ_i t_j}/√Q_ii`, so every
//! cell is about `h` wide in metric units whatever the height. Only index
//! boxes listed per layer are materialized.
//!
//! An edge from index `m` on layer `j` to layer `j + Δ` targets
//! `round(m·e^{−δΔh_t}) + o` for a stencil offset `o`; its weight is the
//! length of the straight coordinate segment under the metric at the segment
//! midpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{FrameMetric, Model};

pub(crate) const MAX_NIL: usize = 3;

pub(crate) type Index = [i64; MAX_NIL];

#[derive(Debug, Clone)]
pub(crate) struct IndexBox {
    pub lo: Index,
    pub hi: Index,
    pub offset: usize,
}

impl IndexBox {
    fn len(&self, k: usize) -> usize {
        (0..k).map(|i| (self.hi[i] - self.lo[i] + 1) as usize).product()
    }

    fn contains(&self, m: &Index, k: usize) -> bool {
        (0..k).all(|i| m[i] >= self.lo[i] && m[i] <= self.hi[i])
    }

    fn intersects(&self, other: &IndexBox, k: usize) -> bool {
        (0..k).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    fn local(&self, m: &Index, k: usize) -> usize {
        let mut idx = 0usize;
        for i in 0..k {
            idx = idx * (self.hi[i] - self.lo[i] + 1) as usize + (m[i] - self.lo[i]) as usize;
        }
        idx
    }

    fn decode(&self, mut local: usize, k: usize) -> Index {
        let mut m = [0; MAX_NIL];
        for i in (0..k).rev() {
            let w = (self.hi[i] - self.lo[i] + 1) as usize;
            m[i] = self.lo[i] + (local % w) as i64;
            local /= w;
        }
        m
    }
}

/// Merges intersecting boxes into their bounding boxes until all are disjoint.
pub(crate) fn merge_boxes(mut boxes: Vec<IndexBox>, k: usize) -> Vec<IndexBox> {
    loop {
        let mut merged = false;
        'outer: for a in 0..boxes.len() {
            for b in a + 1..boxes.len() {
                if boxes[a].intersects(&boxes[b], k) {
                    let other = boxes.swap_remove(b);
                    for i in 0..k {
                        boxes[a].lo[i] = boxes[a].lo[i].min(other.lo[i]);
                        boxes[a].hi[i] = boxes[a].hi[i].max(other.hi[i]);
                    }
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return boxes;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Move {
    pub dk: i64,
    pub off: Index,
}

/// Stencil offsets. `extended` adds knight moves in every coordinate plane
/// and two-layer steps with unit lateral offsets.
pub(crate) fn stencil(k: usize, extended: bool) -> Vec<Move> {
    let mut out = Vec::new();
    let cube: Vec<Index> = {
        let mut v = vec![[0; MAX_NIL]];
        for i in 0..k {
            v = v
                .into_iter()
                .flat_map(|m| {
                    [-1, 0, 1].into_iter().map(move |d| {
                        let mut m = m;
                        m[i] = d;
                        m
                    })
                })
                .collect();
        }
        v
    };
    let range: &[i64] = if extended { &[-2, -1, 0, 1, 2] } else { &[-1, 0, 1] };
    for &dk in range {
        let mut lateral: Vec<Index> = cube.clone();
        if extended && dk == 0 {
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    for (a, b) in [(1, 2), (1, -2), (-1, 2), (-1, -2)] {
                        let mut m = [0; MAX_NIL];
                        m[i] = a;
                        m[j] = b;
                        lateral.push(m);
                    }
                }
            }
        }
        if extended && dk.abs() == 1 {
            for i in 0..k {
                for d in [-2, 2] {
                    let mut m = [0; MAX_NIL];
                    m[i] = d;
                    lateral.push(m);
                }
            }
        }
        for off in lateral {
            if dk == 0 && off.iter().all(|x| *x == 0) {
                continue;
            }
            out.push(Move { dk, off });
        }
    }
    out
}

pub(crate) struct Layer {
    pub boxes: Vec<IndexBox>,
    pub offset: usize,
}

/// Per-`Δk` transport factors.
struct Transport {
    dk: i64,
    /// `e^{−δ_i Δk h_t}`
    shrink: Index64,
    /// `h/√Q_ii · e^{δ_i Δk h_t / 2}`
    gain: Index64,
}

type Index64 = [f64; MAX_NIL];

pub(crate) struct Grid {
    pub k: usize,
    pub h: f64,
    pub ht: f64,
    pub j0: i64,
    pub layers: Vec<Layer>,
    pub total: usize,
    delta: Vec<f64>,
    qsqrt: Vec<f64>,
    q: Vec<f64>,
    moves: Vec<Move>,
    transports: Vec<Transport>,
}

impl Grid {
    pub fn new(model: &Model, metric: &FrameMetric, h: f64, ht: f64, j0: i64, boxes: Vec<Vec<IndexBox>>, extended: bool) -> Self {
        let k = model.nil_dim();
        let mut layers = Vec::with_capacity(boxes.len());
        let mut total = 0usize;
        for layer_boxes in boxes {
            let mut bs = merge_boxes(layer_boxes, k);
            bs.sort_by_key(|b| b.lo);
            let offset = total;
            for b in &mut bs {
                b.offset = total;
                total += b.len(k);
            }
            layers.push(Layer { boxes: bs, offset });
        }
        let delta = model.derivation();
        let qsqrt: Vec<f64> = (0..k).map(|i| metric.entry(i, i).sqrt()).collect();
        let dim = k + 1;
        let q: Vec<f64> = (0..dim * dim).map(|x| metric.entry(x / dim, x % dim)).collect();
        let moves = stencil(k, extended);
        let mut dks: Vec<i64> = moves.iter().map(|m| m.dk).collect();
        dks.dedup();
        dks.sort();
        dks.dedup();
        let transports = dks
            .into_iter()
            .map(|dk| {
                let mut shrink = [1.0; MAX_NIL];
                let mut gain = [0.0; MAX_NIL];
                for i in 0..k {
                    shrink[i] = (-delta[i] * dk as f64 * ht).exp();
                    gain[i] = h / qsqrt[i] * (0.5 * delta[i] * dk as f64 * ht).exp();
                }
                Transport { dk, shrink, gain }
            })
            .collect();
        Self { k, h, ht, j0, layers, total, delta, qsqrt, q, moves, transports }
    }

    pub fn layer_height(&self, layer: usize) -> f64 {
        (self.j0 + layer as i64) as f64 * self.ht
    }

    /// Coordinate spacing of axis `i` on a layer.
    pub fn spacing(&self, layer: usize, i: usize) -> f64 {
        spacing(self.h, self.delta[i], self.qsqrt[i], self.layer_height(layer))
    }

    pub fn lookup(&self, layer: usize, m: &Index) -> Option<usize> {
        let l = self.layers.get(layer)?;
        l.boxes
            .iter()
            .find(|b| b.contains(m, self.k))
            .map(|b| b.offset + b.local(m, self.k))
    }

    pub fn decode(&self, id: usize) -> (usize, Index) {
        let layer = self.layers.partition_point(|l| l.offset <= id) - 1;
        let l = &self.layers[layer];
        let b = l
            .boxes
            .iter()
            .rev()
            .find(|b| b.offset <= id)
            .expect("node id inside its layer");
        (layer, b.decode(id - b.offset, self.k))
    }

    /// Coordinates `(n, t)` of a node.
    pub fn coords(&self, id: usize) -> (Vec<f64>, f64) {
        let (layer, m) = self.decode(id);
        let n = (0..self.k).map(|i| m[i] as f64 * self.spacing(layer, i)).collect();
        (n, self.layer_height(layer))
    }

    pub fn quad(&self, w: &[f64]) -> f64 {
        let dim = self.k + 1;
        let mut acc = 0.0;
        for a in 0..dim {
            let mut row = 0.0;
            for b in 0..dim {
                row += self.q[a * dim + b] * w[b];
            }
            acc += w[a] * row;
        }
        acc.max(0.0).sqrt()
    }

    /// Length of the straight coordinate segment by the midpoint rule.
    pub fn segment(&self, na: &[f64], ta: f64, nb: &[f64], tb: f64) -> f64 {
        let mid = 0.5 * (ta + tb);
        let mut w = [0.0; MAX_NIL + 1];
        for i in 0..self.k {
            w[i] = (-self.delta[i] * mid).exp() * (nb[i] - na[i]);
        }
        w[self.k] = tb - ta;
        self.quad(&w[..=self.k])
    }

    /// Calls `f(neighbor, weight)` for every stencil neighbor present in the grid.
    #[inline]
    pub fn for_neighbors<F: FnMut(usize, f64)>(&self, id: usize, mut f: F) {
        let (layer, m) = self.decode(id);
        let k = self.k;
        let mut w = [0.0; MAX_NIL + 1];
        for tr in &self.transports {
            let target = layer as i64 + tr.dk;
            if target < 0 || target >= self.layers.len() as i64 {
                continue;
            }
            let target = target as usize;
            let mut base = [0i64; MAX_NIL];
            let mut frac = [0.0; MAX_NIL];
            for i in 0..k {
                let x = m[i] as f64 * tr.shrink[i];
                base[i] = x.round() as i64;
                frac[i] = x - base[i] as f64;
            }
            for mv in self.moves.iter().filter(|mv| mv.dk == tr.dk) {
                let mut n = [0i64; MAX_NIL];
                for i in 0..k {
                    n[i] = base[i] + mv.off[i];
                    w[i] = tr.gain[i] * (mv.off[i] as f64 - frac[i]);
                }
                let Some(nid) = self.lookup(target, &n) else { continue };
                w[k] = tr.dk as f64 * self.ht;
                f(nid, self.quad(&w[..=k]));
            }
        }
    }

    /// Whether a lateral unit step from the node leaves the grid.
    pub fn on_lateral_boundary(&self, id: usize) -> bool {
        let (layer, m) = self.decode(id);
        (0..self.k).any(|i| {
            [-1, 1].iter().any(|d| {
                let mut n = m;
                n[i] += d;
                self.lookup(layer, &n).is_none()
            })
        })
    }
}

pub(crate) fn spacing(h: f64, delta: f64, qsqrt: f64, height: f64) -> f64 {
    h * (delta * height).exp() / qsqrt
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    id: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct Search {
    pub value: f64,
    /// Grid nodes from the first attached node to the last, if any.
    pub nodes: Vec<usize>,
}

/// Dijkstra from a virtual source to a virtual target, both given by their
/// attachment edges. `allowed` filters nodes.
pub(crate) fn dijkstra<A: FnMut(usize) -> bool>(
    grid: &Grid,
    sources: &[(usize, f64)],
    targets: &[(usize, f64)],
    direct: Option<f64>,
    mut allowed: A,
) -> Option<Search> {
    let n = grid.total;
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut target_w = rustc_hash::FxHashMap::default();
    for &(id, w) in targets {
        let e = target_w.entry(id).or_insert(w);
        *e = f64::min(*e, w);
    }
    let mut heap = BinaryHeap::new();
    for &(id, w) in sources {
        if w < dist[id] && allowed(id) {
            dist[id] = w;
            heap.push(Entry { dist: w, id: id as u32 });
        }
    }
    let mut best = direct.unwrap_or(f64::INFINITY);
    let mut best_node: Option<usize> = None;
    let mut allow_cache = vec![0u8; n];
    while let Some(Entry { dist: d, id }) = heap.pop() {
        let u = id as usize;
        if closed[u] || d > dist[u] {
            continue;
        }
        if d >= best {
            break;
        }
        closed[u] = true;
        if let Some(w) = target_w.get(&u) {
            if d + w < best {
                best = d + w;
                best_node = Some(u);
            }
        }
        grid.for_neighbors(u, |v, w| {
            if closed[v] {
                return;
            }
            let nd = d + w;
            if nd < dist[v] {
                let ok = match allow_cache[v] {
                    0 => {
                        let ok = allowed(v);
                        allow_cache[v] = if ok { 1 } else { 2 };
                        ok
                    }
                    c => c == 1,
                };
                if ok {
                    dist[v] = nd;
                    pred[v] = u as u32;
                    heap.push(Entry { dist: nd, id: v as u32 });
                }
            }
        });
    }
    if !best.is_finite() {
        return None;
    }
    let mut nodes = Vec::new();
    let mut cur = best_node;
    while let Some(u) = cur {
        nodes.push(u);
        cur = (pred[u] != u32::MAX).then_some(pred[u] as usize);
    }
    nodes.reverse();
    Some(Search { value: best, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil(1, false).len(), 8);
        assert_eq!(stencil(2, false).len(), 26);
        assert_eq!(stencil(1, true).len(), 18);
        assert_eq!(stencil(2, true).len(), 60);
    }

    #[test]
    fn stencil_is_symmetric() {
        for k in 1..=2 {
            let s = stencil(k, true);
            for m in &s {
                let mut neg = m.off;
                neg.iter_mut().for_each(|x| *x = -*x);
                assert!(s.iter().any(|o| o.dk == -m.dk && o.off == neg));
            }
        }
    }

    #[test]
    fn boxes_merge_and_index() {
        let b = |lo: [i64; 2], hi: [i64; 2]| IndexBox { lo: [lo[0], lo[1], 0], hi: [hi[0], hi[1], 0], offset: 0 };
        let merged = merge_boxes(vec![b([0, 0], [3, 3]), b([2, 2], [5, 5]), b([10, 10], [11, 11])], 2);
        assert_eq!(merged.len(), 2);
        let big = merged.iter().find(|x| x.lo[0] == 0).unwrap();
        assert_eq!(big.hi[..2], [5, 5]);
        for local in 0..big.len(2) {
            let m = big.decode(local, 2);
            assert_eq!(big.local(&m, 2), local);
        }
    }
}
