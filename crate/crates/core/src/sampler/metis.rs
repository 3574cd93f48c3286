//! Multilevel graph partitioning by recursive bisection.
//!
//! Each bisection coarsens by heavy-edge matching, grows an initial split
//! greedily on the coarsest graph and refines it with Fiduccia-Mattheyses
//! passes while projecting back. The k-way result is then balanced and
//! greedily refined on the original graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::WeightedAdjacency;

#[derive(Debug, Clone, PartialEq)]
pub struct MetisOptions {
    /// Largest allowed part weight as a multiple of `total / k`.
    pub balance: f64,
    /// Coarsening stops at about this many vertices.
    pub coarsen_to: usize,
    pub init_tries: usize,
    pub refine_passes: usize,
    pub seed: u64,
}

impl Default for MetisOptions {
    fn default() -> Self {
        MetisOptions {
            balance: 1.1,
            coarsen_to: 64,
            init_tries: 8,
            refine_passes: 10,
            seed: 0,
        }
    }
}

/// Undirected weighted graph without self loops, CSR layout.
#[derive(Debug, Clone)]
struct Graph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
    ew: Vec<f64>,
    vw: Vec<f64>,
}

impl Graph {
    fn n(&self) -> usize {
        self.vw.len()
    }

    fn edges(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.xadj[u]..self.xadj[u + 1];
        self.adj[r.clone()]
            .iter()
            .copied()
            .zip(self.ew[r].iter().copied())
    }

    fn total_weight(&self) -> f64 {
        self.vw.iter().sum()
    }

    /// Symmetrizes `(u, v, w)` lists; parallel edges are summed.
    fn from_edges(n: usize, vw: Vec<f64>, mut edges: Vec<(usize, usize, f64)>) -> Graph {
        let rev: Vec<_> = edges.iter().map(|&(u, v, w)| (v, u, w)).collect();
        edges.extend(rev);
        edges.retain(|&(u, v, w)| u != v && w != 0.0);
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let mut xadj = vec![0; n + 1];
        let mut adj = Vec::with_capacity(edges.len());
        let mut ew: Vec<f64> = Vec::with_capacity(edges.len());
        let mut last = None;
        for (u, v, w) in edges {
            if last == Some((u, v)) {
                *ew.last_mut().unwrap() += w;
            } else {
                adj.push(v);
                ew.push(w);
                xadj[u + 1] += 1;
                last = Some((u, v));
            }
        }
        for i in 0..n {
            xadj[i + 1] += xadj[i];
        }
        Graph { xadj, adj, ew, vw }
    }

    fn from_adjacency(a: &WeightedAdjacency, vw: Vec<f64>) -> Graph {
        let mut edges = Vec::with_capacity(a.nnz());
        for u in 0..a.num_nodes() {
            let (cols, ws) = a.row(u);
            for (&v, &w) in cols.iter().zip(ws) {
                // halved so that the symmetrized weight is a_uv + a_vu
                edges.push((u, v, 0.5 * w));
            }
        }
        Graph::from_edges(a.num_nodes(), vw, edges)
    }

    /// Induced subgraph over `nodes` (ids into `self`).
    fn induced(&self, nodes: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let mut xadj = vec![0; nodes.len() + 1];
        let mut adj = Vec::new();
        let mut ew = Vec::new();
        for (i, &u) in nodes.iter().enumerate() {
            for (v, w) in self.edges(u) {
                if local[v] != usize::MAX {
                    adj.push(local[v]);
                    ew.push(w);
                }
            }
            xadj[i + 1] = adj.len();
        }
        Graph {
            xadj,
            adj,
            ew,
            vw: nodes.iter().map(|&u| self.vw[u]).collect(),
        }
    }
}

/// Partition the symmetrized graph of `adj` into `k` parts minimizing the
/// weighted edge cut, with each part at most `1.1 x total / k` heavy when
/// vertex weights allow it. Unit vertex weights unless given.
pub fn metis_partition(
    adj: &WeightedAdjacency,
    k: usize,
    vertex_weights: Option<&[f64]>,
) -> Result<Vec<usize>> {
    metis_partition_with(adj, k, vertex_weights, &MetisOptions::default())
}

pub fn metis_partition_with(
    adj: &WeightedAdjacency,
    k: usize,
    vertex_weights: Option<&[f64]>,
    opts: &MetisOptions,
) -> Result<Vec<usize>> {
    let n = adj.num_nodes();
    if k == 0 {
        return Err(Error::invalid("partition into zero parts"));
    }
    let vw = match vertex_weights {
        Some(w) if w.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "{} vertex weights for {n} vertices",
                w.len()
            )))
        }
        Some(w) if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) => {
            return Err(Error::invalid("vertex weights must be positive"))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    if k == 1 || n == 0 {
        return Ok(vec![0; n]);
    }
    let g = Graph::from_adjacency(adj, vw);
    let mut rng = crate::seeded_rng(opts.seed);
    let mut labels = vec![0; n];
    let all: Vec<usize> = (0..n).collect();
    let levels = (k as f64).log2().ceil().max(1.0);
    let split_balance = opts.balance.powf(1.0 / levels);
    recursive_bisect(&g, &all, k, 0, split_balance, opts, &mut rng, &mut labels);
    kway_refine(&g, &mut labels, k, opts);
    Ok(labels)
}

/// Sum of symmetrized edge weight between different parts.
pub fn edge_cut(adj: &WeightedAdjacency, labels: &[usize]) -> f64 {
    let mut cut = 0.0;
    for u in 0..adj.num_nodes() {
        let (cols, ws) = adj.row(u);
        for (&v, &w) in cols.iter().zip(ws) {
            if labels[u] != labels[v] {
                cut += w;
            }
        }
    }
    cut
}

#[allow(clippy::too_many_arguments)]
fn recursive_bisect<R: Rng>(
    g: &Graph,
    nodes: &[usize],
    k: usize,
    offset: usize,
    balance: f64,
    opts: &MetisOptions,
    rng: &mut R,
    labels: &mut [usize],
) {
    if k == 1 || nodes.len() <= 1 {
        for &u in nodes {
            labels[u] = offset;
        }
        return;
    }
    let sub = g.induced(nodes);
    let k_left = k / 2;
    let side = bisect(&sub, k_left as f64 / k as f64, balance, opts, rng);
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, &u) in nodes.iter().enumerate() {
        if side[i] {
            right.push(u);
        } else {
            left.push(u);
        }
    }
    recursive_bisect(g, &left, k_left, offset, balance, opts, rng, labels);
    recursive_bisect(
        g,
        &right,
        k - k_left,
        offset + k_left,
        balance,
        opts,
        rng,
        labels,
    );
}

/// `false` marks the side meant to hold `frac` of the weight.
fn bisect<R: Rng>(
    g: &Graph,
    frac: f64,
    balance: f64,
    opts: &MetisOptions,
    rng: &mut R,
) -> Vec<bool> {
    let total = g.total_weight();
    let target = [total * frac, total * (1.0 - frac)];
    let max = [target[0] * balance, target[1] * balance];

    let mut levels: Vec<(Graph, Vec<usize>)> = Vec::new();
    let mut cur = g.clone();
    let max_vw = 1.5 * total / opts.coarsen_to as f64;
    while cur.n() > opts.coarsen_to {
        let (coarse, map) = coarsen(&cur, max_vw, rng);
        if coarse.n() as f64 > 0.95 * cur.n() as f64 {
            break;
        }
        levels.push((cur, map));
        cur = coarse;
    }

    let mut side = initial_bisection(&cur, target, max, opts.init_tries, rng);
    fm_refine(&cur, &mut side, target, max, opts.refine_passes);
    while let Some((finer, map)) = levels.pop() {
        side = map.iter().map(|&c| side[c]).collect();
        fm_refine(&finer, &mut side, target, max, opts.refine_passes);
    }
    side
}

/// Heavy-edge matching; unmatched edgeless vertices are paired with each
/// other. Returns the contracted graph and the fine-to-coarse map.
fn coarsen<R: Rng>(g: &Graph, max_vw: f64, rng: &mut R) -> (Graph, Vec<usize>) {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    let mut lonely = None;
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (v, w) in g.edges(u) {
            if mate[v] == usize::MAX
                && g.vw[u] + g.vw[v] <= max_vw
                && best.is_none_or(|(bw, bv)| w > bw || (w == bw && v < bv))
            {
                best = Some((w, v));
            }
        }
        match best {
            Some((_, v)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None if g.xadj[u] == g.xadj[u + 1] => match lonely.take() {
                Some(v) if g.vw[u] + g.vw[v] <= max_vw => {
                    mate[u] = v;
                    mate[v] = u;
                }
                _ => {
                    mate[u] = u;
                    lonely = Some(u);
                }
            },
            None => mate[u] = u,
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut vw = Vec::new();
    for u in 0..n {
        if map[u] != usize::MAX {
            continue;
        }
        let c = vw.len();
        map[u] = c;
        let v = mate[u];
        if v != u && v != usize::MAX {
            map[v] = c;
            vw.push(g.vw[u] + g.vw[v]);
        } else {
            vw.push(g.vw[u]);
        }
    }
    let mut edges = Vec::with_capacity(g.adj.len() / 2);
    for u in 0..n {
        for (v, w) in g.edges(u) {
            if u < v {
                edges.push((map[u], map[v], w));
            }
        }
    }
    (Graph::from_edges(vw.len(), vw, edges), map)
}

fn cut_of(g: &Graph, side: &[bool]) -> f64 {
    let mut cut = 0.0;
    for u in 0..g.n() {
        for (v, w) in g.edges(u) {
            if u < v && side[u] != side[v] {
                cut += w;
            }
        }
    }
    cut
}

/// Overweight beyond the allowed maxima; zero when balanced.
fn excess(weights: [f64; 2], max: [f64; 2]) -> f64 {
    (weights[0] - max[0]).max(0.0) + (weights[1] - max[1]).max(0.0)
}

fn side_weights(g: &Graph, side: &[bool]) -> [f64; 2] {
    let mut w = [0.0; 2];
    for u in 0..g.n() {
        w[side[u] as usize] += g.vw[u];
    }
    w
}

/// Greedy graph growing from several start vertices; keeps the best
/// (least excess, then least cut) result.
fn initial_bisection<R: Rng>(
    g: &Graph,
    target: [f64; 2],
    max: [f64; 2],
    tries: usize,
    rng: &mut R,
) -> Vec<bool> {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut best: Option<((f64, f64), Vec<bool>)> = None;
    for t in 0..tries.max(1).min(n) {
        let side = grow(g, &order, t, target[0]);
        let key = (excess(side_weights(g, &side), max), cut_of(g, &side));
        if best.as_ref().is_none_or(|(bk, _)| key < *bk) {
            best = Some((key, side));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

/// Region `false` grows from `order[start]` until it holds `target` weight;
/// frontier vertices are taken by strongest connection to the region.
fn grow(g: &Graph, order: &[usize], start: usize, target: f64) -> Vec<bool> {
    let n = g.n();
    let mut side = vec![true; n];
    let mut conn = vec![0.0f64; n];
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
    let mut weight = 0.0;
    let mut next_jump = 0;
    let mut seed = Some(order[start]);
    while weight < target {
        let u = if let Some(s) = seed.take() {
            s
        } else {
            loop {
                match heap.pop() {
                    Some((c, Reverse(u))) if side[u] && c == conn[u].to_bits() => break Some(u),
                    Some(_) => continue,
                    None => break None,
                }
            }
            .or_else(|| {
                while next_jump < n && !side[order[next_jump]] {
                    next_jump += 1;
                }
                order.get(next_jump).copied()
            })
            .unwrap_or(usize::MAX)
        };
        if u == usize::MAX {
            break;
        }
        if !side[u] {
            continue;
        }
        side[u] = false;
        weight += g.vw[u];
        for (v, w) in g.edges(u) {
            if side[v] {
                conn[v] += w;
                heap.push((conn[v].to_bits(), Reverse(v)));
            }
        }
    }
    side
}

/// Fiduccia-Mattheyses passes over boundary vertices with rollback to the
/// best prefix of each pass.
fn fm_refine(g: &Graph, side: &mut [bool], target: [f64; 2], max: [f64; 2], passes: usize) {
    let n = g.n();
    if n < 2 {
        return;
    }
    // ext - int per vertex
    let mut gain = vec![0.0f64; n];
    let recompute = |side: &[bool], gain: &mut [f64]| {
        for u in 0..n {
            let mut d = 0.0;
            for (v, w) in g.edges(u) {
                d += if side[v] != side[u] { w } else { -w };
            }
            gain[u] = d;
        }
    };
    let _ = target;
    for _ in 0..passes {
        recompute(side, &mut gain);
        let mut weights = side_weights(g, side);
        let mut cut = cut_of(g, side);
        let start_key = (excess(weights, max), cut);
        let mut best_key = start_key;
        let mut best_len = 0;
        let mut moves: Vec<usize> = Vec::new();
        let mut locked = vec![false; n];
        let mut heaps: [BinaryHeap<(OrdF64, Reverse<usize>)>; 2] =
            [BinaryHeap::new(), BinaryHeap::new()];
        for u in 0..n {
            let boundary = g.edges(u).any(|(v, _)| side[v] != side[u]);
            if boundary || excess(weights, max) > 0.0 {
                heaps[side[u] as usize].push((OrdF64(gain[u]), Reverse(u)));
            }
        }
        let limit = 50.max(n / 100);
        let mut since_best = 0;
        loop {
            // candidate from each side, respecting the destination maximum
            let mut cand: Option<(f64, usize)> = None;
            for from in 0..2 {
                let to = 1 - from;
                let heap = &mut heaps[from];
                while let Some(&(OrdF64(gv), Reverse(u))) = heap.peek() {
                    if locked[u] || side[u] as usize != from || gv != gain[u] {
                        heap.pop();
                        continue;
                    }
                    break;
                }
                if let Some(&(OrdF64(gv), Reverse(u))) = heap.peek() {
                    let over = weights[from] > max[from];
                    let fits = weights[to] + g.vw[u] <= max[to];
                    if fits || over {
                        let pri = if over { gv + 1e18 } else { gv };
                        if cand.is_none_or(|(cg, _)| pri > cg) {
                            cand = Some((pri, u));
                        }
                    }
                }
            }
            let Some((_, u)) = cand else { break };
            let from = side[u] as usize;
            heaps[from].pop();
            cut -= gain[u];
            weights[from] -= g.vw[u];
            weights[1 - from] += g.vw[u];
            side[u] = !side[u];
            locked[u] = true;
            gain[u] = -gain[u];
            for (v, w) in g.edges(u) {
                // v's relation to u flipped
                if side[v] == side[u] {
                    gain[v] -= 2.0 * w;
                } else {
                    gain[v] += 2.0 * w;
                }
                if !locked[v] {
                    heaps[side[v] as usize].push((OrdF64(gain[v]), Reverse(v)));
                }
            }
            moves.push(u);
            let key = (excess(weights, max), cut);
            if key.0 < best_key.0 - 1e-9
                || (key.0 <= best_key.0 + 1e-9 && key.1 < best_key.1 - 1e-9)
            {
                best_key = key;
                best_len = moves.len();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > limit {
                    break;
                }
            }
        }
        for &u in &moves[best_len..] {
            side[u] = !side[u];
        }
        if best_len == 0 {
            break;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Balances parts to the final maximum, then moves boundary vertices to the
/// neighboring part they connect to most while that lowers the cut.
fn kway_refine(g: &Graph, labels: &mut [usize], k: usize, opts: &MetisOptions) {
    let n = g.n();
    let maxw = opts.balance * g.total_weight() / k as f64;
    let mut weights = vec![0.0; k];
    for u in 0..n {
        weights[labels[u]] += g.vw[u];
    }
    let mut conn = vec![0.0f64; k];
    let mut touched: Vec<usize> = Vec::new();
    let gather = |u: usize, labels: &[usize], conn: &mut Vec<f64>, touched: &mut Vec<usize>| {
        for &p in touched.iter() {
            conn[p] = 0.0;
        }
        touched.clear();
        for (v, w) in g.edges(u) {
            let p = labels[v];
            if conn[p] == 0.0 {
                touched.push(p);
            }
            conn[p] += w;
        }
    };

    // balance: drain overweight parts through the cheapest moves
    let mut guard = 0;
    while let Some(heavy) = (0..k).find(|&p| weights[p] > maxw + 1e-9) {
        guard += 1;
        if guard > n {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..n {
            if labels[u] != heavy {
                continue;
            }
            gather(u, labels, &mut conn, &mut touched);
            for p in 0..k {
                if p == heavy || weights[p] + g.vw[u] > maxw {
                    continue;
                }
                let gain = conn[p] - conn[heavy];
                if best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, u, p));
                }
            }
        }
        let Some((_, u, p)) = best else { break };
        weights[heavy] -= g.vw[u];
        weights[p] += g.vw[u];
        labels[u] = p;
    }

    for _ in 0..opts.refine_passes {
        let mut moved = false;
        for u in 0..n {
            let from = labels[u];
            gather(u, labels, &mut conn, &mut touched);
            let mut best: Option<(f64, usize)> = None;
            for &p in touched.iter() {
                if p == from || weights[p] + g.vw[u] > maxw {
                    continue;
                }
                let gain = conn[p] - conn[from];
                let better =
                    gain > 1e-12 || (gain.abs() <= 1e-12 && weights[p] + g.vw[u] < weights[from]);
                if better && best.is_none_or(|(bg, _)| gain > bg) {
                    best = Some((gain, p));
                }
            }
            if let Some((_, p)) = best {
                weights[from] -= g.vw[u];
                weights[p] += g.vw[u];
                labels[u] = p;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}
