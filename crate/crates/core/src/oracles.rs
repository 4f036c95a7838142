//! Brute-force reference implementations.
//!
//! Nothing here calls into the engines or the series arithmetic; only
//! `FieldPrime` scalar operations are shared.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use num_bigint::{BigInt, Sign};

use crate::error::{Error, Result};
use crate::field::FieldPrime;
use crate::graph::{bipartition, Graph};
use crate::poly::{PolyMatrix, TruncPoly};

/// Largest matrix accepted by [`oracle_rank`].
pub const RANK_ORACLE_CAP: usize = 64;
/// Largest vertex count accepted by the enumeration oracles.
pub const ENUM_ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankModulus {
    Prime(FieldPrime),
    Rational,
}

/// Rank by Gaussian elimination, modulo a prime or over the rationals.
pub fn oracle_rank(a: &[Vec<i64>], modulus: RankModulus) -> Result<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    if rows.max(cols) > RANK_ORACLE_CAP {
        return Err(Error::OracleScale { got: rows.max(cols), cap: RANK_ORACLE_CAP });
    }
    match modulus {
        RankModulus::Prime(p) => Ok(rank_mod_p(a, p)),
        RankModulus::Rational => Ok(rank_bareiss(a)),
    }
}

fn rank_mod_p(a: &[Vec<i64>], p: FieldPrime) -> usize {
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|&x| p.reduce_signed(x)).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][c] != 0) else { continue };
        m.swap(piv, rank);
        let inv = p.inv(m[rank][c]).expect("nonzero pivot");
        for r in 0..rows {
            if r != rank && m[r][c] != 0 {
                let f = p.mul(m[r][c], inv);
                for j in c..cols {
                    let s = p.mul(f, m[rank][j]);
                    m[r][j] = p.sub(m[r][j], s);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Fraction-free elimination; every intermediate is a minor of the input.
fn rank_bareiss(a: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][c].sign() != Sign::NoSign) else { continue };
        m.swap(piv, rank);
        for r in rank + 1..rows {
            for j in c + 1..cols {
                let v = (&m[r][j] * &m[rank][c] - &m[r][c] * &m[rank][j]) / &prev;
                m[r][j] = v;
            }
            m[r][c] = BigInt::default();
        }
        prev = m[rank][c].clone();
        rank += 1;
    }
    rank
}

/// Dijkstra from `s`; `None` when `t` is unreachable.
pub fn oracle_dist(g: &Graph, s: usize, t: usize) -> Option<u64> {
    let adj = g.adjacency();
    let mut dist = vec![u64::MAX; g.n()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == t {
            return Some(d);
        }
        for &(v, l) in &adj[u] {
            let nd = d + l;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    None
}

/// All-pairs distances by Floyd-Warshall.
pub fn oracle_dist_floyd(g: &Graph) -> Vec<Vec<Option<u64>>> {
    let n = g.n();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (u, v, l) in g.edges() {
        let better = |cur: Option<u64>| Some(cur.map_or(l, |c| c.min(l)));
        d[u][v] = better(d[u][v]);
        if !g.directed() {
            d[v][u] = better(d[v][u]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|c| ik + kj < c) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// Reachability by depth-first search.
pub fn oracle_reach(g: &Graph, s: usize, t: usize) -> bool {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n()];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(u) = stack.pop() {
        if u == t {
            return true;
        }
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

/// Maximum matching size of a bipartite graph by augmenting paths.
pub fn oracle_mcm(g: &Graph) -> Result<usize> {
    let pairs: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    let side = bipartition(g.n(), &pairs)?;
    let n = g.n();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &pairs {
        let (l, r) = if side[u] { (v, u) } else { (u, v) };
        adj[l].push(r);
    }
    let mut mate: Vec<Option<usize>> = vec![None; n];
    fn augment(u: usize, adj: &[Vec<usize>], mate: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &r in &adj[u] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if mate[r].is_none_or(|l| augment(l, adj, mate, seen)) {
                mate[r] = Some(u);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    for u in 0..n {
        if side[u] {
            continue;
        }
        let mut seen = vec![false; n];
        if augment(u, &adj, &mut mate, &mut seen) {
            size += 1;
        }
    }
    Ok(size)
}

/// Maximum matching size by exhaustive search over edge subsets (at most 20 edges).
pub fn oracle_mcm_exhaustive(g: &Graph) -> Result<usize> {
    let edges: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    if edges.len() > 20 {
        return Err(Error::OracleScale { got: edges.len(), cap: 20 });
    }
    fn best(i: usize, edges: &[(usize, usize)], used: &mut Vec<bool>) -> usize {
        if i == edges.len() {
            return 0;
        }
        let skip = best(i + 1, edges, used);
        let (u, v) = edges[i];
        if used[u] || used[v] {
            return skip;
        }
        used[u] = true;
        used[v] = true;
        let take = 1 + best(i + 1, edges, used);
        used[u] = false;
        used[v] = false;
        skip.max(take)
    }
    Ok(best(0, &edges, &mut vec![false; g.n()]))
}

/// A matching as a sorted edge list, with its weight.
pub type WeightedMatching = (Vec<(usize, usize)>, i64);

fn all_matchings(g: &Graph) -> Result<Vec<Vec<(usize, usize)>>> {
    if g.n() > ENUM_ORACLE_CAP {
        return Err(Error::OracleScale { got: g.n(), cap: ENUM_ORACLE_CAP });
    }
    let edges: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    let mut out = Vec::new();
    fn rec(i: usize, edges: &[(usize, usize)], used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if i == edges.len() {
            out.push(cur.clone());
            return;
        }
        rec(i + 1, edges, used, cur, out);
        let (u, v) = edges[i];
        if !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            cur.push((u, v));
            rec(i + 1, edges, used, cur, out);
            cur.pop();
            used[u] = false;
            used[v] = false;
        }
    }
    rec(0, &edges, &mut vec![false; g.n()], &mut Vec::new(), &mut out);
    Ok(out)
}

/// All perfect matchings with their weights under `w`.
pub fn oracle_enumerate_pms(g: &Graph, w: impl Fn(usize, usize) -> i64) -> Result<Vec<WeightedMatching>> {
    bipartition(g.n(), &g.edges().map(|(u, v, _)| (u, v)).collect::<Vec<_>>())?;
    Ok(all_matchings(g)?
        .into_iter()
        .filter(|m| 2 * m.len() == g.n())
        .map(|m| {
            let wt = m.iter().map(|&(u, v)| w(u, v)).sum();
            (m, wt)
        })
        .collect())
}

/// Generalized perfect matchings: every vertex not covered by a matching of `g`
/// takes its pendant edge (weight `pendant(v)`), every other pendant vertex its
/// weight-zero self-loop.
pub fn oracle_enumerate_gpms(
    g: &Graph,
    w: impl Fn(usize, usize) -> i64,
    pendant: impl Fn(usize) -> i64,
) -> Result<Vec<WeightedMatching>> {
    bipartition(g.n(), &g.edges().map(|(u, v, _)| (u, v)).collect::<Vec<_>>())?;
    Ok(all_matchings(g)?
        .into_iter()
        .map(|m| {
            let mut covered = vec![false; g.n()];
            let mut wt = 0;
            for &(u, v) in &m {
                covered[u] = true;
                covered[v] = true;
                wt += w(u, v);
            }
            wt += (0..g.n()).filter(|&v| !covered[v]).map(&pendant).sum::<i64>();
            (m, wt)
        })
        .collect())
}

/// `sum_{i=0..m} A^i` truncated at degree `m`, on sparse degree sets.
pub fn oracle_series_inverse(a: &PolyMatrix) -> Result<PolyMatrix> {
    let n = a.rows();
    let m = a.m();
    if a.cols() != n {
        return Err(Error::Dimension(format!("{}x{}", n, a.cols())));
    }
    let sets: Vec<Vec<Vec<usize>>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j).degrees()).collect()).collect();
    if sets.iter().flatten().any(|d| d.first() == Some(&0)) {
        return Err(Error::Parameter("entries must have zero constant term".into()));
    }
    let mut power: Vec<Vec<BTreeSet<usize>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BTreeSet::from([0]) } else { BTreeSet::new() }).collect())
        .collect();
    let mut sum = power.clone();
    for _ in 0..m {
        let mut next = vec![vec![BTreeSet::new(); n]; n];
        for i in 0..n {
            for l in 0..n {
                for &x in &sets[i][l] {
                    for j in 0..n {
                        for &y in &power[l][j] {
                            if x + y <= m && !next[i][j].insert(x + y) {
                                next[i][j].remove(&(x + y));
                            }
                        }
                    }
                }
            }
        }
        if next.iter().flatten().all(|s| s.is_empty()) {
            break;
        }
        for i in 0..n {
            for j in 0..n {
                for &d in &next[i][j] {
                    if !sum[i][j].insert(d) {
                        sum[i][j].remove(&d);
                    }
                }
            }
        }
        power = next;
    }
    let entries = sum
        .into_iter()
        .flatten()
        .map(|s| TruncPoly::from_degrees(&s.into_iter().collect::<Vec<_>>(), m))
        .collect();
    PolyMatrix::from_entries(n, n, m, entries)
}

/// Determinant over GF(2)[[x]] truncated at `m`, by dynamic programming over
/// column subsets (the permanent, which equals the determinant in
/// characteristic two). Entries are handled as plain coefficient bitmaps.
pub fn oracle_series_det(a: &PolyMatrix) -> Result<TruncPoly> {
    let n = a.rows();
    let m = a.m();
    if a.cols() != n {
        return Err(Error::Dimension(format!("{}x{}", n, a.cols())));
    }
    if n > ENUM_ORACLE_CAP {
        return Err(Error::OracleScale { got: n, cap: ENUM_ORACLE_CAP });
    }
    let entry: Vec<Vec<Vec<usize>>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j).degrees()).collect()).collect();
    // dp[mask]: rows 0..|mask| matched onto the columns in mask
    let mut dp = vec![vec![false; m + 1]; 1 << n];
    dp[0][0] = true;
    for mask in 1usize..1 << n {
        let row = mask.count_ones() as usize - 1;
        let mut acc = vec![false; m + 1];
        for j in (0..n).filter(|&j| mask >> j & 1 == 1) {
            let prev = &dp[mask ^ (1 << j)];
            for &x in &entry[row][j] {
                for (y, _) in prev.iter().enumerate().filter(|(_, &b)| b) {
                    if x + y <= m {
                        acc[x + y] ^= true;
                    }
                }
            }
        }
        dp[mask] = acc;
    }
    let degrees: Vec<usize> = dp[(1 << n) - 1].iter().enumerate().filter(|(_, &b)| b).map(|(d, _)| d).collect();
    Ok(TruncPoly::from_degrees(&degrees, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn p(x: u64) -> RankModulus {
        RankModulus::Prime(FieldPrime::new(x).unwrap())
    }

    #[test]
    fn series_det_examples() {
        let m = 6;
        assert!(oracle_series_det(&PolyMatrix::identity(3, m)).unwrap().is_one());
        let x = TruncPoly::monomial(1, m);
        let mut a = PolyMatrix::identity(2, m);
        a.set(0, 1, x.clone());
        a.set(1, 0, x.clone());
        // 1 + x^2
        assert_eq!(oracle_series_det(&a).unwrap(), TruncPoly::from_degrees(&[0, 2], m));
        a.set(1, 1, x);
        assert_eq!(oracle_series_det(&a).unwrap(), TruncPoly::from_degrees(&[1, 2], m));
        assert!(oracle_series_det(&PolyMatrix::zero(2, 3, m)).is_err());
    }

    #[test]
    fn rank_examples() {
        let i3 = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(oracle_rank(&i3, p(5)).unwrap(), 3);
        assert_eq!(oracle_rank(&vec![vec![0; 3]; 3], RankModulus::Rational).unwrap(), 0);
        assert_eq!(oracle_rank(&[vec![1, 2], vec![2, 4]], p(5)).unwrap(), 1);
        assert_eq!(oracle_rank(&[vec![2, 4], vec![1, 2]], RankModulus::Rational).unwrap(), 1);
        // det 6: full rank over Q and mod 5, rank 1 mod 2 and mod 3
        let a = vec![vec![2, 0], vec![0, 3]];
        assert_eq!(oracle_rank(&a, RankModulus::Rational).unwrap(), 2);
        assert_eq!(oracle_rank(&a, p(2)).unwrap(), 1);
        assert_eq!(oracle_rank(&a, p(3)).unwrap(), 1);
        assert!(oracle_rank(&vec![vec![0; 65]; 65], p(5)).is_err());
    }

    #[test]
    fn rational_rank_bounds_modular() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(1..7);
            let a: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..4)).collect()).collect();
            let q = oracle_rank(&a, RankModulus::Rational).unwrap();
            for x in [2, 3, 5, 1009] {
                assert!(oracle_rank(&a, p(x)).unwrap() <= q);
            }
            assert_eq!(oracle_rank(&a, p(1_000_003)).unwrap(), q);
        }
    }

    #[test]
    fn distance_oracles_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let n = rng.gen_range(1..9);
            let mut g = Graph::new(n, rng.gen_bool(0.7));
            for u in 0..n {
                for v in 0..n {
                    if u != v && !g.has_edge(u, v) && rng.gen_bool(0.3) {
                        g.insert(u, v, rng.gen_range(1..6)).unwrap();
                    }
                }
            }
            let fw = oracle_dist_floyd(&g);
            for s in 0..n {
                for t in 0..n {
                    assert_eq!(oracle_dist(&g, s, t), fw[s][t]);
                    assert_eq!(oracle_reach(&g, s, t), fw[s][t].is_some());
                }
            }
        }
        let g = Graph::from_edges(2, true, &[(0, 1, 7)]).unwrap();
        assert_eq!(oracle_dist(&g, 0, 0), Some(0));
        assert_eq!(oracle_dist(&g, 0, 1), Some(7));
        assert_eq!(oracle_dist(&g, 1, 0), None);
    }

    #[test]
    fn matching_oracles_agree() {
        let g = Graph::from_edges(2, false, &[(0, 1, 1)]).unwrap();
        assert_eq!(oracle_mcm(&g).unwrap(), 1);
        let k22 = Graph::from_edges(4, false, &[(0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1)]).unwrap();
        assert_eq!(oracle_mcm(&k22).unwrap(), 2);
        assert_eq!(oracle_enumerate_pms(&k22, |_, _| 0).unwrap().len(), 2);
        assert_eq!(oracle_enumerate_pms(&g, |_, _| 0).unwrap().len(), 1);
        assert_eq!(oracle_enumerate_gpms(&g, |_, _| 1, |_| 1).unwrap().len(), 2);
        let tri = Graph::from_edges(3, false, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(matches!(oracle_mcm(&tri), Err(Error::NotBipartite(_))));

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let mut g = Graph::new(16, false);
            while g.edge_count() < 16 {
                let (l, r) = (rng.gen_range(0..8), rng.gen_range(8..16));
                if !g.has_edge(l, r) {
                    g.insert(l, r, 1).unwrap();
                }
                if rng.gen_bool(0.1) {
                    break;
                }
            }
            assert_eq!(oracle_mcm(&g).unwrap(), oracle_mcm_exhaustive(&g).unwrap());
        }
    }

    #[test]
    fn series_inverse_examples() {
        let m = 6;
        assert!(oracle_series_inverse(&PolyMatrix::zero(3, 3, m)).unwrap().is_identity());
        let mut a = PolyMatrix::zero(2, 2, m);
        a.set(0, 1, TruncPoly::monomial(2, m));
        let s = oracle_series_inverse(&a).unwrap();
        assert_eq!(s, PolyMatrix::identity(2, m).add(&a).unwrap());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(24);
        for _ in 0..30 {
            let n = rng.gen_range(1..5);
            let m = rng.gen_range(1..20);
            let mut a = PolyMatrix::zero(n, n, m);
            for i in 0..n {
                for j in 0..n {
                    let degs: Vec<usize> = (1..=m).filter(|_| rng.gen_bool(0.2)).collect();
                    a.set(i, j, TruncPoly::from_degrees(&degs, m));
                }
            }
            let s = oracle_series_inverse(&a).unwrap();
            let ia = PolyMatrix::identity(n, m).add(&a).unwrap();
            assert!(ia.mul(&s).unwrap().is_identity());
        }
    }
}
