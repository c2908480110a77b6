//! Brute-force oracles and fixtures shared by the integration tests.
//!
//! Every oracle here is deliberately naive (dense matrices, all-pairs
//! enumeration, linear solves) and shares no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use echonet::corpus::Tweet;
use echonet::graph::{EngagementGraph, Semantics};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INF: usize = usize::MAX / 4;

/// Random directed graph over `n` nodes with edge probability `p` and
/// weights in 3..=6. Node ids are zero-padded so sorted order is index order.
pub fn random_graph(n: usize, p: f64, seed: u64) -> EngagementGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.push((ids[u].clone(), ids[v].clone(), rng.random_range(3..=6u32)));
            }
        }
    }
    EngagementGraph::from_edges(Semantics::Mention, 3, ids, edges).unwrap()
}

/// Dense 0/1 adjacency matrix in node index order.
pub fn adjacency(g: &EngagementGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for (u, v, _) in g.edges() {
        a[g.index_of(u).unwrap()][g.index_of(v).unwrap()] = true;
    }
    a
}

pub fn symmetrize(a: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| i != j && (a[i][j] || a[j][i])).collect()).collect()
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn floyd_warshall(a: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Number of shortest paths between every ordered pair, by layering on the
/// distance matrix.
pub fn path_counts(a: &[Vec<bool>], d: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&t| d[s][t] < INF).collect();
        order.sort_by_key(|&t| d[s][t]);
        sigma[s][s] = 1.0;
        for &t in order.iter().skip(1) {
            sigma[s][t] = (0..n)
                .filter(|&u| a[u][t] && d[s][u] < INF && d[s][u] + 1 == d[s][t])
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    sigma
}

/// Unnormalized betweenness by pair dependency enumeration.
pub fn betweenness_oracle(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    let d = floyd_warshall(a);
    let sigma = path_counts(a, &d);
    (0..n)
        .map(|v| {
            let mut total = 0.0;
            for s in 0..n {
                if s == v || d[s][v] >= INF {
                    continue;
                }
                for t in 0..n {
                    if t == v || t == s || d[v][t] >= INF || d[s][t] >= INF {
                        continue;
                    }
                    if d[s][v] + d[v][t] == d[s][t] {
                        total += sigma[s][v] * sigma[v][t] / sigma[s][t];
                    }
                }
            }
            total
        })
        .collect()
}

pub fn closeness_oracle(a: &[Vec<bool>]) -> Vec<f64> {
    let d = floyd_warshall(a);
    d.iter()
        .enumerate()
        .map(|(s, row)| {
            row.iter()
                .enumerate()
                .filter(|&(t, &x)| t != s && x < INF)
                .map(|(_, &x)| 1.0 / x as f64)
                .sum()
        })
        .collect()
}

/// Triangles per node of the undirected simplification, by triple enumeration.
pub fn triangles_oracle(a: &[Vec<bool>]) -> Vec<usize> {
    let s = symmetrize(a);
    let n = s.len();
    let mut per = vec![0; n];
    for i in 0..n {
        for j in i + 1..n {
            if !s[i][j] {
                continue;
            }
            for k in j + 1..n {
                if s[i][k] && s[j][k] {
                    per[i] += 1;
                    per[j] += 1;
                    per[k] += 1;
                }
            }
        }
    }
    per
}

pub fn reachability(a: &[Vec<bool>]) -> Vec<Vec<bool>> {
    floyd_warshall(a)
        .into_iter()
        .map(|row| row.into_iter().map(|x| x < INF).collect())
        .collect()
}

/// Components as sorted index lists, ordered by smallest member.
pub fn components_oracle(a: &[Vec<bool>], strong: bool) -> Vec<Vec<usize>> {
    let r = if strong { reachability(a) } else { reachability(&symmetrize(a)) };
    let n = a.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| r[i][j] && r[j][i]).collect();
        for &j in &comp {
            seen[j] = true;
        }
        out.push(comp);
    }
    out
}

pub fn diameter_oracle(a: &[Vec<bool>]) -> usize {
    floyd_warshall(&symmetrize(a))
        .into_iter()
        .flatten()
        .filter(|&x| x < INF)
        .max()
        .unwrap_or(0)
}

/// Dense weight matrix in node index order (0 where there is no edge).
pub fn weights(g: &EngagementGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut w = vec![vec![0.0; n]; n];
    for (u, v, k) in g.edges() {
        w[g.index_of(u).unwrap()][g.index_of(v).unwrap()] = f64::from(k);
    }
    w
}

pub fn pagerank_oracle(a: &[Vec<bool>], damping: f64) -> Vec<f64> {
    let w: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&b| f64::from(u8::from(b))).collect()).collect();
    weighted_pagerank_oracle(&w, damping)
}

/// PageRank by a dense linear solve: `(I - d P^T - (d/n) 1 z^T) x = (1-d)/n 1`
/// where `z` marks dangling nodes and `P` is row-normalized `w`.
pub fn weighted_pagerank_oracle(w: &[Vec<f64>], damping: f64) -> Vec<f64> {
    let n = w.len();
    let out: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut m = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        for v in 0..n {
            if out[u] == 0.0 {
                m[(v, u)] -= damping / n as f64;
            } else if w[u][v] > 0.0 {
                m[(v, u)] -= damping * w[u][v] / out[u];
            }
        }
    }
    let b = DVector::from_element(n, (1.0 - damping) / n as f64);
    let x = m.lu().solve(&b).expect("non-singular");
    let total = x.sum();
    x.iter().map(|v| v / total).collect()
}

/// Outcome of checking an eigenvector centrality result against linear algebra.
pub enum EigenCheck {
    /// Residual and (when the eigenspace is simple) direction both match.
    Verified,
    /// The library declined to converge and the dominant eigenvalue is zero
    /// or not simple, so no unique answer exists.
    JustifiedFailure,
    Mismatch(String),
}

/// Whether the directed graph contains a cycle (Kahn's algorithm).
pub fn has_cycle(a: &[Vec<bool>]) -> bool {
    let n = a.len();
    let mut indeg: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| a[i][j]).count()).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut removed = 0;
    while let Some(i) = queue.pop() {
        removed += 1;
        for j in 0..n {
            if a[i][j] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push(j);
                }
            }
        }
    }
    removed < n
}

/// Check `x` against the dominant eigenpair of `A^T` (in-edge convention).
pub fn check_eigenvector(a: &[Vec<bool>], result: Result<Vec<f64>, String>, tol: f64) -> EigenCheck {
    let n = a.len();
    let at = DMatrix::<f64>::from_fn(n, n, |i, j| if a[j][i] { 1.0 } else { 0.0 });
    // For a non-negative matrix the spectrum is the union of the spectra of
    // its strongly connected blocks, and each block's Perron root is simple.
    // Computing roots per block avoids the ill-conditioned Jordan structure
    // of the full matrix.
    let roots: Vec<f64> = components_oracle(a, true)
        .iter()
        .map(|c| {
            let m = DMatrix::<f64>::from_fn(c.len(), c.len(), |i, j| if a[c[j]][c[i]] { 1.0 } else { 0.0 });
            m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .collect();
    let lambda = roots.iter().copied().fold(0.0, f64::max);
    let multiplicity = roots.iter().filter(|&&r| (r - lambda).abs() < 1e-9).count();
    let x = match result {
        Ok(x) => x,
        Err(e) => {
            return if !has_cycle(a) || multiplicity > 1 {
                EigenCheck::JustifiedFailure
            } else {
                EigenCheck::Mismatch(format!("failed although lambda={lambda} is simple: {e}"))
            };
        }
    };
    let xv = DVector::from_vec(x.clone());
    if (xv.norm() - 1.0).abs() > tol {
        return EigenCheck::Mismatch(format!("norm {}", xv.norm()));
    }
    if x.iter().any(|&v| v < -tol) {
        return EigenCheck::Mismatch("negative entry".into());
    }
    let residual = (&at * &xv - lambda * &xv).amax();
    if residual > tol * lambda.max(1.0) * 10.0 {
        return EigenCheck::Mismatch(format!("residual {residual} at lambda {lambda}"));
    }
    // Direction check against the null space of A^T - lambda I when it is a line.
    let shifted = &at - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let small: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] < 1e-7).collect();
    if small.len() == 1 {
        let vt = svd.v_t.expect("requested");
        let mut null: Vec<f64> = vt.row(small[0]).iter().copied().collect();
        let sign = if null.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        null.iter_mut().for_each(|v| *v *= sign);
        let diff = null.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        if diff > tol * 10.0 {
            return EigenCheck::Mismatch(format!("direction differs by {diff}"));
        }
    }
    EigenCheck::Verified
}

/// Rand Index by enumerating unordered pairs.
pub fn rand_index_pairs<A: PartialEq, B: PartialEq>(a: &[A], b: &[B]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            agree += usize::from((a[i] == a[j]) == (b[i] == b[j]));
        }
    }
    agree as f64 / total as f64
}

/// Relative error with a small absolute floor.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Minimal tweet with optional engagement fields.
pub fn tweet(id: &str, author: &str, text: &str) -> Tweet {
    Tweet {
        tweet_id: id.into(),
        author_id: author.into(),
        text: text.into(),
        created_at: "2016-05-01T00:00:00Z".parse().unwrap(),
        mentions: vec![],
        hashtags: vec![],
        urls: 0,
        in_reply_to_user: None,
        retweet_of_user: None,
        language: "en".into(),
    }
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn scores_by_index(map: &BTreeMap<String, f64>) -> Vec<f64> {
    map.values().copied().collect()
}

/// Every structural promise of `scan_echoes` on one input.
pub fn check_span_invariants(text: &str, spans: &[echonet::lexer::EchoSpan]) -> Result<(), String> {
    use echonet::lexer::EchoVariant;
    let mut last_end = 0;
    for s in spans {
        if s.start >= s.end || s.end > text.len() {
            return Err(format!("bad offsets {}..{}", s.start, s.end));
        }
        if s.start < last_end {
            return Err(format!("span at {} overlaps or is out of order", s.start));
        }
        last_end = s.end;
        if s.open_len < 3 || s.close_len < 3 {
            return Err(format!("run lengths {}/{}", s.open_len, s.close_len));
        }
        let (lead, tail) = match s.variant {
            EchoVariant::Reversed => (')', '('),
            _ => ('(', ')'),
        };
        let raw = &text[s.start..s.end];
        let inner_len = s.end - s.start - s.open_len - s.close_len;
        let inner = &raw[s.open_len..s.open_len + inner_len];
        let rebuilt = format!("{}{}{}", lead.to_string().repeat(s.open_len), inner, tail.to_string().repeat(s.close_len));
        if rebuilt != raw {
            return Err(format!("round trip failed for {raw:?}"));
        }
        if inner.contains(['(', ')']) {
            return Err(format!("inner contains a parenthesis: {inner:?}"));
        }
        if s.inner != inner.trim() || s.inner.is_empty() {
            return Err(format!("inner {:?} vs raw {inner:?}", s.inner));
        }
        let expected = match s.variant {
            EchoVariant::Reversed => EchoVariant::Reversed,
            _ if s.open_len == 3 && s.close_len == 3 => EchoVariant::Standard,
            _ => EchoVariant::Lengthened,
        };
        if s.variant != expected {
            return Err(format!("variant {:?} for runs {}/{}", s.variant, s.open_len, s.close_len));
        }
        if s.variant == EchoVariant::Reversed && inner.contains('\n') {
            return Err("reversed span crosses a line".into());
        }
    }
    Ok(())
}

/// Random strings biased towards parentheses, whitespace and multi-byte text.
pub fn fuzz_string(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const PIECES: &[&str] = &["(", ")", "(((", ")))", " ", "\n", "a", "Z", "é", "日", "🙂", "#", "\t", "x y"];
    let len = rng.random_range(0..=max_len);
    let mut s = String::new();
    for _ in 0..len {
        if rng.random_bool(0.1) {
            s.push(char::from_u32(rng.random_range(0x20..0x3000)).unwrap_or('?'));
        } else {
            s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        }
    }
    s
}
