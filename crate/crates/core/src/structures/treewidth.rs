/// Exact treewidth of a graph with at most 20 vertices given as adjacency
/// bitmasks, by dynamic programming over sets of eliminated vertices:
/// `TW(S) = min_{v in S} max(TW(S - v), |Q(S - v, v)|)` where `Q(S, v)` are
/// the vertices outside `S ∪ {v}` reachable from `v` through `S`.
pub fn treewidth_of_graph(adj: &[u32]) -> usize {
    let n = adj.len();
    if n <= 1 {
        return 0;
    }
    assert!(n <= 20, "exact treewidth limited to small graphs");
    let full: u32 = (1u32 << n) - 1;
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut border = 0u32;
        while let Some(u) = stack.pop() {
            let nb = adj[u] & !seen;
            border |= nb & !s;
            let mut inner = nb & s;
            seen |= nb & s;
            while inner != 0 {
                let w = inner.trailing_zeros() as usize;
                inner &= inner - 1;
                stack.push(w);
            }
        }
        border & !(1 << v)
    };
    let mut dp = vec![u8::MAX; 1usize << n];
    dp[0] = 0;
    for s in 1..=full {
        let mut best = u8::MAX;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let w = dp[rest as usize].max(q(rest, v).count_ones() as u8);
            best = best.min(w);
        }
        dp[s as usize] = best;
    }
    dp[full as usize] as usize
}
