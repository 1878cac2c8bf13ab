//! Input problems: 3-CNF formulas in DIMACS form and small undirected graphs,
//! together with the brute-force oracles the instance builders are checked
//! against, and the two formula/graph transformations the builders use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling for exhaustive assignment sweeps (2^24), overridable per call.
pub const DEFAULT_MAX_ASSIGNMENTS: u64 = 1 << 24;
/// Hard ceiling for Hamiltonian-path backtracking, overridable per call.
pub const DEFAULT_MAX_HAM_VERTICES: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("clause {0} repeats a variable; width-3 clauses need three distinct variables")]
    RepeatedVariable(usize),
    #[error("clause {0} has a literal out of range")]
    LiteralOutOfRange(usize),
    #[error("expected {expected} clauses, found {found}")]
    ClauseCountMismatch { expected: usize, found: usize },
    #[error("assignment length {got} does not match variable count {want}")]
    AssignmentLength { got: usize, want: usize },
    #[error("problem size exceeds the brute-force cutoff ({0})")]
    CutoffExceeded(String),
    #[error("graph edge ({0}, {1}) is invalid: {2}")]
    BadEdge(usize, usize, String),
}

/// A width-3 clause as three signed literals (`3` means x3, `-3` means ¬x3).
pub type Clause = [i32; 3];

/// A 3-CNF formula over variables `1..=n_vars`.
///
/// Clauses parsed from DIMACS always have three pairwise distinct variables.
/// [`CnfFormula::augment`] produces clauses of the form (x_i ∨ ¬x_i ∨ ·) that
/// repeat a variable; those never re-enter the strict builders, which call
/// [`CnfFormula::require_distinct_triples`] up front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub n_vars: u32,
    pub clauses: Vec<Clause>,
}

/// One boolean per variable, index 0 holding x1.
pub type Assignment = Vec<bool>;

impl CnfFormula {
    pub fn new(n_vars: u32, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        let f = CnfFormula { n_vars, clauses };
        for (i, c) in f.clauses.iter().enumerate() {
            for &lit in c {
                if lit == 0 || lit.unsigned_abs() > f.n_vars {
                    return Err(FormulaError::LiteralOutOfRange(i + 1));
                }
            }
        }
        Ok(f)
    }

    /// Checks that every clause mentions three distinct variables, which the
    /// unlink/unlinking/alternating builders require.
    pub fn require_distinct_triples(&self) -> Result<(), FormulaError> {
        for (i, c) in self.clauses.iter().enumerate() {
            let v: Vec<u32> = c.iter().map(|l| l.unsigned_abs()).collect();
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(FormulaError::RepeatedVariable(i + 1));
            }
        }
        Ok(())
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, FormulaError> {
        if a.len() != self.n_vars as usize {
            return Err(FormulaError::AssignmentLength {
                got: a.len(),
                want: self.n_vars as usize,
            });
        }
        Ok(self.clauses.iter().all(|c| {
            c.iter().any(|&lit| {
                let val = a[(lit.unsigned_abs() - 1) as usize];
                if lit > 0 {
                    val
                } else {
                    !val
                }
            })
        }))
    }

    /// All satisfying assignments in increasing order of their bitmask
    /// (bit i = x_{i+1}). Errors out instead of sweeping past `max`.
    pub fn brute_force_sat(&self, max: u64) -> Result<Vec<Assignment>, FormulaError> {
        let n = self.n_vars;
        if n >= 63 || (1u64 << n) > max {
            return Err(FormulaError::CutoffExceeded(format!(
                "2^{n} assignments > {max}"
            )));
        }
        let mut out = Vec::new();
        for mask in 0u64..(1 << n) {
            let a: Assignment = (0..n).map(|i| mask & (1 << i) != 0).collect();
            if self.eval(&a)? {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Doubles the variable count and appends, for each original variable i,
    /// the two clauses (x_i ∨ ¬x_i ∨ x_{n+i}) and (x_i ∨ ¬x_i ∨ ¬x_{n+i}).
    ///
    /// Both added clauses are tautologies, so satisfiability is unchanged,
    /// but every variable of the new formula now appears in some clause and
    /// the clause count becomes m + 2n over 2n variables.
    pub fn augment(&self) -> CnfFormula {
        let n = self.n_vars as i32;
        let mut clauses = self.clauses.clone();
        for i in 1..=n {
            clauses.push([i, -i, n + i]);
            clauses.push([i, -i, -(n + i)]);
        }
        CnfFormula {
            n_vars: self.n_vars * 2,
            clauses,
        }
    }
}

/// Parses DIMACS CNF. Comment lines start with `c`; the header is
/// `p cnf <vars> <clauses>`; every clause must contain exactly three literals
/// over three distinct variables and be terminated by `0`.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormulaError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut pending: Vec<i32> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(FormulaError::Parse(ln, "duplicate header".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(FormulaError::Parse(ln, "expected `p cnf <n> <m>`".into()));
            }
            let n = parts[2]
                .parse::<u32>()
                .map_err(|e| FormulaError::Parse(ln, format!("bad variable count: {e}")))?;
            let m = parts[3]
                .parse::<usize>()
                .map_err(|e| FormulaError::Parse(ln, format!("bad clause count: {e}")))?;
            header = Some((n, m));
            continue;
        }
        if header.is_none() {
            return Err(FormulaError::Parse(ln, "clause before header".into()));
        }
        for tok in line.split_whitespace() {
            let lit = tok
                .parse::<i32>()
                .map_err(|e| FormulaError::Parse(ln, format!("bad literal `{tok}`: {e}")))?;
            if lit == 0 {
                if pending.len() != 3 {
                    return Err(FormulaError::Parse(
                        ln,
                        format!("clause has {} literals, need exactly 3", pending.len()),
                    ));
                }
                clauses.push([pending[0], pending[1], pending[2]]);
                pending.clear();
            } else {
                pending.push(lit);
            }
        }
    }
    if !pending.is_empty() {
        return Err(FormulaError::Parse(0, "unterminated clause".into()));
    }
    let (n, m) = header.ok_or_else(|| FormulaError::Parse(0, "missing header".into()))?;
    if clauses.len() != m {
        return Err(FormulaError::ClauseCountMismatch {
            expected: m,
            found: clauses.len(),
        });
    }
    let f = CnfFormula::new(n, clauses)?;
    f.require_distinct_triples()?;
    Ok(f)
}

/// A simple undirected graph on vertices `0..n` (parsed input is 1-indexed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    /// Normalized to `u < v`, sorted, duplicate-free.
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, raw_edges: &[(usize, usize)]) -> Result<Self, FormulaError> {
        let mut edges = Vec::with_capacity(raw_edges.len());
        for &(u, v) in raw_edges {
            if u == v {
                return Err(FormulaError::BadEdge(u, v, "self-loop".into()));
            }
            if u >= n || v >= n {
                return Err(FormulaError::BadEdge(u, v, "vertex out of range".into()));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            let w = edges.windows(2).find(|w| w[0] == w[1]).unwrap();
            return Err(FormulaError::BadEdge(w[0].0, w[0].1, "duplicate edge".into()));
        }
        Ok(Graph { n, edges })
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Lexicographically first Hamiltonian path found by backtracking, if any.
    pub fn brute_force_ham_path(
        &self,
        max_vertices: usize,
    ) -> Result<Option<Vec<usize>>, FormulaError> {
        if self.n > max_vertices {
            return Err(FormulaError::CutoffExceeded(format!(
                "{} vertices > {max_vertices}",
                self.n
            )));
        }
        if self.n == 0 {
            return Ok(Some(Vec::new()));
        }
        let adj = self.adjacency();
        let mut adj_sorted = adj;
        for nb in &mut adj_sorted {
            nb.sort_unstable();
        }
        let mut path = Vec::with_capacity(self.n);
        let mut used = vec![false; self.n];
        fn dfs(
            n: usize,
            adj: &[Vec<usize>],
            path: &mut Vec<usize>,
            used: &mut [bool],
        ) -> bool {
            if path.len() == n {
                return true;
            }
            let candidates: Vec<usize> = match path.last() {
                None => (0..n).collect(),
                Some(&v) => adj[v].clone(),
            };
            for w in candidates {
                if !used[w] {
                    used[w] = true;
                    path.push(w);
                    if dfs(n, adj, path, used) {
                        return true;
                    }
                    path.pop();
                    used[w] = false;
                }
            }
            false
        }
        if dfs(self.n, &adj_sorted, &mut path, &mut used) {
            Ok(Some(path))
        } else {
            Ok(None)
        }
    }

    /// Replaces edge `(u, v)` by two pendant vertices: the edge is removed and
    /// new vertices `n`, `n+1` are attached to `u` and `v` respectively.
    ///
    /// The result has a Hamiltonian path exactly when the input has a
    /// Hamiltonian cycle through the removed edge, since any Hamiltonian path
    /// of the output must run pendant-to-pendant.
    pub fn replace_forced_edge(&self, u: usize, v: usize) -> Result<Graph, FormulaError> {
        let key = (u.min(v), u.max(v));
        if !self.edges.contains(&key) {
            return Err(FormulaError::BadEdge(u, v, "edge not in graph".into()));
        }
        let mut edges: Vec<(usize, usize)> =
            self.edges.iter().copied().filter(|&e| e != key).collect();
        edges.push((u, self.n));
        edges.push((v, self.n + 1));
        Graph::new(self.n + 2, &edges)
    }
}

/// Parses the plain graph format: first line `n m`, then `m` lines `u v`
/// with 1-indexed vertices.
pub fn parse_graph(text: &str) -> Result<Graph, FormulaError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, first) = lines
        .next()
        .ok_or_else(|| FormulaError::Parse(0, "empty graph file".into()))?;
    let head: Vec<&str> = first.split_whitespace().collect();
    if head.len() != 2 {
        return Err(FormulaError::Parse(ln + 1, "expected `n m`".into()));
    }
    let n = head[0]
        .parse::<usize>()
        .map_err(|e| FormulaError::Parse(ln + 1, format!("bad n: {e}")))?;
    let m = head[1]
        .parse::<usize>()
        .map_err(|e| FormulaError::Parse(ln + 1, format!("bad m: {e}")))?;
    let mut edges = Vec::with_capacity(m);
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(FormulaError::Parse(ln + 1, "expected `u v`".into()));
        }
        let u = parts[0]
            .parse::<usize>()
            .map_err(|e| FormulaError::Parse(ln + 1, format!("bad u: {e}")))?;
        let v = parts[1]
            .parse::<usize>()
            .map_err(|e| FormulaError::Parse(ln + 1, format!("bad v: {e}")))?;
        if u == 0 || v == 0 {
            return Err(FormulaError::Parse(ln + 1, "vertices are 1-indexed".into()));
        }
        edges.push((u - 1, v - 1));
    }
    if edges.len() != m {
        return Err(FormulaError::ClauseCountMismatch {
            expected: m,
            found: edges.len(),
        });
    }
    Graph::new(n, &edges)
}
