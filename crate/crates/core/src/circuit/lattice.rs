use crate::error::{Error, Result};

/// Qubit connectivity. Square lattices index qubit `(r, c)` as `r * cols + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lattice {
    Chain { n: usize, periodic: bool },
    Square { rows: usize, cols: usize, periodic: bool },
}

impl Lattice {
    pub fn num_qubits(&self) -> usize {
        match *self {
            Lattice::Chain { n, .. } => n,
            Lattice::Square { rows, cols, .. } => rows * cols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits() == 0 {
            return Err(Error::InvalidCircuit("lattice has no qubits".into()));
        }
        Ok(())
    }

    /// Undirected neighbor pairs `(a, b)` with `a < b`, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        let mut push = |a: usize, b: usize| {
            if a == b {
                return;
            }
            let e = (a.min(b), a.max(b));
            if !out.contains(&e) {
                out.push(e);
            }
        };
        match *self {
            Lattice::Chain { n, periodic } => {
                for i in 0..n.saturating_sub(1) {
                    push(i, i + 1);
                }
                if periodic && n > 2 {
                    push(n - 1, 0);
                }
            }
            Lattice::Square {
                rows,
                cols,
                periodic,
            } => {
                let idx = |r: usize, c: usize| r * cols + c;
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            push(idx(r, c), idx(r, c + 1));
                        } else if periodic && cols > 2 {
                            push(idx(r, c), idx(r, 0));
                        }
                        if r + 1 < rows {
                            push(idx(r, c), idx(r + 1, c));
                        } else if periodic && rows > 2 {
                            push(idx(r, c), idx(0, c));
                        }
                    }
                }
            }
        }
        out
    }

    /// Center qubit: `n / 2` on a chain, `(rows / 2, cols / 2)` on a grid.
    pub fn center(&self) -> usize {
        match *self {
            Lattice::Chain { n, .. } => n / 2,
            Lattice::Square { rows, cols, .. } => (rows / 2) * cols + cols / 2,
        }
    }

    /// Greedy edge coloring: edges split into sublayers with disjoint supports.
    pub fn edge_coloring(&self) -> Vec<Vec<(usize, usize)>> {
        let mut colors: Vec<Vec<(usize, usize)>> = Vec::new();
        for (a, b) in self.edges() {
            let slot = colors
                .iter()
                .position(|c| c.iter().all(|&(x, y)| x != a && x != b && y != a && y != b));
            match slot {
                Some(i) => colors[i].push((a, b)),
                None => colors.push(vec![(a, b)]),
            }
        }
        colors
    }
}
