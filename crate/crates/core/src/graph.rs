//! Weighted neighborhood graphs with row-normalized weights.

use serde::{Deserialize, Serialize};

use crate::error::{QsafError, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Vertices with neighborhoods `N_i` (always containing `i`) and nonnegative
/// weights `w_ik` that sum to one over each neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    neighborhoods: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    symmetric: bool,
}

impl WeightedGraph {
    /// Validates neighborhoods and already-normalized weights.
    pub fn new(neighborhoods: Vec<Vec<usize>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = neighborhoods.len();
        if n == 0 {
            return Err(QsafError::InvalidArgument("graph has no vertices".into()));
        }
        if weights.len() != n {
            return Err(QsafError::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        for (i, (nbrs, ws)) in neighborhoods.iter().zip(&weights).enumerate() {
            if nbrs.len() != ws.len() {
                return Err(QsafError::DimensionMismatch {
                    expected: nbrs.len(),
                    found: ws.len(),
                });
            }
            if !nbrs.contains(&i) {
                return Err(QsafError::InvalidArgument(format!(
                    "vertex {i} is missing from its own neighborhood"
                )));
            }
            let mut sorted = nbrs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != nbrs.len() {
                return Err(QsafError::InvalidArgument(format!(
                    "duplicate neighbor of vertex {i}"
                )));
            }
            if let Some(&k) = nbrs.iter().find(|&&k| k >= n) {
                return Err(QsafError::InvalidArgument(format!(
                    "neighbor {k} of vertex {i} is out of range"
                )));
            }
            if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(QsafError::InvalidArgument(format!(
                    "negative or non-finite weight at vertex {i}"
                )));
            }
            let sum: f64 = ws.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(QsafError::InvalidArgument(format!(
                    "weights of vertex {i} sum to {sum}, not 1"
                )));
            }
        }
        Ok(Self {
            neighborhoods,
            weights,
            symmetric: false,
        })
    }

    /// Row-normalizes nonnegative raw weights before validation.
    pub fn from_raw_weights(neighborhoods: Vec<Vec<usize>>, raw: Vec<Vec<f64>>) -> Result<Self> {
        let mut weights = Vec::with_capacity(raw.len());
        for (i, row) in raw.into_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(QsafError::InvalidArgument(format!(
                    "raw weights of vertex {i} do not have a positive sum"
                )));
            }
            weights.push(row.into_iter().map(|w| w / sum).collect());
        }
        Self::new(neighborhoods, weights)
    }

    /// Uniform weights `1/|N_i|`.
    pub fn uniform(neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        let weights = neighborhoods
            .iter()
            .map(|nbrs| vec![1.0 / nbrs.len() as f64; nbrs.len()])
            .collect();
        Self::new(neighborhoods, weights)
    }

    /// Validates `w_ij = w_ji` and mutual membership, then sets the flag.
    pub fn into_symmetric(mut self) -> Result<Self> {
        for i in 0..self.vertex_count() {
            for (&j, &w) in self.neighborhoods[i].iter().zip(&self.weights[i]) {
                match self.weight(j, i) {
                    Some(back) if (back - w).abs() <= ROW_SUM_TOL => {}
                    _ => {
                        return Err(QsafError::InvalidArgument(format!(
                            "weights between {i} and {j} are not symmetric"
                        )))
                    }
                }
            }
        }
        self.symmetric = true;
        Ok(self)
    }

    /// A symmetric graph on undirected `edges`: every edge gets weight
    /// `1/(d_max + 1)` and the self-loop takes the remainder.
    pub fn symmetric_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(QsafError::InvalidArgument(format!("edge ({a}, {b}) out of range")));
            }
            if a == b || nbrs[a].contains(&b) {
                continue;
            }
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        let max_degree = nbrs.iter().map(|v| v.len() - 1).max().unwrap_or(0);
        let w = 1.0 / (max_degree as f64 + 1.0);
        let weights = nbrs
            .iter()
            .map(|v| {
                let mut row = vec![w; v.len()];
                row[0] = 1.0 - w * (v.len() - 1) as f64;
                row
            })
            .collect();
        Self::new(nbrs, weights)?.into_symmetric()
    }

    /// Complete graph with uniform weights `1/n`.
    pub fn complete(n: usize) -> Result<Self> {
        let nbrs = (0..n)
            .map(|i| {
                let mut v = vec![i];
                v.extend((0..n).filter(|&k| k != i));
                v
            })
            .collect();
        Self::uniform(nbrs)?.into_symmetric()
    }

    /// A single vertex with `N_0 = {0}`, `w_00 = 1`.
    pub fn single_vertex() -> Self {
        Self {
            neighborhoods: vec![vec![0]],
            weights: vec![vec![1.0]],
            symmetric: true,
        }
    }

    /// Neighborhoods of a `rows x cols` grid with a `(2r+1)^2` stencil,
    /// clipped at the border. Vertex `(y, x)` has index `y * cols + x`.
    pub fn grid_neighborhoods(rows: usize, cols: usize, radius: usize) -> Vec<Vec<usize>> {
        let r = radius as isize;
        let mut out = Vec::with_capacity(rows * cols);
        for y in 0..rows as isize {
            for x in 0..cols as isize {
                let mut v = vec![(y as usize) * cols + x as usize];
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (yy, xx) = (y + dy, x + dx);
                        if (dy, dx) == (0, 0) || yy < 0 || xx < 0 || yy >= rows as isize || xx >= cols as isize {
                            continue;
                        }
                        v.push(yy as usize * cols + xx as usize);
                    }
                }
                out.push(v);
            }
        }
        out
    }

    /// Grid with uniform stencil weights.
    pub fn grid(rows: usize, cols: usize, radius: usize) -> Result<Self> {
        Self::uniform(Self::grid_neighborhoods(rows, cols, radius))
    }

    /// Periodic grid with uniform weights; symmetric because every stencil
    /// has the same size.
    pub fn torus(rows: usize, cols: usize, radius: usize) -> Result<Self> {
        let r = radius as isize;
        let mut nbrs = Vec::with_capacity(rows * cols);
        for y in 0..rows as isize {
            for x in 0..cols as isize {
                let me = y as usize * cols + x as usize;
                let mut v = vec![me];
                for dy in -r..=r {
                    for dx in -r..=r {
                        let yy = (y + dy).rem_euclid(rows as isize) as usize;
                        let xx = (x + dx).rem_euclid(cols as isize) as usize;
                        let k = yy * cols + xx;
                        if !v.contains(&k) {
                            v.push(k);
                        }
                    }
                }
                nbrs.push(v);
            }
        }
        Self::uniform(nbrs)?.into_symmetric()
    }

    pub fn vertex_count(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    /// `(k, w_ik)` pairs of vertex `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighborhoods[i].iter().copied().zip(self.weights[i].iter().copied())
    }

    /// `w_ij`, or `None` when `j` is not a neighbor of `i`.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighborhoods[i]
            .iter()
            .position(|&k| k == j)
            .map(|p| self.weights[i][p])
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertex_count();
        if perm.len() != n {
            return Err(QsafError::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut nbrs = vec![Vec::new(); n];
        let mut ws = vec![Vec::new(); n];
        for i in 0..n {
            nbrs[perm[i]] = self.neighborhoods[i].iter().map(|&k| perm[k]).collect();
            ws[perm[i]] = self.weights[i].clone();
        }
        let g = Self::new(nbrs, ws)?;
        if self.symmetric {
            g.into_symmetric()
        } else {
            Ok(g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rows_are_normalized_and_contain_self() {
        let g = WeightedGraph::grid(4, 5, 1).unwrap();
        assert_eq!(g.vertex_count(), 20);
        assert_eq!(g.neighborhood(0).len(), 4);
        assert_eq!(g.neighborhood(6).len(), 9);
        for i in 0..20 {
            assert_eq!(g.neighborhood(i)[0], i);
            assert!((g.weights(i).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(!g.is_symmetric());
    }

    #[test]
    fn torus_is_symmetric() {
        let g = WeightedGraph::torus(4, 4, 1).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g.neighborhood(0).len(), 9);
    }

    #[test]
    fn clipped_grid_is_not_symmetric() {
        assert!(WeightedGraph::grid(3, 3, 1).unwrap().into_symmetric().is_err());
    }

    #[test]
    fn edge_graph_is_symmetric() {
        let g = WeightedGraph::symmetric_from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g.weight(0, 2), g.weight(2, 0));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(WeightedGraph::new(vec![vec![0, 1], vec![1]], vec![vec![0.5, 0.6], vec![1.0]]).is_err());
        assert!(WeightedGraph::new(vec![vec![1], vec![1]], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(WeightedGraph::new(vec![vec![0, 5]], vec![vec![0.5, 0.5]]).is_err());
        assert!(WeightedGraph::new(vec![vec![0, 0]], vec![vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn raw_weights_are_normalized() {
        let g = WeightedGraph::from_raw_weights(vec![vec![0, 1], vec![1, 0]], vec![vec![1.0, 3.0], vec![2.0, 2.0]])
            .unwrap();
        assert_eq!(g.weights(0), &[0.25, 0.75]);
    }

    #[test]
    fn permutation_relabels() {
        let g = WeightedGraph::symmetric_from_edges(3, &[(0, 1)]).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.weight(2, 0), g.weight(0, 1));
        assert!(p.is_symmetric());
    }
}
