use std::io::{self, Write};

/// Square or rectangular matrix in compressed sparse row layout with sorted
/// column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Matrix with the given sorted pattern and zero values.
    pub fn from_pattern(n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        let nnz = col_idx.len();
        CsrMatrix { n_rows: row_ptr.len() - 1, n_cols, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of entry `(i, j)` in `values`, if it is in the pattern.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.col_idx[start..self.row_ptr[i + 1]].binary_search(&j).ok().map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                col_idx[next[j]] = i;
                values[next[j]] = a;
                next[j] += 1;
            }
        }
        CsrMatrix { n_rows: self.n_cols, n_cols: self.n_rows, row_ptr, col_idx, values }
    }

    /// Dense row-major copy, for tests and small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                row[j] += a;
            }
        }
        d
    }

    /// Writes one `row col value` line per stored entry, values with 17
    /// significant digits.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                writeln!(out, "{i} {j} {a:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Contiguous range of unknowns belonging to one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldBlock {
    pub name: &'static str,
    pub range: std::ops::Range<usize>,
}

/// Linear system over the concatenated `(u, p, ψ)` unknowns.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub blocks: Vec<FieldBlock>,
}

impl BlockSystem {
    pub fn block(&self, name: &str) -> Option<&FieldBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)]);
        assert_eq!(m.row_ptr, vec![0, 2, 3]);
        assert_eq!(m.col_idx, vec![0, 2, 1]);
        assert_eq!(m.values, vec![2.0, 1.5, -1.0]);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![6.5, -2.0]);
        let t = m.transpose();
        assert_eq!(t.to_dense(), vec![vec![2.0, 0.0], vec![0.0, -1.0], vec![1.5, 0.0]]);
    }

    #[test]
    fn coordinate_export() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0 / 3.0), (1, 0, -2.0)]);
        let mut out = Vec::new();
        m.write_coordinate(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s, "0 0 3.3333333333333331e-1\n1 0 -2.0000000000000000e0\n");
        let back: f64 = s.lines().next().unwrap().split(' ').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
