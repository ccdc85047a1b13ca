use super::SolverError;
use crate::assembly::{BlockSystem, CsrMatrix};
use crate::scalar::Point2;
use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::perm::PermRef;
use faer::sparse::linalg::lu::supernodal::{
    factorize_supernodal_numeric_lu, factorize_supernodal_numeric_lu_scratch, factorize_supernodal_symbolic_lu,
    factorize_supernodal_symbolic_lu_scratch, solve_in_place_scratch, solve_transpose_in_place_scratch, SupernodalLu,
    SymbolicSupernodalLu,
};
use faer::sparse::linalg::{colamd, qr, LuError};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat, MatMut, Par};
use std::cell::RefCell;

/// Estimated 1-norm condition numbers at or above this value are treated as
/// numerical singularity.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Relative residual accepted by [`LinearSolver::solve`]:
/// `‖Ax - b‖_∞ ≤ 1e-9 (1 + ‖b‖_∞)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

const MAX_REFINEMENT_STEPS: usize = 3;

/// Nested dissection stops splitting below this many unknowns.
const DISSECTION_LEAF: usize = 64;

/// A border entry kept in the sparse factor is re-selected once it drops
/// below this fraction of the largest entry it was chosen from.
const KEPT_ENTRY_RATIO: f64 = 1e-3;

/// Rows and columns longer than this are removed from the sparse factor and
/// restored through a low-rank update.
fn dense_limit(n: usize) -> usize {
    ((10.0 * (n as f64).sqrt()) as usize).max(100)
}

/// Outcome of one sparse direct solve.
#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub x: Vec<f64>,
    /// Estimate of `‖A‖₁ ‖A⁻¹‖₁`.
    pub condition: f64,
    /// Final `‖Ax - b‖_∞`.
    pub residual: f64,
    /// Whether the symbolic factorization of a previous call was reused.
    pub reused_symbolic: bool,
}

/// Sparse LU solver that keeps the symbolic factorization while the sparsity
/// pattern stays the same.
///
/// Dense rows and columns (such as a bordering constraint) are split off:
/// the sparse factor keeps one entry of each, and the remainder is applied
/// with the Sherman-Morrison-Woodbury formula. When unknown locations are
/// supplied the columns are ordered by geometric nested dissection, otherwise
/// by COLAMD.
#[derive(Default)]
pub struct LinearSolver {
    points: Option<Vec<Point2<f64>>>,
    analysis: Option<Analysis>,
}

/// Entries of a dense row (or column) left out of the sparse factor.
struct Border {
    index: usize,
    /// `(column or row, position in the value array)` of every dropped entry.
    dropped: Vec<(usize, usize)>,
    /// Position of the entry kept in the sparse factor and the positions it
    /// was chosen from.
    kept: Option<usize>,
    candidates: Vec<usize>,
}

struct Analysis {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Positions of the input values forming the sparse part, in its CSR order.
    kept: Vec<usize>,
    s_row_ptr: Vec<usize>,
    s_col_idx: Vec<usize>,
    t_col_ptr: Vec<usize>,
    t_row_idx: Vec<usize>,
    t_map: Vec<usize>,
    rows: Vec<Border>,
    cols: Vec<Border>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
    symbolic: SymbolicSupernodalLu<usize>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solver ordering unknown `i` by its location `points[i]`. Unknowns past
    /// the end of `points` are eliminated last.
    pub fn with_points(points: Vec<Point2<f64>>) -> Self {
        LinearSolver { points: Some(points), analysis: None }
    }

    /// Solves `a x = b`.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<LinearSolve, SolverError> {
        let n = a.n_rows;
        if a.n_cols != n || b.len() != n {
            return Err(SolverError::Dimension(format!("{}×{} matrix with rhs of length {}", n, a.n_cols, b.len())));
        }
        if let Some(pts) = &self.points {
            if pts.len() > n {
                return Err(SolverError::Dimension(format!("{} points for {n} unknowns", pts.len())));
            }
        }
        if n == 0 {
            return Ok(LinearSolve { x: Vec::new(), condition: 0.0, residual: 0.0, reused_symbolic: false });
        }
        let reused = matches!(&self.analysis, Some(an) if an.matches(a));
        if !reused {
            self.analysis = Some(Analysis::new(a, self.points.as_deref())?);
        }
        let an = self.analysis.as_ref().expect("analysis");
        let f = Factorization::new(an, a)?;

        let solve_a = |v: &mut [f64]| f.solve(v, false);
        let solve_at = |v: &mut [f64]| f.solve(v, true);

        let (condition, worst) = condition_estimate(a, &solve_a, &solve_at);
        if !(condition < SINGULAR_CONDITION) {
            return Err(SolverError::Singular { index: worst, condition });
        }

        let mut x = b.to_vec();
        solve_a(&mut x);
        let bnorm = inf_norm(b);
        let mut residual = f64::INFINITY;
        for step in 0..=MAX_REFINEMENT_STEPS {
            let ax = a.mul_vec(&x);
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            residual = inf_norm(&r);
            if residual <= RESIDUAL_TOLERANCE * (1.0 + bnorm) || step == MAX_REFINEMENT_STEPS {
                break;
            }
            solve_a(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi += ri);
        }
        if !(residual <= RESIDUAL_TOLERANCE * (1.0 + bnorm)) {
            return Err(SolverError::Inaccurate { residual, rhs_norm: bnorm });
        }
        Ok(LinearSolve { x, condition, residual, reused_symbolic: reused })
    }
}

fn argmax_at(values: &[f64], positions: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &p in positions {
        if best.map_or(true, |b| values[p].abs() > values[b].abs()) {
            best = Some(p);
        }
    }
    best
}

impl Border {
    fn healthy(&self, values: &[f64]) -> bool {
        let Some(k) = self.kept else { return true };
        let max = self.candidates.iter().fold(0.0f64, |m, &p| m.max(values[p].abs()));
        values[k].abs() >= KEPT_ENTRY_RATIO * max
    }
}

impl Analysis {
    fn matches(&self, a: &CsrMatrix) -> bool {
        self.row_ptr == a.row_ptr
            && self.col_idx == a.col_idx
            && self.rows.iter().chain(&self.cols).all(|b| b.healthy(&a.values))
    }

    fn new(a: &CsrMatrix, points: Option<&[Point2<f64>]>) -> Result<Self, SolverError> {
        let n = a.n_rows;
        let nnz = a.col_idx.len();
        let limit = dense_limit(n);
        let mut col_count = vec![0usize; n];
        a.col_idx.iter().for_each(|&j| col_count[j] += 1);
        let dense_row: Vec<bool> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i] > limit).collect();
        let dense_col: Vec<bool> = col_count.iter().map(|&c| c > limit).collect();

        // Entries of dense columns outside dense rows.
        let mut entries: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        if dense_col.iter().any(|&d| d) {
            for i in (0..n).filter(|&i| !dense_row[i]) {
                for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                    if dense_col[a.col_idx[p]] {
                        entries[a.col_idx[p]].push((i, p));
                    }
                }
            }
        }
        // A dense row and column with the same index keep the mirrored pair
        // (i, s), (s, i), so the sparse part reduces to the principal minor
        // without s, bordered by two entries.
        let mut pair: Vec<Option<usize>> = vec![None; n];
        for i in (0..n).filter(|&i| dense_row[i] && dense_col[i]) {
            let mut score: Vec<(usize, f64)> = entries[i].iter().filter(|e| e.0 != i).map(|&(r, p)| (r, a.values[p].abs())).collect();
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[p];
                if j != i && !dense_col[j] && !dense_row[j] {
                    score.push((j, a.values[p].abs()));
                }
            }
            score.sort_by_key(|e| e.0);
            let mut best: Option<(usize, f64)> = None;
            for chunk in score.chunk_by(|x, y| x.0 == y.0) {
                let total: f64 = chunk.iter().map(|e| e.1).sum();
                if best.map_or(true, |b| total > b.1) {
                    best = Some((chunk[0].0, total));
                }
            }
            pair[i] = best.map(|b| b.0);
        }

        let mut keep = vec![true; nnz];
        let mut rows = Vec::new();
        for i in (0..n).filter(|&i| dense_row[i]) {
            let range = a.row_ptr[i]..a.row_ptr[i + 1];
            let candidates: Vec<usize> = range.clone().filter(|&p| a.col_idx[p] != i && !dense_col[a.col_idx[p]]).collect();
            let kept = match pair[i] {
                Some(s) => candidates.iter().copied().find(|&p| a.col_idx[p] == s),
                None => argmax_at(&a.values, &candidates),
            };
            let mut dropped = Vec::new();
            for p in range {
                keep[p] = a.col_idx[p] == i || Some(p) == kept;
                if !keep[p] {
                    dropped.push((a.col_idx[p], p));
                }
            }
            rows.push(Border { index: i, dropped, kept, candidates });
        }
        let mut cols = Vec::new();
        for j in (0..n).filter(|&j| dense_col[j]) {
            let candidates: Vec<usize> = entries[j].iter().filter(|e| e.0 != j).map(|e| e.1).collect();
            let kept = match pair[j] {
                Some(s) => entries[j].iter().find(|e| e.0 == s).map(|e| e.1),
                None => argmax_at(&a.values, &candidates),
            };
            let mut dropped = Vec::new();
            for &(i, p) in &entries[j] {
                keep[p] = i == j || Some(p) == kept;
                if !keep[p] {
                    dropped.push((i, p));
                }
            }
            cols.push(Border { index: j, dropped, kept, candidates });
        }

        let mut s_row_ptr = Vec::with_capacity(n + 1);
        s_row_ptr.push(0);
        let mut s_col_idx = Vec::with_capacity(nnz);
        let mut kept = Vec::with_capacity(nnz);
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                if keep[p] {
                    s_col_idx.push(a.col_idx[p]);
                    kept.push(p);
                }
            }
            s_row_ptr.push(s_col_idx.len());
        }
        let (t_col_ptr, t_row_idx, t_map) = transpose_pattern(n, &s_row_ptr, &s_col_idx);

        let (perm_fwd, perm_inv) = match points {
            Some(pts) => {
                let fwd = nested_dissection(n, &s_row_ptr, &s_col_idx, &t_col_ptr, &t_row_idx, pts);
                let mut inv = vec![0; n];
                fwd.iter().enumerate().for_each(|(k, &i)| inv[i] = k);
                (fwd, inv)
            }
            None => (vec![0; n], vec![0; n]),
        };

        // The CSR arrays of the sparse part S are the CSC arrays of Sᵀ; the
        // factorization is of Sᵀ and S is solved with transposed solves.
        let st = SymbolicSparseColMatRef::new_checked(n, n, &s_row_ptr, None, &s_col_idx);
        let s = SymbolicSparseColMatRef::new_checked(n, n, &t_col_ptr, None, &t_row_idx);
        let req = StackReq::any_of(&[
            colamd::order_scratch::<usize>(n, n, kept.len()),
            qr::col_etree_scratch::<usize>(n, n),
            qr::postorder_scratch::<usize>(n),
            qr::column_counts_aat_scratch::<usize>(n, n),
            factorize_supernodal_symbolic_lu_scratch::<usize>(n, n),
        ]);
        let mut mem = MemBuffer::try_new(req).map_err(|_| SolverError::Factorization("out of memory".into()))?;
        let stack = MemStack::new(&mut mem);
        let (mut perm_fwd, mut perm_inv) = (perm_fwd, perm_inv);
        if points.is_none() {
            colamd::order(&mut perm_fwd, &mut perm_inv, st, Default::default(), stack)
                .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        }
        let perm = PermRef::new_checked(&perm_fwd, &perm_inv, n);
        let mut etree_buf = vec![0usize; n];
        let etree = qr::col_etree(st, Some(perm), &mut etree_buf, stack);
        let mut post = vec![0usize; n];
        qr::postorder(&mut post, etree, stack);
        let mut col_counts = vec![0usize; n];
        let mut min_col = vec![0usize; n];
        qr::column_counts_ata(&mut col_counts, &mut min_col, s, Some(perm), etree, &post, stack);
        let symbolic =
            factorize_supernodal_symbolic_lu(st, Some(perm), &min_col, etree, &col_counts, stack, Default::default())
                .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;

        Ok(Analysis {
            row_ptr: a.row_ptr.clone(),
            col_idx: a.col_idx.clone(),
            kept,
            s_row_ptr,
            s_col_idx,
            t_col_ptr,
            t_row_idx,
            t_map,
            rows,
            cols,
            perm_fwd,
            perm_inv,
            symbolic,
        })
    }
}

fn transpose_pattern(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; n + 1];
    col_idx.iter().for_each(|&j| ptr[j + 1] += 1);
    for j in 0..n {
        ptr[j + 1] += ptr[j];
    }
    let mut next = ptr.clone();
    let mut idx = vec![0usize; col_idx.len()];
    let mut map = vec![0usize; col_idx.len()];
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[p];
            idx[next[j]] = i;
            map[next[j]] = p;
            next[j] += 1;
        }
    }
    (ptr, idx, map)
}

struct Dissection<'a> {
    row_ptr: &'a [usize],
    col_idx: &'a [usize],
    t_col_ptr: &'a [usize],
    t_row_idx: &'a [usize],
    points: &'a [Point2<f64>],
    side: Vec<u8>,
    in_sep: Vec<bool>,
    visited: Vec<usize>,
    pass: usize,
    order: Vec<usize>,
}

/// Elimination order for the columns of `Sᵀ`, where `S` is given in CSR
/// (`row_ptr`, `col_idx`) and CSC (`t_col_ptr`, `t_row_idx`) form. Columns
/// of `Sᵀ` are rows of `S`, coupled in `S Sᵀ` when they share a column of
/// `S`. Each split is a median cut of the points along the longer side of
/// their bounding box; rows of one half coupled to the other half form the
/// separator, ordered after both halves.
fn nested_dissection(
    n: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
    t_col_ptr: &[usize],
    t_row_idx: &[usize],
    points: &[Point2<f64>],
) -> Vec<usize> {
    let mut nd = Dissection {
        row_ptr,
        col_idx,
        t_col_ptr,
        t_row_idx,
        points,
        side: vec![0; n],
        in_sep: vec![false; n],
        visited: vec![usize::MAX; n],
        pass: 0,
        order: Vec::with_capacity(n),
    };
    nd.dissect((0..points.len()).collect());
    nd.order.extend(points.len()..n);
    nd.order
}

impl Dissection<'_> {
    fn dissect(&mut self, set: Vec<usize>) {
        if set.len() <= DISSECTION_LEAF {
            self.order.extend(set);
            return;
        }
        // Cut across each axis and keep the smaller separator: on graded
        // meshes the longer side of the bounding box is often the worse cut.
        let mut best: Option<(Vec<usize>, Vec<usize>, Vec<usize>)> = None;
        for d in 0..2 {
            let parts = self.split(&set, d);
            if best.as_ref().map_or(true, |b| parts.2.len() < b.2.len()) {
                best = Some(parts);
            }
        }
        let (left, right, sep) = best.expect("two candidate cuts");
        if left.is_empty() || right.is_empty() {
            self.order.extend(set);
            return;
        }
        drop(set);
        self.dissect(left);
        self.dissect(right);
        self.order.extend(sep);
    }

    /// Splits `set` at the median rank along axis `d` (ties broken by the
    /// other coordinate, then by index) into left, right and separator.
    fn split(&mut self, set: &[usize], d: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let points = self.points;
        let mut sorted = set.to_vec();
        let mid = sorted.len() / 2;
        sorted.select_nth_unstable_by(mid, |&a, &b| {
            let (pa, pb) = (points[a], points[b]);
            pa[d].total_cmp(&pb[d]).then(pa[1 - d].total_cmp(&pb[1 - d])).then(a.cmp(&b))
        });
        for (pos, &i) in sorted.iter().enumerate() {
            self.side[i] = if pos < mid { 1 } else { 2 };
        }
        self.pass += 1;
        for &r in set {
            if self.side[r] != 2 {
                continue;
            }
            for &k in &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]] {
                if self.visited[k] == self.pass {
                    continue;
                }
                self.visited[k] = self.pass;
                for &i in &self.t_row_idx[self.t_col_ptr[k]..self.t_col_ptr[k + 1]] {
                    if self.side[i] == 1 {
                        self.in_sep[i] = true;
                    }
                }
            }
        }
        let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for &i in set {
            if self.in_sep[i] {
                sep.push(i);
            } else if self.side[i] == 1 {
                left.push(i);
            } else {
                right.push(i);
            }
            self.side[i] = 0;
            self.in_sep[i] = false;
        }
        (left, right, sep)
    }
}

/// Numeric factorization of the sparse part together with the low-rank
/// correction for the dense borders.
struct Factorization<'a> {
    an: &'a Analysis,
    lu: SupernodalLu<usize, f64>,
    row_fwd: Vec<usize>,
    row_inv: Vec<usize>,
    mem: RefCell<MemBuffer>,
    /// `A = S + U Wᵀ`; `z = S⁻¹ U`, `zt = S⁻ᵀ W`.
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    zt: Vec<Vec<f64>>,
    cap: Option<PartialPivLu<f64>>,
    cap_t: Option<PartialPivLu<f64>>,
}

impl<'a> Factorization<'a> {
    fn new(an: &'a Analysis, a: &CsrMatrix) -> Result<Self, SolverError> {
        let n = a.n_rows;
        let vals: Vec<f64> = an.kept.iter().map(|&p| a.values[p]).collect();
        let tvals: Vec<f64> = an.t_map.iter().map(|&k| vals[k]).collect();
        let st = SymbolicSparseColMatRef::new_checked(n, n, &an.s_row_ptr, None, &an.s_col_idx);
        let s = SymbolicSparseColMatRef::new_checked(n, n, &an.t_col_ptr, None, &an.t_row_idx);
        let req = StackReq::any_of(&[
            factorize_supernodal_numeric_lu_scratch::<usize, f64>(&an.symbolic, Default::default()),
            solve_in_place_scratch::<usize, f64>(n, 1, Par::Seq),
            solve_transpose_in_place_scratch::<usize, f64>(n, 1, Par::Seq),
        ]);
        let mut mem = MemBuffer::try_new(req).map_err(|_| SolverError::Factorization("out of memory".into()))?;
        let mut lu = SupernodalLu::new();
        let mut row_fwd = vec![0usize; n];
        let mut row_inv = vec![0usize; n];
        factorize_supernodal_numeric_lu(
            &mut row_fwd,
            &mut row_inv,
            &mut lu,
            SparseColMatRef::new(st, &vals),
            SparseColMatRef::new(s, &tvals),
            PermRef::new_checked(&an.perm_fwd, &an.perm_inv, n),
            &an.symbolic,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|e| match e {
            LuError::SymbolicSingular { index } => SolverError::Singular { index, condition: f64::INFINITY },
            LuError::Generic(e) => SolverError::Factorization(format!("{e:?}")),
        })?;
        let mut f = Factorization {
            an,
            lu,
            row_fwd,
            row_inv,
            mem: RefCell::new(mem),
            u: Vec::new(),
            w: Vec::new(),
            z: Vec::new(),
            zt: Vec::new(),
            cap: None,
            cap_t: None,
        };
        let k = an.rows.len() + an.cols.len();
        if k > 0 {
            f.low_rank(a);
        }
        Ok(f)
    }

    /// Column `c` of `U` (`transpose == false`) or `W`.
    fn border_vector(&self, a: &CsrMatrix, c: usize, transpose: bool) -> Vec<f64> {
        let n = a.n_rows;
        let mut v = vec![0.0; n];
        let nr = self.an.rows.len();
        let (b, unit) = if c < nr { (&self.an.rows[c], !transpose) } else { (&self.an.cols[c - nr], transpose) };
        if unit {
            v[b.index] = 1.0;
        } else {
            b.dropped.iter().for_each(|&(j, p)| v[j] = a.values[p]);
        }
        v
    }

    fn low_rank(&mut self, a: &CsrMatrix) {
        let k = self.an.rows.len() + self.an.cols.len();
        let u: Vec<Vec<f64>> = (0..k).map(|c| self.border_vector(a, c, false)).collect();
        let w: Vec<Vec<f64>> = (0..k).map(|c| self.border_vector(a, c, true)).collect();
        let z: Vec<Vec<f64>> = u
            .iter()
            .map(|v| {
                let mut v = v.clone();
                self.solve_sparse(&mut v, false);
                v
            })
            .collect();
        let zt: Vec<Vec<f64>> = w
            .iter()
            .map(|v| {
                let mut v = v.clone();
                self.solve_sparse(&mut v, true);
                v
            })
            .collect();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let cap = Mat::from_fn(k, k, |i, j| (i == j) as u8 as f64 + dot(&w[i], &z[j]));
        let cap_t = Mat::from_fn(k, k, |i, j| (i == j) as u8 as f64 + dot(&u[i], &zt[j]));
        self.cap = Some(cap.partial_piv_lu());
        self.cap_t = Some(cap_t.partial_piv_lu());
        self.z = z;
        self.zt = zt;
        self.u = u;
        self.w = w;
    }

    fn solve_sparse(&self, v: &mut [f64], transpose: bool) {
        let n = v.len();
        let row_perm = PermRef::new_checked(&self.row_fwd, &self.row_inv, n);
        let col_perm = PermRef::new_checked(&self.an.perm_fwd, &self.an.perm_inv, n);
        let mut mem = self.mem.borrow_mut();
        let rhs = MatMut::from_column_major_slice_mut(v, n, 1);
        // The factor is of Sᵀ.
        if transpose {
            self.lu.solve_in_place_with_conj(row_perm, col_perm, Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
        } else {
            self.lu.solve_transpose_in_place_with_conj(row_perm, col_perm, Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
        }
    }

    /// Overwrites `v` with `A⁻¹ v` or `A⁻ᵀ v`.
    fn solve(&self, v: &mut [f64], transpose: bool) {
        self.solve_sparse(v, transpose);
        let (cap, z, left) = match (transpose, &self.cap, &self.cap_t) {
            (false, Some(cap), _) => (cap, &self.z, &self.w),
            (true, _, Some(cap)) => (cap, &self.zt, &self.u),
            _ => return,
        };
        let k = z.len();
        let t = Mat::from_fn(k, 1, |i, _| left[i].iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>());
        let s = cap.solve(&t);
        for (j, zj) in z.iter().enumerate() {
            let c = s[(j, 0)];
            v.iter_mut().zip(zj).for_each(|(vi, zi)| *vi -= c * zi);
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

fn one_norm(a: &CsrMatrix) -> f64 {
    let mut col = vec![0.0; a.n_cols];
    for (&j, &v) in a.col_idx.iter().zip(&a.values) {
        col[j] += v.abs();
    }
    col.into_iter().fold(0.0, f64::max)
}

/// Hager's estimate of `‖A‖₁ ‖A⁻¹‖₁`, together with the index of the largest
/// entry of the final `A⁻¹ x`, which points at the near-null direction when
/// `A` is close to singular.
fn condition_estimate(a: &CsrMatrix, solve_a: &dyn Fn(&mut [f64]), solve_at: &dyn Fn(&mut [f64])) -> (f64, usize) {
    let n = a.n_rows;
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut worst = 0;
    for iter in 0..5 {
        let mut y = x.clone();
        solve_a(&mut y);
        if y.iter().any(|v| !v.is_finite()) {
            let idx = y.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return (f64::INFINITY, idx);
        }
        let new_est: f64 = y.iter().map(|v| v.abs()).sum();
        let arg = argmax_abs(&y);
        if iter > 0 && new_est <= est {
            break;
        }
        est = new_est;
        worst = arg;
        let mut z: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        solve_at(&mut z);
        let j = argmax_abs(&z);
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if iter > 0 && z[j].abs() <= ztx {
            break;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
    }
    (est * one_norm(a), worst)
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Solves a block system with a fresh factorization.
pub fn solve_linear(sys: &BlockSystem) -> Result<Vec<f64>, SolverError> {
    Ok(LinearSolver::new().solve(&sys.matrix, &sys.rhs)?.x)
}
