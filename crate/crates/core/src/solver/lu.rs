//! Sparse LU factorization of the simplex basis with a product-form eta file
//! for cheap updates between refactorizations.
//!
//! Factorization is left-looking with partial pivoting: columns are processed
//! in a static fill-reducing order (ascending nonzero count), each column is
//! solved against the already-computed part of L, and the largest remaining
//! entry is chosen as pivot. L is stored in original row indices plus a row
//! permutation; U is stored directly in pivot-position space.
//!
//! A basis exchange appends an eta vector built from the FTRAN image of the
//! entering column; solves replay the eta file around the triangular solves.
//! The simplex driver decides when the file has grown enough to warrant a
//! fresh factorization.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LuError {
    #[error("basis is singular at pivot {0}")]
    Singular(usize),
}

struct Eta {
    /// Basis slot whose column was replaced.
    slot: usize,
    /// 1 / w_slot.
    diag: f64,
    /// (slot, -w_i / w_slot) for the other nonzeros of the FTRAN image.
    off: Vec<(usize, f64)>,
}

pub struct BasisLu {
    m: usize,
    /// L column p: (original_row, value), strictly below the diagonal in
    /// position space. Unit diagonal implicit.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// U column p: (position q < p, value) plus the diagonal.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// position -> original row
    prow: Vec<usize>,
    /// original row -> position
    pinv: Vec<usize>,
    /// processed order -> basis slot
    cq: Vec<usize>,
    /// basis slot -> processed order
    cq_inv: Vec<usize>,
    etas: Vec<Eta>,
    lu_nnz: usize,
    eta_nnz: usize,
    work: Vec<f64>,
    work2: Vec<f64>,
}

const DROP_TOL: f64 = 1e-13;

impl BasisLu {
    /// Factorizes the m x m basis given by `col(slot)`.
    pub fn factorize(
        m: usize,
        col: impl Fn(usize) -> BasisColData,
    ) -> Result<BasisLu, LuError> {
        // Static column order: ascending nonzero count. Unit columns first,
        // which keeps them trivially fill-free.
        let cols: Vec<BasisColData> = (0..m).map(&col).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&s| (cols[s].nnz(), s));

        let mut lu = BasisLu {
            m,
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            prow: Vec::with_capacity(m),
            pinv: vec![usize::MAX; m],
            cq: order.clone(),
            cq_inv: vec![0; m],
            etas: Vec::new(),
            lu_nnz: 0,
            eta_nnz: 0,
            work: vec![0.0; m],
            work2: vec![0.0; m],
        };
        for (j, &s) in order.iter().enumerate() {
            lu.cq_inv[s] = j;
        }

        let mut x = vec![0.0; m]; // scattered over original rows
        for j in 0..m {
            let slot = lu.cq[j];
            match &cols[slot] {
                BasisColData::Unit(r) => x[*r] = 1.0,
                BasisColData::Sparse(entries) => {
                    for &(r, v) in entries {
                        x[r] += v;
                    }
                }
            }

            // Eliminate against computed columns in position order. Position
            // order is topological: eliminating at p only fills rows that are
            // non-pivotal or pivotal at positions > p.
            for p in 0..j {
                let xr = x[lu.prow[p]];
                if xr == 0.0 {
                    continue;
                }
                for &(i, v) in &lu.l_cols[p] {
                    x[i] -= v * xr;
                }
            }

            // Pivot: largest remaining entry among non-pivotal rows.
            let mut pivot_row = usize::MAX;
            let mut pivot_abs = 0.0;
            for i in 0..m {
                if lu.pinv[i] == usize::MAX {
                    let a = x[i].abs();
                    if a > pivot_abs {
                        pivot_abs = a;
                        pivot_row = i;
                    }
                }
            }
            if pivot_row == usize::MAX || pivot_abs < 1e-11 {
                return Err(LuError::Singular(slot));
            }
            let pivot = x[pivot_row];

            let mut ucol = Vec::new();
            let mut lcol = Vec::new();
            for i in 0..m {
                let v = x[i];
                if v == 0.0 {
                    continue;
                }
                x[i] = 0.0;
                if i == pivot_row {
                    continue;
                }
                match lu.pinv[i] {
                    usize::MAX => {
                        if v.abs() > DROP_TOL * pivot_abs {
                            lcol.push((i, v / pivot));
                        }
                    }
                    p => {
                        if v.abs() > DROP_TOL {
                            ucol.push((p, v));
                        }
                    }
                }
            }
            lu.lu_nnz += lcol.len() + ucol.len() + 1;
            lu.pinv[pivot_row] = j;
            lu.prow.push(pivot_row);
            lu.u_diag.push(pivot);
            lu.u_cols.push(ucol);
            lu.l_cols.push(lcol);
        }
        Ok(lu)
    }

    pub fn updates_since_refactor(&self) -> usize {
        self.etas.len()
    }

    /// Eta-file growth relative to the base factorization.
    pub fn fill_ratio(&self) -> f64 {
        self.eta_nnz as f64 / (self.lu_nnz.max(1)) as f64
    }

    /// x := B^-1 x, in basis-slot space.
    pub fn ftran(&mut self, x: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(x.len(), m);

        // Forward: L y = P x, work over original rows.
        let w = &mut self.work;
        w.copy_from_slice(x);
        for p in 0..m {
            let yp = w[self.prow[p]];
            if yp == 0.0 {
                continue;
            }
            for &(i, v) in &self.l_cols[p] {
                w[i] -= v * yp;
            }
        }
        // Backward: U z = y, in position space.
        let z = &mut self.work2;
        for p in 0..m {
            z[p] = w[self.prow[p]];
        }
        for p in (0..m).rev() {
            let zp = z[p] / self.u_diag[p];
            z[p] = zp;
            if zp == 0.0 {
                continue;
            }
            for &(q, v) in &self.u_cols[p] {
                z[q] -= v * zp;
            }
        }
        // Positions back to slots.
        for p in 0..m {
            x[self.cq[p]] = z[p];
        }
        // Replay etas, oldest first.
        for eta in &self.etas {
            let xr = x[eta.slot];
            if xr == 0.0 {
                continue;
            }
            x[eta.slot] = eta.diag * xr;
            for &(i, v) in &eta.off {
                x[i] += v * xr;
            }
        }
    }

    /// y := B^-T y, where the input is indexed by basis slot and the output
    /// by row (both live in the same m-space).
    pub fn btran(&mut self, y: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(y.len(), m);

        // Etas first, newest to oldest: replaced entry becomes a full dot.
        for eta in self.etas.iter().rev() {
            let mut acc = eta.diag * y[eta.slot];
            for &(i, v) in &eta.off {
                acc += v * y[i];
            }
            y[eta.slot] = acc;
        }
        // w over processed positions.
        let w = &mut self.work;
        for p in 0..m {
            w[p] = y[self.cq[p]];
        }
        // U^T v = w: forward with gather dots over U columns.
        let v = &mut self.work2;
        for p in 0..m {
            let mut acc = w[p];
            for &(q, val) in &self.u_cols[p] {
                acc -= val * v[q];
            }
            v[p] = acc / self.u_diag[p];
        }
        // L^T u = v: backward, gathering positions through pinv.
        for p in (0..m).rev() {
            let mut acc = v[p];
            for &(i, val) in &self.l_cols[p] {
                acc -= val * v[self.pinv[i]];
            }
            v[p] = acc;
        }
        // Positions back to original rows.
        for p in 0..m {
            y[self.prow[p]] = v[p];
        }
    }

    /// Registers a basis exchange: `w` is the FTRAN image of the entering
    /// column and `slot` the basis position it replaces.
    pub fn update(&mut self, slot: usize, w: &[f64]) -> Result<(), LuError> {
        let pivot = w[slot];
        if pivot.abs() < 1e-11 {
            return Err(LuError::Singular(slot));
        }
        let mut off = Vec::new();
        for (i, &v) in w.iter().enumerate() {
            if i != slot && v.abs() > DROP_TOL {
                off.push((i, -v / pivot));
            }
        }
        self.eta_nnz += off.len() + 1;
        self.etas.push(Eta {
            slot,
            diag: 1.0 / pivot,
            off,
        });
        Ok(())
    }
}

/// Owned variant of [`BasisCol`] so the factorization can collect columns
/// before ordering them.
pub enum BasisColData {
    Unit(usize),
    Sparse(Vec<(usize, f64)>),
}

impl BasisColData {
    fn nnz(&self) -> usize {
        match self {
            BasisColData::Unit(_) => 1,
            BasisColData::Sparse(v) => v.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[&[f64]]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .filter(|&i| a[i][j] != 0.0)
                    .map(|i| (i, a[i][j]))
                    .collect()
            })
            .collect()
    }

    fn factorize_dense(a: &[&[f64]]) -> BasisLu {
        let cols = dense_cols(a);
        BasisLu::factorize(a.len(), |s| BasisColData::Sparse(cols[s].clone())).unwrap()
    }

    #[test]
    fn ftran_btran_roundtrip_small() {
        let a: &[&[f64]] = &[
            &[2.0, 1.0, 0.0],
            &[0.0, 0.0, 3.0],
            &[4.0, 0.0, 1.0],
        ];
        let mut lu = factorize_dense(a);

        // B x = b with b = (5, 6, 9): solve and verify residual.
        let mut x = vec![5.0, 6.0, 9.0];
        lu.ftran(&mut x);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((ax - [5.0, 6.0, 9.0][i]).abs() < 1e-12, "row {i}: {ax}");
        }

        // B^T y = c
        let mut y = vec![1.0, -2.0, 7.0];
        lu.btran(&mut y);
        for j in 0..3 {
            let aty: f64 = (0..3).map(|i| a[i][j] * y[i]).sum();
            assert!((aty - [1.0, -2.0, 7.0][j]).abs() < 1e-12, "col {j}: {aty}");
        }
    }

    #[test]
    fn update_matches_refactorization() {
        let a: &[&[f64]] = &[
            &[2.0, 1.0, 0.0],
            &[0.0, 1.0, 3.0],
            &[4.0, 0.0, 1.0],
        ];
        let mut lu = factorize_dense(a);

        // Replace slot 1 with column (1, 2, 1).
        let new_col = [1.0, 2.0, 1.0];
        let mut w = new_col.to_vec();
        lu.ftran(&mut w);
        lu.update(1, &w).unwrap();

        let b: &[&[f64]] = &[
            &[2.0, 1.0, 0.0],
            &[0.0, 2.0, 3.0],
            &[4.0, 1.0, 1.0],
        ];
        let mut x = vec![1.0, 2.0, 3.0];
        lu.ftran(&mut x);
        for i in 0..3 {
            let bx: f64 = (0..3).map(|j| b[i][j] * x[j]).sum();
            assert!((bx - [1.0, 2.0, 3.0][i]).abs() < 1e-12, "row {i}: {bx}");
        }
        let mut y = vec![3.0, 1.0, -1.0];
        lu.btran(&mut y);
        for j in 0..3 {
            let bty: f64 = (0..3).map(|i| b[i][j] * y[i]).sum();
            assert!((bty - [3.0, 1.0, -1.0][j]).abs() < 1e-12, "col {j}: {bty}");
        }
    }

    #[test]
    fn detects_singular_basis() {
        let a: &[&[f64]] = &[
            &[1.0, 2.0, 0.0],
            &[2.0, 4.0, 0.0],
            &[0.0, 0.0, 1.0],
        ];
        let cols = dense_cols(a);
        let err = BasisLu::factorize(3, |s| BasisColData::Sparse(cols[s].clone()));
        assert!(err.is_err());
    }

    #[test]
    fn random_roundtrips_with_updates() {
        // Deterministic xorshift so the test stays reproducible.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };

        let m = 40;
        let mut dense = vec![vec![0.0f64; m]; m];
        for i in 0..m {
            dense[i][i] = 2.0 + next().abs();
            for _ in 0..3 {
                let j = (next().abs() * m as f64) as usize % m;
                dense[i][j] += next();
            }
        }
        let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
        let mut lu = factorize_dense(&rows);

        for round in 0..10 {
            let slot = (round * 7) % m;
            let mut col = vec![0.0; m];
            col[(round * 3) % m] = 1.0 + next().abs();
            col[(round * 11 + 5) % m] = next();
            col[slot] += 2.0;
            for i in 0..m {
                dense[i][slot] = col[i];
            }
            let mut w = col.clone();
            lu.ftran(&mut w);
            lu.update(slot, &w).unwrap();

            let mut b = vec![0.0; m];
            for (i, item) in b.iter_mut().enumerate() {
                *item = next() * (i as f64 + 1.0);
            }
            let mut x = b.clone();
            lu.ftran(&mut x);
            for i in 0..m {
                let ax: f64 = (0..m).map(|j| dense[i][j] * x[j]).sum();
                assert!((ax - b[i]).abs() < 1e-9, "round {round} row {i}");
            }
        }
    }
}
