//! Dense symmetric linear algebra.
//!
//! Everything here indexes principal submatrices by the *kept* set. The
//! selection layer speaks in removed sets and converts at its boundary.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real symmetric matrix.
///
/// Construction symmetrizes the input as `(M + Mᵀ)/2`, so the stored entries
/// are exactly symmetric.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix")
            .field("n", &self.dim())
            .field("data", &self.data)
            .finish()
    }
}

impl SymMatrix {
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let t = m.transpose();
        Ok(Self {
            data: (m + t) * 0.5,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            data: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    /// Builds from entries already known to be symmetric (internal fast path).
    pub(crate) fn from_symmetric_unchecked(data: DMatrix<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `A - shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut data = self.data.clone();
        for i in 0..self.dim() {
            data[(i, i)] -= shift;
        }
        Self { data }
    }

    /// Scale-aware positive-definiteness threshold `1e-9·(1 + ‖A‖_max)`.
    pub fn pd_tolerance(&self) -> f64 {
        pd_tolerance(self.max_abs())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.data[(i, j)]).collect())
            .collect()
    }

    /// Whitespace-separated rows, one per line; blank lines and `#` comments
    /// are skipped. The input must already be symmetric.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: k + 1,
                        msg: format!("bad number `{tok}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptySubmatrix);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: r.len(),
            });
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = 1.0 + m.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("matrix is not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        Self::from_dmatrix(m)
    }

    /// Inverse of [`SymMatrix::parse_text`], exact under round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn pd_tolerance(max_abs: f64) -> f64 {
    1e-9 * (1.0 + max_abs)
}

/// Sorted, duplicate-free subset of `{0, …, n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    members: Vec<usize>,
    ambient_n: usize,
}

impl IndexSet {
    pub fn new(mut members: Vec<usize>, ambient_n: usize) -> Result<Self> {
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex(w[0]));
            }
        }
        if let Some(&last) = members.last() {
            if last >= ambient_n {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    n: ambient_n,
                });
            }
        }
        Ok(Self { members, ambient_n })
    }

    pub fn empty(ambient_n: usize) -> Self {
        Self {
            members: Vec::new(),
            ambient_n,
        }
    }

    pub fn full(ambient_n: usize) -> Self {
        Self {
            members: (0..ambient_n).collect(),
            ambient_n,
        }
    }

    /// Set from a membership mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            members: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
            ambient_n: mask.len(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn complement(&self) -> Self {
        let mut mask = vec![true; self.ambient_n];
        for &m in &self.members {
            mask[m] = false;
        }
        Self::from_mask(&mask)
    }

    /// Copy with `v` added. Adding an existing member is a no-op.
    pub fn with(&self, v: usize) -> Self {
        assert!(v < self.ambient_n, "index {v} out of range");
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&v) {
            members.insert(pos, v);
        }
        Self {
            members,
            ambient_n: self.ambient_n,
        }
    }

    /// Copy with `v` removed.
    pub fn without(&self, v: usize) -> Self {
        Self {
            members: self.members.iter().copied().filter(|&m| m != v).collect(),
            ambient_n: self.ambient_n,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut mask = self.mask();
        for &m in &other.members {
            mask[m] = true;
        }
        Self::from_mask(&mask)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&m| other.contains(m))
                .collect(),
            ambient_n: self.ambient_n,
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.ambient_n];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Eigendecomposition `A = U·diag(λ)·Uᵀ` with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl Spectrum {
    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U·diag(λ)·Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.basis;
        let mut scaled = u.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(l);
        }
        &scaled * u.transpose()
    }
}

/// Principal submatrix on the kept index set, in sorted index order.
pub fn submatrix(a: &SymMatrix, keep: &IndexSet) -> Result<SymMatrix> {
    if keep.ambient_n() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: keep.ambient_n(),
        });
    }
    if keep.is_empty() {
        return Err(Error::EmptySubmatrix);
    }
    let idx = keep.members();
    let k = idx.len();
    Ok(SymMatrix::from_symmetric_unchecked(DMatrix::from_fn(
        k,
        k,
        |i, j| a.data[(idx[i], idx[j])],
    )))
}

/// Principal submatrix of a general square matrix.
pub fn square_submatrix(a: &DMatrix<f64>, keep: &IndexSet) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if keep.ambient_n() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: keep.ambient_n(),
        });
    }
    if keep.is_empty() {
        return Err(Error::EmptySubmatrix);
    }
    let idx = keep.members();
    Ok(DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
        a[(idx[i], idx[j])]
    }))
}

fn check_finite(a: &SymMatrix) -> Result<()> {
    if a.data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn eig_sym(a: &SymMatrix) -> Result<Spectrum> {
    check_finite(a)?;
    let n = a.dim();
    if n == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let eig = SymmetricEigen::new(a.data.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let basis = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { eigenvalues, basis })
}

/// Eigenvalues only, descending. Cheaper than [`eig_sym`].
pub fn eigenvalues_sym(a: &SymMatrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    if a.dim() == 0 {
        return Err(Error::EmptySubmatrix);
    }
    let mut vals: Vec<f64> = a.data.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

pub fn lambda_min(a: &SymMatrix) -> Result<f64> {
    Ok(*eigenvalues_sym(a)?.last().expect("nonempty"))
}

/// λ_min of the principal submatrix on `keep`.
pub fn lambda_min_kept(a: &SymMatrix, keep: &IndexSet) -> Result<f64> {
    lambda_min(&submatrix(a, keep)?)
}

/// `A + α·D(S)` where `D(S)` has ones on the diagonal at the members of `s`.
pub fn add_alpha_diag(a: &SymMatrix, s: &IndexSet, alpha: f64) -> SymMatrix {
    let mut data = a.data.clone();
    for i in s.iter() {
        data[(i, i)] += alpha;
    }
    SymMatrix { data }
}

/// `trace(A⁻¹) = Σ 1/λ_i`.
pub fn inv_trace(a: &SymMatrix) -> Result<f64> {
    let vals = eigenvalues_sym(a)?;
    let lmin = *vals.last().expect("nonempty");
    if lmin <= a.pd_tolerance() {
        return Err(Error::NotPositiveDefinite {
            what: "inverse trace",
            lambda_min: lmin,
        });
    }
    Ok(vals.iter().map(|l| 1.0 / l).sum())
}

/// `log det A = Σ log λ_i`.
pub fn log_det(a: &SymMatrix) -> Result<f64> {
    let vals = eigenvalues_sym(a)?;
    let lmin = *vals.last().expect("nonempty");
    if lmin <= a.pd_tolerance() {
        return Err(Error::NotPositiveDefinite {
            what: "log determinant",
            lambda_min: lmin,
        });
    }
    Ok(vals.iter().map(|l| l.ln()).sum())
}

/// `B = AᵀD + DA` for `D = diag(d)`, i.e. `B_ij = A_ji·d_j + d_i·A_ij`.
pub fn symmetrize_lyapunov(a: &DMatrix<f64>, d: &[f64]) -> Result<SymMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if d.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: d.len(),
        });
    }
    if let Some((index, &value)) = d.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = a.nrows();
    let b = DMatrix::from_fn(n, n, |i, j| a[(j, i)] * d[j] + d[i] * a[(i, j)]);
    Ok(SymMatrix::from_symmetric_unchecked(b))
}

/// Smallest real part over the eigenvalues of a general square matrix.
pub fn min_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(Error::EmptySubmatrix);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let a = SymMatrix::from_rows(&[vec![1.5, -0.1], vec![-0.1, 1e-17]]).unwrap();
        let b = SymMatrix::parse_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
        let c = SymMatrix::parse_text("# header\n1 0\n\n0 1 # trailing\n").unwrap();
        assert_eq!(c, SymMatrix::identity(2));
        assert!(matches!(
            SymMatrix::parse_text("1 2\n3 4\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            SymMatrix::parse_text("1 x\n0 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SymMatrix::parse_text("1 0 0\n0 1\n"),
            Err(Error::NotSquare { .. })
        ));
        assert!(SymMatrix::parse_text("").is_err());
    }

    fn p3_laplacian() -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0]]),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![f64::NAN]]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn index_set_validation() {
        assert!(matches!(
            IndexSet::new(vec![1, 1], 3),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(matches!(
            IndexSet::new(vec![3], 3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        let s = IndexSet::new(vec![2, 0], 4).unwrap();
        assert_eq!(s.members(), &[0, 2]);
        assert_eq!(s.complement().members(), &[1, 3]);
        assert_eq!(s.with(1).members(), &[0, 1, 2]);
        assert_eq!(s.to_string(), "{0,2}");
    }

    #[test]
    fn submatrix_of_identity() {
        let keep = IndexSet::new(vec![0, 2], 3).unwrap();
        let s = submatrix(&SymMatrix::identity(3), &keep).unwrap();
        assert_eq!(s, SymMatrix::identity(2));
    }

    #[test]
    fn submatrix_grounded_path() {
        let keep = IndexSet::new(vec![1, 2], 3).unwrap();
        let s = submatrix(&p3_laplacian(), &keep).unwrap();
        assert_eq!(s.rows(), vec![vec![2.0, -1.0], vec![-1.0, 1.0]]);
        // 2x2 quadratic formula: (3 - sqrt 5)/2
        let expected = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((lambda_min(&s).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn submatrix_full_set_is_identity_op() {
        let a = p3_laplacian();
        assert_eq!(submatrix(&a, &IndexSet::full(3)).unwrap(), a);
    }

    #[test]
    fn submatrix_empty_is_error() {
        assert!(matches!(
            submatrix(&p3_laplacian(), &IndexSet::empty(3)),
            Err(Error::EmptySubmatrix)
        ));
    }

    #[test]
    fn eig_sym_examples() {
        let s = eig_sym(&SymMatrix::identity(4)).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let s = eig_sym(&SymMatrix::from_diagonal(&[3.0, -1.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, -1.0]);

        // characteristic polynomial of the P3 Laplacian: -x(x-1)(x-3)
        let s = eig_sym(&p3_laplacian()).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([3.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_sym_rejects_nan() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = f64::INFINITY;
        let a = SymMatrix { data: m };
        assert!(matches!(eig_sym(&a), Err(Error::NonFinite)));
    }

    #[test]
    fn lambda_min_examples() {
        assert_eq!(lambda_min(&SymMatrix::identity(3)).unwrap(), 1.0);
        let a = SymMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert!((lambda_min(&a).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn add_alpha_diag_examples() {
        let a = SymMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(add_alpha_diag(&a, &IndexSet::empty(2), 3.0), a);
        let z = add_alpha_diag(
            &SymMatrix::zeros(2),
            &IndexSet::new(vec![0], 2).unwrap(),
            5.0,
        );
        assert_eq!(z, SymMatrix::from_diagonal(&[5.0, 0.0]));
        let b = add_alpha_diag(&a, &IndexSet::full(2), 3.0);
        assert_eq!(b.rows(), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((lambda_min(&b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inv_trace_examples() {
        assert!((inv_trace(&SymMatrix::identity(3)).unwrap() - 3.0).abs() < 1e-12);
        assert!((inv_trace(&SymMatrix::from_diagonal(&[2.0, 4.0])).unwrap() - 0.75).abs() < 1e-12);
        // [[2,-1],[-1,1]]^{-1} = [[1,1],[1,2]]
        let g = submatrix(&p3_laplacian(), &IndexSet::new(vec![1, 2], 3).unwrap()).unwrap();
        assert!((inv_trace(&g).unwrap() - 3.0).abs() < 1e-10);
        assert!(matches!(
            inv_trace(&p3_laplacian()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn log_det_examples() {
        assert!(log_det(&SymMatrix::identity(5)).unwrap().abs() < 1e-14);
        let e = std::f64::consts::E;
        assert!((log_det(&SymMatrix::from_diagonal(&[e, e])).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_det(&SymMatrix::from_diagonal(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let b = symmetrize_lyapunov(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(b.rows(), vec![vec![2.0, 2.0], vec![2.0, 2.0]]);

        let s = p3_laplacian();
        let b = symmetrize_lyapunov(s.as_dmatrix(), &[1.0; 3]).unwrap();
        assert_eq!(b.as_dmatrix(), &(s.as_dmatrix() * 2.0));

        assert!(matches!(
            symmetrize_lyapunov(&a, &[1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
    }

    #[test]
    fn min_real_eigenvalue_triangular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, -1.0]);
        assert!((min_real_eigenvalue(&a).unwrap() + 1.0).abs() < 1e-12);
        // rotation generator: eigenvalues ±i
        let r = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 1.0, 0.5]);
        assert!((min_real_eigenvalue(&r).unwrap() - 0.5).abs() < 1e-12);
    }
}
