//! Small dense linear-algebra helpers shared by the feature pipeline and the
//! baselines.

use nalgebra::{DMatrix, DVector};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
///
/// Eigenvector signs are fixed so the largest-magnitude component of every
/// vector is positive (first such component on ties), which makes the
/// decomposition reproducible.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        let mut pivot = 0;
        for r in 0..n {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Column means of a row-sample matrix.
pub fn column_means(rows: &DMatrix<f64>) -> DVector<f64> {
    let n = rows.nrows().max(1) as f64;
    DVector::from_iterator(
        rows.ncols(),
        (0..rows.ncols()).map(|c| rows.column(c).sum() / n),
    )
}

/// Sample covariance (divisor n) of a row-sample matrix after centering.
pub fn covariance(rows: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let n = rows.nrows().max(1) as f64;
    let cov = centered.transpose() * &centered / n;
    // Symmetrize away rounding asymmetry from the product.
    (&cov + cov.transpose()) * 0.5
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - cos(a, b)`; a zero-norm operand yields the maximal distance 1.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot(a, b) / (na * nb)
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c])
}

/// Packs sample vectors as the columns of a matrix.
pub fn columns_to_matrix<'a, I>(dim: usize, cols: I) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut data = Vec::new();
    let mut n = 0;
    for c in cols {
        debug_assert_eq!(c.len(), dim);
        data.extend_from_slice(c);
        n += 1;
    }
    DMatrix::from_vec(dim, n, data)
}
