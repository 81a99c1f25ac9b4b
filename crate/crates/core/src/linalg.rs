//! Fraction-free (Bareiss) elimination over any [`Field`].
//!
//! Pivots are the first nonzero entry in the current column, so results are
//! deterministic for a given input.

use crate::exactfield::{Field, FieldError};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<G: Field, E>(&self, f: impl Fn(&F) -> Result<G, E>) -> Result<Matrix<G>, E> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    /// Submatrix on the given columns (0-based), all rows kept.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let data = (0..self.rows)
            .flat_map(|i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        Matrix { rows: self.rows, cols: cols.len(), data }
    }

    fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Rank by Bareiss elimination.
    pub fn rank(&self) -> Result<usize, FieldError> {
        Ok(echelon(self.to_rows(), self.cols)?.pivots.len())
    }

    /// Determinant of a square matrix by Bareiss elimination.
    pub fn determinant(&self) -> Result<F, FieldError> {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        if self.rows == 0 {
            panic!("determinant of an empty matrix has no field context");
        }
        let e = echelon(self.to_rows(), self.cols)?;
        if e.pivots.len() < self.rows {
            return Ok(self.data[0].zero_like());
        }
        let det = e.rows[self.rows - 1][self.cols - 1].clone();
        Ok(if e.swaps % 2 == 1 { det.neg() } else { det })
    }

    /// Basis of the right kernel `{v : M v = 0}`, one vector per free column,
    /// each normalized so its free coordinate is one.
    pub fn kernel(&self) -> Result<Vec<Vec<F>>, FieldError> {
        let e = echelon(self.to_rows(), self.cols)?;
        let sample = match self.data.first() {
            Some(x) => x.clone(),
            None => return Ok(Vec::new()),
        };
        let zero = sample.zero_like();
        let one = sample.one_like();
        let pivot_cols: Vec<usize> = e.pivots.clone();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_cols.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![zero.clone(); self.cols];
            v[fc] = one.clone();
            // back substitution on the echelon rows, last pivot first
            for (r, &pc) in pivot_cols.iter().enumerate().rev() {
                let row = &e.rows[r];
                let mut acc = zero.clone();
                for c in pc + 1..self.cols {
                    if !row[c].is_zero() && !v[c].is_zero() {
                        acc = acc.add(&row[c].mul(&v[c]));
                    }
                }
                v[pc] = acc.neg().div(&row[pc])?;
            }
            basis.push(v);
        }
        Ok(basis)
    }
}

struct Echelon<F> {
    rows: Vec<Vec<F>>,
    pivots: Vec<usize>,
    swaps: usize,
}

fn echelon<F: Field>(mut m: Vec<Vec<F>>, cols: usize) -> Result<Echelon<F>, FieldError> {
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut swaps = 0;
    let mut prev: Option<F> = None;
    let mut r = 0;
    for c in 0..cols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            m.swap(p, r);
            swaps += 1;
        }
        let pivot = m[r][c].clone();
        let prev_inv = match &prev {
            Some(x) => Some(x.inv()?),
            None => None,
        };
        let (top, rest) = m.split_at_mut(r + 1);
        let prow = &top[r];
        for row in rest.iter_mut() {
            let lead = row[c].clone();
            for j in c..cols {
                // row[j] = (pivot * row[j] - lead * prow[j]) / prev
                let mut v = pivot.mul(&row[j]);
                if !lead.is_zero() && !prow[j].is_zero() {
                    v = v.sub(&lead.mul(&prow[j]));
                }
                if let Some(pi) = &prev_inv {
                    if !v.is_zero() {
                        v = v.mul(pi);
                    }
                }
                row[j] = v;
            }
            for x in &mut row[..c] {
                *x = pivot.zero_like();
            }
        }
        pivots.push(c);
        prev = Some(pivot);
        r += 1;
    }
    Ok(Echelon { rows: m, pivots, swaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::FieldElement;

    fn m(rows: &[&[i64]]) -> Matrix<FieldElement> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| FieldElement::int(x)).collect()).collect())
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let a = m(&[&[2, -1, 0], &[1, 3, 4], &[0, 5, -2]]);
        // 2(3·-2 - 4·5) + 1(1·-2 - 0) = -52 - 2
        assert_eq!(a.determinant().unwrap(), FieldElement::int(-54));
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(b.determinant().unwrap(), FieldElement::int(-1));
    }

    #[test]
    fn rank_and_kernel() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank().unwrap(), 2);
        let k = a.kernel().unwrap();
        assert_eq!(k.len(), 1);
        for i in 0..3 {
            let dot = (0..3).fold(FieldElement::zero(), |acc, j| &acc + &(a.get(i, j) * &k[0][j]));
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn singular_determinant_is_zero() {
        assert!(m(&[&[1, 2], &[2, 4]]).determinant().unwrap().is_zero());
    }
}
