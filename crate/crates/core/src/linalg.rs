//! Exact sparse elimination over the integers.
//!
//! Rows are kept primitive (coprime integer entries, positive pivot) and
//! the system is maintained in reduced row echelon form, so the nullspace
//! basis read off it is unique for a given row space.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::Rational;

/// Sparse integer row: strictly increasing column indices, nonzero entries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Row(Vec<(u32, BigInt)>);

impl Row {
    /// Builds a row from rational entries (any order, duplicates summed),
    /// clearing denominators.
    pub fn from_rationals(entries: impl IntoIterator<Item = (u32, Rational)>) -> Row {
        let mut es: Vec<(u32, Rational)> = entries.into_iter().collect();
        es.sort_by_key(|(c, _)| *c);
        let mut merged: Vec<(u32, Rational)> = Vec::with_capacity(es.len());
        for (c, x) in es {
            match merged.last_mut() {
                Some((lc, lx)) if *lc == c => *lx += x,
                _ => merged.push((c, x)),
            }
        }
        merged.retain(|(_, x)| !x.is_zero());
        let den = merged.iter().fold(BigInt::one(), |acc, (_, x)| acc.lcm(x.denom()));
        let mut row = Row(
            merged
                .into_iter()
                .map(|(c, x)| (c, (x.numer() * &den) / x.denom()))
                .collect(),
        );
        row.normalize();
        row
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(u32, BigInt)] {
        &self.0
    }

    pub fn lead(&self) -> Option<u32> {
        self.0.first().map(|(c, _)| *c)
    }

    pub fn get(&self, col: u32) -> Option<&BigInt> {
        self.0
            .binary_search_by_key(&col, |(c, _)| *c)
            .ok()
            .map(|i| &self.0[i].1)
    }

    /// Divides by the content and makes the leading entry positive.
    fn normalize(&mut self) {
        let mut g = BigInt::zero();
        for (_, x) in &self.0 {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
        if self.0.first().is_some_and(|(_, x)| x.is_negative()) {
            g = -g;
        }
        if !g.is_zero() && !g.is_one() {
            for (_, x) in &mut self.0 {
                *x /= &g;
            }
        }
    }

    /// `a*self - b*other`, normalized.
    fn combine(&self, a: &BigInt, other: &Row, b: &BigInt) -> Row {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let ci = self.0.get(i).map(|e| e.0);
            let cj = other.0.get(j).map(|e| e.0);
            match (ci, cj) {
                (Some(x), Some(y)) if x == y => {
                    let v = a * &self.0[i].1 - b * &other.0[j].1;
                    if !v.is_zero() {
                        out.push((x, v));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    out.push((x, a * &self.0[i].1));
                    i += 1;
                }
                (Some(x), None) => {
                    out.push((x, a * &self.0[i].1));
                    i += 1;
                }
                (_, Some(y)) => {
                    out.push((y, -(b * &other.0[j].1)));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        let mut r = Row(out);
        r.normalize();
        r
    }

    /// Removes column `col` from `self` using `pivot`, whose entry at
    /// `col` is nonzero.
    fn eliminate(&self, col: u32, pivot: &Row) -> Row {
        match self.get(col) {
            None => self.clone(),
            Some(x) => {
                let p = pivot.get(col).expect("pivot entry");
                let g = p.gcd(x);
                self.combine(&(p / &g), pivot, &(x / &g))
            }
        }
    }
}

/// A homogeneous system in reduced row echelon form over `ncols` unknowns.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    rows: Vec<Row>,
    /// For each column, the index of the row it is the pivot of.
    pivot_row: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            rows: Vec::new(),
            pivot_row: vec![None; ncols],
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_pivot(&self, col: u32) -> bool {
        self.pivot_row[col as usize].is_some()
    }

    /// Adds `row` to the system. Returns whether the rank increased.
    pub fn add_row(&mut self, row: &Row) -> bool {
        let mut r = row.clone();
        loop {
            let hit = r
                .0
                .iter()
                .find_map(|(c, _)| self.pivot_row[*c as usize].map(|i| (*c, i)));
            match hit {
                Some((c, i)) => r = r.eliminate(c, &self.rows[i]),
                None => break,
            }
        }
        let Some(lead) = r.lead() else {
            return false;
        };
        for existing in &mut self.rows {
            if existing.get(lead).is_some() {
                *existing = existing.eliminate(lead, &r);
            }
        }
        self.pivot_row[lead as usize] = Some(self.rows.len());
        self.rows.push(r);
        true
    }

    /// Whether some solution is nonzero on at least one column in `mask`.
    pub fn has_nonzero_on(&self, mask: &[bool]) -> bool {
        (0..self.ncols).any(|c| {
            mask[c]
                && match self.pivot_row[c] {
                    None => true,
                    Some(i) => self.rows[i].0.len() > 1,
                }
        })
    }

    /// Nullspace basis: one vector per free column, in column order. Each
    /// vector is 1 at its free column and 0 at every other free column.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let mut out = Vec::new();
        for f in 0..self.ncols {
            if self.pivot_row[f].is_some() {
                continue;
            }
            let mut v = vec![Rational::zero(); self.ncols];
            v[f] = Rational::one();
            for r in &self.rows {
                if let Some(x) = r.get(f as u32) {
                    let (pc, p) = &r.0[0];
                    v[*pc as usize] = -Rational::new(x.clone(), p.clone());
                }
            }
            out.push(v);
        }
        out
    }

    /// Checks `row . v = 0` for every stored row.
    pub fn satisfied_by(&self, v: &[Rational]) -> bool {
        self.rows.iter().all(|r| {
            r.0.iter()
                .fold(Rational::zero(), |acc, (c, x)| acc + Rational::from_integer(x.clone()) * &v[*c as usize])
                .is_zero()
        })
    }
}

/// Rank of a list of rational vectors.
pub fn rank(vectors: &[Vec<Rational>]) -> usize {
    let n = vectors.first().map_or(0, Vec::len);
    let mut e = Echelon::new(n);
    for v in vectors {
        e.add_row(&Row::from_rationals(
            v.iter().enumerate().map(|(i, x)| (i as u32, x.clone())),
        ));
    }
    e.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, ratio};

    fn row(es: &[(u32, i64)]) -> Row {
        Row::from_rationals(es.iter().map(|&(c, x)| (c, rat(x))))
    }

    #[test]
    fn rows_are_primitive() {
        let r = Row::from_rationals([(2, ratio(-1, 2)), (0, ratio(3, 2)), (2, rat(-1))]);
        assert_eq!(r, row(&[(0, 1), (2, -1)]));
        assert!(row(&[(1, 0)]).is_zero());
    }

    #[test]
    fn nullspace_of_simple_system() {
        // x0 + x1 = 0, x1 - x2 = 0
        let mut e = Echelon::new(3);
        assert!(e.add_row(&row(&[(0, 1), (1, 1)])));
        assert!(e.add_row(&row(&[(1, 1), (2, -1)])));
        assert!(!e.add_row(&row(&[(0, 2), (2, 2)])));
        let ns = e.nullspace();
        assert_eq!(ns, vec![vec![rat(-1), rat(1), rat(1)]]);
        assert!(e.satisfied_by(&ns[0]));
        assert!(e.has_nonzero_on(&[true, false, false]));
        e.add_row(&row(&[(2, 1)]));
        assert!(!e.has_nonzero_on(&[true, true, true]));
    }

    #[test]
    fn reduced_form_is_order_independent() {
        let rs = [row(&[(0, 2), (1, 4), (3, 1)]), row(&[(1, 1), (2, 3)]), row(&[(0, 1), (3, 5)])];
        let mut a = Echelon::new(4);
        let mut b = Echelon::new(4);
        for r in &rs {
            a.add_row(r);
        }
        for r in rs.iter().rev() {
            b.add_row(r);
        }
        assert_eq!(a.nullspace(), b.nullspace());
    }

    #[test]
    fn rank_counts_independent_vectors() {
        let vs = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)], vec![rat(0), rat(1)]];
        assert_eq!(rank(&vs), 2);
    }
}
