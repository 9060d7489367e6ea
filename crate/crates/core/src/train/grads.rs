use std::collections::BTreeMap;

use crate::model::{ModelParams, TensorId};

/// Row-sparse gradient for an embedding table. Rows absent from the map are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    cols: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseRows {
    pub fn new(cols: usize) -> Self {
        SparseRows { cols, rows: BTreeMap::new() }
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let cols = self.cols;
        self.rows.entry(i).or_insert_with(|| vec![0.0; cols])
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.rows.get(&i).map(Vec::as_slice)
    }

    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(&i, r)| (i, r.as_slice()))
    }

    pub fn add(&mut self, other: &SparseRows) {
        for (i, r) in other.iter() {
            let dst = self.row_mut(i);
            dst.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
    }

    pub fn to_dense(&self, num_rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_rows * self.cols];
        for (i, r) in self.iter() {
            out[i * self.cols..(i + 1) * self.cols].copy_from_slice(r);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Sparse(SparseRows),
    /// Empty until first written; empty means all zero.
    Dense(Vec<f64>),
}

/// Gradient of a scalar loss with respect to every parameter tensor.
///
/// Embedding tables are row-sparse and record which rows were touched; the
/// recurrent weights are dense.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    shapes: Vec<(usize, usize)>,
    slots: Vec<Slot>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let shapes: Vec<(usize, usize)> = TensorId::ALL
            .iter()
            .map(|&t| (params.tensor(t).rows, params.tensor(t).cols))
            .collect();
        let slots = TensorId::ALL
            .iter()
            .map(|&t| {
                if t.is_table() {
                    Slot::Sparse(SparseRows::new(shapes[t.index()].1))
                } else {
                    Slot::Dense(Vec::new())
                }
            })
            .collect();
        Gradients { shapes, slots }
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        self.shapes[id.index()]
    }

    pub fn table(&self, id: TensorId) -> &SparseRows {
        match &self.slots[id.index()] {
            Slot::Sparse(s) => s,
            Slot::Dense(_) => panic!("{} is not an embedding table", id.name()),
        }
    }

    pub fn table_mut(&mut self, id: TensorId) -> &mut SparseRows {
        match &mut self.slots[id.index()] {
            Slot::Sparse(s) => s,
            Slot::Dense(_) => panic!("{} is not an embedding table", id.name()),
        }
    }

    pub fn dense_mut(&mut self, id: TensorId) -> &mut [f64] {
        let (r, c) = self.shapes[id.index()];
        match &mut self.slots[id.index()] {
            Slot::Dense(v) => {
                if v.is_empty() {
                    v.resize(r * c, 0.0);
                }
                v
            }
            Slot::Sparse(_) => panic!("{} is an embedding table", id.name()),
        }
    }

    /// Dense slice, or `None` when never written (all zero).
    pub fn dense(&self, id: TensorId) -> Option<&[f64]> {
        match &self.slots[id.index()] {
            Slot::Dense(v) if !v.is_empty() => Some(v),
            Slot::Dense(_) => None,
            Slot::Sparse(_) => panic!("{} is an embedding table", id.name()),
        }
    }

    /// Entry at a row-major flat index.
    pub fn get(&self, id: TensorId, flat: usize) -> f64 {
        let (_, cols) = self.shapes[id.index()];
        match &self.slots[id.index()] {
            Slot::Sparse(s) => s.row(flat / cols).map_or(0.0, |r| r[flat % cols]),
            Slot::Dense(v) => v.get(flat).copied().unwrap_or(0.0),
        }
    }

    pub fn to_dense(&self, id: TensorId) -> Vec<f64> {
        let (r, c) = self.shapes[id.index()];
        match &self.slots[id.index()] {
            Slot::Sparse(s) => s.to_dense(r),
            Slot::Dense(v) if v.is_empty() => vec![0.0; r * c],
            Slot::Dense(v) => v.clone(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        assert_eq!(self.shapes, other.shapes, "gradient shapes differ");
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            match (dst, src) {
                (Slot::Sparse(a), Slot::Sparse(b)) => a.add(b),
                (Slot::Dense(_), Slot::Dense(b)) if b.is_empty() => {}
                (Slot::Dense(a), Slot::Dense(b)) => {
                    if a.is_empty() {
                        a.clone_from(b);
                    } else {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    }
                }
                _ => unreachable!("slot kinds fixed by tensor id"),
            }
        }
    }

    /// Multiplies every entry of one tensor; used to inject faults in tests.
    pub fn scale_tensor(&mut self, id: TensorId, factor: f64) {
        match &mut self.slots[id.index()] {
            Slot::Sparse(s) => s.rows.values_mut().flatten().for_each(|v| *v *= factor),
            Slot::Dense(v) => v.iter_mut().for_each(|x| *x *= factor),
        }
    }

    pub fn first_non_finite(&self) -> Option<TensorId> {
        TensorId::ALL.into_iter().find(|&t| match &self.slots[t.index()] {
            Slot::Sparse(s) => s.rows.values().flatten().any(|v| !v.is_finite()),
            Slot::Dense(v) => v.iter().any(|x| !x.is_finite()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_accumulation_and_lookup() {
        let p = ModelParams::zeros(3, 4, 2);
        let mut a = Gradients::zeros_like(&p);
        a.table_mut(TensorId::UOut).row_mut(2)[7] = 1.5;
        a.dense_mut(TensorId::W)[3] = -2.0;
        let mut b = Gradients::zeros_like(&p);
        b.table_mut(TensorId::UOut).row_mut(2)[7] = 0.5;
        b.table_mut(TensorId::UOut).row_mut(0)[0] = 1.0;
        a.add(&b);
        assert_eq!(a.get(TensorId::UOut, 2 * 8 + 7), 2.0);
        assert_eq!(a.get(TensorId::UOut, 0), 1.0);
        assert_eq!(a.get(TensorId::UOut, 8), 0.0);
        assert_eq!(a.get(TensorId::W, 3), -2.0);
        assert_eq!(a.get(TensorId::WF1, 0), 0.0);
        assert_eq!(a.table(TensorId::UOut).touched().collect::<Vec<_>>(), vec![0, 2]);
        assert!(a.first_non_finite().is_none());
        a.dense_mut(TensorId::BC)[0] = f64::NAN;
        assert_eq!(a.first_non_finite(), Some(TensorId::BC));
    }
}
