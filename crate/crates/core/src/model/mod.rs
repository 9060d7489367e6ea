//! Learnable parameters and every forward computation of the joint model.

mod checkpoint;
mod forward;
mod likelihood;

use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, read_checkpoint_from, write_checkpoint, write_checkpoint_to, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use forward::{
    build_context, forward_trajectory, gru_step, initial_long_state, location_logits, rnn_step, ForwardTrace,
    GruStep,
};
pub use likelihood::{
    joint_log_likelihood_full, link_logit, link_prob, location_log_prob_full, network_log_likelihood_full,
    trajectory_log_likelihood_full,
};

/// Which sequential context blocks feed the location scorer. Disabled blocks
/// are zero-filled so the context keeps length `4d`.
/// Serialized by name: `full`, `base`, `base-long` or `base-short`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VariantMask {
    pub use_short: bool,
    pub use_long: bool,
}

impl VariantMask {
    pub const FULL: VariantMask = VariantMask { use_short: true, use_long: true };
    /// User embeddings only.
    pub const BASE: VariantMask = VariantMask { use_short: false, use_long: false };
    pub const BASE_LONG: VariantMask = VariantMask { use_short: false, use_long: true };

    pub fn label(&self) -> &'static str {
        match (self.use_short, self.use_long) {
            (true, true) => "base+long+short",
            (false, true) => "base+long",
            (true, false) => "base+short",
            (false, false) => "base",
        }
    }
}

impl From<VariantMask> for String {
    fn from(v: VariantMask) -> String {
        match (v.use_short, v.use_long) {
            (true, true) => "full",
            (false, true) => "base-long",
            (true, false) => "base-short",
            (false, false) => "base",
        }
        .to_owned()
    }
}

impl TryFrom<String> for VariantMask {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "full" => Ok(Self::FULL),
            "base" => Ok(Self::BASE),
            "base-long" => Ok(Self::BASE_LONG),
            "base-short" => Ok(VariantMask { use_short: true, use_long: false }),
            _ => Err(format!("unknown variant `{s}`, expected full, base, base-long or base-short")),
        }
    }
}

impl Default for VariantMask {
    fn default() -> Self {
        Self::FULL
    }
}

/// Identifies one of the 17 parameter tensors, in checkpoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorId {
    P,
    F,
    FCtx,
    U,
    UOut,
    S0,
    W,
    C0,
    WI1,
    WI2,
    WF1,
    WF2,
    WC1,
    WC2,
    BI,
    BF,
    BC,
}

impl TensorId {
    pub const ALL: [TensorId; 17] = [
        TensorId::P,
        TensorId::F,
        TensorId::FCtx,
        TensorId::U,
        TensorId::UOut,
        TensorId::S0,
        TensorId::W,
        TensorId::C0,
        TensorId::WI1,
        TensorId::WI2,
        TensorId::WF1,
        TensorId::WF2,
        TensorId::WC1,
        TensorId::WC2,
        TensorId::BI,
        TensorId::BF,
        TensorId::BC,
    ];

    /// Row-indexed embedding tables (users or locations).
    pub const TABLES: [TensorId; 5] = [TensorId::P, TensorId::F, TensorId::FCtx, TensorId::U, TensorId::UOut];

    pub fn name(self) -> &'static str {
        match self {
            TensorId::P => "P",
            TensorId::F => "F",
            TensorId::FCtx => "F_ctx",
            TensorId::U => "U",
            TensorId::UOut => "U_out",
            TensorId::S0 => "S0",
            TensorId::W => "W",
            TensorId::C0 => "C0",
            TensorId::WI1 => "W_i1",
            TensorId::WI2 => "W_i2",
            TensorId::WF1 => "W_f1",
            TensorId::WF2 => "W_f2",
            TensorId::WC1 => "W_c1",
            TensorId::WC2 => "W_c2",
            TensorId::BI => "b_i",
            TensorId::BF => "b_f",
            TensorId::BC => "b_c",
        }
    }

    pub fn is_table(self) -> bool {
        Self::TABLES.contains(&self)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<TensorId> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// Row-major dense matrix; vectors are stored as a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// All learnable tensors for `|V|` users, `|L|` locations and dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    /// Visit preference, `|V| × d`.
    pub p: Matrix,
    /// Network embedding, `|V| × d`.
    pub f: Matrix,
    /// Network context embedding (link targets), `|V| × d`.
    pub f_ctx: Matrix,
    /// Location input embedding shared by both recurrent cells, `|L| × d`.
    pub u: Matrix,
    /// Location prediction embedding, `|L| × 4d`.
    pub u_out: Matrix,
    pub s0: Matrix,
    pub w: Matrix,
    pub c0: Matrix,
    pub w_i1: Matrix,
    pub w_i2: Matrix,
    pub w_f1: Matrix,
    pub w_f2: Matrix,
    pub w_c1: Matrix,
    pub w_c2: Matrix,
    pub b_i: Matrix,
    pub b_f: Matrix,
    pub b_c: Matrix,
}

impl ModelParams {
    pub fn zeros(num_users: usize, num_locations: usize, dim: usize) -> Self {
        let sq = || Matrix::zeros(dim, dim);
        let vec = || Matrix::zeros(1, dim);
        ModelParams {
            dim,
            p: Matrix::zeros(num_users, dim),
            f: Matrix::zeros(num_users, dim),
            f_ctx: Matrix::zeros(num_users, dim),
            u: Matrix::zeros(num_locations, dim),
            u_out: Matrix::zeros(num_locations, 4 * dim),
            s0: vec(),
            w: sq(),
            c0: vec(),
            w_i1: sq(),
            w_i2: sq(),
            w_f1: sq(),
            w_f2: sq(),
            w_c1: sq(),
            w_c2: sq(),
            b_i: vec(),
            b_f: vec(),
            b_c: vec(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.p.rows
    }

    pub fn num_locations(&self) -> usize {
        self.u.rows
    }

    pub fn tensor(&self, id: TensorId) -> &Matrix {
        match id {
            TensorId::P => &self.p,
            TensorId::F => &self.f,
            TensorId::FCtx => &self.f_ctx,
            TensorId::U => &self.u,
            TensorId::UOut => &self.u_out,
            TensorId::S0 => &self.s0,
            TensorId::W => &self.w,
            TensorId::C0 => &self.c0,
            TensorId::WI1 => &self.w_i1,
            TensorId::WI2 => &self.w_i2,
            TensorId::WF1 => &self.w_f1,
            TensorId::WF2 => &self.w_f2,
            TensorId::WC1 => &self.w_c1,
            TensorId::WC2 => &self.w_c2,
            TensorId::BI => &self.b_i,
            TensorId::BF => &self.b_f,
            TensorId::BC => &self.b_c,
        }
    }

    pub fn tensor_mut(&mut self, id: TensorId) -> &mut Matrix {
        match id {
            TensorId::P => &mut self.p,
            TensorId::F => &mut self.f,
            TensorId::FCtx => &mut self.f_ctx,
            TensorId::U => &mut self.u,
            TensorId::UOut => &mut self.u_out,
            TensorId::S0 => &mut self.s0,
            TensorId::W => &mut self.w,
            TensorId::C0 => &mut self.c0,
            TensorId::WI1 => &mut self.w_i1,
            TensorId::WI2 => &mut self.w_i2,
            TensorId::WF1 => &mut self.w_f1,
            TensorId::WF2 => &mut self.w_f2,
            TensorId::WC1 => &mut self.w_c1,
            TensorId::WC2 => &mut self.w_c2,
            TensorId::BI => &mut self.b_i,
            TensorId::BF => &mut self.b_f,
            TensorId::BC => &mut self.b_c,
        }
    }

    pub fn is_finite(&self) -> bool {
        TensorId::ALL.iter().all(|&t| self.tensor(t).data.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let p = ModelParams::zeros(3, 5, 2);
        assert_eq!((p.u_out.rows, p.u_out.cols), (5, 8));
        assert_eq!((p.w_f1.rows, p.w_f1.cols), (2, 2));
        assert_eq!((p.b_c.rows, p.b_c.cols), (1, 2));
        for t in TensorId::ALL {
            assert_eq!(TensorId::from_name(t.name()), Some(t));
            assert_eq!(TensorId::ALL[t.index()], t);
        }
    }
}
