//! Transferred Chern classes: the coefficients expressing `Tr*(omega_k) - c_k`
//! as a series in the top Chern class `c_p`, and transfers of norm-symmetric
//! classes built from them.

mod assembly;
pub mod bp2;
pub mod morava;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficients::{Coeff, CoefficientRing, RingError, ScalarError};
use crate::fgl::FglError;
use crate::series::{SeriesError, SparseSeries, VarSpec, VarTable};
use crate::symfun::SymError;

pub use assembly::{rho_star_p2, transfer_of_norm_symmetric, transfer_x_power_p2, TransferData};
pub use bp2::{bp_d_series_p2, bp_delta_p2, bp_to_morava, BpDelta, DSeries, DiffReport, REFERENCE_DELTA1};
pub use morava::{
    display_table, lambda_table, layout_terms, morava_lambda, morava_transfer_data, morava_transfer_omega,
    sigma_chern_expansion, transfer_c1, LambdaRow, MoravaExpansion,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransferError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Fgl(#[from] FglError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("index {k} out of range {lo}..={hi}")]
    OutOfRange { k: u32, lo: u32, hi: u32 },
    #[error("x-truncation {requested} is too small; at least {minimal} is needed")]
    OrderTooSmall { requested: u32, minimal: u32 },
    #[error("residual equation does not vanish: {0}")]
    Residual(String),
    #[error("solver did not stabilise: {0}")]
    NotStable(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl TransferError {
    /// Whether the error reports a failed internal consistency check rather
    /// than invalid input.
    pub fn is_consistency(&self) -> bool {
        matches!(self, TransferError::Residual(_) | TransferError::NotStable(_) | TransferError::Invariant(_))
            || matches!(self, TransferError::Fgl(FglError::NotIntegral { .. }))
    }
}

/// Which cohomology theory a table of coefficients lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Theory {
    MoravaK { p: u32, s: u32 },
    BP { p: u32, generators: u32 },
}

/// Coefficients `delta_i^(k)` as series in `z`, keyed by `(k, i)`.
#[derive(Debug, Clone)]
pub struct DeltaTable<C: Coeff> {
    pub theory: Theory,
    pub entries: BTreeMap<(u32, u32), SparseSeries<C>>,
}

impl<C: Coeff> DeltaTable<C> {
    pub fn new(theory: Theory) -> Self {
        DeltaTable { theory, entries: BTreeMap::new() }
    }

    pub fn get(&self, k: u32, i: u32) -> Option<&SparseSeries<C>> {
        self.entries.get(&(k, i))
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|((k, i), v)| json!({"k": k, "i": i, "value": v.terms_json(), "text": v.to_string()}))
            .collect();
        json!({"theory": self.theory, "entries": entries})
    }
}

/// Generator set of a transfer expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// `c` of degree 2 and the Chern classes `c_1..c_p` of the cyclic cover.
    PiCover,
    /// `c` of degree `2(p-1)` and the Chern classes `c_1..c_p` of the
    /// symmetric-group cover.
    SigmaCover,
}

/// Variables `c, c_1..c_p` for the given cover.
pub fn cover_table(ring: &CoefficientRing, p: u32, basis: Basis) -> Arc<VarTable> {
    let cdeg = match basis {
        Basis::PiCover => 2,
        Basis::SigmaCover => 2 * (p as i32 - 1),
    };
    let mut vars = vec![VarSpec::series("c", cdeg, None)];
    vars.extend((1..=p).map(|k| VarSpec::series(&chern_name(k), 2 * k as i32, None)));
    VarTable::with_ring(ring, vars).expect("distinct names")
}

/// Name of the k-th Chern class variable.
pub fn chern_name(k: u32) -> String {
    format!("c_{k}")
}

/// `lhs = series`, a class in the cohomology of the homotopy orbit space.
#[derive(Debug, Clone)]
pub struct TransferExpression<C: Coeff> {
    pub basis: Basis,
    pub lhs: String,
    pub series: SparseSeries<C>,
}

impl<C: Coeff> TransferExpression<C> {
    pub fn to_json(&self) -> Value {
        json!({
            "basis": self.basis,
            "lhs": self.lhs,
            "terms": self.series.terms_json(),
            "text": self.series.to_string(),
        })
    }
}

impl<C: Coeff> std::fmt::Display for TransferExpression<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {}", self.lhs, self.series)
    }
}

/// Re-index `f` onto `target`, renaming variables by `pairs` and keeping the
/// other names.
pub fn rename<C: Coeff>(
    f: &SparseSeries<C>,
    target: &Arc<VarTable>,
    pairs: &[(&str, &str)],
) -> Result<SparseSeries<C>, SeriesError> {
    let src = f.vars();
    let map: Vec<Option<usize>> = src
        .iter()
        .map(|v| {
            let name = pairs.iter().find(|(a, _)| *a == v.name).map(|(_, b)| *b).unwrap_or(&v.name);
            target.index(name)
        })
        .collect();
    f.transform(f.ring(), target, None, |m, c| {
        let mut mm = target.unit();
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            match map[i] {
                Some(j) => mm[j] += e,
                None => return Err(SeriesError::UnknownVariable(src.get(i).name.clone())),
            }
        }
        Ok(Some((mm, c.clone())))
    })
}
