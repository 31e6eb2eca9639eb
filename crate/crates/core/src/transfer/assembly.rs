//! Transfers of arbitrary norm-symmetric classes from the transfers of the
//! orbit sums `omega_j` and of `1`.

use std::sync::Arc;

use super::{chern_name, TransferError, TransferExpression};
use crate::coefficients::{is_p_integral, q_frac, Coeff, Q};
use crate::series::{SparseSeries, VarSpec, VarTable};
use crate::symfun::{decompose_norm_symmetric, sigma_name, sigma_table};

/// `Tr*(omega_1..omega_{p-1})` and `Tr*(1)` over the cyclic cover, all in
/// one table holding `c, c_1..c_p`.
#[derive(Debug, Clone)]
pub struct TransferData<C: Coeff> {
    pub p: u32,
    pub table: Arc<VarTable>,
    pub tr_omega: Vec<SparseSeries<C>>,
    pub tr_one: SparseSeries<C>,
}

/// Move a rational polynomial in `s1..sp` onto the cover table (`s_k -> c_k`)
/// with scalars converted to `C`.
fn onto_cover<C: Coeff>(f: &SparseSeries<Q>, data: &TransferData<C>) -> Result<SparseSeries<C>, TransferError> {
    let src = f.vars();
    let t = &data.table;
    let ring = data.tr_one.ring();
    let map: Vec<Option<usize>> = src
        .iter()
        .map(|v| {
            let name = (1..=data.p).find(|&k| sigma_name(k) == v.name).map(chern_name).unwrap_or(v.name.clone());
            t.index(&name)
        })
        .collect();
    let mut out = SparseSeries::zero(ring, t, None);
    for (m, c) in f.iter() {
        let mut mm = t.unit();
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let j = map[i].ok_or_else(|| crate::series::SeriesError::UnknownVariable(src.get(i).name.clone()))?;
            mm[j] += e;
        }
        out.add_term(mm, C::from_rational(c, ring)?);
    }
    Ok(out)
}

/// `Tr*(a)` for a polynomial `a` in `x_1..x_p` with rational coefficients
/// whose cyclic norm is symmetric:
/// `sum_j Tr*(omega_j) a_j(c_1..c_p) + Tr*(1) h(c_p)/p`, where
/// `N(a) = sum_j sigma_j a_j(sigma) + h(sigma_p)`.
pub fn transfer_of_norm_symmetric<C: Coeff>(
    a: &SparseSeries<Q>,
    data: &TransferData<C>,
) -> Result<TransferExpression<C>, TransferError> {
    let p = data.p;
    let target = sigma_table(a.ring(), p, &[]);
    let dec = decompose_norm_symmetric(a, p, &target)?;
    let mut out = SparseSeries::zero(data.tr_one.ring(), &data.table, None);
    for (j, part) in dec.parts.iter().enumerate() {
        if part.is_zero() {
            continue;
        }
        out = &out + &(&data.tr_omega[j] * &onto_cover(part, data)?);
    }
    if !dec.sigma_p_part.is_zero() {
        let h = dec.sigma_p_part.scale(&q_frac(1, p as i64));
        if let Some((_, c)) = h.iter().find(|(_, c)| !is_p_integral(c, p)) {
            return Err(TransferError::Invariant(format!(
                "pure top-class part of the norm is not divisible by {p}: {c}"
            )));
        }
        out = &out + &(&data.tr_one * &onto_cover(&h, data)?);
    }
    let lhs = format!("Tr({a})");
    Ok(TransferExpression { basis: super::Basis::PiCover, lhs, series: out })
}

/// `Tr*(x^k)` for `p = 2` from `Tr*(x^k) = Tr*(x^(k-1)) c_1 - Tr*(x^(k-2)) c_2`
/// with `Tr*(x^0) = Tr*(1)`.
pub fn transfer_x_power_p2<C: Coeff>(k: u32, data: &TransferData<C>) -> Result<TransferExpression<C>, TransferError> {
    if data.p != 2 {
        return Err(TransferError::OutOfRange { k: data.p, lo: 2, hi: 2 });
    }
    if k < 1 {
        return Err(TransferError::OutOfRange { k, lo: 1, hi: u32::MAX });
    }
    let ring = data.tr_one.ring();
    let c1 = SparseSeries::var(ring, &data.table, "c_1", None)?;
    let c2 = SparseSeries::var(ring, &data.table, "c_2", None)?;
    let mut prev = data.tr_one.clone();
    let mut cur = data.tr_omega[0].clone();
    for _ in 1..k {
        let next = &(&cur * &c1) - &(&prev * &c2);
        prev = cur;
        cur = next;
    }
    let lhs = if k == 1 { "Tr(x)".to_string() } else { format!("Tr(x^{k})") };
    Ok(TransferExpression { basis: super::Basis::PiCover, lhs, series: cur })
}

/// Restriction to `BU(1)^2` for `p = 2`: `c -> 0`, `c_1 -> x + tx`,
/// `c_2 -> x tx`.
pub fn rho_star_p2<C: Coeff>(f: &SparseSeries<C>) -> Result<SparseSeries<C>, TransferError> {
    let ring = f.ring();
    let t = VarTable::with_ring(ring, vec![VarSpec::series("x", 2, None), VarSpec::series("tx", 2, None)])?;
    let x = SparseSeries::var(ring, &t, "x", None)?;
    let tx = SparseSeries::var(ring, &t, "tx", None)?;
    let zero = x.zero_like();
    let sum = &x + &tx;
    let prod = &x * &tx;
    Ok(f.substitute(&[("c", &zero), ("c_1", &sum), ("c_2", &prod)], &t, None)?)
}
