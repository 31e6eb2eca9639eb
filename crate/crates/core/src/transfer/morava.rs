//! The K(s) solver: Chern classes of `x, F(x,z), ..., F(x,(p-1)z)` written
//! as a polynomial in the top class, for every prime.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::{
    chern_name, cover_table, rename, Basis, DeltaTable, Theory, TransferData, TransferError, TransferExpression,
};
use crate::coefficients::{CoefficientRing, Fp};
use crate::fgl::{morava_fgl, FormalGroupLaw};
use crate::series::{Mono, SparseSeries, VarSpec, VarTable};
use crate::symfun::sigma_name;

/// The elementary symmetric functions of `u_0 = x` and `u_i = F(x, [i]z)`,
/// over `F_p[v_s][x, z] / (x^(x_order+1), z^(p^s))`.
#[derive(Debug, Clone)]
pub struct MoravaExpansion {
    p: u32,
    s: u32,
    x_order: u32,
    fgl: FormalGroupLaw<Fp>,
    table: Arc<VarTable>,
    z_table: Arc<VarTable>,
    sigmas: Vec<SparseSeries<Fp>>,
}

impl MoravaExpansion {
    pub fn new(p: u32, s: u32, x_order: u32) -> Result<Self, TransferError> {
        CoefficientRing::morava(p, s)?;
        let n = p.checked_pow(s).ok_or(TransferError::OrderTooSmall { requested: x_order, minimal: u32::MAX })?;
        let minimal = n * p;
        if x_order < minimal {
            return Err(TransferError::OrderTooSmall { requested: x_order, minimal });
        }
        Self::from_fgl(morava_fgl(p, s, x_order + n)?, x_order)
    }

    /// Build from an already computed K(s) law of order at least
    /// `x_order + p^s`.
    pub fn from_fgl(fgl: FormalGroupLaw<Fp>, x_order: u32) -> Result<Self, TransferError> {
        let ring = fgl.ring().clone();
        let (p, s) = match ring.height() {
            Some(s) => (ring.prime(), s),
            None => return Err(TransferError::Invariant("expected a Morava K-theory law".into())),
        };
        let n = p.checked_pow(s).ok_or(TransferError::OrderTooSmall { requested: x_order, minimal: u32::MAX })?;
        if x_order < n * p {
            return Err(TransferError::OrderTooSmall { requested: x_order, minimal: n * p });
        }
        if fgl.order() < x_order + n {
            return Err(crate::fgl::FglError::OrderTooSmall { requested: fgl.order(), minimal: x_order + n }.into());
        }
        let table = VarTable::with_ring(
            &ring,
            vec![VarSpec::series("x", 2, Some(x_order + 1)), VarSpec::series("z", 2, Some(n))],
        )?;
        let z_table = VarTable::with_ring(&ring, vec![VarSpec::series("z", 2, Some(n))])?;
        let x = SparseSeries::var(&ring, &table, "x", None)?;
        let z = SparseSeries::var(&ring, &table, "z", None)?;
        let mut roots = vec![x.clone()];
        for i in 1..p {
            let iz = fgl.q_series_of(i, &z)?.series;
            roots.push(fgl.apply(&x, &iz)?);
        }
        let mut sigmas: Vec<SparseSeries<Fp>> = vec![x.zero_like(); p as usize + 1];
        sigmas[0] = x.one_like();
        for u in &roots {
            for k in (1..=p as usize).rev() {
                let add = u * &sigmas[k - 1];
                sigmas[k] = &sigmas[k] + &add;
            }
        }
        Ok(MoravaExpansion { p, s, x_order, fgl, table, z_table, sigmas })
    }

    /// Default x-truncation `p^(s+1)`.
    pub fn with_default_order(p: u32, s: u32) -> Result<Self, TransferError> {
        let order = p.checked_pow(s + 1).ok_or(TransferError::OrderTooSmall { requested: 0, minimal: u32::MAX })?;
        Self::new(p, s, order)
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn height(&self) -> u32 {
        self.s
    }

    pub fn x_order(&self) -> u32 {
        self.x_order
    }

    pub fn ring(&self) -> &Arc<CoefficientRing> {
        self.fgl.ring()
    }

    pub fn fgl(&self) -> &FormalGroupLaw<Fp> {
        &self.fgl
    }

    /// Variables `v_s, x, z` with their caps.
    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    /// Variables `v_s, z`.
    pub fn z_table(&self) -> &Arc<VarTable> {
        &self.z_table
    }

    /// `sigma_k(x, F(x,z), ..., F(x,(p-1)z))` for `0 <= k <= p`.
    pub fn sigma(&self, k: u32) -> Result<&SparseSeries<Fp>, TransferError> {
        self.sigmas.get(k as usize).ok_or(TransferError::OutOfRange { k, lo: 0, hi: self.p })
    }

    /// `p^s`, the nilpotence exponent of `z`.
    pub fn z_cap(&self) -> u32 {
        self.p.pow(self.s)
    }

    /// `binom(p,k)/p * v_s * z^(p^s-1) * x^k`.
    pub fn transfer_term(&self, k: u32) -> Result<SparseSeries<Fp>, TransferError> {
        let ring = self.ring();
        let c = Fp::new(orbit_count(self.p, k) as i64, self.p);
        let vs = format!("v_{}", self.s);
        Ok(SparseSeries::monomial(
            ring,
            &self.table,
            &[(vs.as_str(), 1), ("z", self.z_cap() as i32 - 1), ("x", k as i32)],
            c,
            None,
        )?)
    }

    /// Substitute `y -> z^(p-1)` and `s{p} -> sigma_p` into a series over
    /// [`display_table`].
    pub fn expand_display(&self, f: &SparseSeries<Fp>) -> Result<SparseSeries<Fp>, TransferError> {
        let ring = self.ring();
        let y = SparseSeries::monomial(ring, &self.table, &[("z", self.p as i32 - 1)], Fp::new(1, self.p), None)?;
        let sp = sigma_name(self.p);
        Ok(f.substitute(&[("y", &y), (sp.as_str(), &self.sigmas[self.p as usize])], &self.table, None)?)
    }
}

/// `binom(p,k)/p`.
fn orbit_count(p: u32, k: u32) -> u64 {
    let mut b: u64 = 1;
    for i in 0..k as u64 {
        b = b * (p as u64 - i) / (i + 1);
    }
    b / p as u64
}

/// `sigma_k(x, F(x,z), ..., F(x,(p-1)z))` reduced modulo `z^(p^s)` and
/// `x^(x_order+1)`.
pub fn sigma_chern_expansion(p: u32, s: u32, k: u32, x_order: u32) -> Result<SparseSeries<Fp>, TransferError> {
    if k < 1 || k > p {
        return Err(TransferError::OutOfRange { k, lo: 1, hi: p });
    }
    let e = MoravaExpansion::new(p, s, x_order)?;
    Ok(e.sigma(k)?.clone())
}

/// Variables `v_s, y, s{p}, x` with `|y| = 2(p-1)`, `|s{p}| = 2p`.
pub fn display_table(ring: &CoefficientRing) -> Arc<VarTable> {
    let p = ring.prime();
    VarTable::with_ring(
        ring,
        vec![
            VarSpec::series("y", 2 * (p as i32 - 1), None),
            VarSpec::series(&sigma_name(p), 2 * p as i32, None),
            VarSpec::series("x", 2, None),
        ],
    )
    .expect("distinct names")
}

/// The coefficients `lambda_i^(k)`, `0 <= i <= max(p^s, x_order/p)`, with
/// `sigma_k = -sum_i lambda_i sigma_p^i + binom(p,k)/p x^k v_s z^(p^s-1)`.
/// At the default truncation the range is `0 <= i <= p^s`.
#[derive(Debug, Clone)]
pub struct LambdaRow {
    pub p: u32,
    pub s: u32,
    pub k: u32,
    /// Series in `v_s, z`, indexed by the power of `sigma_p`.
    pub lambdas: Vec<SparseSeries<Fp>>,
    /// Fixed-point passes until the solution stopped changing.
    pub passes: u32,
    /// Number of x-coefficient equations checked after solving.
    pub equations_checked: usize,
}

/// `x`-coefficients of `f` at the exponents `0, p, 2p, ..., n p`, as series
/// in `v_s, z`.
fn x_multiples(f: &SparseSeries<Fp>, e: &MoravaExpansion, n: u32) -> Result<Vec<SparseSeries<Fp>>, TransferError> {
    let t = f.vars();
    let xi = t.require("x")?;
    let zi = t.require("z")?;
    let vi = t.require(&format!("v_{}", e.s))?;
    let zt = &e.z_table;
    let zz = zt.require("z")?;
    let zv = zt.require(&format!("v_{}", e.s))?;
    let mut out: Vec<SparseSeries<Fp>> = (0..=n).map(|_| SparseSeries::zero(e.ring(), zt, None)).collect();
    for (m, c) in f.iter() {
        let xe = m[xi] as u32;
        if !xe.is_multiple_of(e.p) || xe / e.p > n {
            continue;
        }
        let mut mm = zt.unit();
        mm[zz] = m[zi];
        mm[zv] = m[vi];
        out[(xe / e.p) as usize].add_term(mm, *c);
    }
    Ok(out)
}

/// Solve for `lambda^(k)` and verify every x-coefficient of the resulting
/// identity.
pub fn morava_lambda(e: &MoravaExpansion, k: u32) -> Result<LambdaRow, TransferError> {
    let p = e.p;
    if k < 1 || k >= p {
        return Err(TransferError::OutOfRange { k, lo: 1, hi: p - 1 });
    }
    let n = e.z_cap().max(e.x_order / p);
    let sp = &e.sigmas[p as usize];
    let sk = &e.sigmas[k as usize];

    let mut powers: Vec<SparseSeries<Fp>> = Vec::with_capacity(n as usize + 1);
    powers.push(sp.one_like());
    for i in 1..=n as usize {
        let next = &powers[i - 1] * sp;
        powers.push(next);
    }
    // columns[i] = [(j, N_ji)] with N = M - I, M_ji = [x^(jp)] sigma_p^i
    let mut columns: Vec<Vec<(usize, SparseSeries<Fp>)>> = vec![Vec::new(); n as usize + 1];
    for i in 1..=n as usize {
        let coeffs = x_multiples(&powers[i], e, n)?;
        for (j, mut c) in coeffs.into_iter().enumerate() {
            if j == i {
                let one = c.one_like();
                c = &c - &one;
            }
            if j >= 1 && !c.is_zero() {
                columns[i].push((j, c));
            }
        }
    }
    let rhs = x_multiples(sk, e, n)?;
    let mut lambdas: Vec<SparseSeries<Fp>> = rhs.iter().map(|c| c.neg_series()).collect();
    // lambda_j + sum_i N_ji lambda_i = b_j, solved by accumulating corrections
    let mut delta: Vec<SparseSeries<Fp>> = lambdas.clone();
    delta[0] = delta[0].zero_like();
    let mut passes = 0u32;
    loop {
        let mut next: Vec<SparseSeries<Fp>> = delta.iter().map(|d| d.zero_like()).collect();
        let mut any = false;
        for (i, d) in delta.iter().enumerate().skip(1) {
            if d.is_zero() {
                continue;
            }
            for (j, nji) in &columns[i] {
                let prod = nji * d;
                next[*j] = &next[*j] - &prod;
                any = true;
            }
        }
        passes += 1;
        if !any || next.iter().all(|d| d.is_zero()) {
            break;
        }
        if passes > n + 1 {
            return Err(TransferError::NotStable(format!("lambda^({k}) after {passes} passes")));
        }
        for (l, d) in lambdas.iter_mut().zip(&next) {
            *l = &*l + d;
        }
        delta = next;
    }

    // full residual sigma_k + sum lambda_i sigma_p^i - transfer term
    let mut residual = sk - &e.transfer_term(k)?;
    for (i, l) in lambdas.iter().enumerate() {
        if l.is_zero() {
            continue;
        }
        let lifted = l.embed(&e.table, None)?;
        residual = &residual + &(&lifted * &powers[i]);
    }
    if !residual.is_zero() {
        return Err(TransferError::Residual(format!(
            "sigma_{k} for p={p}, s={}: {} nonzero terms, e.g. {}",
            e.s,
            residual.len(),
            residual.format_terms(&residual.sorted_terms()[..1])
        )));
    }
    let equations_checked = (e.x_order as usize + 1) * e.z_cap() as usize;

    let zi = e.z_table.require("z")?;
    for (i, l) in lambdas.iter().enumerate() {
        if l.iter().any(|(m, _)| m[zi] % (p as i32 - 1) != 0) {
            return Err(TransferError::Invariant(format!("lambda_{i}^({k}) is not a polynomial in z^(p-1)")));
        }
        let want = 2 * k as i64 - 2 * (p as i64) * i as i64;
        if !l.is_homogeneous_of(want) {
            return Err(TransferError::Invariant(format!("lambda_{i}^({k}) is not homogeneous of degree {want}")));
        }
    }
    Ok(LambdaRow { p, s: e.s, k, lambdas, passes, equations_checked })
}

impl LambdaRow {
    /// `lambda_i` rewritten in `y = z^(p-1)` over [`display_table`].
    pub fn lambda_in_y(&self, i: usize, table: &Arc<VarTable>) -> Result<SparseSeries<Fp>, TransferError> {
        let l = &self.lambdas[i];
        let src = l.vars();
        let zi = src.require("z")?;
        let yi = table.require("y")?;
        let step = self.p as i32 - 1;
        let map: Vec<Option<usize>> = src.iter().map(|v| table.index(&v.name)).collect();
        Ok(l.transform(l.ring(), table, None, |m, c| {
            let mut mm = table.unit();
            for (j, &e) in m.iter().enumerate() {
                if j == zi {
                    mm[yi] += e / step;
                } else if e != 0 {
                    mm[map[j].expect("generator present")] += e;
                }
            }
            Ok(Some((mm, *c)))
        })?)
    }

    /// Indices `i > p^s` with nonzero `lambda_i`, possible only above the
    /// default truncation.
    pub fn beyond_top(&self) -> Vec<usize> {
        let top = self.p.pow(self.s) as usize;
        (top + 1..self.lambdas.len()).filter(|&i| !self.lambdas[i].is_zero()).collect()
    }

    /// `-sum_i lambda_i(y) s{p}^i + binom(p,k)/p v_s y^((p^s-1)/(p-1)) x^k`.
    pub fn display_series(&self) -> Result<SparseSeries<Fp>, TransferError> {
        let ring = self.lambdas[0].ring().clone();
        let t = display_table(&ring);
        let sp = sigma_name(self.p);
        let mut out = SparseSeries::zero(&ring, &t, None);
        for i in 0..self.lambdas.len() {
            let l = self.lambda_in_y(i, &t)?;
            let si = SparseSeries::monomial(&ring, &t, &[(sp.as_str(), i as i32)], Fp::new(1, self.p), None)?;
            out = &out - &(&l * &si);
        }
        let vs = format!("v_{}", self.s);
        let top = (self.p.pow(self.s) as i32 - 1) / (self.p as i32 - 1);
        let c = Fp::new(orbit_count(self.p, self.k) as i64, self.p);
        out =
            &out + &SparseSeries::monomial(&ring, &t, &[(vs.as_str(), 1), ("y", top), ("x", self.k as i32)], c, None)?;
        Ok(out)
    }

    /// One line `s{k} = ...` with terms ordered by decreasing power of
    /// `s{p}`, then the `x` term, then the constant-in-`s{p}` remainder.
    pub fn paper_layout(&self) -> Result<String, TransferError> {
        let d = self.display_series()?;
        Ok(format!("{} = {}", sigma_name(self.k), layout_terms(&d, self.p)?))
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .lambdas
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_zero())
            .map(|(i, l)| json!({"i": i, "value": l.terms_json(), "text": l.to_string()}))
            .collect();
        json!({"p": self.p, "s": self.s, "k": self.k, "passes": self.passes, "lambda": entries})
    }
}

/// Renders a display-table series in the layout described at
/// [`LambdaRow::paper_layout`].
pub fn layout_terms(d: &SparseSeries<Fp>, p: u32) -> Result<String, TransferError> {
    let t = d.vars();
    let si = t.require(&sigma_name(p))?;
    let xi = t.require("x")?;
    let mut terms = d.sorted_terms();
    let rank = |m: &Mono| -> (i32, i32, i32) {
        if m[si] > 0 {
            (0, -m[si], 0)
        } else if m[xi] > 0 {
            (1, -m[xi], 0)
        } else {
            (2, 0, 0)
        }
    };
    terms.sort_by(|a, b| rank(a.0).cmp(&rank(b.0)).then_with(|| d.canonical_cmp(a.0, b.0)));
    Ok(d.format_terms(&terms))
}

/// All rows `k = 1..p-1` as a table keyed by `(k, i)`, zero entries omitted.
pub fn lambda_table(e: &MoravaExpansion) -> Result<(DeltaTable<Fp>, Vec<LambdaRow>), TransferError> {
    let mut table = DeltaTable::new(Theory::MoravaK { p: e.p, s: e.s });
    let mut rows = Vec::new();
    for k in 1..e.p {
        let row = morava_lambda(e, k)?;
        for (i, l) in row.lambdas.iter().enumerate() {
            if !l.is_zero() {
                table.entries.insert((k, i as u32), l.clone());
            }
        }
        rows.push(row);
    }
    Ok((table, rows))
}

/// `Tr*(omega_k) = c_k + sum_i delta_i(c) c_p^i` over the cyclic cover and
/// `Tr*(x_1...x_k) = k!(p-k)! (c_k + sum_i delta_i(c) c_p^i)` over the
/// symmetric cover, where `delta = lambda` and `c` stands for `z` (resp.
/// `y`).
pub fn morava_transfer_omega(
    row: &LambdaRow,
) -> Result<(TransferExpression<Fp>, TransferExpression<Fp>), TransferError> {
    let p = row.p;
    let k = row.k;
    let ring = row.lambdas[0].ring().clone();
    let pi_table = cover_table(&ring, p, Basis::PiCover);
    let sigma_table = cover_table(&ring, p, Basis::SigmaCover);
    let ck = chern_name(k);
    let cp = chern_name(p);
    let one = Fp::new(1, p);
    let scale = Fp::new((1..=k as i64).product::<i64>() * (1..=(p - k) as i64).product::<i64>(), p);

    let mut pi = SparseSeries::monomial(&ring, &pi_table, &[(ck.as_str(), 1)], one, None)?;
    let mut sig = SparseSeries::monomial(&ring, &sigma_table, &[(ck.as_str(), 1)], scale, None)?;
    let disp = display_table(&ring);
    for (i, l) in row.lambdas.iter().enumerate() {
        if l.is_zero() {
            continue;
        }
        let cpi = SparseSeries::monomial(&ring, &pi_table, &[(cp.as_str(), i as i32)], one, None)?;
        pi = &pi + &(&rename(l, &pi_table, &[("z", "c")])? * &cpi);
        let ly = row.lambda_in_y(i, &disp)?;
        let ly = rename(&ly, &sigma_table, &[("y", "c")])?;
        let cpi = SparseSeries::monomial(&ring, &sigma_table, &[(cp.as_str(), i as i32)], scale, None)?;
        sig = &sig + &(&ly * &cpi);
    }
    let lhs_pi = format!("Tr(w_{k})");
    let lhs_sigma = format!("Tr({})", (1..=k).map(|i| format!("x_{i}")).collect::<Vec<_>>().join("*"));
    Ok((
        TransferExpression { basis: Basis::PiCover, lhs: lhs_pi, series: pi },
        TransferExpression { basis: Basis::SigmaCover, lhs: lhs_sigma, series: sig },
    ))
}

/// `Tr*(x) = c_1 - v_s sum_{1<=j<=s-1} c^(p^s - p^j) c_p^(p^(j-1))` over the
/// cyclic cover, for odd `p`. At `p = 2` the sum `x + F(x,z)` has an extra
/// `z` and the closed form does not apply; use [`morava_transfer_omega`].
pub fn transfer_c1(p: u32, s: u32) -> Result<TransferExpression<Fp>, TransferError> {
    if p == 2 {
        return Err(TransferError::OutOfRange { k: p, lo: 3, hi: u32::MAX });
    }
    let ring = Arc::new(CoefficientRing::morava(p, s)?);
    let t = cover_table(&ring, p, Basis::PiCover);
    let vs = format!("v_{s}");
    let cp = chern_name(p);
    let mut out = SparseSeries::var(&ring, &t, "c_1", None)?;
    for j in 1..s {
        let term = SparseSeries::monomial(
            &ring,
            &t,
            &[(vs.as_str(), 1), ("c", (p.pow(s) - p.pow(j)) as i32), (cp.as_str(), p.pow(j - 1) as i32)],
            Fp::new(-1, p),
            None,
        )?;
        out = &out + &term;
    }
    Ok(TransferExpression { basis: Basis::PiCover, lhs: "Tr(x)".into(), series: out })
}

/// Transfers of `omega_1..omega_{p-1}` and of `1` over the cyclic cover.
pub fn morava_transfer_data(e: &MoravaExpansion) -> Result<TransferData<Fp>, TransferError> {
    let (_, rows) = lambda_table(e)?;
    let mut omegas = Vec::new();
    for row in &rows {
        omegas.push(morava_transfer_omega(row)?.0.series);
    }
    let ring = e.ring().clone();
    let t = cover_table(&ring, e.p, Basis::PiCover);
    let vs = format!("v_{}", e.s);
    let one =
        SparseSeries::monomial(&ring, &t, &[(vs.as_str(), 1), ("c", e.z_cap() as i32 - 1)], Fp::new(1, e.p), None)?;
    Ok(TransferData { p: e.p, table: t, tr_omega: omegas, tr_one: one })
}

/// Rows keyed by `i` with nonzero `lambda_i`, for reporting.
pub fn nonzero_lambdas(row: &LambdaRow) -> BTreeMap<usize, String> {
    row.lambdas.iter().enumerate().filter(|(_, l)| !l.is_zero()).map(|(i, l)| (i, l.to_string())).collect()
}
