//! Stable Euler classes `Tr*(1)` of finite groups, ring presentations and
//! module bases built from them.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficients::{inv_mod, Coeff, CoefficientRing, Fp, RingError, Q};
use crate::fgl::{bp_fgl, morava_fgl, FglError, FormalGroupLaw};
use crate::series::{SeriesError, SparseSeries, VarSpec, VarTable};
use crate::symfun::{express_in_elementary, omega_power, orbit_count_residue, sigma_table, x_name, x_table, SymError};
use crate::transfer::{
    bp_to_morava, chern_name, cover_table, morava_transfer_data, rename, transfer_of_norm_symmetric, Basis,
    MoravaExpansion, Theory, TransferError, TransferExpression,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Fgl(#[from] FglError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("{name} = {value} out of range {lo}..={hi}")]
    OutOfRange { name: &'static str, value: u64, lo: u64, hi: u64 },
    #[error("parameters too large: {0}")]
    TooLarge(String),
    #[error("consistency check failed: {0}")]
    Mismatch(String),
}

impl GroupError {
    /// Whether the error reports a failed internal consistency check rather
    /// than invalid input.
    pub fn is_consistency(&self) -> bool {
        match self {
            GroupError::Mismatch(_) => true,
            GroupError::Transfer(e) => e.is_consistency(),
            GroupError::Fgl(FglError::NotIntegral { .. }) => true,
            _ => false,
        }
    }
}

fn range(name: &'static str, value: u32, lo: u32, hi: u32) -> Result<(), GroupError> {
    if value < lo || value > hi {
        return Err(GroupError::OutOfRange { name, value: value as u64, lo: lo as u64, hi: hi as u64 });
    }
    Ok(())
}

fn checked_pow(p: u32, e: u32) -> Result<u32, GroupError> {
    p.checked_pow(e).ok_or_else(|| GroupError::TooLarge(format!("{p}^{e}")))
}

/// The groups whose stable Euler classes are computed here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "family")]
pub enum GroupDescriptor {
    Cyclic {
        q: u32,
    },
    Product {
        qs: Vec<u32>,
    },
    SigmaP {
        p: u32,
    },
    /// `Z/p^n wr Z/p`.
    Wreath {
        p: u32,
        n: u32,
    },
    /// `(Z/p)^n x| Z/p` with the generator acting by a Jordan block.
    Semidirect {
        p: u32,
        n: u32,
    },
}

impl GroupDescriptor {
    pub fn validate(&self) -> Result<(), GroupError> {
        let prime = |p: u32| {
            if crate::coefficients::is_prime(p) {
                Ok(())
            } else {
                Err(GroupError::Ring(RingError::NotPrime(p)))
            }
        };
        match self {
            GroupDescriptor::Cyclic { q } => range("q", *q, 1, u32::MAX),
            GroupDescriptor::Product { qs } => {
                if qs.is_empty() {
                    return Err(GroupError::OutOfRange { name: "factors", value: 0, lo: 1, hi: u64::MAX });
                }
                qs.iter().try_for_each(|&q| range("q", q, 1, u32::MAX))
            }
            GroupDescriptor::SigmaP { p } => prime(*p),
            GroupDescriptor::Wreath { p, n } => prime(*p).and_then(|_| range("n", *n, 1, u32::MAX)),
            GroupDescriptor::Semidirect { p, n } => prime(*p).and_then(|_| range("n", *n, 1, *p)),
        }
    }
}

/// `[q](z)/z` for the law `fgl`, as a series in `z`.
pub fn quillen_euler<C: Coeff>(fgl: &FormalGroupLaw<C>, q: u32) -> Result<SparseSeries<C>, GroupError> {
    range("q", q, 1, u32::MAX)?;
    let qs = fgl.q_series(q)?.series;
    let e = qs.divide_by_var("z")?;
    let want = C::from_i64(q as i64, fgl.ring());
    let got = e.constant_term();
    if got != want {
        return Err(GroupError::Mismatch(format!("[{q}](z)/z has constant term {got}")));
    }
    Ok(e)
}

/// Truncation order of the K(s) law that determines `[q](z)/z` completely
/// modulo `z^(p^(n s))`, where `p^n` is the p-part of `q`.
pub fn morava_order_for(p: u32, s: u32, q: u32) -> Result<u32, GroupError> {
    let mut n = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        n += 1;
    }
    checked_pow(p, s * n.max(1))
}

/// `[q](z)/z` in `K(s)`, with `z^(p^(n s)) = 0` for the p-part `p^n` of `q`.
pub fn morava_quillen_euler(p: u32, s: u32, q: u32) -> Result<SparseSeries<Fp>, GroupError> {
    range("q", q, 1, u32::MAX)?;
    let order = morava_order_for(p, s, q)?;
    let fgl = morava_fgl(p, s, order)?;
    let e = quillen_euler(&fgl, q)?;
    let cap = if q.is_multiple_of(p) { order } else { 1 };
    let t = VarTable::with_ring(fgl.ring(), vec![VarSpec::series("z", 2, Some(cap))])?;
    Ok(e.filter(|m| m[e.vars().require("z").expect("z")] < cap as i32).embed(&t, None)?)
}

/// `prod_i [q_i](z_i)/z_i` over the variables `z_1..z_m`.
pub fn product_euler<C: Coeff>(fgl: &FormalGroupLaw<C>, qs: &[u32]) -> Result<SparseSeries<C>, GroupError> {
    GroupDescriptor::Product { qs: qs.to_vec() }.validate()?;
    let names: Vec<String> = (1..=qs.len()).map(|i| format!("z_{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let t = fgl.table(&refs);
    let mut out = SparseSeries::one(fgl.ring(), &t, None);
    for (q, name) in qs.iter().zip(&names) {
        let e = quillen_euler(fgl, *q)?;
        out = &out * &rename(&e, &t, &[("z", name)])?;
    }
    Ok(out)
}

/// `m_s = floor((p^s - 1)/(p - 1)) + 1`.
pub fn m_s(p: u32, s: u32) -> Result<u32, GroupError> {
    Ok((checked_pow(p, s)? - 1) / (p - 1) + 1)
}

/// A relation `series = 0`, possibly only modulo an ideal named by `modulo`.
#[derive(Debug, Clone)]
pub struct Relation {
    pub series: SparseSeries<Fp>,
    pub modulo: Option<String>,
}

/// Generators, relations and optionally an explicit module basis.
#[derive(Debug, Clone)]
pub struct RingPresentation {
    pub theory: Theory,
    pub title: String,
    pub generators: Vec<(String, i32)>,
    pub relations: Vec<Relation>,
    pub basis: Option<Vec<String>>,
    /// Named elements attached to the presentation, e.g. `Tr(1)`.
    pub data: Vec<(String, SparseSeries<Fp>)>,
    /// Terms the presentation leaves undetermined.
    pub unknowns: Vec<String>,
}

impl RingPresentation {
    pub fn rank(&self) -> Option<usize> {
        self.basis.as_ref().map(|b| b.len())
    }

    /// Every relation and datum is homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        self.relations.iter().all(|r| r.series.homogeneous_degree().is_some() || r.series.is_zero())
            && self.data.iter().all(|(_, d)| d.homogeneous_degree().is_some() || d.is_zero())
    }

    pub fn to_json(&self) -> Value {
        let gens: Vec<Value> = self.generators.iter().map(|(n, d)| json!({"name": n, "degree": d})).collect();
        let rels: Vec<Value> = self
            .relations
            .iter()
            .map(|r| json!({"terms": r.series.terms_json(), "text": r.series.to_string(), "modulo": r.modulo}))
            .collect();
        let data: Vec<Value> =
            self.data.iter().map(|(n, d)| json!({"name": n, "terms": d.terms_json(), "text": d.to_string()})).collect();
        json!({
            "theory": self.theory,
            "title": self.title,
            "generators": gens,
            "relations": rels,
            "rank": self.rank(),
            "basis": self.basis,
            "data": data,
            "unknowns": self.unknowns,
        })
    }
}

impl fmt::Display for RingPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        let gens: Vec<String> = self.generators.iter().map(|(n, d)| format!("{n} (degree {d})")).collect();
        writeln!(f, "generators: {}", gens.join(", "))?;
        for r in &self.relations {
            match &r.modulo {
                Some(m) => writeln!(f, "relation: {} = 0 modulo ({m})", r.series)?,
                None => writeln!(f, "relation: {} = 0", r.series)?,
            }
        }
        for (n, d) in &self.data {
            writeln!(f, "{n} = {d}")?;
        }
        if let Some(b) = &self.basis {
            writeln!(f, "rank: {}", b.len())?;
            if b.len() <= 64 {
                writeln!(f, "basis: {}", b.join(", "))?;
            }
        }
        for u in &self.unknowns {
            writeln!(f, "unknown: {u}")?;
        }
        Ok(())
    }
}

/// `K(s)^*(B Sigma_p) = K(s)^*[y]/(y^(m_s))` with `Tr*(1) = -v_s y^(m_s - 1)`.
pub fn sigma_p_presentation(p: u32, s: u32) -> Result<RingPresentation, GroupError> {
    let ring = Arc::new(CoefficientRing::morava(p, s)?);
    let m = m_s(p, s)?;
    let ydeg = 2 * (p as i32 - 1);
    let t = VarTable::with_ring(&ring, vec![VarSpec::series("y", ydeg, None)])?;
    let one = Fp::new(1, p);
    let rel = SparseSeries::monomial(&ring, &t, &[("y", m as i32)], one, None)?;
    let vs = format!("v_{s}");
    let tr = SparseSeries::monomial(&ring, &t, &[(vs.as_str(), 1), ("y", m as i32 - 1)], Fp::new(-1, p), None)?;
    let basis = (0..m)
        .map(|i| match i {
            0 => "1".to_string(),
            1 => "y".to_string(),
            _ => format!("y^{i}"),
        })
        .collect();
    Ok(RingPresentation {
        theory: Theory::MoravaK { p, s },
        title: format!("K({s})^*(B Sigma_{p})"),
        generators: vec![("y".into(), ydeg)],
        relations: vec![Relation { series: rel, modulo: None }],
        basis: Some(basis),
        data: vec![("Tr(1)".into(), tr)],
        unknowns: Vec::new(),
    })
}

/// Comparison of `(p-1)! [p](z)/z` from BP with the restriction
/// `y -> z^(p-1)` of `Tr*(1) = -v_s y^(m_s - 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaRelationReport {
    pub p: u32,
    pub s: u32,
    /// `(p-1)! mod p`.
    pub factorial_residue: u32,
    /// `(p-1)! [p](z)/z` in BP with generators `v_1..v_s`.
    pub bp_value: String,
    /// Its image in `K(s)^*[z]/(z^(p^s))`.
    pub image: String,
    /// `-v_s z^((p-1)(m_s-1))`.
    pub expected: String,
    pub holds: bool,
}

pub fn bp_sigma_p_relation_check(p: u32, s: u32) -> Result<SigmaRelationReport, GroupError> {
    range("s", s, 1, u32::MAX)?;
    let order = checked_pow(p, s)?;
    let fgl = bp_fgl(p, s, order)?;
    let fact: i64 = (1..p as i64).product();
    let e = quillen_euler(&fgl, p)?.scale(&crate::coefficients::q_int(fact));
    let image = bp_to_morava(&e, s)?;
    let m = m_s(p, s)?;
    let vs = format!("v_{s}");
    let expected = SparseSeries::monomial(
        image.ring(),
        image.vars(),
        &[(vs.as_str(), 1), ("z", ((p - 1) * (m - 1)) as i32)],
        Fp::new(-1, p),
        None,
    )?;
    let holds = image == expected;
    Ok(SigmaRelationReport {
        p,
        s,
        factorial_residue: (fact % p as i64) as u32,
        bp_value: e.to_string(),
        image: image.to_string(),
        expected: expected.to_string(),
        holds,
    })
}

/// `prod_i [p^n](z_i)/z_i = g(sigma_1..sigma_p)` in `K(s)` with
/// `z_i^(p^(n s)) = 0`, and the Euler class `Tr*(1) = v_s c^(p^s-1) g(c_1..c_p)`
/// of `Z/p^n wr Z/p` by Frobenius reciprocity.
#[derive(Debug, Clone)]
pub struct WreathEuler {
    pub p: u32,
    pub n: u32,
    pub s: u32,
    /// `g(c_1..c_p)` over the cyclic cover table.
    pub symmetric_part: TransferExpression<Fp>,
    pub euler: TransferExpression<Fp>,
}

pub fn wreath_euler(p: u32, n: u32, s: u32) -> Result<WreathEuler, GroupError> {
    GroupDescriptor::Wreath { p, n }.validate()?;
    let q = checked_pow(p, n)?;
    let cap = checked_pow(p, n * s)?;
    let fgl = morava_fgl(p, s, cap)?;
    let ring = fgl.ring().clone();
    let single = quillen_euler(&fgl, q)?;
    let xs: Vec<VarSpec> = (1..=p).map(|i| VarSpec::series(&x_name(i), 2, Some(cap))).collect();
    let t = VarTable::with_ring(&ring, xs)?;
    let mut prod = SparseSeries::one(&ring, &t, None);
    for i in 1..=p {
        let name = x_name(i);
        let f = single.filter(|m| m[single.vars().require("z").expect("z")] < cap as i32);
        prod = &prod * &rename(&f, &t, &[("z", name.as_str())])?;
    }
    let st = sigma_table(&ring, p, &[]);
    let g = express_in_elementary(&prod, &st)?;
    let cover = cover_table(&ring, p, Basis::PiCover);
    let pairs: Vec<(String, String)> = (1..=p).map(|k| (crate::symfun::sigma_name(k), chern_name(k))).collect();
    let pair_refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let g = rename(&g, &cover, &pair_refs)?;
    let vs = format!("v_{s}");
    let tr_pi = SparseSeries::monomial(
        &ring,
        &cover,
        &[(vs.as_str(), 1), ("c", checked_pow(p, s)? as i32 - 1)],
        Fp::new(1, p),
        None,
    )?;
    let euler = &tr_pi * &g;
    let c = SparseSeries::var(&ring, &cover, "c", None)?;
    let killed =
        (&c * &euler).filter(|m| m[cover.require("c").expect("c")] < checked_pow(p, s).expect("checked") as i32);
    if !killed.is_zero() {
        return Err(GroupError::Mismatch(format!("c * Tr(1) does not vanish: {killed}")));
    }
    if euler.homogeneous_degree().is_some_and(|d| d != 0) {
        return Err(GroupError::Mismatch(format!("Euler class has degree {:?}", euler.homogeneous_degree())));
    }
    let name = format!("Z/{q} wr Z/{p}");
    Ok(WreathEuler {
        p,
        n,
        s,
        symmetric_part: TransferExpression { basis: Basis::PiCover, lhs: format!("g[{name}]"), series: g },
        euler: TransferExpression { basis: Basis::PiCover, lhs: format!("Tr[{name}](1)"), series: euler },
    })
}

/// `p^s p^(n s) + (p^(n s p) - p^(n s))/p`, the rank of `K(s)^*(B(Z/p^n wr Z/p))`.
pub fn wreath_rank(p: u32, s: u32, n: u32) -> Result<u128, GroupError> {
    let big = |e: u32| -> Result<u128, GroupError> {
        (p as u128).checked_pow(e).ok_or_else(|| GroupError::TooLarge(format!("{p}^{e}")))
    };
    let m = big(n * s)?;
    Ok(big(s)? * m + (big(n * s * p)? - m) / p as u128)
}

/// Cyclic orbits of `p`-tuples over `0..m` that are not constant, each as
/// its lexicographically least rotation, found by listing all `m^p` tuples.
pub fn enumerate_orbit_classes(p: u32, m: u32) -> Result<Vec<Vec<u32>>, GroupError> {
    let total = (m as u64)
        .checked_pow(p)
        .filter(|&t| t <= 1 << 22)
        .ok_or_else(|| GroupError::TooLarge(format!("{m}^{p} tuples")))?;
    let mut seen = BTreeSet::new();
    for code in 0..total {
        let mut tuple = Vec::with_capacity(p as usize);
        let mut r = code;
        for _ in 0..p {
            tuple.push((r % m as u64) as u32);
            r /= m as u64;
        }
        if tuple.iter().all(|&a| a == tuple[0]) {
            continue;
        }
        let least = (0..p as usize)
            .map(|k| tuple[k..].iter().chain(&tuple[..k]).copied().collect::<Vec<u32>>())
            .min()
            .expect("nonempty");
        seen.insert(least);
    }
    Ok(seen.into_iter().collect())
}

/// The free basis of `K(s)^*(B(Z/p^n wr Z/p))`: `gamma^i (z^j)^(x)p` and the
/// orbit sums of non-constant tuples. For `p = 2` the algebra relations in
/// `c = gamma`, `ct_1`, `c_2` are attached, with the terms divisible by `c`
/// reported as unknown.
pub fn wreath_basis(p: u32, s: u32, n: u32) -> Result<RingPresentation, GroupError> {
    GroupDescriptor::Wreath { p, n }.validate()?;
    range("s", s, 1, u32::MAX)?;
    let ring = Arc::new(CoefficientRing::morava(p, s)?);
    let ps = checked_pow(p, s)?;
    let m = checked_pow(p, n * s)?;
    let mut basis = Vec::new();
    for i in 0..ps {
        for j in 0..m {
            basis.push(format!("gamma^{i}*(z^{j})^{p}"));
        }
    }
    for t in enumerate_orbit_classes(p, m)? {
        let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
        basis.push(format!("N(z^({}))", parts.join(",")));
    }
    let want = wreath_rank(p, s, n)?;
    if basis.len() as u128 != want {
        return Err(GroupError::Mismatch(format!("enumerated {} basis elements, formula gives {want}", basis.len())));
    }
    let title = format!("K({s})^*(B(Z/{} wr Z/{p}))", checked_pow(p, n)?);
    let mut pres = RingPresentation {
        theory: Theory::MoravaK { p, s },
        title,
        generators: Vec::new(),
        relations: Vec::new(),
        basis: Some(basis),
        data: Vec::new(),
        unknowns: Vec::new(),
    };
    if p == 2 {
        let t = VarTable::with_ring(
            &ring,
            vec![VarSpec::series("c", 2, None), VarSpec::series("ct_1", 2, None), VarSpec::series("c_2", 4, None)],
        )?;
        let one = Fp::new(1, 2);
        let mono = |powers: &[(&str, i32)]| SparseSeries::monomial(&ring, &t, powers, one, None);
        pres.generators = vec![("c".into(), 2), ("ct_1".into(), 2), ("c_2".into(), 4)];
        pres.relations = vec![
            Relation { series: mono(&[("c", ps as i32)])?, modulo: None },
            Relation { series: mono(&[("ct_1", 1), ("c", 1)])?, modulo: None },
            Relation { series: mono(&[("ct_1", m as i32)])?, modulo: Some("c".into()) },
            Relation { series: mono(&[("c_2", m as i32)])?, modulo: Some("c".into()) },
        ];
        pres.unknowns = vec![
            format!("terms divisible by c in the relation for ct_1^{m}"),
            format!("terms divisible by c in the relation for c_2^{m}"),
        ];
    }
    Ok(pres)
}

/// `Tr*(1)` for `(Z/p)^n x| Z/p`:
/// `v_s^n u Tr*(omega_n(p^s - 1))` with `u` the inverse of the number of
/// cyclic orbits of `n`-subsets mod p (`u = 1` for `n = p`), assembled from
/// the K(s) transfers of the orbit sums and of `1`.
#[derive(Debug, Clone)]
pub struct SemidirectEuler {
    pub p: u32,
    pub n: u32,
    pub s: u32,
    /// `u` as a residue mod p.
    pub unit: u32,
    /// The coefficient of `z_1^(p^s-1)...z_n^(p^s-1)` in `prod [p](z_i)/z_i`.
    pub euler_of_kernel: String,
    pub euler: TransferExpression<Fp>,
}

pub fn semidirect_euler(p: u32, n: u32, s: u32) -> Result<SemidirectEuler, GroupError> {
    GroupDescriptor::Semidirect { p, n }.validate()?;
    let ps = checked_pow(p, s)?;
    let l = ps - 1;
    if (n as u64) * (l as u64) * (p as u64) > 400 {
        return Err(GroupError::TooLarge(format!("degree {} symmetric expansion", n as u64 * l as u64 * p as u64)));
    }
    let fgl = morava_fgl(p, s, ps)?;
    let kernel = product_euler(&fgl, &vec![p; n as usize])?;
    let kt = kernel.vars().clone();
    let top: Vec<(String, i32)> = (1..=n).map(|i| (format!("z_{i}"), l as i32)).collect();
    let top_refs: Vec<(&str, i32)> = top.iter().map(|(a, e)| (a.as_str(), *e)).collect();
    let cut = kernel.filter(|m| kt.iter().enumerate().all(|(i, v)| !v.name.starts_with("z_") || m[i] <= l as i32));
    let vs = format!("v_{s}");
    let mut vn = top_refs.clone();
    vn.push((vs.as_str(), n as i32));
    let want = SparseSeries::monomial(fgl.ring(), &kt, &vn, Fp::new(1, p), None)?;
    if cut != want {
        return Err(GroupError::Mismatch(format!("Euler class of (Z/{p})^{n} is {cut}, expected {want}")));
    }
    let unit = if n == p {
        1
    } else {
        let r = orbit_count_residue(p, n);
        inv_mod(r, p).ok_or_else(|| GroupError::Mismatch(format!("orbit count {r} is not a unit mod {p}")))?
    };

    let e = MoravaExpansion::with_default_order(p, s)?;
    let data = morava_transfer_data(&e)?;
    let qring = Arc::new(CoefficientRing::bp(p, 1)?);
    let xt = x_table(&qring, p, &[]);
    let a: SparseSeries<Q> = if n == p {
        let all: Vec<(String, i32)> = (1..=p).map(|i| (x_name(i), l as i32)).collect();
        let refs: Vec<(&str, i32)> = all.iter().map(|(a, e)| (a.as_str(), *e)).collect();
        SparseSeries::monomial(&qring, &xt, &refs, crate::coefficients::q_int(1), None)?
    } else {
        omega_power(&qring, &xt, p, n, l)?
    };
    let tr = transfer_of_norm_symmetric(&a, &data)?;
    let ring = e.ring().clone();
    let factor = SparseSeries::monomial(&ring, &data.table, &[(vs.as_str(), n as i32)], Fp::new(unit as i64, p), None)?;
    let series = &tr.series * &factor;
    if series.homogeneous_degree().is_some_and(|d| d != 0) {
        return Err(GroupError::Mismatch(format!("Euler class has degree {:?}", series.homogeneous_degree())));
    }
    Ok(SemidirectEuler {
        p,
        n,
        s,
        unit,
        euler_of_kernel: want.to_string(),
        euler: TransferExpression { basis: Basis::PiCover, lhs: format!("Tr[(Z/{p})^{n} x| Z/{p}](1)"), series },
    })
}
