//! The Brown-Peterson solver at `p = 2`: the coefficients `delta_j` with
//! `Tr*(x) = c_1 - c + sum_{j>=1} delta_j(c) c_2^j`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::{cover_table, rename, Basis, DeltaTable, Theory, TransferData, TransferError, TransferExpression};
use crate::coefficients::{is_p_integral, q_frac, Coeff, CoefficientRing, Fp, Q};
use crate::fgl::{FglError, FormalGroupLaw};
use crate::series::{parse_series, QuotientSpec, Rule, SparseSeries, VarSpec, VarTable};
use crate::symfun::{express_in_elementary, sigma_table};

/// Published value of `delta_1` modulo `z^8`, kept for the diff report.
pub const REFERENCE_DELTA1: &str =
    "v_1^2*z^2 + (v_1^3 + v_2)*z^3 + v_1*z^4 + (v_1^6 + v_1^3*v_2)*z^6 + (v_1^4*v_2 + v_2^2 + v_3)*z^7";

/// The relation `c * G(c, c_1, c_2) = 0` coming from
/// `F(u_1,c) F(u_2,c) = c_2`, normalised so that `G(0, 0, c_2) = 0`, and its
/// expansion `c_1 = d_0 + sum_{n>=2} d_n c_1^n` after division by the unit
/// coefficient of `c_1`.
#[derive(Debug, Clone)]
pub struct DSeries {
    pub z_order: u32,
    pub c2_order: u32,
    /// Generators, `c` (capped at `z_order + 1`), `c_1`, `c_2` (capped at
    /// `c2_order + 1`).
    pub table: Arc<VarTable>,
    /// `G` with the pure `c_2`-part `2 gamma(c_2)` replaced by
    /// `gamma(c_2) [2](c)/c`.
    pub relation: SparseSeries<Q>,
    /// `gamma(c_2)`, half the pure `c_2`-part of the raw relation.
    pub gamma: SparseSeries<Q>,
    /// Coefficient of `c_1` in `relation`.
    pub unit: SparseSeries<Q>,
    /// `d_n(c, c_2)` for `n = 0, 2, 3, ...`, reduced modulo `[2](c)`.
    pub d: BTreeMap<u32, SparseSeries<Q>>,
    /// `[2](c)` over `table`.
    pub two_series: SparseSeries<Q>,
    pub quotient: QuotientSpec<Q>,
}

/// Build the d-series from the law `fgl` (prime 2), valid modulo
/// `c^(z_order+1)` and `c_2^(c2_order+1)`.
pub fn bp_d_series_p2(fgl: &FormalGroupLaw<Q>, z_order: u32, c2_order: u32) -> Result<DSeries, TransferError> {
    let ring = fgl.ring().clone();
    if ring.prime() != 2 {
        return Err(TransferError::OutOfRange { k: ring.prime(), lo: 2, hi: 2 });
    }
    let needed = z_order + 2 * c2_order + 2;
    if fgl.order() < needed {
        return Err(FglError::OrderTooSmall { requested: fgl.order(), minimal: needed }.into());
    }
    let bound = Some(2 * needed as i64);
    let t3 = fgl.table(&["x_1", "x_2", "c"]);
    let x1 = SparseSeries::var(&ring, &t3, "x_1", bound)?;
    let x2 = SparseSeries::var(&ring, &t3, "x_2", bound)?;
    let c = SparseSeries::var(&ring, &t3, "c", bound)?;
    let f1 = fgl.apply(&x1, &c)?;
    let f2 = fgl.apply(&x2, &c)?;
    let raw = &(&f1 * &f2) - &(&x1 * &x2);
    let b = raw.divide_by_var("c")?.with_bound(Some(2 * (needed as i64 - 1)));
    let st = sigma_table(&ring, 2, &[VarSpec::series("c", 2, None)]);
    let g = express_in_elementary(&b, &st)?;

    let table = VarTable::with_ring(
        &ring,
        vec![
            VarSpec::series("c", 2, Some(z_order + 1)),
            VarSpec::series("c_1", 2, Some(z_order + 1)),
            VarSpec::series("c_2", 4, Some(c2_order + 1)),
        ],
    )?;
    let g = rename(&g, &table, &[("s1", "c_1"), ("s2", "c_2")])?;
    let two = rename(&fgl.q_series(2)?.series, &table, &[("z", "c")])?;
    let quotient = QuotientSpec::new(vec![
        Rule::Nilpotent { var: "c".into(), exp: z_order + 1 },
        Rule::PSeries { var: "c".into(), prime: 2, relation: two.clone() },
    ])?;

    let ci = table.require("c")?;
    let c1i = table.require("c_1")?;
    let pure = g.filter(|m| m[ci] == 0 && m[c1i] == 0);
    let gamma = pure.scale(&q_frac(1, 2));
    if let Some((_, q)) = gamma.iter().find(|(_, q)| !is_p_integral(q, 2)) {
        return Err(TransferError::Invariant(format!("pure c_2 part of the relation is not even: {q}")));
    }
    let euler = two.divide_by_var("c")?;
    let relation = &g - &(&gamma * &euler);
    if !relation.filter(|m| m[ci] == 0 && m[c1i] == 0).is_zero() {
        return Err(TransferError::Invariant("normalised relation has a pure c_2 part".into()));
    }

    let unit = relation.coefficient_of("c_1", 1)?;
    let inv = unit.inverse()?;
    let mut d = BTreeMap::new();
    let top = relation.max_exponent("c_1")?.unwrap_or(0);
    for n in (0..=top).filter(|&n| n != 1) {
        let h = relation.coefficient_of("c_1", n)?;
        let dn = quotient.reduce(&(&h * &inv).neg_series())?;
        if !dn.is_zero() || n == 0 {
            d.insert(n as u32, dn);
        }
    }
    if !d[&0].filter(|m| m[ci] == 0).is_zero() {
        return Err(TransferError::Invariant("d_0 does not vanish at c = 0".into()));
    }
    Ok(DSeries { z_order, c2_order, table, relation, gamma, unit, d, two_series: two, quotient })
}

/// The solved coefficients with their checks.
#[derive(Debug, Clone)]
pub struct BpDelta {
    pub z_order: u32,
    pub c2_order: u32,
    /// `delta_j(z)` for `0 <= j <= c2_order`, reduced modulo `[2](z)` and
    /// `z^(z_order+1)`.
    pub deltas: Vec<SparseSeries<Q>>,
    /// Variables: generators and `z`.
    pub z_table: Arc<VarTable>,
    /// `[2](z)` over `z_table`.
    pub two_series: SparseSeries<Q>,
    /// One pass per `c_2`-order, each followed by a residual check.
    pub passes: u32,
}

/// Solve `G(c, -delta, c_2) = 0` in `BP[[c]]/([2](c))[[c_2]]` for
/// `delta = -c + sum_j delta_j c_2^j`, one `c_2`-order per pass. The
/// equation is equivalent to `c_1 = d_0 + sum d_n c_1^n` at `c_1 = -delta`;
/// `c c_1^n = c (-delta)^n` follows from `c Tr*(x) = 0`.
pub fn bp_delta_p2(ds: &DSeries) -> Result<BpDelta, TransferError> {
    let t = &ds.table;
    let ring = ds.relation.ring().clone();
    let c = SparseSeries::var(&ring, t, "c", None)?;
    let eval = |delta: &SparseSeries<Q>| -> Result<SparseSeries<Q>, TransferError> {
        let minus = delta.neg_series();
        Ok(ds.quotient.reduce(&ds.relation.substitute(&[("c_1", &minus)], t, None)?)?)
    };

    let mut delta = c.neg_series();
    let base = eval(&delta)?.coefficient_of("c_2", 0)?;
    if !base.is_zero() {
        return Err(TransferError::Residual(format!("base case delta_0 = -c leaves {base}")));
    }
    let slope = ds.relation.derivative("c_1")?.substitute(&[("c_1", &c)], t, None)?.coefficient_of("c_2", 0)?;
    let slope_inv = slope.inverse()?;
    let mut passes = 0;
    for j in 1..=ds.c2_order as i32 {
        let e = eval(&delta)?;
        for i in 0..j {
            let stale = e.coefficient_of("c_2", i)?;
            if !stale.is_zero() {
                return Err(TransferError::NotStable(format!("c_2^{i} coefficient changed at pass {j}: {stale}")));
            }
        }
        let r = e.coefficient_of("c_2", j)?;
        let dj = ds.quotient.reduce(&(&r * &slope_inv))?;
        let c2j = SparseSeries::monomial(&ring, t, &[("c_2", j)], q_frac(1, 1), None)?;
        delta = &delta + &(&dj * &c2j);
        passes += 1;
    }
    let last = eval(&delta)?;
    if !last.is_zero() {
        return Err(TransferError::Residual(format!("equation not satisfied after solving: {last}")));
    }

    let z_table = VarTable::with_ring(&ring, vec![VarSpec::series("z", 2, Some(ds.z_order + 1))])?;
    let mut deltas = Vec::new();
    for j in 0..=ds.c2_order as i32 {
        let dj = rename(&delta.coefficient_of("c_2", j)?, &z_table, &[("c", "z")])?;
        let want = 2 - 4 * j as i64;
        if !dj.is_homogeneous_of(want) {
            return Err(TransferError::Invariant(format!("delta_{j} is not homogeneous of degree {want}")));
        }
        deltas.push(dj);
    }
    let two_series = rename(&ds.two_series, &z_table, &[("c", "z")])?;
    Ok(BpDelta { z_order: ds.z_order, c2_order: ds.c2_order, deltas, z_table, two_series, passes })
}

impl BpDelta {
    pub fn table(&self) -> DeltaTable<Q> {
        let ring = self.z_table.iter().filter(|v| v.name.starts_with("v_")).count() as u32;
        let mut out = DeltaTable::new(Theory::BP { p: 2, generators: ring });
        for (j, d) in self.deltas.iter().enumerate() {
            out.entries.insert((1, j as u32), d.clone());
        }
        out
    }

    /// `Tr*(x) = c_1 + sum_j delta_j(c) c_2^j` over the cyclic cover.
    pub fn transfer_x(&self) -> Result<TransferExpression<Q>, TransferError> {
        let ring = self.deltas[0].ring().clone();
        let t = cover_table(&ring, 2, Basis::PiCover);
        let mut out = SparseSeries::var(&ring, &t, "c_1", None)?;
        for (j, d) in self.deltas.iter().enumerate() {
            let c2j = SparseSeries::monomial(&ring, &t, &[("c_2", j as i32)], q_frac(1, 1), None)?;
            out = &out + &(&rename(d, &t, &[("z", "c")])? * &c2j);
        }
        Ok(TransferExpression { basis: Basis::PiCover, lhs: "Tr(x)".into(), series: out })
    }

    /// `Tr*(x)` and `Tr*(1) = [2](c)/c` packaged for the general assembly.
    pub fn transfer_data(&self) -> Result<TransferData<Q>, TransferError> {
        let tx = self.transfer_x()?;
        let t = tx.series.vars().clone();
        let one = rename(&self.two_series.divide_by_var("z")?, &t, &[("z", "c")])?;
        Ok(TransferData { p: 2, table: t, tr_omega: vec![tx.series], tr_one: one })
    }

    /// Parse [`REFERENCE_DELTA1`] over the `z` table.
    pub fn reference_delta1(&self) -> Result<SparseSeries<Q>, TransferError> {
        let ring = self.deltas[0].ring();
        parse_series(REFERENCE_DELTA1, ring, &self.z_table, None)
            .map_err(|e| TransferError::Invariant(format!("reference value does not parse: {e}")))
    }

    /// Normal form modulo `[2](z)` and `z^(z_order+1)`.
    pub fn reduce(&self, f: &SparseSeries<Q>) -> Result<SparseSeries<Q>, TransferError> {
        let q = QuotientSpec::new(vec![
            Rule::Nilpotent { var: "z".into(), exp: self.z_order + 1 },
            Rule::PSeries { var: "z".into(), prime: 2, relation: self.two_series.clone() },
        ])?;
        Ok(q.reduce(f)?)
    }

    /// Term-by-term comparison, modulo `z^(z_order)`, of a reference series
    /// with the normal forms of `delta_1`, `z delta_1` and `-z delta_1`.
    pub fn diff_report(&self, reference: &SparseSeries<Q>) -> Result<DiffReport, TransferError> {
        let d1 = &self.deltas[1];
        let z = SparseSeries::var(d1.ring(), &self.z_table, "z", None)?;
        let zi = self.z_table.require("z")?;
        let modulus = self.z_order as i32;
        let cut = |f: SparseSeries<Q>| f.filter(|m| m[zi] < modulus);
        let zd = d1 * &z;
        let reference = cut(self.reduce(reference)?);
        let candidates = [
            ("delta_1".to_string(), cut(self.reduce(d1)?)),
            ("z*delta_1".to_string(), cut(self.reduce(&zd)?)),
            ("-z*delta_1".to_string(), cut(self.reduce(&zd.neg_series())?)),
        ];
        let mut report =
            DiffReport { computed: d1.to_string(), computed_degree: d1.homogeneous_degree(), ..Default::default() };
        let mut best: Option<(usize, usize)> = None;
        for (idx, (name, cand)) in candidates.iter().enumerate() {
            let matched = reference.iter().filter(|(m, c)| cand.coeff(m) == Some(*c)).count();
            report.candidates.push(Candidate { name: name.clone(), value: cand.to_string(), matched });
            if best.is_none_or(|(_, b)| matched > b) {
                best = Some((idx, matched));
            }
        }
        let (bi, _) = best.expect("candidates are nonempty");
        let (bname, bval) = &candidates[bi];
        report.best = bname.clone();
        let target = d1.homogeneous_degree().unwrap_or(0) + if bi == 0 { 0 } else { 2 };
        for (m, c) in reference.sorted_terms() {
            let degree = reference.vars().degree(m);
            report.reference_terms.push(ReferenceTerm {
                term: reference.format_terms(&[(m, c)]),
                degree,
                homogeneous: degree == target,
                matches: candidates.iter().filter(|(_, v)| v.coeff(m) == Some(c)).map(|(n, _)| n.clone()).collect(),
            });
        }
        for (m, c) in bval.sorted_terms() {
            if reference.coeff(m) != Some(c) {
                report.computed_only.push(bval.format_terms(&[(m, c)]));
            }
        }
        Ok(report)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .deltas
            .iter()
            .enumerate()
            .map(|(j, d)| json!({"k": 1, "i": j, "value": d.terms_json(), "text": d.to_string()}))
            .collect();
        json!({
            "theory": {"kind": "BP", "p": 2},
            "z_order": self.z_order,
            "c2_order": self.c2_order,
            "entries": entries,
        })
    }
}

/// One term of the reference value and the candidates containing it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReferenceTerm {
    pub term: String,
    pub degree: i64,
    /// Whether the term has the degree of the best candidate.
    pub homogeneous: bool,
    pub matches: Vec<String>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Candidate {
    pub name: String,
    pub value: String,
    /// Reference terms found in this candidate.
    pub matched: usize,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DiffReport {
    pub computed: String,
    pub computed_degree: Option<i64>,
    pub candidates: Vec<Candidate>,
    /// Candidate agreeing with the most reference terms.
    pub best: String,
    pub reference_terms: Vec<ReferenceTerm>,
    /// Terms of the best candidate absent from the reference.
    pub computed_only: Vec<String>,
}

impl DiffReport {
    /// Reference terms of the expected degree missing from the best
    /// candidate.
    pub fn homogeneous_mismatches(&self) -> Vec<&ReferenceTerm> {
        self.reference_terms.iter().filter(|t| t.homogeneous && !t.matches.contains(&self.best)).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("computed delta_1 = {}\n", self.computed);
        for c in &self.candidates {
            out.push_str(&format!("{} = {}  [{} reference terms]\n", c.name, c.value, c.matched));
        }
        out.push_str(&format!("best candidate: {}\n", self.best));
        for t in &self.reference_terms {
            let verdict = if t.matches.contains(&self.best) {
                "match".to_string()
            } else if t.homogeneous {
                "MISMATCH".to_string()
            } else {
                format!("mismatch, degree {} is not homogeneous", t.degree)
            };
            out.push_str(&format!("reference {}: {verdict}\n", t.term));
        }
        for t in &self.computed_only {
            out.push_str(&format!("computed only: {t}\n"));
        }
        out
    }
}

/// Image of a BP series in `z` in `K(s)`: `v_i -> 0` for `i != s`, scalars
/// mod p, `z^(p^s) = 0`.
pub fn bp_to_morava(f: &SparseSeries<Q>, s: u32) -> Result<SparseSeries<Fp>, TransferError> {
    let p = f.ring().prime();
    let ring = Arc::new(CoefficientRing::morava(p, s)?);
    let t = VarTable::with_ring(&ring, vec![VarSpec::series("z", 2, Some(p.pow(s)))])?;
    let src = f.vars();
    let vs = format!("v_{s}");
    let zi = src.require("z")?;
    let out = f.transform(&ring, &t, None, |m, c| {
        for (i, v) in src.iter().enumerate() {
            if m[i] != 0 && v.name.starts_with("v_") && v.name != vs {
                return Ok(None);
            }
        }
        let mut mm = t.unit();
        mm[t.require("z")?] = m[zi];
        if let Some(i) = src.index(&vs) {
            mm[t.require(&vs)?] = m[i];
        }
        Ok(Some((mm, Fp::from_rational(c, &ring)?)))
    })?;
    Ok(out)
}
