//! Formal group laws of Brown-Peterson theory and Morava K-theory.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficients::{
    integrality_check, m_in_v_upto, q_frac, Coeff, CoefficientRing, Fp, RingError, ScalarError, Q,
};
use crate::series::{SeriesError, SparseSeries, VarSpec, VarTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FglError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("truncation order {requested} is too small; at least {minimal} is needed")]
    OrderTooSmall { requested: u32, minimal: u32 },
    #[error("formal group law coefficient is not {prime}-integral: {detail}")]
    NotIntegral { prime: u32, detail: String },
    #[error("q must be at least 1")]
    BadMultiple,
    #[error("{0}")]
    WrongRing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// `exp(log x + log y)` for the p-typical logarithm, in the v-basis.
    BpLog,
    /// Height-s Honda logarithm over the rationals, reduced mod p.
    HondaModP,
}

/// A bivariate series `F(x, y)` truncated at total degree `order` in `x, y`.
#[derive(Debug, Clone)]
pub struct FormalGroupLaw<C: Coeff> {
    ring: Arc<CoefficientRing>,
    law: SparseSeries<C>,
    order: u32,
    provenance: Provenance,
    log: Option<SparseSeries<Q>>,
}

/// `[q](z)` with its multiplier.
#[derive(Debug, Clone)]
pub struct QSeries<C: Coeff> {
    pub q: u32,
    pub series: SparseSeries<C>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub unit: bool,
    pub commutativity: bool,
    pub associativity: bool,
    /// Total degree through which associativity was compared.
    pub associativity_order: u32,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.unit && self.commutativity && self.associativity
    }
}

/// Generators followed by series variables of degree 2.
pub fn table_with(ring: &CoefficientRing, names: &[&str]) -> Arc<VarTable> {
    VarTable::with_ring(ring, names.iter().map(|n| VarSpec::series(n, 2, None)).collect())
        .expect("distinct variable names")
}

/// The p-typical logarithm `sum_n m_n x^(p^n)` in the v-basis, with
/// `v_k = 0` for `k` beyond the ring's generators.
pub fn bp_log(ring: &Arc<CoefficientRing>, order: u32) -> SparseSeries<Q> {
    let t = table_with(ring, &["x"]);
    let bound = Some(2 * order as i64);
    let p = ring.prime();
    let mut top = 0;
    while p.pow(top + 1) <= order {
        top += 1;
    }
    let ms = m_in_v_upto(top.max(1), ring, &t);
    let mut log = SparseSeries::var(ring, &t, "x", bound).unwrap();
    for n in 1..=top {
        let xn = SparseSeries::monomial(ring, &t, &[("x", p.pow(n) as i32)], q_frac(1, 1), bound).unwrap();
        log = &log + &(&ms[(n - 1) as usize].with_bound(bound) * &xn);
    }
    log
}

/// `sum_i v_s^(e_i) x^(p^(is)) / p^i` with `e_i = (p^(is)-1)/(p^s-1)`.
pub fn honda_log(ring: &Arc<CoefficientRing>, order: u32) -> SparseSeries<Q> {
    let s = ring.height().expect("Morava ring");
    let p = ring.prime() as u64;
    let t = table_with(ring, &["x"]);
    let bound = Some(2 * order as i64);
    let vs = format!("v_{s}");
    let mut log = SparseSeries::zero(ring, &t, bound);
    let mut i = 0u32;
    loop {
        let deg = p.pow(i * s);
        if deg > order as u64 {
            break;
        }
        let e = (deg - 1) / (p.pow(s) - 1);
        let c = Q::new(1.into(), num_bigint::BigInt::from(p).pow(i));
        let term = SparseSeries::monomial(ring, &t, &[("x", deg as i32), (&vs, e as i32)], c, bound).unwrap();
        log = &log + &term;
        i += 1;
    }
    log
}

/// `exp(log x + log y)` for a logarithm in `x`.
fn law_from_log(log: &SparseSeries<Q>, order: u32) -> Result<SparseSeries<Q>, FglError> {
    let ring = log.ring().clone();
    let bound = Some(2 * order as i64);
    let exp = log.reversion("x")?;
    let t2 = table_with(&ring, &["x", "y"]);
    let lx = log.embed(&t2, bound)?;
    let ty = table_with(&ring, &["y"]);
    let ly = log.substitute(&[("x", &SparseSeries::var(&ring, &ty, "y", bound)?)], &ty, bound)?.embed(&t2, bound)?;
    let sum = &lx + &ly;
    Ok(exp.substitute(&[("x", &sum)], &t2, bound)?)
}

pub fn bp_fgl(p: u32, n: u32, order: u32) -> Result<FormalGroupLaw<Q>, FglError> {
    if order < 2 {
        return Err(FglError::OrderTooSmall { requested: order, minimal: 2 });
    }
    let ring = Arc::new(CoefficientRing::bp(p, n)?);
    let log = bp_log(&ring, order);
    let law = law_from_log(&log, order)?;
    if !integrality_check(&law, p)? {
        let bad = law
            .iter()
            .find(|(_, c)| !crate::coefficients::is_p_integral(c, p))
            .map(|(m, c)| format!("{c} at {}", law.mono_string(m)));
        return Err(FglError::NotIntegral { prime: p, detail: bad.unwrap_or_default() });
    }
    Ok(FormalGroupLaw { ring, law, order, provenance: Provenance::BpLog, log: Some(log) })
}

/// The Morava K(s) law, valid through total degree `order >= p^s`.
pub fn morava_fgl(p: u32, s: u32, order: u32) -> Result<FormalGroupLaw<Fp>, FglError> {
    let ring = Arc::new(CoefficientRing::morava(p, s)?);
    let minimal = p.checked_pow(s).ok_or(FglError::OrderTooSmall { requested: order, minimal: u32::MAX })?;
    if order < minimal {
        return Err(FglError::OrderTooSmall { requested: order, minimal });
    }
    let log = honda_log(&ring, order);
    let rational = law_from_log(&log, order)?;
    let law = rational.transform(&ring, rational.vars(), rational.bound(), |m, c| {
        Fp::from_rational(c, &ring).map(|f| Some((m.clone(), f))).map_err(SeriesError::from)
    });
    let law = match law {
        Ok(l) => l,
        Err(SeriesError::Scalar(ScalarError::NotIntegral { value, .. })) => {
            return Err(FglError::NotIntegral { prime: p, detail: value })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(FormalGroupLaw { ring, law, order, provenance: Provenance::HondaModP, log: Some(log) })
}

impl<C: Coeff> FormalGroupLaw<C> {
    /// Wrap an arbitrary bivariate series in `x, y` (used for mutation tests
    /// and externally supplied laws).
    pub fn from_series(law: SparseSeries<C>, order: u32, provenance: Provenance) -> Result<Self, FglError> {
        law.vars().require("x")?;
        law.vars().require("y")?;
        Ok(FormalGroupLaw { ring: law.ring().clone(), law, order, provenance, log: None })
    }

    pub fn ring(&self) -> &Arc<CoefficientRing> {
        &self.ring
    }

    pub fn series(&self) -> &SparseSeries<C> {
        &self.law
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The logarithm used to build the law, if any.
    pub fn log(&self) -> Option<&SparseSeries<Q>> {
        self.log.as_ref()
    }

    /// A table holding the ring generators and degree-2 variables `names`.
    pub fn table(&self, names: &[&str]) -> Arc<VarTable> {
        table_with(&self.ring, names)
    }

    /// `F(a, b)` for series over a common table.
    pub fn apply(&self, a: &SparseSeries<C>, b: &SparseSeries<C>) -> Result<SparseSeries<C>, FglError> {
        let bound = crate::series::min_bound(a.bound(), b.bound());
        Ok(self.law.substitute(&[("x", a), ("y", b)], a.vars(), bound)?)
    }

    /// Left-associated iterated formal sum.
    pub fn formal_sum(&self, args: &[SparseSeries<C>]) -> Result<SparseSeries<C>, FglError> {
        let mut it = args.iter();
        let mut acc = it.next().ok_or(FglError::BadMultiple)?.clone();
        for a in it {
            acc = self.apply(&acc, a)?;
        }
        Ok(acc)
    }

    /// `[q](z)` in a fresh table holding `z`, truncated at the law's order.
    pub fn q_series(&self, q: u32) -> Result<QSeries<C>, FglError> {
        let t = self.table(&["z"]);
        let z = SparseSeries::var(&self.ring, &t, "z", Some(2 * self.order as i64))?;
        self.q_series_of(q, &z)
    }

    /// `[q](a)` for a series `a` without constant term.
    pub fn q_series_of(&self, q: u32, a: &SparseSeries<C>) -> Result<QSeries<C>, FglError> {
        if q < 1 {
            return Err(FglError::BadMultiple);
        }
        let mut acc = a.clone();
        for _ in 1..q {
            acc = self.apply(&acc, a)?;
        }
        Ok(QSeries { q, series: acc })
    }

    /// Unit, commutativity and associativity through total degree `order`
    /// (capped at the law's own order).
    pub fn axiom_check_to(&self, order: u32) -> Result<AxiomReport, FglError> {
        let order = order.min(self.order);
        let bound = Some(2 * order as i64);
        let f = self.law.with_bound(bound);
        let t = f.vars().clone();
        let x = SparseSeries::var(&self.ring, &t, "x", bound)?;
        let y = SparseSeries::var(&self.ring, &t, "y", bound)?;
        let zero = f.zero_like();
        let unit = f.substitute(&[("y", &zero)], &t, bound)? == x && f.substitute(&[("x", &zero)], &t, bound)? == y;
        let swapped = f.substitute(&[("x", &y), ("y", &x)], &t, bound)?;
        let commutativity = swapped == f;

        let t3 = self.table(&["x", "y", "w"]);
        let g = f.embed(&t3, bound)?;
        let x3 = SparseSeries::var(&self.ring, &t3, "x", bound)?;
        let y3 = SparseSeries::var(&self.ring, &t3, "y", bound)?;
        let w3 = SparseSeries::var(&self.ring, &t3, "w", bound)?;
        let fyw = g.substitute(&[("x", &y3), ("y", &w3)], &t3, bound)?;
        let left = g.substitute(&[("x", &g), ("y", &w3)], &t3, bound)?;
        let right = g.substitute(&[("x", &x3), ("y", &fyw)], &t3, bound)?;
        Ok(AxiomReport { unit, commutativity, associativity: left == right, associativity_order: order })
    }

    pub fn axiom_check(&self) -> Result<AxiomReport, FglError> {
        self.axiom_check_to(self.order)
    }

    pub fn to_json(&self, axioms: Option<&AxiomReport>) -> Value {
        json!({
            "ring": &*self.ring,
            "provenance": self.provenance,
            "order": self.order,
            "fgl": self.law.terms_json(),
            "text": self.law.to_string(),
            "axioms": axioms,
        })
    }
}

impl FormalGroupLaw<Q> {
    /// Whether `log(F(x, y)) = log x + log y` through the law's order.
    pub fn log_is_additive(&self) -> Result<bool, FglError> {
        let log = self.log.as_ref().ok_or_else(|| FglError::WrongRing("law has no logarithm".into()))?;
        let bound = Some(2 * self.order as i64);
        let t = self.law.vars().clone();
        let lf = log.substitute(&[("x", &self.law)], &t, bound)?;
        let lx = log.embed(&t, bound)?;
        let y = SparseSeries::var(&self.ring, &t, "y", bound)?;
        let ly = log.substitute(&[("x", &y)], &t, bound)?;
        Ok(lf == &lx + &ly)
    }
}

/// The right-hand side of the congruence
/// `F(x,y) = x + y - v_s sum_{0<j<p} binom(p,j)/p x^(j p^(s-1)) y^((p-j) p^(s-1))`
/// modulo `x^(p^(2(s-1)))`, for `s > 1`.
pub fn low_order_morava_law(ring: &Arc<CoefficientRing>, t: &Arc<VarTable>, bound: Option<i64>) -> SparseSeries<Fp> {
    let p = ring.prime();
    let s = ring.height().expect("Morava ring");
    let vs = format!("v_{s}");
    let q = p.pow(s - 1) as i32;
    let mut out = SparseSeries::var(ring, t, "x", bound).unwrap();
    out = &out + &SparseSeries::var(ring, t, "y", bound).unwrap();
    let mut binom = 1u64;
    for j in 1..p {
        binom = binom * (p - j + 1) as u64 / j as u64;
        let c = Fp::new(-((binom / p as u64) as i64), p);
        let term =
            SparseSeries::monomial(ring, t, &[(&vs, 1), ("x", j as i32 * q), ("y", (p - j) as i32 * q)], c, bound)
                .unwrap();
        out = &out + &term;
    }
    out
}

/// Compares the law with [`low_order_morava_law`] on all terms of x-degree
/// below `p^(2(s-1))`. Returns the differing part (zero on success).
pub fn low_order_congruence_defect(law: &FormalGroupLaw<Fp>) -> Result<SparseSeries<Fp>, FglError> {
    let ring = law.ring().clone();
    let p = ring.prime();
    let s = ring.height().ok_or_else(|| FglError::WrongRing("Morava law expected".into()))?;
    if s < 2 {
        return Err(FglError::WrongRing("the congruence needs height at least 2".into()));
    }
    let f = law.series();
    let t = f.vars().clone();
    let xi = t.require("x")?;
    let cut = p.pow(2 * (s - 1)) as i32;
    let expect = low_order_morava_law(&ring, &t, f.bound());
    Ok((f - &expect).filter(|m| m[xi] < cut))
}
