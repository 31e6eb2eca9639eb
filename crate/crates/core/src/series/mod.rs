//! Sparse truncated multivariate power series.
//!
//! A [`SparseSeries`] is a finite map from exponent vectors to scalars over a
//! [`VarTable`]. Ring generators (such as `v_1`) and series variables (such as
//! `x`, `z`) share the exponent vector; only series variables count towards
//! the truncation bound, and each series variable may carry a nilpotence cap.

mod format;
mod quotient;
mod reversion;
mod substitute;

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use ahash::AHashMap;
use num_bigint::BigInt;
use serde::Serialize;
use smallvec::SmallVec;

use crate::coefficients::{Coeff, CoefficientRing, ScalarError, Q};

pub use format::{parse_series, ParseError};
pub use quotient::{QuotientSpec, Rule};

/// Exponent vector, indexed like the owning [`VarTable`].
pub type Mono = SmallVec<[i32; 8]>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("duplicate variable {0}")]
    DuplicateVariable(String),
    #[error("variable {name} has invalid degree {degree}")]
    BadDegree { name: String, degree: i32 },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("operands live over different coefficient rings")]
    RingMismatch,
    #[error("operands live over different variable tables")]
    TableMismatch,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("cannot substitute a series with non-zero constant term for {0}")]
    ConstantTerm(String),
    #[error("series is not a unit: {0}")]
    NotInvertible(String),
    #[error("reversion needs a series of the form {0} + higher terms")]
    NoUnitLinearTerm(String),
    #[error("series is not divisible by {0}")]
    NotDivisible(String),
    #[error("invalid quotient rule: {0}")]
    InvalidRule(String),
    #[error("{0} needs a truncation bound or a nilpotence cap")]
    Unbounded(String),
    #[error("negative exponent of {0} cannot be substituted")]
    NegativeExponent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VarRole {
    Generator,
    Series,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VarSpec {
    pub name: String,
    pub degree: i32,
    /// `var^cap = 0`; allowed exponents are `0..cap`.
    pub cap: Option<u32>,
    pub role: VarRole,
}

impl VarSpec {
    pub fn generator(name: &str, degree: i32) -> Self {
        VarSpec { name: name.to_string(), degree, cap: None, role: VarRole::Generator }
    }

    pub fn series(name: &str, degree: i32, cap: Option<u32>) -> Self {
        VarSpec { name: name.to_string(), degree, cap, role: VarRole::Series }
    }
}

/// Ordered list of variables shared by a family of series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VarTable {
    vars: Vec<VarSpec>,
}

impl VarTable {
    pub fn new(vars: Vec<VarSpec>) -> Result<Arc<Self>, SeriesError> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(SeriesError::DuplicateVariable(v.name.clone()));
            }
            let ok = v.degree % 2 == 0
                && match v.role {
                    VarRole::Series => v.degree > 0,
                    VarRole::Generator => v.degree < 0,
                };
            if !ok {
                return Err(SeriesError::BadDegree { name: v.name.clone(), degree: v.degree });
            }
        }
        Ok(Arc::new(VarTable { vars }))
    }

    /// The ring's generators followed by `series`.
    pub fn with_ring(ring: &CoefficientRing, series: Vec<VarSpec>) -> Result<Arc<Self>, SeriesError> {
        let mut vars = ring.generator_specs();
        vars.extend(series);
        Self::new(vars)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, i: usize) -> &VarSpec {
        &self.vars[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VarSpec> {
        self.vars.iter()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, SeriesError> {
        self.index(name).ok_or_else(|| SeriesError::UnknownVariable(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn unit(&self) -> Mono {
        smallvec::smallvec![0; self.vars.len()]
    }

    /// Topological degree of the monomial, generators included.
    pub fn degree(&self, m: &[i32]) -> i64 {
        m.iter().zip(&self.vars).map(|(&e, v)| e as i64 * v.degree as i64).sum()
    }

    /// Topological degree counted over series variables only.
    pub fn weight(&self, m: &[i32]) -> i64 {
        m.iter()
            .zip(&self.vars)
            .filter(|(_, v)| v.role == VarRole::Series)
            .map(|(&e, v)| e as i64 * v.degree as i64)
            .sum()
    }

    /// Whether `m` survives the caps and `bound`.
    pub fn admits(&self, m: &[i32], bound: Option<i64>) -> bool {
        for (&e, v) in m.iter().zip(&self.vars) {
            if v.role == VarRole::Series {
                if e < 0 {
                    return false;
                }
                if let Some(cap) = v.cap {
                    if e as i64 >= cap as i64 {
                        return false;
                    }
                }
            }
        }
        match bound {
            Some(b) => self.weight(m) <= b,
            None => true,
        }
    }

    fn caps(&self) -> Vec<i32> {
        self.vars
            .iter()
            .map(|v| match (v.role, v.cap) {
                (VarRole::Series, Some(c)) => c.min(i32::MAX as u32) as i32,
                _ => i32::MAX,
            })
            .collect()
    }

    /// Same variables with a different cap on `name`.
    pub fn with_cap(&self, name: &str, cap: Option<u32>) -> Result<Arc<Self>, SeriesError> {
        let i = self.require(name)?;
        let mut vars = self.vars.clone();
        vars[i].cap = cap;
        Self::new(vars)
    }
}

pub(crate) fn same_table(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn same_ring(a: &Arc<CoefficientRing>, b: &Arc<CoefficientRing>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn min_bound(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Truncated series over a coefficient ring.
#[derive(Clone)]
pub struct SparseSeries<C: Coeff> {
    ring: Arc<CoefficientRing>,
    vars: Arc<VarTable>,
    terms: AHashMap<Mono, C>,
    bound: Option<i64>,
}

impl<C: Coeff> SparseSeries<C> {
    pub fn zero(ring: &Arc<CoefficientRing>, vars: &Arc<VarTable>, bound: Option<i64>) -> Self {
        SparseSeries { ring: ring.clone(), vars: vars.clone(), terms: AHashMap::new(), bound }
    }

    pub fn constant(ring: &Arc<CoefficientRing>, vars: &Arc<VarTable>, c: C, bound: Option<i64>) -> Self {
        let mut s = Self::zero(ring, vars, bound);
        let unit = vars.unit();
        s.add_term(unit, c);
        s
    }

    pub fn from_i64(ring: &Arc<CoefficientRing>, vars: &Arc<VarTable>, n: i64, bound: Option<i64>) -> Self {
        Self::constant(ring, vars, C::from_i64(n, ring), bound)
    }

    pub fn one(ring: &Arc<CoefficientRing>, vars: &Arc<VarTable>, bound: Option<i64>) -> Self {
        Self::from_i64(ring, vars, 1, bound)
    }

    pub fn var(
        ring: &Arc<CoefficientRing>,
        vars: &Arc<VarTable>,
        name: &str,
        bound: Option<i64>,
    ) -> Result<Self, SeriesError> {
        Self::monomial(ring, vars, &[(name, 1)], C::from_i64(1, ring), bound)
    }

    pub fn monomial(
        ring: &Arc<CoefficientRing>,
        vars: &Arc<VarTable>,
        exps: &[(&str, i32)],
        c: C,
        bound: Option<i64>,
    ) -> Result<Self, SeriesError> {
        let mut m = vars.unit();
        for (name, e) in exps {
            m[vars.require(name)?] += e;
        }
        let mut s = Self::zero(ring, vars, bound);
        s.add_term(m, c);
        Ok(s)
    }

    pub fn from_terms<I: IntoIterator<Item = (Mono, C)>>(
        ring: &Arc<CoefficientRing>,
        vars: &Arc<VarTable>,
        bound: Option<i64>,
        terms: I,
    ) -> Self {
        let mut s = Self::zero(ring, vars, bound);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    /// An empty series sharing ring, table, and bound with `self`.
    pub fn zero_like(&self) -> Self {
        Self::zero(&self.ring, &self.vars, self.bound)
    }

    pub fn one_like(&self) -> Self {
        Self::one(&self.ring, &self.vars, self.bound)
    }

    pub fn ring(&self) -> &Arc<CoefficientRing> {
        &self.ring
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn bound(&self) -> Option<i64> {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mono, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[i32]) -> Option<&C> {
        self.terms.get(m)
    }

    /// Adds `c * m`; ignored if `m` is not admissible.
    pub fn add_term(&mut self, m: Mono, c: C) {
        if c.is_zero() || !self.vars.admits(&m, self.bound) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    /// Add all terms of `other` into `self`.
    pub(crate) fn absorb(&mut self, other: Self) {
        for (m, c) in other.terms {
            self.add_term(m, c);
        }
    }

    /// Terms in canonical order: topological degree, then series exponents,
    /// then generator exponents.
    pub fn sorted_terms(&self) -> Vec<(&Mono, &C)> {
        let mut out: Vec<(&Mono, &C)> = self.terms.iter().collect();
        out.sort_by(|a, b| self.canonical_cmp(a.0, b.0));
        out
    }

    pub(crate) fn canonical_cmp(&self, a: &Mono, b: &Mono) -> Ordering {
        let t = &self.vars;
        let key = |m: &Mono| {
            let series: Vec<i32> =
                m.iter().zip(t.iter()).filter(|(_, v)| v.role == VarRole::Series).map(|(e, _)| *e).collect();
            let gens: Vec<i32> =
                m.iter().zip(t.iter()).filter(|(_, v)| v.role == VarRole::Generator).map(|(e, _)| *e).collect();
            (t.degree(m), series, gens)
        };
        key(a).cmp(&key(b))
    }

    /// The common topological degree of all terms, `None` if zero or mixed.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|m| self.vars.degree(m));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous_of(&self, d: i64) -> bool {
        self.terms.keys().all(|m| self.vars.degree(m) == d)
    }

    pub fn constant_term(&self) -> C {
        self.terms.get(&self.vars.unit()).cloned().unwrap_or_else(|| C::from_i64(0, &self.ring))
    }

    /// Smallest series weight of any term.
    pub fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(|m| self.vars.weight(m)).min()
    }

    pub fn max_exponent(&self, name: &str) -> Result<Option<i32>, SeriesError> {
        let i = self.vars.require(name)?;
        Ok(self.terms.keys().map(|m| m[i]).max())
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SeriesError> {
        if !same_ring(&self.ring, &other.ring) {
            return Err(SeriesError::RingMismatch);
        }
        if !same_table(&self.vars, &other.vars) {
            return Err(SeriesError::TableMismatch);
        }
        Ok(())
    }

    /// Same terms under a tighter (or looser) bound.
    pub fn with_bound(&self, bound: Option<i64>) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| self.vars.admits(m, bound))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        SparseSeries { ring: self.ring.clone(), vars: self.vars.clone(), terms, bound }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let bound = min_bound(self.bound, other.bound);
        let mut out = if bound == self.bound { self.clone() } else { self.with_bound(bound) };
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.checked_add(&other.neg_series())
    }

    pub fn neg_series(&self) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect();
        SparseSeries { ring: self.ring.clone(), vars: self.vars.clone(), terms, bound: self.bound }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let bound = min_bound(self.bound, other.bound);
        let t = &self.vars;
        let caps = t.caps();
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut b: Vec<(&Mono, &C, i64)> = large.terms.iter().map(|(m, c)| (m, c, t.weight(m))).collect();
        b.sort_by_key(|e| e.2);
        let mut out: AHashMap<Mono, C> = AHashMap::with_capacity(small.len().max(large.len()));
        for (ma, ca) in &small.terms {
            let wa = t.weight(ma);
            'inner: for (mb, cb, wb) in &b {
                if let Some(lim) = bound {
                    if wa + wb > lim {
                        break;
                    }
                }
                let mut m = (*ma).clone();
                for i in 0..m.len() {
                    m[i] += mb[i];
                    if m[i] >= caps[i] {
                        continue 'inner;
                    }
                }
                let c = ca.mul(cb);
                match out.entry(m) {
                    Entry::Occupied(mut o) => o.get_mut().add_assign(&c),
                    Entry::Vacant(v) => {
                        v.insert(c);
                    }
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        Ok(SparseSeries { ring: self.ring.clone(), vars: self.vars.clone(), terms: out, bound })
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return self.zero_like();
        }
        let terms = self.terms.iter().map(|(m, a)| (m.clone(), a.mul(c))).filter(|(_, a)| !a.is_zero()).collect();
        SparseSeries { ring: self.ring.clone(), vars: self.vars.clone(), terms, bound: self.bound }
    }

    pub fn scale_i64(&self, n: i64) -> Self {
        self.scale(&C::from_i64(n, &self.ring))
    }

    /// Multiply by the monomial `m` (exponents may be negative for generators).
    pub fn shift(&self, m: &[i32]) -> Self {
        let mut out = self.zero_like();
        for (a, c) in &self.terms {
            let s: Mono = a.iter().zip(m).map(|(x, y)| x + y).collect();
            out.add_term(s, c.clone());
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        if e == 0 {
            return self.one_like();
        }
        if e == 1 {
            return self.clone();
        }
        if self.is_zero() {
            return self.zero_like();
        }
        if self.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            let mm: Mono = m.iter().map(|x| x * e as i32).collect();
            let mut cc = c.clone();
            for _ in 1..e {
                cc = cc.mul(c);
            }
            let mut out = self.zero_like();
            out.add_term(mm, cc);
            return out;
        }
        if self.len() <= 4 && e >= 8 && self.multinomial_feasible(e) {
            return self.pow_multinomial(e);
        }
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut k = e;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => &r * &base,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = &base * &base;
        }
        result.unwrap()
    }

    fn multinomial_feasible(&self, e: u32) -> bool {
        let positive = self.terms.keys().filter(|m| self.vars.weight(m) > 0).count();
        let t = self.len();
        if positive == t && (self.bound.is_some() || self.has_caps()) {
            return true;
        }
        let mut est = 1f64;
        for i in 1..t {
            est *= (e as f64 + i as f64) / i as f64;
        }
        est < 2e5
    }

    fn has_caps(&self) -> bool {
        self.vars.iter().any(|v| v.role == VarRole::Series && v.cap.is_some())
    }

    /// `self^e` by direct multinomial expansion, pruned by the bound.
    fn pow_multinomial(&self, e: u32) -> Self {
        let t = &self.vars;
        let mut items: Vec<(Mono, C, i64)> =
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone(), t.weight(m))).collect();
        items.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        let min_w: Vec<i64> = (0..items.len()).map(|i| items[i..].iter().map(|x| x.2).min().unwrap()).collect();
        let mut state = Multinomial {
            fact: factorials(e as usize),
            powers: items.iter().map(|it| vec![C::from_i64(1, &self.ring), it.1.clone()]).collect(),
            ks: vec![0u32; items.len()],
            items,
            min_w,
        };
        let mut out = self.zero_like();
        self.multinomial_rec(&mut state, e, 0, 0, &mut out);
        out
    }

    fn multinomial_rec(&self, st: &mut Multinomial<C>, remaining: u32, idx: usize, weight: i64, out: &mut Self) {
        let last = st.items.len() - 1;
        if let Some(b) = self.bound {
            if weight + remaining as i64 * st.min_w[idx.min(last)] > b {
                return;
            }
        }
        if idx == last {
            st.ks[idx] = remaining;
            self.emit_multinomial(st, out);
            return;
        }
        for k in 0..=remaining {
            let w = weight + k as i64 * st.items[idx].2;
            if let Some(b) = self.bound {
                if w > b {
                    break;
                }
            }
            st.ks[idx] = k;
            self.multinomial_rec(st, remaining - k, idx + 1, w, out);
        }
    }

    fn emit_multinomial(&self, st: &mut Multinomial<C>, out: &mut Self) {
        let mut m = self.vars.unit();
        for (item, &k) in st.items.iter().zip(&st.ks) {
            for (a, b) in m.iter_mut().zip(&item.0) {
                *a += b * k as i32;
            }
        }
        if !self.vars.admits(&m, self.bound) {
            return;
        }
        let n: u32 = st.ks.iter().sum();
        let mut denom = BigInt::from(1);
        for &k in &st.ks {
            denom *= &st.fact[k as usize];
        }
        let multi = Q::from_integer(&st.fact[n as usize] / denom);
        let mut c = C::from_rational(&multi, &self.ring).expect("integers reduce in every ring");
        for i in 0..st.ks.len() {
            let k = st.ks[i] as usize;
            let pw = &mut st.powers[i];
            while pw.len() <= k {
                let next = pw[pw.len() - 1].mul(&pw[1]);
                pw.push(next);
            }
            if k > 0 {
                c = c.mul(&pw[k]);
            }
        }
        out.add_term(m, c);
    }

    /// Terms whose exponent of `name` equals `e`, with that exponent cleared.
    pub fn coefficient_of(&self, name: &str, e: i32) -> Result<Self, SeriesError> {
        let i = self.vars.require(name)?;
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            if m[i] == e {
                let mut mm = m.clone();
                mm[i] = 0;
                out.terms.insert(mm, c.clone());
            }
        }
        Ok(out)
    }

    /// Keep the terms satisfying `pred`.
    pub fn filter<F: Fn(&Mono) -> bool>(&self, pred: F) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| pred(m)).map(|(m, c)| (m.clone(), c.clone())).collect();
        SparseSeries { ring: self.ring.clone(), vars: self.vars.clone(), terms, bound: self.bound }
    }

    /// Set the variable `name` to zero.
    pub fn eval_zero(&self, name: &str) -> Result<Self, SeriesError> {
        let i = self.vars.require(name)?;
        Ok(self.filter(|m| m[i] == 0))
    }

    /// Exact division by `name`; fails if some term has no factor `name`.
    pub fn divide_by_var(&self, name: &str) -> Result<Self, SeriesError> {
        let i = self.vars.require(name)?;
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            if m[i] < 1 {
                return Err(SeriesError::NotDivisible(name.to_string()));
            }
            let mut mm = m.clone();
            mm[i] -= 1;
            out.terms.insert(mm, c.clone());
        }
        Ok(out)
    }

    /// Largest series weight any term can have, from the bound or the caps.
    pub fn effective_bound(&self) -> Option<i64> {
        if self.bound.is_some() {
            return self.bound;
        }
        let mut total = 0i64;
        for v in self.vars.iter().filter(|v| v.role == VarRole::Series) {
            total += (v.cap? as i64 - 1).max(0) * v.degree as i64;
        }
        Some(total)
    }

    /// Inverse of a series whose constant term is an invertible scalar and
    /// whose remaining terms are topologically nilpotent (Newton iteration).
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_term();
        let inv0 = c0.inverse().map_err(|_| SeriesError::NotInvertible(self.to_string()))?;
        let unit = self.vars.unit();
        let rest = self.filter(|m| *m != unit);
        if rest.terms.keys().any(|m| self.vars.weight(m) <= 0) {
            return Err(SeriesError::NotInvertible(self.to_string()));
        }
        let mut h = Self::constant(&self.ring, &self.vars, inv0, self.bound);
        let Some(w0) = rest.min_weight() else {
            return Ok(h);
        };
        let limit = self.effective_bound().ok_or_else(|| SeriesError::Unbounded("inverse".into()))?;
        let two = Self::from_i64(&self.ring, &self.vars, 2, self.bound);
        // h is exact modulo terms of weight >= prec
        let mut prec = w0;
        while prec <= limit {
            prec = prec.saturating_mul(2);
            let b = Some(prec.min(limit));
            let u = self.with_bound(b);
            let hb = h.with_bound(b);
            h = &hb * &(&two.with_bound(b) - &(&u * &hb));
        }
        Ok(h.with_bound(self.bound))
    }

    /// Formal partial derivative with respect to `name`.
    pub fn derivative(&self, name: &str) -> Result<Self, SeriesError> {
        let i = self.vars.require(name)?;
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut mm = m.clone();
            mm[i] -= 1;
            out.add_term(mm, c.mul(&C::from_i64(m[i] as i64, &self.ring)));
        }
        Ok(out)
    }

    /// Map every term through `f` into a series over another ring or table.
    pub fn transform<D, F>(
        &self,
        ring: &Arc<CoefficientRing>,
        vars: &Arc<VarTable>,
        bound: Option<i64>,
        mut f: F,
    ) -> Result<SparseSeries<D>, SeriesError>
    where
        D: Coeff,
        F: FnMut(&Mono, &C) -> Result<Option<(Mono, D)>, SeriesError>,
    {
        let mut out = SparseSeries::zero(ring, vars, bound);
        for (m, c) in self.sorted_terms() {
            if let Some((mm, d)) = f(m, c)? {
                out.add_term(mm, d);
            }
        }
        Ok(out)
    }

    /// Re-index onto `target`, matching variables by name. Variables absent
    /// from `target` must have exponent zero.
    pub fn embed(&self, target: &Arc<VarTable>, bound: Option<i64>) -> Result<Self, SeriesError> {
        let map: Vec<Option<usize>> = self.vars.iter().map(|v| target.index(&v.name)).collect();
        self.transform(&self.ring, target, bound, |m, c| {
            let mut mm = target.unit();
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match map[i] {
                    Some(j) => mm[j] = e,
                    None => return Err(SeriesError::UnknownVariable(self.vars.get(i).name.clone())),
                }
            }
            Ok(Some((mm, c.clone())))
        })
    }
}

struct Multinomial<C: Coeff> {
    items: Vec<(Mono, C, i64)>,
    min_w: Vec<i64>,
    fact: Vec<BigInt>,
    /// `powers[i][k]` is the k-th power of the i-th coefficient.
    powers: Vec<Vec<C>>,
    ks: Vec<u32>,
}

pub(crate) fn factorials(n: usize) -> Vec<BigInt> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigInt::from(1));
    for i in 1..=n {
        let next = &f[i - 1] * BigInt::from(i);
        f.push(next);
    }
    f
}

impl<C: Coeff> PartialEq for SparseSeries<C> {
    fn eq(&self, other: &Self) -> bool {
        same_ring(&self.ring, &other.ring) && same_table(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl<C: Coeff> fmt::Debug for SparseSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseSeries({self}; bound {:?})", self.bound)
    }
}

impl<'a, C: Coeff> Add<&'a SparseSeries<C>> for &'a SparseSeries<C> {
    type Output = SparseSeries<C>;

    fn add(self, rhs: &'a SparseSeries<C>) -> SparseSeries<C> {
        self.checked_add(rhs).expect("incompatible series")
    }
}

impl<'a, C: Coeff> Sub<&'a SparseSeries<C>> for &'a SparseSeries<C> {
    type Output = SparseSeries<C>;

    fn sub(self, rhs: &'a SparseSeries<C>) -> SparseSeries<C> {
        self.checked_sub(rhs).expect("incompatible series")
    }
}

impl<'a, C: Coeff> Mul<&'a SparseSeries<C>> for &'a SparseSeries<C> {
    type Output = SparseSeries<C>;

    fn mul(self, rhs: &'a SparseSeries<C>) -> SparseSeries<C> {
        self.checked_mul(rhs).expect("incompatible series")
    }
}

impl<C: Coeff> Neg for &SparseSeries<C> {
    type Output = SparseSeries<C>;

    fn neg(self) -> SparseSeries<C> {
        self.neg_series()
    }
}

#[cfg(test)]
mod tests;
