//! Substitution of series for variables.

use std::collections::BTreeMap;
use std::sync::Arc;

use ahash::AHashMap;

use super::{same_ring, same_table, Mono, SeriesError, SparseSeries, VarTable};
use crate::coefficients::Coeff;

/// Exponents of the substituted variables, the remaining monomial and the
/// coefficient of one term.
type Indexed<C> = (Vec<u32>, Mono, C);

/// Powers of one image series, computed on demand.
struct PowerCache<'a, C: Coeff> {
    base: &'a SparseSeries<C>,
    powers: BTreeMap<u32, SparseSeries<C>>,
    gaps: AHashMap<u32, SparseSeries<C>>,
}

impl<'a, C: Coeff> PowerCache<'a, C> {
    fn new(base: &'a SparseSeries<C>) -> Self {
        PowerCache { base, powers: BTreeMap::new(), gaps: AHashMap::new() }
    }

    /// Precompute all exponents in `needed`, each from the next smaller one.
    fn prepare(&mut self, needed: &[u32]) {
        let mut prev: Option<u32> = None;
        for &e in needed {
            if e == 0 || self.powers.contains_key(&e) {
                prev = Some(e);
                continue;
            }
            let value = match prev {
                Some(p) if p > 0 && self.gap_is_cheap(e - p) => {
                    let gap = e - p;
                    if !self.gaps.contains_key(&gap) {
                        let g = self.base.pow(gap);
                        self.gaps.insert(gap, g);
                    }
                    &self.powers[&p] * &self.gaps[&gap]
                }
                _ => self.base.pow(e),
            };
            self.powers.insert(e, value);
            prev = Some(e);
        }
    }

    fn gap_is_cheap(&self, gap: u32) -> bool {
        gap <= 2 || self.base.len() > 4
    }

    fn get(&self, e: u32) -> &SparseSeries<C> {
        &self.powers[&e]
    }
}

impl<C: Coeff> SparseSeries<C> {
    /// Replace each named variable by the paired series.
    ///
    /// Images must live over `target`; variables of `self` that are not
    /// substituted are carried over to `target` by name. The result is
    /// truncated to `bound` and to the caps of `target`.
    pub fn substitute(
        &self,
        assignment: &[(&str, &SparseSeries<C>)],
        target: &Arc<VarTable>,
        bound: Option<i64>,
    ) -> Result<SparseSeries<C>, SeriesError> {
        let src = &self.vars;
        let mut slots: Vec<usize> = Vec::new();
        let mut images: Vec<SparseSeries<C>> = Vec::new();
        for (name, image) in assignment {
            let i = src.require(name)?;
            if !same_ring(&self.ring, &image.ring) {
                return Err(SeriesError::RingMismatch);
            }
            if !same_table(target, &image.vars) {
                return Err(SeriesError::TableMismatch);
            }
            let used = self.terms.keys().any(|m| m[i] != 0);
            if used && self.terms.keys().any(|m| m[i] < 0) {
                return Err(SeriesError::NegativeExponent(name.to_string()));
            }
            let has_constant = !image.constant_term().is_zero();
            if used && has_constant && self.bound.is_some() {
                return Err(SeriesError::ConstantTerm(name.to_string()));
            }
            slots.push(i);
            images.push(image.with_bound(bound));
        }
        // where each unassigned variable goes in the target
        let mut carry: Vec<Option<usize>> = Vec::with_capacity(src.len());
        for (i, v) in src.iter().enumerate() {
            if slots.contains(&i) {
                carry.push(None);
            } else {
                carry.push(target.index(&v.name));
            }
        }

        // split every term into its assigned exponents and the carried monomial
        let mut rest_terms: Vec<Indexed<C>> = Vec::with_capacity(self.len());
        for (m, c) in &self.terms {
            let key: Vec<u32> = slots.iter().map(|&i| m[i] as u32).collect();
            let mut mm = target.unit();
            for (i, &e) in m.iter().enumerate() {
                if e == 0 || slots.contains(&i) {
                    continue;
                }
                match carry[i] {
                    Some(j) => mm[j] += e,
                    None => return Err(SeriesError::UnknownVariable(src.get(i).name.clone())),
                }
            }
            if !target.admits(&mm, bound) {
                continue;
            }
            rest_terms.push((key, mm, c.clone()));
        }

        let mut caches: Vec<PowerCache<'_, C>> = images.iter().map(PowerCache::new).collect();
        for (level, cache) in caches.iter_mut().enumerate() {
            let mut needed: Vec<u32> = rest_terms.iter().map(|t| t.0[level]).collect();
            needed.sort_unstable();
            needed.dedup();
            cache.prepare(&needed);
        }
        let refs: Vec<&Indexed<C>> = rest_terms.iter().collect();
        Ok(nested_eval(&refs, 0, &caches, &self.ring, target, bound))
    }

    /// `self(g)` for a single variable.
    pub fn compose(&self, name: &str, g: &SparseSeries<C>) -> Result<SparseSeries<C>, SeriesError> {
        self.substitute(&[(name, g)], &g.vars, g.bound)
    }
}

/// Horner-style evaluation: group by the exponent of the assigned variable at
/// `level`, evaluate the inner groups, then multiply by the matching power.
fn nested_eval<C: Coeff>(
    terms: &[&Indexed<C>],
    level: usize,
    caches: &[PowerCache<'_, C>],
    ring: &Arc<crate::coefficients::CoefficientRing>,
    target: &Arc<VarTable>,
    bound: Option<i64>,
) -> SparseSeries<C> {
    if level == caches.len() {
        return SparseSeries::from_terms(ring, target, bound, terms.iter().map(|t| (t.1.clone(), t.2.clone())));
    }
    let mut groups: BTreeMap<u32, Vec<&Indexed<C>>> = BTreeMap::new();
    for t in terms {
        groups.entry(t.0[level]).or_default().push(t);
    }
    let mut acc = SparseSeries::zero(ring, target, bound);
    for (e, group) in groups {
        let inner = nested_eval(&group, level + 1, caches, ring, target, bound);
        if inner.is_zero() {
            continue;
        }
        let part = if e == 0 { inner } else { &inner * caches[level].get(e) };
        acc.absorb(part);
    }
    acc
}
