//! Rewriting modulo nilpotence and p-series relations.

use std::collections::BTreeMap;

use ahash::AHashMap;

use super::{Mono, SeriesError, SparseSeries, VarRole};
use crate::coefficients::Coeff;

#[derive(Debug, Clone)]
pub enum Rule<C: Coeff> {
    /// `var^exp = 0`.
    Nilpotent { var: String, exp: u32 },
    /// `relation(var) = 0` for a relation `p*var + (terms of var-degree >= 2)`,
    /// applied by rewriting `p*var` as minus the tail.
    PSeries { var: String, prime: u32, relation: SparseSeries<C> },
}

/// An ordered list of rewrite rules.
#[derive(Debug, Clone)]
pub struct QuotientSpec<C: Coeff> {
    rules: Vec<Rule<C>>,
}

impl<C: Coeff> QuotientSpec<C> {
    /// Validates the rule set. A p-series rule needs a nilpotence rule on the
    /// same variable, otherwise the rewriting would not terminate.
    pub fn new(rules: Vec<Rule<C>>) -> Result<Self, SeriesError> {
        for rule in &rules {
            if let Rule::PSeries { var, prime, relation } = rule {
                let nil = rules.iter().any(|r| matches!(r, Rule::Nilpotent { var: v, .. } if v == var));
                if !nil {
                    return Err(SeriesError::InvalidRule(format!(
                        "relation on {var} needs a nilpotence rule on {var} to terminate"
                    )));
                }
                let i = relation.vars().require(var)?;
                let mut linear = relation.vars().unit();
                linear[i] = 1;
                for (m, c) in relation.iter() {
                    let others = m
                        .iter()
                        .enumerate()
                        .any(|(j, &e)| j != i && e != 0 && relation.vars().get(j).role == VarRole::Series);
                    if others {
                        return Err(SeriesError::InvalidRule(format!(
                            "relation on {var} involves other series variables"
                        )));
                    }
                    if m[i] == 0 {
                        return Err(SeriesError::InvalidRule(format!("relation on {var} has a {var}-free term")));
                    }
                    if m[i] == 1 && *m != linear {
                        return Err(SeriesError::InvalidRule(format!(
                            "linear part of the relation on {var} must be {prime}*{var}"
                        )));
                    }
                    if *m == linear && c.to_rational() != crate::coefficients::q_int(*prime as i64) {
                        return Err(SeriesError::InvalidRule(format!(
                            "linear part of the relation on {var} must be {prime}*{var}"
                        )));
                    }
                }
                if relation.coeff(&linear).is_none() {
                    return Err(SeriesError::InvalidRule(format!("relation on {var} has no linear term")));
                }
            }
        }
        Ok(QuotientSpec { rules })
    }

    pub fn nilpotent(var: &str, exp: u32) -> Self {
        QuotientSpec { rules: vec![Rule::Nilpotent { var: var.to_string(), exp }] }
    }

    pub fn rules(&self) -> &[Rule<C>] {
        &self.rules
    }

    /// Normal form of `f`: every nilpotent power removed and, for p-series
    /// rules, every coefficient of a positive power of the variable reduced
    /// to a digit in `0..p`.
    pub fn reduce(&self, f: &SparseSeries<C>) -> Result<SparseSeries<C>, SeriesError> {
        let mut cur = f.clone();
        for rule in &self.rules {
            cur = match rule {
                Rule::Nilpotent { var, exp } => {
                    let i = cur.vars().require(var)?;
                    let e = *exp as i32;
                    cur.filter(|m| m[i] < e)
                }
                Rule::PSeries { var, prime, relation } => {
                    let exp = self
                        .rules
                        .iter()
                        .find_map(|r| match r {
                            Rule::Nilpotent { var: v, exp } if v == var => Some(*exp),
                            _ => None,
                        })
                        .expect("validated at construction");
                    reduce_pseries(&cur, var, *prime, relation, exp)?
                }
            };
        }
        Ok(cur)
    }
}

fn reduce_pseries<C: Coeff>(
    f: &SparseSeries<C>,
    var: &str,
    p: u32,
    relation: &SparseSeries<C>,
    cap: u32,
) -> Result<SparseSeries<C>, SeriesError> {
    let i = f.vars().require(var)?;
    let table = f.vars();
    let rel_table = relation.vars();
    // tail = relation - p*var, as (monomial over f's table, shift in var) pairs
    let mut tail: Vec<(Mono, C)> = Vec::new();
    let ri = rel_table.require(var)?;
    for (m, c) in relation.iter() {
        if m[ri] == 1 {
            continue;
        }
        let mut mm = table.unit();
        for (j, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let k = table.require(&rel_table.get(j).name)?;
            mm[k] = e;
        }
        tail.push((mm, c.clone()));
    }

    let cap = cap as i32;
    let mut out = f.zero_like();
    let mut pending: BTreeMap<i32, AHashMap<Mono, C>> = BTreeMap::new();
    for (m, c) in f.iter() {
        if m[i] >= cap {
            continue;
        }
        let level = pending.entry(m[i]).or_default();
        level.entry(m.clone()).and_modify(|a| a.add_assign(c)).or_insert_with(|| c.clone());
    }
    while let Some((level, terms)) = pending.pop_first() {
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            if level == 0 {
                out.add_term(m, c);
                continue;
            }
            let (digit, rest) = c.p_digit(p)?;
            out.add_term(m.clone(), digit);
            if rest.is_zero() {
                continue;
            }
            // p*rest*var^level*m' = -rest*var^(level-1)*m' * tail
            let mut base = m.clone();
            base[i] -= 1;
            let coeff = rest.neg();
            for (t, tc) in &tail {
                let nm: Mono = base.iter().zip(t.iter()).map(|(a, b)| a + b).collect();
                if nm[i] >= cap || !table.admits(&nm, f.bound()) {
                    continue;
                }
                let nc = coeff.mul(tc);
                let slot = pending.entry(nm[i]).or_default();
                match slot.get_mut(&nm) {
                    Some(a) => a.add_assign(&nc),
                    None => {
                        slot.insert(nm, nc);
                    }
                }
            }
        }
    }
    Ok(out)
}
