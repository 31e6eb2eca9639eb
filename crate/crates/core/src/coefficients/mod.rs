//! Graded coefficient rings for Brown-Peterson theory and Morava K-theory.
//!
//! Cohomological grading is used throughout: the generators `m_n`, `v_n`
//! sit in degree `-2(p^n - 1)` and Euler classes in positive even degree.

mod scalar;

use std::sync::Arc;

use serde::Serialize;

use crate::series::{SparseSeries, VarRole, VarSpec, VarTable};

pub use scalar::{inv_mod, is_p_integral, mod_p, pow_mod, q_frac, q_int, Coeff, Fp, ScalarError, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RingError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("{what} must be at least 1, got {value}")]
    NonPositive { what: &'static str, value: i64 },
    #[error("generator index {index} out of range 1..={max}")]
    IndexOutOfRange { index: u32, max: u32 },
    #[error("input still contains m-generators ({0})")]
    MGeneratorsPresent(String),
    #[error("degree {0} overflows the supported range")]
    DegreeOverflow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RingKind {
    /// p-local rationals with polynomial generators.
    BPRational,
    /// As `BPRational`, but scalars are required to be p-integral.
    BPInteger,
    /// `F_p[v_s, v_s^{-1}]`.
    MoravaK,
}

/// Descriptor of a graded coefficient ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CoefficientRing {
    kind: RingKind,
    prime: u32,
    /// Height `s` for Morava K-theory, number of generators `N` otherwise.
    index: u32,
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `-2(p^n - 1)`, the degree of `m_n` and `v_n`.
pub fn generator_degree(p: u32, n: u32) -> Result<i32, RingError> {
    let pn = (p as i64)
        .checked_pow(n)
        .filter(|v| *v < (i32::MAX as i64) / 2)
        .ok_or_else(|| RingError::DegreeOverflow(format!("{p}^{n}")))?;
    Ok((-2 * (pn - 1)) as i32)
}

impl CoefficientRing {
    pub fn make(kind: RingKind, p: u32, s_or_n: i64) -> Result<Self, RingError> {
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if s_or_n < 1 {
            let what = if kind == RingKind::MoravaK { "height s" } else { "number of generators N" };
            return Err(RingError::NonPositive { what, value: s_or_n });
        }
        let index = u32::try_from(s_or_n).map_err(|_| RingError::DegreeOverflow(s_or_n.to_string()))?;
        // validates that every generator degree fits
        generator_degree(p, index)?;
        Ok(CoefficientRing { kind, prime: p, index })
    }

    pub fn bp(p: u32, n: u32) -> Result<Self, RingError> {
        Self::make(RingKind::BPRational, p, n as i64)
    }

    pub fn morava(p: u32, s: u32) -> Result<Self, RingError> {
        Self::make(RingKind::MoravaK, p, s as i64)
    }

    pub fn kind(&self) -> RingKind {
        self.kind
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn is_morava(&self) -> bool {
        self.kind == RingKind::MoravaK
    }

    /// Height `s` (Morava K-theory only).
    pub fn height(&self) -> Option<u32> {
        self.is_morava().then_some(self.index)
    }

    /// Number of polynomial generators (BP kinds only).
    pub fn num_generators(&self) -> Option<u32> {
        (!self.is_morava()).then_some(self.index)
    }

    /// Generator names and degrees in the v-basis.
    pub fn generators(&self) -> Vec<(String, i32)> {
        match self.kind {
            RingKind::MoravaK => {
                vec![(format!("v_{}", self.index), generator_degree(self.prime, self.index).unwrap())]
            }
            _ => (1..=self.index).map(|n| (format!("v_{n}"), generator_degree(self.prime, n).unwrap())).collect(),
        }
    }

    pub fn generator_specs(&self) -> Vec<VarSpec> {
        self.generators().into_iter().map(|(name, degree)| VarSpec::generator(&name, degree)).collect()
    }

    /// Degree of `v_s`, Morava only.
    pub fn vs_degree(&self) -> Option<i32> {
        self.height().map(|s| generator_degree(self.prime, s).unwrap())
    }

    /// A BP ring with the same prime restricted to p-integral scalars.
    pub fn integral(&self) -> Self {
        let mut r = self.clone();
        if r.kind == RingKind::BPRational {
            r.kind = RingKind::BPInteger;
        }
        r
    }
}

/// Table holding both `m_1..m_N` and `v_1..v_N` as generators.
pub fn hazewinkel_table(ring: &CoefficientRing) -> Result<Arc<VarTable>, RingError> {
    let n = ring.num_generators().unwrap_or(0);
    let mut specs = Vec::new();
    for i in 1..=n {
        specs.push(VarSpec::generator(&format!("m_{i}"), generator_degree(ring.prime(), i)?));
    }
    for i in 1..=n {
        specs.push(VarSpec::generator(&format!("v_{i}"), generator_degree(ring.prime(), i)?));
    }
    Ok(VarTable::new(specs).expect("generated names are unique"))
}

fn check_index(n: u32, ring: &CoefficientRing) -> Result<u32, RingError> {
    let max = ring.num_generators().unwrap_or(0);
    if n == 0 || n > max {
        return Err(RingError::IndexOutOfRange { index: n, max });
    }
    Ok(max)
}

/// `v_n = p m_n - sum_{i<n} m_i v_{n-i}^{p^i}`, expanded in the m-generators.
pub fn v_from_m(n: u32, ring: &CoefficientRing) -> Result<SparseSeries<Q>, RingError> {
    check_index(n, ring)?;
    let table = hazewinkel_table(ring)?;
    let ring = Arc::new(ring.clone());
    let p = ring.prime();
    let mut vs: Vec<SparseSeries<Q>> = Vec::new();
    for k in 1..=n {
        let mut v = SparseSeries::var(&ring, &table, &format!("m_{k}"), None)
            .expect("m generator present")
            .scale(&q_int(p as i64));
        for i in 1..k {
            let m_i = SparseSeries::var(&ring, &table, &format!("m_{i}"), None).unwrap();
            let pw = vs[(k - i - 1) as usize].pow(p.pow(i));
            v = &v - &(&m_i * &pw);
        }
        vs.push(v);
    }
    Ok(vs.pop().unwrap())
}

/// Inverse of [`v_from_m`]: `m_n` as a polynomial in `v_1..v_n`.
pub fn m_from_v(n: u32, ring: &CoefficientRing) -> Result<SparseSeries<Q>, RingError> {
    check_index(n, ring)?;
    let table = hazewinkel_table(ring)?;
    Ok(m_in_v_upto(n, ring, &table).pop().unwrap())
}

/// `m_1..m_n` expressed in the v-basis of `table`. Missing `v_k` (with
/// `k` beyond the table) are treated as zero, which is how a BP computation
/// is truncated to finitely many generators.
pub(crate) fn m_in_v_upto(n: u32, ring: &CoefficientRing, table: &Arc<VarTable>) -> Vec<SparseSeries<Q>> {
    let ring_arc = Arc::new(ring.clone());
    let p = ring.prime();
    let vgen = |k: u32| -> SparseSeries<Q> {
        SparseSeries::var(&ring_arc, table, &format!("v_{k}"), None)
            .unwrap_or_else(|_| SparseSeries::zero(&ring_arc, table, None))
    };
    let inv_p = q_frac(1, p as i64);
    let mut ms: Vec<SparseSeries<Q>> = Vec::new();
    for k in 1..=n {
        let mut acc = vgen(k);
        for i in 1..k {
            let pw = vgen(k - i).pow(p.pow(i));
            acc = &acc + &(&ms[(i - 1) as usize] * &pw);
        }
        ms.push(acc.scale(&inv_p));
    }
    ms
}

/// `true` iff every scalar of `poly` has denominator prime to `p`.
///
/// The input must be written in the v-basis; any `m_*` generator with a
/// non-zero exponent is rejected.
pub fn integrality_check<C: Coeff>(poly: &SparseSeries<C>, p: u32) -> Result<bool, RingError> {
    let table = poly.vars();
    let m_vars: Vec<usize> = table
        .iter()
        .enumerate()
        .filter(|(_, v)| v.role == VarRole::Generator && v.name.starts_with("m_"))
        .map(|(i, _)| i)
        .collect();
    for (mono, _) in poly.iter() {
        if let Some(&i) = m_vars.iter().find(|&&i| mono[i] != 0) {
            return Err(RingError::MGeneratorsPresent(table.get(i).name.clone()));
        }
    }
    Ok(poly.iter().all(|(_, c)| is_p_integral(&c.to_rational(), p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_ring_degrees() {
        let r = CoefficientRing::morava(3, 2).unwrap();
        assert_eq!(r.generators(), vec![("v_2".to_string(), -16)]);
        let r = CoefficientRing::morava(5, 3).unwrap();
        assert_eq!(r.vs_degree(), Some(-248));
        let r = CoefficientRing::bp(2, 3).unwrap();
        let degs: Vec<i32> = r.generators().into_iter().map(|(_, d)| d).collect();
        assert_eq!(degs, vec![-2, -6, -14]);
    }

    #[test]
    fn make_ring_errors() {
        assert_eq!(CoefficientRing::morava(4, 1), Err(RingError::NotPrime(4)));
        assert!(matches!(CoefficientRing::make(RingKind::MoravaK, 3, 0), Err(RingError::NonPositive { .. })));
        assert!(matches!(CoefficientRing::make(RingKind::BPRational, 2, -1), Err(RingError::NonPositive { .. })));
    }

    #[test]
    fn v1_is_p_m1() {
        let ring = CoefficientRing::bp(2, 3).unwrap();
        let v1 = v_from_m(1, &ring).unwrap();
        assert_eq!(v1.to_string(), "2*m_1");
        let m1 = m_from_v(1, &ring).unwrap();
        assert_eq!(m1.to_string(), "1/2*v_1");
        assert!(v_from_m(4, &ring).is_err());
        assert!(m_from_v(0, &ring).is_err());
    }

    #[test]
    fn conversions_are_homogeneous() {
        let ring = CoefficientRing::bp(3, 3).unwrap();
        for n in 1..=3 {
            let d = generator_degree(3, n).unwrap() as i64;
            assert_eq!(v_from_m(n, &ring).unwrap().homogeneous_degree(), Some(d));
            assert_eq!(m_from_v(n, &ring).unwrap().homogeneous_degree(), Some(d));
        }
    }

    #[test]
    fn round_trip_v_m_v() {
        // substitute m_i -> m_from_v(i) into v_from_m(n), expect v_n
        let ring = CoefficientRing::bp(2, 3).unwrap();
        let table = hazewinkel_table(&ring).unwrap();
        let ms = m_in_v_upto(3, &ring, &table);
        for n in 1..=3 {
            let v = v_from_m(n, &ring).unwrap();
            let names: Vec<String> = (1..=3).map(|i| format!("m_{i}")).collect();
            let assignment: Vec<(&str, &SparseSeries<Q>)> = names.iter().map(|s| s.as_str()).zip(ms.iter()).collect();
            let back = v.substitute(&assignment, &table, None).unwrap();
            let expect = SparseSeries::var(&Arc::new(ring.clone()), &table, &format!("v_{n}"), None).unwrap();
            assert_eq!(back, expect, "n = {n}");
        }
    }

    #[test]
    fn integrality_examples() {
        let ring = Arc::new(CoefficientRing::bp(2, 2).unwrap());
        let table = VarTable::new(ring.generator_specs()).unwrap();
        let v1 = SparseSeries::var(&ring, &table, "v_1", None).unwrap();
        assert!(integrality_check(&(&v1 * &v1).scale(&q_frac(1, 3)), 2).unwrap());
        assert!(!integrality_check(&v1.scale(&q_frac(1, 2)), 2).unwrap());
        let m1 = v_from_m(1, &ring).unwrap();
        assert!(matches!(integrality_check(&m1, 2), Err(RingError::MGeneratorsPresent(_))));
    }
}
