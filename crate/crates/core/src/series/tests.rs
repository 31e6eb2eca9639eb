use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::coefficients::{q_frac, q_int, Fp};

fn bp_ring() -> Arc<CoefficientRing> {
    Arc::new(CoefficientRing::bp(2, 2).unwrap())
}

fn table(ring: &CoefficientRing, series: &[(&str, Option<u32>)]) -> Arc<VarTable> {
    VarTable::with_ring(ring, series.iter().map(|(n, c)| VarSpec::series(n, 2, *c)).collect()).unwrap()
}

fn parse(text: &str, ring: &Arc<CoefficientRing>, t: &Arc<VarTable>, bound: Option<i64>) -> SparseSeries<Q> {
    parse_series(text, ring, t, bound).unwrap()
}

#[test]
fn difference_of_squares() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None), ("z", None)]);
    let a = parse("x + z", &ring, &t, None);
    let b = parse("x - z", &ring, &t, None);
    assert_eq!(&a * &b, parse("x^2 - z^2", &ring, &t, None));
}

#[test]
fn powers_of_zero() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None), ("z", None)]);
    let zero = parse("0", &ring, &t, Some(40));
    for e in [2, 8, 20] {
        assert!(zero.pow(e).is_zero());
    }
    assert_eq!(zero.pow(0).to_string(), "1");
}

#[test]
fn caps_kill_products() {
    let ring = Arc::new(CoefficientRing::morava(3, 2).unwrap());
    let t = VarTable::with_ring(&ring, vec![VarSpec::series("z", 2, Some(9))]).unwrap();
    let z = SparseSeries::<Fp>::var(&ring, &t, "z", None).unwrap();
    assert!((&z * &z.pow(8)).is_zero());
    assert!(!z.pow(8).is_zero());
}

#[test]
fn truncated_square_matches_dense_convolution() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None)]);
    let s = parse("1 + z + z^2 + z^3 + z^4 + z^5 + z^6 + z^7 + z^8", &ring, &t, Some(32));
    let sq = (&s * &s).with_bound(Some(32));
    // dense convolution of the coefficient vector [1; 9]
    let mut dense = [0i64; 17];
    for i in 0..=8 {
        for j in 0..=8 {
            dense[i + j] += 1;
        }
    }
    for (n, &d) in dense.iter().enumerate() {
        let got = sq.coefficient_of("z", n as i32).unwrap().constant_term();
        assert_eq!(got, q_int(d), "z^{n}");
    }
    let cut = (&s.with_bound(Some(16)) * &s).with_bound(Some(16));
    assert_eq!(cut.max_exponent("z").unwrap(), Some(8));
}

#[test]
fn substitution_binomial() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None), ("z", None), ("w", None)]);
    let f = parse("x^2", &ring, &t, None);
    let img = parse("z + w", &ring, &t, None);
    let out = f.substitute(&[("x", &img)], &t, None).unwrap();
    assert_eq!(out, parse("z^2 + 2 z w + w^2", &ring, &t, None));
}

#[test]
fn substitution_rejects_constant_into_truncated() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None)]);
    let f = parse("x + x^2", &ring, &t, Some(10));
    let img = parse("1 + x", &ring, &t, Some(10));
    assert!(matches!(f.substitute(&[("x", &img)], &t, Some(10)), Err(SeriesError::ConstantTerm(_))));
}

#[test]
fn multinomial_power_matches_binary_power() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None), ("y", None)]);
    let s = parse("x + y + 1/3 v_1 x^3 - v_2 y^2", &ring, &t, Some(60));
    let direct = s.pow_multinomial(17);
    let mut slow = s.one_like();
    for _ in 0..17 {
        slow = &slow * &s;
    }
    assert_eq!(direct, slow);
}

#[test]
fn reversion_identity() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None)]);
    let x = parse("x", &ring, &t, Some(20));
    assert_eq!(x.reversion("x").unwrap(), x);
}

/// `[x^n] g = (1/n) [t^(n-1)] (t/f(t))^n`, dense over rationals.
fn lagrange_oracle(f: &[Q], n_max: usize) -> Vec<Q> {
    // h = f/t, with h[0] = 1
    let h: Vec<Q> = f[1..].to_vec();
    let mut inv = vec![q_int(0); n_max];
    inv[0] = q_int(1);
    for n in 1..n_max {
        let mut acc = q_int(0);
        for k in 1..=n {
            if k < h.len() {
                acc -= &h[k] * &inv[n - k];
            }
        }
        inv[n] = acc;
    }
    let mut out = vec![q_int(0); n_max + 1];
    let mut power = vec![q_int(0); n_max];
    power[0] = q_int(1);
    for n in 1..=n_max {
        let mut next = vec![q_int(0); n_max];
        for i in 0..n_max {
            for j in 0..n_max - i {
                next[i + j] += &power[i] * &inv[j];
            }
        }
        power = next;
        out[n] = &power[n - 1] / q_int(n as i64);
    }
    out
}

#[test]
fn reversion_matches_lagrange_inversion() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None)]);
    let f = parse("x + x^2", &ring, &t, Some(20));
    let g = f.reversion("x").unwrap();
    assert_eq!(
        g,
        parse("x - x^2 + 2x^3 - 5x^4 + 14x^5 - 42x^6 + 132x^7 - 429x^8 + 1430x^9 - 4862x^10", &ring, &t, Some(20))
    );

    let f = parse("x - 1/2 x^2 + 3 x^3 + 5/7 x^6", &ring, &t, Some(24));
    let g = f.reversion("x").unwrap();
    let dense = [q_int(0), q_int(1), q_frac(-1, 2), q_int(3), q_int(0), q_int(0), q_frac(5, 7)];
    let oracle = lagrange_oracle(&dense, 12);
    for (n, want) in oracle.iter().enumerate().skip(1) {
        assert_eq!(g.coefficient_of("x", n as i32).unwrap().constant_term(), *want, "x^{n}");
    }
    assert_eq!(f.compose("x", &g).unwrap(), parse("x", &ring, &t, Some(24)));
    assert_eq!(g.compose("x", &f).unwrap(), parse("x", &ring, &t, Some(24)));
}

#[test]
fn reversion_rejects_bad_input() {
    let ring = bp_ring();
    let t = table(&ring, &[("x", None)]);
    let f = parse("2x + x^2", &ring, &t, Some(10));
    assert!(matches!(f.reversion("x"), Err(SeriesError::NoUnitLinearTerm(_))));
    let f = parse("x + x^2", &ring, &t, None);
    assert!(matches!(f.reversion("x"), Err(SeriesError::Unbounded(_))));
}

fn two_series_spec(ring: &Arc<CoefficientRing>, t: &Arc<VarTable>, cap: u32) -> QuotientSpec<Q> {
    // a stand-in for [2](z) with generator coefficients
    let rel = parse("2z + v_1 z^2 + 3 v_1^2 z^3 + v_2 z^4", ring, t, None);
    QuotientSpec::new(vec![
        Rule::Nilpotent { var: "z".into(), exp: cap },
        Rule::PSeries { var: "z".into(), prime: 2, relation: rel },
    ])
    .unwrap()
}

#[test]
fn reduce_kills_relation() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None), ("x", None)]);
    let spec = two_series_spec(&ring, &t, 12);
    let rel = parse("2z + v_1 z^2 + 3 v_1^2 z^3 + v_2 z^4", &ring, &t, None);
    assert!(spec.reduce(&rel).unwrap().is_zero());
    let shifted = parse("x z^2 + 5", &ring, &t, None);
    assert!(spec.reduce(&(&rel * &shifted)).unwrap().is_zero());
}

#[test]
fn reduce_nilpotent_morava() {
    let ring = Arc::new(CoefficientRing::morava(3, 2).unwrap());
    let t = VarTable::with_ring(&ring, vec![VarSpec::series("z", 2, None)]).unwrap();
    let spec = QuotientSpec::<Fp>::nilpotent("z", 9);
    let f: SparseSeries<Fp> = parse_series("z^9 + 2 v_2 z^10 + z^8", &ring, &t, None).unwrap();
    assert_eq!(spec.reduce(&f).unwrap(), parse_series("z^8", &ring, &t, None).unwrap());
}

#[test]
fn quotient_spec_validation() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None)]);
    let rel = parse("2z + z^2", &ring, &t, None);
    assert!(QuotientSpec::new(vec![Rule::PSeries { var: "z".into(), prime: 2, relation: rel.clone() }]).is_err());
    let bad = parse("3z + z^2", &ring, &t, None);
    assert!(QuotientSpec::new(vec![
        Rule::Nilpotent { var: "z".into(), exp: 5 },
        Rule::PSeries { var: "z".into(), prime: 2, relation: bad },
    ])
    .is_err());
    let constant = parse("1 + 2z", &ring, &t, None);
    assert!(QuotientSpec::new(vec![
        Rule::Nilpotent { var: "z".into(), exp: 5 },
        Rule::PSeries { var: "z".into(), prime: 2, relation: constant },
    ])
    .is_err());
}

#[test]
fn pretty_printer_and_parser_round_trip() {
    let ring = Arc::new(CoefficientRing::morava(3, 2).unwrap());
    let t = VarTable::with_ring(
        &ring,
        vec![VarSpec::series("x", 2, None), VarSpec::series("y", 4, None), VarSpec::series("s3", 6, None)],
    )
    .unwrap();
    let f: SparseSeries<Fp> = parse_series("v_2*y^3*s3 + v_2*y^4*x", &ring, &t, None).unwrap();
    let text = f.to_string();
    let back: SparseSeries<Fp> = parse_series(&text, &ring, &t, None).unwrap();
    assert_eq!(f, back);
    assert_eq!(f.homogeneous_degree(), Some(2));
    let g: SparseSeries<Fp> = parse_series("v_2^-1 * v_2 * 2", &ring, &t, None).unwrap();
    assert_eq!(g.to_string(), "2");
    let json = f.to_json();
    assert_eq!(json["terms"][0]["coeff"]["mod_p"], 1);
    assert_eq!(json["terms"][0]["coeff"]["v_exp"], 1);
}

#[test]
fn rational_json_shape() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None)]);
    let f = parse("-3/4 v_1^2 z", &ring, &t, None);
    assert_eq!(f.to_string(), "-3/4*v_1^2*z");
    let j = f.terms_json();
    assert_eq!(j[0]["coeff"]["num"], "-3");
    assert_eq!(j[0]["coeff"]["den"], "4");
    assert_eq!(j[0]["coeff"]["gens"]["v_1"], 2);
    assert_eq!(j[0]["exps"]["z"], 1);
}

#[test]
fn parse_errors() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None)]);
    assert!(parse_series::<Q>("z + ", &ring, &t, None).is_err());
    assert!(parse_series::<Q>("q", &ring, &t, None).is_err());
    assert!(parse_series::<Q>("z ^ x", &ring, &t, None).is_err());
    assert!(parse_series::<Q>("z $", &ring, &t, None).is_err());
}

#[test]
fn mismatched_tables_are_errors() {
    let ring = bp_ring();
    let t1 = table(&ring, &[("z", None)]);
    let t2 = table(&ring, &[("x", None)]);
    let a = parse("z", &ring, &t1, None);
    let b = parse("x", &ring, &t2, None);
    assert_eq!(a.checked_add(&b), Err(SeriesError::TableMismatch));
    let other = Arc::new(CoefficientRing::bp(3, 2).unwrap());
    let t3 = table(&other, &[("z", None)]);
    let c = parse("z", &other, &t3, None);
    assert_eq!(a.checked_mul(&c), Err(SeriesError::RingMismatch));
}

#[test]
fn inverse_of_unit() {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None)]);
    let u = parse("1 + v_1 z + z^2", &ring, &t, Some(20));
    let inv = u.inverse().unwrap();
    assert_eq!(&u * &inv, u.one_like());
    let non = parse("z", &ring, &t, Some(20));
    assert!(non.inverse().is_err());
}

fn small_series(ring: Arc<CoefficientRing>, t: Arc<VarTable>) -> impl Strategy<Value = SparseSeries<Q>> {
    proptest::collection::vec((0i32..4, 0i32..4, 0i32..3, -3i64..4), 0..6).prop_map(move |terms| {
        let mut s = SparseSeries::zero(&ring, &t, Some(16));
        for (a, b, g, c) in terms {
            let mut m = t.unit();
            m[t.index("z").unwrap()] = a;
            m[t.index("x").unwrap()] = b;
            m[t.index("v_1").unwrap()] = g;
            s.add_term(m, q_int(c));
        }
        s
    })
}

fn fixture() -> (Arc<CoefficientRing>, Arc<VarTable>) {
    let ring = bp_ring();
    let t = table(&ring, &[("z", None), ("x", Some(5))]);
    (ring, t)
}

proptest! {
    #[test]
    fn ring_axioms(a in small_series(fixture().0, fixture().1),
                   b in small_series(fixture().0, fixture().1),
                   c in small_series(fixture().0, fixture().1)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn reduce_is_idempotent(a in small_series(fixture().0, fixture().1)) {
        let (ring, t) = fixture();
        let spec = two_series_spec(&ring, &t, 7);
        let once = spec.reduce(&a).unwrap();
        prop_assert_eq!(spec.reduce(&once).unwrap(), once);
    }

    #[test]
    fn independent_rules_commute(a in small_series(fixture().0, fixture().1)) {
        let (ring, t) = fixture();
        let rel = parse("2z + v_1 z^2 + 3 v_1^2 z^3 + v_2 z^4", &ring, &t, None);
        let first = QuotientSpec::new(vec![
            Rule::Nilpotent { var: "x".into(), exp: 3 },
            Rule::Nilpotent { var: "z".into(), exp: 7 },
            Rule::PSeries { var: "z".into(), prime: 2, relation: rel.clone() },
        ]).unwrap();
        let second = QuotientSpec::new(vec![
            Rule::PSeries { var: "z".into(), prime: 2, relation: rel },
            Rule::Nilpotent { var: "z".into(), exp: 7 },
            Rule::Nilpotent { var: "x".into(), exp: 3 },
        ]).unwrap();
        prop_assert_eq!(first.reduce(&a).unwrap(), second.reduce(&a).unwrap());
    }

    #[test]
    fn substitute_commutes_with_untouched_nilpotence(a in small_series(fixture().0, fixture().1)) {
        let (ring, t) = fixture();
        let spec = QuotientSpec::<Q>::nilpotent("x", 2);
        let img = parse("z + v_1 z^2", &ring, &t, Some(16));
        let lhs = spec.reduce(&a.substitute(&[("z", &img)], &t, Some(16)).unwrap()).unwrap();
        let rhs = spec.reduce(&a).unwrap().substitute(&[("z", &img)], &t, Some(16)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn homogeneous_products(e1 in 0i32..4, e2 in 0i32..4, g in 0i32..3) {
        let (ring, t) = fixture();
        let mut a = SparseSeries::<Q>::zero(&ring, &t, None);
        let mut m = t.unit();
        m[t.index("z").unwrap()] = e1;
        m[t.index("v_1").unwrap()] = g;
        a.add_term(m, q_int(3));
        let mut m2 = t.unit();
        m2[t.index("z").unwrap()] = e1 + 1;
        m2[t.index("v_1").unwrap()] = g + 1;
        a.add_term(m2, q_int(1));
        let b = parse("x + z", &ring, &t, None).pow(e2 as u32);
        let d = a.homogeneous_degree().unwrap() + b.homogeneous_degree().unwrap();
        prop_assert!((&a * &b).is_homogeneous_of(d));
    }
}
