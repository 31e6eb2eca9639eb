//! Acceptance suite. Prints one line per criterion with its tolerance and
//! timing, and exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tchern::coefficients::{integrality_check, q_int, CoefficientRing, Fp, Q};
use tchern::fgl::{bp_fgl, low_order_congruence_defect, morava_fgl};
use tchern::groups::{
    bp_sigma_p_relation_check, m_s, morava_quillen_euler, sigma_p_presentation, wreath_basis, wreath_rank,
};
use tchern::series::{parse_series, SparseSeries};
use tchern::symfun::{elementary, norm, omega, x_name, x_table, Group};
use tchern::transfer::{
    bp_d_series_p2, bp_delta_p2, bp_to_morava, display_table, lambda_table, morava_lambda, rho_star_p2,
    transfer_of_norm_symmetric, transfer_x_power_p2, LambdaRow, MoravaExpansion,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Deviation,
    Fail,
}

struct Line {
    name: &'static str,
    tolerance: &'static str,
    limit: Duration,
    verdict: Verdict,
    detail: String,
    elapsed: Duration,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn run(name: &'static str, tolerance: &'static str, limit: Duration, f: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let res = f();
    let elapsed = start.elapsed();
    let (mut verdict, detail) = match res {
        Ok(d) if d.starts_with("DEVIATION") => (Verdict::Deviation, d),
        Ok(d) => (Verdict::Pass, d),
        Err(d) => (Verdict::Fail, d),
    };
    if elapsed > limit && verdict != Verdict::Fail {
        verdict = Verdict::Fail;
    }
    Line { name, tolerance, limit, verdict, detail, elapsed }
}

/// Parse a hand-transcribed display line `s{k} = ...` and compare it with the
/// solved row, then expand it back into `sigma_k`.
fn compare_layout(e: &MoravaExpansion, row: &LambdaRow, line: &str) -> Result<(), String> {
    let (lhs, rhs) = line.split_once(" = ").ok_or("malformed reference line")?;
    check(lhs == format!("s{}", row.k), || format!("reference names {lhs}"))?;
    let t = display_table(e.ring());
    let want: SparseSeries<Fp> = parse_series(rhs, e.ring(), &t, None).map_err(e2s)?;
    let got = row.display_series().map_err(e2s)?;
    check(got == want, || format!("k={}: computed {got}, reference {want}", row.k))?;
    let back = e.expand_display(&want).map_err(e2s)?;
    check(&back == e.sigma(row.k).map_err(e2s)?, || format!("k={}: reference does not expand to sigma_k", row.k))
}

fn example_two() -> Outcome {
    let e = MoravaExpansion::with_default_order(3, 2).map_err(e2s)?;
    let lines = ["s1 = v_2*y^3*s3 + v_2*y^4*x", "s2 = 2*v_2^2*y^3*s3^4 + 2*v_2*y^2*s3^2 + v_2*x^2*y^4 + 2*y"];
    for (k, line) in (1..).zip(lines) {
        compare_layout(&e, &morava_lambda(&e, k).map_err(e2s)?, line)?;
    }
    Ok("s1, s2 equal and expand back to sigma_k".into())
}

fn example_three() -> Outcome {
    let e = MoravaExpansion::with_default_order(5, 3).map_err(e2s)?;
    let lines = [
        "s1 = v_3*y^25*s5^5 + v_3*y^30*s5 + v_3*y^31*x",
        "s2 = 4*v_3^2*y^25*s5^30 + 4*v_3^2*y^30*s5^26 + 3*v_3*y^19*s5^10 + v_3*y^24*s5^6 + 3*v_3*y^29*s5^2 + 2*v_3*y^31*x^2",
        "s3 = 2*v_3^3*y^25*s5^55 + 2*v_3^3*y^30*s5^51 + v_3^2*y^19*s5^35 + 2*v_3^2*y^24*s5^31 + v_3^2*y^29*s5^27 \
         + 2*v_3*y^13*s5^15 + v_3*y^18*s5^11 + v_3*y^23*s5^7 + 2*v_3*y^28*s5^3 + 2*v_3*x^3*y^31",
        "s4 = 4*v_3^4*y^25*s5^80 + 4*v_3^4*y^30*s5^76 + 4*v_3^3*y^19*s5^60 + 3*v_3^3*y^24*s5^56 + 4*v_3^3*y^29*s5^52 \
         + 4*v_3^2*y^13*s5^40 + 2*v_3^2*y^18*s5^36 + 2*v_3^2*y^23*s5^32 + 4*v_3^2*y^28*s5^28 + 4*v_3*y^7*s5^20 \
         + v_3*y^12*s5^16 + 4*v_3*y^17*s5^12 + v_3*y^22*s5^8 + 4*v_3*y^27*s5^4 + v_3*x^4*y^31 + 4*y",
    ];
    for (k, line) in (1..).zip(lines) {
        compare_layout(&e, &morava_lambda(&e, k).map_err(e2s)?, line)?;
    }
    Ok("s1..s4 equal and expand back to sigma_k".into())
}

fn example_one() -> Outcome {
    let fgl = bp_fgl(2, 3, 12).map_err(e2s)?;
    let ds = bp_d_series_p2(&fgl, 8, 1).map_err(e2s)?;
    let b = bp_delta_p2(&ds).map_err(e2s)?;
    let d1 = &b.deltas[1];
    check(d1.is_homogeneous_of(-2), || "delta_1 is not homogeneous".into())?;
    for s in 1..=3 {
        let e = MoravaExpansion::with_default_order(2, s).map_err(e2s)?;
        let row = morava_lambda(&e, 1).map_err(e2s)?;
        let image = bp_to_morava(d1, s).map_err(e2s)?;
        check(image.to_string() == row.lambdas[1].to_string(), || format!("K({s}) image disagrees"))?;
    }
    let data = b.transfer_data().map_err(e2s)?;
    for k in 1..=5u32 {
        let r = rho_star_p2(&transfer_x_power_p2(k, &data).map_err(e2s)?.series).map_err(e2s)?;
        let want: SparseSeries<Q> = parse_series(&format!("x^{k} + tx^{k}"), r.ring(), r.vars(), None).map_err(e2s)?;
        check(r == want, || format!("restriction of Tr(x^{k})"))?;
    }
    let report = b.diff_report(&b.reference_delta1().map_err(e2s)?).map_err(e2s)?;
    check(report.homogeneous_mismatches().is_empty(), || "homogeneous reference term missing".into())?;
    let mut odd: Vec<&str> =
        report.reference_terms.iter().filter(|t| !t.homogeneous).map(|t| t.term.as_str()).collect();
    odd.sort();
    println!("    diff report:");
    for l in report.render().lines() {
        println!("      {l}");
    }
    Ok(format!(
        "DEVIATION every homogeneous reference term occurs in {}; non-homogeneous reference terms {:?}",
        report.best, odd
    ))
}

fn fp_monomial(e: &MoravaExpansion, powers: &[(&str, i32)]) -> Result<SparseSeries<Fp>, String> {
    SparseSeries::monomial(e.ring(), e.table(), powers, Fp::new(1, e.prime()), None).map_err(e2s)
}

fn sigma1_identity() -> Outcome {
    let mut notes = Vec::new();
    for (p, s) in [(2u32, 2u32), (3, 2), (3, 3), (5, 2)] {
        let e = MoravaExpansion::with_default_order(p, s).map_err(e2s)?;
        let n = p.pow(s) as i32;
        let vs = format!("v_{s}");
        let sp = e.sigma(p).map_err(e2s)?;
        let mut inner = fp_monomial(&e, &[("z", n - 1), ("x", 1)])?;
        for i in 1..s {
            inner = &inner + &(&fp_monomial(&e, &[("z", n - p.pow(i) as i32)])? * &sp.pow(p.pow(i - 1)));
        }
        let closed = &fp_monomial(&e, &[(vs.as_str(), 1)])? * &inner;
        let got = e.sigma(1).map_err(e2s)?;
        if got == &closed {
            continue;
        }
        let diff = got - &closed;
        check(p == 2 && diff == fp_monomial(&e, &[("z", 1)])?, || format!("({p},{s}): difference {diff}"))?;
        notes.push(format!("({p},{s}) differs by exactly +z, the term z from x + F(x,z) at p = 2"));
    }
    if notes.is_empty() {
        Ok("identity holds for all four".into())
    } else {
        Ok(format!("DEVIATION holds for (3,2), (3,3), (5,2); {}", notes.join("; ")))
    }
}

fn congruence() -> Outcome {
    for (p, s) in [(2u32, 3u32), (3, 2), (5, 2)] {
        let f = morava_fgl(p, s, p.pow(2 * (s - 1)) + p.pow(s)).map_err(e2s)?;
        let d = low_order_congruence_defect(&f).map_err(e2s)?;
        check(d.is_zero(), || format!("({p},{s}): defect {d}"))?;
    }
    Ok("zero defect for (2,3), (3,2), (5,2)".into())
}

fn m_s_values() -> Outcome {
    for ((p, s), want) in [((3, 2), 5), ((5, 3), 32), ((2, 1), 2)] {
        let m = m_s(p, s).map_err(e2s)?;
        check(m == want, || format!("m_s({p},{s}) = {m}"))?;
        let pres = sigma_p_presentation(p, s).map_err(e2s)?;
        let tr = &pres.data[0].1;
        let vs = format!("v_{s}");
        let want = SparseSeries::monomial(
            tr.ring(),
            tr.vars(),
            &[(vs.as_str(), 1), ("y", m as i32 - 1)],
            Fp::new(-1, p),
            None,
        )
        .map_err(e2s)?;
        check(tr == &want, || format!("Tr(1) = {tr}"))?;
        // (p-1)! [p](z)/z restricted along y -> z^(p-1), from the K(s) law
        let e = morava_quillen_euler(p, s, p).map_err(e2s)?;
        let fact: i64 = (1..p as i64).product();
        let scaled = e.scale(&Fp::new(fact, p));
        let want = SparseSeries::monomial(
            scaled.ring(),
            scaled.vars(),
            &[(vs.as_str(), 1), ("z", ((p - 1) * (m - 1)) as i32)],
            Fp::new(-1, p),
            None,
        )
        .map_err(e2s)?;
        check(scaled == want, || format!("({p},{s}): (p-1)! [p](z)/z = {scaled}"))?;
    }
    for (p, s) in [(2, 1), (3, 2)] {
        let r = bp_sigma_p_relation_check(p, s).map_err(e2s)?;
        check(r.holds, || format!("BP relation at ({p},{s}): {r:?}"))?;
    }
    let e = MoravaExpansion::with_default_order(5, 3).map_err(e2s)?;
    let (_, rows) = lambda_table(&e).map_err(e2s)?;
    let mut top = 0;
    for row in &rows {
        let d = row.display_series().map_err(e2s)?;
        let yi = d.vars().require("y").map_err(e2s)?;
        top = top.max(d.iter().map(|(m, _)| m[yi]).max().unwrap_or(0));
    }
    check(top == 31, || format!("maximal y-power {top}"))?;
    Ok("m_s = 5, 32, 2; Tr(1) = -v_s y^(m_s-1); maximal y-power y^31".into())
}

fn residual_suite() -> Outcome {
    let mut rows_checked = 0;
    let mut equations = 0;
    for (p, s) in SHIPPED {
        let e = MoravaExpansion::with_default_order(p, s).map_err(e2s)?;
        let (_, rows) = lambda_table(&e).map_err(e2s)?;
        for row in &rows {
            let back = e.expand_display(&row.display_series().map_err(e2s)?).map_err(e2s)?;
            check(&back == e.sigma(row.k).map_err(e2s)?, || format!("({p},{s},{}) does not expand back", row.k))?;
            rows_checked += 1;
            equations += row.equations_checked;
        }
    }
    Ok(format!("{rows_checked} rows, {equations} coefficient equations vanish"))
}

const SHIPPED: [(u32, u32); 12] =
    [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (5, 1), (5, 2), (5, 3), (7, 1), (7, 2)];

fn axiom_suite() -> Outcome {
    for (p, s) in SHIPPED {
        let f = morava_fgl(p, s, p.pow(s + 1) + p.pow(s)).map_err(e2s)?;
        let r = f.axiom_check().map_err(e2s)?;
        check(r.all_pass(), || format!("K({s}) at p={p}: {r:?}"))?;
    }
    let f = bp_fgl(2, 3, 32).map_err(e2s)?;
    check(integrality_check(f.series(), 2).map_err(e2s)?, || "BP law is not 2-integral".into())?;
    check(f.log_is_additive().map_err(e2s)?, || "BP log is not additive".into())?;
    let r = f.axiom_check().map_err(e2s)?;
    check(r.all_pass() && r.associativity_order == 32, || format!("BP(2,3): {r:?}"))?;
    Ok(format!("{} K(s) laws through p^(s+1) + p^s; BP(2,3) integral and associative through degree 32", SHIPPED.len()))
}

fn fact(n: u32) -> i64 {
    (1..=n as i64).product()
}

fn norm_combinatorics() -> Outcome {
    let ring = Arc::new(CoefficientRing::bp(2, 1).map_err(e2s)?);
    for p in [2u32, 3, 5] {
        let t = x_table(&ring, p, &[]);
        for i in 1..=p {
            let names: Vec<String> = (1..=i).map(x_name).collect();
            let m: SparseSeries<Q> = parse_series(&names.join("*"), &ring, &t, None).map_err(e2s)?;
            let n = norm(Group::Symmetric, &m, p).map_err(e2s)?;
            let want = elementary::<Q>(&ring, &t, i, p).map_err(e2s)?.scale(&q_int(fact(i) * fact(p - i)));
            check(n == want, || format!("symmetric norm p={p} i={i}"))?;
        }
    }
    for p in [2u32, 3, 5, 7] {
        let t = x_table(&ring, p, &[]);
        for k in 1..p {
            let w: SparseSeries<Q> = omega(p, k).map_err(e2s)?.series(&ring, &t, 1).map_err(e2s)?;
            let n = norm(Group::Cyclic, &w, p).map_err(e2s)?;
            check(n == elementary(&ring, &t, k, p).map_err(e2s)?, || format!("cyclic norm p={p} k={k}"))?;
        }
    }
    Ok("N_Sigma(x_1...x_i) = i!(p-i)! sigma_i for p <= 5; N_pi(omega_k) = sigma_k for p <= 7".into())
}

fn recurrence_consistency() -> Outcome {
    let fgl = bp_fgl(2, 3, 12).map_err(e2s)?;
    let b = bp_delta_p2(&bp_d_series_p2(&fgl, 8, 1).map_err(e2s)?).map_err(e2s)?;
    let data = b.transfer_data().map_err(e2s)?;
    let ring = b.deltas[0].ring().clone();
    let xt = x_table(&ring, 2, &[]);
    let a: SparseSeries<Q> = parse_series("x_1^2", &ring, &xt, None).map_err(e2s)?;
    let direct = transfer_of_norm_symmetric(&a, &data).map_err(e2s)?;
    let rec = transfer_x_power_p2(2, &data).map_err(e2s)?;
    check(rec.series == direct.series, || "Tr(x^2) disagrees".into())?;
    for k in 1..=5u32 {
        let r = rho_star_p2(&transfer_x_power_p2(k, &data).map_err(e2s)?.series).map_err(e2s)?;
        let want: SparseSeries<Q> = parse_series(&format!("x^{k} + tx^{k}"), r.ring(), r.vars(), None).map_err(e2s)?;
        check(r == want, || format!("rho*(Tr(x^{k})) = {r}"))?;
    }
    Ok("Tr(x^2) agrees; rho* gives x^k + (tx)^k for k <= 5".into())
}

/// Rank by listing all `m^p` tuples of exponents below `m = p^(ns)` and
/// collecting rotation classes.
fn brute_rank(p: u32, s: u32, n: u32) -> u128 {
    let m = p.pow(n * s) as u64;
    let mut classes = BTreeSet::new();
    let mut constant = 0u128;
    for code in 0..m.pow(p) {
        let digits: Vec<u64> = (0..p).map(|i| code / m.pow(i) % m).collect();
        if digits.windows(2).all(|w| w[0] == w[1]) {
            constant += 1;
            continue;
        }
        let rot = (0..p as usize).map(|r| [&digits[r..], &digits[..r]].concat()).min().expect("rotations");
        classes.insert(rot);
    }
    constant * p.pow(s) as u128 + classes.len() as u128
}

fn wreath_ranks() -> Outcome {
    let mut got = Vec::new();
    for (p, s, n) in [(2u32, 1u32, 1u32), (2, 1, 2), (3, 1, 1)] {
        let brute = brute_rank(p, s, n);
        let formula = wreath_rank(p, s, n).map_err(e2s)?;
        let basis = wreath_basis(p, s, n).map_err(e2s)?.rank().unwrap_or(0) as u128;
        check(brute == formula && basis == formula, || {
            format!("({p},{s},{n}): brute {brute}, formula {formula}, basis {basis}")
        })?;
        got.push(brute);
    }
    check(got == [5, 14, 17], || format!("ranks {got:?}"))?;
    Ok("DEVIATION ranks 5, 14, 17 by enumeration and formula; the stated 34 for (2,1,2) is not the orbit count".into())
}

fn report(l: &Line) {
    let tag = match l.verdict {
        Verdict::Pass => "PASS",
        Verdict::Deviation => "PASS*",
        Verdict::Fail => "FAIL",
    };
    let detail = l.detail.trim_start_matches("DEVIATION ");
    println!(
        "{tag:<5} {:<38} tol={:<20} {:>8.3}s (limit {}s)  {detail}",
        l.name,
        l.tolerance,
        l.elapsed.as_secs_f64(),
        l.limit.as_secs()
    );
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        ("sigma expansion, p=3 s=2", "exact", secs(10), example_two),
        ("sigma expansion, p=5 s=3", "exact", secs(600), example_three),
        ("BP delta_1 mod z^8, p=2", "exact, reviewed diff", secs(60), example_one),
        ("closed form of sigma_1", "exact", secs(60), sigma1_identity),
        ("low-order congruence of the K(s) law", "exact", secs(60), congruence),
        ("m_s, Tr(1) and maximal y-power", "exact", secs(60), m_s_values),
        ("residual equations", "exact", secs(300), residual_suite),
        ("FGL axioms and BP integrality", "exact", secs(600), axiom_suite),
        ("norm combinatorics", "exact", secs(60), norm_combinatorics),
        ("recurrence and restriction", "exact", secs(60), recurrence_consistency),
        ("wreath product ranks", "exact", secs(60), wreath_ranks),
    ];
    let total = criteria.len();
    let mut failed = 0;
    for (name, tol, limit, f) in criteria {
        let l = run(name, tol, limit, f);
        if l.verdict == Verdict::Fail {
            failed += 1;
        }
        report(&l);
    }
    println!("PASS* marks a documented deviation from the stated value.");
    println!("{total} criteria, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
