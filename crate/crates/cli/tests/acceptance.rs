//! Acceptance suite: one PASS/FAIL line per criterion, each held to its time budget.
//!
//! Run with `cargo test -p mmc-cli --test acceptance`.

use std::collections::HashSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mmc_core::channel::{
    capacity, entropy_oracle, payload_shape, sounding_recover, sounding_wrap, transmit,
    Estimation, DEFAULT_GUARD,
};
use mmc_core::composite::{build_mrd_composite, is_shape_deficiency_correcting, CheckMode};
use mmc_core::linalg::{nullspace_shape, pi_scaled_shape, shape_of, smith_normal_form};
use mmc_core::rank_metric::{is_rank_deficiency_correcting, min_rank_distance};
use mmc_core::{
    ChainRing, ChannelConfig, CompositeCode, FieldElem, Fq, GabidulinCode, RingElem, RingMatrix, SShape, TransferModel,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sh(v: &[usize]) -> SShape {
    SShape::new(v.to_vec()).unwrap()
}

fn z(p: u64, s: usize) -> ChainRing {
    ChainRing::integers_mod(p, s).unwrap()
}

/// Every matrix in `R^{rows x cols}`, in index order.
fn all_matrices(ring: &ChainRing, rows: usize, cols: usize) -> impl Iterator<Item = RingMatrix> + '_ {
    let order = ring.order();
    let total = order.pow((rows * cols) as u32);
    (0..total).map(move |mut idx| {
        let data = (0..rows * cols)
            .map(|_| {
                let e = RingElem((idx % order) as u32);
                idx /= order;
                e
            })
            .collect();
        RingMatrix::from_vec(ring, rows, cols, data).unwrap()
    })
}

fn random_elem(ring: &ChainRing, rng: &mut impl Rng) -> RingElem {
    RingElem(rng.random_range(0..ring.order() as u32))
}

// ---------------------------------------------------------------------------

fn snf_worked_example() -> Check {
    let ring = z(2, 3);
    let a = RingMatrix::from_rows(&ring, &[vec![4, 3, 6], vec![6, 7, 2]]).map_err(err)?;
    let dec = smith_normal_form(&a);
    ensure(dec.shape == sh(&[1, 2, 2]), || format!("shape ({})", dec.shape))?;
    let d = RingMatrix::from_rows(&ring, &[vec![1, 0, 0], vec![0, 2, 0]]).map_err(err)?;
    ensure(dec.d == d, || format!("D = {:?}", dec.d))?;
    ensure(dec.product() == a, || "P D Q differs from A".into())?;
    ensure(dec.p.mul(&dec.p_inv).map_err(err)? == RingMatrix::identity(&ring, 2), || "P P^-1 != I".into())?;
    Ok(format!("shape ({}), D = diag(1,2) in 2x3, PDQ = A", dec.shape))
}

fn demo_walkthrough() -> Check {
    let text = mmc_cli::demo::render().map_err(err)?;
    let golden = include_str!("golden/demo.txt");
    ensure(text == golden, || "output differs from golden file".into())?;
    // recovered digits per place value 1, 2, 4 within one column block
    let known = |col: usize| -> Vec<usize> {
        let header = format!("column {col}:");
        let rows: Vec<&str> = text.lines().skip_while(|l| *l != header).skip(1).take(4).collect();
        (0..3)
            .map(|place| {
                rows.iter()
                    .filter(|l| l.rsplit(" + ").nth(place).is_some_and(|t| t.contains('[')))
                    .count()
            })
            .collect()
    };
    let (c1, c2) = (known(1), known(2));
    ensure(c1 == [4, 3, 1] && c2 == [0, 3, 1], || format!("known digits {c1:?} / {c2:?}"))?;
    ensure(text.contains("total: 4 + 6 + 2 = 12 bits"), || "missing 12-bit total".into())?;
    Ok("byte-exact golden, 12 bits".into())
}

fn entropy_matches_shape() -> Check {
    let ring = z(2, 2);
    let mut checked = 0;
    for lambda in [sh(&[1, 1]), sh(&[1, 2]), sh(&[2, 2])] {
        for a in all_matrices(&ring, 2, 2) {
            let h = entropy_oracle(&a, &lambda, DEFAULT_GUARD).map_err(err)?;
            let predicted = shape_of(&a).reversed_dot(&lambda).map_err(err)?;
            ensure(h.exact_qdigits == Some(predicted), || {
                format!("A = {a:?}, lambda = ({lambda}): H = {:?}, predicted {predicted}", h.exact_qdigits)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (A, lambda) pairs exact"))
}

fn capacity_exactness() -> Check {
    let ring = z(2, 2);
    let mut notes = Vec::new();
    for n in [1usize, 2] {
        for lambda in [sh(&[1, 1]), sh(&[1, 2]), sh(&[2, 2])] {
            let cfg = ChannelConfig::new(&ring, n, n, lambda.clone(), TransferModel::Uniform).map_err(err)?;
            let via_shape = capacity(&cfg, Estimation::Exact { guard: DEFAULT_GUARD }).map_err(err)?.exact.unwrap();
            let mut digits: u128 = 0;
            let mut count: u128 = 0;
            for a in all_matrices(&ring, n, n) {
                digits += entropy_oracle(&a, &lambda, DEFAULT_GUARD).map_err(err)?.exact_qdigits.unwrap() as u128;
                count += 1;
            }
            let via_entropy = Ratio::new(digits, count);
            ensure(via_shape == via_entropy, || {
                format!("n = {n}, lambda = ({lambda}): {via_shape} vs {via_entropy}")
            })?;
            if n == 1 && lambda == sh(&[1, 1]) {
                ensure(via_shape == Ratio::new(5, 4), || format!("n = 1 value {via_shape}"))?;
            }
        }
    }
    notes.push("n in {1,2} exact, C(n=1) = 5/4".to_string());

    let lambda = sh(&[1, 1]);
    let cfg = ChannelConfig::new(&ring, 3, 3, lambda, TransferModel::Uniform).map_err(err)?;
    let exact = capacity(&cfg, Estimation::Exact { guard: DEFAULT_GUARD }).map_err(err)?;
    let mc = capacity(&cfg, Estimation::MonteCarlo { trials: 100_000, seed: 2024, threads: None }).map_err(err)?;
    let se = mc.stderr.unwrap();
    let z_score = (mc.value - exact.value).abs() / se;
    ensure(z_score <= 3.0, || format!("n = 3: MC {} vs exact {} ({z_score:.2} se)", mc.value, exact.value))?;
    notes.push(format!("n = 3 MC {:.4} vs exact {:.4} ({z_score:.2} se)", mc.value, exact.value));
    Ok(notes.join("; "))
}

fn gabidulin_mrd() -> Check {
    let f2 = Fq::prime(2).map_err(err)?;
    let mut done = Vec::new();
    for (n, m, k) in [(2, 2, 1), (2, 3, 1), (3, 3, 1), (3, 3, 2)] {
        let code = GabidulinCode::new(&f2, m, n, k).map_err(err)?;
        let d = min_rank_distance(&code, DEFAULT_GUARD).map_err(err)?;
        ensure(d == n - k + 1, || format!("(n,m,k) = ({n},{m},{k}): distance {d}"))?;
        for b in 0..=n {
            let ok = is_rank_deficiency_correcting(&code, b, DEFAULT_GUARD).map_err(err)?;
            ensure(ok == (d > b), || format!("(n,m,k) = ({n},{m},{k}), b = {b}: oracle says {ok}"))?;
        }
        done.push(format!("({n},{m},{k})"));
    }
    Ok(format!("d = n-k+1 and b-correcting iff d > b for {}", done.join(" ")))
}

fn shape_criterion_equivalence() -> Check {
    let ring = z(2, 2);
    let n = 2;
    let test_betas: Vec<SShape> = SShape::all_bounded(2, 2);
    let mut codes = 0;
    for lambda in [sh(&[2, 2]), sh(&[2, 3]), sh(&[3, 3])] {
        for code_beta in SShape::all_bounded(2, 2) {
            let bits: usize = (0..2).map(|i| (n - code_beta.entries()[i]) * lambda.entries()[i]).sum();
            if bits > 6 {
                continue;
            }
            let code = build_mrd_composite(&ring, n, &lambda, &code_beta, 1).map_err(err)?;
            let book = code.codebook(DEFAULT_GUARD).map_err(err)?;
            for beta in &test_betas {
                let criterion = is_shape_deficiency_correcting(&book, beta, CheckMode::Criterion, DEFAULT_GUARD);
                let oracle = is_shape_deficiency_correcting(&book, beta, CheckMode::Oracle { m: 2 }, DEFAULT_GUARD);
                let (c, o) = (criterion.map_err(err)?, oracle.map_err(err)?);
                ensure(c == o, || {
                    format!("lambda ({lambda}), code beta ({code_beta}), beta ({beta}): criterion {c}, oracle {o}")
                })?;
            }
            codes += 1;
        }
    }
    Ok(format!("{codes} composites x {} shapes agree", test_betas.len()))
}

/// Every message tuple of `code`, in index order.
fn all_messages(code: &CompositeCode) -> Vec<Vec<Vec<FieldElem>>> {
    let field = code.ring().residue_field().clone();
    let q = field.q();
    let lens: Vec<usize> = code.components().iter().map(|c| c.message_len()).collect();
    let total: usize = lens.iter().sum();
    (0..q.pow(total as u32))
        .map(|mut idx| {
            lens.iter()
                .map(|&len| {
                    (0..len)
                        .map(|_| {
                            let e = field.elem(idx % q).unwrap();
                            idx /= q;
                            e
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn zero_error_mrd() -> Check {
    let ring = z(2, 2);
    let n = 2;
    let lambda = sh(&[2, 2]);
    let mut notes = Vec::new();
    for beta in [sh(&[0, 1]), sh(&[1, 1])] {
        let code = build_mrd_composite(&ring, n, &lambda, &beta, 1).map_err(err)?;
        let expected: usize = (0..2).map(|i| (n - beta.entries()[i]) * lambda.entries()[i]).sum();
        ensure(code.total_digits() == expected && code.rate() == expected as f64, || {
            format!("beta ({beta}): rate {} vs {expected}", code.rate())
        })?;
        let floor = beta.complement(n).map_err(err)?;
        let messages = all_messages(&code);
        let codewords: Vec<RingMatrix> =
            messages.iter().map(|msg| code.encode(msg).map(|mut x| x.remove(0))).collect::<Result<_, _>>().map_err(err)?;
        let (mut matrices, mut decodes) = (0, 0);
        for a in all_matrices(&ring, n, n) {
            if !floor.leq(&shape_of(&a)).map_err(err)? {
                continue;
            }
            matrices += 1;
            for (msg, x) in messages.iter().zip(&codewords) {
                let y = transmit(x, &a, &lambda).map_err(err)?;
                let got = code.decode(&[y], std::slice::from_ref(&a)).map_err(|e| format!("beta ({beta}), A = {a:?}: {e}"))?;
                ensure(&got == msg, || format!("beta ({beta}), A = {a:?}: wrong message"))?;
                decodes += 1;
            }
        }
        notes.push(format!("beta ({beta}): {matrices} matrices, {decodes} decodes, rate {expected}"));
    }
    Ok(notes.join("; "))
}

fn round_trip_and_sounding() -> Check {
    let ring = z(2, 3);
    let n = 2;
    let lambda = sh(&[2, 2, 2]);
    let wrapped = sh(&[4, 4, 4]);
    ensure(payload_shape(&wrapped, n).map_err(err)? == lambda, || "payload shape".into())?;
    let code = build_mrd_composite(&ring, n, &lambda, &SShape::zero(3).map_err(err)?, 1).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 10_000;
    for t in 0..trials {
        let msg = code.random_messages(&mut rng);
        let x = code.encode(&msg).map_err(err)?.remove(0);
        let a = RingMatrix::random_invertible(&ring, n, &mut rng);
        let coherent = code.decode(&[a.mul(&x).map_err(err)?], std::slice::from_ref(&a)).map_err(err)?;
        ensure(coherent == msg, || format!("trial {t}: coherent decode differs"))?;
        let y = transmit(&sounding_wrap(&x, &wrapped).map_err(err)?, &a, &wrapped).map_err(err)?;
        let (a_hat, payload) = sounding_recover(&y, n).map_err(err)?;
        let sounded = code.decode(&[payload], &[a_hat]).map_err(err)?;
        ensure(sounded == coherent, || format!("trial {t}: sounding decode differs"))?;
    }
    Ok(format!("{trials} trials, coherent and sounding decodes identical"))
}

// ---------------------------------------------------------------------------
// Property suites

fn exhaustive_rings() -> Vec<ChainRing> {
    vec![
        z(2, 2),
        z(2, 3),
        z(3, 2),
        ChainRing::truncated_poly(2, 2, 2).unwrap(),
        ChainRing::truncated_poly(2, 1, 3).unwrap(),
    ]
}

fn random_rings() -> Vec<ChainRing> {
    vec![
        z(2, 4),
        z(3, 3),
        z(5, 2),
        ChainRing::truncated_poly(3, 2, 2).unwrap(),
        ChainRing::truncated_poly(2, 2, 3).unwrap(),
    ]
}

fn digit_identities(ring: &ChainRing, x: RingElem, y: RingElem, z: RingElem) -> Result<(), String> {
    let s = ring.s();
    for i in 0..s {
        for j in 0..s - i {
            let lhs = ring.digit(ring.mul_pi_pow(x, i), i + j).map_err(err)?;
            ensure(lhs == ring.digit(x, j).map_err(err)?, || format!("(x pi^{i})^({}) for x = {x:?}", i + j))?;
        }
        let sum = ring.add(x, ring.add(ring.mul_pi_pow(y, i), ring.mul_pi_pow(z, i + 1)));
        let lhs = ring.residue(ring.digit(sum, i).map_err(err)?);
        let rhs = ring.residue(ring.add(ring.digit(x, i).map_err(err)?, ring.digit(y, 0).map_err(err)?));
        ensure(lhs == rhs, || format!("carry identity at i = {i} for {x:?}, {y:?}, {z:?}"))?;
    }
    Ok(())
}

fn pi_adic_round_trip(ring: &ChainRing, x: RingElem) -> Result<(), String> {
    ensure(ring.from_digits(&ring.digits(x)) == x, || format!("digits of {x:?}"))
}

fn truncation_congruence(ring: &ChainRing, x: RingElem) -> Result<(), String> {
    for i in 0..=ring.s() {
        let t = ring.truncate(x, i).map_err(err)?;
        ensure(ring.valuation(ring.sub(x, t)) >= i, || format!("x - trunc_{i}(x) for {x:?}"))?;
        for j in 0..ring.s() {
            let want = if j < i { ring.digit(x, j).map_err(err)? } else { ring.zero() };
            ensure(ring.digit(t, j).map_err(err)? == want, || format!("digit {j} of trunc_{i}({x:?})"))?;
        }
    }
    Ok(())
}

fn matrix_round_trip(a: &RingMatrix) -> Result<(), String> {
    let ring = a.ring();
    let mut sum = RingMatrix::zeros(ring, a.rows(), a.cols());
    for i in 0..ring.s() {
        sum = sum.add(&a.digit(i).map_err(err)?.mul_pi_pow(i)).map_err(err)?;
        let rest = a.sub(&a.truncate(i + 1).map_err(err)?).map_err(err)?;
        ensure(rest.data().iter().all(|&e| ring.valuation(e) > i), || "matrix truncation".into())?;
    }
    ensure(&sum == a, || "matrix pi-adic sum".into())
}

/// Shape of a module given by its elements: `mu_i = log_q|pi^{s-i-1} U| - log_q|pi^{s-i} U|`.
fn module_shape(ring: &ChainRing, module: &HashSet<Vec<RingElem>>) -> SShape {
    let s = ring.s();
    let q = ring.q() as usize;
    let log_size = |j: usize| -> usize {
        if j >= s {
            return 0;
        }
        let image: HashSet<Vec<RingElem>> =
            module.iter().map(|u| u.iter().map(|&x| ring.mul_pi_pow(x, j)).collect()).collect();
        let mut k = 0;
        let mut v = 1;
        while v < image.len() {
            v *= q;
            k += 1;
        }
        k
    };
    let sizes: Vec<usize> = (0..=s).map(log_size).collect();
    SShape::new((0..s).map(|i| sizes[s - i - 1] - sizes[s - i]).collect()).unwrap()
}

fn brute_kernel(a: &RingMatrix) -> HashSet<Vec<RingElem>> {
    let ring = a.ring();
    all_matrices(ring, a.cols(), 1)
        .filter(|x| a.mul(x).unwrap().is_zero())
        .map(|x| x.data().to_vec())
        .collect()
}

fn rank_nullity(a: &RingMatrix) -> Result<(), String> {
    let ker = module_shape(a.ring(), &brute_kernel(a));
    let rho = shape_of(a);
    ensure(ker == nullspace_shape(a), || format!("kernel of {a:?}: ({ker}) vs ({})", nullspace_shape(a)))?;
    ensure(rho == ker.complement(a.cols()).map_err(err)?, || format!("rank-nullity for {a:?}"))
}

fn pi_scaling_shape(a: &RingMatrix) -> Result<(), String> {
    let rho = shape_of(a);
    let s = a.ring().s();
    for i in 0..s {
        let predicted: Vec<usize> = (0..s).map(|j| if j < i { 0 } else { rho.entries()[j - i] }).collect();
        let direct = shape_of(&a.mul_pi_pow(i));
        ensure(direct.entries() == predicted, || format!("shape(pi^{i} A) for {a:?}: ({direct})"))?;
        ensure(pi_scaled_shape(a, i).map_err(err)? == direct, || format!("pi_scaled_shape({i}) for {a:?}"))?;
    }
    Ok(())
}

fn snf_invariance(a: &RingMatrix, p: &RingMatrix, q: &RingMatrix) -> Result<(), String> {
    let dec = smith_normal_form(a);
    ensure(&dec.product() == a, || format!("PDQ != A for {a:?}"))?;
    let b = p.mul(a).map_err(err)?.mul(q).map_err(err)?;
    ensure(shape_of(&b) == dec.shape, || format!("shape changed under GL for {a:?}"))
}

fn property_suites() -> Check {
    let mut random_cases = [0usize; 6];
    let mut sweep_cases = [0usize; 6];

    // exhaustive sweeps over small rings
    for ring in exhaustive_rings() {
        for x in ring.elements() {
            pi_adic_round_trip(&ring, x)?;
            truncation_congruence(&ring, x)?;
            sweep_cases[1] += 1;
            sweep_cases[2] += 1;
            for y in ring.elements() {
                for z in ring.elements() {
                    digit_identities(&ring, x, y, z)?;
                    sweep_cases[0] += 1;
                }
            }
        }
    }
    let z4 = z(2, 2);
    let gl2: Vec<RingMatrix> = all_matrices(&z4, 2, 2).filter(RingMatrix::is_invertible).collect();
    for a in all_matrices(&z4, 2, 2) {
        matrix_round_trip(&a)?;
        rank_nullity(&a)?;
        pi_scaling_shape(&a)?;
        for g in &gl2 {
            snf_invariance(&a, g, &RingMatrix::identity(&z4, 2))?;
            snf_invariance(&a, &RingMatrix::identity(&z4, 2), g)?;
            sweep_cases[5] += 2;
        }
        sweep_cases[3] += 1;
        sweep_cases[4] += 1;
    }
    let z8 = z(2, 3);
    for a in all_matrices(&z8, 1, 2).chain(all_matrices(&z8, 2, 1)) {
        rank_nullity(&a)?;
        pi_scaling_shape(&a)?;
        sweep_cases[3] += 1;
        sweep_cases[4] += 1;
    }

    // randomized cases
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rings: Vec<ChainRing> = random_rings().into_iter().chain(exhaustive_rings()).collect();
    for case in 0..2000 {
        let ring = &rings[case % rings.len()];
        let (x, y, zz) = (random_elem(ring, &mut rng), random_elem(ring, &mut rng), random_elem(ring, &mut rng));
        digit_identities(ring, x, y, zz)?;
        pi_adic_round_trip(ring, x)?;
        truncation_congruence(ring, x)?;
        let rows = rng.random_range(1..=4);
        let cols = rng.random_range(1..=4);
        let a = RingMatrix::random(ring, rows, cols, &mut rng);
        matrix_round_trip(&a)?;
        pi_scaling_shape(&a)?;
        let p = RingMatrix::random_invertible(ring, rows, &mut rng);
        let q = RingMatrix::random_invertible(ring, cols, &mut rng);
        snf_invariance(&a, &p, &q)?;
        for c in [0, 1, 2, 4, 5] {
            random_cases[c] += 1;
        }
    }
    // brute-force kernels need small modules
    for case in 0..1000 {
        let ring = &rings[5 + case % 5];
        let rows = rng.random_range(1..=2);
        let cols = rng.random_range(1..=if ring.order() <= 9 { 3 } else { 2 });
        rank_nullity(&RingMatrix::random(ring, rows, cols, &mut rng))?;
        random_cases[3] += 1;
    }

    let names = ["digit identities", "round trip", "truncation", "rank-nullity", "pi-scaling", "GL invariance"];
    ensure(random_cases.iter().all(|&c| c >= 1000), || format!("too few random cases: {random_cases:?}"))?;
    let parts: Vec<String> =
        names.iter().enumerate().map(|(i, n)| format!("{n} {}+{}", random_cases[i], sweep_cases[i])).collect();
    Ok(parts.join(", "))
}

fn simulate_determinism() -> Check {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_mmc"))
            .args(["simulate", "--ring", "z:2:3", "--n", "2", "--lambda", "2,2,2", "--model", "uniform"])
            .args(["--beta", "0,1,1", "--trials", "3000", "--seed", "11", "--threads", threads])
            .output()
            .map_err(err)?;
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        Ok(out.stdout)
    };
    let one = run("1")?;
    let four = run("4")?;
    ensure(one == four, || "CSV differs between 1 and 4 threads".into())?;
    ensure(one == run("4")?, || "CSV differs between runs".into())?;
    Ok(format!("{} identical bytes", one.len()))
}

// ---------------------------------------------------------------------------

type Criterion = (&'static str, Duration, fn() -> Check);

fn main() -> ExitCode {
    let ms = Duration::from_millis;
    let criteria: [Criterion; 10] = [
        ("Smith normal form worked example", ms(1), snf_worked_example),
        ("diagonal channel digit walkthrough", ms(1), demo_walkthrough),
        ("output entropy equals shape formula", ms(10_000), entropy_matches_shape),
        ("capacity exactness", ms(60_000), capacity_exactness),
        ("Gabidulin codes are MRD", ms(60_000), gabidulin_mrd),
        ("shape-deficiency criterion equals oracle", ms(120_000), shape_criterion_equivalence),
        ("MRD composite decodes with zero error", ms(120_000), zero_error_mrd),
        ("coherent round trip and sounding", ms(60_000), round_trip_and_sounding),
        ("property suites", ms(120_000), property_suites),
        ("simulate determinism across threads", ms(30_000), simulate_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(_) if elapsed > *budget => ("FAIL", format!("over budget {budget:?}")),
            Ok(detail) => ("PASS", detail),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {status} [{elapsed:.2?} / {budget:?}] {name}: {detail}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
