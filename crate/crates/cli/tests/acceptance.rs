//! Acceptance checks. Prints one `[PASS]`/`[FAIL]` line per criterion and exits non-zero
//! if any criterion fails or exceeds its time budget.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ubm_core::booster::boost_traced;
use ubm_core::bounds::{
    empirical_discrepancy, gap_bound, kl_gaussian_product, BoundInstance, GaussianPosterior,
    HypothesisFamily, KlMode, Matrix, PairLoss,
};
use ubm_core::confidence::negative_entropy;
use ubm_core::sim::{
    ablate, mean_by_arm, rows_to_csv, train_cps, train_supervised, DatasetParams, SimConfig,
    SynthDataset,
};
use ubm_core::{
    argmax_labels, boost, confidence, one_hot, read_tensor, vote_integral, vote_naive,
    write_tensor, BoostPolicy, Border, LabelMap, OneHotMap, ProbMap, Tensor, TensorData,
    VicinitySpec, IGNORE,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const SIDES: [usize; 4] = [3, 5, 9, 15];

fn random_labels(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> LabelMap {
    let data = (0..h * w)
        .map(|_| {
            if rng.random_bool(0.05) {
                IGNORE
            } else {
                rng.random_range(0..k as u16)
            }
        })
        .collect();
    LabelMap::new(h, w, data).unwrap()
}

fn random_prob(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> ProbMap {
    let temperature = rng.random_range(0.2..4.0);
    let mut data = Vec::with_capacity(h * w * k);
    for _ in 0..h * w {
        let scores: Vec<f64> = (0..k)
            .map(|_| temperature * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        data.extend(scores.iter().map(|s| ((s - max).exp() / z) as f32));
    }
    ProbMap::new(h, w, k, data).unwrap()
}

/// Direct per-pixel window count, written independently of the library voter.
fn oracle_votes(p_oh: &OneHotMap, vh: usize, vw: usize, border: Border) -> Vec<f32> {
    let (h, w, k) = (p_oh.height(), p_oh.width(), p_oh.classes());
    let (rh, rw) = ((vh / 2) as isize, (vw / 2) as isize);
    let mut out = Vec::with_capacity(h * w * k);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut counts = vec![0u64; k];
            let mut inside = 0u64;
            for rr in r - rh..=r + rh {
                for cc in c - rw..=c + rw {
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    inside += 1;
                    let px = rr as usize * w + cc as usize;
                    for (class, &hot) in p_oh.pixel(px).iter().enumerate() {
                        counts[class] += u64::from(hot);
                    }
                }
            }
            let denom = match border {
                Border::Clip => inside,
                Border::Zero => (vh * vw) as u64,
            };
            out.extend(counts.iter().map(|&n| (n as f64 / denom as f64) as f32));
        }
    }
    out
}

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut pixels = 0usize;
    for case in 0..200 {
        let (h, w, k) = (
            rng.random_range(1..=64),
            rng.random_range(1..=64),
            rng.random_range(1..=8),
        );
        let (vh, vw) = (SIDES[rng.random_range(0..4)], SIDES[rng.random_range(0..4)]);
        let p_oh = one_hot(&random_labels(&mut rng, h, w, k), k).unwrap();
        for border in [Border::Clip, Border::Zero] {
            let v = VicinitySpec::new(vh, vw, border).unwrap();
            let fast = vote_integral(&p_oh, &v).unwrap().to_bits();
            let naive = vote_naive(&p_oh, &v).unwrap().to_bits();
            let oracle: Vec<u32> = oracle_votes(&p_oh, vh, vw, border)
                .iter()
                .map(|x| x.to_bits())
                .collect();
            ensure(fast == naive, || {
                format!("case {case}: {h}x{w}x{k}, {v} {border}: integral differs from naive")
            })?;
            ensure(naive == oracle, || {
                format!("case {case}: {h}x{w}x{k}, {v} {border}: naive differs from direct count")
            })?;
        }
        pixels += h * w;
    }
    Ok(format!(
        "200 instances x 2 border modes, {pixels} pixels, bit-identical"
    ))
}

fn c2_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0f64;
    for case in 0..100 {
        let (h, w, k) = (
            rng.random_range(1..=48),
            rng.random_range(1..=48),
            rng.random_range(2..=8),
        );
        let pred = random_prob(&mut rng, h, w, k);
        let side = SIDES[rng.random_range(0..4)];
        let p_oh = one_hot(&argmax_labels(&pred).unwrap(), k).unwrap();
        let oracle_c = oracle_votes(&p_oh, side, side, Border::Clip);
        let uniform_c = vec![1.0 / k as f32; h * w * k];
        for (policy, c) in [
            (BoostPolicy::Ruv, &oracle_c),
            (BoostPolicy::Uniform, &uniform_c),
        ] {
            let v = VicinitySpec::square(side, Border::Clip).unwrap();
            let boosted = boost(&pred, &v, policy).unwrap();
            for px in 0..h * w {
                let row = boosted.pixel(px);
                let sum: f64 = row.iter().map(|&x| f64::from(x)).sum();
                worst = worst.max((sum - 1.0).abs());
                ensure((sum - 1.0).abs() <= 1e-6, || {
                    format!("case {case} {policy}: pixel {px} sums to {sum}")
                })?;
                for class in 0..k {
                    let hot = f32::from(p_oh.pixel(px)[class]);
                    let cv = c[px * k + class];
                    let b = row[class];
                    ensure(b >= hot.min(cv) && b <= hot.max(cv), || {
                        format!("case {case} {policy}: pixel {px} class {class}: {b} outside [{hot}, {cv}]")
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "100 instances, ruv and uniform; worst row-sum error {worst:.2e}"
    ))
}

fn c3_confidence_extremes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for k in 1..=16 {
        let labels = random_labels(&mut rng, 7, 9, k);
        let labels = LabelMap::new(
            7,
            9,
            labels
                .data()
                .iter()
                .map(|&l| if l == IGNORE { 0 } else { l })
                .collect(),
        )
        .unwrap();
        let p = ProbMap::new(7, 9, k, one_hot(&labels, k).unwrap().to_f32()).unwrap();
        let conf = confidence(&p).unwrap();
        ensure(conf.iter().all(|&c| c == 0.0), || {
            format!("one-hot confidence not exactly 0 for K = {k}")
        })?;
    }
    // 1/K is exact in f32 for powers of two; other K use exact f64 rows.
    let mut worst = 0f64;
    for k in [1usize, 2, 4, 8, 16, 32, 64, 128, 256] {
        let conf = confidence(&ProbMap::uniform(3, 3, k).unwrap()).unwrap();
        for c in conf {
            worst = worst.max((c + (k as f64).ln()).abs());
        }
    }
    for k in 1..=64usize {
        let c = negative_entropy(std::iter::repeat_n(1.0 / k as f64, k));
        worst = worst.max((c + (k as f64).ln()).abs());
    }
    ensure(worst <= 1e-12, || {
        format!("uniform confidence off by {worst:e}")
    })?;
    for case in 0..50 {
        let (h, w, k) = (
            rng.random_range(1..=32),
            rng.random_range(1..=32),
            rng.random_range(2..=8),
        );
        let pred = random_prob(&mut rng, h, w, k);
        let v = VicinitySpec::square(SIDES[case % 4], Border::Clip).unwrap();
        let trace = boost_traced(&pred, &v, BoostPolicy::Ruv).unwrap();
        let conf = confidence(&pred).unwrap();
        let max = conf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (px, &c) in conf.iter().enumerate() {
            if c == max {
                ensure(trace.weights.weight[px] == 1.0, || {
                    format!("case {case}: max-confidence pixel {px} has W != 1")
                })?;
                let hot: Vec<f32> = trace
                    .one_hot
                    .pixel(px)
                    .iter()
                    .map(|&x| f32::from(x))
                    .collect();
                ensure(trace.boosted.pixel(px) == hot.as_slice(), || {
                    format!("case {case}: max-confidence pixel {px} is not its one-hot label")
                })?;
            }
        }
    }
    Ok(format!(
        "one-hot conf exactly 0 (K 1..16); uniform |conf + ln K| <= {worst:.1e}; 50 max-conf checks"
    ))
}

fn c4_constant_field() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..60 {
        let (h, w, k) = (
            rng.random_range(1..=40),
            rng.random_range(1..=40),
            rng.random_range(1..=8),
        );
        let label = rng.random_range(0..k);
        // Varying confidence, constant argmax.
        let pred =
            ProbMap::from_fn(h, w, k, |_, class| if class == label { 1.0 } else { 0.0 }).unwrap();
        let soft: Vec<f32> = (0..h * w)
            .flat_map(|_| {
                let top: f32 = rng.random_range(0.5..1.0);
                let rest = if k > 1 {
                    (1.0 - top) / (k - 1) as f32
                } else {
                    0.0
                };
                (0..k).map(move |c| if c == label { top } else { rest })
            })
            .collect();
        for input in [pred, ProbMap::new(h, w, k, soft).unwrap()] {
            let v = VicinitySpec::new(
                SIDES[rng.random_range(0..4)],
                SIDES[rng.random_range(0..4)],
                Border::Clip,
            )
            .unwrap();
            let expected = one_hot(&argmax_labels(&input).unwrap(), k)
                .unwrap()
                .to_f32();
            let boosted = boost(&input, &v, BoostPolicy::Ruv).unwrap();
            ensure(boosted.data() == expected.as_slice(), || {
                format!("case {case}: {h}x{w}x{k} with {v} is not the identity")
            })?;
        }
    }
    Ok("60 constant-label fields x 2 confidence profiles, identity exact".into())
}

fn log_density(x: &[f64], mu: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * sq - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
}

/// `∫ q ln(q/p)` by midpoint quadrature over a ±10 box around the posterior mean.
fn kl_quadrature_2d(mu_q: &[f64], mu_p: &[f64]) -> f64 {
    let (half, n) = (10.0, 2000usize);
    let step = 2.0 * half / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x0 = mu_q[0] - half + (i as f64 + 0.5) * step;
        for j in 0..n {
            let x1 = mu_q[1] - half + (j as f64 + 0.5) * step;
            let x = [x0, x1];
            let lq = log_density(&x, mu_q);
            total += lq.exp() * (lq - log_density(&x, mu_p));
        }
    }
    total * step * step
}

/// Monte Carlo estimate of `E_q[ln q − ln p]`.
fn kl_monte_carlo(mu_q: &[f64], mu_p: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut x = vec![0.0; mu_q.len()];
    let mut total = 0.0;
    for _ in 0..samples {
        for (xi, m) in x.iter_mut().zip(mu_q) {
            *xi = m + rng.sample::<f64, _>(StandardNormal);
        }
        total += log_density(&x, mu_q) - log_density(&x, mu_p);
    }
    total / samples as f64
}

fn c5_kl_modes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0f64;
    for case in 0..20 {
        let d = if case % 2 == 0 { 2 } else { 4 };
        let (mu_p, mu_q) = loop {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dist: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            // Keeps the Monte Carlo relative error well under the tolerance.
            if dist >= 1.0 {
                break (p, q);
            }
        };
        let p = GaussianPosterior::new(mu_p.clone()).unwrap();
        let q = GaussianPosterior::new(mu_q.clone()).unwrap();
        let standard = kl_gaussian_product(&q, &p, KlMode::Standard).unwrap();
        let paper = kl_gaussian_product(&q, &p, KlMode::Paper).unwrap();
        ensure(paper == 2.0 * d as f64 * standard, || {
            format!("case {case}: paper {paper} != 2d x standard {standard}")
        })?;
        let oracle = if d == 2 {
            kl_quadrature_2d(&mu_q, &mu_p)
        } else {
            kl_monte_carlo(&mu_q, &mu_p, 1_000_000, &mut rng)
        };
        let rel = (standard - oracle).abs() / oracle.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-2, || {
            format!("case {case} (d = {d}): standard {standard} vs oracle {oracle}, rel {rel:.3e}")
        })?;
    }
    Ok(format!(
        "10 quadrature (2-D) + 10 Monte Carlo (4-D) instances, worst rel error {worst:.2e}"
    ))
}

fn c6_bound_monotonicity() -> Outcome {
    let kls: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
    let ns: Vec<u64> = (0..10).map(|i| 10 * (1u64 << i)).collect();
    for &delta in &[0.01, 0.05, 0.1] {
        for (i, &n) in ns.iter().enumerate() {
            for (j, &kl) in kls.iter().enumerate() {
                let g = gap_bound(kl, n, delta).unwrap();
                if j > 0 {
                    let prev = gap_bound(kls[j - 1], n, delta).unwrap();
                    ensure(g > prev, || {
                        format!("not increasing in kl at kl={kl}, N={n}")
                    })?;
                }
                if i > 0 {
                    let prev = gap_bound(kl, ns[i - 1], delta).unwrap();
                    ensure(g < prev, || {
                        format!("not decreasing in N at kl={kl}, N={n}")
                    })?;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut comparisons = 0;
    for case in 0..200 {
        let (rows, cols) = (rng.random_range(1..=4), rng.random_range(1..=5));
        let mut m = |r: usize, c: usize, s: f64| {
            Matrix::new(r, c, (0..r * c).map(|_| rng.random_range(-s..s)).collect()).unwrap()
        };
        let (wl, wu, b1, b2) = (
            m(rows, cols, 1.0),
            m(rows, cols, 1.0),
            m(rows, cols, 0.5),
            m(rows, cols, 0.5),
        );
        let xl: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xu: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let instance = |offset: Matrix| BoundInstance {
            labeled_weights: wl.clone(),
            labeled_input: xl.clone(),
            unlabeled_weights: wu.clone(),
            unlabeled_input: xu.clone(),
            offset,
        };
        let (i1, i2) = (instance(b1), instance(b2));
        let target = wl.mul_vec(&xl).unwrap();
        let dist = |i: &BoundInstance| {
            let mean = i.boosted_posterior().unwrap();
            mean.mean()
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let (d1, d2) = (dist(&i1), dist(&i2));
        for mode in [KlMode::Paper, KlMode::Standard] {
            let r1 = i1.compare(0.1, 500, 0.05, mode).unwrap().boosted.total;
            let r2 = i2.compare(0.1, 500, 0.05, mode).unwrap().boosted.total;
            let (near, far) = if d1 <= d2 { (r1, r2) } else { (r2, r1) };
            ensure(near <= far, || {
                format!(
                    "case {case} {mode}: nearer posterior has the larger bound ({near} > {far})"
                )
            })?;
            let vanilla = i1.compare(0.1, 500, 0.05, mode).unwrap();
            let dv = squared(&vanilla_mean(&i1), &target);
            if d1 <= dv {
                ensure(vanilla.boosted.total <= vanilla.vanilla.total, || {
                    format!("case {case} {mode}: boosted closer but bound larger")
                })?;
            }
            comparisons += 1;
        }
    }
    Ok(format!(
        "10x10 grid x 3 deltas strictly monotone; {comparisons} posterior comparisons consistent"
    ))
}

fn vanilla_mean(i: &BoundInstance) -> Vec<f64> {
    i.vanilla_posterior().unwrap().mean().to_vec()
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn c7_discrepancy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..100 {
        let thresholds: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let (below, above) = (rng.random_range(0..3), rng.random_range(0..3));
        let family = HypothesisFamily::thresholds(0, &thresholds, below, above).unwrap();
        let sample = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| vec![rng.random_range(0.0..1.0)]).collect()
        };
        let nl = rng.random_range(1..30);
        let l = sample(&mut rng, nl);
        let ni = rng.random_range(1..30);
        let i = sample(&mut rng, ni);
        for loss in [PairLoss::ZeroOne, PairLoss::L2] {
            let same = empirical_discrepancy(&family, &l, &l, loss).unwrap();
            ensure(same.value == 0.0, || {
                format!("case {case}: identical samples give {}", same.value)
            })?;
            let li = empirical_discrepancy(&family, &l, &i, loss).unwrap();
            let il = empirical_discrepancy(&family, &i, &l, loss).unwrap();
            ensure(li.value == il.value, || {
                format!("case {case}: asymmetric {} vs {}", li.value, il.value)
            })?;
            // Exhaustive enumeration of ordered pairs, computed here.
            let predict = |t: f64, x: &[f64]| if x[0] < t { below } else { above };
            let pair_loss = |a: usize, b: usize| match loss {
                PairLoss::ZeroOne => f64::from(u8::from(a != b)),
                PairLoss::L2 => (a as f64 - b as f64).powi(2),
            };
            let mut expected = 0f64;
            for &t1 in &thresholds {
                for &t2 in &thresholds {
                    let mean = |s: &[Vec<f64>]| {
                        s.iter()
                            .map(|x| pair_loss(predict(t1, x), predict(t2, x)))
                            .sum::<f64>()
                            / s.len() as f64
                    };
                    expected = expected.max(2.0 * (mean(&l) - mean(&i)).abs());
                }
            }
            ensure(li.value == expected, || {
                format!("case {case}: {} vs enumeration {expected}", li.value)
            })?;
        }
    }
    Ok("100 random 3-threshold families x 2 losses".into())
}

fn c8_cps_determinism() -> Outcome {
    let params = DatasetParams::default();
    let config = SimConfig {
        seeds: vec![11, 12],
        ..SimConfig::default()
    };
    let policies = BoostPolicy::ALL;
    let vicinities = [VicinitySpec::default()];
    let first = rows_to_csv(&ablate(&params, &config, &policies, &vicinities, true).unwrap());
    let second = rows_to_csv(&ablate(&params, &config, &policies, &vicinities, true).unwrap());
    ensure(first == second, || "repeated ablation CSV differs".into())?;

    let data = SynthDataset::generate_with(11, &params).unwrap();
    let zero = SimConfig {
        lambda: 0.0,
        warmup: 0,
        ..SimConfig::default()
    };
    let cps = train_cps(&data, &zero).unwrap();
    let sup = train_supervised(&data, &zero).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    ensure(
        bits(&cps.model_a.weights) == bits(&sup.model_a.weights)
            && bits(&cps.model_b.weights) == bits(&sup.model_b.weights)
            && bits(&cps.model_a.bias) == bits(&sup.model_a.bias),
        || "lambda = 0 weights differ from labeled-only training".into(),
    )?;
    ensure(
        cps.history == sup.history && cps.losses == sup.losses,
        || "lambda = 0 trajectory differs from labeled-only training".into(),
    )?;
    Ok(format!(
        "{} CSV lines identical across runs; lambda = 0 matches labeled-only over {} iterations",
        first.lines().count(),
        cps.losses.len()
    ))
}

fn trend_config() -> (DatasetParams, SimConfig) {
    let params = DatasetParams::default();
    let config = SimConfig::default();
    debug_assert_eq!((params.height, params.width, params.classes), (32, 32, 3));
    (params, config)
}

fn c9_trend() -> Outcome {
    let (params, config) = trend_config();
    let rows = ablate(
        &params,
        &config,
        &BoostPolicy::ALL,
        &[VicinitySpec::default()],
        false,
    )
    .map_err(|e| e.to_string())?;
    let mean = |p: BoostPolicy| {
        mean_by_arm(&rows)
            .into_iter()
            .find(|a| a.0 == p)
            .map(|a| a.2)
            .unwrap()
    };
    let (none, uniform, ruv) = (
        mean(BoostPolicy::None),
        mean(BoostPolicy::Uniform),
        mean(BoostPolicy::Ruv),
    );
    let detail = format!(
        "{} seeds: none {none:.4}, uniform {uniform:.4}, ruv {ruv:.4}",
        config.seeds.len()
    );
    ensure(config.seeds.len() >= 5, || "fewer than 5 seeds".into())?;
    ensure(ruv >= none - 0.005, || {
        format!("ruv below none - 0.005; {detail}")
    })?;
    ensure(ruv >= uniform, || format!("ruv below uniform; {detail}"))?;
    Ok(detail)
}

fn c10_vicinity_robustness() -> Outcome {
    let (params, config) = trend_config();
    let vicinities: Vec<VicinitySpec> = SIDES
        .iter()
        .map(|&s| VicinitySpec::square(s, Border::Clip).unwrap())
        .collect();
    let rows = ablate(&params, &config, &[BoostPolicy::Ruv], &vicinities, false)
        .map_err(|e| e.to_string())?;
    let means: Vec<f64> = mean_by_arm(&rows).into_iter().map(|a| a.2).collect();
    let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - means.iter().cloned().fold(f64::INFINITY, f64::min);
    let detail = format!(
        "ruv means {}: spread {spread:.4}",
        SIDES
            .iter()
            .zip(&means)
            .map(|(s, m)| format!("{s}:{m:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    ensure(spread <= 0.02, || format!("spread above 0.02; {detail}"))?;
    Ok(detail)
}

fn c11_cli_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for case in 0..50 {
        let dims: Vec<u64> = (0..rng.random_range(0..=4))
            .map(|_| rng.random_range(0..6))
            .collect();
        let n: usize = dims.iter().product::<u64>() as usize;
        let data = match case % 3 {
            0 => TensorData::F32((0..n).map(|_| f32::from_bits(rng.random())).collect()),
            1 => TensorData::U16((0..n).map(|_| rng.random()).collect()),
            _ => TensorData::U8((0..n).map(|_| rng.random()).collect()),
        };
        let t = Tensor::new(dims, data).unwrap();
        let bytes = write_tensor(&t);
        let back = read_tensor(&bytes).map_err(|e| e.to_string())?;
        ensure(
            write_tensor(&back) == bytes && back.dims() == t.dims(),
            || format!("case {case}: round trip changed the file"),
        )?;
    }

    let dir = tempfile::tempdir().unwrap();
    let pred = common::smooth_prob(8, 8, 3, 9);
    let input = common::save_prob(dir.path(), "p.ten", &pred);
    let out = dir.path().join("o.ten");
    let run = common::ubm([
        "boost".as_ref(),
        "--policy".as_ref(),
        "none".as_ref(),
        "-i".as_ref(),
        input.as_os_str(),
        "-o".as_ref(),
        out.as_os_str(),
    ]);
    ensure(common::code(&run) == 0, || common::stderr(&run))?;
    let written = common::load(&out);
    ensure(
        written.data()
            == &TensorData::F32(one_hot(&argmax_labels(&pred).unwrap(), 3).unwrap().to_f32()),
        || "boost output differs from the library result".into(),
    )?;

    let bad = dir.path().join("bad.ten");
    std::fs::write(&bad, b"TEN1\x07\x00").unwrap();
    let cases: [(Vec<&std::ffi::OsStr>, i32); 4] = [
        (vec!["--help".as_ref()], 0),
        (
            vec![
                "boost".as_ref(),
                "--vicinity".as_ref(),
                "4".as_ref(),
                "-i".as_ref(),
                input.as_os_str(),
                "-o".as_ref(),
                out.as_os_str(),
            ],
            1,
        ),
        (vec!["simulate".as_ref(), "--no-such-flag".as_ref()], 1),
        (
            vec![
                "conf".as_ref(),
                "-i".as_ref(),
                bad.as_os_str(),
                "-o".as_ref(),
                out.as_os_str(),
            ],
            2,
        ),
    ];
    for (args, expected) in cases {
        let run = common::ubm(&args);
        ensure(common::code(&run) == expected, || {
            format!(
                "{args:?} exited {}, expected {expected}",
                common::code(&run)
            )
        })?;
    }

    let run = common::ubm(["bounds", "--kl", "0", "--n", "100", "--delta", "0.05"]);
    ensure(common::code(&run) == 0, || common::stderr(&run))?;
    let closed_form = (400f64.ln() / 200.0).sqrt();
    let expected = format!("gap_bound,given,{closed_form:.6}");
    ensure(expected == "gap_bound,given,0.173082", || expected.clone())?;
    ensure(common::stdout(&run).lines().any(|l| l == expected), || {
        format!("bounds printed {:?}", common::stdout(&run))
    })?;
    Ok(format!("50 TEN1 round trips; exit codes 0/1/2; {expected}"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "oracle equivalence",
            budget: Duration::from_secs(10),
            run: c1_oracle_equivalence,
        },
        Criterion {
            id: 2,
            name: "convexity suite",
            budget: Duration::from_secs(5),
            run: c2_convexity,
        },
        Criterion {
            id: 3,
            name: "confidence extremes",
            budget: Duration::from_secs(1),
            run: c3_confidence_extremes,
        },
        Criterion {
            id: 4,
            name: "constant-field identity",
            budget: Duration::from_secs(1),
            run: c4_constant_field,
        },
        Criterion {
            id: 5,
            name: "KL modes",
            budget: Duration::from_secs(30),
            run: c5_kl_modes,
        },
        Criterion {
            id: 6,
            name: "bound monotonicity",
            budget: Duration::from_secs(1),
            run: c6_bound_monotonicity,
        },
        Criterion {
            id: 7,
            name: "empirical discrepancy",
            budget: Duration::from_secs(1),
            run: c7_discrepancy,
        },
        Criterion {
            id: 8,
            name: "CPS determinism and lambda=0",
            budget: Duration::from_secs(30),
            run: c8_cps_determinism,
        },
        Criterion {
            id: 9,
            name: "trend check",
            budget: Duration::from_secs(120),
            run: c9_trend,
        },
        Criterion {
            id: 10,
            name: "vicinity robustness",
            budget: Duration::from_secs(180),
            run: c10_vicinity_robustness,
        },
        Criterion {
            id: 11,
            name: "CLI contract",
            budget: Duration::from_secs(5),
            run: c11_cli_contract,
        },
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| filter.is_empty() || filter.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(e) => (false, e),
        };
        failed += usize::from(!pass);
        println!(
            "[{}] {:>2} {} ({:.2} s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
