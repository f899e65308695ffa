//! Acceptance run: one PASS/FAIL line per criterion. Sizes, seeds and
//! tolerances are fixed here; the process exits non-zero on any FAIL.

mod common;

use std::time::{Duration, Instant};

use chameleon_core::experiments::{
    entropy_sweep, eviction_study, profile_study, vc_noise_study, EvictionParams, ProfileParams,
};
use chameleon_core::metrics::oracle;
use chameleon_core::metrics::EntropyParams;
use chameleon_core::seed::derive_seed;
use chameleon_core::trace::{run_trace_warm, synth_trace, SynthKind};
use chameleon_core::{CacheConfig, Exact, ProbabilityModel};
use num_traits::One;

const MASTER: u64 = 0x5eed;

// Fidelity.
const FIDELITY_SEQUENCES: usize = 100_000;
const FIDELITY_LEN: usize = 32;
const FIDELITY_BUDGET: Duration = Duration::from_secs(5 * 60);

// Oracles.
const ORACLE_SIGMAS: f64 = 3.0;
const ORACLE_PAIRS: u64 = 2_000_000;
const ORACLE_GEOMETRIES: [(u64, u64, u64, u64); 2] = [
    // (s, w, d, second-order trials)
    (64, 8, 8, 2_000_000),
    (2048, 16, 16, 20_000_000),
];

// PPP true-positive rate and cost; w = d = 16, s = lines / 16.
const PPP_LINES: [usize; 3] = [1 << 10, 1 << 11, 1 << 12];
const PPP_WAYS: usize = 16;
const CEASER_S_VICTIMS: usize = 50;
const CEASER_S_SET: usize = 64;
const CHAMELEON_VICTIMS: usize = 20;
const CHAMELEON_ROUNDS: usize = 2000;
const TPR_CEILING: f64 = 0.9;
const COST_FACTOR: f64 = 5.0;

// t-test; w = d = 8, s = lines / 8.
const TTEST_LINES: [usize; 2] = [512, 1024];
const TTEST_WAYS: usize = 8;
const TTEST_M: usize = 200;
const TTEST_TRIALS: usize = 1000;
const T_THRESHOLD: f64 = 4.5;
const TTEST_QUORUM: f64 = 0.9;
const TTEST_BUDGET: Duration = Duration::from_secs(30 * 60);

// Entropy at 16 ways, 8192 lines, 16 divisions.
const FA_SIMILAR_BITS: f64 = 0.5;
const CHAMELEON_MAX_BITS: f64 = 1.0;
const CEASER_S_MIN_BITS: f64 = 3.0;

// Victim-cache noise.
const NOISE_VC: [usize; 4] = [2, 4, 8, 16];

// Trace band at 8192 lines.
const BAND_PER_TRACE: (f64, f64) = (0.90, 1.05);
const BAND_AVERAGE: (f64, f64) = (0.99, 1.01);
const ZIPF_LEN: usize = 2_000_000;
const ZIPF_WARMUP: usize = 200_000;
const LOOP_LEN: usize = 600_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn fidelity() -> Outcome {
    let start = Instant::now();
    let configs = common::fidelity_configs();
    let mut failures = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        let base = derive_seed(MASTER, ci as u64);
        for i in 0..FIDELITY_SEQUENCES {
            if let Err(e) = common::check_sequence(cfg, derive_seed(base, i as u64), FIDELITY_LEN) {
                failures.push(e);
                break;
            }
        }
    }
    let took = start.elapsed();
    Outcome {
        pass: failures.is_empty() && took <= FIDELITY_BUDGET,
        detail: format!(
            "{} configs x {FIDELITY_SEQUENCES} sequences of {FIDELITY_LEN} ops in {:.1}s (budget {}s){}",
            configs.len(),
            took.as_secs_f64(),
            FIDELITY_BUDGET.as_secs(),
            failures
                .first()
                .map(|f| format!("; first failure: {f}"))
                .unwrap_or_default()
        ),
    }
}

fn oracles() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &(s, w, d, so_trials)) in ORACLE_GEOMETRIES.iter().enumerate() {
        let m = ProbabilityModel::new(s, w, d).unwrap();
        let seed = derive_seed(MASTER, 100 + i as u64);
        let full = oracle::full_collision(&m, ORACLE_PAIRS, derive_seed(seed, 0)).unwrap();
        let partial = oracle::partial_collision(&m, ORACLE_PAIRS, derive_seed(seed, 1)).unwrap();
        let proxy = oracle::proxy_pairs(&m, ORACLE_PAIRS, derive_seed(seed, 2)).unwrap();
        let second =
            oracle::second_order_eviction(s as usize, w as usize, so_trials, derive_seed(seed, 3))
                .unwrap();
        let p_full = m.full_collision::<f64>();
        let p_partial = m.partial_collision::<f64>().value;
        let p_proxy = m.proxy::<f64>().value;
        let p_second = m.second_order_eviction::<f64>();
        let ok = [
            full.agrees_with(p_full, ORACLE_SIGMAS),
            partial.agrees_with(p_partial, ORACLE_SIGMAS),
            proxy.agrees_with(p_proxy, ORACLE_SIGMAS),
            second.agrees_with(p_second, ORACLE_SIGMAS),
        ];
        pass &= ok.iter().all(|&b| b);
        parts.push(format!(
            "s={s},w={w},d={d}: full {}/{} vs {p_full:.3e}, partial {:.5} vs {p_partial:.5}, \
             proxy {:.3e}±{:.1e} vs {p_proxy:.3e}, second-order {}/{} vs {p_second:.3e} {ok:?}",
            full.successes,
            full.trials,
            partial.rate(),
            proxy.mean,
            proxy.std_err,
            second.successes,
            second.trials,
        ));
    }
    let exact = ProbabilityModel::new(2048, 16, 16)
        .unwrap()
        .proxy::<Exact>()
        .value;
    let expected = Exact::one() / Exact::from_integer(16384.into());
    let exact_ok = exact == expected;
    pass &= exact_ok;
    parts.push(format!(
        "exact proxy at s=2048,w=16: {exact} (== 1/16384: {exact_ok})"
    ));
    Outcome {
        pass,
        detail: format!("within {ORACLE_SIGMAS} sigma; {}", parts.join("; ")),
    }
}

// (lines, tpr, cost, collected); chameleon rows also carry w_vc after lines.
type PppRow = (usize, Option<f64>, Option<f64>, usize);
type VcPppRow = (usize, usize, Option<f64>, Option<f64>, usize);

struct PppSizes {
    ceaser_s: Vec<PppRow>,
    chameleon: Vec<VcPppRow>,
}

fn ppp_runs() -> PppSizes {
    let mut ceaser_s = Vec::new();
    let mut chameleon = Vec::new();
    for (i, &lines) in PPP_LINES.iter().enumerate() {
        let s = lines / PPP_WAYS;
        let cfg = CacheConfig::ceaser_s(s, PPP_WAYS, PPP_WAYS);
        let p = ProfileParams {
            victims: CEASER_S_VICTIMS,
            target_size: CEASER_S_SET,
            max_rounds: 100_000,
            seed: derive_seed(MASTER, 200 + i as u64),
            ..ProfileParams::default()
        };
        let st = profile_study(&cfg, &p).unwrap();
        ceaser_s.push((lines, st.tpr(), st.cost_per_conflict(), st.collected()));
        for w_vc in [2, 8] {
            let cfg = CacheConfig::chameleon(s, PPP_WAYS, PPP_WAYS, w_vc);
            let p = ProfileParams {
                victims: CHAMELEON_VICTIMS,
                target_size: usize::MAX,
                max_rounds: CHAMELEON_ROUNDS,
                seed: derive_seed(MASTER, 300 + (i * 10 + w_vc) as u64),
                ..ProfileParams::default()
            };
            let st = profile_study(&cfg, &p).unwrap();
            chameleon.push((
                lines,
                w_vc,
                st.tpr(),
                st.cost_per_conflict(),
                st.collected(),
            ));
        }
    }
    PppSizes {
        ceaser_s,
        chameleon,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn ppp_tpr(r: &PppSizes) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(lines, tpr, _, n) in &r.ceaser_s {
        let ok = tpr == Some(1.0) && n == CEASER_S_VICTIMS * CEASER_S_SET;
        pass &= ok;
        parts.push(format!("CEASER_S {lines}: {} over {n}", fmt_opt(tpr)));
    }
    for w_vc in [2, 8] {
        let series: Vec<_> = r.chameleon.iter().filter(|c| c.1 == w_vc).collect();
        let rates: Vec<f64> = series.iter().map(|c| c.2.unwrap_or(f64::NAN)).collect();
        let below = rates.iter().all(|&t| t < TPR_CEILING);
        let monotone = rates.windows(2).all(|p| p[1] <= p[0]);
        pass &= below && monotone;
        parts.push(format!(
            "CHAMELEON vc={w_vc}: {} (collected {:?})",
            rates
                .iter()
                .map(|t| format!("{t:.4}"))
                .collect::<Vec<_>>()
                .join(" >= "),
            series.iter().map(|c| c.4).collect::<Vec<_>>()
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "CEASER_S == 1 over {CEASER_S_VICTIMS} victims; CHAMELEON < {TPR_CEILING} and non-increasing over {PPP_LINES:?} lines; {}",
            parts.join("; ")
        ),
    }
}

fn ppp_cost(r: &PppSizes) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(lines, w_vc, _, cost, _) in &r.chameleon {
        let base = r
            .ceaser_s
            .iter()
            .find(|c| c.0 == lines)
            .and_then(|c| c.2)
            .unwrap_or(f64::NAN);
        let ratio = cost.unwrap_or(f64::INFINITY) / base;
        pass &= ratio >= COST_FACTOR;
        parts.push(format!(
            "{lines} lines vc={w_vc}: {} vs {base:.0} reads/conflict (x{ratio:.1})",
            fmt_opt(cost)
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "CHAMELEON >= {COST_FACTOR}x CEASER_S over >= {CHAMELEON_VICTIMS} victims; {}",
            parts.join("; ")
        ),
    }
}

fn ttest() -> Outcome {
    let start = Instant::now();
    let params = |i: u64| EvictionParams {
        m: TTEST_M,
        trials: TTEST_TRIALS,
        set_factor: 4,
        seed: derive_seed(MASTER, 400 + i),
        ..EvictionParams::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    let mut below = 0;
    let mut tested = 0;
    for (i, &lines) in TTEST_LINES.iter().enumerate() {
        let s = lines / TTEST_WAYS;
        let cfg = CacheConfig::ceaser_s(s, TTEST_WAYS, TTEST_WAYS);
        let t = eviction_study(&cfg, &params(i as u64))
            .unwrap()
            .t_value()
            .unwrap();
        pass &= t.abs() > T_THRESHOLD;
        parts.push(format!("{} |t|={:.2}", cfg.label(), t.abs()));
        for w_vc in [2, 8] {
            let cfg = CacheConfig::chameleon(s, TTEST_WAYS, TTEST_WAYS, w_vc);
            let st = eviction_study(&cfg, &params((10 * i + w_vc) as u64 + 1)).unwrap();
            let t = st.t_value().unwrap();
            tested += 1;
            below += (t.abs() < T_THRESHOLD) as usize;
            let short = st
                .rows
                .iter()
                .filter(|r| r.set_size < 4 * TTEST_WAYS)
                .count();
            parts.push(format!(
                "{} |t|={:.2} (short sets {short})",
                cfg.label(),
                t.abs()
            ));
        }
    }
    let quorum = below as f64 / tested as f64;
    let took = start.elapsed();
    pass &= quorum >= TTEST_QUORUM && took <= TTEST_BUDGET;
    Outcome {
        pass,
        detail: format!(
            "M={TTEST_M}, trials={TTEST_TRIALS}, sets of 4w; CEASER_S |t| > {T_THRESHOLD}; CHAMELEON below in {below}/{tested} (need {:.0}%); {:.0}s of {}s; {}",
            TTEST_QUORUM * 100.0,
            took.as_secs_f64(),
            TTEST_BUDGET.as_secs(),
            parts.join("; ")
        ),
    }
}

fn entropy() -> Outcome {
    let configs = [
        CacheConfig::fully_associative(8192),
        CacheConfig::chameleon(512, 16, 16, 2),
        CacheConfig::chameleon(512, 16, 16, 8),
        CacheConfig::ceaser_s(512, 16, 16),
        CacheConfig::ceaser(512, 16),
    ];
    let params = EntropyParams {
        seed: derive_seed(MASTER, 500),
        ..EntropyParams::default()
    };
    let r = entropy_sweep(&configs, &params).unwrap();
    let bits: Vec<f64> = r.iter().map(|(_, e)| e.bits).collect();
    let (fa, ch2, ch8, cs, c) = (bits[0], bits[1], bits[2], bits[3], bits[4]);
    let (h2, h8) = (r[1].1.ci_half_width(), r[2].1.ci_half_width());
    let ci = (h2 * h2 + h8 * h8).sqrt();
    let diff = (r[1].1.raw_bits - r[2].1.raw_bits).abs();
    let checks = [
        (ch2 - fa).abs() <= FA_SIMILAR_BITS && (ch8 - fa).abs() <= FA_SIMILAR_BITS,
        ch2.max(ch8) < cs && cs < c,
        ch2.max(ch8) <= CHAMELEON_MAX_BITS,
        cs >= CEASER_S_MIN_BITS,
        diff < ci,
    ];
    Outcome {
        pass: checks.iter().all(|&b| b),
        detail: format!(
            "FA {fa:.4}, CHAMELEON vc=2 {ch2:.4}, vc=8 {ch8:.4}, CEASER_S {cs:.3}, CEASER {c:.3} bits; \
             |FA-CHAMELEON| <= {FA_SIMILAR_BITS}, CHAMELEON <= {CHAMELEON_MAX_BITS}, CEASER_S >= {CEASER_S_MIN_BITS}; \
             vc=2 vs vc=8 differ by {diff:.5} < CI {ci:.5}; {checks:?}"
        ),
    }
}

fn vc_noise() -> Outcome {
    let mut fractions = Vec::new();
    for (i, &w_vc) in NOISE_VC.iter().enumerate() {
        let cfg = CacheConfig::chameleon_no_reinsert(128, 8, 8, w_vc);
        let p = ProfileParams {
            victims: 20,
            target_size: 64,
            max_rounds: 200,
            seed: derive_seed(MASTER, 600 + i as u64),
            ..ProfileParams::default()
        };
        let st = vc_noise_study(&cfg, &p).unwrap();
        fractions.push(st.noisy_fraction().unwrap_or(f64::NAN));
    }
    let increasing = fractions.windows(2).all(|p| p[1] > p[0]);
    Outcome {
        pass: increasing,
        detail: format!(
            "CHAMELEON_NO_REINSERT 1024 lines, w_vc {NOISE_VC:?}: noisy fractions {}",
            fractions
                .iter()
                .map(|f| format!("{f:.4}"))
                .collect::<Vec<_>>()
                .join(" < ")
        ),
    }
}

fn trace_band() -> Outcome {
    let lines = 8192;
    let configs = [
        CacheConfig::set_associative(512, 16),
        CacheConfig::chameleon(512, 16, 16, 2),
        CacheConfig::chameleon(512, 16, 16, 8),
    ];
    let zipf = synth_trace(
        SynthKind::Zipf {
            alpha: 1.0,
            universe: 1 << 20,
        },
        ZIPF_LEN,
        derive_seed(MASTER, 700),
    )
    .unwrap();
    let working_set = 4 * lines as u64;
    let lp = synth_trace(
        SynthKind::Loop { working_set },
        LOOP_LEN,
        derive_seed(MASTER, 701),
    )
    .unwrap();
    let z = run_trace_warm(&zipf, &configs, ZIPF_WARMUP).unwrap();
    let l = run_trace_warm(&lp, &configs, 2 * working_set as usize).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 1..configs.len() {
        let (rz, rl) = (z[i].relative, l[i].relative);
        let avg = (rz + rl) / 2.0;
        let inside = |x: f64, b: (f64, f64)| x >= b.0 && x <= b.1;
        pass &=
            inside(rz, BAND_PER_TRACE) && inside(rl, BAND_PER_TRACE) && inside(avg, BAND_AVERAGE);
        parts.push(format!(
            "{}: zipf {rz:.4}, loop {rl:.4}, mean {avg:.4}",
            configs[i].label()
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "relative to {} on zipf:1:{} and loop:{working_set}; per trace in {BAND_PER_TRACE:?}, mean in {BAND_AVERAGE:?}; {}",
            configs[0].label(),
            1 << 20,
            parts.join("; ")
        ),
    }
}

fn report(name: &str, start: Instant, o: Outcome) -> bool {
    println!(
        "{} {name} [{:.1}s]: {}",
        if o.pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    ok &= report("fidelity", t, fidelity());
    let t = Instant::now();
    ok &= report("analytic-oracles", t, oracles());
    let t = Instant::now();
    let runs = ppp_runs();
    ok &= report("ppp-tpr", t, ppp_tpr(&runs));
    ok &= report("ppp-cost", t, ppp_cost(&runs));
    let t = Instant::now();
    ok &= report("ttest", t, ttest());
    let t = Instant::now();
    ok &= report("entropy", t, entropy());
    let t = Instant::now();
    ok &= report("vc-noise", t, vc_noise());
    let t = Instant::now();
    ok &= report("trace-band", t, trace_band());
    if !ok {
        std::process::exit(1);
    }
}
