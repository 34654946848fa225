//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. An optional argument filters criteria by name.

use std::process::ExitCode;
use std::time::Instant;

use actsearch_core::asg::{self, AsgEngine};
use actsearch_core::las::LasState;
use actsearch_core::synthetic;
use actsearch_core::wnas::WnasState;
use actsearch_core::{ActiveSearch, EngineKind, HyperParams, LabelState};
use actsearch_harness::bench::bench_size;
use actsearch_harness::experiment::{run_on, Summary};
use actsearch_harness::lemma::{lemma_trials, TrialOptions};
use actsearch_harness::probe::{run_pairwise_probe, ProbeOptions};
use actsearch_harness::RunConfig;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn params() -> HyperParams {
    HyperParams::new(1.5, 0.05, 0.05, 1e-6).unwrap()
}

fn first_positive(labels: &[u8]) -> usize {
    labels.iter().position(|&y| y == 1).unwrap_or(0)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for inst in 0..10 {
        let d = synthetic::uniform_labeled(20, 300, 0.05, 1000 + inst);
        let y = d.labels().unwrap().to_vec();
        let init = [(first_positive(&y), 1)];
        let mut las = LasState::init(&d, &init, params()).map_err(|e| e.to_string())?;
        let mut asg = AsgEngine::new(&d, &init, params()).map_err(|e| e.to_string())?;
        for step in 0..50 {
            let a = las.next_query().map_err(|e| e.to_string())?;
            let b = asg.next_query().map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("instance {inst} step {step}: LAS queried {a}, ASG {b}"));
            }
            las.update(a, y[a]).map_err(|e| e.to_string())?;
            asg.update(b, y[b]).map_err(|e| e.to_string())?;
            worst = worst.max((las.f() - asg.f()).amax());
        }
    }
    check(
        worst <= 1e-8,
        format!("10 instances x 50 iterations, identical queries, max |df| = {worst:.2e} (tol 1e-8)"),
    )
}

fn impact_identity() -> Outcome {
    let p = params();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let d = synthetic::uniform_labeled(10, 150, 0.05, 2000 + seed);
        let y = d.labels().unwrap().to_vec();
        let g = asg::build_graph(&d).map_err(|e| e.to_string())?;
        let mut las = LasState::init(&d, &[(first_positive(&y), 1)], p).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let s = LabelState::with_labels(d.n(), p.pi, &las.labels().labeled_pairs()).unwrap();
            let naive = asg::impact_naive(&g, &s, &p, las.f()).map_err(|e| e.to_string())?;
            let fast = las.impact().map_err(|e| e.to_string())?.raw;
            worst = worst.max((fast - naive).amax());
            let i = las.next_query().map_err(|e| e.to_string())?;
            las.update(i, y[i]).map_err(|e| e.to_string())?;
        }
    }
    check(
        worst <= 1e-6,
        format!("5 seeds x 10 iterations, max |IM_las - IM_naive| = {worst:.2e} (tol 1e-6)"),
    )
}

fn inverse_drift() -> Outcome {
    let d = synthetic::uniform_labeled(50, 2000, 0.02, 3000);
    let y = d.labels().unwrap().to_vec();
    let init = [(first_positive(&y), 1)];
    let mut las =
        LasState::init_shared(d.shared_x(), &init, params(), usize::MAX).map_err(|e| e.to_string())?;
    for _ in 0..200 {
        let i = las.next_query().map_err(|e| e.to_string())?;
        las.update(i, y[i]).map_err(|e| e.to_string())?;
    }
    let kinv_inc = las.kinv().clone();
    let j_inc = las.j().clone();
    let kinv_fresh = las.k_matrix().try_inverse().ok_or("K is singular")?;
    let kinv_drift = (&kinv_inc - &kinv_fresh).amax();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut idx: Vec<usize> = (0..2000).collect();
    idx.shuffle(&mut rng);
    let j_drift = idx[..20]
        .iter()
        .map(|&t| {
            let xt = las.x().column(t);
            (j_inc[t] - xt.dot(&(&kinv_fresh * xt))).abs()
        })
        .fold(0.0, f64::max);
    check(
        kinv_drift <= 1e-6 && j_drift <= 1e-6,
        format!("after 200 updates: Kinv drift {kinv_drift:.2e}, J drift {j_drift:.2e} on 20 indices (tol 1e-6)"),
    )
}

fn stochasticity_and_range() -> Outcome {
    let mut worst_row = 0.0f64;
    let mut worst_range = 0.0f64;
    for seed in 0..10u64 {
        let n = 100 + 10 * seed as usize;
        let d = synthetic::uniform_labeled(8, n, 0.1, 4000 + seed);
        let y = d.labels().unwrap();
        let init: Vec<(usize, u8)> = (0..n).step_by(7).map(|i| (i, y[i])).collect();
        let h = HyperParams::new(0.5 + seed as f64, 0.02 * (1 + seed) as f64, 0.1, 0.0).unwrap();
        let g = asg::build_graph(&d).map_err(|e| e.to_string())?;
        let s = LabelState::with_labels(n, h.pi, &init).unwrap();
        let w = asg::absorption_matrix(&g, &s, &h).map_err(|e| e.to_string())?;
        for row in w.row_iter() {
            worst_row = worst_row.max((row.sum() - 1.0).abs());
        }
        let f = asg::solve_f(&g, &s, &h).map_err(|e| e.to_string())?.f;
        let yp = s.yprime_vec();
        let lo = yp.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = yp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for &v in f.iter() {
            worst_range = worst_range.max(lo - v).max(v - hi);
        }
    }
    check(
        worst_row <= 1e-8 && worst_range <= 1e-8,
        format!(
            "10 instances n in [100, 190]: max |row sum - 1| = {worst_row:.2e}, max range excess = {:.2e} (tol 1e-8)",
            worst_range.max(0.0)
        ),
    )
}

fn lemma_bound() -> Outcome {
    let reports = lemma_trials(&TrialOptions::default(), &params()).map_err(|e| e.to_string())?;
    let holds = reports.iter().filter(|r| r.holds).count();
    let stieltjes = reports.iter().filter(|r| r.stieltjes).count();
    let slack = reports
        .iter()
        .map(|r| r.m12_norm1 / r.bound)
        .fold(0.0, f64::max);
    let min_entry = reports.iter().map(|r| r.min_inverse_entry).fold(f64::INFINITY, f64::min);
    check(
        holds == 100 && stieltjes == 100,
        format!(
            "bound holds {holds}/100, Stieltjes {stieltjes}/100 (n=60, eps=1e-3); max |M12|/bound = {slack:.3}, min M^-1 entry {min_entry:.2e}"
        ),
    )
}

fn surrogate() -> (RunConfig, actsearch_core::Dataset) {
    let cfg = RunConfig::surrogate();
    let d = cfg.load_dataset().expect("surrogate data");
    (cfg, d)
}

fn recall() -> Outcome {
    let (mut cfg, d) = surrogate();
    let mut lines = Vec::new();
    let mut ok = true;
    for (kind, need) in [(EngineKind::Las, 36.0), (EngineKind::Wnas, 30.0)] {
        cfg.engine = kind;
        let curves = run_on(&d, &cfg).map_err(|e| e.to_string())?;
        let s = Summary::from_curves(&curves).map_err(|e| e.to_string())?;
        let random = s.last.random_expect;
        ok &= s.last.mean >= need && s.last.mean >= 10.0 * random && s.mid.mean >= 5.0 * s.mid.random_expect;
        lines.push(format!(
            "{kind} T/2={:.2}±{:.2} T={:.2}±{:.2} (need >= {need}, random {random:.2})",
            s.mid.mean, s.mid.std, s.last.mean, s.last.std
        ));
    }
    check(ok, format!("n=5000 r=20 1% sep 5, T=40, 10 seeds: {}", lines.join("; ")))
}

fn probe() -> Outcome {
    let (_, d) = surrogate();
    let r = run_pairwise_probe(&d, params(), &ProbeOptions::default()).map_err(|e| e.to_string())?;
    check(
        r.valid.len() == 100 && r.las_mean > r.wnas_mean,
        format!(
            "{} valid pairs ({} excluded): LAS top-100 mean {:.2}, WNAS {:.2}",
            r.valid.len(),
            r.excluded,
            r.las_mean,
            r.wnas_mean
        ),
    )
}

fn scaling() -> Outcome {
    let h = params();
    let small = bench_size(50, 5_000, 60, 0, &h).map_err(|e| e.to_string())?;
    let big = bench_size(50, 50_000, 60, 0, &h).map_err(|e| e.to_string())?;
    let ratio = big.median_iter_seconds / small.median_iter_seconds;
    check(
        (5.0..=20.0).contains(&ratio) && big.asg_refused,
        format!(
            "r=50 median iteration {:.3} ms (n=5000) vs {:.3} ms (n=50000), ratio {ratio:.2} (need [5, 20]); ASG refused n=50000: {}",
            1e3 * small.median_iter_seconds,
            1e3 * big.median_iter_seconds,
            big.asg_refused
        ),
    )
}

fn wnas_incremental() -> Outcome {
    let d = synthetic::uniform_labeled(30, 3000, 0.05, 5000);
    let y = d.labels().unwrap().to_vec();
    let h = HyperParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut idx: Vec<usize> = (0..3000).collect();
    idx.shuffle(&mut rng);
    let mut st = WnasState::init(&d, &[], h).map_err(|e| e.to_string())?;
    let mut plan = Vec::new();
    for &i in &idx[..50] {
        st.update(i, y[i]).map_err(|e| e.to_string())?;
        plan.push((i, y[i]));
    }
    let batch = WnasState::init(&d, &plan, h).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in st.labels().unlabeled() {
        worst = worst
            .max((st.num()[i] - batch.num()[i]).abs())
            .max((st.den()[i] - batch.den()[i]).abs());
    }
    check(
        worst <= 1e-9,
        format!("n=3000 r=30, 50 random updates: max |incremental - batch| = {worst:.2e} (tol 1e-9)"),
    )
}

fn main() -> ExitCode {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle-equivalence", oracle_equivalence),
        ("impact-identity", impact_identity),
        ("inverse-drift", inverse_drift),
        ("stochasticity-range", stochasticity_and_range),
        ("lemma-bound", lemma_bound),
        ("recall-surrogate", recall),
        ("pairwise-probe", probe),
        ("scaling", scaling),
        ("wnas-incremental", wnas_incremental),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
