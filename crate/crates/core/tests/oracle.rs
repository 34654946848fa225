//! The linearized engine against the dense graph oracle.

use actsearch_core::asg::{self, AsgEngine};
use actsearch_core::las::LasState;
use actsearch_core::synthetic;
use actsearch_core::{ActiveSearch, HyperParams, LabelState};

fn params() -> HyperParams {
    HyperParams::new(1.5, 0.05, 0.05, 1e-6).unwrap()
}

fn first_positive(labels: &[u8]) -> usize {
    labels.iter().position(|&y| y == 1).expect("instance has a positive")
}

#[test]
fn query_sequences_coincide() {
    for seed in 0..3 {
        let d = synthetic::uniform_labeled(12, 180, 0.1, 100 + seed);
        let y = d.labels().unwrap().to_vec();
        let init = [(first_positive(&y), 1)];
        let mut las = LasState::init(&d, &init, params()).unwrap();
        let mut asg = AsgEngine::new(&d, &init, params()).unwrap();
        for step in 0..20 {
            let diff = (las.f() - asg.f()).amax();
            assert!(diff <= 1e-8, "seed {seed} step {step}: |df| = {diff:e}");
            let a = las.next_query().unwrap();
            let b = asg.next_query().unwrap();
            assert_eq!(a, b, "seed {seed} step {step}");
            las.update(a, y[a]).unwrap();
            asg.update(b, y[b]).unwrap();
        }
    }
}

#[test]
fn impact_identity_along_a_run() {
    let d = synthetic::uniform_labeled(10, 120, 0.1, 7);
    let y = d.labels().unwrap().to_vec();
    let p = params();
    let mut las = LasState::init(&d, &[(first_positive(&y), 1)], p).unwrap();
    let g = asg::build_graph(&d).unwrap();
    for _ in 0..6 {
        let s = LabelState::with_labels(d.n(), p.pi, &las.labels().labeled_pairs()).unwrap();
        let naive = asg::impact_naive(&g, &s, &p, las.f()).unwrap();
        let fast = las.impact().unwrap().raw;
        assert!((&fast - naive).amax() <= 1e-6);
        let i = las.next_query().unwrap();
        las.update(i, y[i]).unwrap();
    }
}

#[test]
fn inverse_consistency_within_a_refresh_interval() {
    let d = synthetic::uniform_labeled(15, 400, 0.05, 9);
    let y = d.labels().unwrap().to_vec();
    let mut las = LasState::init(&d, &[(first_positive(&y), 1)], params()).unwrap();
    for _ in 0..60 {
        let i = las.next_query().unwrap();
        las.update(i, y[i]).unwrap();
    }
    let k = las.k_matrix();
    let eye = nalgebra::DMatrix::<f64>::identity(15, 15);
    assert!((las.kinv() * &k - eye).amax() <= 1e-6);
    for t in (0..400).step_by(20) {
        let xt = las.x().column(t);
        let jt = xt.dot(&(las.kinv() * xt));
        assert!((las.j()[t] - jt).abs() <= 1e-6);
    }
}
