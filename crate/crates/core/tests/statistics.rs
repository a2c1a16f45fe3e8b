use entstats::analytics::{self, PhaseOrder};
use entstats::cli::{
    sample_statistic, standard_ensembles, stream_for, theory_for, Evaluator, Statistic,
};
use entstats::purity::Workspace;
use entstats::search::best_of_sample;
use entstats::states::{EnsembleKind, EnsembleSpec};
use entstats::stats::Histogram;

fn spec(kind: EnsembleKind, n: u32, seed: u64) -> EnsembleSpec {
    EnsembleSpec::new(kind, n, seed, stream_for(0, n, kind)).unwrap()
}

#[test]
fn million_hypergraph_draws_at_seven_qubits() {
    let hist = Histogram::new(0.125, 1.0, 200).unwrap();
    let (s, _) = sample_statistic(
        &spec(EnsembleKind::Butson(2), 7, 77),
        Statistic::PiMe,
        1_000_000,
        &hist,
    )
    .unwrap();
    let z = (s.mean - 23.0 / 128.0) / s.stderr();
    assert!(z.abs() < 5.0, "z = {z}");
}

#[test]
fn hypergraph_variance_doubles_p4() {
    let hist = Histogram::new(0.125, 1.0, 200).unwrap();
    let var = |kind| {
        sample_statistic(&spec(kind, 7, 5), Statistic::PiMe, 100_000, &hist)
            .unwrap()
            .0
            .sample_variance()
    };
    let ratio = var(EnsembleKind::Butson(2)) / var(EnsembleKind::Butson(4));
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn seven_qubit_ensemble_orderings() {
    let hist = Histogram::new(0.125, 1.0, 200).unwrap();
    let mut results = Vec::new();
    for kind in standard_ensembles() {
        let (s, _) = sample_statistic(&spec(kind, 7, 9), Statistic::PiMe, 50_000, &hist).unwrap();
        results.push((kind, s));
    }
    let haar = results[0].1;
    let hyper = results[1].1;
    for (kind, s) in &results[1..] {
        assert!(s.mean < haar.mean, "{kind}");
    }
    for (_, s) in &results[2..] {
        let r = hyper.sample_variance() / s.sample_variance();
        assert!((1.8..2.2).contains(&r), "{r}");
    }
    let theory = analytics::sigma2_me_hadamard(7, PhaseOrder::Finite(2))
        .unwrap()
        .value
        / analytics::sigma2_me_haar(7).unwrap().value;
    assert!((hyper.sample_variance() / haar.sample_variance() / theory - 1.0).abs() < 0.1);
}

#[test]
fn hypergraph_fixed_cut_spectrum_is_discrete() {
    let stat = Statistic::PiA(None).resolve(6).unwrap();
    let bins = 200;
    let hist = Histogram::new(0.125, 1.0, bins).unwrap();
    let support = |kind| {
        let sp = spec(kind, 6, 11);
        let eval = Evaluator::new(stat, 6).unwrap();
        let mut ws = Workspace::default();
        let mut vals: Vec<i64> = (0..20_000)
            .map(|i| (eval.eval(&sp.sample_at(i), &mut ws).unwrap() * 1e9).round() as i64)
            .collect();
        vals.sort_unstable();
        vals.dedup();
        let (_, h) = sample_statistic(&sp, stat, 20_000, &hist).unwrap();
        (vals.len(), h)
    };
    let (hyper_points, hyper) = support(EnsembleKind::Butson(2));
    let (haar_points, _) = support(EnsembleKind::Haar);
    assert!(hyper_points < bins / 2, "{hyper_points}");
    assert!(hyper.occupied_bins() <= hyper_points);
    assert!(haar_points > 19_000);
    assert_eq!(hyper.total(), 20_000);
}

#[test]
fn fixed_cut_moments_for_every_ensemble() {
    for kind in standard_ensembles() {
        let stat = Statistic::PiA(None).resolve(5).unwrap();
        let hist = Histogram::new(0.25, 1.0, 200).unwrap();
        let (s, _) = sample_statistic(&spec(kind, 5, 13), stat, 50_000, &hist).unwrap();
        let (mean, var) = theory_for(kind, stat, 5).unwrap();
        assert!(((s.mean - mean.value) / s.stderr()).abs() < 5.0, "{kind}");
        assert!(
            (s.sample_variance() / var.value - 1.0).abs() < 0.05,
            "{kind}"
        );
    }
}

#[test]
fn variance_against_asymptotic_form() {
    // exact Haar and Hadamard variances stay close to their large-n curves
    for n in [10u32, 12] {
        let haar =
            analytics::sigma2_me_haar(n).unwrap().value / analytics::sigma2_me_asymptotic(n, 1);
        let had = analytics::sigma2_me_hadamard(n, PhaseOrder::Infinite)
            .unwrap()
            .value
            / analytics::sigma2_me_asymptotic(n, 1);
        assert!((0.5..2.0).contains(&haar) && (0.5..2.0).contains(&had));
    }
}

#[test]
fn six_qubit_best_of_sample_is_reported() {
    let r = best_of_sample(&spec(EnsembleKind::Butson(2), 6, 17), 20_000).unwrap();
    assert!(r.gap >= -1e-12);
    eprintln!(
        "n=6 hypergraph best of 20000 draws: {} (gap {})",
        r.best_value, r.gap
    );
}
