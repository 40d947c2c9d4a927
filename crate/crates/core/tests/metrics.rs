use oppnet::engine::{run_experiment, ExperimentSpec, Horizon};
use oppnet::graph::*;
use oppnet::metrics::*;
use oppnet::seeding::SeedingScheme;
use oppnet::strategies::StrategyKind;
use proptest::prelude::*;

fn desk_graph() -> ContactGraph {
    let p = GraphParams {
        n: 50,
        communities: Some(5),
        max_community: 20,
        ..GraphParams::default()
    };
    generate(&p).unwrap().0
}

fn synthetic(finish: Vec<Option<f64>>) -> TrialMetrics {
    TrialMetrics {
        finish_times: finish,
        ..TrialMetrics::default()
    }
}

proptest! {
    #[test]
    fn curves_are_monotone(
        trials in prop::collection::vec(prop::collection::vec(prop::option::of(0.0f64..100.0), 1..20), 1..10),
        steps in 1usize..50,
    ) {
        let n = trials[0].len();
        let trials: Vec<TrialMetrics> = trials
            .into_iter()
            .map(|mut f| {
                f.resize(n, None);
                synthetic(f)
            })
            .collect();
        let c = latency_curve(&trials, &uniform_grid(120.0, steps)).unwrap();
        prop_assert!(c.percent.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.percent.iter().all(|&p| (0.0..=100.0).contains(&p)));
    }

    #[test]
    fn six_significant_digits_round_trip(x in -1e9f64..1e9) {
        let y: f64 = fmt6(x).parse().unwrap();
        if x != 0.0 {
            prop_assert!(((y - x) / x).abs() <= 5e-6);
        }
        let digits = fmt6(x).trim_start_matches('-').replace('.', "").trim_start_matches('0').trim_end_matches('0').len();
        prop_assert!(digits <= 6);
    }

    #[test]
    fn median_of_odd_sets(mut xs in prop::collection::vec(0.0f64..1e4, 1..30)) {
        if xs.len() % 2 == 0 {
            xs.pop();
        }
        let trials: Vec<TrialMetrics> = xs.iter().map(|&x| synthetic(vec![Some(x)])).collect();
        let m = median_finish(&trials).unwrap();
        let below = xs.iter().filter(|&&x| x < m.median).count();
        let above = xs.iter().filter(|&&x| x > m.median).count();
        prop_assert!(below <= xs.len() / 2 && above <= xs.len() / 2);
    }
}

#[test]
fn simulated_curves_reach_everyone() {
    let g = desk_graph();
    let mut spec = ExperimentSpec::new(&g, StrategyKind::EpidemicLocalRarest, SeedingScheme::CommunityPct(0.9), 16);
    spec.n_trials = 50;
    spec.horizon = Horizon::Fixed(1e6);
    let r = run_experiment(&spec).unwrap();
    let end = r.trials.iter().filter_map(TrialMetrics::network_finish).fold(0.0, f64::max);
    let c = latency_curve(&r.trials, &uniform_grid(end, 100)).unwrap();
    assert!(c.percent.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*c.percent.last().unwrap(), 100.0);
    let start = r.trials.iter().map(|t| t.percent_complete(0.0)).sum::<f64>() / 50.0;
    assert_eq!(c.percent[0], start);

    let single = latency_curve(&r.trials[..1], &c.t).unwrap();
    let own: Vec<f64> = c.t.iter().map(|&t| r.trials[0].percent_complete(t)).collect();
    assert_eq!(single.percent, own);
}

#[test]
fn csv_schemas() {
    let g = desk_graph();
    let mut spec = ExperimentSpec::new(&g, StrategyKind::NetworkCoding, SeedingScheme::CommunityPct(0.8), 16);
    spec.n_trials = 4;
    spec.horizon = Horizon::Fixed(1e6);
    let r = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let header = |name: &str| {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        let head = lines.next().unwrap().to_owned();
        (head, lines.map(str::to_owned).collect::<Vec<_>>())
    };

    let curve = latency_curve(&r.trials, &uniform_grid(500.0, 10)).unwrap();
    write_latency_csv(&curve, dir.path().join("latency.csv")).unwrap();
    assert_eq!(header("latency.csv").0, "t,percent_complete");
    let back = read_latency_csv(dir.path().join("latency.csv")).unwrap();
    for (a, b) in back.percent.iter().zip(&curve.percent) {
        assert!((a - b).abs() <= 5e-6 * b.abs().max(1e-300));
    }

    write_finish_csv(&r.trials, dir.path().join("finish.csv")).unwrap();
    let (head, rows) = header("finish.csv");
    assert_eq!(head, "trial,seed,finish_time,truncated");
    assert_eq!(rows.len(), 4);

    write_transmissions_csv(&r.trials, dir.path().join("tx.csv")).unwrap();
    assert!(header("tx.csv").0.starts_with("trial,seed,meetings,transmissions,innovative,noninnovative"));

    write_per_node_csv(&r.trials, &g, dir.path().join("nodes.csv")).unwrap();
    let (head, rows) = header("nodes.csv");
    assert_eq!(head, "node,community,sent,received,noninnovative");
    assert_eq!(rows.len(), 50);
    let sent: f64 = rows.iter().map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    let expected = r.trials.iter().map(|t| t.transmissions_total as f64).sum::<f64>() / 4.0;
    assert!((sent - expected).abs() < 1e-3 * expected);

    write_user_finish_csv(&r.trials, &g, dir.path().join("users.csv")).unwrap();
    let (_, rows) = header("users.csv");
    let keys: Vec<(usize, usize)> = rows
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    for w in keys.windows(2) {
        assert!(w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 >= w[1].1));
    }

    assert!(write_finish_csv(&r.trials, dir.path().join("missing/finish.csv")).is_err());
}

#[test]
fn transmission_means() {
    let trials: Vec<TrialMetrics> = (1..=4)
        .map(|i| TrialMetrics {
            meetings_total: 10 * i,
            transmissions_total: i,
            innovative_total: i,
            ..TrialMetrics::default()
        })
        .collect();
    let s = transmission_summary(&trials);
    assert_eq!(s.meetings, 25.0);
    assert_eq!(s.transmissions, 2.5);
    assert_eq!(s.noninnovative, 0.0);
    let one = transmission_summary(&trials[..1]);
    assert_eq!((one.meetings, one.transmissions), (10.0, 1.0));
}
