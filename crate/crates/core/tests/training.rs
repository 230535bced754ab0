use smoothnet::par::Exec;
use smoothnet::trainer::{self, Dataset, TrainConfig};

fn cubic() -> Dataset {
    Dataset::from_grid(&|x| x[0].powi(3) + 3.0, 1, 0.01).unwrap()
}

#[test]
fn default_protocol_cuts_the_error_tenfold() {
    let data = cubic();
    let cfg = TrainConfig::default();
    let out = trainer::train(&trainer::init_net(&cfg, 1), &data, &cfg).unwrap();
    let (first, last) = (out.trace[0], *out.trace.last().unwrap());
    assert_eq!(out.trace.len(), cfg.steps + 1);
    assert!(first / last >= 10.0, "{first} -> {last}");
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let data = Dataset::from_grid(&|x| (3.0 * (x[0] + x[1])).sin(), 2, 0.05).unwrap();
    let par = TrainConfig { steps: 200, lr: 0.01, exec: Exec::Parallel, ..Default::default() };
    let seq = TrainConfig { exec: Exec::Sequential, ..par.clone() };
    let net = trainer::init_net(&par, 2);
    let a = trainer::train(&net, &data, &par).unwrap();
    let b = trainer::train(&net, &data, &seq).unwrap();
    assert_eq!(a.net, b.net);
    assert!(a.trace.iter().zip(&b.trace).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn seeds_give_different_starts() {
    let a = trainer::init_net(&TrainConfig { seed: 1, ..Default::default() }, 1);
    let b = trainer::init_net(&TrainConfig { seed: 2, ..Default::default() }, 1);
    assert_ne!(a, b);
    assert!(a.units.iter().all(|u| (-1.0..1.0).contains(&u.b) && (-1.0..1.0).contains(&u.lambda)));
}

#[test]
fn huge_step_reports_divergence() {
    let data = Dataset::from_grid(&|x| 1e3 * x[0], 1, 0.01).unwrap();
    let cfg = TrainConfig { lr: 1e6, steps: 500, ..Default::default() };
    assert!(trainer::train(&trainer::init_net(&cfg, 1), &data, &cfg).is_err());
}
