use smoothnet::activation::ActivationKind;
use smoothnet::analyzer::{self, SolutionMode, Thresholds, Verdict};
use smoothnet::trainer::Dataset;
use smoothnet::{TwoLayerNet, Unit};

fn logistic(w: f64, b: f64, l: f64) -> Unit {
    Unit::new(vec![w], b, l, ActivationKind::Logistic)
}

/// Target = net output plus a small wiggle, so the baseline error is not zero.
fn data_for(net: &TwoLayerNet) -> Dataset {
    Dataset::from_grid(&|x| net.eval(x) + 1e-3 * (37.0 * x[0]).sin(), 1, 0.01).unwrap()
}

#[test]
fn sharp_step_is_local_and_silent_unit_inactivated() {
    let net = TwoLayerNet::new(vec![logistic(60.0, -36.0, 2.0), logistic(3.0, -1.0, 0.0), logistic(1.0, 0.0, 1.0)]);
    let data = data_for(&net);
    let rep = analyzer::analyze(&net, &data, &Thresholds::default()).unwrap();
    assert_eq!(rep.units[0].verdict, Verdict::Local);
    let z = rep.units[0].z.unwrap();
    assert!((0.45..0.6).contains(&z), "z = {z}");
    assert_eq!(rep.units[1].verdict, Verdict::Inactivated);
    assert_eq!(rep.units[2].verdict, Verdict::Global);
    assert_eq!(rep.mode, SolutionMode::GlobalApproximation);
}

#[test]
fn smooth_units_give_local_approximation_mode() {
    let net = TwoLayerNet::new(vec![logistic(1.5, -0.3, 2.0), logistic(-0.8, 0.2, -1.0)]);
    let data = data_for(&net);
    let rep = analyzer::analyze(&net, &data, &Thresholds::default()).unwrap();
    assert!(rep.units.iter().all(|u| u.verdict == Verdict::Global));
    assert_eq!(rep.mode, SolutionMode::LocalApproximation);
    assert!(rep.to_json().contains("\"mode\": \"local\""));
}

#[test]
fn silent_unit_has_zero_point_at_one() {
    let net = TwoLayerNet::new(vec![logistic(1.0, 0.0, 1.0), logistic(2.0, -1.0, 0.0)]);
    let data = data_for(&net);
    let z = analyzer::zero_error_point(&net, 1, &data, &Thresholds::default()).unwrap();
    assert_eq!(z, Some(1.0));
}

#[test]
fn exact_fit_is_reported() {
    let net = TwoLayerNet::new(vec![logistic(1.0, 0.0, 1.0)]);
    let data = Dataset::from_grid(&|x| net.eval(x), 1, 0.01).unwrap();
    assert!(analyzer::zero_error_point(&net, 0, &data, &Thresholds::default()).is_err());
    let rep = analyzer::analyze(&net, &data, &Thresholds::default()).unwrap();
    assert!(rep.note.is_some());
}

#[test]
fn oblique_step_in_the_plane() {
    let u = Unit::new(vec![40.0, 40.0], -40.0, 1.0, ActivationKind::Logistic);
    let net = TwoLayerNet::new(vec![u, Unit::new(vec![0.5, 0.5], 0.0, 1.0, ActivationKind::Logistic)]);
    let data = Dataset::from_grid(&|x| net.eval(x) + 1e-3 * (11.0 * x[0] * x[1]).cos(), 2, 0.05).unwrap();
    let th = Thresholds { scan_step: 0.05, ..Default::default() };
    let rep = analyzer::analyze(&net, &data, &th).unwrap();
    let line = rep.units[0].line.as_ref().expect("hyperplane found");
    assert!(line.axis_alignment() < 0.8);
    let mut csv = Vec::new();
    analyzer::write_plot_csv(&net, &data, &rep, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().lines().any(|l| l.starts_with("line,0,")));
}
