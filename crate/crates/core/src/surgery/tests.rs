use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::*;
use crate::diagnostics::monotonicity_violation;
use crate::exact_solutions::SolutionFamily;
use crate::ground_state::{solve_ground_state, GroundState};
use crate::radial::RadialGrid;

fn grid() -> Arc<RadialGrid> {
    static G: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    G.get_or_init(|| RadialGrid::new(5, 1024, 30.0).unwrap()).clone()
}

fn ground() -> &'static GroundState {
    static G: OnceLock<GroundState> = OnceLock::new();
    G.get_or_init(|| solve_ground_state(&grid(), 1e-10).unwrap())
}

fn states(family: &SolutionFamily, times: &[f64]) -> Vec<SimState> {
    times.iter().map(|&t| SimState::new(family.sample(t, &grid()).unwrap(), t, 1e-3)).collect()
}

/// Pseudoconformal data at `t = −1` run to `t = 0.5`.
fn pseudoconformal_run() -> &'static ContinuationRun {
    static RUN: OnceLock<ContinuationRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let u0 = SolutionFamily::pseudoconformal(ground()).sample(-1.0, &grid()).unwrap();
        run_semi_strichartz(u0, -1.0, 0.5, &SurgeryConfig::default()).unwrap()
    })
}

#[test]
fn stationary_and_zero_data_never_trigger() {
    let cfg = SurgeryConfig::default();
    let soliton = SolutionFamily::rescaled_soliton(ground(), 1.0).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.01).collect();
    assert_eq!(detect_breakdown(&states(&soliton, &times), &cfg).unwrap(), None);
    let zero: Vec<SimState> = times.iter().map(|&t| SimState::new(RadialField::zeros(grid()), t, 1e-3)).collect();
    assert_eq!(detect_breakdown(&zero, &cfg).unwrap(), None);
    assert!(matches!(detect_breakdown(&zero[..1], &cfg), Err(Error::InsufficientPoints { needed: 2, got: 1 })));
}

#[test]
fn each_trigger_fires() {
    let cfg = SurgeryConfig::default();
    let pc = SolutionFamily::pseudoconformal(ground());
    // the sampler refuses cores the default threshold would flag on this grid
    let wide = SurgeryConfig { min_core_cells: 16.0, ..cfg };
    assert_eq!(detect_breakdown(&states(&pc, &[-0.3, -0.29]), &wide).unwrap(), Some(Trigger::CoreWidth));
    assert_eq!(detect_breakdown(&states(&pc, &[-0.5, -0.45]), &cfg).unwrap(), None);
    let low_window = SurgeryConfig { s_max: 1.0, ..cfg };
    assert_eq!(detect_breakdown(&states(&pc, &[-0.5, -0.45]), &low_window).unwrap(), Some(Trigger::WindowNorm));
    let low_grad = SurgeryConfig { g_max: 100.0, ..cfg };
    assert_eq!(detect_breakdown(&states(&pc, &[-0.5, -0.45]), &low_grad).unwrap(), Some(Trigger::GradCap));
}

#[test]
fn window_norm_matches_the_quadrature() {
    // ‖u(t)‖_{10/3} = ‖Q‖_{10/3} / |t| along the pseudoconformal family
    let pc = SolutionFamily::pseudoconformal(ground());
    let c = ground().profile.lebesgue_norm(10.0 / 3.0).unwrap();
    let times: Vec<f64> = (0..=400).map(|k| -0.5 + k as f64 * 1e-4).collect();
    let mut monitor = WindowMonitor::default();
    for s in states(&pc, &times) {
        monitor.push(s.t, window_norm_sqr_sample(&s.u), 0.04);
    }
    let exact = (c * c * (1.0 / 0.46 - 1.0 / 0.5)).sqrt();
    assert!((monitor.norm() - exact).abs() < 1e-3 * exact, "{} vs {exact}", monitor.norm());
}

#[test]
fn pseudoconformal_run_loses_one_ground_state_mass() {
    let run = pseudoconformal_run();
    let mq = ground().mass;
    assert_eq!(run.events.len(), 1, "{:?}", run.events);
    let e = run.events[0];
    assert!(e.t_event > -0.2 && e.t_event < 0.0, "{e:?}");
    assert!(e.jump >= 0.95 * mq && e.jump <= 1.05 * mq, "{e:?}");
    assert!(e.mass_after < 0.05 * mq);
    assert!((e.jump - (e.mass_before - e.mass_after)).abs() < 1e-9 * mq);
    assert!(run.final_mass() < 0.05 * mq);
    assert_eq!(run.direction, TimeDirection::Forward);
    assert_eq!(run.final_state().t, 0.5);
    assert!(monotonicity_violation(&run.mass_trace, -1.0) < 1e-10);
}

#[test]
fn mass_is_piecewise_constant_between_events() {
    let run = pseudoconformal_run();
    let tr = &run.mass_trace;
    let e = run.events[0];
    let split = tr.times.iter().position(|&t| t >= e.t_event).unwrap();
    assert!(tr.masses[..split].iter().all(|m| (m - e.mass_before).abs() < 1e-10 * e.mass_before));
    assert!(tr.masses[split..].iter().all(|m| (m - e.mass_after).abs() < 1e-10 * e.mass_before));
}

#[test]
fn excision_of_the_exact_blowup_profile() {
    let mq = ground().mass;
    let u = SolutionFamily::pseudoconformal(ground()).sample(-0.3, &grid()).unwrap();
    let (after, e) = excise_core(&u, -0.3, Trigger::CoreWidth, 1e-3).unwrap();
    assert!(e.jump >= 0.95 * mq && e.jump <= 1.05 * mq);
    assert!(e.mass_after < 0.05 * mq && (after.mass() - e.mass_after).abs() < 1e-12 * mq);
    assert!(e.excision_radius > 0.3 * 0.9);
    assert_eq!(e.excision_radius.log2().fract(), 0.0);
    assert!(matches!(excise_core(&RadialField::zeros(grid()), 0.0, Trigger::CoreWidth, 1e-3), Err(Error::NoTrigger)));
}

#[test]
fn excision_keeps_a_distant_bump() {
    let g = grid();
    let soliton = SolutionFamily::rescaled_soliton(ground(), 0.5).unwrap().sample(0.0, &g).unwrap();
    let bump = RadialField::from_real_fn(g.clone(), |r| 0.05 * (-(r - 18.0) * (r - 18.0)).exp()).unwrap();
    let u = soliton.add(&bump).unwrap();
    let (after, e) = excise_core(&u, 0.0, Trigger::CoreWidth, 1e-3).unwrap();
    let bump_mass = bump.mass();
    assert!(bump_mass > 1e-3 * u.mass());
    assert!(2.0 * e.excision_radius < 16.0, "{e:?}");
    assert!((after.exterior_mass(15.0) - bump_mass).abs() < 0.01 * bump_mass);
    assert!((e.mass_after - bump_mass).abs() < 0.01 * bump_mass);
}

#[test]
fn slowly_decaying_tail_has_no_plateau() {
    let u = RadialField::from_real_fn(grid(), |r| (1.0 + r * r).powf(-1.5)).unwrap();
    assert!(matches!(plateau_radius(&u, 1e-3), Err(Error::NoPlateau)));
    assert!(matches!(excise_core(&u, 0.0, Trigger::GradCap, 1e-3), Err(Error::NoPlateau)));
}

#[test]
fn backward_run_mirrors_the_forward_one() {
    // t ↦ conj(u(−t)) is again a solution; the pseudoconformal formula at
    // t > 0 is that reflection
    let u0 = SolutionFamily::pseudoconformal(ground()).sample(1.0, &grid()).unwrap();
    let run = run_semi_strichartz(u0, 1.0, -0.5, &SurgeryConfig::default()).unwrap();
    let forward = pseudoconformal_run();
    assert_eq!(run.direction, TimeDirection::Backward);
    assert_eq!(run.events.len(), 1);
    assert!((run.events[0].t_event + forward.events[0].t_event).abs() < 1e-6);
    assert!((run.events[0].jump - forward.events[0].jump).abs() < 1e-6 * forward.events[0].jump);
    let tr = &run.mass_trace;
    assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(monotonicity_violation(tr, 1.0), monotonicity_violation(tr, 1.0).min(1e-10));
    assert!(tr.masses.first().unwrap() < &(0.05 * ground().mass));
    assert_eq!(run.final_state().t, -0.5);
}

#[test]
fn identical_inputs_give_identical_events() {
    let g = RadialGrid::new(5, 512, 20.0).unwrap();
    let gs = solve_ground_state(&g, 1e-10).unwrap();
    let u0 = SolutionFamily::pseudoconformal(&gs).sample(-1.0, &g).unwrap();
    let cfg = SurgeryConfig::default();
    let a = run_semi_strichartz(u0.clone(), -1.0, 0.1, &cfg).unwrap();
    let b = run_semi_strichartz(u0, -1.0, 0.1, &cfg).unwrap();
    assert!(!a.events.is_empty());
    assert_eq!(a.events, b.events);
    assert_eq!(a.summary("x"), b.summary("x"));
    let json = serde_json::to_string(&a.summary("abc")).unwrap();
    let back: RunSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a.summary("abc"));
}

#[test]
fn event_limit_and_bad_input() {
    let u0 = SolutionFamily::pseudoconformal(ground()).sample(-0.3, &grid()).unwrap();
    let cfg = SurgeryConfig { max_events: 0, ..Default::default() };
    assert!(matches!(run_semi_strichartz(u0, -0.3, 0.0, &cfg), Err(Error::MaxEvents(0))));
    let narrow = RadialField::from_real_fn(grid(), |r| (-(r / 0.05).powi(2)).exp()).unwrap();
    assert!(matches!(run_semi_strichartz(narrow, 0.0, 1.0, &SurgeryConfig::default()), Err(Error::UnresolvedCore { .. })));
    let bad = SurgeryConfig { plateau_tol: 0.0, ..Default::default() };
    assert!(bad.validate().is_err());
    assert!(SurgeryConfig { trace_every: 0, ..Default::default() }.validate().is_err());
}

#[test]
fn zero_data_and_empty_interval() {
    let run = run_semi_strichartz(RadialField::zeros(grid()), 0.0, 0.01, &SurgeryConfig::default()).unwrap();
    assert!(run.events.is_empty());
    assert_eq!(run.final_mass(), 0.0);
    let u = RadialField::from_real_fn(grid(), |r| (-r * r).exp()).unwrap();
    let run = run_semi_strichartz(u, 0.0, 0.0, &SurgeryConfig::default()).unwrap();
    assert_eq!((run.steps, run.checkpoints.len(), run.mass_trace.len()), (0, 1, 1));
}

#[test]
fn events_csv_layout() {
    let e = SurgeryEvent {
        t_event: -0.1,
        mass_before: 2.0,
        mass_after: 0.5,
        jump: 1.5,
        excision_radius: 0.25,
        trigger: Trigger::GradCap,
    };
    let mut buf = Vec::new();
    write_events_csv(&[e], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{EVENTS_HEADER}\n-0.1,2,0.5,1.5,0.25,grad_cap\n"));
    let mut empty = Vec::new();
    write_events_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap(), format!("{EVENTS_HEADER}\n"));
}

#[test]
fn digest_sees_every_bit() {
    let u = RadialField::from_real_fn(grid(), |r| (-r * r).exp()).unwrap();
    let mut values = u.values().to_vec();
    values[100] += Complex64::new(0.0, f64::EPSILON * 1e-3);
    let v = RadialField::new(grid(), values).unwrap();
    assert_eq!(field_digest(&u), field_digest(&u.clone()));
    assert_eq!(field_digest(&u).len(), 64);
    assert_ne!(field_digest(&u), field_digest(&v));
}
