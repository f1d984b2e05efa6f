use std::ffi::{c_int, CStr, CString};
use std::ptr;

use nls_surgery_ffi::*;

fn message() -> String {
    let p = nls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn grid(d: usize, n: usize, r_max: f64) -> *mut NlsGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { nls_grid_new(d, n, r_max, &mut g) }, NlsStatus::Ok);
    g
}

#[test]
fn grid_round_trip() {
    let g = grid(5, 64, 10.0);
    assert_eq!(unsafe { nls_grid_len(g) }, 64);
    let mut nodes = vec![0.0; 64];
    assert_eq!(unsafe { nls_grid_nodes(g, nodes.as_mut_ptr(), 64) }, NlsStatus::Ok);
    assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    assert!(nodes[0] > 0.0 && nodes[63] < 10.0);
    assert_eq!(unsafe { nls_grid_nodes(g, nodes.as_mut_ptr(), 10) }, NlsStatus::LengthMismatch);
    unsafe { nls_grid_free(g) };
}

#[test]
fn bad_arguments_report_codes_and_messages() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { nls_grid_new(3, 64, 10.0, &mut g) }, NlsStatus::InvalidGrid);
    assert!(g.is_null());
    assert!(!message().is_empty());
    assert_eq!(unsafe { nls_grid_new(5, 64, 10.0, ptr::null_mut()) }, NlsStatus::NullPointer);
    assert!(message().contains("null"));
    let mut obs = NlsObservables { mass: 0.0, energy: 0.0, grad_norm: 0.0, variance: 0.0, core_radius: 0.0 };
    assert_eq!(unsafe { nls_field_observables(ptr::null(), &mut obs) }, NlsStatus::NullPointer);
    assert_eq!(unsafe { nls_run_event_count(ptr::null()) }, 0);
    unsafe {
        nls_grid_free(ptr::null_mut());
        nls_field_free(ptr::null_mut());
        nls_run_free(ptr::null_mut());
        nls_ground_state_free(ptr::null_mut());
    }
}

#[test]
fn status_names_are_distinct() {
    let names: Vec<String> = (0..=18i32)
        .map(|k| {
            let s = unsafe { std::mem::transmute::<i32, NlsStatus>(k) };
            unsafe { CStr::from_ptr(nls_status_name(s)) }.to_string_lossy().into_owned()
        })
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), names.len());
    assert_eq!(names[0], "ok");
}

#[test]
fn field_values_and_observables() {
    let g = grid(5, 256, 20.0);
    let mut nodes = vec![0.0; 256];
    unsafe { nls_grid_nodes(g, nodes.as_mut_ptr(), 256) };
    let re: Vec<f64> = nodes.iter().map(|r| (-r * r).exp()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { nls_field_new(g, re.as_ptr(), ptr::null(), 256, &mut f) }, NlsStatus::Ok);
    let (mut back_re, mut back_im) = (vec![0.0; 256], vec![1.0; 256]);
    assert_eq!(unsafe { nls_field_values(f, back_re.as_mut_ptr(), back_im.as_mut_ptr(), 256) }, NlsStatus::Ok);
    assert_eq!(back_re, re);
    assert!(back_im.iter().all(|&v| v == 0.0));

    let mut obs = NlsObservables { mass: 0.0, energy: 0.0, grad_norm: 0.0, variance: 0.0, core_radius: 0.0 };
    assert_eq!(unsafe { nls_field_observables(f, &mut obs) }, NlsStatus::Ok);
    // ∫ e^{-2|x|²} dx in five dimensions.
    let exact = (std::f64::consts::PI / 2.0).powf(2.5);
    assert!((obs.mass - exact).abs() < 1e-10 * exact, "{}", obs.mass);

    let bad = [f64::NAN; 256];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { nls_field_new(g, bad.as_ptr(), ptr::null(), 256, &mut h) }, NlsStatus::NonFinite);
    assert_eq!(unsafe { nls_field_new(g, re.as_ptr(), ptr::null(), 100, &mut h) }, NlsStatus::LengthMismatch);
    unsafe {
        nls_field_free(f);
        nls_grid_free(g);
    }
}

#[test]
fn ground_state_soliton_and_evolution() {
    let g = grid(5, 512, 20.0);
    let mut gs = ptr::null_mut();
    assert_eq!(unsafe { nls_ground_state_solve(g, 1e-9, &mut gs) }, NlsStatus::Ok);
    let (mut mass, mut residual, mut peak) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { nls_ground_state_info(gs, &mut mass, &mut residual, &mut peak) }, NlsStatus::Ok);
    assert!(residual < 1e-9);
    assert!((mass - 2963.859).abs() < 3.0, "{mass}");
    assert!(peak > 0.0);

    let mut q = ptr::null_mut();
    assert_eq!(unsafe { nls_ground_state_profile(gs, &mut q) }, NlsStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { nls_rescaled_soliton(gs, 1.0, 0.0, g, &mut sol) }, NlsStatus::Ok);
    let mut cfg = nls_evolve_config_default();
    cfg.dt_max = 1e-3;
    let mut later = ptr::null_mut();
    assert_eq!(unsafe { nls_evolve(sol, 0.0, 0.05, &cfg, &mut later) }, NlsStatus::Ok);
    let mut a = NlsObservables { mass: 0.0, energy: 0.0, grad_norm: 0.0, variance: 0.0, core_radius: 0.0 };
    let mut b = a;
    unsafe {
        nls_field_observables(sol, &mut a);
        nls_field_observables(later, &mut b);
    }
    assert!((a.mass - b.mass).abs() < 1e-10 * a.mass);
    assert!((a.mass - mass).abs() < 1e-8 * mass);

    let mut pc = ptr::null_mut();
    assert_eq!(unsafe { nls_pseudoconformal(gs, 0.0, g, &mut pc) }, NlsStatus::InvalidArgument);
    assert_eq!(unsafe { nls_pseudoconformal(gs, -1.0, g, &mut pc) }, NlsStatus::Ok);
    unsafe {
        nls_field_free(pc);
        nls_field_free(later);
        nls_field_free(sol);
        nls_field_free(q);
        nls_ground_state_free(gs);
        nls_grid_free(g);
    }
}

#[test]
fn surgery_run_through_collapse() {
    let g = grid(5, 1024, 30.0);
    let mut gs = ptr::null_mut();
    assert_eq!(unsafe { nls_ground_state_solve(g, 1e-9, &mut gs) }, NlsStatus::Ok);
    let mut u0 = ptr::null_mut();
    assert_eq!(unsafe { nls_pseudoconformal(gs, -0.3, g, &mut u0) }, NlsStatus::Ok);
    let cfg = nls_surgery_config_default();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { nls_run_semi_strichartz(u0, -0.3, 0.05, &cfg, &mut run) }, NlsStatus::Ok, "{}", message());
    assert_eq!(unsafe { nls_run_event_count(run) }, 1);
    let mut e = NlsSurgeryEvent {
        t_event: 0.0,
        mass_before: 0.0,
        mass_after: 0.0,
        jump: 0.0,
        excision_radius: 0.0,
        trigger: NlsTrigger::GradCap,
    };
    assert_eq!(unsafe { nls_run_event(run, 0, &mut e) }, NlsStatus::Ok);
    assert!(e.t_event < 0.0 && e.excision_radius > 0.0);
    assert!(e.mass_after < e.mass_before);
    assert_eq!(unsafe { nls_run_event(run, 1, &mut e) }, NlsStatus::InvalidArgument);
    let mut last = ptr::null_mut();
    assert_eq!(unsafe { nls_run_final_field(run, &mut last) }, NlsStatus::Ok);
    let mut obs = NlsObservables { mass: 0.0, energy: 0.0, grad_norm: 0.0, variance: 0.0, core_radius: 0.0 };
    unsafe { nls_field_observables(last, &mut obs) };
    assert!((obs.mass - e.mass_after).abs() < 1e-8 * e.mass_before);
    unsafe {
        nls_field_free(last);
        nls_run_free(run);
        nls_field_free(u0);
        nls_ground_state_free(gs);
        nls_grid_free(g);
    }
}

#[test]
fn experiment_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let id = CString::new("E5").unwrap();
    let sets = CString::new("n=512\nr_max=20\npairs=8").unwrap();
    let mut passed: c_int = -1;
    let status = unsafe { nls_run_experiment(id.as_ptr(), sets.as_ptr(), out.as_ptr(), &mut passed) };
    assert_eq!(status, NlsStatus::Ok, "{}", message());
    assert!(passed == 0 || passed == 1);
    assert!(dir.path().join("e5/summary.json").exists());

    let bogus = CString::new("e9").unwrap();
    assert_ne!(unsafe { nls_run_experiment(bogus.as_ptr(), ptr::null(), out.as_ptr(), &mut passed) }, NlsStatus::Ok);
    let bad_key = CString::new("no_such_key=1").unwrap();
    assert_eq!(unsafe { nls_run_experiment(id.as_ptr(), bad_key.as_ptr(), out.as_ptr(), &mut passed) }, NlsStatus::Config);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nls_surgery.h")).unwrap();
    for name in [
        "nls_grid_new",
        "nls_field_new",
        "nls_ground_state_solve",
        "nls_evolve",
        "nls_run_semi_strichartz",
        "nls_run_experiment",
        "nls_last_error_message",
        "NLS_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
