use std::ffi::{CStr, CString};
use std::ptr;

use garch_ssm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gssm_last_error()).to_string_lossy().into_owned() }
}

fn model(n: usize) -> *mut GssmModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gssm_model_new(GssmModelKind::RandomWalk, n, &mut m) }, GssmStatus::Ok);
    m
}

struct Garch2 {
    alpha0: [f64; 2],
    alpha: [f64; 2],
    beta: [f64; 2],
    corr: [f64; 4],
}

impl Garch2 {
    fn raw(&self) -> GssmGarch {
        GssmGarch {
            p: 1,
            q: 1,
            alpha0: self.alpha0.as_ptr(),
            alpha: self.alpha.as_ptr(),
            beta: self.beta.as_ptr(),
            corr: self.corr.as_ptr(),
        }
    }
}

fn truth() -> Garch2 {
    Garch2 {
        alpha0: [1.0, 2.0],
        alpha: [0.2, 0.1],
        beta: [0.6, 0.7],
        corr: [1.0, 0.5, 0.5, 1.0],
    }
}

#[test]
fn null_arguments_are_reported() {
    let st = unsafe { gssm_model_new(GssmModelKind::RandomWalk, 2, ptr::null_mut()) };
    assert_eq!(st, GssmStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut d = ptr::null_mut();
    let st = unsafe { gssm_data_new(ptr::null(), 3, 2, &mut d) };
    assert_eq!(st, GssmStatus::NullPointer);
    unsafe {
        gssm_data_free(ptr::null_mut());
        gssm_model_free(ptr::null_mut());
        gssm_fit_free(ptr::null_mut());
        gssm_config_free(ptr::null_mut());
    }
    assert_eq!(unsafe { gssm_fit_n_draws(ptr::null()) }, 0);
}

#[test]
fn error_codes_follow_library_errors() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gssm_model_new(GssmModelKind::LocalTrend, 0, &mut m) }, GssmStatus::InvalidArgument);

    let mut d = ptr::null_mut();
    let all_missing = [f64::NAN; 4];
    assert_eq!(unsafe { gssm_data_new(all_missing.as_ptr(), 2, 2, &mut d) }, GssmStatus::Insufficient);

    let mut c = ptr::null_mut();
    let text = CString::new("model.dim = 2\nmcmc.thin = 0\n").unwrap();
    assert_eq!(unsafe { gssm_config_parse(text.as_ptr(), ptr::null(), &mut c) }, GssmStatus::Config);
    assert!(last_error().contains("mcmc.thin"), "{}", last_error());

    let path = CString::new("/nonexistent/file.csv").unwrap();
    assert_eq!(unsafe { gssm_data_read_csv(path.as_ptr(), &mut d) }, GssmStatus::Io);
}

#[test]
fn simulate_then_likelihood_matches_pointwise_sum() {
    let m = model(2);
    let g = truth();
    let w = [0.1, 0.0, 0.0, 0.1];
    let t_len = 50;
    let mut y = vec![0.0; t_len * 2];
    let mut sigma = vec![0.0; t_len * 2];
    let mut states = vec![0.0; (t_len + 1) * 2];
    let st = unsafe {
        gssm_simulate(m, &g.raw(), w.as_ptr(), t_len, 9, y.as_mut_ptr(), sigma.as_mut_ptr(), states.as_mut_ptr())
    };
    assert_eq!(st, GssmStatus::Ok, "{}", last_error());
    assert!(sigma.iter().all(|s| *s > 0.0));
    assert!(states[..2].iter().all(|s| s.abs() < 1e-100));

    // Hide one cell.
    y[7] = f64::NAN;
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { gssm_data_new(y.as_ptr(), t_len, 2, &mut d) }, GssmStatus::Ok);
    let (mut tl, mut n) = (0, 0);
    assert_eq!(unsafe { gssm_data_dims(d, &mut tl, &mut n) }, GssmStatus::Ok);
    assert_eq!((tl, n), (t_len, 2));

    let mut ll = 0.0;
    let mut pw = vec![0.0; t_len];
    let st = unsafe { gssm_loglik_garch(m, d, &g.raw(), w.as_ptr(), &mut ll, pw.as_mut_ptr()) };
    assert_eq!(st, GssmStatus::Ok, "{}", last_error());
    assert!((pw.iter().sum::<f64>() - ll).abs() < 1e-9);

    let v = [2.0, 0.5, 0.5, 3.0];
    let mut ll_c = 0.0;
    let st = unsafe { gssm_loglik_constant(m, d, v.as_ptr(), w.as_ptr(), &mut ll_c, ptr::null_mut()) };
    assert_eq!(st, GssmStatus::Ok);
    assert!(ll_c.is_finite());

    let bad = Garch2 {
        beta: [0.9, 0.7],
        ..truth()
    };
    let st = unsafe { gssm_loglik_garch(m, d, &bad.raw(), w.as_ptr(), &mut ll, ptr::null_mut()) };
    assert_eq!(st, GssmStatus::InvalidArgument);
    unsafe {
        gssm_data_free(d);
        gssm_model_free(m);
    }
}

#[test]
fn waic_of_identical_draws() {
    let lp = [-1.0, -2.0, -1.0, -2.0, -1.0, -2.0];
    let (mut w, mut l, mut p) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { gssm_waic(lp.as_ptr(), 3, 2, &mut w, &mut l, &mut p) }, GssmStatus::Ok);
    assert_eq!((w, l, p), (-3.0, -3.0, 0.0));
    assert_eq!(unsafe { gssm_waic(lp.as_ptr(), 1, 6, &mut w, &mut l, &mut p) }, GssmStatus::Insufficient);
}

#[test]
fn short_fit_through_handles() {
    let m = model(2);
    let g = truth();
    let w = [0.1, 0.0, 0.0, 0.1];
    let t_len = 120;
    let mut y = vec![0.0; t_len * 2];
    let st = unsafe {
        gssm_simulate(m, &g.raw(), w.as_ptr(), t_len, 3, y.as_mut_ptr(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, GssmStatus::Ok);
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { gssm_data_new(y.as_ptr(), t_len, 2, &mut d) }, GssmStatus::Ok);

    let text = CString::new(
        "seed = 5\nmodel.dim = 2\nmcmc.n_chains = 2\nmcmc.burn_in = 60\nmcmc.thin = 1\nmcmc.n_keep = 40\nmcmc.path_draws = 10\n",
    )
    .unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { gssm_config_parse(text.as_ptr(), ptr::null(), &mut c) }, GssmStatus::Ok);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { gssm_fit(c, d, &mut f) }, GssmStatus::Ok, "{}", last_error());

    let draws = unsafe { gssm_fit_n_draws(f) };
    assert_eq!(draws, 40);
    assert_eq!(unsafe { gssm_fit_failures(f) }, 0);
    assert_eq!(unsafe { gssm_fit_is_garch(f) }, 1);
    let k = unsafe { gssm_fit_n_params(f) };
    let names: Vec<String> = (0..k)
        .map(|i| unsafe { CStr::from_ptr(gssm_fit_param_name(f, i)).to_string_lossy().into_owned() })
        .collect();
    assert_eq!(names[0], "alpha0[1]");
    assert!(names.contains(&"rho_obs".to_string()));
    assert!(unsafe { gssm_fit_param_name(f, k) }.is_null());

    let mut buf = vec![0.0; draws];
    assert_eq!(unsafe { gssm_fit_param_draws(f, 0, buf.as_mut_ptr(), draws) }, GssmStatus::Ok);
    assert!(buf.iter().all(|v| *v > 0.0));
    assert_eq!(unsafe { gssm_fit_param_draws(f, 0, buf.as_mut_ptr(), draws - 1) }, GssmStatus::Dimension);
    let (mut med, mut lo, mut hi) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { gssm_fit_param_summary(f, 0, &mut med, &mut lo, &mut hi) }, GssmStatus::Ok);
    assert!(lo <= med && med <= hi);
    let (mut wa, mut lp, mut pw) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { gssm_fit_waic(f, &mut wa, &mut lp, &mut pw) }, GssmStatus::Ok);
    assert!((wa - (lp - pw)).abs() < 1e-9);

    unsafe {
        gssm_fit_free(f);
        gssm_config_free(c);
        gssm_data_free(d);
        gssm_model_free(m);
    }
}

#[test]
fn version_is_semver() {
    let v = unsafe { CStr::from_ptr(gssm_version()) }.to_str().unwrap();
    assert_eq!(v.split('.').count(), 3);
}
