use std::ffi::CStr;
use std::ptr;

use ctxtrack_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        ctx_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn det(x: f64, y: f64) -> CtxDetection {
    CtxDetection {
        x,
        y,
        cov: [1.0, 0.0, 0.0, 1.0],
        area: f64::NAN,
    }
}

#[test]
fn contexts_answer_queries() {
    unsafe {
        let mut radar = ptr::null_mut();
        assert_eq!(ctx_context_new_radar(0.0, 0.0, 0.0, &mut radar), CtxStatus::Ok);
        let mut pd = -1.0;
        assert_eq!(ctx_context_pd(radar, 500.0, 0.0, &mut pd), CtxStatus::Ok);
        assert_eq!(pd, 0.4);
        assert_eq!(ctx_context_pd(radar, -500.0, 0.0, &mut pd), CtxStatus::Ok);
        assert_eq!(pd, 0.0);
        let mut lambda = 0.0;
        assert_eq!(ctx_context_clutter(radar, &det(500.0, 0.0), &mut lambda), CtxStatus::Ok);
        assert!((lambda - 1e-3 / 500.0).abs() < 1e-18);
        ctx_context_free(radar);

        let mut lidar = ptr::null_mut();
        assert_eq!(ctx_context_new_lidar(0.0, 0.0, 0.0, &mut lidar), CtxStatus::Ok);
        assert_eq!(ctx_context_clutter(lidar, &det(10.0, 0.0), &mut lambda), CtxStatus::InvalidArgument);
        assert!(last_error().contains("extent area"));
        let small = CtxDetection { area: 4.0, ..det(10.0, 0.0) };
        assert_eq!(ctx_context_clutter(lidar, &small, &mut lambda), CtxStatus::Ok);
        assert_eq!(lambda, 0.1);
        ctx_context_free(lidar);
    }
}

#[test]
fn invalid_arguments_are_reported() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(ctx_context_new_uniform(1.5, 1e-3, &mut ctx), CtxStatus::InvalidConfig);
        assert!(ctx.is_null());
        assert!(last_error().contains("pd"));
        assert_eq!(ctx_context_new_uniform(0.5, 1e-3, ptr::null_mut()), CtxStatus::NullPointer);
        let mut pd = 0.0;
        assert_eq!(ctx_context_pd(ptr::null(), 0.0, 0.0, &mut pd), CtxStatus::NullPointer);
        ctx_context_free(ptr::null_mut());
        ctx_gmphd_free(ptr::null_mut());

        assert_eq!(ctx_context_new_uniform(0.9, 1e-4, &mut ctx), CtxStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(ctx_gmphd_new(&mut f), CtxStatus::Ok);
        let bad = CtxDetection { cov: [1.0, 2.0, 2.0, 1.0], ..det(0.0, 0.0) };
        assert_eq!(ctx_gmphd_step(f, ctx, CtxSensorKind::Radar, 0.0, &bad, 1), CtxStatus::Numerical);
        assert_eq!(ctx_gmphd_step(f, ctx, CtxSensorKind::Radar, 5.0, ptr::null(), 0), CtxStatus::Ok);
        assert_eq!(ctx_gmphd_step(f, ctx, CtxSensorKind::Radar, 1.0, ptr::null(), 0), CtxStatus::TimeOrder);
        ctx_gmphd_free(f);
        ctx_context_free(ctx);
    }
}

#[test]
fn gmphd_tracks_a_target() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(ctx_context_new_uniform(1.0, 1e-5, &mut ctx), CtxStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(ctx_gmphd_new(&mut f), CtxStatus::Ok);
        for k in 0..20 {
            let t = k as f64;
            let dets = [det(10.0 + 2.0 * t, -5.0 + t), det(300.0, 300.0 - 3.0 * t)];
            assert_eq!(ctx_gmphd_step(f, ctx, CtxSensorKind::Lidar, t, dets.as_ptr(), 2), CtxStatus::Ok);
        }
        let mut n = 0;
        assert_eq!(ctx_gmphd_estimates(f, ptr::null_mut(), 0, &mut n), CtxStatus::BufferTooSmall);
        assert_eq!(n, 2);
        let mut out = [CtxEstimate::default(); 4];
        assert_eq!(ctx_gmphd_estimates(f, out.as_mut_ptr(), out.len(), &mut n), CtxStatus::Ok);
        let first = out[..n].iter().find(|e| e.mean[0] < 100.0).copied().unwrap();
        assert!((first.mean[0] - 48.0).abs() < 2.0 && (first.mean[2] - 14.0).abs() < 2.0);
        assert!((first.mean[1] - 2.0).abs() < 0.5 && (first.mean[3] - 1.0).abs() < 0.5);
        let mut w = 0.0;
        assert_eq!(ctx_gmphd_total_weight(f, &mut w), CtxStatus::Ok);
        assert!((w - 2.0).abs() < 0.2, "{w}");
        ctx_gmphd_free(f);
        ctx_context_free(ctx);
    }
}

#[test]
fn gospa_matches_hand_computation() {
    let truth = [0.0, 0.0, 100.0, 0.0];
    let est = [3.0, 4.0];
    let mut g = CtxGospa::default();
    unsafe {
        assert_eq!(ctx_gospa(truth.as_ptr(), 2, est.as_ptr(), 1, 30.0, 2.0, 2.0, &mut g), CtxStatus::Ok);
    }
    // 5² localization plus one missed target at c²/2.
    assert_eq!(g.localization, 25.0);
    assert_eq!(g.missed, 450.0);
    assert_eq!(g.false_estimates, 0.0);
    assert!((g.total - 475f64.sqrt()).abs() < 1e-12);
    unsafe {
        assert_eq!(ctx_gospa(ptr::null(), 0, ptr::null(), 0, 30.0, 2.0, 2.0, &mut g), CtxStatus::Ok);
        assert_eq!(g.total, 0.0);
        assert_eq!(ctx_gospa(truth.as_ptr(), 2, est.as_ptr(), 1, 30.0, 0.5, 2.0, &mut g), CtxStatus::InvalidConfig);
    }
}

/// The generated header compiles as C and C++ alongside a small client.
#[test]
fn header_is_valid_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let src = r#"
#include "ctxtrack.h"
int use(void) {
    CtxContext *ctx = 0;
    CtxDetection d = {1.0, 2.0, {1.0, 0.0, 0.0, 1.0}, 0.0};
    double pd = 0.0;
    if (ctx_context_new_uniform(0.5, 1e-3, &ctx) != CTX_STATUS_OK) return 1;
    ctx_context_pd(ctx, d.x, d.y, &pd);
    ctx_context_free(ctx);
    return pd > 0.0 ? 0 : 1;
}
"#;
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("client.c");
    std::fs::write(&file, src).unwrap();
    for (compiler, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let status = std::process::Command::new(compiler)
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(dir.join("include"))
            .arg(&file)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not available; skipping"),
        }
    }
}
