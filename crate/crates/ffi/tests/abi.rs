use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use coherent_torus_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ct_last_error_message()) }.to_string_lossy().into_owned()
}

fn grid(n: usize, k: usize, h: f64) -> *mut CtGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ct_grid_new(n, k, 0, h, &mut g) }, CtStatus::Ok);
    g
}

#[test]
fn grid_and_field_round_trip() {
    unsafe {
        let g = grid(1, 3, 0.5);
        let len = ct_grid_num_modes(g);
        assert_eq!(len, 7);
        let mut mode = [0i64];
        assert_eq!(ct_grid_mode(g, 0, mode.as_mut_ptr()), CtStatus::Ok);
        assert_eq!(mode, [-3]);

        let re: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let im: Vec<f64> = (0..len).map(|i| -(i as f64)).collect();
        let mut f = ptr::null_mut();
        assert_eq!(ct_field_new(g, re.as_ptr(), im.as_ptr(), len, &mut f), CtStatus::Ok);
        let (mut re2, mut im2) = (vec![0.0; len], vec![0.0; len]);
        assert_eq!(ct_field_coeffs(f, re2.as_mut_ptr(), im2.as_mut_ptr(), len), CtStatus::Ok);
        assert_eq!((&re, &im), (&re2, &im2));
        assert_eq!(ct_field_coeffs(f, re2.as_mut_ptr(), im2.as_mut_ptr(), 3), CtStatus::Invalid);
        assert!(last_error().contains("size mismatch"));

        let mut wave = ptr::null_mut();
        assert_eq!(ct_field_plane_wave(g, [1i64].as_ptr(), &mut wave), CtStatus::Ok);
        let mut norm = 0.0;
        assert_eq!(ct_field_norm(wave, &mut norm), CtStatus::Ok);
        assert!((norm - (2.0 * PI).sqrt()).abs() < 1e-15);
        let (mut ip_re, mut ip_im) = (0.0, 0.0);
        assert_eq!(ct_inner_product(wave, wave, &mut ip_re, &mut ip_im), CtStatus::Ok);
        assert!((ip_re - 2.0 * PI).abs() < 1e-14 && ip_im == 0.0);

        ct_field_free(f);
        ct_field_free(wave);
        ct_grid_free(g);
    }
}

#[test]
fn frame_quantities() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(ct_alpha(1, 1.0, &mut v), CtStatus::Ok);
        assert!((v - 0.299_655_737_576_611_9).abs() < 1e-15);
        assert_eq!(ct_frame_defect(1, 0.5, &mut v), CtStatus::Ok);
        assert!((v - 5.350_575_982_148_486e-9).abs() < 1e-20);
        assert_eq!(ct_frame_constant(1, 0.5, &mut v), CtStatus::Ok);
        assert!((v - 1.0 - 5.350_575_982_148_486e-9).abs() < 1e-15);

        let g = grid(1, 16, 0.5);
        assert_eq!(ct_frame_multiplier(g, [0i64].as_ptr(), f64::INFINITY, &mut v), CtStatus::Ok);
        assert!((v - 1.0).abs() < 1e-8);
        let mut wave = ptr::null_mut();
        assert_eq!(ct_field_plane_wave(g, [1i64].as_ptr(), &mut wave), CtStatus::Ok);
        assert_eq!(ct_truncation_radius(wave, 1e-8, &mut v), CtStatus::Ok);
        assert_eq!(v, 3.0);
        assert_eq!(ct_reconstruct_error(wave, 3.0, &mut v), CtStatus::Ok);
        assert!(v <= 1e-8);
        assert_eq!(ct_truncation_radius(wave, 1e-10, &mut v), CtStatus::Unattainable);
        assert!(last_error().contains("c~(h)"));

        let mut phi = ptr::null_mut();
        assert_eq!(ct_coherent_state(g, [0.5f64].as_ptr(), [2i64].as_ptr(), &mut phi), CtStatus::Ok);
        assert_eq!(ct_field_norm(phi, &mut v), CtStatus::Ok);
        assert!(v > 0.0);
        assert_eq!(ct_coherent_state(g, [0.5f64].as_ptr(), [15i64].as_ptr(), &mut phi), CtStatus::Invalid);
        ct_field_free(phi);
        ct_field_free(wave);
        ct_grid_free(g);
    }
}

#[test]
fn spectrum_and_propagation() {
    unsafe {
        let g = grid(1, 64, 0.125);
        let name = CString::new("pendulum").unwrap();
        let mut b = ptr::null_mut();
        assert_eq!(ct_symbol_builtin(name.as_ptr(), 1, &mut b), CtStatus::Ok);
        let mut a = ptr::null_mut();
        assert_eq!(ct_operator_new(b, g, false, &mut a), CtStatus::Ok);
        assert!(ct_operator_is_hermitian(a));
        let mut s = ptr::null_mut();
        assert_eq!(ct_spectrum_new(a, &mut s), CtStatus::Ok);
        let len = ct_spectrum_len(s);
        assert_eq!(len, 129);
        let mut values = vec![0.0; len];
        assert_eq!(ct_spectrum_eigenvalues(s, values.as_mut_ptr(), len), CtStatus::Ok);
        assert!((values[0] - 0.062_007_811_418_213_1).abs() < 1e-11);
        let mut count = 0usize;
        assert_eq!(ct_count_states(s, 1.0, &mut count), CtStatus::Ok);
        assert_eq!(count, values.iter().filter(|&&e| e <= 1.0).count());

        let mut psi0 = ptr::null_mut();
        assert_eq!(ct_spectrum_eigenfunction(s, 0, &mut psi0), CtStatus::Ok);
        let mut apsi = ptr::null_mut();
        assert_eq!(ct_operator_apply(a, psi0, &mut apsi), CtStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(ct_inner_product(psi0, apsi, &mut re, &mut im), CtStatus::Ok);
        assert!((re - values[0]).abs() < 1e-12);

        let t = 2.0;
        let mut evolved = ptr::null_mut();
        assert_eq!(ct_propagate(s, [0usize].as_ptr(), [1.0].as_ptr(), [0.0].as_ptr(), 1, t, &mut evolved), CtStatus::Ok);
        assert_eq!(ct_inner_product(psi0, evolved, &mut re, &mut im), CtStatus::Ok);
        let phase = -values[0] * t / 0.125;
        assert!((re - phase.cos()).abs() < 1e-12 && (im - phase.sin()).abs() < 1e-12);
        assert_eq!(ct_propagate(s, [0usize, 0].as_ptr(), [1.0, 1.0].as_ptr(), [0.0, 0.0].as_ptr(), 2, t, &mut evolved), CtStatus::Invalid);

        for p in [psi0, apsi, evolved] {
            ct_field_free(p);
        }
        ct_spectrum_free(s);
        ct_operator_free(a);
        ct_symbol_free(b);
        ct_grid_free(g);
    }
}

#[test]
fn symbols_from_json_and_hermiticity() {
    unsafe {
        let json = CString::new(
            r#"{"n": 1, "order": 2, "terms": [{"xi": "0.5*xi^2"},
                {"x": [{"mode": [1], "re": 0.5}, {"mode": [-1], "re": 0.5}], "xi": "xi"}]}"#,
        )
        .unwrap();
        let mut b = ptr::null_mut();
        assert_eq!(ct_symbol_from_json(json.as_ptr(), &mut b), CtStatus::Ok);
        let g = grid(1, 8, 0.5);
        let (mut kn, mut w) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ct_operator_new(b, g, false, &mut kn), CtStatus::Ok);
        assert_eq!(ct_operator_new(b, g, true, &mut w), CtStatus::Ok);
        assert!(!ct_operator_is_hermitian(kn));
        assert!(ct_operator_is_hermitian(w));
        let mut s = ptr::null_mut();
        assert_eq!(ct_spectrum_new(kn, &mut s), CtStatus::Symbol);
        assert!(s.is_null());
        assert_eq!(ct_spectrum_new(w, &mut s), CtStatus::Ok);
        ct_spectrum_free(s);
        ct_operator_free(kn);
        ct_operator_free(w);
        ct_symbol_free(b);
        ct_grid_free(g);

        let bad = CString::new(r#"{"n": 1}"#).unwrap();
        let mut b = ptr::null_mut();
        assert_eq!(ct_symbol_from_json(bad.as_ptr(), &mut b), CtStatus::Symbol);
        let unknown = CString::new("harmonic").unwrap();
        assert_ne!(ct_symbol_builtin(unknown.as_ptr(), 1, &mut b), CtStatus::Ok);
        assert!(b.is_null());
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(ct_grid_new(5, 4, 0, 0.5, &mut g), CtStatus::Invalid);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ct_grid_new(1, 4, 0, 0.5, ptr::null_mut()), CtStatus::NullPointer);
        assert!(last_error().contains("out_grid"));
        let mut v = 0.0;
        assert_eq!(ct_field_norm(ptr::null(), &mut v), CtStatus::NullPointer);
        assert_eq!(ct_symbol_builtin(ptr::null(), 1, &mut ptr::null_mut()), CtStatus::NullPointer);
        assert_eq!(ct_grid_num_modes(ptr::null()), 0);
        assert_eq!(ct_spectrum_len(ptr::null()), 0);
        assert!(!ct_operator_is_hermitian(ptr::null()));
        ct_grid_free(ptr::null_mut());
        ct_field_free(ptr::null_mut());
        assert!(!CStr::from_ptr(ct_version()).to_bytes().is_empty());
    }
}

fn target_dir() -> PathBuf {
    // CARGO_TARGET_TMPDIR is <target>/tmp.
    Path::new(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib_dir = ["debug", "release"]
        .iter()
        .map(|p| target_dir().join(p))
        .find(|d| d.join("libcoherent_torus_ffi.a").exists())
        .expect("static library is built alongside the tests");
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <math.h>
#include "coherent_torus.h"

int main(void) {
    CtGrid *grid = NULL;
    if (ct_grid_new(1, 16, 0, 0.5, &grid) != CT_STATUS_OK) return 10;
    int64_t k[1] = {1};
    CtField *wave = NULL;
    if (ct_field_plane_wave(grid, k, &wave) != CT_STATUS_OK) return 11;
    double radius = 0.0;
    if (ct_truncation_radius(wave, 1e-8, &radius) != CT_STATUS_OK) return 12;
    if (radius != 3.0) return 13;
    CtStatus s = ct_truncation_radius(wave, 1e-12, &radius);
    if (s != CT_STATUS_UNATTAINABLE) return 14;
    printf("%s\n", ct_last_error_message());
    CtGrid *bad = NULL;
    if (ct_grid_new(1, 4, 0, -1.0, &bad) != CT_STATUS_INVALID || bad != NULL) return 15;
    ct_field_free(wave);
    ct_grid_free(grid);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = work.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(lib_dir.join("libcoherent_torus_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("unattainable"));
}
