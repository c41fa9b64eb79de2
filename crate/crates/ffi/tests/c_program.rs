//! Compiles a small C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libptwell_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "ptwell.h"
int main(void) {
    PtwSpectrum *s = NULL;
    if (ptw_spectrum_scan(1.0, 0.0, 1.0, 4.0, &s) != PtwStatus_Ok) return 1;
    size_t n = ptw_spectrum_len(s);
    PtwRoot r;
    if (ptw_spectrum_root(s, 0, &r) != PtwStatus_Ok) return 2;
    printf("%zu %.12f\n", n, r.r);
    ptw_spectrum_free(s);
    if (ptw_spectrum_scan(-1.0, 0.0, 1.0, 0.0, &s) != PtwStatus_InvalidArgument) return 3;
    if (ptw_last_error_message() == NULL) return 4;
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let st = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    // Hermitian roots R_n = n pi / 4 below 4
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "5 0.785398163397");
}
