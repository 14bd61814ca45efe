//! Compiles and runs a C program against the generated header and the static
//! library. Skipped when no C compiler or static library is available.

use std::path::PathBuf;
use std::process::Command;

fn staticlib() -> Option<PathBuf> {
    // target/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libramsignal_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = staticlib() else {
        eprintln!("skipping: static library not found");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile_dir();
    let exe = dir.join("c_smoke");
    let compiled = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c_smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    match compiled {
        Err(_) => {
            eprintln!("skipping: no C compiler");
            return;
        }
        Ok(s) => assert!(s.success(), "C compilation failed"),
    }
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("unknown scheme 9"));
}

fn tempfile_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    std::fs::create_dir_all(&d).unwrap();
    d
}
