use std::path::PathBuf;
use std::process::Command;

fn header() -> (PathBuf, String) {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/adgt.h");
    let text = std::fs::read_to_string(&p).expect("header is generated by the build script");
    (p, text)
}

#[test]
fn declares_every_export() {
    let (_, h) = header();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20, "{exports:?}");
    for f in exports {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    for ty in ["typedef struct AdgtTopology AdgtTopology;", "typedef struct AdgtTrace AdgtTrace;", "ADGT_STATUS_OK = 0"] {
        assert!(h.contains(ty), "{ty}");
    }
    assert!(h.contains("#ifndef ADGT_H"));
}

#[test]
fn compiles_as_c() {
    let (p, _) = header();
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("use.c");
    std::fs::write(
        &c,
        format!(
            "#include \"{}\"\nint main(void) {{ AdgtTopology *t = 0; return adgt_topology_build(ADGT_TOPOLOGY_KIND_CYCLE, 4, 0.0, 1, &t) == ADGT_STATUS_OK ? 0 : 1; }}\n",
            p.display()
        ),
    )
    .unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&c).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(e) => eprintln!("skipping C syntax check: no cc ({e})"),
    }
}
