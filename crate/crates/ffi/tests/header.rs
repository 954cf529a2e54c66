use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/unfitted.h");

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(HEADER).unwrap();
    for name in [
        "uf_config_new",
        "uf_config_set",
        "uf_study_run",
        "uf_report_level",
        "uf_report_eoc",
        "uf_mesh_elements",
        "uf_last_error_message",
        "typedef struct UfReport UfReport",
        "UF_STATUS_STUDY_INCOMPLETE = 6",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"unfitted.h\"\n\
         int main(void) {\n\
           UfConfig *c = uf_config_new();\n\
           UfStatus s = uf_config_set(c, \"order\", \"3\");\n\
           UfLevel l; (void)l; uf_config_free(c);\n\
           return s == UF_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = Path::new(HEADER).parent().unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn which(name: &str) -> Result<std::path::PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|p| p.join(name)).find(|p| p.is_file()))
        .ok_or(())
}
