use std::fs;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let out_path = PathBuf::from(std::env::var("OUT_DIR").unwrap()).join("linkloss.h");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml is well-formed");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation succeeds")
        .write_to_file(&out_path);

    // Keep the committed header in step with the source; skipped silently on
    // read-only checkouts, where the OUT_DIR copy is still authoritative.
    let committed = crate_dir.join("include").join("linkloss.h");
    let fresh = fs::read(&out_path).unwrap();
    if fs::read(&committed).ok().as_deref() != Some(fresh.as_slice()) {
        let _ = fs::create_dir_all(committed.parent().unwrap());
        let _ = fs::write(&committed, &fresh);
    }

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
