fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    std::fs::create_dir_all(format!("{dir}/include")).unwrap();
    let config = cbindgen::Config::from_root_or_default(&dir);
    cbindgen::Builder::new()
        .with_crate(&dir)
        .with_config(config)
        .generate()
        .expect("could not generate C header")
        .write_to_file(format!("{dir}/include/osr.h"));
}
