use std::env;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();

    // Regenerate the C header next to the sources. Skip on docs builds,
    // which cannot write outside OUT_DIR.
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    if env::var("DOCS_RS").as_deref() == Ok("1") {
        return;
    }
    let config = cbindgen::Config::from_file(format!("{crate_dir}/cbindgen.toml"))
        .expect("read cbindgen.toml");
    match cbindgen::Builder::new()
        .with_config(config)
        .with_crate(&crate_dir)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/vql.h"));
        }
        Err(e) => println!("cargo:warning=header generation skipped: {e}"),
    }
}
