fn main() {
    // The `lapack` crate only declares the Fortran symbols; the system
    // OpenBLAS (which bundles LAPACK on Debian-family images) provides them.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
