// ndarray-linalg is used backend-less; the system OpenBLAS bundles BLAS,
// CBLAS, and LAPACK symbols, so link it directly.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
