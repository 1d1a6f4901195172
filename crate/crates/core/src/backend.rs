//! LAPACK/BLAS backend setup.

use std::sync::Once;

extern "C" {
    fn openblas_set_num_threads(num_threads: core::ffi::c_int);
}

/// Force serial OpenBLAS kernels.
///
/// The threaded `dgetrf`/`dgemm` paths recurse with multi-megabyte stack
/// frames and overflow the 2 MiB default of spawned threads; serial kernels
/// also make reductions deterministic, which the CSV/JSON reproducibility
/// contract relies on. Called once before any factorization.
pub(crate) fn ensure_serial_blas() {
    static INIT: Once = Once::new();
    INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}
