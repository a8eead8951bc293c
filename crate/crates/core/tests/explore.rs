use std::sync::Arc;

use minicudak_core::explore::{explore, oracle_race, ExploreError, Limits, Verdict};
use minicudak_core::frontend::compile;
use minicudak_core::machine::RunOptions;

fn program(kernel: &str, grid: u32, block: u32) -> Arc<minicudak_core::program::Program> {
    let src = format!(
        "{kernel}\nint main(void) {{ k<<<{grid}, {block}>>>(); cudaDeviceSynchronize(); return 0; }}\n"
    );
    Arc::new(compile(&src, "./k.cu").unwrap_or_else(|e| panic!("{e}")))
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

#[test]
fn two_threads_two_visible_steps_give_six_interleavings() {
    let p = program(
        "__global__ void k(void) { __shared__ int s[4]; s[threadIdx.x] = 1; s[threadIdx.x + 2] = 2; }",
        1,
        2,
    );
    let e = explore(p, RunOptions::default(), Limits::default()).unwrap();
    assert_eq!(e.interleavings, binomial(4, 2));
    assert_eq!(e.oracle, Verdict::NoRace);
    assert_eq!(e.detector, Verdict::NoRace);
}

#[test]
fn three_threads_one_step_each_give_six_interleavings() {
    let p = program("__global__ void k(void) { __shared__ int s[3]; s[threadIdx.x] = 1; }", 1, 3);
    let e = explore(p, RunOptions::default(), Limits::default()).unwrap();
    // 3! / (1! 1! 1!)
    assert_eq!(e.interleavings, 6);
}

#[test]
fn same_word_write_write_races() {
    let p = program(
        "__global__ void k(void) { __shared__ int s[1]; s[0] = threadIdx.x; }",
        1,
        2,
    );
    assert_eq!(oracle_race(p, 1000).unwrap(), Verdict::Race);
}

#[test]
fn barrier_orders_the_pair() {
    let p = program(
        "__global__ void k(void) { __shared__ int s[1]; int x; if (threadIdx.x == 0) s[0] = 1; __syncthreads(); if (threadIdx.x == 1) x = s[0]; }",
        1,
        2,
    );
    let e = explore(p, RunOptions::default(), Limits::default()).unwrap();
    assert_eq!(e.oracle, Verdict::NoRace);
    assert_eq!(e.detector, Verdict::NoRace);
}

#[test]
fn size_bounds_are_enforced() {
    let p = program("__global__ void k(void) { }", 1, 4);
    assert_eq!(
        explore(p, RunOptions::default(), Limits::default()).unwrap_err(),
        ExploreError::TooManyThreads(4, 3)
    );
    let p = program(
        "__global__ void k(void) { __shared__ int s[1]; int i; for (i = 0; i < 9; ++i) s[0] = i; }",
        1,
        1,
    );
    assert!(matches!(
        explore(p, RunOptions::default(), Limits::default()),
        Err(ExploreError::TooManyAccesses(_, 8))
    ));
    let p = program("__global__ void k(void) { __shared__ int s[3]; s[threadIdx.x] = 1; }", 1, 3);
    let tight = Limits {
        max_interleavings: 5,
        ..Limits::default()
    };
    assert_eq!(
        explore(p, RunOptions::default(), tight).unwrap_err(),
        ExploreError::TooManyInterleavings(5)
    );
}

#[test]
fn a_faulting_read_still_orders_against_the_write() {
    // the uninitialized read halts its thread only where it runs first
    let src = "__global__ void k(void) { extern __shared__ int d[]; int x; if (threadIdx.x == 0) d[0] = 1; else x = d[0]; }\n\
        int main(void) { k<<<1, 2, 4>>>(); cudaDeviceSynchronize(); return 0; }\n";
    let p = Arc::new(compile(src, "./k.cu").unwrap());
    let e = explore(p, RunOptions::default(), Limits::default()).unwrap();
    assert_eq!(e.interleavings, 2);
    assert_eq!(e.oracle, Verdict::Race);
    assert_eq!(e.detector, Verdict::Race);
}
