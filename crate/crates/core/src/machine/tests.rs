use super::*;
use crate::frontend::compile;

fn run_src(src: &str) -> RunResult {
    run_with(src, RunOptions::default())
}

fn run_with(src: &str, options: RunOptions) -> RunResult {
    let program = compile(src, "./t.cu").unwrap_or_else(|e| panic!("{e}"));
    run(Arc::new(program), options)
}

#[test]
fn main_value_is_the_exit_code() {
    let r = run_src("int main(void) { return 7; }");
    assert_eq!(r.outcome, Outcome::Exited(7));
    assert_eq!(r.exit_code, 7);
    assert!(r.diagnostics.is_empty());
}

#[test]
fn host_arithmetic_and_printf() {
    let r = run_src(
        "#include <stdio.h>\nint f(int x) { return x * 2 + 1; }\n\
         int main(void) { int i, s = 0; for (i = 0; i < 5; ++i) s += f(i); printf(\"%d\\n\", s); return 0; }",
    );
    assert_eq!(r.stdout(), "25\n");
    assert_eq!(r.exit_code, 0);
}

#[test]
fn kernel_writes_are_copied_back() {
    let src = "#include <stdio.h>\n\
        __global__ void k(int* o) { o[threadIdx.x + blockIdx.x * blockDim.x] = threadIdx.x * 10 + blockIdx.x; }\n\
        int main(void) { int h[6], *d; int i;\n\
          cudaMalloc(&d, 6 * sizeof(int));\n\
          k<<<2, 3>>>(d);\n\
          cudaMemcpy(h, d, 6 * sizeof(int), cudaMemcpyDeviceToHost);\n\
          for (i = 0; i < 6; ++i) printf(\"%d \", h[i]);\n\
          cudaFree(d); return 0; }";
    for seed in 0..5 {
        let r = run_with(
            src,
            RunOptions {
                seed,
                ..RunOptions::default()
            },
        );
        assert_eq!(r.stdout(), "0 10 20 1 11 21 ", "seed {seed}");
        assert_eq!(r.exit_code, 0);
    }
}

#[test]
fn host_deref_of_device_pointer_is_a_boundary_error() {
    let r = run_src(
        "int main(void) { int *d; cudaMalloc(&d, 4); *d = 1; return 0; }",
    );
    assert!(r.has(Category::MemBoundary), "{}", r.stderr());
    assert_eq!(r.exit_code, 4);
    assert_eq!(r.outcome, Outcome::HostFault);
}

#[test]
fn step_limit_stops_a_spinning_host() {
    let r = run_with(
        "int main(void) { while (1) { } return 0; }",
        RunOptions {
            step_limit: 1000,
            ..RunOptions::default()
        },
    );
    assert_eq!(r.outcome, Outcome::StepLimit);
    assert_eq!(r.exit_code, 3);
    assert_eq!(r.stderr(), "cudak: Step limit of 1000 exceeded; execution stopped.\n");
}

#[test]
fn round_robin_is_deterministic() {
    let src = "__global__ void k(int* o) { o[threadIdx.x] = threadIdx.x; __syncthreads(); }\n\
        int main(void) { int h[4], *d; cudaMalloc(&d, 16); k<<<1, 4>>>(d);\n\
          cudaMemcpy(h, d, 16, cudaMemcpyDeviceToHost); return h[3]; }";
    let opts = RunOptions {
        policy: Policy::RoundRobin,
        trace: true,
        ..RunOptions::default()
    };
    let a = run_with(src, opts.clone());
    let b = run_with(src, opts);
    assert_eq!(a.exit_code, 3);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn barrier_trace_sweeps_up_then_down() {
    let src = "__global__ void k(void) { __syncthreads(); }\n\
        int main(void) { k<<<1, 3>>>(); cudaDeviceSynchronize(); return 0; }";
    let r = run_with(
        src,
        RunOptions {
            trace: true,
            ..RunOptions::default()
        },
    );
    let sync: Vec<&str> = r
        .trace
        .iter()
        .filter(|l| l.starts_with("sync"))
        .map(String::as_str)
        .collect();
    assert_eq!(
        sync,
        [
            "sync gid=1 bid=0 rule=up tid=1 token=1",
            "sync gid=1 bid=0 rule=up tid=2 token=1",
            "sync gid=1 bid=0 rule=turn tid=2 token=2",
            "sync gid=1 bid=0 rule=down tid=1 token=2",
            "sync gid=1 bid=0 rule=down tid=0 token=2",
            "sync gid=1 bid=0 rule=release tid=0 token=0",
        ]
    );
}

#[test]
fn divergent_barrier_deadlocks_with_a_report() {
    let src = "__global__ void k(void) { if (threadIdx.x == 0) __syncthreads(); }\n\
        int main(void) { k<<<1, 2>>>(); cudaDeviceSynchronize(); return 0; }";
    let r = run_src(src);
    assert!(matches!(r.outcome, Outcome::Stuck(_)));
    assert_eq!(r.exit_code, 3);
    assert!(r.has(Category::Deadlock));
    let report = r.report.expect("stuck runs carry a report");
    assert!(report.contains("barrier deadlock in grid 1 block 0"), "{report}");
    assert!(report.contains("memory:"));
}
