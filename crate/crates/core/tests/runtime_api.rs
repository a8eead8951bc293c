use std::sync::Arc;

use minicudak_core::deadlock::StuckReport;
use minicudak_core::diag::Category;
use minicudak_core::frontend::compile;
use minicudak_core::machine::{run, Outcome, RunOptions, RunResult};
use minicudak_core::runtime_api::{ArchParams, ErrorCode};

fn exec_with(src: &str, options: RunOptions) -> RunResult {
    let program = compile(src, "./api.cu").unwrap_or_else(|e| panic!("{e}"));
    run(Arc::new(program), options)
}

fn exec(src: &str) -> RunResult {
    exec_with(src, RunOptions::default())
}

fn codes(r: &RunResult) -> Vec<ErrorCode> {
    r.api_log.iter().map(|a| a.code).collect()
}

#[test]
fn last_error_latches_until_read() {
    let r = exec(
        "#include <stdio.h>\nint main(void) { cudaStream_t bogus = 42; int *d;\n\
           cudaStreamSynchronize(bogus); cudaMalloc(&d, 4);\n\
           printf(\"%d %d\\n\", cudaGetLastError(), cudaGetLastError()); return 0; }",
    );
    let code = ErrorCode::InvalidResourceHandle.code();
    assert_eq!(r.stdout(), format!("{code} 0\n"));
    assert_eq!(
        r.stderr(),
        "cudak: CUDA API error: cudaStreamSynchronize returned cudaErrorInvalidResourceHandle (invalid resource handle) at ./api.cu:3.\n"
    );
}

#[test]
fn error_strings() {
    let r = exec(
        "#include <stdio.h>\nint main(void) { printf(\"%s|%s\\n\", cudaGetErrorString(cudaSuccess), cudaGetErrorString(cudaErrorInvalidValue)); return 0; }",
    );
    assert_eq!(r.stdout(), "no error|invalid argument\n");
}

#[test]
fn freeing_host_memory_is_an_api_error() {
    let r = exec("int main(void) { int x = 0; cudaFree(&x); return x; }");
    assert!(r.has(Category::ApiError), "{}", r.stderr());
    assert!(codes(&r).iter().any(|c| *c != ErrorCode::Success));
}

#[test]
fn queries_report_not_ready_without_a_diagnostic() {
    let r = exec(
        "#include <stdio.h>\n__global__ void k(void) { int i; for (i = 0; i < 50; ++i) { } }\n\
         int main(void) { cudaStream_t s; cudaEvent_t e; int busy, done;\n\
           cudaStreamCreate(&s); cudaEventCreate(&e);\n\
           k<<<1, 4, 0, s>>>(); cudaEventRecord(e, s);\n\
           busy = cudaEventQuery(e);\n\
           cudaStreamSynchronize(s);\n\
           done = cudaEventQuery(e) + cudaStreamQuery(s);\n\
           printf(\"%d %d\\n\", busy == cudaSuccess || busy == cudaErrorNotReady, done); return 0; }",
    );
    assert_eq!(r.stdout(), "1 0\n");
    assert!(r.diagnostics.is_empty(), "{}", r.stderr());
}

#[test]
fn elapsed_time_needs_recorded_events() {
    let r = exec(
        "#include <stdio.h>\nint main(void) { cudaEvent_t a, b; float ms = -1;\n\
           cudaEventCreate(&a); cudaEventCreate(&b);\n\
           cudaEventRecord(a, 0); cudaEventRecord(b, 0); cudaEventSynchronize(b);\n\
           printf(\"%d %d\\n\", cudaEventElapsedTime(&ms, a, b), ms >= 0); return 0; }",
    );
    assert_eq!(r.stdout(), "0 1\n");
}

#[test]
fn attributes_follow_the_architecture_file() {
    let src = "#include <stdio.h>\nint main(void) { int w, m, d, rt;\n\
        cudaDeviceGetAttribute(&w, cudaDevAttrWarpSize, 0);\n\
        cudaDeviceGetAttribute(&m, cudaDevAttrMaxThreadsPerBlock, 0);\n\
        cudaDriverGetVersion(&d); cudaRuntimeGetVersion(&rt);\n\
        printf(\"%d %d %d %d\\n\", w, m, d, rt); return 0; }";
    let arch = ArchParams::parse("warpSize = 16\nmaxThreadsPerBlock = 64\ndriverVersion = 9000\n").unwrap();
    let r = exec_with(
        src,
        RunOptions {
            arch,
            ..RunOptions::default()
        },
    );
    let rt = ArchParams::default().runtime_version;
    assert_eq!(r.stdout(), format!("16 64 9000 {rt}\n"));
}

#[test]
fn launch_limits_follow_the_architecture() {
    let src = "__global__ void k(void) { }\nint main(void) { k<<<1, 65>>>(); cudaDeviceSynchronize(); return cudaGetLastError(); }";
    let arch = ArchParams::parse("maxThreadsPerBlock = 64").unwrap();
    let r = exec_with(
        src,
        RunOptions {
            arch,
            ..RunOptions::default()
        },
    );
    assert!(r.has(Category::ApiError));
    assert_eq!(r.outcome, Outcome::Exited(ErrorCode::InvalidConfiguration.code() as i32));
    assert!(exec(src).diagnostics.is_empty());
}

#[test]
fn launch_on_a_destroyed_stream() {
    let r = exec(
        "__global__ void k(void) { }\nint main(void) { cudaStream_t s; cudaStreamCreate(&s); cudaStreamDestroy(s);\n\
         k<<<1, 1, 0, s>>>(); return 0; }",
    );
    assert!(r.stderr().contains("cudaErrorInvalidResourceHandle"), "{}", r.stderr());
}

#[test]
fn memset_fills_device_memory() {
    let r = exec(
        "#include <stdio.h>\nint main(void) { char h[4]; char *d; int i;\n\
           cudaMalloc(&d, 4); cudaMemset(d, 42, 4);\n\
           cudaMemcpy(h, d, 4, cudaMemcpyDeviceToHost);\n\
           for (i = 0; i < 4; ++i) printf(\"%c\", h[i]); return 0; }",
    );
    assert_eq!(r.stdout(), "****");
}

#[test]
fn device_to_device_copy() {
    let r = exec(
        "#include <stdio.h>\nint main(void) { int h = 5, out = 0, *a, *b;\n\
           cudaMalloc(&a, 4); cudaMalloc(&b, 4);\n\
           cudaMemcpy(a, &h, 4, cudaMemcpyHostToDevice);\n\
           cudaMemcpy(b, a, 4, cudaMemcpyDeviceToDevice);\n\
           cudaMemcpy(&out, b, 4, cudaMemcpyDeviceToHost);\n\
           printf(\"%d\\n\", out); return 0; }",
    );
    assert_eq!(r.stdout(), "5\n");
}

#[test]
fn oversized_copies_are_rejected() {
    let r = exec(
        "int main(void) { int h[2] = {1, 2}, *d; cudaMalloc(&d, 4);\n\
           return cudaMemcpy(d, h, 8, cudaMemcpyHostToDevice); }",
    );
    assert_eq!(r.outcome, Outcome::Exited(ErrorCode::InvalidValue.code() as i32));
}

#[test]
fn stuck_reports_name_their_cause() {
    let r = exec(
        "__global__ void k(void) { if (threadIdx.x < 2) __syncthreads(); }\n\
         int main(void) { k<<<1, 4>>>(); cudaDeviceSynchronize(); return 0; }",
    );
    let Outcome::Stuck(reports) = &r.outcome else {
        panic!("{:?}", r.outcome)
    };
    assert!(reports.contains(&StuckReport::BarrierDeadlock {
        gid: 1,
        bid: 0,
        waiting: vec![0, 1],
        missing: vec![],
    }));
    assert!(reports.iter().any(|x| matches!(x, StuckReport::HostHang { .. })));
    assert_eq!(r.stderr(), "cudak: Detected a deadlock caused by misplaced __syncthreads().\n");
}

#[test]
fn host_exit_with_device_work_stuck_is_still_a_deadlock() {
    let r = exec(
        "__global__ void k(void) { if (threadIdx.x == 1) __syncthreads(); }\n\
         int main(void) { k<<<1, 2>>>(); return 0; }",
    );
    assert!(matches!(r.outcome, Outcome::Stuck(_)), "{:?}", r.outcome);
    assert_eq!(r.exit_code, 3);
}
