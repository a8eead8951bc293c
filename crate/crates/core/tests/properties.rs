use std::path::{Path, PathBuf};
use std::sync::Arc;

use proptest::prelude::*;

use minicudak_core::diag::Category;
use minicudak_core::frontend::{compile, compile_file, parse, pretty, tokenize};
use minicudak_core::machine::{run, Configuration, Outcome, Policy, RunOptions, Transition};
use minicudak_core::program::Program;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_programs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cu"))
        .filter(|p| compile_file(&p.display().to_string()).is_ok())
        .collect();
    v.sort();
    v
}

fn load(name: &str) -> Arc<Program> {
    Arc::new(compile_file(&corpus().join(name).display().to_string()).unwrap())
}

fn source(src: &str) -> Arc<Program> {
    Arc::new(compile(src, "./p.cu").unwrap_or_else(|e| panic!("{e}\n{src}")))
}

fn seeded(seed: u64) -> RunOptions {
    RunOptions {
        seed,
        ..RunOptions::default()
    }
}

#[test]
fn pretty_printing_round_trips_every_corpus_program() {
    for path in corpus_programs() {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(&path).unwrap();
        let once = pretty(&parse(&tokenize(&text, &name).unwrap(), &name).unwrap());
        let twice = pretty(&parse(&tokenize(&once, &name).unwrap(), &name).unwrap());
        assert_eq!(once, twice, "{name}");
        let a = run(Arc::new(compile(&text, &name).unwrap()), RunOptions::default());
        let b = run(Arc::new(compile(&once, &name).unwrap()), RunOptions::default());
        assert_eq!(a.output, b.output, "{name}");
        assert_eq!(a.exit_code, b.exit_code, "{name}");
    }
}

#[test]
fn disabling_race_checks_only_drops_race_diagnostics() {
    for path in corpus_programs() {
        let p = Arc::new(compile_file(&path.display().to_string()).unwrap());
        let on = run(p.clone(), RunOptions::default());
        let off = run(
            p,
            RunOptions {
                race_check: false,
                ..RunOptions::default()
            },
        );
        assert_eq!(on.output, off.output, "{}", path.display());
        let kept: Vec<_> = on.diagnostics.iter().filter(|d| d.category != Category::Race).collect();
        assert_eq!(kept, off.diagnostics.iter().collect::<Vec<_>>(), "{}", path.display());
        if on.diagnostics.len() == kept.len() {
            assert_eq!(on.exit_code, off.exit_code, "{}", path.display());
        }
    }
}

fn barrier_program(n: u32) -> Arc<Program> {
    source(&format!(
        "__global__ void k(int *o) {{ __syncthreads(); o[threadIdx.x] = threadIdx.x; }}\n\
         int main(void) {{ int *d; cudaMalloc(&d, {n} * sizeof(int)); k<<<1, {n}>>>(d); cudaDeviceSynchronize(); return 0; }}\n"
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_same_result(seed in any::<u64>(), name in prop::sample::select(vec!["sum.cu", "sum_race.cu", "sum_deadlock.cu", "stream_event_wait.cu"])) {
        let p = load(name);
        let a = run(p.clone(), RunOptions { trace: true, ..seeded(seed) });
        let b = run(p, RunOptions { trace: true, ..seeded(seed) });
        prop_assert_eq!(&a.output, &b.output);
        prop_assert_eq!(a.stderr(), b.stderr());
        prop_assert_eq!(a.exit_code, b.exit_code);
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn barrier_releases_everyone_with_one_token_holder(n in 1u32..48, seed in any::<u64>(), rr in any::<bool>()) {
        let options = RunOptions {
            policy: if rr { Policy::RoundRobin } else { Policy::SeededRandom },
            ..seeded(seed)
        };
        let mut cfg = Configuration::new(barrier_program(n), options);
        let mut moves = 0u64;
        loop {
            let enabled = cfg.enabled();
            if enabled.is_empty() {
                break;
            }
            let t = cfg.choose(&enabled);
            cfg.step(t);
            if matches!(t, Transition::Barrier { .. }) {
                moves += 1;
            }
            for g in cfg.grids.values() {
                let holders = g.threads.iter().filter(|th| th.barrier.token().is_some_and(|k| k > 0)).count();
                prop_assert!(holders <= 1);
            }
        }
        let r = cfg.finish();
        prop_assert_eq!(r.outcome, Outcome::Exited(0));
        prop_assert_eq!(moves, 2 * u64::from(n));
    }

    #[test]
    fn barrier_predicates_match_direct_computation(preds in prop::collection::vec(-3i32..4, 1..24), seed in any::<u64>()) {
        let n = preds.len();
        let list = preds.iter().map(i32::to_string).collect::<Vec<_>>().join(", ");
        let p = source(&format!(
            "#include <stdio.h>\n__global__ void k(int *p, int *o) {{ int t = threadIdx.x;\n\
               o[3 * t] = __syncthreads_count(p[t]); o[3 * t + 1] = __syncthreads_and(p[t]); o[3 * t + 2] = __syncthreads_or(p[t]); }}\n\
             int main(void) {{ int p[{n}] = {{ {list} }}, o[{m}], *dp, *dout, i;\n\
               cudaMalloc(&dp, sizeof(p)); cudaMalloc(&dout, sizeof(o));\n\
               cudaMemcpy(dp, p, sizeof(p), cudaMemcpyHostToDevice); k<<<1, {n}>>>(dp, dout);\n\
               cudaMemcpy(o, dout, sizeof(o), cudaMemcpyDeviceToHost);\n\
               for (i = 0; i < {m}; ++i) printf(\"%d \", o[i]); return 0; }}\n",
            m = 3 * n
        ));
        let r = run(p, seeded(seed));
        let count = preds.iter().filter(|&&x| x != 0).count();
        let want = format!("{count} {} {} ", u8::from(count == n), u8::from(count > 0)).repeat(n);
        prop_assert_eq!(r.stdout(), want);
    }

    #[test]
    fn unconditional_races_are_schedule_insensitive(seed in any::<u64>()) {
        let racy = run(load("sum_race.cu"), seeded(seed));
        prop_assert!(racy.has(Category::Race));
        let clean = run(load("sum.cu"), seeded(seed));
        prop_assert!(!clean.has(Category::Race));
    }

    #[test]
    fn different_blocks_never_race(seed in any::<u64>(), blocks in 2u32..6) {
        let p = source(&format!(
            "__global__ void k(void) {{ __shared__ int s[1]; s[0] = blockIdx.x; }}\n\
             int main(void) {{ k<<<{blocks}, 1>>>(); cudaDeviceSynchronize(); return 0; }}\n"
        ));
        let r = run(p, seeded(seed));
        prop_assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn one_stream_completes_in_enqueue_order(seed in any::<u64>(), items in 1usize..6) {
        let body: String = (0..items).map(|i| if i % 2 == 0 { "k<<<1, 2, 0, s>>>(d); ".to_string() } else { "cudaMemcpyAsync(&h, d, 4, cudaMemcpyDeviceToHost, s); ".to_string() }).collect();
        let p = source(&format!(
            "__global__ void k(int *d) {{ if (threadIdx.x == 0) *d = 3; }}\n\
             int main(void) {{ int *d, h = 1; cudaStream_t s; cudaStreamCreate(&s); cudaMalloc(&d, 4);\n\
               cudaMemcpy(d, &h, 4, cudaMemcpyHostToDevice); {body} cudaStreamSynchronize(s); return 0; }}\n"
        ));
        let r = run(p, seeded(seed));
        let order: Vec<u64> = r.completions.iter().filter(|c| c.sid == 1).map(|c| c.item).collect();
        prop_assert_eq!(order.len(), items);
        prop_assert!(order.windows(2).all(|w| w[0] < w[1]));
    }
}
