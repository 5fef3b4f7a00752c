use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uturn::assertions::Assertion;
use uturn::axioms::verify_schema_validity;
use uturn::exec::Strategy;
use uturn::gen::{random_atom, random_ok_assertion, ProgramShape};
use uturn::lang::{parse_assertion, parse_program, ACmd};
use uturn::semantics::bwsem_with;
use uturn::state::{StateSet, Universe};

const STRATEGIES: [(&str, Strategy); 2] = [("sequential", Strategy::Sequential), ("parallel", Strategy::Parallel)];

// Backward semantics enumerates every state and runs it forward, one
// independent job per state.
fn backward(c: &mut Criterion) {
    let p = parse_program("vars x y; y := 0; while (x > 0) { x := x - 1; y := y + 1 }; if (y = 7) { error() } else { skip }")
        .unwrap();
    let mut group = c.benchmark_group("bwsem");
    for m in [32, 64] {
        let u = Universe::new(m, p.vars.clone()).unwrap();
        let target = uturn::assertions::extension(&parse_assertion("er: true", u.vars()).unwrap(), &u).unwrap();
        for (name, strategy) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, m), &target, |b, t: &StateSet| {
                b.iter(|| bwsem_with(black_box(&p.body), t, &u, strategy).unwrap())
            });
        }
    }
    group.finish();
}

fn schema_batch(c: &mut Criterion) {
    let u = Universe::new(8, vec!["x".into(), "y".into()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<(ACmd, Assertion, Assertion)> = (0..64)
        .map(|_| {
            let c = random_atom(&mut rng, &u, &ProgramShape::default());
            (c, random_ok_assertion(&mut rng, &u), random_ok_assertion(&mut rng, &u))
        })
        .collect();
    let mut group = c.benchmark_group("axiom_schema");
    for (name, strategy) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| strategy.map(&samples, |(c, p, q)| verify_schema_validity(c, p, q, &u).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, backward, schema_batch);
criterion_main!(benches);
