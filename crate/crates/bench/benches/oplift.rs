use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oplift::cones::{self, PolyhedralCone};
use oplift::cpmaps::{cp_extend, CpMap};
use oplift::lift::{factorization_from_lift, lift_from_factorization, polyhedral_factorization};
use oplift::opsys::min_membership;
use oplift::sample::{random_cp_map, random_herm, random_member};
use oplift::sos::{choi_example, monomials_of_degree, sos_certify};
use oplift::HermMatrix;

fn membership(c: &mut Criterion) {
    let cone = PolyhedralCone::square();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("min_membership");
    for s in [1, 2, 3] {
        let a = random_member(&mut rng, &cone, s);
        group.bench_function(format!("square/s{s}"), |b| {
            b.iter(|| min_membership(&cone, black_box(&a), 1e-8).unwrap())
        });
    }
    group.finish();
}

fn dual_description(c: &mut Criterion) {
    c.bench_function("dual_generators/square", |b| {
        let cone = PolyhedralCone::square();
        b.iter(|| cones::dual_generators(black_box(&cone)).unwrap())
    });
}

fn lifts(c: &mut Criterion) {
    let cone = PolyhedralCone::square();
    let f = polyhedral_factorization(&cone).unwrap();
    let mut group = c.benchmark_group("lift");
    group.sample_size(10);
    group.bench_function("from_factorization/square", |b| {
        b.iter(|| lift_from_factorization(black_box(&f), 2).unwrap())
    });
    let l = lift_from_factorization(&f, 2).unwrap();
    group.bench_function("to_factorization/square", |b| {
        b.iter(|| factorization_from_lift(black_box(&l), &cone, 2, 1e-8).unwrap())
    });
    group.finish();
}

fn sos(c: &mut Criterion) {
    let h = choi_example();
    let basis = monomials_of_degree(3, 1);
    let mut group = c.benchmark_group("sos_certify");
    group.sample_size(20);
    group.bench_function("choi", |b| b.iter(|| sos_certify(black_box(&h), Some(&basis), 1e-8).unwrap()));
    group.finish();
}

fn extension(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("cp_extend");
    group.sample_size(10);
    for (d, t) in [(2, 2), (3, 3), (4, 4)] {
        let psi = random_cp_map(&mut rng, d, t, 2);
        let mut spanning = vec![HermMatrix::identity(d)];
        spanning.extend((0..d).map(|_| random_herm(&mut rng, d)));
        let values = spanning.iter().map(|h| psi.eval_herm(h).unwrap()).collect();
        let phi = CpMap::on_subspace(d, spanning, values).unwrap();
        group.bench_function(format!("d{d}_t{t}"), |b| b.iter(|| cp_extend(black_box(&phi), 1e-8).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, membership, dual_description, lifts, sos, extension);
criterion_main!(benches);
