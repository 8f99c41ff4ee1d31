//! PAM against exhaustive search over all medoid combinations, plus the
//! two-group synthetic font instance.

use cfkit::cluster::{embed, profile_from_images, select_basis, DistanceEmbedding};
use cfkit::model::{ModelDims, ToyModelParams};
use cfkit::raster::{builtin_skeletons, render_glyph, SyntheticFontSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn assignment_cost(points: &[Vec<f64>], medoids: &[usize]) -> f64 {
    points
        .iter()
        .map(|p| {
            medoids
                .iter()
                .map(|&m| euclidean(p, &points[m]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// All size-m index combinations of 0..n.
fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        out.push(combo.clone());
        // Advance to the next combination.
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - m {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in i + 1..m {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

fn exhaustive_optimum(points: &[Vec<f64>], m: usize) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for combo in combinations(points.len(), m) {
        let cost = assignment_cost(points, &combo);
        let better = match &best {
            None => true,
            Some((_, c)) => cost < *c,
        };
        if better {
            best = Some((combo, cost));
        }
    }
    best.expect("at least one combination")
}

fn embeddings_of(points: &[Vec<f64>]) -> Vec<DistanceEmbedding> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| DistanceEmbedding {
            font_id: format!("f{i}"),
            distances: vec![],
            embedding: p.clone(),
        })
        .collect()
}

#[test]
fn pam_is_within_5_percent_of_the_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    for instance in 0..50 {
        let n = rng.gen_range(4..=10);
        let m = rng.gen_range(1..=3.min(n));
        let dim = rng.gen_range(2..=4);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let basis = select_basis(&embeddings_of(&points), m).unwrap();
        let pam_cost = assignment_cost(&points, &basis.medoids);
        let (_, opt_cost) = exhaustive_optimum(&points, m);
        assert!(
            pam_cost <= opt_cost * 1.05 + 1e-12,
            "instance {instance}: PAM {pam_cost} vs optimum {opt_cost}"
        );
        // The library's own cost bookkeeping agrees with the oracle's.
        assert!((basis.cost - pam_cost).abs() < 1e-9);
    }
}

#[test]
fn two_group_font_instance_yields_one_medoid_per_group() {
    // 8 fonts: 4 thin (thickness near 1) and 4 thick (near 6). Profiles come
    // from an untrained (random) content encoder; the thin/thick gap
    // dominates the embedding, so M = 2 must split the groups. Checked for
    // several encoder seeds and verified against exhaustive search.
    let skels: Vec<_> = builtin_skeletons().into_iter().take(16).collect();
    for model_seed in [1u64, 7, 23, 91] {
        let dims = ModelDims::new(24, 24, 12, 4).unwrap();
        let params = ToyModelParams::init(dims, model_seed);
        let mut profiles = Vec::new();
        let mut group = Vec::new();
        for i in 0..8usize {
            let thin = i < 4;
            let thickness = if thin { 1.0 + 0.1 * i as f64 } else { 5.6 + 0.1 * (i - 4) as f64 };
            let spec = SyntheticFontSpec::new(
                format!("f{i}"),
                thickness,
                0.05 * (i as f64 - 3.5),
                0.8,
                i as u64,
            )
            .unwrap();
            let glyphs: Vec<_> = skels
                .iter()
                .map(|sk| render_glyph(&spec, sk, 24, 24))
                .collect();
            profiles.push(profile_from_images(&params, &spec.font_id, &glyphs).unwrap());
            group.push(usize::from(!thin));
        }
        let emb = embed(&profiles).unwrap();
        let basis = select_basis(&emb, 2).unwrap();
        let groups: Vec<usize> = basis.medoids.iter().map(|&i| group[i]).collect();
        assert_eq!(
            {
                let mut g = groups.clone();
                g.sort_unstable();
                g
            },
            vec![0, 1],
            "model seed {model_seed}: medoids {:?}",
            basis.medoids
        );

        // Exhaustive agreement on the embedding points.
        let points: Vec<Vec<f64>> = emb.iter().map(|e| e.embedding.clone()).collect();
        let (opt, opt_cost) = exhaustive_optimum(&points, 2);
        let pam_cost = assignment_cost(&points, &basis.medoids);
        assert!(
            pam_cost <= opt_cost + 1e-12,
            "model seed {model_seed}: PAM {pam_cost} vs optimum {opt_cost} ({opt:?})"
        );
    }
}

#[test]
fn swap_phase_monotonically_reduces_cost() {
    // The returned cost can never exceed the BUILD-only cost, which itself
    // is bounded by assigning everything to the first medoid.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(5..=12);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let m = rng.gen_range(1..=3);
        let basis = select_basis(&embeddings_of(&points), m).unwrap();
        let cost = assignment_cost(&points, &basis.medoids);
        let single_best = (0..n)
            .map(|i| assignment_cost(&points, &[i]))
            .fold(f64::INFINITY, f64::min);
        assert!(cost <= single_best + 1e-12);
        // Medoids are dataset members by construction.
        for &mi in &basis.medoids {
            assert!(mi < n);
        }
    }
}
