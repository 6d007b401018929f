//! Acceptance suite: runs every criterion in order and prints one PASS/FAIL
//! line each. Built with `harness = false` so the lines always appear in
//! `cargo test` output; the process exits non-zero if any criterion fails.

use drt_core::harness::{run_power, run_type1, CellResult, ExperimentGrid};
use drt_core::orderstat::{approx_pmf, exact_pmf, expfam_parts, mean_suff_under_null};
use drt_core::rank_tests::DoublyRankedConfig;
use drt_core::simgen::{CoeffDist, MeanFn, NoiseModel, SimConfig};
use drt_core::{
    doubly_ranked_test, exact_mww_null_distribution, kruskal_wallis_test, mww_test, Alternative,
    CurveSet, SummaryKind,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

const MASTER_SEED: u64 = 20_240_601;

fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[acceptance] criterion {id} {:<4} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn criterion_1_order_statistic_pmf() -> bool {
    let mut worst_norm = 0.0f64;
    for n in 1..=50usize {
        for r in 1..=n {
            let total: f64 = (1..=n).map(|z| exact_pmf(n, r, z).unwrap()).sum();
            worst_norm = worst_norm.max((total - 1.0).abs());
        }
    }
    let p1 = exact_pmf(2, 1, 1).unwrap();
    let p2 = exact_pmf(2, 1, 2).unwrap();
    let closed_form = (p1 - 0.75).abs() <= f64::EPSILON && (p2 - 0.25).abs() <= f64::EPSILON;
    let errs: Vec<f64> = [5usize, 21, 101]
        .iter()
        .map(|&n| {
            let r = n.div_ceil(2);
            (1..=n)
                .map(|z| (approx_pmf(n, r, z).unwrap() - exact_pmf(n, r, z).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let shrinking = errs[0] > errs[1] && errs[1] > errs[2];
    report(
        1,
        "order-statistic PMF",
        worst_norm < 1e-10 && closed_form && shrinking,
        &format!(
            "max |Σpmf-1| = {worst_norm:.2e} (tol 1e-10); pmf(2,1,·) = ({p1}, {p2}); \
             max approx error n=5/21/101: {:.3e} / {:.3e} / {:.3e}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_2_exponential_family() -> bool {
    let mut worst = 0.0f64;
    for n in 1..=30usize {
        for r in 1..=n {
            for z in 1..=n {
                let a = approx_pmf(n, r, z).unwrap();
                let rec = expfam_parts(n, r, z).unwrap().reconstruct();
                worst = worst.max(((rec - a) / a).abs());
            }
        }
    }
    report(
        2,
        "exponential-family reconstruction",
        worst <= 1e-12,
        &format!("max relative error {worst:.2e} (tol 1e-12) over n ≤ 30"),
    )
}

fn criterion_3_zero_mean_sufficient_statistic() -> bool {
    let worst = (1..=200usize)
        .map(|n| mean_suff_under_null(n).abs())
        .fold(0.0, f64::max);
    report(
        3,
        "zero-mean sufficient statistic",
        worst < 1e-10,
        &format!("max |E t(z)| = {worst:.2e} (tol 1e-10) over n = 1..200"),
    )
}

fn random_single_occasion(rng: &mut impl Rng, sizes: &[usize]) -> CurveSet {
    let n: usize = sizes.iter().sum();
    // coarse values so ties (and the normal path) also get exercised
    let coarse = rng.random_bool(0.3);
    let values = DMatrix::from_fn(n, 1, |_, _| {
        if coarse {
            rng.random_range(0..6) as f64
        } else {
            rng.random::<f64>()
        }
    });
    let groups = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &k)| std::iter::repeat_n(g + 1, k))
        .collect();
    CurveSet::new(values, vec![0.5], groups).unwrap()
}

fn criterion_4_univariate_reduction() -> bool {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut mismatches = 0;
    let mut checked = 0;
    for summary in [SummaryKind::Sufficient, SummaryKind::AverageRank] {
        let cfg = DoublyRankedConfig {
            summary,
            ..Default::default()
        };
        for _ in 0..100 {
            let sizes = [rng.random_range(1..40), rng.random_range(1..40)];
            let c = random_single_occasion(&mut rng, &sizes);
            let g = c.split_by_group(c.values().column(0).as_slice());
            let dr = doubly_ranked_test(&c, &cfg).unwrap();
            let uni = mww_test(&g[0], &g[1], Alternative::TwoSided).unwrap();
            let same = dr.statistic.to_bits() == uni.statistic.to_bits()
                && dr.p_value.to_bits() == uni.p_value.to_bits()
                && dr == uni;
            mismatches += usize::from(!same);
            checked += 1;
        }
        for _ in 0..100 {
            let sizes = [
                rng.random_range(1..25),
                rng.random_range(1..25),
                rng.random_range(1..25),
            ];
            let c = random_single_occasion(&mut rng, &sizes);
            let g = c.split_by_group(c.values().column(0).as_slice());
            let dr = doubly_ranked_test(&c, &cfg).unwrap();
            let uni = kruskal_wallis_test(&g).unwrap();
            let same = dr.statistic.to_bits() == uni.statistic.to_bits()
                && dr.p_value.to_bits() == uni.p_value.to_bits()
                && dr == uni;
            mismatches += usize::from(!same);
            checked += 1;
        }
    }
    report(
        4,
        "univariate reduction at S=1",
        mismatches == 0,
        &format!("{mismatches} bit-level mismatches in {checked} instances (G=2 and G=3, both summaries)"),
    )
}

fn enumerate_null(n1: usize, n2: usize) -> Vec<f64> {
    let n = n1 + n2;
    let mut counts = vec![0u64; n1 * n2 + 1];
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == n2 {
            let s: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
            counts[s - n2 * (n2 + 1) / 2] += 1;
            total += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn criterion_5_exact_mww_null() -> bool {
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for n1 in 1..10usize {
        for n2 in 1..=(10 - n1) {
            let d = exact_mww_null_distribution(n1, n2).unwrap();
            let e = enumerate_null(n1, n2);
            assert_eq!(d.probs.len(), e.len());
            for (a, b) in d.probs.iter().zip(&e) {
                worst = worst.max((a - b).abs());
            }
            pairs += 1;
        }
    }
    report(
        5,
        "exact MWW null vs enumeration",
        worst < 1e-14,
        &format!("{pairs} (n1, n2) pairs with n1+n2 ≤ 10; max |Δp| = {worst:.2e}"),
    )
}

/// Table values `(coeff, total n, avg, suff)` at S = 40 under AR(1) noise.
const MWW_TABLE: [(CoeffDist, usize, f64, f64); 4] = [
    (CoeffDist::Gaussian, 20, 0.046, 0.044),
    (CoeffDist::Gaussian, 50, 0.052, 0.051),
    (CoeffDist::StudentT2, 20, 0.045, 0.046),
    (CoeffDist::StudentT2, 50, 0.049, 0.050),
];
const KW_TABLE: [(CoeffDist, usize, f64, f64); 4] = [
    (CoeffDist::Gaussian, 30, 0.047, 0.050),
    (CoeffDist::Gaussian, 75, 0.048, 0.046),
    (CoeffDist::StudentT2, 30, 0.046, 0.048),
    (CoeffDist::StudentT2, 75, 0.051, 0.050),
];
const TYPE1_TOLERANCE: f64 = 0.015;

fn type1_grid(groups: usize) -> ExperimentGrid {
    let per_group = |total: usize| vec![total / groups; groups];
    let table = if groups == 2 { &MWW_TABLE } else { &KW_TABLE };
    let mut sizes: Vec<Vec<usize>> = table.iter().map(|t| per_group(t.1)).collect();
    sizes.dedup();
    ExperimentGrid {
        base: SimConfig {
            basis_size: 1000,
            noise: NoiseModel::ar1(),
            seed: MASTER_SEED,
            ..SimConfig::default()
        },
        s_values: vec![40],
        n_schemes: sizes,
        coeff_dists: vec![CoeffDist::Gaussian, CoeffDist::StudentT2],
        replicates: 2000,
        ..ExperimentGrid::default()
    }
}

fn check_type1(
    results: &[CellResult],
    table: &[(CoeffDist, usize, f64, f64)],
) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut lines = Vec::new();
    for &(dist, n, avg, suff) in table {
        for (summary, target) in [
            (SummaryKind::AverageRank, avg),
            (SummaryKind::Sufficient, suff),
        ] {
            let cell = results
                .iter()
                .find(|r| {
                    r.cell.coeff_dist == dist
                        && r.cell.n_per_group.iter().sum::<usize>() == n
                        && r.cell.summary == summary
                })
                .expect("cell present");
            let within = (cell.rejection_rate - target).abs() <= TYPE1_TOLERANCE;
            ok &= within;
            lines.push(format!(
                "{} n={n} {}: {:.4} (table {target:.3}, se {:.4}){}",
                dist.label(),
                summary,
                cell.rejection_rate,
                cell.mc_stderr,
                if within { "" } else { " OUT" }
            ));
        }
    }
    (ok, lines)
}

fn criterion_6_type1_calibration() -> bool {
    let mww = run_type1(&type1_grid(2)).unwrap();
    let kw = run_type1(&type1_grid(3)).unwrap();
    let (ok_mww, l_mww) = check_type1(&mww, &MWW_TABLE);
    let (ok_kw, l_kw) = check_type1(&kw, &KW_TABLE);
    for l in l_mww
        .iter()
        .map(|l| format!("MWW {l}"))
        .chain(l_kw.iter().map(|l| format!("KW {l}")))
    {
        println!("    {l}");
    }
    report(
        6,
        "type-I calibration vs tables (S=40, AR(1), 2000 reps, K=1000)",
        ok_mww && ok_kw,
        &format!(
            "16 cells within ±{TYPE1_TOLERANCE} of the tabulated rates: {}",
            ok_mww && ok_kw
        ),
    )
}

fn curve(results: &[CellResult], n: usize, summary: SummaryKind) -> Vec<&CellResult> {
    results
        .iter()
        .filter(|r| r.cell.n_per_group == vec![n, n] && r.cell.summary == summary)
        .collect()
}

fn criterion_7_power_properties() -> bool {
    let grid = ExperimentGrid {
        base: SimConfig {
            basis_size: 1000,
            noise: NoiseModel::ar1(),
            seed: MASTER_SEED + 7,
            ..SimConfig::default()
        },
        s_values: vec![40],
        n_schemes: vec![vec![10, 10], vec![50, 50]],
        coeff_dists: vec![CoeffDist::Gaussian],
        mean_fns: vec![MeanFn::Mu1],
        replicates: 300,
        ..ExperimentGrid::default()
    };
    let res = run_power(&grid).unwrap();

    // (a) monotone in ξ up to 2 Monte Carlo standard errors
    let mut worst_drop = 0.0f64;
    let mut mono = true;
    for summary in [SummaryKind::Sufficient, SummaryKind::AverageRank] {
        let c = curve(&res, 50, summary);
        for w in c.windows(2) {
            let drop = w[0].rejection_rate - w[1].rejection_rate;
            let allowance = 2.0 * w[0].mc_stderr.max(w[1].mc_stderr);
            worst_drop = worst_drop.max(drop);
            mono &= drop <= allowance;
        }
    }
    // (b) larger samples are at least as powerful for ξ ≥ 1
    let mut by_n = true;
    for summary in [SummaryKind::Sufficient, SummaryKind::AverageRank] {
        for (small, large) in curve(&res, 10, summary)
            .iter()
            .zip(curve(&res, 50, summary))
        {
            assert_eq!(small.cell.xi, large.cell.xi);
            if small.cell.xi >= 1.0 {
                by_n &= large.rejection_rate >= small.rejection_rate;
            }
        }
    }
    // (c) the two summaries give nearly identical curves
    let gap = curve(&res, 50, SummaryKind::Sufficient)
        .iter()
        .zip(curve(&res, 50, SummaryKind::AverageRank))
        .map(|(a, b)| (a.rejection_rate - b.rejection_rate).abs())
        .fold(0.0, f64::max);
    let summary_gap = gap <= 0.05;

    let at3 = curve(&res, 50, SummaryKind::Sufficient)
        .last()
        .unwrap()
        .rejection_rate;
    for summary in [SummaryKind::Sufficient, SummaryKind::AverageRank] {
        for n in [10, 50] {
            let rates: Vec<String> = curve(&res, n, summary)
                .iter()
                .map(|r| format!("{:.2}", r.rejection_rate))
                .collect();
            println!("    n={n}+{n} {summary}: {}", rates.join(" "));
        }
    }
    report(
        7,
        "power properties (Gaussian, mu1, S=40, 300 reps)",
        mono && by_n && summary_gap,
        &format!(
            "(a) monotone: {mono} (largest drop {worst_drop:.3}); (b) n=100 ≥ n=20 for ξ≥1: {by_n}; \
             (c) max suff/avg gap {gap:.3} (tol 0.05); power at ξ=3, n=100: {at3:.3}"
        ),
    )
}

fn criterion_8_invariances_and_determinism() -> bool {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MASTER_SEED + 8);

    let mut monotone_ok = true;
    let mut swap_ok = true;
    for _ in 0..25 {
        let (n1, n2, s) = (
            rng.random_range(3..20),
            rng.random_range(3..20),
            rng.random_range(1..30),
        );
        let n = n1 + n2;
        let values = DMatrix::from_fn(n, s, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let groups: Vec<usize> = (0..n).map(|i| if i < n1 { 1 } else { 2 }).collect();
        let grid: Vec<f64> = (1..=s).map(|k| k as f64 / s as f64).collect();
        let c = CurveSet::new(values.clone(), grid.clone(), groups.clone()).unwrap();

        let mut t = values.clone();
        for j in 0..s {
            let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(-1.0..1.0));
            for i in 0..n {
                t[(i, j)] = match j % 3 {
                    0 => a * t[(i, j)] + b,
                    1 => t[(i, j)].powi(3),
                    _ => (a * t[(i, j)]).exp(),
                };
            }
        }
        let tc = CurveSet::new(t, grid.clone(), groups.clone()).unwrap();
        let swapped = CurveSet::new(values, grid, groups.iter().map(|&g| 3 - g).collect()).unwrap();
        for summary in [SummaryKind::Sufficient, SummaryKind::AverageRank] {
            let cfg = DoublyRankedConfig {
                summary,
                ..Default::default()
            };
            let a = doubly_ranked_test(&c, &cfg).unwrap();
            monotone_ok &= a == doubly_ranked_test(&tc, &cfg).unwrap();
            let b = doubly_ranked_test(&swapped, &cfg).unwrap();
            swap_ok &= a.statistic + b.statistic == (n1 * n2) as f64
                && (a.p_value - b.p_value).abs() < 1e-12;
        }
    }

    let grid = |threads| ExperimentGrid {
        base: SimConfig {
            basis_size: 200,
            seed: MASTER_SEED,
            ..SimConfig::default()
        },
        s_values: vec![40],
        n_schemes: vec![vec![10, 10], vec![10, 10, 10]],
        coeff_dists: vec![CoeffDist::Gaussian, CoeffDist::StudentT2],
        xi_values: vec![0.0, 0.5],
        replicates: 100,
        threads: Some(threads),
        ..ExperimentGrid::default()
    };
    let deterministic = run_power(&grid(1)).unwrap() == run_power(&grid(4)).unwrap()
        && run_power(&grid(1)).unwrap() == run_power(&grid(1)).unwrap();
    report(
        8,
        "invariance and determinism",
        monotone_ok && swap_ok && deterministic,
        &format!(
            "monotone-transform invariance: {monotone_ok}; label-swap T⁺ ↦ n1n2−T⁺: {swap_ok}; \
             1 vs 4 workers identical: {deterministic}"
        ),
    )
}

fn criterion_9_application_results_not_targeted() -> bool {
    println!(
        "[acceptance] criterion 9 N/A  real-data results: external datasets with a different smoother; \
         ingestion covered by criteria 4 and 8"
    );
    true
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_order_statistic_pmf,
        criterion_2_exponential_family,
        criterion_3_zero_mean_sufficient_statistic,
        criterion_4_univariate_reduction,
        criterion_5_exact_mww_null,
        criterion_6_type1_calibration,
        criterion_7_power_properties,
        criterion_8_invariances_and_determinism,
        criterion_9_application_results_not_targeted,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("[acceptance] {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
