//! Acceptance suite. Runs every criterion with its tolerance and time
//! budget, prints one PASS/FAIL line each and exits non-zero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use omit_rank::bvn::{decompose, extend_to_doubly_stochastic, Orientation, PotentiallyDoublyStochastic, ZERO_TOL};
use omit_rank::fair_rank::{assemble_lp, build_fairness_vector, solve_omit, FairRankProblem, FairnessVariant, Provenance};
use omit_rank::lp::{self, LpStatus};
use omit_rank::metrics::{dtr, EvalConfig, QueryContext, StochasticPolicy};
use omit_rank::model::{Group, Item, QueryInstance, Ranking};
use omit_rank::outlier::{copod_scores, mad_scores, medknn_scores, DetectorConfig, DetectorMethod};
use omit_rank::pipeline::{evaluate_against_utility, rank_corpus, Method, PolicySource, RankConfig, RankSummary};
use omit_rank::synthetic::{generate_synthetic, SyntheticConfig};
use omit_rank::{cli, Corpus, Matrix, OutlierVector, RankingDecomposition};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{best_assignment, log2_attention, random_doubly_stochastic};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_5_corpus() -> Corpus {
    generate_synthetic(&SyntheticConfig {
        num_queries: 200,
        items_per_query: 20,
        outlier_fraction: 0.1,
        outlier_magnitude: 50.0,
        outlier_relevant_fraction: 0.1,
        group_balance: 0.5,
        seed: 42,
    })
}

fn c1_extension_identity() -> Outcome {
    let a = Matrix::from_rows(&[vec![0.2, 0.0], vec![0.0, 0.2], vec![0.8, 0.0], vec![0.0, 0.8]]);
    let printed = Matrix::from_rows(&[
        vec![0.2, 0.0, 0.4, 0.4],
        vec![0.0, 0.2, 0.4, 0.4],
        vec![0.8, 0.0, 0.1, 0.1],
        vec![0.0, 0.8, 0.1, 0.1],
    ]);
    let pds = PotentiallyDoublyStochastic::new(a, Orientation::ColsSumOne).map_err(|e| e.to_string())?;
    let ext = extend_to_doubly_stochastic(&pds);
    let diff = ext.max_abs_diff(&printed);
    ensure(diff <= 1e-12, || format!("max deviation from the printed matrix {diff:e}"))?;
    Ok(format!("max deviation {diff:e}"))
}

fn c2_bvn_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_rec = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut max_terms_ratio = 0.0f64;
    for case in 0..200 {
        let n = 2 + case % 11;
        let p = random_doubly_stochastic(n, case % 2 == 1, &mut rng);
        let d = decompose(&p, ZERO_TOL).map_err(|e| format!("case {case} (n={n}): {e}"))?;
        let rec = d.reconstruct().max_abs_diff(&p);
        let sum = (d.weight_sum() - 1.0).abs();
        let bound = (n - 1) * (n - 1) + 1;
        ensure(rec <= 1e-6, || format!("case {case}: reconstruction error {rec:e}"))?;
        ensure(sum <= 1e-9, || format!("case {case}: weights sum off by {sum:e}"))?;
        ensure(d.len() <= bound, || format!("case {case}: {} terms > {bound}", d.len()))?;
        for t in &d.terms {
            let mut seen = t.ranking.order().to_vec();
            seen.sort_unstable();
            ensure(seen == (0..n).collect::<Vec<_>>() && t.weight > 0.0, || {
                format!("case {case}: invalid term")
            })?;
        }
        worst_rec = worst_rec.max(rec);
        worst_sum = worst_sum.max(sum);
        max_terms_ratio = max_terms_ratio.max(d.len() as f64 / bound as f64);
    }
    Ok(format!(
        "200 matrices; worst reconstruction {worst_rec:.1e}, worst |sum-1| {worst_sum:.1e}, max terms/bound {max_terms_ratio:.2}"
    ))
}

fn c3_assignment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(1..=n);
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let o: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.4) { rng.random::<f64>() } else { 0.0 })
            .collect();
        let lambda_o = rng.random_range(0.0..3.0);
        let mut problem = FairRankProblem::new(u.clone()).with_outliers(&OutlierVector::from_scores(o.clone()), k);
        problem.lambda_o = lambda_o;
        let sol = solve_omit(&problem, &Ranking::identity(n)).map_err(|e| e.to_string())?;
        ensure(sol.provenance == Provenance::Solved, || format!("case {case}: fell back"))?;
        let v = log2_attention(n);
        let best = best_assignment(n, |i, j| u[i] * v[j] - lambda_o * o[i] * if j < k { 1.0 } else { 0.0 });
        let got = sol.lp_objective.expect("solved");
        let from_p = problem.objective(&sol.p);
        let err = (got - best).abs().max((from_p - best).abs());
        ensure(err <= 1e-6, || format!("case {case} (n={n}): LP {got}, P {from_p}, brute force {best}"))?;
        worst = worst.max(err);
    }
    Ok(format!("100 instances; worst gap {worst:.1e}"))
}

fn c4_fairness_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut solved = 0;
    let mut infeasible = 0;
    let mut worst_dtr = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(2..=8);
        let mut groups: Vec<Group> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Group::Privileged } else { Group::Disadvantaged })
            .collect();
        groups[0] = Group::Privileged;
        groups[1] = Group::Disadvantaged;
        groups.shuffle(&mut rng);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let o: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { rng.random::<f64>() } else { 0.0 })
            .collect();
        let k = rng.random_range(1..=n);
        let f = build_fairness_vector(&u, &groups, FairnessVariant::DtrExact).map_err(|e| e.to_string())?;
        let free = FairRankProblem::new(u.clone()).with_outliers(&OutlierVector::from_scores(o), k);
        let fair = free.clone().with_fairness(f);
        let init = Ranking::identity(n);
        let fair_sol = solve_omit(&fair, &init).map_err(|e| e.to_string())?;
        // dTR = 1 needs the disadvantaged group to receive V * U_dis / U total
        // exposure, which is reachable iff it lies between the sums of its
        // |dis| smallest and |dis| largest attention weights
        let v = log2_attention(n);
        let n_dis = groups.iter().filter(|&&g| g == Group::Disadvantaged).count();
        let u_dis: f64 = (0..n).filter(|&i| groups[i] == Group::Disadvantaged).map(|i| u[i]).sum();
        let target = v.iter().sum::<f64>() * u_dis / u.iter().sum::<f64>();
        let (hi, lo) = (v[..n_dis].iter().sum::<f64>(), v[n - n_dis..].iter().sum::<f64>());
        let margin = (target - lo).min(hi - target);
        if margin.abs() > 1e-9 {
            ensure((margin > 0.0) == (fair_sol.provenance == Provenance::Solved), || {
                format!("case {case}: feasibility margin {margin:e} but provenance {:?}", fair_sol.provenance)
            })?;
        }
        if fair_sol.provenance != Provenance::Solved {
            if lp::solve(&assemble_lp(&fair)).status == LpStatus::Infeasible {
                infeasible += 1;
            }
            continue;
        }
        solved += 1;
        let free_sol = solve_omit(&free, &init).map_err(|e| e.to_string())?;
        let r = dtr(&fair_sol.p, &u, &groups, &log2_attention(n)).ok_or("dTR undefined")?;
        ensure((r - 1.0).abs() <= 1e-4, || format!("case {case}: dTR {r}"))?;
        let (a, b) = (fair_sol.lp_objective.unwrap(), free_sol.lp_objective.unwrap());
        ensure(a <= b + 1e-9, || format!("case {case}: constrained {a} above unconstrained {b}"))?;
        worst_dtr = worst_dtr.max((r - 1.0).abs());
    }
    ensure(solved > 0, || "no instance was solved".into())?;
    Ok(format!(
        "{solved}/100 solved, {infeasible} proven infeasible, {} hit the iteration limit, all matching the exposure-range oracle; worst |dTR-1| {worst_dtr:.1e}",
        100 - solved - infeasible
    ))
}

fn c5_synthetic_table_row() -> Outcome {
    let corpus = criterion_5_corpus();
    let mut detector = DetectorConfig::new(DetectorMethod::Copod);
    detector.context_n = 20;
    let config = RankConfig {
        method: Method::OmitSoft,
        detector,
        top_k: 10,
        ..RankConfig::default()
    };
    let (omit, utility) =
        evaluate_against_utility(&corpus, &config, &EvalConfig::default()).map_err(|e| e.to_string())?;
    let (m, b) = (&omit.aggregate_analytic, &utility.aggregate_analytic);
    let reduction = 100.0 * (b.outliers - m.outliers) / b.outliers;
    let ndcg_loss = 100.0 * (b.ndcg10 - m.ndcg10) / b.ndcg10;
    let summary = format!(
        "#Outliers@10 {:.4} -> {:.4} ({reduction:.1}% reduction), NDCG@10 {:.4} -> {:.4} ({:+.2}%), fallback rate {:.3}",
        b.outliers, m.outliers, b.ndcg10, m.ndcg10, -ndcg_loss, omit.fallback_rate
    );
    ensure(reduction >= 60.0 && ndcg_loss <= 2.0, || summary.clone())?;
    Ok(summary)
}

fn c6_detector_goldens() -> Outcome {
    let values = [1.0, 2.0, 3.0, 4.0, 100.0];
    let mad = mad_scores(&values);
    let flagged: Vec<usize> = (0..5).filter(|&i| mad[i] > 3.5).collect();
    ensure(flagged == vec![4], || format!("MAD flags {flagged:?}"))?;
    ensure((mad[4] - 65.4265).abs() <= 1e-4, || format!("|M| = {}", mad[4]))?;

    let points: Vec<Vec<f64>> = values.iter().map(|&x| vec![x]).collect();
    let strict_max = |s: &[f64]| s[..4].iter().all(|&x| x < s[4]);
    let knn = medknn_scores(&points, 2).map_err(|e| e.to_string())?;
    ensure(strict_max(&knn), || format!("MedKNN scores {knn:?}"))?;
    let copod = copod_scores(&points);
    ensure(strict_max(&copod), || format!("COPOD scores {copod:?}"))?;
    Ok(format!("|M| = {:.4}", mad[4]))
}

/// Metrics of one permutation computed from scratch: ndcg@5, ndcg@10,
/// #outliers@k, outlierness@k and the two group exposure rates.
fn permutation_metrics(order: &[usize], q: &QueryInstance, o: &OutlierVector, k: usize) -> [f64; 6] {
    let n = order.len();
    let v = log2_attention(n);
    let rel = q.relevances();
    let ndcg = |cut: usize| {
        let cut = cut.min(n);
        let dcg: f64 = (0..cut).map(|j| rel[order[j]] * v[j]).sum();
        let mut ideal = rel.clone();
        ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let idcg: f64 = (0..cut).map(|j| ideal[j] * v[j]).sum();
        if idcg > 0.0 {
            dcg / idcg
        } else {
            1.0
        }
    };
    let top = &order[..k.min(n)];
    let count = top.iter().filter(|&&i| o.scores[i] > 0.0).count() as f64;
    let mass: f64 = top.iter().map(|&i| o.scores[i]).sum();
    let mut rate = [0.0; 2];
    let mut merit = [0.0; 2];
    for (j, &i) in order.iter().enumerate() {
        let g = usize::from(q.items[i].group == Group::Privileged);
        rate[g] += v[j];
    }
    for it in &q.items {
        merit[usize::from(it.group == Group::Privileged)] += it.utility;
    }
    [ndcg(5), ndcg(10), count, mass, rate[0] / merit[0], rate[1] / merit[1]]
}

fn c7_monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checks = 0;
    let mut worst_z = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(3..=12);
        let items: Vec<Item> = (0..n)
            .map(|i| {
                let group = if i % 2 == 0 { Group::Privileged } else { Group::Disadvantaged };
                Item::new(format!("d{i}"), rng.random_range(0.05..1.0), group, vec![rng.random::<f64>()])
                    .with_relevance(if rng.random_bool(0.5) { rng.random::<f64>() } else { 0.0 })
            })
            .collect();
        let q = QueryInstance::new(format!("q{case}"), 1, items).map_err(|e| e.to_string())?;
        let o = OutlierVector::from_scores(
            (0..n)
                .map(|_| if rng.random_bool(0.3) { rng.random::<f64>() } else { 0.0 })
                .collect(),
        );
        let terms = rng.random_range(1..=6);
        let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let decomposition = RankingDecomposition {
            terms: raw
                .iter()
                .map(|w| {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut rng);
                    omit_rank::bvn::DecompositionTerm {
                        weight: w / total,
                        ranking: Ranking::new(order).unwrap(),
                    }
                })
                .collect(),
            residual: 0.0,
        };
        let policy = StochasticPolicy::new(q.qid.clone(), decomposition);
        let k = 10;

        // oracle: weighted per-permutation metrics
        let mut expect = [0.0; 6];
        for t in &policy.decomposition.terms {
            let m = permutation_metrics(t.ranking.order(), &q, &o, k);
            for i in 0..6 {
                expect[i] += t.weight * m[i];
            }
        }
        let expect_dtr = expect[4] / expect[5];

        let ctx = QueryContext::new(&q, &o, 2.0, k);
        let analytic = ctx.analytic(&policy);
        let lib = [analytic.ndcg5, analytic.ndcg10, analytic.outliers, analytic.outlierness];
        for (i, &x) in lib.iter().enumerate() {
            ensure((x - expect[i]).abs() <= 1e-9, || format!("case {case}: analytic metric {i} {x} vs {}", expect[i]))?;
        }
        let lib_dtr = analytic.dtr.ok_or("dTR undefined")?;
        ensure((lib_dtr - expect_dtr).abs() <= 1e-9, || format!("case {case}: analytic dTR {lib_dtr} vs {expect_dtr}"))?;

        let mut sampler = ChaCha8Rng::seed_from_u64(1000 + case as u64);
        let (emp, se) = ctx.sample(&policy, 10_000, &mut sampler);
        let pairs = [
            ("ndcg@5", emp.ndcg5, se.ndcg5, expect[0]),
            ("ndcg@10", emp.ndcg10, se.ndcg10, expect[1]),
            ("outliers@10", emp.outliers, se.outliers, expect[2]),
            ("outlierness@10", emp.outlierness, se.outlierness, expect[3]),
            ("dtr", emp.dtr.unwrap(), se.dtr.unwrap(), expect_dtr),
        ];
        for (name, e, s, a) in pairs {
            checks += 1;
            let gap = (e - a).abs();
            ensure(gap <= 3.0 * s + 1e-12, || {
                format!("case {case}: {name} empirical {e:.6} analytic {a:.6} se {s:.2e}")
            })?;
            if s > 0.0 {
                worst_z = worst_z.max(gap / s);
            }
        }
    }
    Ok(format!("{checks} checks over 20 policies; largest |gap|/SE {worst_z:.2}"))
}

fn c8_infeasibility_path() -> Outcome {
    // merit ratio 2 cannot be reached with two positions (v1 / v2 = 1.585)
    let tight = QueryInstance::new(
        "tight",
        1,
        vec![
            Item::new("a", 1.0, Group::Privileged, vec![0.0]),
            Item::new("b", 0.5, Group::Disadvantaged, vec![0.0]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let easy = QueryInstance::new(
        "easy",
        1,
        vec![
            Item::new("c", 1.0, Group::Privileged, vec![0.0]),
            Item::new("d", 1.0, Group::Disadvantaged, vec![0.0]),
        ],
    )
    .map_err(|e| e.to_string())?;

    let u = tight.utilities();
    let f = build_fairness_vector(&u, &tight.groups(), FairnessVariant::DtrExact).map_err(|e| e.to_string())?;
    let problem = FairRankProblem::new(u).with_fairness(f);
    let initial = Ranking::new(vec![0, 1]).unwrap();
    let sol = solve_omit(&problem, &initial).map_err(|e| e.to_string())?;
    ensure(sol.provenance == Provenance::FallbackInitial, || "solver did not fall back".into())?;
    ensure(sol.p == initial.to_matrix(), || "fallback is not the initial ranking".into())?;

    let corpus = Corpus::new(vec![tight, easy]).map_err(|e| e.to_string())?;
    let config = RankConfig {
        method: Method::FoeHard,
        ..RankConfig::default()
    };
    let ranked = rank_corpus(&corpus, None, &config).map_err(|e| e.to_string())?;
    let records: Vec<_> = ranked.iter().map(|r| r.record.clone()).collect();
    ensure(records[0].provenance == PolicySource::FallbackInitial, || "tight query not marked".into())?;
    ensure(records[1].provenance == PolicySource::Solved, || "easy query not solved".into())?;
    let summary = RankSummary::from_records(Method::FoeHard, &records);
    ensure(summary.fallback_qids == vec!["tight".to_string()] && summary.fallback_rate == 0.5, || {
        format!("summary {summary:?}")
    })?;
    Ok("fallback returned and counted (rate 0.5 on 2 queries)".into())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["omit-rank"];
    full.extend_from_slice(args);
    match cli::run(full.iter().copied()) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

fn parse_sweep(path: &Path) -> Result<Vec<(usize, f64, f64)>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure(lines.next() == Some("param_value,ndcg@10,outlierness_improvement_pct"), || {
        "bad sweep header".into()
    })?;
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || format!("malformed row {l:?}");
            if f.len() != 3 {
                return Err(bad());
            }
            Ok((
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn c9_sweep_shape() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_path = dir.path().join("corpus.jsonl");
    run_cli(&["gen", "--out", corpus_path.to_str().unwrap()])?;
    let mut report = Vec::new();
    let mut context_rows = Vec::new();
    for param in ["context-n", "top-k"] {
        let out = dir.path().join(format!("{param}.csv"));
        run_cli(&[
            "sweep",
            "--input",
            corpus_path.to_str().unwrap(),
            "--param",
            param,
            "--values",
            "10,20,30,40",
            "--method",
            "omit-soft",
            "--detector",
            "copod",
            "--out",
            out.to_str().unwrap(),
        ])?;
        let rows = parse_sweep(&out)?;
        ensure(rows.iter().map(|r| r.0).collect::<Vec<_>>() == vec![10, 20, 30, 40], || {
            format!("{param}: unexpected rows {rows:?}")
        })?;
        ensure(rows.iter().all(|r| (0.0..=1.0).contains(&r.1)), || format!("{param}: NDCG out of range"))?;
        report.push(format!(
            "{param}: {}",
            rows.iter().map(|r| format!("{}={:.1}%", r.0, r.2)).collect::<Vec<_>>().join(" ")
        ));
        if param == "context-n" {
            context_rows = rows;
        }
    }
    let (at10, at40) = (context_rows[0].2, context_rows[3].2);
    ensure(at40 >= at10 - 5.0, || format!("improvement {at40:.2}% at n=40 vs {at10:.2}% at n=10"))?;
    Ok(report.join("; "))
}

fn full_pipeline(dir: &Path, threads: &str) -> Result<(), String> {
    std::env::set_var("OMIT_RANK_THREADS", threads);
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    run_cli(&["gen", "--seed", "42", "--out", &p("corpus.jsonl")])?;
    run_cli(&["detect", "--input", &p("corpus.jsonl"), "--detector", "copod", "--out", &p("detect")])?;
    for method in ["utility", "omit-soft"] {
        run_cli(&[
            "rank",
            "--input",
            &p("corpus.jsonl"),
            "--method",
            method,
            "--outliers",
            &p("detect/outliers.jsonl"),
            "--out",
            &p(method),
        ])?;
    }
    run_cli(&[
        "eval",
        "--input",
        &p("corpus.jsonl"),
        "--policies",
        &p("omit-soft/policies.jsonl"),
        "--outliers",
        &p("detect/outliers.jsonl"),
        "--baseline",
        &p("utility/policies.jsonl"),
        "--seed",
        "42",
        "--out",
        &p("eval"),
    ])?;
    std::env::remove_var("OMIT_RANK_THREADS");
    Ok(())
}

fn collect_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c10_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    full_pipeline(a.path(), "1")?;
    full_pipeline(b.path(), "4")?;
    let (fa, fb) = (collect_files(a.path()), collect_files(b.path()));
    ensure(fa.len() == fb.len() && fa.len() >= 8, || format!("{} vs {} files", fa.len(), fb.len()))?;
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        ensure(na == nb && ba == bb, || format!("{na} differs from {nb}"))?;
    }
    Ok(format!("{} artifacts byte-identical across 1 and 4 threads", fa.len()))
}

/// Name, check and wall-clock budget.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 extension identity", c1_extension_identity, Duration::from_millis(1)),
        ("2 BvN suite", c2_bvn_suite, Duration::from_secs(5)),
        ("3 LP vs assignment oracle", c3_assignment_oracle, Duration::from_secs(10)),
        ("4 fairness exactness", c4_fairness_exactness, Duration::from_secs(10)),
        ("5 synthetic outlier reduction", c5_synthetic_table_row, Duration::from_secs(120)),
        ("6 detector goldens", c6_detector_goldens, Duration::from_millis(1)),
        ("7 Monte Carlo consistency", c7_monte_carlo, Duration::from_secs(30)),
        ("8 infeasibility path", c8_infeasibility_path, Duration::from_secs(1)),
        ("9 sweep shape", c9_sweep_shape, Duration::from_secs(600)),
        ("10 determinism", c10_determinism, Duration::from_secs(600)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; exceeded time budget {budget:?}")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {name} ({:.3?} / {budget:?}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
