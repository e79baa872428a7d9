//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Every tolerance and budget is pinned below.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

type Result<T, E = String> = std::result::Result<T, E>;

use common::*;
use metricgraph_core::density::{DensityFlag, DEFAULT_Z_THRESHOLD};
use metricgraph_core::gauge::gauge_sequence;
use metricgraph_core::gauge::metric_closure;
use metricgraph_core::proximity::{build_cosine_proximity, build_normalized_euclidean};
use metricgraph_core::*;
use rand::Rng;

const EXACT_TOL: f64 = 1e-12;
const PRINTED_TOL: f64 = 1e-3;
const QUADRATURE_REL_TOL: f64 = 1e-6;
const NULL_EIGEN_TOL: f64 = 1e-9;
const RECONSTRUCTION_REL_TOL: f64 = 1e-10;
const DUPLICATE_INFLUENCE_TOL: f64 = 1e-9;
const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const PERF_BUDGET: Duration = Duration::from_secs(10);
const MEMORY_BUDGET_BYTES: u64 = 1 << 30;
const CLOSURE_N: usize = 1000;
const HARMONIC_N: usize = 500;
const MEMORY_N: usize = 2000;
const MEMORY_PROBE_ENV: &str = "METRICGRAPH_ACCEPTANCE_MEMORY_PROBE";

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{what}: got {got}, want {want} (tol {tol:e})"),
    )
}

fn matrix_close(got: &SquareMatrix, want: &[[f64; 4]; 4], tol: f64, what: &str) -> Result<(), String> {
    for i in 0..4 {
        for j in 0..4 {
            close(got.get(i, j), want[i][j], tol, &format!("{what}[{i}][{j}]"))?;
        }
    }
    Ok(())
}

fn timed(budget: Duration, f: impl FnOnce() -> Check) -> Check {
    let t = Instant::now();
    let detail = f()?;
    let elapsed = t.elapsed();
    ensure(elapsed < budget, format!("took {elapsed:?}, budget {budget:?}"))?;
    Ok(format!("{detail}; {elapsed:.2?}"))
}

fn criterion_1() -> Check {
    timed(GOLDEN_BUDGET, || {
        let t = amounts_table();
        let out = Pipeline::default().run(&DataSource::Table(t)).map_err(e2s)?;
        let de = out.d_e.clone().ok_or("no Euclidean component")?;
        let want = [
            [0.0, 0.5, 0.5, 0.75],
            [0.5, 0.0, 0.0, 0.25],
            [0.5, 0.0, 0.0, 0.25],
            [0.75, 0.25, 0.25, 0.0],
        ];
        matrix_close(&de, &want, EXACT_TOL, "D_E")?;
        matrix_close(&out.d, &want, EXACT_TOL, "D")?;
        ensure(ball(&de, 0, 0.375).map_err(e2s)? == vec![0], "B_3/8(a1) != {a1}")?;
        ensure(ball(&de, 1, 0.375).map_err(e2s)? == vec![1, 2, 3], "B_3/8(a2) != {a2,a3,a4}")?;
        let psi = RadialWeight::new(1.0).map_err(e2s)?;
        for (a, want) in [8.0 / 3.0, 8.0, 8.0, 8.0].into_iter().enumerate() {
            let p = DensityProfile::from_matrix(&de, a, None).map_err(e2s)?;
            close(density_at(&p, 0.375, psi).map_err(e2s)?, want, EXACT_TOL, "density")?;
        }
        let req = DensityRequest {
            r: Radius::Value(0.1),
            psi,
            nu: MassMeasure::Dirac(0.375),
            z_threshold: DEFAULT_Z_THRESHOLD,
            basis: FlagBasis::Robust,
        };
        let rep = density_map(&de, None, &req).map_err(e2s)?;
        let flags: Vec<DensityFlag> = rep.entities.iter().map(|e| e.flag).collect();
        ensure(
            flags == [DensityFlag::LowDensity, DensityFlag::Normal, DensityFlag::Normal, DensityFlag::Normal],
            format!("flags {flags:?}"),
        )?;
        Ok(format!("C = 8/3, 8, 8, 8; robust z(a1) = {:.3}", rep.entities[0].robust_z))
    })
}

const CONTRACTS_DE: [[f64; 4]; 4] = [
    [0.0, 0.566, 0.447, 0.721],
    [0.566, 0.0, 0.2, 0.2],
    [0.447, 0.2, 0.0, 0.283],
    [0.721, 0.2, 0.283, 0.0],
];

const CONTRACTS_PHI: [[f64; 4]; 4] = [
    [0.0, 0.016, 0.010, 0.010],
    [0.016, 0.0, 0.051, 0.051],
    [0.010, 0.051, 0.0, 0.0],
    [0.010, 0.051, 0.0, 0.0],
];

fn criterion_2() -> Check {
    timed(GOLDEN_BUDGET, || {
        let t = contracts_table();
        matrix_close(&build_normalized_euclidean(&t).map_err(e2s)?, &CONTRACTS_DE, PRINTED_TOL, "D_E")?;
        let p = build_cosine_proximity(&t).map_err(e2s)?;
        matrix_close(&p.phi, &CONTRACTS_PHI, PRINTED_TOL, "Phi")?;
        let r = validate_semimetric(&p.phi, PRINTED_TOL);
        let v = r
            .triangle_violations
            .iter()
            .find(|v| (v.i, v.k, v.j) == (1, 0, 2))
            .ok_or("violation (a2, a1, a3) not reported")?;
        close(v.lhs, 0.051, PRINTED_TOL, "violation lhs")?;
        close(v.rhs, 0.026, PRINTED_TOL, "violation rhs")?;
        let g = triangular_gauge(&p.phi, &WeightScheme::ones(), 4, 1e-9).map_err(e2s)?;
        close(g.distances.get(1, 2), 0.026, PRINTED_TOL, "d_phi(a2,a3)")?;
        close(g.distances.get(1, 3), 0.026, PRINTED_TOL, "d_phi(a2,a4)")?;
        let d = &g.distances;
        let singleton: Vec<usize> = (0..4)
            .filter(|&a| ball(d, a, 0.015).map(|b| b.len() == 1).unwrap_or(false))
            .collect();
        ensure(singleton == vec![1], format!("singleton balls at {singleton:?}"))?;
        let req = DensityRequest {
            r: Radius::Value(0.001),
            psi: RadialWeight::new(1.0).map_err(e2s)?,
            nu: MassMeasure::Dirac(0.015),
            z_threshold: DEFAULT_Z_THRESHOLD,
            basis: FlagBasis::Robust,
        };
        let rep = density_map(d, None, &req).map_err(e2s)?;
        let low: Vec<usize> = rep
            .entities
            .iter()
            .filter(|e| e.flag == DensityFlag::LowDensity)
            .map(|e| e.entity)
            .collect();
        ensure(low == vec![1], format!("low-density flags at {low:?}"))?;
        Ok(format!("violation {:.3} > {:.3}; d_phi(a2,a3) = {:.4}", v.lhs, v.rhs, d.get(1, 2)))
    })
}

fn criterion_3() -> Check {
    let mut r = rng(300);
    let mut compared = 0;
    for _ in 0..100 {
        let n = r.gen_range(2..=6);
        let phi = random_semimetric(&mut r, n, 0.0, 1.0);
        for order in 1..=4 {
            let harmonic = WeightScheme::harmonic();
            let brute = brute_force_gauge(&phi, &harmonic, order).map_err(e2s)?;
            let fast = triangular_gauge(&phi, &harmonic, order, 0.0).map_err(e2s)?.distances;
            let diff = fast.max_abs_diff(&brute).map_err(e2s)?;
            ensure(diff <= EXACT_TOL, format!("harmonic n={n} order={order}: diff {diff:e}"))?;

            // unit weights: the order-N truncation, and the closure once N >= n - 1
            let ones = WeightScheme::ones();
            let brute = brute_force_gauge(&phi, &ones, order).map_err(e2s)?;
            let trunc = gauge_sequence(&phi, &ones, order).map_err(e2s)?.pop().ok_or("empty sequence")?;
            let diff = trunc.max_abs_diff(&brute).map_err(e2s)?;
            ensure(diff <= EXACT_TOL, format!("ones truncation n={n} order={order}: diff {diff:e}"))?;
            compared += 2;
        }
        let closure = triangular_gauge(&phi, &WeightScheme::ones(), 4, 1e-9).map_err(e2s)?.distances;
        let brute = brute_force_gauge(&phi, &WeightScheme::ones(), (n - 1).max(1)).map_err(e2s)?;
        let diff = closure.max_abs_diff(&brute).map_err(e2s)?;
        ensure(diff <= EXACT_TOL, format!("ones closure n={n}: diff {diff:e}"))?;
        compared += 1;
    }
    for _ in 0..200 {
        let n = r.gen_range(3..=12);
        let phi = random_semimetric(&mut r, n, 0.0, 1.0);
        let g = triangular_gauge(&phi, &WeightScheme::ones(), 4, 1e-9).map_err(e2s)?;
        let rep = validate_semimetric(&g.distances, EXACT_TOL);
        ensure(
            rep.triangle_violation_count == 0 && rep.is_semimetric_shape(),
            format!("closure of order {n} has {} violations", rep.triangle_violation_count),
        )?;
    }
    Ok(format!("{compared} oracle comparisons, 200 closures without violations"))
}

fn criterion_4() -> Check {
    let mut r = rng(400);
    let schemes = [
        WeightScheme::ones(),
        WeightScheme::harmonic(),
        WeightScheme::custom(vec![1.0, 0.8, 0.8, 0.5, 0.4, 0.3, 0.3]),
    ];
    for _ in 0..100 {
        let n = r.gen_range(2..=10);
        let phi = random_semimetric(&mut r, n, 0.0, 1.0);
        for w in &schemes {
            let seq = gauge_sequence(&phi, w, 7).map_err(e2s)?;
            for (k, d) in seq.iter().enumerate() {
                ensure(
                    d.as_slice().iter().zip(phi.as_slice()).all(|(x, p)| x <= p),
                    format!("d({}) > phi", k + 1),
                )?;
                if k > 0 {
                    ensure(
                        d.as_slice().iter().zip(seq[k - 1].as_slice()).all(|(x, p)| x <= p),
                        format!("d({}) > d({})", k + 1, k),
                    )?;
                }
            }
            let g = triangular_gauge(&phi, w, 4, 1e-9).map_err(e2s)?;
            ensure(
                g.distances.as_slice().iter().zip(phi.as_slice()).all(|(x, p)| x <= p),
                "gauge > phi",
            )?;
        }
        let sep = random_semimetric(&mut r, n, 0.1, 1.0);
        let k = sep.min_offdiag().ok_or("no off-diagonal")?;
        let g = triangular_gauge(&sep, &WeightScheme::ones().with_metric_constant(1.0), 4, 1e-9).map_err(e2s)?;
        let low = g.distances.min_offdiag().ok_or("no off-diagonal")?;
        ensure(low >= k, format!("closure minimum {low} below k = {k}"))?;
    }

    let phi = SquareMatrix::from_rows(&[[0.0, 1.0, 0.2], [1.0, 0.0, 0.2], [0.2, 0.2, 0.0]]).map_err(e2s)?;
    let asymptote = gauge_asymptote(&phi).ok_or("no asymptote")?;
    close(asymptote, 0.2, EXACT_TOL, "asymptote")?;
    let seq = gauge_sequence(&phi, &WeightScheme::harmonic(), 10).map_err(e2s)?;
    let path: Vec<f64> = seq[1..].iter().map(|d| d.get(0, 1)).collect();
    ensure(path.windows(2).all(|w| w[1] <= w[0]), format!("not monotone: {path:?}"))?;
    ensure(path.iter().all(|&v| v >= asymptote - EXACT_TOL), "below the asymptote")?;
    close(*path.last().unwrap(), asymptote, EXACT_TOL, "d(10)(1,2)")?;
    let shown: Vec<String> = path.iter().map(|v| format!("{v:.12}")).collect();
    Ok(format!("harmonic d(N)(1,2), N = 2..10: [{}]", shown.join(", ")))
}

fn criterion_5() -> Check {
    let mut r = rng(500);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.gen_range(2..=12);
        let mut dist: Vec<f64> = (1..n).map(|_| r.gen_range(0.001..3.0)).collect();
        dist.push(0.0);
        let lower = r.gen_range(0.01..1.0);
        let p = DensityProfile::with_unit_masses(0, dist.clone()).map_err(e2s)?;
        for q in [1.5, 2.0, 4.0] {
            let exact = concentration(&p, lower, RadialWeight::new(q).map_err(e2s)?, MassMeasure::Lebesgue)
                .map_err(e2s)?;
            let quad = lebesgue_concentration_quadrature(&dist, lower, q);
            let rel = (exact - quad).abs() / exact.abs();
            worst = worst.max(rel);
            ensure(rel <= QUADRATURE_REL_TOL, format!("q={q}: {exact} vs {quad}"))?;
        }
    }
    let p = DensityProfile::with_unit_masses(0, vec![0.0, 0.5, 1.0]).map_err(e2s)?;
    let c = concentration(&p, 0.25, RadialWeight::new(2.0).map_err(e2s)?, MassMeasure::Lebesgue).map_err(e2s)?;
    close(c, 7.0, EXACT_TOL, "hand instance")?;
    for q in [0.5, 1.0] {
        let got = concentration(&p, 0.25, RadialWeight::new(q).map_err(e2s)?, MassMeasure::Lebesgue);
        ensure(
            matches!(got, Err(Error::Divergence { .. })),
            format!("q = {q} did not raise the divergence error"),
        )?;
    }
    Ok(format!("worst relative gap {worst:.1e}; hand instance C = {c}"))
}

fn criterion_6() -> Check {
    let mut r = rng(600);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.gen_range(2..=9);
        let d = random_semimetric(&mut r, n, 0.05, 1.0);
        let a = r.gen_range(0..n);
        let row = d.row(a).to_vec();
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if count_below(&row, mid) == 1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = r_max(&DensityProfile::from_matrix(&d, a, None).map_err(e2s)?).map_err(e2s)?;
        worst = worst.max((got - lo).abs());
        close(got, lo, EXACT_TOL, "r_max")?;
    }
    Ok(format!("worst gap {worst:.1e}"))
}

fn criterion_7() -> Check {
    let mut r = rng(700);
    for n in 2..=6 {
        let base: Vec<f64> = (0..4).map(|_| r.gen_range(0.1..2.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let s = r.gen_range(0.5..3.0);
                base.iter().map(|v| v * s).collect()
            })
            .collect();
        let t = EntityTable::from_rows((0..n).map(|i| format!("e{i}")).collect(), rows).map_err(e2s)?;
        let corr = build_cosine_proximity(&t).map_err(e2s)?.corr;
        let s = spectral_classes(&corr, 1e-6, 1e-6).map_err(e2s)?;
        let zeros = s.eigenvalues.iter().filter(|v| v.abs() < NULL_EIGEN_TOL).count();
        ensure(zeros == n - 1, format!("n={n}: {zeros} null eigenvalues in {:?}", s.eigenvalues))?;
        let all: Vec<usize> = (0..n).collect();
        ensure(s.classes == vec![all], format!("n={n}: classes {:?}", s.classes))?;
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.gen_range(1..=50);
        let m = random_semimetric(&mut r, n, -1.0, 1.0);
        let m = SquareMatrix::from_fn(n, |i, j| if i == j { r.gen_range(-1.0..1.0) } else { m.get(i, j) });
        let e = symmetric_eigh(&m, 100, 1e-10).map_err(e2s)?;
        let norm = frobenius_norm(&m);
        let res = frobenius_norm(&e.reconstruct().scaled_add(-1.0, &m).map_err(e2s)?) / norm;
        worst = worst.max(res);
        ensure(res < RECONSTRUCTION_REL_TOL, format!("order {n}: residual {res:e}"))?;
    }
    Ok(format!("worst reconstruction residual {worst:.1e}"))
}

fn criterion_8() -> Check {
    let mut r = rng(800);
    let mut worst_dup: f64 = 0.0;
    for _ in 0..20 {
        let n = r.gen_range(3..=8);
        let t = random_table(&mut r, n, 3, 0.1, 3.0);
        let mut rows = t.features().to_vec();
        rows.push(rows[r.gen_range(0..n)].clone());
        let mut ids = t.ids().to_vec();
        ids.push("twin".into());
        let t = EntityTable::from_rows(ids, rows).map_err(e2s)?;
        let rep = influence(&Pipeline::default(), &DataSource::Table(t), "twin").map_err(e2s)?;
        worst_dup = worst_dup.max(rep.influence);
        ensure(rep.influence < DUPLICATE_INFLUENCE_TOL, format!("duplicate influence {}", rep.influence))?;
    }

    let direct = Pipeline {
        builder: Builder::Matrix,
        ..Pipeline::default()
    };
    let tri = SquareMatrix::from_rows(&[[0.0, 1.0, 0.2], [1.0, 0.0, 0.2], [0.2, 0.2, 0.0]]).map_err(e2s)?;
    let src = DataSource::Matrix {
        ids: vec!["1".into(), "2".into(), "3".into()],
        matrix: tri,
    };
    let hub = influence(&direct, &src, "3").map_err(e2s)?.influence;
    close(hub, 0.6 * 2f64.sqrt(), EXACT_TOL, "triangle influence")?;

    for _ in 0..100 {
        let n = r.gen_range(3..=10);
        let phi = random_semimetric(&mut r, n, 0.0, 1.0);
        let a = r.gen_range(0..n);
        let full = metric_closure(&phi).without(a).map_err(e2s)?;
        let src = DataSource::Matrix {
            ids: (0..n).map(|i| i.to_string()).collect(),
            matrix: phi,
        };
        let reduced = direct.run(&src.without(a).map_err(e2s)?).map_err(e2s)?.d;
        ensure(
            reduced.as_slice().iter().zip(full.as_slice()).all(|(x, y)| x >= y),
            "D(-a) < D_a somewhere",
        )?;
    }
    Ok(format!("worst duplicate influence {worst_dup:.1e}; triangle {hub:.15}"))
}

fn random_proximity(n: usize, seed: u64) -> SquareMatrix {
    let mut r = rng(seed);
    random_semimetric(&mut r, n, 0.0, 1.0)
}

/// Peak resident set of this process, from `/proc/self/status`.
fn peak_rss_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn memory_probe() -> ExitCode {
    let phi = random_proximity(MEMORY_N, 902);
    let g = triangular_gauge(&phi, &WeightScheme::ones(), 4, 1e-9).expect("gauge");
    let d = combined_distance(&phi, &g.distances, 1.0).expect("combine");
    assert_eq!(d.order(), MEMORY_N);
    match peak_rss_bytes() {
        Some(b) => {
            println!("{b}");
            ExitCode::SUCCESS
        }
        None => ExitCode::FAILURE,
    }
}

fn criterion_9() -> Check {
    let phi = random_proximity(CLOSURE_N, 900);
    let t = Instant::now();
    let g = triangular_gauge(&phi, &WeightScheme::ones(), 4, 1e-9).map_err(e2s)?;
    let closure_time = t.elapsed();
    ensure(g.order_used == OrderUsed::ExactClosure, "closure not used")?;
    ensure(closure_time < PERF_BUDGET, format!("closure N={CLOSURE_N} took {closure_time:?}"))?;

    let phi = random_proximity(HARMONIC_N, 901);
    let t = Instant::now();
    let g = triangular_gauge(&phi, &WeightScheme::harmonic(), 4, 1e-9).map_err(e2s)?;
    let harmonic_time = t.elapsed();
    ensure(g.order_used == OrderUsed::Truncated(4), "wrong order")?;
    ensure(harmonic_time < PERF_BUDGET, format!("harmonic N={HARMONIC_N} took {harmonic_time:?}"))?;

    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let out = Command::new(exe)
        .env(MEMORY_PROBE_ENV, "1")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), "memory probe failed")?;
    let peak: u64 = String::from_utf8_lossy(&out.stdout)
        .trim()
        .parse()
        .map_err(|_| "memory probe printed no number".to_string())?;
    ensure(
        peak < MEMORY_BUDGET_BYTES,
        format!("peak RSS {} MiB at N={MEMORY_N}", peak >> 20),
    )?;
    Ok(format!(
        "closure N={CLOSURE_N} {closure_time:.2?}; harmonic N={HARMONIC_N} {harmonic_time:.2?}; peak RSS N={MEMORY_N} {} MiB",
        peak >> 20
    ))
}

fn cli(cwd: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_metricgraph"))
        .current_dir(cwd)
        .env_remove(metricgraph_cli::THREADS_ENV)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success() && out.stderr.is_empty(),
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )?;
    Ok(out.stdout)
}

/// Every output of one end-to-end session, keyed by a stable name.
fn session(cwd: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    fs::write(cwd.join("amounts.csv"), "id,amount\na1,4\na2,2\na3,2\na4,1\n").map_err(|e| e.to_string())?;
    fs::write(
        cwd.join("contracts.csv"),
        "id,amount,contracts\na1,4,3\na2,2,1\na3,2,2\na4,1,1\n",
    )
    .map_err(|e| e.to_string())?;
    fs::write(
        cwd.join("dirac.json"),
        r#"{"density": {"r": 0.001, "q": 1, "nu": {"dirac": 0.015}}}"#,
    )
    .map_err(|e| e.to_string())?;

    let mut outputs = BTreeMap::new();
    for name in ["amounts", "contracts"] {
        let input = format!("{name}.csv");
        let built = format!("{name}-build");
        cli(cwd, &["build", &input, "--out", &built])?;
        cli(cwd, &["analyze", &format!("{built}/d.csv"), "--out", &format!("{name}-lebesgue")])?;
        cli(
            cwd,
            &["analyze", &format!("{built}/dphi.csv"), "--config", "dirac.json", "--out", &format!("{name}-dirac"), "--format", "csv"],
        )?;
        let d = format!("{built}/d.csv");
        outputs.insert(format!("{name}/neighbors"), cli(cwd, &["query", "neighbors", &d, "a2", "0.375"])?);
        outputs.insert(
            format!("{name}/nearest"),
            cli(cwd, &["query", "nearest", &d, "a1", "--subset", "a2,a3,a4"])?,
        );
        outputs.insert(format!("{name}/influence"), cli(cwd, &["query", "influence", &input, "a3"])?);
        outputs.insert(format!("{name}/validate"), cli(cwd, &["validate", &d])?);
        if name == "contracts" {
            outputs.insert(
                format!("{name}/spectral"),
                cli(cwd, &["query", "spectral", &format!("{built}/corr.csv")])?,
            );
        }
    }
    for entry in walk(cwd)? {
        let rel = entry.strip_prefix(cwd).unwrap().display().to_string();
        let bytes = fs::read(&entry).map_err(|e| e.to_string())?;
        let bytes = if rel.ends_with("manifest.json") {
            strip_clock(&bytes)?
        } else {
            bytes
        };
        outputs.insert(rel, bytes);
    }
    Ok(outputs)
}

// timestamps and durations are the only run-dependent manifest fields
fn strip_clock(bytes: &[u8]) -> Result<Vec<u8>, String> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    let obj = v.as_object_mut().ok_or("manifest is not an object")?;
    for key in ["started_at_ms", "finished_at_ms", "durations_ms"] {
        ensure(obj.remove(key).is_some(), format!("manifest lacks {key}"))?;
    }
    Ok(serde_json::to_vec(&v).unwrap())
}

fn walk(dir: &Path) -> Result<Vec<std::path::PathBuf>, String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn criterion_10() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = session(a.path())?;
    let second = session(b.path())?;
    ensure(
        first.keys().eq(second.keys()),
        "the two sessions produced different file sets",
    )?;
    for (name, bytes) in &first {
        ensure(&second[name] == bytes, format!("{name} differs between runs"))?;
    }
    let files = first.keys().filter(|k| k.contains('.')).count();
    Ok(format!("{} outputs identical ({files} files, {} stdout streams)", first.len(), first.len() - files))
}

fn main() -> ExitCode {
    if std::env::var_os(MEMORY_PROBE_ENV).is_some() {
        return memory_probe();
    }
    let criteria: [(&str, fn() -> Check); 10] = [
        ("golden example (1): scalar amounts", criterion_1),
        ("golden example (2): amounts and contracts", criterion_2),
        ("gauge equals walk enumeration; closure is triangular", criterion_3),
        ("gauge bounds, monotonicity and harmonic asymptote", criterion_4),
        ("Lebesgue concentration closed form", criterion_5),
        ("r_max dual characterization", criterion_6),
        ("spectral reduction and eigensolver accuracy", criterion_7),
        ("influence sanity", criterion_8),
        ("performance and memory", criterion_9),
        ("end-to-end determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
