use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use mimo_arq::arq::{chernoff_undetected_bound, delta_schedule, DecisionRule};
use mimo_arq::channel::{draw_channel, ChannelDraw, FadingStatics, SystemConfig};
use mimo_arq::experiment::{
    csv_string, fer_slope, outage_slope, preset, run_experiment_as, ExperimentSpec, OutageModel, ResultTable, SlopeOptions, SlopeOutcome,
};
use mimo_arq::fec::{conv_encode, expurgated_codebook, ml_decode_bruteforce, viterbi_decode, ConvCode};
use mimo_arq::info::{discrete_rotation_mi, mi_upper_bound, outage_probability, DiscreteMi, MiModel};
use mimo_arq::linalg::{block_diag, CMatrix};
use mimo_arq::modulation::{enumerate_points, Constellation, RotationSpec};
use mimo_arq::rng::{complex_gaussian, Purpose, StreamFactory};
use mimo_arq::scalar::db_to_linear;
use mimo_arq::tradeoff::{estimate_slope, optimal_exponent_discrete, pep_singleton_bound, rate_grid};
use mimo_arq::Rate;
use num_complex::Complex;
use rand::RngExt;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

struct Ctx {
    scale: f64,
    out: PathBuf,
    arq_runs: Vec<(f64, ResultTable)>,
    bd_runs: Vec<(ExperimentSpec, ResultTable)>,
}

impl Ctx {
    fn frames(&self, n: u64) -> u64 {
        ((n as f64 * self.scale).round() as u64).max(1)
    }

    fn run(&mut self, mut spec: ExperimentSpec, snr_db: Vec<f64>, trials: u64, target: u64, max: u64) -> ResultTable {
        spec.snr_db = snr_db;
        spec.trials = self.frames(trials);
        spec.target_errors = target;
        spec.max_trials = self.frames(max).max(spec.trials);
        let t0 = Instant::now();
        let table = run_experiment_as::<f64>(&spec, |p| {
            let m = &p.metrics;
            println!(
                "    {:<18} {:>6.1} dB  frames {:>8}  fer {:.3e} ({} err, {} undetected)  avg_rounds {:.4}",
                spec.name, p.snr_db, m.frames, m.fer.estimate, m.fer.successes, m.undetected.successes, m.avg_rounds
            );
        })
        .expect("experiment runs");
        println!("    {} done in {:.0} s", spec.name, t0.elapsed().as_secs_f64());
        let csv = csv_string(&table.rows()).expect("csv");
        fs::write(self.out.join(format!("{}.csv", spec.name)), csv).expect("write csv");
        self.arq_runs.push((spec.system.r1_f64(), table.clone()));
        if matches!(spec.rule, DecisionRule::BoundedDistance { .. }) {
            self.bd_runs.push((spec, table.clone()));
        }
        table
    }
}

fn slope_text(s: &SlopeOutcome) -> String {
    match s {
        SlopeOutcome::Fit(f) => format!("{:.3} ({} pts)", f.slope, f.points),
        SlopeOutcome::NotEstimable(why) => format!("n/a ({why})"),
    }
}

fn ac1() -> Verdict {
    let mut bad = Vec::new();
    let short = FadingStatics::ShortTerm;
    let long = FadingStatics::LongTerm;
    let cases: [(usize, usize, usize, usize, usize, usize); 6] =
        [(1, 1, 1, 2, 1, 1), (1, 1, 1, 4, 1, 1), (2, 2, 4, 2, 1, 2), (2, 2, 4, 4, 2, 2), (2, 2, 4, 1, 4, 2), (1, 2, 2, 3, 1, 2)];
    for (nt, nr, b, l, m, q) in cases {
        let full = Rate::from_integer((l * q * nt) as i64);
        let cfg = SystemConfig::new(nt, nr, b, l, 1, m, q, full).unwrap();
        for statics in [short, long] {
            let d = optimal_exponent_discrete(&cfg, statics, full).unwrap().d;
            if d != (m * nt * nr) as u64 {
                bad.push(format!("{nt}x{nr} B{b} L{l} M{m} {statics} at full rate: {d}"));
            }
            let curve: Vec<u64> = rate_grid(full, 96).into_iter().map(|r| optimal_exponent_discrete(&cfg, statics, r).unwrap().d).collect();
            if curve.windows(2).any(|w| w[1] > w[0]) {
                bad.push(format!("{nt}x{nr} B{b} L{l} M{m} {statics}: not a staircase"));
            }
        }
    }
    let cfg = SystemConfig::new(2, 2, 4, 2, 1, 1, 2, Rate::from_integer(4)).unwrap();
    let d0 = optimal_exponent_discrete(&cfg, short, Rate::new(1, 1000)).unwrap().d;
    if d0 != 32 {
        bad.push(format!("2x2 B4 L2 near zero rate: {d0}"));
    }
    for (l, want) in [(2, 2), (4, 4)] {
        let cfg = SystemConfig::new(1, 1, 1, l, 1, 1, 1, Rate::from_integer(1)).unwrap();
        let s = optimal_exponent_discrete(&cfg, short, Rate::from_integer(1)).unwrap().d;
        let lt = optimal_exponent_discrete(&cfg, long, Rate::from_integer(1)).unwrap().d;
        if s != want || lt != 1 {
            bad.push(format!("SISO L{l} r1=1: short {s} long {lt}"));
        }
    }
    Verdict { id: "AC1", pass: bad.is_empty(), detail: if bad.is_empty() { "all anchors exact".into() } else { bad.join("; ") } }
}

fn ac2() -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for m in [1, 4] {
        let cfg = SystemConfig::new(2, 2, 4, 1, 1, m, 2, Rate::from_integer(4)).unwrap();
        for r in rate_grid(Rate::from_integer(4), 64) {
            let ours = optimal_exponent_discrete(&cfg, FadingStatics::ShortTerm, r).unwrap().d;
            let pep = pep_singleton_bound(2, 2, 4, 2, r).unwrap();
            checked += 1;
            if ours < pep {
                bad.push(format!("M{m} r={r}: {ours} < {pep}"));
            }
        }
    }
    Verdict { id: "AC2", pass: bad.is_empty(), detail: format!("{checked} rate points, {} violations {}", bad.len(), bad.join("; ")) }
}

fn ac3(ctx: &Ctx) -> Verdict {
    let cfg = SystemConfig::new(1, 1, 1, 1, 1, 1, 1, Rate::from_integer(1)).unwrap();
    let streams = StreamFactory::new(2024);
    let trials = ctx.frames(1_000_000);
    let mut notes = Vec::new();
    let mut pass = true;
    for db in [0.0, 10.0, 20.0, 30.0] {
        let rho = db_to_linear(db);
        let exact = 1.0 - (-1.0 / rho).exp();
        let p = outage_probability(&cfg, FadingStatics::ShortTerm, rho, 1, &MiModel::Gaussian, trials, &streams).unwrap();
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let z = (p.estimate - exact) / sigma;
        pass &= z.abs() <= 3.0;
        notes.push(format!("{db} dB {:.4e} vs {:.4e} ({z:+.2} sigma)", p.estimate, exact));
    }
    let pts: Vec<(f64, f64)> = [20.0, 25.0, 30.0, 35.0, 40.0]
        .iter()
        .map(|&db| {
            let p = outage_probability(&cfg, FadingStatics::ShortTerm, db_to_linear(db), 1, &MiModel::Gaussian, trials, &streams).unwrap();
            (db, p.estimate)
        })
        .collect();
    let slope = estimate_slope(&pts).map(|f| f.slope).unwrap_or(f64::NAN);
    pass &= (0.9..=1.05).contains(&slope);
    notes.push(format!("slope 20-40 dB {slope:.3}"));
    Verdict { id: "AC3", pass, detail: notes.join(", ") }
}

fn slope_value(s: &SlopeOutcome) -> Option<f64> {
    match s {
        SlopeOutcome::Fit(f) => Some(f.slope),
        SlopeOutcome::NotEstimable(_) => None,
    }
}

fn ac4(ctx: &mut Ctx) -> Verdict {
    let opts = SlopeOptions::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, d, grid) in [("fig8-L2", 2.0, vec![4.0, 8.0, 12.0, 16.0, 20.0]), ("fig8-L4", 4.0, vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0])] {
        let table = ctx.run(preset(name).unwrap(), grid, 100_000, 100, 1_000_000);
        let rows = table.rows();
        let fer = fer_slope(&rows, &opts);
        let out = outage_slope(&rows, &opts);
        let ok_fer = slope_value(&fer).is_some_and(|s| (s - d).abs() <= 0.35);
        let ok_par = match (slope_value(&fer), slope_value(&out)) {
            (Some(a), Some(b)) => (a - b).abs() <= 0.3,
            _ => false,
        };
        pass &= ok_fer && ok_par;
        notes.push(format!("{name}: fer slope {} vs d={d}, outage slope {}", slope_text(&fer), slope_text(&out)));
    }
    Verdict { id: "AC4", pass, detail: notes.join("; ") }
}

fn ac5(ctx: &mut Ctx) -> Verdict {
    let opts = SlopeOptions::default();
    let mut slopes = Vec::new();
    let mut notes = Vec::new();
    for name in ["fig10-L2", "fig10-L4"] {
        let table = ctx.run(preset(name).unwrap(), vec![10.0, 15.0, 20.0, 25.0, 30.0], 100_000, 100, 1_000_000);
        let fer = fer_slope(&table.rows(), &opts);
        notes.push(format!("{name}: fer slope {}", slope_text(&fer)));
        slopes.push(slope_value(&fer));
    }
    let pass = match (slopes[0], slopes[1]) {
        (Some(a), Some(b)) => (a - b).abs() <= 0.2 && (a - 1.0).abs() <= 0.25 && (b - 1.0).abs() <= 0.25,
        _ => false,
    };
    Verdict { id: "AC5", pass, detail: notes.join("; ") }
}

fn ac6(ctx: &Ctx) -> Verdict {
    let mut qualifying = 0;
    let mut bad = Vec::new();
    for (r1, table) in &ctx.arq_runs {
        for p in &table.points {
            let m = &p.metrics;
            if m.fer.estimate >= 1e-3 || m.fer.trials == 0 {
                continue;
            }
            qualifying += 1;
            if m.avg_rounds > 1.05 || m.throughput < 0.95 * r1 {
                bad.push(format!("{} {} dB: avg_rounds {:.3}, throughput {:.3} of {:.3}", table.name, p.snr_db, m.avg_rounds, m.throughput, r1));
            }
        }
    }
    let pass = qualifying > 0 && bad.is_empty();
    let shown: Vec<String> = bad.iter().take(6).cloned().collect();
    Verdict {
        id: "AC6",
        pass,
        detail: format!(
            "{qualifying} points with FER < 1e-3, {} violations{}{}",
            bad.len(),
            if bad.is_empty() { "" } else { ": " },
            shown.join("; ")
        ),
    }
}

fn ac7(ctx: &Ctx) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (spec, table) in &ctx.bd_runs {
        let DecisionRule::BoundedDistance { beta, .. } = spec.rule else { continue };
        let s = &spec.system;
        for p in &table.points {
            let m = &p.metrics;
            let delta = delta_schedule(beta, db_to_linear(p.snr_db));
            for (i, &count) in m.undetected_by_round.iter().enumerate() {
                let ell = i + 1;
                let bound = chernoff_undetected_bound(ell, s.b, s.t, s.nr, delta).unwrap();
                let rate = count as f64 / m.frames as f64;
                checked += 1;
                if rate > bound {
                    bad.push(format!("{} {} dB round {ell}: {rate:.3e} > {bound:.3e}", spec.name, p.snr_db));
                }
            }
        }
    }
    Verdict {
        id: "AC7",
        pass: checked > 0 && bad.is_empty(),
        detail: format!("{checked} (SNR, round) pairs, {} violations {}", bad.len(), bad.join("; ")),
    }
}

fn bpsk_mi_quadrature(snr: f64) -> f64 {
    let sigma = 0.5f64.sqrt();
    let a = snr.sqrt();
    let n = 4000;
    let (lo, hi) = (-10.0 * sigma, 10.0 * sigma);
    let h = (hi - lo) / n as f64;
    let f = |x: f64| {
        let pdf = (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let z = -4.0 * a * (a + x);
        let softplus = if z > 30.0 { z } else { z.exp().ln_1p() };
        pdf * softplus / std::f64::consts::LN_2
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - s * h / 3.0
}

fn ac8(ctx: &Ctx) -> Verdict {
    let streams = StreamFactory::new(808);
    let mut notes = Vec::new();

    let mut rng = streams.stream(Purpose::Info, 0);
    let instances = 10_000;
    let mut agree = 0;
    for _ in 0..instances {
        let mem = rng.random_range(1..=4usize);
        let n = rng.random_range(2..=3usize);
        let gens: Vec<u32> = (0..n).map(|_| rng.random_range((1u32 << mem)..(2u32 << mem))).collect();
        let code = ConvCode::new(&gens).unwrap();
        let k = rng.random_range(1..=12usize);
        let llrs: Vec<f64> = (0..code.coded_len(k)).map(|_| 2.0 * complex_gaussian::<f64, _>(&mut rng).re + 0.5).collect();
        let decoded = viterbi_decode(&code, &llrs).unwrap();
        let loglik = |info: &[u8]| -> f64 { conv_encode(&code, info).iter().zip(&llrs).map(|(&c, &l)| if c == 0 { l } else { -l }).sum() };
        let mut best = f64::NEG_INFINITY;
        for m in 0..1usize << k {
            let info: Vec<u8> = (0..k).map(|i| ((m >> i) & 1) as u8).collect();
            best = best.max(loglik(&info));
        }
        let got = loglik(&decoded);
        if (got - best).abs() <= 1e-9 * best.abs().max(1.0) {
            agree += 1;
        }
    }
    let viterbi_ok = agree == instances;
    notes.push(format!("viterbi = exhaustive ML on {agree}/{instances}"));

    let pts = enumerate_points(&Constellation::<f64>::bpsk(), &RotationSpec::identity(), 1, 4).unwrap();
    let h = CMatrix::from_real_diag(&[1.0]);
    let est = discrete_rotation_mi(&h, 1.0, 1, &pts, 200_000, &mut streams.stream(Purpose::MutualInfo, 0)).unwrap();
    let oracle = bpsk_mi_quadrature(1.0);
    let mi_ok = (est.value - oracle).abs() <= 3.0 * est.std_error;
    notes.push(format!("bpsk 0 dB MI {:.5} +- {:.5} vs quadrature {oracle:.5}", est.value, est.std_error));

    let draws = ctx.frames(1000) as usize;
    let mut dominance_bad = 0;
    let mut dominance_checked = 0;
    let setups: [(SystemConfig, RotationSpec<f64>, usize); 2] = [
        (SystemConfig::new(2, 2, 2, 1, 1, 1, 2, Rate::from_integer(2)).unwrap(), RotationSpec::identity(), 64),
        (SystemConfig::new(2, 2, 1, 1, 2, 1, 2, Rate::from_integer(2)).unwrap(), RotationSpec::algebraic(), 16),
    ];
    for (i, (cfg, rot, mc)) in setups.into_iter().enumerate() {
        let ctx_mi = DiscreteMi::new(Constellation::square_qam(2).unwrap(), rot, &cfg, mc, 1 << 20).unwrap();
        let mut rng = streams.stream(Purpose::MutualInfo, 1 + i as u64);
        for _ in 0..draws {
            let rho = db_to_linear(rng.random_range(-5.0..25.0));
            let draw: ChannelDraw<f64> = draw_channel(&cfg, FadingStatics::ShortTerm, &mut rng);
            let mi = ctx_mi.round_mi(&cfg, draw.round(1), rho, &mut rng).unwrap();
            let ub = mi_upper_bound(draw.round(1), rho, &cfg).unwrap();
            dominance_checked += 1;
            if mi.value > ub + 3.0 * mi.std_error + 1e-9 {
                dominance_bad += 1;
            }
        }
    }
    notes.push(format!("MI upper bound held on {}/{dominance_checked} draws", dominance_checked - dominance_bad));
    Verdict { id: "AC8", pass: viterbi_ok && mi_ok && dominance_bad == 0, detail: notes.join(", ") }
}

fn ac9(ctx: &Ctx) -> Verdict {
    let (b, t) = (2usize, 4usize);
    let cfg = SystemConfig::new(1, 1, b, 1, t, 1, 1, Rate::new(3, 8)).unwrap();
    let d = optimal_exponent_discrete(&cfg, FadingStatics::ShortTerm, Rate::new(3, 8)).unwrap().d;
    let streams = StreamFactory::new(909);
    let bpsk = Constellation::<f64>::bpsk();
    let (cb, draws) = expurgated_codebook(8, b * t, t, 2, &bpsk, &mut streams.stream(Purpose::Codebook, 0), 10_000).unwrap();
    let target = 200;
    let max_frames = ctx.frames(20_000_000);
    let chunk = 4096u64;
    let mut pts = Vec::new();
    let mut notes = Vec::new();
    for (i, db) in [5.0, 10.0, 15.0, 20.0, 25.0].into_iter().enumerate() {
        let rho = db_to_linear(db);
        let (mut frames, mut errors) = (0u64, 0u64);
        let mut c = 0u64;
        while errors < target && frames < max_frames {
            let mut rng = streams.stream(Purpose::Channel, ((i as u64) << 40) | c);
            for _ in 0..chunk {
                let msg = rng.random_range(0..cb.len());
                let gains: Vec<CMatrix<f64>> = (0..b)
                    .flat_map(|_| {
                        let g = complex_gaussian::<f64, _>(&mut rng);
                        std::iter::repeat_n(CMatrix::from_fn(1, 1, move |_, _| g), t)
                    })
                    .collect();
                let h = block_diag(&gains).unwrap();
                let clean = h.scale(rho.sqrt()).mul_vec(&cb.codewords[msg]).unwrap();
                let y: Vec<Complex<f64>> = clean.iter().map(|s| s + complex_gaussian::<f64, _>(&mut rng)).collect();
                if ml_decode_bruteforce(&cb, &y, &h, rho, 1).unwrap() != msg {
                    errors += 1;
                }
            }
            frames += chunk;
            c += 1;
        }
        let fer = errors as f64 / frames as f64;
        notes.push(format!("{db} dB {fer:.2e} ({errors}/{frames})"));
        pts.push((db, fer));
    }
    let slope = estimate_slope(&pts).map(|f| f.slope).unwrap_or(f64::NAN);
    Verdict {
        id: "AC9",
        pass: d == 2 && (slope - 2.0).abs() <= 0.4,
        detail: format!("predicted d={d}, codebook after {draws} draws, slope 5-25 dB {slope:.3} [{}]", notes.join(", ")),
    }
}

fn ac10(ctx: &mut Ctx) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    let frames = 10_000;
    let fer_at = |t: &ResultTable, db: f64| t.points.iter().find(|p| p.snr_db == db).map(|p| p.metrics.fer);
    let mut short_term = Vec::new();
    for fig in ["fig12", "fig14"] {
        for l in ["L2", "L4"] {
            let name = format!("{fig}-{l}");
            let mut minllr_spec = preset(&name).unwrap();
            minllr_spec.outage.model = OutageModel::None;
            let mut ped_spec = preset(&format!("{name}-ped")).unwrap();
            ped_spec.outage.model = OutageModel::None;
            let grid = minllr_spec.snr_db.clone();
            let minllr = ctx.run(minllr_spec, grid.clone(), frames, 0, frames);
            let ped = ctx.run(ped_spec, grid.clone(), frames, 0, frames);
            let top = *grid.last().unwrap();
            let (a, b) = (fer_at(&minllr, top).unwrap(), fer_at(&ped, top).unwrap());
            let ok_a = a.estimate <= 2.0 * b.estimate;
            let latency: Vec<String> = minllr
                .points
                .iter()
                .zip(&ped.points)
                .filter(|(m, p)| m.metrics.avg_rounds < p.metrics.avg_rounds)
                .map(|(m, p)| format!("{} dB {:.4} < {:.4}", m.snr_db, m.metrics.avg_rounds, p.metrics.avg_rounds))
                .collect();
            pass &= ok_a && latency.is_empty();
            notes.push(format!(
                "{name}: fer at {top} dB minllr {:.2e} ped {:.2e} ({}), latency {}",
                a.estimate,
                b.estimate,
                if ok_a { "ok" } else { "exceeds 2x" },
                if latency.is_empty() { "ok".to_string() } else { latency.join(" ") }
            ));
            if fig == "fig12" {
                short_term.push(minllr);
            }
        }
    }
    let (l2, l4) = (&short_term[0], &short_term[1]);
    let mut common = 0;
    let mut order_bad = Vec::new();
    for p4 in &l4.points {
        if let Some(f2) = fer_at(l2, p4.snr_db) {
            common += 1;
            if p4.metrics.fer.lo > f2.hi {
                order_bad.push(format!("{} dB L4 {:.2e} > L2 {:.2e}", p4.snr_db, p4.metrics.fer.estimate, f2.estimate));
            }
        }
    }
    pass &= common > 0 && order_bad.is_empty();
    notes.push(format!("short-term L4 <= L2 on {common} common points{}{}", if order_bad.is_empty() { "" } else { ": " }, order_bad.join(" ")));
    Verdict { id: "AC10", pass, detail: notes.join("; ") }
}

fn main() {
    let scale = std::env::var("MIMO_ARQ_ACCEPTANCE_SCALE").ok().and_then(|s| s.parse::<f64>().ok()).unwrap_or(1.0);
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&out).expect("output directory");
    let mut ctx = Ctx { scale, out, arq_runs: Vec::new(), bd_runs: Vec::new() };
    println!("acceptance run, frame scale {scale}, tables in {}", ctx.out.display());

    let mut verdicts = Vec::new();
    let timed = |label: &str, f: &mut dyn FnMut(&mut Ctx) -> Verdict, ctx: &mut Ctx| {
        println!("{label}");
        let t0 = Instant::now();
        let v = f(ctx);
        println!("  {:.1} s", t0.elapsed().as_secs_f64());
        v
    };
    verdicts.push(timed("AC1 exponent anchors", &mut |_| ac1(), &mut ctx));
    verdicts.push(timed("AC2 exponent dominance", &mut |_| ac2(), &mut ctx));
    verdicts.push(timed("AC3 gaussian outage", &mut |c| ac3(c), &mut ctx));
    verdicts.push(timed("AC4 short-term SISO slopes", &mut ac4, &mut ctx));
    verdicts.push(timed("AC5 long-term SISO slopes", &mut ac5, &mut ctx));
    verdicts.push(timed("AC8 oracle equivalences", &mut |c| ac8(c), &mut ctx));
    verdicts.push(timed("AC9 random codebook slope", &mut |c| ac9(c), &mut ctx));
    verdicts.push(timed("AC10 2x2 rule comparison", &mut ac10, &mut ctx));
    verdicts.push(timed("AC6 throughput asymptote", &mut |c| ac6(c), &mut ctx));
    verdicts.push(timed("AC7 undetected error bound", &mut |c| ac7(c), &mut ctx));
    verdicts.sort_by_key(|v| v.id.trim_start_matches("AC").parse::<u32>().unwrap());

    println!();
    for v in &verdicts {
        println!("[{}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.detail);
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("acceptance: {passed}/{} criteria pass", verdicts.len());
}
