//! End-to-end acceptance checks. Each test prints one PASS/FAIL line so the
//! suite's verdict can be read off a captured run (`--nocapture`).

mod support;

use distnn::commmodel::{feasibility, ProtocolSpec};
use distnn::costmodel::{
    cost_table, select_split, split_macs, CostConfig, Implementation,
};
use distnn::fxp::{Acc32, ActU8, WeightF10};
use distnn::hwmodel::{compare_baselines, node_report, BaselineEntry, HwConfig, HwReport};
use distnn::infer::{
    quality, run_reference, run_split, seeded_input, seeded_weights, ssim, PrecisionMode, Tensor,
};
use distnn::netmodel::TensorShape;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("ACCEPTANCE {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

/// The published per-layer numbers for the ae1 node segment, both MAC-array
/// schedules. Energy/power/latency appear as printed, each with the value of
/// one unit in its last printed digit; computed results must land within one
/// such ULP (the table rounds to as little as one significant figure).
#[test]
fn table_energy_power_latency_reproduction() {
    let net = load_fixture(AE1.arch);
    let costs = cost_table(&net, &CostConfig::default()).unwrap();
    let parallel = node_report(&net, &costs, AE1.split, &HwConfig::default()).unwrap();
    let mut serial_cfg = HwConfig::default();
    serial_cfg.implementation = Implementation::Serial;
    let serial = node_report(&net, &costs, AE1.split, &serial_cfg).unwrap();

    type Printed = (&'static str, u64, f64, f64, f64, f64, f64, f64);
    let printed_parallel: [Printed; 3] = [
        ("b1", 524_288, 4.19e-6, 0.01e-6, 126e-6, 1e-6, 5.24e-3, 0.01e-3),
        ("b2", 16_384, 28e-9, 1e-9, 0.86e-6, 0.01e-6, 0.16e-3, 0.01e-3),
        ("b3", 512, 0.9e-9, 0.1e-9, 0.027e-6, 0.001e-6, 0.01e-3, 0.01e-3),
    ];
    let printed_serial: [Printed; 3] = [
        ("b1", 2_621_440, 15e-6, 1e-6, 470e-6, 10e-6, 26e-3, 1e-3),
        ("b2", 49_152, 98e-9, 1e-9, 3e-6, 1e-6, 0.5e-3, 0.1e-3),
        ("b3", 1_536, 3e-9, 1e-9, 0.092e-6, 0.001e-6, 0.02e-3, 0.01e-3),
    ];

    let mut problems = Vec::new();
    let mut check = |report: &HwReport, label: &str, printed: &[Printed]| {
        for &(id, blocks, e, e_ulp, p, p_ulp, l, l_ulp) in printed {
            let row = report
                .rows
                .iter()
                .find(|r| r.layer_id == id)
                .unwrap_or_else(|| panic!("{label} report lacks {id}"));
            if row.blocks != blocks {
                problems.push(format!("{label} {id} blocks {} != {blocks}", row.blocks));
            }
            for (what, got, want, ulp) in [
                ("energy", row.energy_j, e, e_ulp),
                ("power", row.power_w, p, p_ulp),
                ("latency", row.latency_s, l, l_ulp),
            ] {
                if (got - want).abs() > ulp {
                    problems.push(format!(
                        "{label} {id} {what} {got:e} is over one printed ULP from {want:e}"
                    ));
                }
            }
        }
    };
    check(&parallel, "parallel", &printed_parallel);
    check(&serial, "serial", &printed_serial);

    // Where the table printed three significant figures, require exact
    // three-figure agreement, not just a ULP window.
    let b1 = &parallel.rows[0];
    for (what, value, expected) in [
        ("energy", b1.energy_j, "4.19e-6"),
        ("power", b1.power_w, "1.26e-4"),
        ("latency", b1.latency_s, "5.24e-3"),
    ] {
        let got = format!("{value:.2e}");
        if got != expected {
            problems.push(format!("b1 parallel {what} rounds to {got}, not {expected}"));
        }
    }

    if (parallel.total_latency_s - 5.41184e-3).abs() > 1e-12 {
        problems.push(format!(
            "parallel total latency {} != 5.41184 ms",
            parallel.total_latency_s
        ));
    }
    if (serial.total_latency_s - 2.672128e-2).abs() > 1e-12 {
        problems.push(format!(
            "serial total latency {} != 26.72128 ms",
            serial.total_latency_s
        ));
    }

    verdict(
        "table_energy_power_latency_reproduction",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// Both fixtures pick their designed split layer, with the expected row
/// counts and a strict figure-of-merit minimum.
#[test]
fn fixture_split_selection() {
    let mut problems = Vec::new();
    for (fixture, rows_expected) in [(AE1, 9usize), (AE2, 14usize)] {
        let net = load_fixture(fixture.arch);
        let costs = cost_table(&net, &CostConfig::default()).unwrap();
        if costs.len() != rows_expected {
            problems.push(format!(
                "{}: {} cost rows, expected {rows_expected}",
                fixture.arch,
                costs.len()
            ));
        }
        match select_split(&costs) {
            Ok(id) if id == fixture.split => {}
            Ok(id) => problems.push(format!(
                "{}: split chose {id}, expected {}",
                fixture.arch, fixture.split
            )),
            Err(e) => problems.push(format!("{}: {e}", fixture.arch)),
        }
        let chosen = costs.iter().find(|r| r.layer_id == fixture.split).unwrap();
        for row in costs.iter().filter(|r| r.macs_analytic > 0) {
            if row.layer_id != fixture.split && row.fom <= chosen.fom {
                problems.push(format!(
                    "{}: {} fom {:e} does not exceed the chosen {:e}",
                    fixture.arch, row.layer_id, row.fom, chosen.fom
                ));
            }
        }
    }
    verdict("fixture_split_selection", problems.is_empty(), problems.join("; "));
}

/// Analytic MAC and block counts agree with brute-force counting loops on
/// 200 random convolution layers (forward and transposed, kernels up to 3x3,
/// dimensions up to 8), plus a handful of dense layers.
#[test]
fn conv_mac_oracle_200_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(8086);
    let mut problems = Vec::new();
    let mut checked = 0;
    for case in 0..220 {
        let doc;
        let kind;
        let kernel;
        let cin;
        if case % 11 < 7 {
            kind = "conv2d";
            let kh = rng.gen_range(1..=3u32);
            let kw = rng.gen_range(1..=3u32);
            let in_h = rng.gen_range(kh.max(kw)..=8);
            let in_w = rng.gen_range(kh.max(kw)..=8);
            cin = rng.gen_range(1..=8u32);
            let filters = rng.gen_range(1..=8u32);
            let stride = rng.gen_range(1..=3u32);
            let padding = if rng.gen_bool(0.5) { "same" } else { "valid" };
            kernel = (kh, kw);
            doc = serde_json::json!({
                "name": "r", "input": [in_h, in_w, cin],
                "layers": [{"id": "l0", "type": "conv2d", "kernel": [kh, kw],
                            "filters": filters, "stride": stride, "padding": padding}]
            });
        } else if case % 11 < 10 {
            kind = "conv_transpose2d";
            let kh = rng.gen_range(1..=3u32);
            let kw = rng.gen_range(1..=3u32);
            let in_h = rng.gen_range(1..=8u32);
            let in_w = rng.gen_range(1..=8u32);
            cin = rng.gen_range(1..=8u32);
            let filters = rng.gen_range(1..=8u32);
            let stride = rng.gen_range(1..=3u32);
            kernel = (kh, kw);
            doc = serde_json::json!({
                "name": "r", "input": [in_h, in_w, cin],
                "layers": [{"id": "l0", "type": "conv_transpose2d", "kernel": [kh, kw],
                            "filters": filters, "stride": stride}]
            });
        } else {
            kind = "dense";
            cin = rng.gen_range(1..=256u32);
            let units = rng.gen_range(1..=64u32);
            kernel = (0, 0);
            doc = serde_json::json!({
                "name": "r", "input": [1, 1, cin],
                "layers": [{"id": "l0", "type": "dense", "units": units}]
            });
        }
        let net = distnn::netmodel::parse_inferred(&doc.to_string()).unwrap();
        let costs = cost_table(&net, &CostConfig::default()).unwrap();
        let row = &costs[0];
        let (oh, ow, oc) = (
            row.out_shape.height,
            row.out_shape.width,
            row.out_shape.channels,
        );
        if row.dv != row.out_shape.element_count() {
            problems.push(format!("case {case} ({kind}): dv mismatch"));
        }
        let expected_macs = match kind {
            "dense" => dense_macs_by_counting(cin, oc),
            _ => conv_macs_by_counting(kernel.0, kernel.1, cin, oh, ow, oc),
        };
        if row.macs_analytic != expected_macs {
            problems.push(format!(
                "case {case} ({kind}): macs {} != counted {expected_macs}",
                row.macs_analytic
            ));
        }
        let (expected_par, expected_ser) = match kind {
            "dense" => (0, 0),
            _ => (
                parallel_blocks_by_counting(oh, ow, oc),
                serial_blocks_by_counting(kernel.0, oh, ow, oc),
            ),
        };
        if row.blocks_parallel != expected_par || row.blocks_serial != expected_ser {
            problems.push(format!(
                "case {case} ({kind}): blocks {}/{} != counted {expected_par}/{expected_ser}",
                row.blocks_parallel, row.blocks_serial
            ));
        }
        checked += 1;
    }
    verdict(
        "conv_mac_oracle_200_random",
        problems.is_empty() && checked == 220,
        format!("{} problems in {checked} cases: {}", problems.len(), problems.join("; ")),
    );
}

/// Every (8-bit activation, 10-bit weight word) product through the
/// fixed-point MAC matches wide-integer arithmetic: 2^18 combinations.
#[test]
fn fxp_mac_exhaustive_oracle() {
    let mut checked = 0u64;
    let mut problems = 0u64;
    for act_raw in 0..=255u8 {
        for word in 0..1024u16 {
            let w = WeightF10::from_word(word).unwrap();
            let mut acc = Acc32::zero(8);
            acc.mac_u8(ActU8 { raw: act_raw }, w);
            let sign = if w.is_negative() { -1i128 } else { 1 };
            let expected = act_raw as i128 * w.magnitude() as i128 * sign;
            if acc.raw as i128 != expected || acc.overflowed {
                problems += 1;
            }
            checked += 1;
        }
    }
    verdict(
        "fxp_mac_exhaustive_oracle",
        problems == 0 && checked == 1 << 18,
        format!("{problems} mismatches in {checked} products"),
    );
}

/// Weight quantization stays within half a quantization step of the input
/// everywhere in range, saturates cleanly outside it, and resolves ties to
/// the even magnitude.
#[test]
fn weight_quantization_error_bound() {
    let limit = 511.0 / 256.0;
    let bound = 1.0 / 512.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5120);
    let mut problems = Vec::new();

    // Dense sweep of the unit interval: round-trip error never exceeds half
    // a quantization step.
    for i in 0..100_000 {
        let w = rng.gen_range(-1.0..=1.0f32);
        let rt = WeightF10::quantize(w).to_f32();
        let err = (rt as f64 - w as f64).abs();
        if err > bound {
            problems.push(format!("sample {i}: |{rt} - {w}| = {err:e} > 2^-9"));
        }
        if problems.len() > 4 {
            break;
        }
    }

    // Beyond the representable range the format saturates to its extremes.
    for i in 0..1_000 {
        let w = rng.gen_range(-8.0..8.0f32);
        let rt = WeightF10::quantize(w).to_f32();
        if w.abs() as f64 > limit && (rt.abs() as f64 != limit || (rt < 0.0) != (w < 0.0)) {
            problems.push(format!("saturation sample {i}: {w} quantized to {rt}"));
        }
        if problems.len() > 4 {
            break;
        }
    }

    // Ties sit exactly between magnitudes k and k+1 and must pick the even
    // one, on both sides of zero.
    for k in 0..511u16 {
        let w = (k as f32 + 0.5) / 256.0;
        let expected = if k % 2 == 0 { k } else { k + 1 };
        let pos = WeightF10::quantize(w);
        if pos.magnitude() != expected || pos.is_negative() {
            problems.push(format!("tie at +{w}: magnitude {}", pos.magnitude()));
        }
        let neg = WeightF10::quantize(-w);
        if neg.magnitude() != expected || neg.is_negative() != (expected != 0) {
            problems.push(format!("tie at -{w}: magnitude {}", neg.magnitude()));
        }
        if problems.len() > 4 {
            break;
        }
    }

    verdict(
        "weight_quantization_error_bound",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// Splitting at any layer in full precision is invisible: the boundary
/// tensor and the final output are bit-identical to an unsplit run, for
/// every layer of both fixtures.
#[test]
fn fp32_split_transparency_all_layers() {
    let mut problems = Vec::new();
    for fixture in [AE1, AE2] {
        let net = load_fixture(fixture.arch);
        let store = seeded_weights(&net, fixture.weights_seed).unwrap();
        let input = seeded_input(net.input_shape, fixture.input_seed);
        let reference = run_reference(&net, &store, &input).unwrap();
        let final_ref = reference.last().unwrap();
        for (idx, layer) in net.layers.iter().enumerate() {
            let out = run_split(&net, &store, &input, &layer.id, PrecisionMode::Fp32).unwrap();
            if !bits_equal(&out.node_output, &reference[idx]) {
                problems.push(format!(
                    "{} split {}: boundary differs from the unsplit run",
                    fixture.arch, layer.id
                ));
            }
            if !bits_equal(&out.final_output, final_ref) {
                problems.push(format!(
                    "{} split {}: final output differs from the unsplit run",
                    fixture.arch, layer.id
                ));
            }
        }
    }
    verdict(
        "fp32_split_transparency_all_layers",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// SSIM scores 1.0 exactly on each of 50 random images, is exactly
/// symmetric in its arguments, and agrees with an independent two-pass
/// implementation on 20 noisy pairs.
#[test]
fn ssim_identity_crossimpl_symmetry() {
    fn random_image(rng: &mut ChaCha8Rng, h: u32, w: u32, c: u32) -> Tensor {
        let n = (h * w * c) as usize;
        let values: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..255.0f32)).collect();
        Tensor::from_real(TensorShape::new(h, w, c), values).unwrap()
    }

    let sizes = [
        (32u32, 32u32, 3u32),
        (48, 36, 2),
        (11, 11, 1),
        (24, 64, 1),
        (17, 29, 4),
    ];
    let noises = [2.0f32, 8.0, 40.0, 100.0];

    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7441);
    for case in 0..50 {
        let (h, w, c) = sizes[case % sizes.len()];
        let a = random_image(&mut rng, h, w, c);

        let identity = ssim(&a, &a).unwrap();
        if identity != 1.0 {
            problems.push(format!("case {case}: self-ssim {identity} != 1"));
        }
        if ssim_two_pass(&a, &a) != 1.0 {
            problems.push(format!("case {case}: two-pass self-ssim != 1"));
        }

        if case < 20 {
            let noise = noises[case % noises.len()];
            let mut shifted = a.real().unwrap().to_vec();
            for v in &mut shifted {
                *v += rng.gen_range(-noise..noise);
            }
            let b = Tensor::from_real(a.shape, shifted).unwrap();

            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            if ab != ba {
                problems.push(format!("case {case}: asymmetric {ab} vs {ba}"));
            }
            let cross = ssim_two_pass(&a, &b);
            if (ab - cross).abs() > 1e-9 {
                problems.push(format!(
                    "case {case}: implementations disagree, {ab} vs {cross}"
                ));
            }
        }
    }
    verdict(
        "ssim_identity_crossimpl_symmetry",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// More aggressive quantization can only cost quality: full precision is
/// exact, and quantized-weights-only scores at least as well as the full
/// integer datapath on both fixtures.
#[test]
fn precision_mode_quality_ordering() {
    let mut problems = Vec::new();
    let mut scores = Vec::new();
    for fixture in [AE1, AE2] {
        let net = load_fixture(fixture.arch);
        let store = seeded_weights(&net, fixture.weights_seed).unwrap();
        let input = seeded_input(net.input_shape, fixture.input_seed);
        let reference = run_reference(&net, &store, &input).unwrap();
        let final_ref = reference.last().unwrap();

        let fp32 = run_split(&net, &store, &input, fixture.split, PrecisionMode::Fp32).unwrap();
        let q_fp32 = quality(final_ref, &fp32.final_output).unwrap();
        if q_fp32.mse != 0.0 || q_fp32.ssim != Some(1.0) {
            problems.push(format!(
                "{}: fp32 split not exact (mse {:e})",
                fixture.arch, q_fp32.mse
            ));
        }

        let wfp = run_split(&net, &store, &input, fixture.split, PrecisionMode::W10Fp).unwrap();
        let q_wfp = quality(final_ref, &wfp.final_output).unwrap();
        let wf8 = run_split(&net, &store, &input, fixture.split, PrecisionMode::W10F8).unwrap();
        let q_wf8 = quality(final_ref, &wf8.final_output).unwrap();
        let (s_wfp, s_wf8) = (q_wfp.ssim.unwrap(), q_wf8.ssim.unwrap());
        if s_wfp < s_wf8 {
            problems.push(format!(
                "{}: quantized-weights ssim {s_wfp} below integer-datapath ssim {s_wf8}",
                fixture.arch
            ));
        }
        if q_wfp.mse > q_wf8.mse {
            problems.push(format!(
                "{}: quantized-weights mse {} above integer-datapath mse {}",
                fixture.arch, q_wfp.mse, q_wf8.mse
            ));
        }
        if wf8.fixed_stats.is_none() {
            problems.push(format!("{}: integer run reported no stats", fixture.arch));
        }
        scores.push(format!("{} {s_wfp:.4} >= {s_wf8:.4}", fixture.arch));
    }
    println!("  ssim ordering: {}", scores.join(", "));
    verdict(
        "precision_mode_quality_ordering",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// Sweeping the link's per-bit energy across four decades flips the
/// does-distribution-save-energy verdict exactly once, at the break-even
/// energy implied by the fixture's own numbers.
#[test]
fn feasibility_energy_sweep_single_flip() {
    let net = load_fixture(AE1.arch);
    let costs = cost_table(&net, &CostConfig::default()).unwrap();
    let cfg = HwConfig::default();
    let sweep_protocol = |e: f64| ProtocolSpec {
        name: "sweep".into(),
        label: "sweep".into(),
        energy_min_j_per_bit: e,
        energy_max_j_per_bit: e,
        rate_min_bps: 1e6,
        rate_max_bps: 1e6,
    };

    let energies: Vec<f64> = (0..=80).map(|i| 1e-9 * 10f64.powf(i as f64 * 0.05)).collect();
    let mut saves = Vec::new();
    let mut threshold = 0.0;
    for &e in &energies {
        let report = feasibility(&net, &costs, AE1.split, &cfg, &sweep_protocol(e), 10e-12, 16)
            .unwrap();
        threshold = (report.e_full_node_j - report.e_node_j) / report.comm.bits as f64;
        saves.push(report.dist_saves());
    }

    let flips = saves.windows(2).filter(|w| w[0] != w[1]).count();
    let mut problems = Vec::new();
    if flips != 1 || !saves[0] || *saves.last().unwrap() {
        problems.push(format!(
            "expected one save->spend flip across the sweep, got {flips} (first {}, last {})",
            saves[0],
            saves.last().unwrap()
        ));
    }
    if ((threshold - 4.12032e-8) / 4.12032e-8).abs() > 1e-9 {
        problems.push(format!("break-even energy {threshold:e}, expected 4.12032e-8"));
    }
    if let Some(i) = saves.iter().position(|s| !s) {
        if !(i > 0 && energies[i - 1] < threshold && energies[i] >= threshold) {
            problems.push(format!("flip at grid point {i} does not bracket {threshold:e}"));
        }
    }
    verdict(
        "feasibility_energy_sweep_single_flip",
        problems.is_empty(),
        problems.join("; "),
    );
}

/// A baseline burning 1000x the node's per-MAC energy reports a power ratio
/// of exactly 1000 over the same workload.
#[test]
fn baseline_power_ratio_exact() {
    let net = load_fixture(AE1.arch);
    let costs = cost_table(&net, &CostConfig::default()).unwrap();
    let (node_macs, hub_macs) = split_macs(&costs, AE1.split).unwrap();
    let mut problems = Vec::new();
    if node_macs != 58_523_648 || hub_macs != 35_160_064 {
        problems.push(format!("macs split {node_macs}/{hub_macs}"));
    }
    let node_energy = node_macs as f64 * 1.2e-12;
    let baselines = [BaselineEntry {
        name: "gpu-class".into(),
        energy_per_mac: 1.2e-9,
        source_note: String::new(),
    }];
    let rows = compare_baselines(node_energy, 30.0, &baselines, node_macs).unwrap();
    if (rows[0].ratio - 1000.0).abs() > 1e-9 {
        problems.push(format!("ratio {}", rows[0].ratio));
    }
    verdict("baseline_power_ratio_exact", problems.is_empty(), problems.join("; "));
}
