"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.
"""

import json
import time

import numpy as np

from ttfusion.cli import main
from ttfusion.detection import pixel_diff, top_k_mask
from ttfusion.frames import FrameObservation, PatchGrid, to_grayscale
from ttfusion.fusion import FusionConfig, run_sequence
from ttfusion.projection import ProjectionSet, verify_equivalence
from ttfusion.synthetic import SynthSpec, generate_frames, walker_patch
from ttfusion.toy_encoder import EncoderSpec, ToyEncoder


def report_line(name, ok):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


def brute_force_diffs(a, b, grid):
    """Per-pixel oracle: no patch-shaped array arithmetic."""
    acc = [0.0] * grid.patch_count
    rows_a = a.tolist()
    rows_b = b.tolist()
    for u in range(len(rows_a)):
        band = (u // 14) * grid.cols
        row_a = rows_a[u]
        row_b = rows_b[u]
        for v in range(len(row_a)):
            acc[band + v // 14] += abs(row_a[v] - row_b[v])
    return np.array([s / 196.0 for s in acc])


def toy(seed, token_dim=64):
    return ToyEncoder(EncoderSpec(token_dim=token_dim, seed=seed))


def test_c1_pixel_diff_matches_brute_force_oracle():
    rng = np.random.default_rng(101)
    grid = PatchGrid.from_dims(224, 224)
    threshold = 0.03
    worst = 0.0
    mask_mismatches = 0
    implementation_seconds = 0.0
    for _ in range(50):
        a = to_grayscale(
            FrameObservation(rng.integers(0, 256, (224, 224, 3), dtype=np.uint8), 0)
        )
        b = to_grayscale(
            FrameObservation(rng.integers(0, 256, (224, 224, 3), dtype=np.uint8), 0)
        )
        started = time.perf_counter()
        result = pixel_diff(a, b, grid, threshold)
        implementation_seconds += time.perf_counter() - started
        oracle = brute_force_diffs(a.values, b.values, grid)
        worst = max(worst, float(np.abs(result.diffs - oracle).max()))
        mask_mismatches += int((result.mask != (oracle > threshold)).sum())
    ok = worst <= 1e-12 and mask_mismatches == 0 and implementation_seconds < 1.0
    print(
        f"  [c1] max deviation {worst:.3e}, {mask_mismatches} mask mismatches, "
        f"detection time {implementation_seconds:.3f}s"
    )
    report_line("C1 dual-detection oracle equivalence", ok)


def test_c2_keyframe_schedule_across_intervals_and_seeds():
    violations = 0
    for seed in range(10):
        frames = generate_frames(
            SynthSpec(frame_count=60, width=168, height=168, noise_amplitude=0.05, seed=seed)
        )
        encoder = toy(seed)
        for interval in (2, 3, 5, 10):
            config = FusionConfig(width=168, height=168, keyframe_interval=interval)
            sequence = run_sequence(frames, encoder, config)
            for t, result in enumerate(sequence.steps):
                if t % interval == 0 or t == 0:
                    if result.fusion_rate != 0.0 or not result.is_keyframe:
                        violations += 1
    report_line("C2 keyframe schedule (fusion rate exactly 0 at t mod K = 0)", violations == 0)


def test_c3_top_k_matches_sort_oracle():
    rng = np.random.default_rng(103)
    mismatches = 0
    for trial in range(1000):
        scores = rng.random(256)
        if trial % 2:
            scores = np.round(scores, 2)  # quantized half: exercises tie-breaks
        mask = top_k_mask(scores, 70).mask
        selected = set(np.nonzero(mask)[0])
        oracle = set(sorted(range(256), key=lambda i: (-scores[i], i))[:70])
        if selected != oracle:
            mismatches += 1
    report_line("C3 top-k exactness vs sort oracle (1000 vectors)", mismatches == 0)


def test_c4_static_sequence_fusion_rate_is_exactly_186_over_256():
    frames = generate_frames(SynthSpec(frame_count=10, seed=104))
    config = FusionConfig(keyframe_interval=100, pixel_threshold=0.03, top_k=70)
    sequence = run_sequence(frames, toy(104), config)
    non_keyframe = [s.fusion_rate for s in sequence.steps if not s.is_keyframe]
    ok = len(non_keyframe) == 9 and all(rate == 186 / 256 for rate in non_keyframe)
    print(f"  [c4] non-keyframe rates: {sorted(set(non_keyframe))}")
    report_line("C4 static-sequence fusion rate = 186/256 exactly", ok)


def test_c5_or_combination_is_conservative_on_every_sequence():
    sequences = [
        SynthSpec(frame_count=50, width=168, height=168, seed=1),
        SynthSpec(frame_count=50, width=168, height=168, noise_amplitude=0.05, seed=2),
        SynthSpec(
            frame_count=50, width=168, height=168, noise_amplitude=0.08, walker=True, seed=3
        ),
        SynthSpec(frame_count=50, width=168, height=168, change_fraction=0.05, seed=4),
        SynthSpec(frame_count=50, width=168, height=168, walker=True, seed=5),
    ]
    exceptions = 0
    for spec in sequences:
        frames = generate_frames(spec)
        encoder = toy(spec.seed)
        base = dict(width=168, height=168, keyframe_interval=5)
        dual = run_sequence(frames, encoder, FusionConfig(**base))
        pixel_only = run_sequence(
            frames, encoder, FusionConfig(enable_attention=False, **base)
        )
        attention_only = run_sequence(
            frames, encoder, FusionConfig(enable_pixel=False, **base)
        )
        if not (
            dual.mean_fusion_rate_all
            <= min(pixel_only.mean_fusion_rate_all, attention_only.mean_fusion_rate_all)
        ):
            exceptions += 1
        for d, p, a in zip(
            dual.fusion_rates, pixel_only.fusion_rates, attention_only.fusion_rates
        ):
            if d > min(p, a):
                exceptions += 1
    report_line("C5 dual-dimension fusion rate <= min(pixel-only, attention-only)", exceptions == 0)


def test_c6_keyframe_interval_sweep_is_monotone():
    started = time.perf_counter()
    frames = generate_frames(
        SynthSpec(
            frame_count=120, change_fraction=0.02, walker=True, noise_amplitude=0.08, seed=1
        )
    )
    encoder = toy(1)
    means = []
    for interval in (2, 3, 5, 10, 15, 20, 30, 50, 100):
        sequence = run_sequence(frames, encoder, FusionConfig(keyframe_interval=interval))
        means.append(sequence.mean_fusion_rate_all)
    elapsed = time.perf_counter() - started
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    ok = monotone and means[-1] > means[0] and elapsed < 30.0
    print(f"  [c6] rates {['%.4f' % m for m in means]} in {elapsed:.1f}s")
    report_line("C6 fusion rate non-decreasing in keyframe interval", ok)


def test_c7_kqv_reuse_is_bit_exact_over_100_frame_runs():
    worst = 0.0
    ledger_ok = True
    for seed in (7, 77):
        frames = generate_frames(
            SynthSpec(frame_count=100, noise_amplitude=0.05, walker=True, seed=seed)
        )
        sequence = run_sequence(frames, toy(seed), FusionConfig())
        checks = verify_equivalence(sequence.steps, ProjectionSet.generate(64, seed))
        worst = max(worst, max(c.max_error for c in checks))
        recount = sum(
            int(np.count_nonzero(step.fusion_mask == 0)) * 64 * 64 * 3
            for step in sequence.steps
        )
        if sum(c.saved_multiplications for c in checks) != recount:
            ledger_ok = False
    ok = worst == 0.0 and ledger_ok
    print(f"  [c7] max reuse error {worst}, ledger recount {'OK' if ledger_ok else 'MISMATCH'}")
    report_line("C7 implicit Q/K/V reuse bit-exact with exact savings ledger", ok)


def test_c8_walker_pixel_mask_matches_analytic_ground_truth():
    spec = SynthSpec(frame_count=101, walker=True, seed=108)
    frames = generate_frames(spec)
    grid = spec.grid
    config = FusionConfig(
        keyframe_interval=1000, pixel_threshold=0.01, enable_attention=False
    )
    sequence = run_sequence(frames, toy(108), config)
    mismatches = 0
    for t in range(1, 101):
        expected = np.zeros(grid.patch_count, dtype=np.uint8)
        expected[walker_patch(grid, t - 1)] = 1
        expected[walker_patch(grid, t)] = 1
        step = sequence.steps[t]
        if not np.array_equal(step.pixel_mask, expected):
            mismatches += 1
        if not np.array_equal(step.fusion_mask, expected):
            mismatches += 1
    report_line("C8 walker pixel mask equals entered/left patch set (100 steps)", mismatches == 0)


def test_c9_run_command_is_byte_deterministic(tmp_path):
    config_path = tmp_path / "run.cfg"
    config_path.write_text(
        "synth_frames = 40\nsynth_noise = 0.05\nsynth_walker = true\n"
        "seed = 109\nemit_masks = true\n"
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a = main(["run", "--config", str(config_path), "--out", str(out_a)])
    code_b = main(["run", "--config", str(config_path), "--out", str(out_b)])
    reports_equal = (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
    masks_a = sorted(p.name for p in (out_a / "masks").iterdir())
    masks_equal = bool(masks_a) and all(
        (out_a / "masks" / name).read_bytes() == (out_b / "masks" / name).read_bytes()
        for name in masks_a
    )
    ok = code_a == 0 and code_b == 0 and reports_equal and masks_equal
    report_line("C9 identical config+seed give byte-identical outputs", ok)


def test_c10_throughput_and_d_independent_detection():
    frames = generate_frames(SynthSpec(frame_count=500, walker=True, seed=110))
    started = time.perf_counter()
    run_sequence(frames, toy(110), FusionConfig())
    run_seconds = time.perf_counter() - started

    spot_frames = generate_frames(
        SynthSpec(frame_count=300, walker=True, noise_amplitude=0.05, seed=111)
    )

    def detection_seconds(token_dim):
        best = float("inf")
        for _ in range(3):
            timing = {}
            run_sequence(
                spot_frames,
                toy(111, token_dim=token_dim),
                FusionConfig(token_dim=token_dim),
                timing=timing,
            )
            best = min(best, timing["pixel_detect"])
        return best

    base = detection_seconds(64)
    doubled = detection_seconds(128)
    ok = run_seconds < 10.0 and abs(doubled - base) <= 0.10 * base
    print(
        f"  [c10] 500-frame run {run_seconds:.2f}s; detection {base*1000:.1f}ms (d=64) "
        f"vs {doubled*1000:.1f}ms (d=128)"
    )
    report_line("C10 throughput < 10s and detection cost independent of token dim", ok)
