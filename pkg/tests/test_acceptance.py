"""Acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line (run with
`pytest -s tests/test_acceptance.py` to see them inline). The default-config
runs are shared via session fixtures; everything here runs at the scales and
tolerances stated in the criteria.
"""

import functools
import json
import time

import numpy as np
import pytest

import april_sim as a

N, G = 32, 8  # default scheduler scale: batches of N*G = 256 samples


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {name}: FAIL")
                raise
            print(f"[ACCEPTANCE] {name}: PASS")
            return result

        return wrapper

    return deco


@pytest.fixture(scope="session")
def default_april_200():
    """Default-config APRIL run, 200 steps, with the delivery manifest on."""
    cfg = a.default_config().with_overrides(**{"run.write_manifest": True})
    sim = a.build_simulation(cfg)
    sim.run()
    return sim


@pytest.fixture(scope="session")
def default_baseline_200():
    cfg = a.default_config().with_overrides(**{"scheduler.mode": "baseline"})
    sim = a.build_simulation(cfg)
    sim.run()
    return sim


@criterion("determinism: byte-identical steps.jsonl, <1 min at test scale")
def test_determinism_byte_identical(tmp_path):
    from april_sim.cli import main

    cfg_path = tmp_path / "config.json"
    cfg = a.default_config().with_overrides(**{"engine.l_max": 2048, "run.steps": 50})
    cfg_path.write_text(json.dumps(cfg.to_json_dict()))
    out = tmp_path / "run"
    t0 = time.time()
    assert main(["run", "--config", str(cfg_path), "--out", str(out), "--seed", "7"]) == 0
    first = (out / "steps.jsonl").read_bytes()
    assert main(["run", "--config", str(cfg_path), "--out", str(out), "--seed", "7"]) == 0
    elapsed = time.time() - t0
    assert (out / "steps.jsonl").read_bytes() == first
    assert elapsed < 60.0, f"test-scale determinism run took {elapsed:.1f}s"


@criterion("conservation: exactly-once delivery, 256-sample batches, 200 steps")
def test_conservation_and_exactly_once(default_april_200):
    sim = default_april_200
    assert len(sim.reports) == 200
    delivered = [(row.instance_id, row.sample_index) for row in sim.manifest]
    assert len(delivered) == 200 * N * G
    assert len(set(delivered)) == len(delivered), "a sample was delivered twice"
    per_step = {}
    for row in sim.manifest:
        per_step[row.step] = per_step.get(row.step, 0) + 1
    assert set(per_step.values()) == {N * G}, "every batch must hold exactly 256 samples"
    for report in sim.reports:
        assert sum(report.staleness_histogram.values()) == N * G
    # every created sample is delivered exactly once or parked at shutdown
    # (continuation buffer, or the zero-token pending pool it feeds)
    leftover = sim.scheduler.undelivered_sample_ids()
    assert len(leftover) == len(set(leftover))
    assert not set(leftover) & {f"{i}:{j}" for i, j in delivered}
    assert sim.scheduler.created_samples == len(delivered) + len(leftover)


@criterion("degeneracy: N'=N constant lengths, april == baseline field-for-field")
def test_degenerate_april_equals_baseline():
    overrides = {
        "workload.distribution": "constant",
        "workload.parameters": {"value": 300},
        "scheduler.over_sampling_batch_size": N,
        "run.steps": 20,
    }
    base = a.run_simulation(
        a.default_config().with_overrides(**overrides, **{"scheduler.mode": "baseline"})
    )
    apr = a.run_simulation(
        a.default_config().with_overrides(**overrides, **{"scheduler.mode": "april"})
    )
    for rb, ra in zip(base.reports, apr.reports):
        assert ra == rb, f"step {rb.step} reports differ"
        assert ra.buffer_size_after == 0
    assert apr.scheduler.buffer.sample_count() == 0


@criterion("long-tail speedup: april mean throughput >= +10% over baseline")
def test_long_tail_speedup_paired_seeds():
    t0 = time.time()
    improvements = []
    for seed in (0, 1, 2):
        cfg = a.default_config().with_overrides(**{"run.steps": 100, "run.seed": seed})
        base = a.run_simulation(cfg.with_overrides(**{"scheduler.mode": "baseline"}))
        apr = a.run_simulation(cfg)
        improvements.append(apr.summary(base.reports).relative_throughput_improvement)
    elapsed = time.time() - t0
    mean_improvement = float(np.mean(improvements))
    print(f"  per-seed improvements: {[f'{x:+.1%}' for x in improvements]}")
    assert mean_improvement >= 0.10, f"mean improvement {mean_improvement:+.1%}"
    assert elapsed < 300.0, f"paired comparison took {elapsed:.1f}s"


@criterion("off-policy fraction: mean over steps 10-200 in [0.20, 0.60]; baseline 0")
def test_offpolicy_fraction_band(default_april_200, default_baseline_200):
    fractions = [r.offpolicy_fraction for r in default_april_200.reports[10:]]
    mean_fraction = float(np.mean(fractions))
    print(f"  token-weighted mean off-policy fraction: {mean_fraction:.3f}")
    assert 0.20 <= mean_fraction <= 0.60
    for r in default_baseline_200.reports:
        assert r.offpolicy_fraction == 0.0
        assert r.offpolicy_sample_fraction == 0.0


@criterion("staleness: max m <= 5 over the default run (histogram archived)")
def test_staleness_regression(default_april_200):
    aggregate: dict[int, int] = {}
    for r in default_april_200.reports:
        for m, count in r.staleness_histogram.items():
            aggregate[m] = aggregate.get(m, 0) + count
    print(f"  observed staleness histogram: {dict(sorted(aggregate.items()))}")
    assert max(aggregate) <= 5


@criterion("variance ordering: sigma_instance < sigma_batch on >= 95% of steps")
def test_variance_ordering(default_april_200):
    assert default_april_200.config.workload.correlate_within_group == 0.7
    ordered = [
        r.sigma_instance < r.sigma_batch for r in default_april_200.reports
    ]
    share = float(np.mean(ordered))
    print(f"  sigma_instance < sigma_batch on {share:.1%} of steps")
    assert share >= 0.95


@criterion("gradient correctness: analytic vs central differences, 1e-5, 100 cases")
def test_gradient_against_finite_differences():
    from april_sim.policy import PolicyParams, score_gradient, sequence_log_prob
    from april_sim.rollouts import MAX_LENGTH, STOP_TOKEN, RolloutSample, Segment

    def completed(tokens, reason):
        s = RolloutSample(0, 0)
        s.segments = [Segment(version=0, token_count=len(tokens), tokens=list(tokens))]
        s.start_version = 0
        s.mark_completed(0, reason)
        return s

    t0 = time.time()
    rng = np.random.default_rng(99)
    for _ in range(100):
        vocab = int(rng.integers(1, 9))
        z = rng.normal(0, 2.0, size=vocab + 1)
        samples, advantages = [], []
        for _ in range(int(rng.integers(1, 4))):
            length = int(rng.integers(1, 21))
            natural = bool(rng.random() < 0.5)
            body = rng.integers(0, vocab, size=max(0, length - int(natural))).tolist()
            tokens = (body + [vocab]) if natural else body
            if not tokens:
                tokens, natural = [vocab], True
            samples.append(completed(tokens, STOP_TOKEN if natural else MAX_LENGTH))
            advantages.append(float(rng.normal(0, 1)) + 0.1)
        analytic = score_gradient(PolicyParams(logits=z), samples, advantages)
        h = 1e-6
        numeric = np.zeros_like(z)
        for j in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            numeric[j] = (
                sum(adv * sequence_log_prob(zp, s.token_ids()) for s, adv in zip(samples, advantages))
                - sum(adv * sequence_log_prob(zm, s.token_ids()) for s, adv in zip(samples, advantages))
            ) / (2 * h)
        denom = max(float(np.linalg.norm(numeric)), 1e-8)
        rel = float(np.linalg.norm(analytic - numeric)) / denom
        assert rel < 1e-5, f"relative gradient error {rel:.2e}"
    elapsed = time.time() - t0
    assert elapsed < 10.0, f"gradient check took {elapsed:.1f}s"


@criterion("convergence parity: toy task, april within 5% of baseline, both > 3x uniform")
def test_convergence_parity_toy_task():
    t0 = time.time()
    uniform_reward = 1.0 / (4 + 1)  # |V| = 4 plus STOP
    finals = {"baseline": [], "april": []}
    for seed in (0, 1, 2):
        for mode in ("baseline", "april"):
            cfg = a.toy_policy_config().with_overrides(
                **{"run.seed": seed, "scheduler.mode": mode}
            )
            sim = a.run_simulation(cfg)
            finals[mode].append(sim.reports[-1].mean_reward)
    elapsed = time.time() - t0
    base = float(np.mean(finals["baseline"]))
    apr = float(np.mean(finals["april"]))
    print(f"  final rewards: baseline {base:.3f}, april {apr:.3f} (uniform {uniform_reward})")
    assert base > 3 * uniform_reward
    assert apr > 3 * uniform_reward
    assert abs(apr - base) / base <= 0.05
    assert elapsed < 300.0, f"toy training took {elapsed:.1f}s"
