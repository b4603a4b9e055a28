"""The decode engine and the straggler bubble.

A decode iteration costs d0 + d1 * b seconds for b active sequences and adds
one token to each. Aggregate throughput therefore saturates at 1/d1 tokens/s;
when a batch drains down to its last long sequences, the rate collapses to
roughly 1/(d0 + d1) - that collapse is the idle "bubble" synchronous RL pays
on every step.
"""

from april_sim import EngineConfig, LengthDrivenEngine, RolloutSample

cfg = EngineConfig(d0=0.05, d1=0.002, max_slots=64, l_max=100_000)

print("=== aggregate rate vs batch size ===\n")
for b in [1, 4, 16, 64, 256, 1000]:
    print(f"  b={b:>5}: {cfg.aggregate_rate(b):7.1f} tokens/s")
print(f"  limit 1/d1 = {1 / cfg.d1:.0f} tokens/s\n")


def run(lengths):
    eng = LengthDrivenEngine(cfg)
    eng.begin_step(0)
    for i, target in enumerate(lengths):
        s = RolloutSample(i, 0)
        s.target_length = target
        eng.submit(s)
    while not eng.idle:
        eng.decode_until_event()
    return eng.clock, eng.cumulative_tokens


print("=== one straggler stalls the whole batch ===\n")
length = 1000
even_wall, even_tokens = run([length] * 64)
strag_wall, strag_tokens = run([length] * 63 + [10 * length])
print(f"  64 x {length} tokens          : wall {even_wall:8.1f}s  throughput {even_tokens/even_wall:6.1f} tok/s")
print(f"  63 x {length} + 1 x {10*length} : wall {strag_wall:8.1f}s  throughput {strag_tokens/strag_wall:6.1f} tok/s")
extra = strag_wall - even_wall
print(f"\n  extra wall time {extra:.1f}s, of which the drain at b=1 accounts for")
print(f"  {9 * length} iterations x (d0 + d1) = {9 * length * (cfg.d0 + cfg.d1):.1f}s - the bubble.")
