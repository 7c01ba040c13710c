"""Replay of the bundled neonatal trial sequence.

Twelve newborns: the first received the treatment and survived, the second
received control and died, the remaining ten all received the treatment and
survived. We replay the sequence through the exact and normal engines across
null prior weights and print the allocation and posterior traces, alongside
the play-the-winner urn that the original trial used.
"""

from brar.trial import ecmo_replay_csv, replay_ecmo

for method in ("exact", "normal"):
    traces = replay_ecmo((0.0, 0.25, 0.5, 0.75, 1.0), method=method)
    print(f"== {method} method: treatment allocation by patient ==")
    header = "patient " + " ".join(f"p={p:>5}" for p in traces["p_null"])
    print(header)
    for t in traces["patients"]:
        row = " ".join(f"{traces['p_null'][p]['allocation'][t]:.3f}" for p in traces["p_null"])
        print(f"{t:>7} {row}")
    ends = {p: tr["pr_hplus"][-1] for p, tr in traces["p_null"].items()}
    print("end-of-trial Pr(H+ | y):", {p: round(v, 3) for p, v in ends.items()})
    print()

print("play-the-winner comparator:", [round(v, 3) for v in replay_ecmo((0.5,))["rpw"]])
print()
print("CSV export (also: brar ecmo-replay --pnull 0,0.5,1 --method exact --out trace.csv):")
print("\n".join(ecmo_replay_csv(replay_ecmo((0.5,), method="exact")).splitlines()[:5]) + "\n...")
