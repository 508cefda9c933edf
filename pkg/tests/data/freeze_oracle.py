"""Select the seeded suites and freeze their oracle spectra.

Run from the repository root:  python3 tests/data/freeze_oracle.py

Selection uses the determinant-root oracle only.  A root counts as reachable
when 1/lambda_ex is the dominant eigenvalue of P (T - eps)^-1 V P and the gap to
the next eigenvalue is wide enough for the default inner iteration budget to
resolve it (see ``budget_gap_ratio``).
"""
import json
import pathlib
import warnings

from waxman.io import gen_random
from waxman.iteration import InnerConfig
from waxman.oracle import budget_gap_ratio, dominant_branch_roots, eig_all_small
from waxman.perturbation import PerturbationConfig, perturb_potential

LAMBDA_EX = 2.0
OUT = pathlib.Path(__file__).with_name("oracle_suites.json")


def pairs(zs):
    return [[z.real, z.imag] for z in zs]


def main():
    cfg = InnerConfig()
    gap = budget_gap_ratio(cfg.tol_vector, cfg.max_iterations)
    delta = PerturbationConfig().delta
    warnings.simplefilter("error")
    suites = {"lambda_ex": LAMBDA_EX, "min_gap_ratio": gap, "delta": delta}

    ground = []
    seed = 0
    while len(ground) < 25:
        T, V = gen_random(20, seed, "complex-general")
        reach = dominant_branch_roots(T, V, LAMBDA_EX, min_gap_ratio=gap)
        reach = [r for r in reach if abs(r.epsilon.imag) > 1e-6]
        if reach:
            ground.append({"seed": seed,
                           "spectrum": pairs(eig_all_small(T - LAMBDA_EX * V)),
                           "reachable": pairs(r.epsilon for r in reach)})
        seed += 1
    suites["ground_20"] = ground

    real = []
    seed = 0
    while len(real) < 10:
        T, V = gen_random(20, seed, "real-symmetric")
        reach = dominant_branch_roots(T, perturb_potential(V, delta), LAMBDA_EX,
                                      min_gap_ratio=gap)
        if reach:
            shift = 1j * LAMBDA_EX * delta
            real.append({"seed": seed,
                         "spectrum": pairs(eig_all_small(T - LAMBDA_EX * V)),
                         "reachable": pairs(r.epsilon + shift for r in reach)})
        seed += 1
    suites["real_20"] = real

    excited = []
    seed = 0
    while len(excited) < 10:
        T, V = gen_random(10, seed, "complex-general")
        reach = dominant_branch_roots(T, V, LAMBDA_EX, min_gap_ratio=gap)
        if reach and all(dominant_branch_roots(T, V, LAMBDA_EX, deflate=[r.epsilon],
                                               min_gap_ratio=gap) for r in reach):
            excited.append({"seed": seed,
                            "spectrum": pairs(eig_all_small(T - LAMBDA_EX * V)),
                            "reachable": pairs(r.epsilon for r in reach)})
        seed += 1
    suites["excited_10"] = excited

    OUT.write_text(json.dumps(suites, indent=1) + "\n")
    for key in ("ground_20", "real_20", "excited_10"):
        print(key, [e["seed"] for e in suites[key]])


if __name__ == "__main__":
    main()
