"""Verdict records and artifact writers shared by the analysis commands.

A verdict is "pass" exactly when the target lies inside the stated interval;
every record carries the seed, ensemble size and config hash that produced it.
"""

import json
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class CheckResult:
    law: str
    target: float
    estimate: float
    stderr: float
    interval: tuple
    verdict: str
    seed: int
    n_paths: int
    config_hash: str


def make_result(law, target, estimate, stderr, interval, seed, n_paths, config_hash):
    lo, hi = interval
    verdict = "pass" if lo <= target <= hi else "fail"
    return CheckResult(law=law, target=float(target), estimate=float(estimate),
                       stderr=float(stderr), interval=(float(lo), float(hi)),
                       verdict=verdict, seed=int(seed), n_paths=int(n_paths),
                       config_hash=str(config_hash))


def write_report_json(path, results, extra=None):
    payload = {"results": [asdict(r) for r in results]}
    if extra:
        payload.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_lag_csv(path, lags, sups):
    with open(path, "w", newline="\n") as fh:
        fh.write("lag,sup_increment\n")
        for lag, sup in zip(lags, sups):
            fh.write(f"{float(lag)!r},{float(sup)!r}\n")
