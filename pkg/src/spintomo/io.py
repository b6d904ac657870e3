"""File formats for simulation and reconstruction artifacts.

Histograms serialize to CSV with a JSON sidecar; reconstruction results to
JSON validating against the shipped schema; density curves to CSV for
overlay plotting.  All writers are byte-deterministic for a given input.
"""

import json
from importlib import resources

import numpy as np

from . import states

SCHEMA_RESOURCE = "result.schema.json"


def state_descriptor(state):
    """JSON-friendly description of a spin state model."""
    d = {"kind": state.kind}
    if state.kind == states.DICKE:
        d["m"] = int(state.m)
    elif state.kind == states.SQUEEZED_VACUUM:
        d["xi"] = float(state.xi)
    elif state.kind == states.NUMBER_MIXTURE:
        d["weights"] = [float(w) for w in state.weights]
    return d


def state_from_descriptor(d):
    kind = d.get("kind")
    if kind == states.CSS:
        return states.css()
    if kind == states.DICKE:
        return states.dicke(d["m"])
    if kind == states.SQUEEZED_VACUUM:
        return states.squeezed_vacuum(d["xi"])
    if kind == states.NUMBER_MIXTURE:
        return states.number_mixture(d["weights"])
    raise ValueError(f"unknown state descriptor kind {kind!r}")


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def histogram_csv_text(hist):
    lines = ["bin_center,count"]
    for center, count in zip(hist.bin_centers, hist.counts):
        lines.append(f"{float(center)!r},{int(count)}")
    return "\n".join(lines) + "\n"


def histogram_sidecar_dict(hist, cfg, state):
    return {
        "eta": _num(cfg.eta),
        "shots": int(cfg.shots),
        "bin_count": int(cfg.bin_count),
        "q_range": _num(cfg.q_range),
        "seed": int(cfg.seed),
        "phase_mode": cfg.phase_mode,
        "underflow": int(hist.underflow),
        "overflow": int(hist.overflow),
        "state": state_descriptor(state),
    }


def result_dict(result, cfg, state, k_max):
    best = result.best_record
    return {
        "eta": _num(cfg.eta),
        "shots": int(cfg.shots),
        "bin_count": int(cfg.bin_count),
        "q_range": _num(cfg.q_range),
        "seed": int(cfg.seed),
        "phase_mode": cfg.phase_mode,
        "state": state_descriptor(state),
        "k_max": int(k_max),
        "per_k": [
            {"k": int(r.k), "loglik": _num(r.loglik), "aic": _num(r.aic)}
            for r in result.per_k
        ],
        "best_k": int(result.best_k),
        "rho": [float(x) for x in result.best_rho.rho],
        "diagnostics": {
            "converged": bool(best.fit.converged),
            "em_updates": int(best.fit.em_updates),
            "em_certificate": _num(best.fit.em_certificate),
            "simplex_restarts": int(best.fit.simplex_restarts),
            "agreement_loglik_gap": _num(best.fit.agreement_loglik_gap),
            "agreement_rho_gap": _num(best.fit.agreement_rho_gap),
            "max_agreement_loglik_gap": _num(max(r.fit.agreement_loglik_gap for r in result.per_k)),
            "max_agreement_rho_gap": _num(max(r.fit.agreement_rho_gap for r in result.per_k)),
        },
        "warnings": list(result.warnings),
    }


def curves_csv_text(q, fitted, true):
    lines = ["q,fit,true"]
    for qi, fi, ti in zip(q, fitted, true):
        lines.append(f"{float(qi)!r},{float(fi)!r},{float(ti)!r}")
    return "\n".join(lines) + "\n"


def dump_json(obj):
    return json.dumps(obj, indent=2) + "\n"


def load_result_schema():
    with resources.files(__package__).joinpath(f"schemas/{SCHEMA_RESOURCE}").open() as fh:
        return json.load(fh)
