"""Batch front end: ``robustqi --config job.json --out DIR``.

A job file names a construction (thm1, thm2, thm3, ex61, ex62, cor54, or
``matrix`` for perturb-sample), a job, and parameter/sampling blocks.  All
numbers are given as strings ("p/q" or decimal with exponent).  Reports are
written once, at the end, as sorted-key JSON plus CSV for gap scans.

Exit status: 0 when every certificate passes (verdict jobs always 0 once a
verdict is produced), 1 on a certification failure, 2 on a bad config.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import mpmath
import numpy as np

from . import constructions as K
from .dynamics import GateError, TransversalityError, sample_additive, verify_contraction
from .localfield import FieldSpec, FieldSpecError, make_field
from .matlin import Matrix
from .pingpong import GapSeries, anosov_verdict, certify_pingpong, gap_scan
from .spectral import HenselError, PreconditionError, diagonalize_perturbed, theta_bound

JOBS = ("build", "certify-pingpong", "verify-claim", "gap-scan", "anosov-verdict", "perturb-sample")
CONSTRUCTIONS = ("thm1", "thm2", "thm3", "ex61", "ex62", "cor54", "matrix")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _num(x: Any, what: str = "number") -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ConfigError(f"{what} must be a string like '3/4' or '1e-2', got {x!r}")
    try:
        return Fraction(str(x).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"malformed {what}: {x!r}") from exc


def _int(x: Any, what: str) -> int:
    v = _num(x, what)
    if v.denominator != 1:
        raise ConfigError(f"{what} must be an integer, got {x!r}")
    return int(v)


def _decimal(x: Any, what: str) -> str:
    """Validated decimal string, kept as text for big-float contexts."""
    _num(x, what)
    return str(x).strip()


def _int_list(x: Any, what: str) -> list[int]:
    if isinstance(x, list):
        return [_int(v, what) for v in x]
    k = _int(x, what)
    return [p for p in range(-k, k + 1) if p]


class JobConfig:
    """Validated job description."""

    def __init__(self, raw: dict, seed: int | None = None, profile: str | None = None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.construction = raw.get("construction")
        if self.construction not in CONSTRUCTIONS:
            raise ConfigError(f"unknown construction {self.construction!r}")
        self.job = raw.get("job")
        if self.job not in JOBS:
            raise ConfigError(f"unknown job {self.job!r}")
        self.params = raw.get("params", {})
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object")
        self.field_spec = None
        if "field" in raw:
            try:
                self.field_spec = FieldSpec.from_dict({k: (int(v) if k != "kind" else v)
                                                       for k, v in raw["field"].items()})
            except (FieldSpecError, ValueError, TypeError, AttributeError) as exc:
                raise ConfigError(f"bad field block: {exc}") from exc
        sampling = raw.get("sampling", {})
        scan = raw.get("scan", {})
        if seed is None:
            if "seed" not in sampling:
                raise ConfigError("sampling.seed is required (no wall-clock default)")
            seed = _int(sampling["seed"], "seed")
        self.seed = seed
        self.samples = _int(sampling.get("samples", "100"), "samples")
        self.powers = _int_list(sampling.get("powers", "4"), "powers")
        self.syllable_cap = _int(sampling.get("syllable_cap", "4"), "syllable_cap")
        self.scan_L = _int(scan.get("L", "6"), "scan.L")
        self.scan_js = [_int(j, "scan.js") for j in scan["js"]] if "js" in scan else None
        self.scan_measure = scan.get("measure", "syllable")
        if self.scan_measure not in ("syllable", "word"):
            raise ConfigError("scan.measure must be 'syllable' or 'word'")
        self.scan_cap = _int(scan.get("cap", "4"), "scan.cap")
        self.profile = profile or raw.get("profile", "desk")
        self.outputs = raw.get("outputs", {})
        stem = f"{self.construction}-{self.job}"
        self.json_name = self.outputs.get("json", stem + ".json")
        self.csv_name = self.outputs.get("csv", stem + ".csv")



# ---------------------------------------------------------------------------
# JSON rendering
# ---------------------------------------------------------------------------

def jsonable(x: Any) -> Any:
    """Deterministic JSON form: exact numbers as "p/q", floats as repr, mp
    numbers as 30-digit strings."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, mpmath.mpc):
        return [mpmath.nstr(x.real, 30), mpmath.nstr(x.imag, 30)]
    if isinstance(x, mpmath.mpf) or type(x).__name__ in ("mpf", "mpc"):
        return mpmath.nstr(x, 30)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, Matrix):
        return [[jsonable(v) for v in r] for r in x.rows]
    return str(x)


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _build(cfg: JobConfig) -> Any:
    P = cfg.params
    name = cfg.construction
    if name == "thm1":
        return K.build_thm1(K.Thm1Data(
            p=_int(P.get("p", "2"), "p"), nu=_num(P.get("nu", "1/128"), "nu"),
            nus=tuple(_num(v, "nus") for v in P.get("nus", [])),
            n=_int(P.get("n", "3"), "n"), m=_int(P.get("m", "2"), "m"),
            eps=_num(P["eps"], "eps") if "eps" in P else None,
            depth=_int(P.get("depth", "64"), "depth"), seed=cfg.seed))
    if name == "thm2":
        return K.build_thm2(K.Thm2Data(
            d=_int(P.get("d", "2"), "d"), n=_int(P.get("n", "3"), "n"),
            lam=_num(P.get("lam", "100000"), "lam"), eta=_num(P.get("eta", "1/10"), "eta"),
            m=_int(P.get("m", "1"), "m"), precision=_int(P.get("precision", "512"), "precision"),
            seed=cfg.seed))
    if name == "thm3":
        prof = P.get("profile", cfg.profile)
        kw = {k: _decimal(P[k], k) for k in ("eps", "lam", "kappa", "lam1") if k in P}
        if "precision" in P:
            kw["precision"] = _int(P["precision"], "precision")
        try:
            return K.build_thm3(K.Thm3Data.from_profile(prof, **kw))
        except ValueError as exc:
            if isinstance(exc, PreconditionError):
                raise
            raise ConfigError(str(exc)) from exc
    if name == "ex61":
        return K.build_example61(_int(P.get("p", "2"), "p"), _num(P.get("nu", "1/128"), "nu"),
                                 _int(P.get("depth", "64"), "depth"))
    if name == "ex62":
        return K.build_example62(_int(P.get("precision", "2048"), "precision"))
    if name == "cor54":
        ratios = tuple(_decimal(r, "ratios") for r in P.get("ratios", ["4", "2", "1.5", "1.1", "1"]))
        return K.build_cor54(ratios=ratios, lam=_num(P.get("lam", "2"), "lam"),
                             r=_int(P["r"], "r") if "r" in P else None,
                             precision=_int(P.get("precision", "256"), "precision"))
    raise ConfigError(f"construction {name!r} only supports perturb-sample")


def _reps(cfg: JobConfig, b: Any) -> list[tuple[str, Any]]:
    if cfg.construction == "ex62":
        return [("", b.build.rep)]
    if cfg.construction == "cor54":
        return [(f"ratio={r}", rep) for r, rep in zip(b.ratios, b.members)]
    return [("", b.rep)]


def _checks_of(b: Any) -> dict:
    for attr in ("checks", "gates"):
        if hasattr(b, attr):
            return getattr(b, attr)
    if hasattr(b, "build"):
        return b.build.checks
    return {}


# ---------------------------------------------------------------------------
# jobs
# ---------------------------------------------------------------------------

def job_build(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    checks = _checks_of(b)
    report: dict = {"checks": checks}
    if cfg.construction == "thm3":
        report["admissible"] = b.admissible
        report["profile"] = b.data.profile
        report["A"] = b.A
        report["B"] = b.B.power(1)
        ok = True  # profile gates are informational; a desk profile is not admissible by design
    else:
        ok = all(c["ok"] for c in checks.values())
    if cfg.construction == "thm1":
        report.update(C=b.C, eps=b.eps, theta=b.theta,
                      generators=[{"matrix": g.matrix, "radius": g.radius} for g in b.generators])
    elif cfg.construction == "ex61":
        report.update(a1=b.a1, a2=b.a2, radius_a1=b.radius_a1, radius_a2=b.radius_a2)
    elif cfg.construction == "ex62":
        report.update(psi_t=b.build.psi_t, z=b.z_matrix(), theta=b.build.theta,
                      theta_prime=b.build.theta_prime, z_radius=b.z_radius)
    elif cfg.construction == "thm2":
        report.update(psi_t=b.psi_t, theta=b.theta, theta_prime=b.theta_prime)
    elif cfg.construction == "cor54":
        report.update(r=b.r, M=b.M, beta=b.beta)
    return (0 if ok else 1), report, {}


def job_certify(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    if cfg.construction == "cor54":
        raise ConfigError("cor54 has no ping-pong instance; use verify-claim")
    instances = [b.pingpong_instance(1), b.pingpong_instance(-1)] if cfg.construction == "thm3" \
        else [b.pingpong_instance()]
    certs = [certify_pingpong(inst, cfg.samples, cfg.syllable_cap, cfg.seed, cfg.threads)
             for inst in instances]
    ok = all(c.passed for c in certs)
    return (0 if ok else 1), {"certificates": [c.to_json() for c in certs]}, {}


def job_verify(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    name = cfg.construction
    if name == "thm1":
        certs = [K.verify_claim1(b, cfg.samples, cfg.powers, cfg.seed, cfg.threads)]
    elif name in ("thm2", "ex62"):
        build = b if name == "thm2" else b.build
        pw = sorted(set(cfg.powers) | {0})
        certs = [K.verify_claim4(build, cfg.samples, pw, cfg.seed, threads=cfg.threads,
                                 profile=f"{build.field.spec.precision} bits")]
    elif name == "thm3":
        certs = [K.verify_thm3_inclusions(b, cfg.samples, [p for p in cfg.powers if p > 0],
                                          cfg.seed, cfg.threads)]
    elif name == "ex61":
        N = b.field.abs(b.nu)
        c = verify_contraction(K.example61_form(b), 1, N ** -19, N ** -21, cfg.powers,
                               cfg.samples, cfg.seed, additive_radius=b.radius_a2)
        js = c.to_json(b.field)
        js.update(name="ex61:contraction", anchor="ex61:contraction", passed=c.passed)
        return (0 if c.passed else 1), {"certificates": [js]}, {}
    elif name == "cor54":
        rows = {}
        ok = all(v["ok"] for v in b.checks.values())
        l2 = _num(cfg.params.get("lam", "2"), "lam")
        for q in b.ratios:
            l1 = Fraction(str(q)) * l2
            res = K.cor54_transversality_exact(l1, l2, cfg.powers)
            rows[str(q)] = all(res)
            ok = ok and all(res)
        return (0 if ok else 1), {"certificates": [{"name": "cor54:transversality",
                                                    "anchor": "cor54:transversality",
                                                    "passed": ok, "gates": b.checks,
                                                    "exact_transversality": rows}]}, {}
    else:
        raise ConfigError(f"no claim to verify for {name}")
    ok = all(c.passed for c in certs)
    return (0 if ok else 1), {"certificates": [c.to_json() for c in certs]}, {}


def _scan(cfg: JobConfig, rep: Any) -> GapSeries:
    js = cfg.scan_js if cfg.scan_js is not None else list(range(1, rep.n))
    return gap_scan(rep, cfg.scan_L, js, cfg.scan_measure, cfg.scan_cap, cfg.threads)


def job_gap_scan(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    report: dict = {"series": []}
    csvs: dict = {}
    for label, rep in _reps(cfg, b):
        s = _scan(cfg, rep)
        fits = {str(k): {"slope": f.slope, "intercept": f.intercept, "stderr": f.stderr,
                         "points": f.points} for k, f in s.fits.items()}
        report["series"].append({"member": label, "measure": s.measure, "fits": fits,
                                 "counts": {str(k): v for k, v in s.counts.items()}})
        csvs[label] = s.to_csv()
    return 0, report, csvs


def job_verdict(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    out = []
    for label, rep in _reps(cfg, b):
        v = anosov_verdict(rep, cfg.scan_L, cfg.scan_js, measure=cfg.scan_measure,
                           cap=cfg.scan_cap, threads=cfg.threads)
        out.append({"member": label, "verdicts": {str(j): {"status": e.status, "slope": e.slope,
                                                           "fit_error": e.fit_error,
                                                           "witness": e.witness}
                                                  for j, e in v.items()}})
    return 0, {"verdicts": out}, {}


def _matrix_target(cfg: JobConfig) -> tuple[Matrix, Fraction]:
    P = cfg.params
    if cfg.field_spec is None or cfg.field_spec.kind != "padic":
        raise ConfigError("perturb-sample on a matrix needs a padic field block")
    f = make_field(cfg.field_spec)
    diag = P.get("C")
    if not isinstance(diag, list) or not diag:
        raise ConfigError("params.C must be a list of diagonal entries")
    C = Matrix.diag(f, [_num(x, "matrix entry") for x in diag])
    return C, _num(P.get("eps", "1/2"), "eps")


def job_perturb(cfg: JobConfig, b: Any) -> tuple[int, dict, dict]:
    if cfg.construction == "matrix":
        C, eps = _matrix_target(cfg)
    elif cfg.construction == "thm1":
        C, eps = b.C, b.eps
    elif cfg.construction == "ex61":
        C, eps = b.a1, b.eps
    else:
        raise ConfigError("perturb-sample needs a p-adic diagonal target (thm1, ex61, matrix)")
    theta = theta_bound(C, eps)
    rng = np.random.default_rng(cfg.seed)
    rows, failures, witness = [], 0, None
    for i in range(cfg.samples):
        C2 = sample_additive(C, theta, rng)
        try:
            res = diagonalize_perturbed(C, C2, eps)
            rows.append({"conjugator_defect": res.conjugator_defect, "eigen_defect": res.eigen_defect,
                         "residual": res.residual})
        except (AssertionError, HenselError) as exc:
            failures += 1
            witness = witness or {"sample": i, "error": str(exc), "C2": C2}
    worst = {k: max((r[k] for r in rows), default=None)
             for k in ("conjugator_defect", "eigen_defect", "residual")}
    report = {"certificates": [{"name": "perturb-sample", "anchor": "perturbation-diagonalization",
                                "samples": cfg.samples, "failures": failures,
                                "passed": failures == 0, "theta": theta, "eps": eps,
                                "worst": worst, "witness": witness}]}
    return (0 if failures == 0 else 1), report, {}


DISPATCH: dict[str, Callable[[JobConfig, Any], tuple[int, dict, dict]]] = {
    "build": job_build, "certify-pingpong": job_certify, "verify-claim": job_verify,
    "gap-scan": job_gap_scan, "anosov-verdict": job_verdict, "perturb-sample": job_perturb,
}


def run(cfg: JobConfig, out_dir: Path) -> int:
    b = None if cfg.construction == "matrix" else _build(cfg)
    if cfg.construction == "matrix" and cfg.job != "perturb-sample":
        raise ConfigError("the matrix construction only supports perturb-sample")
    status, report, csvs = DISPATCH[cfg.job](cfg, b)
    report = {"construction": cfg.construction, "job": cfg.job, "seed": cfg.seed,
              "anchor": f"{cfg.construction}:{cfg.job}", "status": status, **report}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / cfg.json_name).write_text(dumps(report))
    for label, text in csvs.items():
        name = cfg.csv_name if not label else cfg.csv_name.replace(".csv", f"-{label}.csv")
        (out_dir / name).write_text(text)
    return status


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="robustqi", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", default=Path("."), type=Path)
    ap.add_argument("--profile", choices=("paper", "desk"), default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        raw = json.loads(args.config.read_text())
        cfg = JobConfig(raw, args.seed, args.profile)
        cfg.threads = max(1, args.threads)
        return run(cfg, args.out)
    except (OSError, json.JSONDecodeError, ConfigError, PreconditionError,
            GateError, TransversalityError) as exc:
        print(f"robustqi: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
