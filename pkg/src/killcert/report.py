"""Running suites into a report, writing it, and re-verifying it later."""

from __future__ import annotations

import gzip
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

import flint

from . import __version__, hpn_suites, op2_suites
from .certs import SCHEMA_VERSION, CertBundle, convention_hash, conventions, digest
from .linalg import DEFAULT_PRIMES

log = logging.getLogger(__name__)

SUITE_ORDER = ("algebra", "killing", "lie", "kernel", "indecomposable", "flow")
AVAILABLE = {
    "hpn": ("algebra", "killing", "lie", "kernel", "indecomposable"),
    "op2": ("algebra", "killing", "lie", "indecomposable", "flow"),
}
LONG_N = 4

if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


class ConfigError(ValueError):
    pass


@dataclass
class SuiteConfig:
    target: str
    n: int | None = None
    suites: list = field(default_factory=lambda: ["all"])
    sample_count: int = 2000
    seed: int = 0
    primes: list = field(default_factory=lambda: list(DEFAULT_PRIMES))
    tol: float = 1e-9
    out_path: str | None = None
    allow_long: bool = False
    jobs: int = 1

    def resolved_suites(self) -> list[str]:
        avail = AVAILABLE[self.target]
        if "all" in self.suites:
            chosen = set(avail)
            if self.target == "hpn" and (self.n or 0) < 2:
                chosen -= {"kernel", "indecomposable"}
        else:
            chosen = set(self.suites)
        return [s for s in SUITE_ORDER if s in chosen]

    def validate(self) -> None:
        if self.target not in AVAILABLE:
            raise ConfigError(f"unknown target {self.target!r}")
        unknown = set(self.suites) - set(SUITE_ORDER) - {"all"}
        if unknown:
            raise ConfigError(f"unknown suites: {', '.join(sorted(unknown))}")
        suites = self.resolved_suites()
        bad = [s for s in suites if s not in AVAILABLE[self.target]]
        if bad:
            raise ConfigError(f"suites not available for {self.target}: {', '.join(bad)}")
        if self.target == "hpn":
            if self.n is None or self.n < 1:
                raise ConfigError("hpn needs --n >= 1")
            if self.n < 2 and {"kernel", "indecomposable"} & set(suites):
                raise ConfigError("kernel and indecomposable suites need n >= 2")
            if "kernel" in suites:
                d = hpn_suites.dim_v(self.n)
                if self.sample_count < d * (d + 1) // 2:
                    raise ConfigError(f"kernel suite needs at least {d * (d + 1) // 2} samples")
            if self.n >= LONG_N and {"kernel", "indecomposable"} & set(suites) and not self.allow_long:
                raise ConfigError(f"n = {self.n} is long-running; pass --allow-long")
        if self.target == "op2" and "indecomposable" in suites and self.sample_count < 1500:
            raise ConfigError("the op2 indecomposable suite needs at least 1500 samples")
        if "flow" in suites and not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if not self.primes:
            raise ConfigError("at least one prime is needed")
        for p in self.primes:
            if not (2 < p < 2 ** 63 and flint.fmpz(p).is_prime()):
                raise ConfigError(f"{p} is not an odd prime below 2**63")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("--seed must fit in 64 bits")

    def echo(self) -> dict:
        out = asdict(self)
        out["suites"] = self.resolved_suites()
        out.pop("out_path")
        out.pop("jobs")
        return out


def estimate_seconds(cfg: SuiteConfig) -> float:
    """Rough cost of the witness solve, scaled from the n = 3 run (about 70 s)."""
    if cfg.target != "hpn" or "indecomposable" not in cfg.resolved_suites():
        return 0.0
    n = cfg.n
    m = (n + 1) * (2 * n + 3)
    cols = m * (m + 1) // 2
    gap = max(1, hpn_suites.decomposable_gap(n))
    return 70.0 * (cols / 666) ** 3 * gap / 42


def _run_suite(name: str, cfg: SuiteConfig) -> CertBundle:
    primes = tuple(cfg.primes)
    if cfg.target == "hpn":
        n = cfg.n
        if name == "algebra":
            return hpn_suites.algebra_suite(n)
        if name == "killing":
            return hpn_suites.killing_suite(n, seed=cfg.seed)
        if name == "lie":
            return hpn_suites.lie_suite(n, seed=cfg.seed)
        if name == "kernel":
            return hpn_suites.phi_kernel_suite(n, cfg.sample_count, cfg.seed, primes, cfg.jobs)
        if name == "indecomposable":
            return hpn_suites.indecomposability_suite_hpn(n, cfg.sample_count, cfg.seed, primes, cfg.jobs)
    else:
        if name == "algebra":
            return op2_suites.algebra_suite(cfg.seed)
        if name == "killing":
            return op2_suites.killing_suite(cfg.seed)
        if name == "lie":
            return op2_suites.lie_suite(cfg.seed)
        if name == "indecomposable":
            return op2_suites.indecomposability_suite_op2(cfg.sample_count, cfg.seed, primes, cfg.jobs)
        if name == "flow":
            return op2_suites.flow_suite(cfg.seed, cfg.tol)
    raise ConfigError(f"no suite {name!r} for {cfg.target}")


def run(cfg: SuiteConfig) -> tuple[dict, int]:
    """Execute the configured suites; returns (report, exit code)."""
    cfg.validate()
    t0 = time.perf_counter()
    bundles = []
    for name in cfg.resolved_suites():
        log.info("running %s/%s", cfg.target, name)
        try:
            b = _run_suite(name, cfg)
        except Exception as exc:  # a crashed suite is a failed suite
            log.exception("suite %s failed", name)
            b = CertBundle(name, cfg.target)
            b.claim("completed", True, False)
            b.notes.append(f"{type(exc).__name__}: {exc}")
        log.info("%s/%s: %s", cfg.target, name, b.status)
        bundles.append(b)
    n = cfg.n if cfg.target == "hpn" else None
    report = {
        "schema": SCHEMA_VERSION,
        "toolkit": {"name": "killcert", "version": __version__},
        "config": cfg.echo(),
        "conventions": conventions(n),
        "convention_hash": convention_hash(n),
        "suites": [b.to_json() for b in bundles],
        "status": "pass" if all(b.passed for b in bundles) else "fail",
        "timing": {"total": round(time.perf_counter() - t0, 3)},
    }
    report["digest"] = report_digest(report)
    return report, 0 if report["status"] == "pass" else 1


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def report_digest(report: dict) -> str:
    body = {k: v for k, v in report.items() if k != "digest"}
    return digest(strip_timing(body))


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_report(report: dict, path: str) -> None:
    """Atomic write; gzip (with a fixed mtime) when the path ends in .gz."""
    data = dumps(report).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-")
    try:
        with os.fdopen(fd, "wb") as fh:
            if path.endswith(".gz"):
                with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, filename="") as gz:
                    gz.write(data)
            else:
                fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_report(path: str) -> dict:
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return json.load(fh)


_REVERIFY = {
    ("hpn", "kernel"): hpn_suites.reverify_kernel,
    ("hpn", "indecomposable"): hpn_suites.reverify_indecomposable,
    ("op2", "indecomposable"): op2_suites.reverify_indecomposable,
    ("op2", "algebra"): op2_suites.reverify_algebra,
}


def reverify(report: dict) -> list[str]:
    """Re-run the exact certificate checks recorded in a report; returns the problems found."""
    errors = []
    if report.get("schema") != SCHEMA_VERSION:
        return [f"unsupported schema {report.get('schema')!r}"]
    if report.get("digest") != report_digest(report):
        errors.append("report digest does not match its contents")
    cfg = report["config"]
    n = cfg.get("n") if cfg["target"] == "hpn" else None
    if report.get("convention_hash") != convention_hash(n):
        errors.append("convention hash differs from this implementation")
    for obj in report["suites"]:
        b = CertBundle.from_json(obj)
        failed = [k for k, c in b.claims.items() if not c["ok"]]
        if obj.get("status") != "pass" or failed or not b.claims:
            errors.append(f"{b.target}/{b.suite}: recorded as failing ({', '.join(failed) or 'no claims'})")
            continue
        check = _REVERIFY.get((b.target, b.suite))
        if check is not None:
            errors.extend(f"{b.target}/{e}" for e in check(b))
    return errors


def summary_rows(report: dict) -> list[list[str]]:
    rows = []
    for s in report["suites"]:
        for name, c in s["claims"].items():
            rows.append([s["target"], s["suite"], name, _short(c["expected"]), _short(c["observed"]),
                         "pass" if c["ok"] else "fail"])
    return rows


def _short(v) -> str:
    text = json.dumps(v) if not isinstance(v, str) else v
    return text if len(text) <= 60 else text[:57] + "..."
