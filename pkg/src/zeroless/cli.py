"""Batch command-line harness.

Every subcommand writes a JSON report and an aligned text table. Reports
contain no timestamps, so identical configuration gives identical bytes.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resource guardrail.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product

from . import __version__
from .choices import dumps as dump_choice
from .choices import loads as load_choice
from .choices import random_choice
from .classification import (
    MAX_PERM_N,
    CoboundaryImage,
    GaugeTriple,
    coboundary,
    coboundary_image,
    count_iso_classes,
    extension_criterion,
    iso_with_permutation,
    verify_permutation_certificate,
)
from .extension import PreconditionError, full_extend, random_zero_choice, zero_choice_exists
from .gf2 import Gf2Vector, encode_cache
from .model import (
    BudgetExceeded,
    CorrectionFunction,
    ExplicitStructure,
    ModelHandle,
    all_corrections,
    materialize,
)
from .noncat import derive_obstruction_data, star_condition, sweep_grid, sweep_record
from .oracle import brute_force_iso, build_iso_from_choice, verify_isomorphism, zero_correction_implies_canonical
from .setting import GuardrailError, Setting

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
CONFIG_KEYS = {"k": int, "n": int, "m": int, "seed": int, "budget": int, "cache_dir": str, "threads": int}
DEFAULTS = {"k": 2, "n": 3, "m": 1, "seed": 0, "budget": 200_000, "cache_dir": None, "threads": 1}
CACHE_ENV = "ZEROLESS_CACHE_DIR"


class ConfigError(ValueError):
    pass


class VerificationFailure(RuntimeError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


# -- configuration -----------------------------------------------------------


def parse_config_text(text: str) -> dict:
    """JSON object, or ``key = value`` lines with '#' comments."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key = value")
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
    out = {}
    for key, val in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if val is None:
            out[key] = None
            continue
        try:
            out[key] = CONFIG_KEYS[key](val)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r} has bad value {val!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    if os.environ.get(CACHE_ENV):
        cfg["cache_dir"] = os.environ[CACHE_ENV]
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    if cfg["budget"] < 1:
        raise ConfigError("budget must be positive")
    return cfg


def setting_of(cfg: dict) -> Setting:
    try:
        return Setting(cfg["k"], cfg["n"], cfg["m"])
    except GuardrailError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- reports -----------------------------------------------------------------


def image_hash(img: CoboundaryImage) -> str:
    return hashlib.sha256(encode_cache(img.matrix)).hexdigest()


def use_image(st: Setting, cfg: dict, hashes: dict) -> CoboundaryImage:
    img = coboundary_image(st, cfg.get("cache_dir"))
    hashes[f"B_k{st.k}_n{st.n}_m{st.m}"] = image_hash(img)
    return img


def table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(h) for h in headers]] + [["-" if v is None else str(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def finish(args, cfg: dict, command: str, body: dict, text: str, hashes: dict) -> None:
    report = {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "version": __version__,
        "cache_hashes": dict(sorted(hashes.items())),
        **body,
    }
    payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    header = f"# {command}  version {__version__}\n"
    txt = header + text
    out = getattr(args, "out", None)
    if out:
        os.makedirs(out, exist_ok=True)
        stem = os.path.join(out, command.replace(" ", "_"))
        with open(stem + ".json", "w", encoding="utf-8") as fh:
            fh.write(payload)
        with open(stem + ".txt", "w", encoding="utf-8") as fh:
            fh.write(txt)
    sys.stdout.write(txt)
    if not body.get("ok", True):
        raise VerificationFailure(body.get("summary", "verification failed"), report)


def parse_f(st: Setting, text: str | None) -> CorrectionFunction:
    if not text:
        return CorrectionFunction.zero(st)
    if len(text) != len(st.domain_basis) or set(text) - {"0", "1"}:
        raise ConfigError(f"--f must be a 0/1 string of length {len(st.domain_basis)}")
    return CorrectionFunction(st, Gf2Vector.from_string(st.domain_basis, text).bits)


# -- subcommands -------------------------------------------------------------


def cmd_build(args, cfg) -> None:
    st = setting_of(cfg)
    f = parse_f(st, args.f)
    E = materialize(ModelHandle(st, f), cap=cfg["budget"])
    text = E.to_text()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    body = {
        "elements": len(E),
        "sizes": st.sizes(),
        "relations": {r: len(t) for r, t in sorted(E.relations.items())},
        "export_sha256": hashlib.sha256(text.encode()).hexdigest(),
    }
    rows = [[s, v] for s, v in st.sizes().items()] + [["total", len(E)]]
    finish(args, cfg, "build", body, table(["sort", "size"], rows), {})


def cmd_classify(args, cfg) -> None:
    st = setting_of(cfg)
    hashes: dict = {}
    img = use_image(st, cfg, hashes)
    ident = count_iso_classes(st, "identity", image=img)
    full = None
    if st.n <= MAX_PERM_N:
        full = count_iso_classes(st, "full", image=img, sample=args.sample, rng=random.Random(cfg["seed"]))
    body = {
        "domain_dim": img.domain_dim,
        "rank": img.rank,
        "quotient_dim": img.quotient_dim,
        "identity_classes": ident.count,
        "identity_representatives": [r.vector.to_string() for r in ident.representatives[:64]],
        "full_classes": full.count if full else None,
        "full_sampled": full.sampled if full else None,
        "full_burnside": full.burnside if full else None,
        "full_representatives": [r.vector.to_string() for r in full.representatives[:64]] if full else None,
    }
    rows = [[k, body[k]] for k in ("domain_dim", "rank", "quotient_dim", "identity_classes", "full_classes")]
    finish(args, cfg, "classify", body, table(["quantity", "value"], rows), hashes)


def _verify_modset(st: Setting, cfg: dict, hashes: dict) -> dict:
    use_image(st, cfg, hashes)
    fs = all_corrections(st)
    structures = {f.bits: materialize(ModelHandle(st, f), cap=cfg["budget"]) for f in fs}
    agree = disagree = unknown = 0
    first_bad = None
    for f1, f2 in product(fs, fs):
        lin = iso_with_permutation(st, f1, f2)
        if lin is not None and not verify_permutation_certificate(st, f1, f2, lin):
            raise VerificationFailure("certificate does not recompute", {})
        orc = brute_force_iso(structures[f1.bits], structures[f2.bits], budget=cfg["budget"])
        if orc.status == "unknown":
            unknown += 1
            continue
        if (lin is not None) == orc.found:
            agree += 1
        else:
            disagree += 1
            first_bad = first_bad or [f1.vector.to_string(), f2.vector.to_string()]
    pairs = len(fs) ** 2
    ok = disagree == 0 and unknown == 0
    summary = f"agree on all pairs ({pairs})" if ok else f"{disagree} disagreements, {unknown} unknown of {pairs}"
    return {"pairs": pairs, "agree": agree, "disagree": disagree, "unknown": unknown,
            "first_disagreement": first_bad, "ok": ok, "summary": summary}


def _verify_labase(st: Setting, cfg: dict, hashes: dict, trials: int) -> dict:
    """Random f and random global choice c: the induced map is an
    isomorphism onto M_{I, correction of c}."""
    rng = random.Random(cfg["seed"])
    passed = explicit = 0
    small = sum(st.sizes().values()) <= min(cfg["budget"], 5_000)
    for _ in range(trials):
        M = ModelHandle(st, CorrectionFunction.random(st, rng))
        c = random_choice(st, st.k_sets, st.k_sets, st.k1_sets, rng)
        iso = build_iso_from_choice(M, c, rng=rng)
        ok = True
        if small:
            ok = verify_isomorphism(materialize(M), materialize(iso.target), iso.name_map())
            explicit += ok
        passed += ok
    ok = passed == trials
    return {"trials": trials, "passed": passed, "explicitly_verified": explicit, "ok": ok,
            "summary": f"{passed}/{trials} choice maps verified"}


def _verify_zeros(st: Setting, cfg: dict, hashes: dict, trials: int) -> dict:
    use_image(st, cfg, hashes)
    rng = random.Random(cfg["seed"])
    passed = 0
    for _ in range(trials):
        M = ModelHandle(st, coboundary(st, GaugeTriple.random(st, rng)))
        c = zero_choice_exists(M)
        if c is not None:
            passed += zero_correction_implies_canonical(M, c).ok
    ok = passed == trials
    return {"trials": trials, "passed": passed, "ok": ok,
            "summary": f"{passed}/{trials} zero-correction choices canonical"}


def _verify_existxyz(st: Setting, cfg: dict, hashes: dict, trials: int) -> dict:
    use_image(st, cfg, hashes)
    rng = random.Random(cfg["seed"])
    agree = 0
    paths: dict = {}
    for _ in range(trials):
        f = CorrectionFunction.random(st, rng)
        M = ModelHandle(st, f)
        size = rng.randrange(st.k, st.n)
        J1 = sorted(rng.sample(range(st.n), size))
        c = random_zero_choice(M, J1, rng)
        res = full_extend(M, J1, range(st.n), c)
        crit = extension_criterion(st, f, c).holds
        agree += res.ok == crit
        for e in res.trace:
            paths[e.step] = paths.get(e.step, 0) + 1
    ok = agree == trials
    return {"trials": trials, "agree": agree, "trace_steps": dict(sorted(paths.items())), "ok": ok,
            "summary": f"extension agrees with the linear criterion on {agree}/{trials}"}


def _verify_72(st: Setting, cfg: dict, hashes: dict, trials: int) -> dict:
    img = use_image(st, cfg, hashes)
    rng = random.Random(cfg["seed"])
    checked = violations = 0
    fs = all_corrections(st) if len(st.domain_basis) <= 12 else [CorrectionFunction.random(st, rng) for _ in range(trials)]
    for f in fs:
        if not img.contains(f).holds:
            continue
        M = ModelHandle(st, f)
        witnesses = [zero_choice_exists(M)] + [random_zero_choice(M, range(st.n), rng) for _ in range(3)]
        for c in witnesses:
            F1, F2 = derive_obstruction_data(M, c)
            checked += 1
            if star_condition(st, f, F1, F2) is not None:
                violations += 1
    ok = violations == 0
    return {"checked": checked, "violations": violations, "ok": ok,
            "summary": f"(*) fails on all {checked} witnessed f" if ok else f"{violations} violations"}


def cmd_verify(args, cfg) -> None:
    st = setting_of(cfg)
    hashes: dict = {}
    suite = args.suite
    if suite == "modset":
        body = _verify_modset(st, cfg, hashes)
    elif suite == "labase":
        body = _verify_labase(st, cfg, hashes, args.trials)
    elif suite == "zerosforchoices":
        body = _verify_zeros(st, cfg, hashes, args.trials)
    elif suite == "existxyz":
        body = _verify_existxyz(st, cfg, hashes, args.trials)
    else:
        body = _verify_72(st, cfg, hashes, args.trials)
    body["suite"] = suite
    rows = [[k, v] for k, v in sorted(body.items()) if not isinstance(v, (dict, list))]
    finish(args, cfg, f"verify {suite}", body, table(["field", "value"], rows), hashes)


def _sweep_one(kmn):
    return sweep_record(*kmn)


def cmd_sweep(args, cfg) -> None:
    grid = sweep_grid(args.ks, args.n_max, args.ms)
    if cfg["threads"] > 1:
        with ProcessPoolExecutor(cfg["threads"]) as ex:
            records = list(ex.map(_sweep_one, grid))
    else:
        records = [_sweep_one(g) for g in grid]
    hashes: dict = {}
    for r in records:
        if r["status"] == "ok":
            use_image(Setting(r["k"], r["n"], r["m"]), cfg, hashes)
    bad = [r for r in records if r.get("witness") is not None and not r.get("witness_verified")]
    body = {"records": records, "ok": not bad,
            "summary": "all witnesses re-verify" if not bad else f"{len(bad)} witnesses failed re-verification"}
    headers = ["k", "n", "m", "status", "dim", "rank", "quot", "id_classes", "full_classes", "witness"]
    rows = [
        [r["k"], r["n"], r["m"], r["status"], r.get("domain_dim"), r.get("rank"), r.get("quotient_dim"),
         r.get("identity_classes"), r.get("full_classes"), r.get("witness") or "none"]
        for r in records
    ]
    finish(args, cfg, "sweep", body, table(headers, rows), hashes)


def cmd_extend(args, cfg) -> None:
    with open(args.choice, encoding="utf-8") as fh:
        c = load_choice(fh.read())
    st = c.setting
    cfg.update({"k": st.k, "n": st.n, "m": st.m})
    f = parse_f(st, args.f)
    J1 = sorted(c.index_support()) if args.j1 is None else args.j1
    J2 = list(range(st.n)) if args.j2 is None else args.j2
    M = ModelHandle(st, f)
    try:
        res = full_extend(M, J1, J2, c)
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from None
    body = {"ok": res.ok, "stuck": res.stuck, "trace": res.trace_text().splitlines(),
            "summary": "extended" if res.ok else f"stuck at {res.stuck}"}
    if res.ok and args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dump_choice(res.choice))
    finish(args, cfg, "extend", body, res.trace_text(), {})


def cmd_oracle(args, cfg) -> None:
    try:
        with open(args.left, encoding="utf-8") as fh:
            E1 = ExplicitStructure.from_text(fh.read())
        with open(args.right, encoding="utf-8") as fh:
            E2 = ExplicitStructure.from_text(fh.read())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load structures: {exc}") from None
    res = brute_force_iso(E1, E2, budget=cfg["budget"])
    if res.status == "unknown":
        raise GuardrailError(f"oracle budget of {cfg['budget']} nodes exhausted")
    if args.output and res.mapping:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(res.map_text())
    body = {"status": res.status, "nodes": res.nodes, "reason": res.reason}
    finish(args, cfg, "oracle", body, table(["status", "nodes"], [[res.status, res.nodes]]), {})


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value or JSON config file")
    common.add_argument("--k", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--budget", type=int, help="element cap for build, node cap for the oracle")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="directory for the JSON and text reports")

    p = argparse.ArgumentParser(prog="zeroless", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="materialize and export a model")
    b.add_argument("--f", help="correction function as a 0/1 string (default 0)")
    b.add_argument("--output", help="export file (text format)")

    c = sub.add_parser("classify", parents=[common], help="quotient dimension and class counts")
    c.add_argument("--sample", type=int, default=0, help="sample size when the quotient is too large")

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=["modset", "labase", "existxyz", "zerosforchoices", "72"])
    v.add_argument("--trials", type=int, default=20)

    s = sub.add_parser("sweep", parents=[common], help="parameter grid for non-isomorphism witnesses")
    s.add_argument("--ks", type=int, nargs="+", default=[2, 3])
    s.add_argument("--n-max", dest="n_max", type=int, default=8)
    s.add_argument("--ms", type=int, nargs="+", default=[0, 1, 2, 3])

    e = sub.add_parser("extend", parents=[common], help="extend a partial zero-correction choice")
    e.add_argument("choice", help="choice JSON file")
    e.add_argument("--f", help="correction function of the model as a 0/1 string")
    e.add_argument("--j1", type=int, nargs="*")
    e.add_argument("--j2", type=int, nargs="*")
    e.add_argument("--output", help="write the extended choice here")

    o = sub.add_parser("oracle", parents=[common], help="brute-force isomorphism of two exports")
    o.add_argument("left")
    o.add_argument("right")
    o.add_argument("--output", help="write the isomorphism as element pairs")
    return p


COMMANDS = {
    "build": cmd_build,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "extend": cmd_extend,
    "oracle": cmd_oracle,
}


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    except (GuardrailError, BudgetExceeded) as exc:
        _error("guardrail", str(exc))
        return EXIT_GUARD
    except VerificationFailure as exc:
        _error("verification", str(exc))
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
