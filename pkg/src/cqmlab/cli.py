"""Batch frontend: scenario files in, machine-readable reports out.

A scenario is a JSON document naming example constructions and a list
of jobs (radius, multiplicity table, distance bounds, audits, family
studies).  Runs are deterministic for a fixed seed and platform; the
report serializer sorts keys and formats every float as %.9e, so a
repeated run produces byte-identical output.

Exit codes: 0 on success, 2 on scenario parse/validation errors, 3 when
an audit fails and the policy is "fail" (the default; "warn" downgrades).
``QGH_THREADS`` caps the linear-algebra thread pools and is echoed in
the environment stamp.
"""

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import distoq as dq
from . import fields as fl
from . import group_action as ga
from . import examples as ex


class ScenarioError(Exception):
    """Malformed scenario: carries a human-readable location diagnostic."""


# ---------------------------------------------------------------------------
# deterministic serialization


def _render(obj, indent: int = 0) -> str:
    pad = " " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x or x in (float("inf"), float("-inf")):
            return "null"
        return format(x, ".9e")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(pad + "  " + _render(v, indent + 2) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        inner = ",\n".join(
            pad + "  " + json.dumps(k) + ": " + _render(v, indent + 2)
            for k, v in items)
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def render_json(report: dict) -> str:
    return _render(report) + "\n"


def render_csv_tables(report: dict) -> dict:
    """Extract plotter-ready CSV tables from a report: one per job that
    produced a trend table (columns t, upper, lower, slack) and one per
    multiplicity table."""
    tables = {}
    for job in report.get("jobs", []):
        res = job.get("result") or {}
        rows = res.get("rows")
        if rows and all("upper" in r for r in rows if isinstance(r, dict)):
            lines = ["t,upper,lower,slack"]
            for r in rows:
                if "upper" not in r:
                    continue
                lines.append(",".join([str(r["t"]), format(r["upper"], ".9e"),
                                       format(r["lower"], ".9e"),
                                       format(r["slack"], ".9e")]))
            tables[f"{job['name']}_trend.csv"] = "\n".join(lines) + "\n"
        mult = res.get("multiplicity") or res.get("table")
        if isinstance(mult, dict) and "table" in mult:
            mult = mult["table"]
        if isinstance(mult, dict) and mult and all(isinstance(v, dict) for v in mult.values()):
            chars = sorted({c for row in mult.values() for c in row})
            lines = ["t," + ",".join(chars)]
            for t in sorted(mult, key=str):
                lines.append(str(t) + "," + ",".join(str(mult[t][c]) for c in chars))
            tables[f"{job['name']}_mult.csv"] = "\n".join(lines) + "\n"
    return tables


# ---------------------------------------------------------------------------
# scenario loading


_EXAMPLE_KEYS = {"cycle": {"m"}, "torus": {"q", "p"}, "sphere": {"two_j", "grid"}}
_JOB_KINDS = {"example", "radius", "mult", "dist", "audit", "family", "embed"}
_PHI_RULES = {"identity", "cycle_refine", "torus_freq", "berezin"}


def load_scenario(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from exc
    validate_scenario(doc)
    return doc


def validate_scenario(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be an object")
    if "seed" not in doc:
        raise ScenarioError("scenario requires an explicit 'seed'")
    names = set()
    for i, spec in enumerate(doc.get("examples", [])):
        where = f"examples[{i}]"
        for key in ("name", "family"):
            if key not in spec:
                raise ScenarioError(f"{where}: missing '{key}'")
        if spec["family"] not in _EXAMPLE_KEYS:
            raise ScenarioError(f"{where}: unknown family {spec['family']!r}")
        extra = set(spec) - _EXAMPLE_KEYS[spec["family"]] - {"name", "family", "seed"}
        if extra:
            raise ScenarioError(f"{where}: unknown fields {sorted(extra)}")
        names.add(spec["name"])
    for i, job in enumerate(doc.get("jobs", [])):
        where = f"jobs[{i}]"
        kind = job.get("kind")
        if kind not in _JOB_KINDS:
            raise ScenarioError(f"{where}: unknown kind {kind!r}")
        for ref_key in ("example", "a", "b", "reference"):
            ref = job.get(ref_key)
            if ref is not None and ref not in names:
                raise ScenarioError(
                    f"{where}: reference {ref!r} does not name a declared example")
        if kind in ("dist", "audit") and job.get("phi", "identity") not in _PHI_RULES:
            raise ScenarioError(f"{where}: unknown phi rule {job.get('phi')!r}")


def _build_examples(doc: dict) -> dict:
    built = {}
    for spec in doc.get("examples", []):
        desc = ex.ExampleDescriptor.make(
            spec["family"], seed=spec.get("seed", doc.get("seed", 0)),
            **{k: v for k, v in spec.items() if k not in ("name", "family", "seed")})
        built[spec["name"]] = (desc, desc.build())
    return built


def _characters_for(desc: ex.ExampleDescriptor, cq) -> list:
    p = dict(desc.params)
    if desc.family == "torus":
        return ex.torus_characters(int(p["q"]))
    if desc.family == "cycle":
        return ex.cycle_characters(int(p["m"]))
    if desc.family == "sphere":
        return ex.sphere_characters(int(p["two_j"]))
    raise ScenarioError(f"no character table for family {desc.family!r}")


def _phi_for(rule: str, a, b):
    if rule == "identity":
        return dq.identity_map(a)
    if rule == "cycle_refine":
        return dq.cycle_refinement_map(a, b)
    if rule == "torus_freq":
        return dq.torus_frequency_map(a, b)
    if rule == "berezin":
        tja = a.dim - 1
        tjb = b.dim - 1
        return dq.berezin_transport_map(a, b, ex.berezin_maps(tja), ex.berezin_maps(tjb))
    raise ScenarioError(f"unknown phi rule {rule!r}")


# ---------------------------------------------------------------------------
# job runners


def _run_job(job: dict, built: dict, defaults: dict) -> dict:
    kind = job["kind"]
    seed = int(job.get("seed", defaults["seed"]))
    eps_net = float(job.get("eps_net", defaults["eps_net"]))
    budget = int(job.get("budget", defaults["budget"]))

    if kind == "example":
        desc, cq = built[job["example"]]
        return {
            "descriptor": desc.as_dict(), "dim": cq.dim,
            "real_dim": cq.space.real_dim, "group_size": cq.action.group.size,
            "group": cq.action.group.descriptor,
            "seminorm_kernel_size": int(cq.action.seminorm_kernel()[0].size),
            "ergodic": bool(ga.ergodicity_check(
                cq.action, None if cq.space.is_full else cq.space.complex_basis())),
        }

    if kind == "radius":
        _, cq = built[job["example"]]
        value = cq.radius()
        bound = cq.action.group.haar_mean_length()
        out = {"radius": value, "method": cq.radius_method(),
               "length_mean_bound": bound, "within_bound": bool(value <= bound + 1e-6)}
        if job.get("diameter"):
            diam = cq.state_diameter(sample=int(job.get("sample", 16)), seed=seed)
            out["state_diameter"] = diam
            out["consistency_gap"] = abs(diam / 2.0 - value) / max(value, 1e-12)
        return out

    if kind == "mult":
        desc, cq = built[job["example"]]
        chars = _characters_for(desc, cq)
        basis = None if cq.space.is_full else cq.space.complex_basis()
        traces = ga.action_traces(cq.action, basis)
        table = {}
        raw_worst = 0.0
        for ch in chars:
            raw = complex(np.dot(cq.action.group.weights, ch.values.conj() * traces))
            m = ga.multiplicity(cq.action, ch, traces=traces,
                                integer_tol=float(job.get("integer_tol",
                                                          ga.DEFAULT_INTEGER_TOL)))
            raw_worst = max(raw_worst, abs(raw - m))
            table[str(ch.label)] = m
        out = {"table": table, "raw_worst_deviation": raw_worst,
               "grid": cq.action.group.descriptor}
        if cq.action.group.is_exact:
            total = sum(m * ch.dimension ** 2 for ch, m in zip(chars, table.values()))
            out["dimension_sum_check"] = {
                "sum": total, "expected": cq.space.real_dim,
                "passed": bool(total == cq.space.real_dim)}
        return out

    if kind == "dist":
        _, a = built[job["a"]]
        _, b = built[job["b"]]
        phi = _phi_for(job.get("phi", "identity"), a, b)
        big_r = job.get("R")
        upper = dq.dist_oq_upper(a, b, phi, big_r, eps_net, budget, seed)
        lower = dq.dist_oq_lower(a, b, eps_net, budget, seed)
        return {"upper": upper.as_dict(), "lower": lower.as_dict()}

    if kind == "audit":
        _, a = built[job["a"]]
        _, b = built[job["b"]]
        phi = _phi_for(job.get("phi", "identity"), a, b)
        reports, record = dq.audit_pair(a, b, phi, eps_net, budget, seed)
        return {"reports": {k: v.as_dict() for k, v in reports.items()},
                "audit": record.as_dict()}

    if kind == "family":
        return _run_family_job(job, built, seed, eps_net, budget)

    if kind == "embed":
        from . import finmetric as fm
        n = int(job.get("points", 30))
        depth = int(job.get("depth", 6))
        bound = float(job.get("bound", 1.0))
        count = int(job.get("functions", 20))
        space = fm.circle_space(n)
        rng = np.random.default_rng(seed)
        fns = [fm.random_lipschitz_function(space, rng, bound) for _ in range(count)]
        rep = fm.universal_embed([space], bound, depth, [fns])
        return {
            "depth": depth, "cover_sizes": rep.cover_sizes,
            "max_distortion": rep.max_distortion,
            "distortion_bound": rep.distortion_bound, "z_ok": rep.z_ok,
            "nets_ok": all(all(e.net_ok) for e in rep.per_space),
            "edges_ok": all(e.edges_ok for e in rep.per_space),
        }

    raise ScenarioError(f"unknown job kind {kind!r}")


def _run_family_job(job: dict, built: dict, seed: int, eps_net: float,
                    budget: int) -> dict:
    ftype = job.get("type")
    eps = float(job.get("eps", 0.5))
    big_r = job.get("R")

    if ftype == "degenerate":
        desc, ref = built[job["reference"]]
        bound_r = float(big_r if big_r is not None else max(ref.radius(), 1.0))
        fam = fl.degenerate_family(ref, bound_r=bound_r)
        chars = _characters_for(desc, ref)
        return fl.family_agreement(fam, fl.scalar_grid_sections(fam), eps, bound_r,
                                   chars, budget=budget, seed=seed)

    if ftype == "torus_theta":
        q = int(job["q"])
        ps = [int(p) for p in job["ps"]]
        fam = fl.torus_theta_family(q, ps)
        bound_r = float(big_r if big_r is not None else
                        max(fam.members[p].radius() for p in ps))
        names = fl.transported_net_sections(fam, bound_r, eps_net,
                                            budget=budget, seed=seed)
        chars = ex.torus_characters(q)
        return fl.family_agreement(fam, names, eps, bound_r, chars,
                                   budget=budget, seed=seed)

    if ftype == "constant":
        _, member = built[job["example"]]
        labels = job.get("labels", [0, 1, 2])
        fam = fl.constant_family(member, labels)
        bound_r = float(big_r if big_r is not None else member.radius())
        names = []
        net = member.ball_net(bound_r, eps_net, budget=budget, seed=seed)
        for i, pt in enumerate(net.points):
            name = f"net_{i}"
            fam.sections[name] = {t: pt for t in labels}
            names.append(name)
        desc = built[job["example"]][0]
        chars = _characters_for(desc, member)
        return fl.family_agreement(fam, names, eps, bound_r, chars,
                                   budget=budget, seed=seed)

    if ftype == "sphere_convergence":
        two_js = [int(x) for x in job["two_js"]]
        t0_j = int(job.get("t0", max(two_js)))
        labels = sorted(set(two_js + [t0_j]))
        members = {tj: built_or_make_sphere(built, tj) for tj in labels}
        fam = fl.ParamFamily(labels=labels, t0=t0_j, members=members,
                             name=f"sphere-family(max={t0_j})")
        bmaps = {tj: ex.berezin_maps(tj) for tj in labels}
        rules = {}
        for tj in labels:
            if tj == t0_j:
                continue
            rules[tj] = dq.berezin_transport_map(members[tj], members[t0_j],
                                                 bmaps[tj], bmaps[t0_j])
        chars = ex.sphere_characters(max(labels))
        return fl.convergence_study(fam, t0_j, rules, bound_r=big_r,
                                    eps_net=eps_net, budget=budget, seed=seed,
                                    characters=chars)

    raise ScenarioError(f"unknown family type {ftype!r}")


def built_or_make_sphere(built: dict, two_j: int):
    for desc, cq in built.values():
        if desc.family == "sphere" and dict(desc.params).get("two_j") == two_j:
            return cq
    return ex.fuzzy_sphere(two_j)


# ---------------------------------------------------------------------------
# scenario runner


def environment_stamp(doc: dict) -> dict:
    return {
        "package": "cqmlab", "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
        "seed": doc.get("seed"),
        "qgh_threads": os.environ.get("QGH_THREADS"),
    }


def run_scenario(doc: dict) -> tuple[dict, int]:
    """Execute jobs in declaration order; per-job failures are recorded,
    not fatal.  Returns (report, exit_code)."""
    validate_scenario(doc)
    defaults = {
        "seed": int(doc.get("seed", 0)),
        "eps_net": float(doc.get("eps_net", 0.3)),
        "budget": int(doc.get("budget", 48)),
    }
    built = _build_examples(doc)
    jobs_out = []
    audit_failed = False
    for i, job in enumerate(doc.get("jobs", [])):
        name = job.get("name", f"job{i:02d}_{job['kind']}")
        entry = {"name": name, "kind": job["kind"]}
        try:
            result = _run_job(job, built, defaults)
            entry["status"] = "ok"
            entry["result"] = result
            audit = result.get("audit") if isinstance(result, dict) else None
            if audit is not None and not audit.get("all_passed", True):
                audit_failed = True
        except Exception as exc:   # job failures are findings, not crashes
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
        jobs_out.append(entry)
    report = {
        "environment": environment_stamp(doc),
        "config": {k: doc.get(k) for k in ("seed", "eps_net", "budget", "audit_policy")},
        "jobs": jobs_out,
    }
    policy = doc.get("audit_policy", "fail")
    code = 3 if (audit_failed and policy == "fail") else 0
    return report, code


def write_report(report: dict, out_dir, fmt: str = "json") -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    target = out / "report.json"
    target.write_text(render_json(report))
    paths.append(target)
    if fmt == "csv":
        for fname, text in render_csv_tables(report).items():
            p = out / fname
            p.write_text(text)
            paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# argument parsing


def _parse_example_arg(arg: str) -> dict:
    """cycle:m=12 | torus:q=3,p=1 | sphere:two_j=2,grid=12x12x12"""
    try:
        family, _, rest = arg.partition(":")
        fields = {}
        if rest:
            for part in rest.split(","):
                k, _, v = part.partition("=")
                fields[k] = v if "x" in v else int(v)
        return {"name": arg, "family": family, **fields}
    except ValueError as exc:
        raise ScenarioError(f"cannot parse example descriptor {arg!r}") from exc


def _single_job_doc(args, example_specs, job) -> dict:
    return {
        "seed": args.seed,
        "eps_net": args.eps_net,
        "budget": args.budget,
        "audit_policy": "warn" if getattr(args, "audit_warn_only", False) else "fail",
        "examples": example_specs,
        "jobs": [job],
    }


def main(argv=None) -> int:
    threads = os.environ.get("QGH_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = argparse.ArgumentParser(
        prog="cqmlab",
        description="quantum metric space laboratory: certified distance "
                    "bounds, radii, multiplicities, family studies")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eps-net", dest="eps_net", type=float, default=0.3)
    parser.add_argument("--budget", type=int, default=48)
    parser.add_argument("--grid", default=None,
                        help="SU(2) grid override, e.g. 12x12x12")
    parser.add_argument("--out", default="reports")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--audit-warn-only", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="construct an example, report its shape")
    p.add_argument("descriptor")
    p = sub.add_parser("radius", help="radius estimate and its quadrature bound")
    p.add_argument("descriptor")
    p.add_argument("--diameter", action="store_true")
    p = sub.add_parser("mult", help="multiplicity table of an example")
    p.add_argument("descriptor")
    p = sub.add_parser("dist", help="distance bounds for a pair")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--phi", default="identity",
                   choices=sorted(_PHI_RULES))
    p.add_argument("--R", type=float, default=None)
    p = sub.add_parser("audit", help="full bound set + consistency audit")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--phi", default="identity", choices=sorted(_PHI_RULES))
    p = sub.add_parser("family", help="family study from an inline spec")
    p.add_argument("spec", help="JSON object for the family job")
    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            doc = load_scenario(args.scenario)
        else:
            if args.command in ("example", "radius", "mult"):
                spec = _parse_example_arg(args.descriptor)
                if args.grid and spec["family"] == "sphere":
                    spec["grid"] = args.grid
                job = {"kind": args.command, "example": spec["name"]}
                if args.command == "radius" and args.diameter:
                    job["diameter"] = True
                doc = _single_job_doc(args, [spec], job)
            elif args.command in ("dist", "audit"):
                sa, sb = _parse_example_arg(args.a), _parse_example_arg(args.b)
                job = {"kind": args.command, "a": sa["name"], "b": sb["name"],
                       "phi": args.phi}
                if args.command == "dist" and args.R is not None:
                    job["R"] = args.R
                doc = _single_job_doc(args, [sa, sb], job)
            elif args.command == "family":
                try:
                    job = json.loads(args.spec)
                except json.JSONDecodeError as exc:
                    raise ScenarioError(f"family spec is not valid JSON: {exc}")
                job["kind"] = "family"
                doc = _single_job_doc(args, [], job)
            else:
                raise ScenarioError(f"unhandled command {args.command!r}")
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2

    try:
        report, code = run_scenario(doc)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    paths = write_report(report, args.out, args.format)
    for p in paths:
        print(p)
    return code


if __name__ == "__main__":
    sys.exit(main())
