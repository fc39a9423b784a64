"""Batch front door: manifest-driven pipelines with reproducible artifacts.

One manifest describes one pipeline run (composition belongs in shell
scripts).  Every artifact embeds the manifest, its hash, the seed, and
tool/environment metadata; floats are serialized with 17 significant
digits and stable key ordering so ``reproduce`` can re-run the embedded
manifest and compare payloads numerically.

Exit codes: 0 success, 2 manifest schema violation, 3 compute failure,
4 reproduction drift.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from importlib.metadata import version as pkg_version

import numpy as np
import jsonschema

from . import correctors as C
from . import experiments as E
from . import fields as F
from . import metrics as M
from .errors import NonConverged
from .grids import Box, estimate_mean, save_grid_function

log = logging.getLogger("aphomog")

COMMANDS = ("corrector", "homogenize", "rho", "theta", "discrepancy",
            "rate", "holder", "flux")

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "seed", "params"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer"},
        "params": {"type": "object"},
        "field": {"type": "object"},
        "out_dir": {"type": "string"},
    },
    "additionalProperties": False,
}

_FIELD_COMMANDS = {"corrector", "homogenize", "rho", "rate", "holder", "flux"}


class ManifestError(ValueError):
    pass


def validate_manifest(manifest):
    try:
        jsonschema.validate(manifest, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ManifestError(str(exc.message)) from exc
    if manifest["command"] in _FIELD_COMMANDS and "field" not in manifest:
        raise ManifestError(f"command {manifest['command']!r} needs a field config")


# ---------------------------------------------------------------------------
# deterministic JSON with 17 significant digits and sorted keys


def dumps_canonical(obj, indent=0):
    pad = " " * indent
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError("non-finite value in payload")
        return format(obj, ".17g")
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, np.generic):
        return dumps_canonical(obj.item())
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist())
    if isinstance(obj, dict):
        items = [f'{json.dumps(str(k))}: {dumps_canonical(obj[k])}'
                 for k in sorted(obj, key=str)]
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps_canonical(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def manifest_hash(manifest):
    return hashlib.sha256(dumps_canonical(manifest).encode("utf-8")).hexdigest()


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# pipelines


def _field_from(manifest):
    field = F.field_from_config(manifest["field"])
    F.certify_ellipticity(field, rng_seed=int(manifest["seed"]))
    return field


def _corrector_payload(field, cset):
    res, rel = C.energy_identity_residual(field, cset)
    window = None if cset.mode == "periodic" else cset.window
    means = [[estimate_mean(cset.chi[j][b], window).tolist()
              for b in range(cset.m)] for j in range(cset.d)]
    return {
        "provenance": cset.provenance(),
        "sup_norm": cset.sup_norm(),
        "window_means": means,
        "energy_residual_relative": rel.tolist(),
    }


def _run_corrector(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    cset = C.solve_corrector(field, float(p["T"]), h=p.get("h"),
                             buffer=float(p.get("buffer", 6.0)),
                             bc=p.get("bc", "auto"),
                             tol=float(p.get("tol", 1e-10)),
                             threads=threads)
    payload = _corrector_payload(field, cset)
    for j in range(cset.d):
        for b in range(cset.m):
            save_grid_function(cset.chi[j][b],
                               os.path.join(out_dir, f"corrector_chi_j{j}_b{b}.bin"))
    summary = f"corrector T={cset.T:g} mode={cset.mode} sup={payload['sup_norm']:.6g}"
    return payload, summary


def _run_homogenize(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    cset = C.solve_corrector(field, float(p["T"]), h=p.get("h"),
                             buffer=float(p.get("buffer", 6.0)),
                             bc=p.get("bc", "auto"),
                             tol=float(p.get("tol", 1e-10)),
                             threads=threads)
    hm = C.homogenized_matrix(field, cset)
    payload = {
        "ahat": hm.tensor.tolist(),
        "source": list(hm.source),
        "sym_eig_min": hm.sym_eig_min,
        "sym_eig_max": hm.sym_eig_max,
        "ellipticity_ok": hm.ellipticity_ok,
        "corrector": _corrector_payload(field, cset),
    }
    summary = f"homogenize T={cset.T:g} ahat[0,0]={hm.tensor[0, 0, 0, 0]:.9g}"
    return payload, summary


def _run_rho(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    rep = M.rho_ladder(field, p["R_list"],
                       y_samples=p.get("y_samples"),
                       z_grid_spacing=p.get("z_spacing"),
                       test_points=p.get("test_points"),
                       norm=p.get("norm", "inf"),
                       rng_seed=int(manifest["seed"]))
    if rep.values.size >= 3 and np.all(rep.values > 0):
        rep.fit()
    rep.to_csv(os.path.join(out_dir, "rho.csv"))
    payload = {"report": rep.as_dict()}
    summary = (f"rho R in [{rep.parameters[0]:g}, {rep.parameters[-1]:g}] "
               f"exponent={rep.fitted_exponent}")
    return payload, summary


def _run_theta(manifest, out_dir, threads):
    p = manifest["params"]
    rep = M.theta_ladder(p["lambda"], p["R_list"], p["ell"])
    if rep.values.size >= 3 and np.all(rep.values > 0):
        rep.fit()
    rep.to_csv(os.path.join(out_dir, "theta.csv"))
    payload = {"report": rep.as_dict()}
    summary = f"theta ladder exponent={rep.fitted_exponent}"
    return payload, summary


def _run_discrepancy(manifest, out_dir, threads):
    p = manifest["params"]
    pset = M.kronecker_point_set(p["lambda"], int(p["R"]), int(p["ell"]))
    exact = M.discrepancy_exact(pset) if pset.dimension <= 2 else None
    bounds = {str(H): M.etk_bound(pset, int(H)) for H in p.get("H_list", [4, 16, 64])}
    payload = {"N": pset.size, "dimension": pset.dimension,
               "exact": exact, "etk_bounds": bounds,
               "covering_bound": None if exact is None
               else M.covering_from_discrepancy(exact, pset.dimension),
               "provenance": pset.provenance}
    summary = f"discrepancy N={pset.size} exact={exact}"
    return payload, summary


def _run_rate(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    exp = E.rate_experiment(field, p["eps_list"],
                            corrector_h=p.get("corrector_h"),
                            tol=float(p.get("tol", 1e-9)),
                            include_boundary_corrector=bool(
                                p.get("boundary_corrector", False)))
    lines = ["eps,cells,L2_plain,L2_corrected,H1_plain,H1_corrected"]
    for r in exp.rows:
        lines.append(f"{r['eps']:.17g},{r['cells']},{r['L2_plain']:.17g},"
                     f"{r['L2_corrected']:.17g},{r['H1_plain']:.17g},"
                     f"{r['H1_corrected']:.17g}")
    _atomic_write(os.path.join(out_dir, "rate.csv"), "\n".join(lines) + "\n")
    payload = exp.as_dict()
    if exp.floor_limited:
        summary = "rate: floor-limited (errors at solver floor)"
    else:
        slope = exp.fitted.get("L2_plain", {}).get("slope")
        summary = f"rate: fitted L2 slope={slope}"
    return payload, summary


def _run_holder(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    rep = E.holder_uniformity(field, p["eps_list"], sigma=float(p.get("sigma", 0.5)),
                              corrector_h=p.get("corrector_h"),
                              rng_seed=int(manifest["seed"]))
    payload = rep
    summary = f"holder sigma={rep['sigma']} uniformity_ratio={rep['uniformity_ratio']:.4g}"
    return payload, summary


def _run_flux(manifest, out_dir, threads):
    field = _field_from(manifest)
    p = manifest["params"]
    reports = []
    for T in p["T_list"]:
        T = float(T)
        cset = C.solve_corrector(field, T, h=p.get("h"),
                                 buffer=float(p.get("buffer", 6.0)),
                                 tol=float(p.get("tol", 1e-10)), threads=threads)
        region = None
        if cset.mode == "truncated":
            region = Box.cube(float(p.get("region_factor", 9.0)) * T, d=field.d)
        flux = C.flux_tensor(field, cset, region=region)
        _, rep = C.solve_flux_corrector(flux, T, tol=float(p.get("tol", 1e-10)))
        rep["mean_abs"] = float(np.max(np.abs(flux.mean)))
        reports.append(rep)
    payload = {"reports": reports}
    summary = f"flux T ladder n={len(reports)} last sup_f_scaled=" \
              f"{reports[-1]['sup_f_scaled']:.4g}"
    return payload, summary


_PIPELINES = {
    "corrector": _run_corrector,
    "homogenize": _run_homogenize,
    "rho": _run_rho,
    "theta": _run_theta,
    "discrepancy": _run_discrepancy,
    "rate": _run_rate,
    "holder": _run_holder,
    "flux": _run_flux,
}


def run_manifest(manifest, out_dir, threads=None):
    """Validate, dispatch, and write the result artifact atomically.

    Returns the path of the result JSON.  Raises ManifestError on schema
    violations; compute failures propagate.
    """
    validate_manifest(manifest)
    os.makedirs(out_dir, exist_ok=True)
    if threads is None:
        threads = os.cpu_count() or 1
    np.random.seed(int(manifest["seed"]) % (2 ** 31))   # guards stray global draws
    before = set(os.listdir(out_dir))
    payload, summary = _PIPELINES[manifest["command"]](manifest, out_dir, threads)
    artifacts = {}
    for name in sorted(set(os.listdir(out_dir)) - before):
        with open(os.path.join(out_dir, name), "rb") as f:
            artifacts[name] = hashlib.sha256(f.read()).hexdigest()
    result = {
        "tool": {"name": "aphomog", "version": _tool_version()},
        "manifest": manifest,
        "manifest_hash": manifest_hash(manifest),
        "seed": manifest["seed"],
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "payload": payload,
        "artifacts": artifacts,      # sha256 of companion files (CSV, binaries)
        "compare": {"rtol": 0.0, "atol": 0.0},
    }
    path = os.path.join(out_dir, f"{manifest['command']}_result.json")
    _atomic_write(path, dumps_canonical(result) + "\n")
    print(summary + f" -> {path}")
    return path


def _tool_version():
    try:
        return pkg_version("aphomog")
    except Exception:
        return "0.0.0+local"


# ---------------------------------------------------------------------------
# reproduction


def _diff_payload(a, b, path="payload", rtol=0.0, atol=0.0, out=None):
    out = [] if out is None else out
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b), key=str):
            if k not in a or k not in b:
                out.append((f"{path}.{k}", "missing", None))
                continue
            _diff_payload(a[k], b[k], f"{path}.{k}", rtol, atol, out)
        return out
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append((path, "length", (len(a), len(b))))
            return out
        for i, (x, y) in enumerate(zip(a, b)):
            _diff_payload(x, y, f"{path}[{i}]", rtol, atol, out)
        return out
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) \
            and not isinstance(a, bool) and not isinstance(b, bool):
        if not np.isclose(a, b, rtol=rtol, atol=atol, equal_nan=True):
            out.append((path, "value", (a, b)))
        return out
    if a != b:
        out.append((path, "value", (a, b)))
    return out


def reproduce(result_path, threads=None, workdir=None):
    """Re-run the embedded manifest and compare numeric payloads.

    Returns (ok, drift_list).  Comparison tolerances come from the stored
    ``compare`` entry; deterministic pipelines store exact (0, 0).
    """
    with open(result_path, encoding="utf-8") as f:
        stored = json.load(f)
    manifest = stored["manifest"]
    if manifest_hash(manifest) != stored["manifest_hash"]:
        return False, [("manifest_hash", "value",
                        (stored["manifest_hash"], manifest_hash(manifest)))]
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        new_path = run_manifest(manifest, tmp, threads=threads)
        with open(new_path, encoding="utf-8") as f:
            fresh = json.load(f)
    cmp_tols = stored.get("compare", {"rtol": 0.0, "atol": 0.0})
    drift = _diff_payload(stored["payload"], fresh["payload"],
                          rtol=cmp_tols.get("rtol", 0.0),
                          atol=cmp_tols.get("atol", 0.0))
    return (len(drift) == 0), drift


# ---------------------------------------------------------------------------
# entry point


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="aphomog",
        description="homogenization lab: manifest-driven pipelines")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="mode", required=True)
    p_run = sub.add_parser("run", help="execute one manifest")
    p_run.add_argument("--manifest", required=True)
    p_run.add_argument("--out", default=None,
                       help="output directory (or APHOMOG_OUT, default ./out)")
    p_run.add_argument("--threads", type=int, default=None)
    p_rep = sub.add_parser("reproduce", help="re-run a result and compare")
    p_rep.add_argument("--result", required=True)
    p_rep.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))

    if args.mode == "run":
        try:
            with open(args.manifest, encoding="utf-8") as f:
                manifest = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            print(json.dumps({"error": "manifest unreadable", "detail": str(exc)}))
            return 2
        out_dir = args.out or os.environ.get("APHOMOG_OUT", "out")
        try:
            run_manifest(manifest, out_dir, threads=args.threads)
        except ManifestError as exc:
            print(json.dumps({"error": "manifest invalid", "detail": str(exc)}))
            return 2
        except (NonConverged, ValueError, ArithmeticError) as exc:
            print(json.dumps({"error": "compute failure",
                              "detail": f"{type(exc).__name__}: {exc}"}))
            return 3
        return 0

    ok, drift = reproduce(args.result, threads=args.threads)
    if ok:
        print("reproduce: payloads match")
        return 0
    print(json.dumps({"error": "drift", "items":
                      [{"path": p, "kind": k, "values": list(v) if v else None}
                       for p, k, v in drift[:50]]}))
    return 4


if __name__ == "__main__":
    sys.exit(main())
