"""Configuration-driven experiment runner and report generator.

One JSON config describes dataset, architectures (with per-architecture
C), the epsilon grid and the certificate kind; `run` executes the
(seed x architecture x epsilon) grid, `report` turns a finished bundle
into plot-ready CSVs, and `validate_ntk` sweeps empirical kernel widths
against the analytic ones.

Exit codes: 0 success, 2 config error, 3 capacity error in at least one
grid cell, 4 NTK validation failure. CERTLAB_THREADS caps the worker
pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .certify import (
    Budget,
    certify_collective,
    certify_multiclass_exact,
    certify_multiclass_inexact,
    certify_samples,
    metrics,
)
from .errors import CapacityError, CertlabError, ConfigError
from .graph import (
    CbaParams,
    CsbmParams,
    Graph,
    karate_club,
    load_graph,
    normalize_adjacency,
    normalize_features,
    sample_cba,
    sample_csbm,
    save_graph,
)
from .milp import build_collective, build_samplewise, write_lp, write_mps
from .ntk import ArchitectureSpec, kernel_submatrix, ntk_analytic, ntk_empirical, save_kernel
from .svm import SvmProblem, margins, one_vs_all_split, solve_dual

CERTIFICATE_KINDS = ("sample", "collective", "multiclass-exact",
                     "multiclass-inexact", "export-only")
METRICS_HEADER = "seed,arch,epsilon,kind,certified_ratio,certified_accuracy,clean_accuracy,runtime_ms"


def worker_count() -> int:
    env = os.environ.get("CERTLAB_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"CERTLAB_THREADS must be an integer, got {env!r}") from exc
    return min(4, os.cpu_count() or 1)


@dataclass
class ExperimentConfig:
    dataset: dict
    architectures: list[dict]
    epsilons: list[float]
    certificate: str
    test_nodes: object
    seeds: list[int]
    output_dir: str
    capacity: int = 1_000_000
    tol: float = 1e-10
    max_sweeps: int = 100_000
    export_model: str = "sample"
    widths: tuple = (256, 1024, 4096)
    nt_samples: int = 20
    threshold: float = 0.05
    width_seed: int = 0
    replay_timings: dict | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        timings = None
        if "config" in doc:  # a manifest: replay its config and reuse timings
            timings = doc.get("timings")
            doc = doc["config"]
        try:
            cfg = cls(
                dataset=dict(doc["dataset"]),
                architectures=[dict(a) for a in doc["architectures"]],
                epsilons=[float(e) for e in doc["epsilons"]],
                certificate=doc.get("certificate", "sample"),
                test_nodes=doc.get("test_nodes", "all-unlabeled"),
                seeds=[int(s) for s in doc.get("seeds", [0])],
                output_dir=doc.get("output_dir", "certlab_out"),
                capacity=int(doc.get("capacity", 1_000_000)),
                tol=float(doc.get("tol", 1e-10)),
                max_sweeps=int(doc.get("max_sweeps", 100_000)),
                export_model=doc.get("export_model", "sample"),
                widths=tuple(doc.get("widths", (256, 1024, 4096))),
                nt_samples=int(doc.get("nt_samples", 20)),
                threshold=float(doc.get("threshold", 0.05)),
                width_seed=int(doc.get("width_seed", 0)),
                replay_timings=timings,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def validate(self) -> None:
        if self.dataset.get("kind") not in ("csbm", "cba", "file", "karate"):
            raise ConfigError("dataset.kind must be csbm, cba, file or karate")
        if not self.architectures:
            raise ConfigError("need at least one architecture")
        names = [self.arch_name(i) for i in range(len(self.architectures))]
        if len(set(names)) != len(names):
            raise ConfigError("architecture names collide; add distinct 'name' fields")
        for arch in self.architectures:
            if float(arch.get("C", 0.0)) <= 0.0:
                raise ConfigError(f"architecture {arch} needs C > 0")
        if not self.epsilons:
            raise ConfigError("need a non-empty epsilon grid")
        if any(not 0.0 < e <= 1.0 for e in self.epsilons):
            raise ConfigError("epsilon values must lie in (0, 1]")
        if sorted(self.epsilons) != self.epsilons:
            raise ConfigError("epsilon grid must be sorted ascending")
        if self.certificate not in CERTIFICATE_KINDS:
            raise ConfigError(f"certificate must be one of {CERTIFICATE_KINDS}")
        if self.export_model not in ("sample", "collective"):
            raise ConfigError("export_model must be 'sample' or 'collective'")
        if isinstance(self.test_nodes, str):
            if self.test_nodes != "all-unlabeled":
                raise ConfigError("test_nodes must be 'all-unlabeled' or a sample spec")
        elif not (isinstance(self.test_nodes, dict) and "sample" in self.test_nodes):
            raise ConfigError("test_nodes must be 'all-unlabeled' or {'sample': k, 'seed': s}")

    def arch_name(self, index: int) -> str:
        return str(self.architectures[index].get("name", self.architectures[index]["kind"]))

    def resolved(self) -> dict:
        return {
            "dataset": self.dataset,
            "architectures": self.architectures,
            "epsilons": self.epsilons,
            "certificate": self.certificate,
            "test_nodes": self.test_nodes,
            "seeds": self.seeds,
            "output_dir": self.output_dir,
            "capacity": self.capacity,
            "tol": self.tol,
            "max_sweeps": self.max_sweeps,
            "export_model": self.export_model,
            "widths": list(self.widths),
            "nt_samples": self.nt_samples,
            "threshold": self.threshold,
            "width_seed": self.width_seed,
        }


@dataclass
class ReportBundle:
    output_dir: str
    metrics_path: str
    per_node_path: str
    witness_path: str
    manifest_path: str
    rows: list[dict]
    manifest: dict
    had_capacity_error: bool


def make_graph(config: ExperimentConfig, seed: int) -> Graph:
    ds = config.dataset
    kind = ds["kind"]
    if kind == "file":
        graph = load_graph(ds["path"])
    elif kind == "karate":
        graph = karate_club()
    else:
        common = dict(n=int(ds["n"]), sigma=float(ds.get("sigma", 1.0)),
                      signal_scale=float(ds.get("signal_scale", 1.5)),
                      labeled_per_class=int(ds.get("labeled_per_class", 10)),
                      seed=seed)
        if kind == "csbm":
            graph = sample_csbm(CsbmParams(p=float(ds.get("p", CsbmParams.p)),
                                           q=float(ds.get("q", CsbmParams.q)),
                                           **common))
        else:
            graph = sample_cba(CbaParams(
                deg=int(ds.get("deg", 2)),
                affinity=tuple(map(tuple, ds.get("affinity", CbaParams.affinity))),
                **common))
    if ds.get("normalize_features", False):
        graph = normalize_features(graph)
    return graph


def make_arch_spec(arch: dict, graph: Graph) -> ArchitectureSpec:
    kind = arch["kind"]
    conv = None
    if kind not in ("mlp", "linear"):
        conv = normalize_adjacency(graph, arch.get("conv", "row"),
                                   float(arch.get("beta", 1.0)))
    return ArchitectureSpec(
        kind=kind,
        depth=int(arch.get("depth", 1)),
        conv=conv,
        alpha=arch.get("alpha"),
        power_k=arch.get("power_k"),
        skip_activation=arch.get("skip_activation", "relu"),
        activation=arch.get("activation", "relu"),
    )


def select_test_nodes(config: ExperimentConfig, graph: Graph, seed: int) -> np.ndarray:
    unl = graph.unlabeled
    if isinstance(config.test_nodes, str):
        return unl
    k = int(config.test_nodes["sample"])
    sample_seed = int(config.test_nodes.get("seed", 0))
    if k > unl.size:
        raise ConfigError(f"cannot sample {k} test nodes from {unl.size} unlabeled")
    rng = np.random.Generator(np.random.Philox(key=[sample_seed, seed]))
    return np.sort(rng.choice(unl, size=k, replace=False))


def binary_targets(graph: Graph) -> np.ndarray:
    """Class 2 maps to +1, class 1 to -1."""
    if graph.num_classes != 2:
        raise ConfigError("binary certification needs a two-class graph")
    return np.where(graph.labels == 2, 1.0, -1.0)


def _cell_key(seed: int, arch: str, eps: float) -> str:
    return f"s{seed}|{arch}|e{eps!r}"


def _predicted_classes_binary(p: np.ndarray) -> np.ndarray:
    return np.where(p > 0, 2, np.where(p < 0, 1, 0))


def _witness_json(w) -> list:
    return [list(x) if isinstance(x, tuple) else int(x) for x in w]


def _run_cell(config, graph, kernel, arch, seed, eps):
    """One (seed, arch, eps) grid cell. Returns (metrics row values,
    per-node records, witness record)."""
    name = arch["_name"]
    C = float(arch["C"])
    labeled = graph.labeled
    test = arch["_test"]
    Qtrain = kernel_submatrix(kernel, labeled, labeled)
    Qcross = kernel_submatrix(kernel, test, labeled)
    budget = Budget(eps, labeled.size)
    kind = config.certificate
    if kind in ("multiclass-exact", "multiclass-inexact") and graph.num_classes == 2:
        kind = "sample"  # K=2 one-vs-all is equivalent to the binary pipeline

    if kind == "export-only":
        return _run_export_cell(config, graph, Qtrain, Qcross, name, seed, eps, C, test)

    if kind in ("sample", "collective"):
        y = binary_targets(graph)[labeled]
        clean = solve_dual(SvmProblem(Qtrain, y, C), config.tol, config.max_sweeps)
        phat = margins(clean.alpha, y, Qcross)
        truth = graph.labels[test]
        predicted = _predicted_classes_binary(phat)
        if kind == "sample":
            certs = certify_samples(Qtrain, Qcross, y, C, budget, test,
                                    cap=config.capacity, tol=config.tol,
                                    max_sweeps=config.max_sweeps)
            row = metrics(certs, predicted, truth, eps)
            per_node = [
                {"node": c.node, "robust": c.robust,
                 "worst_objective": c.worst_objective,
                 "witness": _witness_json(c.witness)}
                for c in certs
            ]
            witness = {"kind": "sample",
                       "witnesses": {str(c.node): _witness_json(c.witness) for c in certs}}
            return row, per_node, witness
        cert = certify_collective(Qtrain, Qcross, y, C, budget, test,
                                  cap=config.capacity, tol=config.tol,
                                  max_sweeps=config.max_sweeps)
        n_test = len(test)
        correct = int(np.sum((predicted == truth) & (predicted != 0)))
        ratio = (n_test - cert.max_misclassified) / n_test
        cert_acc = max(0, correct - cert.max_misclassified) / n_test
        row_vals = (ratio, cert_acc, correct / n_test)
        per_node = [
            {"node": int(t), "misclassified_under_witness": bool(flag)}
            for t, flag in zip(test, cert.misclassified)
        ]
        witness = {"kind": "collective", "witness": _witness_json(cert.witness),
                   "max_misclassified": cert.max_misclassified}
        return row_vals, per_node, witness

    # multi-class with K > 2
    certify_fn = (certify_multiclass_exact if kind == "multiclass-exact"
                  else certify_multiclass_inexact)
    labels_l = graph.labels[labeled]
    certs, predicted = [], []
    for row_idx, t in enumerate(test):
        p = np.empty(graph.num_classes)
        for c in range(1, graph.num_classes + 1):
            yc = one_vs_all_split(labels_l, c)
            sol = solve_dual(SvmProblem(Qtrain, yc, C), config.tol, config.max_sweeps)
            p[c - 1] = margins(sol.alpha, yc, Qcross[row_idx])[0]
        predicted.append(int(np.argmax(p)) + 1)
        certs.append(certify_fn(Qtrain, Qcross[row_idx], labels_l,
                                graph.num_classes, C, budget, int(t),
                                cap=config.capacity, tol=config.tol,
                                max_sweeps=config.max_sweeps))
    row = metrics(certs, predicted, graph.labels[test], eps)
    per_node = [
        {"node": c.node, "robust": c.robust, "worst_objective": c.worst_objective,
         "witness": _witness_json(c.witness)}
        for c in certs
    ]
    witness = {"kind": kind,
               "witnesses": {str(c.node): _witness_json(c.witness) for c in certs}}
    return row, per_node, witness


def _run_export_cell(config, graph, Qtrain, Qcross, name, seed, eps, C, test):
    y = binary_targets(graph)[graph.labeled]
    clean = solve_dual(SvmProblem(Qtrain, y, C), config.tol, config.max_sweeps)
    phat = margins(clean.alpha, y, Qcross)
    export_dir = os.path.join(config.output_dir, "exports")
    os.makedirs(export_dir, exist_ok=True)
    written = []
    if config.export_model == "collective":
        keep = phat != 0.0
        model = build_collective(Qtrain, Qcross[keep], y, C, eps, phat[keep],
                                 test_ids=np.asarray(test)[keep])
        base = os.path.join(export_dir, f"collective_s{seed}_{name}_e{eps}")
        write_mps(model, base + ".mps")
        write_lp(model, base + ".lp")
        written.append(base + ".mps")
    else:
        for row_idx, t in enumerate(test):
            if phat[row_idx] == 0.0:
                continue  # non-robust by convention; nothing to solve
            model = build_samplewise(Qtrain, Qcross[row_idx], y, C, eps,
                                     int(np.sign(phat[row_idx])), node=int(t))
            base = os.path.join(export_dir, f"sample_s{seed}_{name}_e{eps}_n{t}")
            write_mps(model, base + ".mps")
            written.append(base + ".mps")
    return None, [], {"kind": "export-only", "files": sorted(written)}


def run(config: ExperimentConfig, eps_filter=None, arch_filter=None,
        seed_filter=None) -> ReportBundle:
    """Execute the experiment grid and write the report bundle."""
    os.makedirs(config.output_dir, exist_ok=True)
    seeds = [s for s in config.seeds if seed_filter is None or s in seed_filter]
    epsilons = [e for e in config.epsilons if eps_filter is None or e in eps_filter]
    arch_list = []
    for i, arch in enumerate(config.architectures):
        name = config.arch_name(i)
        if arch_filter is None or name in arch_filter:
            arch_list.append((i, name, dict(arch)))
    if not (seeds and epsilons and arch_list):
        raise ConfigError("filters removed every grid cell")

    # graphs, kernels and test sets are deterministic; build them up front
    prepared = {}
    for seed in seeds:
        graph = make_graph(config, seed)
        for order, name, arch in arch_list:
            spec = make_arch_spec(arch, graph)
            kernel = ntk_analytic(spec, graph)
            test = select_test_nodes(config, graph, seed)
            a = dict(arch)
            a["_name"], a["_test"] = name, test
            prepared[(seed, name)] = (graph, kernel, a)

    cells = [(seed, order, name, eps)
             for seed in seeds for order, name, _ in arch_list for eps in epsilons]

    def exec_cell(cell):
        seed, order, name, eps = cell
        graph, kernel, arch = prepared[(seed, name)]
        start = time.perf_counter()
        try:
            row, per_node, witness = _run_cell(config, graph, kernel, arch, seed, eps)
            err = None
        except CapacityError as exc:
            row, per_node, witness, err = None, [], None, str(exc)
        ms = (time.perf_counter() - start) * 1000.0
        return cell, row, per_node, witness, err, ms

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(exec_cell, cells))

    results.sort(key=lambda r: (r[0][0], r[0][1], r[0][3]))
    timings, errors, rows, per_node_all, witness_all = {}, {}, [], [], {}
    replay = config.replay_timings or {}
    for (seed, order, name, eps), row, per_node, witness, err, ms in results:
        key = _cell_key(seed, name, eps)
        timings[key] = replay.get(key, ms)
        if err is not None:
            errors[key] = err
        if config.certificate == "export-only":
            if witness is not None:
                witness_all[key] = witness
            continue
        if err is not None:
            vals = (float("nan"), float("nan"), float("nan"))
        elif hasattr(row, "certified_ratio"):
            vals = (row.certified_ratio, row.certified_accuracy, row.clean_accuracy)
        else:
            vals = row
        rows.append({
            "seed": seed, "arch": name, "epsilon": eps,
            "kind": config.certificate,
            "certified_ratio": vals[0], "certified_accuracy": vals[1],
            "clean_accuracy": vals[2], "runtime_ms": timings[key],
        })
        for rec in per_node:
            per_node_all.append({"seed": seed, "arch": name, "epsilon": eps, **rec})
        if witness is not None:
            witness_all[key] = witness

    metrics_path = os.path.join(config.output_dir, "metrics.csv")
    with open(metrics_path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(",".join([
                str(r["seed"]), r["arch"], repr(r["epsilon"]), r["kind"],
                repr(r["certified_ratio"]), repr(r["certified_accuracy"]),
                repr(r["clean_accuracy"]), repr(r["runtime_ms"]),
            ]) + "\n")
    per_node_path = os.path.join(config.output_dir, "per_node.json")
    with open(per_node_path, "w") as fh:
        json.dump(per_node_all, fh, indent=1)
        fh.write("\n")
    witness_path = os.path.join(config.output_dir, "witnesses.json")
    with open(witness_path, "w") as fh:
        json.dump(witness_all, fh, indent=1, sort_keys=True)
        fh.write("\n")
    manifest = {
        "config": config.resolved(),
        "versions": {
            "certlab": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "timings": timings,
        "errors": errors,
    }
    manifest_path = os.path.join(config.output_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return ReportBundle(config.output_dir, metrics_path, per_node_path,
                        witness_path, manifest_path, rows, manifest,
                        had_capacity_error=bool(errors))


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def report(output_dir: str) -> dict:
    """Aggregate metrics.csv into plot-ready CSVs (mean/std over seeds and
    consecutive-epsilon certified-ratio deltas)."""
    metrics_path = os.path.join(output_dir, "metrics.csv")
    groups: dict[tuple, dict[float, list[float]]] = {}
    acc_groups: dict[tuple, dict[float, list]] = {}
    with open(metrics_path) as fh:
        for rec in csv.DictReader(fh):
            key = (rec["arch"], rec["kind"])
            eps = float(rec["epsilon"])
            groups.setdefault(key, {}).setdefault(eps, []).append(
                float(rec["certified_ratio"]))
            acc_groups.setdefault(key, {}).setdefault(eps, []).append(
                (float(rec["certified_accuracy"]), float(rec["clean_accuracy"])))

    curve_path = os.path.join(output_dir, "certified_vs_eps.csv")
    with open(curve_path, "w") as fh:
        fh.write("arch,kind,epsilon,mean_certified_ratio,std_certified_ratio,"
                 "mean_certified_accuracy,std_certified_accuracy,"
                 "mean_clean_accuracy,std_clean_accuracy\n")
        for (arch, kind) in sorted(groups):
            for eps in sorted(groups[(arch, kind)]):
                ratios = np.array(groups[(arch, kind)][eps])
                accs = np.array([a for a, _ in acc_groups[(arch, kind)][eps]])
                cleans = np.array([c for _, c in acc_groups[(arch, kind)][eps]])
                if np.any(np.isnan(ratios)):
                    print(f"warning: missing cells for {arch}/{kind} at eps={eps}",
                          file=sys.stderr)
                fh.write(",".join([arch, kind, repr(eps),
                                   repr(float(ratios.mean())), repr(float(ratios.std())),
                                   repr(float(accs.mean())), repr(float(accs.std())),
                                   repr(float(cleans.mean())), repr(float(cleans.std())),
                                   ]) + "\n")

    delta_path = os.path.join(output_dir, "plateau_deltas.csv")
    with open(delta_path, "w") as fh:
        fh.write("arch,kind,eps_from,eps_to,delta_certified_ratio\n")
        for (arch, kind) in sorted(groups):
            grid = sorted(groups[(arch, kind)])
            for lo, hi in zip(grid, grid[1:]):
                d = (float(np.mean(groups[(arch, kind)][lo]))
                     - float(np.mean(groups[(arch, kind)][hi])))
                fh.write(f"{arch},{kind},{lo!r},{hi!r},{d!r}\n")
    return {"certified_vs_eps": curve_path, "plateau_deltas": delta_path}


def validate_ntk(config: ExperimentConfig, arch_filter=None):
    """Width sweep of empirical vs analytic kernels; pass iff the error at
    the largest width stays within the threshold for every architecture."""
    os.makedirs(config.output_dir, exist_ok=True)
    graph = make_graph(config, config.seeds[0])
    rows, all_pass = [], True
    for i, arch in enumerate(config.architectures):
        name = config.arch_name(i)
        if arch_filter is not None and name not in arch_filter:
            continue
        if arch["kind"] == "linear":
            raise ConfigError("the linear kernel has no width sweep")
        spec = make_arch_spec(arch, graph)
        reference = ntk_analytic(spec, graph).Q
        scale = np.linalg.norm(reference)
        errors = []
        for width in config.widths:
            emp = ntk_empirical(spec, graph, int(width), config.nt_samples,
                                seed=config.width_seed).Q
            errors.append(float(np.linalg.norm(emp - reference) / scale))
        passed = errors[-1] <= config.threshold
        all_pass &= passed
        for width, err in zip(config.widths, errors):
            rows.append({"arch": name, "width": int(width),
                         "rel_frobenius_error": err, "passed": passed})
    out = os.path.join(config.output_dir, "ntk_validation.csv")
    with open(out, "w") as fh:
        fh.write("arch,width,rel_frobenius_error,passed\n")
        for r in rows:
            fh.write(f"{r['arch']},{r['width']},{r['rel_frobenius_error']!r},"
                     f"{int(r['passed'])}\n")
    return rows, all_pass, out


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config JSON (or manifest)")
    p.add_argument("--eps", type=float, nargs="*", default=None,
                   help="restrict to these epsilon values")
    p.add_argument("--arch", nargs="*", default=None,
                   help="restrict to these architecture names")
    p.add_argument("--seed", type=int, nargs="*", default=None,
                   help="restrict to these seeds")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="certlab",
        description="Exact label-flipping robustness certification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen", "ntk", "certify", "export", "validate-ntk", "report"):
        p = sub.add_parser(name)
        _add_common(p)
    args = parser.parse_args(argv)

    try:
        config = ExperimentConfig.from_file(args.config)
        seed_filter = set(args.seed) if args.seed else None
        arch_filter = set(args.arch) if args.arch else None
        eps_filter = set(args.eps) if args.eps else None

        if args.command == "gen":
            if config.dataset["kind"] in ("file", "karate"):
                raise ConfigError("gen requires a generator dataset (csbm or cba)")
            os.makedirs(config.output_dir, exist_ok=True)
            for seed in config.seeds:
                if seed_filter and seed not in seed_filter:
                    continue
                graph = make_graph(config, seed)
                path = os.path.join(config.output_dir, f"graph_seed{seed}.json")
                save_graph(graph, path)
                print(path)
            return 0

        if args.command == "ntk":
            os.makedirs(config.output_dir, exist_ok=True)
            for seed in config.seeds:
                if seed_filter and seed not in seed_filter:
                    continue
                graph = make_graph(config, seed)
                for i, arch in enumerate(config.architectures):
                    name = config.arch_name(i)
                    if arch_filter and name not in arch_filter:
                        continue
                    kernel = ntk_analytic(make_arch_spec(arch, graph), graph)
                    path = os.path.join(config.output_dir, f"kernel_seed{seed}_{name}.knl")
                    save_kernel(kernel, path)
                    np.savetxt(path.replace(".knl", ".csv"), kernel.Q, delimiter=",")
                    print(path)
            return 0

        if args.command in ("certify", "export"):
            if args.command == "export":
                config.certificate = "export-only"
            bundle = run(config, eps_filter=eps_filter, arch_filter=arch_filter,
                         seed_filter=seed_filter)
            print(bundle.metrics_path)
            return 3 if bundle.had_capacity_error else 0

        if args.command == "validate-ntk":
            rows, ok, out = validate_ntk(config, arch_filter=arch_filter)
            for r in rows:
                print(f"{r['arch']:>16s} width={r['width']:<6d} "
                      f"err={r['rel_frobenius_error']:.4f} "
                      f"{'PASS' if r['passed'] else 'FAIL'}")
            print(out)
            return 0 if ok else 4

        report_paths = report(config.output_dir)
        for path in report_paths.values():
            print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CertlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
