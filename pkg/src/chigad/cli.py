"""Command-line surface: analysis reports, synthetic data, training, eval.

Every command reads one flat config file (see config.py), honors --seed as an
override, writes artifacts into --out, and exits nonzero with a one-line
diagnostic on any error.  Given identical config and seed, every artifact is
byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .chifilter import (admissibility_integral, chi_mode, chi_moments,
                        fit_polynomial, normalization_constant)
from .config import RunConfig, load_config, sub_seed
from .hin import load_hetero_graph, save_hetero_graph
from .metrics import pr_points, roc_points
from .model import build_model, forward_pass, load_checkpoint, plan_type, save_checkpoint
from .spectral import profile_capped
from .synthetic import generate_synthetic_hin
from .training import evaluate, train, write_history_csv


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {path}")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")


def _fmt(x) -> str:
    return repr(float(x))


def cmd_filters(cfg: RunConfig, out: str) -> int:
    rows, report = [], []
    for i in sorted(set(cfg.candidates)):
        s_i = normalization_constant(i)
        mode = chi_mode(i)
        expectation, variance = chi_moments(i)
        adm = "divergent" if i == 1 else _fmt(admissibility_integral(i))
        pf = fit_polynomial(i, cfg.degree_budget)
        rows.append([i, _fmt(s_i), _fmt(mode), _fmt(expectation), _fmt(variance),
                     adm, _fmt(pf.fit_error_linf),
                     ";".join(_fmt(c) for c in pf.coeffs)])
        report.append({
            "i": i, "normalization": s_i, "mode": mode,
            "expectation": expectation, "variance": variance,
            "admissibility": None if i == 1 else admissibility_integral(i),
            "degree": pf.degree, "fit_error_linf": pf.fit_error_linf,
            "coeffs": [float(c) for c in pf.coeffs],
        })
    _write_csv(os.path.join(out, "filters.csv"),
               ["i", "S_i", "mode", "expectation", "variance",
                "admissibility", "fit_error_linf", "coeffs"], rows)
    _write_json(os.path.join(out, "filters.json"), report)
    return 0


def _all_plans(cfg: RunConfig):
    if not cfg.graph:
        raise ValueError("config key 'graph' is required for this command")
    graph = load_hetero_graph(cfg.graph)
    return graph, {o: plan_type(graph, o, cfg) for o in graph.node_types}


def cmd_metapaths(cfg: RunConfig, out: str) -> int:
    _, plans = _all_plans(cfg)
    if not any(tp.plan is not None for tp in plans.values()):
        raise ValueError("no valid meta-paths in the configured length range")
    rows, report = [], []
    for o, tp in plans.items():
        reps = set(tp.plan.representatives.values()) if tp.plan else set()
        for idx, (path, g) in enumerate(zip(tp.paths, tp.graphs)):
            if g.is_empty:
                status, division, score = "excluded: empty", "", ""
            else:
                status = "valid"
                division = tp.plan.labels[idx]
                score = _fmt(tp.plan.scores[idx])
            rows.append([o, str(path), status, score, division,
                         "representative" if idx in reps else ""])
        entry = {"node_type": o,
                 "paths": [{"path": str(p), "empty": g.is_empty,
                            "s_high": None if g.is_empty else tp.plan.scores[i],
                            "division": None if g.is_empty else tp.plan.labels[i],
                            "representative": i in reps}
                           for i, (p, g) in enumerate(zip(tp.paths, tp.graphs))],
                 "divisions": [{"division": d,
                                "representative": str(tp.paths[ri]),
                                "band_max": tp.band_max[d],
                                "assigned_filter": tp.assigned[d]}
                               for d, ri in (tp.plan.representatives.items()
                                             if tp.plan else [])]}
        report.append(entry)
    _write_csv(os.path.join(out, "metapaths.csv"),
               ["node_type", "path", "status", "s_high", "division", "role"], rows)
    _write_json(os.path.join(out, "metapaths.json"), report)
    return 0


def cmd_analyze(cfg: RunConfig, out: str) -> int:
    graph, plans = _all_plans(cfg)
    band_rows, report = [], []
    for o, tp in plans.items():
        if tp.plan is None:
            continue
        for division, rep_idx in tp.plan.representatives.items():
            rep = tp.graphs[rep_idx]
            k_eff = min(cfg.bands, min(rep.num_nodes, cfg.eig_cap))
            profile = profile_capped(
                rep, graph.features[o], k_eff, cfg.eig_cap,
                sub_seed(cfg.seed, f"profile:{o}:{division}"))
            bands = []
            for k in range(profile.num_bands):
                lo, hi = profile.band_edges[k], profile.band_edges[k + 1]
                bands.append({
                    "band": k,
                    "lambda_lo": float(profile.eigenvalues[lo]),
                    "lambda_hi": float(profile.eigenvalues[hi - 1]),
                    "energy": float(profile.band_energies[k]),
                })
                band_rows.append([o, division, k,
                                  _fmt(profile.eigenvalues[lo]),
                                  _fmt(profile.eigenvalues[hi - 1]),
                                  _fmt(profile.band_energies[k])])
            report.append({
                "node_type": o, "division": division,
                "representative": str(tp.paths[rep_idx]),
                "band_max": profile.band_max,
                "assigned_filter": tp.assigned[division],
                "total_energy": float(profile.energies.sum()),
                "bands": bands,
            })
    _write_csv(os.path.join(out, "bands.csv"),
               ["node_type", "division", "band", "lambda_lo", "lambda_hi", "energy"],
               band_rows)
    _write_json(os.path.join(out, "analyze.json"), report)
    return 0


def cmd_synth(cfg: RunConfig, out: str) -> int:
    graph = generate_synthetic_hin(cfg.synth, sub_seed(cfg.seed, "synth"))
    path = os.path.join(out, "synthetic_graph.json")
    save_hetero_graph(graph, path)
    print(f"wrote {path}")
    return 0


def cmd_train(cfg: RunConfig, out: str) -> int:
    if not cfg.graph:
        raise ValueError("config key 'graph' is required for this command")
    graph = load_hetero_graph(cfg.graph)
    model = build_model(graph, cfg)
    record = train(model, graph, cfg)
    save_checkpoint(model, os.path.join(out, "model.ckpt"),
                    extra={"best_epoch": record.best_epoch,
                           "best_val_f1": record.best_val_f1})
    print(f"wrote {os.path.join(out, 'model.ckpt')}")
    write_history_csv(record, os.path.join(out, "history.csv"))
    print(f"wrote {os.path.join(out, 'history.csv')}")
    _emit_metrics(model, graph, out, prefix="")
    return 0


def cmd_eval(cfg: RunConfig, out: str) -> int:
    if not cfg.graph:
        raise ValueError("config key 'graph' is required for this command")
    graph = load_hetero_graph(cfg.graph)
    model = build_model(graph, cfg)
    ckpt = cfg.checkpoint or os.path.join(out, "model.ckpt")
    load_checkpoint(model, ckpt)
    _emit_metrics(model, graph, out, prefix="eval_")
    return 0


def _emit_metrics(model, graph, out: str, prefix: str) -> None:
    rec = evaluate(model, graph, "test")
    _write_json(os.path.join(out, f"{prefix}metrics.json"), rec.as_dict())
    fp = forward_pass(model, graph)
    mask = graph.split_masks["test"]
    scores, labels = fp.prob[mask, 1], graph.labels[mask]
    _write_csv(os.path.join(out, f"{prefix}roc.csv"), ["fpr", "tpr"],
               [[_fmt(a), _fmt(b)] for a, b in roc_points(scores, labels)])
    _write_csv(os.path.join(out, f"{prefix}pr.csv"), ["recall", "precision"],
               [[_fmt(a), _fmt(b)] for a, b in pr_points(scores, labels)])


COMMANDS = {
    "filters": cmd_filters,
    "metapaths": cmd_metapaths,
    "analyze": cmd_analyze,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chigad",
        description="Chi-Square graph wavelet anomaly detection on heterogeneous graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("filters", "dump the candidate filter table (CSV + JSON)"),
        ("metapaths", "list meta-paths, divisions, and representatives"),
        ("analyze", "dump spectral profiles of the division representatives"),
        ("synth", "generate a synthetic labeled graph"),
        ("train", "train a model and write checkpoint, history, metrics"),
        ("eval", "reload a checkpoint and reproduce test metrics"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
