"""Command-line entry point.

Subcommands: ``fit``, ``predict``, ``evaluate``, ``detect`` and ``explain``.
Each run emits one JSON report (to ``--out`` or stdout). ``--csv`` writes
the per-row table of the run, and when ``--out`` is given the figures are
saved next to it as ``<out stem>_<figure>.png``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import report as rep
from .anomaly import DEFAULT_THRESHOLD, Mode
from .data_model import Dataset, _read_rows, load_dataset, load_queries
from .evaluation import METRIC_NAMES, evaluate
from .exceptions import ConfigError, DataError, SurprisalError
from .metrics import classification_metrics, f1_binary, regression_metrics
from .model import SurprisalModel

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("surprisal_knn")


@dataclass(frozen=True)
class RunConfig:
    command: str
    data: str
    schema: str
    k: int | None = None
    p: float = 0.0
    threshold: float = DEFAULT_THRESHOLD
    iters: int = 10
    tol: float = 0.01
    seeds: tuple[int, ...] = tuple(range(30))
    split: float = 0.75
    mode: Mode = Mode.SIMILARITY
    out: str | None = None
    query: str | None = None
    csv: str | None = None
    figures: bool = True
    anomaly_label: str = "1"
    sample: int | None = None

    def validate(self):
        if not 0 < self.split < 1:
            raise ConfigError(f"--split must be in (0, 1), got {self.split}")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"--k must be >= 1, got {self.k}")
        if self.p < 0:
            raise ConfigError(f"--p must be >= 0, got {self.p}")
        if self.iters < 1:
            raise ConfigError(f"--iters must be >= 1, got {self.iters}")
        if not self.tol > 0:
            raise ConfigError(f"--tol must be > 0, got {self.tol}")
        if self.command == "evaluate" and not self.seeds:
            raise ConfigError("--seeds must name at least one seed")
        if self.command in ("predict", "detect", "explain") and not self.query:
            raise ConfigError(f"{self.command} needs --query")

    def as_dict(self) -> dict:
        d = {"command": self.command, "data": self.data, "schema": self.schema, "k": self.k,
             "p": self.p, "iters": self.iters, "tol": self.tol}
        if self.command == "evaluate":
            d.update(seeds=list(self.seeds), split=self.split)
        if self.command == "detect":
            d.update(mode=self.mode.value, threshold=self.threshold)
        if self.query:
            d["query"] = self.query
        return d


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"30"`` means seeds 0..29; a comma list (``"3,7"`` or ``"5,"``) names seeds explicitly."""
    text = text.strip()
    try:
        if "," in text:
            return tuple(int(s) for s in text.split(",") if s.strip())
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed spec {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("seed count must be >= 1")
    return tuple(range(n))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surprisal-knn",
                                     description="Surprisal-weighted k-NN learning and anomaly detection.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, help="training CSV (header row required)")
    common.add_argument("--schema", required=True, help="JSON schema for the columns")
    common.add_argument("--k", type=int, default=None, help="neighbors (default ceil(sqrt(N)), max 30)")
    common.add_argument("--p", type=float, default=0.0, help="Minkowski exponent, 0 = geometric")
    common.add_argument("--iters", type=int, default=10, help="max residual fitting iterations")
    common.add_argument("--tol", type=float, default=0.01, help="residual convergence tolerance")
    common.add_argument("--sample", type=int, default=None,
                        help="fit residuals on a seeded sample of this many cases")
    common.add_argument("--out", default=None, help="report path (default stdout)")
    common.add_argument("--csv", default=None, help="also write the per-row table as CSV")
    common.add_argument("--no-figures", dest="figures", action="store_false",
                        help="skip figures next to --out")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit residuals and feature weights")
    for name, text in (("predict", "predict the target for query rows"),
                       ("explain", "conviction report for query rows")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--query", required=True, help="query CSV")
    ev = sub.add_parser("evaluate", parents=[common], help="seeded train/test evaluation")
    ev.add_argument("--seeds", type=parse_seeds, default=tuple(range(30)),
                    help="seed count N (seeds 0..N-1) or comma list")
    ev.add_argument("--split", type=float, default=0.75, help="training fraction")
    dt = sub.add_parser("detect", parents=[common], help="anomaly verdicts for query rows")
    dt.add_argument("--query", required=True, help="query CSV")
    dt.add_argument("--mode", type=Mode, choices=list(Mode), default=Mode.SIMILARITY)
    dt.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    dt.add_argument("--anomaly-label", default="1",
                    help="value of the truth column that marks an anomaly")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {f: getattr(ns, f) for f in RunConfig.__dataclass_fields__ if hasattr(ns, f)}
    return RunConfig(**fields)


# --------------------------------------------------------------------------
# commands


def _train(cfg: RunConfig, dataset: Dataset) -> SurprisalModel:
    return SurprisalModel.train(dataset, k=cfg.k, p=cfg.p, max_iter=cfg.iters, tol=cfg.tol,
                                sample=cfg.sample)


def _figure_path(cfg: RunConfig, name: str) -> Path | None:
    if not cfg.figures or cfg.out is None:
        return None
    out = Path(cfg.out)
    return out.with_name(f"{out.stem}_{name}.png")


def _feature_rows(model: SurprisalModel) -> list[dict]:
    return [{k: f[k] for k in ("name", "kind", "residual", "weight", "target")}
            for f in model.summary()["features"]]


def run_fit(cfg: RunConfig, dataset: Dataset):
    model = _train(cfg, dataset)
    summary = model.summary()
    body = {"n_cases": dataset.n_cases, "model": summary}
    figures = {}
    if path := _figure_path(cfg, "convergence"):
        from . import plotting
        figures["convergence"] = plotting.residual_history(summary["history"], path)
        path = _figure_path(cfg, "weights")
        figures["weights"] = plotting.feature_weights(
            [f["name"] for f in summary["features"]], model.fit.residuals, model.fit.weights, path)
    return body, _feature_rows(model), figures


def _truth_given(rows, t) -> bool:
    return t is not None and all(r[t] is not None for r in rows)


def run_predict(cfg: RunConfig, dataset: Dataset):
    if dataset.target is None:
        raise ConfigError("predict needs a schema with a target column")
    model = _train(cfg, dataset)
    queries = load_queries(cfg.query, dataset)
    t = dataset.target
    has_truth = _truth_given(queries, t)
    rows, preds = [], []
    for i, q in enumerate(queries):
        truth = q[t]
        # with a truth value, residual conviction uses the observed error
        pred = model.predict(q)
        preds.append(pred.value)
        row = {"query": i, "prediction": pred.value,
               "residual_conviction": pred.residual_conviction,
               "estimated_error": pred.estimated_error,
               "influences": [{"case": c, "weight": w} for c, w in pred.influences]}
        if truth is not None:
            row["truth"] = truth
        rows.append(row)
    body = {"model": {"k": model.k, "iterations_run": model.fit.iterations_run},
            "target": dataset.specs[t].name, "predictions": rows}
    if has_truth:
        truth = [q[t] for q in queries]
        scorer = regression_metrics if dataset.specs[t].is_continuous else classification_metrics
        body["scores"] = scorer(truth, preds)._asdict()
    table = [{k: v for k, v in r.items() if k != "influences"} for r in rows]
    return body, table, {}


def run_evaluate(cfg: RunConfig, dataset: Dataset):
    report = evaluate(dataset, cfg.seeds, split=cfg.split, k=cfg.k, p=cfg.p, max_iter=cfg.iters,
                      tol=cfg.tol)
    body = report.to_dict()
    figures = {}
    if path := _figure_path(cfg, "seeds"):
        from . import plotting
        figures["seeds"] = plotting.per_seed_metrics(
            rep.to_plain(report.rows), METRIC_NAMES[report.task], path)
    return body, report.rows, figures


def run_detect(cfg: RunConfig, dataset: Dataset):
    t = dataset.target
    features = dataset if t is None else dataset.drop_feature(t)
    model = _train(cfg, features)
    if t is None:
        raw = load_queries(cfg.query, dataset)
        truth_col = None
    else:
        # the query truth column may hold labels never seen in the inlier-only training data
        specs = list(dataset.specs)
        specs[t] = replace(specs[t], categories=())
        raw = _read_rows(cfg.query, specs, optional=[specs[t].name])
        truth_col = [r[t] for r in raw]
        raw = [r[:t] + r[t + 1:] for r in raw]
    verdicts = model.detect(raw, cfg.mode, cfg.threshold)
    has_truth = truth_col is not None and all(v is not None for v in truth_col)
    rows = []
    for i, v in enumerate(verdicts):
        row = {"query": i, "score": v.score, "is_anomaly": v.is_anomaly}
        if has_truth:
            row["truth"] = _is_label(truth_col[i], cfg.anomaly_label)
        rows.append(row)
    flagged = [r["is_anomaly"] for r in rows]
    body = {"model": {"k": model.k, "iterations_run": model.fit.iterations_run},
            "n_queries": len(rows), "n_flagged": int(sum(flagged)), "verdicts": rows}
    if has_truth:
        body["f1"] = f1_binary([r["truth"] for r in rows], flagged)
    figures = {}
    if path := _figure_path(cfg, "scores"):
        from . import plotting
        figures["scores"] = plotting.conviction_histogram(
            [r["score"] for r in rows], cfg.threshold, path,
            truth=[r["truth"] for r in rows] if has_truth else None,
            label=f"{cfg.mode.value} conviction")
    return body, rows, figures


def _is_label(value, label: str) -> bool:
    if isinstance(value, float):
        try:
            return value == float(label)
        except ValueError:
            return False
    return str(value) == label


def run_explain(cfg: RunConfig, dataset: Dataset):
    model = _train(cfg, dataset)
    queries = load_queries(cfg.query, dataset)
    t = dataset.target
    rows = []
    for i, q in enumerate(queries):
        if t is not None:
            q = list(q)
            q[t] = None
        r = model.explain(q)
        rows.append({"query": i, "phi": r.phi, "surprisal": r.surprisal, "pi_s": r.pi_s,
                     "expected_phi": r.expected_phi, "pi_f": r.pi_f})
    body = {"model": {"k": model.k, "iterations_run": model.fit.iterations_run},
            "reports": rows}
    figures = {}
    if path := _figure_path(cfg, "convictions"):
        from . import plotting
        figures["convictions"] = plotting.contribution_scatter(
            [r["phi"] for r in rows], [r["pi_s"] for r in rows], path)
    return body, rows, figures


COMMANDS = {"fit": run_fit, "predict": run_predict, "evaluate": run_evaluate,
            "detect": run_detect, "explain": run_explain}


def run(cfg: RunConfig) -> int:
    """Execute one run and write its outputs. Errors propagate to :func:`main`."""
    cfg.validate()
    dataset = load_dataset(cfg.data, cfg.schema)
    body, table, figures = COMMANDS[cfg.command](cfg, dataset)
    document = {"config": cfg.as_dict(), "result": body}
    text = rep.dumps(document)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.csv:
        rep.write_csv(table, cfg.csv)
    for name, path in figures.items():
        log.info("wrote figure %s -> %s", name, path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return run(config_from_args(ns))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SurprisalError, ArithmeticError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
