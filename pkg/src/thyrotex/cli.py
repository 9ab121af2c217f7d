"""Command line interface.

Subcommands: ``preprocess`` (manifest -> enhanced patch PGMs + index),
``extract`` (patches -> feature CSV + metadata sidecar), ``evaluate``
(features + manifest -> cross-validated report), ``predict`` (model +
features -> predictions CSV), ``report`` (merge report CSVs into a
comparison table).
"""

import argparse
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import build_config, load_config_file
from .descriptors import DESCRIPTOR_NAMES, feature_length, make_descriptor
from .evaluation import run_experiment
from .images import load_image, read_pgm, write_pgm
from .manifest import load_manifest, stage_labels
from .preprocessing import preprocess_image
from .sampling import smote
from .svm import SmoSvc, load_model, save_model

logger = logging.getLogger(__name__)

_CONFIG_KEYS = (
    "patch_size",
    "cell_size",
    "coeffs",
    "global_coeffs",
    "descriptor",
    "clahe_clip",
    "clahe_stage1_tiles",
    "clahe_stage2_tiles",
    "tiles_are_pixels",
    "smote_k",
    "no_smote",
    "svm_c",
    "svm_gamma",
    "grid_search",
    "inner_folds",
    "tol",
    "folds",
    "no_stratify",
    "seed",
    "jobs",
)


def _resolve_config(args):
    file_values = load_config_file(args.config) if getattr(args, "config", None) else None
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if hasattr(args, k)}
    return build_config(file_values, overrides)


def _write_meta(path, mapping: dict) -> None:
    lines = ["%s=%s" % (k, mapping[k]) for k in sorted(mapping)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_meta(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


def write_features(path, ids, labels, X) -> None:
    """Write the feature CSV: header ``sample_id,label,f0..f{dim-1}``."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label"] + ["f%d" % k for k in range(X.shape[1])])
        for sid, lab, row in zip(ids, labels, X):
            writer.writerow([sid, int(lab)] + [repr(float(v)) for v in row])


def read_features(path):
    """Read a feature CSV; returns (ids, labels, X)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("feature file %s is empty" % path)
    header = rows[0]
    if len(header) < 2 or header[0] != "sample_id" or header[1] != "label":
        raise ValueError("feature file %s: malformed header" % path)
    dim = len(header) - 2
    expected = ["f%d" % k for k in range(dim)]
    if header[2:] != expected:
        raise ValueError("feature file %s: malformed feature columns" % path)
    ids = []
    labels = []
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 2:
            raise ValueError("feature file %s row %d: expected %d columns" % (path, r, dim + 2))
        ids.append(row[0])
        labels.append(int(row[1]))
        data.append(row[2:])
    X = np.array(data, dtype=np.float64) if data else np.empty((0, dim))
    return ids, np.array(labels, dtype=np.intp), X


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_preprocess(args) -> int:
    cfg = _resolve_config(args)
    manifest = load_manifest(args.manifest)
    base = Path(args.manifest).resolve().parent
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    debug_dir = Path(args.debug_dir) if args.debug_dir else None
    if debug_dir:
        debug_dir.mkdir(parents=True, exist_ok=True)

    def work(item):
        idx, entry = item
        src = Path(entry.path)
        full = src if src.is_absolute() else base / src
        try:
            img = load_image(full)
            enhanced, inter = preprocess_image(
                img,
                patch_size=cfg.patch_size,
                clahe_clip=cfg.clahe_clip,
                stage1_tiles=cfg.clahe_stage1_tiles,
                stage2_tiles=cfg.clahe_stage2_tiles,
                tiles_are_pixel_blocks=cfg.tiles_are_pixels,
                collect_intermediates=True,
            )
        except (ValueError, OSError) as exc:
            return idx, None, "%s: %s" % (entry.path, exc)
        quantized = np.floor(enhanced * 255.0 + 0.5).astype(np.uint8)
        name = "patch_%05d.pgm" % idx
        write_pgm(out_dir / name, quantized)
        if debug_dir:
            write_pgm(debug_dir / ("mask_%05d.pgm" % idx), inter["mask"].astype(np.uint8) * 255)
            write_pgm(debug_dir / ("roi_%05d.pgm" % idx), inter["roi"])
            write_pgm(debug_dir / ("enhanced_%05d.pgm" % idx), quantized)
        return idx, name, None

    results = _map_jobs(work, list(enumerate(manifest.entries)), cfg.jobs)
    failures = [(manifest.entries[i].path, err) for i, _, err in results if err]
    with open(out_dir / "index.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "patch", "diagnosis", "tirads"])
        for idx, name, err in results:
            if err:
                continue
            entry = manifest.entries[idx]
            writer.writerow([entry.path, name, entry.diagnosis, entry.tirads])
    meta = cfg.echo()
    meta.update({"tool_version": __version__, "n_samples": len(manifest.entries) - len(failures)})
    _write_meta(out_dir / "preprocess.meta", meta)
    for path, err in failures:
        print("error: %s" % err, file=sys.stderr)
    if failures:
        print("preprocess: %d of %d samples failed" % (len(failures), len(manifest.entries)), file=sys.stderr)
        return 1
    print("preprocess: wrote %d patches to %s" % (len(results), out_dir))
    return 0


def cmd_extract(args) -> int:
    cfg = _resolve_config(args)
    index_path = Path(args.index)
    base = index_path.resolve().parent
    with open(index_path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["sample_id", "patch", "diagnosis", "tirads"]:
        raise ValueError("index %s: malformed header" % index_path)
    entries = rows[1:]
    if not entries:
        raise ValueError("index %s contains no samples" % index_path)
    descriptor = make_descriptor(
        cfg.descriptor,
        cell_size=cfg.cell_size,
        n_coeffs=cfg.coeffs,
        n_global_coeffs=cfg.global_coeffs,
    )

    def load_patch(row):
        patch = read_pgm(base / row[1])
        if patch.shape != (cfg.patch_size, cfg.patch_size):
            raise ValueError(
                "patch %s: dimension mismatch, expected %dx%d, got %dx%d"
                % (row[1], cfg.patch_size, cfg.patch_size, patch.shape[0], patch.shape[1])
            )
        return patch

    patches = _map_jobs(load_patch, entries, cfg.jobs)
    if cfg.jobs > 1 and len(patches) > 1:
        chunks = np.array_split(np.arange(len(patches)), cfg.jobs)
        parts = _map_jobs(
            lambda sel: descriptor.transform([patches[i] for i in sel]) if len(sel) else None,
            [c for c in chunks if len(c)],
            cfg.jobs,
        )
        X = np.vstack([p for p in parts if p is not None])
    else:
        X = descriptor.transform(patches)
    ids = [row[0] for row in entries]
    labels = [1 if row[2] == "malignant" else 0 for row in entries]
    write_features(args.out, ids, labels, X)
    meta = cfg.echo()
    meta.update({"dim": X.shape[1], "tool_version": __version__})
    _write_meta(str(args.out) + ".meta", meta)
    print("extract: wrote %d x %d features to %s" % (X.shape[0], X.shape[1], args.out))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    ids, _csv_labels, X = read_features(args.features)
    manifest = load_manifest(args.manifest)
    pairs = stage_labels(manifest, args.stage)
    manifest_paths = {e.path for e in manifest.entries}
    strays = sorted(set(ids) - manifest_paths)
    if strays:
        raise ValueError(
            "feature rows not present in the manifest: %s" % ", ".join(strays)
        )
    id_set = set(ids)
    missing = sorted(p for p, _ in pairs if p not in id_set)
    if missing:
        raise ValueError("labeled samples missing from the feature file: %s" % ", ".join(missing))
    label_map = dict(pairs)
    keep = [k for k, sid in enumerate(ids) if sid in label_map]
    X_kept = X[keep]
    y = np.array([label_map[ids[k]] for k in keep], dtype=np.intp)
    meta_path = Path(str(args.features) + ".meta")
    descriptor_name = cfg.descriptor
    if meta_path.exists():
        descriptor_name = _read_meta(meta_path).get("descriptor", descriptor_name)
    config_extra = cfg.echo()
    config_extra.update({"stage": args.stage, "descriptor": descriptor_name})
    report = run_experiment(
        X_kept,
        y,
        n_folds=cfg.folds,
        seed=cfg.seed,
        stratify=not cfg.no_stratify,
        use_smote=not cfg.no_smote,
        smote_k=cfg.smote_k,
        C=cfg.svm_c,
        gamma=cfg.svm_gamma,
        tol=cfg.tol,
        search=cfg.grid_search,
        inner_folds=cfg.inner_folds,
        config_extra=config_extra,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv_text())
    with open(out_dir / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_summary_text())
    if args.model_out:
        X_fit, y_fit = X_kept, y
        if not cfg.no_smote:
            rng = np.random.default_rng(cfg.seed + cfg.folds)
            X_fit, y_fit = smote(X_fit, y_fit, k_neighbors=cfg.smote_k, random_state=rng)
        clf = SmoSvc(C=cfg.svm_c, gamma=cfg.svm_gamma, tol=cfg.tol)
        clf.fit(X_fit, y_fit)
        save_model(clf, args.model_out)
    print(
        "evaluate: stage %d, %d samples, avg=%.2f%% (report in %s)"
        % (args.stage, len(y), 100.0 * report.avg, out_dir)
    )
    return 0


def cmd_predict(args) -> int:
    clf = load_model(args.model)
    ids, _labels, X = read_features(args.features)
    if X.shape[0] and X.shape[1] != clf.n_features_in_:
        raise ValueError(
            "feature dimension mismatch: model expects %d, feature file has %d"
            % (clf.n_features_in_, X.shape[1])
        )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label", "score"])
        if X.shape[0]:
            scores = clf.decision_function(X)
            labels = clf.predict(X)
            for sid, lab, score in zip(ids, labels, scores):
                writer.writerow([sid, int(lab), repr(float(score))])
    _write_meta(
        str(args.out) + ".meta",
        {
            "model_c": clf.C,
            "model_gamma": clf.gamma_,
            "model_bias": clf.intercept_,
            "n_features": clf.n_features_in_,
            "n_support": len(clf.support_vectors_),
            "tool_version": __version__,
        },
    )
    print("predict: wrote %d predictions to %s" % (len(ids), args.out))
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            parsed = list(csv.reader(fh))
        if not parsed or parsed[0] != ["fold", "pre", "f1", "spec", "sen", "acc", "avg"]:
            raise ValueError("report %s: malformed header" % path)
        avg_rows = [r for r in parsed[1:] if r and r[0] == "avg"]
        if not avg_rows:
            raise ValueError("report %s has no avg row" % path)
        rows.append([Path(path).stem] + avg_rows[0][1:])
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["technique", "pre", "f1", "spec", "sen", "acc", "avg"])
        writer.writerows(rows)
    width = max(len(r[0]) for r in rows + [["technique"]])
    print("%-*s %8s %8s %8s %8s %8s %8s" % (width, "technique", "pre", "f1", "spec", "sen", "acc", "avg"))
    for r in rows:
        print("%-*s %8s %8s %8s %8s %8s %8s" % ((width, r[0]) + tuple(r[1:])))
    return 0


def _gamma_arg(raw: str):
    return "auto" if raw.strip().lower() == "auto" else float(raw)


def _add_common(parser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    parser.add_argument("--seed", type=int, default=None, help="base random seed (default 42)")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads for per-sample steps")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="increase log verbosity")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="thyrotex",
        description="Texture-descriptor pipeline for two-stage thyroid nodule classification.",
    )
    top.add_argument("--version", action="version", version="thyrotex %s" % __version__)
    sub = top.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", help="segment, crop, normalize, and enhance nodule images")
    _add_common(pre)
    pre.add_argument("--manifest", required=True, help="dataset manifest CSV (path,diagnosis,tirads)")
    pre.add_argument("--out-dir", required=True, help="directory for patch PGMs and index.csv")
    pre.add_argument("--patch-size", type=int, default=None, help="output patch side length (default 256)")
    pre.add_argument("--clahe-clip", type=float, default=None, help="CLAHE clip limit > 1 (default 2.0)")
    pre.add_argument(
        "--clahe-stage1-tiles", type=int, default=None, help="first-pass CLAHE tiles per side (default 8)"
    )
    pre.add_argument(
        "--clahe-stage2-tiles", type=int, default=None, help="second-pass CLAHE tiles per side (default 4)"
    )
    pre.add_argument(
        "--tiles-are-pixels",
        action="store_const",
        const=True,
        default=None,
        help="read the stage tile arguments as pixel block sizes instead of grid counts",
    )
    pre.add_argument("--debug-dir", default=None, help="dump mask/ROI/enhanced PGMs per sample")
    pre.set_defaults(func=cmd_preprocess)

    ext = sub.add_parser("extract", help="compute descriptor features from preprocessed patches")
    _add_common(ext)
    ext.add_argument("--index", required=True, help="index.csv written by preprocess")
    ext.add_argument("--out", required=True, help="output feature CSV path")
    ext.add_argument(
        "--descriptor", choices=DESCRIPTOR_NAMES, default=None, help="feature family (default bpd-ldct)"
    )
    ext.add_argument("--patch-size", type=int, default=None, help="expected patch side length")
    ext.add_argument("--cell-size", type=int, default=None, help="cell side length (default 8)")
    ext.add_argument("--coeffs", type=int, default=None, help="zigzag coefficients per cell (default 36)")
    ext.add_argument(
        "--global-coeffs", type=int, default=None, help="coefficients for the global dct descriptor (default 1024)"
    )
    ext.set_defaults(func=cmd_extract)

    ev = sub.add_parser("evaluate", help="cross-validated evaluation of a feature file")
    _add_common(ev)
    ev.add_argument("--features", required=True, help="feature CSV from extract")
    ev.add_argument("--manifest", required=True, help="manifest CSV providing labels")
    ev.add_argument("--stage", type=int, choices=(1, 2), required=True, help="1: benign/malignant, 2: TIRADS")
    ev.add_argument("--out-dir", required=True, help="directory for report.csv and summary.txt")
    ev.add_argument("--folds", type=int, default=None, help="cross-validation folds (default 5)")
    ev.add_argument(
        "--no-stratify",
        action="store_const",
        const=True,
        default=None,
        help="use a plain shuffled split instead of stratified folds",
    )
    ev.add_argument("--smote-k", type=int, default=None, help="SMOTE neighborhood size (default 5)")
    ev.add_argument(
        "--no-smote", action="store_const", const=True, default=None, help="disable training-fold oversampling"
    )
    ev.add_argument("--svm-c", type=float, default=None, help="SVM penalty C (default 1.0)")
    ev.add_argument("--svm-gamma", type=_gamma_arg, default=None, help="RBF gamma or 'auto'")
    ev.add_argument(
        "--grid-search",
        action="store_const",
        const=True,
        default=None,
        help="inner-fold search over C and gamma grids",
    )
    ev.add_argument("--inner-folds", type=int, default=None, help="folds for the inner search (default 3)")
    ev.add_argument("--tol", type=float, default=None, help="SMO KKT tolerance (default 1e-3)")
    ev.add_argument("--model-out", default=None, help="also fit a final model on all samples and save it here")
    ev.set_defaults(func=cmd_evaluate)

    prd = sub.add_parser("predict", help="score a feature file with a saved model")
    _add_common(prd)
    prd.add_argument("--model", required=True, help="model file written by evaluate --model-out")
    prd.add_argument("--features", required=True, help="feature CSV to score")
    prd.add_argument("--out", required=True, help="output predictions CSV")
    prd.set_defaults(func=cmd_predict)

    rep = sub.add_parser("report", help="merge evaluation reports into a comparison table")
    _add_common(rep)
    rep.add_argument("--out", required=True, help="output comparison CSV")
    rep.add_argument("inputs", nargs="+", help="report.csv files to merge")
    rep.set_defaults(func=cmd_report)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
