"""Command-line pipeline: propose, describe, pool, fit-pca, fit-itq,
index, search, evaluate. Every subcommand is a pure function of its
input files and flags; artifacts are plain files so stages can be run,
inspected, and re-run independently."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .compression import (
    fit_itq,
    fit_pca,
    itq_encode,
    pca_project,
    read_itq_model,
    read_pca_model,
    write_itq_model,
    write_pca_model,
)
from .config import PipelineConfig, parse_config_text
from .descriptors import describe_regions, read_ofpf, write_ofpf
from .errors import ConfigError, PipelineError
from .evaluation import (
    PROTOCOL_MAP,
    PROTOCOL_UKB,
    mean_average_precision,
    parse_ground_truth,
    render_report,
    ukb_score,
)
from .index import (
    METRIC_HAMMING,
    METRIC_L2,
    RetrievalIndex,
    format_results,
    load_index,
    parse_results,
    save_index,
    search as index_search,
)
from .pooling import l2_normalize, max_pool, read_representation, write_representation
from .proposals import format_proposals, nms_filter, parse_proposals, selective_search
from .raster import decode_ppm

_DEFAULTS = PipelineConfig()

# config keys whose CLI destination differs from the field name
_CONFIG_ALIASES = {"pca_dim": "dim", "itq_bits": "bits", "itq_iters": "iters"}

_ID_MARKERS = (".proposals", ".features", ".rep", ".results")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line diagnostic instead of the usage dump
        self.exit(2, f"error: {message}\n")


def derive_image_id(path: Path) -> str:
    name = Path(path).name
    stem = name.rsplit(".", 1)[0] if "." in name else name
    for marker in _ID_MARKERS:
        if stem.endswith(marker):
            stem = stem[: -len(marker)]
            break
    return stem


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("a --seed value is required (flags or config file)")
    return args.seed


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _single_or_dir(values: list[Path], out, out_dir, suffix: str) -> list[tuple[Path, Path]]:
    """Pair each input with its output path under single-file or directory mode."""
    if out is not None and out_dir is not None:
        raise ConfigError("give either --out or --out-dir, not both")
    if len(values) > 1 and out is not None:
        raise ConfigError("--out handles one input; use --out-dir for several")
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return [(p, out_dir / f"{derive_image_id(p)}{suffix}") for p in values]
    return [(values[0], Path(out) if out is not None else None)]


def _emit(path: Path | None, data) -> None:
    if path is None:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
    elif isinstance(data, bytes):
        Path(path).write_bytes(data)
    else:
        Path(path).write_text(data, encoding="utf-8")


# ---------------------------------------------------------------------------
# handlers


def _propose_one(task) -> str:
    path, image_id, k, min_size, nms_iou, top_n, seed = task
    img = decode_ppm(Path(path).read_bytes())
    pset = selective_search(img, image_id, k=k, min_size=min_size, seed=seed)
    return format_proposals(nms_filter(pset, nms_iou, top_n))


def cmd_propose(args) -> int:
    seed = _require_seed(args)
    pairs = _single_or_dir(args.input, args.out, args.out_dir, ".proposals.txt")
    tasks = [
        (path, args.image_id if args.image_id and len(pairs) == 1 else derive_image_id(path),
         args.k, args.min_size, args.nms_iou, args.top_n, seed)
        for path, _ in pairs
    ]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_propose_one, tasks))
    else:
        outputs = [_propose_one(t) for t in tasks]
    for (_, out_path), text in zip(pairs, outputs):
        _emit(out_path, text)
    return 0


def _describe_one(task) -> bytes:
    image_path, proposals_path, descriptor, features_path, row_normalize = task
    img = decode_ppm(Path(image_path).read_bytes())
    pset = parse_proposals(_read_text(proposals_path))
    external = None
    if descriptor == "external":
        if features_path is None:
            raise ConfigError("external descriptor needs --features")
        ext_set, external = read_ofpf(Path(features_path).read_bytes(), pset.image_id)
        if [p.box for p in ext_set.proposals] != [p.box for p in pset.proposals]:
            raise ConfigError("feature file boxes do not match the proposal file")
    feats = describe_regions(img, pset, descriptor, external)
    rows = feats.rows
    if row_normalize:
        norms = np.linalg.norm(rows.astype(np.float64), axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        from .descriptors import FeatureMatrix

        feats = FeatureMatrix(feats.image_id, (rows / norms).astype(np.float32))
    return write_ofpf(pset, feats)


def _match_aux(path: Path, aux_file, aux_dir, suffix: str, what: str) -> Path:
    if aux_file is not None:
        return Path(aux_file)
    if aux_dir is not None:
        candidate = Path(aux_dir) / f"{derive_image_id(path)}{suffix}"
        if not candidate.exists():
            raise ConfigError(f"no {what} for {path} (looked for {candidate})")
        return candidate
    raise ConfigError(f"missing {what} (file or directory flag)")


def cmd_describe(args) -> int:
    pairs = _single_or_dir(args.input, args.out, args.out_dir, ".features.ofpf")
    if len(pairs) > 1 and args.proposals is not None:
        raise ConfigError("use --proposals-dir when describing several images")
    tasks = []
    for path, _ in pairs:
        proposals_path = _match_aux(
            path, args.proposals, args.proposals_dir, ".proposals.txt", "proposal file"
        )
        tasks.append((path, proposals_path, args.descriptor, args.features, args.row_normalize))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_describe_one, tasks))
    else:
        outputs = [_describe_one(t) for t in tasks]
    for (_, out_path), payload in zip(pairs, outputs):
        _emit(out_path, payload)
    return 0


def _pool_one(task) -> bytes:
    features_path, normalize = task
    image_id = derive_image_id(Path(features_path))
    pset, feats = read_ofpf(Path(features_path).read_bytes(), image_id)
    rep = max_pool(feats)
    if normalize:
        rep = l2_normalize(rep)
    box = pset.proposals[0].box
    for p in pset.proposals[1:]:
        box = box.union(p.box)
    return write_representation(rep, box)


def cmd_pool(args) -> int:
    pairs = _single_or_dir(args.features, args.out, args.out_dir, ".rep.ofpf")
    tasks = [(path, args.l2_normalize) for path, _ in pairs]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_pool_one, tasks))
    else:
        outputs = [_pool_one(t) for t in tasks]
    for (_, out_path), payload in zip(pairs, outputs):
        _emit(out_path, payload)
    return 0


def _collect(files, directory, pattern: str, what: str) -> list[Path]:
    if files:
        return [Path(f) for f in files]
    if directory is not None:
        found = sorted(Path(directory).glob(pattern))
        if not found:
            raise ConfigError(f"no {what} matching {pattern} under {directory}")
        return found
    raise ConfigError(f"missing {what} (file or directory flag)")


def _load_reps(args) -> tuple[list[str], np.ndarray]:
    paths = _collect(args.rep, args.rep_dir, "*.rep.ofpf", "representation files")
    ids, vectors = [], []
    for path in paths:
        image_id = derive_image_id(path)
        rep = read_representation(path.read_bytes(), image_id)
        ids.append(image_id)
        vectors.append(rep.vector.astype(np.float64))
    return ids, np.stack(vectors)


def cmd_fit_pca(args) -> int:
    _, data = _load_reps(args)
    model = fit_pca(data, args.dim)
    _emit(Path(args.out), write_pca_model(model))
    return 0


def cmd_fit_itq(args) -> int:
    seed = _require_seed(args)
    _, data = _load_reps(args)
    model = fit_itq(data, args.bits, args.iters, seed=seed)
    _emit(Path(args.out), write_itq_model(model))
    if args.figure is not None:
        from .figures import save_loss_trace

        save_loss_trace(model.loss_trace, args.figure)
    return 0


def cmd_index(args) -> int:
    ids, data = _load_reps(args)
    if args.metric == METRIC_L2:
        if args.pca is not None:
            model = read_pca_model(Path(args.pca).read_bytes())
            payloads = pca_project(model, data)
            width = model.output_dim
        else:
            payloads = data
            width = data.shape[1]
        index = RetrievalIndex(METRIC_L2, width)
        for image_id, row in zip(ids, payloads):
            index.add_vector(image_id, row.astype(np.float32))
    else:
        if args.itq is None:
            raise ConfigError("hamming index needs --itq MODEL")
        model = read_itq_model(Path(args.itq).read_bytes())
        index = RetrievalIndex(METRIC_HAMMING, model.bits)
        for image_id, row in zip(ids, data):
            index.add_code(image_id, itq_encode(model, row))
    _emit(Path(args.out), save_index(index))
    return 0


def cmd_search(args) -> int:
    index = load_index(Path(args.index).read_bytes())
    if args.metric is not None and args.metric != index.metric:
        raise ConfigError(f"--metric {args.metric} but the index is {index.metric}")
    query_id = args.query_id or derive_image_id(Path(args.query))
    rep = read_representation(Path(args.query).read_bytes(), query_id)
    vector = rep.vector.astype(np.float64)
    if index.metric == METRIC_L2:
        if args.pca is not None:
            model = read_pca_model(Path(args.pca).read_bytes())
            query = pca_project(model, vector).astype(np.float32)
        else:
            query = rep.vector
    else:
        if args.itq is None:
            raise ConfigError("searching a hamming index needs --itq MODEL")
        query = itq_encode(read_itq_model(Path(args.itq).read_bytes()), vector)
    ranked = index_search(index, query, args.k, query_id=query_id)
    _emit(Path(args.out) if args.out else None, format_results(ranked))
    return 0


def cmd_evaluate(args) -> int:
    paths = _collect(args.results, args.results_dir, "*.results.txt", "result files")
    lists = [parse_results(_read_text(p), derive_image_id(p)) for p in paths]
    gt = parse_ground_truth(_read_text(args.ground_truth))
    exclude = args.exclude_query
    if exclude is None:
        exclude = args.protocol == PROTOCOL_MAP
    if args.protocol == PROTOCOL_MAP:
        report = mean_average_precision(lists, gt, exclude_query=exclude)
    else:
        report = ukb_score(lists, gt)
    _emit(Path(args.out) if args.out else None, render_report(report))
    figure = args.figure
    if figure is None and args.out is not None and not args.no_figure:
        figure = str(Path(args.out).with_suffix(".png"))
    if figure is not None and not args.no_figure:
        from .figures import save_score_chart

        save_score_chart(report, figure)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_io(sub, batch_suffix: str):
    sub.add_argument("--out", type=Path, default=None, help="output file (single input)")
    sub.add_argument(
        "--out-dir", type=Path, default=None,
        help=f"output directory, files named <image_id>{batch_suffix}",
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="opr", description="object-pooled image retrieval pipeline")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="flat `key = value` file; flags override it")
    subs = parser.add_subparsers(dest="command", required=True)
    table: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("propose", parents=[common], help="generate scored region proposals")
    p.add_argument("--input", type=Path, nargs="+", required=True, help="P6 PPM image(s)")
    p.add_argument("--image-id", default=None, help="id override (single input; default: file stem)")
    p.add_argument("--k", type=float, default=_DEFAULTS.k,
                   help="segmentation scale (default: %(default)s)")
    p.add_argument("--min-size", type=int, default=_DEFAULTS.min_size,
                   help="minimum segment pixels (default: %(default)s)")
    p.add_argument("--nms-iou", type=float, default=_DEFAULTS.nms_iou,
                   help="overlap threshold for suppression (default: %(default)s)")
    p.add_argument("--top-n", type=int, default=_DEFAULTS.top_n,
                   help="max proposals kept (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="scoring seed (required)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default: %(default)s)")
    _add_io(p, ".proposals.txt")
    p.set_defaults(handler=cmd_propose)
    table["propose"] = p

    p = subs.add_parser("describe", parents=[common], help="descriptor rows per proposal")
    p.add_argument("--input", type=Path, nargs="+", required=True, help="P6 PPM image(s)")
    p.add_argument("--proposals", type=Path, default=None, help="proposal file (single input)")
    p.add_argument("--proposals-dir", type=Path, default=None,
                   help="directory of <image_id>.proposals.txt")
    p.add_argument("--descriptor", choices=["builtin", "external"],
                   default=_DEFAULTS.descriptor, help="descriptor source (default: %(default)s)")
    p.add_argument("--features", type=Path, default=None,
                   help="OFPF with externally computed rows (external descriptor)")
    p.add_argument("--row-normalize", action=argparse.BooleanOptionalAction,
                   default=_DEFAULTS.row_normalize,
                   help="l2-normalize each descriptor row (default: %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default: %(default)s)")
    _add_io(p, ".features.ofpf")
    p.set_defaults(handler=cmd_describe)
    table["describe"] = p

    p = subs.add_parser("pool", parents=[common], help="max-pool features into one vector")
    p.add_argument("--features", type=Path, nargs="+", required=True, help="OFPF feature file(s)")
    p.add_argument("--l2-normalize", action=argparse.BooleanOptionalAction,
                   default=_DEFAULTS.l2_normalize,
                   help="l2-normalize the pooled vector (default: %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default: %(default)s)")
    _add_io(p, ".rep.ofpf")
    p.set_defaults(handler=cmd_pool)
    table["pool"] = p

    def add_rep_inputs(sub):
        sub.add_argument("--rep", type=Path, nargs="+", default=None,
                         help="pooled representation file(s)")
        sub.add_argument("--rep-dir", type=Path, default=None,
                         help="directory of <image_id>.rep.ofpf")

    p = subs.add_parser("fit-pca", parents=[common], help="learn a PCA compression model")
    add_rep_inputs(p)
    p.add_argument("--dim", type=int, default=_DEFAULTS.pca_dim,
                   help="output dimensionality (default: %(default)s)")
    p.add_argument("--out", type=Path, required=True, help="model file (OFPM)")
    p.set_defaults(handler=cmd_fit_pca)
    table["fit-pca"] = p

    p = subs.add_parser("fit-itq", parents=[common], help="learn an ITQ binarization model")
    add_rep_inputs(p)
    p.add_argument("--bits", type=int, default=_DEFAULTS.itq_bits,
                   help="code length in bits (default: %(default)s)")
    p.add_argument("--iters", type=int, default=_DEFAULTS.itq_iters,
                   help="alternating-minimization iterations (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="rotation init seed (required)")
    p.add_argument("--out", type=Path, required=True, help="model file (OFPQ)")
    p.add_argument("--figure", type=Path, default=None,
                   help="also render the loss trace to this image file")
    p.set_defaults(handler=cmd_fit_itq)
    table["fit-itq"] = p

    p = subs.add_parser("index", parents=[common], help="build a retrieval index")
    add_rep_inputs(p)
    p.add_argument("--metric", choices=[METRIC_L2, METRIC_HAMMING], default=_DEFAULTS.metric,
                   help="distance metric (default: %(default)s)")
    p.add_argument("--pca", type=Path, default=None, help="project entries with this PCA model")
    p.add_argument("--itq", type=Path, default=None, help="encode entries with this ITQ model")
    p.add_argument("--out", type=Path, required=True, help="index file (OFPI)")
    p.set_defaults(handler=cmd_index)
    table["index"] = p

    p = subs.add_parser("search", parents=[common], help="query an index")
    p.add_argument("--index", type=Path, required=True, help="index file (OFPI)")
    p.add_argument("--query", type=Path, required=True, help="pooled representation of the query")
    p.add_argument("--query-id", default=None, help="id override (default: query file name)")
    p.add_argument("--k", type=int, default=10, help="results to return (default: %(default)s)")
    p.add_argument("--metric", choices=[METRIC_L2, METRIC_HAMMING], default=None,
                   help="assert the index metric")
    p.add_argument("--pca", type=Path, default=None, help="PCA model used to build the index")
    p.add_argument("--itq", type=Path, default=None, help="ITQ model used to build the index")
    p.add_argument("--out", type=Path, default=None, help="results file (default: stdout)")
    p.set_defaults(handler=cmd_search)
    table["search"] = p

    p = subs.add_parser("evaluate", parents=[common], help="score ranked results")
    p.add_argument("--results", type=Path, nargs="+", default=None,
                   help="search output file(s), query id taken from the file name")
    p.add_argument("--results-dir", type=Path, default=None,
                   help="directory of <query_id>.results.txt")
    p.add_argument("--ground-truth", type=Path, required=True,
                   help="query_id<TAB>relevant,relevant,... file")
    p.add_argument("--protocol", choices=[PROTOCOL_MAP, PROTOCOL_UKB], default=PROTOCOL_MAP,
                   help="scoring protocol (default: %(default)s)")
    p.add_argument("--exclude-query", action=argparse.BooleanOptionalAction, default=None,
                   help="drop the query from its ranking (default: on for map, off for ukb)")
    p.add_argument("--out", type=Path, default=None, help="report file (default: stdout)")
    p.add_argument("--figure", type=Path, default=None,
                   help="score chart file (default: <out>.png when --out is set)")
    p.add_argument("--no-figure", action="store_true", help="skip figure rendering")
    p.set_defaults(handler=cmd_evaluate)
    table["evaluate"] = p

    return parser, table


def _apply_config(table: dict[str, argparse.ArgumentParser], cfg: PipelineConfig) -> None:
    overrides = {}
    for f in fields(PipelineConfig):
        value = getattr(cfg, f.name)
        if value == getattr(_DEFAULTS, f.name):
            continue
        overrides[_CONFIG_ALIASES.get(f.name, f.name)] = value
    if cfg.seed is not None:
        overrides["seed"] = cfg.seed
    for sub in table.values():
        dests = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in overrides.items() if k in dests})


def _peek_config(argv: list[str]) -> Path | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if token.startswith("--config="):
            return Path(token.split("=", 1)[1])
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, table = build_parser()
    try:
        config_path = _peek_config(argv)
        if config_path is not None:
            _apply_config(table, parse_config_text(_read_text(config_path)))
        args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as e:
        return int(e.code or 0)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
