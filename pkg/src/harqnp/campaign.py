"""Monte-Carlo campaigns: trials, statistics, records, curves and reports.

Trial ``t`` draws everything from its own counter-based stream, and trials
are processed in fixed-size chunks, so record dumps are identical whatever
the number of worker processes.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import alist as alist_io
from .channel import BiAwgnChannel, bit_flip_prob, channel_llr, modulate, prefix_log_likelihoods
from .codes import (BinaryLinearCode, ConstructionError, CosetTooLarge, CrcSpec,
                    construct_regular_ldpc, prefix_parity, valid_message_set)
from .config import ConfigError
from .decoders import BoundedDistanceDecoder, MlDecoder, SumProductDecoder, SumProductParams
from .kde import kde_fit, kde_regression_fit
from .mvn import DimensionTooLarge, QmcParams
from .oracle import pd_nested_mc, pd_unconditional, terror_prob
from .predictors import (RECORD_FIELDS, BdNpStatistic, CosetStatistic, KdeNpStatistic,
                         MlNpStatistic, PrefixMlDecoder, PrefixSumProductDecoder,
                         PrefixSyndromeDecoder, QuantizedNpStatistic, decode_based_batch,
                         llr_mean_batch, mi_batch, subcode_batch, subcode_parity)
from .roc import ALPHA_GRID, DegenerateInput, binary_test_point, dominance_report, roc_from_scores

log = logging.getLogger(__name__)

TRIAL_STREAM, KDE_STREAM, SUCCESS_STREAM = 0, 1, 2

NP_KINDS = ("np_exact", "np_coset", "np_quant", "np_kde")


def trial_rng(master_seed, stream, t=None):
    key = (stream,) if t is None else (stream, t)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=key)))


# ---------------------------------------------------------------------------
# Code construction
# ---------------------------------------------------------------------------

def build_code(code_cfg):
    """Parity matrix from an alist file or the seeded constructions.

    With ``method="auto"`` and a target dimension, progressive edge growth
    is tried first and Gallager bands second; if neither reaches the target
    the PEG matrix is used and the shortfall is recorded.
    """
    meta = {}
    if code_cfg.alist:
        H = alist_io.read(code_cfg.alist)
        meta["source"] = f"alist:{code_cfg.alist}"
        return BinaryLinearCode.from_parity(H), meta
    n, wc, wr = code_cfg.n, code_cfg.col_weight, code_cfg.row_weight
    target = None if code_cfg.k_target is None else n - code_cfg.k_target
    methods = ["peg", "gallager"] if code_cfg.method == "auto" else [code_cfg.method]
    H = None
    for method in methods:
        if method == "gallager" and n % wr:
            continue
        try:
            H = construct_regular_ldpc(n, wc, wr, code_cfg.seed, target_rank=target,
                                       method=method, max_retries=code_cfg.max_retries)
            meta["source"] = method
            break
        except ConstructionError as exc:
            log.info("construction %s failed: %s", method, exc)
    if H is None:
        if target is None:
            raise ConstructionError("no regular matrix found")
        H = construct_regular_ldpc(n, wc, wr, code_cfg.seed, method=methods[0],
                                   max_retries=code_cfg.max_retries)
        meta["source"] = methods[0]
    code = BinaryLinearCode.from_parity(H)
    if code_cfg.k_target is not None and code.k != code_cfg.k_target:
        meta["k_deviation"] = {"target": code_cfg.k_target, "actual": code.k}
        log.warning("code dimension %d differs from target %d", code.k, code_cfg.k_target)
    return code, meta


# ---------------------------------------------------------------------------
# Context: everything trials share, built once
# ---------------------------------------------------------------------------

@dataclass
class Context:
    config: object
    code: object
    messages: object
    channel: object
    decoder: object
    p_success: float
    evaluators: dict
    meta: dict = field(default_factory=dict)


class _NestedMcNp:
    """Density ratio with success probabilities from nested Monte Carlo."""

    def __init__(self, code, messages, p, channel, decoder, n_inner, p_success, truncation):
        self.code, self.messages, self.p = code, messages, p
        self.channel, self.decoder = channel, decoder
        self.n_inner, self.p_success, self.truncation = n_inner, p_success, truncation

    def __call__(self, ll_valid, Y_p, rngs):
        from scipy.special import logsumexp
        out = np.empty(len(Y_p))
        valid = self.messages.valid
        for t, (llv, y, rng) in enumerate(zip(ll_valid, Y_p, rngs)):
            keep = np.flatnonzero(llv >= llv.max() - self.truncation)
            pd = np.array([pd_nested_mc(y, valid[j], self.decoder, self.code, self.channel,
                                        self.n_inner, rng).value for j in keep])
            with np.errstate(divide="ignore"):
                out[t] = logsumexp(llv[keep] + np.log(pd)) - np.log(self.p_success) - logsumexp(llv)
        return out


def _kde_training(cfg, code, messages, channel, decoder):
    """Training receptions, sent messages and outcomes from a dedicated stream.

    Density mode keeps only successful receptions.
    """
    n_train = cfg.kde.training_trials
    X = code.codebook
    Ys, sent, oks = [], [], []
    for s in range(0, n_train, 1024):
        rngs = [trial_rng(cfg.master_seed, KDE_STREAM, t) for t in range(s, min(s + 1024, n_train))]
        i = np.array([messages.valid[rng.integers(len(messages))] for rng in rngs])
        Y = modulate(X[i]) + channel.sigma * np.array([rng.standard_normal(code.n) for rng in rngs])
        Ys.append(Y)
        sent.append(i)
        oks.append(decoder(Y, rngs) == i)
    Y, sent, ok = np.concatenate(Ys), np.concatenate(sent), np.concatenate(oks)
    if cfg.kde.mode == "density":
        Y, sent, ok = Y[ok], sent[ok], ok[ok]
    cap = cfg.kde.max_points
    return Y[:cap], sent[:cap], ok[:cap]


def build_context(cfg):
    cfg.validate()
    code, meta = build_code(cfg.code)
    for p in cfg.prediction_lengths:
        if p > code.n:
            raise ConfigError(f"prediction length {p} exceeds n={code.n}")
    crc = CrcSpec.parse(cfg.crc) if cfg.crc else None
    messages = valid_message_set(code.k, crc)
    channel = BiAwgnChannel.from_snr(cfg.channel.snr_db, cfg.channel.convention, code.k / code.n)
    fam = cfg.decoder.family
    sp_params = SumProductParams(cfg.decoder.iterations, cfg.decoder.early_stop, cfg.decoder.clamp)
    if fam == "ml":
        decoder = MlDecoder(code, channel)
    elif fam == "bd":
        decoder = BoundedDistanceDecoder(code, cfg.decoder.t)
    else:
        decoder = SumProductDecoder(code, channel, sp_params)
    v = bit_flip_prob(channel)
    if fam == "bd":
        p_success = float(terror_prob(0, cfg.decoder.t, code.n, v))
        meta["p_success_route"] = "binomial_tail"
    else:
        est = pd_unconditional(0, decoder, code, channel, cfg.oracle.p_success_samples,
                               trial_rng(cfg.master_seed, SUCCESS_STREAM), cache=None)
        p_success = est.value
        meta["p_success_route"] = est.route
        meta["p_success_se"] = est.std_error
    meta.update(n=code.n, k=code.k, valid_messages=len(messages), sigma=channel.sigma,
                bit_flip_prob=v, p_success=p_success, parity_alist=alist_io.dumps(code.parity))
    kinds = cfg.predictor_list
    qmc = QmcParams(cfg.oracle.qmc_points, cfg.oracle.qmc_shifts, cfg.master_seed, cfg.oracle.max_dim)
    trunc = cfg.oracle.truncation_nats
    training = _kde_training(cfg, code, messages, channel, decoder) if "np_kde" in kinds else None
    evaluators = {}
    routes = {}
    for p in cfg.prediction_lengths:
        ev = {}
        r = code.n - p
        nested = lambda: _NestedMcNp(code, messages, p, channel, decoder,  # noqa: E731
                                     cfg.oracle.inner_samples, p_success, trunc)
        for kind in kinds:
            try:
                if kind == "np_exact":
                    if cfg.oracle.route == "nested_mc" or fam == "sp":
                        ev[kind] = nested()
                        routes[f"{p}:{kind}"] = "nested_mc"
                    elif fam == "ml":
                        try:
                            ev[kind] = MlNpStatistic(code, messages, p, channel, p_success, qmc,
                                                     seed=p, truncation=trunc)
                            routes[f"{p}:{kind}"] = "gaussian_cdf"
                        except DimensionTooLarge:
                            ev[kind] = nested()
                            routes[f"{p}:{kind}"] = "nested_mc"
                    else:
                        ev[kind] = BdNpStatistic(code, messages, p, cfg.decoder.t, v, p_success)
                        routes[f"{p}:{kind}"] = "binomial_tail"
                elif kind == "np_coset":
                    ev[kind] = CosetStatistic(prefix_parity(code, messages, p), cfg.decoder.t, r, v,
                                              p_success, cfg.oracle.weight_cap,
                                              cfg.oracle.coset_max_patterns)
                elif kind == "np_quant":
                    ev[kind] = QuantizedNpStatistic(prefix_parity(code, messages, p),
                                                    cfg.decoder.t, r, v, p_success)
                elif kind == "np_kde":
                    Y, sent, ok = training
                    if cfg.kde.mode == "regression":
                        model = kde_regression_fit(Y[:, :p], sent, ok, code, floor=cfg.kde.floor)
                    else:
                        model = kde_fit(Y[:, :p], sent, code, floor=cfg.kde.floor)
                    ev[kind] = KdeNpStatistic(model, code, messages, trunc)
                    meta.setdefault("kde_training_points", {})[str(p)] = int(len(sent))
                elif kind == "subcode":
                    if cfg.subcode.full_rows:
                        ev[kind] = ("full", code.parity)
                    else:
                        ev[kind] = ("prefix", subcode_parity(code.parity, p))
                elif kind == "decode_based":
                    if fam == "ml":
                        ev[kind] = PrefixMlDecoder(code, channel, p)
                    elif fam == "bd":
                        ev[kind] = PrefixSyndromeDecoder(code, messages, p, cfg.decoder.t)
                    else:
                        ev[kind] = PrefixSumProductDecoder(code, channel, p, sp_params)
                else:
                    ev[kind] = None
            except (CosetTooLarge, DimensionTooLarge, ValueError, MemoryError) as exc:
                # recorded as degraded for every trial
                ev[kind] = exc
                log.warning("statistic %s at p=%d unavailable: %s", kind, p, exc)
        evaluators[p] = ev
    meta["oracle_routes"] = routes
    return Context(cfg, code, messages, channel, decoder, p_success, evaluators, meta)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def _json_value(x):
    x = float(x)
    if x == -np.inf:
        return None
    return x


def _stats_for_p(ctx, p, Y, rngs):
    code, messages = ctx.code, ctx.messages
    ev = ctx.evaluators[p]
    Yp = Y[:, :p]
    out = {}
    degraded = {}
    need_ll = any(k in ev for k in ("np_exact", "np_kde", "mi_full", "mi_valid"))
    ll = prefix_log_likelihoods(Yp, code.codebook, ctx.channel) if need_ll else None
    llv = ll[:, messages.valid] if ll is not None else None
    llr = channel_llr(Yp, ctx.channel)
    mi = mi_batch(ll, messages.valid) if ("mi_full" in ev or "mi_valid" in ev) else None
    for kind, e in ev.items():
        if isinstance(e, Exception):
            degraded[kind] = f"{type(e).__name__}: {e}"
            continue
        try:
            if kind == "np_exact":
                if isinstance(e, MlNpStatistic):
                    vals = e(ll)
                elif isinstance(e, BdNpStatistic):
                    vals = e(llv, Yp)
                else:
                    vals = e(llv, Yp, rngs)
            elif kind == "np_coset":
                vals = e(llr)
            elif kind == "np_quant":
                vals = e((llr > 0).astype(np.uint8))
            elif kind == "np_kde":
                vals = e(llv, Yp)
            elif kind == "llr_mean":
                vals = llr_mean_batch(llr)
            elif kind == "subcode":
                mode, H = e
                if mode == "full":
                    padded = np.zeros((len(Y), code.n))
                    padded[:, :p] = llr
                    vals = subcode_batch(padded, H, ctx.config.subcode.iterations)
                else:
                    vals = subcode_batch(llr, H, ctx.config.subcode.iterations)
            elif kind == "mi_full":
                vals = mi[0]
            elif kind == "mi_valid":
                vals = mi[1]
            elif kind == "decode_based":
                vals = decode_based_batch(Yp, e, messages, rngs)
            out[kind] = vals
        except (CosetTooLarge, DimensionTooLarge, MemoryError) as exc:
            degraded[kind] = f"{type(exc).__name__}: {exc}"
    return out, degraded


def run_chunk(ctx, start, stop):
    """Records for trials ``start .. stop-1`` in order."""
    cfg, code, messages = ctx.config, ctx.code, ctx.messages
    ids = range(start, stop)
    rngs = [trial_rng(cfg.master_seed, TRIAL_STREAM, t) for t in ids]
    sent = np.array([messages.valid[rng.integers(len(messages))] for rng in rngs], dtype=np.int64)
    noise = np.array([rng.standard_normal(code.n) for rng in rngs])
    Y = modulate(code.codebook[sent]) + ctx.channel.sigma * noise
    decoded = np.asarray(ctx.decoder(Y, rngs), dtype=np.int64)
    per_p = {p: _stats_for_p(ctx, p, Y, rngs) for p in cfg.prediction_lengths}
    records = []
    for row, t in enumerate(ids):
        stats = {}
        notes = {}
        for p, (vals, degraded) in per_p.items():
            stats[str(p)] = {RECORD_FIELDS[k]: (int(v[row]) if k == "decode_based" else _json_value(v[row]))
                             for k, v in vals.items()}
            if degraded:
                notes[str(p)] = degraded
        rec = {
            "trial": t,
            "message": int(sent[row]),
            "decoded": int(decoded[row]),
            "outcome": "A" if decoded[row] == sent[row] else "N",
            "degraded": bool(notes),
            "stats": stats,
        }
        if notes:
            rec["degraded_reasons"] = notes
        if cfg.store_received:
            rec["received"] = [float(x) for x in Y[row]]
        records.append(rec)
    return records


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx
    threadpool_limits(1)


def _worker_chunk(bounds):
    with threadpool_limits(1):
        return run_chunk(_WORKER_CTX, *bounds)


def dumps_record(rec):
    return json.dumps(rec, separators=(",", ":"), allow_nan=False)


def iter_records(ctx, threads=None):
    """Yield records in trial order, computing chunks on ``threads`` processes."""
    cfg = ctx.config
    threads = threads or cfg.threads
    bounds = [(s, min(s + cfg.chunk_size, cfg.trial_count))
              for s in range(0, cfg.trial_count, cfg.chunk_size)]
    if threads == 1:
        with threadpool_limits(1):
            for b in bounds:
                yield from run_chunk(ctx, *b)
        return
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker, initargs=(ctx,)) as pool:
        for chunk in pool.map(_worker_chunk, bounds):
            yield from chunk


@dataclass
class CampaignResult:
    records: list
    metadata: dict
    output_dir: str = None


def run_campaign(config, write=True):
    """Run every trial of ``config``; optionally write ``records.ndjson`` and metadata."""
    ctx = build_context(config)
    out_dir = config.output_dir if write else None
    records = []
    fh = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        fh = open(os.path.join(out_dir, "records.ndjson"), "w")
    try:
        for rec in iter_records(ctx):
            records.append(rec)
            if fh:
                fh.write(dumps_record(rec) + "\n")
    finally:
        if fh:
            fh.close()
    meta = dict(ctx.meta, config=config.to_dict(),
                trials=len(records), successes=sum(r["outcome"] == "A" for r in records),
                degraded_trials=sum(r["degraded"] for r in records))
    if out_dir:
        with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)
    return CampaignResult(records, meta, out_dir)


# ---------------------------------------------------------------------------
# Curves and reports
# ---------------------------------------------------------------------------

FIELD_KINDS = {v: k for k, v in RECORD_FIELDS.items()}


def load_records(path):
    records = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    if not records:
        raise DegenerateInput(f"no records in {path}")
    return records


def statistic_values(records, kind, p):
    """Values (``-inf`` for null) and outcomes of trials that carry the statistic."""
    name = RECORD_FIELDS[kind]
    vals, ok = [], []
    for rec in records:
        stats = rec["stats"].get(str(p), {})
        if name not in stats:
            continue
        v = stats[name]
        vals.append(-np.inf if v is None else float(v))
        ok.append(rec["outcome"] == "A")
    return np.array(vals, dtype=float), np.array(ok, dtype=bool)


def record_kinds(records, p):
    names = set()
    for rec in records:
        names.update(rec["stats"].get(str(p), {}))
    return [k for k in RECORD_FIELDS if RECORD_FIELDS[k] in names]


def record_lengths(records):
    return sorted({int(p) for rec in records for p in rec["stats"]})


def roc_curve(records, kind, p):
    if kind not in RECORD_FIELDS:
        raise ValueError(f"unknown statistic kind {kind!r}")
    vals, ok = statistic_values(records, kind, p)
    if vals.size == 0:
        raise DegenerateInput(f"no values for {kind} at p={p}")
    return roc_from_scores(vals, ok, kind, p)


def all_curves(records):
    curves = {}
    for p in record_lengths(records):
        for kind in record_kinds(records, p):
            curves[(kind, p)] = roc_curve(records, kind, p)
    return curves


def reference_kind(kinds):
    for k in NP_KINDS:
        if k in kinds:
            return k
    return None


def write_curves_csv(curves, path):
    with open(path, "w") as fh:
        fh.write("kind,p,alpha,beta,se_alpha,se_beta\n")
        for (kind, p), c in sorted(curves.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            for a, b, sa, sb in zip(c.alpha, c.beta, c.se_alpha, c.se_beta):
                fh.write(f"{kind},{p},{a:.10g},{b:.10g},{sa:.6g},{sb:.6g}\n")


def read_curves_csv(path):
    import csv
    rows = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            key = (row["kind"], int(row["p"]))
            rows.setdefault(key, []).append((float(row["alpha"]), float(row["beta"])))
    return rows


def report_text(records, curves, alpha_grid=ALPHA_GRID):
    lines = []
    n_a = sum(r["outcome"] == "A" for r in records)
    lines.append(f"trials: {len(records)}  decodable: {n_a}  undecodable: {len(records) - n_a}")
    lines.append(f"degraded trials: {sum(r['degraded'] for r in records)}")
    for p in record_lengths(records):
        kinds = [k for (k, q) in curves if q == p]
        lines.append("")
        lines.append(f"== prediction length p = {p} ==")
        ref = reference_kind(kinds)
        scored = {k: curves[(k, p)] for k in kinds if k != "decode_based"}
        if ref is not None:
            lines.append(dominance_report(scored, ref, alpha_grid).to_text())
            for other in NP_KINDS:
                if other in scored and other != ref:
                    lines.append(f"(also reported: {other})")
        if "decode_based" in kinds:
            vals, ok = statistic_values(records, "decode_based", p)
            a, b, sa, sb = binary_test_point(vals, ok)
            line = f"decode-based point: alpha={a:.6g} (se {sa:.3g}) beta={b:.6g} (se {sb:.3g})"
            for k in NP_KINDS:
                if k in scored:
                    gap = b - float(scored[k].beta_at(a)[0])
                    line += f"; beta gap to {k}: {gap:.4g}"
            lines.append(line)
    return "\n".join(lines) + "\n"


def write_roc_outputs(records, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    curves = all_curves(records)
    write_curves_csv(curves, os.path.join(out_dir, "curves.csv"))
    text = report_text(records, curves)
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(text)
    return curves, text


__all__ = [
    "build_code", "build_context", "run_campaign", "run_chunk", "iter_records", "load_records",
    "roc_curve", "all_curves", "write_roc_outputs", "statistic_values", "binary_test_point",
    "dominance_report", "trial_rng", "CampaignResult", "Context",
]
