"""Command-line front end: one subcommand per pipeline stage.

Each stage reads the previous stage's artifact and writes its own, so
stages are independently runnable and the whole chain is a pure function
of (input files, configuration, seed). Configuration precedence is
flag > config file > built-in default. Errors exit with code 2 (config),
3 (data) or 4 (numerical) and a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, artifacts
from .calendars import BusinessCalendar, IsoWeek
from .classify import classify_trades
from .errors import BondTcaError, ConfigError, DataError
from .features import DESIGN_FEATURES, build_feature_matrix, design_matrix
from .impact import (
    SignSeries,
    average_kernels,
    empirical_signature,
    estimate_pair_moments,
    estimate_tim1,
    fit_d_const,
    model_signature_tim1,
    model_signature_tim2,
    solve_tim2,
)
from .ingest import cap_volumes, group_by_cusip, ingest_reports, parse_trace_csv
from .microstructure import (
    aggregate_weekly,
    estimate_spreads,
    one_sided_spreads_by_day,
)
from .regress import (
    DEFAULT_EN_ALPHAS,
    DEFAULT_LASSO_GRID,
    DEFAULT_RIDGE_GRID,
    Dataset,
    GridPoint,
    fit_ols,
    k_fold_cv,
    relative_error,
    select_by_ci,
    _fit_for,
)
from .stats import welch_t
from .synthgen import (
    KernelSpec,
    SignProcess,
    SynthConfig,
    generate_trace_fixture,
    market_context_rows,
    reference_rows,
)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return obj


def _setting(args, file_cfg: dict, section: str, key: str, default):
    """flag > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    sect = file_cfg.get(section, {})
    if isinstance(sect, dict) and key in sect:
        return sect[key]
    if key in file_cfg:
        return file_cfg[key]
    return default


def _calendar(args, file_cfg) -> BusinessCalendar:
    path = _setting(args, file_cfg, "calendar", "calendar", None)
    return BusinessCalendar.from_file(path) if path else BusinessCalendar()


def _require(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"missing required input: {what}")
    if not Path(path).exists():
        raise ConfigError(f"{what} file not found: {path}")
    return path


_PATH_ARGS = frozenset(
    {"config", "calendar", "tape", "clean", "signed", "weekly", "reference",
     "context", "features"}
)


def _meta(args, extra: dict | None = None) -> dict:
    core = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    # hash only semantic settings: file locations must not affect artifact bytes
    hashable = {
        k: v
        for k, v in core.items()
        if not str(k).startswith("out_") and k not in _PATH_ARGS
    }
    meta = {"config_hash": artifacts.config_hash(hashable)}
    if "seed" in core:
        meta["seed"] = core["seed"]
    meta.update(extra or {})
    return meta


# -- subcommands --------------------------------------------------------------


def cmd_generate(args, file_cfg) -> None:
    kernel_buy = KernelSpec(
        family=_setting(args, file_cfg, "generate", "kernel_family", "exponential"),
        g0=float(_setting(args, file_cfg, "generate", "kernel_g0", 25.0)),
        beta=float(_setting(args, file_cfg, "generate", "kernel_beta", 0.4)),
        gamma=float(_setting(args, file_cfg, "generate", "kernel_gamma", 1.0)),
    )
    sell_g0 = _setting(args, file_cfg, "generate", "kernel_sell_g0", None)
    kernel_sell = None
    if sell_g0 is not None:
        kernel_sell = KernelSpec(
            family=kernel_buy.family,
            g0=float(sell_g0),
            beta=float(_setting(args, file_cfg, "generate", "kernel_sell_beta", kernel_buy.beta)),
            gamma=kernel_buy.gamma,
        )
    config = SynthConfig(
        seed=int(_setting(args, file_cfg, "generate", "seed", 0)),
        n_events=int(_setting(args, file_cfg, "generate", "events", 10_000)),
        n_bonds=int(_setting(args, file_cfg, "generate", "bonds", 1)),
        kernel_buy=kernel_buy,
        kernel_sell=kernel_sell,
        sign=SignProcess(
            kind=_setting(args, file_cfg, "generate", "sign_process", "iid"),
            p_buy=float(_setting(args, file_cfg, "generate", "p_buy", 0.5)),
            flip_prob=float(_setting(args, file_cfg, "generate", "flip_prob", 0.5)),
        ),
        noise_sd_bp=float(_setting(args, file_cfg, "generate", "noise_sd_bp", 5.0)),
        alpha=float(_setting(args, file_cfg, "generate", "alpha", 0.0)),
        half_spread_bp=float(_setting(args, file_cfg, "generate", "half_spread_bp", 30.0)),
        rpt_fraction=float(_setting(args, file_cfg, "generate", "rpt_fraction", 0.0)),
        cancel_rate=float(_setting(args, file_cfg, "generate", "cancel_rate", 0.0)),
        correction_rate=float(_setting(args, file_cfg, "generate", "correction_rate", 0.0)),
    )
    calendar = _calendar(args, file_cfg)
    tape, manifest = generate_trace_fixture(config, calendar)
    out_tape = args.out_tape or "tape.csv"
    Path(out_tape).write_bytes(tape)
    artifacts.write_json(args.out_manifest or "manifest.json", manifest.to_json_obj(), _meta(args))

    events_per_day = (config.day_end_second - config.day_start_second) // config.trade_spacing_seconds + 1
    n_days = -(-config.n_events // events_per_day) + 10  # ceil plus margin
    n_weeks = -(-n_days * 7 // 5) // 7 + 4
    weeks = sorted(
        {IsoWeek.of(config.start_date + dt.timedelta(days=7 * i)) for i in range(n_weeks)}
    )
    artifacts.write_bond_references(
        args.out_reference or "reference.csv", reference_rows(config), _meta(args)
    )
    artifacts.write_market_context(
        args.out_context or "context.csv", market_context_rows(config, weeks), _meta(args)
    )
    print(f"wrote {out_tape} ({config.n_bonds} bonds, {config.n_events} events each)")


def cmd_ingest(args, file_cfg) -> None:
    tape = _require(args.tape, "trade tape")
    calendar = _calendar(args, file_cfg)
    reports = parse_trace_csv(tape)
    clean, report = ingest_reports(reports, calendar)
    if args.cap_volumes:
        refs = artifacts.read_bond_references(_require(args.reference, "bond reference"))
        clean = cap_volumes(clean, {c: r.grade for c, r in refs.items()})
    artifacts.write_clean_trades(args.out_clean or "clean.csv", clean, _meta(args))
    artifacts.write_filter_report(args.out_filter_report or "filter_report.json", report, _meta(args))
    print(f"ingested {len(reports)} reports -> {len(clean)} clean trades")


def cmd_classify(args, file_cfg) -> None:
    trades = artifacts.read_clean_trades(_require(args.clean, "clean trades"))
    signed = classify_trades(trades)
    artifacts.write_signed_trades(args.out_signed or "signed.csv", signed, _meta(args))
    n_rpt = sum(1 for t in signed if t.is_rpt)
    print(f"classified {len(signed)} trades, {n_rpt} RPT legs")


def cmd_spread(args, file_cfg) -> None:
    signed = artifacts.read_signed_trades(_require(args.signed, "signed trades"))
    delta_t = float(_setting(args, file_cfg, "spread", "delta_t", 300.0))
    convention = _setting(args, file_cfg, "spread", "mid_convention", "paper")
    grouped = group_by_cusip(signed)
    obs = []
    used = 0
    for cusip in sorted(grouped):
        bond_obs = estimate_spreads(grouped[cusip], delta_t, convention)
        used += len({k for o in bond_obs for k in (o.k - 1, o.k)})
        obs.extend(bond_obs)
    weekly = aggregate_weekly(obs)
    artifacts.write_spread_observations(args.out_observations or "spreads.csv", obs, _meta(args))
    artifacts.write_weekly_spreads(args.out_weekly or "weekly.csv", weekly, _meta(args))
    fraction = used / len(signed) if signed else 0.0
    print(
        f"{len(obs)} spread observations -> {len(weekly)} bond-weeks "
        f"({fraction:.1%} of trades used)"
    )


def cmd_features(args, file_cfg) -> None:
    signed = artifacts.read_signed_trades(_require(args.signed, "signed trades"))
    weekly = artifacts.read_weekly_spreads(_require(args.weekly, "weekly spreads"))
    refs = artifacts.read_bond_references(_require(args.reference, "bond reference"))
    context = artifacts.read_market_context(_require(args.context, "market context"))
    rows = build_feature_matrix(weekly, signed, refs, context, _calendar(args, file_cfg))
    artifacts.write_feature_rows(args.out_features or "features.csv", rows, _meta(args))
    print(f"built {len(rows)} feature rows")


def _parse_week_range(text: str) -> tuple[IsoWeek, IsoWeek]:
    try:
        a, b = text.split(":")
    except ValueError:
        raise ConfigError(f"week range must look like 2015-W01:2015-W26, got {text!r}")
    lo, hi = IsoWeek.parse(a), IsoWeek.parse(b)
    if hi < lo:
        raise ConfigError(f"week range {text!r} is reversed")
    return lo, hi


def _grid_for(args, file_cfg, model: str) -> list[GridPoint]:
    text = _setting(args, file_cfg, "fit", "lambda_grid", None)
    if text:
        try:
            lo, hi, num = str(text).split(":")
            lams = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(num))
        except ValueError:
            raise ConfigError(f"lambda grid must look like lo:hi:num, got {text!r}")
    elif model == "ridge":
        lams = DEFAULT_RIDGE_GRID
    else:
        lams = DEFAULT_LASSO_GRID
    if model == "en":
        alphas_text = _setting(args, file_cfg, "fit", "alpha", None)
        alphas = (
            [float(a) for a in str(alphas_text).split(",")] if alphas_text else DEFAULT_EN_ALPHAS
        )
        return [GridPoint(float(l), float(a)) for a in alphas for l in lams]
    return [GridPoint(float(l)) for l in lams]


def cmd_fit(args, file_cfg) -> None:
    rows = artifacts.read_feature_rows(_require(args.features, "feature rows"))
    model = _setting(args, file_cfg, "fit", "model", "lslasso")
    seed = int(_setting(args, file_cfg, "fit", "seed", 0))
    k = int(_setting(args, file_cfg, "fit", "k_folds", 10))
    names_text = _setting(args, file_cfg, "fit", "features_list", None)
    names = tuple(str(names_text).split(",")) if names_text else DESIGN_FEATURES

    train_rows, test_rows = rows, []
    if args.train_range or args.test_range:
        if not (args.train_range and args.test_range):
            raise ConfigError("provide both --train-range and --test-range or neither")
        tr_lo, tr_hi = _parse_week_range(args.train_range)
        te_lo, te_hi = _parse_week_range(args.test_range)
        if not tr_hi < te_lo:
            raise ConfigError("training weeks must precede test weeks")
        train_rows = [r for r in rows if tr_lo <= r.week <= tr_hi]
        test_rows = [r for r in rows if te_lo <= r.week <= te_hi]
    if not train_rows:
        raise DataError("no training rows in range")

    y, x, names = design_matrix(train_rows, names)
    data = Dataset.from_covariates(y, x, names)

    result = {"model": model}
    if model == "ols":
        fit = fit_ols(data)
        cv_obj = None
    else:
        grid = _grid_for(args, file_cfg, model)
        report = k_fold_cv(data, model, grid, k=k, seed=seed)
        chosen = select_by_ci(report)
        point = GridPoint(chosen.lam, chosen.alpha)
        fit = _fit_for(model, data, point)
        cv_obj = report.to_json_obj()
        result["chosen"] = {"lambda": chosen.lam, "alpha": chosen.alpha}
    result["fit"] = fit.to_json_obj()

    if test_rows:
        ty, tx, _ = design_matrix(test_rows, names)
        test_data = Dataset.from_covariates(ty, tx, names)
        pred = fit.predict_matrix(test_data.x)
        sse = float(np.sum((ty - pred) ** 2))
        sst = float(np.sum((ty - y.mean()) ** 2))
        result["out_of_sample"] = {
            "n": len(test_rows),
            "r2": 1.0 - sse / sst if sst > 0 else 0.0,
            "relative_error": relative_error(ty, pred) if np.all(ty != 0) else None,
        }

    artifacts.write_json(args.out_fit or "fit.json", result, _meta(args))
    if cv_obj is not None:
        artifacts.write_json(args.out_cv or "cv.json", cv_obj, _meta(args))
    print(f"fit {model} on {len(train_rows)} rows; R^2={fit.r_squared:.4f}")


def _spread_mids_for_bond(trades, mid_by_k):
    """Forward-fill sparse mid estimates onto the bond's signed events.

    Returns None when the bond has no mid observations at all (the caller
    falls back to trade prices).
    """
    if not mid_by_k:
        return None
    events = [t for t in trades if t.epsilon != 0]
    ordered = sorted(mid_by_k)
    mids = []
    last = mid_by_k[ordered[0]]  # events before the first estimate backfill it
    pos = 0
    for t in events:
        while pos < len(ordered) and ordered[pos] <= t.k:
            last = mid_by_k[ordered[pos]]
            pos += 1
        mids.append(last)
    return mids


def _impact_for_bond(trades, alpha, n_lags, l_lags, l_max, model, mid_by_k=None):
    mids = _spread_mids_for_bond(trades, mid_by_k) if mid_by_k is not None else None
    series = SignSeries.from_signed_trades(trades, alpha=alpha, mids=mids)
    if mids is not None:
        series.mid_source = "spread_mids"
    out = {"series": series}
    if model in ("tim1", "both"):
        out["tim1"] = estimate_tim1(series, n_lags, l_lags)
    if model in ("tim2", "both"):
        out["tim2"] = solve_tim2(series, n_lags, l_lags)
    return out


def cmd_impact(args, file_cfg) -> None:
    signed = artifacts.read_signed_trades(_require(args.signed, "signed trades"))
    alpha = float(_setting(args, file_cfg, "impact", "alpha", 0.0))
    n_lags = int(_setting(args, file_cfg, "impact", "n_lags", 10))
    l_lags = int(_setting(args, file_cfg, "impact", "l_lags", 10))
    l_max = int(_setting(args, file_cfg, "impact", "l_max", 10))
    top_k = _setting(args, file_cfg, "impact", "top_k", None)
    min_events = int(_setting(args, file_cfg, "impact", "min_events", 1000))
    model = _setting(args, file_cfg, "impact", "model", "tim1")
    threads = int(_setting(args, file_cfg, "impact", "threads", 1))

    grouped = group_by_cusip(signed)
    ranked = sorted(grouped, key=lambda c: (-len(grouped[c]), c))
    if top_k is not None:
        ranked = ranked[: int(top_k)]
    usable = [c for c in ranked if sum(1 for t in grouped[c] if t.epsilon != 0) >= min_events]
    if not usable:
        raise DataError(
            f"no bond has {min_events} signed events; lower --min-events or generate more data"
        )

    spread_mids: dict[str, dict[int, float]] | None = None
    if args.spreads:
        spread_mids = {}
        # an observation's mid describes the state at the EARLIER trade of
        # its pair; o.k indexes the later one
        for o in artifacts.read_spread_observations(_require(args.spreads, "spread observations")):
            spread_mids.setdefault(o.cusip, {})[o.k - 1] = o.mid

    def work(cusip):
        mid_by_k = spread_mids.get(cusip, {}) if spread_mids is not None else None
        return cusip, _impact_for_bond(
            grouped[cusip], alpha, n_lags, l_lags, l_max, model, mid_by_k
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(work, usable))
    else:
        results = dict(work(c) for c in usable)

    out_obj: dict = {"bonds": {}, "mid_source": results[usable[0]]["series"].mid_source}
    tim1_kernels = []
    tim2_kernels: dict[int, list] = {1: [], -1: []}
    for cusip in usable:  # deterministic merge order
        res = results[cusip]
        entry = {"mid_source": res["series"].mid_source}
        if "tim1" in res:
            entry["tim1"] = artifacts.kernel_json_obj({None: res["tim1"]}, "tim1", alpha)
            tim1_kernels.append(res["tim1"])
        if "tim2" in res:
            entry["tim2"] = artifacts.kernel_json_obj(res["tim2"], "tim2", alpha)
            for pi in (1, -1):
                tim2_kernels[pi].append(res["tim2"][pi])
        out_obj["bonds"][cusip] = entry
    if tim1_kernels:
        out_obj["aggregate_tim1"] = artifacts.kernel_json_obj(
            {None: average_kernels(tim1_kernels)}, "tim1", alpha
        )
    if tim2_kernels[1]:
        out_obj["aggregate_tim2"] = artifacts.kernel_json_obj(
            {pi: average_kernels(tim2_kernels[pi]) for pi in (1, -1)}, "tim2", alpha
        )
    artifacts.write_json(args.out_kernel or "kernels.json", out_obj, _meta(args))

    # Aggregate signature plot: equal-weight average of per-bond curves.
    d_emps, d_models = [], []
    for cusip in usable:
        res = results[cusip]
        series = res["series"]
        emp = empirical_signature(series.mid, l_max)
        moments = estimate_pair_moments(series, l_max + n_lags)
        if "tim1" in res:
            partial = model_signature_tim1(
                res["tim1"], moments.merged_series(), l_max, mean_flow=moments.mean_flow
            )
        else:
            partial = model_signature_tim2(res["tim2"], moments, l_max)
        d_emps.append(emp.d)
        d_models.append(partial + fit_d_const(partial, emp.d))
    lags = np.arange(1, l_max + 1)
    artifacts.write_signature(
        args.out_signature or "signature.csv",
        lags,
        np.mean(d_emps, axis=0),
        np.mean(d_models, axis=0),
        _meta(args),
    )
    print(f"impact kernels for {len(usable)} bonds ({model})")


def cmd_report(args, file_cfg) -> None:
    signed = artifacts.read_signed_trades(_require(args.signed, "signed trades"))
    sided = one_sided_spreads_by_day(signed)
    buys = [s.spread_buy for s in sided if s.spread_buy is not None]
    sells = [s.spread_sell for s in sided if s.spread_sell is not None]
    obj: dict = {
        "n_trades": len(signed),
        "n_rpt_legs": sum(1 for t in signed if t.is_rpt),
        "n_bond_days_with_reference": len(sided),
        "asymmetry": None,
    }
    if len(buys) >= 2 and len(sells) >= 2:
        test = welch_t(buys, sells)
        obj["asymmetry"] = {
            "mean_spread_buy_bp": float(np.mean(buys) * 1e4),
            "mean_spread_sell_bp": float(np.mean(sells) * 1e4),
            "welch_t": test.statistic,
            "p_value": test.p_value,
            "df": test.df[0] if test.df else None,
        }
    if args.out_one_sided:
        artifacts.write_one_sided(args.out_one_sided, sided, _meta(args))
    artifacts.write_json(args.out_report or "report.json", obj, _meta(args))
    print(f"report over {len(signed)} trades; {len(sided)} bond-days with reference")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bondtca",
        description="Transaction-cost analysis pipeline for corporate bond trade tapes.",
    )
    parser.add_argument("--version", action="version", version=f"bondtca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override file values")
        p.add_argument("--calendar", help="business-day calendar file (holiday list)")
        p.set_defaults(func=func)
        return p

    g = add("generate", cmd_generate, "write a synthetic trade tape with known ground truth")
    g.add_argument("--seed", type=int)
    g.add_argument("--events", type=int, help="events per bond")
    g.add_argument("--bonds", type=int)
    g.add_argument("--kernel-family", dest="kernel_family", choices=("exponential", "power_law", "constant"))
    g.add_argument("--kernel-g0", dest="kernel_g0", type=float)
    g.add_argument("--kernel-beta", dest="kernel_beta", type=float)
    g.add_argument("--kernel-gamma", dest="kernel_gamma", type=float)
    g.add_argument("--kernel-sell-g0", dest="kernel_sell_g0", type=float)
    g.add_argument("--kernel-sell-beta", dest="kernel_sell_beta", type=float)
    g.add_argument("--sign-process", dest="sign_process", choices=("iid", "markov"))
    g.add_argument("--p-buy", dest="p_buy", type=float)
    g.add_argument("--flip-prob", dest="flip_prob", type=float)
    g.add_argument("--noise-sd-bp", dest="noise_sd_bp", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--half-spread-bp", dest="half_spread_bp", type=float)
    g.add_argument("--rpt-fraction", dest="rpt_fraction", type=float)
    g.add_argument("--cancel-rate", dest="cancel_rate", type=float)
    g.add_argument("--correction-rate", dest="correction_rate", type=float)
    g.add_argument("--out-tape", dest="out_tape")
    g.add_argument("--out-manifest", dest="out_manifest")
    g.add_argument("--out-reference", dest="out_reference")
    g.add_argument("--out-context", dest="out_context")

    i = add("ingest", cmd_ingest, "parse, reconcile and filter a trade tape")
    i.add_argument("--tape", required=True)
    i.add_argument("--cap-volumes", dest="cap_volumes", action="store_true")
    i.add_argument("--reference", help="bond reference CSV (grades for volume caps)")
    i.add_argument("--out-clean", dest="out_clean")
    i.add_argument("--out-filter-report", dest="out_filter_report")

    c = add("classify", cmd_classify, "assign trade signs and flag RPTs")
    c.add_argument("--clean", required=True)
    c.add_argument("--out-signed", dest="out_signed")

    s = add("spread", cmd_spread, "estimate spreads and weekly responses")
    s.add_argument("--signed", required=True)
    s.add_argument("--delta-t", dest="delta_t", type=float)
    s.add_argument("--mid-convention", dest="mid_convention", choices=("paper", "corrected"))
    s.add_argument("--out-observations", dest="out_observations")
    s.add_argument("--out-weekly", dest="out_weekly")

    f = add("features", cmd_features, "build the weekly regression design")
    f.add_argument("--signed", required=True)
    f.add_argument("--weekly", required=True)
    f.add_argument("--reference", required=True)
    f.add_argument("--context", required=True)
    f.add_argument("--out-features", dest="out_features")

    t = add("fit", cmd_fit, "fit a cost benchmark with cross-validated penalties")
    t.add_argument("--features", required=True)
    t.add_argument("--model", choices=("ols", "ridge", "lasso", "lslasso", "en"))
    t.add_argument("--lambda-grid", dest="lambda_grid", help="lo:hi:num, log-spaced")
    t.add_argument("--alpha", help="elastic-net mixing values, comma separated")
    t.add_argument("--k-folds", dest="k_folds", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--train-range", dest="train_range", help="ISO weeks lo:hi")
    t.add_argument("--test-range", dest="test_range", help="ISO weeks lo:hi")
    t.add_argument("--features-list", dest="features_list", help="comma-separated design columns")
    t.add_argument("--out-fit", dest="out_fit")
    t.add_argument("--out-cv", dest="out_cv")

    m = add("impact", cmd_impact, "estimate transient impact kernels and signatures")
    m.add_argument("--signed", required=True)
    m.add_argument("--spreads", help="spread observations CSV; mids forward-fill onto events")
    m.add_argument("--model", choices=("tim1", "tim2", "both"))
    m.add_argument("--alpha", type=float)
    m.add_argument("--n-lags", dest="n_lags", type=int)
    m.add_argument("--l-lags", dest="l_lags", type=int)
    m.add_argument("--l-max", dest="l_max", type=int)
    m.add_argument("--top-k", dest="top_k", type=int)
    m.add_argument("--min-events", dest="min_events", type=int)
    m.add_argument("--threads", type=int)
    m.add_argument("--out-kernel", dest="out_kernel")
    m.add_argument("--out-signature", dest="out_signature")

    r = add("report", cmd_report, "summary report with buy/sell asymmetry tests")
    r.add_argument("--signed", required=True)
    r.add_argument("--out-report", dest="out_report")
    r.add_argument("--out-one-sided", dest="out_one_sided")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config_file(getattr(args, "config", None))
        args.func(args, file_cfg)
    except BondTcaError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
