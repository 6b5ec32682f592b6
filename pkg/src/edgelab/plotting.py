"""Chart rendering for experiment results.

Charts are views over results.csv rows and nothing else: every function here
takes the tidy rows (experiment, seed, case, metric, value) so that a saved
chart can always be reproduced from the CSV alone.  Output is static SVG with
hashing salted by a fixed string, so reruns write identical markup.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_SVG_METADATA = {"Date": None}


def _style() -> None:
    plt.rcParams.update(
        {
            "svg.hashsalt": "edgelab",
            "figure.figsize": (9.0, 4.0),
            "axes.grid": True,
            "grid.alpha": 0.3,
            "axes.spines.top": False,
            "axes.spines.right": False,
        }
    )


def _by_case_metric(rows: list[dict]) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = defaultdict(dict)
    for row in rows:
        if row["seed"] == "all":
            out[row["case"]][row["metric"]] = float(row["value"])
    return out


def _case_param(case: str, key: str) -> float | None:
    for part in case.split(","):
        name, _, value = part.partition("=")
        if name == key:
            try:
                return float(value)
            except ValueError:
                return None
    return None


def _save(fig, out_file: str) -> None:
    fig.savefig(out_file, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def _chart_kelly(rows, out_file):
    data = _by_case_metric(rows)
    entries = sorted(
        ((int(_case_param(c, "n")), m) for c, m in data.items() if _case_param(c, "n") is not None),
        key=lambda kv: kv[0],
    )
    ns = [n for n, _ in entries]
    fig, (ax1, ax2) = plt.subplots(1, 2)
    ax1.plot(ns, [m["closed_form_fraction"] for _, m in entries], "o-", label="closed form")
    ax1.plot(ns, [m["numeric_fraction"] for _, m in entries], "s--", label="numeric optimum")
    ax1.set_xlabel("simultaneous games")
    ax1.set_ylabel("total stake fraction")
    ax1.legend()
    ax2.plot(ns, [m["growth_at_numeric"] for _, m in entries], "s--", label="diversified (numeric)")
    ax2.plot(ns, [m["single_game_growth"] for _, m in entries], ":", label="single game")
    ax2.set_xlabel("simultaneous games")
    ax2.set_ylabel("expected log growth per round")
    ax2.legend()
    fig.suptitle("Stake sizing and growth versus number of games")
    _save(fig, out_file)


def _chart_lottery(rows, out_file):
    data = _by_case_metric(rows)
    numbered = sorted(
        ((int(_case_param(c, "number")), m) for c, m in data.items() if _case_param(c, "number") is not None),
        key=lambda kv: kv[0],
    )
    idx = [n for n, _ in numbered]
    evs = [m["expected_value"] for _, m in numbered]
    price = next((m["expected_value"] - m["expected_net"] for _, m in numbered), None)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(idx, evs, color="#4878a8", label="exact expected value")
    if price is not None:
        ax.axhline(price, color="#a84848", linestyle="--", label="ticket price")
    for n, m in numbered:
        if "mc_mean_net" in m and price is not None:
            ax.errorbar(
                [n],
                [m["mc_mean_net"] + price],
                yerr=[3.0 * m["mc_std_error"]],
                fmt="ko",
                capsize=4,
                label="Monte Carlo (3 se)",
            )
    ax.set_xlabel("number")
    ax.set_ylabel("value per draw")
    ax.set_xticks(idx)
    ax.legend()
    fig.suptitle("Expected ticket value by number")
    _save(fig, out_file)


def _chart_sde(rows, out_file):
    paths: dict[int, list[tuple[float, float]]] = defaultdict(list)
    for row in rows:
        if row["metric"] == "path_value":
            t = _case_param(row["case"], "t")
            paths[int(row["seed"])].append((t, float(row["value"])))
    data = _by_case_metric(rows)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, series in sorted(paths.items()):
        series.sort()
        ax.plot([t for t, _ in series], [v for _, v in series], lw=0.8, alpha=0.7)
    for case, metrics in data.items():
        t = _case_param(case, "t")
        if t is None:
            continue
        for name, value in metrics.items():
            if name.endswith("_mean_analytic"):
                ax.plot([t], [value], "k_", markersize=14, markeredgewidth=2)
    ax.set_xlabel("time (years)")
    ax.set_ylabel("simulated value")
    fig.suptitle("Sample paths (ticks: analytic mean at checkpoints)")
    _save(fig, out_file)


def _chart_arena(rows, out_file):
    data = _by_case_metric(rows)
    policies = sorted(
        (c for c, m in data.items() if "mean_log_growth" in m),
        key=lambda c: data[c].get("rank", 0.0),
    )
    growths: dict[str, list[float]] = defaultdict(list)
    for row in rows:
        if row["metric"] == "log_growth_rate" and row["seed"] != "all":
            growths[row["case"]].append(float(row["value"]))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    positions = range(len(policies))
    means = [data[c]["mean_log_growth"] for c in policies]
    errs = [3.0 * data[c]["growth_std_error"] for c in policies]
    ax.bar(positions, means, yerr=errs, capsize=5, color="#6a9a58", alpha=0.8)
    for x, c in zip(positions, policies):
        sample = growths.get(c, [])
        if sample:
            jitter = [x + 0.35 * ((i / max(1, len(sample) - 1)) - 0.5) for i in range(len(sample))]
            ax.plot(jitter, sample, ".", color="#333333", markersize=2, alpha=0.4)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(policies, rotation=15, ha="right", fontsize=8)
    ax.set_ylabel("log growth per unit time")
    fig.suptitle("Arena: growth by policy (bars: mean with 3 se; dots: seeds)")
    fig.tight_layout()
    _save(fig, out_file)


def _chart_hedge(rows, out_file):
    data = _by_case_metric(rows)
    sweep = sorted(
        (
            (int(_case_param(c, "steps")), m)
            for c, m in data.items()
            if _case_param(c, "steps") is not None and "control" not in c
        ),
        key=lambda kv: kv[0],
    )
    fig, (ax1, ax2) = plt.subplots(1, 2)
    steps = [s for s, _ in sweep]
    ax1.loglog(steps, [m["mean_abs_gap"] for _, m in sweep], "o-")
    ax1.set_xlabel("rehedge steps")
    ax1.set_ylabel("mean |P&L - accrual|")
    width = 0.35
    xs = range(len(sweep))
    ax2.bar(
        [x - width / 2 for x in xs],
        [m["mean_pnl"] for _, m in sweep],
        width,
        yerr=[3.0 * m["pnl_se"] for _, m in sweep],
        capsize=4,
        label="realized P&L",
    )
    ax2.bar(
        [x + width / 2 for x in xs],
        [m["mean_accrual"] for _, m in sweep],
        width,
        yerr=[3.0 * m["accrual_se"] for _, m in sweep],
        capsize=4,
        label="predicted accrual",
    )
    ax2.set_xticks(list(xs))
    ax2.set_xticklabels([str(s) for s in steps])
    ax2.set_xlabel("rehedge steps")
    ax2.set_ylabel("mean per path")
    ax2.legend(fontsize=8)
    fig.suptitle("Delta hedge: convergence to the volatility-gap accrual")
    _save(fig, out_file)


def _chart_impact(rows, out_file):
    per_round: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for row in rows:
        if row["metric"] == "round_cash" and row["seed"] != "all":
            per_round[row["case"]].append((int(row["seed"]), float(row["value"])))
    data = _by_case_metric(rows)
    fig, (ax1, ax2) = plt.subplots(1, 2)
    for case, series in sorted(per_round.items()):
        series.sort()
        ax1.plot([k for k, _ in series], [v for _, v in series], "o-", label=case, markersize=3)
    ax1.axhline(0.0, color="black", lw=0.8)
    ax1.set_xlabel("round")
    ax1.set_ylabel("cash per round")
    ax1.legend(fontsize=8)
    gaps = data.get("concave-decay-probe", {})
    labels, values = [], []
    for name in ("price_gap", "cash_gap"):
        if name in gaps:
            labels.append(name.replace("_", " "))
            values.append(gaps[name])
    if "linear-control" in data:
        labels.append("linear control\nmax |price gap|")
        values.append(data["linear-control"]["max_abs_price_gap"])
    ax2.bar(range(len(values)), values, color="#8a6aa8")
    ax2.set_xticks(range(len(labels)))
    ax2.set_xticklabels(labels, fontsize=8)
    ax2.axhline(0.0, color="black", lw=0.8)
    ax2.set_ylabel("gap")
    fig.suptitle("Order asymmetry: cycle cash and sequence-order gaps")
    fig.tight_layout()
    _save(fig, out_file)


_CHARTS = {
    "kelly": _chart_kelly,
    "lottery": _chart_lottery,
    "sde": _chart_sde,
    "arena": _chart_arena,
    "hedge": _chart_hedge,
    "impact": _chart_impact,
}


def render_chart(experiment: str, rows: list[dict], out_file: str) -> None:
    """Render the experiment's chart from result rows to a static SVG file."""
    _style()
    _CHARTS[experiment](rows, out_file)
