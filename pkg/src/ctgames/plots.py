"""Figure rendering for the report path.

Matplotlib is imported lazily with the Agg backend so headless runs and
--no-plot invocations never touch a display. Figures are rendered from the
same result rows the CSV is written from.
"""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def plot_guess(rows: list[dict], path: str | Path) -> Path:
    """Payoff and good-probability against their bounds, per epsilon."""
    plt = _pyplot()
    eps = [_f(r["eps"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(eps, [_f(r["expected_payoff"]) for r in rows], "o-", label="payoff")
    ax1.plot(eps, [1 - 3 * e for e in eps], "k--", label="1 - 3eps")
    ax1.set_xlabel("eps")
    ax1.set_ylabel("expected payoff")
    ax1.legend()
    ax2.plot(eps, [_f(r["prob_good"]) for r in rows], "s-", label="P(good)")
    ax2.plot(eps, [1 - e for e in eps], "k--", label="1 - eps")
    ax2.set_xlabel("eps")
    ax2.set_ylabel("probability")
    ax2.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(rows: list[dict], path: str | Path) -> Path:
    """Per-family payoff curves with the 1 - 3eps reference."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    families: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        families.setdefault(r["family"], []).append(
            (_f(r["eps"]), _f(r["expected_payoff"])))
    for name, pts in families.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=name)
    all_eps = sorted({_f(r["eps"]) for r in rows})
    ax.plot(all_eps, [1 - 3 * e for e in all_eps], "k--", label="1 - 3eps")
    ax.set_xlabel("eps")
    ax.set_ylabel("expected payoff")
    ax.invert_xaxis()  # reads as convergence toward value 1
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_ctmp(rows: list[dict], path: str | Path) -> Path:
    """Guarantee margin plus the budget-vs-realized loss decomposition.

    Rows from fixed-strategy evaluations carry no loss breakdown; the loss
    panel is skipped then.
    """
    plt = _pyplot()
    with_losses = all("losses" in r for r in rows)
    fig, axes = plt.subplots(1, 2 if with_losses else 1, figsize=(9, 3.6))
    ax1 = axes[0] if with_losses else axes
    labels = [f'{r["eps_target"]}' for r in rows]
    x = range(len(rows))
    ax1.bar(x, [r["gamma"] for r in rows], width=0.55)
    ax1.plot(x, [r["bound"] for r in rows], "k_", markersize=22, label="1 - eps")
    ax1.set_xticks(list(x), labels)
    ax1.set_xlabel("eps_target")
    ax1.set_ylabel("guaranteed payoff")
    ax1.set_ylim(0, 1.02)
    ax1.legend()
    if with_losses:
        ax2 = axes[1]
        parts = ("beyond_horizon", "spoiled_cells", "guessing")
        bottoms = [0.0] * len(rows)
        for part in parts:
            vals = [r["losses"]["realized"].get(part, 0.0) for r in rows]
            ax2.bar(x, vals, width=0.55, bottom=bottoms, label=part)
            bottoms = [b + v for b, v in zip(bottoms, vals)]
        ax2.plot(x, [r["losses"]["budget"]["total"] for r in rows],
                 "k_", markersize=22, label="budget")
        ax2.set_xticks(list(x), labels)
        ax2.set_xlabel("eps_target")
        ax2.set_ylabel("realized loss")
        ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def _f(value) -> float:
    from .rational import to_frac
    if isinstance(value, str):
        return float(to_frac(value))
    return float(value)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    _pyplot().close(fig)
    return path
