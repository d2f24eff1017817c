"""Figure rendering for the CLI report paths.

Every sweep command that writes a CSV also renders a companion PNG next to
it (same stem) unless asked not to. Rows arrive as the same list of dicts
that the CSV writer receives, so figures and data can never drift apart.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _grouped(rows, keys):
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return sorted(groups.items())


def _positive(pairs):
    return [(x, y) for x, y in pairs if y > 0.0]


def render_rate_sweep(rows, path) -> str:
    fig, (ax_rate, ax_fid) = plt.subplots(
        2, 1, figsize=(7.0, 7.5), sharex=True,
        gridspec_kw={"height_ratios": [2, 1]})
    for (n_users,), group in _grouped(rows, ("n_users",)):
        xs = [r["distance_km"] for r in group]
        protocol = _positive(zip(xs, (r["rate_protocol"] for r in group)))
        direct = _positive(zip(xs, (r["rate_direct"] for r in group)))
        if protocol:
            ax_rate.semilogy(*zip(*protocol), label=f"protocol, n={n_users}")
        if direct:
            ax_rate.semilogy(*zip(*direct), linestyle="--",
                             label=f"direct, n={n_users}")
        ax_fid.plot(xs, [r["fidelity"] for r in group],
                    label=f"n={n_users}")
    ax_rate.set_ylabel("success probability per attempt")
    ax_rate.legend(fontsize=8)
    ax_rate.grid(True, which="both", alpha=0.3)
    ax_fid.set_xlabel("distance to central node (km)")
    ax_fid.set_ylabel("fidelity")
    ax_fid.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_spdc_sweep(rows, path) -> str:
    fig, (ax_rate, ax_fid) = plt.subplots(
        2, 1, figsize=(7.0, 7.5), sharex=True,
        gridspec_kw={"height_ratios": [2, 1]})
    for (db, detector), group in _grouped(rows, ("squeezing_db", "detector")):
        xs = [r["distance_km"] for r in group]
        label = f"{db} dB, {detector} herald"
        points = _positive(zip(xs, (r["rate"] for r in group)))
        if points:
            ax_rate.semilogy(*zip(*points), label=label)
        ax_fid.plot(xs, [r["fidelity"] for r in group], label=label)
    ax_rate.set_ylabel("success probability per attempt")
    ax_rate.legend(fontsize=8)
    ax_rate.grid(True, which="both", alpha=0.3)
    ax_fid.set_xlabel("distance to central node (km)")
    ax_fid.set_ylabel("fidelity")
    ax_fid.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_purify(rows, path) -> str:
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for (n_users,), group in _grouped(rows, ("n_users",)):
        xs = [r["distance_km"] for r in group]
        ax.plot(xs, [r["input_fidelity"] for r in group],
                label=f"before, n={n_users}")
        ax.plot(xs, [r["output_fidelity"] for r in group], linestyle="--",
                label=f"after, n={n_users}")
        ax.plot(xs, [r["success_probability"] for r in group], linestyle=":",
                label=f"success prob., n={n_users}")
    ax.set_xlabel("distance to central node (km)")
    ax.set_ylabel("fidelity / success probability")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
