"""Figure rendering for CLI reports.  Uses the non-interactive Agg backend."""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.7),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "lines.linewidth": 1.2,
    "savefig.bbox": "tight",
}
# keep PNG bytes independent of the matplotlib version
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_path(path, out):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        lams = np.asarray(path.knots, dtype=float)
        if lams.size > 1:
            vals = path.evaluate(lams)
            for j in range(vals.shape[1]):
                ax.plot(lams, vals[:, j], marker=".", label=f"theta_{j + 1}")
            ax.legend(ncol=2)
        ax.set_xlabel("lambda")
        ax.set_ylabel("coefficient")
        ax.set_title("Lasso regularization path")
        return _save(fig, out)


def plot_cv_curve(curve, out, n_points: int = 400):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        lams = np.unique(np.concatenate([
            np.linspace(0.0, curve.lambda_top, n_points), curve.breakpoints]))
        ax.plot(lams, curve(lams), label="LOO CV risk")
        ax.axvline(curve.lambda_hat, color="k", ls="--", lw=0.8, label="lambda_hat")
        ax.set_xlabel("lambda")
        ax.set_ylabel("CV risk")
        ax.legend()
        return _save(fig, out)


def plot_risk_curve(curve, out):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        lo = curve.estimates - 2 * curve.std_errors
        hi = curve.estimates + 2 * curve.std_errors
        ax.plot(curve.lambdas, curve.estimates, label="risk")
        ax.fill_between(curve.lambdas, lo, hi, alpha=0.25, lw=0)
        ax.axvline(curve.lambda_star, color="k", ls="--", lw=0.8, label="lambda_star")
        ax.set_xlabel("lambda")
        ax.set_ylabel("predictive risk")
        ax.legend()
        return _save(fig, out)


def plot_sweep(aggregates, out):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if aggregates:
            n = np.array([a["n"] for a in aggregates])
            med = np.array([a["median_gap"] for a in aggregates])
            q25 = np.array([a["q25_gap"] for a in aggregates])
            q75 = np.array([a["q75_gap"] for a in aggregates])
            sup = np.array([a["median_supgap"] for a in aggregates])
            ax.plot(n, med, marker="o", label="median risk gap")
            ax.fill_between(n, q25, q75, alpha=0.25, lw=0)
            ax.plot(n, sup, marker="s", label="median sup |CV - risk|")
            ax.set_xscale("log")
            if np.all(sup > 0):
                ax.set_yscale("symlog", linthresh=1e-4)
            ax.legend()
        ax.set_xlabel("n")
        ax.set_ylabel("gap")
        return _save(fig, out)


def plot_check(xs, ys, out, xlabel, ylabel, logx=False):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(xs, ys, marker="o")
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        return _save(fig, out)
