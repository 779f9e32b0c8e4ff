//! Matplotlib scripts written next to each result set.

use super::spec::{FigureId, Regime};

const RATE: &str = r#"import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
curves = defaultdict(lambda: ([], [], []))
with open(path) as f:
    for row in csv.DictReader(f):
        if not row["mean_objective"]:
            continue
        label = " ".join(x for x in (row["method"], row["series"]) if x)
        xs, ys, es = curves[label]
        xs.append(float(row["sweep_value"]))
        ys.append(float(row["mean_objective"]))
        es.append(float(row["std_objective"]))
for label, (xs, ys, es) in sorted(curves.items()):
    plt.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=label)
plt.xlabel("{xlabel}")
plt.ylabel("{ylabel}")
plt.grid(True, alpha=0.3)
plt.legend()
plt.savefig("{stem}.png", dpi=150, bbox_inches="tight")
"#;

const TRACE: &str = r#"import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
curves = defaultdict(lambda: ([], []))
with open(path) as f:
    for row in csv.DictReader(f):
        key = "K={} scenario {}".format(row["sweep_value"], row["scenario"])
        xs, ys = curves[key]
        xs.append(int(row["iteration"]))
        ys.append(float(row["objective"]))
for label, (xs, ys) in sorted(curves.items()):
    plt.plot(xs, ys, marker="o", label=label)
plt.xlabel("iteration")
plt.ylabel("{ylabel}")
plt.grid(True, alpha=0.3)
plt.legend(fontsize=7)
plt.savefig("{stem}.png", dpi=150, bbox_inches="tight")
"#;

const BOUNDS: &str = r#"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
cols = ["tv_numeric", "proposed_bound", "pinsker_bound", "hellinger_bound"]
data = {c: [] for c in ["chi"] + cols}
with open(path) as f:
    for row in csv.DictReader(f):
        for c in data:
            data[c].append(float(row[c]))
for c in cols:
    plt.plot(data["chi"], data[c], marker="o", label=c)
plt.xlabel("power ratio")
plt.ylabel("total variation")
plt.grid(True, alpha=0.3)
plt.legend()
plt.savefig("{stem}.png", dpi=150, bbox_inches="tight")
"#;

/// Script that plots the figure's main CSV into `<figure>.png`.
pub fn plot_script(figure: FigureId) -> String {
    let stem = figure.as_str();
    let ylabel = match figure.regime() {
        Regime::Fast => "ergodic sum rate (nats/symbol)",
        _ => "effective sum rate (nats/channel use)",
    };
    let template = match figure {
        FigureId::TvBounds => BOUNDS,
        f if f.is_convergence() => TRACE,
        _ => RATE,
    };
    template
        .replace("{csv}", &format!("{stem}.csv"))
        .replace("{stem}", stem)
        .replace("{xlabel}", figure.sweep_label())
        .replace("{ylabel}", ylabel)
}
