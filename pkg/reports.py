"""
Reports Module
CSV/JSONL emission of simulation results, plot data for the tax-revenue and
welfare curves, optional charts and the run manifest.
"""

import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

import pandas as pd

from simulation import SimulationReport

# Currency columns are rounded at emission only
CURRENCY_DECIMALS = 4

ALLOCATION_FILE = "allocation.csv"
SUMMARY_FILE = "summary.csv"
AGREEMENTS_FILE = "agreements.csv"
TRACES_FILE = "traces.jsonl"
LAFFER_FILE = "laffer.csv"
WELFARE_FILE = "welfare.csv"
ELASTICITY_FILE = "elasticity.csv"
MANIFEST_FILE = "manifest.json"


def _round(value):
    return None if value is None else round(value, CURRENCY_DECIMALS)


def ledger_revenue(report: SimulationReport) -> float:
    """Revenue as written: exact sum of the rounded agreement taxes."""
    return _round(math.fsum(_round(a.tax) for a in report.agreements))


def allocation_frame(reports: Sequence[SimulationReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        interpolation = dict(report.interpolation)
        capacities = dict(report.capacities)
        for provider, count in report.hosted:
            rows.append({
                "scenario_id": report.scenario_id,
                "provider": provider,
                "hosted_count": count,
                "capacity": capacities[provider],
                "interpolation_factor": round(interpolation[provider], 6),
            })
    return pd.DataFrame(rows, columns=["scenario_id", "provider", "hosted_count", "capacity", "interpolation_factor"])


def summary_frame(reports: Sequence[SimulationReport]) -> pd.DataFrame:
    rows = [{
        "scenario_id": r.scenario_id,
        "tax_policy": r.tax_policy,
        "eco_penalty": r.eco_penalty,
        "tax_revenue": ledger_revenue(r),
        "bazaar_score": _round(r.consumer_bazaar_score),
        "consumers_served": r.consumers_served,
        "tax_rate": r.tax_rate,
        "mean_interpolation_factor": round(r.mean_interpolation_factor, 6),
    } for r in reports]
    return pd.DataFrame(rows, columns=[
        "scenario_id", "tax_policy", "eco_penalty", "tax_revenue", "bazaar_score",
        "consumers_served", "tax_rate", "mean_interpolation_factor",
    ])


def agreements_frame(reports: Sequence[SimulationReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        for a in report.agreements:
            net, tax = _round(a.net_price), _round(a.tax)
            rows.append({
                "scenario_id": report.scenario_id,
                "consumer": a.consumer_id,
                "provider": a.provider_id,
                "t": a.timestamp,
                "storage": a.vm.storage,
                "ram": a.vm.ram,
                "processing_power": a.vm.processing_power,
                "net_price": net,
                "tax": tax,
                "gross_price": _round(net + tax),
            })
    return pd.DataFrame(rows, columns=[
        "scenario_id", "consumer", "provider", "t", "storage", "ram", "processing_power",
        "net_price", "tax", "gross_price",
    ])


def config_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    config_path: str
    tax_policy: str
    penalties: List[float] = field(default_factory=list)
    output_dir: str = ""
    tool_version: str = ""
    config_sha256: str = ""
    command: str = "run"
    rates: List[float] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    vat_baseline: bool = False


class ReportGenerator:
    """Writes every result file of a run or sweep into one output directory."""

    def __init__(self, out_dir):
        self.out_dir = out_dir

    def _write_csv(self, df, filename):
        path = os.path.join(self.out_dir, filename)
        df.to_csv(path, index=False, lineterminator="\n")
        print(f"💾 {filename} ({len(df)} ligne(s))")
        return path

    def write_run_outputs(self, reports, traces=False):
        """allocation.csv, summary.csv, agreements.csv and, on request, traces.jsonl."""
        paths = [
            self._write_csv(allocation_frame(reports), ALLOCATION_FILE),
            self._write_csv(summary_frame(reports), SUMMARY_FILE),
            self._write_csv(agreements_frame(reports), AGREEMENTS_FILE),
        ]
        if traces:
            paths.append(self.write_traces(reports))
        return paths

    def write_traces(self, reports):
        """One offer per line, in negotiation order."""
        path = os.path.join(self.out_dir, TRACES_FILE)
        count = 0
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for report in reports:
                for entry in report.traces:
                    line = {
                        key: (_round(value) if key in ("net_price", "gross_price", "tax", "provider_surplus") else value)
                        for key, value in entry.items()
                    }
                    if "consumer_utility" in line and line["consumer_utility"] == float("-inf"):
                        line["consumer_utility"] = None
                    f.write(json.dumps(line, ensure_ascii=False) + "\n")
                    count += 1
        print(f"💾 {TRACES_FILE} ({count} offre(s))")
        return path

    def emit_plot_data(self, points, parameter="eco_penalty"):
        """
        laffer.csv (parameter, tax_revenue) and welfare.csv (parameter, bazaar_score),
        sorted by the swept parameter.
        """
        if not points:
            raise ValueError("no report to plot")
        ordered = sorted(points, key=lambda p: p[0])
        laffer = pd.DataFrame(
            [{parameter: x, "tax_revenue": ledger_revenue(r)} for x, r in ordered],
            columns=[parameter, "tax_revenue"],
        )
        welfare = pd.DataFrame(
            [{parameter: x, "bazaar_score": _round(r.consumer_bazaar_score)} for x, r in ordered],
            columns=[parameter, "bazaar_score"],
        )
        return [self._write_csv(laffer, LAFFER_FILE), self._write_csv(welfare, WELFARE_FILE)]

    def write_elasticities(self, rows):
        df = pd.DataFrame(list(rows), columns=[
            "from", "to", "consumers_served", "delta_served", "mean_gross_price", "delta_price", "elasticity",
        ])
        for column in ("mean_gross_price", "delta_price", "elasticity"):
            df[column] = df[column].astype(float).round(CURRENCY_DECIMALS)
        return self._write_csv(df, ELASTICITY_FILE)

    def render_charts(self, points, parameter="eco_penalty"):
        """laffer.png, welfare.png and allocation.png (matplotlib, Agg backend)."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ordered = sorted(points, key=lambda p: p[0])
        xs = [x for x, _ in ordered]
        paths = []

        for filename, values, label in (
            ("laffer.png", [r.tax_revenue for _, r in ordered], "Recette fiscale"),
            ("welfare.png", [r.consumer_bazaar_score for _, r in ordered], "Consumer Bazaar-Score"),
        ):
            fig, ax = plt.subplots(figsize=(7, 4))
            ax.plot(xs, values, marker="o")
            if min(xs) > 0:
                ax.set_xscale("log")
            ax.set_xlabel(parameter)
            ax.set_ylabel(label)
            ax.grid(True, alpha=0.3)
            fig.tight_layout()
            path = os.path.join(self.out_dir, filename)
            fig.savefig(path, dpi=120)
            plt.close(fig)
            paths.append(path)

        providers = [p for p, _ in ordered[0][1].hosted]
        width = 0.8 / max(len(ordered), 1)
        fig, ax = plt.subplots(figsize=(10, 4))
        for i, (x, report) in enumerate(ordered):
            counts = report.hosted_counts()
            positions = [j + i * width for j in range(len(providers))]
            ax.bar(positions, [counts[p] for p in providers], width=width, label=f"{parameter}={x:g}")
        ax.set_xticks([j + 0.4 - width / 2 for j in range(len(providers))])
        ax.set_xticklabels(providers)
        ax.set_ylabel("Consommateurs hébergés")
        ax.legend(fontsize="small", ncol=2)
        fig.tight_layout()
        path = os.path.join(self.out_dir, "allocation.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

        print(f"📊 {len(paths)} graphique(s) générés")
        return paths

    def write_manifest(self, manifest):
        """Write manifest.json atomically (temp file + rename)."""
        path = os.path.join(self.out_dir, MANIFEST_FILE)
        fd, temp_path = tempfile.mkstemp(prefix=".manifest-", suffix=".json", dir=self.out_dir)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(asdict(manifest), f, indent=2, ensure_ascii=False)
                f.write("\n")
            os.replace(temp_path, path)
        except Exception:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        print(f"💾 {MANIFEST_FILE}")
        return path
