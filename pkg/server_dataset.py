"""
Server Dataset Module
Loads the server-efficiency extract (provider, vendor/model, ssj_ops/watt) and
builds the per-provider efficiency table used by the GreenCloud tax.
"""

import os
from dataclasses import dataclass
from typing import Dict, List, Sequence

import pandas as pd

from market_model import ServerProfile
from taxation import EfficiencyEntry, EfficiencyTable, efficiency_factor, interpolation_factor

# Configuration
DATASET_COLUMNS = ["provider", "vendor_model", "ssj_ops_per_watt"]
DEFAULT_DATASET = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "table3.csv")
MIN_SERVERS = 2


class DatasetError(ValueError):
    """Invalid server dataset; `line` is the 1-based file line when known."""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        where = path or "dataset"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ServerDatasetRow:
    provider_label: str
    vendor_model: str
    ssj_ops_per_watt: float

    def profile(self) -> ServerProfile:
        return ServerProfile(self.provider_label, self.vendor_model, self.ssj_ops_per_watt)


def load_server_dataset(path: str) -> List[ServerDatasetRow]:
    """
    Read a server dataset CSV.

    Header: provider,vendor_model,ssj_ops_per_watt (UTF-8, quotes optional).

    Returns:
        list: rows in file order

    Raises:
        DatasetError: missing file, parse error (with line number), duplicate label,
            fewer than 2 servers
    """
    if not os.path.exists(path):
        raise DatasetError("server dataset not found", path)

    try:
        df = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.ParserError as e:
        raise DatasetError(f"malformed CSV ({e})", path) from e
    except pd.errors.EmptyDataError as e:
        raise DatasetError("empty file", path) from e
    except UnicodeDecodeError as e:
        raise DatasetError("file is not valid UTF-8", path) from e

    df = df.fillna("")
    columns = [str(c).strip() for c in df.columns]
    if columns != DATASET_COLUMNS:
        raise DatasetError(f"header must be {','.join(DATASET_COLUMNS)} (got {','.join(columns)})", path, 1)
    df.columns = columns

    rows = []
    seen: Dict[str, int] = {}
    for index, record in enumerate(df.itertuples(index=False)):
        line = index + 2  # header is line 1
        label = record.provider.strip()
        vendor = record.vendor_model.strip()
        raw = record.ssj_ops_per_watt.strip()
        if not label and not vendor and not raw:
            continue
        if not label:
            raise DatasetError("empty provider label", path, line)
        try:
            ssj = float(raw)
        except ValueError:
            raise DatasetError(f"ssj_ops_per_watt is not a number: {raw!r}", path, line) from None
        if not ssj > 0:
            raise DatasetError(f"ssj_ops_per_watt must be > 0 (got {raw})", path, line)
        if label in seen:
            raise DatasetError(f"duplicate provider label {label} (first seen line {seen[label]})", path, line)
        seen[label] = line
        rows.append(ServerDatasetRow(label, vendor, ssj))

    if len(rows) < MIN_SERVERS:
        raise DatasetError(f"need at least {MIN_SERVERS} servers (got {len(rows)})", path)
    return rows


def build_efficiency_table(rows: Sequence[ServerDatasetRow], eco_penalty: float) -> EfficiencyTable:
    """Interpolation and efficiency factor of every server against the fleet min/max."""
    values = [row.ssj_ops_per_watt for row in rows]
    ssj_min, ssj_max = min(values), max(values)

    entries = {}
    for row in rows:
        interp = interpolation_factor(row.ssj_ops_per_watt, ssj_min, ssj_max)
        entries[row.provider_label] = EfficiencyEntry(
            ssj_ops_per_watt=row.ssj_ops_per_watt,
            interpolation_factor=interp,
            efficiency_factor=efficiency_factor(interp, eco_penalty),
        )
    return EfficiencyTable(entries, eco_penalty=eco_penalty)


if __name__ == "__main__":
    import sys

    # Fix Windows console encoding
    sys.stdout.reconfigure(encoding='utf-8')

    path = sys.argv[1] if len(sys.argv) > 1 else DEFAULT_DATASET
    penalty = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
    try:
        servers = load_server_dataset(path)
    except DatasetError as e:
        print(f"❌ {e}")
        sys.exit(2)

    table = build_efficiency_table(servers, penalty)
    print(f"📁 {len(servers)} serveurs chargés depuis {path}")
    for server in servers:
        entry = table[server.provider_label]
        print(f"   {server.provider_label:>4}  {entry.ssj_ops_per_watt:>8g}  "
              f"interp={entry.interpolation_factor:.5f}  facteur={entry.efficiency_factor:.5f}")
