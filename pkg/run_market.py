"""
Market Runner Module
Command-line entry point: runs one GreenCloud market or a tax sweep and writes
the CSV/JSONL reports.

Usage:
    python run_market.py run --config scenarios/reference.yaml --tax vat --rate 0.10 --out out/
    python run_market.py sweep --config scenarios/reference.yaml --tax greencloud --rate 0.10 \\
        --penalties 0.9,1.09,1.1,1.2,2,8,16,80 --out out/
    python run_market.py sweep --config scenarios/reference.yaml --tax greencloud --rate 0.10 --with-vat-baseline --out out/
"""

import argparse
import os
import shutil
import sys
import tempfile
from dataclasses import replace
from typing import List, Optional

from dotenv import load_dotenv

from market_model import ScenarioValidationError
from reports import MANIFEST_FILE, ReportGenerator, RunManifest, config_digest
from scenario_loader import ConfigError, config_from_mapping, read_scenario
from server_dataset import DatasetError
from simulation import REFERENCE_PENALTIES, run_simulation, sweep_elasticities, sweep_eco_penalty, sweep_tax_rate
from taxation import TAX_KINDS, VAT, TaxConfigError, describe_policy

# Fix Windows console encoding
sys.stdout.reconfigure(encoding='utf-8')

load_dotenv()

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_SIMULATION_ERROR = 1
EXIT_USAGE_ERROR = 2


def parse_float_list(text: str) -> List[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_market",
        description="Simulateur de marché Bazaar IaaS avec taxe GreenCloud",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("run", "une simulation"), ("sweep", "un balayage de pénalités ou de taux")):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="fichier de scénario YAML")
        sub.add_argument("--servers", help="jeu de données serveurs (CSV provider,vendor_model,ssj_ops_per_watt)")
        sub.add_argument("--tax", choices=TAX_KINDS, help="modèle de taxe")
        sub.add_argument("--rate", type=float, help="taux (VAT, GreenCloud) ou taux par unité (resource)")
        sub.add_argument("--fee-amount", type=float, help="montant de la taxe forfaitaire")
        sub.add_argument("--dt", type=int, help="intervalle entre deux rounds")
        sub.add_argument("--traces", action="store_true", help="écrire traces.jsonl")
        sub.add_argument("--charts", action="store_true", help="générer les graphiques PNG")
        sub.add_argument("--out", default=os.getenv("GREENCLOUD_OUTPUT_DIR", "out"), help="dossier de sortie")
        if name == "run":
            sub.add_argument("--eco-penalty", type=float, help="pénalité écologique (GreenCloud)")
        else:
            group = sub.add_mutually_exclusive_group()
            group.add_argument("--penalties", type=parse_float_list,
                               help="pénalités séparées par des virgules (défaut: 0.9,...,80)")
            group.add_argument("--rates", type=parse_float_list, help="taux séparés par des virgules")
            sub.add_argument("--with-vat-baseline", action="store_true",
                             help="ajouter un run TVA au même taux dans summary.csv et allocation.csv")
    return parser


def _overrides(args) -> dict:
    return {
        "servers": args.servers,
        "tax": args.tax,
        "rate": args.rate,
        "fee_amount": args.fee_amount,
        "eco_penalty": getattr(args, "eco_penalty", None),
        "dt": args.dt,
        "traces": True if args.traces else None,
    }


def _execute(args, config, staging_dir) -> RunManifest:
    """Run the simulation(s) and write every output into staging_dir."""
    generator = ReportGenerator(staging_dir)
    penalties, rates = [], []
    baseline = False
    if args.command == "run":
        reports = [run_simulation(config)]
        outputs = generator.write_run_outputs(reports, traces=config.record_traces)
        if args.charts:
            outputs += generator.render_charts([(reports[0].tax_rate, reports[0])], "tax_rate")
    else:
        baseline = args.with_vat_baseline
        if args.rates:
            if baseline:
                raise ConfigError("--with-vat-baseline ne s'applique qu'au balayage de pénalités")
            rates = list(args.rates)
            points = sweep_tax_rate(config, rates)
            parameter = "tax_rate"
        else:
            if config.tax.kind != "greencloud":
                raise ConfigError(f"un balayage de pénalités exige --tax greencloud (reçu {config.tax.kind})")
            penalties = list(args.penalties or REFERENCE_PENALTIES)
            points = sweep_eco_penalty(config, penalties)
            parameter = "eco_penalty"
        reports = [report for _, report in points]
        if baseline:
            print(f"🔄 Run de référence TVA {config.tax.rate:g}")
            reports.insert(0, run_simulation(replace(config, tax=VAT(rate=config.tax.rate))))
        outputs = generator.write_run_outputs(reports, traces=config.record_traces)
        outputs += generator.emit_plot_data(points, parameter)
        outputs.append(generator.write_elasticities(sweep_elasticities(points)))
        if args.charts:
            outputs += generator.render_charts(points, parameter)

    return RunManifest(
        config_path=args.config,
        tax_policy=describe_policy(config.tax),
        penalties=penalties,
        output_dir=args.out,
        tool_version=__version__,
        command=args.command,
        rates=rates,
        outputs=sorted(os.path.basename(p) for p in outputs),
        vat_baseline=baseline,
    )


def _publish(staging_dir: str, out_dir: str):
    """Move staged files into out_dir; the manifest goes last."""
    names = sorted(os.listdir(staging_dir), key=lambda n: n == MANIFEST_FILE)
    for name in names:
        os.replace(os.path.join(staging_dir, name), os.path.join(out_dir, name))


def cli_run(args) -> int:
    """
    Execute a parsed `run` or `sweep` command.

    Returns:
        int: 0 success, 1 simulation error, 2 usage/config/dataset error
    """
    try:
        raw, data = read_scenario(args.config)
        config = config_from_mapping(data, _overrides(args), config_dir=os.path.dirname(os.path.abspath(args.config)))
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_USAGE_ERROR

    print(f"📁 Scénario {config.name} chargé depuis {args.config}")
    os.makedirs(args.out, exist_ok=True)
    staging_dir = tempfile.mkdtemp(prefix=".staging-", dir=args.out)
    try:
        manifest = _execute(args, config, staging_dir)
        manifest = replace(manifest, config_sha256=config_digest(raw))
        ReportGenerator(staging_dir).write_manifest(manifest)
        _publish(staging_dir, args.out)
    except (ConfigError, ScenarioValidationError, DatasetError, TaxConfigError) as e:
        print(f"❌ {e}")
        return EXIT_USAGE_ERROR
    except Exception as e:
        print(f"❌ Erreur de simulation: {e}")
        return EXIT_SIMULATION_ERROR
    finally:
        shutil.rmtree(staging_dir, ignore_errors=True)

    print(f"✅ Résultats écrits dans {args.out}/")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE_ERROR
    return cli_run(args)


if __name__ == "__main__":
    sys.exit(main())
