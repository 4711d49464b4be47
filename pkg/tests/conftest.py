"""
Configuration et fixtures pour les tests pytest
"""

import pytest
import os
import sys
from dataclasses import replace

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from market_model import ConsumerParams, ProviderParams, ServerProfile
from server_dataset import DEFAULT_DATASET, load_server_dataset
from simulation import ConsumerRanges, ProviderRanges, ScenarioConfig
from taxation import GreenCloud


@pytest.fixture
def reference_consumer():
    """Consumer with the reference bounds and the highest willingness to pay."""
    return ConsumerParams(
        agent_id="C60",
        min_storage=102400, max_storage=1024000,
        min_ram=3072, max_ram=7168,
        min_processing_power=5000, max_processing_power=30000,
        min_price=10, max_price=100,
        w_storage=0.01, w_ram=0.01, w_processing_power=0.01, w_price=0.97,
        k=0.0, beta=2.0, t_max=7200,
    )


@pytest.fixture
def server_profile():
    return ServerProfile("P1", "Hewlett-Packard Company, ProLiant DL385 G5, AMD Opteron 2356", 498)


@pytest.fixture
def cheapest_provider(server_profile):
    """P1: lowest end of every resource price range."""
    return ProviderParams(
        agent_id="P1",
        min_rp_storage=0.000002, max_rp_storage=0.00001,
        min_rp_ram=0.002, max_rp_ram=0.03,
        min_rp_processing_power=0.0002, max_rp_processing_power=0.001,
        server=server_profile,
    )


@pytest.fixture
def midpoint_provider(server_profile):
    """Provider priced at the middle of every resource price range."""
    return ProviderParams(
        agent_id="P8",
        min_rp_storage=0.0000021, max_rp_storage=0.0000105,
        min_rp_ram=0.0021, max_rp_ram=0.0315,
        min_rp_processing_power=0.00021, max_rp_processing_power=0.00105,
        server=replace(server_profile, provider_label="P8", ssj_ops_per_watt=6453),
    )


@pytest.fixture
def server_rows():
    """The bundled 15-server dataset."""
    return load_server_dataset(DEFAULT_DATASET)


@pytest.fixture
def reference_config():
    """Reference market: 60 consumers, 15 providers, capacity 10."""
    return ScenarioConfig(tax=GreenCloud(rate=0.1, eco_penalty=1.2), name="reference")


@pytest.fixture
def small_config():
    """Six consumers, three providers: fast enough for engine unit tests."""
    return ScenarioConfig(
        consumers=ConsumerRanges(count=6, max_price_low=40, max_price_high=100),
        providers=ProviderRanges(count=3, capacity=2),
        tax=GreenCloud(rate=0.1, eco_penalty=1.2),
        name="small",
    )


@pytest.fixture
def small_scenario_file(tmp_path):
    """Small YAML scenario for CLI tests."""
    path = tmp_path / "small.yaml"
    path.write_text(
        "consumers:\n"
        "  count: 6\n"
        "  max_price_low: 40\n"
        "  max_price_high: 100\n"
        "providers:\n"
        "  count: 3\n"
        "  capacity: 2\n"
        f"  servers: {DEFAULT_DATASET}\n"
        "tax:\n"
        "  kind: greencloud\n"
        "  rate: 0.1\n"
        "  eco_penalty: 1.2\n"
        "simulation:\n"
        "  name: small\n"
        "  round_interval: 60\n",
        encoding="utf-8",
    )
    return str(path)
