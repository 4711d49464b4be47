"""
Tests pour le module server_dataset.py
Chargement du jeu de données serveurs et table d'efficacité
"""

import pytest
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from server_dataset import (
    DEFAULT_DATASET, DatasetError, ServerDatasetRow, build_efficiency_table, load_server_dataset,
)

HEADER = "provider,vendor_model,ssj_ops_per_watt\n"


def write_dataset(tmp_path, body, header=HEADER):
    path = tmp_path / "table3.csv"
    path.write_text(header + body, encoding="utf-8")
    return str(path)


class TestLoadServerDataset:
    """Tests de lecture du CSV serveurs."""

    def test_bundled_dataset(self, server_rows):
        """Test que le jeu fourni contient 15 serveurs, du moins au plus efficace."""
        assert len(server_rows) == 15
        assert [row.provider_label for row in server_rows] == [f"P{i}" for i in range(1, 16)]
        assert server_rows[0].ssj_ops_per_watt == 498
        assert server_rows[-1].ssj_ops_per_watt == 12368
        assert "ProLiant DL385 G5" in server_rows[0].vendor_model

    def test_quoted_vendor_with_commas(self, tmp_path):
        """Test que les guillemets protègent les virgules du modèle."""
        path = write_dataset(tmp_path, '"P1","Acme, Model A",100\nP2,"Acme, Model B", 200\n')
        rows = load_server_dataset(path)
        assert rows == [ServerDatasetRow("P1", "Acme, Model A", 100.0), ServerDatasetRow("P2", "Acme, Model B", 200.0)]

    def test_blank_lines_skipped(self, tmp_path):
        """Test que les lignes vides sont ignorées."""
        path = write_dataset(tmp_path, "P1,A,100\n\nP2,B,200\n")
        assert len(load_server_dataset(path)) == 2

    def test_single_server_rejected(self, tmp_path):
        """Test qu'un seul serveur ne suffit pas."""
        path = write_dataset(tmp_path, "P1,A,100\n")
        with pytest.raises(DatasetError, match="at least 2"):
            load_server_dataset(path)

    def test_non_numeric_value_reports_line(self, tmp_path):
        """Test qu'une valeur non numérique indique la ligne fautive."""
        path = write_dataset(tmp_path, "P1,A,100\nP2,B,abc\n")
        with pytest.raises(DatasetError, match="not a number") as info:
            load_server_dataset(path)
        assert info.value.line == 3
        assert f"{path}:3" in str(info.value)

    def test_non_positive_value_rejected(self, tmp_path):
        """Test que ssj_ops/watt doit être > 0."""
        path = write_dataset(tmp_path, "P1,A,100\nP2,B,0\n")
        with pytest.raises(DatasetError, match="> 0"):
            load_server_dataset(path)

    def test_duplicate_label_rejected(self, tmp_path):
        """Test qu'un libellé en double est refusé."""
        path = write_dataset(tmp_path, "P1,A,100\nP1,B,200\n")
        with pytest.raises(DatasetError, match="duplicate"):
            load_server_dataset(path)

    def test_wrong_header_rejected(self, tmp_path):
        """Test qu'un en-tête incorrect est refusé."""
        path = write_dataset(tmp_path, "P1,A,100\nP2,B,200\n", header="id,model,watts\n")
        with pytest.raises(DatasetError, match="header") as info:
            load_server_dataset(path)
        assert info.value.line == 1

    def test_missing_file(self, tmp_path):
        """Test qu'un fichier absent lève DatasetError."""
        with pytest.raises(DatasetError, match="not found"):
            load_server_dataset(str(tmp_path / "absent.csv"))


class TestEfficiencyTable:
    """Tests de construction de la table d'efficacité."""

    def test_endpoints_and_midpoint(self, server_rows):
        """Test P1 -> 0, P15 -> 1, P8 ≈ 0.50168."""
        table = build_efficiency_table(server_rows, 1.2)
        assert table.interpolation("P1") == 0.0
        assert table.interpolation("P15") == 1.0
        assert table.interpolation("P8") == pytest.approx(0.50168, abs=1e-5)
        assert table.factor("P1") == pytest.approx(1.2, rel=1e-12)
        assert table.factor("P15") == 0.0

    def test_interpolation_is_monotone(self, server_rows):
        """Test que l'interpolation suit l'ordre des ssj_ops/watt."""
        table = build_efficiency_table(server_rows, 1.0)
        values = [table.interpolation(row.provider_label) for row in server_rows]
        assert values == sorted(values)

    def test_permutation_invariance(self, server_rows):
        """Test que l'ordre des lignes ne change pas les facteurs."""
        forward = build_efficiency_table(server_rows, 80)
        backward = build_efficiency_table(list(reversed(server_rows)), 80)
        for row in server_rows:
            assert forward[row.provider_label] == backward[row.provider_label]

    def test_zero_penalty_means_no_tax(self, server_rows):
        """Test pénalité 0 -> tous les facteurs à 0."""
        table = build_efficiency_table(server_rows, 0.0)
        assert all(table.factor(p) == 0.0 for p in table)

    def test_identical_servers_rejected(self):
        """Test flotte dégénérée (valeurs identiques) -> erreur."""
        rows = [ServerDatasetRow("P1", "A", 500), ServerDatasetRow("P2", "B", 500)]
        with pytest.raises(ValueError, match="degenerate"):
            build_efficiency_table(rows, 1.0)

    def test_default_dataset_path(self):
        """Test que le chemin par défaut pointe vers data/table3.csv."""
        assert DEFAULT_DATASET.endswith(os.path.join("data", "table3.csv"))
        assert os.path.exists(DEFAULT_DATASET)
