"""
Tests pour le module taxation.py
Modèles de taxe, facteurs d'efficacité, recette fiscale et élasticité
"""

import pytest
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from market_model import Agreement, VmOffer
from taxation import (
    VAT, EfficiencyEntry, EfficiencyTable, Fee, GreenCloud, ResourceTax, Schedule, TaxConfigError,
    bracket_rate, compute_tax, describe_policy, efficiency_factor, interpolation_factor,
    price_elasticity, tax_estimator, tax_revenue, validate_policy, with_rate,
)


@pytest.fixture
def vm():
    return VmOffer(storage=102400, ram=4096, processing_power=10000, price=41.472, sender="P1", timestamp=1)


class TestComputeTax:
    """Tests du calcul de la taxe par modèle."""

    def test_vat(self, vm):
        """Test TVA 20% sur 41.472 -> 8.2944."""
        assert compute_tax(VAT(rate=0.2), 41.472, vm) == pytest.approx(8.2944, rel=1e-12)

    def test_fee_ignores_price(self, vm):
        """Test que la taxe forfaitaire ne dépend pas du prix."""
        policy = Fee(amount=2.5)
        assert compute_tax(policy, 1.0, vm) == 2.5
        assert compute_tax(policy, 500.0, vm) == 2.5

    def test_resource_tax(self, vm):
        """Test taxe par MB de RAM."""
        policy = ResourceTax(base="ram", rate_per_unit=0.001)
        assert compute_tax(policy, 41.472, vm) == pytest.approx(4.096, rel=1e-12)

    def test_greencloud_most_efficient_server_is_untaxed(self, vm):
        """Test facteur d'efficacité 0 -> taxe 0 quel que soit le prix."""
        policy = GreenCloud(rate=0.1, eco_penalty=80)
        assert compute_tax(policy, 60.0, vm, host_efficiency_factor=0.0) == 0.0
        assert compute_tax(policy, 1e6, vm, host_efficiency_factor=0.0) == 0.0

    def test_greencloud_least_efficient_server(self, vm):
        """Test interp 0, pénalité 1.1, net 60, taux 10% -> 6.6."""
        policy = GreenCloud(rate=0.1, eco_penalty=1.1)
        factor = efficiency_factor(0.0, 1.1)
        assert compute_tax(policy, 60.0, vm, host_efficiency_factor=factor) == pytest.approx(6.6, rel=1e-12)

    def test_greencloud_with_unit_factor_equals_vat(self, vm):
        """Test GreenCloud avec facteur 1 = TVA au même taux."""
        green = compute_tax(GreenCloud(rate=0.1, eco_penalty=1.0), 41.472, vm, host_efficiency_factor=1.0)
        assert green == pytest.approx(compute_tax(VAT(rate=0.1), 41.472, vm), rel=1e-12)

    def test_negative_net_price_rejected(self, vm):
        """Test qu'un prix net négatif est refusé."""
        with pytest.raises(ValueError):
            compute_tax(VAT(rate=0.1), -1.0, vm)

    def test_estimator_binds_host_factor(self, vm):
        """Test que l'estimateur fixe la politique et le facteur du serveur."""
        estimate = tax_estimator(GreenCloud(rate=0.1, eco_penalty=2), host_efficiency_factor=1.5)
        assert estimate(10.0, vm) == pytest.approx(1.5, rel=1e-12)


class TestBrackets:
    """Tests des barèmes progressifs et dégressifs."""

    def test_bracket_rate_lookup(self):
        """Test que le taux du palier atteint s'applique à toute la base."""
        brackets = ((50, 0.2), (100, 0.4))
        assert bracket_rate(10, 0.1, brackets) == 0.1
        assert bracket_rate(50, 0.1, brackets) == 0.2
        assert bracket_rate(99.9, 0.1, brackets) == 0.2
        assert bracket_rate(150, 0.1, brackets) == 0.4

    def test_progressive_vat(self, vm):
        """Test TVA progressive sur un prix au-dessus du palier."""
        policy = validate_policy(VAT(rate=0.1, schedule=Schedule.PROGRESSIVE, brackets=((50, 0.2),)))
        assert compute_tax(policy, 40.0, vm) == pytest.approx(4.0, rel=1e-12)
        assert compute_tax(policy, 60.0, vm) == pytest.approx(12.0, rel=1e-12)

    def test_regressive_resource_tax(self, vm):
        """Test taxe dégressive sur la RAM."""
        policy = validate_policy(ResourceTax(base="ram", rate_per_unit=0.002,
                                             schedule=Schedule.REGRESSIVE, brackets=((4096, 0.001),)))
        assert compute_tax(policy, 0.0, vm) == pytest.approx(4.096, rel=1e-12)

    def test_progressive_rates_must_increase(self):
        """Test qu'un barème progressif non croissant est refusé."""
        with pytest.raises(TaxConfigError, match="progressive"):
            validate_policy(VAT(rate=0.2, schedule=Schedule.PROGRESSIVE, brackets=((50, 0.1),)))

    def test_regressive_rates_must_decrease(self):
        """Test qu'un barème dégressif non décroissant est refusé."""
        with pytest.raises(TaxConfigError, match="regressive"):
            validate_policy(VAT(rate=0.1, schedule=Schedule.REGRESSIVE, brackets=((50, 0.2),)))

    def test_thresholds_must_increase(self):
        """Test que les seuils sont strictement croissants."""
        with pytest.raises(TaxConfigError, match="thresholds"):
            validate_policy(VAT(rate=0.1, schedule=Schedule.PROGRESSIVE, brackets=((50, 0.2), (50, 0.3))))

    def test_proportional_takes_no_brackets(self):
        """Test qu'un barème proportionnel n'a pas de paliers."""
        with pytest.raises(TaxConfigError):
            validate_policy(VAT(rate=0.1, brackets=((50, 0.2),)))


class TestValidatePolicy:
    """Tests de validation des politiques fiscales."""

    @pytest.mark.parametrize("policy", [
        VAT(rate=-0.1),
        Fee(amount=-1),
        ResourceTax(base="disk", rate_per_unit=0.1),
        ResourceTax(base="ram", rate_per_unit=-0.1),
        GreenCloud(rate=0.1, eco_penalty=-1),
    ])
    def test_invalid_policies(self, policy):
        """Test que chaque politique invalide lève TaxConfigError."""
        with pytest.raises(TaxConfigError):
            validate_policy(policy)

    def test_unknown_policy(self):
        """Test qu'un objet inconnu est refusé."""
        with pytest.raises(TaxConfigError, match="unknown"):
            validate_policy("vat")

    def test_with_rate_scales_brackets(self):
        """Test que with_rate remet les paliers à l'échelle."""
        policy = VAT(rate=0.1, schedule=Schedule.PROGRESSIVE, brackets=((50, 0.2),))
        scaled = with_rate(policy, 0.2)
        assert scaled.rate == 0.2
        assert scaled.brackets[0][1] == pytest.approx(0.4, rel=1e-12)

    def test_with_rate_on_fee(self):
        """Test que with_rate change le montant d'une taxe forfaitaire."""
        assert with_rate(Fee(amount=1.0), 3.0) == Fee(amount=3.0)

    def test_describe_policy(self):
        """Test des résumés courts."""
        assert describe_policy(GreenCloud(rate=0.1, eco_penalty=80)) == "greencloud(rate=0.1, eco_penalty=80)"
        assert describe_policy(VAT(rate=0.1)) == "vat(rate=0.1)"
        assert describe_policy(Fee(amount=2)) == "fee(amount=2)"


class TestEfficiency:
    """Tests des facteurs d'interpolation et d'efficacité."""

    def test_interpolation_endpoints(self):
        """Test min -> 0, max -> 1."""
        assert interpolation_factor(498, 498, 12368) == 0.0
        assert interpolation_factor(12368, 498, 12368) == 1.0

    def test_interpolation_midpoint_server(self):
        """Test P8 (6453 ssj_ops/watt) -> ≈ 0.50168."""
        assert interpolation_factor(6453, 498, 12368) == pytest.approx(0.50168, abs=1e-5)

    def test_degenerate_fleet_rejected(self):
        """Test ssj_min = ssj_max -> erreur."""
        with pytest.raises(ValueError, match="degenerate"):
            interpolation_factor(500, 500, 500)

    def test_out_of_range_rejected(self):
        """Test valeur hors de la flotte -> erreur."""
        with pytest.raises(ValueError):
            interpolation_factor(13000, 498, 12368)

    def test_efficiency_factor(self):
        """Test (1 - interp) × pénalité."""
        interp = (6453 - 498) / (12368 - 498)
        assert efficiency_factor(interp, 80) == pytest.approx((1 - interp) * 80, rel=1e-12)
        assert efficiency_factor(interp, 80) == pytest.approx(39.865, abs=1e-3)
        assert efficiency_factor(1.0, 80) == 0.0

    def test_table_is_read_only(self):
        """Test que la table d'efficacité est en lecture seule."""
        table = EfficiencyTable({"P1": EfficiencyEntry(498, 0.0, 1.2)}, eco_penalty=1.2)
        with pytest.raises(TypeError):
            table["P1"] = EfficiencyEntry(498, 0.0, 0.0)
        assert table.factor("P1") == 1.2
        assert table.interpolation("P1") == 0.0

    def test_uniform_table(self):
        """Test que uniform force le facteur sans toucher l'interpolation."""
        table = EfficiencyTable({"P1": EfficiencyEntry(498, 0.0, 1.2), "P2": EfficiencyEntry(900, 1.0, 0.0)})
        uniform = EfficiencyTable.uniform(table, 1.0)
        assert [uniform.factor(p) for p in uniform] == [1.0, 1.0]
        assert uniform.interpolation("P2") == 1.0


class TestRevenueAndElasticity:
    """Tests de la recette fiscale et de l'élasticité-prix."""

    def test_revenue_is_additive(self, vm):
        """Test R(A ∪ B) = R(A) + R(B) pour des ensembles disjoints."""
        first = [Agreement.settle(f"C{i}", "P1", vm, tax=0.1 * i, timestamp=1) for i in range(1, 4)]
        second = [Agreement.settle(f"C{i}", "P2", vm, tax=0.3 * i, timestamp=1) for i in range(4, 7)]
        assert tax_revenue(first + second) == pytest.approx(tax_revenue(first) + tax_revenue(second), rel=1e-12)

    def test_empty_revenue_is_zero(self):
        """Test aucun accord -> recette nulle."""
        assert tax_revenue([]) == 0.0

    def test_unit_elasticity(self):
        """Test +10% de prix, -10% de quantité -> 1.0."""
        assert price_elasticity(q=100, dq=-10, p=50, dp=5) == pytest.approx(1.0, rel=1e-12)

    def test_elastic_demand(self):
        """Test +10% de prix, -30% de quantité -> 3.0."""
        assert price_elasticity(q=100, dq=-30, p=50, dp=5) == pytest.approx(3.0, rel=1e-12)

    def test_zero_quantity_change(self):
        """Test quantité inchangée -> 0."""
        assert price_elasticity(q=100, dq=0, p=50, dp=5) == 0.0

    def test_zero_price_change_rejected(self):
        """Test dp = 0 -> erreur."""
        with pytest.raises(ValueError):
            price_elasticity(q=100, dq=-10, p=50, dp=0)


@pytest.fixture
def tax_grid():
    """100 deterministic (ssj, ssj_min, ssj_max, eco_penalty, rate, net_price, vm) points."""
    rng = random.Random(2024)
    points = []
    for _ in range(100):
        ssj_min = rng.uniform(100, 1000)
        ssj_max = ssj_min + rng.uniform(1000, 20000)
        vm = VmOffer(storage=rng.uniform(102400, 1024000), ram=rng.uniform(3072, 7168),
                     processing_power=rng.uniform(5000, 30000), price=0.0, sender="P1", timestamp=1)
        points.append((rng.uniform(ssj_min, ssj_max), ssj_min, ssj_max, rng.uniform(0, 100),
                       rng.uniform(0, 0.5), rng.uniform(0, 150), vm))
    return points


class TestReferenceFormulas:
    """Tests d'équivalence avec les formules de référence sur 100 points."""

    def test_interpolation_factor(self, tax_grid):
        """Test facteur d'interpolation = (ssj - min) / (max - min)."""
        for ssj, ssj_min, ssj_max, *_ in tax_grid:
            expected = (ssj - ssj_min) / (ssj_max - ssj_min)
            assert interpolation_factor(ssj, ssj_min, ssj_max) == pytest.approx(expected, rel=1e-12)

    def test_efficiency_factor(self, tax_grid):
        """Test facteur d'efficacité = (1 - interpolation) × pénalité."""
        for ssj, ssj_min, ssj_max, penalty, *_ in tax_grid:
            interp = (ssj - ssj_min) / (ssj_max - ssj_min)
            expected = (1 - interp) * penalty
            assert efficiency_factor(interp, penalty) == pytest.approx(expected, rel=1e-12)

    def test_vat(self, tax_grid):
        """Test TVA = prix net × taux."""
        for *_, rate, net, vm in tax_grid:
            assert compute_tax(VAT(rate=rate), net, vm) == pytest.approx(net * rate, rel=1e-12)

    def test_fee(self, tax_grid):
        """Test taxe forfaitaire = montant, quel que soit le prix."""
        for *_, rate, net, vm in tax_grid:
            amount = rate * 10
            assert compute_tax(Fee(amount=amount), net, vm) == pytest.approx(amount, rel=1e-12)

    def test_resource_tax(self, tax_grid):
        """Test taxe par ressource = taux par unité × quantité de la base."""
        for i, (*_, rate, net, vm) in enumerate(tax_grid):
            base = ("storage", "ram", "processing_power")[i % 3]
            per_unit = rate / 1000
            expected = per_unit * getattr(vm, base)
            assert compute_tax(ResourceTax(base=base, rate_per_unit=per_unit), net, vm) == pytest.approx(expected, rel=1e-12)

    def test_greencloud(self, tax_grid):
        """Test GreenCloud = prix net × taux × facteur d'efficacité de l'hébergeur."""
        for ssj, ssj_min, ssj_max, penalty, rate, net, vm in tax_grid:
            factor = (1 - (ssj - ssj_min) / (ssj_max - ssj_min)) * penalty
            policy = GreenCloud(rate=rate, eco_penalty=penalty)
            assert compute_tax(policy, net, vm, factor) == pytest.approx(net * rate * factor, rel=1e-12)
