#!/usr/bin/env python3
"""
Simple smoke script for the simultaneous assignment toolkit.
Exercises the main solvers on the bundled figures without requiring pytest.
"""
import os
import sys
from fractions import Fraction

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from approx import approximate, measure_gap
from config import get_config, validate_config
from covers import alpha, laminar_cover, structural_cover
from exact import branch_and_bound_opt, brute_force_opt
from instance_io import load_instance
from lp import build_lp1, simplex_solve
from reductions import gen_unweighted, gen_weighted, max_3dm, parse_3dm

FIGURES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'figures')


def figure(name: str):
    return load_instance(os.path.join(FIGURES_DIR, f"{name}.json"))


def test_config():
    """Test configuration loading."""
    print("🧪 Testing configuration...")
    validate_config()
    settings = get_config()
    assert settings['brute_force_limit'] > 0, "BRUTE_FORCE_LIMIT should be positive"
    print(f"  ✅ Brute force limit: {settings['brute_force_limit']}")
    print(f"  ✅ Laminar cover limit: k <= {settings['laminar_cover_max_k']}")
    print("  🎉 Configuration tests passed!")


def test_exact_and_lp():
    """Compare exact optima with the natural relaxation."""
    print("🧪 Testing exact solvers and LP bounds...")
    for name, optimum, bound in (('fig6', 1, Fraction(3, 2)), ('fig10a', 2, Fraction(5, 2))):
        inst = figure(name)
        assert brute_force_opt(inst).objective == optimum, f"{name}: wrong brute force optimum"
        assert branch_and_bound_opt(inst).objective == optimum, f"{name}: wrong branch and bound optimum"
        result = simplex_solve(build_lp1(inst))
        assert result.optimum == bound, f"{name}: expected LP optimum {bound}, got {result.optimum}"
        print(f"  ✅ {name}: OPT = {optimum}, LP = {result.optimum}")
    report = measure_gap(figure('fig6'))
    print(f"  ✅ fig6 gap: {report.gap}")
    print("  🎉 Exact and LP tests passed!")


def test_covers():
    """Build covers and approximate with them."""
    print("🧪 Testing covers and approximation...")
    assert alpha(3, 3) == Fraction(7, 3), "alpha(3, 3) should be 7/3"
    print(f"  ✅ alpha(3, 3) = {alpha(3, 3)}")

    inst = figure('fig7')
    plan = laminar_cover(inst)
    result = approximate(inst, plan)
    print(f"  ✅ fig7 laminar cover: {plan.m} parts, l = {plan.l}, objective {result.objective}")

    inst = figure('fig10a')
    plan = structural_cover(inst)
    result = approximate(inst, plan)
    assert result.objective == 2, f"fig10a: expected 2, got {result.objective}"
    print(f"  ✅ fig10a structural cover: ratio {plan.ratio}, objective {result.objective}")
    print("  🎉 Cover tests passed!")


def test_reductions():
    """Generate instances from the bundled 3DM example."""
    print("🧪 Testing 3DM reductions...")
    with open(os.path.join(FIGURES_DIR, 'fig1.3dm'), 'r', encoding='utf-8') as f:
        tdm = parse_3dm(f.read())
    matching = len(max_3dm(tdm))
    unweighted = branch_and_bound_opt(gen_unweighted(tdm)).objective
    weighted = branch_and_bound_opt(gen_weighted(tdm)).objective
    assert unweighted == len(tdm.triples) + matching, "unweighted optimum should track the matching"
    assert weighted == 3 * len(tdm.Z) + matching, "weighted optimum should track the matching"
    print(f"  ✅ Largest matching: {matching}")
    print(f"  ✅ Unweighted optimum: {unweighted}, weighted optimum: {weighted}")
    print("  🎉 Reduction tests passed!")


def main():
    """Run all smoke checks."""
    print("🚀 Starting simultaneous assignment smoke tests...\n")

    try:
        test_config()
        print()

        test_exact_and_lp()
        print()

        test_covers()
        print()

        test_reductions()
        print()

        print("🎉 All tests completed successfully!")
        print("\n💡 To try the command-line tool:")
        print("   python3 sap.py gap figures/fig6.json")
        print("   python3 sap.py approx figures/fig10a.json --strategy structural")

    except Exception as e:
        print(f"❌ Test failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
