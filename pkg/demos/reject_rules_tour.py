"""Tour of the set-valued decision rules on a single posterior.

One fixed posterior over five categories is pushed through each reward
family.  The point is to see how the chosen set grows or shrinks as the
reward trades coverage against the size of the reported set, and that
every fast rule agrees with exhaustive enumeration over all subsets.
"""

import numpy as np

from setbayes import (
    CompositeProportion,
    IndifferenceZone,
    InvariantPenalty,
    MapZeroOne,
    PenaltySequence,
    PosteriorVector,
    ProportionBased,
    RipleyReject,
    brute_force_optimal,
    optimal_set,
    rho_classifier,
)


def show(label, chosen, value):
    members = "{" + ", ".join(str(i) for i in chosen) + "}" if chosen.size else "(empty set)"
    print(f"  {label:<38s} {members}   expected reward {value:.4f}")


def main() -> None:
    p = PosteriorVector([0.38, 0.27, 0.2, 0.1, 0.05])
    print("posterior:", np.array2string(p.p, precision=2))
    print()

    print("Zero-one reward picks the single most probable category:")
    chosen, value = optimal_set(MapZeroOne(), p)
    show("MAP", chosen, value)

    print("\nA convex size penalty stops adding categories once the next")
    print("probability no longer pays for the marginal penalty step:")
    for slope in (0.04, 0.15, 0.3):
        spec = InvariantPenalty(PenaltySequence.proportional(slope, 5))
        chosen, value = optimal_set(spec, p)
        show(f"penalty {slope:.2f} per extra category", chosen, value)

    print("\nThe proportion rule keeps every category whose posterior")
    print("probability is worth the per-category cost c:")
    for cost in (0.04, 0.15, 0.3, 0.5):
        chosen, value = optimal_set(ProportionBased(cost), p)
        show(f"c = {cost:.2f}", chosen, value)

    print("\nRipley's rule only offers the single best category or the")
    print("whole list, depending on how dominant the leader is:")
    for r in (0.3, 0.45):
        chosen, value = optimal_set(RipleyReject(r), p)
        show(f"r = {r:.2f}", chosen, value)

    print("\nThe ratio cut keeps categories within a factor rho of the leader;")
    print("it is the proportion rule with the posterior-dependent cost rho * max p:")
    for rho in (0.4, 0.8):
        chosen = rho_classifier(p, rho)
        members = ", ".join(str(i) for i in chosen)
        print(f"  rho = {rho:.2f}{'':<28s} {{{members}}}   induced cost {rho * p.max_prob():.3f}")

    print("\nWhen the last category is a none-of-the-above zone, the rule")
    print("either commits to the best regular category or reports nothing:")
    zone_p = PosteriorVector([0.55, 0.15, 0.3])
    for reward in (1.5, 2.2):
        chosen, value = optimal_set(IndifferenceZone(reward), zone_p)
        show(f"empty-report reward r = {reward:.1f}", chosen, value)

    print("\nCross-check against exhaustive search over all 2^5 subsets:")
    for spec in (MapZeroOne(), ProportionBased(0.15), CompositeProportion(0.1, 0.25)):
        _, fast = optimal_set(spec, p)
        oracle = brute_force_optimal(spec, p)
        gap = abs(fast - oracle.value)
        print(f"  {type(spec).__name__:<22s} gap to oracle {gap:.2e}")


if __name__ == "__main__":
    main()
