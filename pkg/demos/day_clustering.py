"""Cluster simulated days by time-weighted edit distance and compare with the generating patterns.

Run with ``python demos/day_clustering.py``.
"""

from collections import Counter

from pnactivity import Scenario, simulate_study, single_linkage
from pnactivity.clustering import day_patterns, distance_matrix, flag_outliers


def main():
    sc = Scenario.default(seed=1)
    study = simulate_study(sc)
    patterns = day_patterns(study.marked_days(), sc.pn)
    D = distance_matrix(patterns)
    labels = single_linkage(D).labels(k=5)

    for cluster in sorted(set(labels)):
        members = [d.pattern for d, lab in zip(study.days, labels) if lab == cluster]
        print(f"cluster {cluster}: {dict(Counter(members))}")
    print("outlying days:", sorted(study.days[i].day for i in flag_outliers(D)))
    print("example action vector:", patterns[0].labels, patterns[0].dwell.round(3))


if __name__ == "__main__":
    main()
