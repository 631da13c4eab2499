"""End-to-end trip pipeline on an engineered two-cluster corpus.

The corpus realizes the "local balanced clusters" mechanism: two distant
city clusters whose cross-traffic is emitted in exactly balanced pairs,
while inside each cluster a hub sheds more vehicles than it collects. Every
window therefore needs internal rebalancing but never a trip across the
gap, so the optimal flow support splits into one island per cluster and the
window is classified as fragmentation-affected essentially always,
regardless of how finely the city is clustered into stations.
"""

from modfrag import degeneracy_survey, survey_to_csv, two_cluster_corpus
from modfrag.ingest import parse_corpus_frame


def main():
    frame = two_cluster_corpus(seed=2024, hours=48)
    trips, report = parse_corpus_frame(frame)
    print(f"corpus rows      : {report.rows_read}")
    print(f"kept after checks: {report.rows_kept} "
          f"(malformed {report.malformed}, out of box {report.out_of_bounds},"
          f" negative duration {report.negative_duration})")
    print()
    rows = degeneracy_survey(trips, station_counts=[10, 20, 40],
                             window_lengths=[30.0, 60.0], seed=5)
    print(survey_to_csv(rows), end="")
    print()
    print("p_affected stays at the top of its Wilson interval for every")
    print("station count K and window length: the mechanism, not the")
    print("clustering resolution, drives the degeneracy.")


if __name__ == "__main__":
    main()
