"""Cluster the four-group suspect replica across bandwidths, thresholds and seeds."""
import argparse

from loadsig import clustering, synthhome
from loadsig.clustering import ClusterParams

WEIGHTS = (0.45, 0.45, 0.10)


def foreign(cluster, cause):
    return sum(cause[id(e)] != "fridge" for e in cluster.members)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--thresholds", type=float, nargs="+", default=[0.8, 0.9, 0.93])
    args = ap.parse_args()
    print("bandwidth  seeds giving {75, 10, 2, 1}")
    for bw in range(5, 21):
        ok = 0
        for seed in range(args.seeds):
            events, _ = synthhome.four_group_replica(seed)
            cl = clustering.cluster_events(events, WEIGHTS, ClusterParams(method="mean_shift", bandwidth=bw))
            ok += sorted((c.size for c in cl), reverse=True) == [75, 10, 2, 1]
        print(f"{bw:>9}  {ok}/{args.seeds}")
    print("\nthreshold  mean foreign events in the weight-based dominant cluster")
    for thr in args.thresholds:
        total = 0
        for seed in range(args.seeds):
            events, labels = synthhome.four_group_replica(seed)
            cause = {id(e): l for e, l in zip(events, labels)}
            cl = clustering.cluster_events(events, WEIGHTS, ClusterParams(similarity_threshold=thr))
            total += foreign(clustering.select_dominant(cl), cause)
        print(f"{thr:>9}  {total / args.seeds:.2f}")


if __name__ == "__main__":
    main()
