"""Check the perturbation lemmas on random instances and show the tightest cases."""

from cpaltls.lemmas import LEMMA_IDS, run_lemma_suite

reports = run_lemma_suite(200, seed=0)
for lemma_id in LEMMA_IDS:
    mine = [r for r in reports if r.lemma_id == lemma_id]
    tightest = min(mine, key=lambda r: r.margin / max(1.0, r.bound))
    violations = sum(r.violated for r in mine)
    print(f"{lemma_id:20s} {len(mine)} instances, {violations} violations, "
          f"tightest lhs {tightest.lhs:.3e} vs bound {tightest.bound:.3e}")
